"""Accuracy probability from closed forms, series and unit-cube quadrature.

All integrals are written over ratios of distances, so the scale parameter
of the distance model (BS intensity, cluster radius, scattering variance)
never enters; only the model family matters. Likewise the mean channel
power cancels from every expression and is never read.

Variables used throughout: for an ascending cluster r_1 < ... < r_n the
consecutive ratios w_k = r_k / r_{k+1} live in the unit cube, and
q_i = r_i / r_n = w_i w_{i+1} ... w_{n-1}.
"""

from __future__ import annotations

import itertools
import math
from typing import Callable, Sequence

import numpy as np

from .cluster import ClusterSpec, Pairing
from .errors import ParameterError
from .geometry import DistanceModel, Mcp, OrderedDistances, PppVoronoi, Tcp
from .numerics import (
    Estimate,
    FadingModel,
    alternating_series_sum,
    gauss_legendre_unit,
    hyp2f1,
    incomplete_beta,
    tensor_integrate,
)

DEFAULT_ORDER = 30
CHECK_ORDER = 20
SERIES_TOL = 1e-8
MAX_RANDOM_USERS = 6
MAX_PAIRING_POOL = 7
MAX_PAIRING_USERS_RAYLEIGH = 5
MAX_PAIRING_USERS_NAKAGAMI = 3
MAX_NESTED_USERS = 5


def _check_model(model) -> None:
    if not isinstance(model, (PppVoronoi, Mcp, Tcp)):
        raise ParameterError(f"unknown distance model {model!r}")


def _check_alpha(alpha: float) -> float:
    # alpha = 2 is accepted as a boundary case for oracle checks
    alpha = float(alpha)
    if not (math.isfinite(alpha) and alpha >= 2):
        raise ParameterError(f"path-loss exponent must be >= 2, got {alpha}")
    return alpha


def _check_shape(shape: float) -> float:
    shape = float(shape)
    if not (math.isfinite(shape) and shape >= 0.5):
        raise ParameterError(f"Nakagami shape must be >= 0.5, got {shape}")
    return shape


def _is_uniform_disk(model) -> bool:
    return isinstance(model, Mcp)


def _clip(value: float) -> float:
    return min(1.0, max(0.0, value))


def _cube(f: Callable[..., np.ndarray], d: int, order: int) -> tuple[float, float]:
    """Tensor Gauss integral over [0,1]^d and the gap to a coarser rule."""
    fine = tensor_integrate(f, d, gauss_legendre_unit(order))
    coarse = tensor_integrate(f, d, gauss_legendre_unit(min(CHECK_ORDER, max(1, order - 5))))
    return fine, abs(fine - coarse)


# ---------------------------------------------------------------------------
# Conditional accuracy for fixed distances


def _as_sorted_array(distances) -> np.ndarray:
    if isinstance(distances, OrderedDistances):
        return distances.as_array()
    arr = np.asarray(distances, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ParameterError("distances must be a non-empty 1-D sequence")
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0):
        raise ParameterError("distances must be positive and finite")
    if np.any(np.diff(arr) < 0):
        raise ParameterError(f"distances must be sorted ascending: {arr.tolist()}")
    return arr


def _rayleigh_inner_from_ratios(q: Sequence, alpha: float):
    """prod_{i>=2} 1 / sum_{j<=i} (q_j/q_i)^alpha for ratios q (array-valued)."""
    powers = [np.power(v, alpha) for v in q]
    out = 1.0
    running = powers[0]
    for i in range(1, len(powers)):
        running = running + powers[i]
        out = out * (powers[i] / running)
    return out


def inner_expectation_rayleigh(distances, alpha: float) -> float:
    """Probability that Rayleigh-faded powers keep the distance order."""
    r = _as_sorted_array(distances)
    alpha = _check_alpha(alpha)
    q = r / r[-1]
    return float(_rayleigh_inner_from_ratios(list(q), alpha))


def _unit_to_interval(y, upper, lower_exp: float, upper_exp: float):
    """Map y in (0,1) onto t in (0, upper) and return (t, weight).

    The weight includes dt/dy times t^(lower_exp-1) (1-t)^(upper_exp-1).
    The map is chosen so that neither endpoint singularity (exponents in
    [0.5, 1)) spoils Gauss convergence.
    """
    if lower_exp < 1.0:
        # cosine map: t ~ y^2 at the lower end and flat near the upper end
        c = 0.5 * (1.0 - np.cos(np.pi * y))
        t = upper * c
        dt = upper * 0.5 * np.pi * np.sin(np.pi * y)
    elif upper_exp < 1.0:
        tail = np.power(1.0 - y, 1.0 / upper_exp)
        t = upper * (1.0 - tail)
        dt = upper / upper_exp * np.power(1.0 - y, 1.0 / upper_exp - 1.0)
    else:
        t = upper * y
        dt = upper
    weight = dt * np.power(t, lower_exp - 1.0) * np.power(1.0 - t, upper_exp - 1.0)
    return t, weight


def _nakagami_nested(powers: Sequence, ys: Sequence, shape: float):
    """Integrand over [0,1]^(n-1) whose integral is the Nakagami conditional accuracy.

    ``powers`` are q_i^alpha for i = 1..n (last one equal to 1). With
    X_i ~ Gamma(shape, scale r_i^-alpha) the event X_1 > ... > X_n has
    probability Gamma(n m)/Gamma(m)^n times a nested product of beta-type
    integrals; after rescaling each axis to its (moving) upper limit the
    integrand is smooth in the unit cube.
    """
    n = len(powers)
    log_front = math.lgamma(n * shape) - n * math.lgamma(shape)
    coeff = powers[-1]
    weight = math.exp(log_front)
    for k in range(n - 2, -1, -1):
        lower_exp = (n - 1 - k) * shape
        upper = coeff / (powers[k] + coeff)
        t, w = _unit_to_interval(ys[k], upper, lower_exp, shape)
        weight = weight * w
        coeff = powers[k] / (1.0 - t)
    return weight


def inner_expectation_nakagami(distances, alpha: float, shape: float, order: int = DEFAULT_ORDER) -> float:
    """Probability that Nakagami-faded powers keep the distance order.

    Two users use the regularized incomplete beta function exactly; larger
    clusters integrate the nested beta form over the (n-1)-cube.
    """
    r = _as_sorted_array(distances)
    alpha = _check_alpha(alpha)
    shape = _check_shape(shape)
    n = r.size
    if n == 1:
        return 1.0
    if n == 2:
        ratio_pow = (r[0] / r[1]) ** alpha
        return incomplete_beta(1.0 / (1.0 + ratio_pow), shape, shape, regularized=True)
    if n > MAX_NESTED_USERS:
        raise ParameterError(f"nested quadrature supports at most {MAX_NESTED_USERS} users, got {n}")
    powers = [float(v) for v in (r / r[-1]) ** alpha]
    value = tensor_integrate(lambda *ys: _nakagami_nested(powers, ys, shape), n - 1, gauss_legendre_unit(order))
    return _clip(value)


# ---------------------------------------------------------------------------
# Random selection, Rayleigh fading


def accuracy_rayleigh_2ue(model: DistanceModel, alpha: float, tol: float = SERIES_TOL) -> Estimate:
    """Two users, Rayleigh fading, as an accelerated alternating series."""
    _check_model(model)
    alpha = _check_alpha(alpha)
    if _is_uniform_disk(model):
        est = alternating_series_sum(lambda k: (-1) ** k * 2.0 / (2.0 + alpha * k), tol)
    else:
        est = alternating_series_sum(
            lambda k: (-1) ** k * hyp2f1(2.0, 1.0, alpha * k / 2.0 + 2.0, 0.5) / (alpha * k + 2.0), tol
        )
    return Estimate(_clip(est.value), est.error_bound, "series")


def accuracy_rayleigh_3ue(model: DistanceModel, alpha: float, order: int = DEFAULT_ORDER) -> Estimate:
    """Three users, Rayleigh fading, as a double integral over the unit square."""
    _check_model(model)
    alpha = _check_alpha(alpha)
    disk = _is_uniform_disk(model)

    def f(u1, u2):
        a1 = u1**alpha
        a2 = u2**alpha
        body = u1 * u2**3 / ((1.0 + a1) * (1.0 + a2 + a1 * a2))
        if disk:
            return 8.0 * body
        return 48.0 * body / (1.0 + u2**2 + u1**2 * u2**2) ** 3

    value, err = _cube(f, 2, order)
    return Estimate(_clip(value), err, "tensor-quadrature")


def _ratio_products(ws: Sequence) -> list:
    """q_i = prod_{k>=i} w_k for i = 1..n (q_n = 1)."""
    q = [1.0]
    for w in reversed(ws):
        q.insert(0, q[0] * w)
    return q


def _random_selection_weight(ws: Sequence, disk: bool):
    """Density of the consecutive ratios for n i.i.d. users (unit cube)."""
    n = len(ws) + 1
    q = _ratio_products(ws)
    mono = 1.0
    for k, w in enumerate(ws, start=1):
        mono = mono * w ** (2 * k - 1)
    if disk:
        return math.factorial(n) * 2.0 ** (n - 1) / n * mono
    s = 0.0
    for v in q:
        s = s + v * v
    return math.factorial(n) * math.factorial(n - 1) * 2.0 ** (n - 1) * mono / s**n


def accuracy_rayleigh_general(
    model: DistanceModel, alpha: float, n_users: int, order: int = DEFAULT_ORDER
) -> Estimate:
    """Random selection of ``n_users`` in 2..6, Rayleigh fading, (n-1)-cube quadrature."""
    _check_model(model)
    alpha = _check_alpha(alpha)
    if int(n_users) != n_users or not 2 <= n_users <= MAX_RANDOM_USERS:
        raise ParameterError(f"cluster size must be in 2..{MAX_RANDOM_USERS}, got {n_users}")
    disk = _is_uniform_disk(model)

    def f(*ws):
        q = _ratio_products(ws)
        return _random_selection_weight(ws, disk) * _rayleigh_inner_from_ratios(q, alpha)

    value, err = _cube(f, int(n_users) - 1, order)
    return Estimate(_clip(value), err, "tensor-quadrature")


# ---------------------------------------------------------------------------
# Random selection, Nakagami fading


def accuracy_nakagami_2ue(
    model: DistanceModel, alpha: float, shape: float, order: int = DEFAULT_ORDER
) -> Estimate:
    """Two users, Nakagami fading: one-dimensional integral of a 2F1 kernel.

    The kernel 2F1(2m, m; m+1; -u^-alpha) is evaluated through its exact
    incomplete-beta representation, so the u -> 0 end needs no special
    treatment; the large prefactor u^(-alpha m) is combined in log space.
    """
    _check_model(model)
    alpha = _check_alpha(alpha)
    shape = _check_shape(shape)
    disk = _is_uniform_disk(model)
    log_front = math.lgamma(2 * shape) - math.lgamma(shape) - math.lgamma(shape + 1)

    def kernel(u: float) -> float:
        f21 = hyp2f1(2 * shape, shape, shape + 1, -(u ** (-alpha)))
        return math.exp(log_front + (1.0 - alpha * shape) * math.log(u) + math.log(f21))

    def f(u):
        vals = np.array([kernel(float(v)) for v in np.ravel(u)]).reshape(np.shape(u))
        if disk:
            return 2.0 * vals
        return 4.0 * vals / (1.0 + u * u) ** 2

    value, err = _cube(f, 1, order)
    return Estimate(_clip(value), err, "quadrature-2F1")


def accuracy_nakagami_3ue(
    model: DistanceModel, alpha: float, shape: float, order: int = DEFAULT_ORDER
) -> Estimate:
    """Three users, Nakagami fading: four-dimensional unit-cube quadrature.

    Two axes carry the distance ratios; the other two are the gain-ratio
    variables, rescaled so that the sharp ridge of the raw integrand (when
    the near user is much closer than the others) becomes a smooth factor.
    """
    _check_model(model)
    alpha = _check_alpha(alpha)
    shape = _check_shape(shape)
    disk = _is_uniform_disk(model)

    def f(u1, u2, y1, y2):
        weight = _random_selection_weight((u1, u2), disk)
        powers = [(u1 * u2) ** alpha, u2**alpha, 1.0]
        return weight * _nakagami_nested(powers, (y1, y2), shape)

    value, err = _cube(f, 4, order)
    return Estimate(_clip(value), err, "tensor-quadrature")


# ---------------------------------------------------------------------------
# User pairing


def accuracy_pairing_rayleigh_2ue(
    model: DistanceModel, alpha: float, pool_size: int, order: int = DEFAULT_ORDER
) -> Estimate:
    """Nearest and farthest of ``pool_size`` users, Rayleigh fading.

    The farthest distance integrates out in closed form, leaving one
    integral over v = (r_near / r_far)^2.
    """
    _check_model(model)
    alpha = _check_alpha(alpha)
    if int(pool_size) != pool_size or pool_size < 2:
        raise ParameterError(f"pool size must be an integer >= 2, got {pool_size}")
    pool = int(pool_size)
    half = alpha / 2.0

    if _is_uniform_disk(model):

        def f(v):
            return (pool - 1) * (1.0 - v) ** (pool - 2) / (1.0 + v**half)

    else:
        coeffs = [(-1) ** j * math.comb(pool - 2, j) for j in range(pool - 1)]

        def f(v):
            acc = 0.0
            for j, cj in enumerate(coeffs):
                acc = acc + cj / ((pool - 1 - j) * v + j + 1.0) ** 2
            return pool * (pool - 1) * acc / (1.0 + v**half)

    value, err = _cube(f, 1, order)
    return Estimate(_clip(value), err, "tensor-quadrature")


def _exponential_terms(gaps: tuple) -> list:
    """Expand the gap factors of the exponential law into sum_t weight_t exp(-T c_t . y).

    Returns (coefficient vector over y_1..y_n, signed weight) pairs with
    identical vectors merged.
    """
    n = len(gaps) - 1
    base = [1] * n
    base[-1] += gaps[-1]
    choices = []
    # below the nearest selected user: (1 - e^{-x_1})^a
    choices.append([((l,) + (0,) * (n - 1), (-1) ** l * math.comb(gaps[0], l)) for l in range(gaps[0] + 1)])
    for i in range(1, n):
        a = gaps[i]
        opts = []
        for l in range(a + 1):
            vec = [0] * n
            vec[i - 1] += a - l
            vec[i] += l
            opts.append((tuple(vec), (-1) ** l * math.comb(a, l)))
        choices.append(opts)
    merged: dict = {}
    for combo in itertools.product(*choices):
        vec = list(base)
        w = 1
        for v, c in combo:
            w *= c
            for i, x in enumerate(v):
                vec[i] += x
        key = tuple(vec)
        merged[key] = merged.get(key, 0) + w
    return [(k, v) for k, v in merged.items() if v != 0]


def _selection_density(pairing: Pairing, disk: bool) -> Callable:
    """Density of the selected users' squared-distance ratios y_i = q_i^2 (y_n = 1)."""
    gaps = pairing.gaps
    n = len(pairing.selection)
    log_const = math.lgamma(pairing.pool_size + 1) - sum(math.lgamma(a + 1) for a in gaps)
    if disk:
        top = pairing.selection[-1]
        log_const += math.lgamma(top) + math.lgamma(gaps[-1] + 1) - math.lgamma(pairing.pool_size + 1)
        const = math.exp(log_const)

        def dens(y):
            out = const * y[0] ** gaps[0]
            for i in range(1, n):
                out = out * (y[i] - y[i - 1]) ** gaps[i]
            return out

        return dens

    const = math.exp(log_const) * math.factorial(n - 1)
    terms = _exponential_terms(gaps)

    def dens(y):
        out = 0.0
        for vec, w in terms:
            lin = 0.0
            for c, v in zip(vec, y):
                if c:
                    lin = lin + c * v
            out = out + w / lin**n
        return const * out

    return dens


def _pairing_weight(ws: Sequence, dens: Callable):
    """Selection density mapped from y-space to the consecutive-ratio cube."""
    q = _ratio_products(ws)
    y = [v * v for v in q]
    jac = 1.0
    for i in range(len(ws)):
        jac = jac * 2.0 * q[i] * q[i + 1]
    return dens(y) * jac, q


def _pairing_quadrature(spec: ClusterSpec, order: int) -> Estimate:
    pairing = spec.pairing or Pairing(spec.n_users, tuple(range(1, spec.n_users + 1)))
    n = len(pairing.selection)
    alpha = spec.alpha
    dens = _selection_density(pairing, _is_uniform_disk(spec.model))
    shape = spec.fading.shape
    if spec.fading.is_rayleigh:

        def f(*ws):
            weight, q = _pairing_weight(ws, dens)
            return weight * _rayleigh_inner_from_ratios(q, alpha)

        dim = n - 1
    else:

        def f(*coords):
            ws, ys = coords[: n - 1], coords[n - 1 :]
            weight, q = _pairing_weight(ws, dens)
            powers = [v**alpha for v in q[:-1]] + [1.0]
            return weight * _nakagami_nested(powers, ys, shape)

        dim = 2 * (n - 1)
    value, err = _cube(f, dim, order)
    return Estimate(_clip(value), err, "tensor-quadrature")


def _quadrature_feasible(spec: ClusterSpec) -> bool:
    n = spec.n_users
    if spec.pool_size > MAX_PAIRING_POOL:
        return False
    cap = MAX_PAIRING_USERS_RAYLEIGH if spec.fading.is_rayleigh else MAX_PAIRING_USERS_NAKAGAMI
    return 2 <= n <= cap


def _monte_carlo(spec: ClusterSpec, samples: int, seed: int) -> Estimate:
    from .montecarlo import estimate_accuracy

    mc = estimate_accuracy(spec, samples, seed)
    return Estimate(mc.estimate, mc.stderr, "monte-carlo")


def accuracy_pairing_general(
    spec: ClusterSpec,
    order: int = DEFAULT_ORDER,
    mc_fallback: bool = True,
    mc_samples: int = 10**6,
    seed: int = 0,
) -> Estimate:
    """Accuracy for an arbitrary rank selection out of a pool.

    Quadrature runs over the selected users' distance ratios only; the
    unselected users and the farthest selected distance are integrated out
    analytically. Pools above 7 users, or clusters above the dimension cap,
    go to Monte Carlo when ``mc_fallback`` is set.
    """
    if not isinstance(spec, ClusterSpec):
        raise ParameterError("expected a ClusterSpec")
    if spec.n_users < 2:
        return Estimate(1.0, 0.0, "series")
    if _quadrature_feasible(spec):
        return _pairing_quadrature(spec, order)
    if not mc_fallback:
        raise ParameterError(
            f"pool of {spec.pool_size} with {spec.n_users} selected users exceeds the quadrature caps"
        )
    return _monte_carlo(spec, mc_samples, seed)


# ---------------------------------------------------------------------------
# Dispatcher


def accuracy(
    spec: ClusterSpec,
    order: int = DEFAULT_ORDER,
    mc_fallback: bool = True,
    mc_samples: int = 10**6,
    seed: int = 0,
) -> Estimate:
    """Pick the specialised evaluator for ``spec``."""
    if not isinstance(spec, ClusterSpec):
        raise ParameterError("expected a ClusterSpec")
    n = spec.n_users
    if n == 1:
        return Estimate(1.0, 0.0, "series")
    if spec.pairing is not None and spec.pairing.pool_size > n:
        sel = spec.pairing.selection
        if n == 2 and spec.fading.is_rayleigh and sel == (1, spec.pairing.pool_size):
            return accuracy_pairing_rayleigh_2ue(spec.model, spec.alpha, spec.pairing.pool_size, order)
        return accuracy_pairing_general(spec, order, mc_fallback, mc_samples, seed)
    if spec.fading.is_rayleigh:
        if n == 2:
            return accuracy_rayleigh_2ue(spec.model, spec.alpha)
        if n == 3:
            return accuracy_rayleigh_3ue(spec.model, spec.alpha, order)
        if n <= MAX_RANDOM_USERS:
            return accuracy_rayleigh_general(spec.model, spec.alpha, n, order)
    else:
        if n == 2:
            return accuracy_nakagami_2ue(spec.model, spec.alpha, spec.fading.shape, order)
        if n == 3:
            return accuracy_nakagami_3ue(spec.model, spec.alpha, spec.fading.shape, order)
    if not mc_fallback:
        raise ParameterError(f"no analytic evaluator for {n} users with this fading model")
    return _monte_carlo(spec, mc_samples, seed)


__all__ = [
    "ClusterSpec",
    "FadingModel",
    "Pairing",
    "accuracy",
    "accuracy_nakagami_2ue",
    "accuracy_nakagami_3ue",
    "accuracy_pairing_general",
    "accuracy_pairing_rayleigh_2ue",
    "accuracy_rayleigh_2ue",
    "accuracy_rayleigh_3ue",
    "accuracy_rayleigh_general",
    "inner_expectation_nakagami",
    "inner_expectation_rayleigh",
]
