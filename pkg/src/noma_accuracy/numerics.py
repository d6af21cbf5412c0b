"""Special functions, quadrature, series summation and gamma variates.

Everything here is pure: random draws take an explicit
``numpy.random.Generator`` and no function keeps module state apart from
the cached quadrature rules (immutable).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import ConvergenceError, DomainError, EvaluationError, NumericalError, ParameterError

MAX_RULE_ORDER = 128
MAX_SERIES_TERMS = 10**6
_EULER_LEVELS = 64
_MAX_GRID_CHUNK = 1 << 20


@dataclass(frozen=True)
class Estimate:
    """A computed value with an error bound and the method that produced it."""

    value: float
    error_bound: float
    method: str

    def __post_init__(self):
        if not math.isfinite(self.error_bound) or self.error_bound < 0:
            raise NumericalError(f"invalid error bound {self.error_bound!r}")


@dataclass(frozen=True)
class FadingModel:
    """Nakagami-m fading: channel power gain ~ Gamma(shape=m, scale=omega/m)."""

    shape: float = 1.0
    omega: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.shape) and self.shape >= 0.5):
            raise ParameterError(f"Nakagami shape m must be >= 0.5, got {self.shape}")
        if not (math.isfinite(self.omega) and self.omega > 0):
            raise ParameterError(f"mean power omega must be > 0, got {self.omega}")

    @property
    def is_rayleigh(self) -> bool:
        return self.shape == 1.0


# ---------------------------------------------------------------------------
# Quadrature


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss rule on [0, 1]; ``nodes`` ascending, ``weights`` summing to 1."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray


def _legendre_newton(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Roots and weights of P_n on [-1, 1] by Newton iteration."""
    i = np.arange(1, n + 1)
    x = np.cos(np.pi * (i - 0.25) / (n + 0.5))
    for _ in range(100):
        p0 = np.ones_like(x)
        p1 = x.copy()
        for k in range(2, n + 1):
            p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
        if n == 1:
            p1, p0 = x, np.ones_like(x)
        dp = n * (x * p1 - p0) / (x * x - 1.0)
        step = p1 / dp
        x = x - step
        if np.max(np.abs(step)) < 1e-15:
            break
    p0 = np.ones_like(x)
    p1 = x.copy()
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    if n == 1:
        p1, p0 = x, np.ones_like(x)
    dp = n * (x * p1 - p0) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    return x, w


@lru_cache(maxsize=None)
def gauss_legendre_unit(n: int) -> QuadratureRule:
    """n-point Gauss-Legendre rule mapped from [-1, 1] onto [0, 1].

    Exact for polynomials of degree <= 2n - 1.
    """
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_RULE_ORDER:
        raise ParameterError(f"rule order must be an integer in [1, {MAX_RULE_ORDER}], got {n!r}")
    n = int(n)
    if n == 1:
        x, w = np.array([0.0]), np.array([2.0])
    else:
        x, w = _legendre_newton(n)
    order = np.argsort(x)
    nodes = 0.5 * (x[order] + 1.0)
    weights = 0.5 * w[order]
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(order=n, nodes=nodes, weights=weights)


def tensor_integrate(f: Callable[..., np.ndarray], d: int, rule: QuadratureRule) -> float:
    """Tensor-product Gauss approximation of the integral of ``f`` over [0,1]^d.

    ``f`` is called with ``d`` broadcastable arrays of coordinates (one per
    axis) and must return the integrand values elementwise. Large grids are
    evaluated in chunks along the leading axes.
    """
    if not 1 <= d <= 8:
        raise ParameterError(f"dimension must be in 1..8, got {d}")
    n = rule.order
    x, w = rule.nodes, rule.weights
    # chunk over the leading `lead` axes so each call sees at most _MAX_GRID_CHUNK points
    lead = 0
    while lead < d - 1 and n ** (d - lead) > _MAX_GRID_CHUNK:
        lead += 1
    tail = d - lead
    tail_axes = []
    for k in range(tail):
        shape = [1] * tail
        shape[k] = n
        tail_axes.append(x.reshape(shape))
    tail_w = w
    for _ in range(tail - 1):
        tail_w = np.multiply.outer(tail_w, w)

    total = 0.0
    for idx in np.ndindex(*([n] * lead)):
        lead_coords = [x[i] for i in idx]
        lead_weight = float(np.prod([w[i] for i in idx])) if idx else 1.0
        vals = np.asarray(f(*lead_coords, *tail_axes), dtype=float)
        vals = np.broadcast_to(vals, (n,) * tail)
        if not np.all(np.isfinite(vals)):
            bad = np.argwhere(~np.isfinite(vals))[0]
            node = tuple(lead_coords) + tuple(float(x[j]) for j in bad)
            raise EvaluationError(f"non-finite integrand at node {node}", node=node)
        total += lead_weight * float(np.sum(tail_w * vals))
    return total


# ---------------------------------------------------------------------------
# Gamma function and incomplete beta


def ln_gamma(x: float) -> float:
    """Natural log of the gamma function for x > 0."""
    if not x > 0 or not math.isfinite(x):
        raise DomainError(f"ln_gamma requires finite x > 0, got {x}")
    return math.lgamma(x)


def _betacf(p: float, q: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = p + q, p + 1.0, p - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = tiny if abs(d) < tiny else d
    d = 1.0 / d
    h = d
    for k in range(1, 10000):
        k2 = 2 * k
        aa = k * (q - k) * x / ((qam + k2) * (p + k2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        h *= d * c
        aa = -(p + k) * (qab + k) * x / ((p + k2) * (qap + k2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return h
    raise ConvergenceError(f"incomplete beta continued fraction failed for p={p}, q={q}, x={x}")


def incomplete_beta(x: float, p: float, q: float, regularized: bool = False) -> float:
    """B(x; p, q) = integral_0^x t^(p-1) (1-t)^(q-1) dt for 0 <= x <= 1, p > 0.

    ``q`` may be non-positive only when x < 1.
    """
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"incomplete beta argument must lie in [0, 1], got {x}")
    if p <= 0:
        raise DomainError(f"incomplete beta requires p > 0, got {p}")
    if q <= 0 and (x == 1.0 or regularized):
        raise DomainError(f"complete/regularized beta requires q > 0, got {q}")
    if x == 0.0:
        return 0.0
    if q > 0:
        lbeta = math.lgamma(p) + math.lgamma(q) - math.lgamma(p + q)
        if x == 1.0:
            return 1.0 if regularized else math.exp(lbeta)
    log_front = p * math.log(x) + q * math.log1p(-x)
    if q <= 0 or x < (p + 1.0) / (p + q + 2.0):
        value = math.exp(log_front) * _betacf(p, q, x) / p
        return value / math.exp(lbeta) if regularized else value
    # symmetry B(x; p, q) = B(p, q) - B(1-x; q, p)
    tail = math.exp(log_front - lbeta) * _betacf(q, p, 1.0 - x) / q
    reg = 1.0 - tail
    return reg if regularized else reg * math.exp(lbeta)


# ---------------------------------------------------------------------------
# Gauss hypergeometric function


def _is_nonpositive_integer(v: float) -> bool:
    return v <= 0 and float(v).is_integer()


def _hyp2f1_series(a: float, b: float, c: float, z: float, max_terms: int = 200000) -> float:
    """Direct Maclaurin series; requires |z| < 1 (or a terminating series)."""
    total = 1.0
    term = 1.0
    for k in range(max_terms):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z
        total += term
        if term == 0.0:
            return total
        if abs(term) <= 1e-17 * abs(total) and abs(z) < 1:
            # remaining tail of a geometric-like series
            ratio = abs((a + k + 1) * (b + k + 1) / ((c + k + 1) * (k + 2.0)) * z)
            if ratio < 1 and abs(term) * ratio / (1 - ratio) <= 1e-16 * max(abs(total), 1e-300):
                return total
    raise ConvergenceError(f"2F1({a}, {b}; {c}; {z}) series did not converge in {max_terms} terms")


_PFAFF_W_MAX = 1.0 - 1e-4
_PFAFF_MAX_TERMS = 10**6


def _hyp2f1_pfaff(a: float, b: float, c: float, z: float) -> float:
    """Pfaff transform 2F1(a,b;c;z) = (1-z)^(-b) 2F1(c-a, b; c; z/(z-1)) for z < 0."""
    w = z / (z - 1.0)
    if _is_nonpositive_integer(a) or _is_nonpositive_integer(b):
        return _hyp2f1_series(a, b, c, z)
    if _is_nonpositive_integer(c - b):
        return (1.0 - z) ** (-a) * _hyp2f1_series(a, c - b, c, w)
    if w <= 0.5 or _is_nonpositive_integer(c - a):
        return (1.0 - z) ** (-b) * _hyp2f1_series(c - a, b, c, w)
    if c == b + 1.0 and b > 0:
        return _hyp2f1_beta(a, b, z)
    if c == a + 1.0 and a > 0:
        return _hyp2f1_beta(b, a, z)
    if w <= _PFAFF_W_MAX:
        # w < 1 still converges geometrically, just with more terms
        try:
            return (1.0 - z) ** (-b) * _hyp2f1_series(c - a, b, c, w, max_terms=_PFAFF_MAX_TERMS)
        except ConvergenceError:
            pass
    raise NumericalError(
        f"2F1({a}, {b}; {c}; {z}) lies outside the supported parameter range "
        "(very negative z needs c = a + 1 or c = b + 1, or a terminating transform)"
    )


def _hyp2f1_beta(a: float, b: float, z: float) -> float:
    """2F1(a, b; b+1; z) = b x^(-b) B(x/(1+x); b, a-b) with x = -z > 0."""
    x = -z
    w = x / (1.0 + x)
    return b * math.exp(-b * math.log(x)) * incomplete_beta(w, b, a - b)


def hyp2f1(a: float, b: float, c: float, z: float) -> float:
    """Gauss hypergeometric function for real arguments with z <= 1/2.

    |z| <= 1/2 uses the direct series; z < -1/2 goes through the Pfaff
    transform. When the transformed argument z/(z-1) exceeds 1/2, the cases
    c = b + 1 (or c = a + 1) go through the incomplete beta function, and
    the rest sum the transformed series directly down to z = -1e4.
    """
    if _is_nonpositive_integer(c):
        raise DomainError(f"2F1 undefined for non-positive integer c = {c}")
    if not math.isfinite(z) or z > 0.5:
        raise DomainError(f"2F1 evaluated only for z <= 1/2, got z = {z}")
    if z == 0.0:
        return 1.0
    if abs(z) <= 0.5:
        return _hyp2f1_series(a, b, c, z)
    return _hyp2f1_pfaff(a, b, c, z)


# ---------------------------------------------------------------------------
# Alternating series


def alternating_series_sum(term: Callable[[int], float], tol: float = 1e-8) -> Estimate:
    """Sum sum_k term(k) of an alternating series with Euler's transform.

    The first ``offset`` terms are added directly; the tail is rewritten as
    sum_j (-1)^j D^j a_offset / 2^(j+1) (van Wijngaarden form), with D the
    forward difference of the unsigned terms. For a completely monotone
    magnitude sequence the dropped tail is bounded by the last included
    transformed term, which is what ``error_bound`` reports. If the
    transform stalls, the offset grows and the attempt repeats.
    """
    if not tol > 0:
        raise ParameterError(f"tolerance must be positive, got {tol}")
    offset = 0
    head = 0.0
    cache: dict[int, float] = {}

    def t(k: int) -> float:
        if k not in cache:
            v = float(term(k))
            if not math.isfinite(v):
                raise NumericalError(f"series term {k} is not finite: {v}")
            cache[k] = v
        return cache[k]

    while True:
        sign0 = 1.0 if t(offset) >= 0 else -1.0
        row: list[float] = []
        total = 0.0
        for n in range(_EULER_LEVELS):
            k = offset + n
            if k >= MAX_SERIES_TERMS:
                break
            a = sign0 * (-1.0) ** n * t(k)
            new_row = [a]
            for prev in row:
                new_row.append(new_row[-1] - prev)
            row = new_row
            contrib = sign0 * (-1.0) ** n * row[n] / 2.0 ** (n + 1)
            total += contrib
            if abs(contrib) <= 0.5 * tol and n >= 2:
                return Estimate(head + total, abs(contrib), "series")
            if all(v == 0.0 for v in row):
                return Estimate(head + total, 0.0, "series")
        new_offset = max(16, 4 * offset)
        if new_offset >= MAX_SERIES_TERMS:
            raise ConvergenceError(f"alternating series did not converge within {MAX_SERIES_TERMS} terms")
        head += math.fsum(t(k) for k in range(offset, new_offset))
        for k in list(cache):
            if k < new_offset:
                del cache[k]
        offset = new_offset


# ---------------------------------------------------------------------------
# Gamma variates (Marsaglia-Tsang)


def _standard_gamma(shape: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-scale gamma draws by Marsaglia-Tsang squeeze/rejection (shape >= 1)."""
    d = shape - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    out = np.empty(size)
    pending = np.arange(size)
    while pending.size:
        k = pending.size
        x = rng.standard_normal(k)
        u = rng.random(k)
        v = 1.0 + c * x
        ok = v > 0
        v = np.where(ok, v * v * v, 1.0)
        x2 = x * x
        accept = ok & (
            (u < 1.0 - 0.0331 * x2 * x2)
            | (np.log(np.maximum(u, 1e-300)) < 0.5 * x2 + d * (1.0 - v + np.log(v)))
        )
        out[pending[accept]] = d * v[accept]
        pending = pending[~accept]
    return out


def sample_gamma_array(fading: FadingModel, size, rng: np.random.Generator) -> np.ndarray:
    """Array of channel power gains with Nakagami-m law (mean ``fading.omega``)."""
    out_shape = tuple(np.atleast_1d(size)) if not isinstance(size, tuple) else size
    count = int(np.prod(out_shape))
    k = fading.shape
    if k >= 1.0:
        g = _standard_gamma(k, count, rng)
    else:
        # boost: Gamma(k) = Gamma(k+1) * U^(1/k)
        g = _standard_gamma(k + 1.0, count, rng)
        g *= rng.random(count) ** (1.0 / k)
    g *= fading.omega / k
    return g.reshape(out_shape)


def sample_gamma(fading: FadingModel, rng: np.random.Generator) -> float:
    """One Nakagami-m power gain draw."""
    return float(sample_gamma_array(fading, (1,), rng)[0])

