"""User-to-BS distance laws, ordered samplers and a Voronoi-cell simulator.

Three user-location models are supported:

* ``PppVoronoi`` -- users in the Voronoi cell of a PPP base station, with the
  Rayleigh-type approximation f(x) = 2 c lam pi x exp(-c lam pi x^2), c = 5/4.
* ``Mcp`` -- users uniform in a disk around the serving BS.
* ``Tcp`` -- users Gaussian-scattered (variance sigma2 per axis) around the BS.

``simulate_voronoi_cells`` draws the actual typical cell instead of the
approximation, for validating it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError, ParameterError


@dataclass(frozen=True)
class PppVoronoi:
    lam: float
    correction: float = 1.25

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ParameterError(f"BS intensity must be > 0, got {self.lam}")
        if not self.correction > 0:
            raise ParameterError(f"correction constant must be > 0, got {self.correction}")

    name = "ppp"
    radial_law = "rayleigh"

    @property
    def kappa(self) -> float:
        return self.correction * self.lam * math.pi


@dataclass(frozen=True)
class Mcp:
    radius: float

    def __post_init__(self):
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ParameterError(f"cluster radius must be > 0, got {self.radius}")

    name = "mcp"
    radial_law = "uniform-disk"


@dataclass(frozen=True)
class Tcp:
    sigma2: float

    def __post_init__(self):
        if not (self.sigma2 > 0 and math.isfinite(self.sigma2)):
            raise ParameterError(f"scattering variance must be > 0, got {self.sigma2}")

    name = "tcp"
    radial_law = "rayleigh"

    @property
    def kappa(self) -> float:
        return 1.0 / (2.0 * self.sigma2)


DistanceModel = Union[PppVoronoi, Mcp, Tcp]


def _check_model(model) -> None:
    if not isinstance(model, (PppVoronoi, Mcp, Tcp)):
        raise ParameterError(f"unknown distance model {model!r}")


def pdf(model: DistanceModel, x):
    """Density of the link distance at ``x`` (scalar or array)."""
    _check_model(model)
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0) or np.any(np.isnan(xa)):
        raise DomainError("distance must be >= 0")
    if isinstance(model, Mcp):
        out = np.where(xa <= model.radius, 2.0 * xa / model.radius**2, 0.0)
    else:
        k = model.kappa
        out = 2.0 * k * xa * np.exp(-k * xa * xa)
    return float(out) if out.ndim == 0 else out


def cdf(model: DistanceModel, x):
    """Distribution function of the link distance."""
    _check_model(model)
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0) or np.any(np.isnan(xa)):
        raise DomainError("distance must be >= 0")
    if isinstance(model, Mcp):
        out = np.minimum(xa / model.radius, 1.0) ** 2
    else:
        out = -np.expm1(-model.kappa * xa * xa)
    return float(out) if out.ndim == 0 else out


def sample_distances(model: DistanceModel, size, rng: np.random.Generator) -> np.ndarray:
    """I.i.d. link distances by closed-form inverse-CDF sampling."""
    _check_model(model)
    u = rng.random(size)
    if isinstance(model, Mcp):
        return model.radius * np.sqrt(u)
    # 1 - u keeps the argument of log in (0, 1]
    return np.sqrt(-np.log1p(-u) / model.kappa)


def sample_distance(model: DistanceModel, rng: np.random.Generator) -> float:
    return float(sample_distances(model, 1, rng)[0])


@dataclass(frozen=True)
class OrderedDistances:
    """Distances of the N cluster users to the serving BS, ascending."""

    values: tuple
    model: object = None

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ParameterError("at least one distance is required")
        if any(not (v > 0 and math.isfinite(v)) for v in vals):
            raise ParameterError(f"distances must be positive and finite: {vals}")
        if any(b < a for a, b in zip(vals, vals[1:])):
            raise ParameterError(f"distances must be sorted ascending: {vals}")
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values)


def sample_ordered_batch(model: DistanceModel, n_users: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` x ``n_users`` array; each row is an ascending i.i.d. sample."""
    if n_users < 1:
        raise ParameterError(f"cluster size must be >= 1, got {n_users}")
    r = sample_distances(model, (size, n_users), rng)
    r.sort(axis=1)
    return r


def sample_ordered(model: DistanceModel, n_users: int, rng: np.random.Generator) -> OrderedDistances:
    """N i.i.d. distances sorted ascending (the N! prod f joint law)."""
    return OrderedDistances(tuple(sample_ordered_batch(model, n_users, 1, rng)[0]), model)


# ---------------------------------------------------------------------------
# Voronoi ground truth


@dataclass
class VoronoiScene:
    """BS and user points in a square window; the center BS sits at the origin."""

    bs_points: np.ndarray
    user_points: np.ndarray
    typical_cell_users: np.ndarray
    lambda_u: float


def default_window(lam: float) -> float:
    return 4.0 / math.sqrt(lam * math.pi)


def _check_voronoi_args(lam, lambda_u, n_users, window_half_width):
    if not (lam > 0 and lambda_u > 0):
        raise ParameterError("intensities must be positive")
    if n_users < 1:
        raise ParameterError(f"cluster size must be >= 1, got {n_users}")
    if lambda_u / lam < 3 * n_users:
        raise ParameterError(
            f"lambda_u/lambda = {lambda_u / lam:.3g} too low for N = {n_users} (need >= {3 * n_users})"
        )
    w = default_window(lam) if window_half_width is None else float(window_half_width)
    if w < default_window(lam) * (1 - 1e-12):
        raise ParameterError(f"window half-width {w} below 4/sqrt(lambda*pi) = {default_window(lam):.4g}")
    return w


def draw_voronoi_scene(lam: float, lambda_u: float, window_half_width: float, rng: np.random.Generator) -> VoronoiScene:
    """One scene: BS PPP plus a BS at the origin, and an independent user PPP."""
    w = float(window_half_width)
    area = 4.0 * w * w
    bs = np.vstack([[0.0, 0.0], rng.uniform(-w, w, size=(rng.poisson(lam * area), 2))])
    users = rng.uniform(-w, w, size=(rng.poisson(lambda_u * area), 2))
    d = np.linalg.norm(users[:, None, :] - bs[None, :, :], axis=2)
    own = np.argmin(d, axis=1) == 0 if len(bs) else np.zeros(len(users), bool)
    return VoronoiScene(bs, users, np.sort(d[own, 0]), lambda_u)


_PREFILTER_BS = 8


def _voronoi_batch(lam, lambda_u, n_users, w, batch, rng):
    """Vectorized scenes; returns (accepted sorted distances, number of scenes drawn)."""
    area = 4.0 * w * w
    n_bs = rng.poisson(lam * area, size=batch)
    n_us = rng.poisson(lambda_u * area, size=batch)
    kmax, umax = int(n_bs.max(initial=0)), int(n_us.max(initial=0))
    bs = rng.uniform(-w, w, size=(batch, kmax, 2))
    us = rng.uniform(-w, w, size=(batch, umax, 2))
    bs_valid = np.arange(kmax)[None, :] < n_bs[:, None]
    us_valid = np.arange(umax)[None, :] < n_us[:, None]
    # u is closer to the origin than to b  <=>  u.b < |b|^2 / 2
    half_sq = 0.5 * np.einsum("bki,bki->bk", bs, bs)
    half_sq[~bs_valid] = np.inf
    # stage 1: the nearest few BSs reject almost every outside user cheaply
    near = min(_PREFILTER_BS, kmax)
    if near:
        idx = np.argpartition(half_sq, near - 1, axis=1)[:, :near]
        bs_near = np.take_along_axis(bs, idx[..., None], axis=1)
        hs_near = np.take_along_axis(half_sq, idx, axis=1)
        margin = np.matmul(bs_near, us.transpose(0, 2, 1)) - hs_near[:, :, None]
        cand = us_valid & (margin.max(axis=1) < 0)
    else:
        cand = us_valid.copy()
    # stage 2: survivors against every BS of their scene
    own = np.zeros_like(cand)
    scene, slot = np.nonzero(cand)
    if scene.size and kmax:
        m2 = np.einsum("ci,cki->ck", us[scene, slot], bs[scene]) - half_sq[scene]
        own[scene, slot] = m2.max(axis=1) < 0
    else:
        own[scene, slot] = True
    count = own.sum(axis=1)
    ok = count >= n_users
    if not ok.any():
        return np.empty((0, n_users)), batch
    # users are i.i.d. in array order, so the first n own users form a uniform pick
    own_ok = own[ok]
    rank = np.cumsum(own_ok, axis=1)
    take = own_ok & (rank <= n_users)
    picked = us[ok][take].reshape(-1, n_users, 2)
    r = np.hypot(picked[..., 0], picked[..., 1])
    r.sort(axis=1)
    return r, batch


def simulate_voronoi_cells(
    lam: float,
    lambda_u: float,
    n_users: int,
    size: int,
    rng: np.random.Generator,
    window_half_width: float | None = None,
    batch: int = 512,
) -> tuple[np.ndarray, int]:
    """Ground-truth typical-cell samples.

    Scenes whose center cell holds fewer than ``n_users`` users are
    discarded and redrawn. Returns the ``size`` x ``n_users`` ascending
    distances of uniformly chosen users and the total number of scenes
    drawn (so the acceptance fraction is ``size / drawn`` approximately).
    """
    w = _check_voronoi_args(lam, lambda_u, n_users, window_half_width)
    out = []
    have = 0
    drawn = 0
    while have < size:
        r, nb = _voronoi_batch(lam, lambda_u, n_users, w, batch, rng)
        out.append(r)
        have += len(r)
        drawn += nb
    return np.vstack(out)[:size], drawn


def simulate_voronoi_cell(
    lam: float,
    lambda_u: float,
    n_users: int,
    rng: np.random.Generator,
    window_half_width: float | None = None,
) -> OrderedDistances:
    """One typical-cell cluster of ``n_users`` users (redraw on underfill)."""
    w = _check_voronoi_args(lam, lambda_u, n_users, window_half_width)
    while True:
        scene = draw_voronoi_scene(lam, lambda_u, w, rng)
        r = scene.typical_cell_users
        if len(r) >= n_users:
            pick = rng.choice(len(r), size=n_users, replace=False)
            return OrderedDistances(tuple(np.sort(r[pick])), PppVoronoi(lam))
