"""Two-user uplink and downlink NOMA coverage under two ranking rules.

ISP ranking orders users by instantaneous received power, so each sample
falls in one of two branches: the distance order is right ("accurate") or
inverted. MSP ranking always trusts the distance order.

Interference model (the source leaves it open, so these are assumptions):

* other BSs form a PPP of intensity ``lam`` in a disk of radius ``window``
  around the serving BS, outside a guard disk of radius ``guard``;
* inter-cell links use the bounded path loss max(d, floor)^-alpha;
* uplink: each interfering BS has one active user placed by the same
  location model; the field is measured at the serving BS and shared by
  both cluster users;
* downlink: every BS transmits; each cluster user sees an independently
  drawn field at its own position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .geometry import DistanceModel, Mcp, PppVoronoi, Tcp, default_window, sample_distances, sample_ordered_batch
from .montecarlo import McEstimate, run_blocks
from .numerics import FadingModel, sample_gamma_array

MSP_MODES = ("first_term", "unconditional")
_CHUNK_POINTS = 64


def default_guard(model: DistanceModel) -> float:
    if isinstance(model, Mcp):
        return model.radius
    if isinstance(model, Tcp):
        return math.sqrt(model.sigma2)
    return 0.0


@dataclass(frozen=True)
class CoverageConfig:
    direction: str = "uplink"
    theta: float = 1.0
    beta: float = 0.0
    p_tx: float = 1.0
    p_bs: float = 1.0
    a1: float = 0.3
    a2: float = 0.7
    noise: float = 0.0
    model: DistanceModel = field(default_factory=lambda: Mcp(10.0))
    alpha: float = 4.0
    fading: FadingModel = field(default_factory=FadingModel)
    lam: float = 1e-4
    msp_mode: str = "first_term"
    window: float | None = None
    guard: float | None = None
    pathloss_floor: float = 1.0

    def __post_init__(self):
        if self.direction not in ("uplink", "downlink"):
            raise ParameterError(f"direction must be uplink or downlink, got {self.direction!r}")
        if not (math.isfinite(self.theta) and self.theta > 0):
            raise ParameterError(f"SIR threshold must be > 0, got {self.theta}")
        if not 0.0 <= self.beta <= 1.0:
            raise ParameterError(f"residual SIC fraction must lie in [0, 1], got {self.beta}")
        if not (self.p_tx > 0 and self.p_bs > 0):
            raise ParameterError("transmit powers must be > 0")
        if self.direction == "downlink":
            if not 0.0 < self.a1 < self.a2 < 1.0:
                raise ParameterError(f"need 0 < a1 < a2 < 1, got a1={self.a1}, a2={self.a2}")
            if abs(self.a1 + self.a2 - 1.0) > 1e-12:
                raise ParameterError(f"a1 + a2 must equal 1, got {self.a1 + self.a2}")
        if not (math.isfinite(self.noise) and self.noise >= 0):
            raise ParameterError(f"noise power must be >= 0, got {self.noise}")
        if not isinstance(self.model, (PppVoronoi, Mcp, Tcp)):
            raise ParameterError(f"unknown distance model {self.model!r}")
        if not (math.isfinite(self.alpha) and self.alpha > 2):
            raise ParameterError(f"path-loss exponent must be > 2, got {self.alpha}")
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ParameterError(f"BS intensity must be > 0, got {self.lam}")
        if self.msp_mode not in MSP_MODES:
            raise ParameterError(f"msp_mode must be one of {MSP_MODES}, got {self.msp_mode!r}")
        if self.window is not None and self.window < default_window(self.lam) * (1 - 1e-12):
            raise ParameterError(f"window {self.window} below 4/sqrt(lambda*pi)")
        if self.guard is not None and self.guard < 0:
            raise ParameterError("guard radius must be >= 0")
        if not self.pathloss_floor > 0:
            raise ParameterError("path-loss floor must be > 0")

    @property
    def window_radius(self) -> float:
        return default_window(self.lam) if self.window is None else float(self.window)

    @property
    def guard_radius(self) -> float:
        return default_guard(self.model) if self.guard is None else float(self.guard)


@dataclass(frozen=True)
class Decomposition:
    """Law-of-total-probability split over the ranking event.

    ``weight_accurate`` is the fraction of samples where the near user also
    has the larger received power; the ``*_accurate`` / ``*_inverted``
    entries are coverage probabilities conditioned on each branch.
    """

    weight_accurate: float
    weight_inverted: float
    near_accurate: float
    near_inverted: float
    far_accurate: float
    far_inverted: float
    n_accurate: int
    n_inverted: int


@dataclass(frozen=True)
class CoverageResult:
    p_cov_near: McEstimate
    p_cov_far: McEstimate
    ranking: str
    decomposition: Decomposition


@dataclass(frozen=True)
class CoverageComparison:
    """ISP and MSP coverage from one set of draws.

    ``msp`` follows ``config.msp_mode``; ``msp_by_mode`` holds both readings.
    """

    isp: CoverageResult
    msp: CoverageResult
    config: CoverageConfig
    msp_by_mode: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Interference fields


def _check_field_args(lam: float, window: float) -> None:
    if not lam > 0:
        raise ParameterError("BS intensity must be > 0")
    if window < default_window(lam) * (1 - 1e-12):
        raise ParameterError(f"window {window} below 4/sqrt(lambda*pi) = {default_window(lam):.4g}")


def _disk_ppp_radii(lam: float, guard: float, window: float, size: int, rng: np.random.Generator):
    """PPP in the annulus guard < d < window, as radii sorted outward.

    Radii come from cumulative unit-rate arrival times mapped through the
    area measure. Returns (radii array padded with inf, validity mask).
    """
    base = lam * math.pi * guard * guard
    top = lam * math.pi * window * window
    span = top - base
    cols = max(8, int(span + 6.0 * math.sqrt(span) + 10))
    arrivals = np.cumsum(rng.standard_exponential((size, cols)), axis=1)
    while np.any(arrivals[:, -1] < span):
        more = np.cumsum(rng.standard_exponential((size, _CHUNK_POINTS)), axis=1) + arrivals[:, -1:]
        arrivals = np.concatenate([arrivals, more], axis=1)
    valid = arrivals < span
    keep = int(valid.sum(axis=1).max(initial=0))
    arrivals, valid = arrivals[:, :keep], valid[:, :keep]
    radii = np.sqrt((arrivals + base) / (lam * math.pi))
    return np.where(valid, radii, np.inf), valid


def _pathloss(d: np.ndarray, alpha: float, floor: float) -> np.ndarray:
    return np.maximum(d, floor) ** (-alpha)


def uplink_interference_batch(
    lam: float,
    model: DistanceModel,
    alpha: float,
    fading: FadingModel,
    p_tx: float,
    window: float,
    size: int,
    rng: np.random.Generator,
    guard: float = 0.0,
    pathloss_floor: float = 1.0,
    return_terms: bool = False,
):
    """``size`` independent uplink fields at the serving BS (origin).

    With ``return_terms`` the per-interferer BS radii and received powers
    (zero for padding) are returned instead of their sums.
    """
    _check_field_args(lam, window)
    radii, valid = _disk_ppp_radii(lam, guard, window, size, rng)
    k = radii.shape[1]
    if k == 0:
        return (radii, np.zeros((size, 0))) if return_terms else np.zeros(size)
    theta_bs = rng.uniform(0.0, 2 * math.pi, (size, k))
    offset = sample_distances(model, (size, k), rng)
    theta_u = rng.uniform(0.0, 2 * math.pi, (size, k))
    gain = sample_gamma_array(fading, (size, k), rng)
    safe_r = np.where(valid, radii, 0.0)
    x = safe_r * np.cos(theta_bs) + offset * np.cos(theta_u)
    y = safe_r * np.sin(theta_bs) + offset * np.sin(theta_u)
    contrib = np.where(valid, p_tx * gain * _pathloss(np.hypot(x, y), alpha, pathloss_floor), 0.0)
    return (radii, contrib) if return_terms else contrib.sum(axis=1)


def downlink_interference_batch(
    lam: float,
    alpha: float,
    fading: FadingModel,
    p_bs: float,
    user_distance,
    window: float,
    size: int,
    rng: np.random.Generator,
    guard: float = 0.0,
    pathloss_floor: float = 1.0,
    return_terms: bool = False,
):
    """Downlink fields at users located ``user_distance`` from the serving BS.

    The BS layout is isotropic, so the user is placed on the positive x-axis.
    ``user_distance`` is a scalar or an array of length ``size``.
    """
    _check_field_args(lam, window)
    radii, valid = _disk_ppp_radii(lam, guard, window, size, rng)
    k = radii.shape[1]
    if k == 0:
        return (radii, np.zeros((size, 0))) if return_terms else np.zeros(size)
    ang = rng.uniform(0.0, 2 * math.pi, (size, k))
    gain = sample_gamma_array(fading, (size, k), rng)
    safe_r = np.where(valid, radii, 0.0)
    ux = np.broadcast_to(np.asarray(user_distance, dtype=float), (size,))[:, None]
    d = np.hypot(safe_r * np.cos(ang) - ux, safe_r * np.sin(ang))
    contrib = np.where(valid, p_bs * gain * _pathloss(d, alpha, pathloss_floor), 0.0)
    return (radii, contrib) if return_terms else contrib.sum(axis=1)


def interference_field_uplink(
    lam: float,
    model: DistanceModel,
    alpha: float,
    fading: FadingModel,
    p_tx: float,
    window: float,
    rng: np.random.Generator,
    guard: float = 0.0,
    pathloss_floor: float = 1.0,
) -> float:
    """One uplink field draw at the serving BS."""
    return float(uplink_interference_batch(lam, model, alpha, fading, p_tx, window, 1, rng, guard, pathloss_floor)[0])


def interference_field_downlink(
    lam: float,
    alpha: float,
    fading: FadingModel,
    p_bs: float,
    user_position,
    window: float,
    rng: np.random.Generator,
    guard: float = 0.0,
    pathloss_floor: float = 1.0,
) -> float:
    """One downlink field draw at ``user_position`` (a distance or an (x, y) pair)."""
    pos = np.atleast_1d(np.asarray(user_position, dtype=float))
    dist = float(np.hypot(pos[0], pos[1])) if pos.size == 2 else float(pos[0])
    return float(downlink_interference_batch(lam, alpha, fading, p_bs, dist, window, 1, rng, guard, pathloss_floor)[0])


# ---------------------------------------------------------------------------
# Coverage


def _estimate(hits: int, n: int, seed: int) -> McEstimate:
    p = hits / n
    return McEstimate(p, math.sqrt(p * (1.0 - p) / n), n, int(seed))


def _uplink_block(cfg: CoverageConfig, size: int, rng: np.random.Generator) -> np.ndarray:
    r = sample_ordered_batch(cfg.model, 2, size, rng)
    h = sample_gamma_array(cfg.fading, (size, 2), rng)
    inter = uplink_interference_batch(
        cfg.lam, cfg.model, cfg.alpha, cfg.fading, cfg.p_tx, cfg.window_radius, size, rng,
        cfg.guard_radius, cfg.pathloss_floor,
    )
    s1 = cfg.p_tx * h[:, 0] * r[:, 0] ** (-cfg.alpha)
    s2 = cfg.p_tx * h[:, 1] * r[:, 1] ** (-cfg.alpha)
    base = inter + cfg.noise
    accurate = s1 > s2
    # accurate branch: near decoded first against the far user; far after imperfect SIC
    near_a = s1 > cfg.theta * (s2 + base)
    far_a = s2 > cfg.theta * (cfg.beta * s1 + base)
    # inverted branch: far decoded first; near after imperfect SIC
    near_b = s1 > cfg.theta * (cfg.beta * s2 + base)
    far_b = s2 > cfg.theta * (s1 + base)
    return np.stack([accurate, near_a, far_a, near_b, far_b])


def _downlink_block(cfg: CoverageConfig, size: int, rng: np.random.Generator) -> np.ndarray:
    r = sample_ordered_batch(cfg.model, 2, size, rng)
    h = sample_gamma_array(cfg.fading, (size, 2), rng)
    fields = [
        downlink_interference_batch(
            cfg.lam, cfg.alpha, cfg.fading, cfg.p_bs, r[:, j], cfg.window_radius, size, rng,
            cfg.guard_radius, cfg.pathloss_floor,
        )
        for j in range(2)
    ]
    g1 = cfg.p_bs * h[:, 0] * r[:, 0] ** (-cfg.alpha)
    g2 = cfg.p_bs * h[:, 1] * r[:, 1] ** (-cfg.alpha)
    b1 = fields[0] + cfg.noise
    b2 = fields[1] + cfg.noise
    a1, a2, beta, th = cfg.a1, cfg.a2, cfg.beta, cfg.theta
    accurate = h[:, 0] * r[:, 0] ** (-cfg.alpha) > h[:, 1] * r[:, 1] ** (-cfg.alpha)
    # accurate branch: far user is the weak one and gets a2
    near_a = a1 * g1 > th * (beta * a2 * g1 + b1)
    far_a = a2 * g2 > th * (a1 * g2 + b2)
    # inverted branch: near user is the weak one and gets a2
    near_b = a2 * g1 > th * (a1 * g1 + b1)
    far_b = a1 * g2 > th * (beta * a2 * g2 + b2)
    return np.stack([accurate, near_a, far_a, near_b, far_b])


def _counts(flags: np.ndarray) -> np.ndarray:
    accurate, near_a, far_a, near_b, far_b = flags
    inverted = ~accurate
    return np.array(
        [
            accurate.sum(),
            (near_a & accurate).sum(),
            (far_a & accurate).sum(),
            (near_b & inverted).sum(),
            (far_b & inverted).sum(),
            near_a.sum(),
            far_a.sum(),
        ],
        dtype=np.int64,
    )


def _summarize(cfg: CoverageConfig, counts: np.ndarray, n: int, seed: int) -> CoverageComparison:
    n_acc, near_acc, far_acc, near_inv, far_inv, near_a_all, far_a_all = (int(v) for v in counts)
    n_inv = n - n_acc
    w_acc, w_inv = n_acc / n, n_inv / n
    dec = Decomposition(
        weight_accurate=w_acc,
        weight_inverted=w_inv,
        near_accurate=near_acc / n_acc if n_acc else 0.0,
        near_inverted=near_inv / n_inv if n_inv else 0.0,
        far_accurate=far_acc / n_acc if n_acc else 0.0,
        far_inverted=far_inv / n_inv if n_inv else 0.0,
        n_accurate=n_acc,
        n_inverted=n_inv,
    )
    isp = CoverageResult(_estimate(near_acc + near_inv, n, seed), _estimate(far_acc + far_inv, n, seed), "ISP", dec)
    by_mode = {
        # literal reading: first term of the decomposition, weight included
        "first_term": CoverageResult(_estimate(near_acc, n, seed), _estimate(far_acc, n, seed), "MSP", dec),
        # operational: distance-ranked decoding applied to every sample
        "unconditional": CoverageResult(_estimate(near_a_all, n, seed), _estimate(far_a_all, n, seed), "MSP", dec),
    }
    return CoverageComparison(isp, by_mode[cfg.msp_mode], cfg, by_mode)


def _coverage(cfg: CoverageConfig, block_fn, n_samples: int, seed: int, workers: int) -> CoverageComparison:
    if int(n_samples) != n_samples or n_samples < 1:
        raise ParameterError(f"sample count must be a positive integer, got {n_samples}")
    n_samples = int(n_samples)
    parts = run_blocks(lambda b, n, rng: _counts(block_fn(cfg, n, rng)), n_samples, seed, workers)
    return _summarize(cfg, np.sum(parts, axis=0), n_samples, seed)


def uplink_coverage_mc(config: CoverageConfig, n_samples: int = 10**5, seed: int = 0, workers: int = 1) -> CoverageComparison:
    """Near/far uplink coverage under ISP and MSP ranking from the same draws."""
    if not isinstance(config, CoverageConfig) or config.direction != "uplink":
        raise ParameterError("uplink_coverage_mc needs an uplink CoverageConfig")
    return _coverage(config, _uplink_block, n_samples, seed, workers)


def downlink_coverage_mc(config: CoverageConfig, n_samples: int = 10**5, seed: int = 0, workers: int = 1) -> CoverageComparison:
    """Near/far downlink coverage under ISP and MSP ranking from the same draws."""
    if not isinstance(config, CoverageConfig) or config.direction != "downlink":
        raise ParameterError("downlink_coverage_mc needs a downlink CoverageConfig")
    return _coverage(config, _downlink_block, n_samples, seed, workers)


def coverage_mc(config: CoverageConfig, n_samples: int = 10**5, seed: int = 0, workers: int = 1) -> CoverageComparison:
    fn = uplink_coverage_mc if config.direction == "uplink" else downlink_coverage_mc
    return fn(config, n_samples, seed, workers)
