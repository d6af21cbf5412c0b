"""Monte Carlo estimates of the accuracy probability.

Samples are split into fixed-size blocks. Block ``b`` draws from its own
Philox stream keyed by ``(seed, b)``, so a result depends only on the seed
and the sample count, never on how many workers ran the blocks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from typing import Callable, Sequence

import numpy as np

from .cluster import ClusterSpec
from .errors import ParameterError
from .geometry import PppVoronoi, sample_ordered_batch, simulate_voronoi_cells
from .numerics import sample_gamma_array

BLOCK_SIZE = 1 << 16
MIN_SAMPLES = 10**4
MIN_PERMUTATION_SAMPLES = 10**5
MAX_PERMUTATION_USERS = 5
VORONOI_LOAD = 10.0


@dataclass(frozen=True)
class McEstimate:
    estimate: float
    stderr: float
    n_samples: int
    seed: int


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Counter-derived substream for one sample block."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(block),))
    return np.random.Generator(np.random.Philox(ss))


def block_sizes(n_samples: int, block_size: int = BLOCK_SIZE) -> list:
    full, rest = divmod(int(n_samples), block_size)
    return [block_size] * full + ([rest] if rest else [])


def run_blocks(fn: Callable[[int, int, np.random.Generator], object], n_samples: int, seed: int, workers: int = 1):
    """Evaluate ``fn(block_index, size, rng)`` for every block, in block order."""
    sizes = block_sizes(n_samples)
    jobs = [(b, n) for b, n in enumerate(sizes)]
    if workers <= 1 or len(jobs) == 1:
        return [fn(b, n, block_rng(seed, b)) for b, n in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(job[0], job[1], block_rng(seed, job[0])), jobs))


def voronoi_user_intensity(lam: float, pool_size: int) -> float:
    # heavily loaded: at least 10 users per cell on average, and 3 per requested user
    return lam * max(VORONOI_LOAD, 3.0 * pool_size)


def _check_voronoi_flag(spec: ClusterSpec, ground_truth_voronoi: bool) -> None:
    if ground_truth_voronoi and not isinstance(spec.model, PppVoronoi):
        raise ParameterError("Voronoi ground truth is only defined for the PPP model")


def _draw_cluster(spec: ClusterSpec, size: int, rng: np.random.Generator, ground_truth_voronoi: bool) -> np.ndarray:
    """Ascending distances of the selected users, one row per sample."""
    pool = spec.pool_size
    if ground_truth_voronoi:
        lam = spec.model.lam
        r, _ = simulate_voronoi_cells(lam, voronoi_user_intensity(lam, pool), pool, size, rng)
    else:
        r = sample_ordered_batch(spec.model, pool, size, rng)
    cols = [s - 1 for s in spec.selection]
    return r[:, cols]


def _received_power(spec: ClusterSpec, size: int, rng, ground_truth_voronoi: bool, distances=None) -> np.ndarray:
    if distances is None:
        r = _draw_cluster(spec, size, rng, ground_truth_voronoi)
    else:
        r = np.broadcast_to(np.asarray(distances, dtype=float), (size, spec.n_users))
    h = sample_gamma_array(spec.fading, (size, spec.n_users), rng)
    return h * r ** (-spec.alpha)


def _ordered(power: np.ndarray) -> np.ndarray:
    """Indicator that received powers strictly decrease with distance rank."""
    return np.all(power[:, :-1] > power[:, 1:], axis=1)


def sample_indicators(spec: ClusterSpec, n_samples: int, seed: int, ground_truth_voronoi: bool = False) -> np.ndarray:
    """Per-sample accuracy indicators.

    The draws do not depend on the path-loss exponent, so two specs that
    differ only in ``alpha`` see common random numbers for the same seed.
    """
    _check_voronoi_flag(spec, ground_truth_voronoi)
    if spec.n_users == 1:
        return np.ones(int(n_samples), dtype=bool)
    parts = run_blocks(lambda b, n, rng: _ordered(_received_power(spec, n, rng, ground_truth_voronoi)), n_samples, seed)
    return np.concatenate(parts)


def _mc_from_count(hits: int, n: int, seed: int) -> McEstimate:
    p = hits / n
    return McEstimate(p, math.sqrt(p * (1.0 - p) / n), n, int(seed))


def estimate_accuracy(
    spec: ClusterSpec,
    n_samples: int = 10**6,
    seed: int = 0,
    ground_truth_voronoi: bool = False,
    workers: int = 1,
) -> McEstimate:
    """Fraction of samples where distance order equals received-power order."""
    if not isinstance(spec, ClusterSpec):
        raise ParameterError("expected a ClusterSpec")
    if int(n_samples) != n_samples or n_samples < MIN_SAMPLES:
        raise ParameterError(f"need at least {MIN_SAMPLES} samples, got {n_samples}")
    _check_voronoi_flag(spec, ground_truth_voronoi)
    n_samples = int(n_samples)
    if spec.n_users == 1:
        return McEstimate(1.0, 0.0, n_samples, int(seed))

    def block(b, n, rng):
        return int(_ordered(_received_power(spec, n, rng, ground_truth_voronoi)).sum())

    hits = sum(run_blocks(block, n_samples, seed, workers))
    return _mc_from_count(hits, n_samples, seed)


def estimate_permutation_distribution(
    spec: ClusterSpec,
    n_samples: int = 10**6,
    seed: int = 0,
    distances: Sequence[float] | None = None,
    ground_truth_voronoi: bool = False,
    workers: int = 1,
) -> dict:
    """Empirical law of the received-power ordering.

    Keys are permutations of distance ranks 1..n listed from strongest to
    weakest received power, so the identity is the accurate event. Values
    are exact fractions count / n_samples and sum to 1. ``distances`` pins
    the user distances (ascending) instead of drawing them.
    """
    n = spec.n_users
    if n > MAX_PERMUTATION_USERS:
        raise ParameterError(f"permutation distribution supports at most {MAX_PERMUTATION_USERS} users, got {n}")
    if int(n_samples) != n_samples or n_samples < MIN_PERMUTATION_SAMPLES:
        raise ParameterError(f"need at least {MIN_PERMUTATION_SAMPLES} samples, got {n_samples}")
    _check_voronoi_flag(spec, ground_truth_voronoi)
    if distances is not None:
        d = np.asarray(distances, dtype=float)
        if d.shape != (n,) or np.any(d <= 0) or np.any(np.diff(d) < 0):
            raise ParameterError(f"pinned distances must be {n} ascending positive values")
    n_samples = int(n_samples)
    perms = list(permutations(range(1, n + 1)))
    index = {p: i for i, p in enumerate(perms)}
    # encode each ordering as a base-n integer for fast counting
    codes = {sum((v - 1) * n ** (n - 1 - k) for k, v in enumerate(p)): index[p] for p in perms}
    radix = n ** np.arange(n - 1, -1, -1)

    def block(b, size, rng):
        power = _received_power(spec, size, rng, ground_truth_voronoi, distances)
        order = np.argsort(-power, axis=1, kind="stable")
        counts = np.zeros(len(perms), dtype=np.int64)
        code_of_row = order @ radix
        uniq, cnt = np.unique(code_of_row, return_counts=True)
        for c, k in zip(uniq.tolist(), cnt.tolist()):
            counts[codes[c]] += k
        return counts

    total = np.sum(run_blocks(block, n_samples, seed, workers), axis=0)
    return {p: Fraction(int(total[i]), n_samples) for i, p in enumerate(perms)}


__all__ = [
    "McEstimate",
    "block_rng",
    "estimate_accuracy",
    "estimate_permutation_distribution",
    "run_blocks",
    "sample_indicators",
]
