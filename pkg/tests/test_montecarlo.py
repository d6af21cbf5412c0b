import math
from fractions import Fraction

import numpy as np
import pytest

from noma_accuracy.analytic import accuracy
from noma_accuracy.cluster import ClusterSpec, Pairing
from noma_accuracy.errors import ParameterError
from noma_accuracy.geometry import Mcp, PppVoronoi, Tcp
from noma_accuracy.montecarlo import (
    BLOCK_SIZE,
    block_rng,
    estimate_accuracy,
    estimate_permutation_distribution,
    run_blocks,
    sample_indicators,
)
from noma_accuracy.numerics import FadingModel

PPP = PppVoronoi(0.0005)
MCP = Mcp(20.0)
TCP = Tcp(25.0)


def spec(model=MCP, alpha=4.0, n=2, shape=1.0, omega=1.0, pairing=None):
    return ClusterSpec(model, alpha, FadingModel(shape, omega), n, pairing)


def combined(a, b):
    return math.sqrt(a.stderr**2 + b.stderr**2)


def test_single_user_is_certain():
    est = estimate_accuracy(spec(n=1), 10**4, seed=3)
    assert est.estimate == 1.0 and est.stderr == 0.0


def test_mcp_two_users_near_quarter_pi():
    est = estimate_accuracy(spec(), 4 * 10**5, seed=1)
    assert abs(est.estimate - math.pi / 4) < 3 * est.stderr


def test_stderr_formula():
    est = estimate_accuracy(spec(model=TCP), 50_000, seed=2)
    p = est.estimate
    assert est.stderr == pytest.approx(math.sqrt(p * (1 - p) / 50_000), rel=1e-12)
    assert est.n_samples == 50_000 and est.seed == 2


def test_rejects_small_sample_counts():
    with pytest.raises(ParameterError):
        estimate_accuracy(spec(), 9_999)
    with pytest.raises(ParameterError):
        estimate_accuracy(spec(), 12_345.5)


def test_voronoi_flag_only_for_ppp():
    with pytest.raises(ParameterError):
        estimate_accuracy(spec(model=MCP), 10**4, ground_truth_voronoi=True)
    est = estimate_accuracy(spec(model=PPP), 10**4, seed=1, ground_truth_voronoi=True)
    assert 0.75 < est.estimate < 0.9


def test_deterministic_and_worker_independent():
    s = spec(model=PPP, n=3)
    n = 3 * BLOCK_SIZE + 123
    a = estimate_accuracy(s, n, seed=11, workers=1)
    b = estimate_accuracy(s, n, seed=11, workers=1)
    c = estimate_accuracy(s, n, seed=11, workers=4)
    assert a == b == c


def test_different_seeds_differ():
    a = estimate_accuracy(spec(), 10**5, seed=1)
    b = estimate_accuracy(spec(), 10**5, seed=2)
    assert a.estimate != b.estimate


def test_block_streams_are_distinct():
    x = block_rng(7, 0).random(4)
    y = block_rng(7, 1).random(4)
    z = block_rng(8, 0).random(4)
    assert not np.array_equal(x, y) and not np.array_equal(x, z)
    assert np.array_equal(x, block_rng(7, 0).random(4))


def test_run_blocks_order_and_sizes():
    out = run_blocks(lambda b, n, rng: (b, n), 2 * BLOCK_SIZE + 5, seed=0, workers=3)
    assert out == [(0, BLOCK_SIZE), (1, BLOCK_SIZE), (2, 5)]


def test_omega_does_not_change_indicator():
    a = estimate_accuracy(spec(shape=2.0, omega=1.0, n=3), 10**5, seed=4)
    b = estimate_accuracy(spec(shape=2.0, omega=37.0, n=3), 10**5, seed=4)
    assert abs(a.estimate - b.estimate) <= 3 * combined(a, b)


@pytest.mark.parametrize(
    "small, big",
    [(Mcp(1.0), Mcp(500.0)), (Tcp(1.0), Tcp(500.0)), (PppVoronoi(1e-3), PppVoronoi(1e-3 / 500))],
)
def test_scale_invariance_fresh_seeds(small, big):
    a = estimate_accuracy(spec(model=small, n=3), 2 * 10**5, seed=5)
    b = estimate_accuracy(spec(model=big, n=3), 2 * 10**5, seed=6)
    assert abs(a.estimate - b.estimate) <= 3 * combined(a, b)


@pytest.mark.parametrize("model", [PPP, MCP, TCP])
def test_pathwise_monotone_in_alpha(model):
    lo = sample_indicators(spec(model=model, alpha=3.0, n=3), 10**5, seed=9)
    hi = sample_indicators(spec(model=model, alpha=5.0, n=3), 10**5, seed=9)
    # every sample that is accurate at the smaller exponent stays accurate
    assert np.all(hi >= lo)
    assert hi.sum() > lo.sum()


def test_pathwise_monotone_with_voronoi():
    lo = sample_indicators(spec(model=PPP, alpha=2.5), 2 * 10**4, seed=1, ground_truth_voronoi=True)
    hi = sample_indicators(spec(model=PPP, alpha=6.0), 2 * 10**4, seed=1, ground_truth_voronoi=True)
    assert np.all(hi >= lo)


@pytest.mark.parametrize(
    "s",
    [
        spec(model=PPP, n=3),
        spec(model=MCP, shape=2.0, n=2),
        spec(model=TCP, shape=0.5, n=3),
        spec(model=PPP, n=2, pairing=Pairing(4, (1, 4))),
        spec(model=MCP, n=3, pairing=Pairing(5, (1, 3, 5))),
    ],
)
def test_agrees_with_analytic(s):
    mc = estimate_accuracy(s, 3 * 10**5, seed=12)
    an = accuracy(s)
    assert abs(mc.estimate - an.value) < 3.5 * mc.stderr + an.error_bound


def test_pairing_draws_selected_ranks():
    # ranks (1, 2) of 3 on the disk equal random 2-user selection: pi/4
    est = estimate_accuracy(spec(pairing=Pairing(3, (1, 2))), 2 * 10**5, seed=13)
    assert abs(est.estimate - math.pi / 4) < 3.5 * est.stderr


# --- permutation distribution -----------------------------------------------


def test_permutation_distribution_sums_to_one():
    dist = estimate_permutation_distribution(spec(model=TCP, n=3), 10**5, seed=2)
    assert len(dist) == 6
    assert sum(dist.values()) == Fraction(1)
    assert all(isinstance(v, Fraction) for v in dist.values())


def test_identity_matches_accuracy_estimate():
    s = spec(model=PPP, n=3, shape=1.5)
    dist = estimate_permutation_distribution(s, 2 * 10**5, seed=8)
    est = estimate_accuracy(s, 2 * 10**5, seed=8)
    assert float(dist[(1, 2, 3)]) == est.estimate


def test_two_user_complement():
    dist = estimate_permutation_distribution(spec(), 10**5, seed=1)
    assert dist[(1, 2)] + dist[(2, 1)] == 1


def test_equal_distances_uniform():
    n = 2 * 10**5
    dist = estimate_permutation_distribution(spec(n=3), n, seed=4, distances=(5.0, 5.0, 5.0))
    se = math.sqrt((1 / 6) * (5 / 6) / n)
    for p in dist.values():
        assert abs(float(p) - 1 / 6) < 3.5 * se


def test_pinned_distances_match_inner_expectation():
    from noma_accuracy.analytic import inner_expectation_rayleigh

    n = 2 * 10**5
    d = (1.0, 1.5, 2.0)
    dist = estimate_permutation_distribution(spec(n=3), n, seed=6, distances=d)
    p = inner_expectation_rayleigh(d, 4.0)
    assert abs(float(dist[(1, 2, 3)]) - p) < 3.5 * math.sqrt(p * (1 - p) / n)


def test_permutation_argument_checks():
    with pytest.raises(ParameterError):
        estimate_permutation_distribution(spec(n=6), 10**5)
    with pytest.raises(ParameterError):
        estimate_permutation_distribution(spec(n=3), 10**4)
    with pytest.raises(ParameterError):
        estimate_permutation_distribution(spec(n=3), 10**5, distances=(3.0, 2.0, 1.0))
    with pytest.raises(ParameterError):
        estimate_permutation_distribution(spec(n=3), 10**5, distances=(1.0, 2.0))
