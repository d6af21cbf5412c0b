import math

import numpy as np
import pytest
from scipy import integrate, stats

from noma_accuracy.errors import DomainError, ParameterError
from noma_accuracy.geometry import (
    Mcp,
    OrderedDistances,
    PppVoronoi,
    Tcp,
    cdf,
    default_window,
    draw_voronoi_scene,
    pdf,
    sample_distance,
    sample_distances,
    sample_ordered,
    sample_ordered_batch,
    simulate_voronoi_cell,
    simulate_voronoi_cells,
)

MODELS = [PppVoronoi(0.0005), Mcp(20.0), Tcp(25.0)]


def test_model_validation():
    with pytest.raises(ParameterError):
        PppVoronoi(0.0)
    with pytest.raises(ParameterError):
        PppVoronoi(1e-3, correction=-1)
    with pytest.raises(ParameterError):
        Mcp(-2.0)
    with pytest.raises(ParameterError):
        Tcp(float("inf"))
    assert PppVoronoi(1e-3).correction == 1.25


def test_mcp_pdf_values():
    assert pdf(Mcp(20), 10) == pytest.approx(0.05)
    assert pdf(Mcp(20), 25) == 0.0


def test_ppp_pdf_at_zero_and_mass():
    model = PppVoronoi(0.0005)
    assert pdf(model, 0.0) == 0.0
    mass, _ = integrate.quad(lambda x: pdf(model, x), 0, np.inf, epsabs=1e-13)
    assert abs(mass - 1.0) < 1e-9


@pytest.mark.parametrize("model", MODELS)
def test_pdf_integrates_to_one(model):
    upper = model.radius if isinstance(model, Mcp) else np.inf
    mass, _ = integrate.quad(lambda x: pdf(model, x), 0, upper, epsabs=1e-13)
    assert abs(mass - 1.0) < 1e-9


@pytest.mark.parametrize("model", MODELS)
def test_cdf_is_integral_of_pdf(model):
    for x in (0.5, 3.0, 11.0, 19.0):
        ref, _ = integrate.quad(lambda t: pdf(model, t), 0, x, epsabs=1e-13)
        assert abs(cdf(model, x) - ref) < 1e-10


def test_cdf_spot_values():
    assert cdf(Mcp(7.0), 7.0) == 1.0
    assert cdf(Tcp(25), math.sqrt(2 * 25 * math.log(2))) == pytest.approx(0.5, abs=1e-14)
    model = PppVoronoi(0.0005)
    assert cdf(model, math.sqrt(1 / model.kappa)) == pytest.approx(1 - math.exp(-1), abs=1e-14)


@pytest.mark.parametrize("model", MODELS)
def test_negative_distance_rejected(model):
    with pytest.raises(DomainError):
        pdf(model, -1.0)
    with pytest.raises(DomainError):
        cdf(model, [1.0, -0.1])


def test_pdf_cdf_vectorized():
    x = np.array([0.0, 1.0, 5.0])
    assert pdf(Mcp(4), x).shape == (3,)
    assert np.all(np.diff(cdf(Tcp(3), x)) >= 0)


def test_mcp_sample_mean():
    r = sample_distances(Mcp(20), 10**6, np.random.default_rng(0))
    assert abs(r.mean() - 40 / 3) < 0.02
    assert np.all(r > 0) and np.all(r <= 20)


def test_tcp_sample_median():
    r = sample_distances(Tcp(25), 10**6, np.random.default_rng(1))
    assert abs(np.median(r) - 5.887) < 0.02


@pytest.mark.parametrize("model", MODELS)
def test_samplers_pass_ks(model):
    r = sample_distances(model, 10**5, np.random.default_rng(7))
    stat = stats.kstest(r, lambda x: cdf(model, np.maximum(x, 0))).statistic
    assert stat < 1.63 / math.sqrt(len(r))


def test_sample_distance_scalar():
    assert 0 < sample_distance(Mcp(3), np.random.default_rng(0)) <= 3


@pytest.mark.parametrize(
    "small, big, factor",
    [(Mcp(1.0), Mcp(500.0), 500.0), (Tcp(1.0), Tcp(1e4), 100.0), (PppVoronoi(1e-2), PppVoronoi(1e-6), 100.0)],
)
def test_scale_equivariance(small, big, factor):
    a = sample_distances(small, 1000, np.random.default_rng(5))
    b = sample_distances(big, 1000, np.random.default_rng(5))
    assert np.allclose(b, factor * a, rtol=1e-12)


def test_ordered_batch_sorted():
    r = sample_ordered_batch(Tcp(2.0), 4, 5000, np.random.default_rng(3))
    assert r.shape == (5000, 4)
    assert np.all(np.diff(r, axis=1) >= 0)


def test_sample_ordered_single_and_errors():
    od = sample_ordered(Mcp(5), 1, np.random.default_rng(0))
    assert len(od) == 1
    with pytest.raises(ParameterError):
        sample_ordered(Mcp(5), 0, np.random.default_rng(0))


def test_ordered_distances_validation():
    with pytest.raises(ParameterError):
        OrderedDistances((2.0, 1.0))
    with pytest.raises(ParameterError):
        OrderedDistances((0.0, 1.0))
    with pytest.raises(ParameterError):
        OrderedDistances(())
    assert OrderedDistances([1, 2]).as_array().tolist() == [1.0, 2.0]


def test_min_order_statistic_mean_against_quadrature():
    model, n = Mcp(20.0), 3
    # density of the minimum of n iid draws: n f (1 - F)^(n-1)
    ref, _ = integrate.quad(lambda x: x * n * pdf(model, x) * (1 - cdf(model, x)) ** (n - 1), 0, 20)
    r = sample_ordered_batch(model, n, 10**6, np.random.default_rng(11))
    sem = r[:, 0].std() / math.sqrt(len(r))
    assert abs(r[:, 0].mean() - ref) < 4 * sem


def test_middle_order_statistic_histogram_chi2():
    model, n = Tcp(25.0), 3
    r = sample_ordered_batch(model, n, 10**5, np.random.default_rng(12))[:, 1]
    edges = np.linspace(0, 16, 17)
    edges[-1] = np.inf

    def order_cdf(x, i):
        f = cdf(model, x) if np.isfinite(x) else 1.0
        return sum(math.comb(n, j) * f**j * (1 - f) ** (n - j) for j in range(i, n + 1))

    probs = np.diff([order_cdf(e, 2) for e in edges])
    counts, _ = np.histogram(r, bins=edges)
    mask = probs * len(r) > 5
    expected = probs[mask] / probs[mask].sum() * counts[mask].sum()
    res = stats.chisquare(counts[mask], expected)
    assert res.pvalue > 0.001


# --- Voronoi ground truth ---------------------------------------------------


def test_voronoi_args_checked():
    rng = np.random.default_rng(0)
    with pytest.raises(ParameterError):
        simulate_voronoi_cells(5e-4, 5e-4 * 4, 2, 10, rng)  # ratio below 3N
    with pytest.raises(ParameterError):
        simulate_voronoi_cells(5e-4, 5e-3, 2, 10, rng, window_half_width=10.0)
    with pytest.raises(ParameterError):
        simulate_voronoi_cells(0.0, 1.0, 2, 10, rng)


def test_scene_users_closer_to_center():
    lam = 0.0005
    scene = draw_voronoi_scene(lam, 10 * lam, default_window(lam), np.random.default_rng(4))
    d = np.linalg.norm(scene.user_points[:, None, :] - scene.bs_points[None, :, :], axis=2)
    own = np.argmin(d, axis=1) == 0
    assert np.allclose(np.sort(d[own, 0]), scene.typical_cell_users)
    assert np.all(d[own, 0][:, None] <= d[own] + 1e-12)


def test_batched_cells_match_scene_by_scene_simulation():
    lam = 0.0005
    fast, drawn = simulate_voronoi_cells(lam, 10 * lam, 2, 3000, np.random.default_rng(8))
    assert fast.shape == (3000, 2)
    assert drawn >= 3000
    assert np.all(np.diff(fast, axis=1) >= 0)
    # the scene-by-scene path uses a full distance matrix, an independent implementation
    rng = np.random.default_rng(18)
    slow = np.array([simulate_voronoi_cell(lam, 10 * lam, 2, rng).values for _ in range(3000)])
    for col in range(2):
        assert stats.ks_2samp(fast[:, col], slow[:, col]).pvalue > 0.001


@pytest.mark.parametrize("n_users, floor", [(2, 0.9), (3, 0.85)])
def test_scene_acceptance_fraction(n_users, floor):
    lam = 0.0005
    r, drawn = simulate_voronoi_cells(lam, 10 * lam, n_users, 20000, np.random.default_rng(9))
    assert len(r) / drawn >= floor


def test_single_user_cell_close_to_approximation():
    lam = 0.0005
    r, _ = simulate_voronoi_cells(lam, 10 * lam, 1, 10**5, np.random.default_rng(10))
    stat = stats.kstest(r[:, 0], lambda x: cdf(PppVoronoi(lam), np.maximum(x, 0))).statistic
    assert stat < 0.02


def test_simulate_single_cell():
    lam = 0.0005
    od = simulate_voronoi_cell(lam, 10 * lam, 3, np.random.default_rng(1))
    assert len(od) == 3
    assert list(od.values) == sorted(od.values)


def test_voronoi_seed_reproducible():
    a, _ = simulate_voronoi_cells(0.001, 0.01, 2, 500, np.random.default_rng(3))
    b, _ = simulate_voronoi_cells(0.001, 0.01, 2, 500, np.random.default_rng(3))
    assert np.array_equal(a, b)
