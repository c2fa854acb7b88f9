import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.integrate import quad

from conftest import naive_pair_count
from geocnet.corrdim import (
    DEFAULT_GRID,
    CorrDimConfig,
    CorrSumCurve,
    RadiusGrid,
    correlation_curve,
    correlation_sum,
    count_pairs_within,
    estimate_d2,
    n_eligible_pairs,
    pair_counts,
    select_linear_region,
)
from geocnet.dynamics import NetworkSpec, simulate
from geocnet.errors import DegenerateAbscissaError, EmptyCurveError, EstimationError, ValidationError


def test_two_point_counts():
    x = [[0.0], [0.5]]
    assert count_pairs_within(x, 1.0) == 1
    assert count_pairs_within(x, 0.4) == 0
    # strict inequality at the boundary
    assert count_pairs_within(x, 0.5) == 0


def test_random_cloud_matches_naive():
    x = np.random.default_rng(0).random((100, 2))
    assert count_pairs_within(x, 0.1) == naive_pair_count(x, 0.1)


clouds = st.integers(2, 60).flatmap(
    lambda n: st.integers(1, 5).flatmap(
        lambda d: arrays(np.float64, (n, d), elements=st.floats(-2, 2, allow_nan=False))
    )
)


@given(clouds, st.floats(1e-3, 3.0), st.sampled_from(["max", "euclidean"]))
def test_pair_count_oracle_property(x, eps, norm):
    assert count_pairs_within(x, eps, norm) == naive_pair_count(x, eps, norm)


@given(clouds, st.integers(1, 4))
def test_theiler_window_matches_naive(x, w):
    r = DEFAULT_GRID.radii
    got = pair_counts(x, r, theiler=w)
    assert got.tolist() == [naive_pair_count(x, e, theiler=w) for e in r]


def test_ties_on_grid_radii_are_exact():
    # coordinates on a lattice produce distances equal to grid radii
    grid = RadiusGrid(0.05, 0.6, 11)
    x = np.round(np.random.default_rng(4).random((300, 3)) * 20) / 20
    got = pair_counts(x, grid.radii)
    assert got.tolist() == [naive_pair_count(x, e) for e in grid.radii]


def test_kdtree_backend_agrees():
    x = np.random.default_rng(1).random((400, 3))
    for eps in (0.05, 0.2, 0.7):
        for norm in ("max", "euclidean"):
            assert count_pairs_within(x, eps, norm, backend="kdtree") == \
                count_pairs_within(x, eps, norm)


def test_correlation_sum_examples():
    x = np.random.default_rng(2).random((50, 2))
    assert correlation_sum(x, 2.0) == 1.0
    assert correlation_sum([[0.0], [0.3], [1.0]], 0.5) == pytest.approx(1 / 3, abs=1e-15)
    d = np.abs(x[:, None] - x[None]).max(axis=2)
    dmin = d[np.triu_indices(50, 1)].min()
    assert correlation_sum(x, dmin) == 0.0


def test_eligible_pairs():
    assert n_eligible_pairs(5) == 10
    assert n_eligible_pairs(5, 1) == 6
    assert n_eligible_pairs(3, 5) == 0


@given(clouds, st.floats(0.01, 1.0), st.floats(0.01, 1.0))
def test_monotone_in_radius(x, e1, e2):
    lo, hi = sorted((e1, e2))
    assert correlation_sum(x, lo) <= correlation_sum(x, hi)


@given(clouds, st.randoms(use_true_random=False))
def test_point_and_coordinate_permutation_invariance(x, rnd):
    idx = list(range(x.shape[0]))
    rnd.shuffle(idx)
    r = [0.1, 0.5, 1.3]
    base = pair_counts(x, r)
    assert np.array_equal(pair_counts(x[idx], r), base)
    assert np.array_equal(pair_counts(x[:, ::-1], r), base)


@given(st.integers(2, 80), st.integers(1, 4), st.integers(-8, 8), st.integers(0, 2**32 - 1))
def test_translation_invariance(n, d, shift, seed):
    # dyadic coordinates and integer shifts keep every difference exact
    x = np.random.default_rng(seed).integers(0, 64, (n, d)) / 64.0
    r = DEFAULT_GRID.radii
    assert np.array_equal(pair_counts(x + shift, r), pair_counts(x, r))


def test_radius_grid():
    r = DEFAULT_GRID.radii
    assert r.size == 50 and r[0] == 0.0562
    assert np.allclose(np.diff(r), (0.630 - 0.0562) / 50)
    assert r[-1] < 0.630
    log = RadiusGrid(0.01, 1.0, 4, "log").radii
    assert np.allclose(np.diff(np.log(log)), np.log(100) / 4)
    for bad in ((0.0, 1.0, 5), (0.5, 0.4, 5), (0.1, 1.0, 1)):
        with pytest.raises(ValidationError):
            RadiusGrid(*bad)


def test_curve_above_diameter_is_flat():
    x = np.random.default_rng(3).random((40, 2)) * 0.01
    curve = correlation_curve(x)
    assert np.all(curve.ln_c == 0.0) and curve.n_dropped == 0


def test_curve_drops_empty_radii():
    x = np.array([[0.0], [0.1], [0.9]])
    curve = correlation_curve(x)
    assert curve.n_dropped == int(np.sum(DEFAULT_GRID.radii <= 0.1))
    assert np.all(np.diff(curve.ln_c) >= 0)


def test_empty_curve_error_names_range():
    with pytest.raises(EmptyCurveError, match="0.0562"):
        correlation_curve([[0.0], [0.95]])


def test_logistic_curve_has_fifty_points():
    panel = simulate(NetworkSpec(np.zeros((1, 1))), t_keep=10000, seed=11)
    curve = correlation_curve(panel.values[0])
    assert curve.ln_eps.size == 50 and np.all(np.isfinite(curve.ln_c))
    assert curve.to_csv().startswith("ln_eps,ln_c\n")


def _line_curve(slope, intercept, shift=0.0):
    x = np.log(DEFAULT_GRID.radii) + shift
    return CorrSumCurve(x, slope * x + intercept)


def test_exact_line_fit():
    est = estimate_d2(_line_curve(2.0, 1.0))
    assert est.d2 == pytest.approx(2.0, abs=1e-12)
    assert est.intercept == pytest.approx(1.0, abs=1e-12)
    assert est.residual_sum < 1e-20 and est.n_points_used == 50


def test_scale_covariance_of_fit():
    base = estimate_d2(_line_curve(1.7, -0.3))
    for s in (0.5, 3.0, 40.0):
        moved = estimate_d2(_line_curve(1.7, -0.3, np.log(s)))
        assert abs(moved.d2 - base.d2) < 1e-9


def test_fit_errors():
    with pytest.raises(EstimationError):
        estimate_d2(CorrSumCurve(np.array([0.1]), np.array([0.2])))
    with pytest.raises(DegenerateAbscissaError):
        estimate_d2(CorrSumCurve(np.zeros(3), np.arange(3.0)))
    with pytest.raises(ValidationError):
        estimate_d2(_line_curve(1, 0), region="middle")


def _uniform_full_range_slope(m):
    # for iid uniform coordinates the max-norm correlation sum is (2e - e^2)^m
    r = DEFAULT_GRID.radii
    return np.polyfit(np.log(r), m * np.log(2 * r - r * r), 1)[0]


@pytest.mark.parametrize("m,tol", [(1, 0.01), (2, 0.02), (3, 0.03)])
def test_full_range_fit_matches_finite_box_oracle(m, tol):
    x = np.random.default_rng(20 + m).random((10000, m))
    d2 = CorrDimConfig().estimate(x).d2
    assert d2 == pytest.approx(_uniform_full_range_slope(m), abs=tol)
    assert d2 <= m + 0.2


def test_finite_box_oracle_values():
    # frozen from the closed form above
    assert _uniform_full_range_slope(1) == pytest.approx(0.848971, abs=1e-6)
    assert _uniform_full_range_slope(3) == pytest.approx(2.546912, abs=1e-6)


def _arcsine_corrsum(eps):
    # P(|X - Y| < eps) for X, Y iid with density 1 / (pi sqrt(x (1 - x)))
    def cdf(v):
        return 2 / np.pi * np.arcsin(np.sqrt(min(max(v, 0.0), 1.0)))

    def integrand(u):
        s = np.sin(u) ** 2
        return 2 / np.pi * (cdf(s + eps) - cdf(s - eps))

    return quad(integrand, 0, np.pi / 2, limit=200, epsabs=1e-13)[0]


def test_logistic_map_full_range_fit_matches_invariant_density():
    r = DEFAULT_GRID.radii
    oracle = np.polyfit(np.log(r), np.log([_arcsine_corrsum(e) for e in r]), 1)[0]
    assert oracle == pytest.approx(0.74494, abs=1e-4)
    panel = simulate(NetworkSpec(np.zeros((1, 1))), t_keep=10000, seed=5)
    assert CorrDimConfig().estimate(panel.values[0]).d2 == pytest.approx(oracle, abs=0.01)


def test_linear_region_selector_on_kinked_curve():
    x = np.linspace(-3, 0, 40)
    y = np.where(x < -1.5, 2 * x, 2 * -1.5 + 0.5 * (x + 1.5))
    a, b = select_linear_region(CorrSumCurve(x, y))
    assert b - a >= 6
    fitted = estimate_d2(CorrSumCurve(x, y), region="auto").d2
    assert fitted == pytest.approx(2.0, abs=1e-9) or fitted == pytest.approx(0.5, abs=1e-9)


def test_config_round_trip():
    cfg = CorrDimConfig(RadiusGrid(0.1, 0.5, 20, "log"), "euclidean", 2, "auto")
    assert CorrDimConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValidationError):
        CorrDimConfig(norm="manhattan")


def test_d2_nonnegative_for_constant_cloud():
    est = CorrDimConfig().estimate(np.full((30, 2), 0.4))
    assert est.d2 == 0.0
