import numpy as np
import pytest

from bitfuse.errors import GridMismatch, InvalidSpec, NumericalBlowup
from bitfuse.experiments import ks_test
from bitfuse.fusion import centralized_estimates
from bitfuse.models import (
    ModelKind,
    ModelSpec,
    PathStats,
    SensorPaths,
    TimeGrid,
    build_model,
    path_statistics,
    simulate_paths,
)
from bitfuse.timefuncs import TimeFunction

CONST = TimeFunction.constant


def brownian(K=2, x=(1.0, 2.0)):
    return build_model(ModelSpec(kind=ModelKind.BROWNIAN_CONSTANT, K=K, x=x))


# -- build_model ---------------------------------------------------------


def test_brownian_counts_and_total_information():
    m = brownian()
    assert list(m.d_counts) == [0, 0]
    assert m.det_info(1.0) == pytest.approx(5.0)
    assert m.det_info(3.0) == pytest.approx(15.0)


def test_correlated_all_random_cross_counts():
    sig = tuple(tuple(CONST(1.0 if i == j else 0.5) for j in range(3)) for i in range(3))
    m = build_model(ModelSpec(kind=ModelKind.CORRELATED_DIFFUSION, K=3, sigma=sig))
    assert list(m.d_counts) == [2, 2, 2]


def test_gaussian_unit_coefficients_give_linear_information():
    m = build_model(
        ModelSpec(kind=ModelKind.GAUSSIAN_DET_INFO, K=1, b=(CONST(1.0),), rho=((CONST(1.0),),))
    )
    for t in (0.5, 1.0, 7.0):
        assert m.det_info(t) == pytest.approx(t, rel=1e-14)


def test_build_model_rejects_bad_specs():
    with pytest.raises(InvalidSpec):
        build_model(ModelSpec(kind=ModelKind.BROWNIAN_CONSTANT, K=2, x=(1.0, 0.0)))
    with pytest.raises(InvalidSpec):
        build_model(
            ModelSpec(
                kind=ModelKind.BROWNIAN_CONSTANT,
                K=2,
                x=(1.0, 1.0),
                deterministic_cross=((True, True), (False, True)),
            )
        )
    bad_rho = ((CONST(1.0), CONST(2.0)), (CONST(2.0), CONST(1.0)))  # not PSD
    with pytest.raises(InvalidSpec):
        build_model(
            ModelSpec(kind=ModelKind.GAUSSIAN_DET_INFO, K=2, b=(CONST(1.0), CONST(1.0)), rho=bad_rho)
        )
    with pytest.raises(InvalidSpec):
        build_model(ModelSpec(kind=ModelKind.ORNSTEIN_UHLENBECK, K=1, alpha=(0.0,)))


def test_correlated_cannot_flag_nonzero_cross_as_deterministic():
    sig = ((CONST(1.0), CONST(0.0)), (CONST(0.5), CONST(1.0)))
    with pytest.raises(InvalidSpec):
        build_model(
            ModelSpec(
                kind=ModelKind.CORRELATED_DIFFUSION,
                K=2,
                sigma=sig,
                deterministic_cross=((True, True), (True, True)),
            )
        )


# -- simulate_paths ------------------------------------------------------


def test_zero_drift_initial_condition_and_increment_variance():
    m = brownian(K=1, x=(1.0,))
    grid = TimeGrid(1.0, 10)
    p = simulate_paths(m, 0.0, grid, seed=42)
    assert p.Y[0, 0] == 0.0
    incr = np.diff(p.Y[0])
    assert incr.size == 10
    # increments reproduce the seeded draws scaled by sqrt(dt) (up to
    # cumsum/diff rounding)
    z = np.random.default_rng(42).standard_normal((1, 10))
    np.testing.assert_allclose(incr, z[0] * np.sqrt(0.1), rtol=0, atol=1e-12)


def test_mc_mean_of_terminal_value():
    # one sensor, unit weight, drift 2: E[Y_1] = 2
    m = brownian(K=1, x=(1.0,))
    grid = TimeGrid(1.0, 10)
    n = 100_000
    rng = np.random.default_rng(777)
    # identical in law to simulate_paths terminal values, drawn in bulk
    vals = 2.0 + rng.standard_normal((n, 10)).sum(axis=1) * np.sqrt(0.1)
    spot_seeds = [0, 1, 2, 2024]
    for s in spot_seeds:
        p = simulate_paths(m, 2.0, grid, seed=s)
        assert p.Y[0, -1] == pytest.approx(
            2.0 + np.random.default_rng(s).standard_normal((1, 10))[0].sum() * np.sqrt(0.1)
        )
    assert vals.mean() == pytest.approx(2.0, abs=0.02)


def test_ou_drift_is_lambda_times_state():
    spec = ModelSpec(kind=ModelKind.ORNSTEIN_UHLENBECK, K=1, alpha=(1.0,))
    m = build_model(spec)
    grid = TimeGrid(2.0, 200)
    lam = 0.7
    p = simulate_paths(m, lam, grid, seed=9)
    z = np.random.default_rng(9).standard_normal((1, 200))
    dt = grid.dt
    # Euler recursion: increment - lam * y * dt reproduces the noise
    y = p.Y[0]
    recovered = (y[1:] - y[:-1] - lam * 1.0 * y[:-1] * dt) / np.sqrt(1.0 * dt)
    np.testing.assert_allclose(recovered, z[0], rtol=0, atol=1e-12)


def test_square_root_diffusion_stays_defined_and_starts_at_y0():
    spec = ModelSpec(kind=ModelKind.SQUARE_ROOT_DIFFUSION, K=2, x=(1.0, 1.0), y0=(1.0, 2.0))
    m = build_model(spec)
    p = simulate_paths(m, -0.5, TimeGrid(5.0, 5000), seed=3)
    assert p.Y[0, 0] == 1.0 and p.Y[1, 0] == 2.0
    assert np.all(np.isfinite(p.Y))


def test_square_root_diffusion_absorbed_at_zero_start():
    spec = ModelSpec(kind=ModelKind.SQUARE_ROOT_DIFFUSION, K=1, x=(1.0,), y0=(0.0,))
    m = build_model(spec)
    p = simulate_paths(m, 1.0, TimeGrid(1.0, 100), seed=3)
    assert np.all(p.Y == 0.0)


def test_determinism_bitwise():
    for spec, lam in (
        (ModelSpec(kind=ModelKind.BROWNIAN_CONSTANT, K=2, x=(1.0, 2.0)), 0.3),
        (ModelSpec(kind=ModelKind.ORNSTEIN_UHLENBECK, K=2, alpha=(1.0, 0.5)), -0.2),
    ):
        m = build_model(spec)
        grid = TimeGrid(3.0, 300)
        p1 = simulate_paths(m, lam, grid, seed=11)
        p2 = simulate_paths(m, lam, grid, seed=11)
        assert np.array_equal(p1.Y, p2.Y)
        s1 = path_statistics(p1, m)
        s2 = path_statistics(p2, m)
        for name in ("B_i", "A_i", "A_ij", "B", "A", "M"):
            assert np.array_equal(getattr(s1, name), getattr(s2, name))


def test_blowup_detection():
    m = build_model(ModelSpec(kind=ModelKind.ORNSTEIN_UHLENBECK, K=1, alpha=(1.0,)))
    with pytest.raises(NumericalBlowup):
        simulate_paths(m, 100.0, TimeGrid(50.0, 50), seed=1)


# -- path_statistics -----------------------------------------------------


def test_unit_weight_integral_equals_path():
    m = brownian(K=1, x=(1.0,))
    p = simulate_paths(m, 0.5, TimeGrid(2.0, 500), seed=5)
    s = path_statistics(p, m)
    np.testing.assert_allclose(s.B_i[0], p.Y[0], rtol=0, atol=1e-12)


def test_weight_two_information_is_exactly_linear():
    m = brownian(K=1, x=(2.0,))
    grid = TimeGrid(2.0, 500)
    s = path_statistics(simulate_paths(m, 0.5, grid, seed=5), m)
    np.testing.assert_array_equal(s.A_i[0], 4.0 * grid.times())


def test_zero_path_gives_zero_integral_and_score_identity():
    m = brownian(K=2, x=(1.0, 2.0))
    grid = TimeGrid(1.0, 50)
    Y = np.zeros((2, 51))
    p = SensorPaths(grid=grid, Y=Y, lambda_true=0.7, seed=0)
    s = path_statistics(p, m)
    assert np.all(s.B == 0.0)
    np.testing.assert_allclose(s.M, -0.7 * s.A, rtol=0, atol=0)


def test_grid_mismatch_raises():
    m = brownian(K=2, x=(1.0, 2.0))
    p = simulate_paths(m, 0.1, TimeGrid(1.0, 50), seed=1)
    q = SensorPaths(grid=TimeGrid(1.0, 50), Y=np.zeros((2, 50)), lambda_true=0.1, seed=1)
    with pytest.raises(GridMismatch):
        path_statistics(q, m)
    del p


ALL_CATALOG = (
    (ModelSpec(kind=ModelKind.BROWNIAN_CONSTANT, K=2, x=(1.0, -2.0)), 0.4),
    (
        ModelSpec(
            kind=ModelKind.GAUSSIAN_DET_INFO,
            K=2,
            b=(TimeFunction.polynomial((1.0, 0.1)), CONST(0.7)),
            rho=((CONST(1.0), CONST(0.4)), (CONST(0.4), CONST(1.0))),
        ),
        0.4,
    ),
    (ModelSpec(kind=ModelKind.ORNSTEIN_UHLENBECK, K=2, alpha=(1.0, 0.5)), -0.3),
    (ModelSpec(kind=ModelKind.SQUARE_ROOT_DIFFUSION, K=2, x=(1.0, 0.5), y0=(1.0, 1.0)), 0.2),
    (
        ModelSpec(
            kind=ModelKind.CORRELATED_DIFFUSION,
            K=2,
            sigma=((CONST(1.0), CONST(0.3)), (CONST(0.3), CONST(0.8))),
        ),
        0.2,
    ),
)


@pytest.mark.parametrize("spec,lam", ALL_CATALOG, ids=[s.kind.value for s, _ in ALL_CATALOG])
def test_pointwise_identities_all_models(spec, lam):
    m = build_model(spec)
    grid = TimeGrid(4.0, 1000)
    s = path_statistics(simulate_paths(m, lam, grid, seed=77), m)
    scale = 1.0 + np.abs(s.A) + np.abs(s.B)
    # totals decompose into per-sensor pieces
    np.testing.assert_allclose(s.B, s.B_i.sum(axis=0), rtol=0, atol=1e-12 * scale.max())
    cross = np.zeros_like(s.A)
    for i in range(m.K):
        for j in range(m.K):
            if i != j:
                cross = cross + s.A_ij[i, j]
    np.testing.assert_allclose(s.A, s.A_i.sum(axis=0) + cross, rtol=0, atol=1e-12 * scale.max())
    np.testing.assert_allclose(s.M, s.B - lam * s.A, rtol=0, atol=1e-12 * scale.max())
    # information components: nondecreasing diagonal, two-sided cross bound
    assert np.all(np.diff(s.A_i, axis=1) >= 0)
    assert s.A_i[0, 0] == 0.0
    for i in range(m.K):
        for j in range(m.K):
            if i != j:
                bound = 0.5 * (s.A_i[i] + s.A_i[j])
                assert np.all(np.abs(s.A_ij[i, j]) <= bound + 1e-12 * (1 + bound))


def test_score_is_martingale_with_matching_quadratic_variation():
    # terminal score has zero mean and second moment equal to the mean
    # accumulated information, within Monte Carlo error
    for spec, lam in (
        (ModelSpec(kind=ModelKind.BROWNIAN_CONSTANT, K=2, x=(1.0, 2.0)), 0.8),
        (ModelSpec(kind=ModelKind.ORNSTEIN_UHLENBECK, K=1, alpha=(1.0,)), 0.4),
    ):
        m = build_model(spec)
        grid = TimeGrid(2.0, 100)
        n = 10_000
        M_end = np.empty(n)
        A_end = np.empty(n)
        for rep in range(n):
            s = path_statistics(simulate_paths(m, lam, grid, seed=(505, rep)), m)
            M_end[rep] = s.M[-1]
            A_end[rep] = s.A[-1]
        assert abs(M_end.mean()) <= 4.0 * np.sqrt(A_end.mean() / n)
        resid = M_end**2 - A_end
        assert abs(resid.mean()) <= 5.0 * resid.std(ddof=1) / np.sqrt(n)


def test_standardized_centralized_error_is_gaussian_for_deterministic_info():
    rho = ((CONST(1.0), CONST(0.5)), (CONST(0.5), CONST(1.0)))
    specs = (
        ModelSpec(kind=ModelKind.BROWNIAN_CONSTANT, K=2, x=(1.0, 2.0)),
        ModelSpec(kind=ModelKind.GAUSSIAN_DET_INFO, K=2, b=(CONST(1.0), CONST(1.0)), rho=rho),
    )
    for spec in specs:
        m = build_model(spec)
        grid = TimeGrid(1.0, 50)
        n = 10_000
        z = np.empty(n)
        for rep in range(n):
            s = path_statistics(simulate_paths(m, 1.0, grid, seed=(606, rep)), m)
            est = centralized_estimates(s, t=1.0)[0]
            z[rep] = np.sqrt(est.info_used) * (est.value - 1.0)
        D, p = ks_test(z)
        assert p > 0.01, f"{spec.kind}: KS p={p}"
