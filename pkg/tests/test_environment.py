import numpy as np
import pytest
import scipy.sparse.linalg as spla
from hypothesis import given, settings, strategies as st

from ducb_seek.environment import (ConvectionDiffusionParams, FieldState, Grid, Source,
                                   TransitionModel, build_convection_diffusion, step_state,
                                   validate_dynamics_bounds)
from ducb_seek.errors import ConfigError, StructuralError


def test_grid_row_major():
    g = Grid(4)
    assert g.n_cells == 16
    assert g.coords(6) == (1, 2)
    assert g.index(1, 2) == 6
    seen = {g.coords(i) for i in range(g.n_cells)}
    assert len(seen) == 16
    with pytest.raises(StructuralError):
        g.coords(16)


@pytest.mark.parametrize("A, phi, expected", [
    (np.eye(3), [1, 2, 3], [1, 2, 3]),
    (2 * np.eye(3), [1, 0, 4], [2, 0, 8]),
])
def test_step_state_examples(A, phi, expected):
    out = step_state(TransitionModel.constant(A), FieldState(np.array(phi, float), 4))
    assert np.array_equal(out.values, expected)
    assert out.k == 5


def test_step_state_dimension_mismatch():
    with pytest.raises(StructuralError):
        step_state(TransitionModel.constant(np.eye(3)), FieldState(np.ones(4)))


def test_step_state_clamps_and_warns(caplog):
    A = np.array([[1.0, -2.0], [0.0, 1.0]])
    out = step_state(TransitionModel.constant(A), FieldState(np.array([1.0, 1.0])))
    assert np.array_equal(out.values, [0.0, 1.0])
    assert "clamping" in caplog.text


def test_point_mass_diffusion_stencil():
    g = Grid(3)
    model = build_convection_diffusion(ConvectionDiffusionParams(diffusivity=0.1), g)
    phi = np.zeros(9)
    phi[4] = 1.0
    out = step_state(model, FieldState(phi)).values
    assert out[4] == pytest.approx(0.6, abs=1e-15)
    for nb in (1, 3, 5, 7):
        assert out[nb] == pytest.approx(0.1, abs=1e-15)
    for corner in (0, 2, 6, 8):
        assert out[corner] == 0.0


def test_no_transport_is_identity():
    model = build_convection_diffusion(ConvectionDiffusionParams(diffusivity=0.0), Grid(4))
    assert np.array_equal(model.dense_matrix_at(1), np.eye(16))


def test_interior_row_sums_to_one_pure_diffusion():
    g = Grid(5)
    A = build_convection_diffusion(ConvectionDiffusionParams(diffusivity=0.2), g).dense_matrix_at(1)
    interior = g.index(2, 2)
    assert A[interior].sum() == pytest.approx(1.0, abs=1e-15)
    assert A[interior, interior] == pytest.approx(1 - 4 * 0.2)


def test_cfl_violation_is_config_error():
    # dt * 4 * diffusivity / dx^2 = 1.2
    with pytest.raises(ConfigError, match="CFL"):
        build_convection_diffusion(ConvectionDiffusionParams(diffusivity=0.3, dt=1.0), Grid(4))


def test_upwind_moves_mass_downstream():
    g = Grid(5)
    model = build_convection_diffusion(ConvectionDiffusionParams(0.0, velocity_x=0.5), g)
    phi = np.zeros(25)
    phi[g.index(2, 2)] = 1.0
    out = step_state(model, FieldState(phi)).values
    assert out[g.index(2, 3)] == pytest.approx(0.5)
    assert out[g.index(2, 1)] == 0.0
    # zero-flux wall: mass at the downstream wall stays put
    phi = np.zeros(25)
    phi[g.index(2, 4)] = 1.0
    assert step_state(model, FieldState(phi)).values[g.index(2, 4)] == pytest.approx(1.0)


def test_sources_switch_off_after_until_step():
    g = Grid(3)
    params = ConvectionDiffusionParams(0.0, sources=(Source(4, 2.0, until_step=2),), dt=0.5)
    model = build_convection_diffusion(params, g)
    s = FieldState(np.zeros(9))
    vals = []
    for _ in range(4):
        s = step_state(model, s)
        vals.append(s.values[4])
    assert vals == [1.0, 2.0, 2.0, 2.0]


cd_params = st.builds(
    lambda d, ux, uy, frac: (d, ux, uy, frac),
    st.floats(0.0, 0.3), st.floats(-1, 1), st.floats(-1, 1), st.floats(0.05, 0.95))


def _params_under_cfl(d, ux, uy, frac, sources=()):
    rate = 4 * d + abs(ux) + abs(uy)
    dt = frac / rate if rate > 0 else 1.0
    return ConvectionDiffusionParams(d, ux, uy, tuple(sources), dt=dt)


@settings(max_examples=40, deadline=None)
@given(cd_params, st.integers(2, 7))
def test_mass_conserved_without_sources(p, side):
    g = Grid(side)
    model = build_convection_diffusion(_params_under_cfl(*p), g)
    phi = np.random.default_rng(side).random(g.n_cells)
    s = FieldState(phi)
    total = phi.sum()
    for _ in range(5):
        s = step_state(model, s)
        assert abs(s.values.sum() - total) <= 1e-9 * total
        total = s.values.sum()


@settings(max_examples=40, deadline=None)
@given(cd_params, st.integers(2, 7))
def test_generated_matrices_are_invertible(p, side):
    g = Grid(side)
    A = build_convection_diffusion(_params_under_cfl(*p), g).matrix_at(1)
    assert A.min() >= 0
    x = spla.splu(A.tocsc()).solve(np.ones(g.n_cells))
    assert np.all(np.isfinite(x))


def test_propagation_consistency(rng):
    n = 6
    # nonnegative matrices keep the field positive, so no clamping interferes
    mats = [np.eye(n) + 0.2 * rng.random((n, n)) for _ in range(8)]
    model = TransitionModel.from_sequence(mats)
    phi0 = rng.random(n) + 5
    s = FieldState(phi0, 0)
    for _ in range(3):
        s = step_state(model, s)
    t = s.k + 1
    start = s.values
    for k in range(t, len(mats) + 1):
        s = step_state(model, s)
        P = np.eye(n)
        for j in range(t, k + 1):
            P = mats[j - 1] @ P
        direct = P @ start
        assert np.linalg.norm(s.values - direct) <= 1e-10 * np.linalg.norm(direct)


def test_bounds_identity():
    b = validate_dynamics_bounds(TransitionModel.constant(np.eye(4)), 10)
    assert (b.alpha_min, b.alpha_max) == pytest.approx((1.0, 1.0))
    assert b.ok


def test_bounds_scaled_identity():
    lo, hi, _ = validate_dynamics_bounds(TransitionModel.constant(2 * np.eye(3)), 2)
    assert (lo, hi) == pytest.approx((4.0, 16.0))
    # same answer through the time-varying path
    lo2, hi2, _ = validate_dynamics_bounds(TransitionModel.from_sequence([2 * np.eye(3)] * 2), 2)
    assert (lo2, hi2) == pytest.approx((4.0, 16.0))


def test_bounds_permutation():
    P = np.eye(5)[[2, 0, 4, 1, 3]]
    lo, hi, _ = validate_dynamics_bounds(TransitionModel.constant(P), 6)
    assert (lo, hi) == pytest.approx((1.0, 1.0))


def test_bounds_reports_declared_violation_and_singularity():
    model = TransitionModel.constant(2 * np.eye(2), alpha_bounds=(1.0, 5.0))
    b = validate_dynamics_bounds(model, 2)
    assert not b.ok
    assert any("above declared" in v for v in b.violations)
    sing = validate_dynamics_bounds(TransitionModel.constant(np.diag([1.0, 0.0])), 1)
    assert any("singular" in v for v in sing.violations)
