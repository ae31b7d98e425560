import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entdist.linalg import BipartiteLabel, haar_unitary, random_density, tensor
from entdist.operations import apply_operation, is_trace_preserving
from entdist.protocols import (
    ReductionPlan,
    exact_twirl,
    factor_tracing_fidelity,
    factor_tracing_op,
    monte_carlo_twirl,
    reduce_dimension,
    reduce_dimension_fidelity,
    reduction_plan,
    subspace_measurement_fidelity,
    subspace_measurement_op,
)
from entdist.states import fidelity, isotropic

F_GRID = [round(0.1 * i, 10) for i in range(11)]


def simulate_merged_fidelity(op, k, f):
    ((p, state),) = apply_operation(op, isotropic(k, f))
    assert p == pytest.approx(1.0, abs=1e-9)
    return fidelity(state)


def test_subspace_measurement_spot_value():
    assert subspace_measurement_fidelity(4, 2, 1.0) == pytest.approx(0.625, abs=1e-15)


def test_subspace_measurement_identity_at_full_dimension():
    for f in F_GRID:
        assert subspace_measurement_fidelity(5, 5, f) == pytest.approx(f, abs=1e-15)


def test_subspace_measurement_random_fixed_point():
    # a completely random state comes out completely random
    assert subspace_measurement_fidelity(4, 2, 1 / 16) == pytest.approx(0.25, abs=1e-12)
    op = subspace_measurement_op(4, 2)
    ((_, state),) = apply_operation(op, isotropic(4, 1 / 16))
    assert np.allclose(state.matrix, np.eye(4) / 4, atol=1e-12)


def test_subspace_measurement_grid_matches_simulation():
    for k in range(2, 7):
        for kp in range(1, k + 1):
            op = subspace_measurement_op(k, kp)
            assert is_trace_preserving(op)
            for f in F_GRID:
                sim = simulate_merged_fidelity(op, k, f)
                closed = subspace_measurement_fidelity(k, kp, f)
                assert sim == pytest.approx(closed, abs=1e-9), (k, kp, f)


@given(
    st.integers(2, 6),
    st.integers(1, 6),
    st.floats(0, 1, allow_nan=False),
)
@settings(max_examples=80, deadline=None)
def test_subspace_measurement_dominates_passthrough(k, kp, f):
    if kp > k:
        kp = k
    value = subspace_measurement_fidelity(k, kp, f)
    assert value >= (kp / k) * f - 1e-12
    assert -1e-12 <= value <= 1 + 1e-12


def test_factor_tracing_requires_divisor():
    with pytest.raises(ValueError):
        factor_tracing_op(6, 4)
    with pytest.raises(ValueError):
        factor_tracing_fidelity(6, 4, 0.5)


def test_factor_tracing_fixed_points():
    assert factor_tracing_fidelity(4, 2, 1.0) == 1.0
    assert factor_tracing_fidelity(4, 2, 1 / 16) == pytest.approx(0.25, abs=1e-12)


def test_factor_tracing_grid_matches_simulation():
    for k in range(2, 10):
        for kp in range(1, k + 1):
            if k % kp:
                continue
            op = factor_tracing_op(k, kp)
            assert is_trace_preserving(op)
            for f in F_GRID:
                sim = simulate_merged_fidelity(op, k, f)
                closed = factor_tracing_fidelity(k, kp, f)
                assert sim == pytest.approx(closed, abs=1e-9), (k, kp, f)


def test_factor_tracing_output_is_isotropic():
    for f in (0.0, 0.5, 1.0):
        ((_, state),) = apply_operation(factor_tracing_op(6, 3), isotropic(6, f))
        want = isotropic(3, factor_tracing_fidelity(6, 3, f))
        assert np.allclose(state.matrix, want.matrix, atol=1e-9)


@given(st.integers(2, 9), st.floats(0, 1, allow_nan=False))
@settings(max_examples=60, deadline=None)
def test_factor_tracing_never_decreases_fidelity(k, f):
    for kp in range(1, k + 1):
        if k % kp == 0:
            assert factor_tracing_fidelity(k, kp, f) >= f - 1e-12


def test_exact_twirl_fixes_isotropic_states():
    for k in (2, 3):
        for f in (0.0, 0.6, 1.0):
            rho = isotropic(k, f)
            assert np.allclose(exact_twirl(rho).matrix, rho.matrix, atol=1e-12)


def test_exact_twirl_of_product_basis_state():
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0] = 1
    from entdist.linalg import DensityOperator

    rho = DensityOperator(m, BipartiteLabel(2, 2))
    assert np.allclose(exact_twirl(rho).matrix, isotropic(2, 0.5).matrix, atol=1e-12)


def test_exact_twirl_preserves_fidelity_and_invariance():
    rng = np.random.default_rng(77)
    for k in (2, 3):
        rho = random_density(BipartiteLabel(k, k), rng)
        tw = exact_twirl(rho)
        assert fidelity(tw) == pytest.approx(fidelity(rho), abs=1e-12)
        for _ in range(100):
            u = haar_unitary(k, rng)
            w = tensor(u, u.conj())
            assert np.max(np.abs(w @ tw.matrix @ w.conj().T - tw.matrix)) < 1e-9


def test_monte_carlo_twirl_approaches_exact():
    rng = np.random.default_rng(99)
    for k in (2, 3):
        rho = random_density(BipartiteLabel(k, k), rng)
        mc = monte_carlo_twirl(rho, 10_000, rng)
        assert np.max(np.abs(mc - exact_twirl(rho).matrix)) < 1e-2


def test_reduction_plan_values():
    plan = reduction_plan(5, 2)
    assert plan.stage1_target == 4
    assert plan.guaranteed_fidelity_factor == pytest.approx(4 / 5, abs=1e-15)
    assert plan.guaranteed_fidelity_factor >= plan.coarse_fidelity_factor - 1e-15


def test_reduction_plan_bound_dominates_coarse_form():
    for k in range(2, 10):
        for kp in range(1, k):
            plan = ReductionPlan(k, kp)
            assert plan.guaranteed_fidelity_factor >= plan.coarse_fidelity_factor - 1e-12


def test_reduce_dimension_perfect_input():
    out = reduce_dimension(isotropic(4, 1.0), 2)
    assert fidelity(out) == pytest.approx(1.0, abs=1e-9)
    assert reduce_dimension_fidelity(4, 2, 1.0) == pytest.approx(1.0, abs=1e-12)


def test_reduce_dimension_bound_grid():
    for k in range(2, 7):
        for kp in range(1, k):
            plan = reduction_plan(k, kp)
            for f in F_GRID:
                sim = fidelity(reduce_dimension(isotropic(k, f), kp))
                closed = reduce_dimension_fidelity(k, kp, f)
                assert sim == pytest.approx(closed, abs=1e-9)
                assert sim >= plan.guaranteed_fidelity_factor * f - 1e-9


def test_reduce_dimension_degenerate_zero_fidelity():
    assert fidelity(reduce_dimension(isotropic(5, 0.0), 4)) >= 0.0


def test_protocol_ops_are_separable_and_ppt():
    from entdist.operations import (
        is_ppt_operation,
        natural_product_witness,
        verify_separable_form,
    )

    for op in (subspace_measurement_op(4, 2), factor_tracing_op(6, 2)):
        assert verify_separable_form(op, natural_product_witness(op))
        assert is_ppt_operation(op)
