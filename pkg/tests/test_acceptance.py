"""Acceptance criteria, one test per criterion at its stated tolerance.

Each test prints one pass line on success; failures surface through pytest
with the offending grid point in the assertion message.
"""

import math
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from entdist.bounds import (
    binary_entropy,
    ef_numeric_estimate,
    formation_bounds_isotropic,
    hashing_rate,
    ppt_bound_isotropic,
)
from entdist.distillation import (
    BranchOutcome,
    CompilerConfig,
    ProtocolTrace,
    TraceStep,
    dims_are_powers_of_two,
    power_of_two_transform,
    single_branch_rate,
    tensor_power_compile,
)
from entdist.linalg import BipartiteLabel, DensityOperator, haar_unitary, random_density, tensor
from entdist.operations import (
    QuantumOperation,
    SubOperation,
    apply_operation,
    choi_matrix,
    compose,
    forget,
    is_completely_positive,
    is_ppt_operation,
    is_trace_preserving,
    natural_product_witness,
    ppt_conjugate,
    tensor_operations,
    verify_separable_form,
)
from entdist.protocols import (
    exact_twirl,
    factor_tracing_fidelity,
    factor_tracing_op,
    monte_carlo_twirl,
    reduce_dimension,
    reduction_plan,
    subspace_measurement_fidelity,
    subspace_measurement_op,
)
from entdist.states import fidelity, isotropic, max_entangled_ket
from entdist.verify import _random_operation

F_GRID = [round(0.1 * i, 10) for i in range(11)]


def _passed(number, name):
    print(f"ACCEPTANCE {number:2d} {name}: PASS")


def merged_fidelity(op, k, f):
    ((_, state),) = apply_operation(op, isotropic(k, f))
    return fidelity(state)


def test_criterion_01_protocol1_closed_form():
    start = time.time()
    for k in range(2, 7):
        for kp in range(1, k + 1):
            op = subspace_measurement_op(k, kp)
            for f in F_GRID:
                sim = merged_fidelity(op, k, f)
                closed = subspace_measurement_fidelity(k, kp, f)
                assert abs(sim - closed) <= 1e-9, f"K={k} Kprime={kp} F={f}"
    assert subspace_measurement_fidelity(4, 2, 1.0) == pytest.approx(0.625, abs=1e-15)
    elapsed = time.time() - start
    assert elapsed < 10, f"runtime {elapsed:.1f}s exceeds 10s"
    _passed(1, "protocol-1 closed form")


def test_criterion_02_protocol2_closed_form():
    start = time.time()
    for k in range(2, 10):
        for kp in range(1, k + 1):
            if k % kp:
                continue
            op = factor_tracing_op(k, kp)
            for f in F_GRID:
                sim = merged_fidelity(op, k, f)
                closed = f + (1 - f) * (k * k - kp * kp) / ((k * k - 1) * kp * kp)
                assert abs(sim - closed) <= 1e-9, f"K={k} Kprime={kp} F={f}"
            assert factor_tracing_fidelity(k, kp, 1.0) == 1.0
            random_point = 1 / (k * k)
            assert factor_tracing_fidelity(k, kp, random_point) == pytest.approx(
                1 / (kp * kp), abs=1e-12
            )
    elapsed = time.time() - start
    assert elapsed < 10, f"runtime {elapsed:.1f}s exceeds 10s"
    _passed(2, "protocol-2 closed form")


def test_criterion_03_twirl():
    start = time.time()
    rng = np.random.default_rng(2718)
    for k in (2, 3):
        rho = random_density(BipartiteLabel(k, k), rng)
        tw = exact_twirl(rho)
        assert abs(fidelity(tw) - fidelity(rho)) <= 1e-12, f"fidelity drift K={k}"
        for i in range(100):
            u = haar_unitary(k, rng)
            w = tensor(u, u.conj())
            dev = np.max(np.abs(w @ tw.matrix @ w.conj().T - tw.matrix))
            assert dev <= 1e-9, f"invariance K={k} sample={i}"
        mc = monte_carlo_twirl(rho, 10_000, rng)
        assert np.max(np.abs(mc - tw.matrix)) <= 1e-2, f"monte carlo K={k}"
    elapsed = time.time() - start
    assert elapsed < 60, f"runtime {elapsed:.1f}s exceeds 60s"
    _passed(3, "exact twirl and sampling oracle")


def test_criterion_04_reduction_bound():
    violations = []
    for k in range(2, 7):
        for kp in range(1, k):
            plan = reduction_plan(k, kp)
            fine = plan.guaranteed_fidelity_factor
            coarse = plan.coarse_fidelity_factor
            if fine < coarse - 1e-12:
                violations.append(f"factor K={k} Kprime={kp}")
            for f in F_GRID:
                sim = fidelity(reduce_dimension(isotropic(k, f), kp))
                if sim < fine * f - 1e-9:
                    violations.append(f"K={k} Kprime={kp} F={f}")
    assert not violations, violations
    _passed(4, "dimension-reduction fidelity bound")


def test_criterion_05_formation_bound_chain():
    start = time.time()
    for k in range(2, 7):
        for f in F_GRID:
            gap = ppt_bound_isotropic(k, f) - (f * math.log2(k) - binary_entropy(f))
            expect = (1 - f) * math.log2(k / (k - 1))
            assert abs(gap - expect) <= 1e-12, f"chain K={k} F={f}"
            fb = formation_bounds_isotropic(k, f)
            assert fb.lower <= fb.upper + 1e-12, f"order K={k} F={f}"
    for f in (0.5, 0.7, 0.9, 1.0):
        fb = formation_bounds_isotropic(2, f)
        est = ef_numeric_estimate(isotropic(2, f), seed=0)
        assert fb.lower - 1e-6 <= est <= fb.upper + 1e-4, f"estimate F={f} est={est}"
    elapsed = time.time() - start
    assert elapsed < 120, f"runtime {elapsed:.1f}s exceeds 120s"
    _passed(5, "formation bounds and numerical oracle")


def test_criterion_06_hashing_identity():
    for k in (2, 4, 8, 16):
        for f in [round(0.05 * i, 10) for i in range(1, 20)]:
            raw = hashing_rate(k, f).raw
            identity = (
                (2 * f - 1) * math.log2(k)
                - binary_entropy(f)
                + (1 - f) * math.log2(k * k / (k * k - 1))
            )
            assert abs(raw - identity) <= 1e-12, f"K={k} F={f}"
        assert hashing_rate(k, 1.0).raw == math.log2(k)
    _passed(6, "hashing-rate identity")


def test_criterion_07_operation_algebra():
    rng = np.random.default_rng(424242)
    # completeness and CP via Choi, 200 randomized cases
    for i in range(200):
        d_in = int(rng.integers(2, 5))
        out_dims = [int(rng.integers(1, 4)) for _ in range(int(rng.integers(1, 4)))]
        op = _random_operation(rng, d_in, out_dims)
        dev = np.max(np.abs(op.completeness_sum() - np.eye(d_in)))
        assert dev <= 1e-9, f"completeness case={i}"
        assert is_completely_positive(op.subops[0]), f"cp case={i}"
        total = sum(p for p, _ in apply_operation(op, random_density(d_in, rng)))
        assert abs(total - 1) <= 1e-9, f"probability case={i}"
    # compose/apply commutation, 200 randomized cases
    for i in range(200):
        d_mid = int(rng.integers(2, 4))
        first = _random_operation(rng, int(rng.integers(2, 4)), [d_mid, d_mid])
        follow = {
            j: _random_operation(rng, d_mid, [int(rng.integers(1, 4))])
            for j in range(len(first.subops))
        }
        rho = random_density(first.dim_in, rng)
        composed = apply_operation(compose(first, follow), rho)
        k = 0
        for j, (p, state) in enumerate(apply_operation(first, rho)):
            for q_idx in range(len(follow[j].subops)):
                pc, sc = composed[k]
                k += 1
                if state is None:
                    assert pc <= 1e-9, f"compose-zero case={i}"
                    continue
                q, out = apply_operation(follow[j], state)[q_idx]
                assert abs(pc - p * q) <= 1e-9, f"compose-prob case={i}"
                if out is not None and sc is not None:
                    assert np.max(np.abs(sc.matrix - out.matrix)) <= 1e-9, f"compose case={i}"
    # tensor product rule, 200 randomized cases
    for i in range(200):
        s = _random_operation(rng, 2, [2, 2])
        t = _random_operation(rng, 3, [int(rng.integers(1, 3))])
        rho_s, rho_t = random_density(2, rng), random_density(3, rng)
        joint = DensityOperator(tensor(rho_s.matrix, rho_t.matrix), 6)
        got = [p for p, _ in apply_operation(tensor_operations(s, t), joint)]
        ps = [p for p, _ in apply_operation(s, rho_s)]
        pt = [p for p, _ in apply_operation(t, rho_t)]
        want = [a * b for a in ps for b in pt]
        assert np.max(np.abs(np.array(got) - np.array(want))) <= 1e-9, f"tensor case={i}"
    # forget yields the probability-weighted mixture, 200 randomized cases
    for i in range(200):
        op = _random_operation(rng, 3, [2, 2])
        rho = random_density(3, rng)
        outcomes = apply_operation(op, rho)
        merged = apply_operation(forget(op, [0, 1]), rho)[0]
        mix = sum(p * s.matrix for p, s in outcomes if s is not None)
        assert abs(merged[0] - 1) <= 1e-9, f"forget-prob case={i}"
        assert np.max(np.abs(merged[1].matrix - mix)) <= 1e-9, f"forget case={i}"
    # the entangled-pair creation operation is flagged non-p.p.t.
    ket = max_entangled_ket(2)
    creation = QuantumOperation(
        (SubOperation(tuple(np.outer(ket, np.eye(4)[j]) for j in range(4)), BipartiteLabel(2, 2)),),
        BipartiteLabel(2, 2),
    )
    assert is_trace_preserving(creation)
    assert not is_ppt_operation(creation)
    least = np.linalg.eigvalsh(
        choi_matrix(ppt_conjugate(creation.subops[0], BipartiteLabel(2, 2)))
    )[0]
    assert least <= -0.5 + 1e-9
    # protocol operations verify separable form and p.p.t.
    for op in (subspace_measurement_op(4, 2), factor_tracing_op(4, 2)):
        assert verify_separable_form(op, natural_product_witness(op))
        assert is_ppt_operation(op)
    _passed(7, "operation algebra")


def test_criterion_08_power_of_two_transform():
    trace = ProtocolTrace(
        tuple(
            TraceStep(i, (BranchOutcome(1, 2 ** (3 * i), 1 - Fraction(1, i)),))
            for i in range(1, 41)
        )
    )
    out = power_of_two_transform(trace)
    assert dims_are_powers_of_two(out.trace)
    ratios = out.dim_ratios
    assert all(a >= b - 1e-15 for a, b in zip(ratios[3:], ratios[4:])), "ratio monotone"
    assert ratios[-1] < ratios[3]
    assert single_branch_rate(trace) == pytest.approx(3.0, abs=1e-6)
    assert single_branch_rate(out.trace) == pytest.approx(3.0, abs=1e-6)
    worked = power_of_two_transform(
        ProtocolTrace((TraceStep(10, (BranchOutcome(1, 2**30, Fraction(99, 100)),)),))
    )
    b = worked.trace.steps[0].branches[0]
    assert b.K == 2**26
    assert float(b.F) == 0.928125
    _passed(8, "power-of-two transform")


def test_criterion_09_tensor_power_compiler():
    start = time.time()
    trace = ProtocolTrace(
        (
            TraceStep(
                10,
                (
                    BranchOutcome(Fraction(1, 2), 1024, Fraction(99, 100)),
                    BranchOutcome(Fraction(1, 2), 1, 1),
                ),
            ),
        )
    )
    # margins: p' = 0.45, R' at 99% of (2F-1) log2 K - 1
    cfg = CompilerConfig.from_fractions(trace, 1000, Fraction(9, 10), Fraction(99, 100))
    assert cfg.margins[0][0].p_prime == Fraction(9, 20)
    out = tensor_power_compile(trace, cfg)
    assert out.rate_bound == Fraction(39, 100)
    fails = []
    for k in (10, 100, 1000):
        c = tensor_power_compile(
            trace, CompilerConfig.from_fractions(trace, k, Fraction(9, 10), Fraction(99, 100))
        )
        assert c.steps[0].failure_method == "exact"
        fails.append(c.failure_probability)
    assert fails[0] > fails[1] > fails[2], f"failure not monotone: {fails}"
    big_cfg = CompilerConfig.from_fractions(trace, 10**4, Fraction(9, 10), Fraction(99, 100))
    big = tensor_power_compile(trace, big_cfg)
    target = sum(
        float(m.rate_prime * m.p_prime) for m in big_cfg.margins[0] if m is not None
    ) / 10
    assert abs(big.achieved_rate - target) <= 1e-3
    elapsed = time.time() - start
    assert elapsed < 60, f"runtime {elapsed:.1f}s exceeds 60s"
    _passed(9, "tensor-power compiler")


def test_criterion_10_cli_determinism():
    cmd = [sys.executable, "-m", "entdist.cli", "verify", "--seed", "7"]
    first = subprocess.run(cmd, capture_output=True)
    second = subprocess.run(cmd, capture_output=True)
    assert first.returncode == 0, first.stdout.decode()
    assert second.returncode == 0
    assert first.stdout == second.stdout
    assert b"TOTAL" in first.stdout
    _passed(10, "deterministic verification CLI")
