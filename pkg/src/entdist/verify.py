"""Self-verification suites: closed forms against brute-force simulation,
bound identities on grids, operation-algebra properties, and the trace
transforms on synthetic fixtures.

Each suite returns per-check counts and names any failing grid point, so a
red run is diagnosable from the report alone.  All randomness flows from one
seeded generator per run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import bounds as bnd
from . import distillation as dst
from . import protocols as pro
from .linalg import BipartiteLabel, DensityOperator, haar_unitary, random_density, tensor
from .operations import (
    QuantumOperation,
    SubOperation,
    apply_operation,
    choi_matrix,
    compose,
    forget,
    identity_operation,
    is_completely_positive,
    is_ppt_operation,
    is_trace_preserving,
    natural_product_witness,
    ppt_conjugate,
    tensor_operations,
    verify_separable_form,
)
from .states import fidelity, isotropic, max_entangled_ket

F_GRID = [round(0.1 * i, 10) for i in range(11)]


@dataclass
class SuiteResult:
    name: str
    checks: int = 0
    failures: list[str] = field(default_factory=list)

    def check(self, ok: bool, point: str) -> None:
        self.checks += 1
        if not ok:
            self.failures.append(point)

    @property
    def passed(self) -> bool:
        return not self.failures


def _suite_protocol1(rng: np.random.Generator, fidelity_bias: float = 0.0) -> SuiteResult:
    res = SuiteResult("protocol1-closed-form")
    for k in range(2, 7):
        for kp in range(1, k + 1):
            op = pro.subspace_measurement_op(k, kp)
            for f in F_GRID:
                ((p, state),) = apply_operation(op, isotropic(k, f))
                sim = fidelity(state)
                closed = pro.subspace_measurement_fidelity(k, kp, f) + fidelity_bias
                res.check(abs(sim - closed) <= 1e-9, f"K={k} Kprime={kp} F={f}")
                res.check(closed - fidelity_bias >= (kp / k) * f - 1e-12,
                          f"lower-bound K={k} Kprime={kp} F={f}")
    res.check(
        abs(pro.subspace_measurement_fidelity(4, 2, 1.0) - 0.625) <= 1e-15, "spot K=4 Kprime=2 F=1"
    )
    return res


def _suite_protocol2(rng: np.random.Generator) -> SuiteResult:
    res = SuiteResult("protocol2-closed-form")
    for k in range(2, 10):
        for kp in range(1, k + 1):
            if k % kp:
                continue
            op = pro.factor_tracing_op(k, kp)
            for f in F_GRID:
                ((p, state),) = apply_operation(op, isotropic(k, f))
                sim = fidelity(state)
                closed = pro.factor_tracing_fidelity(k, kp, f)
                res.check(abs(sim - closed) <= 1e-9, f"K={k} Kprime={kp} F={f}")
                res.check(closed >= f - 1e-12, f"monotone K={k} Kprime={kp} F={f}")
    res.check(pro.factor_tracing_fidelity(4, 2, 1.0) == 1.0, "fixed-point K=4 Kprime=2 F=1")
    return res


def _suite_twirl(rng: np.random.Generator) -> SuiteResult:
    res = SuiteResult("twirl")
    for k in (2, 3):
        rho = random_density(BipartiteLabel(k, k), rng)
        tw = pro.exact_twirl(rho)
        res.check(abs(fidelity(tw) - fidelity(rho)) <= 1e-12, f"fidelity-preservation K={k}")
        for i in range(100):
            u = haar_unitary(k, rng)
            w = tensor(u, u.conj())
            conj = w @ tw.matrix @ w.conj().T
            res.check(np.max(np.abs(conj - tw.matrix)) <= 1e-9, f"invariance K={k} sample={i}")
        mc = pro.monte_carlo_twirl(rho, 10_000, rng)
        res.check(
            float(np.max(np.abs(mc - tw.matrix))) <= 1e-2, f"monte-carlo K={k} n=10000"
        )
    return res


def _suite_lemma2(rng: np.random.Generator) -> SuiteResult:
    res = SuiteResult("lemma2-bound")
    for k in range(2, 7):
        for kp in range(1, k):
            plan = pro.reduction_plan(k, kp)
            res.check(
                plan.guaranteed_fidelity_factor >= plan.coarse_fidelity_factor - 1e-12,
                f"factor K={k} Kprime={kp}",
            )
            for f in F_GRID:
                sim = fidelity(pro.reduce_dimension(isotropic(k, f), kp))
                res.check(
                    sim >= plan.guaranteed_fidelity_factor * f - 1e-9,
                    f"K={k} Kprime={kp} F={f}",
                )
    return res


def _suite_lemma1(rng: np.random.Generator, seed: int = 0) -> SuiteResult:
    res = SuiteResult("lemma1-chain")
    for k in range(2, 7):
        for f in F_GRID:
            chain = bnd.ppt_bound_isotropic(k, f) - (
                f * math.log2(k) - bnd.binary_entropy(f)
            )
            expect = (1 - f) * math.log2(k / (k - 1))
            res.check(abs(chain - expect) <= 1e-12, f"chain K={k} F={f}")
            fb = bnd.formation_bounds_isotropic(k, f)
            res.check(fb.lower <= fb.upper + 1e-12, f"order K={k} F={f}")
    for f in (0.5, 0.7, 0.9, 1.0):
        fb = bnd.formation_bounds_isotropic(2, f)
        est = bnd.ef_numeric_estimate(isotropic(2, f), seed=seed)
        res.check(
            fb.lower - 1e-6 <= est <= fb.upper + 1e-4, f"ef-estimate K=2 F={f} est={est:.6f}"
        )
    return res


def _suite_lemma3(rng: np.random.Generator) -> SuiteResult:
    res = SuiteResult("lemma3-identity")
    for k in (2, 4, 8, 16):
        for f in [round(0.05 * i, 10) for i in range(1, 20)]:
            raw = bnd.hashing_rate(k, f).raw
            identity = (
                (2 * f - 1) * math.log2(k)
                - bnd.binary_entropy(f)
                + (1 - f) * math.log2(k * k / (k * k - 1))
            )
            res.check(abs(raw - identity) <= 1e-12, f"identity K={k} F={f}")
            res.check(
                raw >= (2 * f - 1) * math.log2(k) - bnd.binary_entropy(f) - 1e-12,
                f"chain K={k} F={f}",
            )
        res.check(bnd.hashing_rate(k, 1.0).raw == math.log2(k), f"endpoint K={k} F=1")
    return res


def _random_operation(
    rng: np.random.Generator, d_in: int, out_dims: list[int]
) -> QuantumOperation:
    """Random trace-preserving measuring operation via a sliced isometry."""
    kraus_counts = [rng.integers(1, 3) for _ in out_dims]
    rows = sum(d * c for d, c in zip(out_dims, kraus_counts))
    rows = max(rows, d_in)
    g = rng.standard_normal((rows, d_in)) + 1j * rng.standard_normal((rows, d_in))
    q, _ = np.linalg.qr(g)
    subs = []
    offset = 0
    for d, c in zip(out_dims, kraus_counts):
        kraus = []
        for _ in range(c):
            kraus.append(q[offset : offset + d, :])
            offset += d
        subs.append(SubOperation(tuple(kraus), d))
    # any leftover isometry rows join the last branch to keep completeness
    d_last = out_dims[-1]
    extra = []
    while offset < rows:
        take = min(d_last, rows - offset)
        pad = np.zeros((d_last, d_in), dtype=complex)
        pad[:take, :] = q[offset : offset + take, :]
        extra.append(pad)
        offset += take
    if extra:
        last = subs[-1]
        subs[-1] = SubOperation(last.kraus + tuple(extra), last.out_label)
    return QuantumOperation(tuple(subs), d_in)


def _suite_operations(rng: np.random.Generator) -> SuiteResult:
    res = SuiteResult("operation-algebra")
    # probability conservation on 200 randomized cases
    for i in range(200):
        d_in = int(rng.integers(2, 5))
        out_dims = [int(rng.integers(1, 4)) for _ in range(int(rng.integers(1, 4)))]
        op = _random_operation(rng, d_in, out_dims)
        res.check(is_trace_preserving(op), f"completeness case={i}")
        rho = random_density(d_in, rng)
        total = sum(p for p, _ in apply_operation(op, rho))
        res.check(abs(total - 1) <= 1e-9, f"probability-sum case={i}")
    # compose/apply commutation and tensor product rule on smaller batches
    for i in range(40):
        d_mid = int(rng.integers(2, 4))
        first = _random_operation(rng, int(rng.integers(2, 4)), [d_mid, d_mid])
        follow = {
            j: _random_operation(rng, d_mid, [int(rng.integers(1, 4))])
            for j in range(len(first.subops))
        }
        rho = random_density(first.dim_in, rng)
        composed = apply_operation(compose(first, follow), rho)
        staged = []
        for j, (p, state) in enumerate(apply_operation(first, rho)):
            if state is None:
                for sub in follow[j].subops:
                    staged.append((0.0, None))
                continue
            for q, out in apply_operation(follow[j], state):
                staged.append((p * q, out))
        res.check(len(composed) == len(staged), f"compose-branch-count case={i}")
        for (pc, sc), (ps, ss) in zip(composed, staged):
            res.check(abs(pc - ps) <= 1e-9, f"compose-prob case={i}")
            if sc is not None and ss is not None:
                res.check(
                    np.max(np.abs(sc.matrix - ss.matrix)) <= 1e-9, f"compose-state case={i}"
                )
    for i in range(40):
        s = _random_operation(rng, 2, [int(rng.integers(1, 3)) for _ in range(2)])
        t = _random_operation(rng, int(rng.integers(2, 4)), [int(rng.integers(1, 3))])
        rho_s = random_density(s.dim_in, rng)
        rho_t = random_density(t.dim_in, rng)
        joint = DensityOperator(tensor(rho_s.matrix, rho_t.matrix), s.dim_in * t.dim_in)
        got = apply_operation(tensor_operations(s, t), joint)
        ps = [p for p, _ in apply_operation(s, rho_s)]
        pt = [p for p, _ in apply_operation(t, rho_t)]
        want = [a * b for a in ps for b in pt]
        for (g, _), w in zip(got, want):
            res.check(abs(g - w) <= 1e-9, f"tensor-product-rule case={i}")
    # forget yields the probability-weighted mixture
    for i in range(20):
        op = _random_operation(rng, 3, [2, 2])
        rho = random_density(3, rng)
        outcomes = apply_operation(op, rho)
        merged = apply_operation(forget(op, [0, 1]), rho)
        mix = sum(p * s.matrix for p, s in outcomes if s is not None)
        res.check(abs(merged[0][0] - 1) <= 1e-9, f"forget-prob case={i}")
        res.check(np.max(np.abs(merged[0][1].matrix - mix)) <= 1e-9, f"forget-mix case={i}")
    # CP via Choi agrees with output positivity (necessary condition)
    for i in range(20):
        op = _random_operation(rng, 3, [3])
        sub = op.subops[0]
        res.check(is_completely_positive(sub), f"cp-choi case={i}")
        for _ in range(5):
            out = sub.apply_raw(random_density(3, rng).matrix)
            res.check(
                float(np.linalg.eigvalsh((out + out.conj().T) / 2)[0]) >= -1e-9,
                f"cp-output case={i}",
            )
    # creation of a maximally entangled pair (trace and replace) is not p.p.t.
    ket = max_entangled_ket(2)
    creation = QuantumOperation(
        (
            SubOperation(
                tuple(np.outer(ket, np.eye(4)[j]) for j in range(4)),
                BipartiteLabel(2, 2),
            ),
        ),
        BipartiteLabel(2, 2),
    )
    res.check(is_trace_preserving(creation), "creation-tp")
    res.check(not is_ppt_operation(creation), "creation-non-ppt")
    ppt_min = float(
        np.linalg.eigvalsh(choi_matrix(ppt_conjugate(creation.subops[0], BipartiteLabel(2, 2))))[0]
    )
    res.check(ppt_min <= -0.5 + 1e-9, "creation-choi-eigenvalue")
    # the protocol operations are local: separable form verifies, p.p.t. holds
    for k, kp, op_f in ((4, 2, pro.subspace_measurement_op), (4, 2, pro.factor_tracing_op)):
        op = op_f(k, kp)
        res.check(verify_separable_form(op, natural_product_witness(op)), f"separable {op_f.__name__}")
        res.check(is_ppt_operation(op), f"ppt {op_f.__name__}")
    res.check(is_ppt_operation(identity_operation(BipartiteLabel(2, 2))), "identity-ppt")
    return res


def _suite_theorem2(rng: np.random.Generator) -> SuiteResult:
    res = SuiteResult("theorem2-transform")
    steps = tuple(
        dst.TraceStep(i, (dst.BranchOutcome(1, 2 ** (3 * i), 1 - Fraction(1, i)),))
        for i in range(1, 41)
    )
    trace = dst.ProtocolTrace(steps)
    out = dst.power_of_two_transform(trace)
    res.check(dst.dims_are_powers_of_two(out.trace), "powers-of-two")
    ratios = out.dim_ratios
    res.check(
        all(a >= b - 1e-15 for a, b in zip(ratios[3:], ratios[4:])), "ratios-monotone-beyond-4"
    )
    orig_rate = dst.single_branch_rate(trace)
    new_rate = dst.single_branch_rate(out.trace)
    res.check(orig_rate is not None and abs(orig_rate - 3) <= 1e-6, f"orig-rate {orig_rate}")
    res.check(new_rate is not None and abs(new_rate - 3) <= 1e-6, f"transformed-rate {new_rate}")
    worked = dst.power_of_two_transform(
        dst.ProtocolTrace((dst.TraceStep(10, (dst.BranchOutcome(1, 2**30, Fraction(99, 100)),)),))
    )
    b = worked.trace.steps[0].branches[0]
    res.check(b.K == 2**26, f"worked-dimension {b.K}")
    res.check(float(b.F) == 0.928125, f"worked-fidelity {float(b.F)}")
    return res


def _fixture_trace() -> dst.ProtocolTrace:
    return dst.ProtocolTrace(
        (
            dst.TraceStep(
                10,
                (
                    dst.BranchOutcome(Fraction(1, 2), 1024, Fraction(99, 100)),
                    dst.BranchOutcome(Fraction(1, 2), 1, 1),
                ),
            ),
        )
    )


def _suite_theorem3(rng: np.random.Generator) -> SuiteResult:
    res = SuiteResult("theorem3-compiler")
    trace = _fixture_trace()
    cfg = dst.CompilerConfig.from_fractions(trace, 1000, Fraction(9, 10), Fraction(99, 100))
    out = dst.tensor_power_compile(trace, cfg)
    res.check(out.rate_bound == Fraction(39, 100), f"rate-bound {out.rate_bound}")
    fails = []
    for k in (10, 100, 1000):
        c = dst.tensor_power_compile(
            trace, dst.CompilerConfig.from_fractions(trace, k, Fraction(9, 10), Fraction(99, 100))
        )
        res.check(c.steps[0].failure_method == "exact", f"exact-method k={k}")
        fails.append(c.failure_probability)
    res.check(fails[0] > fails[1] > fails[2], f"failure-monotone {fails}")
    big = dst.tensor_power_compile(
        trace, dst.CompilerConfig.from_fractions(trace, 10**4, Fraction(9, 10), Fraction(99, 100))
    )
    m = big.steps[0]
    target = sum(
        float(mm.rate_prime * mm.p_prime)
        for mm in dst.CompilerConfig.from_fractions(
            trace, 10**4, Fraction(9, 10), Fraction(99, 100)
        ).margins[0]
        if mm is not None
    ) / 10
    res.check(abs(m.achieved_rate - target) <= 1e-3, f"achieved-rate {m.achieved_rate}")
    res.check(
        float(out.rate_bound) <= target + 0.5 / 10 + 1e-9, "bound-below-sup"
    )
    return res


SUITES = {
    "protocol1-closed-form": _suite_protocol1,
    "protocol2-closed-form": _suite_protocol2,
    "twirl": _suite_twirl,
    "lemma2-bound": _suite_lemma2,
    "lemma1-chain": _suite_lemma1,
    "lemma3-identity": _suite_lemma3,
    "operation-algebra": _suite_operations,
    "theorem2-transform": _suite_theorem2,
    "theorem3-compiler": _suite_theorem3,
}


def run_suites(
    seed: int = 0,
    suites: list[str] | None = None,
    protocol1_bias: float = 0.0,
) -> list[SuiteResult]:
    """Run the named suites (all by default) with one seeded generator.

    protocol1_bias perturbs the closed form inside the first suite; it exists
    so the harness contract (naming the failed grid point) stays testable.
    """
    names = suites if suites is not None else list(SUITES)
    for name in names:
        if name not in SUITES:
            raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    rng = np.random.default_rng(seed)
    results = []
    for name in names:
        fn = SUITES[name]
        if name == "protocol1-closed-form":
            results.append(fn(rng, fidelity_bias=protocol1_bias))
        elif name == "lemma1-chain":
            results.append(fn(rng, seed=seed))
        else:
            results.append(fn(rng))
    return results


def render_text(results: list[SuiteResult], max_failures: int = 5) -> str:
    lines = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"[{status}] {r.name}: {r.checks - len(r.failures)}/{r.checks} checks")
        for f in r.failures[:max_failures]:
            lines.append(f"    failed: {f}")
        if len(r.failures) > max_failures:
            lines.append(f"    ... and {len(r.failures) - max_failures} more")
    total_fail = sum(len(r.failures) for r in results)
    lines.append(
        f"TOTAL: {len(results)} suites, "
        f"{sum(1 for r in results if r.passed)} passed, "
        f"{sum(1 for r in results if not r.passed)} failed, "
        f"{total_fail} failing checks"
    )
    return "\n".join(lines) + "\n"
