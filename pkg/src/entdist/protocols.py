"""Local protocols on isotropic states: subspace measurement, factor tracing,
twirling, and the composite dimension reduction with its fidelity guarantee.

Both protocols are symmetric between the two parties and local (product
form); their closed-form fidelity maps are checked against brute-force
density-operator simulation in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import BipartiteLabel, DensityOperator, tensor
from .operations import (
    QuantumOperation,
    SubOperation,
    apply_operation,
    compose,
    forget_all,
)
from .states import fidelity, isotropic

__all__ = [
    "ReductionPlan",
    "subspace_measurement_op",
    "subspace_measurement_fidelity",
    "factor_tracing_op",
    "factor_tracing_fidelity",
    "exact_twirl",
    "monte_carlo_twirl",
    "reduction_plan",
    "reduce_dimension",
    "reduce_dimension_fidelity",
]


def _success_kraus(k: int, kp: int) -> np.ndarray:
    """Isometric truncation onto the span of the first kp basis elements."""
    s = np.zeros((kp, k), dtype=complex)
    s[:, :kp] = np.eye(kp)
    return s


def _failure_kraus(k: int, kp: int) -> list[np.ndarray]:
    """Detect the complement subspace and replace with its uniform mixture."""
    ops = []
    for m in range(kp, k):
        for j in range(kp):
            e = np.zeros((kp, k), dtype=complex)
            e[j, m] = 1.0 / np.sqrt(kp)
            ops.append(e)
    return ops


def subspace_measurement_op(k: int, kp: int, merged: bool = True) -> QuantumOperation:
    """Both parties measure the subspace of their first kp basis elements.

    On success a party keeps its (truncated) state; on failure it replaces
    its portion with the maximally mixed state on the kp-subspace, which is
    the ensemble average of drawing a random element of that subspace.  The
    four success/failure branches share the kp x kp output space and are
    merged by default; pass merged=False to keep them separate.
    """
    if not 1 <= kp <= k:
        raise ValueError(f"target dimension must satisfy 1 <= {kp} <= {k}")
    succ = [_success_kraus(k, kp)]
    fail = _failure_kraus(k, kp)
    out = BipartiteLabel(kp, kp)
    subs = []
    for side_a in (succ, fail):
        for side_b in (succ, fail):
            kraus = tuple(tensor(a, b) for a in side_a for b in side_b)
            if kraus:
                subs.append(SubOperation(kraus, out))
    op = QuantumOperation(tuple(subs), BipartiteLabel(k, k), provenance="local")
    return forget_all(op) if merged else op


def subspace_measurement_fidelity(k: int, kp: int, f: float) -> float:
    """Closed-form fidelity map of the merged subspace measurement."""
    if k < 2:
        raise ValueError(f"input dimension must be at least 2, got {k}")
    if not 1 <= kp <= k:
        raise ValueError(f"target dimension must satisfy 1 <= {kp} <= {k}")
    if not 0 <= f <= 1:
        raise ValueError(f"fidelity {f} outside [0, 1]")
    head = (kp / k) * f
    tail = (k - kp) * ((1 - f) * kp * (kp + k) + k * k - 1) / (kp * kp * k * (k * k - 1))
    return head + tail


def factor_tracing_op(k: int, kp: int) -> QuantumOperation:
    """Both parties split their space as kp x (k/kp) and trace the second factor."""
    if not 1 <= kp <= k or k % kp != 0:
        raise ValueError(f"{kp} must divide {k}")
    ratio = k // kp
    # local Kraus: identity on the kept factor, basis bra on the traced one
    locals_ = []
    for m in range(ratio):
        e = np.zeros((kp, k), dtype=complex)
        for i in range(kp):
            e[i, i * ratio + m] = 1.0
        locals_.append(e)
    kraus = tuple(tensor(a, b) for a in locals_ for b in locals_)
    sub = SubOperation(kraus, BipartiteLabel(kp, kp))
    return QuantumOperation((sub,), BipartiteLabel(k, k), provenance="local")


def factor_tracing_fidelity(k: int, kp: int, f: float) -> float:
    """Closed-form fidelity map of the factor-tracing protocol."""
    if not 1 <= kp <= k or k % kp != 0:
        raise ValueError(f"{kp} must divide {k}")
    if not 0 <= f <= 1:
        raise ValueError(f"fidelity {f} outside [0, 1]")
    return f + (1 - f) * (k * k - kp * kp) / ((k * k - 1) * kp * kp)


def exact_twirl(rho: DensityOperator) -> DensityOperator:
    """Average over all U (x) conj(U) conjugations, in closed form.

    The average is the fidelity-preserving projection onto the isotropic
    family; the Monte Carlo estimate below exists as a test oracle for it.
    """
    label = rho.bipartite
    if label.dim_a != label.dim_b:
        raise ValueError("twirl requires equal factor dimensions")
    return isotropic(label.dim_a, fidelity(rho))


def monte_carlo_twirl(
    rho: DensityOperator,
    samples: int,
    rng: np.random.Generator,
    chunk: int = 512,
) -> np.ndarray:
    """Empirical mean of (U (x) conj(U)) rho (U (x) conj(U))^dagger over Haar U.

    Returns the averaged matrix (not validated as a DensityOperator, since a
    finite-sample mean carries statistical noise).
    """
    label = rho.bipartite
    d = label.dim_a
    if label.dim_b != d:
        raise ValueError("twirl requires equal factor dimensions")
    acc = np.zeros((d * d, d * d), dtype=complex)
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        z = (rng.standard_normal((n, d, d)) + 1j * rng.standard_normal((n, d, d))) / np.sqrt(2)
        q, r = np.linalg.qr(z)
        phases = np.einsum("nii->ni", r).copy()
        phases /= np.abs(phases)
        u = q * phases[:, None, :]
        w = np.einsum("nab,ncd->nacbd", u, u.conj()).reshape(n, d * d, d * d)
        transformed = w @ rho.matrix @ w.conj().transpose(0, 2, 1)
        acc += transformed.sum(axis=0)
        done += n
    return acc / samples


@dataclass(frozen=True)
class ReductionPlan:
    """Two-stage reduction from dimension k to kp and its fidelity guarantee."""

    k: int
    kp: int

    def __post_init__(self) -> None:
        if not 1 <= self.kp <= self.k:
            raise ValueError(f"plan requires 1 <= {self.kp} <= {self.k}")

    @property
    def stage1_target(self) -> int:
        return self.kp * (self.k // self.kp)

    @property
    def guaranteed_fidelity_factor(self) -> float:
        return (self.kp / self.k) * (self.k // self.kp)

    @property
    def coarse_fidelity_factor(self) -> float:
        return max(self.k - self.kp, self.kp) / self.k


def reduction_plan(k: int, kp: int) -> ReductionPlan:
    return ReductionPlan(k, kp)


def _composite_reduction_op(k: int, kp: int) -> QuantumOperation:
    plan = ReductionPlan(k, kp)
    stage1 = subspace_measurement_op(k, plan.stage1_target, merged=True)
    stage2 = factor_tracing_op(plan.stage1_target, kp)
    return compose(stage1, {0: stage2})


def reduce_dimension(rho: DensityOperator, kp: int) -> DensityOperator:
    """Local reduction of a k x k state to kp x kp: subspace measurement down
    to kp * floor(k / kp), then factor tracing the rest of the way."""
    label = rho.bipartite
    if label.dim_a != label.dim_b:
        raise ValueError("reduction requires equal factor dimensions")
    op = _composite_reduction_op(label.dim_a, kp)
    ((p, state),) = apply_operation(op, rho)
    assert state is not None and abs(p - 1.0) < 1e-9
    return state


def reduce_dimension_fidelity(k: int, kp: int, f: float) -> float:
    """Closed-form fidelity of the composite reduction on an isotropic input."""
    plan = ReductionPlan(k, kp)
    mid = subspace_measurement_fidelity(k, plan.stage1_target, f)
    if plan.stage1_target == kp:
        return mid
    return factor_tracing_fidelity(plan.stage1_target, kp, mid)
