"""Measuring quantum operations in Kraus form and their class predicates.

An operation is a family of sub-operations, each a list of Kraus matrices
mapping the common input space to that sub-operation's own output space,
jointly trace preserving.  Applying the operation yields one classical
branch per sub-operation.  Class membership (local, one-local, separable,
p.p.t.) is tracked two ways: constructors tag provenance, and predicates
verify explicitly given structure (completeness sums, Choi positivity,
separable witnesses).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .linalg import (
    BipartiteLabel,
    DensityOperator,
    Label,
    as_square_matrix,
    partial_transpose,
    tensor,
    total_dim,
)

TAU_TP = 1e-9
TAU_CP = 1e-9
TAU_ACTION = 1e-9
ZERO_BRANCH_PROB = 1e-12

# Provenance tags ordered by class containment.
CLASS_ORDER = ("local", "one-local", "two-local", "separable", "ppt")


def _join_provenance(*tags: str | None) -> str | None:
    known = [t for t in tags if t is not None]
    if len(known) < len(tags):
        return None
    return max(known, key=CLASS_ORDER.index)


@dataclass(frozen=True, eq=False)
class SubOperation:
    """One classical branch: Kraus matrices sharing an output space."""

    kraus: tuple[np.ndarray, ...]
    out_label: Label

    def __post_init__(self) -> None:
        if not self.kraus:
            raise ValueError("sub-operation requires at least one Kraus matrix")
        mats = tuple(np.asarray(k, dtype=complex) for k in self.kraus)
        rows, cols = mats[0].shape
        d_out = total_dim(self.out_label)
        if rows != d_out:
            raise ValueError(f"Kraus rows {rows} do not match output dimension {d_out}")
        for k in mats:
            if k.shape != (rows, cols):
                raise ValueError("Kraus matrices must share one shape")
        for k in mats:
            k.setflags(write=False)
        object.__setattr__(self, "kraus", mats)

    @property
    def dim_in(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.kraus[0].shape[0]

    def completeness_term(self) -> np.ndarray:
        """Sum of K^dagger K over this branch's Kraus matrices."""
        out = np.zeros((self.dim_in, self.dim_in), dtype=complex)
        for k in self.kraus:
            out += k.conj().T @ k
        return out

    def apply_raw(self, m: np.ndarray) -> np.ndarray:
        """Unnormalized branch output sum_j K_j m K_j^dagger."""
        out = np.zeros((self.dim_out, self.dim_out), dtype=complex)
        for k in self.kraus:
            out += k @ m @ k.conj().T
        return out


@dataclass(frozen=True, eq=False)
class QuantumOperation:
    """An indexed family of sub-operations on a common input space."""

    subops: tuple[SubOperation, ...]
    in_label: Label
    provenance: str | None = None

    def __post_init__(self) -> None:
        if not self.subops:
            raise ValueError("operation requires at least one sub-operation")
        d_in = total_dim(self.in_label)
        for i, sub in enumerate(self.subops):
            if sub.dim_in != d_in:
                raise ValueError(
                    f"sub-operation {i} expects input dimension {sub.dim_in}, label says {d_in}"
                )
        object.__setattr__(self, "subops", tuple(self.subops))

    @property
    def dim_in(self) -> int:
        return total_dim(self.in_label)

    @property
    def is_measuring(self) -> bool:
        return len(self.subops) > 1

    def completeness_sum(self) -> np.ndarray:
        out = np.zeros((self.dim_in, self.dim_in), dtype=complex)
        for sub in self.subops:
            out += sub.completeness_term()
        return out


BranchOutcomes = list[tuple[float, DensityOperator | None]]


def is_trace_preserving(op: QuantumOperation, tol: float = TAU_TP) -> bool:
    dev = op.completeness_sum() - np.eye(op.dim_in)
    return bool(np.max(np.abs(dev)) <= tol)


def apply_operation(op: QuantumOperation, rho: DensityOperator) -> BranchOutcomes:
    """Apply a trace-preserving operation, returning (probability, state) per branch.

    Branches with probability below ZERO_BRANCH_PROB carry None instead of a
    normalized state.
    """
    if rho.dim != op.dim_in:
        raise ValueError(f"state dimension {rho.dim} does not match operation input {op.dim_in}")
    if not is_trace_preserving(op):
        raise ValueError("apply_operation requires a trace-preserving operation")
    outcomes: BranchOutcomes = []
    for sub in op.subops:
        raw = sub.apply_raw(rho.matrix)
        p = float(raw.trace().real)
        if p < ZERO_BRANCH_PROB:
            outcomes.append((max(p, 0.0), None))
        else:
            outcomes.append((p, DensityOperator(raw / p, sub.out_label)))
    return outcomes


def identity_operation(label: Label) -> QuantumOperation:
    d = total_dim(label)
    sub = SubOperation((np.eye(d, dtype=complex),), label)
    return QuantumOperation((sub,), label, provenance="local")


def compose(
    first: QuantumOperation,
    continuation: Mapping[int, QuantumOperation] | Callable[[int], QuantumOperation],
) -> QuantumOperation:
    """Perform `first`; on branch i, perform continuation(i).

    The result's branches are indexed by (first branch, continuation branch)
    pairs in lexicographic order.
    """
    pick = continuation.__getitem__ if isinstance(continuation, Mapping) else continuation
    subs: list[SubOperation] = []
    tags = [first.provenance]
    for i, sub in enumerate(first.subops):
        follow = pick(i)
        if total_dim(follow.in_label) != sub.dim_out:
            raise ValueError(
                f"continuation for branch {i} expects input dimension "
                f"{total_dim(follow.in_label)}, branch outputs {sub.dim_out}"
            )
        tags.append(follow.provenance)
        for fsub in follow.subops:
            kraus = tuple(t @ s for t in fsub.kraus for s in sub.kraus)
            subs.append(SubOperation(kraus, fsub.out_label))
    return QuantumOperation(tuple(subs), first.in_label, provenance=_join_provenance(*tags))


def tensor_operations(s: QuantumOperation, t: QuantumOperation) -> QuantumOperation:
    """Joint operation with branches indexed by pairs of the factors' branches.

    The output labels are plain total dimensions: the Kronecker convention
    interleaves the factors' parties, so any bipartite structure of the joint
    space must be reattached explicitly by the caller.
    """
    subs = []
    for ssub in s.subops:
        for tsub in t.subops:
            kraus = tuple(tensor(a, b) for a in ssub.kraus for b in tsub.kraus)
            subs.append(SubOperation(kraus, ssub.dim_out * tsub.dim_out))
    in_label = s.dim_in * t.dim_in
    return QuantumOperation(
        tuple(subs), in_label, provenance=_join_provenance(s.provenance, t.provenance)
    )


def forget(op: QuantumOperation, merge: Iterable[int]) -> QuantumOperation:
    """Merge the given branches into one, discarding which of them occurred."""
    merge = sorted(set(merge))
    if not merge:
        raise ValueError("forget requires at least one branch index")
    for i in merge:
        if i < 0 or i >= len(op.subops):
            raise ValueError(f"branch index {i} out of range")
    out_labels = {op.subops[i].out_label for i in merge}
    if len(out_labels) > 1:
        raise ValueError(f"merged branches must share one output label, got {out_labels}")
    merged_kraus: list[np.ndarray] = []
    for i in merge:
        merged_kraus.extend(op.subops[i].kraus)
    merged = SubOperation(tuple(merged_kraus), op.subops[merge[0]].out_label)
    subs = [merged]
    subs.extend(sub for i, sub in enumerate(op.subops) if i not in merge)
    return QuantumOperation(tuple(subs), op.in_label, provenance=op.provenance)


def forget_all(op: QuantumOperation) -> QuantumOperation:
    return forget(op, range(len(op.subops)))


# ---------------------------------------------------------------------------
# Linear actions: superoperators that need not admit a Kraus form.
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LinearAction:
    """A linear map on operators, stored as a matrix acting on row-major vec."""

    matrix: np.ndarray
    in_label: Label
    out_label: Label

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        d_in, d_out = total_dim(self.in_label), total_dim(self.out_label)
        if m.shape != (d_out * d_out, d_in * d_in):
            raise ValueError(
                f"action matrix shape {m.shape} does not match ({d_out * d_out}, {d_in * d_in})"
            )
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim_in(self) -> int:
        return total_dim(self.in_label)

    @property
    def dim_out(self) -> int:
        return total_dim(self.out_label)

    def __call__(self, m: np.ndarray) -> np.ndarray:
        m = as_square_matrix(m)
        if m.shape[0] != self.dim_in:
            raise ValueError(f"input dimension {m.shape[0]} does not match {self.dim_in}")
        out = self.matrix @ m.reshape(-1)
        return out.reshape(self.dim_out, self.dim_out)

    @classmethod
    def from_kraus(cls, sub: SubOperation, in_label: Label | None = None) -> "LinearAction":
        # row-major vec: K X K^dagger -> (K (x) conj(K)) vec(X)
        mat = sum(np.kron(k, k.conj()) for k in sub.kraus)
        return cls(mat, in_label if in_label is not None else sub.dim_in, sub.out_label)

    @classmethod
    def from_function(
        cls, f: Callable[[np.ndarray], np.ndarray], in_label: Label, out_label: Label
    ) -> "LinearAction":
        d_in, d_out = total_dim(in_label), total_dim(out_label)
        cols = np.empty((d_out * d_out, d_in * d_in), dtype=complex)
        basis = np.zeros((d_in, d_in), dtype=complex)
        for idx in range(d_in * d_in):
            basis.flat[idx] = 1.0
            cols[:, idx] = f(basis).reshape(-1)
            basis.flat[idx] = 0.0
        return cls(cols, in_label, out_label)


def choi_matrix(action: LinearAction | SubOperation) -> np.ndarray:
    """Unnormalized Choi matrix (1 (x) S) applied to sum_ab |aa><bb|."""
    if isinstance(action, SubOperation):
        # column a of each Kraus matrix stacked as |a> (x) K|a>
        vecs = [k.T.reshape(-1) for k in action.kraus]
        d_in, d_out = action.dim_in, action.dim_out
        choi = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
        for v in vecs:
            choi += np.outer(v, v.conj())
        return choi
    d_in, d_out = action.dim_in, action.dim_out
    choi = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
    unit = np.zeros((d_in, d_in), dtype=complex)
    for a in range(d_in):
        for b in range(d_in):
            unit[a, b] = 1.0
            block = action(unit)
            unit[a, b] = 0.0
            choi[a * d_out : (a + 1) * d_out, b * d_out : (b + 1) * d_out] = block
    return choi


def is_completely_positive(action: LinearAction | SubOperation, tol: float = TAU_CP) -> bool:
    """Complete positivity via positive semidefiniteness of the Choi matrix."""
    choi = choi_matrix(action)
    choi = (choi + choi.conj().T) / 2
    return bool(np.linalg.eigvalsh(choi)[0] >= -tol)


def _require_bipartite(label: Label, what: str) -> BipartiteLabel:
    if not isinstance(label, BipartiteLabel):
        raise ValueError(f"{what} requires a bipartite label")
    return label


def ppt_conjugate(sub: SubOperation, in_label: Label) -> LinearAction:
    """The action rho -> (S(rho^PT))^PT, partial transpose on the B factors.

    Generally not completely positive, so the result is a linear action
    table rather than a Kraus family.
    """
    lab_in = _require_bipartite(in_label, "ppt conjugation")
    lab_out = _require_bipartite(sub.out_label, "ppt conjugation")

    def conjugated(m: np.ndarray) -> np.ndarray:
        inner = sub.apply_raw(partial_transpose(m, lab_in, side="B"))
        return partial_transpose(inner, lab_out, side="B")

    return LinearAction.from_function(conjugated, lab_in, lab_out)


def is_ppt_operation(op: QuantumOperation, tol: float = TAU_CP) -> bool:
    """True iff every sub-operation stays completely positive under
    conjugation by the partial transpose."""
    lab_in = _require_bipartite(op.in_label, "ppt predicate")
    return all(
        is_completely_positive(ppt_conjugate(sub, lab_in), tol) for sub in op.subops
    )


# ---------------------------------------------------------------------------
# Separable form.
# ---------------------------------------------------------------------------

# Per sub-operation: a sequence of (A_j, B_j) pairs acting on the two parties.
SeparableWitness = Sequence[Sequence[tuple[np.ndarray, np.ndarray]]]


def verify_separable_form(
    op: QuantumOperation, witness: SeparableWitness, tol: float = TAU_ACTION
) -> bool:
    """Check that each sub-operation's action equals the product-Kraus action
    induced by its witness, compared on the full matrix-unit spanning set."""
    if len(witness) != len(op.subops):
        raise ValueError(
            f"witness has {len(witness)} entries for {len(op.subops)} sub-operations"
        )
    for sub, pairs in zip(op.subops, witness):
        if not pairs:
            raise ValueError("witness entry must contain at least one (A, B) pair")
        prods = []
        for a, b in pairs:
            prod = tensor(a, b)
            if prod.shape != sub.kraus[0].shape:
                raise ValueError(
                    f"witness product shape {prod.shape} does not match Kraus shape "
                    f"{sub.kraus[0].shape}"
                )
            prods.append(prod)
        induced = SubOperation(tuple(prods), sub.out_label)
        if np.max(np.abs(choi_matrix(sub) - choi_matrix(induced))) > tol:
            return False
    return True


def make_local(op_a: QuantumOperation, op_b: QuantumOperation) -> QuantumOperation:
    """Product operation S_A (x) S_B of two non-measuring single-party
    operations, tagged local."""
    if op_a.is_measuring or op_b.is_measuring:
        raise ValueError("local operations are built from non-measuring parts")
    sub_a, sub_b = op_a.subops[0], op_b.subops[0]
    kraus = tuple(tensor(a, b) for a in sub_a.kraus for b in sub_b.kraus)
    sub = SubOperation(kraus, BipartiteLabel(sub_a.dim_out, sub_b.dim_out))
    in_label = BipartiteLabel(op_a.dim_in, op_b.dim_in)
    return QuantumOperation((sub,), in_label, provenance="local")


def make_one_local(op_a: QuantumOperation, dim_b: int) -> QuantumOperation:
    """An arbitrary (possibly measuring) operation on party A tensored with
    identity on B, tagged one-local: the outcome travels from A to B."""
    eye_b = np.eye(dim_b, dtype=complex)
    subs = []
    for sub_a in op_a.subops:
        kraus = tuple(tensor(k, eye_b) for k in sub_a.kraus)
        subs.append(SubOperation(kraus, BipartiteLabel(sub_a.dim_out, dim_b)))
    in_label = BipartiteLabel(op_a.dim_in, dim_b)
    return QuantumOperation(tuple(subs), in_label, provenance="one-local")


def natural_product_witness(op: QuantumOperation) -> SeparableWitness:
    """Witness for operations whose Kraus matrices were built as A (x) B
    products; reconstructs the factors per branch by rank-one splitting."""
    lab_in = _require_bipartite(op.in_label, "product witness")
    witness = []
    for sub in op.subops:
        lab_out = _require_bipartite(sub.out_label, "product witness")
        pairs = []
        for k in sub.kraus:
            t = k.reshape(lab_out.dim_a, lab_out.dim_b, lab_in.dim_a, lab_in.dim_b)
            t = t.transpose(0, 2, 1, 3).reshape(
                lab_out.dim_a * lab_in.dim_a, lab_out.dim_b * lab_in.dim_b
            )
            u, s, vh = np.linalg.svd(t)
            if s.size > 1 and s[1] > 1e-9:
                raise ValueError("Kraus matrix is not a product operator")
            a = np.sqrt(s[0]) * u[:, 0].reshape(lab_out.dim_a, lab_in.dim_a)
            b = np.sqrt(s[0]) * vh[0, :].reshape(lab_out.dim_b, lab_in.dim_b)
            pairs.append((a, b))
        witness.append(pairs)
    return witness
