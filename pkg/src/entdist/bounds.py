"""Scalar entanglement bounds for isotropic states and a numerical
entanglement-of-formation oracle.

Conventions: logarithms are base 2, 0 * log2(0) = 0 by continuity, and the
hashing rate reports the raw formula alongside its clamp at zero because
rate accounting downstream consumes nonnegative rates only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import DensityOperator

__all__ = [
    "binary_entropy",
    "FormationBounds",
    "formation_bounds_isotropic",
    "ppt_bound_isotropic",
    "HashingRate",
    "hashing_rate",
    "ef_numeric_estimate",
]


def _xlog2(x: float) -> float:
    return 0.0 if x <= 0.0 else x * math.log2(x)


def binary_entropy(f: float) -> float:
    """-F log2 F - (1-F) log2(1-F), with the endpoints 0 by continuity."""
    if not 0.0 <= f <= 1.0:
        raise ValueError(f"binary entropy argument {f} outside [0, 1]")
    return -_xlog2(f) - _xlog2(1.0 - f)


@dataclass(frozen=True)
class FormationBounds:
    """Bits of entanglement of formation bracketed for an isotropic state."""

    K: int
    F: float
    lower: float
    upper: float
    ppt_bound: float


def ppt_bound_isotropic(k: int, f: float) -> float:
    """Partial-transpose bound on distillable entanglement of an isotropic
    state; may be negative for small fidelity."""
    if k < 2:
        raise ValueError(f"dimension must be at least 2, got {k}")
    if not 0.0 <= f <= 1.0:
        raise ValueError(f"fidelity {f} outside [0, 1]")
    return math.log2(k) + _xlog2(f) + _xlog2(1.0 - f) - (1.0 - f) * math.log2(k - 1)


def formation_bounds_isotropic(k: int, f: float) -> FormationBounds:
    """Lower and upper bounds on the entanglement of formation at (k, f).

    The lower bound is F log2 K - H2(F) truncated at zero; the upper bound is
    the convex-roof mixture bound (FK-1)/(K-1) log2 K for F above the
    separability point 1/K and zero below it.
    """
    if k < 1:
        raise ValueError(f"dimension must be positive, got {k}")
    if not 0.0 <= f <= 1.0:
        raise ValueError(f"fidelity {f} outside [0, 1]")
    if k == 1:
        return FormationBounds(1, f, 0.0, 0.0, 0.0)
    log2k = math.log2(k)
    lower = max(0.0, f * log2k - binary_entropy(f))
    if f <= 1.0 / k:
        upper = 0.0
    else:
        upper = min(f * log2k, (f * k - 1) / (k - 1) * log2k)
    return FormationBounds(k, f, lower, upper, ppt_bound_isotropic(k, f))


@dataclass(frozen=True)
class HashingRate:
    """Hashing-protocol rate for an isotropic state, raw and clamped at zero."""

    K: int
    F: float
    raw: float
    clamped: float
    dimension_is_power_of_two: bool


def hashing_rate(k: int, f: float) -> HashingRate:
    """log2 K + F log2 F + (1-F) log2((1-F)/(K^2-1)).

    The rate is established for K a power of 2; for other K the value is
    still reported but flagged, since no guarantee is known there.
    """
    if k < 2:
        raise ValueError(f"dimension must be at least 2, got {k}")
    if not 0.0 <= f <= 1.0:
        raise ValueError(f"fidelity {f} outside [0, 1]")
    raw = math.log2(k) + _xlog2(f)
    if f < 1.0:
        raw += (1.0 - f) * math.log2((1.0 - f) / (k * k - 1))
    return HashingRate(k, f, raw, max(0.0, raw), k & (k - 1) == 0)


# ---------------------------------------------------------------------------
# Numerical entanglement-of-formation oracle.
#
# Every size-M ensemble realizing rho = sum_r lam_r |e_r><e_r| corresponds to
# a co-isometry G (r x M, G G^dag = I): the unnormalized members are the
# columns of A G with A = E sqrt(Lam).  The average entanglement is minimized
# by projected gradient descent on that manifold, with multiple seeded
# restarts; the result is an upper estimate of E_f, never asserted exact.
# ---------------------------------------------------------------------------

_EIG_FLOOR = 1e-300


def _ensemble_objective_grad(
    g: np.ndarray, a: np.ndarray, da: int, db: int
) -> tuple[float, np.ndarray]:
    """Average output entanglement and its Euclidean Wirtinger gradient."""
    cols = a @ g  # d x M, unnormalized member states
    m_count = g.shape[1]
    value = 0.0
    grad_c = np.zeros_like(cols)
    for t in range(m_count):
        mat = cols[:, t].reshape(da, db)
        red = mat @ mat.conj().T
        p = float(red.trace().real)
        if p < 1e-15:
            continue
        lam, vec = np.linalg.eigh(red / p)
        lam = np.maximum(lam, _EIG_FLOOR)
        value += -p * float(np.sum(lam * np.log2(lam)))
        # d/d conj(M) of [p S(red/p)] is (-log2(red/p)) M
        w = (vec * (-np.log2(lam))) @ vec.conj().T
        grad_c[:, t] = (w @ mat).reshape(-1)
    return value, a.conj().T @ grad_c


def _polar_coisometry(g: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(g, full_matrices=False)
    return u @ vh


def _minimize_from(
    g0: np.ndarray, a: np.ndarray, da: int, db: int, iterations: int
) -> float:
    g = _polar_coisometry(g0)
    value, grad = _ensemble_objective_grad(g, a, da, db)
    step = 1.0
    for _ in range(iterations):
        # project onto the tangent space of G G^dag = I
        sym = g @ grad.conj().T
        xi = grad - 0.5 * (sym + sym.conj().T) @ g
        norm = float(np.linalg.norm(xi))
        if norm < 1e-14:
            break
        step = min(step * 2.0, 1.0)
        improved = False
        while step > 1e-14:
            cand = _polar_coisometry(g - step * xi)
            cand_value, cand_grad = _ensemble_objective_grad(cand, a, da, db)
            if cand_value < value - 1e-15:
                g, value, grad = cand, cand_value, cand_grad
                improved = True
                break
            step *= 0.5
        if not improved:
            break
    return value


def ef_numeric_estimate(
    rho: DensityOperator,
    budget: int = 8000,
    seed: int = 0,
    ensemble_size: int | None = None,
) -> float:
    """Upper estimate of the entanglement of formation, in bits.

    Minimizes the ensemble-average entropy of entanglement over pure-state
    ensembles of size up to dim^2 + 1 realizing rho.  budget is the total
    number of line-search iterations across restarts; results are
    deterministic for a fixed seed.
    """
    label = rho.bipartite
    da, db = label.dim_a, label.dim_b
    d = da * db
    if d > 16:
        raise ValueError(f"total dimension {d} exceeds the supported limit 16")
    lam, vecs = np.linalg.eigh(rho.matrix)
    keep = lam > 1e-12
    lam, vecs = lam[keep], vecs[:, keep]
    rank = int(lam.size)
    a = vecs * np.sqrt(lam)
    m_count = min(d * d + 1, ensemble_size or d * d + 1)
    m_count = max(m_count, rank)
    iterations = 400
    restarts = max(1, budget // iterations)
    rng = np.random.default_rng(seed)
    best = math.inf
    for _ in range(restarts):
        g0 = rng.standard_normal((rank, m_count)) + 1j * rng.standard_normal((rank, m_count))
        best = min(best, _minimize_from(g0, a, da, db, iterations))
    return best
