"""Closed-form recovery and teleportation fidelities of a decoder V.

For a scrambler U and decoder V the recovery fidelity is F = 1 / (1 + c)
with the OTOC-derived cost

    c(U, V) = sum_{P_C, P_A != 1} |tr(U^dag P_C V P_A)|^2 / sum_{P_C} |tr(U^dag P_C V)|^2.

Both Pauli sums are evaluated by contracting U and V once into the small
tensor of :func:`bhdecode.linalg.overlap_tensor`; Pauli completeness on A and
C turns each sum into a Frobenius norm.  ``method="enumerate"`` keeps the
term-by-term loop as a reference.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import (
    apply_gate,
    overlap_tensor,
    partial_trace,
    pauli_left,
    pauli_right,
    pauli_sandwich_trace,
)
from .metrics import Partition, heisenberg, omega_exact
from .pauli import enumerate_region

# numerator N is compared against this after dividing by d^2
DEGENERATE_THRESHOLD = 1e-14


class DegenerateCostError(ArithmeticError):
    """Every tr(U^dag P_C V) vanishes, so c(U, V) is undefined."""


@dataclass(frozen=True)
class CostBreakdown:
    numerator: float  # N = sum_{P_C} |tr(U^dag P_C V)|^2
    mixed: float  # M = sum_{P_C, P_A != 1} |tr(U^dag P_C V P_A)|^2

    @property
    def total(self) -> float:
        return self.numerator + self.mixed

    @property
    def c(self) -> float:
        return self.mixed / self.numerator if self.numerator > 0 else math.inf

    @property
    def fidelity(self) -> float:
        return self.numerator / self.total if self.numerator > 0 else 0.0


def _sums_from_tensor(t: np.ndarray, part: Partition) -> tuple[float, float]:
    traces = np.einsum("xaya->xy", t)
    numerator = part.d_c * float(np.vdot(traces, traces).real)
    # traceless part of each T[x, :, y, :] carries the P_A != 1 terms
    eye = np.eye(part.d_a)
    traceless = t - traces[:, None, :, None] * eye[None, :, None, :] / part.d_a
    mixed = part.d_a * part.d_c * float(np.vdot(traceless, traceless).real)
    return numerator, mixed


def _finish(numerator: float, mixed: float, part: Partition, strict: bool) -> CostBreakdown:
    if numerator / part.d**2 < DEGENERATE_THRESHOLD:
        if strict:
            raise DegenerateCostError("sum_{P_C} |tr(U^dag P_C V)|^2 vanishes")
        numerator = 0.0
    return CostBreakdown(numerator, mixed)


class CostEvaluator:
    """Cost of many decoders against one fixed scrambler.

    Keeps the conjugated, regrouped copy of U so each evaluation is a single
    (d_C d_A) x d^2/(d_C d_A) matrix product.
    """

    def __init__(self, u: np.ndarray, part: Partition, strict: bool = True):
        part.check(u)
        self.u = u
        self.part = part
        self.strict = strict
        dc, da, dd, db = part.d_c, part.d_a, part.d_d, part.d_b
        self._um = np.ascontiguousarray(
            u.reshape(dc, dd, da, db).transpose(0, 2, 1, 3).reshape(dc * da, dd * db).conj()
        )

    def tensor(self, v: np.ndarray) -> np.ndarray:
        return self.tensor_packed(self.pack(v))

    # The learner keeps V "packed": reordered to (C, A, D, B) and flattened,
    # so each evaluation is one matmul with no transpose copy.  A gate on
    # row qubit q of V acts on bit q (q < n_C) or q + n_A of the packed
    # vector; see ``packed_gate``.
    def pack(self, v: np.ndarray) -> np.ndarray:
        p = self.part
        return np.ascontiguousarray(v.reshape(p.d_c, p.d_d, p.d_a, p.d_b).transpose(0, 2, 1, 3)).reshape(-1)

    def unpack(self, w: np.ndarray) -> np.ndarray:
        p = self.part
        return np.ascontiguousarray(w.reshape(p.d_c, p.d_a, p.d_d, p.d_b).transpose(0, 2, 1, 3)).reshape(p.d, p.d)

    def packed_gate(self, g):
        n_c, n_a = self.part.n_c, self.part.n_a
        return type(g)(g.kind, tuple(q if q < n_c else q + n_a for q in g.qubits))

    def tensor_packed(self, w: np.ndarray) -> np.ndarray:
        p = self.part
        dc, da = p.d_c, p.d_a
        return (self._um @ w.reshape(dc * da, -1).T).reshape(dc, da, dc, da)

    def evaluate_packed(self, w: np.ndarray) -> CostBreakdown:
        return _finish(*_sums_from_tensor(self.tensor_packed(w), self.part), self.part, self.strict)

    def __call__(self, v: np.ndarray) -> CostBreakdown:
        if v.shape != self.u.shape:
            raise ValueError("dimension mismatch")
        return _finish(*_sums_from_tensor(self.tensor(v), self.part), self.part, self.strict)

    def after_gate(self, v: np.ndarray, g) -> tuple[CostBreakdown, np.ndarray]:
        gv = apply_gate(g, v)
        return self(gv), gv


def cost(
    u: np.ndarray, v: np.ndarray, part: Partition, method: str = "contract", strict: bool = True
) -> CostBreakdown:
    """Numerator, mixed sum, c and F for the pair (U, V).

    With ``strict=False`` a vanishing numerator yields F = 0 (c = inf)
    instead of raising :class:`DegenerateCostError`.
    """
    part.check(u)
    if v.shape != u.shape:
        raise ValueError("dimension mismatch")
    if method == "contract":
        return CostEvaluator(u, part, strict)(v)
    if method != "enumerate":
        raise ValueError(f"unknown method {method!r}")
    numerator = mixed = 0.0
    pas = enumerate_region(part.n, part.region_a)
    for p_c in enumerate_region(part.n, part.region_c):
        numerator += abs(pauli_sandwich_trace(u, v, p_c, pas[0])) ** 2
        for p_a in pas[1:]:
            mixed += abs(pauli_sandwich_trace(u, v, p_c, p_a)) ** 2
    return _finish(numerator, mixed, part, strict)


def cost_after_gate(
    u: np.ndarray, v: np.ndarray, breakdown: CostBreakdown, g, part: Partition
) -> CostBreakdown:
    """Breakdown for (U, gV).  ``breakdown`` (for (U, V)) is not reused:
    a full re-contraction is already O(d^2), the same order as applying g."""
    del breakdown
    return cost(u, apply_gate(g, v), part)


def fidelity(u: np.ndarray, v: np.ndarray, part: Partition, method: str = "contract") -> float:
    return cost(u, v, part, method).fidelity


def ideal_fidelity(u: np.ndarray, part: Partition) -> float:
    """Fidelity of the perfect decoder V = U, i.e. 1 / (d_A^2 Omega(U))."""
    return 1.0 / (part.d_a**2 * omega_exact(u, part))


def p_out(u: np.ndarray, v: np.ndarray, part: Partition, method: str = "contract") -> float:
    """Post-selection probability of the decoder's D D' projection.

    ``"direct"`` evaluates (1/d) <tr(P_D(U) P_A P_D(V) P_A)> over all
    (P_A, P_D); ``"contract"`` uses the C-side sum.
    """
    if method == "contract":
        bd = cost(u, v, part, strict=False)
        return bd.total / (part.d**2 * part.d_a**2)
    if method != "direct":
        raise ValueError(f"unknown method {method!r}")
    pas = enumerate_region(part.n, part.region_a)
    acc = 0.0
    count = 0
    for p_d in enumerate_region(part.n, part.region_d):
        qu = heisenberg(u, p_d)
        qv = heisenberg(v, p_d)
        for p_a in pas:
            acc += np.sum(qu * pauli_right(pauli_left(p_a, qv), p_a).T).real
            count += 1
    return acc / (count * part.d)


def teleport_fidelity(
    u: np.ndarray, v: np.ndarray, psi_a: np.ndarray, part: Partition, method: str = "contract"
) -> float:
    """Fidelity of teleporting ``psi_a`` from A to R' with decoder V.

    With X(P_C) = tr_B(U^dag P_C V) this is
    <|<psi|X|psi>|^2>_{P_C} / <<psi|X X^dag|psi>>_{P_C}.
    """
    part.check(u)
    psi = np.asarray(psi_a, dtype=complex)
    if psi.shape != (part.d_a,):
        raise ValueError(f"state must live on {part.n_a} qubits")
    if abs(np.vdot(psi, psi).real - 1) > 1e-10:
        raise ValueError("state is not normalised")
    if method == "contract":
        t = CostEvaluator(u, part).tensor(v)
        num = float(np.sum(np.abs(np.einsum("a,xayc,c->xy", psi.conj(), t, psi)) ** 2))
        den = float(np.sum(np.abs(np.einsum("a,xayc->xyc", psi.conj(), t)) ** 2))
    elif method == "enumerate":
        num = den = 0.0
        udag = u.conj().T
        for p_c in enumerate_region(part.n, part.region_c):
            x = partial_trace(udag @ pauli_left(p_c, v), part.region_a)
            num += abs(np.vdot(psi, x @ psi)) ** 2
            xd_psi = x.conj().T @ psi
            den += float(np.vdot(xd_psi, xd_psi).real)
    else:
        raise ValueError(f"unknown method {method!r}")
    if den / part.d**2 < DEGENERATE_THRESHOLD:
        raise DegenerateCostError("teleportation post-selection has zero weight")
    return num / den


def learnability_overlap(u: np.ndarray, v: np.ndarray) -> float:
    """``|tr(U^dag V)|^2 / d``; equals d only when V = U up to phase."""
    if u.shape != v.shape:
        raise ValueError("dimension mismatch")
    return abs(np.vdot(u, v)) ** 2 / u.shape[0]


def haar_state(n_qubits: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.normal(size=1 << n_qubits) + 1j * rng.normal(size=1 << n_qubits)
    return psi / np.linalg.norm(psi)


def basis_state(n_qubits: int, index: int) -> np.ndarray:
    psi = np.zeros(1 << n_qubits, dtype=complex)
    psi[index] = 1.0
    return psi
