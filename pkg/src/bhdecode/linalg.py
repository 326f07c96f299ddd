"""Dense complex kernels for small qubit registers.

Conventions shared by the whole package:

* qubit 0 is the most significant bit of a basis index;
* a matrix's row index is the output register, its column index the input;
* gates left-multiply, and ``apply_gate`` never mutates its argument.

Pauli factors are always applied by index permutation plus a phase vector,
so a trace with two Pauli insertions costs O(d**2) instead of O(d**3).
"""
from __future__ import annotations

from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .pauli import Pauli, action_arrays, check_region, enumerate_region

MATRIX_QUBIT_CAP = 12
STATE_QUBIT_CAP = 24


class CapacityError(ValueError):
    """Requested object exceeds the configured dense size cap."""


class ProjectionError(ArithmeticError):
    """Post-selection onto an EPR pair has (numerically) zero probability."""


def qubit_count(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 1 or (1 << n) != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


def check_matrix_cap(n: int) -> None:
    if n > MATRIX_QUBIT_CAP:
        raise CapacityError(f"{n}-qubit matrix exceeds cap of {MATRIX_QUBIT_CAP} qubits")


def check_state_cap(m: int) -> None:
    if m > STATE_QUBIT_CAP:
        raise CapacityError(f"{m}-qubit state exceeds cap of {STATE_QUBIT_CAP} qubits")


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    rows = a.shape[0] * b.shape[0]
    if rows > 1 and qubit_count(rows) > MATRIX_QUBIT_CAP:
        raise CapacityError(f"kron result of dimension {rows} exceeds cap")
    return np.kron(a, b)


def partial_trace(m: np.ndarray, keep: Iterable[int]) -> np.ndarray:
    """Reduced operator on ``keep`` (in the given order).

    ``m`` is either a square matrix or a pure state vector, in which case the
    reduced density matrix of ``|m><m|`` is returned.
    """
    m = np.asarray(m)
    n = qubit_count(m.shape[0])
    keep = check_region(n, keep)
    traced = [q for q in range(n) if q not in keep]
    dk = 1 << len(keep)
    if m.ndim == 1:
        psi = np.moveaxis(m.reshape((2,) * n), list(keep) + traced, range(n)).reshape(dk, -1)
        return psi @ psi.conj().T
    if m.shape != (1 << n, 1 << n):
        raise ValueError("expected a square matrix")
    t = m.reshape((2,) * (2 * n))
    order = list(keep) + traced + [n + q for q in keep] + [n + q for q in traced]
    t = t.transpose(order).reshape(dk, 1 << len(traced), dk, 1 << len(traced))
    return np.einsum("ikjk->ij", t)


def embed(op: np.ndarray, region: Sequence[int], n: int) -> np.ndarray:
    """``op`` on ``region`` tensored with identity on the remaining qubits."""
    region = check_region(n, region)
    rest = [q for q in range(n) if q not in region]
    full = np.kron(op, np.eye(1 << len(rest)))
    order = list(region) + rest
    inv = np.argsort(order)
    t = full.reshape((2,) * (2 * n)).transpose(list(inv) + [n + i for i in inv])
    return t.reshape(1 << n, 1 << n)


@lru_cache(maxsize=4096)
def _pauli_arrays(p: Pauli) -> tuple[np.ndarray, np.ndarray]:
    rows, phases = action_arrays(p)
    rows.setflags(write=False)
    phases.setflags(write=False)
    return rows, phases


def pauli_left(p: Pauli, m: np.ndarray) -> np.ndarray:
    """``P @ m`` for a matrix or state ``m``."""
    rows, phases = _pauli_arrays(p)
    # (P m)[rows[i]] = phases[i] m[i]; rows is an involution
    if m.ndim == 1:
        return (phases * m)[rows]
    return (phases[:, None] * m)[rows]


def pauli_right(m: np.ndarray, p: Pauli) -> np.ndarray:
    """``m @ P``."""
    rows, phases = _pauli_arrays(p)
    # (m P)[:, i] = phases[i] m[:, rows[i]]
    return m[:, rows] * phases[None, :]


def pauli_sandwich_trace(u: np.ndarray, v: np.ndarray, p_c: Pauli, p_a: Pauli) -> complex:
    """``tr(U^dag P_C V P_A)`` without forming dense Pauli matrices."""
    n = qubit_count(u.shape[0])
    if v.shape != u.shape or p_c.n != n or p_a.n != n:
        raise ValueError("dimension mismatch")
    return complex(np.vdot(u, pauli_right(pauli_left(p_c, v), p_a)))


def pauli_twirl(o: np.ndarray, region: Sequence[int]) -> np.ndarray:
    """Average of ``P o P`` over the Pauli group on ``region``."""
    n = qubit_count(o.shape[0])
    paulis = enumerate_region(n, region)
    acc = np.zeros_like(o, dtype=complex)
    for p in paulis:
        acc += pauli_right(pauli_left(p, o), p)
    return acc / len(paulis)


def pauli_coefficients(m: np.ndarray) -> dict[Pauli, complex]:
    """Expansion ``m = sum_P c_P P`` (nonzero terms only).  Small n only."""
    n = qubit_count(m.shape[0])
    d = 1 << n
    out = {}
    for p in enumerate_region(n, range(n)):
        c = np.trace(pauli_left(p, m)) / d  # P is Hermitian
        if abs(c) > 1e-10:
            out[p] = complex(c)
    return out


def epr_state(k: int) -> np.ndarray:
    """Maximally entangled state on 2k qubits pairing qubit j with k + j."""
    if k < 0:
        raise ValueError("negative register size")
    dk = 1 << k
    check_state_cap(2 * k)
    s = np.zeros(dk * dk, dtype=complex)
    s[np.arange(dk) * (dk + 1)] = dk ** -0.5
    return s


def epr_contract(s: np.ndarray, half1: Sequence[int], half2: Sequence[int]) -> np.ndarray:
    """``(<EPR| ⊗ 1) |s>``: amplitudes on the remaining qubits (in order)."""
    m = qubit_count(s.shape[0])
    half1 = check_region(m, half1)
    half2 = check_region(m, half2)
    if len(half1) != len(half2) or set(half1) & set(half2):
        raise ValueError("EPR halves must be disjoint and equally sized")
    k = len(half1)
    t = np.moveaxis(s.reshape((2,) * m), list(half1) + list(half2), range(2 * k))
    t = t.reshape(1 << k, 1 << k, -1)
    return np.einsum("iir->r", t) * (1 << k) ** -0.5


def project_epr(
    s: np.ndarray, half1: Sequence[int], half2: Sequence[int], threshold: float = 1e-14
) -> tuple[np.ndarray, float]:
    """Project onto the EPR pair across two halves and renormalise.

    Returns the post-measurement state (same qubit layout as ``s``) and the
    probability ``<s|Pi|s>`` of the projection succeeding.
    """
    rest_amp = epr_contract(s, half1, half2)
    prob = float(np.vdot(rest_amp, rest_amp).real)
    if prob < threshold:
        raise ProjectionError(f"EPR projection probability {prob:.3e} below {threshold}")
    m = qubit_count(s.shape[0])
    k = len(half1)
    rest = [q for q in range(m) if q not in half1 and q not in half2]
    full = np.kron(epr_state(k), rest_amp / np.sqrt(prob))
    order = list(half1) + list(half2) + rest
    t = np.moveaxis(full.reshape((2,) * m), range(m), order)
    return t.reshape(-1), prob


def apply_unitary(s: np.ndarray, op: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    """Apply a k-qubit operator to the listed qubits of a state vector.

    ``qubits[j]`` receives the operator's qubit j.
    """
    m = qubit_count(s.shape[0])
    qubits = check_region(m, qubits)
    k = len(qubits)
    if op.shape != (1 << k, 1 << k):
        raise ValueError("operator size does not match qubit list")
    t = np.moveaxis(s.reshape((2,) * m), qubits, range(k))
    shape = t.shape
    t = (op @ t.reshape(1 << k, -1)).reshape(shape)
    return np.moveaxis(t, range(k), qubits).reshape(-1)


_SQRT_HALF = 2 ** -0.5
_T_PHASE = np.exp(0.25j * np.pi)


def apply_gate(g, target: np.ndarray) -> np.ndarray:
    """Left-multiply a state vector or matrix by a gate (out of place).

    ``g`` needs ``kind`` in {"H", "P", "T", "CNOT"} and ``qubits``.
    """
    n = qubit_count(target.shape[0])
    for q in g.qubits:
        if not 0 <= q < n:
            raise IndexError(f"gate qubit {q} outside [0, {n})")
    if g.kind == "CNOT":
        c, t = g.qubits
        lo, hi = min(c, t), max(c, t)
        v = target.reshape(1 << lo, 2, 1 << (hi - lo - 1), 2, -1)
        out = v.copy()
        if c < t:
            out[:, 1, :, 0] = v[:, 1, :, 1]
            out[:, 1, :, 1] = v[:, 1, :, 0]
        else:
            out[:, 0, :, 1] = v[:, 1, :, 1]
            out[:, 1, :, 1] = v[:, 0, :, 1]
        return out.reshape(target.shape)
    (q,) = g.qubits
    v = target.reshape(1 << q, 2, -1)
    if g.kind == "H":
        out = np.empty_like(v)
        np.add(v[:, 0], v[:, 1], out=out[:, 0])
        np.subtract(v[:, 0], v[:, 1], out=out[:, 1])
        out *= _SQRT_HALF
    elif g.kind in ("P", "T"):
        out = v.copy()
        out[:, 1] *= 1j if g.kind == "P" else _T_PHASE
    else:
        raise ValueError(f"unknown gate kind {g.kind!r}")
    return out.reshape(target.shape)


def overlap_tensor(u: np.ndarray, v: np.ndarray, n_a: int, n_c: int) -> np.ndarray:
    """Contract ``conj(U)`` with ``V`` over the D output and B input legs.

    Returns ``T[x, a, y, c] = sum_{delta, b} conj(U[(x,delta),(a,b)]) V[(y,delta),(c,b)]``
    with x, y indexing C and a, c indexing A.  For any C-Pauli ``P``,
    ``sum_{x,y} P[x,y] T[x,:,y,:]`` is the partial trace over B of
    ``U^dag P V``, so every Pauli sum in the cost function collapses onto
    this small tensor.
    """
    n = qubit_count(u.shape[0])
    if v.shape != u.shape:
        raise ValueError("dimension mismatch")
    dc, da = 1 << n_c, 1 << n_a
    dd, db = (1 << n) // dc, (1 << n) // da
    um = u.reshape(dc, dd, da, db).transpose(0, 2, 1, 3).reshape(dc * da, dd * db)
    vm = v.reshape(dc, dd, da, db).transpose(0, 2, 1, 3).reshape(dc * da, dd * db)
    return (um.conj() @ vm.T).reshape(dc, da, dc, da)
