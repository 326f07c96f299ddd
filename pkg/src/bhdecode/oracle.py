"""Statevector simulation of the full decoding protocol.

This is the ground truth the closed forms in :mod:`bhdecode.fidelity` are
checked against.  Registers are laid out as R, A, B, B', A', R' (teleport
variant: A, B, B', A', R').  U acts on the A B wires, whose first n_C wires
are then C and the rest D.  The decoder acts as the entrywise conjugate V*
with V's qubit j on A'_j for j < n_A and on B'_{j - n_A} otherwise; V's
output qubits [n_C, n) form D', which is projected against D.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import (
    apply_unitary,
    check_state_cap,
    epr_contract,
    epr_state,
    partial_trace,
    project_epr,
)
from .metrics import Partition

ORACLE_QUBIT_CAP = 16


@dataclass(frozen=True)
class ProtocolLayout:
    part: Partition
    teleport: bool = False

    @property
    def registers(self) -> dict[str, tuple[int, ...]]:
        p = self.part
        sizes = [("A", p.n_a), ("B", p.n_b), ("B'", p.n_b), ("A'", p.n_a), ("R'", p.n_a)]
        if not self.teleport:
            sizes.insert(0, ("R", p.n_a))
        out, start = {}, 0
        for name, k in sizes:
            out[name] = tuple(range(start, start + k))
            start += k
        return out

    @property
    def m(self) -> int:
        return 2 * self.part.n + (self.part.n_a if self.teleport else 2 * self.part.n_a)

    @property
    def u_wires(self) -> tuple[int, ...]:
        r = self.registers
        return r["A"] + r["B"]

    @property
    def v_wires(self) -> tuple[int, ...]:
        r = self.registers
        return r["A'"] + r["B'"]

    @property
    def c_wires(self) -> tuple[int, ...]:
        return self.u_wires[: self.part.n_c]

    @property
    def d_wires(self) -> tuple[int, ...]:
        return self.u_wires[self.part.n_c :]

    @property
    def dprime_wires(self) -> tuple[int, ...]:
        return self.v_wires[self.part.n_c :]


def _check_size(layout: ProtocolLayout, max_qubits: int) -> None:
    check_state_cap(layout.m)
    if layout.m > max_qubits:
        raise ValueError(f"oracle needs {layout.m} qubits, cap is {max_qubits}")


def _decode(state: np.ndarray, u, v, layout: ProtocolLayout) -> tuple[np.ndarray, float]:
    state = apply_unitary(state, u, layout.u_wires)
    state = apply_unitary(state, v.conj(), layout.v_wires)
    return project_epr(state, layout.d_wires, layout.dprime_wires)


def build_protocol_state(
    u: np.ndarray, v: np.ndarray, part: Partition, max_qubits: int = ORACLE_QUBIT_CAP
) -> tuple[np.ndarray, float]:
    """Decoded state Pi_DD' V* U |RA>|BB'>|A'R'> (normalised) and P_out."""
    part.check(u)
    layout = ProtocolLayout(part)
    _check_size(layout, max_qubits)
    state = np.kron(np.kron(epr_state(part.n_a), epr_state(part.n_b)), epr_state(part.n_a))
    return _decode(state, u, v, layout)


def oracle_fidelity(u: np.ndarray, v: np.ndarray, part: Partition, max_qubits: int = ORACLE_QUBIT_CAP) -> float:
    """Overlap of the decoded state with the EPR pair on (R, R')."""
    state, _ = build_protocol_state(u, v, part, max_qubits)
    regs = ProtocolLayout(part).registers
    amp = epr_contract(state, regs["R"], regs["R'"])
    return float(np.vdot(amp, amp).real)


def oracle_teleport(
    u: np.ndarray, v: np.ndarray, psi_a: np.ndarray, part: Partition, max_qubits: int = ORACLE_QUBIT_CAP
) -> float:
    """<psi| rho_R' |psi> after decoding |psi>_A |BB'> |A'R'>."""
    part.check(u)
    layout = ProtocolLayout(part, teleport=True)
    _check_size(layout, max_qubits)
    state = np.kron(np.kron(np.asarray(psi_a, dtype=complex), epr_state(part.n_b)), epr_state(part.n_a))
    state, _ = _decode(state, u, v, layout)
    rho = partial_trace(state, layout.registers["R'"])
    return float(np.vdot(psi_a, rho @ psi_a).real)


def build_hp_state(u: np.ndarray, part: Partition) -> np.ndarray:
    """(1_{RB'} ⊗ U_AB)|RA>|BB'> on registers R, A, B, B' (A B become C D)."""
    part.check(u)
    check_state_cap(2 * part.n)
    state = np.kron(epr_state(part.n_a), epr_state(part.n_b))
    return apply_unitary(state, u, range(part.n_a, part.n_a + part.n))


def hp_region_rc(part: Partition) -> tuple[int, ...]:
    """Wires of R and C in :func:`build_hp_state`'s layout."""
    return tuple(range(part.n_a)) + tuple(range(part.n_a, part.n_a + part.n_c))


def renyi2_entropy(s: np.ndarray, region) -> float:
    """-log2 tr(rho^2) of the reduced state on ``region``."""
    rho = partial_trace(s, region)
    return -math.log2(float(np.vdot(rho, rho).real))


@dataclass
class CrossCheck:
    pairs: int
    max_fidelity_error: float
    max_teleport_error: float
    worst: dict


def cross_check(
    n_pairs: int,
    rng: np.random.Generator,
    sizes=(4, 5, 6),
    max_t: int = 4,
    max_na: int = 2,
    max_nc: int = 2,
    gates_per_layer: int | None = None,
) -> CrossCheck:
    """Closed-form F and F_psi against the oracle on random (U, V) pairs.

    U and V are independent t-doped circuits; partitions, t and psi are drawn
    at random.  Pairs whose post-selection has zero weight (F undefined) are
    redrawn.
    """
    from .circuit import sample_doped_circuit, synthesize_dense
    from .fidelity import DegenerateCostError, fidelity, haar_state, teleport_fidelity

    worst = {"fidelity": (0.0, None), "teleport": (0.0, None)}
    done = 0
    while done < n_pairs:
        n = int(rng.choice(sizes))
        part = Partition(n, int(rng.integers(1, max_na + 1)), int(rng.integers(1, max_nc + 1)))
        t_u, t_v = int(rng.integers(max_t + 1)), int(rng.integers(max_t + 1))
        u = synthesize_dense(sample_doped_circuit(n, t_u, rng, gates_per_layer))
        v = synthesize_dense(sample_doped_circuit(n, t_v, rng, gates_per_layer))
        psi = haar_state(part.n_a, rng)
        try:
            f = fidelity(u, v, part)
            f_psi = teleport_fidelity(u, v, psi, part)
        except DegenerateCostError:
            continue
        label = (n, part.n_a, part.n_c, t_u, t_v)
        err = abs(f - oracle_fidelity(u, v, part))
        if err >= worst["fidelity"][0]:
            worst["fidelity"] = (err, label)
        err = abs(f_psi - oracle_teleport(u, v, psi, part))
        if err >= worst["teleport"][0]:
            worst["teleport"] = (err, label)
        done += 1
    return CrossCheck(done, worst["fidelity"][0], worst["teleport"][0], worst)
