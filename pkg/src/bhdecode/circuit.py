"""Gate-level circuits over {CNOT, H, P, T} and the t-doped Clifford ensemble."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .linalg import apply_gate, check_matrix_cap, embed

CLIFFORD_KINDS = ("CNOT", "H", "P")
ALL_KINDS = CLIFFORD_KINDS + ("T",)

GATE_MATRICES = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "P": np.diag([1, 1j]).astype(complex),
    "T": np.diag([1, np.exp(0.25j * np.pi)]),
    "CNOT": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
}


class Gate(NamedTuple):
    kind: str
    qubits: tuple[int, ...]

    def __str__(self) -> str:
        return " ".join([self.kind, *map(str, self.qubits)])

    @classmethod
    def parse(cls, line: str) -> "Gate":
        kind, *qs = line.split()
        g = cls(kind, tuple(int(q) for q in qs))
        g.validate()
        return g

    def validate(self, n: int | None = None) -> None:
        arity = 2 if self.kind == "CNOT" else 1
        if self.kind not in ALL_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(self.qubits) != arity:
            raise ValueError(f"{self.kind} takes {arity} qubit(s), got {self.qubits}")
        if arity == 2 and self.qubits[0] == self.qubits[1]:
            raise ValueError("CNOT control equals target")
        if n is not None and any(not 0 <= q < n for q in self.qubits):
            raise ValueError(f"gate {self} outside a {n}-qubit register")


def H(q: int) -> Gate:
    return Gate("H", (q,))


def P(q: int) -> Gate:
    return Gate("P", (q,))


def T(q: int) -> Gate:
    return Gate("T", (q,))


def CNOT(control: int, target: int) -> Gate:
    return Gate("CNOT", (control, target))


@dataclass(frozen=True)
class Circuit:
    """Ordered gate list; the first gate acts first."""

    n: int
    gates: tuple[Gate, ...] = ()
    seed: int | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            g.validate(self.n)

    @property
    def t(self) -> int:
        return sum(g.kind == "T" for g in self.gates)

    def __len__(self) -> int:
        return len(self.gates)

    def is_clifford(self) -> bool:
        return self.t == 0

    def to_text(self) -> str:
        head = f"# n={self.n} t={self.t}"
        if self.seed is not None:
            head += f" seed={self.seed}"
        return "\n".join([head, *map(str, self.gates)]) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Circuit":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("#"):
            raise ValueError("missing circuit header")
        header = dict(kv.split("=") for kv in lines[0][1:].split())
        c = cls(
            int(header["n"]),
            tuple(Gate.parse(ln) for ln in lines[1:]),
            int(header["seed"]) if "seed" in header else None,
        )
        if "t" in header and int(header["t"]) != c.t:
            raise ValueError("header T count disagrees with gate list")
        return c


def _random_gate(n: int, kinds: Sequence[str], rng: np.random.Generator) -> Gate:
    if n < 2:
        kinds = [k for k in kinds if k != "CNOT"]
    kind = kinds[int(rng.integers(len(kinds)))]
    if kind == "CNOT":
        c, t = rng.choice(n, size=2, replace=False)
        return Gate("CNOT", (int(c), int(t)))
    return Gate(kind, (int(rng.integers(n)),))


def propose_clifford_gate(n: int, rng: np.random.Generator) -> Gate:
    """One of CNOT, H, P with equal probability (H, P only for n = 1)."""
    if n < 1:
        raise ValueError("need at least one qubit")
    return _random_gate(n, CLIFFORD_KINDS, rng)


def sample_random_clifford(n: int, length: int, rng: np.random.Generator) -> Circuit:
    if length < 0:
        raise ValueError("negative circuit length")
    return Circuit(n, tuple(_random_gate(n, CLIFFORD_KINDS, rng) for _ in range(length)))


def default_gates_per_layer(n: int) -> int:
    return 3 * n * n


def sample_doped_circuit(
    n: int, t: int, rng: np.random.Generator, gates_per_layer: int | None = None
) -> Circuit:
    """Draw from the t-doped ensemble: C_t T C_{t-1} ... T C_0.

    Each Clifford block is a random sequence of ``gates_per_layer`` gates
    (default 3 n^2); each T lands on a uniformly random qubit.
    """
    if t < 0:
        raise ValueError("negative doping")
    if gates_per_layer is None:
        gates_per_layer = default_gates_per_layer(n)
    gates = list(sample_random_clifford(n, gates_per_layer, rng).gates)
    for _ in range(t):
        gates.append(Gate("T", (int(rng.integers(n)),)))
        gates.extend(sample_random_clifford(n, gates_per_layer, rng).gates)
    return Circuit(n, tuple(gates))


def synthesize_dense(c: Circuit) -> np.ndarray:
    check_matrix_cap(c.n)
    m = np.eye(1 << c.n, dtype=complex)
    for g in c.gates:
        m = apply_gate(g, m)
    return m


def gate_matrix(g: Gate, n: int) -> np.ndarray:
    """Full 2^n x 2^n matrix of one gate, assembled with kron (reference path)."""
    return embed(GATE_MATRICES[g.kind], g.qubits, n)


def inverse_circuit(c: Circuit) -> Circuit:
    inv = []
    for g in reversed(c.gates):
        if g.kind == "P":
            inv.extend([g, g, g])
        elif g.kind == "T":
            inv.extend([g] * 7)
        else:
            inv.append(g)
    return Circuit(c.n, tuple(inv))
