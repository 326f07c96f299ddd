"""Symplectic n-qubit Pauli algebra.

A Pauli is stored as two bitmasks (``x``, ``z``) and a power of ``i``.
Qubit ``q`` lives at bit ``n - 1 - q`` of each mask, matching the
computational-basis convention used everywhere in the package: qubit 0 is
the most significant bit of a basis index.  With that layout the X part of
a Pauli acts on a basis index by a plain XOR with ``x``.

The dense operator is ``i**phase`` times the tensor product of single-qubit
factors, where the bit pair (x, z) = (1, 1) means the Hermitian Y.  So the
phase-0 elements are exactly the usual Hermitian Paulis.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

_LETTERS = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}
_BITS = {v: k for k, v in _LETTERS.items()}
_PHASE_PREFIX = ("", "i", "-", "-i")


def check_region(n: int, region: Iterable[int]) -> tuple[int, ...]:
    """Validate a region (ordered, distinct qubit indices below ``n``)."""
    r = tuple(int(q) for q in region)
    if len(set(r)) != len(r):
        raise ValueError(f"region has repeated qubits: {r}")
    for q in r:
        if not 0 <= q < n:
            raise ValueError(f"qubit {q} outside [0, {n})")
    return r


@dataclass(frozen=True)
class Pauli:
    n: int
    x: int
    z: int
    phase: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("negative qubit count")
        top = 1 << self.n
        if not (0 <= self.x < top and 0 <= self.z < top):
            raise ValueError("bit masks wider than n qubits")
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def identity(cls, n: int) -> "Pauli":
        return cls(n, 0, 0)

    @classmethod
    def from_bits(cls, x_bits: Sequence[int], z_bits: Sequence[int], phase: int = 0) -> "Pauli":
        if len(x_bits) != len(z_bits):
            raise ValueError("x and z bit vectors differ in length")
        n = len(x_bits)
        x = sum(1 << (n - 1 - q) for q, b in enumerate(x_bits) if b)
        z = sum(1 << (n - 1 - q) for q, b in enumerate(z_bits) if b)
        return cls(n, x, z, phase)

    @classmethod
    def from_string(cls, s: str) -> "Pauli":
        """Parse strings such as ``"XZI"``, ``"-iXZI"`` or ``"+Y"``."""
        s = s.strip()
        phase = 0
        if s.startswith("+"):
            s = s[1:]
        elif s.startswith("-"):
            phase = 2
            s = s[1:]
        if s.startswith("i"):
            phase += 1
            s = s[1:]
        try:
            bits = [_BITS[c] for c in s]
        except KeyError as exc:
            raise ValueError(f"bad Pauli letter in {s!r}") from exc
        return cls.from_bits([b[0] for b in bits], [b[1] for b in bits], phase)

    @classmethod
    def single(cls, n: int, qubit: int, letter: str) -> "Pauli":
        """The Pauli ``letter`` on ``qubit`` and identity elsewhere."""
        xb, zb = _BITS[letter]
        bit = 1 << (n - 1 - qubit)
        return cls(n, bit * xb, bit * zb)

    @property
    def x_bits(self) -> tuple[int, ...]:
        return tuple((self.x >> (self.n - 1 - q)) & 1 for q in range(self.n))

    @property
    def z_bits(self) -> tuple[int, ...]:
        return tuple((self.z >> (self.n - 1 - q)) & 1 for q in range(self.n))

    @property
    def support(self) -> tuple[int, ...]:
        mask = self.x | self.z
        return tuple(q for q in range(self.n) if (mask >> (self.n - 1 - q)) & 1)

    @property
    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def unsigned(self) -> "Pauli":
        return Pauli(self.n, self.x, self.z, 0)

    def letters(self) -> str:
        return "".join(_LETTERS[b] for b in zip(self.x_bits, self.z_bits))

    def __str__(self) -> str:
        return _PHASE_PREFIX[self.phase] + self.letters()

    def __mul__(self, other: "Pauli") -> "Pauli":
        return pauli_multiply(self, other)

    def dense(self) -> np.ndarray:
        """Explicit 2**n x 2**n matrix.  Only for tests and small n."""
        d = 1 << self.n
        cols = np.arange(d)
        rows, phases = action_arrays(self)
        m = np.zeros((d, d), dtype=complex)
        m[rows, cols] = phases
        return m


def _check_same_n(p: Pauli, q: Pauli) -> None:
    if p.n != q.n:
        raise ValueError(f"qubit count mismatch: {p.n} vs {q.n}")


def pauli_multiply(p: Pauli, q: Pauli) -> Pauli:
    """Exact product ``p @ q``, phase included."""
    _check_same_n(p, q)
    x = p.x ^ q.x
    z = p.z ^ q.z
    # Convert Y-convention phases to the X^x Z^z form, multiply, convert back.
    ph = (
        p.phase
        + q.phase
        + (p.x & p.z).bit_count()
        + (q.x & q.z).bit_count()
        + 2 * (p.z & q.x).bit_count()
        - (x & z).bit_count()
    )
    return Pauli(p.n, x, z, ph)


def commutes(p: Pauli, q: Pauli) -> bool:
    _check_same_n(p, q)
    return ((p.x & q.z).bit_count() + (p.z & q.x).bit_count()) % 2 == 0


def enumerate_region(n: int, region: Iterable[int]) -> list[Pauli]:
    """All 4**len(region) phase-free Paulis supported on ``region``.

    Order is lexicographic with per-qubit digits I, X, Y, Z and the first
    region qubit most significant, so the identity is always element 0.
    """
    r = check_region(n, region)
    out = []
    for letters in itertools.product("IXYZ", repeat=len(r)):
        x = z = 0
        for q, c in zip(r, letters):
            xb, zb = _BITS[c]
            bit = 1 << (n - 1 - q)
            x |= bit * xb
            z |= bit * zb
        out.append(Pauli(n, x, z))
    return out


def random_pauli(n: int, region: Iterable[int] | None, rng: np.random.Generator) -> Pauli:
    """Uniform phase-free Pauli on ``region`` (whole register when None)."""
    r = range(n) if region is None else check_region(n, region)
    x = z = 0
    for q in r:
        bits = rng.integers(0, 2, size=2)
        bit = 1 << (n - 1 - q)
        x |= bit * int(bits[0])
        z |= bit * int(bits[1])
    return Pauli(n, x, z)


def supported_in(p: Pauli, region: Iterable[int]) -> bool:
    allowed = 0
    for q in check_region(p.n, region):
        allowed |= 1 << (p.n - 1 - q)
    return ((p.x | p.z) & ~allowed) == 0


_I_POWERS = np.array([1, 1j, -1, -1j])


def index_action(p: Pauli, i: int) -> tuple[int, complex]:
    """Where ``p`` sends basis state ``i``: ``p|i> = c|j>``."""
    if not 0 <= i < (1 << p.n):
        raise IndexError(f"basis index {i} out of range for {p.n} qubits")
    j = i ^ p.x
    k = p.phase + (p.x & p.z).bit_count() + 2 * (p.z & i).bit_count()
    return j, complex(_I_POWERS[k % 4])


def _parity(a: np.ndarray) -> np.ndarray:
    return np.bitwise_count(a) & 1


def action_arrays(p: Pauli) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`index_action` over every basis index.

    Returns ``(rows, phases)`` such that column ``i`` of ``dense(p)`` holds
    ``phases[i]`` at row ``rows[i]``.
    """
    idx = np.arange(1 << p.n, dtype=np.int64)
    rows = idx ^ p.x
    k = (p.phase + (p.x & p.z).bit_count() + 2 * _parity(idx & p.z)) % 4
    return rows, _I_POWERS[k]
