"""Stabilizer tableau for Clifford conjugation without dense matrices."""
from __future__ import annotations

import numpy as np

from .circuit import Circuit, Gate
from .pauli import Pauli, pauli_multiply


class CliffordTableau:
    """Images ``U g U^dag`` of the generators X_0..X_{n-1}, Z_0..Z_{n-1}.

    Row ``i < n`` holds the image of X_i, row ``n + i`` the image of Z_i, as
    x/z bit rows plus a sign bit ``r`` (Y convention for x = z = 1).
    """

    def __init__(self, xs: np.ndarray, zs: np.ndarray, r: np.ndarray):
        self.xs = np.asarray(xs, dtype=np.uint8)
        self.zs = np.asarray(zs, dtype=np.uint8)
        self.r = np.asarray(r, dtype=np.uint8)
        self.n = self.xs.shape[1]

    @classmethod
    def identity(cls, n: int) -> "CliffordTableau":
        eye = np.eye(n, dtype=np.uint8)
        zero = np.zeros((n, n), dtype=np.uint8)
        return cls(np.vstack([eye, zero]), np.vstack([zero, eye]), np.zeros(2 * n, np.uint8))

    @classmethod
    def from_circuit(cls, c: Circuit) -> "CliffordTableau":
        tab = cls.identity(c.n)
        for g in c.gates:
            tab.apply(g)
        return tab

    @classmethod
    def from_dense(cls, u: np.ndarray, atol: float = 1e-8) -> "CliffordTableau":
        """Read the tableau off a dense Clifford unitary (small n only)."""
        d = u.shape[0]
        n = d.bit_length() - 1
        xs = np.zeros((2 * n, n), np.uint8)
        zs = np.zeros((2 * n, n), np.uint8)
        r = np.zeros(2 * n, np.uint8)
        gens = [Pauli.single(n, q, "X") for q in range(n)] + [Pauli.single(n, q, "Z") for q in range(n)]
        for row, g in enumerate(gens):
            m = u @ g.dense() @ u.conj().T
            x = int(np.argmax(np.abs(m[:, 0])))
            z = 0
            for q in range(n):
                e = 1 << (n - 1 - q)
                ratio = m[x ^ e, e] / m[x, 0]
                if abs(ratio + 1) < atol:
                    z |= e
            q_unsigned = Pauli(n, x, z)
            lam = m[x, 0] / (1j ** (x & z).bit_count())
            if not np.allclose(m, lam * q_unsigned.dense(), atol=atol) or abs(abs(lam.real) - 1) > atol:
                raise ValueError("matrix does not map Paulis to signed Paulis")
            xs[row] = q_unsigned.x_bits
            zs[row] = q_unsigned.z_bits
            r[row] = lam.real < 0
        return cls(xs, zs, r)

    def copy(self) -> "CliffordTableau":
        return CliffordTableau(self.xs.copy(), self.zs.copy(), self.r.copy())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CliffordTableau)
            and np.array_equal(self.xs, other.xs)
            and np.array_equal(self.zs, other.zs)
            and np.array_equal(self.r, other.r)
        )

    def apply(self, g: Gate) -> "CliffordTableau":
        """In place: tableau of ``g U`` from that of ``U``."""
        xs, zs = self.xs, self.zs
        if g.kind == "H":
            (a,) = g.qubits
            self.r ^= xs[:, a] & zs[:, a]
            xs[:, a], zs[:, a] = zs[:, a].copy(), xs[:, a].copy()
        elif g.kind == "P":
            (a,) = g.qubits
            self.r ^= xs[:, a] & zs[:, a]
            zs[:, a] ^= xs[:, a]
        elif g.kind == "CNOT":
            a, b = g.qubits
            self.r ^= xs[:, a] & zs[:, b] & (xs[:, b] ^ zs[:, a] ^ 1)
            xs[:, b] ^= xs[:, a]
            zs[:, a] ^= zs[:, b]
        else:
            raise ValueError(f"{g.kind} is not a Clifford gate")
        return self

    def symplectic_matrix(self) -> np.ndarray:
        return np.hstack([self.xs, self.zs])

    def is_symplectic(self) -> bool:
        n = self.n
        m = self.symplectic_matrix().astype(np.int64)
        omega = np.block([[np.zeros((n, n), int), np.eye(n, dtype=int)], [np.eye(n, dtype=int), np.zeros((n, n), int)]])
        return np.array_equal((m @ omega @ m.T) % 2, omega)

    def generator_image(self, row: int) -> Pauli:
        return Pauli.from_bits(self.xs[row], self.zs[row], 2 * int(self.r[row]))

    def conjugate(self, p: Pauli, inverse: bool = False) -> Pauli:
        """``U p U^dag`` (or ``U^dag p U`` with ``inverse=True``)."""
        if p.n != self.n:
            raise ValueError("qubit count mismatch")
        if inverse:
            return self._conjugate_inverse(p)
        n = self.n
        # p = i^(phase + |x&z|) prod_q X_q^x_q prod_q Z_q^z_q
        out = Pauli(n, 0, 0, p.phase + (p.x & p.z).bit_count())
        xb, zb = p.x_bits, p.z_bits
        for q in range(n):
            if xb[q]:
                out = pauli_multiply(out, self.generator_image(q))
        for q in range(n):
            if zb[q]:
                out = pauli_multiply(out, self.generator_image(n + q))
        return out

    def _conjugate_inverse(self, p: Pauli) -> Pauli:
        n = self.n
        m = self.symplectic_matrix().astype(np.int64)
        omega = np.block([[np.zeros((n, n), int), np.eye(n, dtype=int)], [np.eye(n, dtype=int), np.zeros((n, n), int)]])
        m_inv = (omega @ m.T @ omega) % 2
        v = np.array(p.x_bits + p.z_bits, dtype=np.int64)
        w = (v @ m_inv) % 2
        pre = Pauli.from_bits(w[:n], w[n:])
        image = self.conjugate(pre)
        return Pauli(n, pre.x, pre.z, p.phase - image.phase)


def tableau_conjugate(tab: CliffordTableau, p: Pauli, inverse: bool = False) -> Pauli:
    return tab.conjugate(p, inverse=inverse)
