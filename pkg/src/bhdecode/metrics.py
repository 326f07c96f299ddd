"""OTOC-based scrambling diagnostics.

Omega(U) is the average four-point OTOC over local Paulis on A and D.  The
production path evaluates it through the C-side rewriting

    Omega(U) = (d^2 d_A^2)^-1 sum_{P_C, P_A} |tr(U^dag P_C U P_A)|^2,

which is cheap when C is small; ``omega_direct`` keeps the defining
(P_A, P_D) double average for cross-checks at small n.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circuit import sample_doped_circuit, synthesize_dense
from .linalg import overlap_tensor, pauli_left, pauli_right, pauli_sandwich_trace, qubit_count
from .pauli import Pauli, enumerate_region, random_pauli, supported_in


@dataclass(frozen=True)
class Partition:
    """Input split A|B and output split C|D of an n-qubit register.

    A is input qubits [0, n_a), C is output qubits [0, n_c).
    """

    n: int
    n_a: int
    n_c: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one qubit")
        if not (0 <= self.n_a <= self.n and 0 <= self.n_c <= self.n):
            raise ValueError(f"bad partition n={self.n}, n_a={self.n_a}, n_c={self.n_c}")

    @property
    def n_b(self) -> int:
        return self.n - self.n_a

    @property
    def n_d(self) -> int:
        return self.n - self.n_c

    @property
    def d(self) -> int:
        return 1 << self.n

    @property
    def d_a(self) -> int:
        return 1 << self.n_a

    @property
    def d_b(self) -> int:
        return 1 << self.n_b

    @property
    def d_c(self) -> int:
        return 1 << self.n_c

    @property
    def d_d(self) -> int:
        return 1 << self.n_d

    @property
    def region_a(self) -> tuple[int, ...]:
        return tuple(range(self.n_a))

    @property
    def region_b(self) -> tuple[int, ...]:
        return tuple(range(self.n_a, self.n))

    @property
    def region_c(self) -> tuple[int, ...]:
        return tuple(range(self.n_c))

    @property
    def region_d(self) -> tuple[int, ...]:
        return tuple(range(self.n_c, self.n))

    def check(self, u: np.ndarray) -> None:
        if qubit_count(u.shape[0]) != self.n:
            raise ValueError(f"operator is not on {self.n} qubits")


def heisenberg(u: np.ndarray, p: Pauli) -> np.ndarray:
    """``U^dag P U``."""
    return u.conj().T @ pauli_left(p, u)


def _trace_product(x: np.ndarray, y: np.ndarray) -> complex:
    return complex(np.sum(x * y.T))


def otoc4(u: np.ndarray, p_a: Pauli, p_d: Pauli, part: Partition | None = None) -> float:
    """``(1/d) tr(P_A U^dag P_D U P_A U^dag P_D U)``."""
    if part is not None:
        if not supported_in(p_a, part.region_a):
            raise ValueError(f"{p_a} is not supported in A")
        if not supported_in(p_d, part.region_d):
            raise ValueError(f"{p_d} is not supported in D")
    q = heisenberg(u, p_d)
    val = _trace_product(pauli_right(pauli_left(p_a, q), p_a), q) / u.shape[0]
    if abs(val.imag) > 1e-9:
        raise ArithmeticError(f"OTOC has imaginary part {val.imag:.3e}")
    return val.real


def omega_exact(u: np.ndarray, part: Partition, method: str = "contract") -> float:
    """Omega(U) through the C-side Pauli sum.

    ``method="contract"`` collapses both Pauli sums onto the small overlap
    tensor; ``"enumerate"`` loops over all (P_C, P_A) pairs explicitly.
    """
    part.check(u)
    if method == "contract":
        t = overlap_tensor(u, u, part.n_a, part.n_c)
        total = part.d_a * part.d_c * float(np.vdot(t, t).real)
    elif method == "enumerate":
        pcs = enumerate_region(part.n, part.region_c)
        pas = enumerate_region(part.n, part.region_a)
        total = sum(abs(pauli_sandwich_trace(u, u, pc, pa)) ** 2 for pc in pcs for pa in pas)
    else:
        raise ValueError(f"unknown method {method!r}")
    return total / (part.d**2 * part.d_a**2)


def omega_direct(u: np.ndarray, part: Partition) -> float:
    """Omega(U) from its definition: average of otoc4 over all (P_A, P_D)."""
    part.check(u)
    pas = enumerate_region(part.n, part.region_a)
    acc = 0.0
    count = 0
    for p_d in enumerate_region(part.n, part.region_d):
        q = heisenberg(u, p_d)
        for p_a in pas:
            acc += _trace_product(pauli_right(pauli_left(p_a, q), p_a), q).real
            count += 1
    return acc / (count * part.d)


def omega_direct_sampled(
    u: np.ndarray, part: Partition, n_samples: int, rng: np.random.Generator
) -> tuple[float, float]:
    """Monte-Carlo Omega(U) over uniform (P_A, P_D); returns (mean, stderr)."""
    if n_samples < 1:
        raise ValueError("need at least one sample")
    vals = np.array(
        [
            otoc4(u, random_pauli(part.n, part.region_a, rng), random_pauli(part.n, part.region_d, rng))
            for _ in range(n_samples)
        ]
    )
    se = float(vals.std(ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else math.nan
    return float(vals.mean()), se


def otoc8_sampled(
    u: np.ndarray, p1: Pauli, p2: Pauli, samples: int, rng: np.random.Generator
) -> tuple[float, float]:
    """Eight-point OTOC by sampling the full-register Pauli twirl.

    Returns (mean, stderr) of ``(1/d) tr(W P W P)`` with
    ``W = P1 U^dag P2 U P1 U^dag P2 U`` and P uniform on all n qubits.
    """
    if p1.is_identity() or p2.is_identity():
        raise ValueError("otoc8 needs non-identity Paulis")
    n = qubit_count(u.shape[0])
    q = heisenberg(u, p2)
    w = pauli_right(pauli_left(p1, q), p1) @ q
    vals = np.empty(samples)
    for k in range(samples):
        p = random_pauli(n, None, rng)
        vals[k] = _trace_product(w, pauli_right(pauli_left(p, w), p)).real / u.shape[0]
    se = float(vals.std(ddof=1) / math.sqrt(samples)) if samples > 1 else math.nan
    return float(vals.mean()), se


def otoc8(
    u: np.ndarray,
    p1: Pauli,
    p2: Pauli,
    mode: str = "exact",
    samples: int = 500,
    rng: np.random.Generator | None = None,
) -> float:
    """Eight-point OTOC.  Exact mode uses otoc8 = otoc4**2 (Pauli 1-design)."""
    if p1.is_identity() or p2.is_identity():
        raise ValueError("otoc8 needs non-identity Paulis")
    if mode == "exact":
        return otoc4(u, p1, p2) ** 2
    if mode == "sampled":
        return otoc8_sampled(u, p1, p2, samples, rng if rng is not None else np.random.default_rng())[0]
    raise ValueError(f"unknown mode {mode!r}")


def scrambling_plateau(part: Partition) -> float:
    """Omega of an ideal scrambler: d_A^-2 + d_D^-2 - (d_A d_D)^-2."""
    a2, d2 = part.d_a**2, part.d_d**2
    return 1 / a2 + 1 / d2 - 1 / (a2 * d2)


def scrambling_residual(u: np.ndarray, part: Partition) -> float:
    """f(U): the non-identity (P_A, P_D) part of Omega, i.e. Omega - plateau."""
    return omega_exact(u, part) - scrambling_plateau(part)


def is_scrambling(u: np.ndarray, part: Partition, tol: float) -> bool:
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    return abs(omega_exact(u, part) - scrambling_plateau(part)) <= tol


def mutual_info_bound(omega: float, n_a: int) -> float:
    """Upper bound -log2(d_A^2 Omega) on I(R|C), in bits."""
    if omega <= 0:
        raise ValueError("Omega must be positive")
    return -math.log2(4.0**n_a * omega)


def radiation_overhead(n_a: int, eps: float) -> float:
    """Radiation qubits n_D = n_A + log2(eps^-1/2) for eps-maximal recovery."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    return n_a + 0.5 * math.log2(1 / eps)


@dataclass
class FluctuationEstimate:
    t: int
    mean: float
    variance: float
    se_mean: float
    se_variance: float
    values: np.ndarray = field(repr=False)


def delta_omega_estimate(
    t: int,
    n: int,
    part: Partition,
    ensemble_size: int,
    rng: np.random.Generator,
    gates_per_layer: int | None = None,
) -> FluctuationEstimate:
    """Ensemble mean and variance of Omega(U) over t-doped circuits."""
    if ensemble_size < 2:
        raise ValueError("variance needs at least two samples")
    if part.n != n:
        raise ValueError("partition size disagrees with n")
    vals = np.array(
        [
            omega_exact(synthesize_dense(sample_doped_circuit(n, t, rng, gates_per_layer)), part)
            for _ in range(ensemble_size)
        ]
    )
    m = ensemble_size
    var = float(vals.var(ddof=1))
    m4 = float(np.mean((vals - vals.mean()) ** 4))
    # large-sample standard error of the unbiased variance
    se_var = math.sqrt(max(m4 - var**2 * (m - 3) / (m - 1), 0.0) / m)
    return FluctuationEstimate(t, float(vals.mean()), var, float(vals.std(ddof=1) / math.sqrt(m)), se_var, vals)


def predicted_fluctuation(part: Partition, t: int) -> float:
    """Leading-order d_A^-2 d_D^-2 (3/4)^t."""
    return 0.75**t / (part.d_a**2 * part.d_d**2)


def fluctuation_decay_ratio(ts, variances) -> tuple[float, float]:
    """Log-linear least squares of variance against t.

    Returns (per-step decay ratio, fitted variance at t = 0).
    """
    ts = np.asarray(ts, dtype=float)
    v = np.asarray(variances, dtype=float)
    if np.any(v <= 0):
        raise ValueError("variances must be positive for a log fit")
    slope, intercept = np.polyfit(ts, np.log(v), 1)
    return float(np.exp(slope)), float(np.exp(intercept))
