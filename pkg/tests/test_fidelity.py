import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.stats import unitary_group

from bhdecode.circuit import CNOT, Circuit, Gate, H, P, propose_clifford_gate, sample_doped_circuit, synthesize_dense
from bhdecode.fidelity import (
    CostEvaluator,
    DegenerateCostError,
    basis_state,
    cost,
    cost_after_gate,
    fidelity,
    haar_state,
    ideal_fidelity,
    learnability_overlap,
    p_out,
    teleport_fidelity,
)
from bhdecode.linalg import apply_gate
from bhdecode.metrics import Partition, omega_exact
from bhdecode.oracle import build_protocol_state, oracle_fidelity, oracle_teleport


def doped(n, t, rng):
    return synthesize_dense(sample_doped_circuit(n, t, rng))


def test_identity_pair():
    part = Partition(4, 2, 1)
    i4 = np.eye(16)
    bd = cost(i4, i4, part)
    assert bd.c == pytest.approx(3)
    assert bd.fidelity == pytest.approx(0.25)
    assert bd.numerator == pytest.approx(16**2)
    assert fidelity(i4, i4, part) == pytest.approx(0.25)
    assert ideal_fidelity(i4, part) == pytest.approx(0.25)
    assert ideal_fidelity(i4, Partition(4, 2, 2)) == pytest.approx(1 / 16)
    assert oracle_fidelity(i4, i4, part) == pytest.approx(0.25)


@pytest.mark.parametrize("method", ["contract", "enumerate"])
def test_methods_agree(rng, method):
    for n, n_a, n_c in [(4, 1, 1), (5, 2, 2), (4, 2, 1), (5, 1, 2)]:
        part = Partition(n, n_a, n_c)
        u, v = doped(n, 2, rng), doped(n, 1, rng)
        ref = cost(u, v, part, method="enumerate", strict=False)
        got = cost(u, v, part, method=method, strict=False)
        assert_allclose([got.numerator, got.mixed], [ref.numerator, ref.mixed], rtol=1e-10, atol=1e-8)


def test_ideal_decoder_clifford_n8(rng):
    part = Partition(8, 2, 2)
    u = doped(8, 0, rng)
    assert abs(fidelity(u, u, part) - 1 / (part.d_a**2 * omega_exact(u, part))) < 1e-9
    assert fidelity(u, u, part) == pytest.approx(1.0)


def test_ideal_decoder_haar_n10():
    rng = np.random.default_rng(11)
    part = Partition(10, 2, 2)
    u = unitary_group.rvs(1 << 10, random_state=rng)
    f = fidelity(u, u, part)
    assert f == pytest.approx(1 / (16 * omega_exact(u, part)), abs=1e-9)
    assert abs((1 - f) - 16 / 65536) < 1e-4


def test_c_zero_iff_perfect(rng):
    part = Partition(6, 1, 1)
    u = doped(6, 0, rng)
    bd = cost(u, u, part)
    assert bd.c == pytest.approx(0, abs=1e-12) and bd.fidelity == pytest.approx(1)
    bd = cost(u, doped(6, 0, rng), part, strict=False)
    assert (bd.c > 1e-12) == (bd.fidelity < 1 - 1e-12)


def test_degenerate_numerator():
    # U = I, V = X on the only A qubit with n_C = 0: tr(V) = 0
    part = Partition(2, 1, 0)
    v = synthesize_dense(Circuit(2, (H(0), P(0), P(0), H(0))))
    with pytest.raises(DegenerateCostError):
        cost(np.eye(4), v, part)
    bd = cost(np.eye(4), v, part, strict=False)
    assert bd.fidelity == 0 and bd.c == np.inf


def test_phase_invariance(rng):
    part = Partition(5, 2, 1)
    u, v = doped(5, 2, rng), doped(5, 3, rng)
    psi = haar_state(2, rng)
    f, fp = fidelity(u, v, part), teleport_fidelity(u, v, psi, part)
    for a, b in [(np.exp(0.3j), 1), (1, np.exp(-1.1j))]:
        assert abs(fidelity(a * u, b * v, part) - f) < 1e-12
        assert abs(teleport_fidelity(a * u, b * v, psi, part) - fp) < 1e-12


def test_cost_after_gate_examples(rng):
    n = 6
    part = Partition(n, 2, 1)
    u = doped(n, 2, rng)
    v = doped(n, 1, rng)
    bd0 = cost(u, v, part)
    w = v
    for g in (H(3), H(3)):
        bd = cost_after_gate(u, w, bd0, g, part)
        w = apply_gate(g, w)
    assert_allclose([bd.numerator, bd.mixed], [bd0.numerator, bd0.mixed], rtol=1e-10)
    w = v
    for _ in range(4):
        bd = cost_after_gate(u, w, bd0, P(1), part)
        w = apply_gate(P(1), w)
    assert_allclose([bd.numerator, bd.mixed], [bd0.numerator, bd0.mixed], rtol=1e-10)


def test_cost_after_gate_random_walk(rng):
    n = 6
    part = Partition(n, 2, 1)
    u = doped(n, 1, rng)
    gates = []
    v = np.eye(1 << n, dtype=complex)
    bd = cost(u, v, part, strict=False)
    for _ in range(100):
        g = propose_clifford_gate(n, rng)
        try:
            bd = cost_after_gate(u, v, bd, g, part)
        except DegenerateCostError:
            bd = None
        v = apply_gate(g, v)
        gates.append(g)
        fresh = cost(u, synthesize_dense(Circuit(n, tuple(gates))), part, strict=False)
        if bd is not None:
            assert_allclose([bd.numerator, bd.mixed], [fresh.numerator, fresh.mixed], rtol=1e-10, atol=1e-6)


def test_evaluator_packed_layout_matches(rng):
    part = Partition(6, 2, 2)
    u, v = doped(6, 1, rng), doped(6, 2, rng)
    ev = CostEvaluator(u, part, strict=False)
    w = ev.pack(v)
    assert np.array_equal(ev.unpack(w), v)
    for _ in range(20):
        g = propose_clifford_gate(6, rng)
        v, w = apply_gate(g, v), apply_gate(ev.packed_gate(g), w)
    assert np.array_equal(ev.unpack(w), v)
    assert ev.evaluate_packed(w).fidelity == pytest.approx(ev(v).fidelity, abs=1e-14)


def test_teleport_examples(rng):
    part = Partition(8, 2, 1)
    u = doped(8, 0, rng)
    assert teleport_fidelity(u, u, haar_state(2, rng), part) == pytest.approx(1, abs=1e-9)
    small = Partition(4, 2, 1)
    i4 = np.eye(16)
    zero = basis_state(2, 0)
    # R'_0 stays maximally mixed while A_1 is teleported onto R'_1
    assert teleport_fidelity(i4, i4, zero, small) == pytest.approx(0.5, abs=1e-12)
    assert oracle_teleport(i4, i4, zero, small) == pytest.approx(0.5, abs=1e-12)
    psi = haar_state(2, rng)
    assert teleport_fidelity(i4, i4, psi, small) == pytest.approx(oracle_teleport(i4, i4, psi, small), abs=1e-12)


@pytest.mark.parametrize("method", ["contract", "enumerate"])
def test_teleport_against_oracle(rng, method):
    for _ in range(10):
        n = 4
        part = Partition(n, int(rng.integers(1, 3)), int(rng.integers(1, 3)))
        u, v = doped(n, int(rng.integers(3)), rng), doped(n, int(rng.integers(3)), rng)
        psi = haar_state(part.n_a, rng)
        try:
            f = teleport_fidelity(u, v, psi, part, method=method)
        except DegenerateCostError:
            continue
        assert abs(f - oracle_teleport(u, v, psi, part)) < 1e-9
        assert -1e-12 <= f <= 1 + 1e-9


def test_teleport_input_checks():
    part = Partition(3, 1, 1)
    with pytest.raises(ValueError):
        teleport_fidelity(np.eye(8), np.eye(8), np.ones(2), part)
    with pytest.raises(ValueError):
        teleport_fidelity(np.eye(8), np.eye(8), basis_state(2, 0), part)


def test_p_out(rng):
    part = Partition(4, 2, 1)
    i4 = np.eye(16)
    direct = p_out(i4, i4, part, method="direct")
    assert p_out(i4, i4, part) == pytest.approx(direct)
    assert build_protocol_state(i4, i4, part)[1] == pytest.approx(direct)
    for _ in range(5):
        part = Partition(5, 1, 2)
        u, v = doped(5, 1, rng), doped(5, 2, rng)
        po = p_out(u, v, part)
        assert po == pytest.approx(p_out(u, v, part, method="direct"), abs=1e-12)
        assert 0 < po <= 1
    u = doped(5, 0, rng)
    assert p_out(u, u, part) * fidelity(u, u, part) == pytest.approx(1 / part.d_a**2, abs=1e-12)


def test_learnability_overlap(rng):
    u = doped(4, 2, rng)
    assert learnability_overlap(u, u) == pytest.approx(16)
    assert learnability_overlap(u, np.exp(1j) * u) == pytest.approx(16)
    assert 0 <= learnability_overlap(u, doped(4, 2, rng)) <= 16
    with pytest.raises(ValueError):
        learnability_overlap(u, np.eye(8))
