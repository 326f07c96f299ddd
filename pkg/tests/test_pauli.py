import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from bhdecode.linalg import partial_trace, pauli_twirl, embed
from bhdecode.pauli import (
    Pauli,
    action_arrays,
    commutes,
    enumerate_region,
    index_action,
    pauli_multiply,
    random_pauli,
    supported_in,
)


def all_paulis(n):
    return [Pauli(n, x, z, ph) for x in range(1 << n) for z in range(1 << n) for ph in range(4)]


def paulis(max_n=3):
    return st.integers(1, max_n).flatmap(
        lambda n: st.builds(Pauli, st.just(n), st.integers(0, (1 << n) - 1), st.integers(0, (1 << n) - 1), st.integers(0, 3))
    )


def test_multiply_examples():
    x, y, z = (Pauli.from_string(s) for s in "XYZ")
    assert pauli_multiply(x, y) == Pauli.from_string("iZ")
    p = Pauli.from_string("-iYXZ")
    assert pauli_multiply(Pauli.identity(3), p) == p
    xz = Pauli.from_string("XZ")
    assert pauli_multiply(xz, xz) == Pauli.identity(2)
    assert z * z == Pauli.identity(1)


def test_multiply_dimension_mismatch():
    with pytest.raises(ValueError):
        pauli_multiply(Pauli.identity(1), Pauli.identity(2))
    with pytest.raises(ValueError):
        commutes(Pauli.identity(1), Pauli.identity(2))


@pytest.mark.parametrize("n", [1, 2])
def test_multiply_matches_dense_exhaustive(n):
    ps = all_paulis(n)
    for p, q in itertools.product(ps, ps):
        assert_allclose(pauli_multiply(p, q).dense(), p.dense() @ q.dense(), atol=1e-14)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 3).flatmap(lambda n: st.tuples(*[st.integers(0, (1 << n) - 1)] * 4, st.just(n))))
def test_multiply_and_commutation_n3(args):
    x1, z1, x2, z2, n = args
    p, q = Pauli(n, x1, z1), Pauli(n, x2, z2)
    pq, qp = p.dense() @ q.dense(), q.dense() @ p.dense()
    assert_allclose(pauli_multiply(p, q).dense(), pq, atol=1e-14)
    assert commutes(p, q) == np.allclose(pq, qp)
    sign = 1 if commutes(p, q) else -1
    assert_allclose(pauli_multiply(p, q).dense(), sign * pauli_multiply(q, p).dense(), atol=1e-14)


def test_commutes_examples():
    assert not commutes(Pauli.from_string("X"), Pauli.from_string("Z"))
    assert commutes(Pauli.from_string("XI"), Pauli.from_string("IZ"))
    assert commutes(Pauli.from_string("XX"), Pauli.from_string("ZZ"))


def test_enumerate_examples():
    one = enumerate_region(3, [0])
    assert [p.letters() for p in one] == ["III", "XII", "YII", "ZII"]
    two = enumerate_region(2, [0, 1])
    assert len(two) == 16 and two[0] == Pauli.identity(2)
    assert enumerate_region(2, []) == [Pauli.identity(2)]


@pytest.mark.parametrize("n,region", [(3, (1,)), (3, (0, 2)), (2, (0, 1)), (3, (2, 0))])
def test_enumerate_properties(n, region):
    ps = enumerate_region(n, region)
    assert len(ps) == 4 ** len(region)
    assert len(set(ps)) == len(ps)
    assert ps[0].is_identity()
    for p in ps:
        assert p.phase == 0
        assert supported_in(p, region)
        # dense check: commutes with anything supported outside the region
        outside = [q for q in range(n) if q not in region]
        for q in outside:
            for letter in "XZ":
                assert commutes(p, Pauli.single(n, q, letter))


def test_enumerate_bad_region():
    with pytest.raises(ValueError):
        enumerate_region(2, [2])
    with pytest.raises(ValueError):
        enumerate_region(2, [0, 0])


def test_index_action_examples():
    assert index_action(Pauli.from_string("X"), 0) == (1, 1)
    assert index_action(Pauli.from_string("Z"), 1) == (1, -1)
    assert index_action(Pauli.from_string("Y"), 0) == (1, 1j)
    with pytest.raises(IndexError):
        index_action(Pauli.from_string("X"), 2)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_index_action_reproduces_dense(n):
    for p in all_paulis(n):
        m = p.dense()
        rows, phases = action_arrays(p)
        for i in range(1 << n):
            j, c = index_action(p, i)
            col = np.zeros(1 << n, complex)
            col[j] = c
            assert_allclose(m[:, i], col, atol=1e-15)
            assert rows[i] == j and phases[i] == c


@settings(max_examples=100, deadline=None)
@given(paulis())
def test_dense_is_unitary_and_squares_to_phase(p):
    m = p.dense()
    d = m.shape[0]
    assert_allclose(m @ m.conj().T, np.eye(d), atol=1e-14)
    # (i^k P0)^2 = i^(2k) for the Hermitian P0
    assert_allclose(m @ m, (1j ** (2 * p.phase)) * np.eye(d), atol=1e-14)


def test_string_round_trip():
    for s in ["-iXZI", "iY", "-ZZ", "IXYZ"]:
        assert str(Pauli.from_string(s)) == s
    with pytest.raises(ValueError):
        Pauli.from_string("XQ")


def test_random_pauli_region(rng):
    for _ in range(50):
        p = random_pauli(4, (1, 3), rng)
        assert supported_in(p, (1, 3))


@pytest.mark.parametrize("region", [(0,), (1, 2), (0, 1, 2), ()])
def test_pauli_twirl_identity(rng, region):
    n = 3
    o = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    keep = [q for q in range(n) if q not in region]
    d_l = 1 << len(region)
    reduced = partial_trace(o, keep) if keep else np.array([[np.trace(o)]])
    # tr_Lambda(O)/d_Lambda tensored with identity on Lambda
    expected = embed(reduced, keep, n) / d_l if keep else np.trace(o) / d_l * np.eye(8)
    assert_allclose(pauli_twirl(o, region), expected, atol=1e-12)
