import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from staggered_dd.clifford import (
    BASIS,
    GROUP_ORDER,
    IDENTITY,
    _gf2_inverse,
    clifford_table,
    gate_clifford,
    pauli_matrix,
    pauli_mul,
    sample_indices,
    word_clifford,
    word_unitary,
)

PAULI_BASIS = [np.kron(np.array([[0, 1], [1, 0]]), np.eye(2)), np.kron(np.eye(2), np.array([[0, 1], [1, 0]])),
               np.kron(np.diag([1, -1]), np.eye(2)), np.kron(np.eye(2), np.diag([1, -1]))]


@pytest.fixture(scope="module")
def table():
    return clifford_table()


def _canonical(u):
    # strip the global phase so equal-up-to-phase unitaries compare equal
    flat = u.reshape(-1)
    k = np.flatnonzero(np.abs(flat) > 1e-9)[0]
    return tuple(np.round(u * (abs(flat[k]) / flat[k]), 8).reshape(-1).tolist())


def test_group_order_by_distinct_unitaries(table):
    assert len(table) == GROUP_ORDER == 11520
    assert len({_canonical(word_unitary(w)) for w in table.words}) == 11520


def test_identity_first(table):
    assert table.elements[0].is_identity()
    assert table.words[0] == ()


@settings(max_examples=200, deadline=None)
@given(st.integers(0, GROUP_ORDER - 1))
def test_tableau_matches_matrix_conjugation(i):
    t = clifford_table()
    u = word_unitary(t.words[i])
    for p, img in zip(PAULI_BASIS, t.elements[i].images):
        assert np.allclose(u @ p @ u.conj().T, pauli_matrix(img))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, GROUP_ORDER - 1), st.integers(0, GROUP_ORDER - 1))
def test_composition_and_inverse(i, j):
    t = clifford_table()
    a, b = t.elements[i], t.elements[j]
    ab = a.then(b)
    u = word_unitary(t.words[j]) @ word_unitary(t.words[i])
    assert _canonical(u) == _canonical(word_unitary(t.words[t.lookup(ab)]))
    assert a.then(a.inverse()).is_identity()
    assert a.inverse().then(a).is_identity()
    inv = word_unitary(t.words[t.inverse_index(i)]) @ word_unitary(t.words[i])
    assert np.allclose(inv, inv[0, 0] * np.eye(4))


def test_generators():
    assert word_clifford([("h", (0,)), ("h", (0,))]).is_identity()
    s = gate_clifford("s", (1,))
    assert s.then(s).then(s).then(s).is_identity()
    cx = gate_clifford("cx", (0, 1))
    assert cx.then(cx).is_identity()
    with pytest.raises(ValueError):
        gate_clifford("t", (0,))


def test_pauli_mul_signs():
    x0, z0 = BASIS[0], BASIS[2]
    # X Z = -i Y, Z X = i Y: they differ by a factor of -1
    xz, zx = pauli_mul(x0, z0), pauli_mul(z0, x0)
    assert xz[:4] == zx[:4]
    assert (xz[4] - zx[4]) % 4 == 2
    assert np.allclose(pauli_matrix(xz), PAULI_BASIS[0] @ PAULI_BASIS[2])


def test_gf2_inverse():
    rng = np.random.default_rng(0)
    found = 0
    while found < 20:
        m = rng.integers(0, 2, size=(4, 4)).astype(np.uint8)
        if round(np.linalg.det(m)) % 2 == 0:
            continue
        found += 1
        assert np.array_equal((m.astype(int) @ _gf2_inverse(m)) % 2, np.eye(4, dtype=int))


def test_sampling_uniform_range():
    rng = np.random.default_rng(3)
    draws = sample_indices(rng, 20000)
    assert min(draws) >= 0 and max(draws) < GROUP_ORDER
    counts = np.bincount(np.array(draws) % 10, minlength=10)
    assert counts.min() > 1800


def test_identity_inverse(table):
    assert IDENTITY.inverse() == IDENTITY
    assert table.inverse_index(0) == 0
