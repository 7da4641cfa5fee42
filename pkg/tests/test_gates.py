import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cliffsamp import gates
from cliffsamp.pauli import PauliString

from conftest import equal_up_to_phase, word_matrix


def test_table_has_24_distinct_elements(clifford_words):
    table = gates.clifford_table()
    assert len(table) == 24
    assert tuple(g.word for g in table) == clifford_words
    assert table[0].word == "" and np.allclose(table[0].matrix, np.eye(2))
    for a, b in itertools.combinations(table, 2):
        assert not equal_up_to_phase(a.matrix, b.matrix)


def test_matrices_match_words(clifford_words):
    for g, w in zip(gates.clifford_table(), clifford_words):
        assert equal_up_to_phase(g.matrix, word_matrix(w))
        assert gates.is_unitary(g.matrix)


def test_closed_under_composition():
    for a, b in itertools.product(gates.clifford_table(), repeat=2):
        gates.clifford_index(a.matrix @ b.matrix)  # raises if not in the table


def test_matrix_matches_symplectic_action():
    for g in gates.clifford_table():
        for letter in "XYZ":
            img = g.image_of(letter)
            p = PauliString.from_label(letter).to_matrix()
            assert np.allclose(g.matrix @ p @ g.matrix.conj().T, img.to_matrix())


def test_inverse_index():
    inv = gates.clifford_inverse_index()
    for g in gates.clifford_table():
        prod = gates.clifford_table()[inv[g.index]].matrix @ g.matrix
        assert gates.clifford_index(prod) == 0


@given(st.integers(0, 23), st.floats(0, 2 * np.pi))
def test_index_ignores_global_phase(i, phi):
    u = gates.clifford_table()[i].matrix
    assert gates.clifford_index(np.exp(1j * phi) * u) == i


def test_non_clifford_rejected():
    assert not gates.is_clifford(gates.T)
    with pytest.raises(ValueError):
        gates.conjugation_table(gates.T)


def test_two_qubit_tables():
    for name, m in gates.TWO_QUBIT_GATES.items():
        tab = gates.conjugation_table(m)
        for i in range(16):
            p = gates.pauli_from_index(i, 2)
            assert np.allclose(m @ p.to_matrix() @ m.conj().T, tab.image(p).to_matrix()), name


def test_pauli_index_convention():
    # index = sum x_j 2^j + z_j 2^(k+j)
    assert [gates.pauli_index(PauliString.from_label(c)) for c in "IXZY"] == [0, 1, 2, 3]
    assert gates.pauli_index(PauliString.from_label("IX")) == 2
    for i in range(16):
        assert gates.pauli_index(gates.pauli_from_index(i, 2)) == i
