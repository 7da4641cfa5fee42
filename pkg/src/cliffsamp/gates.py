"""Gate matrices, the single-qubit Clifford table and Pauli conjugation tables."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .pauli import PauliString

SQ2 = np.sqrt(0.5)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = SQ2 * np.array([[1, 1], [1, -1]], dtype=complex)
S = np.array([[1, 0], [0, 1j]], dtype=complex)
SDG = S.conj().T
T = np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=complex)

CZ = np.diag([1, 1, 1, -1]).astype(complex)
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
# Dressed-state controlled-phase gate, (I + i X(x)X)/sqrt(2).
U_PHASE = SQ2 * np.array(
    [[1, 0, 0, 1j], [0, 1, 1j, 0], [0, 1j, 1, 0], [1j, 0, 0, 1]], dtype=complex
)

TWO_QUBIT_GATES = {"CZ": CZ, "CNOT": CNOT, "U_PHASE": U_PHASE}
NAMED_1Q = {"I": I2, "X": X, "Y": Y, "Z": Z, "H": H, "S": S, "SDG": SDG, "T": T}


def is_unitary(u: np.ndarray, atol: float = 1e-12) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return float(np.abs(u.conj().T @ u - np.eye(u.shape[0])).max()) <= atol


def _pauli_index_bits(index: int, k: int):
    x = [(index >> j) & 1 for j in range(k)]
    z = [(index >> (k + j)) & 1 for j in range(k)]
    return x, z


def pauli_from_index(index: int, k: int) -> PauliString:
    """Pauli on ``k`` qubits from the table index ``sum x_j 2^j + z_j 2^(k+j)``."""
    x, z = _pauli_index_bits(index, k)
    return PauliString(np.array(x, bool), np.array(z, bool))


def pauli_index(p: PauliString) -> int:
    k = p.n_qubits
    return sum(int(p.x[j]) << j for j in range(k)) + sum(int(p.z[j]) << (k + j) for j in range(k))


@dataclass(frozen=True, eq=False)
class ConjugationTable:
    """Action ``P -> U P U^dagger`` of a k-qubit Clifford on Hermitian Paulis.

    ``out_index[p]`` is the table index of the image of Pauli ``p`` and
    ``out_sign[p]`` is 1 when the image carries a minus sign.
    """

    k: int
    out_index: np.ndarray
    out_sign: np.ndarray

    def image(self, p: PauliString) -> PauliString:
        i = pauli_index(p)
        q = pauli_from_index(int(self.out_index[i]), self.k)
        return PauliString(q.x, q.z, 2 * int(self.out_sign[i]) + p.phase)


def conjugation_table(u: np.ndarray, atol: float = 1e-9) -> ConjugationTable:
    """Tabulate the Pauli action of ``u``; raises ValueError if ``u`` is not Clifford."""
    u = np.asarray(u, dtype=complex)
    dim = u.shape[0]
    k = int(round(np.log2(dim)))
    if 2**k != dim or u.shape != (dim, dim):
        raise ValueError("gate matrix must be square with power-of-two dimension")
    mats = [pauli_from_index(i, k).to_matrix() for i in range(4**k)]
    out_index = np.zeros(4**k, dtype=np.int64)
    out_sign = np.zeros(4**k, dtype=np.uint8)
    for i, p in enumerate(mats):
        q = u @ p @ u.conj().T
        coeffs = np.array([np.trace(m @ q).real / dim for m in mats])
        j = int(np.argmax(np.abs(coeffs)))
        if abs(abs(coeffs[j]) - 1.0) > atol or not np.allclose(q, coeffs[j] * mats[j], atol=atol):
            raise ValueError("gate is not Clifford")
        out_index[i] = j
        out_sign[i] = 1 if coeffs[j] < 0 else 0
    out_index.setflags(write=False)
    out_sign.setflags(write=False)
    return ConjugationTable(k, out_index, out_sign)


def _phase_normalize(u: np.ndarray) -> np.ndarray:
    flat = u.ravel()
    j = int(np.argmax(np.abs(flat) > 1e-9))
    return u * (abs(flat[j]) / flat[j])


@dataclass(frozen=True, eq=False)
class CliffordGate1Q:
    index: int
    word: str
    matrix: np.ndarray
    table: ConjugationTable

    def image_of(self, letter: str) -> PauliString:
        return self.table.image(PauliString.from_label(letter))

    def __repr__(self) -> str:
        return f"CliffordGate1Q({self.index}, word={self.word!r})"


@lru_cache(maxsize=None)
def clifford_table() -> tuple[CliffordGate1Q, ...]:
    """The 24 single-qubit Cliffords in canonical order.

    Enumerated breadth-first over words in H and S (a word is read left to
    right in time, so ``"HS"`` is ``S @ H``), deduplicated by their signed
    action on X and Z.
    """
    seen: dict[tuple, int] = {}
    gates: list[CliffordGate1Q] = []
    queue = deque([("", I2)])
    while queue:
        word, u = queue.popleft()
        tab = conjugation_table(u)
        key = (tuple(tab.out_index), tuple(tab.out_sign))
        if key in seen:
            continue
        seen[key] = len(gates)
        m = _phase_normalize(u)
        m.setflags(write=False)
        gates.append(CliffordGate1Q(len(gates), word, m, tab))
        for name, g in (("H", H), ("S", S)):
            queue.append((word + name, g @ u))
    assert len(gates) == 24
    return tuple(gates)


@lru_cache(maxsize=None)
def clifford_matrices() -> np.ndarray:
    """All 24 Clifford matrices stacked, shape (24, 2, 2)."""
    return np.stack([g.matrix for g in clifford_table()])


@lru_cache(maxsize=None)
def clifford_lookup() -> tuple[np.ndarray, np.ndarray]:
    """Stacked 1q tables: ``out_index[c, p]`` and ``out_sign[c, p]`` for Clifford ``c``."""
    tabs = [g.table for g in clifford_table()]
    return (
        np.stack([t.out_index for t in tabs]),
        np.stack([t.out_sign for t in tabs]),
    )


@lru_cache(maxsize=None)
def clifford_inverse_index() -> np.ndarray:
    """``inv[c]`` is the table index of the inverse of Clifford ``c``."""
    inv = np.zeros(24, dtype=np.int64)
    for g in clifford_table():
        inv[g.index] = clifford_index(g.matrix.conj().T)
    return inv


def clifford_index(u: np.ndarray) -> int:
    """Table index of a single-qubit Clifford matrix (any global phase)."""
    tab = conjugation_table(u)
    key = (tuple(tab.out_index), tuple(tab.out_sign))
    for g in clifford_table():
        if (tuple(g.table.out_index), tuple(g.table.out_sign)) == key:
            return g.index
    raise ValueError("not a single-qubit Clifford")  # pragma: no cover


def is_clifford(u: np.ndarray) -> bool:
    try:
        conjugation_table(u)
    except ValueError:
        return False
    return True
