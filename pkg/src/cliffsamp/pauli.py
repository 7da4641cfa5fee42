"""Symplectic Pauli strings.

Qubit 0 is the leftmost character of a label and the most significant bit of a
computational-basis index. A string with bits ``(x, z)`` on a qubit denotes
``I, X, Z, Y`` for ``(0,0), (1,0), (0,1), (1,1)``; the overall operator is
``i**phase`` times the tensor product of those Hermitian factors.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

_LETTERS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
_SIGNS = {"+": 0, "": 0, "i": 1, "+i": 1, "-": 2, "-i": 3}
_SIGN_LABEL = {0: "+", 1: "+i", 2: "-", 3: "-i"}

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def product_phase(x1, z1, x2, z2):
    """Exponent of ``i`` picked up when multiplying Hermitian Paulis ``P1 @ P2``.

    Works elementwise on bit arrays and returns the per-qubit contributions
    (values in {-1, 0, 1}); sum them for the total.
    """
    x1 = np.asarray(x1, dtype=np.int8)
    z1 = np.asarray(z1, dtype=np.int8)
    x2 = np.asarray(x2, dtype=np.int8)
    z2 = np.asarray(z2, dtype=np.int8)
    y1 = x1 & z1
    xo = x1 & (1 - z1)
    zo = (1 - x1) & z1
    return (y1 * (z2 - x2) + xo * z2 * (2 * x2 - 1) + zo * x2 * (1 - 2 * z2)).astype(np.int64)


@dataclass(frozen=True, eq=False)
class PauliString:
    x: np.ndarray
    z: np.ndarray
    phase: int = 0

    def __post_init__(self):
        x = np.asarray(self.x, dtype=bool).copy()
        z = np.asarray(self.z, dtype=bool).copy()
        if x.shape != z.shape or x.ndim != 1:
            raise ValueError("x and z bit vectors must be 1-d and of equal length")
        x.setflags(write=False)
        z.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "phase", int(self.phase) % 4)

    @property
    def n_qubits(self) -> int:
        return len(self.x)

    @property
    def sign(self) -> complex:
        return 1j**self.phase

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Parse labels such as ``"ZIX"``, ``"-XY"`` or ``"+iZ"``."""
        body = label.lstrip("+-i")
        prefix = label[: len(label) - len(body)]
        if prefix not in _SIGNS:
            raise ValueError(f"bad sign prefix {prefix!r} in Pauli label {label!r}")
        try:
            bits = [_LETTERS[c] for c in body]
        except KeyError as exc:
            raise ValueError(f"bad Pauli letter {exc.args[0]!r} in {label!r}") from None
        x = [b[0] for b in bits]
        z = [b[1] for b in bits]
        return cls(np.array(x, dtype=bool), np.array(z, dtype=bool), _SIGNS[prefix])

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(np.zeros(n, bool), np.zeros(n, bool))

    @classmethod
    def single(cls, n: int, qubit: int, letter: str) -> "PauliString":
        x = np.zeros(n, bool)
        z = np.zeros(n, bool)
        x[qubit], z[qubit] = _LETTERS[letter]
        return cls(x, z)

    def letters(self) -> str:
        table = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
        return "".join(table[(int(a), int(b))] for a, b in zip(self.x, self.z))

    def label(self, with_sign: bool = True) -> str:
        body = self.letters()
        if not with_sign:
            return body
        return ("" if self.phase == 0 else _SIGN_LABEL[self.phase]) + body

    def __repr__(self) -> str:
        return f"PauliString({self.label()!r})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliString):
            return NotImplemented
        return (
            self.phase == other.phase
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.z, other.z)
        )

    def __hash__(self) -> int:
        return hash((self.phase, self.x.tobytes(), self.z.tobytes()))

    def __mul__(self, other: "PauliString") -> "PauliString":
        if self.n_qubits != other.n_qubits:
            raise ValueError("Pauli strings act on different qubit counts")
        k = self.phase + other.phase + int(product_phase(self.x, self.z, other.x, other.z).sum())
        return PauliString(self.x ^ other.x, self.z ^ other.z, k)

    def __neg__(self) -> "PauliString":
        return PauliString(self.x, self.z, self.phase + 2)

    def commutes(self, other: "PauliString") -> bool:
        return not (np.count_nonzero(self.x & other.z) + np.count_nonzero(self.z & other.x)) % 2

    def weight(self) -> int:
        return int(np.count_nonzero(self.x | self.z))

    def is_diagonal(self) -> bool:
        return not self.x.any()

    def is_identity(self) -> bool:
        return not (self.x.any() or self.z.any())

    def to_matrix(self) -> np.ndarray:
        mats = [PAULI_MATRICES[c] for c in self.letters()] or [np.ones((1, 1), complex)]
        return self.sign * reduce(np.kron, mats)
