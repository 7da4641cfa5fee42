"""Quantum channels on one or two qubits and Pauli-transfer-matrix conversion.

Every channel carries a superoperator ``S`` acting on the row-major
vectorisation of a density matrix, ``vec(K rho K^dag) = (K kron conj(K)) vec(rho)``.
That is the only representation the simulators use; Kraus lists and Pauli
mixtures are kept alongside for inspection and for the stabilizer paths.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import gates
from .pauli import PAULI_MATRICES, PauliString

TP_ATOL = 1e-10
PROB_ATOL = 1e-12


@lru_cache(maxsize=None)
def ptm_labels(k: int) -> tuple[str, ...]:
    """PTM basis order: tensor products of I, X, Y, Z with qubit 0 leftmost."""
    return tuple("".join(p) for p in itertools.product("IXYZ", repeat=k))


@lru_cache(maxsize=None)
def _pauli_vec_basis(k: int) -> np.ndarray:
    """Columns are ``vec(P_j)`` for the PTM basis, shape (4^k, 4^k)."""
    cols = [PauliString.from_label(lab).to_matrix().reshape(-1) for lab in ptm_labels(k)]
    basis = np.stack(cols, axis=1)
    basis.setflags(write=False)
    return basis


def superop_to_ptm(superop: np.ndarray) -> np.ndarray:
    d2 = superop.shape[0]
    k = int(round(np.log(d2) / np.log(4)))
    v = _pauli_vec_basis(k)
    return ((v.conj().T @ superop @ v) / 2**k).real


def ptm_to_superop(ptm: np.ndarray) -> np.ndarray:
    ptm = np.asarray(ptm, dtype=float)
    k = int(round(np.log(ptm.shape[0]) / np.log(4)))
    if ptm.shape != (4**k, 4**k):
        raise ValueError(f"PTM must be square with side 4^k, got {ptm.shape}")
    v = _pauli_vec_basis(k)
    return (v @ ptm @ v.conj().T) / 2**k


def unitary_superop(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    return np.kron(u, u.conj())


def unitary_ptm(u: np.ndarray) -> np.ndarray:
    return superop_to_ptm(unitary_superop(u))


def superop_to_choi(superop: np.ndarray) -> np.ndarray:
    """Choi matrix ``sum_ij |i><j| (x) Lambda(|i><j|)``."""
    d = int(round(np.sqrt(superop.shape[0])))
    s = superop.reshape(d, d, d, d)  # [r, c, r', c']
    return s.transpose(2, 0, 3, 1).reshape(d * d, d * d)


@dataclass(frozen=True, eq=False)
class Channel:
    arity: int
    superop: np.ndarray
    name: str = ""
    kraus: tuple[np.ndarray, ...] | None = None
    pauli_mixture: tuple[tuple[float, str], ...] | None = None
    unitary_mixture: tuple[tuple[float, np.ndarray], ...] | None = None

    def __post_init__(self):
        s = np.asarray(self.superop, dtype=complex)
        if self.arity not in (1, 2) or s.shape != (4**self.arity, 4**self.arity):
            raise ValueError(f"superoperator shape {s.shape} does not match arity {self.arity}")
        s = s.copy()
        s.setflags(write=False)
        object.__setattr__(self, "superop", s)

    def __repr__(self):
        return f"Channel({self.name or 'anonymous'}, arity={self.arity})"

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_kraus(cls, kraus: Sequence[np.ndarray], name: str = "", check: bool = True):
        ks = tuple(np.asarray(k, dtype=complex) for k in kraus)
        d = ks[0].shape[0]
        arity = int(round(np.log2(d)))
        if check:
            completeness = sum(k.conj().T @ k for k in ks)
            if np.abs(completeness - np.eye(d)).max() > TP_ATOL:
                raise ValueError(f"{name or 'channel'}: Kraus operators are not trace preserving")
        superop = sum(np.kron(k, k.conj()) for k in ks)
        return cls(arity, superop, name, kraus=ks)

    @classmethod
    def from_pauli_mixture(cls, mixture: Sequence[tuple[float, str]], name: str = ""):
        mix = tuple((float(p), lab) for p, lab in mixture)
        probs = np.array([p for p, _ in mix])
        if (probs < -PROB_ATOL).any() or abs(probs.sum() - 1.0) > PROB_ATOL:
            raise ValueError(f"{name or 'channel'}: Pauli mixture probabilities invalid")
        arity = len(mix[0][1])
        superop = sum(p * unitary_superop(PauliString.from_label(lab).to_matrix()) for p, lab in mix)
        kraus = tuple(np.sqrt(max(p, 0.0)) * PauliString.from_label(lab).to_matrix() for p, lab in mix)
        return cls(arity, superop, name, kraus=kraus, pauli_mixture=mix)

    @classmethod
    def from_unitary_mixture(cls, mixture: Sequence[tuple[float, np.ndarray]], name: str = ""):
        mix = tuple((float(p), np.asarray(u, dtype=complex)) for p, u in mixture)
        probs = np.array([p for p, _ in mix])
        if (probs < -PROB_ATOL).any() or abs(probs.sum() - 1.0) > PROB_ATOL:
            raise ValueError(f"{name or 'channel'}: unitary mixture probabilities invalid")
        for _, u in mix:
            if not gates.is_unitary(u):
                raise ValueError(f"{name or 'channel'}: mixture element is not unitary")
        arity = int(round(np.log2(mix[0][1].shape[0])))
        superop = sum(p * unitary_superop(u) for p, u in mix)
        kraus = tuple(np.sqrt(p) * u for p, u in mix)
        return cls(arity, superop, name, kraus=kraus, unitary_mixture=mix)

    @classmethod
    def from_ptm(cls, ptm: np.ndarray, name: str = ""):
        """Any real 4^k x 4^k matrix; trace preservation and CP are reported, not enforced."""
        superop = ptm_to_superop(ptm)
        arity = int(round(np.log(superop.shape[0]) / np.log(4)))
        return cls(arity, superop, name)

    @classmethod
    def from_unitary(cls, u: np.ndarray, name: str = ""):
        return cls.from_unitary_mixture(((1.0, u),), name)

    # -- properties -----------------------------------------------------------

    @property
    def is_pauli(self) -> bool:
        return self.pauli_mixture is not None

    def ptm(self) -> np.ndarray:
        return superop_to_ptm(self.superop)

    @property
    def tp_deviation(self) -> float:
        """Largest deviation of the PTM's first row from (1, 0, ..., 0)."""
        row = self.ptm()[0].copy()
        row[0] -= 1.0
        return float(np.abs(row).max())

    @property
    def is_trace_preserving(self) -> bool:
        return self.tp_deviation <= TP_ATOL

    @property
    def cp_deviation(self) -> float:
        """Magnitude of the most negative Choi eigenvalue (0 for CP maps)."""
        choi = superop_to_choi(self.superop)
        ev = np.linalg.eigvalsh((choi + choi.conj().T) / 2)
        return float(max(0.0, -ev.min()))

    @property
    def is_identity(self) -> bool:
        return bool(np.abs(self.superop - np.eye(self.superop.shape[0])).max() < 1e-14)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Apply to a density matrix on exactly ``arity`` qubits."""
        d = 2**self.arity
        return (self.superop @ np.asarray(rho, dtype=complex).reshape(-1)).reshape(d, d)

    def pauli_eigenvalues(self) -> np.ndarray:
        """Heisenberg factors of a Pauli mixture, indexed like ``gates.pauli_from_index``.

        ``Lambda^dag(P) = lam[P] * P`` for every Pauli P on the channel's qubits.
        """
        if not self.is_pauli:
            raise ValueError("only Pauli mixtures have Pauli eigenvalues")
        k = self.arity
        lam = np.zeros(4**k)
        for i in range(4**k):
            p = gates.pauli_from_index(i, k)
            lam[i] = sum(
                prob * (1 if p.commutes(PauliString.from_label(lab)) else -1)
                for prob, lab in self.pauli_mixture
            )
        return lam

    def then(self, other: "Channel") -> "Channel":
        """Composition: apply ``self`` first, then ``other``."""
        if self.arity != other.arity:
            raise ValueError("cannot compose channels of different arity")
        kraus = None
        if self.kraus is not None and other.kraus is not None:
            kraus = tuple(b @ a for b in other.kraus for a in self.kraus)
        return Channel(self.arity, other.superop @ self.superop, f"{self.name}>{other.name}", kraus=kraus)


def identity_channel(arity: int = 1) -> Channel:
    return Channel.from_pauli_mixture(((1.0, "I" * arity),), name="identity")


def _check_rate(eps: float, name: str, upper: float = 1.0):
    if not (0.0 <= eps <= upper) or not np.isfinite(eps):
        raise ValueError(f"{name}: rate {eps} outside [0, {upper}]")


def depolarizing1(eps: float) -> Channel:
    _check_rate(eps, "depolarizing1")
    mix = [(1.0 - eps, "I")] + [(eps / 3.0, p) for p in "XYZ"]
    return Channel.from_pauli_mixture(mix, name=f"depolarizing1({eps:g})")


def depolarizing2(eps: float) -> Channel:
    _check_rate(eps, "depolarizing2")
    labels = [a + b for a in "IXYZ" for b in "IXYZ"][1:]
    mix = [(1.0 - eps, "II")] + [(eps / 15.0, lab) for lab in labels]
    return Channel.from_pauli_mixture(mix, name=f"depolarizing2({eps:g})")


def dephasing2(eps: float) -> Channel:
    _check_rate(eps, "dephasing2")
    mix = [(1.0 - eps, "II")] + [(eps / 3.0, lab) for lab in ("IZ", "ZI", "ZZ")]
    return Channel.from_pauli_mixture(mix, name=f"dephasing2({eps:g})")


def bitflip1(p: float) -> Channel:
    _check_rate(p, "bitflip1")
    return Channel.from_pauli_mixture(((1.0 - p, "I"), (p, "X")), name=f"bitflip1({p:g})")


def amplitude_damping1(eps: float) -> Channel:
    _check_rate(eps, "amplitude_damping1")
    i2, z = np.eye(2), PAULI_MATRICES["Z"]
    x, y = PAULI_MATRICES["X"], PAULI_MATRICES["Y"]
    k0 = (i2 + z) / 2 + np.sqrt(1.0 - eps) * (i2 - z) / 2
    k1 = np.sqrt(eps) * (x + 1j * y) / 2
    return Channel.from_kraus((k0, k1), name=f"amplitude_damping1({eps:g})")


def rotation(axis: str, eps: float) -> np.ndarray:
    """``exp(-i pi eps P)`` for a single-qubit Pauli axis."""
    p = PAULI_MATRICES[axis]
    return np.cos(np.pi * eps) * np.eye(2) - 1j * np.sin(np.pi * eps) * p


def coherent_z(eps: float, sign: int) -> Channel:
    """The map ``[exp(sign * i pi eps Z)]``."""
    return Channel.from_unitary(rotation("Z", -sign * eps), name=f"coherent_z({sign:+d}{eps:g})")
