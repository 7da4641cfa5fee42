"""Readout errors: balanced bit-flip measurement noise and confusion-matrix correction."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import channels as ch
from . import gates
from .dense import apply_channel, apply_unitary
from .pauli import PauliString

DET_MIN = 1e-6

# device readout fidelities of the four-qubit experiment
DEVICE_F0 = (0.957, 0.981, 0.977, 0.973)
DEVICE_F1 = (0.920, 0.922, 0.919, 0.951)


def _apply_per_qubit(p: np.ndarray, mats: Sequence[np.ndarray]) -> np.ndarray:
    """Apply ``kron(mats[0], ..., mats[n-1])`` to a length-2^n vector, qubit 0 most significant."""
    n = len(mats)
    t = np.asarray(p, dtype=float).reshape((2,) * n)
    for q, m in enumerate(mats):
        t = np.moveaxis(np.tensordot(m, t, axes=([1], [q])), 0, q)
    return t.reshape(-1)


@dataclass(frozen=True)
class ReadoutCalibration:
    """Per-qubit assignment fidelities; ``F0[j] = P(read 0 | prepared 0)``."""

    f0: tuple[float, ...]
    f1: tuple[float, ...]

    def __post_init__(self):
        f0 = tuple(float(v) for v in self.f0)
        f1 = tuple(float(v) for v in self.f1)
        if len(f0) != len(f1) or not f0:
            raise ValueError("calibration needs matching F0 and F1 lists")
        for j, (a, b) in enumerate(zip(f0, f1)):
            if not (0.0 <= a <= 1.0 and 0.0 <= b <= 1.0):
                raise ValueError(f"qubit {j}: fidelities must lie in [0, 1]")
            if abs(a + b - 1.0) < DET_MIN:
                raise ValueError(f"qubit {j}: confusion matrix is singular (F0 + F1 = 1)")
        object.__setattr__(self, "f0", f0)
        object.__setattr__(self, "f1", f1)

    @property
    def n_qubits(self) -> int:
        return len(self.f0)

    def matrices(self) -> list[np.ndarray]:
        """Column-stochastic ``F_j`` mapping true to measured probabilities."""
        return [np.array([[a, 1.0 - b], [1.0 - a, b]]) for a, b in zip(self.f0, self.f1)]

    @classmethod
    def identity(cls, n: int) -> "ReadoutCalibration":
        return cls((1.0,) * n, (1.0,) * n)

    @classmethod
    def device(cls) -> "ReadoutCalibration":
        return cls(DEVICE_F0, DEVICE_F1)

    @classmethod
    def from_dict(cls, data: Mapping) -> "ReadoutCalibration":
        if set(data) != {"qubits"}:
            raise ValueError("calibration file needs exactly a 'qubits' list")
        rows = data["qubits"]
        for i, r in enumerate(rows):
            if set(r) != {"F0", "F1"}:
                raise ValueError(f"calibration qubit {i}: expected fields F0 and F1")
        return cls(tuple(r["F0"] for r in rows), tuple(r["F1"] for r in rows))

    @classmethod
    def load(cls, path: str | Path) -> "ReadoutCalibration":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return {"qubits": [{"F0": a, "F1": b} for a, b in zip(self.f0, self.f1)]}


def _check_vector(p: np.ndarray, calib: ReadoutCalibration) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (2**calib.n_qubits,):
        raise ValueError(f"expected a probability vector of length {2**calib.n_qubits}, got {p.shape}")
    return p


def apply_confusion(p: np.ndarray, calib: ReadoutCalibration) -> np.ndarray:
    """Measured distribution for true distribution ``p``."""
    return _apply_per_qubit(_check_vector(p, calib), calib.matrices())


def readout_correct(measured: np.ndarray, calib: ReadoutCalibration) -> np.ndarray:
    """Invert the product confusion matrix one qubit at a time.

    Entries may come out slightly negative; they are returned unchanged and
    a ``RuntimeWarning`` is issued.
    """
    measured = _check_vector(measured, calib)
    out = _apply_per_qubit(measured, [np.linalg.inv(m) for m in calib.matrices()])
    if (out < -1e-12).any():
        warnings.warn("readout correction produced negative probabilities", RuntimeWarning, stacklevel=2)
    return out


# ---- balanced measurement errors ----------------------------------------------------


_TO_Z = {"I": gates.I2, "Z": gates.I2, "X": gates.H, "Y": gates.H @ gates.SDG}


class MeasurementErrorModel:
    """Independent readout bit flips with probability ``p[j]`` on qubit j.

    Folding such flips into the state is equivalent to a single-qubit
    depolarizing channel of rate ``3 p / 2`` right before measurement, for
    any quantity estimated from Pauli-parity measurements.
    """

    def __init__(self, p: Sequence[float]):
        p = np.asarray(p, dtype=float)
        if p.ndim != 1 or ((p < 0) | (p > 0.5)).any():
            raise ValueError("bit-flip probabilities must lie in [0, 1/2]")
        self.p = p

    @property
    def n_qubits(self) -> int:
        return len(self.p)

    def bitflip_channels(self) -> list[ch.Channel]:
        return [ch.bitflip1(float(x)) for x in self.p]

    def depolarizing_channels(self) -> list[ch.Channel]:
        return [ch.depolarizing1(1.5 * float(x)) for x in self.p]

    def measured_pauli(self, rho: np.ndarray, g: PauliString) -> float:
        """Estimate of ``Tr[g rho]`` read out through the faulty detectors.

        ``rho`` is rotated so that ``g`` becomes diagonal, the outcome
        distribution is passed through the bit flips, and the parity over
        the support of ``g`` is averaged.
        """
        n = self.n_qubits
        letters = g.letters()
        for q, c in enumerate(letters):
            if c in "XY":
                rho = apply_unitary(rho, _TO_Z[c], [q])
        probs = np.real(np.diag(rho))
        flips = [np.array([[1 - x, x], [x, 1 - x]]) for x in self.p]
        probs = _apply_per_qubit(probs, flips)
        support = np.array([c != "I" for c in letters], dtype=np.int64)
        bits = (np.arange(2**n)[:, None] >> np.arange(n - 1, -1, -1)) & 1
        parity = 1 - 2 * ((bits @ support) % 2)
        sign = 1.0 if g.phase == 0 else -1.0
        return float(sign * probs @ parity)

    def fidelity_bitflip(self, rho: np.ndarray, stabilizer_group: Sequence[PauliString]) -> float:
        """``(1/2^n) sum_g`` of measured ``Tr[g rho]`` over the ideal state's stabilizer group."""
        return float(np.mean([self.measured_pauli(rho, g) for g in stabilizer_group]))

    def fidelity_depolarizing(self, rho: np.ndarray, psi: np.ndarray) -> float:
        """``<psi| N(rho) |psi>`` with the equivalent pre-measurement depolarizing channel."""
        for q, c in enumerate(self.depolarizing_channels()):
            rho = apply_channel(rho, c, [q])
        return float(np.real(np.vdot(psi, rho @ psi)))

    def equivalence_gap(self, rho: np.ndarray, psi: np.ndarray, stabilizer_group) -> float:
        return abs(self.fidelity_bitflip(rho, stabilizer_group) - self.fidelity_depolarizing(rho, psi))
