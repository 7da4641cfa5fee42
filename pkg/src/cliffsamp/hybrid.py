"""Circuits with one non-Clifford slot, evaluated through the ten-Clifford expansion.

With every other slot Clifford, both ``com`` and ``com_ef`` are linear in
the expansion coefficients of the odd slot's channel:

    com(u)    = sum_k a_k(u) com_k        (a from N1(r(u)) o [u])
    com_ef(u) = sum_k b_k(u) com_ef_k     (b from [u])

where ``com_k``/``com_ef_k`` are Clifford-circuit values with basis gate
``B_k`` in that slot (its own gate-dependent noise folded into ``a``). So
``Error = w(u) . v`` with ``w = (a, b)`` and ``v = (com_k, -com_ef_k)``,
and the average of ``Error^2`` over the odd slot is the quadratic form
``v^T M v`` with ``M = E_u[w w^T]``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from . import gates
from .circuit import Circuit
from .noise import NoiseModel, gate_dependent_rates
from .pauli import PAULI_MATRICES
from .stabilizer import (
    _basis_matrix,
    clifford_angle_weights,
    clifford_basis,
    propagate_expectations,
)

_PAULIS = np.stack([PAULI_MATRICES[c] for c in "IXYZ"])


def noise_gamma(noise: NoiseModel | None) -> float:
    """Strength of the gate-dependent single-qubit rule, 0 if there is none."""
    if noise is None:
        return 0.0
    gammas = [r.gate_dependent_gamma for _, rules in noise.branches for r in rules if r.gate_dependent_gamma is not None]
    if len(gammas) > 1:
        raise ValueError("more than one gate-dependent rule is not supported")
    return float(gammas[0]) if gammas else 0.0


def batched_ptm(u: np.ndarray) -> np.ndarray:
    """PTMs of the unitary channels of a stack of 2x2 unitaries, shape (..., 4, 4)."""
    u = np.asarray(u, dtype=complex)
    conj = np.einsum("...ab,jbc,...dc->...jad", u, _PAULIS, u.conj())
    return np.einsum("iba,...jab->...ij", _PAULIS, conj).real / 2


@lru_cache(maxsize=None)
def _pinv_basis() -> np.ndarray:
    return np.linalg.pinv(_basis_matrix())


def _coefficients(ptm: np.ndarray) -> np.ndarray:
    return ptm.reshape(ptm.shape[:-2] + (16,)) @ _pinv_basis().T


def slot_weights(u: np.ndarray, gamma: float, rates: np.ndarray | None = None) -> np.ndarray:
    """``w(u) = (a, b)`` for a stack of unitaries, shape (..., 20)."""
    ptm = batched_ptm(u)
    if rates is None:
        rates = gate_dependent_rates(u, gamma) if gamma else np.zeros(ptm.shape[:-2])
    shrink = 1.0 - 4.0 * np.asarray(rates) / 3.0
    scale = np.ones(ptm.shape[:-2] + (4, 1))
    scale[..., 1:, 0] = shrink[..., None]
    return np.concatenate([_coefficients(scale * ptm), _coefficients(ptm)], axis=-1)


def slot_responses(
    circuit: Circuit, noise: NoiseModel | None, clifford_idx: np.ndarray, slot: int
) -> np.ndarray:
    """``v = (com_k, -com_ef_k)`` for each configuration, shape (B, 20).

    ``slot`` is the position (in slot-id order) of the non-Clifford slot;
    whatever ``clifford_idx`` holds there is ignored.
    """
    idx = np.array(clifford_idx, dtype=np.int64, copy=True)
    b = idx.shape[0]
    out = np.zeros((b, 20))
    weights_table = clifford_angle_weights()
    for k, c in enumerate(clifford_basis()):
        idx[:, slot] = c
        weights = weights_table[idx]
        weights[:, slot] = 0.0
        out[:, k] = propagate_expectations(circuit, idx, noise, angle_weights=weights)
        out[:, 10 + k] = -propagate_expectations(circuit, idx)
    return out


def hybrid_errors(
    circuit: Circuit, noise: NoiseModel | None, clifford_idx: np.ndarray, slot: int, u: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Exact ``(com, com_ef)`` for configurations whose slot ``slot`` holds ``u[b]``."""
    v = slot_responses(circuit, noise, clifford_idx, slot)
    w = slot_weights(u, noise_gamma(noise))
    return (w[:, :10] * v[:, :10]).sum(1), -(w[:, 10:] * v[:, 10:]).sum(1)


# ---- second moments of w over the odd slot --------------------------------------


def _euler_unitaries(t1, t2, t3) -> np.ndarray:
    """``Rz(t3) Rx(t2) Rz(t1)`` with ``R_P(t) = exp(-i t P / 2)``."""

    def rz(t):
        m = np.zeros(t.shape + (2, 2), dtype=complex)
        m[..., 0, 0] = np.exp(-0.5j * t)
        m[..., 1, 1] = np.exp(0.5j * t)
        return m

    def rx(t):
        c, s = np.cos(t / 2), np.sin(t / 2)
        m = np.empty(t.shape + (2, 2), dtype=complex)
        m[..., 0, 0] = m[..., 1, 1] = c
        m[..., 0, 1] = m[..., 1, 0] = -1j * s
        return m

    return rz(t3) @ rx(t2) @ rz(t1)


@lru_cache(maxsize=None)
def haar_slot_moment(gamma: float, nodes: int = 48) -> np.ndarray:
    """``E_u[w w^T]`` over Haar-random u, by Gauss-Legendre quadrature in ZXZ Euler angles.

    The canonical chart theta1, theta3 in [0, 2 pi), theta2 in [0, pi]
    covers U(2) modulo phase once with density ``sin(theta2) / (8 pi^2)``,
    and on it the gate-dependent rate is ``gamma * sum(theta) / 2 pi``.
    """
    x, wq = np.polynomial.legendre.leggauss(nodes)
    a = np.pi * (x + 1)  # [0, 2 pi]
    wa = np.pi * wq
    b = np.pi * (x + 1) / 2  # [0, pi]
    wb = np.pi / 2 * wq * np.sin(b)
    t1, t2, t3 = np.meshgrid(a, b, a, indexing="ij")
    weight = (wa[:, None, None] * wb[None, :, None] * wa[None, None, :]) / (8 * np.pi**2)
    u = _euler_unitaries(t1, t2, t3).reshape(-1, 2, 2)
    rates = gamma * (t1 + t2 + t3).reshape(-1) / (2 * np.pi)
    w = slot_weights(u, gamma, rates)
    m = np.einsum("n,ni,nj->ij", weight.reshape(-1), w, w)
    m.setflags(write=False)
    return m


@lru_cache(maxsize=None)
def clifford_slot_moment(gamma: float) -> np.ndarray:
    """``E_c[w w^T]`` over the 24 Cliffords, exact."""
    w = slot_weights(gates.clifford_matrices(), gamma, gamma * clifford_angle_weights())
    m = w.T @ w / 24
    m.setflags(write=False)
    return m


def conditional_losses(
    circuit: Circuit, noise: NoiseModel | None, clifford_idx: np.ndarray, slot: int
) -> tuple[np.ndarray, np.ndarray]:
    """Per configuration: ``E[Error^2]`` with the slot Haar-averaged and Clifford-averaged."""
    gamma = noise_gamma(noise)
    v = slot_responses(circuit, noise, clifford_idx, slot)
    q_haar = np.einsum("bi,ij,bj->b", v, haar_slot_moment(gamma), v)
    q_cliff = np.einsum("bi,ij,bj->b", v, clifford_slot_moment(gamma), v)
    return q_haar, q_cliff
