"""Exact statevector and density-matrix simulation.

The engine works on batches: ``B`` configurations of the same circuit are
evolved together, each with its own slot gates. States are kept as tensors
with one axis per qubit (qubit 0 first), plus a leading batch axis.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Sequence

import numpy as np

from . import channels as ch
from .circuit import Circuit, FrameGate, GateAssignment, Observable, Slot
from .noise import NoiseModel, NoiseRule, Placement, gate_dependent_rates
from .pauli import PauliString

MEMORY_BUDGET = 2**26  # bytes of state per engine call


@dataclass(frozen=True, eq=False)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if a.size != 2**self.n_qubits:
            raise ValueError("amplitude count does not match n_qubits")
        if abs(np.linalg.norm(a) - 1.0) > 1e-10:
            raise ValueError("state vector is not normalised")
        object.__setattr__(self, "amplitudes", a)

    def density_matrix(self) -> "DensityMatrix":
        return DensityMatrix(self.n_qubits, np.outer(self.amplitudes, self.amplitudes.conj()))

    def to_json(self) -> str:
        return json.dumps([[z.real, z.imag] for z in self.amplitudes])


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    n_qubits: int
    matrix: np.ndarray

    def __post_init__(self):
        d = 2**self.n_qubits
        m = np.asarray(self.matrix, dtype=complex).reshape(d, d)
        if np.abs(m - m.conj().T).max() > 1e-10:
            raise ValueError("density matrix is not Hermitian")
        object.__setattr__(self, "matrix", m)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    @property
    def purity(self) -> float:
        return float(np.einsum("ij,ji->", self.matrix, self.matrix).real)

    def to_json(self) -> str:
        return json.dumps([[[z.real, z.imag] for z in row] for row in self.matrix])


# ---- compilation -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class _Op:
    kind: str  # "gate" | "slot" | "chan" | "gd"
    qubits: tuple[int, ...]
    matrix: np.ndarray | None = None  # gate unitary or channel superoperator
    slot: int = -1  # position of the slot in id order
    gamma: float = 0.0
    channel: ch.Channel | None = None


def compile_ops(circuit: Circuit, rules: Sequence[NoiseRule]) -> list[_Op]:
    pos = {sid: i for i, sid in enumerate(circuit.slot_ids)}
    two_q = {(t, g.qubits) for t, g in circuit.two_qubit_gates()}
    for r in rules:
        if r.per_location is not None:
            unknown = [loc for loc in r.per_location if loc not in two_q]
            if unknown:
                raise ValueError(f"noise channels attached to missing two-qubit sites {unknown}")
    ops: list[_Op] = []
    for t, layer in enumerate(circuit.layers):
        gates_2q = [e for e in layer if isinstance(e, FrameGate) and len(e.qubits) == 2]
        slots = [e for e in layer if isinstance(e, Slot)]
        for e in layer:
            if isinstance(e, Slot):
                ops.append(_Op("slot", e.qubits, slot=pos[e.id]))
                continue
            replacement = None
            for r in rules:
                if r.replaces_gate:
                    replacement = r.channel_at(t, e.qubits) or replacement
            if replacement is not None:
                ops.append(_Op("chan", e.qubits, replacement.superop, channel=replacement))
            else:
                ops.append(_Op("gate", e.qubits, e.matrix))
        for r in rules:
            if r.replaces_gate:
                continue
            if r.placement is Placement.AFTER_EACH_2Q:
                for g in gates_2q:
                    c = r.channel_at(t, g.qubits)
                    if c is not None and not c.is_identity:
                        ops.append(_Op("chan", g.qubits, c.superop, channel=c))
            elif r.placement is Placement.AFTER_EACH_2Q_PER_QUBIT:
                for g in gates_2q:
                    c = r.channel_at(t, g.qubits)
                    if c is not None and not c.is_identity:
                        ops.extend(_Op("chan", (q,), c.superop, channel=c) for q in g.qubits)
            else:
                for s in slots:
                    if r.gate_dependent_gamma is not None:
                        if r.gate_dependent_gamma > 0:
                            ops.append(_Op("gd", s.qubits, slot=pos[s.id], gamma=r.gate_dependent_gamma))
                    elif not r.channel.is_identity:
                        ops.append(_Op("chan", s.qubits, r.channel.superop, channel=r.channel))
    return ops


@lru_cache(maxsize=None)
def _depol1_direction() -> np.ndarray:
    """``superop(N1(r)) = I + r * D`` with this D."""
    full = ch.depolarizing1(1.0).superop
    return full - np.eye(4)


# ---- kernels ------------------------------------------------------------------


def _apply(state: np.ndarray, mat: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    """Contract ``mat`` (shared or batched) into ``state`` on the given tensor axes."""
    k = len(axes)
    dst = list(range(1, k + 1))
    moved = np.moveaxis(state, list(axes), dst)
    shape = moved.shape
    flat = moved.reshape(shape[0], 2**k, -1)
    out = np.matmul(mat, flat).reshape(shape)
    return np.moveaxis(out, dst, list(axes))


def _slot_superops(u: np.ndarray) -> np.ndarray:
    """Batched ``U kron conj(U)`` for stacks of 2x2 unitaries, shape (..., 4, 4)."""
    return np.einsum("...ab,...cd->...acbd", u, u.conj()).reshape(u.shape[:-2] + (4, 4))


def evolve_density(
    circuit: Circuit,
    noise: NoiseModel,
    slot_unitaries: np.ndarray | None = None,
    slot_superops: np.ndarray | None = None,
) -> np.ndarray:
    """Final density matrices for a batch, shape (B, 2^n, 2^n).

    Provide slot gates as unitaries (B, n_slots, 2, 2) or directly as
    superoperators (B, n_slots, 4, 4). Branches of the noise model are
    evolved separately and averaged with their weights.
    """
    n = circuit.n_qubits
    d = 2**n
    if slot_superops is None:
        if slot_unitaries is None:
            raise ValueError("need slot unitaries or slot superoperators")
        slot_unitaries = np.asarray(slot_unitaries, dtype=complex)
        slot_superops = _slot_superops(slot_unitaries)
    elif noise.is_gate_dependent:
        raise ValueError("gate-dependent noise needs slot unitaries")
    b = slot_superops.shape[0]
    if slot_superops.shape[1:] != (circuit.n_slots, 4, 4):
        raise ValueError(
            f"expected slot data for {circuit.n_slots} slots, got shape {slot_superops.shape}"
        )
    total = np.zeros((b, d, d), dtype=complex)
    for weight, rules in noise.branches:
        ops = compile_ops(circuit, rules)
        rho = np.zeros((b,) + (2,) * (2 * n), dtype=complex)
        rho[(slice(None),) + (0,) * (2 * n)] = 1.0
        for op in ops:
            axes = [1 + q for q in op.qubits] + [1 + n + q for q in op.qubits]
            if op.kind == "slot":
                mat = slot_superops[:, op.slot]
            elif op.kind == "gate":
                mat = ch.unitary_superop(op.matrix)
            elif op.kind == "chan":
                mat = op.matrix
            else:
                rates = gate_dependent_rates(slot_unitaries[:, op.slot], op.gamma)
                mat = np.eye(4) + rates[:, None, None] * _depol1_direction()
            rho = _apply(rho, mat, axes)
        total += weight * rho.reshape(b, d, d)
    return total


def evolve_state(circuit: Circuit, slot_unitaries: np.ndarray) -> np.ndarray:
    """Error-free final states for a batch, shape (B, 2^n)."""
    n = circuit.n_qubits
    u = np.asarray(slot_unitaries, dtype=complex)
    b = u.shape[0]
    if u.shape[1:] != (circuit.n_slots, 2, 2):
        raise ValueError(f"expected unitaries for {circuit.n_slots} slots, got {u.shape}")
    psi = np.zeros((b,) + (2,) * n, dtype=complex)
    psi[(slice(None),) + (0,) * n] = 1.0
    for op in compile_ops(circuit, ()):
        axes = [1 + q for q in op.qubits]
        mat = u[:, op.slot] if op.kind == "slot" else op.matrix
        psi = _apply(psi, mat, axes)
    return psi.reshape(b, 2**n)


def batch_size(n_qubits: int, density: bool = True) -> int:
    per = 16 * (4**n_qubits if density else 2**n_qubits)
    return max(1, MEMORY_BUDGET // per)


# ---- observables ----------------------------------------------------------------


@lru_cache(maxsize=4096)
def _pauli_row(label: str) -> tuple[int, np.ndarray]:
    """``(xmask, v)`` with ``P[k, k ^ xmask] = v[k]`` for a Hermitian Pauli label."""
    vals = {"I": (1, 1), "X": (1, 1), "Z": (1, -1), "Y": (-1j, 1j)}
    v = reduce(np.kron, [np.array(vals[c], dtype=complex) for c in label])
    n = len(label)
    xmask = sum(1 << (n - 1 - q) for q, c in enumerate(label) if c in "XY")
    v.setflags(write=False)
    return xmask, v


def pauli_expectations_rho(rho: np.ndarray, p: PauliString) -> np.ndarray:
    """``Tr[P rho]`` for a batch of density matrices (B, D, D); complex."""
    xmask, v = _pauli_row(p.letters())
    k = np.arange(v.size)
    vals = rho[:, k ^ xmask, k] @ v
    return p.sign * vals


def pauli_expectations_psi(psi: np.ndarray, p: PauliString) -> np.ndarray:
    xmask, v = _pauli_row(p.letters())
    k = np.arange(v.size)
    return p.sign * np.einsum("bk,k,bk->b", psi.conj(), v, psi[:, k ^ xmask])


def pauli_bits_expectations(rho: np.ndarray, x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """``Tr[P_b rho]`` for many Hermitian Paulis given as (B, n) bit arrays on one (D, D) state."""
    x = np.asarray(x, dtype=np.int64)
    z = np.asarray(z, dtype=np.int64)
    n = x.shape[1]
    weights = 1 << np.arange(n - 1, -1, -1)
    xm, zm = x @ weights, z @ weights
    k = np.arange(2**n)
    parity = np.bitwise_count((zm[:, None] & k[None, :]).astype(np.uint64)) & 1
    n_y = (x & z).sum(axis=1)
    v = ((-1j) ** n_y)[:, None] * (1 - 2 * parity.astype(float))
    return np.real((rho[k[None, :] ^ xm[:, None], k[None, :]] * v).sum(axis=1))


def expectation_batch(states: np.ndarray, obs: Observable, density: bool) -> np.ndarray:
    fn = pauli_expectations_rho if density else pauli_expectations_psi
    out = np.zeros(states.shape[0], dtype=complex)
    for c, p in obs.terms:
        out += c * fn(states, p)
    return out.real


def fidelity_batch(rho: np.ndarray, psi: np.ndarray) -> np.ndarray:
    return np.einsum("bi,bij,bj->b", psi.conj(), rho, psi).real


# ---- single-configuration API --------------------------------------------------


def run_error_free(circuit: Circuit, assignment: GateAssignment) -> StateVector:
    u = GateAssignment(assignment).as_array(circuit)[None]
    return StateVector(circuit.n_qubits, evolve_state(circuit, u)[0])


def run_noisy(circuit: Circuit, assignment: GateAssignment, noise: NoiseModel) -> DensityMatrix:
    u = GateAssignment(assignment).as_array(circuit)[None]
    return DensityMatrix(circuit.n_qubits, evolve_density(circuit, noise, slot_unitaries=u)[0])


def expectation(state: StateVector | DensityMatrix, obs: Observable) -> float:
    if state.n_qubits != obs.n_qubits:
        raise ValueError(f"state has {state.n_qubits} qubits, observable {obs.n_qubits}")
    if isinstance(state, StateVector):
        val = sum(c * pauli_expectations_psi(state.amplitudes[None], p)[0] for c, p in obs.terms)
    else:
        val = sum(c * pauli_expectations_rho(state.matrix[None], p)[0] for c, p in obs.terms)
    if abs(complex(val).imag) > 1e-10:
        raise ValueError("observable expectation has a non-negligible imaginary part")
    return float(complex(val).real)


def compute_error(circuit: Circuit, assignment: GateAssignment, noise: NoiseModel) -> float:
    obs = circuit.observable
    ideal = expectation(run_error_free(circuit, assignment), obs)
    if noise.is_zero:
        return 0.0
    return expectation(run_noisy(circuit, assignment, noise), obs) - ideal


def fidelity(rho: DensityMatrix, psi: StateVector) -> float:
    if rho.n_qubits != psi.n_qubits:
        raise ValueError("dimension mismatch between state and density matrix")
    a = psi.amplitudes
    return float((a.conj() @ rho.matrix @ a).real)


def _natural_basis() -> np.ndarray:
    """Superoperators of ``rho -> |a><b| rho |d><c|`` indexed [a, b, c, d]."""
    e = np.zeros((2, 2, 2, 2), dtype=complex)
    for a in range(2):
        for b in range(2):
            e[a, b, a, b] = 1.0
    out = np.zeros((2, 2, 2, 2, 4, 4), dtype=complex)
    for a, b, c, dd in np.ndindex(2, 2, 2, 2):
        out[a, b, c, dd] = np.kron(e[a, b], e[c, dd].conj())
    return out


def frame_tensor(circuit: Circuit, noise: NoiseModel) -> np.ndarray:
    """Tensor F with ``F[a1,b1,c1,d1, a2,...] = com(F; B_{a1b1}^{c1d1}, ...)``."""
    nr = circuit.n_slots
    if nr > 3:
        raise ValueError(f"tensor form limited to 3 slots, circuit has {nr}")
    basis = _natural_basis().reshape(16, 4, 4)
    combos = np.array(list(np.ndindex(*(16,) * nr))).reshape(-1, nr)
    superops = basis[combos]  # (16^nr, nr, 4, 4)
    rho = evolve_density(circuit, noise, slot_superops=superops)
    # entries are complex: basis maps are not Hermiticity preserving
    full = np.zeros(len(combos), dtype=complex)
    for c, p in circuit.observable.terms:
        full += c * pauli_expectations_rho(rho, p)
    return full.reshape((2, 2, 2, 2) * nr)


def tensor_form_check(circuit: Circuit, assignment: GateAssignment, noise: NoiseModel) -> float:
    """``com`` computed by contracting the frame tensor with ``R (x) R*`` per slot."""
    f = frame_tensor(circuit, noise)
    u = GateAssignment(assignment).as_array(circuit)
    val = f
    for i in range(circuit.n_slots):
        r = u[i]
        coeff = np.einsum("ab,cd->abcd", r, r.conj())
        val = np.tensordot(coeff, val, axes=([0, 1, 2, 3], [0, 1, 2, 3]))
    return float(np.real(val))


# ---- small helpers used elsewhere -------------------------------------------------


def apply_channel(rho: np.ndarray, channel: ch.Channel, qubits: Sequence[int]) -> np.ndarray:
    """Apply a channel to a single (D, D) density matrix on the given qubits."""
    d = rho.shape[0]
    n = int(round(np.log2(d)))
    t = rho.reshape((1,) + (2,) * (2 * n))
    axes = [1 + q for q in qubits] + [1 + n + q for q in qubits]
    return _apply(t, channel.superop, axes).reshape(d, d)


def apply_unitary(rho: np.ndarray, u: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    return apply_channel(rho, ch.Channel(len(qubits), ch.unitary_superop(u)), qubits)
