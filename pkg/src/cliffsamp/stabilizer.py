"""Stabilizer simulation.

* ``Tableau``: destabilizer/stabilizer generators with rows bit-packed along
  the qubit axis into uint64 words (CHP layout). Row products are word-wise
  XOR with the phase accumulated from popcounts.
* Pauli-frame trajectories for circuits whose noise is a Pauli mixture.
* Batched Heisenberg propagation of Pauli observables through Clifford
  circuits, giving exact expectations under Pauli noise.
* The ten-Clifford expansion of a single-qubit unitary channel, used for
  circuits with one non-Clifford slot.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import channels as ch
from . import gates
from .circuit import Circuit, FrameGate, GateAssignment, Observable, Slot
from .dense import compile_ops
from .noise import NoiseModel, euler_zxz, gate_dependent_rates
from .pauli import PauliString

_ONE = np.uint64(1)


# ---- bit helpers ---------------------------------------------------------------


def _pack(bits: np.ndarray) -> np.ndarray:
    """Pack (..., n) 0/1 arrays into (..., ceil(n/64)) uint64 words, qubit q at bit q%64."""
    bits = np.asarray(bits, dtype=np.uint64)
    n = bits.shape[-1]
    w = (n + 63) // 64
    padded = np.zeros(bits.shape[:-1] + (w * 64,), dtype=np.uint64)
    padded[..., :n] = bits
    shifts = np.arange(64, dtype=np.uint64)
    return (padded.reshape(bits.shape[:-1] + (w, 64)) << shifts).sum(axis=-1, dtype=np.uint64)


def _unpack(words: np.ndarray, n: int) -> np.ndarray:
    shifts = np.arange(64, dtype=np.uint64)
    bits = (words[..., :, None] >> shifts) & _ONE
    return bits.reshape(words.shape[:-1] + (-1,))[..., :n].astype(np.uint8)


def _popcount(words: np.ndarray) -> np.ndarray:
    return np.bitwise_count(words).sum(axis=-1, dtype=np.int64)


def _phase_sum(x1, z1, x2, z2) -> np.ndarray:
    """Total exponent of i in ``P1 @ P2`` for packed Hermitian Paulis (broadcasts)."""
    y1 = x1 & z1
    xo = x1 & ~z1
    zo = ~x1 & z1
    plus = (y1 & z2 & ~x2) | (xo & z2 & x2) | (zo & x2 & ~z2)
    minus = (y1 & x2 & ~z2) | (xo & z2 & ~x2) | (zo & x2 & z2)
    return _popcount(plus) - _popcount(minus)


@lru_cache(maxsize=None)
def _table_arrays(kind: str) -> tuple[np.ndarray, np.ndarray]:
    """Conjugation table of a named gate as (out_index, out_sign)."""
    if kind in gates.TWO_QUBIT_GATES:
        tab = gates.conjugation_table(gates.TWO_QUBIT_GATES[kind])
    else:
        tab = gates.conjugation_table(gates.NAMED_1Q[kind])
    return tab.out_index, tab.out_sign


def _local_index(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Table index from local bit arrays of shape (..., k)."""
    k = x.shape[-1]
    w = 1 << np.arange(k)
    return (x.astype(np.int64) * w).sum(-1) + (z.astype(np.int64) * (w << k)).sum(-1)


def _split_index(idx: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    j = np.arange(k)
    x = (idx[..., None] >> j) & 1
    z = (idx[..., None] >> (k + j)) & 1
    return x.astype(np.uint8), z.astype(np.uint8)


# ---- tableau ---------------------------------------------------------------------


class Tableau:
    """Stabilizer state on ``n`` qubits.

    Rows ``0..n-1`` are destabilizers, rows ``n..2n-1`` stabilizers. Signs
    are bits (0 for +, 1 for -); generators are Hermitian Paulis.
    """

    def __init__(self, n: int, x: np.ndarray, z: np.ndarray, r: np.ndarray):
        self.n = n
        self.x = x
        self.z = z
        self.r = r

    @classmethod
    def fresh(cls, n: int) -> "Tableau":
        eye = np.eye(n, dtype=np.uint8)
        zero = np.zeros((n, n), dtype=np.uint8)
        x = _pack(np.vstack([eye, zero]))
        z = _pack(np.vstack([zero, eye]))
        return cls(n, x, z, np.zeros(2 * n, dtype=np.uint8))

    def copy(self) -> "Tableau":
        return Tableau(self.n, self.x.copy(), self.z.copy(), self.r.copy())

    @property
    def n_qubits(self) -> int:
        return self.n

    # column access
    def _get(self, arr: np.ndarray, qubits: np.ndarray) -> np.ndarray:
        w = qubits >> 6
        s = (qubits & 63).astype(np.uint64)
        return ((arr[:, w] >> s) & _ONE).astype(np.uint8)

    def _set(self, arr: np.ndarray, qubits: np.ndarray, bits: np.ndarray) -> None:
        w = qubits >> 6
        s = (qubits & 63).astype(np.uint64)
        contrib = bits.astype(np.uint64) << s
        for word in np.unique(w):
            sel = w == word
            mask = np.bitwise_or.reduce(_ONE << s[sel])
            arr[:, word] = (arr[:, word] & ~mask) | np.bitwise_or.reduce(contrib[:, sel], axis=1)

    def _apply_table(self, out_index, out_sign, qubit_groups: np.ndarray) -> None:
        """Apply a tabulated k-qubit Clifford to each group of qubits (G, k).

        ``out_index``/``out_sign`` are either one table (4^k,) or one per group (G, 4^k).
        """
        g, k = qubit_groups.shape
        flat = qubit_groups.reshape(-1)
        xb = self._get(self.x, flat).reshape(-1, g, k)
        zb = self._get(self.z, flat).reshape(-1, g, k)
        idx = _local_index(xb, zb)  # (R, G)
        if out_index.ndim == 1:
            new, flip = out_index[idx], out_sign[idx]
        else:
            cols = np.arange(g)
            new, flip = out_index[cols, idx], out_sign[cols, idx]
        nx, nz = _split_index(new, k)
        self._set(self.x, flat, nx.reshape(-1, g * k))
        self._set(self.z, flat, nz.reshape(-1, g * k))
        self.r ^= np.bitwise_xor.reduce(flip.astype(np.uint8), axis=1)

    def apply(self, gate, qubits: Sequence[int]) -> "Tableau":
        """Conjugate every generator by a Clifford gate.

        ``gate`` is a gate name (``"H"``, ``"S"``, ``"CZ"``, ``"CNOT"``,
        ``"U_PHASE"`` ...), a ``CliffordGate1Q`` or a Clifford matrix.
        Non-Clifford matrices raise ValueError.
        """
        qubits = np.asarray(qubits, dtype=np.int64)
        if qubits.ndim != 1 or ((qubits < 0) | (qubits >= self.n)).any():
            raise ValueError(f"qubits {qubits.tolist()} out of range")
        if isinstance(gate, str):
            out_index, out_sign = _table_arrays(gate)
        elif isinstance(gate, gates.CliffordGate1Q):
            out_index, out_sign = gate.table.out_index, gate.table.out_sign
        else:
            tab = gates.conjugation_table(np.asarray(gate))
            out_index, out_sign = tab.out_index, tab.out_sign
        if len(out_index) != 4 ** len(qubits):
            raise ValueError("gate arity does not match qubit count")
        self._apply_table(out_index, out_sign, qubits[None, :])
        return self

    def apply_cliffords(self, qubits: Sequence[int], indices: Sequence[int]) -> "Tableau":
        """Apply table Cliffords ``indices[i]`` to ``qubits[i]`` (distinct qubits)."""
        qubits = np.asarray(qubits, dtype=np.int64)
        out_index, out_sign = gates.clifford_lookup()
        idx = np.asarray(indices, dtype=np.int64)
        self._apply_table(out_index[idx], out_sign[idx], qubits[:, None])
        return self

    # rows
    def row(self, i: int) -> PauliString:
        xb = _unpack(self.x[i], self.n).astype(bool)
        zb = _unpack(self.z[i], self.n).astype(bool)
        return PauliString(xb, zb, 2 * int(self.r[i]))

    def stabilizers(self) -> list[PauliString]:
        return [self.row(i) for i in range(self.n, 2 * self.n)]

    def destabilizers(self) -> list[PauliString]:
        return [self.row(i) for i in range(self.n)]

    def _anticommute(self, rows: slice, px: np.ndarray, pz: np.ndarray) -> np.ndarray:
        return (_popcount((self.x[rows] & pz) ^ (self.z[rows] & px)) & 1).astype(bool)

    def check_invariants(self) -> list[str]:
        """Commutation pattern and symplectic rank; empty list when consistent."""
        n = self.n
        xb = _unpack(self.x, n).astype(np.int64)
        zb = _unpack(self.z, n).astype(np.int64)
        omega = (xb @ zb.T + zb @ xb.T) % 2
        expected = np.zeros((2 * n, 2 * n), dtype=np.int64)
        expected[np.arange(n), np.arange(n) + n] = 1
        expected[np.arange(n) + n, np.arange(n)] = 1
        problems = []
        d, s = slice(0, n), slice(n, 2 * n)
        if omega[s, s].any():
            problems.append("stabilizers do not commute")
        if (omega[d, s] != expected[d, s]).any():
            problems.append("destabilizer/stabilizer pairing broken")
        m = np.hstack([xb, zb]) % 2
        if _gf2_rank(m) != 2 * n:
            problems.append("generators are not independent")
        return problems

    def _product(self, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray, int]:
        """Product of the given rows, in order, as (x, z, phase exponent mod 4)."""
        w = self.x.shape[1]
        px = np.zeros(w, dtype=np.uint64)
        pz = np.zeros(w, dtype=np.uint64)
        phase = 0
        for i in rows:
            phase += 2 * int(self.r[i]) + int(_phase_sum(px, pz, self.x[i], self.z[i]))
            px ^= self.x[i]
            pz ^= self.z[i]
        return px, pz, phase % 4

    def expectation(self, p: PauliString) -> int:
        if p.n_qubits != self.n:
            raise ValueError("Pauli and tableau act on different qubit counts")
        if p.phase % 2:
            raise ValueError("only Hermitian Paulis have real expectations")
        px = _pack(p.x.astype(np.uint8))
        pz = _pack(p.z.astype(np.uint8))
        if self._anticommute(slice(self.n, 2 * self.n), px, pz).any():
            return 0
        which = np.nonzero(self._anticommute(slice(0, self.n), px, pz))[0] + self.n
        _, _, phase = self._product(which)
        return 1 if phase == p.phase else -1

    def _rowmul_into(self, targets: np.ndarray, p: int) -> None:
        """Row ``h <- row_p * row_h`` for every h in ``targets``."""
        if not len(targets):
            return
        xs, zs = self.x[targets], self.z[targets]
        g = _phase_sum(self.x[p], self.z[p], xs, zs)
        total = (2 * self.r[targets].astype(np.int64) + 2 * int(self.r[p]) + g) % 4
        self.r[targets] = (total // 2).astype(np.uint8)
        self.x[targets] = xs ^ self.x[p]
        self.z[targets] = zs ^ self.z[p]

    def measure(self, qubit: int, rng: np.random.Generator) -> int:
        """Z-basis measurement of one qubit, collapsing the state in place."""
        n = self.n
        w, s = qubit >> 6, np.uint64(qubit & 63)
        xcol = ((self.x[:, w] >> s) & _ONE).astype(bool)
        stab_hits = np.nonzero(xcol[n:])[0]
        if len(stab_hits):
            p = int(stab_hits[0]) + n
            others = np.nonzero(xcol)[0]
            others = others[others != p]
            self._rowmul_into(others, p)
            self.x[p - n], self.z[p - n], self.r[p - n] = self.x[p], self.z[p], self.r[p]
            outcome = int(rng.integers(2))
            self.x[p] = 0
            self.z[p] = 0
            self.z[p, w] = _ONE << s
            self.r[p] = outcome
            return outcome
        which = np.nonzero(xcol[:n])[0] + n
        _, _, phase = self._product(which)
        return phase // 2

    def group_elements(self):
        """Iterate over all 2^n signed elements of the stabilizer group."""
        for mask in range(2**self.n):
            rows = [self.n + i for i in range(self.n) if (mask >> i) & 1]
            yield self._pauli_from_product(rows)

    def _pauli_from_product(self, rows) -> PauliString:
        px, pz, phase = self._product(np.asarray(rows, dtype=np.int64))
        return PauliString(_unpack(px, self.n).astype(bool), _unpack(pz, self.n).astype(bool), phase)


def _gf2_rank(m: np.ndarray) -> int:
    m = m.copy() % 2
    rank = 0
    rows, cols = m.shape
    for c in range(cols):
        piv = np.nonzero(m[rank:, c])[0]
        if not len(piv):
            continue
        p = rank + piv[0]
        m[[rank, p]] = m[[p, rank]]
        hit = np.nonzero(m[:, c])[0]
        hit = hit[hit != rank]
        m[hit] ^= m[rank]
        rank += 1
        if rank == rows:
            break
    return rank


def apply_clifford(tableau: Tableau, gate, qubits: Sequence[int]) -> Tableau:
    return tableau.apply(gate, qubits)


def pauli_expectation(tableau: Tableau, pauli: PauliString) -> int:
    """+1 / -1 when +-pauli is in the stabilizer group, 0 otherwise."""
    return tableau.expectation(pauli)


def measure_sample(tableau: Tableau, rng: np.random.Generator) -> tuple[np.ndarray, Tableau]:
    """Measure every qubit (0 first) on a copy; returns bits and the collapsed copy."""
    t = tableau.copy()
    bits = np.array([t.measure(q, rng) for q in range(t.n)], dtype=np.uint8)
    return bits, t


def sample_stabilizer_element(tableau: Tableau, rng: np.random.Generator) -> PauliString:
    """Uniform element of the stabilizer group with its sign."""
    mask = rng.integers(0, 2, size=tableau.n).astype(bool)
    rows = np.nonzero(mask)[0] + tableau.n
    return tableau._pauli_from_product(rows)


def sample_group_elements(tableau: Tableau, rng: np.random.Generator, count: int):
    """``count`` uniform stabilizer-group elements as bit arrays ``(x, z, sign)``.

    Vectorised version of ``sample_stabilizer_element``: each generator is
    included with probability 1/2 and the product is accumulated in
    generator order with exact phase tracking.
    """
    n = tableau.n
    gx = _unpack(tableau.x[n:], n).astype(np.int64)
    gz = _unpack(tableau.z[n:], n).astype(np.int64)
    mask = rng.integers(0, 2, size=(count, n)).astype(bool)
    x = np.zeros((count, n), dtype=np.int64)
    z = np.zeros((count, n), dtype=np.int64)
    phase = np.zeros(count, dtype=np.int64)
    for j in range(n):
        sel = mask[:, j]
        phase[sel] += 2 * int(tableau.r[n + j]) + _phase_sum_bits(x[sel], z[sel], gx[j], gz[j])
        x[sel] ^= gx[j]
        z[sel] ^= gz[j]
    return x.astype(np.uint8), z.astype(np.uint8), ((phase % 4) // 2).astype(np.uint8)


def _phase_sum_bits(x1, z1, x2, z2) -> np.ndarray:
    """Unpacked counterpart of ``_phase_sum`` over the last axis."""
    y1 = x1 & z1
    xo = x1 & (1 - z1)
    zo = (1 - x1) & z1
    plus = (y1 & z2 & (1 - x2)) | (xo & z2 & x2) | (zo & x2 & (1 - z2))
    minus = (y1 & x2 & (1 - z2)) | (xo & z2 & (1 - x2)) | (zo & x2 & z2)
    return plus.sum(-1) - minus.sum(-1)


# ---- circuits on tableaus ---------------------------------------------------------


def clifford_indices(circuit: Circuit, assignment) -> np.ndarray:
    """Per-slot Clifford table indices from indices or a GateAssignment of Clifford matrices."""
    if isinstance(assignment, dict):
        GateAssignment(assignment).check(circuit)
        return np.array([gates.clifford_index(assignment[i]) for i in circuit.slot_ids], dtype=np.int64)
    idx = np.asarray(assignment, dtype=np.int64)
    if idx.shape != (circuit.n_slots,) or ((idx < 0) | (idx >= 24)).any():
        raise ValueError("need one Clifford index in [0, 24) per slot")
    return idx


def simulate_tableau(circuit: Circuit, assignment) -> Tableau:
    """Error-free Clifford circuit on a fresh tableau, one layer at a time."""
    idx = clifford_indices(circuit, assignment)
    pos = {sid: i for i, sid in enumerate(circuit.slot_ids)}
    t = Tableau.fresh(circuit.n_qubits)
    for layer in circuit.layers:
        sq, sc = [], []
        by_kind: dict[str, list[tuple[int, ...]]] = {}
        for e in layer:
            if isinstance(e, Slot):
                sq.append(e.qubit)
                sc.append(idx[pos[e.id]])
            elif e.kind == "FIXED_1Q_CLIFFORD":
                sq.append(e.qubits[0])
                sc.append(e.clifford)
            else:
                by_kind.setdefault(e.kind, []).append(e.qubits)
        if sq:
            t.apply_cliffords(sq, sc)
        for kind, pairs in by_kind.items():
            out_index, out_sign = _table_arrays(kind)
            t._apply_table(out_index, out_sign, np.asarray(pairs, dtype=np.int64))
    return t


def observable_expectation(tableau: Tableau, obs: Observable) -> float:
    return float(sum(c * tableau.expectation(p) for c, p in obs.terms))


# ---- Pauli frames ---------------------------------------------------------------


def _pauli_sampler(channel: ch.Channel):
    """(cumulative probabilities, x bits (m, k), z bits (m, k)) of a Pauli mixture."""
    probs = np.array([p for p, _ in channel.pauli_mixture])
    labs = [PauliString.from_label(lab) for _, lab in channel.pauli_mixture]
    xs = np.array([p.x for p in labs], dtype=np.uint8)
    zs = np.array([p.z for p in labs], dtype=np.uint8)
    return np.cumsum(probs), xs, zs


def run_pauli_trajectories(
    circuit: Circuit,
    assignment,
    noise: NoiseModel,
    n_traj: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Measurement bitstrings of ``n_traj`` noisy runs, shape (n_traj, n).

    A reference sample of the noiseless tableau is combined with Pauli frames
    that start as random Z strings (which randomises non-deterministic
    outcomes) and pick up a sampled Pauli at every noise site.
    """
    if not noise.is_pauli:
        raise ValueError(f"noise model {noise.name} is not a Pauli mixture")
    idx = clifford_indices(circuit, assignment)
    n = circuit.n_qubits
    ref, _ = measure_sample(simulate_tableau(circuit, idx), rng)
    fx = np.zeros((n_traj, n), dtype=np.uint8)
    fz = rng.integers(0, 2, size=(n_traj, n), dtype=np.uint8)
    c_index, _ = gates.clifford_lookup()
    samplers: dict[int, tuple] = {}
    slot_unitaries = None
    for op in compile_ops(circuit, noise.rules):
        q = list(op.qubits)
        if op.kind in ("slot", "gate"):
            if op.kind == "slot":
                table = c_index[idx[op.slot]]
            else:
                table = _op_table(op.matrix)[0]
            k = len(q)
            new = table[_local_index(fx[:, q], fz[:, q])]
            nx, nz = _split_index(new, k)
            fx[:, q], fz[:, q] = nx, nz
        elif op.kind == "chan":
            key = id(op.channel)
            if key not in samplers:
                samplers[key] = _pauli_sampler(op.channel)
            cum, xs, zs = samplers[key]
            pick = np.minimum(np.searchsorted(cum, rng.random(n_traj), side="right"), len(cum) - 1)
            fx[:, q] ^= xs[pick]
            fz[:, q] ^= zs[pick]
        else:
            if slot_unitaries is None:
                slot_unitaries = gates.clifford_matrices()[idx]
            rate = float(gate_dependent_rates(slot_unitaries[op.slot], op.gamma))
            u = rng.random(n_traj)
            which = rng.integers(0, 3, size=n_traj)
            hit = u < rate
            fx[hit, q[0]] ^= (which[hit] != 2).astype(np.uint8)  # X or Y
            fz[hit, q[0]] ^= (which[hit] != 0).astype(np.uint8)  # Y or Z
    return ref[None, :] ^ fx


def run_pauli_trajectory(circuit, assignment, noise, rng) -> np.ndarray:
    return run_pauli_trajectories(circuit, assignment, noise, 1, rng)[0]


_OP_TABLES: dict[tuple[bytes, bool], tuple[np.ndarray, np.ndarray]] = {}


def _op_table(matrix: np.ndarray, inverse: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Conjugation table of a fixed gate (or of its inverse), cached by matrix bytes."""
    m = np.ascontiguousarray(matrix, dtype=complex)
    key = (m.tobytes() + bytes(m.shape), inverse)
    if key not in _OP_TABLES:
        tab = gates.conjugation_table(m.conj().T if inverse else m)
        _OP_TABLES[key] = (tab.out_index, tab.out_sign)
    return _OP_TABLES[key]


# ---- Heisenberg propagation -----------------------------------------------------


@lru_cache(maxsize=None)
def clifford_angle_weights() -> np.ndarray:
    """``(theta1 + theta2 + theta3) / 2 pi`` for each table Clifford; the gate-dependent rate is gamma times this."""
    w = euler_zxz(gates.clifford_matrices()).sum(axis=-1) / (2 * np.pi)
    w.setflags(write=False)
    return w


def propagate_paulis(
    circuit: Circuit,
    clifford_idx: np.ndarray,
    x: np.ndarray,
    z: np.ndarray,
    sign: np.ndarray | None = None,
    noise: NoiseModel | None = None,
    angle_weights: np.ndarray | None = None,
) -> np.ndarray:
    """``Tr[P_b rho_b]`` for one signed Pauli per configuration, shape (B,).

    ``clifford_idx`` is (B, n_slots); ``x``/``z`` are (B, n) bit arrays and
    ``sign`` marks a leading minus. The Pauli is pulled back through the
    circuit (inverse conjugation tables for gates, eigenvalue factors for
    Pauli channels) and evaluated on |0...0>. ``angle_weights`` (B, n_slots)
    overrides the per-slot Euler weights of gate-dependent noise; a zero
    entry switches that slot's noise off.
    """
    clifford_idx = np.atleast_2d(np.asarray(clifford_idx, dtype=np.int64))
    b = clifford_idx.shape[0]
    if noise is not None and not noise.is_pauli:
        raise ValueError(f"noise model {noise.name} is not a Pauli mixture")
    ops = compile_ops(circuit, noise.rules if noise is not None else ())
    inv = gates.clifford_inverse_index()
    c_index, c_sign = gates.clifford_lookup()
    x = np.array(x, dtype=np.uint8).reshape(b, circuit.n_qubits)
    z = np.array(z, dtype=np.uint8).reshape(b, circuit.n_qubits)
    sign = np.zeros(b, dtype=np.uint8) if sign is None else np.array(sign, dtype=np.uint8)
    factor = np.ones(b)
    lam_cache: dict[int, np.ndarray] = {}
    for op in reversed(ops):
        q = list(op.qubits)
        if op.kind == "slot":
            c = inv[clifford_idx[:, op.slot]]
            li = x[:, q[0]] + 2 * z[:, q[0]]
            new = c_index[c, li]
            sign ^= c_sign[c, li]
            x[:, q[0]], z[:, q[0]] = new & 1, new >> 1
        elif op.kind == "gate":
            out_index, out_sign = _op_table(op.matrix, inverse=True)
            li = _local_index(x[:, q], z[:, q])
            sign ^= out_sign[li]
            nx, nz = _split_index(out_index[li], len(q))
            x[:, q], z[:, q] = nx, nz
        elif op.kind == "chan":
            key = id(op.channel)
            if key not in lam_cache:
                lam_cache[key] = op.channel.pauli_eigenvalues()
            factor *= lam_cache[key][_local_index(x[:, q], z[:, q])]
        else:
            if angle_weights is None:
                w = clifford_angle_weights()[clifford_idx[:, op.slot]]
            else:
                w = angle_weights[:, op.slot]
            rates = op.gamma * w
            if (rates > 1.0).any():
                raise ValueError("gate-dependent depolarizing rate exceeds 1; gamma too large")
            nontrivial = (x[:, q[0]] | z[:, q[0]]).astype(bool)
            factor *= np.where(nontrivial, 1.0 - 4.0 * rates / 3.0, 1.0)
    diag = ~x.any(axis=1)
    return np.where(diag, factor * (1.0 - 2.0 * sign), 0.0)


def propagate_expectations(
    circuit: Circuit,
    clifford_idx: np.ndarray,
    noise: NoiseModel | None = None,
    obs: Observable | None = None,
    angle_weights: np.ndarray | None = None,
) -> np.ndarray:
    """Exact ``com`` for a batch of Clifford configurations, shape (B,).

    ``clifford_idx`` has shape (B, n_slots). Every noise site must be a
    Pauli mixture (or gate-dependent depolarizing); with ``noise=None`` the
    result is the error-free value, exactly one of {-1, 0, +1} per Pauli
    term.
    """
    obs = obs or circuit.observable
    clifford_idx = np.atleast_2d(np.asarray(clifford_idx, dtype=np.int64))
    b, n = clifford_idx.shape[0], circuit.n_qubits
    total = np.zeros(b)
    for coeff, pauli in obs.real_terms():
        if pauli.is_identity():
            total += coeff
            continue
        x = np.broadcast_to(pauli.x.astype(np.uint8), (b, n))
        z = np.broadcast_to(pauli.z.astype(np.uint8), (b, n))
        total += coeff * propagate_paulis(circuit, clifford_idx, x, z, None, noise, angle_weights)
    return total


# ---- ten-Clifford expansion -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ChannelDecomposition:
    alphas: np.ndarray
    basis: tuple[int, ...]  # Clifford table indices
    residual: float

    def ptm(self) -> np.ndarray:
        return sum(a * ch.unitary_ptm(gates.clifford_table()[k].matrix) for a, k in zip(self.alphas, self.basis))


@lru_cache(maxsize=None)
def clifford_basis() -> tuple[int, ...]:
    """First ten table Cliffords whose PTMs are linearly independent, greedily."""
    chosen: list[int] = []
    vecs: list[np.ndarray] = []
    for g in gates.clifford_table():
        v = ch.unitary_ptm(g.matrix).reshape(-1)
        if np.linalg.matrix_rank(np.array(vecs + [v]), tol=1e-9) > len(vecs):
            chosen.append(g.index)
            vecs.append(v)
        if len(chosen) == 10:
            break
    assert len(chosen) == 10
    return tuple(chosen)


@lru_cache(maxsize=None)
def _basis_matrix() -> np.ndarray:
    table = gates.clifford_table()
    return np.stack([ch.unitary_ptm(table[k].matrix).reshape(-1) for k in clifford_basis()], axis=1)


def decompose_channel_1q(u: np.ndarray) -> ChannelDecomposition:
    """Real coefficients with ``PTM([u]) = sum_k alpha_k PTM([B_k])``."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or not gates.is_unitary(u, 1e-12):
        raise ValueError("decompose_channel_1q needs a 2x2 unitary")
    a = _basis_matrix()
    target = ch.unitary_ptm(u).reshape(-1)
    alphas, *_ = np.linalg.lstsq(a, target, rcond=None)
    residual = float(np.abs(a @ alphas - target).max())
    assert residual < 1e-9, residual
    return ChannelDecomposition(alphas, clifford_basis(), residual)


def hybrid_error_free_expectation(circuit: Circuit, assignment: GateAssignment, obs: Observable | None = None) -> float:
    """Error-free ``com`` for a circuit with at most one non-Clifford slot."""
    obs = obs or circuit.observable
    GateAssignment(assignment).check(circuit)
    non_clifford = [i for i in circuit.slot_ids if not gates.is_clifford(assignment[i])]
    if len(non_clifford) > 1:
        raise ValueError(f"{len(non_clifford)} non-Clifford slots; at most one is supported")
    base = {i: assignment[i] for i in circuit.slot_ids if i not in non_clifford}
    if not non_clifford:
        return observable_expectation(simulate_tableau(circuit, base), obs)
    sid = non_clifford[0]
    dec = decompose_channel_1q(assignment[sid])
    table = gates.clifford_table()
    total = 0.0
    for alpha, k in zip(dec.alphas, dec.basis):
        tab = simulate_tableau(circuit, {**base, sid: table[k].matrix})
        total += alpha * observable_expectation(tab, obs)
    return float(total)
