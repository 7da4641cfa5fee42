"""Circuits as fixed frame gates plus variable single-qubit slots."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError

from . import gates
from .pauli import PauliString

FRAME_KINDS = ("CZ", "CNOT", "U_PHASE", "FIXED_1Q_CLIFFORD")


class CircuitError(ValueError):
    """Raised for a structurally invalid circuit; ``errors`` lists every violation."""

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True, eq=False)
class FrameGate:
    kind: str
    qubits: tuple[int, ...]
    clifford: int | None = None  # table index, FIXED_1Q_CLIFFORD only

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if self.kind not in FRAME_KINDS:
            raise ValueError(f"unknown frame gate kind {self.kind!r}")
        if self.kind == "FIXED_1Q_CLIFFORD":
            if self.clifford is None or not 0 <= self.clifford < 24:
                raise ValueError("FIXED_1Q_CLIFFORD needs a Clifford table index in [0, 24)")
            if len(self.qubits) != 1:
                raise ValueError("FIXED_1Q_CLIFFORD acts on one qubit")
        elif len(self.qubits) != 2:
            raise ValueError(f"{self.kind} acts on two qubits")

    @property
    def matrix(self) -> np.ndarray:
        if self.kind == "FIXED_1Q_CLIFFORD":
            return gates.clifford_table()[self.clifford].matrix
        return gates.TWO_QUBIT_GATES[self.kind]

    def __eq__(self, other):
        if not isinstance(other, FrameGate):
            return NotImplemented
        return (self.kind, self.qubits, self.clifford) == (other.kind, other.qubits, other.clifford)

    def __hash__(self):
        return hash((self.kind, self.qubits, self.clifford))

    def __repr__(self):
        extra = f", clifford={self.clifford}" if self.clifford is not None else ""
        return f"FrameGate({self.kind!r}, {self.qubits}{extra})"


@dataclass(frozen=True)
class Slot:
    id: int
    qubit: int
    layer_index: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.qubit,)


Element = Union[FrameGate, Slot]


@dataclass(frozen=True)
class Layer:
    elements: tuple[Element, ...]

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))

    def __iter__(self) -> Iterator[Element]:
        return iter(self.elements)

    def __len__(self):
        return len(self.elements)


@dataclass(frozen=True, eq=False)
class Observable:
    terms: tuple[tuple[float, PauliString], ...]

    def __post_init__(self):
        terms = tuple((float(c), p) for c, p in self.terms)
        if not terms:
            raise ValueError("observable needs at least one term")
        n = {p.n_qubits for _, p in terms}
        if len(n) != 1:
            raise ValueError("observable terms act on different qubit counts")
        for c, p in terms:
            if not np.isfinite(c):
                raise ValueError("observable coefficients must be finite")
            if p.phase % 2:
                raise ValueError("observable Pauli terms must carry a real sign")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def pauli(cls, label: str, coeff: float = 1.0) -> "Observable":
        return cls(((coeff, PauliString.from_label(label)),))

    @classmethod
    def z(cls, n: int, qubit: int) -> "Observable":
        return cls(((1.0, PauliString.single(n, qubit, "Z")),))

    @classmethod
    def zero_projector(cls, n: int, qubit: int) -> "Observable":
        """``|0><0|`` on one qubit, i.e. ``(I + Z)/2``."""
        return cls(((0.5, PauliString.identity(n)), (0.5, PauliString.single(n, qubit, "Z"))))

    @property
    def n_qubits(self) -> int:
        return self.terms[0][1].n_qubits

    def real_terms(self) -> list[tuple[float, PauliString]]:
        """Terms with the Pauli sign folded into the coefficient."""
        out = []
        for c, p in self.terms:
            out.append((c * (1.0 if p.phase == 0 else -1.0), PauliString(p.x, p.z)))
        return out

    def norm_max(self) -> float:
        """Upper bound on ``max |f(mu)|``: the sum of absolute coefficients."""
        return float(sum(abs(c) for c, _ in self.terms))

    def is_diagonal(self) -> bool:
        return all(p.is_diagonal() for _, p in self.terms)

    def f_values(self, bits: np.ndarray) -> np.ndarray:
        """Evaluate ``f(mu)`` on outcome bit arrays of shape (..., n)."""
        if not self.is_diagonal():
            raise ValueError("f(mu) is only defined for diagonal (I/Z) observables")
        bits = np.asarray(bits, dtype=np.int64)
        out = np.zeros(bits.shape[:-1])
        for c, p in self.real_terms():
            parity = (bits @ p.z.astype(np.int64)) % 2
            out = out + c * (1 - 2 * parity)
        return out

    def matrix(self) -> np.ndarray:
        return sum(c * p.to_matrix() for c, p in self.terms)

    def __eq__(self, other):
        if not isinstance(other, Observable):
            return NotImplemented
        return len(self.terms) == len(other.terms) and all(
            c1 == c2 and p1 == p2 for (c1, p1), (c2, p2) in zip(self.terms, other.terms)
        )

    def __repr__(self):
        return "Observable(" + " + ".join(f"{c:g}*{p.label()}" for c, p in self.terms) + ")"


@dataclass(frozen=True, eq=False)
class Circuit:
    n_qubits: int
    layers: tuple[Layer, ...]
    observable: Observable
    _slots: tuple[Slot, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        layers = tuple(l if isinstance(l, Layer) else Layer(tuple(l)) for l in self.layers)
        object.__setattr__(self, "layers", layers)
        slots = [e for l in layers for e in l if isinstance(e, Slot)]
        object.__setattr__(self, "_slots", tuple(sorted(slots, key=lambda s: s.id)))

    @property
    def slots(self) -> tuple[Slot, ...]:
        """Slots sorted by id."""
        return self._slots

    @property
    def n_slots(self) -> int:
        return len(self._slots)

    @property
    def slot_ids(self) -> tuple[int, ...]:
        return tuple(s.id for s in self._slots)

    def frame_gates(self) -> list[tuple[int, FrameGate]]:
        return [(t, e) for t, l in enumerate(self.layers) for e in l if isinstance(e, FrameGate)]

    def two_qubit_gates(self) -> list[tuple[int, FrameGate]]:
        return [(t, g) for t, g in self.frame_gates() if len(g.qubits) == 2]

    def count(self, kind: str) -> int:
        return sum(1 for _, g in self.frame_gates() if g.kind == kind)

    def validate(self) -> list[str]:
        return validate(self)

    def check(self) -> "Circuit":
        errors = validate(self)
        if errors:
            raise CircuitError(errors)
        return self

    def __eq__(self, other):
        if not isinstance(other, Circuit):
            return NotImplemented
        return (
            self.n_qubits == other.n_qubits
            and self.layers == other.layers
            and self.observable == other.observable
        )


def validate(circuit: Circuit) -> list[str]:
    """Every structural violation in ``circuit``; an empty list means it is well formed."""
    errors: list[str] = []
    n = circuit.n_qubits
    if not isinstance(n, (int, np.integer)) or n < 1:
        errors.append(f"n_qubits must be a positive integer, got {n!r}")
        return errors
    seen_ids: set[int] = set()
    for t, layer in enumerate(circuit.layers):
        used: set[int] = set()
        for e in layer:
            for q in e.qubits:
                if not 0 <= q < n:
                    errors.append(f"qubit {q} out of range [0, {n}) in layer {t}")
                elif q in used:
                    errors.append(f"qubit {q} used twice in layer {t}")
                used.add(q)
            if isinstance(e, FrameGate) and len(set(e.qubits)) != len(e.qubits):
                errors.append(f"{e.kind} in layer {t} repeats a qubit")
            if isinstance(e, Slot):
                if e.id in seen_ids:
                    errors.append(f"duplicate slot id {e.id}")
                seen_ids.add(e.id)
                if e.layer_index != t:
                    errors.append(f"slot {e.id} records layer {e.layer_index} but sits in layer {t}")
    if circuit.observable.n_qubits != n:
        errors.append(
            f"observable acts on {circuit.observable.n_qubits} qubits, circuit has {n}"
        )
    return errors


class GateAssignment(dict):
    """Map slot id -> 2x2 unitary."""

    def check(self, circuit: Circuit, atol: float = 1e-12) -> "GateAssignment":
        ids = set(circuit.slot_ids)
        if set(self) != ids:
            missing = sorted(ids - set(self))
            extra = sorted(set(self) - ids)
            raise ValueError(f"assignment domain mismatch: missing {missing}, unknown {extra}")
        for k, u in self.items():
            u = np.asarray(u)
            if u.shape != (2, 2) or not gates.is_unitary(u, atol):
                raise ValueError(f"slot {k}: matrix is not a 2x2 unitary")
        return self

    def as_array(self, circuit: Circuit) -> np.ndarray:
        """Matrices stacked in slot-id order, shape (n_slots, 2, 2)."""
        self.check(circuit)
        if not circuit.n_slots:
            return np.zeros((0, 2, 2), dtype=complex)
        return np.stack([np.asarray(self[i], dtype=complex) for i in circuit.slot_ids])

    @classmethod
    def uniform(cls, circuit: Circuit, u: np.ndarray) -> "GateAssignment":
        return cls({i: np.asarray(u, dtype=complex) for i in circuit.slot_ids})

    @classmethod
    def from_cliffords(cls, circuit: Circuit, indices: Sequence[int]) -> "GateAssignment":
        table = gates.clifford_table()
        return cls({i: table[int(c)].matrix for i, c in zip(circuit.slot_ids, indices)})


def _slot_layer(t: int, qubits: Sequence[int], start: int) -> Layer:
    return Layer(tuple(Slot(start + j, q, t) for j, q in enumerate(qubits)))


def standard_circuit(n: int) -> Circuit:
    """Ring circuit with ``n`` repetitions of two CZ layers and two slot layers.

    Even CZ layers couple (0,1), (2,3), ...; odd ones couple (1,2), ...,
    (n-1, 0). The observable is Z on qubit 0. Total CZ count is ``n**2``.
    """
    if not isinstance(n, (int, np.integer)) or n < 2 or n % 2:
        raise ValueError(f"standard_circuit needs an even n >= 2, got {n!r}")
    layers: list[Layer] = []
    sid = 0

    def slots():
        nonlocal sid
        layers.append(_slot_layer(len(layers), range(n), sid))
        sid += n

    even = [(q, q + 1) for q in range(0, n, 2)]
    odd = [(q, (q + 1) % n) for q in range(1, n, 2)]
    slots()
    for _ in range(n):
        layers.append(Layer(tuple(FrameGate("CZ", p) for p in even)))
        slots()
        layers.append(Layer(tuple(FrameGate("CZ", p) for p in odd)))
        slots()
    return Circuit(n, tuple(layers), Observable.z(n, 0))


# Stand-in for the four-qubit experimental frame: four U_PHASE layers holding
# 1, 2, 2, 1 gates, with a full slot layer before each and one at the end.
EXPERIMENTAL_PAIRS = (((0, 1),), ((1, 2), (0, 3)), ((0, 1), (2, 3)), ((1, 2),))


def experimental_circuit(observable_qubit: int = 0) -> Circuit:
    layers: list[Layer] = []
    sid = 0
    for pairs in EXPERIMENTAL_PAIRS:
        layers.append(_slot_layer(len(layers), range(4), sid))
        sid += 4
        layers.append(Layer(tuple(FrameGate("U_PHASE", p) for p in pairs)))
    layers.append(_slot_layer(len(layers), range(4), sid))
    return Circuit(4, tuple(layers), Observable.zero_projector(4, observable_qubit))


# ---- JSON ------------------------------------------------------------------


class _ElementModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    kind: str
    qubits: list[int]
    slot_id: int | None = None


class _TermModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    coeff: float
    pauli: str


class CircuitModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    n_qubits: int
    layers: list[list[_ElementModel]]
    observable: list[_TermModel]


def _element_to_model(e: Element) -> dict:
    if isinstance(e, Slot):
        return {"kind": "SLOT", "qubits": [e.qubit], "slot_id": e.id}
    kind = e.kind if e.clifford is None else f"FIXED_1Q_CLIFFORD:{e.clifford}"
    return {"kind": kind, "qubits": list(e.qubits)}


def circuit_to_dict(circuit: Circuit) -> dict:
    return {
        "n_qubits": circuit.n_qubits,
        "layers": [[_element_to_model(e) for e in layer] for layer in circuit.layers],
        "observable": [{"coeff": c, "pauli": p.label()} for c, p in circuit.observable.terms],
    }


def render(circuit: Circuit) -> str:
    return json.dumps(circuit_to_dict(circuit))


def circuit_from_dict(data: Mapping) -> Circuit:
    """Build a circuit from its JSON form. Unknown fields raise; structure is validated."""
    try:
        m = CircuitModel.model_validate(data)
    except ValidationError as exc:
        raise CircuitError([f"{'.'.join(map(str, e['loc']))}: {e['msg']}" for e in exc.errors()]) from None
    layers = []
    for t, raw in enumerate(m.layers):
        elems: list[Element] = []
        for e in raw:
            if e.kind == "SLOT":
                if e.slot_id is None or len(e.qubits) != 1:
                    raise CircuitError([f"SLOT in layer {t} needs one qubit and a slot_id"])
                elems.append(Slot(e.slot_id, e.qubits[0], t))
                continue
            if e.slot_id is not None:
                raise CircuitError([f"{e.kind} in layer {t} cannot carry a slot_id"])
            kind, _, idx = e.kind.partition(":")
            try:
                elems.append(FrameGate(kind, tuple(e.qubits), int(idx) if idx else None))
            except ValueError as exc:
                raise CircuitError([f"layer {t}: {exc}"]) from None
        layers.append(Layer(tuple(elems)))
    obs = Observable(tuple((t.coeff, PauliString.from_label(t.pauli)) for t in m.observable))
    return Circuit(m.n_qubits, tuple(layers), obs).check()


def parse(text: str) -> Circuit:
    return circuit_from_dict(json.loads(text))
