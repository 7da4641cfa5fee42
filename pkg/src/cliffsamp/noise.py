"""Error models: channel placement rules attached to circuit locations."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from . import channels as ch
from .channels import Channel
from .circuit import Circuit

TWO_PI = 2.0 * np.pi


class Placement(str, Enum):
    AFTER_EACH_2Q = "after_each_2q"
    AFTER_EACH_2Q_PER_QUBIT = "after_each_2q_per_qubit"
    AFTER_EACH_1Q_GATE = "after_each_1q_gate"


Location = tuple[int, tuple[int, ...]]  # (layer index, gate qubits)


@dataclass(frozen=True, eq=False)
class NoiseRule:
    """One placement rule.

    Exactly one of ``channel`` (same channel everywhere), ``per_location``
    (keyed by the two-qubit gate's location) or ``gate_dependent_gamma``
    (single-qubit depolarizing whose rate follows the slot unitary) is set.
    ``replaces_gate`` makes a two-qubit per-location channel stand in for the
    ideal gate instead of following it.
    """

    placement: Placement
    channel: Channel | None = None
    per_location: Mapping[Location, Channel] | None = None
    gate_dependent_gamma: float | None = None
    replaces_gate: bool = False

    def __post_init__(self):
        set_fields = sum(
            x is not None for x in (self.channel, self.per_location, self.gate_dependent_gamma)
        )
        if set_fields != 1:
            raise ValueError("a noise rule needs exactly one channel source")
        if self.gate_dependent_gamma is not None:
            if self.placement is not Placement.AFTER_EACH_1Q_GATE:
                raise ValueError("gate-dependent rules attach after single-qubit gates")
            if self.gate_dependent_gamma < 0:
                raise ValueError("gamma must be nonnegative")
        if self.replaces_gate and (
            self.placement is not Placement.AFTER_EACH_2Q or self.per_location is None
        ):
            raise ValueError("only per-location two-qubit channels can replace gates")
        arity = 2 if self.placement is Placement.AFTER_EACH_2Q else 1
        for c in self.channels():
            if c.arity != arity:
                raise ValueError(f"{self.placement.value} needs {arity}-qubit channels, got {c}")

    def channels(self) -> list[Channel]:
        if self.channel is not None:
            return [self.channel]
        if self.per_location is not None:
            return list(self.per_location.values())
        return []

    def channel_at(self, layer_index: int, qubits: tuple[int, ...]) -> Channel | None:
        if self.channel is not None:
            return self.channel
        if self.per_location is not None:
            return self.per_location.get((layer_index, tuple(qubits)))
        return None

    @property
    def is_pauli(self) -> bool:
        if self.replaces_gate:
            return False
        return self.gate_dependent_gamma is not None or all(c.is_pauli for c in self.channels())


@dataclass(frozen=True, eq=False)
class NoiseModel:
    """Weighted deterministic branches, each a list of rules.

    Most models have one branch of weight 1. Classically correlated noise
    (a sign shared by every site in a run) is expressed as several branches
    whose results are averaged with their weights.
    """

    name: str
    branches: tuple[tuple[float, tuple[NoiseRule, ...]], ...]
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        w = np.array([b[0] for b in self.branches])
        if (w < 0).any() or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("branch weights must be nonnegative and sum to 1")

    @classmethod
    def single(cls, name: str, rules: Sequence[NoiseRule], params: Mapping | None = None):
        return cls(name, ((1.0, tuple(rules)),), dict(params or {}))

    @property
    def rules(self) -> tuple[NoiseRule, ...]:
        if len(self.branches) != 1:
            raise ValueError(f"{self.name} has {len(self.branches)} branches")
        return self.branches[0][1]

    @property
    def is_zero(self) -> bool:
        for _, rules in self.branches:
            for r in rules:
                if r.replaces_gate or r.gate_dependent_gamma not in (None, 0.0):
                    return False
                if any(not c.is_identity for c in r.channels()):
                    return False
        return True

    @property
    def is_pauli(self) -> bool:
        """True when every site applies a Pauli mixture (single branch, no gate replacement)."""
        return len(self.branches) == 1 and all(r.is_pauli for r in self.rules)

    @property
    def is_gate_dependent(self) -> bool:
        return any(r.gate_dependent_gamma for _, rules in self.branches for r in rules)

    def describe(self) -> dict:
        return {"name": self.name, **dict(self.params)}


def zero_noise() -> NoiseModel:
    return NoiseModel.single("zero", [])


def depolarizing(eps: float) -> NoiseModel:
    rule = NoiseRule(Placement.AFTER_EACH_2Q, channel=ch.depolarizing2(eps))
    return NoiseModel.single("depolarizing", [rule], {"epsilon": eps})


def dephasing(eps: float) -> NoiseModel:
    rule = NoiseRule(Placement.AFTER_EACH_2Q, channel=ch.dephasing2(eps))
    return NoiseModel.single("dephasing", [rule], {"epsilon": eps})


def amplitude_damping(eps: float) -> NoiseModel:
    rule = NoiseRule(Placement.AFTER_EACH_2Q_PER_QUBIT, channel=ch.amplitude_damping1(eps))
    return NoiseModel.single("amplitude_damping", [rule], {"epsilon": eps})


def correlated_coherent(eps: float) -> NoiseModel:
    """``[exp(+-i pi eps Z)]`` on each qubit after each two-qubit gate, one sign per run."""
    if eps < 0:
        raise ValueError("coherent error rate must be nonnegative")
    branches = tuple(
        (0.5, (NoiseRule(Placement.AFTER_EACH_2Q_PER_QUBIT, channel=ch.coherent_z(eps, s)),))
        for s in (+1, -1)
    )
    return NoiseModel("correlated_coherent", branches, {"epsilon": eps})


def euler_zxz(u: np.ndarray) -> np.ndarray:
    """Angles ``(theta1, theta2, theta3)`` with ``u ~ Rz(theta3) Rx(theta2) Rz(theta1)``.

    ``R_P(t) = exp(-i t P / 2)``. Canonical branch: theta2 in [0, pi],
    theta1 and theta3 in [0, 2 pi); in the degenerate cases theta2 in
    {0, pi} the free angle theta1 is 0. Accepts stacks of shape (..., 2, 2).
    """
    u = np.asarray(u, dtype=complex)
    det = u[..., 0, 0] * u[..., 1, 1] - u[..., 0, 1] * u[..., 1, 0]
    v = u / np.sqrt(det)[..., None, None]
    a, b = v[..., 0, 0], v[..., 0, 1]
    theta2 = 2.0 * np.arccos(np.clip(np.abs(a), 0.0, 1.0))
    total = -2.0 * np.angle(a)
    diff = -2.0 * (np.angle(b) + np.pi / 2)
    small_a = np.abs(a) < 1e-12
    small_b = np.abs(b) < 1e-12
    theta3 = np.where(small_a, diff, np.where(small_b, total, (total + diff) / 2))
    theta1 = np.where(small_a | small_b, 0.0, (total - diff) / 2)
    out = np.stack([theta1, theta2, theta3], axis=-1)
    out = np.mod(out, TWO_PI)
    out[np.abs(out - TWO_PI) < 1e-9] = 0.0
    out[np.abs(out) < 1e-12] = 0.0
    return out


def gate_dependent_rates(u: np.ndarray, gamma: float) -> np.ndarray:
    """Depolarizing rate ``gamma * (theta1 + theta2 + theta3) / 2 pi`` per unitary."""
    rates = gamma * euler_zxz(u).sum(axis=-1) / TWO_PI
    if np.any(rates > 1.0):
        raise ValueError("gate-dependent depolarizing rate exceeds 1; gamma too large")
    return rates


def gate_dependent_depolarizing(eps: float, gamma: float) -> NoiseModel:
    rules = [
        NoiseRule(Placement.AFTER_EACH_2Q, channel=ch.depolarizing2(eps)),
        NoiseRule(Placement.AFTER_EACH_1Q_GATE, gate_dependent_gamma=float(gamma)),
    ]
    return NoiseModel.single("gate_dependent_depolarizing", rules, {"epsilon": eps, "gamma": gamma})


def composite_channel(eps_x: float, eps_z: float, eps_d: float) -> Channel:
    """``[exp(-i pi eps_x X)][exp(-i pi eps_z Z)]`` followed by amplitude damping."""
    u = ch.rotation("X", eps_x) @ ch.rotation("Z", eps_z)
    coherent = Channel.from_unitary(u, name="composite_rotation")
    return coherent.then(ch.amplitude_damping1(eps_d))


def composite(
    circuit: Circuit,
    eps_d: float = 0.02,
    eps_range: tuple[float, float] = (0.0, 0.04),
    seed: int = 0,
) -> NoiseModel:
    """Per-gate coherent rotations plus amplitude damping.

    ``eps_x`` and ``eps_z`` are drawn once per two-qubit gate location from a
    generator seeded with ``seed``, in circuit order; both qubits of a gate
    share them.
    """
    lo, hi = eps_range
    if not 0 <= lo <= hi:
        raise ValueError("composite: invalid eps range")
    rng = np.random.default_rng(seed)
    per_loc: dict[Location, Channel] = {}
    drawn = []
    for t, g in circuit.two_qubit_gates():
        ex, ez = rng.uniform(lo, hi, size=2) if hi > lo else (lo, lo)
        per_loc[(t, g.qubits)] = composite_channel(float(ex), float(ez), eps_d)
        drawn.append({"layer_index": t, "qubits": list(g.qubits), "eps_x": float(ex), "eps_z": float(ez)})
    rule = NoiseRule(Placement.AFTER_EACH_2Q_PER_QUBIT, per_location=per_loc)
    params = {"eps_d": eps_d, "eps_range": [lo, hi], "seed": seed, "locations": drawn}
    return NoiseModel.single("composite", [rule], params)


# ---- channel files -----------------------------------------------------------


def load_channels(source: str | Path | Mapping) -> NoiseModel:
    """Per-location two-qubit PTMs from a JSON file or an already-parsed dict.

    Schema: ``{"placement": "replace_gate" | "after_gate", "records":
    [{"layer_index": int, "qubits": [a, b], "ptm": 16x16 nested or 256 flat,
    row-major}]}``. Maps need not be trace preserving or completely
    positive; deviations are recorded in ``params["deviations"]``.
    """
    if isinstance(source, Mapping):
        data = source
    else:
        data = json.loads(Path(source).read_text())
    if not isinstance(data, Mapping) or "records" not in data:
        raise ValueError("channel file needs a 'records' list")
    unknown = set(data) - {"placement", "records"}
    if unknown:
        raise ValueError(f"channel file: unknown fields {sorted(unknown)}")
    placement = data.get("placement", "replace_gate")
    if placement not in ("replace_gate", "after_gate"):
        raise ValueError(f"channel file: unknown placement {placement!r}")
    per_loc: dict[Location, Channel] = {}
    deviations = []
    for i, rec in enumerate(data["records"]):
        extra = set(rec) - {"layer_index", "qubits", "ptm"}
        if extra:
            raise ValueError(f"record {i}: unknown fields {sorted(extra)}")
        try:
            t = int(rec["layer_index"])
            qubits = tuple(int(q) for q in rec["qubits"])
            ptm = np.asarray(rec["ptm"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"record {i}: malformed ({exc})") from None
        if len(qubits) != 2:
            raise ValueError(f"record {i}: expected a qubit pair")
        if ptm.size != 256:
            raise ValueError(f"record {i}: PTM must have 256 entries, got {ptm.size}")
        chan = Channel.from_ptm(ptm.reshape(16, 16), name=f"loaded{(t, qubits)}")
        per_loc[(t, qubits)] = chan
        deviations.append(
            {
                "layer_index": t,
                "qubits": list(qubits),
                "tp_deviation": chan.tp_deviation,
                "cp_deviation": chan.cp_deviation,
            }
        )
    rule = NoiseRule(
        Placement.AFTER_EACH_2Q, per_location=per_loc, replaces_gate=placement == "replace_gate"
    )
    params = {"placement": placement, "deviations": deviations}
    return NoiseModel.single("loaded", [rule], params)


def export_channels(circuit: Circuit, model: NoiseModel) -> dict:
    """PTMs of ``gate followed by its 2q noise`` at every two-qubit location.

    The result loads back with ``load_channels`` as a gate-replacing model.
    Only single-branch models whose two-qubit noise is AFTER_EACH_2Q are
    exportable.
    """
    rules = model.rules
    records = []
    for t, g in circuit.two_qubit_gates():
        s = ch.unitary_superop(g.matrix)
        for r in rules:
            if r.placement is Placement.AFTER_EACH_2Q:
                c = r.channel_at(t, g.qubits)
                if c is not None:
                    s = c.superop @ s
            elif r.placement is Placement.AFTER_EACH_2Q_PER_QUBIT:
                raise ValueError("per-qubit placements are not exportable as 2q PTMs")
        records.append(
            {"layer_index": t, "qubits": list(g.qubits), "ptm": ch.superop_to_ptm(s).tolist()}
        )
    return {"placement": "replace_gate", "records": records}


# ---- config-level construction -------------------------------------------------

MODEL_NAMES = (
    "zero",
    "depolarizing",
    "dephasing",
    "amplitude_damping",
    "correlated_coherent",
    "gate_dependent_depolarizing",
    "composite",
    "loaded",
)


def build_noise(spec: Mapping[str, Any], circuit: Circuit, base_dir: Path | None = None) -> NoiseModel:
    """Noise model from a config dict such as ``{"model": "depolarizing", "epsilon": 0.002}``."""
    spec = dict(spec)
    name = spec.pop("model", None)
    allowed = {
        "zero": set(),
        "depolarizing": {"epsilon"},
        "dephasing": {"epsilon"},
        "amplitude_damping": {"epsilon"},
        "correlated_coherent": {"epsilon"},
        "gate_dependent_depolarizing": {"epsilon", "gamma"},
        "composite": {"eps_d", "eps_range", "seed"},
        "loaded": {"file"},
    }
    if name not in allowed:
        raise ValueError(f"unknown noise model {name!r}; known: {', '.join(MODEL_NAMES)}")
    extra = set(spec) - allowed[name]
    if extra:
        raise ValueError(f"noise model {name}: unknown parameters {sorted(extra)}")
    if name == "zero":
        return zero_noise()
    if name == "composite":
        return composite(
            circuit,
            eps_d=float(spec.get("eps_d", 0.02)),
            eps_range=tuple(spec.get("eps_range", (0.0, 0.04))),
            seed=int(spec.get("seed", 0)),
        )
    if name == "loaded":
        path = Path(spec["file"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return load_channels(path)
    if "epsilon" not in spec:
        raise ValueError(f"noise model {name}: missing epsilon")
    eps = float(spec["epsilon"])
    if name == "gate_dependent_depolarizing":
        return gate_dependent_depolarizing(eps, float(spec.get("gamma", eps / 10)))
    return {
        "depolarizing": depolarizing,
        "dephasing": dephasing,
        "amplitude_damping": amplitude_damping,
        "correlated_coherent": correlated_coherent,
    }[name](eps)
