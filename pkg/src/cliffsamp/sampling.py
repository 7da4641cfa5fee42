"""Gate-configuration sampling and loss estimators."""

from __future__ import annotations

import hashlib
import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Iterator, Sequence

import numpy as np

from . import dense, gates, hybrid, stabilizer
from .circuit import Circuit
from .noise import NoiseModel
from .rng import BLOCK, blocks, check_seed, stream

DENSE_MAX_QUBITS = 10
STATEVECTOR_MAX_QUBITS = 16
ENUMERATION_LIMIT = 10**6


class InfeasibleError(ValueError):
    """The requested evaluation path cannot be simulated at this size."""


# ---- gate samplers -------------------------------------------------------------


def sample_haar_1q(rng: np.random.Generator, shape: tuple[int, ...] = ()) -> np.ndarray:
    """Haar-random 2x2 unitaries: QR of a complex Ginibre matrix with the R-diagonal phases removed."""
    z = (rng.standard_normal(shape + (2, 2)) + 1j * rng.standard_normal(shape + (2, 2))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (d / np.abs(d))[..., None, :]


def sample_clifford_1q(rng: np.random.Generator) -> gates.CliffordGate1Q:
    return gates.clifford_table()[int(rng.integers(24))]


class Mode(str, Enum):
    UNITARY = "unitary"
    CLIFFORD = "clifford"
    HYBRID = "hybrid"


@dataclass(frozen=True)
class SamplingMode:
    """UNITARY, CLIFFORD, or HYBRID with the Haar slot given by its id."""

    kind: Mode
    slot: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Mode(self.kind))
        if (self.kind is Mode.HYBRID) != (self.slot is not None):
            raise ValueError("exactly the hybrid mode carries a slot id")

    @classmethod
    def parse(cls, text: str) -> "SamplingMode":
        """``"unitary"``, ``"clifford"`` or ``"hybrid:<slot id>"``."""
        head, _, tail = str(text).partition(":")
        if head == "hybrid":
            try:
                return cls(Mode.HYBRID, int(tail))
            except ValueError:
                raise ValueError(f"bad hybrid mode {text!r}; expected hybrid:<slot id>") from None
        if tail or head not in ("unitary", "clifford"):
            raise ValueError(f"unknown sampling mode {text!r}")
        return cls(Mode(head))

    def __str__(self) -> str:
        return f"hybrid:{self.slot}" if self.kind is Mode.HYBRID else self.kind.value

    def check(self, circuit: Circuit) -> "SamplingMode":
        if self.kind is Mode.HYBRID and self.slot not in circuit.slot_ids:
            raise ValueError(f"hybrid slot {self.slot} is not a slot of the circuit")
        return self


UNITARY = SamplingMode(Mode.UNITARY)
CLIFFORD = SamplingMode(Mode.CLIFFORD)


def _as_mode(mode) -> SamplingMode:
    return mode if isinstance(mode, SamplingMode) else SamplingMode.parse(mode)


# ---- records ------------------------------------------------------------------------


@dataclass(frozen=True)
class SampleRecord:
    index: int
    seed: int
    digest: str
    com: float
    com_ef: float
    error: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "index": self.index,
                "seed": self.seed,
                "digest": self.digest,
                "com": self.com,
                "com_ef": self.com_ef,
                "error": self.error,
            }
        )


@dataclass
class SampleBatch:
    """Per-configuration results in index order."""

    seed: int
    com: np.ndarray
    com_ef: np.ndarray
    digests: list[str]

    @property
    def errors(self) -> np.ndarray:
        return self.com - self.com_ef

    def __len__(self) -> int:
        return len(self.com)

    def records(self) -> Iterator[SampleRecord]:
        for i, (c, e, d) in enumerate(zip(self.com.tolist(), self.com_ef.tolist(), self.digests)):
            yield SampleRecord(i, self.seed, d, c, e, c - e)


@dataclass
class LossEstimate:
    value: float
    standard_error: float
    n_samples: int
    mode: str
    batch: SampleBatch | None = None
    extras: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ValueError("loss estimate is not finite")
        if not self.standard_error >= 0:
            raise ValueError("standard error must be nonnegative")

    def summary(self) -> dict:
        return {
            "mode": self.mode,
            "n_samples": self.n_samples,
            "loss": self.value,
            "stderr": self.standard_error,
            **self.extras,
        }


def _digest(arr: np.ndarray) -> str:
    return hashlib.blake2b(np.ascontiguousarray(arr).tobytes(), digest_size=8).hexdigest()


# ---- configuration draws -------------------------------------------------------------


@dataclass
class _Draw:
    clifford: np.ndarray | None  # (m, n_slots) table indices
    unitaries: np.ndarray | None  # (m, n_slots, 2, 2) or, for hybrid, (m, 2, 2)

    def slot_unitaries(self) -> np.ndarray:
        if self.clifford is None:
            return self.unitaries
        u = gates.clifford_matrices()[self.clifford]
        if self.unitaries is not None:
            u = u.copy()
            u[:, self._slot] = self.unitaries
        return u

    _slot: int = -1


def _draw_block(circuit: Circuit, mode: SamplingMode, seed: int, purpose: str, block: int, m: int) -> _Draw:
    """Configurations of one block. Always draws a full block and slices, so prefixes are stable."""
    rng = stream(seed, f"{purpose}:{mode}", block)
    k = circuit.n_slots
    if mode.kind is Mode.UNITARY:
        return _Draw(None, sample_haar_1q(rng, (BLOCK, k))[:m])
    idx = rng.integers(0, 24, size=(BLOCK, k))[:m]
    if mode.kind is Mode.CLIFFORD:
        return _Draw(idx, None)
    u = sample_haar_1q(rng, (BLOCK,))[:m]
    d = _Draw(idx, u)
    d._slot = circuit.slot_ids.index(mode.slot)
    return d


def _digests(draw: _Draw) -> list[str]:
    if draw.unitaries is None:
        return [_digest(row.astype(np.uint8)) for row in draw.clifford]
    if draw.clifford is None:
        return [_digest(row) for row in draw.unitaries]
    return [_digest(np.concatenate([c.astype(complex), u.reshape(-1)])) for c, u in zip(draw.clifford, draw.unitaries)]


# ---- evaluation backends ---------------------------------------------------------------


def _chunks(m: int, size: int):
    for s in range(0, m, size):
        yield slice(s, min(s + size, m))


def _dense_states(circuit: Circuit, noise: NoiseModel, u: np.ndarray):
    """Yield (slice, rho) chunks within the memory budget."""
    if circuit.n_qubits > DENSE_MAX_QUBITS:
        raise InfeasibleError(
            f"dense simulation limited to {DENSE_MAX_QUBITS} qubits; use Clifford sampling with Pauli noise"
        )
    for sl in _chunks(len(u), dense.batch_size(circuit.n_qubits)):
        yield sl, dense.evolve_density(circuit, noise, u[sl])


def _error_free_dense(circuit: Circuit, u: np.ndarray) -> np.ndarray:
    out = np.zeros(len(u))
    for sl in _chunks(len(u), dense.batch_size(circuit.n_qubits, density=False)):
        psi = dense.evolve_state(circuit, u[sl])
        out[sl] = dense.expectation_batch(psi, circuit.observable, False).real
    return out


def _shot_mean(probs: np.ndarray, fvals: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    probs = np.clip(probs, 0.0, None)
    probs = probs / probs.sum(axis=1, keepdims=True)
    counts = rng.multinomial(shots, probs)
    return counts @ fvals / shots


def _outcome_values(circuit: Circuit) -> np.ndarray:
    n = circuit.n_qubits
    bits = (np.arange(2**n)[:, None] >> np.arange(n - 1, -1, -1)) & 1
    return circuit.observable.f_values(bits)


def _evaluate(
    circuit: Circuit,
    noise: NoiseModel,
    mode: SamplingMode,
    draw: _Draw,
    shots: int | None,
    shot_rng: np.random.Generator | None,
) -> tuple[np.ndarray, np.ndarray]:
    """``(com, com_ef)`` for one block of configurations."""
    obs = circuit.observable
    m = len(draw.clifford) if draw.clifford is not None else len(draw.unitaries)
    if shots is not None and not obs.is_diagonal():
        raise ValueError("shot sampling needs a diagonal (I/Z) observable")
    if noise.is_zero and shots is None and mode.kind is not Mode.CLIFFORD:
        # noisy and error-free states coincide; evaluate once so the error is exactly 0
        ef = _error_free(circuit, mode, draw, draw.slot_unitaries())
        return ef, ef

    if mode.kind is Mode.CLIFFORD:
        com_ef = stabilizer.propagate_expectations(circuit, draw.clifford)
        if noise.is_pauli:
            if shots is None:
                return stabilizer.propagate_expectations(circuit, draw.clifford, noise), com_ef
            com = np.array(
                [
                    obs.f_values(stabilizer.run_pauli_trajectories(circuit, row, noise, shots, shot_rng)).mean()
                    for row in draw.clifford
                ]
            )
            return com, com_ef
    elif mode.kind is Mode.HYBRID and noise.is_pauli and shots is None:
        return hybrid.hybrid_errors(circuit, noise, draw.clifford, draw._slot, draw.unitaries)

    u = draw.slot_unitaries()
    com = np.zeros(m)
    fvals = _outcome_values(circuit) if shots is not None else None
    for sl, rho in _dense_states(circuit, noise, u):
        if shots is None:
            com[sl] = dense.expectation_batch(rho, obs, True).real
        else:
            probs = np.real(np.diagonal(rho, axis1=1, axis2=2))
            com[sl] = _shot_mean(probs, fvals, shots, shot_rng)
    if mode.kind is Mode.CLIFFORD:
        return com, com_ef
    return com, _error_free(circuit, mode, draw, u)


def _error_free(circuit: Circuit, mode: SamplingMode, draw: _Draw, u: np.ndarray) -> np.ndarray:
    if mode.kind is Mode.CLIFFORD:
        return stabilizer.propagate_expectations(circuit, draw.clifford)
    if circuit.n_qubits <= STATEVECTOR_MAX_QUBITS:
        return _error_free_dense(circuit, u)
    if mode.kind is Mode.HYBRID:
        return hybrid.hybrid_errors(circuit, None, draw.clifford, draw._slot, draw.unitaries)[1]
    raise InfeasibleError(f"error-free unitary sampling limited to {STATEVECTOR_MAX_QUBITS} qubits")


def _run_blocks(fn: Callable[[int, int, int], Any], n: int, threads: int) -> list:
    jobs = blocks(n)
    if threads <= 1 or len(jobs) <= 1:
        return [fn(*j) for j in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda j: fn(*j), jobs))


def sample_configs(
    circuit: Circuit,
    noise: NoiseModel,
    mode,
    n_configs: int,
    seed: int,
    shots: int | None = None,
    threads: int = 1,
    purpose: str = "configs",
) -> SampleBatch:
    """Draw ``n_configs`` configurations and evaluate ``com`` and ``com_ef`` for each."""
    mode = _as_mode(mode).check(circuit)
    seed = check_seed(seed)
    if n_configs < 1:
        raise ValueError("n_configs must be positive")
    if shots is not None and shots < 1:
        raise ValueError("shots must be positive or None")

    def work(block, start, stop):
        draw = _draw_block(circuit, mode, seed, purpose, block, stop - start)
        shot_rng = stream(seed, f"{purpose}:{mode}:shots", block) if shots is not None else None
        com, ef = _evaluate(circuit, noise, mode, draw, shots, shot_rng)
        return com, ef, _digests(draw)

    parts = _run_blocks(work, n_configs, threads)
    return SampleBatch(
        seed,
        np.concatenate([p[0] for p in parts]).astype(float),
        np.concatenate([p[1] for p in parts]).astype(float),
        [d for p in parts for d in p[2]],
    )


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    n = len(values)
    se = float(np.std(values, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return float(np.mean(values)), se


# ---- quadratic loss ------------------------------------------------------------------


def estimate_loss_mean_value(
    circuit: Circuit,
    noise: NoiseModel,
    mode,
    n_configs: int,
    seed: int,
    runs_per_config: int | None = None,
    threads: int = 1,
    keep_records: bool = True,
) -> LossEstimate:
    """Mean of ``Error^2`` over sampled configurations, SE from the spread of ``Error^2``.

    ``runs_per_config=None`` uses exact expectations; an integer draws that
    many measurement shots for the noisy side.
    """
    mode = _as_mode(mode)
    batch = sample_configs(circuit, noise, mode, n_configs, seed, runs_per_config, threads)
    value, se = _mean_se(batch.errors**2)
    return LossEstimate(value, se, len(batch), str(mode), batch if keep_records else None)


def enumerate_clifford_loss(circuit: Circuit, noise: NoiseModel) -> float:
    """Exact Clifford-sampling loss by summing over all 24^k assignments."""
    k = circuit.n_slots
    if 24**k > ENUMERATION_LIMIT:
        raise ValueError(f"{k} slots give 24^{k} assignments; enumeration limited to {ENUMERATION_LIMIT}")
    total = 0.0
    all_idx = np.array(list(itertools.product(range(24), repeat=k)), dtype=np.int64).reshape(-1, k)
    for sl in _chunks(len(all_idx), 4096):
        draw = _Draw(all_idx[sl], None)
        com, ef = _evaluate(circuit, noise, CLIFFORD, draw, None, None)
        total += float(np.sum((com - ef) ** 2))
    return total / len(all_idx)


def estimate_loss_single_run(
    circuit: Circuit,
    noise: NoiseModel,
    n_s: int,
    seed: int,
    threads: int = 1,
    marginal: bool = True,
    n_boot: int = 500,
) -> LossEstimate:
    """Clifford-sampling loss from single shots: ``L1 - 2 L2 + L3``.

    L1 uses ``n_s`` configurations with two independent noisy shots, L2 uses
    ``2 n_s`` with one noisy and one error-free shot, L3 uses ``n_s`` with
    two error-free shots. With ``marginal=True`` and an observable with a
    single non-identity Pauli term, shots are drawn from the exact two-point
    distribution of ``f``; otherwise full bitstrings are sampled (dense
    outcome distribution or Pauli trajectories for the noisy side, tableau
    measurement for the error-free side).
    """
    obs = circuit.observable
    if not obs.is_diagonal():
        raise ValueError("single-shot estimators need a diagonal (I/Z) observable")
    seed = check_seed(seed)
    terms = obs.real_terms()
    const = sum(c for c, p in terms if p.is_identity())
    pauli_terms = [(c, p) for c, p in terms if not p.is_identity()]
    two_point = marginal and len(pauli_terms) <= 1

    def shots_two_point(expect, rng, count):
        if not pauli_terms:
            return np.full((len(expect), count), const)
        c, _ = pauli_terms[0]
        p_plus = np.clip((1 + (expect - const) / c) / 2, 0, 1)
        s = np.where(rng.random((len(expect), count)) < p_plus[:, None], 1.0, -1.0)
        return const + c * s

    fvals = _outcome_values(circuit) if circuit.n_qubits <= DENSE_MAX_QUBITS else None

    def noisy_shots(idx, rng, count, com):
        if two_point:
            return shots_two_point(com, rng, count)
        if noise.is_pauli:
            return np.stack(
                [obs.f_values(stabilizer.run_pauli_trajectories(circuit, row, noise, count, rng)) for row in idx]
            )
        u = gates.clifford_matrices()[idx]
        out = []
        for _, rho in _dense_states(circuit, noise, u):
            probs = np.clip(np.real(np.diagonal(rho, axis1=1, axis2=2)), 0, None)
            for p in probs:
                out.append(fvals[rng.choice(len(p), size=count, p=p / p.sum())])
        return np.array(out)

    def ef_shots(idx, rng, count, com_ef):
        if two_point:
            return shots_two_point(com_ef, rng, count)
        out = []
        for row in idx:
            t = stabilizer.simulate_tableau(circuit, row)
            bits = np.array([stabilizer.measure_sample(t, rng)[0] for _ in range(count)])
            out.append(obs.f_values(bits))
        return np.array(out)

    def products(term: int, n_configs: int) -> np.ndarray:
        purpose = f"single-run:L{term}"

        def work(block, start, stop):
            draw = _draw_block(circuit, CLIFFORD, seed, purpose, block, stop - start)
            rng = stream(seed, f"{purpose}:shots", block)
            com, com_ef = (None, None)
            if two_point:
                com, com_ef = _evaluate(circuit, noise, CLIFFORD, draw, None, None)
            if term == 1:
                f = noisy_shots(draw.clifford, rng, 2, com)
                return f[:, 0] * f[:, 1]
            if term == 2:
                return noisy_shots(draw.clifford, rng, 1, com)[:, 0] * ef_shots(draw.clifford, rng, 1, com_ef)[:, 0]
            f = ef_shots(draw.clifford, rng, 2, com_ef)
            return f[:, 0] * f[:, 1]

        return np.concatenate(_run_blocks(work, n_configs, threads))

    p1, p2, p3 = products(1, n_s), products(2, 2 * n_s), products(3, n_s)
    l1, l2, l3 = p1.mean(), p2.mean(), p3.mean()
    value = float(l1 - 2 * l2 + l3)
    boot_rng = stream(seed, "single-run:bootstrap")
    boots = np.empty(n_boot)
    for b in range(n_boot):
        boots[b] = (
            p1[boot_rng.integers(0, len(p1), len(p1))].mean()
            - 2 * p2[boot_rng.integers(0, len(p2), len(p2))].mean()
            + p3[boot_rng.integers(0, len(p3), len(p3))].mean()
        )
    bound = 4 * obs.norm_max() ** 4 / n_s
    extras = {
        "estimator": "single_run",
        "L1": float(l1),
        "L2": float(l2),
        "L3": float(l3),
        "variance_bound": bound,
        "shot_sampling": "two_point" if two_point else "bitstring",
    }
    return LossEstimate(value, float(np.std(boots, ddof=1)), n_s, "clifford", None, extras)


# ---- fidelity loss ---------------------------------------------------------------------


def _group_fidelities(circuit, noise, idx, g_draws, rng) -> tuple[np.ndarray, np.ndarray]:
    """Per configuration: mean and SE of ``Tr[g rho]`` over sampled stabilizer elements."""
    n = circuit.n_qubits
    means = np.zeros(len(idx))
    ses = np.zeros(len(idx))
    rhos = None
    if not noise.is_pauli:
        u = gates.clifford_matrices()[idx]
        rhos = np.concatenate([rho for _, rho in _dense_states(circuit, noise, u)])
    for i, row in enumerate(idx):
        t = stabilizer.simulate_tableau(circuit, row)
        x, z, sign = stabilizer.sample_group_elements(t, rng, g_draws)
        if rhos is None:
            reps = np.broadcast_to(row, (g_draws, len(row)))
            vals = stabilizer.propagate_paulis(circuit, reps, x, z, sign, noise)
        else:
            vals = dense.pauli_bits_expectations(rhos[i], x, z) * (1.0 - 2.0 * sign)
        means[i] = vals.mean()
        ses[i] = vals.std(ddof=1) / np.sqrt(g_draws) if g_draws > 1 else 0.0
    return means, ses


def fidelities(
    circuit: Circuit,
    noise: NoiseModel,
    mode,
    n_configs: int,
    seed: int,
    g_draws: int | None = None,
    threads: int = 1,
) -> np.ndarray:
    """Per-configuration fidelity of the noisy state with the error-free one."""
    mode = _as_mode(mode).check(circuit)
    seed = check_seed(seed)
    if g_draws is not None and mode.kind is not Mode.CLIFFORD:
        raise ValueError("stabilizer-group sampling needs Clifford configurations")

    def work(block, start, stop):
        draw = _draw_block(circuit, mode, seed, "fidelity", block, stop - start)
        if g_draws is not None:
            return _group_fidelities(circuit, noise, draw.clifford, g_draws, stream(seed, "fidelity:g", block))[0]
        u = draw.slot_unitaries()
        if circuit.n_qubits > DENSE_MAX_QUBITS:
            raise InfeasibleError("dense fidelity limited to small circuits; use g_draws with Clifford mode")
        psi = dense.evolve_state(circuit, u)
        out = np.zeros(len(u))
        for sl, rho in _dense_states(circuit, noise, u):
            out[sl] = dense.fidelity_batch(rho, psi[sl])
        return out

    return np.concatenate(_run_blocks(work, n_configs, threads))


def estimate_fidelity_loss(
    circuit: Circuit,
    noise: NoiseModel,
    mode,
    n_configs: int,
    seed: int,
    g_draws: int | None = None,
    threads: int = 1,
) -> LossEstimate:
    """Mean of ``1 - fidelity``; exact dense fidelities, or group-sampled ones with ``g_draws``."""
    f = fidelities(circuit, noise, mode, n_configs, seed, g_draws, threads)
    value, se = _mean_se(1.0 - f)
    extras = {"estimator": "fidelity", "g_draws": g_draws}
    return LossEstimate(value, se, n_configs, str(_as_mode(mode)), None, extras)


# ---- combined hybrid estimator ----------------------------------------------------------


def estimate_loss_hybrid_combined(
    circuit: Circuit,
    noise: NoiseModel,
    n_configs_per_set: int,
    seed: int,
    n_clifford: int | None = None,
    method: str = "conditional",
    slots: Sequence[int] | None = None,
    threads: int = 1,
) -> LossEstimate:
    """``N_R L_hybrid - (N_R - 1) L_C`` with ``L_hybrid`` the mean over the hybrid sets.

    Rewritten as ``L_C + sum_i (L_Hi - L_C)``. ``method="sampled"`` estimates
    every ``L_Hi`` by plain Monte Carlo. ``method="conditional"`` (Pauli-type
    noise only) averages the odd slot analytically for each sampled rest of
    the circuit, once over Haar and once over the Cliffords, and estimates
    ``L_Hi - L_C`` from the paired difference; the expectation is the same
    but the variance is far smaller. Sets use independent streams and SEs
    add in quadrature.
    """
    seed = check_seed(seed)
    slot_ids = list(circuit.slot_ids if slots is None else slots)
    n_r = circuit.n_slots
    n_clifford = n_clifford or n_configs_per_set
    l_c = estimate_loss_mean_value(circuit, noise, CLIFFORD, n_clifford, seed, threads=threads, keep_records=False)
    per_set = []
    if method == "sampled":
        for sid in slot_ids:
            est = estimate_loss_mean_value(
                circuit, noise, SamplingMode(Mode.HYBRID, sid), n_configs_per_set, seed, threads=threads, keep_records=False
            )
            per_set.append({"slot": sid, "loss": est.value, "stderr": est.standard_error})
        sum_h = sum(s["loss"] for s in per_set)
        var_h = sum(s["stderr"] ** 2 for s in per_set)
        value = sum_h - (len(slot_ids) - 1) * l_c.value
        se = float(np.sqrt(var_h + (len(slot_ids) - 1) ** 2 * l_c.standard_error**2))
    elif method == "conditional":
        if not noise.is_pauli:
            raise ValueError("the conditional method needs Pauli-type noise; use method='sampled'")
        for sid in slot_ids:
            pos = circuit.slot_ids.index(sid)
            purpose = f"hybrid-set:{sid}"

            def work(block, start, stop, pos=pos, purpose=purpose):
                draw = _draw_block(circuit, CLIFFORD, seed, purpose, block, stop - start)
                return hybrid.conditional_losses(circuit, noise, draw.clifford, pos)

            parts = _run_blocks(work, n_configs_per_set, threads)
            q_h = np.concatenate([p[0] for p in parts])
            q_c = np.concatenate([p[1] for p in parts])
            lh, lh_se = _mean_se(q_h)
            d, d_se = _mean_se(q_h - q_c)
            per_set.append({"slot": sid, "loss": lh, "stderr": lh_se, "shift": d, "shift_stderr": d_se})
        value = l_c.value + sum(s["shift"] for s in per_set)
        se = float(np.sqrt(l_c.standard_error**2 + sum(s["shift_stderr"] ** 2 for s in per_set)))
    else:
        raise ValueError(f"unknown combination method {method!r}")
    extras = {
        "estimator": "hybrid_combined",
        "method": method,
        "n_slots": n_r,
        "clifford": {"loss": l_c.value, "stderr": l_c.standard_error, "n_samples": n_clifford},
        "hybrid_mean": float(np.mean([s["loss"] for s in per_set])),
        "sets": per_set,
    }
    return LossEstimate(float(value), se, n_configs_per_set, "combined", None, extras)


# ---- distribution summaries ----------------------------------------------------------------


def _double_factorial(k: int) -> int:
    return int(np.prod(np.arange(k, 0, -2))) if k > 0 else 1


def gaussian_moment(order: int, variance: float) -> float:
    """Raw moment of N(0, variance)."""
    return 0.0 if order % 2 else _double_factorial(order - 1) * variance ** (order // 2)


def moments(errors: np.ndarray, max_order: int = 14, n_boot: int = 1000, seed: int = 0) -> list[dict]:
    """Raw moments ``E[Error^n]`` with bootstrap SEs and the Gaussian reference ``N(0, mu_2)``."""
    e = np.asarray(errors, dtype=float)
    if not len(e):
        raise ValueError("moments need at least one record")
    if not 1 <= max_order <= 14:
        raise ValueError("max_order must lie in [1, 14]")
    orders = np.arange(1, max_order + 1)
    powers = e[:, None] ** orders
    mu = powers.mean(axis=0)
    second = float(np.mean(e**2))
    rng = stream(seed, "moments")
    boot_mu = np.empty((n_boot, max_order))
    boot_l = np.empty(n_boot)
    for b in range(n_boot):
        idx = rng.integers(0, len(e), len(e))
        boot_mu[b] = powers[idx].mean(axis=0)
        boot_l[b] = np.mean(e[idx] ** 2)
    out = []
    for j, n in enumerate(orders):
        ref = gaussian_moment(int(n), second)
        row = {
            "order": int(n),
            "value": float(mu[j]),
            "stderr": float(np.std(boot_mu[:, j], ddof=1)),
            "gaussian": ref,
            "ratio": None,
            "ratio_stderr": None,
        }
        if n % 2 == 0 and second > 0:
            refs = np.array([gaussian_moment(int(n), l) for l in boot_l])
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = boot_mu[:, j] / refs
            row["ratio"] = float(mu[j] / ref)
            row["ratio_stderr"] = float(np.nanstd(ratios, ddof=1))
        out.append(row)
    return out


def histogram(errors: np.ndarray, bins: int | Sequence[float] = 51, value_range=None) -> dict:
    """Counts of ``Error`` values; the default symmetric odd binning centres a bin on 0."""
    e = np.asarray(errors, dtype=float)
    if not len(e):
        return {"edges": [], "counts": []}
    if value_range is None and np.isscalar(bins):
        half = float(np.max(np.abs(e))) or 1.0
        value_range = (-half * (1 + 1e-9), half * (1 + 1e-9))
    counts, edges = np.histogram(e, bins=bins, range=value_range)
    return {"edges": edges.tolist(), "counts": counts.tolist()}
