"""Cross-checks between independent simulation paths.

Each suite compares two ways of computing the same numbers and returns a
plain dict report. Suites are deterministic: every random choice comes from
a fixed seed.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from . import channels as ch
from . import dense, gates, hybrid, noise as nl, stabilizer
from .circuit import Circuit, FrameGate, Layer, Observable, Slot, standard_circuit
from .pauli import PauliString
from .rng import stream
from .sampling import CLIFFORD, UNITARY, enumerate_clifford_loss, estimate_loss_mean_value, sample_haar_1q


def two_slot_circuit() -> Circuit:
    """Two qubits, one slot each, then a CZ; observable X(x)X."""
    layers = (Layer((Slot(0, 0, 0), Slot(1, 1, 0))), Layer((FrameGate("CZ", (0, 1)),)))
    return Circuit(2, layers, Observable.pauli("XX"))


def random_clifford_circuit(n: int, depth: int, rng: np.random.Generator) -> Circuit:
    """Slot-free circuit of random fixed Cliffords and random two-qubit Cliffords."""
    layers = []
    for _ in range(depth):
        order = rng.permutation(n)
        elems = []
        q = 0
        while q < n:
            if q + 1 < n and rng.random() < 0.5:
                kind = ("CZ", "CNOT", "U_PHASE")[rng.integers(3)]
                elems.append(FrameGate(kind, (order[q], order[q + 1])))
                q += 2
            else:
                elems.append(FrameGate("FIXED_1Q_CLIFFORD", (order[q],), int(rng.integers(24))))
                q += 1
        layers.append(Layer(tuple(elems)))
    return Circuit(n, tuple(layers), Observable.z(n, 0))


def random_pauli(n: int, rng: np.random.Generator) -> PauliString:
    return PauliString.from_label("".join(rng.choice(list("IXYZ"), n)))


def _report(suite: str, deviations: list[float], tolerance: float, **extra) -> dict:
    dev = np.asarray(deviations, dtype=float)
    worst = float(dev.max()) if len(dev) else 0.0
    failures = int((dev > tolerance).sum())
    return {
        "suite": suite,
        "passed": failures == 0,
        "checks": int(len(dev)),
        "failures": failures,
        "max_deviation": worst,
        "tolerance": tolerance,
        **extra,
    }


def stab_vs_dense(n_circuits: int = 300, max_qubits: int = 6, max_depth: int = 20, seed: int = 0) -> dict:
    """Tableau Pauli expectations against statevectors, then Heisenberg-propagated noisy values against density matrices.

    Tableau values are integers in {-1, 0, 1}; the deviation is taken
    against the statevector value itself, so any mismatch shows up as ~1.
    """
    rng = stream(seed, "oracle:stab-vs-dense")
    devs = []
    for _ in range(n_circuits):
        n = int(rng.integers(1, max_qubits + 1))
        c = random_clifford_circuit(n, int(rng.integers(1, max_depth + 1)), rng)
        tab = stabilizer.simulate_tableau(c, {})
        psi = dense.evolve_state(c, np.zeros((1, 0, 2, 2)))
        for _ in range(4):
            p = random_pauli(n, rng)
            exact = stabilizer.pauli_expectation(tab, p)
            devs.append(abs(exact - dense.pauli_expectations_psi(psi, p)[0]))
    circuit = standard_circuit(2)
    models = [nl.depolarizing(0.05), nl.dephasing(0.05), nl.gate_dependent_depolarizing(0.02, 0.05)]
    for model in models:
        idx = rng.integers(0, 24, (64, circuit.n_slots))
        fast = stabilizer.propagate_expectations(circuit, idx, model)
        rho = dense.evolve_density(circuit, model, gates.clifford_matrices()[idx])
        slow = dense.expectation_batch(rho, circuit.observable, density=True)
        devs.extend(np.abs(fast - slow).tolist())
    return _report("stab-vs-dense", devs, 1e-9)


def tensor_form(n_assignments: int = 20, seed: int = 0) -> dict:
    """``com`` from the frame tensor contracted with ``R (x) R*`` against direct evolution."""
    rng = stream(seed, "oracle:tensor-form")
    circuit = two_slot_circuit()
    devs = []
    for model in (nl.amplitude_damping(0.05), nl.correlated_coherent(0.1), nl.dephasing(0.05)):
        for _ in range(n_assignments):
            u = sample_haar_1q(rng, (circuit.n_slots,))
            rho = dense.evolve_density(circuit, model, u[None])
            direct = dense.expectation_batch(rho, circuit.observable, density=True)[0]
            contracted = dense.tensor_form_check(circuit, dict(zip(circuit.slot_ids, u)), model)
            devs.append(abs(direct - contracted))
    return _report("tensor-form", devs, 1e-10)


def hybrid_vs_dense(n_configs: int = 64, seed: int = 0) -> dict:
    """Clifford-expansion values with one Haar slot against dense simulation."""
    rng = stream(seed, "oracle:hybrid-vs-dense")
    circuit = standard_circuit(2)
    devs = []
    for model in (nl.depolarizing(0.03), nl.gate_dependent_depolarizing(0.02, 0.05)):
        for pos in (0, circuit.n_slots // 2, circuit.n_slots - 1):
            idx = rng.integers(0, 24, (n_configs, circuit.n_slots))
            hu = sample_haar_1q(rng, (n_configs,))
            u = gates.clifford_matrices()[idx]
            u[:, pos] = hu
            com, ef = hybrid.hybrid_errors(circuit, model, idx, pos, hu)
            rho = dense.evolve_density(circuit, model, u)
            com_d = dense.expectation_batch(rho, circuit.observable, density=True)
            ef_d = dense.expectation_batch(dense.evolve_state(circuit, u), circuit.observable, density=False)
            devs.extend(np.abs(com - com_d).tolist())
            devs.extend(np.abs(ef - ef_d).tolist())
    for _ in range(16):
        idx = rng.integers(0, 24, circuit.n_slots)
        u = gates.clifford_matrices()[idx]
        u[int(rng.integers(circuit.n_slots))] = sample_haar_1q(rng)
        a = stabilizer.hybrid_error_free_expectation(circuit, dict(zip(circuit.slot_ids, u)))
        b = dense.expectation_batch(dense.evolve_state(circuit, u[None]), circuit.observable, density=False)[0]
        devs.append(abs(a - b))
    return _report("hybrid-vs-dense", devs, 1e-10)


def enumeration(n_configs: int = 20000, seed: int = 0, z_max: float = 3.0) -> dict:
    """Exact 24^2 enumeration of the Clifford loss against Monte Carlo in both modes."""
    circuit = two_slot_circuit()
    model = nl.depolarizing(0.05)
    exact = enumerate_clifford_loss(circuit, model)
    z = []
    rows = []
    for mode in (CLIFFORD, UNITARY):
        est = estimate_loss_mean_value(circuit, model, mode, n_configs, seed, keep_records=False)
        score = abs(est.value - exact) / est.standard_error
        z.append(score)
        rows.append({"mode": str(mode), "loss": est.value, "stderr": est.standard_error, "z": score})
    return _report("enumeration", z, z_max, exact=exact, estimates=rows)


def ptm_roundtrip(n_unitaries: int = 200, seed: int = 0) -> dict:
    """PTM/superoperator conversions and ten-Clifford reconstructions of random unitaries."""
    rng = stream(seed, "oracle:ptm-roundtrip")
    devs = []
    library = [
        ch.depolarizing1(0.1),
        ch.depolarizing2(0.1),
        ch.dephasing2(0.1),
        ch.amplitude_damping1(0.1),
        ch.bitflip1(0.1),
        ch.coherent_z(0.1, 1),
        nl.composite_channel(0.01, 0.02, 0.03),
    ]
    for chan in library:
        ptm = chan.ptm()
        devs.append(float(np.abs(ch.superop_to_ptm(ch.ptm_to_superop(ptm)) - ptm).max()))
        devs.append(float(np.abs(ch.Channel.from_ptm(ptm).ptm() - ptm).max()))
    for u in sample_haar_1q(rng, (n_unitaries,)):
        dec = stabilizer.decompose_channel_1q(u)
        devs.append(float(np.abs(dec.ptm() - ch.unitary_ptm(u)).max()))
    return _report("ptm-roundtrip", devs, 1e-10)


SUITES: dict[str, Callable[..., dict]] = {
    "stab-vs-dense": stab_vs_dense,
    "tensor-form": tensor_form,
    "hybrid-vs-dense": hybrid_vs_dense,
    "enumeration": enumeration,
    "ptm-roundtrip": ptm_roundtrip,
}


def run_suite(name: str, seed: int = 0) -> dict:
    if name not in SUITES:
        raise KeyError(name)
    return SUITES[name](seed=seed)
