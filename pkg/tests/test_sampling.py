import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cliffsamp import channels as ch
from cliffsamp import gates
from cliffsamp import noise as nl
from cliffsamp import sampling as sm
from cliffsamp.circuit import Circuit, Layer, Observable, Slot, experimental_circuit, standard_circuit
from cliffsamp.oracles import two_slot_circuit


def one_qubit_damping(eps):
    c = Circuit(1, (Layer((Slot(0, 0, 0),)),), Observable.z(1, 0))
    rule = nl.NoiseRule(nl.Placement.AFTER_EACH_1Q_GATE, channel=ch.amplitude_damping1(eps))
    return c, nl.NoiseModel.single("damping_after_slot", [rule])


def z_test(a, b):
    return abs(a.value - b.value) / np.hypot(a.standard_error, b.standard_error)


# ---- samplers ----


@given(st.integers(0, 2**32 - 1))
def test_haar_unitary(seed):
    u = sm.sample_haar_1q(np.random.default_rng(seed), (50,))
    err = np.abs(np.einsum("nji,njk->nik", u.conj(), u) - np.eye(2)).max()
    assert err <= 1e-12


def test_haar_moments(rng):
    u = sm.sample_haar_1q(rng, (100000,))
    assert abs(np.mean(np.abs(u[:, 0, 0]) ** 2) - 0.5) < 0.01
    u00 = u[:, 0, 0]
    for part in (u00.real, u00.imag):
        assert abs(part.mean()) <= 3 * part.std() / np.sqrt(len(part))


def test_clifford_uniform(rng):
    counts = np.bincount([sm.sample_clifford_1q(rng).index for _ in range(100000)], minlength=24)
    assert np.abs(counts / 100000 - 1 / 24).max() < 0.005


def test_clifford_sample_in_table_and_seeded():
    g = sm.sample_clifford_1q(np.random.default_rng(1))
    assert g is gates.clifford_table()[g.index]
    a = [sm.sample_clifford_1q(np.random.default_rng(9)).index for _ in range(3)]
    b = [sm.sample_clifford_1q(np.random.default_rng(9)).index for _ in range(3)]
    assert a == b


# ---- modes and records ----


def test_mode_parse():
    assert str(sm.SamplingMode.parse("hybrid:7")) == "hybrid:7"
    assert sm.SamplingMode.parse("unitary") == sm.UNITARY
    for bad in ("hybrid", "hybrid:x", "clifford:3", "haar"):
        with pytest.raises(ValueError):
            sm.SamplingMode.parse(bad)
    with pytest.raises(ValueError):
        sm.SamplingMode.parse("hybrid:99").check(standard_circuit(2))


def test_records_store_error_exactly():
    b = sm.sample_configs(standard_circuit(2), nl.depolarizing(0.05), "unitary", 20, 3)
    for r in b.records():
        assert r.error == r.com - r.com_ef
        assert json.loads(r.to_json())["digest"] == r.digest


def test_loss_estimate_invariants():
    with pytest.raises(ValueError):
        sm.LossEstimate(float("nan"), 0.0, 1, "clifford")
    with pytest.raises(ValueError):
        sm.LossEstimate(0.0, -1.0, 1, "clifford")


def test_determinism_across_threads():
    c = standard_circuit(4)
    a = sm.sample_configs(c, nl.depolarizing(0.002), "unitary", 1100, 11, threads=1)
    b = sm.sample_configs(c, nl.depolarizing(0.002), "unitary", 1100, 11, threads=4)
    assert [r.to_json() for r in a.records()] == [r.to_json() for r in b.records()]


def test_prefix_stable():
    c = standard_circuit(2)
    a = sm.sample_configs(c, nl.depolarizing(0.01), "clifford", 700, 5)
    b = sm.sample_configs(c, nl.depolarizing(0.01), "clifford", 300, 5)
    assert a.digests[:300] == b.digests


# ---- quadratic loss ----


@pytest.mark.parametrize("mode", ["unitary", "clifford", "hybrid:3"])
def test_zero_noise_zero_loss(mode):
    est = sm.estimate_loss_mean_value(standard_circuit(2), nl.zero_noise(), mode, 200, 1)
    assert est.value == 0.0 and est.standard_error == 0.0


def test_enumeration_zero_noise():
    assert sm.enumerate_clifford_loss(two_slot_circuit(), nl.zero_noise()) == 0.0


def test_enumeration_hand_sum():
    # Cliffords send Z to +Z (4), -Z (4) or an equatorial axis (16); damping gives Error = eps (1 - z)
    eps = 0.1
    c, model = one_qubit_damping(eps)
    hand = eps**2 * (4 * 0 + 4 * 4 + 16 * 1) / 24
    assert sm.enumerate_clifford_loss(c, model) == pytest.approx(hand, rel=1e-12)


def test_enumeration_against_monte_carlo():
    c, model = one_qubit_damping(0.1)
    exact = sm.enumerate_clifford_loss(c, model)
    for mode in ("clifford", "unitary"):
        est = sm.estimate_loss_mean_value(c, model, mode, 20000, 2)
        assert abs(est.value - exact) <= 3 * est.standard_error


def test_enumeration_limit():
    with pytest.raises(ValueError):
        sm.enumerate_clifford_loss(standard_circuit(2), nl.zero_noise())


def test_unitary_and_clifford_agree_small():
    c = standard_circuit(2)
    model = nl.amplitude_damping(0.05)
    u = sm.estimate_loss_mean_value(c, model, "unitary", 4000, 4)
    k = sm.estimate_loss_mean_value(c, model, "clifford", 4000, 4)
    assert z_test(u, k) <= 3


def test_odd_moments_agree_between_modes():
    c = standard_circuit(4)
    model = nl.depolarizing(0.002)
    eu = sm.sample_configs(c, model, "unitary", 10000, 21).errors
    ec = sm.sample_configs(c, model, "clifford", 10000, 21).errors
    for k in (1, 3):
        a, b = eu**k, ec**k
        se = np.hypot(a.std(ddof=1) / np.sqrt(len(a)), b.std(ddof=1) / np.sqrt(len(b)))
        assert abs(a.mean() - b.mean()) <= 3 * se


def test_shot_sampling_mean_value():
    c = standard_circuit(2)
    model = nl.depolarizing(0.05)
    exact = sm.estimate_loss_mean_value(c, model, "clifford", 500, 3)
    shots = sm.estimate_loss_mean_value(c, model, "clifford", 500, 3, runs_per_config=1000)
    # finite shots add a positive variance term of order 1/shots
    assert shots.value > exact.value
    assert shots.value - exact.value < 5e-3


def test_dense_limit():
    with pytest.raises(sm.InfeasibleError):
        sm.estimate_loss_mean_value(standard_circuit(12), nl.amplitude_damping(0.01), "clifford", 2, 1)


# ---- single-run estimator ----


def test_single_run_zero_noise_mean():
    c = standard_circuit(2)
    vals = [sm.estimate_loss_single_run(c, nl.zero_noise(), 200, s).value for s in range(40)]
    se = np.std(vals, ddof=1) / np.sqrt(len(vals))
    assert abs(np.mean(vals)) <= 3 * se
    bound = 4 / 200
    assert max(abs(v) for v in vals) <= 10 * np.sqrt(bound)


def test_single_run_agrees_with_mean_value():
    c = standard_circuit(4)
    model = nl.depolarizing(0.02)
    sr = sm.estimate_loss_single_run(c, model, 20000, 5)
    mv = sm.estimate_loss_mean_value(c, model, "clifford", 20000, 5)
    assert z_test(sr, mv) <= 3
    assert sr.extras["variance_bound"] == pytest.approx(4 / 20000)


def test_single_run_bitstring_path():
    c = experimental_circuit()
    model = nl.depolarizing(0.05)
    a = sm.estimate_loss_single_run(c, model, 5000, 6, marginal=False)
    b = sm.estimate_loss_mean_value(c, model, "clifford", 5000, 6)
    assert a.extras["shot_sampling"] == "bitstring"
    assert z_test(a, b) <= 3


def test_single_run_needs_diagonal_observable():
    c = two_slot_circuit()
    with pytest.raises(ValueError):
        sm.estimate_loss_single_run(c, nl.depolarizing(0.1), 10, 1)


# ---- fidelity loss ----


def test_fidelity_zero_noise():
    c = standard_circuit(2)
    assert abs(sm.estimate_fidelity_loss(c, nl.zero_noise(), "unitary", 100, 1).value) < 1e-9
    g = sm.estimate_fidelity_loss(c, nl.zero_noise(), "clifford", 50, 1, g_draws=50)
    assert abs(g.value) <= max(3 * g.standard_error, 1e-12)


def test_group_sampled_fidelity_per_config():
    c = standard_circuit(4)
    for model in (nl.depolarizing(0.01), nl.amplitude_damping(0.01)):
        exact = sm.fidelities(c, model, "clifford", 10, 3)
        rng = np.random.default_rng(0)
        idx = sm._draw_block(c, sm.CLIFFORD, 3, "fidelity", 0, 10).clifford
        means, ses = sm._group_fidelities(c, model, idx, 1000, rng)
        assert np.all(np.abs(means - exact) <= 3 * np.maximum(ses, 1e-12))


def test_group_sampling_requires_clifford():
    with pytest.raises(ValueError):
        sm.fidelities(standard_circuit(2), nl.depolarizing(0.1), "unitary", 5, 1, g_draws=10)


# ---- combined hybrid estimator ----


def test_combined_gate_independent():
    c = standard_circuit(2)
    model = nl.depolarizing(0.01)
    comb = sm.estimate_loss_hybrid_combined(c, model, 4000, 3)
    cl = sm.estimate_loss_mean_value(c, model, "clifford", 4000, 8)
    un = sm.estimate_loss_mean_value(c, model, "unitary", 4000, 8)
    assert z_test(comb, cl) <= 3 and z_test(comb, un) <= 3
    for s in comb.extras["sets"]:
        assert abs(s["shift"]) < 1e-12


def test_combined_single_slot_is_hybrid():
    c, model = one_qubit_damping(0.1)
    comb = sm.estimate_loss_hybrid_combined(c, model, 20000, 4, method="sampled")
    hyb = sm.estimate_loss_mean_value(c, model, "hybrid:0", 20000, 4)
    assert comb.value == pytest.approx(hyb.value, rel=1e-12)


def test_combined_methods_agree():
    c = standard_circuit(2)
    model = nl.gate_dependent_depolarizing(0.02, 0.05)
    a = sm.estimate_loss_hybrid_combined(c, model, 3000, 5, method="conditional")
    b = sm.estimate_loss_hybrid_combined(c, model, 3000, 5, method="sampled")
    assert z_test(a, b) <= 3


def test_conditional_needs_pauli_noise():
    with pytest.raises(ValueError):
        sm.estimate_loss_hybrid_combined(standard_circuit(2), nl.amplitude_damping(0.1), 10, 1)


# ---- moments and histograms ----


def test_moments_all_zero():
    rows = sm.moments(np.zeros(100), 8, n_boot=50)
    assert all(r["value"] == 0 for r in rows)


def test_gaussian_reference():
    assert sm.gaussian_moment(4, 2.0) == 12.0
    assert sm.gaussian_moment(6, 1.0) == 15.0
    assert sm.gaussian_moment(3, 1.0) == 0.0


def test_moments_of_gaussian_records():
    e = np.random.default_rng(3).normal(0, 0.01, 10000)
    rows = sm.moments(e, 4, n_boot=500)
    r4 = rows[3]
    assert abs(r4["ratio"] - 1) <= 3 * r4["ratio_stderr"]
    assert abs(rows[2]["value"]) <= 3 * rows[2]["stderr"]


def test_moments_order_limit():
    with pytest.raises(ValueError):
        sm.moments(np.ones(3), 15)
    with pytest.raises(ValueError):
        sm.moments(np.array([]), 4)


def test_histogram_empty_and_counts(rng):
    assert sm.histogram(np.array([])) == {"edges": [], "counts": []}
    e = rng.normal(size=777)
    h = sm.histogram(e, 21)
    assert sum(h["counts"]) == 777 and len(h["edges"]) == 22


def test_histogram_clifford_mass_at_zero():
    e = sm.sample_configs(standard_circuit(4), nl.depolarizing(0.002), "clifford", 2000, 1).errors
    h = sm.histogram(e, 51)
    centre = len(h["counts"]) // 2
    assert h["edges"][centre] < 0 < h["edges"][centre + 1]
    assert int(np.argmax(h["counts"])) == centre
