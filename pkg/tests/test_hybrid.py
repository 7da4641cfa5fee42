import numpy as np
import pytest

from cliffsamp import channels as ch
from cliffsamp import dense, gates, hybrid
from cliffsamp import noise as nl
from cliffsamp.circuit import standard_circuit
from cliffsamp.sampling import sample_haar_1q


def test_batched_ptm(rng):
    u = sample_haar_1q(rng, (6,))
    assert np.allclose(hybrid.batched_ptm(u), np.stack([ch.unitary_ptm(v) for v in u]))


def test_noise_gamma():
    assert hybrid.noise_gamma(None) == 0.0
    assert hybrid.noise_gamma(nl.depolarizing(0.1)) == 0.0
    assert hybrid.noise_gamma(nl.gate_dependent_depolarizing(0.01, 0.003)) == 0.003


@pytest.mark.parametrize("model", [nl.depolarizing(0.03), nl.gate_dependent_depolarizing(0.02, 0.05)], ids=["dep", "gd"])
def test_hybrid_errors_match_dense(model, rng):
    c = standard_circuit(2)
    pos = 3
    idx = rng.integers(0, 24, (16, c.n_slots))
    hu = sample_haar_1q(rng, (16,))
    u = gates.clifford_matrices()[idx]
    u[:, pos] = hu
    com, ef = hybrid.hybrid_errors(c, model, idx, pos, hu)
    rho = dense.evolve_density(c, model, u)
    assert np.allclose(com, dense.expectation_batch(rho, c.observable, True).real, atol=1e-10)
    assert np.allclose(ef, dense.expectation_batch(dense.evolve_state(c, u), c.observable, False).real, atol=1e-10)


def test_moments_agree_without_gate_dependence():
    # Cliffords form a unitary 2-design, so second moments of w coincide
    assert np.abs(hybrid.haar_slot_moment(0.0) - hybrid.clifford_slot_moment(0.0)).max() < 1e-12


def test_moments_differ_with_gate_dependence():
    diff = np.abs(hybrid.haar_slot_moment(0.05) - hybrid.clifford_slot_moment(0.05)).max()
    assert diff > 1e-4


def test_quadrature_converged():
    assert np.abs(hybrid.haar_slot_moment(0.05, 48) - hybrid.haar_slot_moment(0.05, 64)).max() < 1e-12


def test_haar_moment_against_monte_carlo(rng):
    gamma = 0.05
    u = sample_haar_1q(rng, (200000,))
    w = hybrid.slot_weights(u, gamma)
    mc = np.einsum("ni,nj->ij", w, w) / len(w)
    se = np.sqrt(np.einsum("ni,nj->ij", w**2, w**2) / len(w) - mc**2) / np.sqrt(len(w))
    z = np.abs(mc - hybrid.haar_slot_moment(gamma)) / np.maximum(se, 1e-12)
    assert z.max() < 5


def test_conditional_loss_against_direct_average(rng):
    c = standard_circuit(2)
    model = nl.gate_dependent_depolarizing(0.05, 0.05)
    pos = 4
    idx = rng.integers(0, 24, (1, c.n_slots))
    q_h, q_c = hybrid.conditional_losses(c, model, idx, pos)
    table_u = gates.clifford_matrices()
    com, ef = hybrid.hybrid_errors(c, model, np.repeat(idx, 24, 0), pos, table_u)
    assert q_c[0] == pytest.approx(np.mean((com - ef) ** 2), rel=1e-10, abs=1e-15)
    hu = sample_haar_1q(rng, (20000,))
    com, ef = hybrid.hybrid_errors(c, model, np.repeat(idx, len(hu), 0), pos, hu)
    e2 = (com - ef) ** 2
    assert abs(q_h[0] - e2.mean()) <= 4 * e2.std(ddof=1) / np.sqrt(len(e2)) + 1e-15
