import numpy as np
import pytest

from cliffsamp import oracles


@pytest.mark.parametrize("name", sorted(oracles.SUITES))
def test_suite_passes(name):
    report = oracles.run_suite(name)
    assert report["suite"] == name
    assert report["passed"], report
    assert report["checks"] > 0 and report["failures"] == 0
    assert report["max_deviation"] <= report["tolerance"]


def test_suites_deterministic():
    assert oracles.tensor_form(5, seed=4) == oracles.tensor_form(5, seed=4)


def test_unknown_suite():
    with pytest.raises(KeyError):
        oracles.run_suite("nope")


def test_report_counts_failures():
    r = oracles._report("x", [0.0, 2.0, 0.5], 1.0)
    assert r["failures"] == 1 and not r["passed"] and r["max_deviation"] == 2.0


def test_random_clifford_circuit_has_no_slots():
    c = oracles.random_clifford_circuit(5, 8, np.random.default_rng(0))
    assert c.n_slots == 0 and c.n_qubits == 5
