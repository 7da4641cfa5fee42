import sys

import numpy as np
import pytest
from hypothesis import settings

from cliffsamp import gates

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

# Canonical order of the 24 single-qubit Cliffords: breadth-first over H/S words.
CLIFFORD_WORDS = (
    "", "H", "S", "HS", "SH", "SS", "HSH", "HSS", "SHS", "SSH", "SSS", "HSHS",
    "HSSH", "HSSS", "SHSS", "SSHS", "HSHSS", "HSSHS", "SHSSH", "SHSSS", "SSHSS",
    "HSHSSH", "HSHSSS", "HSSHSS",
)
# First ten table entries with linearly independent PTMs.
TEN_CLIFFORD_BASIS = (0, 1, 2, 3, 4, 5, 6, 7, 8, 14)
# Slot positions in the four-qubit experimental frame: five full slot layers.
EXPERIMENTAL_SLOT_COUNT = 20


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def clifford_words():
    return CLIFFORD_WORDS


@pytest.fixture(scope="session")
def ten_basis():
    return TEN_CLIFFORD_BASIS


@pytest.fixture(scope="session")
def experimental_slot_count():
    return EXPERIMENTAL_SLOT_COUNT


def word_matrix(word: str) -> np.ndarray:
    u = np.eye(2, dtype=complex)
    for c in word:
        u = {"H": gates.H, "S": gates.S}[c] @ u
    return u


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, atol: float = 1e-10) -> bool:
    k = np.argmax(np.abs(b.ravel()))
    if abs(a.ravel()[k]) < atol:
        return False
    phase = b.ravel()[k] / a.ravel()[k]
    return abs(abs(phase) - 1) < atol and np.allclose(a * phase, b, atol=atol)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
