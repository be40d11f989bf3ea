import numpy as np
import pytest

from gsprep.spectra import build_hamiltonian, make_trial_state


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_instance():
    H = build_hamiltonian({"model": "random", "dim": 16, "gap": 0.1, "seed": 7})
    return H, make_trial_state(H, 0.5, seed=7)


#: one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
