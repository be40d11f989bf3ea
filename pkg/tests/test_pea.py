import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gsprep.pea import (
    dirichlet,
    gamma_amplitude,
    gamma_closed_form,
    inverse_qft,
    pea_branches,
    pea_config,
    pea_estimate_energy,
    pea_flagged_state,
    pea_prepare,
    pea_prepare_bits,
    pea_state,
)
from gsprep.spectra import SpectralOracle, build_hamiltonian, make_trial_state


@given(st.floats(0, 1, exclude_max=True), st.integers(1, 8), st.data())
@settings(max_examples=100, deadline=None)
def test_gamma_closed_form(lam, k, data):
    x = data.draw(st.integers(0, 2**k - 1))
    assert abs(gamma_amplitude(lam, x, k) - gamma_closed_form(lam, x, k)) <= 1e-10


def test_gamma_exact_bin():
    assert gamma_amplitude(5 / 16, 5, 4) == pytest.approx(1)
    assert abs(gamma_amplitude(5 / 16, 6, 4)) < 1e-12


def test_dirichlet_normalized_over_bins():
    for lam in (0.1234, 0.5, 0.999):
        g = dirichlet(lam - np.arange(32) / 32, 5)
        assert np.sum(np.abs(g) ** 2) == pytest.approx(1)


def test_inverse_qft_unitary():
    F = inverse_qft(3)
    assert np.allclose(F @ F.conj().T, np.eye(8))


def test_statevector_matches_branches():
    H = build_hamiltonian({"model": "random", "dim": 4, "gap": 0.2, "seed": 0})
    tr = make_trial_state(H, 0.6, 0)
    s = pea_state(SpectralOracle(H), tr, 4)
    assert np.allclose(s.tensor, pea_branches(H, tr, 4), atol=1e-12)
    branch, norm = pea_flagged_state(H, tr, 4, 3)
    assert np.allclose(branch.vector, pea_branches(H, tr, 4)[3], atol=1e-12)


def test_config():
    k, n, D = pea_config(0.5, 0.01)
    assert n == math.ceil(math.log2(100)) + 1
    assert D == 16 and k == n + 4


def test_estimate_within_xi():
    for seed in range(10):
        H = build_hamiltonian({"model": "random", "dim": 16, "gap": 0.1, "seed": seed})
        tr = make_trial_state(H, 0.5, seed)
        est, res = pea_estimate_energy(H, tr, 0.5, 0.01, np.random.default_rng(seed))
        assert est is not None and abs(est - H.lambda0) <= 0.01


def test_prepare_known_fidelity():
    H = build_hamiltonian({"model": "random", "dim": 16, "gap": 0.1, "seed": 1})
    tr = make_trial_state(H, 0.5, 1)
    k = pea_prepare_bits(0.5, 0.01, 0.1)
    assert 2**k >= 1 / (math.pi * 0.5 * 0.01 * 0.1)
    z = round(H.lambda0 * 2**k)
    res = pea_prepare(H, tr, z, k, 0.01, np.random.default_rng(0), chi=0.5, delta_lb=0.1)
    assert res.success and res.fidelity >= 0.9


def test_adversarial_model_offsets():
    H = build_hamiltonian({"model": "adversarial", "dim": 8, "k": 6, "c": 0.3, "seed": 0})
    frac = (H.eigenvalues * 2**6) % 1
    assert np.allclose(frac, 0.3)
