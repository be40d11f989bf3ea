import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gsprep.lcu import (
    apply_G,
    binomial_weights,
    choose_parameters,
    fourier_coefficients,
    lcu_branch,
    lcu_filter,
    prepare_B,
    prepare_ground_known_energy,
)
from gsprep.registers import QState, RegisterLayout, flagged_branch
from gsprep.spectra import SpectralOracle, build_hamiltonian, make_trial_state


def cos_power(H, m):
    w, V = np.linalg.eigh(H)
    return (V * np.cos(w) ** (2 * m)) @ V.conj().T


def fourier_sum(H, coeffs):
    w, V = np.linalg.eigh(H)
    g = sum(coeffs[k] * np.exp(-2j * w * k) for k in range(-coeffs.m0, coeffs.m0 + 1))
    return (V * g) @ V.conj().T


def test_small_coefficient_tables():
    c1 = fourier_coefficients(1, 1)
    assert [c1[k] for k in (-1, 0, 1)] == [0.25, 0.5, 0.25]
    c2 = fourier_coefficients(2, 2)
    assert [c2[k] for k in range(-2, 3)] == [1 / 16, 4 / 16, 6 / 16, 4 / 16, 1 / 16]


def test_exact_and_log_space_weights_agree():
    ks = np.arange(-50, 51)
    exact = np.array([math.comb(1200, 600 + int(k)) / 4**600 for k in ks])
    assert np.allclose(binomial_weights(600, ks), exact, rtol=1e-15)
    logspace = binomial_weights(601, ks)
    ref = np.array([math.comb(1202, 601 + int(k)) / 4**601 for k in ks])
    assert np.allclose(logspace, ref, rtol=1e-10)


def test_untruncated_sum_is_exact():
    H = build_hamiltonian({"model": "random", "dim": 8, "gap": 0.1, "seed": 2}).entries
    c = fourier_coefficients(5, 5)
    assert np.linalg.norm(cos_power(H, 5) - fourier_sum(H, c), 2) < 1e-13


@given(st.integers(1, 64), st.integers(0, 1000))
@settings(max_examples=40, deadline=None)
def test_truncation_within_chernoff_tail(m, seed):
    H = build_hamiltonian({"model": "random", "dim": 4, "gap": 0.05, "seed": seed}).entries * 3.0
    m0 = max(1, m // 3)
    c = fourier_coefficients(m, m0)
    err = np.linalg.norm(cos_power(H, m) - fourier_sum(H, c), 2)
    assert err <= c.tail_bound + 1e-12


def test_clenshaw_filter_matches_sum():
    c = fourier_coefficients(40, 20)
    h = np.linspace(-1, 2, 50)
    direct = sum(c[k] * np.exp(-2j * h * k) for k in range(-20, 21)).real / c.alpha_sum
    assert np.allclose(lcu_filter(h, c), direct, atol=1e-14)


def test_parameter_formulas():
    p = choose_parameters(0.1, 0.5, 0.01)
    assert (p.M, p.m0) == (22458, 690)
    assert p.M % 2 == 0
    assert p.tau == pytest.approx(0.1 / (2 * math.log(200)))
    with pytest.raises(ValueError):
        choose_parameters(0.0, 0.5, 0.01)


def test_B_first_column():
    c = fourier_coefficients(10, 4)
    B = prepare_B(c).dense()
    assert np.allclose(B[: 9, 0], np.sqrt(c.alpha / c.alpha_sum))
    assert np.allclose(B.conj().T @ B, np.eye(B.shape[0]), atol=1e-12)


def test_statevector_and_branch_engines_agree():
    H = build_hamiltonian({"model": "random", "dim": 8, "gap": 0.2, "seed": 4})
    tr = make_trial_state(H, 0.4, 4)
    p = choose_parameters(0.2, 0.4, 0.05, E=H.lambda0)
    c = fourier_coefficients(p.m, p.m0)
    oracle = SpectralOracle(H)
    sv, state = lcu_branch(oracle, tr, p, c, "statevector")
    br, _ = lcu_branch(oracle, tr, p, c, "branch")
    assert np.allclose(sv, br, atol=1e-12)
    assert state is not None


def test_apply_G_rejects_dirty_ancilla():
    H = build_hamiltonian({"model": "random", "dim": 2, "gap": 0.2, "seed": 4})
    p = choose_parameters(0.2, 0.5, 0.1)
    c = fourier_coefficients(p.m, p.m0)
    lay = RegisterLayout([("lcu", p.b), ("sys", 1)])
    s = QState.product(lay, {"lcu": 1, "sys": np.array([1, 0], dtype=complex)})
    with pytest.raises(ValueError):
        apply_G(s, SpectralOracle(H), p, c)


def test_ground_state_trial_is_fixed_point():
    H = build_hamiltonian({"model": "random", "dim": 8, "gap": 0.1, "seed": 6})
    tr = make_trial_state(H, 1.0)
    res = prepare_ground_known_energy(H, tr, H.lambda0, 1.0, 0.01, rng=np.random.default_rng(0))
    assert res.success and res.fidelity > 1 - 1e-12
    assert res.info["branch_norm"] > 0.3


@pytest.mark.parametrize("mode", ["fps", "aa"])
def test_known_energy_fidelity(mode):
    for seed in range(10):
        H = build_hamiltonian({"model": "random", "dim": 16, "gap": 0.1, "seed": seed})
        tr = make_trial_state(H, 0.3, seed)
        res = prepare_ground_known_energy(H, tr, H.lambda0, 0.3, 1e-2, mode=mode, rng=np.random.default_rng(seed))
        assert res.success and res.fidelity >= 1 - 0.1
        assert res.ledger.hamsim_time > 0 and res.ledger.trial_calls > 0


def test_energy_guess_below_ground_still_works():
    H = build_hamiltonian({"model": "random", "dim": 16, "gap": 0.1, "seed": 3})
    tr = make_trial_state(H, 0.5, 3)
    res = prepare_ground_known_energy(H, tr, H.lambda0 - 0.01, 0.5, 1e-2, rng=np.random.default_rng(0))
    assert res.success and res.fidelity > 0.99
