import math

import numpy as np
import pytest

from gsprep.labelsearch import (
    EnergyGrid,
    LabeledPrep,
    build_controlled_V,
    combined_prepare,
    estimate_ground_energy,
    label_search_params,
    min_label_find,
    pow2_ceil,
    prefix_mass_bound,
    prepare_ground_unknown_energy,
)
from gsprep.lcu import apply_G, choose_parameters, fourier_coefficients
from gsprep.registers import QState, RegisterLayout, flagged_branch
from gsprep.spectra import SpectralOracle, build_hamiltonian, make_trial_state


def test_params_formulas():
    p = label_search_params(4, 0.3, 0.05)
    assert p.K == math.ceil(math.log2(4 / 0.05))
    assert p.delta_prime == pytest.approx(0.05 / (2 * 4 * math.log2(80)))


def test_pow2_ceil():
    assert [pow2_ceil(x) for x in (0.3, 1, 1.5, 4, 4.1)] == [1, 1, 2, 4, 8]


def test_grid_values():
    g = EnergyGrid.over(0.25, 0.75, 4)
    assert np.allclose(g.values, [0.25, 0.375, 0.5, 0.625])
    assert g.n == 2
    with pytest.raises(ValueError):
        EnergyGrid(3)


def test_prefix_amplitudes():
    prep = LabeledPrep.from_norms([0.1, 0.2, 0.3, 0.4], rest_dim=3, seed=1)
    assert prep.prefix_amplitude(0, 1) == pytest.approx(math.sqrt(0.01 + 0.04))
    assert prep.prefix_amplitude(3, 2) == pytest.approx(0.4)


def test_concentrated_norms_return_that_label(rng):
    norms = np.zeros(16)
    norms[9] = 0.8
    prep = LabeledPrep.from_norms(norms, rest_dim=2, seed=0)
    for _ in range(20):
        out = min_label_find(prep, label_search_params(4, 0.5, 0.05), rng)
        assert out.success and out.j == 9
        assert np.linalg.norm(out.state) == pytest.approx(1)


def test_returns_label_in_window(rng):
    p = label_search_params(4, 0.4, 0.04)
    norms = np.zeros(16)
    norms[:3] = math.sqrt(prefix_mass_bound(p) / 3)  # labels below J~ = 3
    norms[3:6] = 0.1
    norms[6] = 0.45  # J = 6
    norms[7:] = 0.2
    norms /= max(1.0, np.linalg.norm(norms))
    prep = LabeledPrep.from_norms(norms, seed=2)
    js = [min_label_find(prep, p, rng).j for _ in range(100)]
    assert all(j is None or 3 <= j <= 6 for j in js)
    assert sum(j is not None for j in js) >= 90


def test_controlled_V_single_label_reduces_to_G():
    H = build_hamiltonian({"model": "random", "dim": 4, "gap": 0.2, "seed": 1})
    tr = make_trial_state(H, 0.5, 1)
    E0 = 0.1
    p = choose_parameters(0.2, 0.5, 0.1, E=E0)
    c = fourier_coefficients(p.m, p.m0)
    V = build_controlled_V(H, tr, p, EnergyGrid(1, E0, 1.0), c, engine="statevector")
    lay = RegisterLayout([("lcu", p.b), ("sys", 2)])
    s = apply_G(QState.product(lay, {"sys": tr.amplitudes}), SpectralOracle(H), p, c)
    g, _ = flagged_branch(s, [("lcu", 0)])
    assert np.allclose(V.branches[0], g.vector, atol=1e-12)


def test_controlled_V_engines_agree():
    H = build_hamiltonian({"model": "random", "dim": 4, "gap": 0.2, "seed": 1})
    tr = make_trial_state(H, 0.5, 1)
    p = choose_parameters(0.2, 0.5, 0.1)
    grid = EnergyGrid.over(0, 1, 8)
    a = build_controlled_V(H, tr, p, grid, engine="statevector")
    b = build_controlled_V(H, tr, p, grid, engine="branch")
    assert np.allclose(a.branches, b.branches, atol=1e-12)
    assert a.cost == b.cost


def test_unknown_energy_pipeline():
    for seed in range(10):
        H = build_hamiltonian({"model": "random", "dim": 16, "gap": 0.1, "seed": seed})
        tr = make_trial_state(H, 0.5, seed)
        res = prepare_ground_unknown_energy(H, tr, 0.5, 0.01, 0.1, np.random.default_rng(seed))
        assert res.success
        assert res.fidelity >= 0.9
        assert res.energy_error <= 0.1 / 4


def test_combined_kappa_zero_matches_full_grid():
    H = build_hamiltonian({"model": "random", "dim": 16, "gap": 0.1, "seed": 0})
    tr = make_trial_state(H, 0.5, 0)
    res0 = combined_prepare(H, tr, 0.5, 0.01, 0.1, 0.0, np.random.default_rng(0))
    resg = prepare_ground_unknown_energy(H, tr, 0.5, 0.01, 0.1, np.random.default_rng(0))
    assert res0.info["L"] == resg.info["L"]
    assert res0.info["interval"] == (0.0, 1.0)


def test_combined_stage2_grid_shrinks():
    H = build_hamiltonian({"model": "random", "dim": 16, "gap": 0.05, "seed": 3})
    tr = make_trial_state(H, 0.6, 3)
    res = combined_prepare(H, tr, 0.6, 0.01, 0.05, 1.0, np.random.default_rng(3))
    assert res.success and res.fidelity > 0.9
    a, b = res.info["interval"]
    assert a <= H.lambda0 <= b
    st2 = res.info["stage2_ledger"]
    assert 0 < st2.hamsim_time < res.ledger.hamsim_time


def test_estimate_energy_accuracy():
    errs = []
    for seed in range(10):
        H = build_hamiltonian({"model": "random", "dim": 16, "gap": 0.1, "seed": seed})
        tr = make_trial_state(H, 0.6, seed)
        E, res = estimate_ground_energy(H, tr, 0.6, 0.01, np.random.default_rng(seed))
        assert E is not None
        errs.append(abs(E - H.lambda0))
    assert sum(e <= 0.01 for e in errs) >= 9
