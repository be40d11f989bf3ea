import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gsprep.chebwalk import (
    ChebParams,
    SparseOracle,
    build_walk,
    cheb_branch,
    cheb_coefficients,
    cheb_poly,
    choose_cheb_parameters,
    prepare_ground_cheb,
    prepare_ground_cheb_unknown,
    walk_block_check,
)
from gsprep.spectra import build_hamiltonian, make_trial_state


def walk_instance(dim, seed, E=None, tau=0.01):
    H = build_hamiltonian({"model": "random", "dim": dim, "gap": 0.1, "seed": seed, "walk": True})
    E = H.lambda0 if E is None else E
    return H, SparseOracle.shifted(H, E, tau)


def test_coefficients_small_M():
    assert list(cheb_coefficients(1).alpha) == [0.5, -0.5]
    assert list(cheb_coefficients(2).alpha) == [0.375, -0.5, 0.125]


@given(st.integers(1, 700))
@settings(max_examples=30, deadline=None)
def test_full_expansion_reproduces_power(M):
    c = cheb_coefficients(M)
    x = np.linspace(-1, 1, 41)
    assert np.allclose(cheb_poly(x, c), (1 - x**2) ** M, atol=1e-12)
    nz = c.alpha[1:] != 0  # the outermost weights underflow for large M
    assert np.all(np.sign(c.alpha[1:])[nz] == ((-1.0) ** np.arange(1, M + 1))[nz])


def test_truncation_tail_bound():
    c = cheb_coefficients(400, 40)
    x = np.linspace(-1, 1, 201)
    assert np.max(np.abs(cheb_poly(x, c) - (1 - x**2) ** 400)) <= c.tail_bound


def test_sparse_oracle_padding():
    A = np.array([[0.2, 0.1, 0, 0], [0.1, 0.3, 0, 0], [0, 0, 0.4, 0], [0, 0, 0, 0.1]])
    o = SparseOracle(A)
    assert o.d == 2
    assert sorted(o.slots[2]) == [0, 2]
    assert o.nu(0, 1) == 1 and o.entry(0, 1) == 0.1


def test_sparse_oracle_rejects_large_entries():
    with pytest.raises(ValueError):
        SparseOracle(np.array([[1.5, 0], [0, 0.1]]))


@pytest.mark.parametrize("dim", [2, 8, 32])
def test_isometry_and_block(dim):
    H, o = walk_instance(dim, 3)
    ws = build_walk(o)
    T = ws.T
    assert np.allclose(T.conj().T @ T, np.eye(dim), atol=1e-12)
    assert np.allclose(T.conj().T @ ws.apply_S(T), o.matrix / o.d, atol=1e-12)


def test_negative_and_complex_entries():
    A = np.array([[0.3, -0.4, 0.2j], [-0.4, 0.2, 0.1 - 0.1j], [-0.2j, 0.1 + 0.1j, 0.5]])
    A = np.pad(A, ((0, 1), (0, 1)))
    A[3, 3] = 0.1
    ws = build_walk(SparseOracle(A))
    assert np.allclose(ws.T.conj().T @ ws.apply_S(ws.T), A / ws.d, atol=1e-14)


def test_walk_unitary_and_invariant_subspace():
    H, o = walk_instance(4, 1)
    ws = build_walk(o)
    W = ws.W
    assert np.allclose(W.conj().T @ W, np.eye(ws.dim), atol=1e-12)
    basis, _ = np.linalg.qr(np.hstack([ws.T, ws.apply_S(ws.T)]))
    P = basis @ basis.conj().T
    assert np.linalg.norm((np.eye(ws.dim) - P) @ W @ P, 2) <= 1e-10


@pytest.mark.parametrize("k", [0, 1, 2, 7, 50, 200])
def test_walk_powers_give_chebyshev(k):
    H, o = walk_instance(16, 2)
    assert walk_block_check(build_walk(o), k) <= 1e-9


def test_engines_agree():
    H, o = walk_instance(4, 5)
    tr = make_trial_state(H, 0.5, 5)
    p = ChebParams(tau=0.01, M=60, m0=25, d=o.d, E=H.lambda0, log_factor=1.0)
    c = cheb_coefficients(p.M, p.m0)
    sv = cheb_branch(H, tr, p, c, "statevector", build_walk(o))
    br = cheb_branch(H, tr, p, c, "branch")
    assert np.allclose(sv, br, atol=1e-12)


def test_parameters():
    p = choose_cheb_parameters(0.1, 0.5, 0.01, d=4)
    L = np.log(200)
    assert p.M == 2 * int(np.ceil(2 * 16 * L * L / 0.01))
    assert p.tau * p.tau * p.M / 16 == pytest.approx(1, rel=1e-3)


def test_prepare_dim8():
    for seed in range(3):
        H = build_hamiltonian({"model": "random", "dim": 8, "gap": 0.1, "seed": seed, "walk": True})
        tr = make_trial_state(H, 0.5, seed)
        res = prepare_ground_cheb(H, tr, H.lambda0, 0.5, 0.01, np.random.default_rng(seed), engine="branch")
        assert res.success and res.fidelity >= 0.9
        assert res.ledger.walk_steps > 0 and res.ledger.hamsim_time == 0


def test_unknown_variant():
    H = build_hamiltonian({"model": "random", "dim": 4, "gap": 0.1, "seed": 0, "walk": True})
    tr = make_trial_state(H, 0.5, 0)
    res = prepare_ground_cheb_unknown(H, tr, 0.5, 0.01, 0.1, np.random.default_rng(0))
    assert res.success and res.fidelity > 0.9
    assert res.energy_error < 0.1
