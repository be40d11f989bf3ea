"""Filtering baseline: eta copies of an adjoint phase-estimation overlap filter.

A momentum state |mu> = 2^{-k/2} sum_x exp(2 pi i mu x)|x> on a k-qubit
register is run through the adjoint of phase estimation (without the
Fourier transform); the all-zeros ancilla branch carries the factor
<varphi_i|mu> = 2^-k sum_x exp(2 pi i (mu - lambda_i) x) on eigencomponent i.
With eta independent copies the branch is sum_i phi_i <varphi_i|mu>^eta |lambda_i>.

The copies act identically and independently, so by default the branch is
computed from the single-copy factor raised to the eta-th power; a
materialized simulation of all copies is available for small cases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .amplify import Prep, overlap_doubling_fps
from .labelsearch import DEFAULT_DELTA, EnergyGrid, LabeledPrep, label_search_params, min_label_find, pow2_ceil
from .ledger import ResourceLedger, RunResult
from .pea import dirichlet, pea_estimate_energy
from .registers import (
    DEFAULT_QUBIT_CAP,
    CapacityError,
    QState,
    RegisterLayout,
    apply_controlled_evolution,
    apply_on_register,
    flagged_branch,
    hadamard_all,
)
from .spectra import Hamiltonian, SpectralOracle, TrialState, projector_fidelity

#: unknown-energy grid: 2^k1 = pow2(GRID_CONST / xi_F)
GRID_CONST = 4.0
#: energy estimation: 2^k1 = pow2(ESTIMATE_CONST / xi)
ESTIMATE_CONST = 4.0
#: smallest number of filter copies used for the energy grid
MIN_ETA1 = 3


@dataclass(frozen=True)
class FilterConfig:
    k: int
    eta: int
    mu: float = 0.0
    k1: int = 0
    eta1: int = 0

    @property
    def l(self) -> int:
        return math.ceil(math.log2(2 * math.pi * math.sqrt(self.eta)))

    @property
    def precision(self) -> float:
        """Required accuracy of mu: 1 / (2^(k+1) pi sqrt(eta))."""
        return 1.0 / (2 ** (self.k + 1) * math.pi * math.sqrt(self.eta))


def _loglog_ratio(x: float) -> int:
    """ceil(x / ln x), guarded for small x."""
    return max(1, math.ceil(x / max(1.0, math.log(x)))) if x > 0 else 1


def filter_config(chi: float, eps: float, Delta_lb: float, mu: float = 0.0) -> FilterConfig:
    """k = ceil(log2 1/Delta) + ceil(log2 ln(1/(chi eps))), eta = ceil(L / ln L)."""
    L = math.log(1 / (chi * eps))
    k = math.ceil(math.log2(1 / Delta_lb) - 1e-12) + max(0, math.ceil(math.log2(L)))
    eta = _loglog_ratio(L)
    return FilterConfig(k=k, eta=eta, mu=mu)


def filter_momentum_state(mu: float, k: int, mode: str = "direct", eta: int = 1) -> np.ndarray:
    """2^{-k/2} sum_x exp(2 pi i mu x)|x>.

    ``mode="recipe"`` builds it from the basis state |2^(k+l) mu> on k+l
    qubits: Fourier transform, Hadamards on the top l qubits, discard them.
    The Fourier output factorizes between low and high qubits, so the
    discarded register leaves the low k qubits exactly in |mu>.
    """
    if mode == "direct":
        x = np.arange(2**k)
        return np.exp(2j * np.pi * mu * x) / math.sqrt(2**k)
    if mode != "recipe":
        raise ValueError(f"unknown mode {mode!r}")
    l = math.ceil(math.log2(2 * math.pi * math.sqrt(eta)))
    y = 2 ** (k + l) * mu
    if abs(y - round(y)) > 1e-9:
        raise ValueError("mu is not representable with k + l bits")
    n = 2 ** (k + l)
    x = np.arange(n)
    vec = np.exp(2j * np.pi * x * round(y) / n) / math.sqrt(n)
    t = vec.reshape(2**l, 2**k)  # [high, low] in little-endian order
    t = hadamard_all(l) @ t
    row = t[np.argmax(np.linalg.norm(t, axis=1))]
    row = row / np.linalg.norm(row)
    return row * np.exp(-1j * np.angle(row[0]))


def filter_overlaps(H: Hamiltonian, mu: float | np.ndarray, k: int) -> np.ndarray:
    """<varphi_i|mu> for every eigenvalue (last axis), broadcasting over mu."""
    mu = np.asarray(mu, dtype=float)
    return dirichlet(mu[..., None] - H.eigenvalues, k)


def filter_branch(H: Hamiltonian, trial: TrialState, mu: float, k: int, eta: int) -> np.ndarray:
    """sum_i phi_i <varphi_i|mu>^eta |lambda_i> (the all-zero ancilla branch)."""
    c = H.eigenvectors.conj().T @ trial.amplitudes
    return H.eigenvectors @ (c * filter_overlaps(H, mu, k) ** eta)


def filter_materialized(
    oracle: SpectralOracle,
    trial: TrialState,
    mu: float,
    k: int,
    eta: int,
    ledger: ResourceLedger | None = None,
    qubit_cap: int = DEFAULT_QUBIT_CAP,
) -> tuple[np.ndarray, QState]:
    """All eta copies as registers: prepare |mu> on each, apply the adjoint of
    (Hadamards; controlled exp(+2 pi i H~ x)), and read the all-zero branch."""
    H = oracle.hamiltonian
    regs = [(f"copy{c}", k) for c in range(eta)] + [("sys", H.n_qubits)]
    if sum(q for _, q in regs) > qubit_cap:
        raise CapacityError(f"filtering needs {eta * k} ancillas plus the system, cap is {qubit_cap}")
    layout = RegisterLayout(regs, cap=qubit_cap)
    m = filter_momentum_state(mu, k)
    s = QState.product(layout, {**{f"copy{c}": m for c in range(eta)}, "sys": trial.amplitudes})
    x = np.arange(2**k)
    for c in range(eta):
        s = apply_controlled_evolution(s, f"copy{c}", "sys", oracle, 2 * np.pi * x, ledger)
        s = apply_on_register(s, f"copy{c}", hadamard_all(k))
    if ledger is not None:
        ledger.note_qubits(layout.total_qubits)
    branch, _ = flagged_branch(s, [(f"copy{c}", 0) for c in range(eta)])
    return branch.vector, s


def filter_unit_cost(k: int, eta: int, n_sys: int, label_qubits: int = 0) -> ResourceLedger:
    l = math.ceil(math.log2(2 * math.pi * math.sqrt(eta)))
    return ResourceLedger(
        hamsim_time=eta * 2 * math.pi * (2**k - 1),
        trial_calls=1,
        gate_proxy=eta * ((k + l) ** 2 + k) + label_qubits,
        qubits_peak=n_sys + eta * k + label_qubits,
    )


def filter_grid_params(chi: float, k_prec: float, const: float) -> tuple[int, int]:
    """(k1, eta1) for a grid whose returned mu is accurate to ``k_prec``."""
    ell = math.log(1 / chi) if chi < 1 else 0.0
    eta1 = max(MIN_ETA1, _loglog_ratio(ell) if ell > 0 else 1)
    k1 = pow2_ceil(const / k_prec).bit_length() - 1
    return k1, eta1


def filter_grid_search(
    H: Hamiltonian,
    trial: TrialState,
    chi: float,
    grid: EnergyGrid,
    k1: int,
    eta1: int,
    rng: np.random.Generator,
    delta: float = DEFAULT_DELTA,
):
    """Labels j carry Phi_j = L^{-1/2} sum_i phi_i <varphi_i|mu_j>^eta1 |lambda_i>
    with k1-qubit momentum states; the lowest label above zeta is returned."""
    c = H.eigenvectors.conj().T @ trial.amplitudes
    f = filter_overlaps(H, grid.values, k1) ** eta1
    branches = (f * c[None, :]) @ H.eigenvectors.T / math.sqrt(grid.L)
    prep = LabeledPrep(branches, filter_unit_cost(k1, eta1, H.n_qubits, grid.n))
    zeta = min(1.0, (2 / math.pi) ** eta1 * chi / math.sqrt(grid.L))
    out = min_label_find(prep, label_search_params(grid.n, zeta, delta), rng)
    out.ledger.note_qubits(prep.cost.qubits_peak)
    return out, prep


def _known(H, trial, cfg: FilterConfig, rng, fps_delta, materialize, qubit_cap, ledger) -> RunResult:
    if materialize:
        good, _ = filter_materialized(SpectralOracle(H), trial, cfg.mu, cfg.k, cfg.eta, qubit_cap=qubit_cap)
    else:
        good = filter_branch(H, trial, cfg.mu, cfg.k, cfg.eta)
    prep = Prep(good=good, cost=filter_unit_cost(cfg.k, cfg.eta, H.n_qubits))
    ledger.note_qubits(H.n_qubits + cfg.eta * cfg.k)
    out = overlap_doubling_fps(prep, fps_delta, rng, ledger=ledger)
    res = RunResult(method="filter", success=out.success, ledger=ledger)
    res.info.update(k=cfg.k, eta=cfg.eta, mu=cfg.mu, branch_norm=prep.amplitude, calls=out.calls_C)
    if out.success:
        res.state = out.residual
        res.fidelity = projector_fidelity(H, out.residual)
    return res


def filtering_prepare(
    H: Hamiltonian,
    trial: TrialState,
    mode: str,
    chi: float,
    eps: float,
    Delta_lb: float,
    rng: np.random.Generator,
    mu: float | None = None,
    kappa: float = 1.0,
    fps_delta: float = 0.1,
    materialize: bool = False,
    delta: float = DEFAULT_DELTA,
    qubit_cap: int = DEFAULT_QUBIT_CAP,
) -> RunResult:
    """Filtering preparation in ``known`` (mu given), ``unknown`` or ``combined`` mode.

    Unknown modes first locate mu with a minimum-label search over a grid of
    reference energies, then run the known-mode filter at that mu.
    """
    cfg = filter_config(chi, eps, Delta_lb)
    led = ResourceLedger()
    if mode == "known":
        if mu is None:
            raise ValueError("known mode needs mu")
        res = _known(H, trial, FilterConfig(cfg.k, cfg.eta, mu), rng, fps_delta, materialize, qubit_cap, led)
        res.method = "filter-known"
        return res
    k1, eta1 = filter_grid_params(chi, cfg.precision, GRID_CONST)
    stage1 = None
    if mode == "unknown":
        grid = EnergyGrid.over(0.0, 1.0, 2**k1)
    elif mode == "combined":
        xi1 = Delta_lb**kappa
        if xi1 >= 0.5:
            grid = EnergyGrid.over(0.0, 1.0, 2**k1)
        else:
            est, stage1 = pea_estimate_energy(H, trial, chi, xi1, rng, delta=delta)
            led.add(stage1.ledger)
            if est is None:
                res = RunResult(method="filter-combined", success=False, ledger=led)
                res.info["stage1_failed"] = True
                return res
            a, b = max(0.0, est - xi1), est + xi1
            grid = EnergyGrid.over(a, b, pow2_ceil((b - a) * 2**k1))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    out, prep = filter_grid_search(H, trial, chi, grid, k1, eta1, rng, delta)
    led.add(out.ledger)
    if not out.success:
        res = RunResult(method=f"filter-{mode}", success=False, ledger=led)
        res.info.update(k1=k1, eta1=eta1, search_failed=True)
        return res
    mu_j = grid[out.j]
    res = _known(H, trial, FilterConfig(cfg.k, cfg.eta, mu_j), rng, fps_delta, materialize, qubit_cap, led)
    res.method = f"filter-{mode}"
    res.set_energy(mu_j, H.lambda0)
    res.info.update(k1=k1, eta1=eta1, label=out.j, L=grid.L)
    res.ledger.note_qubits(H.n_qubits + grid.n + eta1 * k1)
    return res


def filtering_estimate(
    H: Hamiltonian,
    trial: TrialState,
    chi: float,
    xi: float,
    rng: np.random.Generator,
    delta: float = DEFAULT_DELTA,
) -> tuple[float | None, RunResult]:
    """Grid of reference energies with 2^k1 ~ 1/xi; returns mu_j."""
    k1, eta1 = filter_grid_params(chi, xi, ESTIMATE_CONST)
    grid = EnergyGrid.over(0.0, 1.0, 2**k1)
    out, prep = filter_grid_search(H, trial, chi, grid, k1, eta1, rng, delta)
    res = RunResult(method="filter-estimate", success=out.success, ledger=out.ledger)
    res.info.update(k1=k1, eta1=eta1, xi=xi, calls=out.calls)
    if not out.success:
        return None, res
    est = grid[out.j]
    res.set_energy(est, H.lambda0)
    res.state = out.state
    res.fidelity = projector_fidelity(H, out.state)
    res.info["label"] = out.j
    return est, res
