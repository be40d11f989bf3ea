"""Minimum-label finding and the unknown-ground-energy pipelines.

A labelled preparation produces sum_j |0>^q |j> |Phi_j> + |R>. The search
finds, digit by digit from the most significant end, the smallest label
whose branch norm clears a threshold zeta, using fixed-point search on
label prefixes. For ground-state preparation the branches are
Phi_j = G_j phi / sqrt(L), the projection filter evaluated at a grid of
trial energies E_j.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .amplify import Prep, fps_run, fps_schedule
from .lcu import (
    AUTO_STATEVECTOR_QUBITS,
    FourierCoefficients,
    FourierParams,
    ancilla_qubits,
    choose_parameters,
    fourier_coefficients,
    lcu_filter,
    lcu_unit_cost,
    log_factor,
    prepare_B,
)
from .ledger import ResourceLedger, RunResult
from .registers import (
    DEFAULT_QUBIT_CAP,
    QState,
    RegisterLayout,
    apply_controlled_evolution,
    apply_on_register,
    apply_phase,
    flagged_branch,
    hadamard_all,
)
from .spectra import Hamiltonian, SpectralOracle, TrialState, projector_fidelity

#: default failure parameter of the label search (must be below 1/5)
DEFAULT_DELTA = 0.04
#: zeta = ZETA_CONST * chi / sqrt(L); the measured filter norm at the best
#: grid point is about exp(-1/2)|phi_0|, so 0.2 leaves ample margin
ZETA_CONST = 0.2
#: grid size L = pow2(GRID_CONST * sqrt(M)) (bin width at most 1/sqrt(M))
GRID_CONST = 1.0
#: estimation: the returned label lies within about ERROR_CONST * tau of
#: lambda_0, so Delta' = 2 ln(1/(chi eps)) xi / ERROR_CONST
ERROR_CONST = 3.0


def pow2_ceil(x: float) -> int:
    """Smallest power of two >= x (at least 1)."""
    if x <= 1:
        return 1
    return 1 << math.ceil(math.log2(x) - 1e-12)


# -- parameters ---------------------------------------------------------------


@dataclass(frozen=True)
class LabelSearchParams:
    n: int
    zeta: float
    delta: float = DEFAULT_DELTA
    K: int = 1
    delta_prime: float = DEFAULT_DELTA

    def __post_init__(self) -> None:
        if not 0 < self.delta < 0.2:
            raise ValueError("delta must lie in (0, 1/5)")
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if not 0 < self.zeta <= 1:
            raise ValueError("zeta must lie in (0, 1]")


def label_search_params(n: int, zeta: float, delta: float = DEFAULT_DELTA) -> LabelSearchParams:
    """K = ceil(log2(n/delta)), delta' = delta / (2 n log2(n/delta))."""
    nn = max(n, 1)
    lg = math.log2(nn / delta)
    return LabelSearchParams(
        n=n,
        zeta=float(zeta),
        delta=float(delta),
        K=max(1, math.ceil(lg)),
        delta_prime=delta / (2 * nn * lg),
    )


def prefix_mass_bound(params: LabelSearchParams) -> float:
    """Largest prefix mass sum_{j<=J~} ||Phi_j||^2 the search tolerates:
    zeta^2 delta / (4 n log2(n/delta) ln^2(2/delta))."""
    n = max(params.n, 1)
    return params.zeta**2 * params.delta / (4 * n * math.log2(n / params.delta) * math.log(2 / params.delta) ** 2)


@dataclass(frozen=True)
class EnergyGrid:
    L: int
    offset: float = 0.0
    step: float = 1.0

    def __post_init__(self) -> None:
        if self.L < 1 or self.L & (self.L - 1):
            raise ValueError("grid size must be a power of two")

    @classmethod
    def over(cls, a: float, b: float, L: int) -> "EnergyGrid":
        return cls(L, float(a), (float(b) - float(a)) / L)

    @property
    def values(self) -> np.ndarray:
        return self.offset + self.step * np.arange(self.L)

    @property
    def n(self) -> int:
        return self.L.bit_length() - 1

    def __getitem__(self, j: int) -> float:
        return self.offset + self.step * j


# -- labelled preparations and the search ------------------------------------


@dataclass
class LabeledPrep:
    """Flagged branches Phi_j of a labelled preparation, one row per label.

    ``state`` holds the full circuit output when it was simulated as a
    statevector. ``cost`` is charged per call to the circuit.
    """

    branches: np.ndarray
    cost: ResourceLedger = field(default_factory=lambda: ResourceLedger(trial_calls=1))
    state: QState | None = None

    def __post_init__(self) -> None:
        L = self.branches.shape[0]
        if L < 1 or L & (L - 1):
            raise ValueError("number of labels must be a power of two")
        flat = self.branches.reshape(L, -1)
        self._sq = np.einsum("ij,ij->i", flat.conj(), flat).real
        self._cum = np.concatenate([[0.0], np.cumsum(self._sq)])

    @property
    def n(self) -> int:
        return self.branches.shape[0].bit_length() - 1

    @property
    def norms(self) -> np.ndarray:
        return np.sqrt(self._sq)

    def prefix_range(self, prefix: int, length: int) -> tuple[int, int]:
        width = 1 << (self.n - length)
        return prefix * width, (prefix + 1) * width

    def prefix_amplitude(self, prefix: int, length: int) -> float:
        lo, hi = self.prefix_range(prefix, length)
        return math.sqrt(max(0.0, self._cum[hi] - self._cum[lo]))

    def prefix(self, prefix: int, length: int) -> Prep:
        lo, hi = self.prefix_range(prefix, length)
        return Prep(good=self.branches[lo:hi], cost=self.cost)

    @classmethod
    def from_norms(cls, norms, rest_dim: int = 1, seed: int | None = None, cost=None) -> "LabeledPrep":
        """Constructed instance: Phi_j = norms[j] * (random unit vector of length rest_dim)."""
        norms = np.asarray(norms, dtype=float)
        if np.sum(norms**2) > 1 + 1e-12:
            raise ValueError("branch norms exceed a unit state")
        rng = np.random.default_rng(seed)
        v = rng.normal(size=(len(norms), rest_dim)) + 1j * rng.normal(size=(len(norms), rest_dim))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        return cls(norms[:, None] * v, cost if cost is not None else ResourceLedger(trial_calls=1))


@dataclass
class LabelSearchOutcome:
    j: int | None
    state: np.ndarray | None
    success: bool
    ledger: ResourceLedger
    calls: int = 0
    stage: int = 0
    searches: int = 0

    def __iter__(self) -> Iterator:
        return iter((self.j, self.state))


def min_label_find(
    prep: LabeledPrep,
    params: LabelSearchParams,
    rng: np.random.Generator,
    method: str = "closed",
) -> LabelSearchOutcome:
    """Find a label j in [J~, J] and return it with |Phi_j>/||Phi_j||.

    Stage 1 fixes digits from the most significant end: the prefix ending in
    0 is searched K times; if all K searches succeed the digit is 0,
    otherwise the prefix ending in 1 is searched K times. A digit where
    neither prefix succeeds K times is inconclusive and starts stage 2,
    which searches ever shorter known prefixes (K attempts each) until one
    succeeds and then measures the remaining label digits.
    """
    n = prep.n
    if params.n != n:
        raise ValueError(f"params are for {params.n}-bit labels, prep has {n}")
    schedule = fps_schedule(params.zeta, params.delta_prime)
    led = ResourceLedger()
    counter = {"calls": 0, "searches": 0}

    def search(prefix: int, length: int) -> bool:
        out = fps_run(prep.prefix(prefix, length), schedule, rng, method=method, ledger=led)
        counter["calls"] += out.calls_C
        counter["searches"] += 1
        return out.success

    def repeated(prefix: int, length: int) -> bool:
        return all(search(prefix, length) for _ in range(params.K))

    def finish(j, stage):
        state = None
        if j is not None:
            row = prep.branches[j]
            state = row / np.linalg.norm(row)
        return LabelSearchOutcome(j, state, j is not None, led, counter["calls"], stage, counter["searches"])

    prefix = 0
    for k in range(1, n + 1):
        if repeated(2 * prefix, k):
            prefix = 2 * prefix
        elif repeated(2 * prefix + 1, k):
            prefix = 2 * prefix + 1
        else:
            known = k - 1
            break
    else:
        if n > 0:
            return finish(prefix, 1)
        known = 0

    # stage 2: back off to shorter prefixes
    for length in range(known, -1, -1):
        p = prefix >> (known - length)
        for _ in range(params.K):
            if search(p, length):
                lo, hi = prep.prefix_range(p, length)
                w = prep._sq[lo:hi]
                j = lo + int(rng.choice(hi - lo, p=w / w.sum()))
                return finish(j, 2)
    return finish(None, 2)


# -- the grid circuit ---------------------------------------------------------


def grid_branches(
    H: Hamiltonian, trial: TrialState, params: FourierParams, coeffs: FourierCoefficients, grid: EnergyGrid
) -> np.ndarray:
    """Phi_j = G_j phi / sqrt(L) in the eigenbasis, G_j the filter at energy E_j."""
    c = H.eigenvectors.conj().T @ trial.amplitudes
    h = H.eigenvalues[None, :] - grid.values[:, None] + params.tau
    return (lcu_filter(h, coeffs) * c[None, :]) @ H.eigenvectors.T / math.sqrt(grid.L)


def build_controlled_V(
    H: Hamiltonian,
    trial: TrialState,
    params: FourierParams,
    grid: EnergyGrid,
    coeffs: FourierCoefficients | None = None,
    oracle: SpectralOracle | None = None,
    engine: str = "auto",
    qubit_cap: int = DEFAULT_QUBIT_CAP,
) -> LabeledPrep:
    """Hadamards on the label register, then sum_j |j><j| (x) G_j.

    All G_j share one label-controlled evolution of H~ (times 2k); the grid
    energies enter only through the joint label phases exp(2i(E_j - tau)k),
    so one application costs the same as a single G.
    """
    if coeffs is None:
        coeffs = fourier_coefficients(params.m, params.m0)
    if oracle is None:
        oracle = SpectralOracle(H)
    l, b, ns = grid.n, ancilla_qubits(coeffs.m0), H.n_qubits
    cost = lcu_unit_cost(coeffs.m0, ns, extra_qubits=l)
    cost.charge_gates(l + 2 * l * b)
    if engine == "auto":
        engine = "statevector" if l + b + ns <= AUTO_STATEVECTOR_QUBITS else "branch"
    if engine == "branch":
        if oracle.error_injection > 0:
            raise ValueError("the branch engine does not model injected simulation error")
        return LabeledPrep(grid_branches(H, trial, params, coeffs, grid), cost)
    if engine != "statevector":
        raise ValueError(f"unknown engine {engine!r}")
    layout = RegisterLayout([("label", l), ("lcu", b), ("sys", ns)], cap=qubit_cap)
    s = QState.product(layout, {"sys": trial.amplitudes})
    s = apply_on_register(s, "label", hadamard_all(l))
    B = prepare_B(coeffs)
    labels = np.arange(B.dim)
    k = np.where(labels <= 2 * coeffs.m0, labels - coeffs.m0, 0)
    s = apply_on_register(s, "lcu", B)
    s = apply_controlled_evolution(s, "lcu", "sys", oracle, 2.0 * k)
    s = apply_phase(s, ["label", "lcu"], np.exp(2j * np.multiply.outer(grid.values - params.tau, k)))
    s = apply_on_register(s, "lcu", B.adjoint())
    branch, _ = flagged_branch(s, [("lcu", 0)])
    return LabeledPrep(branch.tensor.copy(), cost, state=s)


# -- pipelines -----------------------------------------------------------------


def grid_search(
    H: Hamiltonian,
    trial: TrialState,
    chi: float,
    params: FourierParams,
    grid: EnergyGrid,
    rng: np.random.Generator,
    delta: float = DEFAULT_DELTA,
    zeta_const: float = ZETA_CONST,
    engine: str = "auto",
    oracle: SpectralOracle | None = None,
    qubit_cap: int = DEFAULT_QUBIT_CAP,
) -> tuple[LabelSearchOutcome, LabeledPrep]:
    coeffs = fourier_coefficients(params.m, params.m0)
    prep = build_controlled_V(H, trial, params, grid, coeffs, oracle, engine, qubit_cap)
    lsp = label_search_params(grid.n, min(1.0, zeta_const * chi / math.sqrt(grid.L)), delta)
    out = min_label_find(prep, lsp, rng)
    out.ledger.note_qubits(prep.cost.qubits_peak)
    return out, prep


def _grid_result(method, H, out, grid, prep, info) -> RunResult:
    res = RunResult(method=method, success=out.success, ledger=out.ledger)
    res.info.update(info)
    res.info.update(stage=out.stage, calls=out.calls, searches=out.searches)
    if out.success:
        res.state = out.state
        res.fidelity = projector_fidelity(H, out.state)
        res.set_energy(grid[out.j], H.lambda0)
        res.info.update(label=out.j, label_norm=float(prep.norms[out.j]))
    return res


def prepare_ground_unknown_energy(
    H: Hamiltonian,
    trial: TrialState,
    chi: float,
    eps: float,
    Delta_lb: float,
    rng: np.random.Generator,
    delta: float = DEFAULT_DELTA,
    grid_cap: int | None = None,
    engine: str = "auto",
    oracle: SpectralOracle | None = None,
    qubit_cap: int = DEFAULT_QUBIT_CAP,
) -> RunResult:
    """Grid of L = Theta(sqrt(M)) energies over [0, 1], searched for the lowest
    label whose filtered branch clears zeta = c chi / sqrt(L)."""
    params = choose_parameters(Delta_lb, chi, eps)
    L = pow2_ceil(GRID_CONST * math.sqrt(params.M))
    if grid_cap is not None:
        L = min(L, grid_cap)
    grid = EnergyGrid.over(0.0, 1.0, L)
    out, prep = grid_search(H, trial, chi, params, grid, rng, delta, engine=engine, oracle=oracle, qubit_cap=qubit_cap)
    return _grid_result("lcu-grid", H, out, grid, prep, {"M": params.M, "m0": params.m0, "L": L, "tau": params.tau})


def combined_prepare(
    H: Hamiltonian,
    trial: TrialState,
    chi: float,
    eps: float,
    Delta_lb: float,
    kappa: float,
    rng: np.random.Generator,
    delta: float = DEFAULT_DELTA,
    engine: str = "auto",
    qubit_cap: int = DEFAULT_QUBIT_CAP,
) -> RunResult:
    """Phase estimation to precision Delta_lb^kappa, then a grid over the
    resulting interval with L' = Theta(sqrt(M) (b - a)) points."""
    from .pea import pea_estimate_energy

    if not 0 <= kappa <= 1:
        raise ValueError("kappa must lie in [0, 1]")
    params = choose_parameters(Delta_lb, chi, eps)
    led = ResourceLedger()
    xi1 = Delta_lb**kappa
    if xi1 >= 0.5:
        a, b = 0.0, 1.0
        stage1 = None
    else:
        est, stage1 = pea_estimate_energy(H, trial, chi, xi1, rng, delta=delta)
        led.add(stage1.ledger)
        if not stage1.success:
            res = RunResult(method="lcu-combined", success=False, ledger=led)
            res.info.update(stage1_failed=True, kappa=kappa)
            return res
        a = max(0.0, est - xi1)
        b = est + xi1 + params.tau
    L = pow2_ceil(GRID_CONST * math.sqrt(params.M) * (b - a))
    grid = EnergyGrid.over(a, b, L)
    out, prep = grid_search(H, trial, chi, params, grid, rng, delta, engine=engine, qubit_cap=qubit_cap)
    stage2 = out.ledger.copy()
    led.add(out.ledger)
    out.ledger = led
    res = _grid_result(
        "lcu-combined", H, out, grid, prep, {"M": params.M, "m0": params.m0, "L": L, "kappa": kappa, "interval": (a, b)}
    )
    res.info["stage2_ledger"] = stage2
    res.info["stage1_ledger"] = stage1.ledger if stage1 is not None else ResourceLedger()
    return res


def estimation_gap(xi: float, chi: float, eps: float) -> float:
    """Gap parameter Delta' that makes the grid pipeline accurate to xi."""
    return min(0.9, 2 * log_factor(chi, eps) * xi / ERROR_CONST)


def estimate_ground_energy(
    H: Hamiltonian,
    trial: TrialState,
    chi: float,
    xi: float,
    rng: np.random.Generator,
    variant: str = "grid",
    kappa: float = 1.0,
    eps: float = 0.01,
    delta: float = DEFAULT_DELTA,
    engine: str = "auto",
    qubit_cap: int = DEFAULT_QUBIT_CAP,
) -> tuple[float | None, RunResult]:
    """Run a preparation pipeline with Delta' tied to xi and report E_j."""
    dprime = estimation_gap(xi, chi, eps)
    if variant == "grid":
        res = prepare_ground_unknown_energy(H, trial, chi, eps, dprime, rng, delta, engine=engine, qubit_cap=qubit_cap)
    elif variant == "combined":
        res = combined_prepare(H, trial, chi, eps, dprime, kappa, rng, delta, engine=engine, qubit_cap=qubit_cap)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    res.info.update(xi=xi, delta_prime=dprime)
    return res.energy_estimate, res
