"""Ground-state preparation by a truncated Fourier series of cos^M.

With the shifted Hamiltonian H = H~ - (E - tau), the binomial expansion

    cos^{2m}(H) = sum_{k=-m}^{m} alpha_k exp(-2iHk),  alpha_k = 4^-m C(2m, m+k)

is truncated to |k| <= m0 and realized as a linear combination of unitaries:
B prepares sqrt(alpha_k / alpha) on a b-qubit ancilla, a label-controlled
evolution applies exp(-2iHk), and B^dag un-prepares. The ancilla-zero branch
is (1/alpha) sum_k alpha_k exp(-2iHk) |phi>, which is then amplified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.chebyshev import chebval
from scipy.special import gammaln

from .amplify import Prep, amplitude_amplify_unknown, overlap_doubling_fps
from .ledger import ResourceLedger, RunResult
from .registers import (
    DEFAULT_QUBIT_CAP,
    HouseholderPrep,
    QState,
    RegisterLayout,
    apply_controlled_evolution,
    apply_on_register,
    apply_phase,
    flagged_branch,
)
from .spectra import Hamiltonian, SpectralOracle, TrialState, projector_fidelity

#: switch from exact integer binomials to log-gamma above this m
_EXACT_BINOMIAL_MAX = 600
#: largest register count simulated as a full statevector by ``engine="auto"``
AUTO_STATEVECTOR_QUBITS = 20


@dataclass(frozen=True)
class FourierParams:
    tau: float
    M: int
    m: int
    m0: int
    delta_precision: float
    E: float = 0.0
    log_factor: float = 1.0

    @property
    def b(self) -> int:
        return ancilla_qubits(self.m0)


def ancilla_qubits(m0: int) -> int:
    return max(1, math.ceil(math.log2(2 * m0 + 1)))


def log_factor(chi: float, eps: float) -> float:
    """ln(1/(chi eps)), the logarithm every parameter choice depends on."""
    return math.log(1.0 / (chi * eps))


def choose_parameters(Delta_lb: float, chi: float, eps: float, E: float = 0.0) -> FourierParams:
    """tau = D/(2L), M = 2 ceil(4L^2/D^2), m0 = ceil(2 sqrt(M L)) (capped at m), delta = D/(4L)."""
    if not 0 < Delta_lb < 1:
        raise ValueError("Delta_lb must lie in (0, 1)")
    if not 0 < chi <= 1:
        raise ValueError("chi must lie in (0, 1]")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    L = log_factor(chi, eps)
    if L <= 0:
        raise ValueError("chi * eps must be below 1")
    tau = Delta_lb / (2 * L)
    m = math.ceil(4 * L * L / Delta_lb**2)
    M = 2 * m
    m0 = min(m, math.ceil(2 * math.sqrt(M * L)))
    if m0 < 1:
        raise ValueError("truncation radius m0 < 1")
    return FourierParams(tau=tau, M=M, m=m, m0=m0, delta_precision=Delta_lb / (4 * L), E=E, log_factor=L)


@dataclass(frozen=True)
class FourierCoefficients:
    m: int
    m0: int
    alpha: np.ndarray  # alpha[k + m0] for k in [-m0, m0]
    alpha_sum: float
    tail_bound: float

    @property
    def ks(self) -> np.ndarray:
        return np.arange(-self.m0, self.m0 + 1)

    def __getitem__(self, k: int) -> float:
        if abs(k) > self.m0:
            raise KeyError(k)
        return float(self.alpha[k + self.m0])


def binomial_weights(m: int, ks: np.ndarray) -> np.ndarray:
    """4^-m C(2m, m+k) for the given k, exact for small m and log-space otherwise."""
    ks = np.asarray(ks)
    if m <= _EXACT_BINOMIAL_MAX:
        den = 4**m
        return np.array([math.comb(2 * m, m + int(k)) / den for k in ks])
    logs = gammaln(2 * m + 1) - gammaln(m + ks + 1) - gammaln(m - ks + 1) - 2 * m * math.log(2)
    return np.exp(logs)


def fourier_coefficients(m: int, m0: int) -> FourierCoefficients:
    if not 1 <= m0 <= m:
        raise ValueError("need 1 <= m0 <= m")
    ks = np.arange(-m0, m0 + 1)
    alpha = binomial_weights(m, ks)
    if not np.all(np.isfinite(alpha)):
        raise OverflowError("binomial weights overflowed")
    return FourierCoefficients(m, m0, alpha, float(alpha.sum()), 2 * math.exp(-(m0**2) / (4 * m)))


def lcu_filter(h: np.ndarray, coeffs: FourierCoefficients) -> np.ndarray:
    """g(h) = (1/alpha) sum_k alpha_k exp(-2ihk), evaluated without a statevector.

    The weights are symmetric, so g is the real Chebyshev series
    (alpha_0 + 2 sum_{k>0} alpha_k T_k(cos 2h)) / alpha, summed by Clenshaw.
    """
    h = np.asarray(h, dtype=float)
    m0 = coeffs.m0
    c = coeffs.alpha[m0:].copy()
    c[1:] *= 2
    return chebval(np.cos(2 * h), c / coeffs.alpha_sum)


def prepare_B(coeffs: FourierCoefficients) -> HouseholderPrep:
    """Unitary on b qubits with first column sqrt(alpha_k/alpha) at index k + m0."""
    b = ancilla_qubits(coeffs.m0)
    col = np.zeros(2**b, dtype=complex)
    col[: 2 * coeffs.m0 + 1] = np.sqrt(coeffs.alpha / coeffs.alpha_sum)
    col /= np.linalg.norm(col)
    return HouseholderPrep(col)


def lcu_unit_cost(m0: int, n_sys: int, extra_qubits: int = 0) -> ResourceLedger:
    """Ledger charge for one application of the LCU circuit (or its inverse)."""
    b = ancilla_qubits(m0)
    return ResourceLedger(
        hamsim_time=2.0 * m0,
        trial_calls=1,
        gate_proxy=2 * 2**b + b,
        qubits_peak=b + n_sys + extra_qubits,
    )


def apply_G(
    state: QState,
    oracle: SpectralOracle,
    params: FourierParams,
    coeffs: FourierCoefficients,
    ledger: ResourceLedger | None = None,
    lcu_reg: str = "lcu",
    sys_reg: str = "sys",
) -> QState:
    """(B^dag (x) 1) U (B (x) 1) on the given registers.

    U = sum_k |k><k| (x) exp(-2iHk) is one label-controlled evolution of
    H~ (times 2k, charged 2 m0) followed by the label phases
    exp(2i(E - tau)k) from the shift, which cost no simulation time.
    """
    pos = state.layout.axis(lcu_reg)
    rest = np.moveaxis(state.tensor, pos, 0)[1:]
    if np.any(np.abs(rest) > 1e-12):
        raise ValueError("LCU ancilla must start in |0...0>")
    B = prepare_B(coeffs)
    dim = B.dim
    labels = np.arange(dim)
    valid = labels <= 2 * coeffs.m0
    k = np.where(valid, labels - coeffs.m0, 0)
    s = apply_on_register(state, lcu_reg, B)
    s = apply_controlled_evolution(s, lcu_reg, sys_reg, oracle, 2.0 * k, ledger)
    s = apply_phase(s, [lcu_reg], np.exp(2j * (params.E - params.tau) * k), ledger)
    s = apply_on_register(s, lcu_reg, B.adjoint())
    if ledger is not None:
        ledger.charge_gates(2 * dim)
        ledger.note_qubits(state.layout.total_qubits)
    return s


def _pick_engine(engine: str, qubits: int) -> str:
    if engine == "auto":
        return "statevector" if qubits <= AUTO_STATEVECTOR_QUBITS else "branch"
    if engine not in ("statevector", "branch"):
        raise ValueError(f"unknown engine {engine!r}")
    return engine


def lcu_branch(
    oracle: SpectralOracle,
    trial: TrialState,
    params: FourierParams,
    coeffs: FourierCoefficients,
    engine: str = "auto",
    qubit_cap: int = DEFAULT_QUBIT_CAP,
) -> tuple[np.ndarray, QState | None]:
    """Ancilla-zero branch (1/alpha) sum_k alpha_k exp(-2iHk)|phi> and, for the
    statevector engine, the full circuit output."""
    H = oracle.hamiltonian
    b = ancilla_qubits(coeffs.m0)
    engine = _pick_engine(engine, b + H.n_qubits)
    if engine == "statevector":
        layout = RegisterLayout([("lcu", b), ("sys", H.n_qubits)], cap=qubit_cap)
        s0 = QState.product(layout, {"sys": trial.amplitudes})
        out = apply_G(s0, oracle, params, coeffs)
        branch, _ = flagged_branch(out, [("lcu", 0)])
        return branch.vector, out
    if oracle.error_injection > 0:
        raise ValueError("the branch engine does not model injected simulation error")
    h = H.eigenvalues - params.E + params.tau
    c = H.eigenvectors.conj().T @ trial.amplitudes
    return H.eigenvectors @ (lcu_filter(h, coeffs) * c), None


def prepare_ground_known_energy(
    H: Hamiltonian,
    trial: TrialState,
    E: float,
    chi: float,
    eps: float,
    mode: str = "fps",
    rng: np.random.Generator | None = None,
    delta_lb: float | None = None,
    engine: str = "auto",
    fps_delta: float = 0.1,
    oracle: SpectralOracle | None = None,
    qubit_cap: int = DEFAULT_QUBIT_CAP,
) -> RunResult:
    """Project the trial state onto the ground state for a known energy E <= lambda_0.

    ``delta_lb`` (a lower bound on the gap) defaults to the true gap.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    if oracle is None:
        oracle = SpectralOracle(H)
    dlb = H.gap if delta_lb is None else delta_lb
    params = choose_parameters(dlb, chi, eps, E=E)
    coeffs = fourier_coefficients(params.m, params.m0)
    good, _ = lcu_branch(oracle, trial, params, coeffs, engine, qubit_cap)
    prep = Prep(good=good, cost=lcu_unit_cost(params.m0, H.n_qubits))
    led = ResourceLedger()
    led.note_qubits(params.b + H.n_qubits)
    if mode == "fps":
        out = overlap_doubling_fps(prep, fps_delta, rng, ledger=led)
    elif mode == "aa":
        out = amplitude_amplify_unknown(prep, rng, ledger=led)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    res = RunResult(method=f"lcu-fourier-{mode}", success=out.success, ledger=led)
    res.info.update(branch_norm=prep.amplitude, M=params.M, m0=params.m0, tau=params.tau, calls=out.calls_C)
    if out.success:
        res.state = out.residual
        res.fidelity = projector_fidelity(H, out.residual)
    return res
