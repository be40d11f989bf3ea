"""Phase-estimation baselines: energy estimation and post-selected preparation.

Convention: the controlled powers apply exp(+2 pi i H~ y) for ancilla value
y (i.e. :func:`evolve` at time -2 pi y), and the inverse Fourier transform
maps |y> to 2^{-k/2} sum_x exp(-2 pi i x y / 2^k) |x>. The ancilla value x
then reads out 2^k lambda_i, with amplitude

    gamma_ix = 2^-k sum_y exp(2 pi i y (lambda_i - x / 2^k)).
"""

from __future__ import annotations

import math

import numpy as np

from .amplify import Prep, overlap_doubling_fps
from .labelsearch import DEFAULT_DELTA, LabeledPrep, label_search_params, min_label_find, pow2_ceil
from .ledger import ResourceLedger, RunResult
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

#: D = pow2(D_CONST / chi^2) extra ancilla values per output bin
D_CONST = 4.0


def dirichlet(theta: np.ndarray, k: int) -> np.ndarray:
    """2^-k sum_{y<2^k} exp(2 pi i y theta), with the removable singularity handled."""
    theta = np.asarray(theta, dtype=float)
    n = 2**k
    s = np.sin(np.pi * theta)
    num = np.sin(np.pi * n * theta)
    near = np.abs(s) < 1e-13
    safe = np.where(near, 1.0, s)
    ratio = np.where(near, n * np.cos(np.pi * n * theta) / np.where(near, np.cos(np.pi * theta), 1.0), num / safe)
    return np.exp(1j * np.pi * (n - 1) * theta) * ratio / n


def gamma_amplitude(lambda_i: float, x: int, k: int) -> complex:
    """Ancilla amplitude gamma_ix of phase estimation with k bits."""
    if not 0 <= x < 2**k:
        raise ValueError("x out of range")
    return complex(dirichlet(lambda_i - x / 2**k, k))


def gamma_closed_form(lambda_i: float, x: int, k: int) -> complex:
    """The geometric-sum quotient (1 - e^{2 pi i (2^k l - x)}) / (2^k (1 - e^{2 pi i (l - x/2^k)}))."""
    d = lambda_i - x / 2**k
    if d == 0:
        return 1.0 + 0j
    # 1 - e^{i t} = -expm1(i t) keeps full relative precision for small t
    den = -np.expm1(2j * np.pi * d)
    return complex(-np.expm1(2j * np.pi * (2**k * lambda_i - x)) / (2**k * den))


def pea_unit_cost(k: int, n_sys: int) -> ResourceLedger:
    """One phase-estimation circuit: controlled powers total 2 pi (2^k - 1) time."""
    return ResourceLedger(
        hamsim_time=2 * math.pi * (2**k - 1),
        trial_calls=1,
        gate_proxy=k * k + k,
        qubits_peak=k + n_sys,
    )


def pea_branches(H: Hamiltonian, trial: TrialState, k: int) -> np.ndarray:
    """Phi_x = sum_i phi_i gamma_ix |lambda_i> for every ancilla value x, as rows."""
    c = H.eigenvectors.conj().T @ trial.amplitudes
    x = np.arange(2**k)
    gam = dirichlet(H.eigenvalues[None, :] - x[:, None] / 2**k, k)
    return (gam * c[None, :]) @ H.eigenvectors.T


def inverse_qft(k: int) -> np.ndarray:
    n = 2**k
    x = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(x, x) / n) / math.sqrt(n)


def pea_state(
    oracle: SpectralOracle,
    trial: TrialState,
    k: int,
    ledger: ResourceLedger | None = None,
    qubit_cap: int = DEFAULT_QUBIT_CAP,
) -> QState:
    """Full phase-estimation output on (ancilla, system) registers."""
    H = oracle.hamiltonian
    layout = RegisterLayout([("anc", k), ("sys", H.n_qubits)], cap=qubit_cap)
    s = QState.product(layout, {"sys": trial.amplitudes})
    s = apply_on_register(s, "anc", hadamard_all(k))
    y = np.arange(2**k)
    s = apply_controlled_evolution(s, "anc", "sys", oracle, -2 * np.pi * y, ledger)
    s = apply_on_register(s, "anc", inverse_qft(k), check=False)
    if ledger is not None:
        ledger.charge_gates(k * k + k)
        ledger.note_qubits(layout.total_qubits)
    return s


def pea_config(chi: float, xi: float) -> tuple[int, int, int]:
    """(k, n, D): n = ceil(log2 1/xi) + 1 output bits and D = pow2(D_CONST/chi^2)."""
    n = max(1, math.ceil(math.log2(1 / xi) - 1e-12) + 1)
    D = pow2_ceil(D_CONST / chi**2)
    return n + D.bit_length() - 1, n, D


def pea_estimate_energy(
    H: Hamiltonian,
    trial: TrialState,
    chi: float,
    xi: float,
    rng: np.random.Generator,
    delta: float = DEFAULT_DELTA,
    engine: str = "branch",
    oracle: SpectralOracle | None = None,
    qubit_cap: int = DEFAULT_QUBIT_CAP,
) -> tuple[float | None, RunResult]:
    """Minimum-label search over phase-estimation outputs, 2^k = 2^n D.

    The bin nearest 2^k lambda_0 has norm at least (2/pi)|phi_0|, which
    sets zeta = (2/pi) chi; D ~ 1/chi^2 keeps the tail of lower bins small.
    """
    k, n, D = pea_config(chi, xi)
    if k + H.n_qubits > 40:
        raise CapacityError(f"phase estimation needs {k} ancillas")
    if engine == "statevector":
        if oracle is None:
            oracle = SpectralOracle(H)
        s = pea_state(oracle, trial, k, qubit_cap=qubit_cap)
        branches = s.tensor.copy()
    else:
        branches = pea_branches(H, trial, k)
    prep = LabeledPrep(branches, pea_unit_cost(k, H.n_qubits))
    lsp = label_search_params(k, min(1.0, 2 / math.pi * chi), delta)
    out = min_label_find(prep, lsp, rng)
    out.ledger.note_qubits(k + H.n_qubits)
    res = RunResult(method="pea-estimate", success=out.success, ledger=out.ledger)
    res.info.update(k=k, n=n, D=D, calls=out.calls, stage=out.stage)
    if not out.success:
        return None, res
    est = out.j / 2**k
    res.set_energy(est, H.lambda0)
    res.state = out.state
    res.fidelity = projector_fidelity(H, out.state)
    res.info["label"] = out.j
    return est, res


def pea_prepare_bits(chi: float, eps: float, delta_lb: float) -> int:
    """k with 2^k >= 1 / (pi chi eps Delta)."""
    return max(1, pow2_ceil(1 / (math.pi * chi * eps * delta_lb)).bit_length() - 1)


def pea_prepare(
    H: Hamiltonian,
    trial: TrialState,
    z: int | None,
    k: int | None,
    eps: float,
    rng: np.random.Generator,
    chi: float | None = None,
    delta_lb: float | None = None,
    fps_delta: float = 0.1,
    qubit_cap: int = DEFAULT_QUBIT_CAP,
) -> RunResult:
    """Post-select phase estimation on ancilla value z and amplify.

    ``z=None`` is the unknown-energy variant: lambda_0 is first estimated to
    xi = chi eps Delta / pi and z is the nearest k-bit value.
    """
    chi = abs(trial.overlap) if chi is None else chi
    dlb = H.gap if delta_lb is None else delta_lb
    if k is None:
        k = pea_prepare_bits(chi, eps, dlb)
    led = ResourceLedger()
    info: dict = {"k": k}
    if z is None:
        est, r1 = pea_estimate_energy(H, trial, chi, chi * eps * dlb / math.pi, rng, qubit_cap=qubit_cap)
        led.add(r1.ledger)
        if est is None:
            res = RunResult(method="pea-prepare", success=False, ledger=led)
            res.info.update(info, stage1_failed=True)
            return res
        z = int(round(est * 2**k)) % 2**k
        info["estimate"] = est
    if not 0 <= z < 2**k:
        raise ValueError("z out of range")
    c = H.eigenvectors.conj().T @ trial.amplitudes
    gam = dirichlet(H.eigenvalues - z / 2**k, k)
    good = H.eigenvectors @ (gam * c)
    prep = Prep(good=good, cost=pea_unit_cost(k, H.n_qubits))
    led.note_qubits(k + H.n_qubits)
    out = overlap_doubling_fps(prep, fps_delta, rng, ledger=led)
    res = RunResult(method="pea-prepare", success=out.success, ledger=led)
    res.info.update(info, z=z, branch_norm=prep.amplitude, calls=out.calls_C)
    if out.success:
        res.state = out.residual
        res.fidelity = projector_fidelity(H, out.residual)
        res.set_energy(z / 2**k, H.lambda0)
    return res


def pea_flagged_state(H: Hamiltonian, trial: TrialState, k: int, z: int, oracle: SpectralOracle | None = None) -> tuple[QState, float]:
    """Statevector cross-check: ancilla-z branch of the full circuit."""
    if oracle is None:
        oracle = SpectralOracle(H)
    s = pea_state(oracle, trial, k)
    return flagged_branch(s, [("anc", z)])
