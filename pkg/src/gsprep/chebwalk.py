"""Ground-state preparation with (1 - (H/d)^2)^M via a Chebyshev-walk LCU.

With x = H/d for a d-sparse shifted Hamiltonian H = H~ - (E - tau),

    (1 - x^2)^M = sum_{k=0}^{M} alpha_k T_{2k}(x),
    alpha_0 = 4^-M C(2M, M),  alpha_k = (-1)^k 2^{1-2M} C(2M, M+k),

and T_k(H/d) is the top-left block of W^k for the walk W = S(2TT^dag - 1)
on C^{2N} (x) C^{2N}. The truncated sum is realized as an LCU over the
walk powers W^{2k}; negative weights are handled by a sign phase on the
selection register between B and B^dag, with alpha = sum |alpha_k|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.chebyshev import chebval
from scipy.linalg import schur
from scipy.special import gammaln

from .amplify import Prep, amplitude_amplify_unknown, overlap_doubling_fps
from .labelsearch import (
    DEFAULT_DELTA,
    ZETA_CONST,
    EnergyGrid,
    LabeledPrep,
    label_search_params,
    min_label_find,
    pow2_ceil,
)
from .lcu import log_factor
from .ledger import ResourceLedger, RunResult
from .registers import DEFAULT_QUBIT_CAP, CapacityError, HouseholderPrep
from .spectra import Hamiltonian, TrialState, projector_fidelity

#: largest dense walk space (4 N^2) built and diagonalized for the statevector engine
MAX_DENSE_WALK_N = 16
#: largest system dimension for which the walk space is built at all
MAX_WALK_N = 64
_EXACT_BINOMIAL_MAX = 600


@dataclass(frozen=True)
class ChebCoefficients:
    M: int
    m0: int
    alpha: np.ndarray  # alpha[k], k = 0..m0
    alpha_sum: float  # sum |alpha_k|
    tail_bound: float

    def __getitem__(self, k: int) -> float:
        return float(self.alpha[k])


def cheb_coefficients(M: int, m0: int | None = None) -> ChebCoefficients:
    """Chebyshev weights of (1 - x^2)^M on T_{2k}, truncated at k = m0."""
    if m0 is None:
        m0 = M
    if not 0 <= m0 <= M:
        raise ValueError("need 0 <= m0 <= M")
    ks = np.arange(m0 + 1)
    if M <= _EXACT_BINOMIAL_MAX:
        den = 4**M
        mag = np.array([math.comb(2 * M, M + int(k)) / den for k in ks])
    else:
        mag = np.exp(gammaln(2 * M + 1) - gammaln(M + ks + 1) - gammaln(M - ks + 1) - 2 * M * math.log(2))
    if not np.all(np.isfinite(mag)):
        raise OverflowError("binomial weights overflowed")
    alpha = 2 * mag * (-1.0) ** ks
    alpha[0] = mag[0]
    tail = 2 * math.exp(-(m0**2) / (2 * M)) if M > 0 else 0.0
    return ChebCoefficients(M, m0, alpha, float(np.abs(alpha).sum()), tail)


def cheb_poly(x: np.ndarray, coeffs: ChebCoefficients) -> np.ndarray:
    """sum_k alpha_k T_{2k}(x) = sum_k alpha_k T_k(2x^2 - 1)."""
    x = np.asarray(x, dtype=float)
    return chebval(2 * x * x - 1, coeffs.alpha)


# -- sparse access and the walk ------------------------------------------------


class SparseOracle:
    """Row-wise sparse access to a Hermitian matrix.

    ``nu(j, l)`` is the column of the l-th slot of row j: the nonzeros in
    increasing order, padded with unused columns (zero entries) up to d
    slots so every row has exactly d slots.
    """

    def __init__(self, matrix: np.ndarray, tol: float = 1e-12):
        A = np.asarray(matrix, dtype=complex)
        if np.max(np.abs(A - A.conj().T)) > 1e-10:
            raise ValueError("matrix is not Hermitian")
        if np.max(np.abs(A)) > 1 + 1e-12:
            raise ValueError("entries must have modulus at most 1")
        self.matrix = A
        self.N = A.shape[0]
        nz = [np.flatnonzero(np.abs(A[j]) > tol) for j in range(self.N)]
        self.d = max(1, max(len(r) for r in nz))
        slots = np.empty((self.N, self.d), dtype=int)
        for j, r in enumerate(nz):
            pad = [c for c in range(self.N) if c not in set(r)][: self.d - len(r)]
            slots[j] = np.concatenate([r, pad]).astype(int)
        self.slots = slots

    @classmethod
    def shifted(cls, H: Hamiltonian, E: float, tau: float) -> "SparseOracle":
        return cls(H.entries - (E - tau) * np.eye(H.dim))

    def nu(self, j: int, l: int) -> int:
        return int(self.slots[j, l])

    def entry(self, j: int, k: int) -> complex:
        return complex(self.matrix[j, k])


def _branch_sqrt(A: np.ndarray) -> np.ndarray:
    """s_jk with conj(s_jk) s_kj = A_jk: sqrt|A| e^{-i theta/2}, theta from the
    upper triangle and mirrored (the principal root fails on negative reals)."""
    theta = np.angle(A)
    upper = np.triu(theta, 1)
    theta = upper - upper.T
    return np.sqrt(np.abs(A)) * np.exp(-0.5j * theta)


@dataclass
class WalkSpace:
    """Walk on C^{2N} (x) C^{2N}; basis index ((j*2 + b1)*N + l)*2 + b2."""

    oracle: SparseOracle
    T: np.ndarray
    swap: np.ndarray  # permutation: (S v)[i] = v[swap[i]]

    @property
    def N(self) -> int:
        return self.oracle.N

    @property
    def d(self) -> int:
        return self.oracle.d

    @property
    def dim(self) -> int:
        return 4 * self.N**2

    @property
    def qubits(self) -> int:
        return 2 * (int(self.N).bit_length() - 1) + 2

    def apply_S(self, X: np.ndarray) -> np.ndarray:
        return X[self.swap]

    def apply_W(self, X: np.ndarray) -> np.ndarray:
        """W X = S (2 T (T^dag X) - X), without forming W."""
        return self.apply_S(2 * (self.T @ (self.T.conj().T @ X)) - X)

    @property
    def W(self) -> np.ndarray:
        if self.N > MAX_DENSE_WALK_N:
            raise MemoryError(f"dense W only built for N <= {MAX_DENSE_WALK_N}")
        return self.apply_W(np.eye(self.dim, dtype=complex))


def build_walk(oracle: SparseOracle) -> WalkSpace:
    N, d = oracle.N, oracle.d
    if N > MAX_WALK_N:
        raise MemoryError(f"walk space only built for N <= {MAX_WALK_N}")
    s = _branch_sqrt(oracle.matrix)
    T = np.zeros((4 * N * N, N), dtype=complex)
    for j in range(N):
        for l in oracle.slots[j]:
            base = ((j * 2 + 0) * N + l) * 2
            T[base + 0, j] = s[j, l] / math.sqrt(d)
            T[base + 1, j] = math.sqrt(max(0.0, 1 - abs(oracle.matrix[j, l]))) / math.sqrt(d)
    idx = np.arange(4 * N * N)
    b2 = idx % 2
    l = (idx // 2) % N
    b1 = (idx // (2 * N)) % 2
    j = idx // (4 * N)
    swap = ((l * 2 + b2) * N + j) * 2 + b1
    return WalkSpace(oracle, T, swap)


def chebyshev_of_matrix(A: np.ndarray, k: int) -> np.ndarray:
    """T_k(A) for Hermitian A with spectrum in [-1, 1]."""
    w, V = np.linalg.eigh(A)
    return (V * np.cos(k * np.arccos(np.clip(w, -1, 1)))) @ V.conj().T


def walk_block_check(ws: WalkSpace, k: int) -> float:
    """|| T^dag W^k T - T_k(H/d) ||_op."""
    X = ws.T.copy()
    for _ in range(k):
        X = ws.apply_W(X)
    block = ws.T.conj().T @ X
    ref = chebyshev_of_matrix(ws.oracle.matrix / ws.d, k)
    return float(np.linalg.norm(block - ref, 2))


# -- preparation ------------------------------------------------------------------


@dataclass(frozen=True)
class ChebParams:
    tau: float
    M: int
    m0: int
    d: int
    E: float
    log_factor: float

    @property
    def b(self) -> int:
        return max(1, math.ceil(math.log2(self.m0 + 1)))


def choose_cheb_parameters(Delta_lb: float, chi: float, eps: float, d: int, E: float = 0.0) -> ChebParams:
    """tau = D/(2L), M = 2 ceil(2 d^2 L^2 / D^2), m0 = ceil(2 sqrt(M L)) capped at M."""
    L = log_factor(chi, eps)
    tau = Delta_lb / (2 * L)
    M = 2 * math.ceil(2 * d * d * L * L / Delta_lb**2)
    m0 = min(M, math.ceil(2 * math.sqrt(M * L)))
    return ChebParams(tau, M, m0, d, E, L)


def cheb_unit_cost(m0: int, n_sys: int) -> ResourceLedger:
    b = max(1, math.ceil(math.log2(m0 + 1)))
    return ResourceLedger(walk_steps=2 * m0, trial_calls=1, gate_proxy=2 * 2**b + b, qubits_peak=b + 2 * n_sys + 2)


def _select_prep(coeffs: ChebCoefficients) -> tuple[HouseholderPrep, np.ndarray]:
    b = max(1, math.ceil(math.log2(coeffs.m0 + 1)))
    col = np.zeros(2**b, dtype=complex)
    col[: coeffs.m0 + 1] = np.sqrt(np.abs(coeffs.alpha) / coeffs.alpha_sum)
    col /= np.linalg.norm(col)
    signs = np.ones(2**b)
    signs[: coeffs.m0 + 1] = np.sign(coeffs.alpha)
    return HouseholderPrep(col), signs


def cheb_branch(
    H: Hamiltonian,
    trial: TrialState,
    params: ChebParams,
    coeffs: ChebCoefficients,
    engine: str = "auto",
    ws: WalkSpace | None = None,
    qubit_cap: int = DEFAULT_QUBIT_CAP,
) -> np.ndarray:
    """(1/alpha) sum_k alpha_k T_{2k}(H/d) |phi>: the flagged system branch.

    ``statevector`` runs B, the controlled walk powers W^{2k} (through the
    eigendecomposition of W), the sign phases and B^dag on the selection
    register, then projects the walk register onto the range of T.
    """
    b = params.b
    walk_qubits = 2 * H.n_qubits + 2
    if engine == "auto":
        engine = "statevector" if H.dim <= MAX_DENSE_WALK_N and b + walk_qubits <= qubit_cap else "branch"
    if engine == "branch":
        h = H.eigenvalues - params.E + params.tau
        c = H.eigenvectors.conj().T @ trial.amplitudes
        return H.eigenvectors @ (cheb_poly(h / params.d, coeffs) * c) / coeffs.alpha_sum
    if engine != "statevector":
        raise ValueError(f"unknown engine {engine!r}")
    if b + walk_qubits > qubit_cap:
        raise CapacityError(f"walk LCU needs {b + walk_qubits} qubits, cap is {qubit_cap}")
    if ws is None:
        ws = build_walk(SparseOracle.shifted(H, params.E, params.tau))
    Tw, Z = schur(ws.W, output="complex")
    phases = np.diag(Tw)
    B, signs = _select_prep(coeffs)
    z0 = Z.conj().T @ (ws.T @ trial.amplitudes)
    e0 = np.zeros(B.dim, dtype=complex)
    e0[0] = 1.0
    sel = B.matmat(e0)
    k = np.arange(B.dim)
    powers = np.where(k <= coeffs.m0, 2 * k, 0)
    # label-resolved state after the controlled walks, in the eigenbasis of W
    walked = (sel * signs)[:, None] * np.power(phases[None, :], powers[:, None]) * z0[None, :]
    flagged = Z @ B.adjoint().matmat(walked)[0]
    return ws.T.conj().T @ flagged


def prepare_ground_cheb(
    H: Hamiltonian,
    trial: TrialState,
    E: float,
    chi: float,
    eps: float,
    rng: np.random.Generator | None = None,
    delta_lb: float | None = None,
    mode: str = "fps",
    engine: str = "auto",
    fps_delta: float = 0.1,
    qubit_cap: int = DEFAULT_QUBIT_CAP,
) -> RunResult:
    if rng is None:
        rng = np.random.default_rng(0)
    dlb = H.gap if delta_lb is None else delta_lb
    tau = dlb / (2 * log_factor(chi, eps))
    oracle = SparseOracle.shifted(H, E, tau)
    params = choose_cheb_parameters(dlb, chi, eps, oracle.d, E)
    coeffs = cheb_coefficients(params.M, params.m0)
    ws = build_walk(oracle) if engine != "branch" and H.dim <= MAX_DENSE_WALK_N else None
    good = cheb_branch(H, trial, params, coeffs, engine, ws, qubit_cap)
    prep = Prep(good=good, cost=cheb_unit_cost(params.m0, H.n_qubits))
    led = ResourceLedger()
    led.note_qubits(prep.cost.qubits_peak)
    if mode == "fps":
        out = overlap_doubling_fps(prep, fps_delta, rng, ledger=led)
    elif mode == "aa":
        out = amplitude_amplify_unknown(prep, rng, ledger=led)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    res = RunResult(method="chebwalk", success=out.success, ledger=led)
    res.info.update(M=params.M, m0=params.m0, d=params.d, tau=params.tau, branch_norm=prep.amplitude, calls=out.calls_C)
    if out.success:
        res.state = out.residual
        res.fidelity = projector_fidelity(H, out.residual)
    return res


def prepare_ground_cheb_unknown(
    H: Hamiltonian,
    trial: TrialState,
    chi: float,
    eps: float,
    Delta_lb: float,
    rng: np.random.Generator,
    delta: float = DEFAULT_DELTA,
) -> RunResult:
    """Unknown-energy variant: grid of E_j over [0, 1/2] with bin width about
    d/sqrt(M), searched with the minimum-label routine."""
    d = SparseOracle(H.entries + np.eye(H.dim) * 1e-3).d  # shifted diagonal is always present
    params = choose_cheb_parameters(Delta_lb, chi, eps, d)
    coeffs = cheb_coefficients(params.M, params.m0)
    L = pow2_ceil(0.5 * math.sqrt(params.M) / d)
    grid = EnergyGrid.over(0.0, 0.5, L)
    c = H.eigenvectors.conj().T @ trial.amplitudes
    h = H.eigenvalues[None, :] - grid.values[:, None] + params.tau
    f = cheb_poly(h / d, coeffs) / coeffs.alpha_sum
    branches = (f * c[None, :]) @ H.eigenvectors.T / math.sqrt(L)
    cost = cheb_unit_cost(params.m0, H.n_qubits)
    cost.qubits_peak += grid.n
    prep = LabeledPrep(branches, cost)
    out = min_label_find(prep, label_search_params(grid.n, min(1.0, ZETA_CONST * chi / math.sqrt(L)), delta), rng)
    res = RunResult(method="chebwalk-unknown", success=out.success, ledger=out.ledger)
    res.ledger.note_qubits(cost.qubits_peak)
    res.info.update(M=params.M, m0=params.m0, L=L, d=d)
    if out.success:
        res.state = out.state
        res.fidelity = projector_fidelity(H, out.state)
        res.set_energy(grid[out.j], H.lambda0)
    return res
