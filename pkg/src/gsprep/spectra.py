"""Hamiltonian models, trial states and the exact time-evolution oracle.

Every Hamiltonian carries its spectral decomposition. Algorithms only ever
touch it through :func:`evolve` (which charges simulation time) or, for the
sparse-access walk model, through its matrix entries. :func:`ground_truth` is
for verification only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np
from scipy.stats import unitary_group

from .ledger import ResourceLedger

#: headroom kept below 1 so the shift used by the projection methods fits
SPECTRAL_MARGIN = 0.05
#: largest dense dimension handled
MAX_DIM = 4096

_ZERO_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    dim: int
    entries: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    ground_degeneracy: int = 1
    model: str = "dense"
    seed: int | None = None
    walk_mode: bool = False
    params: dict[str, Any] = field(default_factory=dict)

    @property
    def gap(self) -> float:
        g = self.ground_degeneracy
        if g >= self.dim:
            return 0.0
        return float(self.eigenvalues[g] - self.eigenvalues[0])

    @property
    def lambda0(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def n_qubits(self) -> int:
        return int(self.dim).bit_length() - 1

    @property
    def sparsity(self) -> int:
        nnz = np.abs(self.entries) > _ZERO_TOL
        return int(nnz.sum(axis=1).max())


@dataclass(frozen=True, eq=False)
class TrialState:
    amplitudes: np.ndarray
    overlap: complex
    prep_cost: int = 1


@dataclass(frozen=True, eq=False)
class SpectralOracle:
    """Black-box access to exp(-i H t), optionally with a seeded coherent error.

    With ``error_injection = e`` every call to :func:`evolve` for time ``t`` is
    followed by exp(-i e t K) for a fixed random Hermitian K with ||K|| = 1, a
    unitary perturbation of operator norm at most ``e |t|``.
    """

    hamiltonian: Hamiltonian
    error_injection: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.error_injection < 0:
            raise ValueError("error_injection must be non-negative")
        if self.error_injection > 0:
            rng = np.random.default_rng(self.seed)
            n = self.hamiltonian.dim
            a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            k = (a + a.conj().T) / 2
            w, v = np.linalg.eigh(k)
            w = w / np.max(np.abs(w))
            object.__setattr__(self, "_perturbation", (w, v))


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _top(walk: bool) -> float:
    return 0.5 if walk else 1.0 - SPECTRAL_MARGIN


def normalize_spectrum(entries: np.ndarray, walk: bool = False) -> tuple[np.ndarray, float, float]:
    """Affinely map a Hermitian matrix so its spectrum spans [0, top].

    Returns the normalized matrix together with ``(scale, shift)`` such that
    ``normalized = (entries - shift) * scale``.
    """
    w = np.linalg.eigvalsh(entries)
    lo, hi = float(w[0]), float(w[-1])
    width = hi - lo
    scale = _top(walk) / width if width > 0 else 1.0
    n = entries.shape[0]
    return (entries - lo * np.eye(n)) * scale, scale, lo


def _from_decomposition(
    evals: np.ndarray, evecs: np.ndarray, *, degeneracy: int, model: str, seed, walk: bool, params
) -> Hamiltonian:
    entries = (evecs * evals) @ evecs.conj().T
    entries = (entries + entries.conj().T) / 2
    return Hamiltonian(
        dim=len(evals),
        entries=entries,
        eigenvalues=np.asarray(evals, dtype=float),
        eigenvectors=evecs,
        ground_degeneracy=degeneracy,
        model=model,
        seed=seed,
        walk_mode=walk,
        params=dict(params),
    )


def _from_entries(entries: np.ndarray, *, degeneracy: int, model: str, seed, walk: bool, params) -> Hamiltonian:
    entries = (entries + entries.conj().T) / 2
    w, v = np.linalg.eigh(entries)
    top = _top(walk)
    if w[0] < -1e-12 or w[-1] > top + 1e-12:
        entries, _, _ = normalize_spectrum(entries, walk)
        w, v = np.linalg.eigh(entries)
    return Hamiltonian(
        dim=entries.shape[0],
        entries=entries,
        eigenvalues=w,
        eigenvectors=v,
        ground_degeneracy=degeneracy,
        model=model,
        seed=seed,
        walk_mode=walk,
        params=dict(params),
    )


def _pauli_chain(n: int, J: float, h: float) -> np.ndarray:
    dim = 2**n
    idx = np.arange(dim)
    bits = (idx[:, None] >> np.arange(n)[None, :]) & 1
    spins = 1 - 2 * bits
    diag = -J * np.sum(spins[:, :-1] * spins[:, 1:], axis=1)
    H = np.diag(diag).astype(complex)
    for q in range(n):
        H[idx, idx ^ (1 << q)] += -h
    return H


def build_hamiltonian(spec: Mapping[str, Any]) -> Hamiltonian:
    """Build a normalized test Hamiltonian from a model descriptor.

    Supported ``spec["model"]`` values:

    ``"diagonal"``
        ``eigenvalues`` on the diagonal (normalized only if out of range).
    ``"random"`` (alias ``"random-hermitian"``)
        ``dim``, ``gap``, ``seed``; optional ``ground_energy``. The spectrum is
        drawn explicitly and conjugated by a seeded Haar-random unitary.
    ``"tfim"``
        transverse-field Ising chain on ``n_sys`` qubits (``J``, ``h``).
    ``"adversarial"``
        ``(H' + c)/2^k`` with integer-spectrum ``H'`` drawn from
        ``{2^(k-2), ..., 2^(k-1)-1}``; needs ``k``, ``c``, ``dim``.
    ``"dense"``
        explicit ``entries``.

    Every model accepts ``degeneracy`` (declared size of the ground block) and
    ``walk`` (spectrum confined to [0, 1/2] for the sparse-walk method).
    """
    spec = dict(spec)
    model = spec.get("model", "random")
    walk = bool(spec.get("walk", False))
    g = int(spec.get("degeneracy", 1))
    seed = spec.get("seed")
    top = _top(walk)
    params = {k: v for k, v in spec.items() if k not in ("entries",)}

    if model == "diagonal":
        ev = np.asarray(spec["eigenvalues"], dtype=float)
        if not _is_power_of_two(len(ev)):
            raise ValueError(f"dimension {len(ev)} is not a power of two")
        order = np.argsort(ev, kind="stable")
        ev = ev[order]
        if ev[0] < 0 or ev[-1] > top:
            entries, _, _ = normalize_spectrum(np.diag(ev).astype(complex), walk)
            ev = np.real(np.diag(entries))
        evecs = np.eye(len(ev), dtype=complex)[:, order]
        return _from_decomposition(ev, evecs, degeneracy=g, model=model, seed=seed, walk=walk, params=params)

    if model in ("random", "random-hermitian"):
        dim = int(spec["dim"])
        if not _is_power_of_two(dim) or dim > MAX_DIM:
            raise ValueError(f"dimension {dim} is not a power of two <= {MAX_DIM}")
        gap = float(spec["gap"])
        rng = np.random.default_rng(seed)
        lam0 = float(spec.get("ground_energy", rng.uniform(0.05, 0.25) * top))
        if gap <= 0 or lam0 + gap > top or dim < g + 1:
            raise ValueError(f"gap {gap} incompatible with dim {dim} and spectrum [0, {top}]")
        rest = np.sort(rng.uniform(lam0 + gap, top, size=dim - g - 1))
        ev = np.concatenate([np.full(g, lam0), [lam0 + gap], rest])
        u = unitary_group.rvs(dim, random_state=rng) if dim > 1 else np.eye(1, dtype=complex)
        return _from_decomposition(ev, u, degeneracy=g, model=model, seed=seed, walk=walk, params=params)

    if model == "tfim":
        n = int(spec["n_sys"])
        H = _pauli_chain(n, float(spec.get("J", 1.0)), float(spec.get("h", 0.5)))
        entries, _, _ = normalize_spectrum(H, walk)
        return _from_entries(entries, degeneracy=g, model=model, seed=seed, walk=walk, params=params)

    if model == "adversarial":
        k = int(spec["k"])
        c = float(spec["c"])
        if not 0 < c < 0.5:
            raise ValueError("c must lie in (0, 1/2)")
        dim = int(spec.get("dim", min(2 ** max(k - 2, 0), 16)))
        if not _is_power_of_two(dim):
            raise ValueError(f"dimension {dim} is not a power of two")
        rng = np.random.default_rng(seed)
        lo, hi = 2 ** (k - 2), 2 ** (k - 1)
        ints = np.sort(rng.integers(lo, hi, size=dim))
        ev = (ints + c) / 2**k
        u = unitary_group.rvs(dim, random_state=rng) if dim > 1 else np.eye(1, dtype=complex)
        return _from_decomposition(ev, u, degeneracy=g, model=model, seed=seed, walk=walk, params=params)

    if model == "dense":
        entries = np.asarray(spec["entries"], dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError("entries must be square")
        if not _is_power_of_two(entries.shape[0]):
            raise ValueError(f"dimension {entries.shape[0]} is not a power of two")
        if np.max(np.abs(entries - entries.conj().T)) > 1e-12:
            raise ValueError("entries are not Hermitian")
        return _from_entries(entries, degeneracy=g, model=model, seed=seed, walk=walk, params=params)

    raise ValueError(f"unknown model {model!r}")


def make_trial_state(H: Hamiltonian, overlap: float, seed: int | None = None) -> TrialState:
    """phi0 |lambda_0> + sqrt(1 - phi0^2) |r>, |r> random and orthogonal to the ground space."""
    if not 0 < overlap <= 1:
        raise ValueError("overlap must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    g = H.ground_degeneracy
    ground = H.eigenvectors[:, 0]
    if overlap == 1 or g >= H.dim:
        amps = ground.astype(complex).copy()
    else:
        coeffs = rng.normal(size=H.dim - g) + 1j * rng.normal(size=H.dim - g)
        r = H.eigenvectors[:, g:] @ coeffs
        r /= np.linalg.norm(r)
        amps = overlap * ground + np.sqrt(1 - overlap**2) * r
    amps = amps / np.linalg.norm(amps)
    return TrialState(amplitudes=amps, overlap=complex(np.vdot(ground, amps)))


def evolve(oracle: SpectralOracle, t: float, v: np.ndarray, ledger: ResourceLedger | None = None) -> np.ndarray:
    """exp(-i H t) applied along the last axis of ``v``; charges |t| to the ledger."""
    H = oracle.hamiltonian
    V = H.eigenvectors
    c = v @ V.conj()
    c = c * np.exp(-1j * H.eigenvalues * t)
    out = c @ V.T
    if oracle.error_injection > 0:
        w, K = oracle._perturbation  # type: ignore[attr-defined]
        out = ((out @ K.conj()) * np.exp(-1j * oracle.error_injection * t * w)) @ K.T
    if ledger is not None:
        ledger.charge_time(t)
    return out


def ground_truth(H: Hamiltonian) -> tuple[float, np.ndarray, float]:
    """(lambda_0, ground-space projector, gap). Verification only."""
    G = H.eigenvectors[:, : H.ground_degeneracy]
    return H.lambda0, G @ G.conj().T, H.gap


def projector_fidelity(H: Hamiltonian, state: np.ndarray) -> float:
    """||P |state>||^2 for a normalized system state."""
    G = H.eigenvectors[:, : H.ground_degeneracy]
    amp = G.conj().T @ state
    return float(min(1.0, np.real(np.vdot(amp, amp))))


# -- structured-text serialization ------------------------------------------


def _hex_list(a: np.ndarray) -> list[str]:
    return [float(x).hex() for x in np.ravel(a)]


def _from_hex(xs: list[str]) -> np.ndarray:
    return np.array([float.fromhex(x) for x in xs])


def dump_hamiltonian(H: Hamiltonian, include_entries: bool = True) -> str:
    doc: dict[str, Any] = {
        "dim": H.dim,
        "model": H.model,
        "seed": H.seed,
        "degeneracy": H.ground_degeneracy,
        "walk": H.walk_mode,
        "spectrum": _hex_list(H.eigenvalues),
    }
    if include_entries:
        doc["eigenvectors_re"] = _hex_list(H.eigenvectors.real)
        doc["eigenvectors_im"] = _hex_list(H.eigenvectors.imag)
        doc["entries_re"] = _hex_list(H.entries.real)
        doc["entries_im"] = _hex_list(H.entries.imag)
    return json.dumps(doc, indent=1)


def load_hamiltonian(text: str) -> Hamiltonian:
    doc = json.loads(text)
    n = int(doc["dim"])
    evals = _from_hex(doc["spectrum"])
    common = dict(
        degeneracy=int(doc.get("degeneracy", 1)),
        model=doc.get("model", "dense"),
        seed=doc.get("seed"),
        walk=bool(doc.get("walk", False)),
        params={},
    )
    if "eigenvectors_re" not in doc:
        return _from_decomposition(evals, np.eye(n, dtype=complex), **common)
    evecs = (_from_hex(doc["eigenvectors_re"]) + 1j * _from_hex(doc["eigenvectors_im"])).reshape(n, n)
    entries = (_from_hex(doc["entries_re"]) + 1j * _from_hex(doc["entries_im"])).reshape(n, n)
    return Hamiltonian(
        dim=n,
        entries=entries,
        eigenvalues=evals,
        eigenvectors=evecs,
        ground_degeneracy=common["degeneracy"],
        model=common["model"],
        seed=common["seed"],
        walk_mode=common["walk"],
    )
