"""Dense multi-register statevector engine.

A :class:`QState` stores its amplitudes as a tensor with one axis per
register, in layout order. Register values index the axis directly (qubit
``j`` of a register carries bit ``j`` of the value). The conventional order
used throughout the package is (label, LCU ancilla, flag/walk ancillas,
system).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .ledger import ResourceLedger

DEFAULT_QUBIT_CAP = 24
_UNITARY_TOL = 1e-12


class CapacityError(RuntimeError):
    """A circuit needs more qubits than the configured cap."""


@dataclass(frozen=True)
class RegisterLayout:
    registers: tuple[tuple[str, int], ...]
    cap: int = DEFAULT_QUBIT_CAP

    def __init__(self, registers: Iterable[tuple[str, int]], cap: int = DEFAULT_QUBIT_CAP):
        regs = tuple((str(n), int(q)) for n, q in registers)
        names = [n for n, _ in regs]
        if len(set(names)) != len(names):
            raise ValueError(f"register names must be unique: {names}")
        if any(q < 0 for _, q in regs):
            raise ValueError("qubit counts must be non-negative")
        object.__setattr__(self, "registers", regs)
        object.__setattr__(self, "cap", int(cap))
        if self.total_qubits > self.cap:
            raise CapacityError(f"layout needs {self.total_qubits} qubits, cap is {self.cap}")

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.registers]

    @property
    def total_qubits(self) -> int:
        return sum(q for _, q in self.registers)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(2**q for _, q in self.registers)

    def axis(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"no register named {name!r}") from None

    def dim(self, name: str) -> int:
        return self.shape[self.axis(name)]

    def without(self, names: Iterable[str]) -> "RegisterLayout":
        drop = set(names)
        return RegisterLayout([r for r in self.registers if r[0] not in drop], cap=self.cap)


class QState:
    """Amplitudes over a :class:`RegisterLayout`.

    ``normalized`` is False for flagged branches, whose norm is the branch
    amplitude rather than 1.
    """

    def __init__(self, layout: RegisterLayout, amplitudes: np.ndarray, normalized: bool = True):
        amps = np.asarray(amplitudes, dtype=complex)
        if amps.size != math.prod(layout.shape):
            raise ValueError(f"expected {math.prod(layout.shape)} amplitudes, got {amps.size}")
        self.layout = layout
        self.tensor = amps.reshape(layout.shape)
        self.normalized = normalized

    @classmethod
    def zero(cls, layout: RegisterLayout) -> "QState":
        amps = np.zeros(layout.shape, dtype=complex)
        amps[(0,) * len(layout.shape)] = 1.0
        return cls(layout, amps)

    @classmethod
    def product(cls, layout: RegisterLayout, parts: Mapping[str, np.ndarray | int]) -> "QState":
        """Product state; registers not in ``parts`` start in |0>, ints mean basis states."""
        out = np.ones((), dtype=complex)
        for name, q in layout.registers:
            part = parts.get(name, 0)
            if isinstance(part, (int, np.integer)):
                vec = np.zeros(2**q, dtype=complex)
                vec[int(part)] = 1.0
            else:
                vec = np.asarray(part, dtype=complex)
                if vec.shape != (2**q,):
                    raise ValueError(f"register {name} expects a vector of length {2**q}")
            out = np.multiply.outer(out, vec)
        return cls(layout, out)

    @property
    def vector(self) -> np.ndarray:
        return self.tensor.reshape(-1)

    def norm(self) -> float:
        return float(np.linalg.norm(self.tensor))

    def copy(self) -> "QState":
        return QState(self.layout, self.tensor.copy(), self.normalized)

    def renormalized(self) -> "QState":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("cannot renormalize a zero state")
        return QState(self.layout, self.tensor / n, True)

    def __repr__(self) -> str:
        return f"QState({self.layout.registers}, norm={self.norm():.6g})"


class RegisterOperator:
    """Structured operator acting on one register (no dense matrix needed).

    Subclasses implement ``matmat(x)`` for an array whose first axis is the
    register and ``adjoint()``.
    """

    dim: int

    def matmat(self, x: np.ndarray) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError

    def adjoint(self) -> "RegisterOperator":  # pragma: no cover - interface
        raise NotImplementedError

    def dense(self) -> np.ndarray:
        return self.matmat(np.eye(self.dim, dtype=complex))


class HouseholderPrep(RegisterOperator):
    """Unitary whose first column is a given unit vector ``v``.

    Implemented as -phase * R with the reflection R = I - 2 w w^dag / (w^dag w),
    w = e0 + u and u = v / phase, where phase makes u[0] real and
    non-negative. Then R e0 = -u, and |w[0]| >= 1 avoids cancellation
    even when v is close to e0.
    """

    def __init__(self, v: np.ndarray, _adjoint: bool = False):
        v = np.asarray(v, dtype=complex)
        nv = np.linalg.norm(v)
        if abs(nv - 1) > 1e-10:
            raise ValueError(f"first column must be a unit vector (norm {nv})")
        self.v = v
        self.dim = len(v)
        self._adj = _adjoint
        a = v[0]
        self._phase = np.exp(1j * np.angle(a)) if abs(a) > 0 else 1.0
        w = v / self._phase
        w[0] += 1.0
        self._w = w
        self._nw = np.vdot(w, w).real

    def _reflect(self, x: np.ndarray) -> np.ndarray:
        coef = np.tensordot(self._w.conj(), x, axes=(0, 0))
        return x - (2.0 / self._nw) * np.multiply.outer(self._w, coef)

    def matmat(self, x: np.ndarray) -> np.ndarray:
        # Q = -phase * R with R Hermitian, so Q^dag = -conj(phase) * R
        if self._adj:
            return -np.conj(self._phase) * self._reflect(x)
        return -self._phase * self._reflect(x)

    def adjoint(self) -> "HouseholderPrep":
        return HouseholderPrep(self.v, not self._adj)


def _apply_axis(tensor: np.ndarray, axis: int, U) -> np.ndarray:
    moved = np.moveaxis(tensor, axis, 0)
    shape = moved.shape
    flat = moved.reshape(shape[0], -1)
    if isinstance(U, RegisterOperator):
        out = U.matmat(flat)
    else:
        out = U @ flat
    return np.moveaxis(out.reshape(shape), 0, axis)


def check_unitary(U: np.ndarray, tol: float = _UNITARY_TOL) -> None:
    U = np.asarray(U)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise ValueError("operator must be a square matrix")
    dev = np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0])))
    if dev > tol:
        raise ValueError(f"operator is not unitary (deviation {dev:.3g})")


def apply_on_register(s: QState, reg: str, U, check: bool = True) -> QState:
    """Apply U (tensor identity elsewhere) to register ``reg``."""
    ax = s.layout.axis(reg)
    d = s.layout.shape[ax]
    dim = U.dim if isinstance(U, RegisterOperator) else np.asarray(U).shape[0]
    if dim != d:
        raise ValueError(f"operator dimension {dim} does not match register {reg} ({d})")
    if check and not isinstance(U, RegisterOperator):
        check_unitary(U)
    return QState(s.layout, _apply_axis(s.tensor, ax, U), s.normalized)


def apply_label_controlled(
    s: QState,
    label_reg: str,
    target_reg: str,
    family: Callable[[int], np.ndarray],
    check: bool = True,
) -> QState:
    """sum_k |k><k| (x) family(k), applied branch by branch."""
    la, ta = s.layout.axis(label_reg), s.layout.axis(target_reg)
    out = s.tensor.copy()
    for k in range(s.layout.shape[la]):
        U = np.asarray(family(k))
        if check:
            check_unitary(U)
        idx = [slice(None)] * out.ndim
        idx[la] = k
        branch = out[tuple(idx)]
        t_ax = ta if ta < la else ta - 1
        out[tuple(idx)] = _apply_axis(branch, t_ax, U)
    return QState(s.layout, out, s.normalized)


def apply_controlled_evolution(
    s: QState,
    label_reg: str,
    target_reg: str,
    oracle,
    times: np.ndarray,
    ledger: ResourceLedger | None = None,
) -> QState:
    """sum_k |k><k| (x) exp(-i H times[k]) for the oracle's Hamiltonian.

    Charged as one sequence of controlled evolutions of total length
    max_k |times[k]| (binary-controlled powers share the same calls).
    """
    la, ta = s.layout.axis(label_reg), s.layout.axis(target_reg)
    times = np.asarray(times, dtype=float)
    if times.shape != (s.layout.shape[la],):
        raise ValueError("need one evolution time per label value")
    H = oracle.hamiltonian
    if s.layout.shape[ta] != H.dim:
        raise ValueError("target register does not match the Hamiltonian dimension")
    # move label to axis 0 and target to the last axis
    t = np.moveaxis(s.tensor, (la, ta), (0, -1))
    shape = t.shape
    flat = t.reshape(shape[0], -1, shape[-1])
    V = H.eigenvectors
    c = flat @ V.conj()
    c = c * np.exp(-1j * np.multiply.outer(times, H.eigenvalues))[:, None, :]
    out = c @ V.T
    if oracle.error_injection > 0:
        w, K = oracle._perturbation  # type: ignore[attr-defined]
        c = out @ K.conj()
        c = c * np.exp(-1j * oracle.error_injection * np.multiply.outer(times, w))[:, None, :]
        out = c @ K.T
    out = np.moveaxis(out.reshape(shape), (0, -1), (la, ta))
    if ledger is not None:
        ledger.charge_time(float(np.max(np.abs(times))) if len(times) else 0.0)
    return QState(s.layout, out, s.normalized)


def apply_phase(
    s: QState, regs: Sequence[str], phases: np.ndarray, ledger: ResourceLedger | None = None
) -> QState:
    """Diagonal phase over the joint values of ``regs`` (no simulation time)."""
    axes = [s.layout.axis(r) for r in regs]
    phases = np.asarray(phases, dtype=complex)
    if phases.shape != tuple(s.layout.shape[a] for a in axes):
        raise ValueError("phase array shape does not match the registers")
    shape = [1] * s.tensor.ndim
    order = np.argsort(axes)
    ph = np.transpose(phases, order)
    for a in sorted(axes):
        shape[a] = s.layout.shape[a]
    out = s.tensor * ph.reshape(shape)
    if ledger is not None:
        ledger.charge_gates(sum(int(np.log2(s.layout.shape[a])) for a in axes))
    return QState(s.layout, out, s.normalized)


def good_mask(layout: RegisterLayout, spec: Mapping[str, Iterable[int] | int]) -> np.ndarray:
    """Boolean tensor selecting basis states whose listed registers take allowed values."""
    mask = np.ones(layout.shape, dtype=bool)
    for name, vals in spec.items():
        ax = layout.axis(name)
        allowed = np.zeros(layout.shape[ax], dtype=bool)
        if isinstance(vals, (int, np.integer)):
            allowed[int(vals)] = True
        else:
            allowed[list(vals)] = True
        shape = [1] * len(layout.shape)
        shape[ax] = layout.shape[ax]
        mask &= allowed.reshape(shape)
    return mask


def flagged_branch(s: QState, regs_and_values: Sequence[tuple[str, int]]) -> tuple[QState, float]:
    """Unnormalized projection onto fixed register values, with those registers removed."""
    idx: list = [slice(None)] * s.tensor.ndim
    for name, val in regs_and_values:
        ax = s.layout.axis(name)
        if not 0 <= val < s.layout.shape[ax]:
            raise ValueError(f"value {val} out of range for register {name}")
        idx[ax] = int(val)
    branch = s.tensor[tuple(idx)]
    rest = s.layout.without(n for n, _ in regs_and_values)
    out = QState(rest, branch.copy(), normalized=False)
    return out, out.norm()


def register_probabilities(s: QState, reg: str) -> np.ndarray:
    ax = s.layout.axis(reg)
    p = np.abs(np.moveaxis(s.tensor, ax, 0).reshape(s.layout.shape[ax], -1)) ** 2
    return p.sum(axis=1)


def measure_register(s: QState, reg: str, rng: np.random.Generator) -> tuple[int, QState]:
    """Sample ``reg`` with Born probabilities and collapse (renormalized)."""
    p = register_probabilities(s, reg)
    p = p / p.sum()
    outcome = int(rng.choice(len(p), p=p))
    ax = s.layout.axis(reg)
    mask = np.zeros(s.layout.shape[ax], dtype=bool)
    mask[outcome] = True
    shape = [1] * s.tensor.ndim
    shape[ax] = len(mask)
    collapsed = s.tensor * mask.reshape(shape)
    return outcome, QState(s.layout, collapsed, True).renormalized()


def dump_amplitudes(s: QState, tol: float = 0.0) -> str:
    """Debug dump, one ``index re im`` line per amplitude (hex floats, exact)."""
    lines = [f"# registers {' '.join(f'{n}:{q}' for n, q in s.layout.registers)}"]
    for i, a in enumerate(s.vector):
        if abs(a) > tol or tol == 0.0:
            lines.append(f"{i} {float(a.real).hex()} {float(a.imag).hex()}")
    return "\n".join(lines) + "\n"


def load_amplitudes(text: str, layout: RegisterLayout) -> QState:
    amps = np.zeros(math.prod(layout.shape), dtype=complex)
    for line in text.splitlines():
        if not line or line.startswith("#"):
            continue
        i, re, im = line.split()
        amps[int(i)] = complex(float.fromhex(re), float.fromhex(im))
    return QState(layout, amps)


def hadamard_all(q: int) -> np.ndarray:
    """Walsh-Hadamard transform on a q-qubit register."""
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    out = np.ones((1, 1), dtype=complex)
    for _ in range(q):
        out = np.kron(out, h)
    return out
