"""Resource accounting shared by every algorithm in the package.

Costs are counted in abstract units rather than gates:

* ``hamsim_time`` -- total |t| of Hamiltonian-simulation time (one unit = one
  call to unit-time evolution, the Lambda coefficient),
* ``trial_calls`` -- calls to the trial-state circuit (the Phi coefficient),
* ``walk_steps`` -- applications of the quantum-walk unitary,
* ``gate_proxy`` -- a rough elementary-gate counter for the cheap parts
  (state preparation of ancillas, controlled phases, Fourier transforms),
* ``qubits_peak`` -- algorithmic qubit count of the largest circuit used.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any


@dataclass
class ResourceLedger:
    hamsim_time: float = 0.0
    trial_calls: int = 0
    walk_steps: int = 0
    gate_proxy: int = 0
    qubits_peak: int = 0

    def charge_time(self, t: float) -> None:
        self.hamsim_time += abs(float(t))

    def charge_trial(self, n: int = 1) -> None:
        self.trial_calls += int(n)

    def charge_walk(self, n: int) -> None:
        self.walk_steps += int(n)

    def charge_gates(self, n: int) -> None:
        self.gate_proxy += int(n)

    def note_qubits(self, n: int) -> None:
        self.qubits_peak = max(self.qubits_peak, int(n))

    def add(self, other: "ResourceLedger", times: int = 1) -> None:
        """Accumulate ``times`` copies of ``other`` (qubits take the max)."""
        self.hamsim_time += times * other.hamsim_time
        self.trial_calls += times * other.trial_calls
        self.walk_steps += times * other.walk_steps
        self.gate_proxy += times * other.gate_proxy
        self.note_qubits(other.qubits_peak)

    def copy(self) -> "ResourceLedger":
        return ResourceLedger(**asdict(self))

    def as_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass
class RunResult:
    """Outcome of one seeded algorithm run."""

    method: str
    success: bool
    fidelity: float = 0.0
    energy_estimate: float | None = None
    energy_error: float | None = None
    ledger: ResourceLedger = field(default_factory=ResourceLedger)
    seed: int | None = None
    wall_time: float = 0.0
    state: Any = None
    info: dict[str, Any] = field(default_factory=dict)

    def set_energy(self, estimate: float, lambda0: float | None) -> None:
        self.energy_estimate = float(estimate)
        if lambda0 is not None:
            self.energy_error = abs(float(estimate) - float(lambda0))
