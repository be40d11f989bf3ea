"""Amplitude amplification: fixed-point search and the unknown-amplitude scheme.

Every routine here works on a :class:`Prep`, i.e. a state-preparation
unitary ``C`` together with a flagged subspace (projector ``Pi``). The
searches only ever need ``C|0>`` and reflections about it and about the
flagged subspace, so the engines below are interchangeable:

* ``"subspace"`` -- the whole evolution stays inside the plane spanned by
  ``Pi C|0>`` and ``(1 - Pi) C|0>``; it is simulated exactly as a 2-vector.
  Only the flagged component of ``C|0>`` is needed.
* ``"sequence"`` -- the literal alternation ``C, phase, C^dag, phase`` on the
  full statevector (requires a Prep built from a complete state).

For a one-dimensional rotation the subspace result is known in closed form,
so a third engine, ``"closed"`` (the default for pipelines), evaluates that
formula directly; tests pin all three against each other.

Every engine charges ``prep.cost`` for each use of ``C`` or ``C^dag``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .ledger import ResourceLedger
from .registers import HouseholderPrep, QState, good_mask

#: the fixed-point schedule is never shorter than this many calls
MIN_FPS_CALLS = 5


# -- preparation circuits --------------------------------------------------


@dataclass
class Prep:
    """A preparation circuit C reduced to what amplification needs.

    ``good`` is the (unnormalized) flagged component ``Pi C|0>``; its norm is
    the amplitude lambda. ``full``/``mask`` are the complete output and the
    flag projector as a boolean array, present only when the literal engine
    is wanted. ``cost`` is charged per application of C or C^dag.
    """

    good: np.ndarray
    cost: ResourceLedger = field(default_factory=lambda: ResourceLedger(trial_calls=1))
    full: np.ndarray | None = None
    mask: np.ndarray | None = None
    layout: object = None

    @property
    def amplitude(self) -> float:
        return float(np.linalg.norm(self.good))

    @classmethod
    def from_state(
        cls,
        state: QState | np.ndarray,
        flag: Mapping[str, object] | np.ndarray,
        cost: ResourceLedger | None = None,
    ) -> "Prep":
        """Prep whose output is ``state``; ``flag`` is a register spec or a mask."""
        layout = None
        if isinstance(state, QState):
            layout = state.layout
            vec = state.vector.copy()
            if isinstance(flag, Mapping):
                mask = good_mask(layout, flag).reshape(-1)
            else:
                mask = np.asarray(flag, dtype=bool).reshape(-1)
        else:
            vec = np.asarray(state, dtype=complex).reshape(-1)
            if isinstance(flag, Mapping):
                raise ValueError("register flags need a QState")
            mask = np.asarray(flag, dtype=bool).reshape(-1)
        if mask.shape != vec.shape:
            raise ValueError("flag mask does not match the state")
        if abs(np.linalg.norm(vec) - 1) > 1e-10:
            raise ValueError("prep output must be normalized")
        return cls(
            good=np.where(mask, vec, 0),
            cost=cost if cost is not None else ResourceLedger(trial_calls=1),
            full=vec,
            mask=mask,
            layout=layout,
        )

    @classmethod
    def from_amplitude(cls, lam: float, cost: ResourceLedger | None = None) -> "Prep":
        """Two-level prep lam|1> + sqrt(1-lam^2)|0> with |1> flagged (toy/test instances)."""
        lam = float(lam)
        if not 0 <= lam <= 1:
            raise ValueError("amplitude must lie in [0, 1]")
        vec = np.array([math.sqrt(max(0.0, 1 - lam * lam)), lam], dtype=complex)
        return cls.from_state(vec, np.array([False, True]), cost)

    def residual(self) -> np.ndarray:
        """Flagged branch renormalized (the post-success state)."""
        a = self.amplitude
        if a == 0:
            raise ZeroDivisionError("flagged branch is empty")
        return self.good / a


# -- schedules and closed forms ---------------------------------------------


def chebyshev_t(n: float, x: float) -> float:
    """T_n(x) for real n and x >= 0 via the cos / cosh forms."""
    if x <= 1:
        return math.cos(n * math.acos(max(-1.0, x)))
    return math.cosh(n * math.acosh(x))


def fps_calls(lambda_prime: float, delta: float) -> int:
    """Raw call budget ceil((1/lambda') ln(2/delta))."""
    return max(1, math.ceil(math.log(2 / delta) / lambda_prime - 1e-12))


@dataclass(frozen=True)
class FPSSchedule:
    lambda_prime: float
    delta: float
    t: int
    phase_angles: tuple[tuple[float, float], ...]

    @property
    def iterations(self) -> int:
        return len(self.phase_angles)

    def dump(self) -> str:
        lines = [f"lambda_prime {self.lambda_prime!r}", f"delta {self.delta!r}", f"t {self.t}"]
        lines += [f"{a.hex()} {b.hex()}" for a, b in self.phase_angles]
        return "\n".join(lines) + "\n"


def fps_schedule(lambda_prime: float, delta: float, min_calls: int = MIN_FPS_CALLS) -> FPSSchedule:
    """Phase angles for fixed-point search with ``t`` calls to C (t odd, t >= min_calls).

    With L = t, gamma^-1 = T_{1/L}(1/delta) and l = (L-1)/2 iterations,
    alpha_j = 2 arccot(tan(2 pi j / L) sqrt(1 - gamma^2)), beta_j = -alpha_{l-j+1}.
    """
    if not 0 < lambda_prime <= 1:
        raise ValueError("lambda_prime must lie in (0, 1]")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    t = max(fps_calls(lambda_prime, delta), min_calls)
    if t % 2 == 0:
        t += 1
    gamma = 1.0 / chebyshev_t(1.0 / t, 1.0 / delta)
    s = math.sqrt(max(0.0, 1 - gamma * gamma))
    l = (t - 1) // 2
    alpha = np.array([2 * math.atan2(1.0, math.tan(2 * math.pi * j / t) * s) for j in range(1, l + 1)])
    beta = -alpha[::-1]
    return FPSSchedule(float(lambda_prime), float(delta), t, tuple(zip(alpha.tolist(), beta.tolist())))


def fps_success_closed_form(lam: float, lambda_prime: float, delta: float, t: int | None = None) -> float:
    """P = 1 - delta^2 T_t(T_{1/t}(1/delta) sqrt(1 - lam^2))^2.

    ``t`` defaults to the raw budget ceil((1/lambda') ln(2/delta)); pass the
    schedule's ``t`` to compare against a simulated run.
    """
    if t is None:
        t = fps_calls(lambda_prime, delta)
    x = chebyshev_t(1.0 / t, 1.0 / delta) * math.sqrt(max(0.0, 1 - lam * lam))
    return 1.0 - delta**2 * chebyshev_t(t, x) ** 2


# -- engines ----------------------------------------------------------------


@dataclass
class AmplifyOutcome:
    """Result of one amplification routine.

    ``target_amplitude`` is the exact norm of the flagged branch of the final
    state. ``residual`` is the normalized flagged branch (the state obtained
    once the flag is measured successfully); ``final_state`` is the full
    output when the literal engine ran.
    """

    target_amplitude: float
    calls_C: int
    success: bool
    residual: np.ndarray | None = None
    final_state: np.ndarray | None = None
    ledger: ResourceLedger = field(default_factory=ResourceLedger)
    info: dict = field(default_factory=dict)


def _fps_subspace(lam: float, schedule: FPSSchedule) -> complex:
    """Flagged amplitude after the schedule, in the basis (good, bad)."""
    s = np.array([lam, math.sqrt(max(0.0, 1 - lam * lam))], dtype=complex)
    v = s.copy()
    for a, b in schedule.phase_angles:
        v[0] *= np.exp(1j * b)
        v = v - (1 - np.exp(-1j * a)) * s * np.vdot(s, v)
        v = -v
    return complex(v[0])


def _fps_sequence(prep: Prep, schedule: FPSSchedule) -> np.ndarray:
    if prep.full is None or prep.mask is None:
        raise ValueError("the sequence engine needs a prep built from a full state")
    C = HouseholderPrep(prep.full)
    Cd = C.adjoint()
    v = prep.full.copy()
    for a, b in schedule.phase_angles:
        v = np.where(prep.mask, v * np.exp(1j * b), v)
        w = Cd.matmat(v)
        w[0] *= np.exp(-1j * a)
        v = -C.matmat(w)
    return v


def fps_run(
    prep: Prep,
    schedule: FPSSchedule,
    rng: np.random.Generator | None = None,
    method: str = "closed",
    ledger: ResourceLedger | None = None,
) -> AmplifyOutcome:
    """Run one fixed-point search; measure the flag when ``rng`` is given.

    Without ``rng`` no measurement happens and ``success`` reports whether
    the exact success probability is at least 1/2.
    """
    led = ResourceLedger()
    led.add(prep.cost, schedule.t)
    lam = prep.amplitude
    final = None
    if method == "closed":
        amp = math.sqrt(max(0.0, fps_success_closed_form(min(lam, 1.0), schedule.lambda_prime, schedule.delta, schedule.t)))
    elif method == "subspace":
        amp = abs(_fps_subspace(lam, schedule))
    elif method == "sequence":
        final = _fps_sequence(prep, schedule)
        amp = float(np.linalg.norm(final[prep.mask]))
    else:
        raise ValueError(f"unknown method {method!r}")
    amp = min(amp, 1.0)
    if rng is not None:
        success = bool(rng.random() < amp * amp)
    else:
        success = amp * amp >= 0.5
    residual = prep.residual() if (success and lam > 0) else None
    if ledger is not None:
        ledger.add(led)
    return AmplifyOutcome(amp, schedule.t, success, residual, final, led, {"lambda_prime": schedule.lambda_prime})


def amplitude_amplify_unknown(
    prep: Prep,
    rng: np.random.Generator,
    max_rounds: int = 60,
    growth: float = 6 / 5,
    ledger: ResourceLedger | None = None,
) -> AmplifyOutcome:
    """Amplitude amplification without knowing the amplitude.

    Round r draws j uniformly from [0, ceil(growth^r)), applies j Grover
    iterations (1 + 2j calls to C) and measures the flag.
    """
    led = ResourceLedger()
    lam = prep.amplitude
    theta = math.asin(min(1.0, lam))
    calls = 0
    for r in range(max_rounds):
        m = math.ceil(growth**r)
        j = int(rng.integers(0, m))
        calls += 1 + 2 * j
        led.add(prep.cost, 1 + 2 * j)
        amp = abs(math.sin((2 * j + 1) * theta))
        if rng.random() < amp * amp:
            if ledger is not None:
                ledger.add(led)
            return AmplifyOutcome(amp, calls, True, prep.residual(), None, led, {"rounds": r + 1})
    if ledger is not None:
        ledger.add(led)
    return AmplifyOutcome(0.0, calls, False, None, None, led, {"rounds": max_rounds})


def overlap_doubling_fps(
    prep: Prep,
    delta: float = 0.1,
    rng: np.random.Generator | None = None,
    floor: float = 1e-4,
    method: str = "closed",
    ledger: ResourceLedger | None = None,
) -> AmplifyOutcome:
    """Fixed-point search with lambda' = 1, 1/2, 1/4, ... until the flag is found."""
    if rng is None:
        rng = np.random.default_rng(0)
    led = ResourceLedger()
    calls = 0
    lp = 1.0
    rung = 0
    while lp >= floor:
        out = fps_run(prep, fps_schedule(lp, delta), rng, method=method, ledger=led)
        calls += out.calls_C
        if out.success:
            out.calls_C = calls
            out.ledger = led
            out.info.update(rungs=rung + 1)
            if ledger is not None:
                ledger.add(led)
            return out
        lp /= 2
        rung += 1
    if ledger is not None:
        ledger.add(led)
    return AmplifyOutcome(0.0, calls, False, None, None, led, {"rungs": rung})
