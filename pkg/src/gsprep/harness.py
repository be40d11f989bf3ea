"""Experiment orchestration: seeded trial batches, flat report rows, slope fits.

A run is identified by (method, point, seed). The seed of trial ``i`` is
``seed_base + i``; it fixes the instance (unless the instance pins its own
seed), the trial state and the measurement RNG, so a configuration always
produces the same rows.
"""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Callable

import numpy as np

from .ledger import RunResult
from .registers import DEFAULT_QUBIT_CAP, CapacityError
from .spectra import Hamiltonian, TrialState, build_hamiltonian, make_trial_state

COLUMNS = [
    "method", "dim", "delta_true", "delta_lb", "chi", "phi0", "eps", "xi", "kappa", "seed",
    "success", "fidelity", "energy_error", "hamsim_time", "trial_calls", "walk_steps",
    "gate_proxy", "qubits_peak", "wall_ms",
]  # fmt: skip

AXES = ("delta", "eps", "chi", "xi", "kappa", "dim")

#: failures that are recorded as unsuccessful rows instead of aborting a batch
RUN_ERRORS = (CapacityError, MemoryError, OverflowError, np.linalg.LinAlgError)


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    method: str
    instance: dict[str, Any] = field(default_factory=lambda: {"model": "random", "dim": 16, "gap": 0.1})
    axis: str | None = None
    values: list[float] = field(default_factory=list)
    trials: int = 1
    seed_base: int = 0
    out: str | None = None
    params: dict[str, Any] = field(default_factory=dict)
    qubit_cap: int = DEFAULT_QUBIT_CAP
    threads: int = 1
    record_wall_time: bool = False

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {sorted(METHODS)}")
        if self.trials < 1:
            raise ConfigError("trials must be positive")
        if self.axis is not None:
            if self.axis not in AXES:
                raise ConfigError(f"unknown sweep axis {self.axis!r}; choose from {AXES}")
            v = list(self.values)
            if not v or any(x <= 0 for x in v):
                raise ConfigError("sweep values must be positive")
            if v != sorted(v) and v != sorted(v, reverse=True):
                raise ConfigError("sweep values must be sorted")
        elif self.values:
            raise ConfigError("values given without a sweep axis")
        for p in self.points():
            try:
                build_hamiltonian(p["instance"] | {"seed": p["instance"].get("seed", self.seed_base)})
            except (KeyError, ValueError, TypeError) as exc:
                raise ConfigError(f"bad instance {p['instance']}: {exc}") from exc

    def points(self) -> list[dict[str, Any]]:
        if self.axis is None:
            return [point_for(self, None)]
        return [point_for(self, v) for v in self.values]

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config fields {sorted(extra)}")
        if "method" not in d:
            raise ConfigError("config needs a method")
        return cls(**d)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def load_config(path: str) -> ExperimentConfig:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    return ExperimentConfig.from_dict(data)


def point_for(cfg: ExperimentConfig, value: float | None) -> dict[str, Any]:
    """Resolve the instance and parameters of one sweep point."""
    inst = dict(cfg.instance)
    p = dict(cfg.params)
    if cfg.method.startswith("chebwalk"):
        inst["walk"] = True
    if cfg.axis == "delta":
        inst["gap"] = value
        p["delta_lb"] = value * p.get("delta_lb_ratio", 1.0)
    elif cfg.axis == "dim":
        inst["dim"] = int(value)
    elif cfg.axis == "chi":
        p["overlap"] = value
        p["chi"] = value
    elif cfg.axis is not None:
        p[cfg.axis] = value
    p.setdefault("overlap", inst.get("overlap", 0.5))
    p.setdefault("chi", p["overlap"])
    p.setdefault("eps", 1e-2)
    p.setdefault("kappa", 1.0)
    if "gap" in inst:
        p.setdefault("delta_lb", inst["gap"] * p.get("delta_lb_ratio", 1.0))
        p.setdefault("xi", inst["gap"] / 4)
    inst.pop("overlap", None)
    return {"instance": inst, "params": p, "value": value}


# -- method registry ---------------------------------------------------------------

Runner = Callable[[Hamiltonian, TrialState, dict[str, Any], np.random.Generator, int], RunResult]
METHODS: dict[str, Runner] = {}


def register(name: str) -> Callable[[Runner], Runner]:
    def deco(fn: Runner) -> Runner:
        METHODS[name] = fn
        return fn

    return deco


def _energy_guess(H: Hamiltonian, p: dict[str, Any]) -> float:
    if p.get("energy_guess") is not None:
        return float(p["energy_guess"])
    return H.lambda0 - float(p.get("energy_guess_error", 0.0))


@register("lcu-fourier")
def _run_lcu(H, trial, p, rng, cap):
    from .lcu import prepare_ground_known_energy

    return prepare_ground_known_energy(
        H, trial, _energy_guess(H, p), p["chi"], p["eps"], mode=p.get("mode", "fps"), rng=rng,
        delta_lb=p["delta_lb"], engine=p.get("engine", "auto"), qubit_cap=cap,
    )  # fmt: skip


@register("label-search")
def _run_unknown(H, trial, p, rng, cap):
    from .labelsearch import prepare_ground_unknown_energy

    return prepare_ground_unknown_energy(
        H, trial, p["chi"], p["eps"], p["delta_lb"], rng, grid_cap=p.get("grid_cap"),
        engine=p.get("engine", "auto"), qubit_cap=cap,
    )  # fmt: skip


@register("combined")
def _run_combined(H, trial, p, rng, cap):
    from .labelsearch import combined_prepare

    return combined_prepare(H, trial, p["chi"], p["eps"], p["delta_lb"], p["kappa"], rng, engine=p.get("engine", "auto"), qubit_cap=cap)


@register("estimate-energy")
def _run_estimate(H, trial, p, rng, cap):
    from .labelsearch import estimate_ground_energy

    _, res = estimate_ground_energy(
        H, trial, p["chi"], p["xi"], rng, variant=p.get("variant", "grid"), kappa=p["kappa"],
        eps=p["eps"], engine=p.get("engine", "auto"), qubit_cap=cap,
    )  # fmt: skip
    return res


@register("pea-estimate")
def _run_pea_estimate(H, trial, p, rng, cap):
    from .pea import pea_estimate_energy

    _, res = pea_estimate_energy(H, trial, p["chi"], p["xi"], rng, qubit_cap=cap)
    return res


@register("pea-prepare")
def _run_pea_prepare(H, trial, p, rng, cap):
    from .pea import pea_prepare, pea_prepare_bits

    k = pea_prepare_bits(p["chi"], p["eps"], p["delta_lb"])
    z = None
    if p.get("pea_mode", "known") == "known":
        z = int(round(_energy_guess(H, p) * 2**k)) % 2**k
    return pea_prepare(H, trial, z, k, p["eps"], rng, chi=p["chi"], delta_lb=p["delta_lb"], qubit_cap=cap)


def _filter_runner(mode: str) -> Runner:
    def run(H, trial, p, rng, cap):
        from .filtering import filtering_prepare

        mu = _energy_guess(H, p) if mode == "known" else None
        return filtering_prepare(
            H, trial, mode, p["chi"], p["eps"], p["delta_lb"], rng, mu=mu, kappa=p["kappa"],
            materialize=p.get("materialize", False), qubit_cap=cap,
        )  # fmt: skip

    return run


for _mode in ("known", "unknown", "combined"):
    register(f"filter-{_mode}")(_filter_runner(_mode))


@register("filter-estimate")
def _run_filter_estimate(H, trial, p, rng, cap):
    from .filtering import filtering_estimate

    _, res = filtering_estimate(H, trial, p["chi"], p["xi"], rng)
    return res


@register("chebwalk")
def _run_chebwalk(H, trial, p, rng, cap):
    from .chebwalk import prepare_ground_cheb

    return prepare_ground_cheb(
        H, trial, _energy_guess(H, p), p["chi"], p["eps"], rng, delta_lb=p["delta_lb"],
        mode=p.get("mode", "fps"), engine=p.get("engine", "auto"),
    )  # fmt: skip


@register("chebwalk-unknown")
def _run_chebwalk_unknown(H, trial, p, rng, cap):
    from .chebwalk import prepare_ground_cheb_unknown

    return prepare_ground_cheb_unknown(H, trial, p["chi"], p["eps"], p["delta_lb"], rng)


# -- running ---------------------------------------------------------------------


def run_single(method: str, point: dict[str, Any], seed: int, qubit_cap: int = DEFAULT_QUBIT_CAP,
               record_wall_time: bool = False) -> tuple[RunResult, dict[str, Any]]:  # fmt: skip
    """One seeded run; returns the result and its flattened report row."""
    inst = dict(point["instance"])
    inst.setdefault("seed", seed)
    p = point["params"]
    H = build_hamiltonian(inst)
    trial = make_trial_state(H, p["overlap"], seed)
    rng = np.random.default_rng([seed, 0x5EED])
    t0 = time.perf_counter()
    try:
        res = METHODS[method](H, trial, p, rng, qubit_cap)
    except RUN_ERRORS as exc:
        res = RunResult(method=method, success=False)
        res.info["error"] = f"{type(exc).__name__}: {exc}"
    res.wall_time = time.perf_counter() - t0
    res.seed = seed
    row = {
        "method": method,
        "dim": H.dim,
        "delta_true": H.gap,
        "delta_lb": p.get("delta_lb"),
        "chi": p["chi"],
        "phi0": abs(trial.overlap),
        "eps": p["eps"],
        "xi": p.get("xi"),
        "kappa": p["kappa"],
        "seed": seed,
        "success": bool(res.success),
        "fidelity": float(res.fidelity),
        "energy_error": res.energy_error,
        **res.ledger.as_dict(),
        "wall_ms": round(1000 * res.wall_time, 3) if record_wall_time else 0.0,
    }
    return res, row


def run_experiment(cfg: ExperimentConfig) -> list[dict[str, Any]]:
    """One row per (sweep value, trial), ordered by value then trial index."""
    cfg.validate()
    jobs = [(pt, cfg.seed_base + i) for pt in cfg.points() for i in range(cfg.trials)]

    def job(args):
        pt, seed = args
        return run_single(cfg.method, pt, seed, cfg.qubit_cap, cfg.record_wall_time)[1]

    if cfg.threads > 1:
        with ThreadPoolExecutor(cfg.threads) as ex:
            return list(ex.map(job, jobs))
    return [job(j) for j in jobs]


# -- fitting and reports ------------------------------------------------------------

_AXIS_COLUMN = {"delta": "delta_lb", "gap": "delta_true"}


def scaling_fit_xy(x, y) -> tuple[float, float, float]:
    """Least-squares fit of log y = slope log x + intercept; returns (slope, intercept, r^2)."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    if len(lx) < 2 or np.ptp(lx) <= 0:
        raise ValueError("degenerate x range")
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss if ss > 0 else 1.0
    return float(slope), float(intercept), r2


def scaling_fit(rows: list[dict[str, Any]], x: str, y: str, min_points: int = 4) -> tuple[float, float, float]:
    """Fit per-point means of ``y`` against ``x``; ``x="1/eps"`` fits against 1/eps."""
    inverse = x.startswith("1/")
    col = x[2:] if inverse else x
    col = _AXIS_COLUMN.get(col, col)
    groups: dict[float, list[float]] = {}
    for r in rows:
        groups.setdefault(float(r[col]), []).append(float(r[y]))
    if len(groups) < min_points:
        raise ValueError(f"need at least {min_points} sweep points, got {len(groups)}")
    xs = np.array(sorted(groups))
    ys = np.array([np.mean(groups[v]) for v in xs])
    if np.any(ys <= 0):
        raise ValueError("y means must be positive")
    return scaling_fit_xy(1 / xs if inverse else xs, ys)


def _fmt(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows: list[dict[str, Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in COLUMNS])
    return buf.getvalue()


def rows_to_json(rows: list[dict[str, Any]]) -> str:
    return json.dumps([{c: r.get(c) for c in COLUMNS} for r in rows], indent=1)


def rows_from_json(text: str) -> list[dict[str, Any]]:
    return json.loads(text)


def emit_report(rows: list[dict[str, Any]], fmt: str = "csv", path: str | None = None) -> str:
    """Render rows as CSV or JSON; write to ``path`` when given and return the text."""
    if fmt == "csv":
        text = rows_to_csv(rows)
    elif fmt == "json":
        text = rows_to_json(rows)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def summarize(rows: list[dict[str, Any]]) -> dict[str, Any]:
    n = len(rows)
    ok = [r for r in rows if r["success"]]
    out: dict[str, Any] = {"runs": n, "successes": len(ok)}
    if n:
        out["mean_hamsim_time"] = float(np.mean([r["hamsim_time"] for r in rows]))
        out["mean_fidelity"] = float(np.mean([r["fidelity"] for r in rows]))
    if ok and any(r["energy_error"] is not None for r in ok):
        out["max_energy_error"] = max(r["energy_error"] for r in ok if r["energy_error"] is not None)
    return out
