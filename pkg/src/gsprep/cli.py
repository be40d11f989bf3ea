"""Command-line entry point: ``gsprep <subcommand> [flags]``.

Exit codes: 0 when every run succeeded, 2 when some run failed, 1 on a
configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .harness import ConfigError, ExperimentConfig, emit_report, load_config, run_experiment, scaling_fit, summarize
from .registers import DEFAULT_QUBIT_CAP


def _shared(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("instance")
    g.add_argument("--model", default="random", help="random | random-hermitian | tfim | adversarial")
    g.add_argument("--dim", type=int, default=16)
    g.add_argument("--gap", type=float, default=0.1, help="true spectral gap of the random model")
    g.add_argument("--n-sys", type=int, help="qubits of the tfim model")
    g.add_argument("--overlap", type=float, default=0.5, help="ground-state overlap of the trial state")
    g.add_argument("--chi", type=float, help="lower bound on the overlap (default: the overlap)")
    g.add_argument("--eps", type=float, default=1e-2)
    g.add_argument("--delta-lb", type=float, help="gap lower bound handed to the algorithm (default: the gap)")
    g.add_argument("--trials", type=int, default=1)
    g.add_argument("--config", help="JSON file with ExperimentConfig fields; flags are ignored")


def _global(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="seed of the first trial")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", help="report path (default: stdout)")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--qubit-cap", type=int, default=DEFAULT_QUBIT_CAP)
    p.add_argument("--wall-time", action="store_true", help="record wall_ms (breaks bit-identical reports)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gsprep", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare-known", help="known ground energy, Fourier LCU")
    _shared(p), _global(p)
    p.add_argument("--energy-guess-error", type=float, default=0.0, help="E = lambda_0 - error")
    p.add_argument("--mode", choices=["fps", "aa"], default="fps")

    for name, text in (("prepare-unknown", "unknown ground energy"), ("estimate-energy", "ground-energy estimation")):
        p = sub.add_parser(name, help=text)
        _shared(p), _global(p)
        p.add_argument("--kappa", type=float, help="combined variant exponent (omit for the grid variant)")
        p.add_argument("--xi", type=float, help="target energy precision (default: gap/4)")
        p.add_argument("--grid-cap", type=int)

    p = sub.add_parser("baseline", help="phase-estimation and filtering baselines")
    _shared(p), _global(p)
    p.add_argument("--method", choices=["pea", "filter"], required=True)
    p.add_argument("--mode", choices=["known", "unknown", "combined", "estimate"], default="known")
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--xi", type=float)
    p.add_argument("--energy-guess-error", type=float, default=0.0)

    p = sub.add_parser("chebwalk", help="Chebyshev quantum-walk preparation")
    _shared(p), _global(p)
    p.add_argument("--energy-guess", type=float, help="absolute energy guess (default: lambda_0)")
    p.add_argument("--mode", choices=["fps", "aa"], default="fps")
    p.add_argument("--unknown", action="store_true", help="search the energy instead of using a guess")

    p = sub.add_parser("bench", help="run a sweep from a config file")
    p.add_argument("config")
    _global(p)
    p.add_argument("--fit", metavar="Y", help="also fit Y (a ledger column) against the sweep axis")
    p.add_argument("--inverse", action="store_true", help="fit against 1/axis")
    return parser


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    if getattr(args, "config", None):
        cfg = load_config(args.config)
    else:
        inst = {"model": args.model, "dim": args.dim, "gap": args.gap}
        if args.model == "tfim":
            inst = {"model": "tfim", "n_sys": args.n_sys or max(1, args.dim.bit_length() - 1)}
        params: dict = {"overlap": args.overlap, "eps": args.eps}
        for key in ("chi", "delta_lb", "xi", "kappa", "grid_cap", "energy_guess_error", "energy_guess"):
            v = getattr(args, key, None)
            if v is not None:
                params[key] = v
        cmd = args.command
        if cmd == "prepare-known":
            method = "lcu-fourier"
            params["mode"] = args.mode
        elif cmd == "prepare-unknown":
            method = "label-search" if args.kappa is None else "combined"
        elif cmd == "estimate-energy":
            method = "estimate-energy"
            params["variant"] = "grid" if args.kappa is None else "combined"
        elif cmd == "baseline":
            if args.method == "pea":
                if args.mode == "estimate":
                    method = "pea-estimate"
                elif args.mode == "combined":
                    raise ConfigError("the phase-estimation baseline has no combined mode")
                else:
                    method = "pea-prepare"
                    params["pea_mode"] = args.mode
            else:
                method = f"filter-{args.mode}"
        elif cmd == "chebwalk":
            method = "chebwalk-unknown" if args.unknown else "chebwalk"
            params["mode"] = args.mode
        else:  # pragma: no cover - argparse restricts commands
            raise ConfigError(cmd)
        cfg = ExperimentConfig(method=method, instance=inst, params=params, trials=args.trials)
    cfg.seed_base = args.seed if not getattr(args, "config", None) else cfg.seed_base
    cfg.threads = args.threads
    cfg.qubit_cap = args.qubit_cap
    cfg.record_wall_time = cfg.record_wall_time or args.wall_time
    if args.out:
        cfg.out = args.out
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "bench":
            cfg = load_config(args.config)
            cfg.threads = args.threads
            cfg.qubit_cap = args.qubit_cap
            cfg.record_wall_time = cfg.record_wall_time or args.wall_time
            if args.out:
                cfg.out = args.out
        else:
            cfg = _config_from_args(args)
        rows = run_experiment(cfg)
    except (ConfigError, FileNotFoundError, TypeError, ValueError, KeyError) as exc:
        print(f"gsprep: configuration error: {exc}", file=sys.stderr)
        return 1
    text = emit_report(rows, args.format, cfg.out)
    if cfg.out is None:
        sys.stdout.write(text)
    summary = summarize(rows)
    if args.command == "bench" and args.fit:
        x = ("1/" if args.inverse else "") + (cfg.axis or "")
        try:
            slope, intercept, r2 = scaling_fit(rows, x, args.fit)
            summary["fit"] = {"x": x, "y": args.fit, "slope": slope, "intercept": intercept, "r2": r2}
        except ValueError as exc:
            summary["fit_error"] = str(exc)
    print(json.dumps(summary), file=sys.stderr)
    return 0 if all(r["success"] for r in rows) else 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
