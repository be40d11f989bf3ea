"""Reproduce complexity exponents as log-log slopes of ledger units.

    python3 demos/scaling.py
"""

from gsprep.harness import ExperimentConfig, run_experiment, scaling_fit

sweeps = [
    ("lcu-fourier", "delta", [0.2, 0.1, 0.05, 0.025], "1/delta"),
    ("lcu-fourier", "eps", [2.0**-e for e in range(6, 13)], "1/eps"),
    ("pea-prepare", "eps", [2.0**-e for e in range(6, 13)], "1/eps"),
    ("estimate-energy", "xi", [0.025, 0.0125, 0.00625, 0.003125], "1/xi"),
]
for method, axis, values, x in sweeps:
    cfg = ExperimentConfig(method=method, axis=axis, values=values, trials=10, params={"overlap": 0.6})
    if axis == "eps":
        cfg.instance = {"model": "random", "dim": 16, "gap": 0.25}
    rows = run_experiment(cfg)
    slope, _, r2 = scaling_fit(rows, x, "hamsim_time")
    print(f"{method:<16} hamsim_time ~ ({x})^{slope:.2f}   r2={r2:.3f}")
