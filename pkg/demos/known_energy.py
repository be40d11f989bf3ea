"""Prepare a ground state with a known energy and compare three methods.

    python3 demos/known_energy.py
"""

import numpy as np

from gsprep.filtering import filtering_prepare
from gsprep.lcu import prepare_ground_known_energy
from gsprep.pea import pea_prepare, pea_prepare_bits
from gsprep.spectra import build_hamiltonian, make_trial_state

H = build_hamiltonian({"model": "random", "dim": 32, "gap": 0.05, "seed": 3})
trial = make_trial_state(H, overlap=0.3, seed=3)
chi, eps = 0.3, 1e-3
print(f"lambda_0 = {H.lambda0:.6f}, gap = {H.gap:.4f}, |phi_0| = {abs(trial.overlap):.3f}")

runs = {
    "lcu-fourier": prepare_ground_known_energy(H, trial, H.lambda0, chi, eps, rng=np.random.default_rng(0)),
    "filtering": filtering_prepare(H, trial, "known", chi, eps, H.gap, np.random.default_rng(0), mu=H.lambda0),
}
k = pea_prepare_bits(chi, eps, H.gap)
runs["pea"] = pea_prepare(H, trial, round(H.lambda0 * 2**k), k, eps, np.random.default_rng(0), chi=chi, delta_lb=H.gap)

print(f"{'method':<12} {'fidelity':>12} {'hamsim_time':>14} {'trial_calls':>12} {'qubits':>7}")
for name, r in runs.items():
    led = r.ledger
    print(f"{name:<12} {r.fidelity:12.9f} {led.hamsim_time:14.0f} {led.trial_calls:12d} {led.qubits_peak:7d}")
