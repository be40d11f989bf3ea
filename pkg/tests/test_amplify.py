import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gsprep.amplify import (
    Prep,
    amplitude_amplify_unknown,
    chebyshev_t,
    fps_run,
    fps_schedule,
    fps_success_closed_form,
    overlap_doubling_fps,
)

LAMS = np.round(np.arange(0.05, 0.951, 0.05), 2)
DELTAS = (0.3, 0.1, 0.03)
LPS = (0.1, 0.3, 0.5)


def test_chebyshev_t_identities():
    assert chebyshev_t(3, 0.5) == pytest.approx(4 * 0.125 - 3 * 0.5)
    assert chebyshev_t(4, 2.0) == pytest.approx(8 * 16 - 8 * 4 + 1)
    assert chebyshev_t(5, 1.0) == pytest.approx(1.0)


def test_schedule_length_odd_and_at_least_five():
    for lp in LPS:
        for d in DELTAS:
            s = fps_schedule(lp, d)
            assert s.t % 2 == 1 and s.t >= 5
            assert s.t >= math.log(2 / d) / lp
            assert len(s.phase_angles) == (s.t - 1) // 2


@pytest.mark.parametrize("method", ["subspace", "sequence"])
def test_engines_match_closed_form(method):
    for lp in LPS:
        for d in DELTAS:
            sch = fps_schedule(lp, d)
            for lam in LAMS:
                prep = Prep.from_amplitude(lam)
                out = fps_run(prep, sch, method=method)
                ref = math.sqrt(fps_success_closed_form(lam, lp, d, sch.t))
                assert abs(out.target_amplitude - ref) <= 1e-8


def test_sequence_engine_on_larger_register(rng):
    v = rng.normal(size=32) + 1j * rng.normal(size=32)
    v /= np.linalg.norm(v)
    mask = np.zeros(32, dtype=bool)
    mask[:3] = True
    prep = Prep.from_state(v, mask)
    sch = fps_schedule(0.2, 0.1)
    out = fps_run(prep, sch, method="sequence")
    assert abs(out.target_amplitude**2 - fps_success_closed_form(prep.amplitude, 0.2, 0.1, sch.t)) < 1e-10
    # the flagged direction is preserved up to a phase
    flagged = out.final_state[mask] / np.linalg.norm(out.final_state[mask])
    assert abs(abs(np.vdot(flagged, prep.residual()[mask])) - 1) < 1e-10


def test_contract_bounds_on_grid():
    for lp in LPS:
        for d in DELTAS:
            t = fps_schedule(lp, d).t
            for lam in LAMS:
                P = fps_success_closed_form(lam, lp, d, t)
                if lam >= lp:
                    assert P >= 1 - d**2 - 1e-12
                else:
                    assert P < 2 * (lam / lp) * math.log(2 / d)


def test_ledger_charges_t_calls():
    sch = fps_schedule(0.25, 0.1)
    out = fps_run(Prep.from_amplitude(0.3), sch)
    assert out.calls_C == sch.t and out.ledger.trial_calls == sch.t


def test_unknown_amplitude_mean_calls():
    calls = [amplitude_amplify_unknown(Prep.from_amplitude(0.1), np.random.default_rng(s)).calls_C for s in range(400)]
    # expected O(1/lambda) for a fixed growth factor
    assert 10 < np.mean(calls) < 60


@given(st.floats(0.002, 1.0), st.integers(0, 2**31))
@settings(max_examples=40, deadline=None)
def test_overlap_doubling_succeeds_with_residual(lam, seed):
    out = overlap_doubling_fps(Prep.from_amplitude(lam), 0.1, np.random.default_rng(seed))
    assert out.success
    assert np.allclose(out.residual, [0, 1])
    # doubling stops by the rung below lambda, up to rare early failures
    assert out.calls_C <= 40 * math.log(20) / lam + 100


def test_zero_amplitude_fails():
    out = overlap_doubling_fps(Prep.from_amplitude(0.0), 0.1, np.random.default_rng(0))
    assert not out.success
