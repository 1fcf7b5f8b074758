"""System-level invariants of the event-triggered loop on the bundled fixtures."""
import numpy as np
import pytest

from etwadc.events import compute_trigger_threshold, inter_event_bound, run_linear


def runs(study, sigmas):
    loop, P, x0, trig = study.load_design()
    sc = study.sc
    for s in sigmas:
        cfg = study.trigger_config(float(s), P, trig)
        yield s, cfg, loop, *run_linear(loop, cfg, x0, sc.dt, sc.t_end)


def test_threshold_invariant_to_q_scale(two_area_design):
    loop = two_area_design[0]
    ref = compute_trigger_threshold(loop, None, 0.5)
    for k in (1e-3, 3.7, 250.0):
        assert compute_trigger_threshold(loop, k * np.eye(loop.n), 0.5).rho == ref.rho


def test_event_sequence_invariant_to_q_scale(two_area):
    loop, _, x0, _ = two_area.load_design()
    sc = two_area.sc
    logs = []
    for k in (1.0, 42.0):
        cfg = compute_trigger_threshold(loop, k * np.eye(loop.n), 0.5)
        tr, log = run_linear(loop, cfg, x0, sc.dt, sc.t_end)
        logs.append((log.k.tobytes(), tr.states.tobytes()))
    assert logs[0] == logs[1]


@pytest.mark.parametrize("name", ["two_area", "ieee39"])
def test_event_count_decreases_with_sigma(name, request):
    study = request.getfixturevalue(name)
    counts = [log.count for *_, log in runs(study, np.round(np.arange(0.1, 1.0, 0.1), 1))]
    assert all(a > b for a, b in zip(counts, counts[1:]))


def test_loop_stays_stable_near_sigma_one(two_area):
    # close to sigma = 1 the decrease margin vanishes but the trajectory still decays
    for s, _, _, tr, log in runs(two_area, (0.95, 0.99, 0.999)):
        norm = np.linalg.norm(tr.states, axis=1)
        assert norm[-1] < 0.1 * norm[0]
        assert log.count < log.baseline


@pytest.mark.parametrize("name", ["two_area", "ieee39"])
def test_bound_holds_for_state_normalized_error(name, request):
    # |e~| / |x| stays below eta* for tau_min after every transmission; the
    # output trigger itself may fire earlier when y1 passes through zero
    study = request.getfixturevalue(name)
    for s, cfg, loop, tr, log in runs(study, study.sc.sigmas):
        b = inter_event_bound(loop, cfg)
        eta = (np.abs(tr.signals["e_y"]) * loop.output_scale
               / np.linalg.norm(tr.states, axis=1))
        window = int(np.floor(b.tau_min / study.sc.dt))
        for k in log.k:
            seg = eta[k + 1:k + window + 1]
            assert np.all(seg < b.eta_star), (s, k)
