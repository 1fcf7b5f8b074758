import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from etwadc.exceptions import (AlgebraicLoop, DimensionMismatch, FrequencyOnEigenvalue,
                               ImproperTransferFunction, NegativeDelay)
from etwadc.lti.systems import (LtiSystem, TransferFunction, feedback, frequency_response,
                                pade_coefficients, pade_delay, parallel_diff, realize, series,
                                stack_inputs)

OMEGA = np.logspace(-2, 3, 200)


def test_pade_coefficients_t01():
    num, den = pade_coefficients(0.1)
    assert num == [-0.1 ** 3 / 120.0, 0.1 ** 2 / 12.0, -0.05, 1.0]
    assert den == [0.1 ** 3 / 120.0, 0.1 ** 2 / 12.0, 0.05, 1.0]


def test_pade_is_all_pass():
    H = frequency_response(pade_delay(0.1), OMEGA)[:, 0, 0]
    assert np.max(np.abs(np.abs(H) - 1.0)) <= 1e-9


def test_pade_phase_tracks_delay_at_low_frequency():
    # the s^2 coefficient T^2/12 (not the [3/3] value T^2/10) leaves a
    # third-order phase error, about 1.7e-5 rad at wT = 0.1
    w = np.array([0.1, 1.0])
    H = frequency_response(pade_delay(0.1), w)[:, 0, 0]
    assert np.allclose(np.angle(H), -0.1 * w, atol=2e-5)


def test_pade_zero_delay_is_unity():
    sys = pade_delay(0.0)
    assert sys.n_states == 0
    assert sys.D[0, 0] == 1.0


def test_negative_delay():
    with pytest.raises(NegativeDelay):
        pade_delay(-0.01)


def test_realize_first_order():
    sys = realize(TransferFunction([1.0], [1.0, 1.0]))
    assert sys.poles() == pytest.approx([-1.0])
    assert sys.dc_gain()[0, 0] == pytest.approx(1.0)


def test_realize_cancelling_pair_is_unity():
    sys = realize(TransferFunction([1.0, 2.0], [1.0, 2.0]))
    H = frequency_response(sys, OMEGA)[:, 0, 0]
    assert np.allclose(H, 1.0, atol=1e-14)


def test_improper_raises():
    with pytest.raises(ImproperTransferFunction):
        TransferFunction([1.0, 0.0, 0.0], [1.0, 1.0])


def test_lead_lag_washout_limits():
    # K s Tw/(1+s Tw) (1+s)/(1+s): DC gain 0, high-frequency gain K
    tf = TransferFunction([10.0, 0.0], [10.0, 1.0]) * TransferFunction([1.0, 1.0], [1.0, 1.0])
    sys = realize(tf)
    assert abs(sys.dc_gain()[0, 0]) < 1e-15
    H = frequency_response(sys, [1e6])[0, 0, 0]
    assert abs(H - 1.0) < 1e-5


def test_series_of_gains():
    sys = series(LtiSystem.gain(2.0), LtiSystem.gain(3.0))
    assert sys.D[0, 0] == 6.0


def test_series_matches_product(rng):
    a = realize(TransferFunction([1.0, 3.0], [1.0, 2.0, 5.0]))
    b = realize(TransferFunction([2.0], [1.0, 4.0]))
    s = 1j * OMEGA
    expected = (s + 3) / (s ** 2 + 2 * s + 5) * 2 / (s + 4)
    H = frequency_response(series(a, b), OMEGA)[:, 0, 0]
    assert np.allclose(H, expected, rtol=1e-12)


def test_unity_feedback_of_integrator():
    integ = LtiSystem([[0.0]], [[1.0]], [[1.0]], [[0.0]])
    cl = feedback(integ, LtiSystem.gain(1.0), sign=-1)
    assert cl.poles() == pytest.approx([-1.0])


def test_feedback_algebraic_loop():
    with pytest.raises(AlgebraicLoop):
        feedback(LtiSystem.gain(1.0), LtiSystem.gain(1.0), sign=+1)


def test_feedback_matches_closed_form():
    # P = 1/(s+1), K = 2 with negative feedback: 1/(s+3)
    p = realize(TransferFunction([1.0], [1.0, 1.0]))
    cl = feedback(p, LtiSystem.gain(2.0))
    s = 1j * OMEGA
    assert np.allclose(frequency_response(cl, OMEGA)[:, 0, 0], 1.0 / (s + 3.0), rtol=1e-12)


def test_parallel_diff_and_stack():
    a = LtiSystem.gain(5.0)
    b = LtiSystem.gain(2.0)
    assert parallel_diff(a, b).D[0, 0] == 3.0
    st2 = stack_inputs(a, b)
    assert np.array_equal(st2.D, np.diag([5.0, 2.0]))


def test_port_mismatch():
    with pytest.raises(DimensionMismatch):
        series(stack_inputs(LtiSystem.gain(1.0), LtiSystem.gain(1.0)), LtiSystem.gain(1.0))


def test_frequency_on_eigenvalue():
    osc = LtiSystem([[0.0, 1.0], [-1.0, 0.0]], [[0.0], [1.0]], [[1.0, 0.0]], [[0.0]])
    with pytest.raises(FrequencyOnEigenvalue):
        frequency_response(osc, [1.0])


def test_arrays_are_read_only():
    sys = LtiSystem([[-1.0]], [[1.0]], [[1.0]], [[0.0]])
    with pytest.raises(ValueError):
        sys.A[0, 0] = 2.0


@settings(max_examples=40, deadline=None)
@given(T=st.floats(1e-3, 1.0), w=st.floats(1e-2, 1e3))
def test_pade_all_pass_property(T, w):
    H = frequency_response(pade_delay(T), [w])[0, 0, 0]
    assert abs(abs(H) - 1.0) <= 1e-9


@settings(max_examples=40, deadline=None)
@given(coeffs=st.lists(st.floats(0.1, 10.0), min_size=2, max_size=4),
       w=st.floats(1e-2, 1e2))
def test_realization_reproduces_transfer_function(coeffs, w):
    den = np.poly(-np.asarray(coeffs))
    num = np.arange(1, len(coeffs) + 1, dtype=float)
    tf = TransferFunction(num, den)
    H = frequency_response(realize(tf), [w])[0, 0, 0]
    assert np.isclose(H, tf(1j * w), rtol=1e-9)
