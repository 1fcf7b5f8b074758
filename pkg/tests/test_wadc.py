import numpy as np
import pytest

from etwadc.exceptions import DimensionMismatch, UnstableClosedLoop, ValidationError
from etwadc.lti.modal import modes
from etwadc.lti.systems import LtiSystem, TransferFunction, frequency_response, realize
from etwadc.wadc import (ClosedLoop, WadcConfig, assemble_closed_loop, balanced_loop,
                         build_wadc, modal_residues, screen_interarea)

from helpers import random_hurwitz


def test_controller_gain_at_one_rad_s():
    sys = build_wadc(WadcConfig(K=1.0, tw=10.0, tau1=0.5, tau2=0.1, delay=0.0))
    H = frequency_response(sys, [1.0])[0, 0, 1]      # local input
    # |10j/(1+10j)| * |1+0.5j| / |1+0.1j|
    expected = 10 / np.sqrt(101) * np.sqrt(1.25) / np.sqrt(1.01)
    assert abs(H) == pytest.approx(expected, rel=1e-12)
    assert abs(H) == pytest.approx(1.1070, abs=1e-4)


def test_controller_dc_and_high_frequency():
    sys = build_wadc(WadcConfig(K=4.0, tw=10.0, tau1=0.5, tau2=0.1, delay=0.1))
    assert np.allclose(sys.dc_gain(), 0.0, atol=1e-12)
    # high-frequency gain K tau1/tau2; on the remote leg the Pade block tends
    # to -1 and the difference junction negates once more
    assert sys.D[0, 1] == pytest.approx(20.0)
    assert sys.D[0, 0] == pytest.approx(20.0)


def test_remote_leg_is_delayed_and_negated():
    cfg = WadcConfig(K=1.0, tw=10.0, tau1=0.5, tau2=0.1, delay=0.1)
    sys = build_wadc(cfg)
    w = np.array([0.5, 2.0])
    H = frequency_response(sys, w)
    assert np.allclose(np.abs(H[:, 0, 0]), np.abs(H[:, 0, 1]), rtol=1e-9)


def test_config_validation():
    with pytest.raises(ValidationError):
        WadcConfig(K=1.0, tau2=0.0)
    with pytest.raises(ValidationError):
        WadcConfig(K=1.0, delay=-0.1)


def _toy_plant():
    A = np.array([[0.0, 1.0, 0.0], [-4.0, -0.2, 1.0], [0.0, 0.0, -2.0]])
    B = np.array([[0.0], [0.0], [1.0]])
    C = np.array([[0.0, 1.0, 0.0], [1.0, 0.5, 0.0]])
    return LtiSystem(A, B, C, np.zeros((2, 1)))


def test_assembly_matches_hand_derivation():
    plant = _toy_plant()
    ctrl = realize(TransferFunction([2.0, 1.0], [0.5, 1.0]))   # single difference input
    loop = assemble_closed_loop(plant, ctrl)
    Ap, Bp, C1, C2 = plant.A, plant.B, plant.C[0], plant.C[1]
    Ac, Bc, Cc, Dc = ctrl.A, ctrl.B, ctrl.C, ctrl.D[0, 0]
    C = C2 - C1
    A = np.block([[Ap + Dc * Bp @ C[None, :], Bp @ Cc], [np.outer(Bc[:, 0], C), Ac]])
    B = np.concatenate([-Bp[:, 0] * Dc, -Bc[:, 0]])
    assert np.allclose(loop.A, A)
    assert np.allclose(loop.B, B)
    assert np.array_equal(loop.c, np.concatenate([C1, [0.0]]))


def test_zero_error_is_continuous_feedback():
    plant = _toy_plant()
    ctrl = build_wadc(WadcConfig(K=0.5, tw=10, tau1=0.5, tau2=0.1, delay=0.1))
    loop = assemble_closed_loop(plant, ctrl)
    # u = Dc1 y1 + Dc2 y2 + Cc xc with both legs fed continuously
    x = np.random.default_rng(0).standard_normal(loop.n)
    xp, xc = x[:3], x[3:]
    y = plant.C @ xp
    u = ctrl.C @ xc + ctrl.D @ y
    xdot = np.concatenate([plant.A @ xp + plant.B @ u, ctrl.A @ xc + ctrl.B @ y])
    assert np.allclose(loop.A @ x, xdot)
    assert loop.control(x, 0.0) == pytest.approx(u[0])


def test_normalized_output():
    loop = assemble_closed_loop(_toy_plant(), realize(TransferFunction([1.0], [1.0, 1.0])))
    assert np.linalg.norm(loop.c_tilde) == pytest.approx(1.0)
    assert np.linalg.norm(np.outer(loop.c_tilde, loop.c_tilde), 2) == pytest.approx(1.0)
    assert np.allclose(np.outer(loop.B_tilde, loop.c_tilde), np.outer(loop.B, loop.c))


def test_nonzero_plant_feedthrough_rejected():
    p = LtiSystem([[-1.0]], [[1.0]], [[1.0], [1.0]], [[1.0], [0.0]])
    with pytest.raises(DimensionMismatch):
        assemble_closed_loop(p, LtiSystem.gain(1.0))


def test_balanced_loop_preserves_channel(rng):
    plant = _toy_plant()
    ctrl = build_wadc(WadcConfig(K=0.5, tw=10, tau1=0.5, tau2=0.1, delay=0.1))
    loop = assemble_closed_loop(plant, ctrl)
    bal = balanced_loop(loop)
    w = np.logspace(-1, 2, 30)
    assert np.allclose(frequency_response(loop.as_system(), w),
                       frequency_response(bal.as_system(), w), rtol=1e-7, atol=1e-10)
    assert bal.projection.shape == (bal.n, loop.n)
    assert bal.u_e == loop.u_e


def test_balanced_loop_rejects_unstable():
    loop = ClosedLoop(np.diag([0.1, -1.0]), np.ones(2), np.ones(2), 2, 0)
    with pytest.raises(UnstableClosedLoop):
        balanced_loop(loop)


def test_residue_first_order():
    # 2/(s+3): residue 2 at -3
    sys = realize(TransferFunction([2.0], [1.0, 3.0]))
    rep = modal_residues(sys, modes(sys.A))
    assert rep.best().value == pytest.approx(2.0)


def test_residue_scales_with_input(rng):
    A = random_hurwitz(rng, 4)
    B = rng.standard_normal((4, 2))
    C = rng.standard_normal((2, 4))
    ms = modes(A)
    r1 = modal_residues(LtiSystem(A, B, C, np.zeros((2, 2))), ms)
    r2 = modal_residues(LtiSystem(A, 2 * B, C, np.zeros((2, 2))), ms)
    assert r1.ranking() == r2.ranking()
    assert np.allclose([e.magnitude * 2 for e in r1.entries], [e.magnitude for e in r2.entries])


def test_residue_matches_partial_fractions():
    # (s+4)/((s+1)(s+2)) = 3/(s+1) - 2/(s+2)
    sys = realize(TransferFunction([1.0, 4.0], [1.0, 3.0, 2.0]))
    rep = modal_residues(sys, modes(sys.A))
    by_pole = {round(modes(sys.A)[e.mode].eigenvalue.real): e.value for e in rep.entries}
    assert by_pole[-1] == pytest.approx(3.0)
    assert by_pole[-2] == pytest.approx(-2.0)


def test_screen_interarea():
    lam = [complex(-0.05, 2 * np.pi * 0.5), complex(-1.0, 2 * np.pi * 1.5)]
    blocks = [np.array([[l.real, l.imag], [-l.imag, l.real]]) for l in lam]
    A = np.block([[blocks[0], np.zeros((2, 2))], [np.zeros((2, 2)), blocks[1]]])
    found = screen_interarea(modes(A))
    assert len(found) == 1
    assert found[0].frequency == pytest.approx(0.5)
