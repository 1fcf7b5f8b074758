"""Lower bound on the time between transmissions.

The relative error ``eta = |e~| / |x|`` starts at zero after every event and
obeys the comparison system

    eta' = (M1 + M2 eta)(1 + eta) = M2 eta^2 + M3 eta + M1,   M3 = M1 + M2,

with ``M1 = |C~ A|`` and ``M2 = |C~ B~|`` the state and error drive of
``e' = -C~ (A x + B~ e~)``. The time for ``eta`` to reach ``eta* = sqrt(rho)``
has a closed form when the quadratic has real roots.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from ..exceptions import ComplexDiscriminant, EtwadcError, UndefinedBound
from ..lti.lyapunov import spectral_norm

CROSS_CHECK_RTOL = 0.01


@dataclass(frozen=True)
class InterEventBound:
    M1: float
    M2: float
    M3: float
    eta_star: float
    tau_min: float
    closed_form: bool         # False when tau_min had to be integrated
    tau_integrated: float
    interpretation: str = "M1=|C~A| (state drive), M2=|C~B~| (error drive)"


def crossing_time(quad, lin, const, eta_star):
    """Closed-form time for ``eta' = quad eta^2 + lin eta + const`` to go 0 -> eta*.

    Raises :class:`ComplexDiscriminant` when ``lin^2 <= 4 quad const`` (with
    ``quad > 0``) and :class:`UndefinedBound` when ``eta`` never leaves 0.
    """
    a, b, c, eta = float(quad), float(lin), float(const), float(eta_star)
    if min(a, b, c) < 0 or eta <= 0:
        raise UndefinedBound("coefficients must be non-negative and eta* positive")
    if c == 0.0:
        raise UndefinedBound("no drive term: eta stays at zero")
    if a == 0.0:
        if b == 0.0:
            return eta / c
        return math.log1p(b * eta / c) / b
    disc = b * b - 4.0 * a * c
    if disc <= 0.0:
        raise ComplexDiscriminant(f"discriminant {disc:.3e} is not positive")
    sq = math.sqrt(disc)
    # ln[((2a eta + b - sq)/(2a eta + b + sq)) ((b + sq)/(b - sq))] / sq, with the
    # argument rewritten as 1 + x (using b - sq = 4ac/(b + sq)) so that nearly
    # repeated roots do not cancel
    x = eta * sq * (b + sq) / (c * (2 * a * eta + b + sq))
    return math.log1p(x) / sq


def integrate_crossing(quad, lin, const, eta_star, rtol=1e-10):
    """Adaptive integration of the comparison system until ``eta`` reaches ``eta*``."""
    a, b, c, eta_star = float(quad), float(lin), float(const), float(eta_star)
    if c <= 0.0:
        raise UndefinedBound("no drive term: eta stays at zero")
    hit = lambda t, e: e[0] - eta_star
    hit.terminal, hit.direction = True, 1
    # eta* / c is the slowest possible crossing (constant drive only)
    sol = solve_ivp(lambda t, e: a * e * e + b * e + c, (0.0, 2.0 * eta_star / c), [0.0],
                    method="LSODA", rtol=rtol, atol=1e-14 * max(1.0, eta_star), events=hit)
    return float(sol.t_events[0][0])


def inter_event_bound(loop, cfg, strict=False) -> InterEventBound:
    """Guaranteed minimum inter-event time for ``loop`` under ``cfg``.

    With a non-positive discriminant the integrated crossing time is returned
    (``closed_form=False``) and a :class:`ComplexDiscriminant` warning is
    issued; ``strict=True`` raises instead.
    """
    ct = np.asarray(loop.c_tilde).reshape(1, -1)
    M1 = spectral_norm(ct @ loop.A)
    M2 = spectral_norm(ct @ np.asarray(loop.B_tilde).reshape(-1, 1))
    return bound_from_constants(M1, M2, M1 + M2, cfg.eta_star, strict)


def bound_from_constants(M1, M2, M3, eta_star, strict=False) -> InterEventBound:
    """Evaluate the bound for given drive constants (``M3`` passed explicitly)."""
    if M1 == 0.0 and M2 == 0.0:
        raise UndefinedBound("M1 = M2 = 0: the error never grows, bound undefined")
    try:
        tau = crossing_time(M2, M3, M1, eta_star)
    except ComplexDiscriminant as exc:
        if strict:
            raise
        warnings.warn(str(exc), RuntimeWarning, stacklevel=2)
        tau_int = integrate_crossing(M2, M3, M1, eta_star)
        return InterEventBound(M1, M2, M3, eta_star, tau_int, False, tau_int)
    tau_int = integrate_crossing(M2, M3, M1, eta_star)
    if abs(tau_int - tau) > CROSS_CHECK_RTOL * tau:
        raise EtwadcError(f"closed-form bound {tau:.6g} disagrees with integration {tau_int:.6g}")
    return InterEventBound(M1, M2, M3, eta_star, tau, True, tau_int)
