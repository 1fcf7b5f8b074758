"""Numerical check of the Lyapunov decrease along an event-triggered trace."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import WrongMode
from .trigger import TriggerConfig

TRIGGER_SLACK = 1e-9
DECAY_RTOL = 1e-6


@dataclass(frozen=True)
class IssReport:
    V: np.ndarray
    Vdot: np.ndarray          # (V[k+1] - V[k]) / dt, one per step
    bound: np.ndarray         # -(1 - sigma) lambda_min(Q)/2 |x|^2, step average
    trigger_violations: int
    decay_violations: int
    max_trigger_violation: float
    max_decay_violation: float

    @property
    def violations(self):
        return self.trigger_violations + self.decay_violations

    @property
    def ok(self):
        return self.violations == 0


def verify_iss(trace, cfg: TriggerConfig) -> IssReport:
    """Check the trigger enforcement and the decay bound on every step.

    For each step the finite difference ``(V[k+1] - V[k]) / dt`` is compared
    with the bound averaged over the step (trapezoid rule), and the held
    error after the step's trigger update must satisfy
    ``e^2 <= rho y1^2 + 1e-9``. The decay tolerance is ``1e-6 max V``.
    """
    if trace.meta.get("mode") != "linear" or trace.states is None:
        raise WrongMode("ISS verification needs a linear-mode trace with the augmented state")
    X = np.asarray(trace.states)
    if X.shape[1] != cfg.P.shape[0]:
        raise WrongMode("trace state does not match the trigger's loop")
    dt = float(trace.meta["dt"])
    V = np.einsum("ki,ij,kj->k", X, cfg.P, X)
    x2 = np.einsum("ki,ki->k", X, X)
    rate = (1.0 - cfg.sigma) * cfg.lambda_min_q / 2.0
    Vdot = np.diff(V) / dt
    bound = -rate * 0.5 * (x2[:-1] + x2[1:])
    tol = DECAY_RTOL * float(np.max(V, initial=0.0))
    decay_excess = Vdot - bound - tol
    e = np.asarray(trace.signals["e_y"])[:-1]
    y = np.asarray(trace.signals["y1"])[:-1]
    trig_excess = e * e - cfg.rho * y * y - TRIGGER_SLACK
    return IssReport(V, Vdot, bound,
                     int(np.sum(trig_excess > 0)), int(np.sum(decay_excess > 0)),
                     float(max(np.max(trig_excess, initial=0.0), 0.0)),
                     float(max(np.max(decay_excess, initial=0.0), 0.0)))
