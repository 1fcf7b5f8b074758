"""Event-triggered simulation of the WADC loop, linear or nonlinear."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ..exceptions import ValidationError
from ..grid.dynamics import DynamicModel, WadcLink, simulate_nonlinear
from ..lti.simulate import SimTrace, check_finite, rk4_propagators
from ..wadc import ClosedLoop
from .trigger import TriggerConfig


@dataclass(frozen=True)
class EventLog:
    """Transmission instants of one run.

    ``ey_at_fire`` is the error that tripped the condition (before the
    refresh; zero for the initial transmission). ``tau`` holds the
    ``count - 1`` inter-event times.
    """

    k: np.ndarray
    t: np.ndarray
    held: np.ndarray
    ey_at_fire: np.ndarray
    baseline: int
    dt: float

    @property
    def count(self):
        return len(self.t)

    @property
    def tau(self):
        # from step indices so that a one-step gap is exactly dt
        return np.diff(self.k) * self.dt

    def to_csv(self, path):
        tau = self.tau
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "t_k_s", "y1_held", "ey_at_fire", "tau_k_s"])
            for i in range(self.count):
                w.writerow([int(self.k[i]), repr(float(self.t[i])), repr(float(self.held[i])),
                            repr(float(self.ey_at_fire[i])),
                            repr(float(tau[i])) if i < len(tau) else ""])


class TriggerHold:
    """Hold policy that transmits when the event condition holds.

    The first call (``t0 = 0``) always transmits. With ``cfg=None`` every
    call transmits, which is the continuously-fed reference.
    """

    def __init__(self, cfg: TriggerConfig = None):
        self.cfg = cfg
        self.reset()

    def reset(self):
        self.records = []

    def update(self, k, t, y_now, held):
        e = held - y_now
        first = not self.records
        if first or self.cfg is None or e * e >= self.cfg.rho * y_now * y_now:
            self.records.append((k, t, y_now, 0.0 if first else e))
            return y_now, True
        return held, False

    def log(self, n_steps, dt):
        rec = np.array(self.records, dtype=float).reshape(-1, 4)
        return EventLog(rec[:, 0].astype(int), rec[:, 1], rec[:, 2], rec[:, 3],
                        int(n_steps), float(dt))


def _n_steps(dt, t_end):
    dt = float(dt)
    if dt <= 0:
        raise ValidationError("dt must be positive")
    n = int(round(t_end / dt))
    if n < 1:
        raise ValidationError("t_end must cover at least one step")
    return n


def run_linear(loop: ClosedLoop, cfg: TriggerConfig, x0, dt=0.005, t_end=10.0):
    """Event-triggered run of the augmented linear loop.

    Between steps ``x' = (A - B c) x + B y1_held``, integrated with the exact
    RK4 propagators. The trigger is evaluated at steps ``0 .. N-1``.
    """
    n_steps = _n_steps(dt, t_end)
    if cfg is not None and cfg.loop_checksum and cfg.loop_checksum != loop.checksum():
        raise ValidationError("trigger was designed for a different closed loop")
    A, B, c = loop.A, loop.B.reshape(-1, 1), loop.c
    x = np.array(x0, dtype=float).reshape(-1)
    if x.size != loop.n:
        raise ValidationError(f"x0 has {x.size} entries, loop has {loop.n} states")
    Phi, Gam = rk4_propagators(A - B @ c[None, :], B, dt)
    gam = Gam[:, 0]
    hold = TriggerHold(cfg)
    X = np.empty((n_steps + 1, loop.n))
    y1 = np.empty(n_steps + 1)
    held_rec = np.empty(n_steps + 1)
    fired = np.zeros(n_steps + 1)
    held = 0.0
    for k in range(n_steps + 1):
        X[k] = x
        y = float(c @ x)
        if k < n_steps:
            held, f = hold.update(k, k * dt, y, held)
            fired[k] = f
        y1[k] = y
        held_rec[k] = held
        if k < n_steps:
            x = Phi @ x + gam * held
            check_finite(x, (k + 1) * dt)
    t = dt * np.arange(n_steps + 1)
    e = held_rec - y1
    rho = 0.0 if cfg is None else cfg.rho
    signals = {"y1": y1, "y1_held": held_rec, "e_y": e,
               "threshold": np.sqrt(rho) * np.abs(y1), "event": fired}
    if loop.u_row is not None:
        signals["u_wadc"] = loop.control(X, e)
    meta = {"mode": "linear", "dt": float(dt), "sigma": None if cfg is None else cfg.sigma,
            "rho": rho, "loop_checksum": loop.checksum()}
    trace = SimTrace(t=t, states=X, signals=signals, meta=meta)
    return trace, hold.log(n_steps, dt)


def run_nonlinear(model: DynamicModel, link: WadcLink, cfg: TriggerConfig, dt=0.005,
                  t_end=10.0):
    """Event-triggered run of the nonlinear grid model with the WADC attached."""
    n_steps = _n_steps(dt, t_end)
    hold = TriggerHold(cfg)
    trace = simulate_nonlinear(model, link, dt=dt, t_end=t_end, hold=hold)
    rho = 0.0 if cfg is None else cfg.rho
    trace.signals["threshold"] = np.sqrt(rho) * np.abs(trace.signals["y1"])
    trace.meta.update({"sigma": None if cfg is None else cfg.sigma, "rho": rho})
    return trace, hold.log(n_steps, dt)


def run_event_sim(system, cfg: TriggerConfig, dt=0.005, t_end=10.0, x0=None):
    """Run the event-triggered loop and return ``(SimTrace, EventLog)``.

    ``system`` is either a :class:`ClosedLoop` (linear mode; ``x0`` is the
    initial augmented state) or a ``(DynamicModel, WadcLink)`` pair
    (nonlinear mode; the model's fault schedule supplies the disturbance).
    ``cfg=None`` transmits at every step.
    """
    if isinstance(system, ClosedLoop):
        if x0 is None:
            raise ValidationError("linear mode needs an initial state")
        return run_linear(system, cfg, x0, dt, t_end)
    try:
        model, link = system
    except (TypeError, ValueError):
        raise ValidationError("system must be a ClosedLoop or a (DynamicModel, WadcLink) pair")
    return run_nonlinear(model, link, cfg, dt, t_end)
