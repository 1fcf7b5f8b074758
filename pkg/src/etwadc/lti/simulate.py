"""Fixed-step RK4 integration and the time-series record it produces."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import NonFiniteState
from ..validation import as_vector

DIVERGENCE_LIMIT = 1e12


@dataclass
class SimTrace:
    """Time-indexed record of a simulation.

    ``states`` has one row per time in ``t``; ``signals`` holds any further
    named per-step columns (held values, errors, thresholds, controls, ...).
    """

    t: np.ndarray
    states: np.ndarray
    outputs: np.ndarray = None
    inputs: np.ndarray = None
    signals: dict = field(default_factory=dict)
    state_labels: tuple = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    def column(self, name):
        return self.signals[name]

    def to_csv(self, path, columns=None):
        """Write ``t`` plus the named signal columns (default: all signals)."""
        columns = list(self.signals) if columns is None else list(columns)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t"] + columns)
            for k in range(len(self.t)):
                w.writerow([repr(float(self.t[k]))]
                           + [repr(float(self.signals[c][k])) for c in columns])


def check_finite(x, t=None):
    if not np.all(np.isfinite(x)) or np.max(np.abs(x), initial=0.0) > DIVERGENCE_LIMIT:
        where = "" if t is None else f" at t={t:.6g} s"
        raise NonFiniteState(f"state diverged{where}")


def rk4_step(f, t, x, h):
    """One classical Runge-Kutta step of ``x' = f(t, x)``."""
    k1 = f(t, x)
    k2 = f(t + 0.5 * h, x + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, x + 0.5 * h * k2)
    k4 = f(t + h, x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_propagators(A, B, h):
    """Matrices ``(Phi, Gamma)`` with ``x+ = Phi x + Gamma u``.

    For a linear system with the input held over the step these reproduce the
    classical RK4 update exactly (the degree-4 Taylor polynomial of ``hA``).
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    I = np.eye(n)
    hA = h * A
    hA2 = hA @ hA
    hA3 = hA2 @ hA
    Phi = I + hA + hA2 / 2.0 + hA3 / 6.0 + hA3 @ hA / 24.0
    Gamma = h * (I + hA / 2.0 + hA2 / 6.0 + hA3 / 24.0) @ np.asarray(B, dtype=float)
    return Phi, Gamma


def simulate_lti(sys, u=None, dt=1e-3, x0=None, n_steps=None):
    """Integrate ``sys`` with a zero-order-hold input sampled every ``dt``.

    ``u`` holds one row per step (shape ``(N,)`` or ``(N, m)``); ``N`` steps are
    taken and the trace has ``N + 1`` samples. With ``u=None`` the input is
    zero for ``n_steps`` steps.
    """
    dt = float(dt)
    if dt <= 0:
        raise ValueError("dt must be positive")
    m = sys.n_inputs
    if u is None:
        if n_steps is None:
            raise ValueError("give either u or n_steps")
        u = np.zeros((int(n_steps), m))
    else:
        u = np.asarray(u, dtype=float)
        if u.ndim == 1:
            u = u.reshape(-1, 1) if m == 1 else u.reshape(1, -1)
        if u.shape[1] != m:
            raise ValueError(f"input has {u.shape[1]} channels, system has {m}")
    N = u.shape[0]
    n = sys.n_states
    x = np.zeros(n) if x0 is None else as_vector(x0, "x0", n)
    Phi, Gamma = rk4_propagators(sys.A, sys.B, dt)
    X = np.empty((N + 1, n))
    X[0] = x
    for k in range(N):
        x = Phi @ x + Gamma @ u[k]
        check_finite(x, (k + 1) * dt)
        X[k + 1] = x
    U = np.vstack([u, u[-1:]]) if N else np.zeros((1, m))
    Y = X @ sys.C.T + U @ sys.D.T
    t = dt * np.arange(N + 1)
    return SimTrace(t=t, states=X, outputs=Y, inputs=U, state_labels=sys.state_labels)
