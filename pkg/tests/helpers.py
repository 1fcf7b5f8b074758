"""Shared test utilities and independent reference computations."""
from importlib import resources
from pathlib import Path

import numpy as np

SCENARIOS = Path(str(resources.files("etwadc") / "data" / "scenarios"))

# criterion number -> (passed, detail); printed in the terminal summary
ACCEPTANCE = {}


def record(criterion, ok, detail):
    ACCEPTANCE[criterion] = (bool(ok), detail)
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}")
    return bool(ok)


def random_hurwitz(rng, n, margin=0.1):
    A = rng.standard_normal((n, n))
    shift = np.max(np.linalg.eigvals(A).real) + margin + rng.uniform(0, 1)
    return A - shift * np.eye(n)


def random_spd(rng, n):
    M = rng.standard_normal((n, n))
    return M @ M.T + n * np.eye(n)


def lyapunov_by_integral(A, Q, t_max=60.0, n=30000):
    """P = int_0^inf e^{A^T t} Q e^{A t} dt by the trapezoid rule on a fine grid.

    Uses repeated multiplication by the one-step matrix exponential so that
    it shares nothing with the solver under test.
    """
    import scipy.linalg

    h = t_max / n
    E = scipy.linalg.expm(A * h)
    Et = np.eye(A.shape[0])
    P = 0.5 * Q
    for _ in range(n):
        Et = Et @ E
        P = P + Et.T @ Q @ Et
    P -= 0.5 * Et.T @ Q @ Et
    return P * h


def gauss_seidel_two_bus(x, p_load, q_load=0.0, iters=10000):
    """Voltage at a PQ bus fed from a 1.0 pu slack through reactance ``x``."""
    y = 1.0 / (1j * x)
    V = 1.0 + 0j
    S = complex(-p_load, -q_load)
    for _ in range(iters):
        V = (np.conj(S) / np.conj(V) + y * 1.0) / y
    return V


def envelope(t, y, lo, hi):
    sel = (t >= lo) & (t < hi)
    return float(np.ptp(y[sel]))
