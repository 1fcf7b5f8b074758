"""Wide-area damping controller: siting, realization and loop assembly."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .exceptions import (DefectiveMode, DimensionMismatch, UnstableClosedLoop,
                         ValidationError)
from .lti.modal import ModeInfo
from .lti.systems import (LtiSystem, TransferFunction, pade_delay, realize, series,
                          stack_inputs)

INTERAREA_BAND_HZ = (0.2, 0.8)


@dataclass(frozen=True)
class WadcConfig:
    """Lead-lag damping controller ``K sTw/(sTw+1) (1+s tau1)/(1+s tau2)``
    with a channel latency ``delay`` on the remote leg."""

    K: float
    tw: float = 10.0
    tau1: float = 0.5
    tau2: float = 0.1
    delay: float = 0.1
    limit: float = None

    def __post_init__(self):
        if self.tw <= 0:
            raise ValidationError("washout time constant must be positive")
        if self.tau2 <= 0:
            raise ValidationError("tau2 must be positive")
        if self.delay < 0:
            raise ValidationError("delay must be non-negative")
        if self.limit is not None and self.limit <= 0:
            raise ValidationError("output limit must be positive")

    def transfer_function(self):
        return (TransferFunction([self.K * self.tw, 0.0], [self.tw, 1.0])
                * TransferFunction([self.tau1, 1.0], [self.tau2, 1.0]))


def build_wadc(cfg: WadcConfig) -> LtiSystem:
    """Realize the controller with inputs ``[y_remote, y_local]``.

    The remote signal passes the Padé delay before the difference
    ``y_local - y_remote`` enters the lead-lag. States are the delay states
    followed by the washout/lead-lag states.
    """
    lead_lag = realize(cfg.transfer_function())
    delay = pade_delay(cfg.delay)
    # [y_remote, y_local] -> y_local - delay(y_remote)
    both = stack_inputs(delay, LtiSystem.gain(1.0))
    diff = series(both, LtiSystem.gain([[-1.0, 1.0]]))
    return series(diff, lead_lag)


@dataclass(frozen=True, eq=False)
class ClosedLoop:
    """Event-triggered augmented loop ``x' = A x + B e_y``, ``y1 = c x``.

    ``B`` injects the physical remote-signal error ``e_y = y1(t_k) - y1(t)``
    and ``c`` is the raw selector of ``y1``. ``c_tilde`` is ``c`` scaled to
    unit norm, and ``B_tilde = B * |c|`` the matching injection of the
    normalized error. ``A`` and ``B`` with ``e_y = 0`` give the
    continuously-fed loop.

    The controller output is ``u = u_row x + u_e e_y``. ``projection`` maps
    the state of the loop as assembled onto this realization's state (the
    identity unless the loop was re-realized, see :func:`balanced_loop`).
    """

    A: np.ndarray
    B: np.ndarray
    c: np.ndarray
    n_plant: int
    n_controller: int
    u_row: np.ndarray = None
    u_e: float = 0.0
    projection: np.ndarray = None

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def output_scale(self):
        return float(np.linalg.norm(self.c))

    @property
    def c_tilde(self):
        return self.c / self.output_scale

    @property
    def B_tilde(self):
        return self.B * self.output_scale

    def checksum(self):
        """SHA-256 over the loop matrices (bytes of the float64 arrays)."""
        h = hashlib.sha256()
        for M in (self.A, self.B, self.c):
            h.update(np.ascontiguousarray(M, dtype=np.float64).tobytes())
        return h.hexdigest()

    def control(self, x, e):
        """Controller output for states ``x`` (rows) and errors ``e``."""
        return np.asarray(x) @ self.u_row + self.u_e * np.asarray(e)

    def as_system(self):
        """The loop as an LTI system from ``e_y`` to ``y1``."""
        return LtiSystem(self.A, self.B.reshape(-1, 1), self.c.reshape(1, -1), [[0.0]])


def assemble_closed_loop(plant: LtiSystem, wadc: LtiSystem, remote_signal=0,
                         local_signal=1) -> ClosedLoop:
    """Build the augmented matrices of the event-triggered loop.

    ``plant`` has one input (the controller injection) and outputs including
    the remote ``y1`` and local ``y2`` rows. ``wadc`` takes either the pair
    ``[y1_held, y2]`` or the single difference ``y2 - y1_held``; in the
    latter case ``B = [-Bp Dc; -Bc]`` and ``A`` has blocks
    ``[[Ap + Bp Dc C, Bp Cc], [Bc C, Ac]]`` with ``C = C2 - C1``.
    """
    if plant.n_inputs != 1 or wadc.n_outputs != 1:
        raise DimensionMismatch("expected a single-input plant and single-output controller")
    if np.any(plant.D != 0):
        raise DimensionMismatch("plant must be strictly proper")
    C1 = plant.C[remote_signal]
    C2 = plant.C[local_signal]
    if wadc.n_inputs == 2:
        Bc1, Bc2 = wadc.B[:, 0], wadc.B[:, 1]
        Dc1, Dc2 = wadc.D[0, 0], wadc.D[0, 1]
    elif wadc.n_inputs == 1:
        Bc1, Bc2 = -wadc.B[:, 0], wadc.B[:, 0]
        Dc1, Dc2 = -wadc.D[0, 0], wadc.D[0, 0]
    else:
        raise DimensionMismatch("controller must have one or two inputs")
    Ap, Bp = plant.A, plant.B
    Ac, Cc = wadc.A, wadc.C
    ymix = Dc1 * C1 + Dc2 * C2
    A = np.block([
        [Ap + Bp @ ymix[None, :], Bp @ Cc],
        [np.outer(Bc1, C1) + np.outer(Bc2, C2), Ac],
    ])
    B = np.concatenate([Bp[:, 0] * Dc1, Bc1])
    c = np.concatenate([C1, np.zeros(wadc.n_states)])
    if not np.any(c):
        raise DimensionMismatch("remote output row is identically zero")
    u_row = np.concatenate([ymix, Cc[0]])
    return ClosedLoop(A, B, c, plant.n_states, wadc.n_states, u_row, float(Dc1),
                      np.eye(A.shape[0]))


def balanced_loop(loop: ClosedLoop, tol=1e-10) -> ClosedLoop:
    """Balanced realization of the error-to-``y1`` channel of ``loop``.

    The Lyapunov threshold depends on the state coordinates. In balanced
    coordinates the error channel is equally controllable and observable in
    every state, which keeps ``P`` well scaled. Directions with Hankel
    singular value below ``tol`` times the largest (uncontrollable or
    unobservable from this channel) are dropped.
    """
    from .lti.lyapunov import is_hurwitz, solve_lyapunov
    from .lti.reduction import _psd_factor

    if not is_hurwitz(loop.A):
        raise UnstableClosedLoop("closed loop is not asymptotically stable")
    A, B, c = loop.A, loop.B, loop.c
    Wc = solve_lyapunov(A.T, np.outer(B, B))
    Wo = solve_lyapunov(A, np.outer(c, c))
    Lc, Lo = _psd_factor(Wc), _psd_factor(Wo)
    U, hsv, Vt = np.linalg.svd(Lo.T @ Lc)
    k = int(np.sum(hsv > tol * hsv[0]))
    scale = 1.0 / np.sqrt(hsv[:k])
    Tr = Lc @ Vt[:k].T * scale          # x ~ Tr z
    Tl = (Lo @ U[:, :k] * scale).T      # z = Tl x
    u_row = None if loop.u_row is None else loop.u_row @ Tr
    base = np.eye(loop.n) if loop.projection is None else loop.projection
    return ClosedLoop(Tl @ A @ Tr, Tl @ B, c @ Tr, loop.n_plant, loop.n_controller,
                      u_row, loop.u_e, Tl @ base)


@dataclass(frozen=True)
class Residue:
    mode: int
    input: int
    output: int
    value: complex
    magnitude: float
    rank: int


@dataclass(frozen=True)
class ResidueReport:
    entries: tuple

    def best(self):
        return self.entries[0]

    def ranking(self):
        return [(e.input, e.output) for e in self.entries]


def modal_residues(plant: LtiSystem, modes, tol=1e-12) -> ResidueReport:
    """Residues ``(c v)(w^T b)/(w^T v)`` for every mode/input/output triple.

    Entries are ranked by magnitude, ties going to the lower input index,
    then the lower output index, then the lower mode position.
    """
    rows = []
    for k, mode in enumerate(modes):
        v, w = mode.right_eigenvector, mode.left_eigenvector
        denom = w @ v
        if abs(denom) < tol:
            raise DefectiveMode(f"mode {mode.eigenvalue} has w^T v ~ 0")
        obs = plant.C @ v
        ctrl = w @ plant.B
        for i in range(plant.n_inputs):
            for o in range(plant.n_outputs):
                r = complex(obs[o] * ctrl[i] / denom)
                rows.append((k, i, o, r))
    # magnitudes rounded so float noise cannot reorder genuine ties
    rows.sort(key=lambda t: (-round(abs(t[3]), 12), t[1], t[2], t[0]))
    return ResidueReport(tuple(Residue(k, i, o, r, abs(r), rank)
                               for rank, (k, i, o, r) in enumerate(rows, start=1)))


def screen_interarea(modes, band=INTERAREA_BAND_HZ):
    """Oscillatory modes in the inter-area band, least damped first.

    Only the member of each conjugate pair with positive imaginary part is
    returned.
    """
    lo, hi = band
    out = [m for m in modes if m.eigenvalue.imag > 0 and lo <= m.frequency <= hi]
    return sorted(out, key=lambda m: (m.damping_ratio, m.frequency))
