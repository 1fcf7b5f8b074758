"""Lyapunov-based transmission threshold for the remote WADC signal."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..exceptions import UnstableClosedLoop, ValidationError
from ..lti.lyapunov import is_hurwitz, solve_lyapunov, spectral_norm
from ..validation import check_sigma, check_square

# rho is stored to this many significant digits so that rescaling Q (which
# moves P and lambda_min(Q) by the same factor up to rounding) leaves the
# threshold, and therefore every event decision, bitwise unchanged.
RHO_DIGITS = 12


def _round_significant(x, digits=RHO_DIGITS):
    if x == 0.0 or not np.isfinite(x):
        return x
    return float(f"{x:.{digits - 1}e}")


@dataclass(frozen=True, eq=False)
class TriggerConfig:
    """Event condition ``|e_y|^2 >= rho |y1|^2`` and the data behind ``rho``.

    ``rho = sigma lambda_min(Q)^2 / (4 |P B~|^2 |C~|^2)`` where ``P`` solves
    ``A^T P + P A = -Q`` for the augmented loop, ``B~`` injects the error of
    the unit-norm output ``C~ x`` and hence ``|C~| = 1``.
    """

    sigma: float
    rho: float
    Q: np.ndarray
    P: np.ndarray
    lambda_min_q: float
    pb_norm: float
    loop_checksum: str = ""

    @property
    def eta_star(self):
        """Relative error level at which transmissions are triggered."""
        return float(np.sqrt(self.rho))

    def with_sigma(self, sigma):
        """Same loop and ``Q`` at another ``sigma`` (``rho`` is linear in it)."""
        sigma = check_sigma(sigma)
        rho = _round_significant(sigma * self.lambda_min_q ** 2 / (4.0 * self.pb_norm ** 2))
        return TriggerConfig(sigma, rho, self.Q, self.P, self.lambda_min_q,
                             self.pb_norm, self.loop_checksum)


def compute_trigger_threshold(loop, Q=None, sigma=0.5) -> TriggerConfig:
    """Threshold ``rho`` guaranteeing input-to-state stability of ``loop``.

    ``Q`` defaults to the identity; only its shape matters since ``rho`` is
    invariant to scaling it.
    """
    sigma = check_sigma(sigma)
    A = check_square(loop.A, "A")
    if not is_hurwitz(A):
        raise UnstableClosedLoop("augmented closed loop is not Hurwitz")
    Q = np.eye(A.shape[0]) if Q is None else check_square(Q, "Q")
    if Q.shape != A.shape:
        raise ValidationError(f"Q has shape {Q.shape}, loop has {A.shape[0]} states")
    lam = float(np.linalg.eigvalsh(0.5 * (Q + Q.T))[0])
    if lam <= 0.0:
        raise ValidationError("Q must be positive definite")
    P = solve_lyapunov(A, Q)
    pb = spectral_norm(P @ np.asarray(loop.B_tilde).reshape(-1, 1))
    rho = _round_significant(sigma * lam ** 2 / (4.0 * pb ** 2))
    return TriggerConfig(sigma, rho, Q, P, lam, pb, loop.checksum())


def check_trigger(y1_held, y1_now, cfg: TriggerConfig) -> bool:
    """True when the held remote value must be refreshed."""
    e = float(y1_held) - float(y1_now)
    return e * e >= cfg.rho * float(y1_now) ** 2


class EventTriggeredWadc(BaseEstimator):
    """Event-triggered transmission law for a designed WADC loop.

    Parameters
    ----------
    sigma : float in (0, 1)
        Fraction of the Lyapunov decay budget given up to the held error.
    Q : array or None
        Weight of the Lyapunov equation (identity by default).
    realization : {'balanced', 'as-assembled'}
        Coordinates of the augmented state in which ``P`` is computed.
        The balanced realization keeps ``P`` well conditioned and yields a
        far less conservative ``rho``.

    After :meth:`fit` the estimator exposes ``loop_`` (the realization
    used), ``trigger_`` (:class:`TriggerConfig`) and ``inter_event_bound_``.
    :meth:`predict` evaluates the event condition on ``(y1_held, y1_now)``
    rows.
    """

    def __init__(self, sigma=0.5, Q=None, realization="balanced"):
        self.sigma = sigma
        self.Q = Q
        self.realization = realization

    def fit(self, loop, y=None):
        from ..wadc import balanced_loop
        from .bound import inter_event_bound

        if self.realization == "balanced":
            loop = balanced_loop(loop)
        elif self.realization != "as-assembled":
            raise ValidationError(f"unknown realization {self.realization!r}")
        self.loop_ = loop
        self.trigger_ = compute_trigger_threshold(loop, self.Q, self.sigma)
        self.inter_event_bound_ = inter_event_bound(loop, self.trigger_)
        return self

    def predict(self, X):
        check_is_fitted(self, "trigger_")
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != 2:
            raise ValidationError("expected columns (y1_held, y1_now)")
        e = X[:, 0] - X[:, 1]
        return e * e >= self.trigger_.rho * X[:, 1] ** 2
