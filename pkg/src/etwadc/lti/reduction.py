"""Balanced truncation with exact retention of non-decaying modes."""
import numpy as np
import scipy.linalg
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ..exceptions import TargetTooSmall
from .lyapunov import solve_lyapunov
from .systems import LtiSystem

# Modes with Re(lambda) >= -STABILITY_MARGIN are kept exactly.
STABILITY_MARGIN = 1e-8


def _psd_factor(W):
    """``L`` with ``W = L L^T`` for a symmetric positive semi-definite ``W``."""
    vals, vecs = np.linalg.eigh(0.5 * (W + W.T))
    vals = np.clip(vals, 0.0, None)
    return vecs * np.sqrt(vals)


class BalancedTruncation(TransformerMixin, BaseEstimator):
    """Reduce an LTI model to ``order`` states.

    The model is split into a stable part and the modes with
    ``Re(lambda) >= -1e-8``; the latter are carried over unchanged and the
    stable part is balanced (square-root method, Gramians from
    :func:`solve_lyapunov`) and truncated.

    After :meth:`fit`:

    ``reduced_``
        the reduced :class:`LtiSystem`, stable states first.
    ``hankel_singular_values_``
        of the stable part, descending.
    ``error_bound_``
        twice the sum of the discarded Hankel singular values.
    ``projection_`` / ``lifting_``
        matrices with ``z = projection_ @ x`` and ``x ~ lifting_ @ z``.

    :meth:`transform` maps full-state samples (rows) into reduced coordinates.
    """

    def __init__(self, order=12):
        self.order = order

    def fit(self, sys, y=None):
        n = sys.n_states
        r = int(self.order)
        if r > n or r < 0:
            raise ValueError(f"order must lie in [0, {n}], got {r}")
        self.n_states_in_ = n
        if r == n:
            self.reduced_ = sys
            self.projection_ = np.eye(n)
            self.lifting_ = np.eye(n)
            self.hankel_singular_values_ = np.zeros(0)
            self.error_bound_ = 0.0
            self.n_unstable_ = int(np.sum(sys.poles().real >= -STABILITY_MARGIN))
            return self

        T, Tinv, ns = _stable_unstable_split(sys.A)
        nu = n - ns
        if nu > r:
            raise TargetTooSmall(
                f"{nu} non-decaying modes cannot fit in order {r}")
        As = (Tinv @ sys.A @ T)[:ns, :ns]
        Au = (Tinv @ sys.A @ T)[ns:, ns:]
        Bz, Cz = Tinv @ sys.B, sys.C @ T
        Bs, Bu = Bz[:ns], Bz[ns:]
        Cs, Cu = Cz[:, :ns], Cz[:, ns:]

        k = r - nu
        Wc = solve_lyapunov(As.T, Bs @ Bs.T)
        Wo = solve_lyapunov(As, Cs.T @ Cs)
        Lc, Lo = _psd_factor(Wc), _psd_factor(Wo)
        U, hsv, Vt = np.linalg.svd(Lo.T @ Lc)
        self.hankel_singular_values_ = hsv
        self.error_bound_ = float(2.0 * hsv[k:].sum())
        if k:
            scale = 1.0 / np.sqrt(hsv[:k])
            Tr = Lc @ Vt[:k].T * scale
            Tl = Lo @ U[:, :k] * scale
        else:
            Tr = np.zeros((ns, 0))
            Tl = np.zeros((ns, 0))
        Ar = Tl.T @ As @ Tr
        A = scipy.linalg.block_diag(Ar, Au)
        B = np.vstack([Tl.T @ Bs, Bu])
        C = np.hstack([Cs @ Tr, Cu])
        self.reduced_ = LtiSystem(A, B, C, sys.D)
        self.projection_ = scipy.linalg.block_diag(Tl.T, np.eye(nu)) @ Tinv
        self.lifting_ = T @ scipy.linalg.block_diag(Tr, np.eye(nu))
        self.n_unstable_ = nu
        return self

    def transform(self, X):
        check_is_fitted(self, "reduced_")
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return X @ self.projection_.T

    def inverse_transform(self, Z):
        check_is_fitted(self, "reduced_")
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        return Z @ self.lifting_.T


def _stable_unstable_split(A):
    """Similarity ``T`` block-diagonalizing ``A`` into (stable, non-decaying).

    Returns ``T``, ``T^-1`` and the size of the stable block.
    """
    n = A.shape[0]
    S, Z, ns = scipy.linalg.schur(
        A, output="real", sort=lambda re, im: re < -STABILITY_MARGIN)
    if ns in (0, n):
        return Z, Z.T, ns
    A11, A12, A22 = S[:ns, :ns], S[:ns, ns:], S[ns:, ns:]
    # A11 X - X A22 = -A12 decouples the blocks
    X = scipy.linalg.solve_sylvester(A11, -A22, -A12)
    E = np.eye(n)
    E[:ns, ns:] = X
    Einv = np.eye(n)
    Einv[:ns, ns:] = -X
    return Z @ E, Einv @ Z.T, ns


def reduce_order(sys, target_order):
    """Functional form of :class:`BalancedTruncation`; returns the reduced system."""
    return BalancedTruncation(order=target_order).fit(sys).reduced_
