"""Continuous algebraic Lyapunov equation and norm helpers."""
import numpy as np
import scipy.linalg

from ..exceptions import NonSymmetricQ, SingularLyapunov
from ..validation import check_square

_SINGULAR_TOL = 1e-12
# Above this order the n^2 x n^2 dense system gets expensive; Bartels-Stewart instead.
_KRON_MAX_ORDER = 40


def solve_lyapunov(A, Q, method="auto"):
    """Solve ``A^T P + P A + Q = 0`` for symmetric ``P``.

    ``method='kron'`` solves the stacked ``n^2``-unknown linear system
    directly and applies one step of iterative refinement; ``'schur'`` uses
    the Bartels-Stewart solver from SciPy. ``'auto'`` picks ``kron`` up to
    order 40.

    Raises
    ------
    NonSymmetricQ
        If ``Q`` is not symmetric.
    SingularLyapunov
        If two eigenvalues of ``A`` sum to (numerically) zero, in which case
        the solution is not unique.
    """
    A = check_square(A, "A")
    Q = check_square(Q, "Q")
    n = A.shape[0]
    if Q.shape != A.shape:
        raise ValueError(f"Q has shape {Q.shape}, A has {A.shape}")
    qmax = max(1.0, float(np.max(np.abs(Q)))) if n else 1.0
    if n and np.max(np.abs(Q - Q.T)) > 1e-12 * qmax:
        raise NonSymmetricQ("Q must be symmetric")
    if n == 0:
        return np.zeros((0, 0))
    lam = np.linalg.eigvals(A)
    sums = np.abs(lam[:, None] + lam[None, :])
    if sums.min() < _SINGULAR_TOL:
        raise SingularLyapunov(
            f"eigenvalues of A sum to {sums.min():.3g}; solution not unique")
    Q = 0.5 * (Q + Q.T)
    if method == "auto":
        method = "kron" if n <= _KRON_MAX_ORDER else "schur"
    if method == "kron":
        P = _solve_kron(A, Q)
    elif method == "schur":
        P = scipy.linalg.solve_continuous_lyapunov(A.T, -Q)
    else:
        raise ValueError(f"unknown method {method!r}")
    return 0.5 * (P + P.T)


def _solve_kron(A, Q):
    n = A.shape[0]
    eye = np.eye(n)
    # column-major vec: vec(A^T P) = (I kron A^T) vec P, vec(P A) = (A^T kron I) vec P
    L = np.kron(eye, A.T) + np.kron(A.T, eye)
    lu = scipy.linalg.lu_factor(L)
    rhs = -Q.reshape(-1, order="F")
    p = scipy.linalg.lu_solve(lu, rhs)
    resid = rhs - L @ p
    p = p + scipy.linalg.lu_solve(lu, resid)
    return p.reshape(n, n, order="F")


def lyapunov_residual(A, P, Q):
    """Entrywise max of ``A^T P + P A + Q``."""
    A, P, Q = (np.asarray(M, dtype=float) for M in (A, P, Q))
    return float(np.max(np.abs(A.T @ P + P @ A + Q))) if A.size else 0.0


def spectral_norm(M):
    """Largest singular value (the induced 2-norm)."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def is_hurwitz(A, margin=0.0):
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return True
    return bool(np.max(np.linalg.eigvals(A).real) < -margin)
