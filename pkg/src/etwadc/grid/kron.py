"""Elimination of passive network nodes."""
import numpy as np

from ..exceptions import SingularEliminationBlock


def kron_reduce(Y, keep):
    """Return ``Y_kk - Y_ke Y_ee^-1 Y_ek`` for the kept node indices."""
    Y = np.asarray(Y, dtype=complex)
    n = Y.shape[0]
    keep = list(keep)
    elim = [i for i in range(n) if i not in set(keep)]
    Ykk = Y[np.ix_(keep, keep)]
    if not elim:
        return Ykk.copy()
    Yee = Y[np.ix_(elim, elim)]
    if np.linalg.cond(Yee) > 1e15:
        raise SingularEliminationBlock("eliminated block is singular")
    return Ykk - Y[np.ix_(keep, elim)] @ np.linalg.solve(Yee, Y[np.ix_(elim, keep)])
