"""Eigen-analysis with deterministic eigenvector phase."""
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ..validation import check_square


@dataclass(frozen=True, eq=False)
class ModeInfo:
    eigenvalue: complex
    frequency: float
    damping_ratio: float
    right_eigenvector: np.ndarray
    left_eigenvector: np.ndarray
    index: int = -1

    @property
    def is_oscillatory(self):
        return self.eigenvalue.imag != 0.0


def damping_ratio(lam):
    mag = abs(lam)
    if mag == 0.0:
        return 0.0
    return float(-lam.real / mag)


def fix_phase(v):
    """Unit Euclidean norm, first non-negligible component real and positive."""
    v = np.asarray(v, dtype=complex)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        return v
    v = v / norm
    mags = np.abs(v)
    k = int(np.argmax(mags > 1e-10 * mags.max()))
    return v * (abs(v[k]) / v[k])


def modes(A):
    """All eigenmodes of ``A``, sorted by damping ratio ascending.

    Left eigenvectors satisfy ``w^T A = lambda w^T`` (plain transpose), which
    is the convention used by the residue formula.
    """
    A = check_square(A, "A")
    if A.shape[0] == 0:
        return []
    lam, vl, vr = scipy.linalg.eig(A, left=True, right=True)
    out = []
    for i, l in enumerate(lam):
        l = complex(l)
        out.append(ModeInfo(
            eigenvalue=l,
            frequency=abs(l.imag) / (2 * np.pi),
            damping_ratio=damping_ratio(l),
            right_eigenvector=fix_phase(vr[:, i]),
            left_eigenvector=fix_phase(np.conj(vl[:, i])),
            index=i,
        ))
    out.sort(key=lambda m: (round(m.damping_ratio, 12), round(m.frequency, 12),
                            -m.eigenvalue.imag))
    return out
