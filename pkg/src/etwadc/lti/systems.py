"""State-space and transfer-function carriers plus block composition."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..exceptions import (AlgebraicLoop, DimensionMismatch, FrequencyOnEigenvalue,
                          ImproperTransferFunction, NegativeDelay)
from ..validation import as_matrix

_WELL_POSED_TOL = 1e-12


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LtiSystem:
    """Continuous-time realization ``x' = Ax + Bu``, ``y = Cx + Du``.

    ``A`` may be 0x0, in which case the system is the static gain ``D``.
    Arrays are copied and made read-only on construction.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    state_labels: Optional[tuple] = None

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.size == 0:
            A = A.reshape(0, 0)
        A = as_matrix(A, "A") if A.size else A
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionMismatch(f"A must be square, got {A.shape}")
        D = as_matrix(self.D, "D")
        p, m = D.shape
        B = _as_block(self.B, n, m, "B")
        C = _as_block(self.C, p, n, "C")
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "B", _frozen(B))
        object.__setattr__(self, "C", _frozen(C))
        object.__setattr__(self, "D", _frozen(D))
        if self.state_labels is not None:
            labels = tuple(str(s) for s in self.state_labels)
            if len(labels) != n:
                raise DimensionMismatch(
                    f"{len(labels)} state labels for {n} states")
            object.__setattr__(self, "state_labels", labels)

    @property
    def n_states(self):
        return self.A.shape[0]

    @property
    def n_inputs(self):
        return self.D.shape[1]

    @property
    def n_outputs(self):
        return self.D.shape[0]

    @classmethod
    def gain(cls, k):
        D = as_matrix(k, "gain")
        return cls(np.zeros((0, 0)), np.zeros((0, D.shape[1])),
                   np.zeros((D.shape[0], 0)), D)

    def poles(self):
        return np.linalg.eigvals(self.A) if self.n_states else np.zeros(0, complex)

    def evaluate(self, s):
        """Transfer matrix ``C (sI - A)^-1 B + D`` at one complex point."""
        if self.n_states == 0:
            return self.D.astype(complex)
        M = s * np.eye(self.n_states) - self.A
        return self.C @ np.linalg.solve(M, self.B) + self.D

    def dc_gain(self):
        return self.evaluate(0.0).real

    def similarity(self, T, Tinv=None):
        """Return the realization in coordinates ``x = T z``."""
        T = np.asarray(T, dtype=float)
        Tinv = np.linalg.inv(T) if Tinv is None else np.asarray(Tinv, dtype=float)
        return LtiSystem(Tinv @ self.A @ T, Tinv @ self.B, self.C @ T, self.D)

    def select(self, outputs=None, inputs=None):
        """Sub-system keeping the given output rows and input columns."""
        outputs = range(self.n_outputs) if outputs is None else list(outputs)
        inputs = range(self.n_inputs) if inputs is None else list(inputs)
        outputs, inputs = list(outputs), list(inputs)
        return LtiSystem(self.A, self.B[:, inputs], self.C[outputs, :],
                         self.D[np.ix_(outputs, inputs)], self.state_labels)

    def __repr__(self):
        return (f"LtiSystem(n={self.n_states}, inputs={self.n_inputs}, "
                f"outputs={self.n_outputs})")


def _as_block(value, rows, cols, name):
    arr = np.array(value, dtype=float)
    if arr.size == 0:
        return np.zeros((rows, cols))
    arr = as_matrix(arr, name)
    if arr.shape != (rows, cols):
        raise DimensionMismatch(f"{name} has shape {arr.shape}, expected {(rows, cols)}")
    return arr


@dataclass(frozen=True)
class TransferFunction:
    """Rational SISO transfer function, coefficients in descending powers of s."""

    num: tuple
    den: tuple = field(default=(1.0,))

    def __post_init__(self):
        num = np.trim_zeros(np.atleast_1d(np.asarray(self.num, dtype=float)), "f")
        den = np.trim_zeros(np.atleast_1d(np.asarray(self.den, dtype=float)), "f")
        if den.size == 0:
            raise ImproperTransferFunction("denominator is identically zero")
        if num.size == 0:
            num = np.zeros(1)
        if num.size > den.size:
            raise ImproperTransferFunction(
                f"numerator degree {num.size - 1} exceeds denominator degree {den.size - 1}")
        object.__setattr__(self, "num", tuple(float(v) for v in num))
        object.__setattr__(self, "den", tuple(float(v) for v in den))

    def __call__(self, s):
        return np.polyval(self.num, s) / np.polyval(self.den, s)

    def __mul__(self, other):
        return TransferFunction(np.polymul(self.num, other.num),
                                np.polymul(self.den, other.den))


def realize(tf: TransferFunction) -> LtiSystem:
    """Controllable canonical realization of a proper transfer function.

    No pole-zero cancellation is attempted: ``(s+2)/(s+2)`` becomes a one-state
    system whose response is identically 1.
    """
    if not isinstance(tf, TransferFunction):
        tf = TransferFunction(*tf)
    den = np.asarray(tf.den)
    num = np.asarray(tf.num)
    lead = den[0]
    den = den / lead
    n = den.size - 1
    num = np.concatenate([np.zeros(n + 1 - num.size), num]) / lead
    d = num[0]
    if n == 0:
        return LtiSystem.gain(d)
    rem = num[1:] - d * den[1:]
    A = np.zeros((n, n))
    A[0, :] = -den[1:]
    A[1:, :-1] = np.eye(n - 1)
    B = np.zeros((n, 1))
    B[0, 0] = 1.0
    return LtiSystem(A, B, rem.reshape(1, n), [[d]])


def pade_coefficients(T):
    """Numerator and denominator of the third-order Padé delay approximant."""
    T = float(T)
    if T < 0:
        raise NegativeDelay(f"delay must be non-negative, got {T}")
    num = [-T ** 3 / 120.0, T ** 2 / 12.0, -T / 2.0, 1.0]
    den = [T ** 3 / 120.0, T ** 2 / 12.0, T / 2.0, 1.0]
    return num, den


def pade_delay(T) -> LtiSystem:
    num, den = pade_coefficients(T)
    if T == 0:
        return LtiSystem.gain(1.0)
    return realize(TransferFunction(num, den))


def _check_ports(out_sys, in_sys):
    if out_sys.n_outputs != in_sys.n_inputs:
        raise DimensionMismatch(
            f"cannot connect {out_sys.n_outputs} outputs to {in_sys.n_inputs} inputs")


def series(a: LtiSystem, b: LtiSystem) -> LtiSystem:
    """Cascade: the output of ``a`` drives ``b``. States are ``[x_a; x_b]``."""
    _check_ports(a, b)
    na, nb = a.n_states, b.n_states
    A = np.block([[a.A, np.zeros((na, nb))], [b.B @ a.C, b.A]])
    B = np.vstack([a.B, b.B @ a.D])
    C = np.hstack([b.D @ a.C, b.C])
    return LtiSystem(A, B, C, b.D @ a.D)


def parallel_diff(a: LtiSystem, b: LtiSystem) -> LtiSystem:
    """Shared input, output ``y_a - y_b``."""
    if a.n_inputs != b.n_inputs or a.n_outputs != b.n_outputs:
        raise DimensionMismatch("parallel_diff needs identical port dimensions")
    na, nb = a.n_states, b.n_states
    A = np.block([[a.A, np.zeros((na, nb))], [np.zeros((nb, na)), b.A]])
    return LtiSystem(A, np.vstack([a.B, b.B]), np.hstack([a.C, -b.C]), a.D - b.D)


def stack_inputs(*systems: LtiSystem) -> LtiSystem:
    """Block-diagonal append: separate inputs, separate outputs."""
    A = _blkdiag([s.A for s in systems])
    B = _blkdiag([s.B for s in systems])
    C = _blkdiag([s.C for s in systems])
    D = _blkdiag([s.D for s in systems])
    return LtiSystem(A, B, C, D)


def _blkdiag(mats):
    rows = sum(m.shape[0] for m in mats)
    cols = sum(m.shape[1] for m in mats)
    out = np.zeros((rows, cols))
    r = c = 0
    for m in mats:
        out[r:r + m.shape[0], c:c + m.shape[1]] = m
        r += m.shape[0]
        c += m.shape[1]
    return out


def feedback(plant: LtiSystem, controller: LtiSystem, sign: int = -1) -> LtiSystem:
    """Close ``u = r + sign * K(y)`` around ``plant``.

    The result maps the external reference ``r`` to the plant output ``y`` and
    its state is ``[x_plant; x_controller]``. ``sign=+1`` is the convention of
    the augmented damping-control loop, where the controller output is added
    directly to the plant input.
    """
    _check_ports(plant, controller)
    _check_ports(controller, plant)
    if sign not in (-1, 1):
        raise ValueError("sign must be +1 or -1")
    p = plant.n_outputs
    loop = np.eye(p) - sign * plant.D @ controller.D
    if np.linalg.svd(loop, compute_uv=False).min() < _WELL_POSED_TOL:
        raise AlgebraicLoop("I - D_plant D_controller is singular")
    E = np.linalg.inv(loop)
    Ap, Bp, Cp, Dp = plant.A, plant.B, plant.C, plant.D
    Ac, Bc, Cc, Dc = controller.A, controller.B, controller.C, controller.D
    # y = Yx xp + Yc xc + Yr r ;  u = Ux xp + Uc xc + Ur r
    Yx, Yc, Yr = E @ Cp, sign * E @ Dp @ Cc, E @ Dp
    Ux = sign * Dc @ Yx
    Uc = sign * Cc + sign * Dc @ Yc
    Ur = np.eye(plant.n_inputs) + sign * Dc @ Yr
    A = np.block([[Ap + Bp @ Ux, Bp @ Uc], [Bc @ Yx, Ac + Bc @ Yc]])
    B = np.vstack([Bp @ Ur, Bc @ Yr])
    C = np.hstack([Yx, Yc])
    return LtiSystem(A, B, C, Yr)


def frequency_response(sys: LtiSystem, omega: Sequence[float]) -> np.ndarray:
    """Complex response ``C (jwI - A)^-1 B + D``, shape ``(len(omega), p, m)``."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if np.any(omega <= 0):
        raise ValueError("frequencies must be positive")
    out = np.empty((omega.size, sys.n_outputs, sys.n_inputs), dtype=complex)
    poles = sys.poles()
    for k, w in enumerate(omega):
        if poles.size and np.min(np.abs(1j * w - poles)) < 1e-12:
            raise FrequencyOnEigenvalue(f"j*{w} coincides with a pole")
        out[k] = sys.evaluate(1j * w)
    return out
