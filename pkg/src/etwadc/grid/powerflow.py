"""Full Newton-Raphson power flow in polar coordinates."""
from dataclasses import dataclass

import numpy as np

from ..exceptions import NonConvergence, SingularJacobian


@dataclass(frozen=True, eq=False)
class PowerFlowSolution:
    voltage: np.ndarray      # complex per-bus voltage, pu
    injection: np.ndarray    # complex per-bus injected power, pu
    iterations: int
    mismatch: float

    @property
    def vm(self):
        return np.abs(self.voltage)

    @property
    def va(self):
        return np.angle(self.voltage)


def _specified_injection(net):
    return np.array([complex(b.pgen - b.pload, -b.qload) for b in net.buses])


def power_mismatch(net, V, Y=None):
    """Complex ``S_spec - V conj(Y V)`` per bus."""
    Y = net.admittance_matrix() if Y is None else Y
    return _specified_injection(net) - V * np.conj(Y @ V)


def _jacobian(Y, V):
    # complex derivatives of S = V conj(YV), as in the standard dSbus/dV form
    I = Y @ V
    Vm = np.abs(V)
    diagV = np.diag(V)
    dS_dVa = 1j * diagV @ np.conj(np.diag(I) - Y @ diagV)
    dS_dVm = diagV @ np.conj(Y @ np.diag(V / Vm)) + np.diag(np.conj(I) * V / Vm)
    return dS_dVa, dS_dVm


def solve_power_flow(net, tol=1e-10, max_iter=20):
    """Solve the load flow of ``net``.

    PV and slack buses hold ``vm_pu``; the slack also holds ``va_rad``. PQ
    buses start from the voltage in the bus file (flat start when that is
    1.0 pu, 0 rad). Convergence is declared when the largest active or
    reactive mismatch is at most ``tol``; ``iterations`` counts Newton
    updates.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    Y = net.admittance_matrix()
    types = [b.type for b in net.buses]
    pv = [i for i, t in enumerate(types) if t == "PV"]
    pq = [i for i, t in enumerate(types) if t == "PQ"]
    pvpq = pv + pq
    V = np.array([b.vm * np.exp(1j * b.va) for b in net.buses])
    S_spec = _specified_injection(net)

    def mismatch(V):
        dS = S_spec - V * np.conj(Y @ V)
        return np.concatenate([dS.real[pvpq], dS.imag[pq]])

    F = mismatch(V)
    it = 0
    while True:
        err = float(np.max(np.abs(F))) if F.size else 0.0
        if not np.isfinite(err):
            raise NonConvergence(f"power flow diverged after {it} iterations")
        if err <= tol:
            break
        if it >= max_iter:
            raise NonConvergence(
                f"power flow mismatch {err:.3e} pu after {it} iterations")
        dS_dVa, dS_dVm = _jacobian(Y, V)
        J = np.block([
            [dS_dVa.real[np.ix_(pvpq, pvpq)], dS_dVm.real[np.ix_(pvpq, pq)]],
            [dS_dVa.imag[np.ix_(pq, pvpq)], dS_dVm.imag[np.ix_(pq, pq)]],
        ])
        try:
            dx = np.linalg.solve(J, F)
        except np.linalg.LinAlgError:
            raise SingularJacobian(f"singular Jacobian at iteration {it + 1}") from None
        if np.linalg.cond(J) > 1e14:
            raise SingularJacobian(f"ill-conditioned Jacobian at iteration {it + 1}")
        Va = np.angle(V)
        Vm = np.abs(V)
        Va[pvpq] += dx[:len(pvpq)]
        Vm[pq] += dx[len(pvpq):]
        if np.any(Vm <= 0) or not np.all(np.isfinite(Vm)):
            raise NonConvergence(f"voltage collapsed at iteration {it + 1}")
        V = Vm * np.exp(1j * Va)
        it += 1
        F = mismatch(V)
    S = V * np.conj(Y @ V)
    return PowerFlowSolution(V, S, it, err)


def branch_flow(net, V, from_bus, to_bus):
    """Complex power entering the first branch ``from_bus -> to_bus`` at its from end.

    The pair may be given in either orientation; the flow is reported in the
    direction asked for.
    """
    idx = net.bus_index
    for br in net.branches:
        if (br.from_bus, br.to_bus) == (from_bus, to_bus):
            reverse = False
        elif (br.from_bus, br.to_bus) == (to_bus, from_bus):
            reverse = True
        else:
            continue
        ys = 1.0 / complex(br.r, br.x)
        ysh = 0.5j * br.b
        t = br.tap
        vf, vt = V[idx[br.from_bus]], V[idx[br.to_bus]]
        if not reverse:
            i = (ys + ysh) / t ** 2 * vf - ys / t * vt
            return complex(vf * np.conj(i))
        i = (ys + ysh) * vt - ys / t * vf
        return complex(vt * np.conj(i))
    raise KeyError(f"no branch between buses {from_bus} and {to_bus}")
