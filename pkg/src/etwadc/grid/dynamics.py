"""Nonlinear multi-machine dynamics over a Kron-reduced network.

Per machine the state block is ``[delta, domega]`` for the classical model
and ``[delta, domega, Eq', Efd]`` for the one-axis model with a first-order
static exciter, followed by three PSS states when a stabilizer is fitted.
Speeds are per-unit deviations, angles radians, everything on system base.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import EquilibriumResidual, NonFiniteState, ValidationError
from ..lti.simulate import SimTrace, check_finite
from ..lti.systems import LtiSystem, TransferFunction, realize
from .kron import kron_reduce

FAULT_ADMITTANCE = 1e6
EQUILIBRIUM_TOL = 1e-8


@dataclass(frozen=True)
class PssConfig:
    """Speed-input stabilizer ``K sTw/(1+sTw) (1+sT1)/(1+sT2) (1+sT3)/(1+sT4)``."""

    gain: float = 30.0
    tw: float = 10.0
    t1: float = 0.05
    t2: float = 0.03
    t3: float = 3.0
    t4: float = 5.4
    limit: float = 0.15

    def transfer_function(self):
        return (TransferFunction([self.gain * self.tw, 0.0], [self.tw, 1.0])
                * TransferFunction([self.t1, 1.0], [self.t2, 1.0])
                * TransferFunction([self.t3, 1.0], [self.t4, 1.0]))

    def realization(self):
        return realize(self.transfer_function())


@dataclass(frozen=True)
class FaultSchedule:
    bus: int
    start: float
    clear: float

    def __post_init__(self):
        if self.clear <= self.start:
            raise ValidationError("fault must clear after it starts")

    def step_window(self, dt):
        """First step index at/after start and at/after clearing."""
        k_on = math.ceil(self.start / dt - 1e-9)
        k_off = math.ceil(self.clear / dt - 1e-9)
        return k_on, k_off


@dataclass(frozen=True)
class StateLayout:
    delta: np.ndarray
    omega: np.ndarray
    eq: np.ndarray       # -1 for classical machines
    efd: np.ndarray      # -1 for classical machines
    pss: np.ndarray      # (M, n_pss) state indices, -1 rows where absent
    n: int
    labels: tuple


def _layout(machines, n_pss):
    idx = 0
    delta, omega, eq, efd, pss, labels = [], [], [], [], [], []
    for k, m in enumerate(machines, start=1):
        delta.append(idx)
        omega.append(idx + 1)
        labels += [f"delta_{k}", f"domega_{k}"]
        idx += 2
        if m.has_exciter:
            eq.append(idx)
            efd.append(idx + 1)
            labels += [f"eqp_{k}", f"efd_{k}"]
            idx += 2
        else:
            eq.append(-1)
            efd.append(-1)
        if m.pss:
            pss.append(list(range(idx, idx + n_pss)))
            labels += [f"pss{j + 1}_{k}" for j in range(n_pss)]
            idx += n_pss
        else:
            pss.append([-1] * n_pss)
    as_int = lambda v: np.array(v, dtype=int)
    return StateLayout(as_int(delta), as_int(omega), as_int(eq), as_int(efd),
                       np.array(pss, dtype=int).reshape(len(machines), n_pss),
                       idx, tuple(labels))


@dataclass(eq=False)
class DynamicModel:
    """Machine dynamics, reduced admittances per fault stage and the equilibrium."""

    network: object
    Y: dict                  # stage -> reduced admittance among internal nodes
    layout: StateLayout
    x0: np.ndarray
    pm: np.ndarray
    vref: np.ndarray
    e_classical: np.ndarray
    pss: LtiSystem
    pss_limit: float
    fault: FaultSchedule = None
    reference: int = 0       # 0-based machine index for relative signals
    params: dict = field(default_factory=dict)

    @property
    def n_machines(self):
        return len(self.network.machines)

    @property
    def omega_s(self):
        return 2.0 * math.pi * self.network.frequency_hz

    def stage_at_step(self, k, dt):
        if self.fault is None:
            return "pre"
        k_on, k_off = self.fault.step_window(dt)
        if k < k_on:
            return "pre"
        return "fault" if k < k_off else "post"

    def internal_voltage(self, x):
        L = self.layout
        mag = self.e_classical.copy()
        one = L.eq >= 0
        mag[one] = x[L.eq[one]]
        return mag * np.exp(1j * x[L.delta])

    def electrical(self, x, Y):
        """Internal EMF, stator current, electrical power and terminal voltage."""
        E = self.internal_voltage(x)
        I = Y @ E
        pe = (E * np.conj(I)).real
        vt = E - 1j * self.params["xdp"] * I
        return E, I, pe, vt

    def pss_output(self, x, unclipped=False):
        """Stabilizer output per machine (zero where no PSS)."""
        L = self.layout
        p = self.params
        out = np.zeros(self.n_machines)
        has = p["pss"]
        if np.any(has):
            xs = x[L.pss[has]]
            dw = x[L.omega[has]]
            raw = xs @ self.pss.C[0] + self.pss.D[0, 0] * dw
            out[has] = raw if unclipped else np.clip(raw, -self.pss_limit, self.pss_limit)
        return out

    def rhs(self, x, Y, u_ext=None):
        """State derivative; ``u_ext`` adds to each exciter's voltage reference."""
        L = self.layout
        p = self.params
        dx = np.zeros_like(x)
        E, I, pe, vt = self.electrical(x, Y)
        dw = x[L.omega]
        dx[L.delta] = self.omega_s * dw
        dx[L.omega] = (self.pm - pe - p["d"] * dw) / (2.0 * p["h"])
        one = p["one_axis"]
        if np.any(one):
            delta = x[L.delta[one]]
            # d-axis current: I rotated into the machine frame, Id + jIq = I e^{-j(delta - pi/2)}
            idq = I[one] * np.exp(-1j * (delta - 0.5 * np.pi))
            eq = x[L.eq[one]]
            efd = x[L.efd[one]]
            dx[L.eq[one]] = (-eq - (p["xd"][one] - p["xdp"][one]) * idq.real + efd) / p["tdo"][one]
            upss = self.pss_output(x)[one]
            uext = 0.0 if u_ext is None else np.asarray(u_ext)[one]
            drive = self.vref[one] - np.abs(vt[one]) + upss + uext
            dx[L.efd[one]] = (-efd + p["ka"][one] * drive) / p["ta"][one]
        has = p["pss"]
        if np.any(has):
            xs = x[L.pss[has]]
            dx[L.pss[has]] = xs @ self.pss.A.T + np.outer(x[L.omega[has]], self.pss.B[:, 0])
        return dx

    def relative_speed(self, x, machine, reference=None):
        ref = self.reference if reference is None else reference
        return x[self.layout.omega[machine]] - x[self.layout.omega[ref]]


def _machine_params(net):
    ms = net.machines
    arr = lambda attr: np.array([getattr(m, attr) for m in ms], dtype=float)
    return {
        "h": arr("h"), "d": arr("d"), "xd": arr("xd"), "xq": arr("xq"),
        "xdp": arr("xdp"), "tdo": arr("tdo"), "ka": arr("ka"), "ta": arr("ta"),
        "one_axis": np.array([m.has_exciter for m in ms], dtype=bool),
        "pss": np.array([bool(m.pss) for m in ms], dtype=bool),
    }


def reduced_admittances(net, pf, fault_bus=None):
    """Kron-reduced admittances among machine internal nodes.

    Loads become constant admittances at the solved voltage and every machine
    is attached through ``j x'_d``. Returns ``{'pre', 'fault', 'post'}``;
    the fault stage grounds ``fault_bus`` through a 1e6 pu shunt.
    """
    nb = net.n_buses
    idx = net.bus_index
    Y = net.admittance_matrix()
    vm2 = np.abs(pf.voltage) ** 2
    load = np.array([complex(b.pload, -b.qload) for b in net.buses]) / vm2
    Y[np.diag_indices(nb)] += load
    M = len(net.machines)
    Yaug = np.zeros((nb + M, nb + M), dtype=complex)
    Yaug[:nb, :nb] = Y
    for k, m in enumerate(net.machines):
        i, g = idx[m.bus], nb + k
        y = 1.0 / (1j * m.xdp)
        Yaug[i, i] += y
        Yaug[g, g] += y
        Yaug[i, g] -= y
        Yaug[g, i] -= y
    keep = range(nb, nb + M)
    pre = kron_reduce(Yaug, keep)
    stages = {"pre": pre, "post": pre.copy()}
    if fault_bus is not None:
        Yf = Yaug.copy()
        Yf[idx[fault_bus], idx[fault_bus]] += FAULT_ADMITTANCE
        stages["fault"] = kron_reduce(Yf, keep)
    else:
        stages["fault"] = pre.copy()
    return stages


def init_dynamics(net, pf, fault=None, reference_machine=1, pss=None):
    """Back-compute the equilibrium of the machine dynamics from a power flow.

    ``reference_machine`` is 1-based. Mechanical power, field voltage and
    voltage reference are set so that every derivative vanishes at ``x0``.
    """
    if not net.machines:
        raise ValidationError("network has no machines")
    if not 1 <= reference_machine <= len(net.machines):
        raise ValidationError(f"reference machine {reference_machine} does not exist")
    if fault is not None and fault.bus not in net.bus_index:
        raise ValidationError(f"fault bus {fault.bus} does not exist")
    pss = PssConfig() if pss is None else pss
    pss_sys = pss.realization()
    params = _machine_params(net)
    layout = _layout(net.machines, pss_sys.n_states)
    stages = reduced_admittances(net, pf, None if fault is None else fault.bus)

    idx = net.bus_index
    V = pf.voltage
    load = np.array([complex(b.pload, b.qload) for b in net.buses])
    bus_of = np.array([idx[m.bus] for m in net.machines])
    Sg = pf.injection[bus_of] + load[bus_of]
    Ig = np.conj(Sg / V[bus_of])
    E = V[bus_of] + 1j * params["xdp"] * Ig

    x0 = np.zeros(layout.n)
    x0[layout.delta] = np.angle(E)
    one = params["one_axis"]
    x0[layout.eq[one]] = np.abs(E[one])
    e_classical = np.abs(E)

    model = DynamicModel(net, stages, layout, x0, np.zeros(len(E)), np.zeros(len(E)),
                         e_classical, pss_sys, pss.limit, fault, reference_machine - 1,
                         params)
    # close the equilibrium against the reduced network itself
    Ev, I, pe, vt = model.electrical(x0, stages["pre"])
    if np.max(np.abs(pe - Sg.real)) > 1e-6:
        raise EquilibriumResidual(
            "reduced network does not reproduce the dispatched power; "
            "is the power flow converged?")
    model.pm = pe
    idq = I * np.exp(-1j * (x0[layout.delta] - 0.5 * np.pi))
    efd = np.abs(E) + (params["xd"] - params["xdp"]) * idq.real
    x0[layout.efd[one]] = efd[one]
    vref = np.zeros(len(E))
    vref[one] = np.abs(vt[one]) + efd[one] / params["ka"][one]
    model.vref = vref
    model.x0 = x0
    resid = np.max(np.abs(model.rhs(x0, stages["pre"])))
    if resid > EQUILIBRIUM_TOL:
        raise EquilibriumResidual(f"initial derivative {resid:.3e} exceeds {EQUILIBRIUM_TOL}")
    return model


class HeldSignal:
    """Sample-and-hold policy: transmit the remote signal at every step.

    ``update`` is called once per integration step before the step is taken
    (never at the final sample) and returns the new held value and whether
    a transmission took place.
    """

    def reset(self):
        pass

    def update(self, k, t, y_now, held):
        return y_now, True


@dataclass
class WadcLink:
    """A damping controller attached to a :class:`DynamicModel`.

    ``controller`` maps ``[y_remote_held, y_local]`` (or the single difference
    ``y_local - y_remote_held``) to the exciter injection of
    ``actuator``. Machine indices are 0-based; remote and local signals are
    speed deviations relative to the model's reference machine.
    """

    controller: LtiSystem
    actuator: int
    remote: int
    local: int
    limit: float = None

    def inputs(self, held, y_local):
        if self.controller.n_inputs == 2:
            return np.array([held, y_local])
        return np.array([y_local - held])

    def output(self, xc, held, y_local):
        u = float(self.controller.C[0] @ xc + self.controller.D[0] @ self.inputs(held, y_local))
        if self.limit is not None:
            u = min(max(u, -self.limit), self.limit)
        return u


def simulate_nonlinear(model, wadc=None, dt=0.005, t_end=10.0, hold=None, x0=None):
    """RK4 simulation of the nonlinear model through its fault schedule.

    ``wadc`` is an optional :class:`WadcLink`; ``hold`` decides at each step
    whether the remote signal is refreshed (default: every step). Returns a
    :class:`SimTrace` whose ``signals`` include per-machine ``delta_k``,
    ``domega_k``, relative ``ddelta_k``/``dw_rel_k``, ``upss_k``, and, with a
    controller, ``y1``, ``y1_held``, ``e_y``, ``u_wadc`` and ``event``.
    ``meta['loss_of_synchronism']`` flags any relative angle beyond pi.
    """
    dt = float(dt)
    if dt <= 0:
        raise ValueError("dt must be positive")
    if model.fault is not None and t_end < model.fault.clear:
        raise ValueError("t_end must not precede fault clearing")
    n_steps = int(round(t_end / dt))
    L = model.layout
    M = model.n_machines
    nx = L.n
    nc = 0 if wadc is None else wadc.controller.n_states
    x = np.concatenate([model.x0 if x0 is None else np.asarray(x0, float), np.zeros(nc)])
    hold = HeldSignal() if hold is None else hold
    hold.reset()
    ref = model.reference

    X = np.empty((n_steps + 1, nx + nc))
    rec = {k: np.zeros(n_steps + 1) for k in ("y1", "y1_held", "e_y", "u_wadc", "event")}
    upss = np.zeros((n_steps + 1, M))
    held = 0.0

    def f(state, Y, held):
        xg = state[:nx]
        if wadc is None:
            return model.rhs(xg, Y)
        xc = state[nx:]
        y_local = model.relative_speed(xg, wadc.local)
        u = np.zeros(M)
        u[wadc.actuator] = wadc.output(xc, held, y_local)
        dxg = model.rhs(xg, Y, u)
        dxc = wadc.controller.A @ xc + wadc.controller.B @ wadc.inputs(held, y_local)
        return np.concatenate([dxg, dxc])

    for k in range(n_steps + 1):
        t = k * dt
        xg = x[:nx]
        if wadc is not None:
            y1 = model.relative_speed(xg, wadc.remote)
            # the last sample only closes the horizon; nothing is sent after it
            fired = False
            if k < n_steps:
                held, fired = hold.update(k, t, y1, held)
            rec["y1"][k] = y1
            rec["y1_held"][k] = held
            rec["e_y"][k] = held - y1
            rec["event"][k] = 1.0 if fired else 0.0
            rec["u_wadc"][k] = wadc.output(x[nx:], held, model.relative_speed(xg, wadc.local))
        X[k] = x
        upss[k] = model.pss_output(xg)
        if k == n_steps:
            break
        Y = model.Y[model.stage_at_step(k, dt)]
        h = dt
        k1 = f(x, Y, held)
        k2 = f(x + 0.5 * h * k1, Y, held)
        k3 = f(x + 0.5 * h * k2, Y, held)
        k4 = f(x + h * k3, Y, held)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        check_finite(x, t + dt)

    t = dt * np.arange(n_steps + 1)
    signals = {}
    for m in range(M):
        d = X[:, L.delta[m]]
        w = X[:, L.omega[m]]
        signals[f"delta_{m + 1}"] = d
        signals[f"domega_{m + 1}"] = w
        signals[f"ddelta_{m + 1}"] = d - X[:, L.delta[ref]]
        signals[f"dw_rel_{m + 1}"] = w - X[:, L.omega[ref]]
        signals[f"upss_{m + 1}"] = upss[:, m]
    if wadc is not None:
        signals.update(rec)
    rel = X[:, L.delta] - X[:, [L.delta[ref]]]
    labels = L.labels + tuple(f"wadc{j + 1}" for j in range(nc))
    meta = {"loss_of_synchronism": bool(np.max(np.abs(rel)) > np.pi),
            "mode": "nonlinear", "dt": dt}
    return SimTrace(t=t, states=X, signals=signals, state_labels=labels, meta=meta)


def linearize_function(f, x0, u0, h=1e-6):
    """Central-difference Jacobians ``(df/dx, df/du)`` of ``f(x, u)``."""
    x0 = np.asarray(x0, dtype=float)
    u0 = np.asarray(u0, dtype=float)
    n, m = x0.size, u0.size
    A = np.empty((n, n))
    B = np.empty((n, m))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        A[:, j] = (f(x0 + e, u0) - f(x0 - e, u0)) / (2 * h)
    for j in range(m):
        e = np.zeros(m)
        e[j] = h
        B[:, j] = (f(x0, u0 + e) - f(x0, u0 - e)) / (2 * h)
    return A, B


def linearize(model, input_machines, output_pairs, h=1e-6, angle_reference=None):
    """Small-signal plant around the pre-fault equilibrium.

    ``input_machines`` (1-based, int or list) receive an additive exciter
    reference input. ``output_pairs`` are ``(machine, reference)`` tuples
    (1-based) giving relative speed outputs ``domega_machine - domega_ref``.

    With ``angle_reference`` (1-based) the uniform-angle mode is removed by
    expressing angles relative to that machine and dropping its own angle;
    the result is then free of the structural zero eigenvalue.
    """
    if isinstance(input_machines, int):
        input_machines = [input_machines]
    inputs = [m - 1 for m in input_machines]
    p = model.params
    for m in inputs:
        if not 0 <= m < model.n_machines or not p["one_axis"][m]:
            raise ValidationError(f"machine {m + 1} has no exciter input")
    Y = model.Y["pre"]
    x0 = model.x0
    resid = np.max(np.abs(model.rhs(x0, Y)))
    if resid > EQUILIBRIUM_TOL:
        raise EquilibriumResidual(f"model is not at equilibrium (|f|={resid:.3e})")

    def f(x, u):
        uext = np.zeros(model.n_machines)
        uext[inputs] = u
        return model.rhs(x, Y, uext)

    A, B = linearize_function(f, x0, np.zeros(len(inputs)), h)
    L = model.layout
    C = np.zeros((len(output_pairs), L.n))
    for r, (mach, ref) in enumerate(output_pairs):
        C[r, L.omega[mach - 1]] += 1.0
        C[r, L.omega[ref - 1]] -= 1.0
    plant = LtiSystem(A, B, C, np.zeros((C.shape[0], B.shape[1])), L.labels)
    if angle_reference is not None:
        plant = remove_uniform_angle(plant, L.delta, angle_reference - 1)
    return plant


def remove_uniform_angle(plant, delta_idx, ref):
    """Re-express angle states relative to ``delta_idx[ref]`` and drop that state.

    Valid when the dynamics depend on angle differences only, so the
    uniform-angle direction is an unobservable zero mode.
    """
    n = plant.n_states
    r = int(delta_idx[ref])
    keep = [i for i in range(n) if i != r]
    S = np.eye(n)
    S[np.asarray(delta_idx), r] -= 1.0   # z_i = delta_i - delta_ref
    S[r, r] = 1.0
    S = S[keep]
    Mz = np.eye(n)[:, keep]              # x = Mz z with delta_ref = 0
    labels = None
    if plant.state_labels:
        labels = [plant.state_labels[i] for i in keep]
    return LtiSystem(S @ plant.A @ Mz, S @ plant.B, plant.C @ Mz, plant.D, labels)
