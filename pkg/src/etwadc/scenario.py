"""Scenario files: a YAML document describing one study end to end.

Example (all sections except ``network`` are optional)::

    name: two-area-stressed
    network:
      buses: package:two_area/buses.csv      # or a path relative to this file
      branches: package:two_area/branches.csv
      machines: package:two_area/machines.csv
      base_mva: 100
      frequency_hz: 60
    outages: [[7, 8], [8, 9]]                # one circuit per pair
    dispatch:
      generators: {1: 7.4}                   # bus -> pu on system base
      tie_flow: {from: 7, to: 8, target_mw: 500, tolerance_mw: 50}
    fault: {bus: 8, start: 0.1, duration: 0.133}
    reference_machine: 4
    wadc: {actuator: 3, remote: 2, local: 3, gain: 10, tw: 10,
           tau1: 0.5, tau2: 0.1, delay: 0.1}
    trigger: {sigma: [0.2, 0.5, 0.9]}
    simulation: {dt: 0.005, t_end: 10.0, mode: linear}
    reduction: {order: 12}
    output: out/two_area

Machines are numbered 1.. in the order of the machine file.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from importlib import resources

import yaml

from .exceptions import ParseError, ValidationError

PACKAGE_PREFIX = "package:"
MODES = ("linear", "nonlinear")


@dataclass(frozen=True)
class TieFlow:
    from_bus: int
    to_bus: int
    target_mw: float
    tolerance_mw: float


@dataclass(frozen=True)
class Scenario:
    name: str
    path: str
    buses: str
    branches: str
    machines: str
    base_mva: float = 100.0
    frequency_hz: float = 60.0
    outages: tuple = ()
    dispatch: dict = field(default_factory=dict)
    tie_flow: TieFlow = None
    fault_bus: int = None
    fault_start: float = 0.1
    fault_duration: float = 0.133
    reference_machine: int = 1
    actuator: int = 1
    remote: int = 2
    local: int = 1
    gain: float = 10.0
    tw: float = 10.0
    tau1: float = 0.5
    tau2: float = 0.1
    delay: float = 0.1
    limit: float = None
    sigmas: tuple = (0.2, 0.5, 0.9)
    dt: float = 0.005
    t_end: float = 10.0
    mode: str = "linear"
    order: int = 12
    output: str = "etwadc-out"

    @property
    def fault_clear(self):
        return self.fault_start + self.fault_duration


def _plain(node, path, lines):
    """Convert a composed YAML node to Python objects, recording line numbers."""
    lines[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        out = {}
        for k, v in node.value:
            key = yaml.safe_load(yaml.serialize(k))
            out[key] = _plain(v, path + (key,), lines)
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_plain(v, path + (i,), lines) for i, v in enumerate(node.value)]
    return yaml.safe_load(yaml.serialize(node))


class _Reader:
    def __init__(self, path, doc, lines):
        self.path = path
        self.doc = doc
        self.lines = lines

    def fail(self, keys, message):
        line = None
        for n in range(len(keys), -1, -1):
            line = self.lines.get(tuple(keys[:n]))
            if line is not None:
                break
        where = self.path if line is None else f"{self.path}:{line}"
        dotted = ".".join(str(k) for k in keys)
        raise ValidationError(f"{where}: {dotted}: {message}")

    def section(self, key):
        value = self.doc.get(key, {})
        if not isinstance(value, dict):
            self.fail([key], "expected a mapping")
        return value

    def get(self, keys, kind, default=None, required=False):
        node = self.doc
        for k in keys:
            if isinstance(node, dict) and k in node:
                node = node[k]
            elif isinstance(node, list) and isinstance(k, int) and 0 <= k < len(node):
                node = node[k]
            else:
                if required:
                    self.fail(keys, "is required")
                return default
        value = node
        if value is None:
            return default
        try:
            if kind is int and (isinstance(value, bool) or float(value) != int(value)):
                raise ValueError
            if kind is float and isinstance(value, bool):
                raise ValueError
            return kind(value)
        except (TypeError, ValueError):
            self.fail(keys, f"expected {kind.__name__}, got {value!r}")


def _resolve(path, base):
    if path.startswith(PACKAGE_PREFIX):
        return str(resources.files("etwadc") / "data" / path[len(PACKAGE_PREFIX):])
    return path if os.path.isabs(path) else os.path.normpath(os.path.join(base, path))


KNOWN = {"name", "network", "outages", "dispatch", "fault", "reference_machine", "wadc",
         "trigger", "simulation", "reduction", "output"}


def load_scenario(path) -> Scenario:
    """Parse and validate a scenario file; errors name the file and line."""
    path = str(path)
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"{path}: cannot read scenario ({exc.strerror})")
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = f":{mark.line + 1}" if mark is not None else ""
        raise ParseError(f"{path}{line}: {getattr(exc, 'problem', None) or exc}")
    if root is None or not isinstance(root, yaml.MappingNode):
        raise ParseError(f"{path}: scenario must be a mapping")
    lines = {}
    doc = _plain(root, (), lines)
    r = _Reader(path, doc, lines)
    for key in doc:
        if key not in KNOWN:
            r.fail([key], "unknown section")
    base = os.path.dirname(os.path.abspath(path))

    r.section("network")
    files = {}
    for key in ("buses", "branches", "machines"):
        files[key] = _resolve(r.get(["network", key], str, required=True), base)

    outages = []
    raw = doc.get("outages", []) or []
    if not isinstance(raw, list):
        r.fail(["outages"], "expected a list of [from, to] pairs")
    for i, pair in enumerate(raw):
        if not (isinstance(pair, list) and len(pair) == 2
                and all(isinstance(v, int) for v in pair)):
            r.fail(["outages", i], "expected [from, to]")
        outages.append(tuple(pair))

    disp = r.section("dispatch")
    gens = disp.get("generators", {}) or {}
    if not isinstance(gens, dict):
        r.fail(["dispatch", "generators"], "expected a mapping bus -> pu")
    dispatch = {}
    for bus in gens:
        if not isinstance(bus, int):
            r.fail(["dispatch", "generators", bus], "bus ids must be integers")
        dispatch[bus] = r.get(["dispatch", "generators", bus], float)
    tie = None
    if "tie_flow" in disp:
        k = ["dispatch", "tie_flow"]
        tie = TieFlow(r.get(k + ["from"], int, required=True),
                      r.get(k + ["to"], int, required=True),
                      r.get(k + ["target_mw"], float, required=True),
                      r.get(k + ["tolerance_mw"], float, 50.0))

    fault = r.section("fault")
    fault_bus = r.get(["fault", "bus"], int, required=bool(fault)) if fault else None
    start = r.get(["fault", "start"], float, 0.1)
    duration = r.get(["fault", "duration"], float, 0.133)
    if start < 0:
        r.fail(["fault", "start"], "must be non-negative")
    if duration <= 0:
        r.fail(["fault", "duration"], "must be positive")

    r.section("wadc")
    w = lambda key, kind, default: r.get(["wadc", key], kind, default)
    trig = r.section("trigger")
    raw = trig.get("sigma", [0.2, 0.5, 0.9])
    if isinstance(raw, list):
        keys = [["trigger", "sigma", i] for i in range(len(raw))]
    else:
        keys = [["trigger", "sigma"]]
    sigmas = []
    for k in keys:
        s = r.get(k, float) if "sigma" in trig else float(raw[k[-1]])
        if not 0.0 < s < 1.0:
            r.fail(k, f"sigma must lie in (0, 1), got {s}")
        sigmas.append(s)
    if not sigmas:
        r.fail(["trigger", "sigma"], "at least one sigma is required")
    q = trig.get("q", "identity")
    if q != "identity":
        r.fail(["trigger", "q"], "only 'identity' is supported")

    r.section("simulation")
    dt = r.get(["simulation", "dt"], float, 0.005)
    t_end = r.get(["simulation", "t_end"], float, 10.0)
    mode = r.get(["simulation", "mode"], str, "linear")
    if dt <= 0:
        r.fail(["simulation", "dt"], "must be positive")
    if t_end < dt:
        r.fail(["simulation", "t_end"], "must cover at least one step")
    if mode not in MODES:
        r.fail(["simulation", "mode"], f"must be one of {MODES}")
    if fault_bus is not None and t_end < start + duration:
        r.fail(["simulation", "t_end"], "ends before the fault clears")
    r.section("reduction")
    order = r.get(["reduction", "order"], int, 12)
    if order < 1:
        r.fail(["reduction", "order"], "must be at least 1")

    limit = w("limit", float, None)
    sc = Scenario(
        name=r.get(["name"], str, os.path.splitext(os.path.basename(path))[0]),
        path=os.path.abspath(path), buses=files["buses"], branches=files["branches"],
        machines=files["machines"],
        base_mva=r.get(["network", "base_mva"], float, 100.0),
        frequency_hz=r.get(["network", "frequency_hz"], float, 60.0),
        outages=tuple(outages), dispatch=dispatch, tie_flow=tie, fault_bus=fault_bus,
        fault_start=start, fault_duration=duration,
        reference_machine=r.get(["reference_machine"], int, 1),
        actuator=w("actuator", int, 1), remote=w("remote", int, 2), local=w("local", int, 1),
        gain=w("gain", float, 10.0), tw=w("tw", float, 10.0), tau1=w("tau1", float, 0.5),
        tau2=w("tau2", float, 0.1), delay=w("delay", float, 0.1), limit=limit,
        sigmas=tuple(sigmas), dt=dt, t_end=t_end, mode=mode, order=order,
        output=r.get(["output"], str, "etwadc-out"))
    _check_machines(sc, r)
    return sc


def _check_machines(sc, r):
    """Machine numbers must exist in the machine file."""
    from .grid.network import load_network

    try:
        net = load_network(sc.buses, sc.branches, sc.machines, sc.base_mva, sc.frequency_hz)
    except OSError as exc:
        r.fail(["network"], f"cannot read network data ({exc})")
    n = len(net.machines)
    for keys, value in ((["reference_machine"], sc.reference_machine),
                        (["wadc", "actuator"], sc.actuator), (["wadc", "remote"], sc.remote),
                        (["wadc", "local"], sc.local)):
        if not 1 <= value <= n:
            r.fail(keys, f"machine {value} does not exist (network has {n})")
    if sc.remote == sc.reference_machine:
        r.fail(["wadc", "remote"], "remote signal is relative to itself")
    if sc.fault_bus is not None and sc.fault_bus not in net.bus_index:
        r.fail(["fault", "bus"], f"bus {sc.fault_bus} does not exist")
    for bus in sc.dispatch:
        if bus not in net.bus_index:
            r.fail(["dispatch", "generators", bus], f"bus {bus} does not exist")
