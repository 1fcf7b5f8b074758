"""Static network data and CSV ingestion."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..exceptions import ParseError, ValidationError

BUS_COLUMNS = ("id", "type", "vm_pu", "va_rad", "pload_pu", "qload_pu",
               "gshunt_pu", "bshunt_pu")
BUS_OPTIONAL = ("pgen_pu",)
BRANCH_COLUMNS = ("from", "to", "r_pu", "x_pu", "b_pu", "tap")
MACHINE_COLUMNS = ("bus", "model", "h_s", "d_pu", "xd_pu", "xq_pu", "xdp_pu",
                   "tdo_s", "ka", "ta_s", "pss")

BUS_TYPES = {"slack": "slack", "pv": "PV", "pq": "PQ"}
MACHINE_MODELS = ("classical", "one-axis")


@dataclass(frozen=True)
class Bus:
    id: int
    type: str
    vm: float
    va: float
    pload: float = 0.0
    qload: float = 0.0
    gshunt: float = 0.0
    bshunt: float = 0.0
    pgen: float = 0.0


@dataclass(frozen=True)
class Branch:
    from_bus: int
    to_bus: int
    r: float
    x: float
    b: float = 0.0
    tap: float = 1.0


@dataclass(frozen=True)
class Machine:
    bus: int
    model: str
    h: float
    d: float
    xd: float
    xq: float
    xdp: float
    tdo: float
    ka: float = 0.0
    ta: float = 0.0
    pss: bool = False

    @property
    def has_exciter(self):
        return self.model == "one-axis"


@dataclass
class Network:
    """Buses, branches and machines on a common system base.

    Machines are numbered 1..M in the order given; bus ids are arbitrary
    integers mapped to dense indices by :attr:`bus_index`.
    """

    buses: list
    branches: list
    machines: list = field(default_factory=list)
    base_mva: float = 100.0
    frequency_hz: float = 60.0

    def __post_init__(self):
        self.validate()

    @property
    def bus_index(self):
        return {b.id: i for i, b in enumerate(self.buses)}

    @property
    def n_buses(self):
        return len(self.buses)

    @property
    def slack(self):
        return next(i for i, b in enumerate(self.buses) if b.type == "slack")

    def validate(self):
        ids = [b.id for b in self.buses]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise ValidationError(f"duplicate bus id(s): {dup}")
        n_slack = sum(b.type == "slack" for b in self.buses)
        if n_slack != 1:
            raise ValidationError(f"exactly one slack bus required, found {n_slack}")
        if self.base_mva <= 0:
            raise ValidationError("base MVA must be positive")
        known = set(ids)
        for k, br in enumerate(self.branches):
            for end in (br.from_bus, br.to_bus):
                if end not in known:
                    raise ValidationError(f"branch {k + 1} references unknown bus {end}")
            if br.r == 0 and br.x == 0:
                raise ValidationError(f"branch {k + 1} has zero impedance")
            if br.tap <= 0:
                raise ValidationError(f"branch {k + 1} has non-positive tap")
        seen = set()
        for k, m in enumerate(self.machines):
            if m.bus not in known:
                raise ValidationError(f"machine {k + 1} sits on unknown bus {m.bus}")
            if m.bus in seen:
                raise ValidationError(f"more than one machine on bus {m.bus}")
            seen.add(m.bus)
            if m.h <= 0:
                raise ValidationError(f"machine {k + 1}: H must be positive")
            if m.xdp <= 0:
                raise ValidationError(f"machine {k + 1}: x'_d must be positive")
            if m.model not in MACHINE_MODELS:
                raise ValidationError(f"machine {k + 1}: unknown model {m.model!r}")
            if m.has_exciter and (m.ta <= 0 or m.tdo <= 0):
                raise ValidationError(
                    f"machine {k + 1}: one-axis model needs T'do > 0 and T_A > 0")
            if m.pss and not m.has_exciter:
                raise ValidationError(
                    f"machine {k + 1}: a PSS needs an exciter (one-axis model)")

    def admittance_matrix(self):
        """Bus admittance matrix including line charging, taps and fixed shunts."""
        idx = self.bus_index
        n = self.n_buses
        Y = np.zeros((n, n), dtype=complex)
        for br in self.branches:
            i, j = idx[br.from_bus], idx[br.to_bus]
            ys = 1.0 / complex(br.r, br.x)
            ysh = 0.5j * br.b
            t = br.tap
            Y[i, i] += (ys + ysh) / t ** 2
            Y[j, j] += ys + ysh
            Y[i, j] -= ys / t
            Y[j, i] -= ys / t
        for k, b in enumerate(self.buses):
            Y[k, k] += complex(b.gshunt, b.bshunt)
        return Y

    def with_branches_removed(self, pairs):
        """Copy without one circuit per ``(from, to)`` pair (either orientation)."""
        remaining = list(self.branches)
        for a, b in pairs:
            for k, br in enumerate(remaining):
                if {br.from_bus, br.to_bus} == {a, b}:
                    del remaining[k]
                    break
            else:
                raise ValidationError(f"no branch between buses {a} and {b}")
        return Network(self.buses, remaining, self.machines, self.base_mva,
                       self.frequency_hz)

    def with_dispatch(self, pgen):
        """Copy with generation overridden, ``pgen`` mapping bus id -> pu."""
        idx = self.bus_index
        buses = list(self.buses)
        for bus_id, p in pgen.items():
            if bus_id not in idx:
                raise ValidationError(f"dispatch override for unknown bus {bus_id}")
            b = buses[idx[bus_id]]
            buses[idx[bus_id]] = Bus(b.id, b.type, b.vm, b.va, b.pload, b.qload,
                                     b.gshunt, b.bshunt, float(p))
        return Network(buses, self.branches, self.machines, self.base_mva,
                       self.frequency_hz)


def _read_rows(path, required, optional=()):
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(line for line in fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path}:1: missing header row") from None
        unknown = [h for h in header if h not in required and h not in optional]
        if unknown:
            raise ParseError(f"{path}:1: unknown column(s) {unknown}")
        missing = [h for h in required if h not in header]
        if missing:
            raise ParseError(f"{path}:1: missing column(s) {missing}")
        rows = []
        for lineno, raw in enumerate(reader, start=2):
            if not raw or all(not c.strip() for c in raw):
                continue
            if raw[0].lstrip().startswith("#"):
                continue
            if len(raw) != len(header):
                raise ParseError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(raw)}")
            rows.append((lineno, dict(zip(header, (c.strip() for c in raw)))))
    return path, rows


def _num(path, lineno, row, key, kind=float, default=None):
    if key not in row:
        return default
    try:
        return kind(row[key])
    except ValueError:
        raise ParseError(f"{path}:{lineno}: column {key!r} is not a number: "
                         f"{row[key]!r}") from None


def _flag(path, lineno, value):
    v = value.strip().lower()
    if v in ("1", "true", "yes", "y"):
        return True
    if v in ("0", "false", "no", "n", ""):
        return False
    raise ParseError(f"{path}:{lineno}: cannot read {value!r} as a flag")


def load_network(bus_file, branch_file, machine_file=None, base_mva=100.0,
                 frequency_hz=60.0):
    """Read the three CSV tables into a validated :class:`Network`."""
    path, rows = _read_rows(bus_file, BUS_COLUMNS, BUS_OPTIONAL)
    buses = []
    for ln, r in rows:
        btype = BUS_TYPES.get(r["type"].lower())
        if btype is None:
            raise ParseError(f"{path}:{ln}: bus type must be slack/PV/PQ, got {r['type']!r}")
        buses.append(Bus(
            id=_num(path, ln, r, "id", int), type=btype,
            vm=_num(path, ln, r, "vm_pu"), va=_num(path, ln, r, "va_rad"),
            pload=_num(path, ln, r, "pload_pu"), qload=_num(path, ln, r, "qload_pu"),
            gshunt=_num(path, ln, r, "gshunt_pu"), bshunt=_num(path, ln, r, "bshunt_pu"),
            pgen=_num(path, ln, r, "pgen_pu", default=0.0)))

    path, rows = _read_rows(branch_file, BRANCH_COLUMNS)
    branches = []
    for ln, r in rows:
        tap = _num(path, ln, r, "tap")
        branches.append(Branch(
            _num(path, ln, r, "from", int), _num(path, ln, r, "to", int),
            _num(path, ln, r, "r_pu"), _num(path, ln, r, "x_pu"),
            _num(path, ln, r, "b_pu"), tap if tap else 1.0))

    machines = []
    if machine_file is not None:
        path, rows = _read_rows(machine_file, MACHINE_COLUMNS)
        for ln, r in rows:
            model = r["model"].lower()
            if model not in MACHINE_MODELS:
                raise ParseError(f"{path}:{ln}: model must be one of {MACHINE_MODELS}")
            machines.append(Machine(
                bus=_num(path, ln, r, "bus", int), model=model,
                h=_num(path, ln, r, "h_s"), d=_num(path, ln, r, "d_pu"),
                xd=_num(path, ln, r, "xd_pu"), xq=_num(path, ln, r, "xq_pu"),
                xdp=_num(path, ln, r, "xdp_pu"), tdo=_num(path, ln, r, "tdo_s"),
                ka=_num(path, ln, r, "ka"), ta=_num(path, ln, r, "ta_s"),
                pss=_flag(path, ln, r["pss"])))
    return Network(buses, branches, machines, float(base_mva), float(frequency_hz))
