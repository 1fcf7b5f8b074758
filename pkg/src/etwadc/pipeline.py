"""Staged study: power flow, linearization, reduction, design, simulation, sweep.

Every stage writes into its own subdirectory of the output directory and
reads its inputs back from the previous stage's files, so a stage run on
its own and a stage run as part of a chain see identical bytes. The file
``manifest.json`` lists every artifact with its SHA-256.
"""
from __future__ import annotations

import csv
import hashlib
import json
import threading
from pathlib import Path

import numpy as np

from .events import (TriggerConfig, compare_transmissions, compute_trigger_threshold,
                     inter_event_bound, run_linear, run_nonlinear, verify_iss)
from .events.compare import summarize
from .exceptions import EtwadcError, StageError
from .grid.dynamics import FaultSchedule, WadcLink, init_dynamics, linearize, simulate_nonlinear
from .grid.network import load_network
from .grid.powerflow import PowerFlowSolution, branch_flow, solve_power_flow
from .lti import (BalancedTruncation, frequency_response, load_system, modes, read_matrix,
                  save_system, write_matrix)
from .validation import check_sigma
from .wadc import (ClosedLoop, WadcConfig, assemble_closed_loop, balanced_loop, build_wadc,
                   modal_residues, screen_interarea)

BODE_OMEGA = np.logspace(-1, 2, 301)
BAND = (1.0, 100.0)


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_json(path, obj):
    with open(path, "w", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _read_json(path):
    with open(path) as fh:
        return json.load(fh)


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                        for v in row])


def _finite(x):
    return None if x is None or not np.isfinite(x) else float(x)


def sigma_label(sigma):
    return f"sigma_{float(sigma)!r}"


def _mode_rows(eigs, tag):
    for i, lam in enumerate(eigs):
        freq = abs(lam.imag) / (2 * np.pi)
        zeta = 0.0 if lam == 0 else -lam.real / abs(lam)
        yield [tag, i, float(lam.real), float(lam.imag), float(freq), float(zeta)]


def _sorted_eigs(A):
    lam = np.linalg.eigvals(A)
    return sorted(lam, key=lambda z: (round(z.real, 10), round(z.imag, 10)))


class Study:
    """One scenario's pipeline rooted at an output directory."""

    def __init__(self, scenario, out=None, recompute=False):
        self.sc = scenario
        self.out = Path(out if out is not None else scenario.output)
        self.recompute = recompute
        self._lock = threading.Lock()

    # -- shared builders -------------------------------------------------
    def network(self):
        sc = self.sc
        net = load_network(sc.buses, sc.branches, sc.machines, sc.base_mva, sc.frequency_hz)
        if sc.outages:
            net = net.with_branches_removed(sc.outages)
        if sc.dispatch:
            net = net.with_dispatch(sc.dispatch)
        return net

    def fault(self):
        sc = self.sc
        if sc.fault_bus is None:
            return None
        return FaultSchedule(sc.fault_bus, sc.fault_start, sc.fault_clear)

    def wadc_config(self):
        sc = self.sc
        return WadcConfig(sc.gain, sc.tw, sc.tau1, sc.tau2, sc.delay, sc.limit)

    def model(self):
        pf = self._load_powerflow()
        return init_dynamics(self.network(), pf, self.fault(), self.sc.reference_machine)

    def stage_dir(self, stage):
        return self.out / stage

    # -- bookkeeping -----------------------------------------------------
    def _record(self, key, files):
        with self._lock:
            path = self.out / "manifest.json"
            manifest = _read_json(path) if path.exists() else {"stages": {}}
            manifest["scenario"] = {"name": self.sc.name, "sha256": sha256_file(self.sc.path)}
            manifest["stages"][key] = {
                Path(f).relative_to(self.out).as_posix(): sha256_file(f) for f in sorted(files)}
            _write_json(path, manifest)

    def _require(self, stage, needed_by, marker):
        if (self.stage_dir(stage) / marker).exists():
            return
        if self.recompute:
            getattr(self, stage)()
            return
        raise StageError(needed_by, f"missing outputs of stage '{stage}' in {self.out}; "
                                    f"run 'etwadc {stage}' first or pass --recompute")

    def _run(self, stage, fn, *args):
        try:
            return fn(*args)
        except StageError:
            raise
        except (EtwadcError, ValueError, np.linalg.LinAlgError, OSError) as exc:
            raise StageError(stage, f"{type(exc).__name__}: {exc}") from exc

    # -- power flow ------------------------------------------------------
    def powerflow(self):
        return self._run("powerflow", self._powerflow)

    def _powerflow(self):
        net = self.network()
        pf = solve_power_flow(net)
        V, S = pf.voltage, pf.injection
        summary = {"iterations": pf.iterations, "mismatch_pu": pf.mismatch,
                   "n_buses": net.n_buses, "base_mva": net.base_mva}
        tie = self.sc.tie_flow
        if tie is not None:
            flow = branch_flow(net, V, tie.from_bus, tie.to_bus).real * net.base_mva
            summary["tie_flow"] = {"from": tie.from_bus, "to": tie.to_bus, "mw": flow,
                                   "target_mw": tie.target_mw}
            if abs(flow - tie.target_mw) > tie.tolerance_mw:
                raise StageError("powerflow", f"tie flow {flow:.1f} MW is more than "
                                 f"{tie.tolerance_mw} MW from the {tie.target_mw} MW target")
        d = self.stage_dir("powerflow")
        d.mkdir(parents=True, exist_ok=True)
        _write_rows(d / "buses.csv",
                    ["id", "v_re", "v_im", "vm_pu", "va_rad", "p_pu", "q_pu"],
                    ([b.id, V[i].real, V[i].imag, abs(V[i]), float(np.angle(V[i])),
                      S[i].real, S[i].imag] for i, b in enumerate(net.buses)))
        _write_json(d / "summary.json", summary)
        self._record("powerflow", [d / "buses.csv", d / "summary.json"])
        return summary

    def _load_powerflow(self):
        self._require("powerflow", "linearize", "summary.json")
        d = self.stage_dir("powerflow")
        with open(d / "buses.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        V = np.array([complex(float(r["v_re"]), float(r["v_im"])) for r in rows])
        S = np.array([complex(float(r["p_pu"]), float(r["q_pu"])) for r in rows])
        s = _read_json(d / "summary.json")
        return PowerFlowSolution(V, S, s["iterations"], s["mismatch_pu"])

    # -- linearization ---------------------------------------------------
    def linearize(self):
        return self._run("linearize", self._linearize)

    def _linearize(self):
        sc = self.sc
        model = self.model()
        ref = sc.reference_machine
        plant = linearize(model, sc.actuator, [(sc.remote, ref), (sc.local, ref)],
                          angle_reference=ref)
        d = self.stage_dir("linearize")
        save_system(d / "plant", plant)
        ms = modes(plant.A)
        _write_rows(d / "modes.csv", ["index", "real", "imag", "freq_hz", "damping"],
                    ([i, m.eigenvalue.real, m.eigenvalue.imag, m.frequency, m.damping_ratio]
                     for i, m in enumerate(ms)))
        inter = screen_interarea(ms)
        summary = {"n_states": plant.n_states, "state_labels": list(plant.state_labels),
                   "inputs": [f"vref_{sc.actuator}"],
                   "outputs": [f"dw{sc.remote}-dw{ref}", f"dw{sc.local}-dw{ref}"],
                   "interarea_modes": [{"real": m.eigenvalue.real, "imag": m.eigenvalue.imag,
                                        "freq_hz": m.frequency, "damping": m.damping_ratio}
                                       for m in inter]}
        _write_json(d / "summary.json", summary)
        self._record("linearize", [*sorted((d / "plant").glob("*.csv")), d / "modes.csv",
                                   d / "summary.json"])
        return summary

    def load_plant(self, needed_by="reduce"):
        self._require("linearize", needed_by, "summary.json")
        return load_system(self.stage_dir("linearize") / "plant")

    # -- reduction -------------------------------------------------------
    def reduce(self):
        return self._run("reduce", self._reduce)

    def _reduce(self):
        plant = self.load_plant("reduce")
        bt = BalancedTruncation(self.sc.order).fit(plant)
        red = bt.reduced_
        d = self.stage_dir("reduce")
        save_system(d / "reduced", red)
        write_matrix(d / "projection.csv", bt.projection_)
        _write_rows(d / "hsv.csv", ["index", "hankel_singular_value"],
                    ([i, float(v)] for i, v in enumerate(bt.hankel_singular_values_)))
        Hf = np.abs(frequency_response(plant, BODE_OMEGA))
        Hr = np.abs(frequency_response(red, BODE_OMEGA))
        full_db, red_db = 20 * np.log10(Hf), 20 * np.log10(Hr)
        dev = red_db - full_db
        header = ["omega_rad_s"]
        cols = []
        for o in range(plant.n_outputs):
            for i in range(plant.n_inputs):
                tag = f"y{o + 1}_u{i + 1}"
                header += [f"full_db_{tag}", f"reduced_db_{tag}", f"deviation_db_{tag}"]
                cols += [full_db[:, o, i], red_db[:, o, i], dev[:, o, i]]
        _write_rows(d / "bode.csv", header,
                    ([float(w)] + [float(c[k]) for c in cols]
                     for k, w in enumerate(BODE_OMEGA)))
        band = (BODE_OMEGA >= BAND[0]) & (BODE_OMEGA <= BAND[1])
        summary = {"order": red.n_states, "full_order": plant.n_states,
                   "error_bound": bt.error_bound_, "n_unstable_kept": bt.n_unstable_,
                   "max_deviation_db_1_100": float(np.max(np.abs(dev[band])))}
        _write_json(d / "summary.json", summary)
        self._record("reduce", [*sorted((d / "reduced").glob("*.csv")), d / "projection.csv",
                                d / "hsv.csv", d / "bode.csv", d / "summary.json"])
        return summary

    # -- design ----------------------------------------------------------
    def design(self):
        return self._run("design", self._design)

    def _design(self):
        sc = self.sc
        plant = self.load_plant("design")
        self._require("reduce", "design", "summary.json")
        rd = self.stage_dir("reduce")
        red = load_system(rd / "reduced")
        projection = read_matrix(rd / "projection.csv")

        ms = modes(plant.A)
        inter = screen_interarea(ms)
        report = modal_residues(plant, inter) if inter else None
        cfg = self.wadc_config()
        wadc = build_wadc(cfg)
        cl_full = assemble_closed_loop(plant, wadc)
        cl_red = assemble_closed_loop(red, wadc)
        loop = balanced_loop(cl_red)
        base = compute_trigger_threshold(loop, None, sc.sigmas[0])

        d = self.stage_dir("design")
        (d / "loop").mkdir(parents=True, exist_ok=True)
        for name, M in (("A", loop.A), ("B", loop.B.reshape(-1, 1)),
                        ("c", loop.c.reshape(1, -1)), ("u_row", loop.u_row.reshape(1, -1)),
                        ("P", base.P)):
            write_matrix(d / "loop" / f"{name}.csv", M)
        if report is not None:
            _write_rows(d / "residues.csv",
                        ["rank", "mode_freq_hz", "mode_damping", "input", "output", "real",
                         "imag", "magnitude"],
                        ([r.rank, inter[r.mode].frequency, inter[r.mode].damping_ratio,
                          r.input + 1, r.output + 1, r.value.real, r.value.imag, r.magnitude]
                         for r in report.entries))
        rows = []
        for tag, A in (("open_loop_full", plant.A), ("closed_loop_full", cl_full.A),
                       ("closed_loop_reduced", cl_red.A)):
            rows += list(_mode_rows(_sorted_eigs(A), tag))
        _write_rows(d / "eigenvalues.csv",
                    ["system", "index", "real", "imag", "freq_hz", "damping"], rows)

        x0 = self._initial_state(red, projection, cl_red, loop)
        write_matrix(d / "initial_state.csv", x0.reshape(-1, 1))

        thresholds = []
        for s in sc.sigmas:
            tc = base.with_sigma(s)
            b = inter_event_bound(loop, tc)
            thresholds.append({"sigma": s, "rho": tc.rho, "eta_star": tc.eta_star,
                               "tau_min_s": b.tau_min, "M1": b.M1, "M2": b.M2, "M3": b.M3,
                               "closed_form": b.closed_form})
        full_eigs = np.linalg.eigvals(cl_full.A)
        trigger = {"loop_checksum": loop.checksum(), "n_states": loop.n, "q": "identity",
                   "lambda_min_q": base.lambda_min_q, "pb_norm": base.pb_norm,
                   "u_e": loop.u_e, "thresholds": thresholds,
                   "closed_loop_full_max_real": float(full_eigs.real.max()),
                   "closed_loop_reduced_max_real": float(np.linalg.eigvals(cl_red.A).real.max()),
                   "wadc": {"gain": cfg.K, "tw": cfg.tw, "tau1": cfg.tau1, "tau2": cfg.tau2,
                            "delay": cfg.delay, "actuator": sc.actuator, "remote": sc.remote,
                            "local": sc.local}}
        _write_json(d / "trigger.json", trigger)
        files = [*sorted((d / "loop").glob("*.csv")), d / "eigenvalues.csv",
                 d / "initial_state.csv", d / "trigger.json"]
        if report is not None:
            files.append(d / "residues.csv")
        self._record("design", files)
        return trigger

    def _initial_state(self, red, projection, cl_red, loop):
        """Post-fault state of the nonlinear model in the balanced loop's coordinates.

        The model is simulated without WADC until the fault clears; the state
        deviation at that instant is expressed with relative angles, projected
        onto the reduced plant and padded with zero controller states.
        """
        fault = self.fault()
        if fault is None:
            raise StageError("design", "linear-mode initial state needs a fault in the scenario")
        model = self.model()
        dt = self.sc.dt
        _, k_off = fault.step_window(dt)
        tr = simulate_nonlinear(model, dt=dt, t_end=k_off * dt)
        dx = tr.states[k_off] - model.x0
        L = model.layout
        ref = model.reference
        rel = dx.copy()
        rel[L.delta] -= dx[L.delta[ref]]
        z = np.delete(rel, L.delta[ref])
        xr = projection @ z
        xa = np.concatenate([xr, np.zeros(cl_red.n_controller)])
        return loop.projection @ xa

    def load_design(self, needed_by="simulate"):
        self._require("design", needed_by, "trigger.json")
        d = self.stage_dir("design")
        trig = _read_json(d / "trigger.json")
        m = {k: read_matrix(d / "loop" / f"{k}.csv") for k in ("A", "B", "c", "u_row", "P")}
        loop = ClosedLoop(m["A"], m["B"][:, 0], m["c"][0], 0, 0, m["u_row"][0], trig["u_e"])
        if loop.checksum() != trig["loop_checksum"]:
            raise StageError(needed_by, "closed-loop matrices do not match the recorded checksum")
        x0 = read_matrix(d / "initial_state.csv")[:, 0]
        return loop, m["P"], x0, trig

    def trigger_config(self, sigma, P, trig):
        """Threshold for ``sigma`` exactly as recorded by the design stage."""
        for t in trig["thresholds"]:
            if t["sigma"] == sigma:
                rho = t["rho"]
                break
        else:
            rho = None
        base = TriggerConfig(sigma, 0.0, np.eye(P.shape[0]), P, trig["lambda_min_q"],
                             trig["pb_norm"], trig["loop_checksum"])
        cfg = base.with_sigma(sigma)
        if rho is not None and rho != cfg.rho:
            raise StageError("simulate", "recorded threshold is inconsistent with its inputs")
        return cfg

    # -- simulation ------------------------------------------------------
    def simulate(self, sigma=None):
        sigma = check_sigma(self.sc.sigmas[0] if sigma is None else sigma)
        design = self._run("simulate", self.load_design, "simulate")
        trace, log, files = self._run("simulate", self._simulate, sigma, design)
        self._record(f"simulate/{sigma_label(sigma)}", files)
        return summarize(sigma, trace, log)

    def _simulate(self, sigma, design):
        sc = self.sc
        loop, P, x0, trig = design
        cfg = self.trigger_config(sigma, P, trig)
        d = self.stage_dir("simulate") / sigma_label(sigma)
        summary = {"sigma": sigma, "rho": cfg.rho, "mode": sc.mode, "dt": sc.dt,
                   "t_end": sc.t_end, "loop_checksum": trig["loop_checksum"]}
        if sc.mode == "linear":
            trace, log = run_linear(loop, cfg, x0, sc.dt, sc.t_end)
            iss = verify_iss(trace, cfg)
            bound = inter_event_bound(loop, cfg)
            summary["iss"] = {"trigger_violations": iss.trigger_violations,
                              "decay_violations": iss.decay_violations,
                              "max_decay_violation": iss.max_decay_violation}
            summary["tau_min_bound_s"] = bound.tau_min
            extra = []
        else:
            model = self.model()
            link = WadcLink(build_wadc(self.wadc_config()), sc.actuator - 1, sc.remote - 1,
                            sc.local - 1, sc.limit)
            trace, log = run_nonlinear(model, link, cfg, sc.dt, sc.t_end)
            extra = [k for k in trace.signals if k.startswith("ddelta_")]
            summary["loss_of_synchronism"] = trace.meta["loss_of_synchronism"]
        row = summarize(sigma, trace, log)
        summary.update({"events": log.count, "baseline": log.baseline,
                        "tau_min_s": _finite(row.tau_min_s), "tau_mean_s": _finite(row.tau_mean_s),
                        "tau_max_s": _finite(row.tau_max_s),
                        "log_decrement": _finite(row.log_decrement)})
        d.mkdir(parents=True, exist_ok=True)
        trace.to_csv(d / "trace.csv", ["y1", "y1_held", "e_y", "threshold", "u_wadc", "event"]
                     + extra)
        log.to_csv(d / "events.csv")
        _write_rows(d / "staircase.csv", ["t", "y1_continuous", "y1_held"],
                    zip(map(float, trace.t), map(float, trace.signals["y1"]),
                        map(float, trace.signals["y1_held"])))
        _write_json(d / "summary.json", summary)
        files = [d / "trace.csv", d / "events.csv", d / "staircase.csv", d / "summary.json"]
        return trace, log, files

    # -- sweep -----------------------------------------------------------
    def sweep(self):
        design = self._run("sweep", self.load_design, "sweep")
        files = {}

        def run(sigma):
            trace, log, f = self._run("sweep", self._simulate, sigma, design)
            files[sigma] = f
            return trace, log

        table = self._run("sweep", compare_transmissions, run, self.sc.sigmas)
        for sigma in self.sc.sigmas:
            self._record(f"simulate/{sigma_label(sigma)}", files[sigma])
        d = self.stage_dir("sweep")
        d.mkdir(parents=True, exist_ok=True)
        table.to_csv(d / "comparison.csv")
        table.to_json(d / "comparison.json")
        self._record("sweep", [d / "comparison.csv", d / "comparison.json"])
        return table
