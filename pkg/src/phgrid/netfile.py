"""Structured text formats: network, scenario and sweep files, reports.

Key-value text with sections, read/written through configparser.  All
quantities SI.  Floats are serialized with repr-style 17-significant-digit
formatting, so every file round-trips losslessly (covered by golden files).

Network file::

    [network]
    name = two-machine
    buses = 3

    [sg 1]
    bus = 0
    J = 28460.0
    ...

    [shunt 1]
    bus = 0
    C = 0.05
    load = rl           ; or "admittance" with G =, B =
    Rld = 1000.0
    Lld = 10.0

    [line 1]
    from = 0            ; -1 denotes the ground node
    to = 2
    R = 3.0
    L = 1.061

A scenario file appends a [scenario] section; a sweep file is a [sweep]
section referencing a built-in scenario name or a scenario file path.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import replace

from .errors import StructuralError
from .integrator import IntegratorConfig
from .netmodel import (
    Admittance,
    LineParams,
    PowerNetwork,
    RlBranch,
    SgParams,
    ShuntParams,
)
from .scenarios import Scenario, SweepSpec, builtin_scenarios


def fmt(x: float) -> str:
    """Shortest decimal that round-trips the float exactly."""
    return repr(float(x))


def _new_parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keep key case
    return cp


def network_to_config(net: PowerNetwork) -> configparser.ConfigParser:
    cp = _new_parser()
    cp["network"] = {"name": net.name, "buses": str(net.n_bus)}
    for i, (bus, p) in enumerate(net.sgs, start=1):
        cp[f"sg {i}"] = {
            "bus": str(bus),
            "J": fmt(p.J),
            "F": fmt(p.F),
            "T0": fmt(p.T0),
            "Rs": fmt(p.Rs),
            "Ls": fmt(p.Ls),
            "psi": fmt(p.psi),
            "p": str(p.p),
        }
    for i, (bus, sh) in enumerate(net.shunts, start=1):
        sec = {"bus": str(bus), "C": fmt(sh.C)}
        if isinstance(sh.load, Admittance):
            sec["load"] = "admittance"
            sec["G"] = fmt(sh.load.G)
            sec["B"] = fmt(sh.load.B)
        else:
            sec["load"] = "rl"
            sec["Rld"] = fmt(sh.load.Rld)
            sec["Lld"] = fmt(sh.load.Lld)
        cp[f"shunt {i}"] = sec
    for i, (frm, to, ln) in enumerate(net.lines, start=1):
        cp[f"line {i}"] = {
            "from": str(frm),
            "to": str(to),
            "R": fmt(ln.R),
            "L": fmt(ln.L),
        }
    return cp


def network_from_config(cp: configparser.ConfigParser) -> PowerNetwork:
    if "network" not in cp:
        raise StructuralError("missing [network] section")
    try:
        n_bus = cp.getint("network", "buses")
        name = cp.get("network", "name", fallback="")
        sgs = []
        shunts = []
        lines = []
        for sec in cp.sections():
            kind = sec.split()[0]
            if kind == "sg":
                s = cp[sec]
                sgs.append(
                    (
                        int(s["bus"]),
                        SgParams(
                            J=float(s["J"]),
                            F=float(s["F"]),
                            T0=float(s["T0"]),
                            Rs=float(s["Rs"]),
                            Ls=float(s["Ls"]),
                            psi=float(s["psi"]),
                            p=int(s.get("p", "0")),
                        ),
                    )
                )
            elif kind == "shunt":
                s = cp[sec]
                if s["load"] == "admittance":
                    load = Admittance(G=float(s["G"]), B=float(s.get("B", "0")))
                elif s["load"] == "rl":
                    load = RlBranch(Rld=float(s["Rld"]), Lld=float(s["Lld"]))
                else:
                    raise StructuralError(f"[{sec}]: unknown load kind {s['load']!r}")
                shunts.append((int(s["bus"]), ShuntParams(C=float(s["C"]), load=load)))
            elif kind == "line":
                s = cp[sec]
                lines.append(
                    (int(s["from"]), int(s["to"]), LineParams(R=float(s["R"]), L=float(s["L"])))
                )
    except (KeyError, ValueError) as exc:
        raise StructuralError(f"malformed network file: {exc}") from exc
    return PowerNetwork(
        n_bus=n_bus, sgs=tuple(sgs), shunts=tuple(shunts), lines=tuple(lines), name=name
    )


def dumps_network(net: PowerNetwork) -> str:
    buf = io.StringIO()
    network_to_config(net).write(buf)
    return buf.getvalue()


def write_network(net: PowerNetwork, path) -> None:
    with open(path, "w") as fh:
        network_to_config(net).write(fh)


def read_network(path) -> PowerNetwork:
    cp = _new_parser()
    if not cp.read(path):
        raise StructuralError(f"cannot read network file {path}")
    return network_from_config(cp)


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------


def scenario_to_config(scn: Scenario) -> configparser.ConfigParser:
    cp = network_to_config(scn.network)
    cfg = scn.cfg
    sec = {
        "name": scn.name,
        "horizon": fmt(scn.horizon),
        "method": cfg.method,
        "sample_every": fmt(cfg.effective_sample_every),
        "ic": scn.ic_policy,
    }
    if cfg.method == "rk4":
        sec["dt"] = fmt(cfg.dt)
    else:
        sec["abs_tol"] = fmt(cfg.abs_tol)
        sec["rel_tol"] = fmt(cfg.rel_tol)
        sec["dt_min"] = fmt(cfg.dt_min)
        sec["dt_max"] = fmt(cfg.dt_max)
    if scn.ic_policy == "random":
        sec["seed"] = str(scn.seed)
        sec["scale"] = fmt(scn.scale)
    if scn.expected:
        sec["expected"] = scn.expected
    cp["scenario"] = sec
    return cp


def scenario_from_config(cp: configparser.ConfigParser) -> Scenario:
    net = network_from_config(cp)
    if "scenario" not in cp:
        raise StructuralError("missing [scenario] section")
    s = cp["scenario"]
    try:
        method = s.get("method", "rk4")
        if method == "rk4":
            cfg = IntegratorConfig(
                method="rk4",
                dt=float(s["dt"]),
                sample_every=float(s["sample_every"]),
            )
        else:
            cfg = IntegratorConfig(
                method="rk45",
                abs_tol=float(s["abs_tol"]),
                rel_tol=float(s["rel_tol"]),
                dt_min=float(s["dt_min"]),
                dt_max=float(s["dt_max"]),
                sample_every=float(s["sample_every"]),
            )
        return Scenario(
            name=s.get("name", ""),
            network=net,
            horizon=float(s["horizon"]),
            cfg=cfg,
            ic_policy=s.get("ic", "random"),
            seed=int(s.get("seed", "1")),
            scale=float(s.get("scale", "100")),
            expected=s.get("expected", None),
        )
    except (KeyError, ValueError) as exc:
        raise StructuralError(f"malformed scenario file: {exc}") from exc


def write_scenario(scn: Scenario, path) -> None:
    with open(path, "w") as fh:
        scenario_to_config(scn).write(fh)


def read_scenario(path) -> Scenario:
    cp = _new_parser()
    if not cp.read(path):
        raise StructuralError(f"cannot read scenario file {path}")
    return scenario_from_config(cp)


def resolve_scenario(ref: str) -> Scenario:
    """Look up a built-in scenario name, else treat ref as a scenario file path."""
    byname = builtin_scenarios()
    if ref in byname:
        return byname[ref]
    return read_scenario(ref)


# ---------------------------------------------------------------------------
# sweep specs
# ---------------------------------------------------------------------------


def read_sweep_spec(path) -> SweepSpec:
    cp = _new_parser()
    if not cp.read(path):
        raise StructuralError(f"cannot read sweep file {path}")
    if "sweep" not in cp:
        raise StructuralError("missing [sweep] section")
    s = cp["sweep"]
    try:
        base = resolve_scenario(s["scenario"])
        if "horizon" in s:
            base = replace(base, horizon=float(s["horizon"]))
        factors = tuple(float(v) for v in s["factors"].split())
        return SweepSpec(parameter=s["parameter"], factors=factors, base=base)
    except (KeyError, ValueError) as exc:
        raise StructuralError(f"malformed sweep file: {exc}") from exc


def write_sweep_spec(spec: SweepSpec, path, scenario_ref: str) -> None:
    cp = _new_parser()
    cp["sweep"] = {
        "parameter": spec.parameter,
        "factors": " ".join(fmt(f) for f in spec.factors),
        "scenario": scenario_ref,
        "horizon": fmt(spec.base.horizon),
    }
    with open(path, "w") as fh:
        cp.write(fh)


def sweep_rows_to_csv(rows) -> str:
    out = ["factor,transient_time_s,classification,terminal_H_J"]
    for r in rows:
        out.append(
            f"{fmt(r.factor)},{fmt(r.transient_time_s)},{r.classification},{fmt(r.terminal_H_J)}"
        )
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def report_to_text(report) -> str:
    """Serialize a SteadyStateReport in the config format family."""
    cp = _new_parser()
    cp["report"] = {
        "classification": report.classification,
        "probe": report.probe,
        "terminal_H_J": fmt(report.terminal_H),
        "freq_spread_rel": fmt(report.freq_spread_rel),
        "envelope_flatness": fmt(report.envelope_flatness),
    }
    cp["frequencies"] = {
        f"sg{i}_rad_per_s": fmt(f) for i, f in enumerate(report.frequencies, start=1)
    }
    cp["peaks"] = {}
    for i, (w, frac) in enumerate(report.dominant_peaks, start=1):
        cp["peaks"][f"peak{i}_rad_per_s"] = fmt(w)
        cp["peaks"][f"peak{i}_energy_fraction"] = fmt(frac)
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
