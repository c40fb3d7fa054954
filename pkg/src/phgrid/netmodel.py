"""Network data model, structural validation, network matrix and certificate.

A power network is a directed graph whose edges are synchronous generators
(SG), shunt capacitors with a local load, and series R-L branches.  The sign
convention follows the edge direction: positive edge voltage and current
consume power.  Every bus hosts exactly one shunt capacitor; SG and RL-load
edges return to ground, line edges join buses (ground endpoints allowed for
degenerate analysis fixtures such as a forced series R-L loop).

RL-branch loads declared on a shunt are expanded into internal "load" edges
(series R-L to ground) appended after the line edges, so the port list seen
by the network matrix is: SGs, shunts, lines, loads, each labelled by its
1-based position in that list (sg1, sg2, sh3, ..., ln6, ..., ld8, ...).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import StructuralError

#: Distinguished zero-voltage return node; not a bus.
GROUND = -1


@dataclass(frozen=True)
class SgParams:
    """Synchronous generator with constant field flux, SI units.

    J: rotational inertia (kg m^2); F: total viscous damping including the
    torque droop ratio (N m s); T0: projected zero-frequency torque (N m);
    Rs: stator resistance (ohm); Ls: stator inductance (H); psi: field flux
    (V s); p: pole pairs, recorded but unused by the dynamics.
    """

    J: float
    F: float
    T0: float
    Rs: float
    Ls: float
    psi: float
    p: int = 0


@dataclass(frozen=True)
class Admittance:
    """Constant complex load admittance Y = G + jB (siemens)."""

    G: float
    B: float = 0.0


@dataclass(frozen=True)
class RlBranch:
    """Series R-L load branch to ground (exact electromagnetic load model)."""

    Rld: float
    Lld: float


@dataclass(frozen=True)
class ShuntParams:
    """Shunt capacitor (C in farad) plus its local load."""

    C: float
    load: Admittance | RlBranch


@dataclass(frozen=True)
class LineParams:
    """Series R-L branch (ohm, henry)."""

    R: float
    L: float


@dataclass(frozen=True)
class PowerNetwork:
    """Immutable network description.

    Buses are dense integers 0..n_bus-1.  ``sgs`` holds (bus, SgParams),
    ``shunts`` holds (bus, ShuntParams) and ``lines`` holds
    (from_bus, to_bus, LineParams) with GROUND allowed as an endpoint.
    """

    n_bus: int
    sgs: tuple[tuple[int, SgParams], ...] = ()
    shunts: tuple[tuple[int, ShuntParams], ...] = ()
    lines: tuple[tuple[int, int, LineParams], ...] = ()
    name: str = ""

    def __post_init__(self):
        # normalize to tuples so instances stay hashable
        object.__setattr__(self, "sgs", tuple(tuple(e) for e in self.sgs))
        object.__setattr__(self, "shunts", tuple(tuple(e) for e in self.shunts))
        object.__setattr__(self, "lines", tuple(tuple(e) for e in self.lines))


@dataclass(frozen=True)
class Edge:
    """One port of the expanded network (loads split out of their shunts)."""

    kind: str  # "sg" | "shunt" | "line" | "load"
    label: str  # sg1, sh3, ln6, ld8, ... (1-based global edge index)
    frm: int
    to: int
    params: SgParams | ShuntParams | LineParams | RlBranch


@dataclass(frozen=True)
class NetworkMatrix:
    """Skew-symmetric interconnection over edge ports: u = W y."""

    W: np.ndarray  # (n_e, n_e) int64, entries in {-1, 0, 1}
    labels: tuple[str, ...]


@dataclass(frozen=True)
class ContractionCertificate:
    """Contraction-rate certificate c = a * lambda_min(R).

    hessian_floor_a is the minimum eigenvalue of the block-diagonal energy
    Hessian (min over 1/J, 1/Ls, 1/C, 1/L); lambda_min_R is the floor of the
    per-edge dissipative channels (F, Rs, Re Y or Rld, Rline); the remark
    estimate is min_i Re{Y_i} / max_i J_i with RL loads converted to an
    admittance at omega_ref.
    """

    lambda_min_R: float
    hessian_floor_a: float
    rate_c: float
    remark_estimate: float
    omega_ref: float
    undamped_cap_slots: bool = False


@lru_cache(maxsize=64)
def edges(net: PowerNetwork) -> tuple[Edge, ...]:
    """Expanded, ordered edge list: SGs, shunts, lines, then RL-load edges."""
    out: list[Edge] = []
    k = 1
    for bus, sg in net.sgs:
        out.append(Edge("sg", f"sg{k}", bus, GROUND, sg))
        k += 1
    for bus, sh in net.shunts:
        out.append(Edge("shunt", f"sh{k}", bus, GROUND, sh))
        k += 1
    for frm, to, ln in net.lines:
        out.append(Edge("line", f"ln{k}", frm, to, ln))
        k += 1
    for bus, sh in net.shunts:
        if isinstance(sh.load, RlBranch):
            out.append(Edge("load", f"ld{k}", bus, GROUND, sh.load))
            k += 1
    return tuple(out)


def _cap_edge_index(net: PowerNetwork) -> dict[int, int]:
    """bus id -> index of its shunt edge in the expanded edge order."""
    idx = {}
    for i, e in enumerate(edges(net)):
        if e.kind == "shunt" and e.frm not in idx:
            idx[e.frm] = i
    return idx


def validate_network(net: PowerNetwork) -> list[str]:
    """Return all invariant violations (empty list means the network is valid)."""
    v: list[str] = []
    if net.n_bus < 0:
        v.append("n_bus must be >= 0")

    def bus_ok(b: int) -> bool:
        return b == GROUND or 0 <= b < net.n_bus

    cap_count = {b: 0 for b in range(net.n_bus)}
    for bus, sh in net.shunts:
        if not (0 <= bus < net.n_bus):
            v.append(f"shunt at undefined bus {bus}")
            continue
        cap_count[bus] += 1
        if not sh.C > 0:
            v.append(f"bus {bus}: capacitance C={sh.C} must be > 0")
        if isinstance(sh.load, Admittance):
            if not sh.load.G > 0:
                v.append(f"bus {bus}: load Re{{Y}}={sh.load.G} must be > 0")
        elif isinstance(sh.load, RlBranch):
            if not sh.load.Rld > 0:
                v.append(f"bus {bus}: load Rld={sh.load.Rld} must be > 0")
            if not sh.load.Lld > 0:
                v.append(f"bus {bus}: load Lld={sh.load.Lld} must be > 0")
        else:
            v.append(f"bus {bus}: unknown load type {type(sh.load).__name__}")
    for b, n in cap_count.items():
        if n == 0:
            v.append(f"bus {b} lacks a shunt capacitor")
        elif n > 1:
            v.append(f"bus {b} hosts {n} shunt capacitors (exactly one allowed)")

    for i, (bus, sg) in enumerate(net.sgs, start=1):
        if not (0 <= bus < net.n_bus):
            v.append(f"sg{i} at undefined bus {bus}")
        for name, val in (("J", sg.J), ("F", sg.F), ("Rs", sg.Rs), ("Ls", sg.Ls)):
            if not val > 0:
                v.append(f"sg{i}: {name}={val} must be > 0")
        if sg.psi < 0:
            v.append(f"sg{i}: psi={sg.psi} must be >= 0")

    for i, (frm, to, ln) in enumerate(net.lines, start=1):
        if not bus_ok(frm) or not bus_ok(to):
            v.append(f"line {i}: undefined endpoint ({frm}, {to})")
        if not ln.R > 0:
            v.append(f"line {i}: R={ln.R} must be > 0")
        if not ln.L > 0:
            v.append(f"line {i}: L={ln.L} must be > 0")

    # connectivity over buses through line edges
    if net.n_bus > 1:
        adj = {b: set() for b in range(net.n_bus)}
        for frm, to, _ in net.lines:
            if 0 <= frm < net.n_bus and 0 <= to < net.n_bus:
                adj[frm].add(to)
                adj[to].add(frm)
        seen = {0}
        stack = [0]
        while stack:
            for nb in adj[stack.pop()]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        if len(seen) != net.n_bus:
            missing = sorted(set(range(net.n_bus)) - seen)
            v.append(f"network graph is disconnected (unreachable buses {missing})")

    return v


def require_valid(net: PowerNetwork) -> None:
    """Raise StructuralError carrying the violation list if the net is invalid."""
    v = validate_network(net)
    if v:
        raise StructuralError(v)


def build_w(net: PowerNetwork) -> np.ndarray:
    """Raw KCL/KVL interconnection matrix over expanded edges (no validation)."""
    es = edges(net)
    cap_of = _cap_edge_index(net)
    n = len(es)
    W = np.zeros((n, n), dtype=np.int64)
    for k, e in enumerate(es):
        if e.kind in ("sg", "load"):
            c = cap_of[e.frm]
            W[k, c] += 1
            W[c, k] -= 1
        elif e.kind == "line":
            if e.frm != GROUND:
                c = cap_of[e.frm]
                W[k, c] += 1
                W[c, k] -= 1
            if e.to != GROUND:
                c = cap_of[e.to]
                W[k, c] -= 1
                W[c, k] += 1
    return W


def assemble_network_matrix(net: PowerNetwork) -> NetworkMatrix:
    """Build the skew-symmetric port interconnection u = W y from KCL/KVL.

    Rows/columns follow the expanded edge order.  For an SG or load edge at
    bus b: its input voltage is +V_b (entry +1) and the bus capacitor sees
    -I (entry -1).  For a line from a to b: input voltage is V_a - V_b and
    the capacitors see -I at a, +I at b.
    """
    require_valid(net)
    return NetworkMatrix(W=build_w(net), labels=tuple(e.label for e in edges(net)))


def rl_admittance(R: float, L: float, omega: float) -> complex:
    """Admittance of a series R-L branch at angular frequency omega."""
    z = complex(R, omega * L)
    return 1.0 / z


def reference_frequency(net: PowerNetwork) -> float:
    """Zero-load droop frequency mean(T0/F) over SGs; NaN when there are none.

    Used as the documented default frequency for RL-branch -> admittance
    conversion in the Remark estimate and the analysis inner-product weight.
    """
    if not net.sgs:
        return math.nan
    return float(np.mean([sg.T0 / sg.F for _, sg in net.sgs]))


def damping_channels(net: PowerNetwork) -> tuple[np.ndarray, list[str]]:
    """Per-edge dissipative channel values and labels, in edge order.

    SG contributes (F, Rs, Rs); an admittance shunt contributes (Re Y, Re Y);
    a shunt with an RL load contributes nothing (its dissipation lives on the
    expanded load edge); lines and loads contribute (R, R).
    """
    vals: list[float] = []
    labels: list[str] = []
    for e in edges(net):
        if e.kind == "sg":
            vals += [e.params.F, e.params.Rs, e.params.Rs]
            labels += [f"{e.label}_F", f"{e.label}_Rs_a", f"{e.label}_Rs_b"]
        elif e.kind == "shunt":
            if isinstance(e.params.load, Admittance):
                vals += [e.params.load.G] * 2
                labels += [f"{e.label}_G_a", f"{e.label}_G_b"]
        elif e.kind == "line":
            vals += [e.params.R] * 2
            labels += [f"{e.label}_R_a", f"{e.label}_R_b"]
        else:  # load
            vals += [e.params.Rld] * 2
            labels += [f"{e.label}_R_a", f"{e.label}_R_b"]
    return np.asarray(vals, dtype=float), labels


def hessian_energy_diagonal(net: PowerNetwork) -> np.ndarray:
    """Diagonal of the block-diagonal energy Hessian over energy slots.

    Energy slots exclude the SG angles: (1/J, 1/Ls, 1/Ls) per SG, (1/C, 1/C)
    per shunt, (1/L, 1/L) per line or load edge.
    """
    d: list[float] = []
    for e in edges(net):
        if e.kind == "sg":
            d += [1.0 / e.params.J, 1.0 / e.params.Ls, 1.0 / e.params.Ls]
        elif e.kind == "shunt":
            d += [1.0 / e.params.C] * 2
        elif e.kind == "line":
            d += [1.0 / e.params.L] * 2
        else:
            d += [1.0 / e.params.Lld] * 2
    return np.asarray(d, dtype=float)


def contraction_certificate(
    net: PowerNetwork, omega_ref: float | None = None
) -> ContractionCertificate:
    """Damping floor, Hessian floor, contraction rate and the Remark estimate.

    omega_ref defaults to reference_frequency(net) and is only used to convert
    RL-branch loads to an equivalent Re{Y} for the Remark estimate.
    """
    require_valid(net)
    if omega_ref is None:
        omega_ref = reference_frequency(net)

    damp, _ = damping_channels(net)
    lam = float(damp.min())
    a = float(hessian_energy_diagonal(net).min())

    re_y = []
    undamped = False
    for _, sh in net.shunts:
        if isinstance(sh.load, Admittance):
            re_y.append(sh.load.G)
        else:
            undamped = True
            if math.isfinite(omega_ref):
                re_y.append(rl_admittance(sh.load.Rld, sh.load.Lld, omega_ref).real)
    js = [sg.J for _, sg in net.sgs]
    remark = min(re_y) / max(js) if re_y and js else math.nan

    return ContractionCertificate(
        lambda_min_R=lam,
        hessian_floor_a=a,
        rate_c=a * lam,
        remark_estimate=remark,
        omega_ref=float(omega_ref),
        undamped_cap_slots=undamped,
    )
