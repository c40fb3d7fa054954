"""Vector field, Hamiltonian, gradient and energy-balance diagnostics.

State layout (flat float64, physical co-energy variables): one block per
expanded edge in edge order -- SG: (omega, Ia, Ib, theta), shunt: (Va, Vb),
line/load: (Ia, Ib).  theta is integrated unwrapped.  Complex alpha-beta
pairs live in adjacent reals.

The Hamiltonian is the total stored energy
H = sum 1/2 J w^2 + 1/2 Ls |I|^2 + 1/2 C |V|^2 + 1/2 L |I|^2, its gradient in
energy coordinates (J w, Ls I, C V, L I) is numerically the physical vector
(w, I, V, I) itself, and the energy balance along solutions is
dH/dt = sum_i T0_i w_i - grad(H)^H R grad(H).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import DimensionMismatch, GridError, NonFiniteError
from .netmodel import (
    Admittance,
    PowerNetwork,
    edges,
    hessian_energy_diagonal,
    require_valid,
)

_BLOCK = {"sg": 4, "shunt": 2, "line": 2, "load": 2}
_SLOTS = {
    "sg": ("omega", "Ia", "Ib", "theta"),
    "shunt": ("Va", "Vb"),
    "line": ("Ia", "Ib"),
    "load": ("Ia", "Ib"),
}

#: No forcing sentinel for the kernel argument list.
NO_FORCING = (-1, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class PackedNet:
    """Per-kind parameter arrays consumed by the kernels (internal layout)."""

    dim: int
    W: np.ndarray  # (n_e, n_e) float64
    port: np.ndarray  # alpha state index of each edge port
    sgo: np.ndarray  # SG block offsets
    sgr: np.ndarray  # SG edge rows
    sgp: np.ndarray  # (n_sg, 6): J F T0 Rs Ls psi
    cpo: np.ndarray
    cpr: np.ndarray
    cpp: np.ndarray  # (n_cap, 3): C G B
    ino: np.ndarray
    inr: np.ndarray
    inp: np.ndarray  # (n_ind, 2): R L

    def kernel_args(self):
        return (
            self.W,
            self.port,
            self.sgo,
            self.sgr,
            self.sgp,
            self.cpo,
            self.cpr,
            self.cpp,
            self.ino,
            self.inr,
            self.inp,
        )


@dataclass(frozen=True)
class EnergyBreakdown:
    """Stored energy per edge plus the instantaneous balance terms (J, W)."""

    parts: dict[str, float]
    total: float
    source_W: float
    dissipation_W: float


def state_dim(net: PowerNetwork) -> int:
    return sum(_BLOCK[e.kind] for e in edges(net))


@lru_cache(maxsize=64)
def state_labels(net: PowerNetwork) -> tuple[str, ...]:
    """Column labels in state order, e.g. sg1_omega ... sh3_Va ... ld8_Ib."""
    out = []
    for e in edges(net):
        out.extend(f"{e.label}_{s}" for s in _SLOTS[e.kind])
    return tuple(out)


@lru_cache(maxsize=64)
def block_offsets(net: PowerNetwork) -> tuple[int, ...]:
    """State offset of each expanded edge block, in edge order."""
    offs = []
    o = 0
    for e in edges(net):
        offs.append(o)
        o += _BLOCK[e.kind]
    return tuple(offs)


def theta_indices(net: PowerNetwork) -> np.ndarray:
    """State indices of the SG angles."""
    idx = [o + 3 for o, e in zip(block_offsets(net), edges(net)) if e.kind == "sg"]
    return np.asarray(idx, dtype=np.int64)


def energy_slot_indices(net: PowerNetwork) -> np.ndarray:
    """State indices of the energy slots (everything except the angles)."""
    th = set(theta_indices(net).tolist())
    return np.asarray([i for i in range(state_dim(net)) if i not in th], dtype=np.int64)


@lru_cache(maxsize=64)
def energy_scale(net: PowerNetwork) -> np.ndarray:
    """Diagonal mapping physical -> energy coordinates (theta entries = 1)."""
    m = np.ones(state_dim(net))
    for o, e in zip(block_offsets(net), edges(net)):
        if e.kind == "sg":
            m[o] = e.params.J
            m[o + 1] = e.params.Ls
            m[o + 2] = e.params.Ls
        elif e.kind == "shunt":
            m[o : o + 2] = e.params.C
        elif e.kind == "line":
            m[o : o + 2] = e.params.L
        else:
            m[o : o + 2] = e.params.Lld
    return m


@lru_cache(maxsize=64)
def pack(net: PowerNetwork) -> PackedNet:
    """Flatten a PowerNetwork into the kernel arrays (cached, read-only)."""
    es = edges(net)
    offs = block_offsets(net)
    n_e = len(es)

    # build_w directly: pack() must also drive deliberately out-of-invariant
    # fixtures (zero damping), so no validation here; cf. integrate(check=...).
    from .netmodel import build_w

    W = build_w(net).astype(np.float64)

    port = np.empty(n_e, dtype=np.int64)
    sgo, sgr, sgp = [], [], []
    cpo, cpr, cpp = [], [], []
    ino, inr, inp = [], [], []
    for k, (e, o) in enumerate(zip(es, offs)):
        if e.kind == "sg":
            port[k] = o + 1
            sgo.append(o)
            sgr.append(k)
            p = e.params
            sgp.append((p.J, p.F, p.T0, p.Rs, p.Ls, p.psi))
        elif e.kind == "shunt":
            port[k] = o
            cpo.append(o)
            cpr.append(k)
            ld = e.params.load
            g, b = (ld.G, ld.B) if isinstance(ld, Admittance) else (0.0, 0.0)
            cpp.append((e.params.C, g, b))
        else:
            port[k] = o
            ino.append(o)
            inr.append(k)
            if e.kind == "line":
                inp.append((e.params.R, e.params.L))
            else:
                inp.append((e.params.Rld, e.params.Lld))

    def ia(v):
        return np.asarray(v, dtype=np.int64)

    def fa(v, w):
        return np.asarray(v, dtype=np.float64).reshape(len(v), w)

    return PackedNet(
        dim=state_dim(net),
        W=W,
        port=port,
        sgo=ia(sgo),
        sgr=ia(sgr),
        sgp=fa(sgp, 6),
        cpo=ia(cpo),
        cpr=ia(cpr),
        cpp=fa(cpp, 3),
        ino=ia(ino),
        inr=ia(inr),
        inp=fa(inp, 2),
    )


def _check_state(x, net: PowerNetwork) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != (state_dim(net),):
        raise DimensionMismatch(
            f"state has shape {x.shape}, network needs ({state_dim(net)},)"
        )
    return x


def rhs(t: float, x, net: PowerNetwork) -> np.ndarray:
    """Closed-system state derivative at (t, x); raises NonFiniteError on NaN/Inf."""
    x = _check_state(x, net)
    p = pack(net)
    out = np.empty(p.dim)
    kernels.rhs_core(float(t), x, *p.kernel_args(), *NO_FORCING, out)
    if not np.isfinite(out).all():
        raise NonFiniteError(f"non-finite derivative at t={t}")
    return out


def hamiltonian(x, net: PowerNetwork) -> EnergyBreakdown:
    """Total stored energy, per-edge parts, source power and dissipation."""
    x = _check_state(x, net)
    p = pack(net)
    hedges = np.empty(len(edges(net)))
    h, src, dis = kernels.channels_core(
        x, p.sgo, p.sgr, p.sgp, p.cpo, p.cpr, p.cpp, p.ino, p.inr, p.inp, hedges
    )
    parts = {e.label: float(v) for e, v in zip(edges(net), hedges)}
    return EnergyBreakdown(parts=parts, total=float(h), source_W=float(src), dissipation_W=float(dis))


def gradient(x, net: PowerNetwork) -> np.ndarray:
    """Gradient of H in energy coordinates == the physical values (w, I, V, I).

    Returned in state layout with zeros in the angle slots (dH/dtheta = 0).
    """
    x = _check_state(x, net)
    g = x.copy()
    g[theta_indices(net)] = 0.0
    return g


def hessian_floor(net: PowerNetwork) -> float:
    """min eigenvalue of the block-diagonal energy Hessian: min(1/J, 1/Ls, 1/C, 1/L)."""
    require_valid(net)
    return float(hessian_energy_diagonal(net).min())


def electrical_torque(psi: float, theta: float, i_alpha: float, i_beta: float) -> float:
    """Air-gap torque Re{j psi e^{-j theta} I} = psi (Ia sin(theta) - Ib cos(theta))."""
    return psi * (i_alpha * np.sin(theta) - i_beta * np.cos(theta))


def conservative_field(x, net: PowerNetwork) -> np.ndarray:
    """Energy-coordinate velocity of the frozen-time conservative flow.

    Drops damping and the torque source from the vector field, keeping the
    skew interconnection (EMF coupling, Im{Y}, network matrix): this is the
    generator of the quotient equivalence classes.  Angle slots are zero.
    """
    x = _check_state(x, net)
    p = pack(net)
    n_e = p.W.shape[0]
    y = np.empty((n_e, 2))
    y[:, 0] = x[p.port]
    y[:, 1] = x[p.port + 1]
    u = p.W @ y

    v = np.zeros(p.dim)
    w = x[p.sgo]
    ia = x[p.sgo + 1]
    ib = x[p.sgo + 2]
    th = x[p.sgo + 3]
    s, c = np.sin(th), np.cos(th)
    psi = p.sgp[:, 5]
    v[p.sgo] = -psi * (ia * s - ib * c)
    v[p.sgo + 1] = psi * w * s + u[p.sgr, 0]
    v[p.sgo + 2] = -psi * w * c + u[p.sgr, 1]
    # theta slots stay zero (excluded from the quotient geometry)
    va = x[p.cpo]
    vb = x[p.cpo + 1]
    v[p.cpo] = p.cpp[:, 2] * vb + u[p.cpr, 0]
    v[p.cpo + 1] = -p.cpp[:, 2] * va + u[p.cpr, 1]
    v[p.ino] = u[p.inr, 0]
    v[p.ino + 1] = u[p.inr, 1]
    return v


def energy_balance_residual(traj, net: PowerNetwork) -> np.ndarray:
    """Defect of dH/dt = source - dissipation along a sampled trajectory.

    dH/dt uses 4th-order central differences on the interior samples, so the
    result aligns with traj.times[2:-2].  Requires a uniform grid with at
    least 5 samples.
    """
    t = np.asarray(traj.times)
    if t.size < 5:
        raise GridError(f"need at least 5 samples, got {t.size}")
    dt = np.diff(t)
    if not np.allclose(dt, dt[0], rtol=1e-9, atol=0.0):
        raise GridError("energy_balance_residual needs a uniform time grid")
    h = float(dt[0])

    H = traj.channel("H")
    src = traj.channel("source_W")
    dis = traj.channel("dissipation_W")
    if H is None or src is None or dis is None:
        vals = [hamiltonian(state, net) for state in traj.states]
        H = np.array([v.total for v in vals])
        src = np.array([v.source_W for v in vals])
        dis = np.array([v.dissipation_W for v in vals])

    dHdt = (H[:-4] - 8.0 * H[1:-3] + 8.0 * H[3:-1] - H[4:]) / (12.0 * h)
    return dHdt - (src - dis)[2:-2]
