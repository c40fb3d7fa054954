"""Fixed-step RK4 and embedded RK45 integration with decimated dense output.

Trajectories store only the requested sample grid plus derived channels
(total/per-edge Hamiltonian, source power, dissipation) computed streaming
inside the kernel loops, so memory is O(samples) independent of step count.
Identical (net, x0, cfg) inputs produce bit-identical trajectories on a
given backend.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .dynamics import NO_FORCING, _check_state, pack, state_labels
from .errors import NonFiniteError, StepFailure
from .netmodel import PowerNetwork, edges, require_valid


@dataclass(frozen=True)
class IntegratorConfig:
    """method "rk4" (fixed dt) or "rk45" (abs_tol/rel_tol, dt_min..dt_max).

    sample_every defaults to dt for RK4 and dt_max for RK45; for RK4 it must
    be an integer multiple of dt.
    """

    method: str = "rk4"
    dt: float = 5e-5
    abs_tol: float = 1e-8
    rel_tol: float = 1e-8
    dt_min: float = 1e-9
    dt_max: float = 1e-2
    sample_every: float | None = None
    max_steps: int = 2_000_000_000

    def __post_init__(self):
        if self.method not in ("rk4", "rk45"):
            raise ValueError(f"unknown method {self.method!r}")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be > 0")
        if not 0 < self.dt_min <= self.dt_max:
            raise ValueError("need 0 < dt_min <= dt_max")
        if self.sample_every is not None and not self.sample_every > 0:
            raise ValueError("sample_every must be > 0")

    @property
    def effective_sample_every(self) -> float:
        if self.sample_every is not None:
            return self.sample_every
        return self.dt if self.method == "rk4" else self.dt_max


@dataclass(frozen=True)
class Forcing:
    """Sinusoidal port input (amp_alpha + j amp_beta) e^{j omega t} on one edge."""

    edge: str | int
    amp_alpha: float
    amp_beta: float
    omega: float


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution: times (n,), states (n, dim), derived channels.

    ``labels`` names the state columns; derived holds "H", "source_W",
    "dissipation_W" (n,) and "H_edges" (n, n_edges) with ``edge_labels``.
    """

    times: np.ndarray
    states: np.ndarray
    labels: tuple[str, ...]
    derived: dict = field(default_factory=dict)
    edge_labels: tuple[str, ...] = ()

    def channel(self, name: str):
        return self.derived.get(name)

    def column(self, label: str) -> np.ndarray:
        return self.states[:, self.labels.index(label)]

    def __len__(self) -> int:
        return self.times.shape[0]


def _resolve_forcing(forcing: Forcing | None, net: PowerNetwork):
    if forcing is None:
        return NO_FORCING
    if isinstance(forcing.edge, str):
        labels = [e.label for e in edges(net)]
        try:
            row = labels.index(forcing.edge)
        except ValueError:
            raise ValueError(f"forcing edge {forcing.edge!r} not in {labels}") from None
    else:
        row = int(forcing.edge)
    return (row, float(forcing.amp_alpha), float(forcing.amp_beta), float(forcing.omega))


def integrate(
    net: PowerNetwork,
    x0,
    t_span: tuple[float, float],
    cfg: IntegratorConfig,
    forcing: Forcing | None = None,
    check: bool = True,
) -> Trajectory:
    """Integrate the closed network from x0 over t_span on the sample grid.

    check=False skips network validation (used by deliberately
    out-of-invariant experiments such as the zero-damping conservative runs).
    """
    if check:
        require_valid(net)
    x0 = _check_state(x0, net)
    if not np.isfinite(x0).all():
        raise NonFiniteError("initial state contains NaN/Inf")
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ValueError("t_span must satisfy t1 > t0")

    p = pack(net)
    fo = _resolve_forcing(forcing, net)
    sample_every = cfg.effective_sample_every

    n_int = (t1 - t0) / sample_every
    n_intervals = int(round(n_int))
    if n_intervals < 1 or abs(n_int - n_intervals) > 1e-9 * max(n_int, 1.0):
        raise ValueError("t_span length must be a whole number of sample_every")
    n_rec = n_intervals + 1

    n_e = p.W.shape[0]
    times = np.empty(n_rec)
    states = np.empty((n_rec, p.dim))
    hedges = np.empty((n_rec, n_e))
    hs = np.empty(n_rec)
    srcs = np.empty(n_rec)
    diss = np.empty(n_rec)

    if cfg.method == "rk4":
        stride_f = sample_every / cfg.dt
        stride = int(round(stride_f))
        if stride < 1 or abs(stride_f - stride) > 1e-9 * stride_f:
            raise ValueError("sample_every must be an integer multiple of dt")
        n_steps = n_intervals * stride
        code, rec, _ = kernels.rk4_loop(
            x0, t0, cfg.dt, n_steps, stride,
            *p.kernel_args(), *fo,
            times, states, hedges, hs, srcs, diss,
        )
    else:
        code, rec, _ = kernels.rk45_loop(
            x0, t0, sample_every, n_rec,
            cfg.abs_tol, cfg.rel_tol, cfg.dt_min, cfg.dt_max, cfg.max_steps,
            *p.kernel_args(), *fo,
            times, states, hedges, hs, srcs, diss,
        )

    if code == 1:
        raise NonFiniteError(
            f"state became non-finite near t={times[max(rec - 1, 0)]:.6g}"
        )
    if code == 2:
        raise StepFailure(
            f"RK45 cannot satisfy tolerance at dt_min={cfg.dt_min} near "
            f"t={times[max(rec - 1, 0)]:.6g}"
        )
    if code == 3:
        raise StepFailure(f"step budget max_steps={cfg.max_steps} exhausted")

    return Trajectory(
        times=times,
        states=states,
        labels=state_labels(net),
        derived={"H": hs, "source_W": srcs, "dissipation_W": diss, "H_edges": hedges},
        edge_labels=tuple(e.label for e in edges(net)),
    )


def decimate(traj: Trajectory, stride: int) -> Trajectory:
    """Keep every stride-th sample; both endpoints are always retained."""
    if stride < 1 or int(stride) != stride:
        raise ValueError("stride must be a positive integer")
    n = len(traj)
    idx = list(range(0, n, int(stride)))
    if idx[-1] != n - 1:
        idx.append(n - 1)
    idx = np.asarray(idx)
    derived = {k: np.ascontiguousarray(v[idx]) for k, v in traj.derived.items()}
    return Trajectory(
        times=np.ascontiguousarray(traj.times[idx]),
        states=np.ascontiguousarray(traj.states[idx]),
        labels=traj.labels,
        derived=derived,
        edge_labels=traj.edge_labels,
    )
