"""Contraction machinery and steady-state classification.

Numerical counterparts of the theory side: weighted matrix measure
(logarithmic norm), projection transverse to the frozen-time conservative
flow, a chord upper bound for the quotient distance, Hamiltonian-gap
convergence between runs, the rotating-frame change of variables, the
forced-RLC decay-rate check, rotor-frequency estimation and terminal
behavior classification.

All tangent-space geometry lives in energy coordinates (J w, Ls I, C V, L I)
under the inner product <y, x> = Re{y^H P x} with P = R^{-1} block-diagonal;
SG angle components are excluded (projected to zero).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    conservative_field,
    energy_scale,
    gradient,
    hamiltonian,
    state_dim,
    theta_indices,
)
from .errors import (
    DegenerateDirection,
    DimensionMismatch,
    GridError,
    StructuralError,
)
from .integrator import Forcing, IntegratorConfig, Trajectory, integrate
from .netmodel import (
    Admittance,
    PowerNetwork,
    RlBranch,
    edges,
    reference_frequency,
    rl_admittance,
)

_TINY = 1e-300


# ---------------------------------------------------------------------------
# matrix measure
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InnerProductWeight:
    """Hermitian positive-definite weight P of <y, x> = Re{y^H P x}."""

    P: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.P)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise DimensionMismatch(f"weight must be square, got {P.shape}")
        if not np.allclose(P, P.conj().T, rtol=1e-12, atol=0.0):
            raise ValueError("weight must be Hermitian")
        if np.linalg.eigvalsh(P).min() <= 0:
            raise ValueError("weight must be positive definite")
        object.__setattr__(self, "P", P)


def matrix_measure(A, P=None) -> float:
    """Logarithmic norm: largest eigenvalue of the P-weighted symmetric part.

    mu(A) = lambda_max{ 1/2 P^{-1/2} (P A + A^H P) P^{-1/2} }; with P = I this
    is the largest eigenvalue of the Hermitian part.  Sign-indefinite.
    """
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"matrix must be square, got {A.shape}")
    n = A.shape[0]
    if P is None:
        S = 0.5 * (A + A.conj().T)
        return float(np.linalg.eigvalsh(S).max())
    if isinstance(P, InnerProductWeight):
        P = P.P
    P = np.asarray(P)
    if P.shape != (n, n):
        raise DimensionMismatch(f"weight shape {P.shape} does not match {A.shape}")
    w, V = np.linalg.eigh(P)
    if w.min() <= 0:
        raise ValueError("weight must be positive definite")
    Pih = (V * (w**-0.5)) @ V.conj().T
    S = 0.5 * Pih @ (P @ A + A.conj().T @ P) @ Pih
    return float(np.linalg.eigvalsh(S).max())


# ---------------------------------------------------------------------------
# horizontal projection / quotient distance
# ---------------------------------------------------------------------------


def network_weight(net: PowerNetwork, omega_ref: float | None = None) -> np.ndarray:
    """Diagonal of P = R^{-1} over state slots (angle slots get weight 0).

    RL-branch loads leave their capacitor slots undamped, so those slots use
    the branch admittance Re{Y(omega_ref)} (omega_ref defaults to the mean
    zero-load droop frequency) to keep P finite and positive.
    """
    if omega_ref is None:
        omega_ref = reference_frequency(net)
    from .dynamics import block_offsets

    w = np.zeros(state_dim(net))
    for o, e in zip(block_offsets(net), edges(net)):
        if e.kind == "sg":
            w[o] = 1.0 / e.params.F
            w[o + 1] = 1.0 / e.params.Rs
            w[o + 2] = 1.0 / e.params.Rs
        elif e.kind == "shunt":
            if isinstance(e.params.load, Admittance):
                g = e.params.load.G
            else:
                if not math.isfinite(omega_ref):
                    raise StructuralError(
                        "network_weight needs omega_ref for RL loads on a net without SGs"
                    )
                g = rl_admittance(e.params.load.Rld, e.params.load.Lld, omega_ref).real
            w[o : o + 2] = 1.0 / g
        elif e.kind == "line":
            w[o : o + 2] = 1.0 / e.params.R
        else:
            w[o : o + 2] = 1.0 / e.params.Rld
    return w


def _weight_diag(net, weight):
    if weight is None:
        return network_weight(net)
    w = np.asarray(weight, dtype=float)
    if w.shape != (state_dim(net),):
        raise DimensionMismatch("weight diagonal has wrong length")
    return w


def tangent_norm(delta, net: PowerNetwork, weight=None) -> float:
    """Weighted energy-coordinate norm of a physical tangent (angles excluded)."""
    w = _weight_diag(net, weight)
    d = energy_scale(net) * np.asarray(delta, dtype=float)
    return float(np.sqrt(np.sum(w * d * d)))


def horizontal_project(
    t: float,
    x,
    delta,
    net: PowerNetwork,
    weight=None,
    literal: bool = False,
    eps: float = 1e-12,
) -> np.ndarray:
    """Project a tangent transverse to the conservative flow direction.

    Removes the component along v = J(t,x) grad H under the R^{-1}-weighted
    energy inner product and zeroes the angle components.  ``literal=True``
    uses the normalization <v,d>/(|v||d|) instead of the orthogonal
    projector <v,d>/<v,v> (not idempotent; provided for comparison).
    Raises DegenerateDirection when |v| < eps * |grad H|.
    """
    x = np.asarray(x, dtype=float)
    d = np.asarray(delta, dtype=float)
    if d.shape != (state_dim(net),):
        raise DimensionMismatch("tangent has wrong length")
    w = _weight_diag(net, weight)
    m = energy_scale(net)

    v = conservative_field(x, net)  # energy coords, theta slots zero
    de = m * d
    de[theta_indices(net)] = 0.0

    vv = float(np.sum(w * v * v))
    g = m * gradient(x, net)
    gn = float(np.sum(w * g * g))
    if vv <= (eps * eps) * gn or vv == 0.0:
        raise DegenerateDirection(
            f"conservative direction vanished (|v|^2={vv:.3e}, |gradH|^2={gn:.3e})"
        )
    vd = float(np.sum(w * v * de))
    if literal:
        dn = float(np.sqrt(np.sum(w * de * de)))
        vn = math.sqrt(vv)
        coef = vd / (vn * dn) if dn > 0 else 0.0
    else:
        coef = vd / vv
    out_e = de - coef * v
    return out_e / m


def quotient_distance_chord(
    t: float,
    x1,
    x2,
    net: PowerNetwork,
    n_seg: int = 256,
    weight=None,
) -> float:
    """Midpoint-rule chord upper bound for the quotient distance.

    Integrates |P(t, gamma(s)) gamma'(s)| along the straight segment from x1
    to x2 (one admissible curve, hence an upper bound of the infimum over
    curves).  Angle components are excluded by the projection.
    """
    if n_seg < 1:
        raise ValueError("n_seg must be >= 1")
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if np.array_equal(x1, x2):
        return 0.0
    d = x2 - x1
    w = _weight_diag(net, weight)
    m = energy_scale(net)
    terms = []
    for k in range(n_seg):
        s = (k + 0.5) / n_seg
        p = horizontal_project(t, x1 + s * d, d, net, weight=w)
        pe = m * p
        terms.append(math.sqrt(float(np.sum(w * pe * pe))))
    return math.fsum(terms) / n_seg


# ---------------------------------------------------------------------------
# Hamiltonian gap / rotating frame
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GapSeries:
    """|H1 - H2| over a common grid plus a terminal-half exponential fit."""

    times: np.ndarray
    gap: np.ndarray
    rate: float  # fitted decay rate of the gap (1/s), positive = decaying


def _fit_log_slope(t: np.ndarray, y: np.ndarray) -> float:
    """Least-squares slope of log(max(y, tiny)); guards nonpositive values."""
    ly = np.log(np.maximum(y, _TINY))
    A = np.vstack([t, np.ones_like(t)]).T
    sol, *_ = np.linalg.lstsq(A, ly, rcond=None)
    return float(sol[0])


def _traj_H(traj: Trajectory, net: PowerNetwork) -> np.ndarray:
    H = traj.channel("H")
    if H is None:
        H = np.array([hamiltonian(s, net).total for s in traj.states])
    return H


def hamiltonian_gap(traj1: Trajectory, traj2: Trajectory, net: PowerNetwork) -> GapSeries:
    """Pointwise |H1 - H2| and its decay rate fitted on the final 50%."""
    if traj1.times.shape != traj2.times.shape or not np.array_equal(
        traj1.times, traj2.times
    ):
        raise GridError("trajectories must share one time grid")
    gap = np.abs(_traj_H(traj1, net) - _traj_H(traj2, net))
    half = len(gap) // 2
    rate = -_fit_log_slope(traj1.times[half:], gap[half:])
    return GapSeries(times=traj1.times, gap=gap, rate=rate)


def rotating_frame(traj: Trajectory, omega0: float, net: PowerNetwork) -> Trajectory:
    """Multiply every alpha-beta pair by e^{-j omega0 t}; shift angles by -omega0 t."""
    from .dynamics import block_offsets

    t = traj.times
    c = np.cos(omega0 * t)
    s = np.sin(omega0 * t)
    st = traj.states.copy()

    def rot(o):
        a = st[:, o].copy()
        b = st[:, o + 1].copy()
        st[:, o] = c * a + s * b
        st[:, o + 1] = -s * a + c * b

    for o, e in zip(block_offsets(net), edges(net)):
        if e.kind == "sg":
            rot(o + 1)
            st[:, o + 3] -= omega0 * t
        else:
            rot(o)
    return Trajectory(
        times=t.copy(),
        states=st,
        labels=traj.labels,
        derived=dict(traj.derived),
        edge_labels=traj.edge_labels,
    )


# ---------------------------------------------------------------------------
# forced-RLC decay check
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecayFit:
    """Measured amplitude decay rate of the shifted energy vs its floor.

    rate is -1/2 d(log shifted-H)/dt fitted on the final 50%; bound is
    lambda_min(R) * lambda_min(Q); margin = rate / bound.
    """

    rate: float
    bound: float
    margin: float
    steady_state: np.ndarray  # rotating-frame complex phasors per edge
    times: np.ndarray = field(repr=False, default=None)
    shifted_H: np.ndarray = field(repr=False, default=None)


def rlc_phasor_steady_state(
    net: PowerNetwork, forcing: Forcing, omega0: float
) -> np.ndarray:
    """Rotating-frame fixed point of a forced SG-free RLC network.

    Solves [(-D + W) Q - j omega0 I] z = -g with per-edge complex energy
    states z (C V for shunts, L I for branches), D = diag(Y_i or R_i) and
    Q = diag(1/C, 1/L).  Independent of time stepping.
    """
    es = edges(net)
    if any(e.kind == "sg" for e in es):
        raise StructuralError("phasor solve is defined for SG-free networks only")
    from .netmodel import build_w

    n = len(es)
    D = np.zeros(n, dtype=complex)
    Q = np.zeros(n)
    for i, e in enumerate(es):
        if e.kind == "shunt":
            ld = e.params.load
            D[i] = complex(ld.G, ld.B) if isinstance(ld, Admittance) else 0.0
            Q[i] = 1.0 / e.params.C
        elif e.kind == "line":
            D[i] = e.params.R
            Q[i] = 1.0 / e.params.L
        else:
            D[i] = e.params.Rld
            Q[i] = 1.0 / e.params.Lld
    W = build_w(net).astype(float)
    g = np.zeros(n, dtype=complex)
    row = forcing.edge
    if isinstance(row, str):
        row = [e.label for e in es].index(row)
    g[row] = complex(forcing.amp_alpha, forcing.amp_beta)
    A = (W - np.diag(D)) @ np.diag(Q) - 1j * omega0 * np.eye(n)
    return np.linalg.solve(A, -g)


def shifted_hamiltonian_decay(
    net: PowerNetwork,
    omega0: float,
    forcing: Forcing,
    t_end: float,
    seed: int = 0,
    scale: float | None = None,
    cfg: IntegratorConfig | None = None,
) -> DecayFit:
    """Fit the decay rate of the energy distance to the forced limit cycle.

    Simulates the SG-free network from a random start, moves to the rotating
    frame, and fits H(x, xbar) = 1/2 (x-xbar)^H Q (x-xbar) against the floor
    lambda_min(R) lambda_min(Q).  The steady state comes from the phasor
    solve, not from the simulation.
    """
    es = edges(net)
    if any(e.kind == "sg" for e in es):
        raise StructuralError("shifted_hamiltonian_decay needs an SG-free network")
    zbar = rlc_phasor_steady_state(net, forcing, omega0)

    lam_r = []
    lam_q = []
    for e in es:
        if e.kind == "shunt":
            ld = e.params.load
            if isinstance(ld, Admittance):
                lam_r.append(ld.G)
            lam_q.append(1.0 / e.params.C)
        elif e.kind == "line":
            lam_r.append(e.params.R)
            lam_q.append(1.0 / e.params.L)
        else:
            lam_r.append(e.params.Rld)
            lam_q.append(1.0 / e.params.Lld)
    bound = min(lam_r) * min(lam_q)

    if cfg is None:
        dt = min(5e-3, 0.05 / max(omega0, 1.0))
        cfg = IntegratorConfig(method="rk4", dt=dt, sample_every=dt * 10)
    if scale is None:
        scale = 10.0 * max(1.0, float(np.abs(zbar).max()))
    rng = np.random.Generator(np.random.PCG64(seed))
    x0 = rng.uniform(0.0, scale, state_dim(net))

    traj = integrate(net, x0, (0.0, t_end), cfg, forcing=forcing, check=False)

    # shifted energy in the rotating frame, per complex edge state
    from .dynamics import block_offsets

    t = traj.times
    ph = np.exp(-1j * omega0 * t)
    hshift = np.zeros(len(t))
    for (o, e), q, zb in zip(
        [(o, e) for o, e in zip(block_offsets(net), edges(net))], lam_q, zbar
    ):
        m = 1.0 / q  # C or L
        z = m * (traj.states[:, o] + 1j * traj.states[:, o + 1]) * ph
        hshift += 0.5 * q * np.abs(z - zb) ** 2

    half = len(t) // 2
    rate = -0.5 * _fit_log_slope(t[half:], hshift[half:])
    return DecayFit(
        rate=rate,
        bound=bound,
        margin=rate / bound if bound > 0 else math.inf,
        steady_state=zbar,
        times=t,
        shifted_H=hshift,
    )


# ---------------------------------------------------------------------------
# frequency estimation / classification
# ---------------------------------------------------------------------------


def estimate_frequencies(traj: Trajectory, window: float) -> tuple[np.ndarray, float]:
    """Mean rotor frequencies over the final ``window`` seconds.

    Least-squares slope of each unwrapped SG angle; returns (freqs, spread)
    with spread = max - min.
    """
    t = traj.times
    if window <= 0 or window > t[-1] - t[0]:
        raise GridError(f"window {window} s does not fit the trajectory")
    theta_cols = [i for i, lab in enumerate(traj.labels) if lab.endswith("_theta")]
    if not theta_cols:
        raise GridError("trajectory has no SG angle columns")
    m = t >= t[-1] - window
    if m.sum() < 2:
        raise GridError("window contains fewer than 2 samples")
    A = np.vstack([t[m], np.ones(int(m.sum()))]).T
    freqs = []
    for c in theta_cols:
        th = np.unwrap(traj.states[m, c])
        sol, *_ = np.linalg.lstsq(A, th, rcond=None)
        freqs.append(float(sol[0]))
    freqs = np.asarray(freqs)
    return freqs, float(freqs.max() - freqs.min())


@dataclass(frozen=True)
class ClassifyConfig:
    """Thresholds for the steady-state classifier (configuration-exposed)."""

    freq_spread_rel: float = 1e-3
    envelope_flatness: float = 0.02
    peak_energy_fraction: float = 0.95
    collapse_frac: float = 1e-3
    envelope_cycles: int = 20
    dft_fraction: float = 0.25  # final fraction of the run fed to the DFT


@dataclass(frozen=True)
class SteadyStateReport:
    classification: str  # synchronized | low_freq_oscillation | collapse | aperiodic
    frequencies: tuple[float, ...]
    freq_spread_rel: float
    envelope_flatness: float
    dominant_peaks: tuple[tuple[float, float], ...]  # (rad/s, energy fraction)
    terminal_H: float
    probe: str


def probe_label(net: PowerNetwork) -> str:
    """Voltage probe: the capacitor of the first bus hosting no SG, else the last."""
    sg_buses = {b for b, _ in net.sgs}
    shunt_edges = [e for e in edges(net) if e.kind == "shunt"]
    for e in shunt_edges:
        if e.frm not in sg_buses:
            return e.label
    return shunt_edges[-1].label


def _envelope_flatness(sig: np.ndarray, samples_per_cycle: float, cycles: int) -> float:
    """(max-min)/mean of RMS over sliding windows of ``cycles`` cycles."""
    wlen = max(int(round(samples_per_cycle * cycles)), 2)
    n = sig.shape[0]
    if n < 2 * wlen:
        return math.inf
    hop = max(wlen // 4, 1)
    rms = []
    for start in range(0, n - wlen + 1, hop):
        seg = sig[start : start + wlen]
        rms.append(math.sqrt(float(np.mean(seg * seg))))
    rms = np.asarray(rms)
    mean = rms.mean()
    if mean <= 0:
        return math.inf
    return float((rms.max() - rms.min()) / mean)


def _dominant_peaks(sig: np.ndarray, dt: float, n_peaks: int = 3):
    """Hann-windowed DFT peaks as (rad/s, fraction of non-DC spectral energy).

    A peak's energy spans the maximum bin +-2 bins (Hann main lobe).
    """
    n = sig.shape[0]
    win = np.hanning(n)
    F = np.fft.rfft(sig * win)
    p = np.abs(F) ** 2
    p[0] = 0.0
    total = p.sum()
    if total <= 0:
        return ((0.0, 0.0),)
    freqs = np.fft.rfftfreq(n, dt) * 2.0 * math.pi
    used = np.zeros_like(p, dtype=bool)
    out = []
    for _ in range(n_peaks):
        cand = np.where(~used, p, -1.0)
        k = int(cand.argmax())
        if p[k] <= 0:
            break
        lo, hi = max(k - 2, 0), min(k + 3, p.size)
        out.append((float(freqs[k]), float(p[lo:hi].sum() / total)))
        used[lo:hi] = True
    return tuple(out)


def classify_steady_state(
    traj: Trajectory,
    net: PowerNetwork | None = None,
    config: ClassifyConfig = ClassifyConfig(),
) -> SteadyStateReport:
    """Classify the terminal behavior using the second half of the run.

    collapse: terminal H below collapse_frac times the median H of the first
    half.  synchronized: rotor frequency spread, probe envelope flatness and
    single-peak DFT tests all pass.  low_freq_oscillation: spread or envelope
    fails.  aperiodic: everything else (catch-all).

    net may be None when the trajectory carries derived H (CSV round-trip);
    the probe then falls back to the last shunt column.
    """
    n = len(traj)
    if n < 16:
        raise GridError("trajectory too short to classify")
    t = traj.times
    half = n // 2
    if net is None and traj.channel("H") is None:
        raise GridError("need a network or a trajectory with a derived H channel")
    H = _traj_H(traj, net)
    terminal_H = float(np.mean(H[max(n - max(n // 20, 2), 0):]))
    median_transient = float(np.median(H[:half]))

    if net is not None:
        probe = probe_label(net)
    else:
        shunts = [lab[:-3] for lab in traj.labels if lab.endswith("_Va")]
        if not shunts:
            raise GridError("trajectory has no shunt voltage columns")
        probe = shunts[-1]
    sig = traj.column(f"{probe}_Va")

    window = t[-1] - t[half]
    freqs, spread = estimate_frequencies(traj, window)
    mean_f = float(np.mean(np.abs(freqs)))
    spread_rel = spread / mean_f if mean_f > 0 else math.inf

    dt = float(t[1] - t[0])
    n_dft = max(int(n * config.dft_fraction), 8)
    peaks = _dominant_peaks(sig[n - n_dft:], dt)

    if mean_f > 0:
        samples_per_cycle = (2.0 * math.pi / mean_f) / dt
        flat = _envelope_flatness(sig[half:], samples_per_cycle, config.envelope_cycles)
    else:
        flat = math.inf

    if terminal_H < config.collapse_frac * median_transient:
        cls = "collapse"
    elif (
        spread_rel < config.freq_spread_rel
        and flat < config.envelope_flatness
        and peaks[0][1] > config.peak_energy_fraction
    ):
        cls = "synchronized"
    elif spread_rel >= config.freq_spread_rel or flat >= config.envelope_flatness:
        cls = "low_freq_oscillation"
    else:
        cls = "aperiodic"

    return SteadyStateReport(
        classification=cls,
        frequencies=tuple(float(f) for f in freqs),
        freq_spread_rel=float(spread_rel),
        envelope_flatness=float(flat),
        dominant_peaks=peaks,
        terminal_H=terminal_H,
        probe=probe,
    )
