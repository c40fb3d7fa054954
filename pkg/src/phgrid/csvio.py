"""Trajectory CSV interchange.

Column order: t_s, then the per-edge state columns in network edge order
(sg<i>_omega, sg<i>_Ia, sg<i>_Ib, sg<i>_theta, sh<i>_Va, sh<i>_Vb,
ln<i>_Ia, ln<i>_Ib, ld<i>_Ia, ld<i>_Ib), then H_total_J, source_W,
dissipation_W.  Values are written with 17-significant-digit formatting, so
a written file re-reads bit-exactly.  Angles are stored raw (unwrapped).
"""

from __future__ import annotations

import numpy as np

from .errors import GridError
from .integrator import Trajectory

TAIL_COLUMNS = ("H_total_J", "source_W", "dissipation_W")


def fmt(x: float) -> str:
    """Fixed 17-significant-digit decimal (bit-exact float64 round trip)."""
    return format(float(x), ".17g")


def trajectory_header(traj: Trajectory) -> list[str]:
    return ["t_s", *traj.labels, *TAIL_COLUMNS]


def write_trajectory_csv(traj: Trajectory, path) -> None:
    H = traj.channel("H")
    src = traj.channel("source_W")
    dis = traj.channel("dissipation_W")
    if H is None or src is None or dis is None:
        raise GridError("trajectory lacks derived channels (H, source, dissipation)")
    with open(path, "w") as fh:
        fh.write(",".join(trajectory_header(traj)) + "\n")
        for i in range(len(traj)):
            row = [fmt(traj.times[i])]
            row.extend(fmt(v) for v in traj.states[i])
            row.append(fmt(H[i]))
            row.append(fmt(src[i]))
            row.append(fmt(dis[i]))
            fh.write(",".join(row) + "\n")


def read_trajectory_csv(path) -> Trajectory:
    """Re-read a trajectory CSV; raises GridError on schema violations."""
    with open(path) as fh:
        header = fh.readline().strip()
        if not header:
            raise GridError(f"{path}: empty file")
        cols = header.split(",")
        if cols[0] != "t_s" or tuple(cols[-3:]) != TAIL_COLUMNS:
            raise GridError(
                f"{path}: header must start with t_s and end with {TAIL_COLUMNS}"
            )
        labels = tuple(cols[1:-3])
        if not labels:
            raise GridError(f"{path}: no state columns")
        try:
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise GridError(f"{path}: malformed data row: {exc}") from exc
    if data.size == 0:
        raise GridError(f"{path}: no data rows")
    if data.shape[1] != len(cols):
        raise GridError(
            f"{path}: rows have {data.shape[1]} fields, header has {len(cols)}"
        )
    return Trajectory(
        times=np.ascontiguousarray(data[:, 0]),
        states=np.ascontiguousarray(data[:, 1:-3]),
        labels=labels,
        derived={
            "H": np.ascontiguousarray(data[:, -3]),
            "source_W": np.ascontiguousarray(data[:, -2]),
            "dissipation_W": np.ascontiguousarray(data[:, -1]),
        },
    )
