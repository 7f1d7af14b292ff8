"""Thresholded numerical supports and the set queries used by propagation checks.

Distances are Euclidean between node centres.  Every verdict is discrete:
callers compare against a slack of one or two cells.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy import ndimage

from .errors import InvalidArgument
from .grid import Grid, Trajectory


def support_of(values: np.ndarray, tau: float) -> np.ndarray:
    """Boolean mask of nodes with |value| > tau."""
    if tau < 0:
        raise InvalidArgument("threshold must be non-negative")
    return np.abs(np.asarray(values, dtype=float)) > tau


def distance_to(mask: np.ndarray, grid: Grid) -> np.ndarray:
    """Distance from every node to the nearest node in ``mask`` (inf when mask is empty)."""
    if not mask.any():
        return np.full(mask.shape, np.inf)
    return ndimage.distance_transform_edt(~mask, sampling=grid.h)


def dilate(mask: np.ndarray, grid: Grid, h: float) -> np.ndarray:
    """All nodes within distance h of the set."""
    if h < 0:
        raise InvalidArgument("dilation radius must be non-negative")
    if not mask.any():
        return mask.copy()
    return distance_to(mask, grid) <= h * (1.0 + 1e-12) + 1e-15


def boundary_distance(grid: Grid, xi0: Sequence[float] | float) -> float:
    p = np.atleast_1d(np.asarray(xi0, dtype=float))
    if grid.ball is not None:
        return float(grid.ball[1] - np.linalg.norm(p - np.asarray(grid.ball[0])))
    return float(min(np.min(p - np.asarray(grid.lo)), np.min(np.asarray(grid.hi) - p)))


def vanish_radius_field(values: np.ndarray, grid: Grid, xi0: Sequence[float] | float, tau: float) -> float:
    """Largest r with |value| <= tau on every node of the open ball B_r(xi0)."""
    if not grid.contains(xi0):
        raise InvalidArgument(f"point {xi0} outside the grid domain")
    mask = support_of(values, tau)
    cap = max(boundary_distance(grid, xi0), 0.0)
    if not mask.any():
        return cap
    dist = grid.distance_from(xi0)
    return float(min(np.min(dist[mask]), cap))


def vanish_radius(traj: Trajectory, xi0: Sequence[float] | float, t: float, tau: float) -> float:
    return vanish_radius_field(traj.snapshot(t), traj.grid, xi0, tau)


def containment_margin_fields(a: np.ndarray, b: np.ndarray, grid: Grid, h: float, tau: float) -> float:
    """h minus the largest distance from supp(b) to supp(a); -inf if supp(a) is empty but supp(b) is not."""
    sa = support_of(a, tau)
    sb = support_of(b, tau)
    if not sb.any():
        return float(h)
    if not sa.any():
        return float("-inf")
    return float(h - np.max(distance_to(sa, grid)[sb]))


def containment_margin(traj: Trajectory, s: float, t: float, h: float, tau: float) -> float:
    return containment_margin_fields(traj.snapshot(s), traj.snapshot(s + t), traj.grid, h, tau)


def run_length_encode(mask: np.ndarray) -> list[list[int]]:
    """[start, length] runs of True in the row-major flattening of ``mask``."""
    flat = np.concatenate([[False], mask.reshape(-1), [False]]).astype(np.int8)
    edges = np.flatnonzero(np.diff(flat))
    return [[int(a), int(b - a)] for a, b in zip(edges[::2], edges[1::2])]


def run_length_decode(runs: Sequence[Sequence[int]], shape: tuple[int, ...]) -> np.ndarray:
    flat = np.zeros(int(np.prod(shape)), dtype=bool)
    for start, length in runs:
        flat[start : start + length] = True
    return flat.reshape(shape)


@dataclass(eq=False)
class SupportRecord:
    """Per-snapshot supports of a trajectory at a fixed threshold."""

    traj: Trajectory
    tau: float
    masks: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.tau < 0:
            raise InvalidArgument("threshold must be non-negative")
        self.masks = np.abs(self.traj.values) > self.tau

    @classmethod
    def of(cls, traj: Trajectory, tau: float | None = None) -> "SupportRecord":
        if tau is None:
            tau = float(traj.meta.get("params", {}).get("support_threshold") or 0.0)
        return cls(traj, tau)

    @property
    def grid(self) -> Grid:
        return self.traj.grid

    @property
    def conclusive(self) -> bool:
        """Zero thresholds keep regularisation tails, so set verdicts are not meaningful."""
        return self.tau > 0

    def at(self, t: float) -> np.ndarray:
        return self.masks[self.traj.index(t)]

    def is_empty(self, t: float) -> bool:
        return not self.at(t).any()

    def vanish_radius(self, xi0, t: float) -> float:
        return vanish_radius_field(self.traj.snapshot(t), self.grid, xi0, self.tau)

    def containment_margin(self, s: float, t: float, h: float) -> float:
        return containment_margin(self.traj, s, t, h, self.tau)

    def touches_boundary(self, k: int, margin: float = 0.0) -> bool:
        """True when snapshot k's support reaches within ``margin`` of the Dirichlet nodes."""
        mask = self.masks[k] & self.grid.interior
        if not mask.any():
            return False
        return bool(np.min(distance_to(self.grid.dirichlet, self.grid)[mask]) <= margin + self.grid.h * (1 + 1e-9))

    def fronts(self) -> list[dict[str, Any]]:
        """Extreme support coordinates per axis and snapshot (None when empty)."""
        axes = self.grid.axes
        rows = []
        for t, mask in zip(self.traj.times, self.masks):
            row: dict[str, Any] = {"t": float(t)}
            for ax, coords in enumerate(axes):
                other = tuple(i for i in range(self.grid.d) if i != ax)
                hit = mask.any(axis=other) if other else mask
                idx = np.flatnonzero(hit)
                name = "xy"[ax]
                row[f"{name}_min"] = float(coords[idx[0]]) if idx.size else None
                row[f"{name}_max"] = float(coords[idx[-1]]) if idx.size else None
            rows.append(row)
        return rows

    def export_fronts_csv(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        rows = self.fronts()
        cols = ["t"] + [f"{n}_{e}" for n in "xy"[: self.grid.d] for e in ("min", "max")]
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for r in rows:
                w.writerow(["" if r[c] is None else repr(r[c]) for c in cols])
        return path

    def rle(self, indices: Sequence[int] | None = None) -> list[dict[str, Any]]:
        idx = range(len(self.traj)) if indices is None else indices
        return [{"t": float(self.traj.times[k]), "runs": run_length_encode(self.masks[k])} for k in idx]
