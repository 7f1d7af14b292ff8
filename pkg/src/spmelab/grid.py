"""Uniform node grids and solution trajectories.

Nodes sit at ``lo + i*h``; nodes flagged in ``dirichlet`` carry boundary data
and are never updated by the solver.  Everything downstream (supports, radii,
norms) uses node-centre Euclidean distances.
"""
from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import InvalidArgument

MIN_INTERIOR_CELLS = 8


@dataclass(frozen=True, eq=False)
class Grid:
    lo: tuple[float, ...]
    hi: tuple[float, ...]
    h: float
    shape: tuple[int, ...]
    dirichlet: np.ndarray = field(repr=False)
    ball: tuple[tuple[float, ...], float] | None = None

    @classmethod
    def box(cls, lo: Sequence[float] | float, hi: Sequence[float] | float, h: float) -> "Grid":
        lo_t = tuple(float(v) for v in np.atleast_1d(lo))
        hi_t = tuple(float(v) for v in np.atleast_1d(hi))
        if len(lo_t) != len(hi_t) or len(lo_t) not in (1, 2):
            raise InvalidArgument("grid dimension must be 1 or 2")
        if h <= 0:
            raise InvalidArgument(f"cell size must be positive, got {h}")
        shape = []
        for a, b in zip(lo_t, hi_t):
            n = (b - a) / h
            n_int = int(round(n))
            if abs(n - n_int) > 1e-8 * max(1.0, n):
                raise InvalidArgument(f"extent {b - a} is not a multiple of h={h}")
            if n_int - 1 < MIN_INTERIOR_CELLS:
                raise InvalidArgument(f"need at least {MIN_INTERIOR_CELLS} interior cells per axis, got {n_int - 1}")
            shape.append(n_int + 1)
        mask = np.zeros(shape, dtype=bool)
        for ax in range(len(shape)):
            idx = [slice(None)] * len(shape)
            idx[ax] = 0
            mask[tuple(idx)] = True
            idx[ax] = -1
            mask[tuple(idx)] = True
        return cls(lo_t, hi_t, float(h), tuple(shape), mask)

    @classmethod
    def on_ball(cls, center: Sequence[float] | float, radius: float, h: float) -> "Grid":
        """Grid whose active region is the open ball B_radius(center).

        Nodes at distance >= radius are Dirichlet nodes.
        """
        c = np.atleast_1d(np.asarray(center, dtype=float))
        g = cls.box(c - radius, c + radius, h)
        dist = np.linalg.norm(g.points - c, axis=-1)
        mask = g.dirichlet | (dist >= radius * (1.0 - 1e-12))
        return cls(g.lo, g.hi, g.h, g.shape, mask, (tuple(c.tolist()), float(radius)))

    @property
    def d(self) -> int:
        return len(self.shape)

    @property
    def axes(self) -> list[np.ndarray]:
        return [a + self.h * np.arange(n) for a, n in zip(self.lo, self.shape)]

    @property
    def points(self) -> np.ndarray:
        """Node coordinates, shape ``grid.shape + (d,)``."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    @property
    def interior(self) -> np.ndarray:
        return ~self.dirichlet

    @property
    def cell_volume(self) -> float:
        return self.h ** self.d

    @property
    def diameter(self) -> float:
        if self.ball is not None:
            return 2.0 * self.ball[1]
        return float(np.linalg.norm(np.subtract(self.hi, self.lo)))

    def distance_from(self, xi: Sequence[float] | float) -> np.ndarray:
        p = np.atleast_1d(np.asarray(xi, dtype=float))
        return np.linalg.norm(self.points - p, axis=-1)

    def contains(self, xi: Sequence[float] | float, tol: float = 1e-12) -> bool:
        p = np.atleast_1d(np.asarray(xi, dtype=float))
        if p.shape != (self.d,):
            return False
        if self.ball is not None:
            return bool(np.linalg.norm(p - self.ball[0]) <= self.ball[1] + tol)
        return bool(np.all(p >= np.array(self.lo) - tol) and np.all(p <= np.array(self.hi) + tol))

    def same_as(self, other: "Grid") -> bool:
        return (
            self.shape == other.shape
            and np.allclose(self.lo, other.lo)
            and np.isclose(self.h, other.h)
            and np.array_equal(self.dirichlet, other.dirichlet)
        )

    def describe(self) -> dict[str, Any]:
        out: dict[str, Any] = {"lo": list(self.lo), "hi": list(self.hi), "h": self.h, "shape": list(self.shape)}
        if self.ball is not None:
            out["ball"] = {"center": list(self.ball[0]), "radius": self.ball[1]}
        return out

    @classmethod
    def from_description(cls, desc: dict[str, Any]) -> "Grid":
        if "ball" in desc:
            return cls.on_ball(desc["ball"]["center"], desc["ball"]["radius"], desc["h"])
        return cls.box(desc["lo"], desc["hi"], desc["h"])


@dataclass(eq=False)
class Trajectory:
    """Time-indexed snapshots of a grid field."""

    grid: Grid
    times: np.ndarray
    values: np.ndarray
    boundary: dict[str, Any] = field(default_factory=dict)
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.times),) + self.grid.shape:
            raise InvalidArgument(
                f"snapshot array shape {self.values.shape} does not match {len(self.times)} x {self.grid.shape}"
            )
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise InvalidArgument("snapshot times must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise InvalidArgument("trajectory contains non-finite values")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def index(self, t: float, tol: float | None = None) -> int:
        """Index of the snapshot closest to ``t``; ``t`` must lie in the window."""
        span = self.t_end - self.t0
        slack = 1e-9 * max(span, 1.0) if tol is None else tol
        if t < self.t0 - slack or t > self.t_end + slack:
            raise InvalidArgument(f"time {t} outside trajectory window [{self.t0}, {self.t_end}]")
        return int(np.argmin(np.abs(self.times - t)))

    def snapshot(self, t: float) -> np.ndarray:
        return self.values[self.index(t)]

    def at(self, t: float) -> np.ndarray:
        """Linear interpolation in time between snapshots."""
        if t < self.t0 - 1e-12 or t > self.t_end + 1e-12:
            raise InvalidArgument(f"time {t} outside trajectory window [{self.t0}, {self.t_end}]")
        k = int(np.searchsorted(self.times, t))
        if k == 0:
            return self.values[0].copy()
        if k >= len(self.times):
            return self.values[-1].copy()
        t_a, t_b = self.times[k - 1], self.times[k]
        w = (t - t_a) / (t_b - t_a)
        return (1.0 - w) * self.values[k - 1] + w * self.values[k]

    def sup_norms(self) -> np.ndarray:
        return np.abs(self.values).reshape(len(self.times), -1).max(axis=1)

    def l1_norms(self) -> np.ndarray:
        return np.abs(self.values).reshape(len(self.times), -1).sum(axis=1) * self.grid.cell_volume

    def with_values(self, values: np.ndarray, **meta: Any) -> "Trajectory":
        return Trajectory(self.grid, self.times.copy(), values, dict(self.boundary), {**self.meta, **meta})

    # -- serialization -------------------------------------------------

    def save(self, stem: str | Path) -> tuple[Path, Path]:
        """Write ``<stem>.npy`` (snapshots, float64) and ``<stem>.json`` sidecar."""
        stem = Path(stem)
        stem.parent.mkdir(parents=True, exist_ok=True)
        npy = stem.with_suffix(".npy")
        side = stem.with_suffix(".json")
        np.save(npy, self.values, allow_pickle=False)
        sidecar = {
            "schema": "spmelab.trajectory/1",
            "grid": self.grid.describe(),
            "times": self.times.tolist(),
            "boundary": self.boundary,
            "meta": self.meta,
            "sha256": hashlib.sha256(self.values.tobytes()).hexdigest(),
        }
        side.write_text(json.dumps(sidecar, indent=2, sort_keys=True, default=_json_default))
        return npy, side

    @classmethod
    def load(cls, stem: str | Path) -> "Trajectory":
        stem = Path(stem)
        sidecar = json.loads(stem.with_suffix(".json").read_text())
        values = np.load(stem.with_suffix(".npy"), allow_pickle=False)
        grid = Grid.from_description(sidecar["grid"])
        return cls(grid, np.array(sidecar["times"]), values, sidecar.get("boundary", {}), sidecar.get("meta", {}))

    def export_csv(self, path: str | Path, indices: Sequence[int] | None = None) -> Path:
        """CSV with one row per node: coordinates then one column per selected snapshot."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        idx = list(range(len(self.times))) if indices is None else list(indices)
        pts = self.grid.points.reshape(-1, self.grid.d)
        cols = [self.values[i].reshape(-1) for i in idx]
        names = ["x", "y"][: self.grid.d]
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(names + [f"t={self.times[i]:.12g}" for i in idx])
            for row in range(pts.shape[0]):
                w.writerow([repr(float(v)) for v in pts[row]] + [repr(float(c[row])) for c in cols])
        return path


def _json_default(obj: Any) -> Any:
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)!r}")
