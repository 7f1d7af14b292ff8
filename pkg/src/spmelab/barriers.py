"""Explicit barrier supersolutions W and their numerical certification.

space-frozen:  W = C |xi - xi1|^(2/(m-1)) (F(T) - F(t))^(-1/(m-1))
time-frozen:   W = C exp(mu_0(xi)) |xi - xi1|^(2/(m-1)) (T - t)^(-1/(m-1))

Both are supersolutions of  dW/dt >= exp(mu_t) Lap( (exp(-mu_t) W)^m )  for the
constants produced by ``space_frozen_constant`` / ``time_frozen_constant``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .bounds import effective_c_det
from .errors import InvalidArgument, OutOfHorizon
from .grid import Trajectory
from .noise_field import NoiseField
from .transforms import TimeChange

CERTIFY_FRACTION = 0.95
REFINE = 4


def space_frozen_constant(m: float, d: int, c_r: float = 1.0) -> float:
    """C with C^(m-1) = C_det * C_R."""
    return (effective_c_det(m, d) * c_r) ** (1.0 / (m - 1.0))


def time_frozen_constant(m: float, d: int, c_t: float, dev_c0: float) -> float:
    """C with C^(m-1) = (C_det / C_T) exp((m-1) |mu - mu_0|_C0)."""
    return (effective_c_det(m, d) / c_t * math.exp((m - 1.0) * dev_c0)) ** (1.0 / (m - 1.0))


def _dist(xi, xi1) -> np.ndarray:
    p = np.asarray(xi, dtype=float)
    c = np.atleast_1d(np.asarray(xi1, dtype=float))
    if len(c) == 1 and (p.ndim == 0 or p.shape[-1] != 1):
        return np.abs(p - c[0])
    return np.linalg.norm(p - c, axis=-1)


def _gap(t: float, horizon: float, tc: TimeChange | None) -> tuple[float, float]:
    """(clock gap, clock rate at t)."""
    if t >= horizon:
        raise OutOfHorizon(f"barrier evaluated at t={t} >= horizon {horizon}")
    if tc is None:
        return horizon - t, 1.0
    f_t, f_T = tc.forward(t), tc.forward(horizon)
    k = int(np.clip(np.searchsorted(tc.times, t, side="right"), 1, len(tc.times) - 1))
    rate = (tc.values[k] - tc.values[k - 1]) / (tc.times[k] - tc.times[k - 1])
    return f_T - f_t, rate


def eval_barrier_space(t: float, xi, xi1, horizon: float, c: float, tc: TimeChange | None, m: float):
    gap, _ = _gap(t, horizon, tc)
    out = c * _dist(xi, xi1) ** (2.0 / (m - 1.0)) * gap ** (-1.0 / (m - 1.0))
    return float(out) if np.ndim(out) == 0 else out


def eval_barrier_time(t: float, xi, xi1, horizon: float, c: float, field: NoiseField | None, m: float, t_ref: float = 0.0):
    gap, _ = _gap(t, horizon, None)
    r = _dist(xi, xi1)
    factor = 1.0
    if field is not None:
        factor = np.exp(field.mu_eval(t_ref, xi))
    out = c * factor * r ** (2.0 / (m - 1.0)) * gap ** (-1.0 / (m - 1.0))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(eq=False)
class Barrier:
    kind: str
    center: tuple[float, ...]
    horizon: float
    constant: float
    m: float
    tc: TimeChange | None = None
    field: NoiseField | None = None
    t_ref: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("space-frozen", "time-frozen", "general"):
            raise InvalidArgument(f"unknown barrier kind {self.kind!r}")
        if not self.horizon > 0 or not self.constant >= 0 or not self.m > 1:
            raise InvalidArgument("barrier needs positive horizon, non-negative constant and m > 1")
        self.center = tuple(float(c) for c in np.atleast_1d(self.center))

    def scaled(self, factor: float) -> "Barrier":
        return Barrier(self.kind, self.center, self.horizon, self.constant * factor, self.m, self.tc, self.field, self.t_ref)

    def with_horizon(self, horizon: float) -> "Barrier":
        return Barrier(self.kind, self.center, horizon, self.constant, self.m, self.tc, self.field, self.t_ref)

    def _prefactor(self, pts: np.ndarray) -> np.ndarray:
        if self.kind == "time-frozen" and self.field is not None:
            return np.exp(self.field.mu_eval(self.t_ref, pts))
        return np.ones(pts.shape[:-1])

    def value(self, t: float, pts: np.ndarray) -> np.ndarray:
        """W(t, pts) for pts of shape (..., d)."""
        gap, _ = _gap(t, self.horizon, self.tc if self.kind == "space-frozen" else None)
        r = np.linalg.norm(pts - np.asarray(self.center), axis=-1)
        return self.constant * self._prefactor(pts) * r ** (2.0 / (self.m - 1.0)) * gap ** (-1.0 / (self.m - 1.0))

    def dt_value(self, t: float, pts: np.ndarray) -> np.ndarray:
        """Analytic dW/dt = W * clock_rate / ((m-1) gap)."""
        gap, rate = _gap(t, self.horizon, self.tc if self.kind == "space-frozen" else None)
        return self.value(t, pts) * rate / ((self.m - 1.0) * gap)

    def describe(self) -> dict[str, Any]:
        return {"kind": self.kind, "center": list(self.center), "horizon": self.horizon, "constant": self.constant, "m": self.m}


@dataclass
class SupersolutionReport:
    min_residual: float
    tolerance: float
    failing: list[dict[str, float]] = field(default_factory=list)
    n_checked: int = 0

    @property
    def passed(self) -> bool:
        return not self.failing

    def as_dict(self) -> dict[str, Any]:
        return {
            "min_residual": self.min_residual,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "n_checked": self.n_checked,
            "failing": self.failing[:20],
            "n_failing": len(self.failing),
        }


def _ball_lattice(center: np.ndarray, radius: float, spacing: float) -> np.ndarray:
    n = int(math.floor(radius / spacing + 1e-9))
    offs = spacing * np.arange(-n, n + 1)
    mesh = np.stack(np.meshgrid(*([offs] * len(center)), indexing="ij"), axis=-1).reshape(-1, len(center))
    keep = np.linalg.norm(mesh, axis=1) <= radius * (1 + 1e-12)
    return center + mesh[keep]


def certify_supersolution(
    barrier: Barrier,
    field: NoiseField | None,
    h: float,
    radius: float,
    times: Sequence[float],
    tol_factor: float = 10.0,
    refine: int = REFINE,
    tolerance: str = "absolute",
) -> SupersolutionReport:
    """Check dW/dt - exp(mu) Lap_h (exp(-mu) W)^m >= -tol on B_radius(center) x [0, 0.95 T].

    The Laplacian is the standard 3/5-point stencil at spacing h/refine.
    ``tolerance="absolute"`` uses tol = tol_factor h^2.  ``"barrier"`` measures
    the residual in the barrier's natural units, tol = tol_factor (h/radius)^2
    W(0, radius)/T, which makes the check invariant under the parabolic scaling
    of (radius, T, W).
    """
    if h <= 0 or radius <= 0:
        raise InvalidArgument("spacing and radius must be positive")
    c = np.asarray(barrier.center)
    d = len(c)
    k = h / refine
    pts = _ball_lattice(c, radius, k)
    if tolerance == "absolute":
        tol = tol_factor * h * h
    elif tolerance == "barrier":
        rim = c + radius * np.eye(d)[0]
        w_rim = float(barrier.value(0.0, rim[None, :])[0])
        tol = tol_factor * (h / radius) ** 2 * w_rim / barrier.horizon
    else:
        raise InvalidArgument(f"unknown tolerance mode {tolerance!r}")
    cutoff = CERTIFY_FRACTION * barrier.horizon
    shifts = [np.eye(d)[i] * k for i in range(d)]
    m = barrier.m
    failing: list[dict[str, float]] = []
    worst = math.inf
    n = 0

    def mu_at(t: float, p: np.ndarray) -> np.ndarray:
        if field is None or field.is_zero:
            return np.zeros(p.shape[:-1])
        return np.asarray(field.mu_eval(t, p), dtype=float).reshape(p.shape[:-1])

    def power(t: float, p: np.ndarray) -> np.ndarray:
        return (np.exp(-mu_at(t, p)) * barrier.value(t, p)) ** m

    for t in times:
        if t > cutoff + 1e-15 or t < 0:
            continue
        centre_val = power(t, pts)
        lap = -2.0 * d * centre_val
        for s in shifts:
            lap = lap + power(t, pts + s) + power(t, pts - s)
        lap /= k * k
        rhs = np.exp(mu_at(t, pts)) * lap
        res = barrier.dt_value(t, pts) - rhs
        n += res.size
        worst = min(worst, float(res.min()))
        bad = np.flatnonzero(res < -tol)
        for b in bad[:50]:
            failing.append({"t": float(t), "xi": pts[b].tolist(), "residual": float(res[b])})
    return SupersolutionReport(worst if n else 0.0, tol, failing, n)


@dataclass
class DominationReport:
    applicable: bool
    dominated: bool
    max_excess: float
    eps: float
    boundary_excess: float
    first_violation: dict[str, Any] | None = None

    def as_dict(self) -> dict[str, Any]:
        return {
            "applicable": self.applicable,
            "dominated": self.dominated,
            "max_excess": self.max_excess,
            "eps_scheme": self.eps,
            "boundary_excess": self.boundary_excess,
            "first_violation": self.first_violation,
        }


def scheme_tolerance(traj: Trajectory) -> float:
    """eps_scheme = 10 * newton_tol, scaled by the run's data scale."""
    params = traj.meta.get("params", {})
    tol = float(params.get("newton_tol", 1e-10))
    scale = float(traj.meta.get("data_scale", 1.0)) or 1.0
    return 10.0 * tol * scale


def certify_domination(
    traj: Trajectory,
    barrier: Barrier,
    radius: float,
    window: tuple[float, float] | None = None,
    eps: float | None = None,
) -> DominationReport:
    """Check Y <= W + eps on B_radius(center) for snapshots in the window (and before 0.95 T).

    First checks the precondition that boundary values (nodes in the outermost
    cell layer of the ball) are dominated; if not, the report is marked
    inapplicable rather than failed.
    """
    grid = traj.grid
    eps = scheme_tolerance(traj) if eps is None else eps
    dist = grid.distance_from(barrier.center)
    inside = dist <= radius * (1 + 1e-12)
    rim = inside & (dist > radius - grid.h * (1 + 1e-9))
    lo, hi = (traj.t0, traj.t_end) if window is None else window
    cutoff = min(hi, CERTIFY_FRACTION * barrier.horizon)
    pts = grid.points
    worst = -math.inf
    worst_rim = -math.inf
    first: dict[str, Any] | None = None
    rim_first: dict[str, Any] | None = None
    for t, y in zip(traj.times, traj.values):
        if t < lo - 1e-15 or t > cutoff + 1e-15:
            continue
        w = barrier.value(float(t), pts)
        excess = y - w
        if rim.any():
            e_rim = float(excess[rim].max())
            if e_rim > worst_rim:
                worst_rim = e_rim
            if e_rim > eps and rim_first is None:
                rim_first = {"t": float(t), "excess": e_rim}
        e_in = float(excess[inside].max())
        if e_in > worst:
            worst = e_in
        if e_in > eps and first is None:
            idx = np.unravel_index(np.argmax(np.where(inside, excess, -np.inf)), grid.shape)
            first = {"t": float(t), "xi": pts[idx].tolist(), "excess": e_in}
    applicable = worst_rim <= eps
    if not applicable:
        return DominationReport(False, False, worst, eps, worst_rim, rim_first)
    return DominationReport(True, worst <= eps, worst, eps, worst_rim, first)
