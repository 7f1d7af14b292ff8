"""Changes of variables between the noisy equation and deterministic-coefficient ones.

* ``Y = exp(mu_t - lam t) X`` (spatial transform);
* the homogeneous clock F(t) = int_0^t exp(-(m-1) nu_r) dr with nu = mu(xi0) - lam r,
  under which Y_t = u_{F(t)} for a deterministic PME solution u;
* the attractor rescaling F(t) = exp(delta t)/delta mapping (-inf, 0] onto (0, 1/delta].
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .errors import InvalidArgument, OutOfRange
from .grid import Trajectory
from .noise_field import NoiseField


@dataclass(frozen=True, eq=False)
class TimeChange:
    """Strictly increasing piecewise-linear clock sampled on ``times``."""

    times: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    kind: str
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=float)
        f = np.asarray(self.values, dtype=float)
        if t.shape != f.shape or t.ndim != 1 or len(t) < 2:
            raise InvalidArgument("time change needs matching 1-D sample arrays of length >= 2")
        if np.any(np.diff(t) <= 0) or np.any(np.diff(f) <= 0):
            raise InvalidArgument("time change must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", f)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def max_value(self) -> float:
        return float(self.values[-1])

    def forward(self, t):
        t = np.asarray(t, dtype=float)
        tol = 1e-12 * max(1.0, abs(self.horizon))
        if np.any(t < self.times[0] - tol) or np.any(t > self.times[-1] + tol):
            raise OutOfRange(f"time outside [{self.times[0]}, {self.times[-1]}]")
        out = np.interp(t, self.times, self.values)
        return float(out) if out.ndim == 0 else out

    def __call__(self, t):
        return self.forward(t)

    def inverse(self, s):
        return invert_time_change(self, s)

    def describe(self) -> dict[str, Any]:
        return {"kind": self.kind, "horizon": self.horizon, "F_end": self.max_value, **self.params}


def _trapezoid_clock(times: np.ndarray, rate: np.ndarray) -> np.ndarray:
    return np.concatenate([[0.0], np.cumsum(0.5 * (rate[1:] + rate[:-1]) * np.diff(times))])


def time_change_homogeneous(
    field: NoiseField,
    xi0: Sequence[float] | float,
    m: float,
    times: np.ndarray | None = None,
    lam: float = 0.0,
) -> TimeChange:
    """F(t) = int_0^t exp(-(m-1)(mu_r(xi0) - lam r)) dr by composite trapezoid on ``times``.

    ``times`` defaults to the signal sample grid and must start at 0.
    """
    if not m > 1:
        raise InvalidArgument(f"m must exceed 1, got {m}")
    ts = field.signal.times if times is None else np.asarray(times, dtype=float)
    if field.signal.sign < 0:
        raise InvalidArgument("the homogeneous clock runs forward from 0; use a forward signal")
    if abs(ts[0]) > 0:
        raise InvalidArgument("time grid must start at 0")
    nu = field.frozen_at(xi0)(ts) - lam * ts
    rate = np.exp(-(m - 1.0) * nu)
    vals = _trapezoid_clock(ts, rate)
    p = np.atleast_1d(np.asarray(xi0, dtype=float))
    return TimeChange(ts, vals, "homogeneous-at-point", {"xi0": p.tolist(), "m": m, "lam": lam})


def time_change_from_rate(times: np.ndarray, rate: np.ndarray, kind: str = "custom", **params: Any) -> TimeChange:
    """Trapezoid clock for an arbitrary positive rate sampled on ``times`` (starting at 0)."""
    ts = np.asarray(times, dtype=float)
    r = np.asarray(rate, dtype=float)
    if np.any(r <= 0):
        raise InvalidArgument("clock rate must be positive")
    return TimeChange(ts, _trapezoid_clock(ts, r), kind, params)


def identity_time_change(horizon: float, n: int = 2) -> TimeChange:
    ts = np.linspace(0.0, horizon, max(n, 2))
    return TimeChange(ts, ts.copy(), "identity", {})


def invert_time_change(tc: TimeChange, s):
    """G(s): exact inverse of the piecewise-linear clock (binary search + linear interpolation)."""
    s_arr = np.asarray(s, dtype=float)
    tol = 1e-12 * max(1.0, abs(tc.max_value))
    if np.any(s_arr < tc.values[0] - tol) or np.any(s_arr > tc.values[-1] + tol):
        raise OutOfRange(f"value outside the range [{tc.values[0]}, {tc.values[-1]}] of the time change")
    flat = np.clip(s_arr.reshape(-1), tc.values[0], tc.values[-1])
    k = np.clip(np.searchsorted(tc.values, flat, side="right"), 1, len(tc.values) - 1)
    f_a, f_b = tc.values[k - 1], tc.values[k]
    t_a, t_b = tc.times[k - 1], tc.times[k]
    out = t_a + (flat - f_a) * (t_b - t_a) / (f_b - f_a)
    out = out.reshape(s_arr.shape)
    return float(out) if out.ndim == 0 else out


def homogeneous_solution_map(
    u: Trajectory,
    field: NoiseField,
    m: float,
    times: np.ndarray | None = None,
    lam: float = 0.0,
) -> Trajectory:
    """X_t = exp(-(mu_t - lam t)) u_{u.t0 + F(t)} for spatially constant noise.

    ``times`` defaults to the signal samples whose clock value stays inside u's window.
    """
    if not field.is_spatially_constant:
        raise InvalidArgument("homogeneous_solution_map requires spatially constant coefficients")
    if field.d != u.grid.d:
        raise InvalidArgument("field and trajectory dimensions differ")
    xi0 = np.zeros(field.d) if field.domain is None else np.asarray(field.domain.lo)
    tc = time_change_homogeneous(field, xi0, m, lam=lam)
    span = u.t_end - u.t0
    if times is None:
        ts = tc.times[tc.values <= span * (1 + 1e-12)]
    else:
        ts = np.asarray(times, dtype=float)
    clock = np.atleast_1d(tc.forward(ts))
    if np.any(clock > span * (1 + 1e-12) + 1e-15):
        raise OutOfRange("deterministic trajectory too short for the requested times")
    nu = np.atleast_1d(field.frozen_at(xi0)(ts)) - lam * ts
    vals = np.array([np.exp(-nu[k]) * u.at(min(u.t0 + clock[k], u.t_end)) for k in range(len(ts))])
    return Trajectory(u.grid, ts, vals, dict(u.boundary), {"map": "homogeneous", "m": m, "lam": lam})


def spatial_transform(x: Trajectory, field: NoiseField, direction: str = "forward", lam: float = 0.0) -> Trajectory:
    """Multiply every snapshot by exp(+-(mu_t(xi) - lam t)): forward gives Y from X, inverse X from Y."""
    if direction not in ("forward", "inverse"):
        raise InvalidArgument("direction must be 'forward' or 'inverse'")
    if field.d != x.grid.d:
        raise InvalidArgument("field and trajectory grids differ in dimension")
    lo, hi = field.signal.window
    tol = 1e-12 * max(1.0, field.signal.horizon)
    if x.times[0] < lo - tol or x.times[-1] > hi + tol:
        raise InvalidArgument("trajectory times leave the signal window")
    mu = field.on_grid(x.grid)
    sgn = 1.0 if direction == "forward" else -1.0
    vals = np.array([v * np.exp(sgn * (mu(t) - lam * t)) for t, v in zip(x.times, x.values)])
    return x.with_values(vals, transform=direction, lam=lam)


@dataclass(frozen=True)
class AttractorRescaling:
    delta: float
    lam: float
    m: float

    def __post_init__(self) -> None:
        if not (self.delta > 0 and self.lam > 0 and self.m > 1):
            raise InvalidArgument("need delta > 0, lambda > 0, m > 1")
        if not (self.m - 1.0) * self.lam - self.delta > 0:
            raise InvalidArgument(f"(m-1)*lambda = {(self.m - 1) * self.lam} must exceed delta = {self.delta}")

    @property
    def T(self) -> float:
        return 1.0 / self.delta

    @property
    def eta(self) -> float:
        return ((self.m - 1.0) * self.lam - self.delta) / (self.m + 1.0)

    def F(self, t):
        """(-inf, 0] -> (0, T]."""
        t = np.asarray(t, dtype=float)
        if np.any(t > 1e-15):
            raise OutOfRange("rescaling clock is defined on (-inf, 0]")
        out = np.exp(self.delta * t) / self.delta
        return float(out) if out.ndim == 0 else out

    def G(self, s):
        """(0, T] -> (-inf, 0]."""
        s = np.asarray(s, dtype=float)
        if np.any(s <= 0) or np.any(s > self.T * (1 + 1e-12)):
            raise OutOfRange(f"rescaled time must lie in (0, {self.T}]")
        out = np.minimum(np.log(self.delta * s) / self.delta, 0.0)
        return float(out) if out.ndim == 0 else out

    def coefficients(self, field: NoiseField, grid) -> tuple[Callable[[float], np.ndarray], Callable[[float], np.ndarray]]:
        """rho1(t) = exp(mu_{G(t)} + eta G(t)), rho2(t) = exp(-mu_{G(t)} + eta G(t)) on the grid."""
        mu = field.on_grid(grid)
        eta = self.eta

        def rho1(t: float) -> np.ndarray:
            g = self.G(t)
            return np.exp(mu(g) + eta * g)

        def rho2(t: float) -> np.ndarray:
            g = self.G(t)
            return np.exp(-mu(g) + eta * g)

        return rho1, rho2

    def describe(self) -> dict[str, float]:
        return {"delta": self.delta, "lambda": self.lam, "m": self.m, "T": self.T, "eta": self.eta}


def attractor_rescaling(delta: float, lam: float, m: float) -> AttractorRescaling:
    return AttractorRescaling(delta, lam, m)
