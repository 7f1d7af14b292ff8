"""Explicit hole-filling horizons, vanishing-radius schedules and propagation radii.

Every record carries a ``kind`` tag (deterministic | homogeneous | small-ball |
small-time | general | propagation) naming the formula family it came from.

Modulation constants use the explicit intermediate bracket

    B(R) = 1 + 2m(m-1)/(d(m-1)+2) * |grad| * R + m(m-1) C_det R^2 (m |grad|^2 + |lap|)

with sup-norms of the relevant field, rather than an unspecified generic
constant.  The general-coefficient bounds, where only a generic constant
exists, use ``generic_constant(d, m)``.
"""
from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Sequence

import numpy as np

from .errors import DegenerateCoefficient, DomainMarginError, InvalidArgument
from .grid import Grid
from .noise_field import Ball, Box, MuNorms, NoiseField, NormSeries
from .support import dilate, distance_to
from .transforms import TimeChange, invert_time_change, time_change_from_rate, time_change_homogeneous

FORMULA_VERSION = "spmelab.bounds/1"
BISECT_RTOL = 1e-8
BISECT_MAXIT = 60


def c_det(m: float | Fraction, d: int):
    """(m-1) / (2dm(m-1) + 4m); exact when m is an int or Fraction."""
    if not m > 1:
        raise InvalidArgument(f"m must exceed 1, got {m}")
    if d < 1:
        raise InvalidArgument("dimension must be >= 1")
    if isinstance(m, (int, Fraction)):
        mf = Fraction(m)
        return (mf - 1) / (2 * d * mf * (mf - 1) + 4 * mf)
    return (m - 1.0) / (2.0 * d * m * (m - 1.0) + 4.0 * m)


_C_DET_SCALE = 1.0


def effective_c_det(m: float, d: int) -> float:
    """Float C_det used by every bound (scaled only inside ``perturbed_c_det``)."""
    return float(c_det(float(m), d)) * _C_DET_SCALE


@contextlib.contextmanager
def perturbed_c_det(factor: float):
    """Test hook: multiply the C_det used by bound formulas by ``factor`` (sensitivity canary).

    Not thread-safe; ``c_det`` itself is unaffected.
    """
    global _C_DET_SCALE
    if not factor > 0:
        raise InvalidArgument("perturbation factor must be positive")
    old = _C_DET_SCALE
    _C_DET_SCALE = float(factor)
    try:
        yield
    finally:
        _C_DET_SCALE = old


def generic_constant(d: int, m: float) -> float:
    """C(d,m) := m(m-1) max(1, 1/C_det) (1 + 2m/(d(m-1)+2)) for the general-coefficient bounds."""
    cd = effective_c_det(m, d)
    return m * (m - 1.0) * max(1.0, 1.0 / cd) * (1.0 + 2.0 * m / (d * (m - 1.0) + 2.0))


def bracket(grad: float, lap: float, r: float, m: float, d: int) -> float:
    cd = effective_c_det(m, d)
    return 1.0 + 2.0 * m * (m - 1.0) / (d * (m - 1.0) + 2.0) * grad * r + m * (m - 1.0) * cd * r * r * (
        m * grad * grad + lap
    )


@dataclass(eq=False)
class HoleFillingBound:
    kind: str
    R: float
    H: float
    m: float
    d: int
    c_det: float
    modulation: float
    horizon: float
    clamped: bool
    radius_fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    inputs: dict[str, Any] = field(default_factory=dict)
    window_end: float | None = None

    def radius(self, t):
        """R*(t); may turn negative past the horizon."""
        t = np.asarray(t, dtype=float)
        out = self.radius_fn(t)
        return float(out) if np.ndim(out) == 0 else out

    @property
    def valid_until(self) -> float:
        """End of the time range on which the vanishing claim is made."""
        return self.horizon if self.window_end is None else min(self.horizon, self.window_end)

    def schedule(self, n: int = 101, times: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
        ts = np.linspace(0.0, self.valid_until, n) if times is None else np.asarray(times, dtype=float)
        return ts, np.atleast_1d(self.radius(ts))

    def as_dict(self, n: int = 21) -> dict[str, Any]:
        ts, rs = self.schedule(n)
        return {
            "kind": self.kind,
            "formula_version": FORMULA_VERSION,
            "R": self.R,
            "H": self.H,
            "m": self.m,
            "d": self.d,
            "C_det": self.c_det,
            "modulation": self.modulation,
            "T_star": self.horizon,
            "clamped": self.clamped,
            "window_end": self.window_end,
            "schedule": {"t": ts.tolist(), "R": rs.tolist()},
            "inputs": self.inputs,
        }


def _check_positive(**kw: float) -> None:
    for k, v in kw.items():
        if not v > 0:
            raise InvalidArgument(f"{k} must be positive, got {v}")


def det_hole_bound(R: float, H: float, m: float, d: int) -> HoleFillingBound:
    """T_det = R^2 C_det / H^(m-1);  R_det(t) = R - sqrt(t) (H^(m-1)/C_det)^(1/2)."""
    _check_positive(R=R, H=H)
    cd = effective_c_det(m, d)
    rate = math.sqrt(H ** (m - 1.0) / cd)
    T = R * R * cd / H ** (m - 1.0)
    return HoleFillingBound(
        "deterministic", R, H, m, d, cd, 1.0, T, False, lambda t: R - np.sqrt(np.maximum(t, 0.0)) * rate
    )


def _clock_bound(kind, R, H, m, d, tc: TimeChange, modulation: float, inputs) -> HoleFillingBound:
    cd = effective_c_det(m, d)
    target = R * R * cd * modulation / H ** (m - 1.0)
    clamped = target > tc.max_value
    T = tc.horizon if clamped else invert_time_change(tc, target)
    rate = math.sqrt(H ** (m - 1.0) / cd) / math.sqrt(modulation)

    def radius(t):
        clock = np.asarray(tc.forward(np.clip(t, tc.times[0], tc.horizon)))
        return R - np.sqrt(clock) * rate

    return HoleFillingBound(kind, R, H, m, d, cd, modulation, float(T), bool(clamped), radius, inputs, tc.horizon)


def homog_hole_bound(R: float, H: float, m: float, tc: TimeChange, d: int = 1) -> HoleFillingBound:
    """T = G(R^2 C_det/H^(m-1)), R(t) = R - sqrt(F(t)) (H^(m-1)/C_det)^(1/2); clamps to the clock window."""
    _check_positive(R=R, H=H)
    return _clock_bound("homogeneous", R, H, m, d, tc, 1.0, {"time_change": tc.describe()})


def small_ball_constant(
    R: float,
    xi0: Sequence[float] | float,
    field: NoiseField,
    window: tuple[float, float],
    m: float,
    d: int,
    h: float | None = None,
    refine: int = 4,
) -> tuple[float, MuNorms]:
    """C_R = exp(-(m-1) dev) / B(R) with norms over window x B_R(xi0)."""
    _check_positive(R=R)
    ball = Ball(tuple(np.atleast_1d(np.asarray(xi0, dtype=float))), R)
    if field.domain is not None and not field.domain.contains_ball(ball):
        raise InvalidArgument("B_R(xi0) leaves the domain")
    norms = field.mu_norms(window, ball, h if h is not None else R / 16.0, refine, xi0=ball.center)
    value = math.exp(-(m - 1.0) * norms.dev_point) / bracket(norms.grad, norms.lap, R, m, d)
    return value, norms


def small_ball_bound(
    R: float,
    xi0: Sequence[float] | float,
    field: NoiseField,
    H: float,
    m: float,
    d: int,
    window: tuple[float, float] | None = None,
    h: float | None = None,
    refine: int = 4,
    tc: TimeChange | None = None,
) -> HoleFillingBound:
    """T = F^{-1}(R^2 C_det C_R / H^(m-1)) with the clock frozen at xi0; H = sup |e^mu g|."""
    _check_positive(R=R, H=H)
    window = field.signal.window if window is None else window
    c_r, norms = small_ball_constant(R, xi0, field, window, m, d, h, refine)
    if tc is None:
        ts = field.window_times((0.0, window[1]))
        tc = time_change_homogeneous(field, xi0, m, times=ts)
    inputs = {"C_R": c_r, "norms": norms.as_dict(), "window": list(window), "xi0": list(np.atleast_1d(xi0))}
    return _clock_bound("small-ball", R, H, m, d, tc, c_r, inputs)


def _sup_bisect(product: Callable[[float], float], target: float, t_max: float) -> tuple[float, bool]:
    """sup{ t in [0, t_max] : product(t) <= target } for increasing product."""
    if product(t_max) <= target:
        return t_max, True
    lo, hi = 0.0, t_max
    for _ in range(BISECT_MAXIT):
        mid = 0.5 * (lo + hi)
        if product(mid) <= target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= BISECT_RTOL * max(hi, 1e-300):
            break
    return lo, False


@dataclass(eq=False)
class ScheduleConstant:
    """A non-decreasing constant t -> C_t together with the norms it was built from."""

    fn: Callable[[float], float]
    description: dict[str, Any]

    def __call__(self, t: float) -> float:
        return self.fn(t)


def small_time_constant(
    R: float,
    xi0: Sequence[float] | float,
    field: NoiseField,
    window: tuple[float, float],
    m: float,
    d: int,
    h: float | None = None,
    refine: int = 4,
    region=None,
) -> ScheduleConstant:
    """C_t = B(R; nu) exp(2(m-1) |nu|_C0) with nu = mu_{t0} - mu over [t0, t] x region."""
    region = Ball(tuple(np.atleast_1d(np.asarray(xi0, dtype=float))), R) if region is None else region
    series: NormSeries = field.norm_series(window, region, h if h is not None else R / 16.0, refine, t0=window[0])
    t0 = float(window[0])

    def fn(t: float) -> float:
        nrm = series.upto(t0 + t)
        return bracket(nrm.dt_grad, nrm.dt_lap, R, m, d) * math.exp(2.0 * (m - 1.0) * nrm.dt_c0)

    return ScheduleConstant(fn, {"window": list(window), "radius_in_bracket": R})


def small_time_bound(
    R: float,
    xi0: Sequence[float] | float,
    field: NoiseField,
    H: float,
    m: float,
    d: int,
    window: tuple[float, float] | None = None,
    h: float | None = None,
    refine: int = 4,
) -> HoleFillingBound:
    """T = sup{T' : T' C_T' <= R^2 C_det / H^(m-1)},  R(t) = R - sqrt(t C_t) (H^(m-1)/C_det)^(1/2); H = sup |g|."""
    _check_positive(R=R, H=H)
    window = field.signal.window if window is None else window
    ball = Ball(tuple(np.atleast_1d(np.asarray(xi0, dtype=float))), R)
    if field.domain is not None and not field.domain.contains_ball(ball):
        raise InvalidArgument("B_R(xi0) leaves the domain")
    cfun = small_time_constant(R, xi0, field, window, m, d, h, refine)
    cd = effective_c_det(m, d)
    target = R * R * cd / H ** (m - 1.0)
    span = float(window[1] - window[0])
    T, clamped = _sup_bisect(lambda t: t * cfun(t), target, span)
    rate = math.sqrt(H ** (m - 1.0) / cd)

    def radius(t):
        t = np.asarray(t, dtype=float)
        cs = np.vectorize(lambda s: cfun(min(max(s, 0.0), span)))(t)
        return R - np.sqrt(np.maximum(t, 0.0) * cs) * rate

    inputs = {"C_at_T": cfun(T), "window": list(window), "xi0": list(np.atleast_1d(xi0))}
    return HoleFillingBound("small-time", R, H, m, d, cd, cfun(T), T, clamped, radius, inputs, span)


# -- propagation ---------------------------------------------------------------


@dataclass
class PropagationBound:
    h: float
    horizon: float
    clamped: bool
    c_bar: float
    H: float
    m: float
    boundary_cells: int
    clock: TimeChange = field(repr=False)

    def as_dict(self) -> dict[str, Any]:
        return {
            "kind": "propagation",
            "formula_version": FORMULA_VERSION,
            "h": self.h,
            "T_h": self.horizon,
            "clamped": self.clamped,
            "C_bar_h": self.c_bar,
            "H": self.H,
            "m": self.m,
            "boundary_cells": self.boundary_cells,
        }


def _domain_region(grid: Grid) -> Box:
    return Box(grid.lo, grid.hi)


def propagation_bound(
    support: np.ndarray,
    grid: Grid,
    h: float,
    field: NoiseField,
    H: float,
    m: float,
    s: float = 0.0,
    window_end: float | None = None,
    refine: int = 2,
) -> PropagationBound:
    """Time span T_h during which supp(X_{s+t}) stays inside B_h(supp(X_s)).

    T_h = F_h^{-1}(h^2 C_det Cbar_h / H^(m-1)) where F_h integrates
    exp(-(m-1) inf mu_r) over the discrete shell at distance ~h from the
    support, and Cbar_h = exp(-h |grad mu|) / B(h)^(1/(m-1)) with norms over
    the whole domain and window (a superset of the complement of the support).
    H is sup |e^mu X| over the run.
    """
    _check_positive(h=h, H=H)
    d = grid.d
    if not support.any():
        raise InvalidArgument("empty support: every h works trivially")
    if (dilate(support, grid, 2.0 * h) & grid.dirichlet).any():
        raise DomainMarginError(f"B_2h(supp) with h={h} reaches the Dirichlet boundary")
    dist = distance_to(support, grid)
    shell = (dist > max(h - grid.h, 0.0) + 1e-12) & (dist <= h * (1 + 1e-12))
    if not shell.any():
        pos = dist[dist > 0]
        shell = dist == pos.min()
    pts = grid.points[shell]
    t_end = field.signal.window[1] if window_end is None else window_end
    ts = field.window_times((s, t_end))
    mu, _, _ = field.sample(ts, pts)
    rate = np.exp(-(m - 1.0) * mu.min(axis=1))
    clock = time_change_from_rate(ts - s, rate, "propagation-shell", h=h)
    norms = field.mu_norms((s, t_end), _domain_region(grid), grid.h, refine)
    cd = effective_c_det(m, d)
    c_bar = math.exp(-h * norms.grad) / bracket(norms.grad, norms.lap, h, m, d) ** (1.0 / (m - 1.0))
    target = h * h * cd * c_bar / H ** (m - 1.0)
    clamped = target > clock.max_value
    T = clock.horizon if clamped else invert_time_change(clock, target)
    return PropagationBound(h, float(T), bool(clamped), c_bar, H, m, int(shell.sum()), clock)


def propagation_radius_constant(
    field: NoiseField, grid: Grid, m: float, s: float = 0.0, window_end: float | None = None, refine: int = 2
) -> ScheduleConstant:
    """Cbar_t = B(D; nu) exp(2(m-1) |nu|_C0), nu = mu_s - mu on [s, s+t] x domain, D the domain diameter."""
    D = grid.diameter
    t_end = field.signal.window[1] if window_end is None else window_end
    series = field.norm_series((s, t_end), _domain_region(grid), grid.h, refine, t0=s)

    def fn(t: float) -> float:
        nrm = series.upto(s + t)
        return bracket(nrm.dt_grad, nrm.dt_lap, D, m, grid.d) * math.exp(2.0 * (m - 1.0) * nrm.dt_c0)

    return ScheduleConstant(fn, {"D": D, "s": s, "window_end": t_end})


def propagation_radius(t: float, H: float, m: float, d: int, c_bar: ScheduleConstant | float = 1.0) -> float:
    """sqrt(t) (H^(m-1)/C_det)^(1/2) sqrt(Cbar_t); H is sup |X| over the run."""
    if t < 0:
        raise InvalidArgument("t must be non-negative")
    if t == 0:
        return 0.0
    cd = effective_c_det(m, d)
    cval = c_bar(t) if callable(c_bar) else float(c_bar)
    return math.sqrt(t) * math.sqrt(H ** (m - 1.0) / cd) * math.sqrt(cval)


# -- general coefficients --------------------------------------------------------


NormFn = Callable[[float], float]


def _as_fn(v: float | NormFn) -> NormFn:
    return v if callable(v) else (lambda t, _v=float(v): _v)


@dataclass(eq=False)
class GeneralBounds:
    hole: HoleFillingBound
    c_fn: Callable[[float], float] = field(repr=False)
    H: float
    m: float

    def expansion_radius(self, t: float) -> float:
        """sqrt(t C_t) H^((m-1)/2)."""
        if t <= 0:
            return 0.0
        return math.sqrt(t * self.c_fn(t)) * self.H ** ((self.m - 1.0) / 2.0)


def general_bounds(
    rho1_c0: float | NormFn,
    rho2_c02: float | NormFn,
    R: float,
    H: float,
    m: float,
    d: int,
    t_max: float,
) -> GeneralBounds:
    """C_t = C(d,m)(1+R)^2 |rho1|_C0[0,t] |rho2|_C02[0,t]; T = sup{T' : T' C_T' <= R^2 H^-(m-1)}."""
    _check_positive(R=R, H=H, t_max=t_max)
    f1, f2 = _as_fn(rho1_c0), _as_fn(rho2_c02)
    if f1(t_max) <= 0 or f2(t_max) <= 0:
        raise DegenerateCoefficient("coefficient norms must be positive")
    cdm = generic_constant(d, m)

    def c_fn(t: float) -> float:
        return cdm * (1.0 + R) ** 2 * f1(t) * f2(t)

    if c_fn(t_max) <= 0:
        raise DegenerateCoefficient("coefficient norms vanish")
    target = R * R / H ** (m - 1.0)
    T, clamped = _sup_bisect(lambda t: t * c_fn(t), target, t_max)
    scale = H ** ((m - 1.0) / 2.0)

    def radius(t):
        t = np.asarray(t, dtype=float)
        cs = np.vectorize(lambda s: c_fn(min(max(s, 0.0), t_max)))(t)
        return R - np.sqrt(np.maximum(t, 0.0) * cs) * scale

    hole = HoleFillingBound(
        "general", R, H, m, d, effective_c_det(m, d), c_fn(T), T, clamped, radius, {"C(d,m)": cdm}, t_max
    )
    return GeneralBounds(hole, c_fn, H, m)


def l1_lower_bound(t: float, y0_l1: float, H: float, C: float, m: float) -> float:
    """exp(-C t H^(m-1)) * |Y_0|_L1."""
    if min(t, y0_l1, H, C) < 0:
        raise InvalidArgument("inputs must be non-negative")
    return float(math.exp(-C * t * H ** (m - 1.0)) * y0_l1)


# -- norms of exponential coefficients ---------------------------------------------


@dataclass
class ExpNorms:
    """Per-time spatial sups of rho = exp(sign*mu_{g(t)} + a(t)): C0, C02, and C0 of rho^m."""

    times: np.ndarray
    c0: np.ndarray
    c02: np.ndarray
    c0_pow: np.ndarray

    def upto(self, key: str) -> NormFn:
        vals = np.maximum.accumulate(getattr(self, key))
        ts = self.times

        def fn(t: float) -> float:
            k = int(np.searchsorted(ts, t, side="right"))
            return float(vals[max(k - 1, 0)] if k < len(ts) else vals[-1])

        return fn


def exp_coefficient_norms(
    field: NoiseField,
    times: np.ndarray,
    pts: np.ndarray,
    sign: float,
    inner_time: Callable[[np.ndarray], np.ndarray],
    drift: Callable[[np.ndarray], np.ndarray],
    power: float = 1.0,
) -> ExpNorms:
    """Norms of rho(t, xi) = exp(sign * mu_{s(t)}(xi) + a(t)) with s = inner_time, a = drift.

    grad rho = sign rho grad mu;  Hess rho = rho (grad mu grad mu^T + sign Hess mu).
    ``c0_pow`` is sup rho^power.
    """
    ts = np.asarray(times, dtype=float)
    mu, g, hs = field.sample(inner_time(ts), pts)
    a = np.asarray(drift(ts), dtype=float)[:, None]
    rho = np.exp(sign * mu + a)
    grad = np.linalg.norm(g, axis=-1) * rho
    outer = g[..., :, None] * g[..., None, :]
    hess = np.linalg.norm(outer + sign * hs, axis=(-2, -1)) * rho
    return ExpNorms(
        ts,
        rho.max(axis=1),
        (rho + grad + hess).max(axis=1),
        (rho ** power).max(axis=1),
    )
