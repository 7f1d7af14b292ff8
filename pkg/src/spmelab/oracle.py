"""Closed-form Barenblatt (ZKB) profiles and an independent weak-form check.

    u(t, x) = t^-alpha * (C - k |x - c|^2 t^(-2 beta))_+^(1/(m-1))

with alpha = d/(d(m-1)+2), beta = alpha/d, k = alpha(m-1)/(2dm).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special

from .errors import InvalidArgument


@dataclass(frozen=True)
class BarenblattProfile:
    m: float
    d: int
    c_b: float
    t0: float = 1.0
    center: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if not self.m > 1:
            raise InvalidArgument("Barenblatt profile needs m > 1")
        if self.d not in (1, 2, 3):
            raise InvalidArgument("dimension must be 1, 2 or 3")
        if not self.c_b > 0 or not self.t0 > 0:
            raise InvalidArgument("free constant and time offset must be positive")

    @property
    def alpha(self) -> float:
        return self.d / (self.d * (self.m - 1.0) + 2.0)

    @property
    def beta(self) -> float:
        return self.alpha / self.d

    @property
    def k(self) -> float:
        return self.alpha * (self.m - 1.0) / (2.0 * self.d * self.m)

    def radius(self, t: float) -> float:
        return float(np.sqrt(self.c_b / self.k) * t ** self.beta)

    def sup(self, t: float) -> float:
        return float(t ** (-self.alpha) * self.c_b ** (1.0 / (self.m - 1.0)))

    def mass(self) -> float:
        """Closed-form total mass (time independent)."""
        d, m = self.d, self.m
        p = 1.0 / (m - 1.0)
        r = np.sqrt(self.c_b / self.k)
        # integral over the unit ball of (1 - |y|^2)^p, times C^p r^d
        unit = np.pi ** (d / 2) * special.gamma(p + 1) / special.gamma(p + 1 + d / 2)
        return float(self.c_b ** p * r ** d * unit)

    def _center(self) -> np.ndarray:
        return np.zeros(self.d) if self.center is None else np.asarray(self.center, dtype=float)

    def __call__(self, t: float, xi) -> np.ndarray:
        return barenblatt_eval(t, xi, self)


def barenblatt_eval(t: float, xi, profile: BarenblattProfile) -> np.ndarray:
    """Evaluate the profile at time ``t`` (absolute, >= t0) and points ``xi``.

    ``xi`` is an array whose last axis has length d (or a plain array in 1D).
    """
    if t < profile.t0:
        raise InvalidArgument(f"time {t} precedes profile start t0={profile.t0}")
    pts = np.asarray(xi, dtype=float)
    if profile.d == 1 and (pts.ndim == 0 or pts.shape[-1] != 1):
        r2 = (pts - profile._center()[0]) ** 2
    else:
        r2 = np.sum((pts - profile._center()) ** 2, axis=-1)
    inner = profile.c_b - profile.k * r2 * t ** (-2.0 * profile.beta)
    return t ** (-profile.alpha) * np.maximum(inner, 0.0) ** (1.0 / (profile.m - 1.0))


def _bump(s: np.ndarray):
    """(1 - s^2)^4 on |s| < 1 with first and second derivatives."""
    inside = np.abs(s) < 1
    base = np.where(inside, 1.0 - s * s, 0.0)
    f = base ** 4
    f1 = np.where(inside, -8.0 * s * base ** 3, 0.0)
    f2 = np.where(inside, -8.0 * base ** 3 + 48.0 * s * s * base ** 2, 0.0)
    return f, f1, f2


@dataclass(frozen=True)
class TestFunction:
    """Separable compactly supported test function phi(t, x) = a(t) * prod b(x_i)."""

    t_center: float
    t_half: float
    x_center: tuple[float, ...]
    x_half: float

    def eval(self, t: np.ndarray, x: np.ndarray):
        """Return phi, d_t phi and Lap phi on the (t, x) tensor grid."""
        at, at1, _ = _bump((t - self.t_center) / self.t_half)
        at1 = at1 / self.t_half
        s = [(x[..., i] - self.x_center[i]) / self.x_half for i in range(x.shape[-1])]
        parts = [_bump(si) for si in s]
        bx = np.ones_like(s[0])
        for f, _, _ in parts:
            bx = bx * f
        lap = np.zeros_like(bx)
        for i, (f, _, f2) in enumerate(parts):
            other = np.ones_like(bx)
            for j, (g, _, _) in enumerate(parts):
                if j != i:
                    other = other * g
            lap = lap + other * f2 / self.x_half ** 2
        phi = at[:, None] * bx.reshape(1, -1)
        dt_phi = at1[:, None] * bx.reshape(1, -1)
        lap_phi = at[:, None] * lap.reshape(1, -1)
        return phi, dt_phi, lap_phi


@dataclass
class WeakResidualReport:
    h_values: list[float]
    residuals: list[float]
    ratios: list[float]


def weak_residual(
    profile: BarenblattProfile, test: TestFunction, h: float, box: Sequence[float], discrete: bool = True
) -> float:
    """Space-time trapezoid evaluation of  int int u d_t phi + Phi(u) Lap phi  (time step = h).

    With ``discrete=True`` the derivatives of phi are the central differences
    (phi(t+h) - phi(t-h))/2h and the (2d+1)-point Laplacian at spacing h, so
    the residual is O(h^2) with a smooth error constant.  With exact
    derivatives the trapezoid rule on a compactly supported smooth integrand
    converges faster than any fixed order away from the front, which hides
    the rate.  Zero for an exact weak solution in either case.
    """
    lo, hi = box
    n = int(round((hi - lo) / h))
    x = lo + h * np.arange(n + 1)
    pts = x[:, None]
    if profile.d == 2:
        xx, yy = np.meshgrid(x, x, indexing="ij")
        pts = np.stack([xx, yy], axis=-1).reshape(-1, 2)
    t_lo = test.t_center - test.t_half
    t_hi = test.t_center + test.t_half
    nt = int(round((t_hi - t_lo) / h))
    tt = np.linspace(t_lo, t_hi, nt + 1)
    if discrete:
        k = (t_hi - t_lo) / nt
        dt_phi = (test.eval(tt + k, pts)[0] - test.eval(tt - k, pts)[0]) / (2.0 * k)
        centre = test.eval(tt, pts)[0]
        lap_phi = -2.0 * profile.d * centre
        for i in range(profile.d):
            e = np.zeros(profile.d)
            e[i] = h
            lap_phi = lap_phi + test.eval(tt, pts + e)[0] + test.eval(tt, pts - e)[0]
        lap_phi = lap_phi / (h * h)
    else:
        _, dt_phi, lap_phi = test.eval(tt, pts)
    u = np.array([barenblatt_eval(t, pts, profile).reshape(-1) for t in tt])
    integrand = u * dt_phi + np.abs(u) ** profile.m * lap_phi
    wt = np.full(nt + 1, (t_hi - t_lo) / nt)
    wt[[0, -1]] *= 0.5
    wx1 = np.full(n + 1, h)
    wx1[[0, -1]] *= 0.5
    wx = wx1 if profile.d == 1 else np.outer(wx1, wx1).reshape(-1)
    return float(wt @ integrand @ wx)


def barenblatt_is_weak_solution_check(
    profile: BarenblattProfile,
    test: TestFunction,
    box: Sequence[float],
    h_values: Sequence[float],
) -> WeakResidualReport:
    """Weak-form residuals on successively refined grids and the ratios between them."""
    res = [abs(weak_residual(profile, test, h, box)) for h in h_values]
    ratios = [res[i] / res[i + 1] if res[i + 1] > 0 else float("inf") for i in range(len(res) - 1)]
    return WeakResidualReport(list(h_values), res, ratios)


@dataclass
class ConvergenceReport:
    """Relative sup-norm errors of the solver against a Barenblatt profile."""

    h_values: list[float]
    errors: list[float]
    core_errors: list[float]

    @staticmethod
    def _ratios(e: list[float]) -> list[float]:
        return [e[i] / e[i + 1] if e[i + 1] > 0 else float("inf") for i in range(len(e) - 1)]

    @property
    def ratios(self) -> list[float]:
        return self._ratios(self.errors)

    @property
    def core_ratios(self) -> list[float]:
        return self._ratios(self.core_errors)

    def as_dict(self) -> dict:
        return {
            "h": self.h_values,
            "errors": self.errors,
            "ratios": self.ratios,
            "core_errors": self.core_errors,
            "core_ratios": self.core_ratios,
        }


def barenblatt_convergence(
    profile: BarenblattProfile,
    box: Sequence[float],
    h_values: Sequence[float],
    t_end: float,
    dt_factor: float = 1.0,
    core_fraction: float = 0.8,
) -> ConvergenceReport:
    """Solve the PME from the profile at t0 to t_end on [lo, hi] (1D) with dt = dt_factor h^2.

    ``errors`` are sup-norm errors over the whole grid relative to the exact
    sup; ``core_errors`` restrict to |x - c| <= core_fraction * front radius,
    away from the non-smooth front.
    """
    from .grid import Grid
    from .solver import SolverParams, solve_general

    if profile.d != 1:
        raise InvalidArgument("the convergence study is one-dimensional")
    lo, hi = box
    errs, core = [], []
    for h in h_values:
        grid = Grid.box(lo, hi, h)
        x = grid.points[..., 0]
        y0 = barenblatt_eval(profile.t0, x, profile)
        params = SolverParams(profile.m, dt_factor * h * h, save_every=10**9)
        tr = solve_general(None, None, y0, 0.0, grid, params, t_end, t0=profile.t0)
        exact = barenblatt_eval(t_end, x, profile)
        diff = np.abs(tr.values[-1] - exact)
        errs.append(float(diff.max() / exact.max()))
        inner = np.abs(x - profile._center()[0]) <= core_fraction * profile.radius(t_end)
        core.append(float(diff[inner].max() / exact.max()))
    return ConvergenceReport(list(map(float, h_values)), errs, core)
