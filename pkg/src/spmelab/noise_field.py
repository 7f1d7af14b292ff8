"""The noise field mu_t(xi) = -sum_k f_k(xi) z_t^(k) and its norms."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from .errors import InvalidArgument
from .expr import CoefficientSet
from .grid import Grid
from .signals import Signal


@dataclass(frozen=True)
class Ball:
    center: tuple[float, ...]
    radius: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))
        if self.radius < 0:
            raise InvalidArgument("ball radius must be non-negative")

    @property
    def d(self) -> int:
        return len(self.center)

    def lattice(self, spacing: float) -> np.ndarray:
        """Points of a lattice through the centre, clipped to the closed ball (always includes the centre)."""
        c = np.asarray(self.center)
        n = int(np.ceil(self.radius / spacing - 1e-12)) if self.radius > 0 else 0
        offs = spacing * np.arange(-n, n + 1)
        if self.radius > 0:
            offs = np.clip(offs, -self.radius, self.radius)
        mesh = np.stack(np.meshgrid(*([offs] * self.d), indexing="ij"), axis=-1).reshape(-1, self.d)
        r = np.linalg.norm(mesh, axis=1)
        keep = r <= self.radius * (1 + 1e-12)
        pts = mesh[keep]
        if self.d > 1 and self.radius > 0:
            # add points on the bounding sphere so the closed ball is sampled up to its edge
            ang = np.linspace(0, 2 * np.pi, max(16, int(2 * np.pi * self.radius / spacing)), endpoint=False)
            rim = self.radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
            pts = np.vstack([pts, rim])
        return c + pts


@dataclass(frozen=True)
class Box:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "lo", tuple(float(v) for v in np.atleast_1d(self.lo)))
        object.__setattr__(self, "hi", tuple(float(v) for v in np.atleast_1d(self.hi)))
        if len(self.lo) != len(self.hi) or any(b < a for a, b in zip(self.lo, self.hi)):
            raise InvalidArgument("box corners are inconsistent")

    @property
    def d(self) -> int:
        return len(self.lo)

    def lattice(self, spacing: float) -> np.ndarray:
        axes = [np.linspace(a, b, max(2, int(np.ceil((b - a) / spacing - 1e-12)) + 1)) for a, b in zip(self.lo, self.hi)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.d)

    def contains(self, p: np.ndarray, tol: float = 1e-12) -> bool:
        return bool(np.all(p >= np.array(self.lo) - tol) and np.all(p <= np.array(self.hi) + tol))

    def contains_ball(self, ball: Ball, tol: float = 1e-12) -> bool:
        c = np.asarray(ball.center)
        return bool(np.all(c - ball.radius >= np.array(self.lo) - tol) and np.all(c + ball.radius <= np.array(self.hi) + tol))


Region = Ball | Box


@dataclass(frozen=True)
class MuNorms:
    """Sup-norms of mu over a space-time set.

    ``c01 = c0 + grad`` and ``c02 = c01 + hess`` (Frobenius norm of the
    Hessian).  ``dev_point`` is sup |mu_t(xi0) - mu_t(xi)|; the ``dt_*``
    entries are the same norms of mu_{t0} - mu_t.
    """

    c0: float
    grad: float
    lap: float
    hess: float
    dev_point: float
    dt_c0: float
    dt_grad: float
    dt_lap: float
    dt_hess: float

    @property
    def c01(self) -> float:
        return self.c0 + self.grad

    @property
    def c02(self) -> float:
        return self.c0 + self.grad + self.hess

    @property
    def dt_c02(self) -> float:
        return self.dt_c0 + self.dt_grad + self.dt_hess

    @classmethod
    def zero(cls) -> "MuNorms":
        return cls(*(0.0,) * 9)

    def as_dict(self) -> dict[str, float]:
        out = {k: float(getattr(self, k)) for k in self.__dataclass_fields__}
        out.update(c01=self.c01, c02=self.c02, dt_c02=self.dt_c02)
        return out


@dataclass(frozen=True, eq=False)
class NoiseField:
    coefficients: CoefficientSet
    signal: Signal
    domain: Box | None = None

    def __post_init__(self) -> None:
        if len(self.coefficients) != self.signal.n_channels:
            raise InvalidArgument(
                f"{len(self.coefficients)} coefficients but {self.signal.n_channels} signal channels"
            )
        if self.domain is not None and self.domain.d != self.coefficients.d:
            raise InvalidArgument("domain dimension differs from coefficient dimension")

    @classmethod
    def from_strings(cls, exprs: Sequence[str], signal: Signal, domain: Box | None = None) -> "NoiseField":
        d = domain.d if domain is not None else 1
        return cls(CoefficientSet(tuple(exprs), d), signal, domain)

    @classmethod
    def zero(cls, d: int, n_steps: int, dt: float, domain: Box | None = None, sign: int = 1) -> "NoiseField":
        from .signals import constant_zero

        return cls(CoefficientSet(("0",), d), constant_zero(n_steps, dt, sign), domain)

    @property
    def d(self) -> int:
        return self.coefficients.d

    @property
    def is_spatially_constant(self) -> bool:
        return self.coefficients.is_constant

    @property
    def is_zero(self) -> bool:
        return bool(np.all(self.signal.values == 0.0)) or all(
            c.is_constant and float(c.expr) == 0.0 for c in self.coefficients.coefficients
        )

    def window(self) -> tuple[float, float]:
        return self.signal.window

    def _points(self, xi) -> np.ndarray:
        p = np.asarray(xi, dtype=float)
        if self.d == 1 and (p.ndim == 0 or p.shape[-1] != 1):
            p = p[..., None]
        if p.shape[-1] != self.d:
            raise InvalidArgument(f"points must have {self.d} coordinates")
        if self.domain is not None:
            flat = p.reshape(-1, self.d)
            lo, hi = np.array(self.domain.lo), np.array(self.domain.hi)
            if np.any(flat < lo - 1e-12) or np.any(flat > hi + 1e-12):
                raise InvalidArgument("point outside the closed domain")
        return p

    # -- pointwise ---------------------------------------------------------

    def mu_eval(self, t: float, xi) -> np.ndarray | float:
        p = self._points(xi)
        z = self.signal.value(t)
        out = -sum(z[k] * c.value(p) for k, c in enumerate(self.coefficients.coefficients))
        return float(out) if np.ndim(out) == 0 else out

    def mu_grad(self, t: float, xi) -> np.ndarray:
        p = self._points(xi)
        z = self.signal.value(t)
        return -sum(z[k] * c.gradient(p) for k, c in enumerate(self.coefficients.coefficients))

    def mu_laplacian(self, t: float, xi) -> np.ndarray | float:
        p = self._points(xi)
        z = self.signal.value(t)
        out = -sum(z[k] * c.laplacian(p) for k, c in enumerate(self.coefficients.coefficients))
        return float(out) if np.ndim(out) == 0 else out

    def mu_hessian(self, t: float, xi) -> np.ndarray:
        p = self._points(xi)
        z = self.signal.value(t)
        return -sum(z[k] * c.hessian(p) for k, c in enumerate(self.coefficients.coefficients))

    # -- grid helpers ------------------------------------------------------

    def on_grid(self, grid: Grid) -> Callable[[float], np.ndarray]:
        """Return t -> mu_t on the grid nodes (coefficients evaluated once)."""
        if grid.d != self.d:
            raise InvalidArgument("grid and field dimensions differ")
        pts = grid.points
        fk = np.stack([c.value(pts) for c in self.coefficients.coefficients])

        def mu(t: float) -> np.ndarray:
            z = self.signal.value(t)
            return -np.tensordot(z, fk, axes=1)

        return mu

    def frozen_at(self, xi0) -> Callable[[np.ndarray], np.ndarray]:
        """Vectorised t -> mu_t(xi0)."""
        p = self._points(xi0).reshape(self.d)
        fk = np.array([float(c.value(p[None, :])[0]) for c in self.coefficients.coefficients])

        def mu(t) -> np.ndarray:
            return -(self.signal.value(t) @ fk)

        return mu

    def window_times(self, window: tuple[float, float]) -> np.ndarray:
        """Signal sample times inside ``window`` plus the window end points.

        mu is affine in t between samples, so sup-norms over a window are
        attained on this set.
        """
        a, b = float(min(window)), float(max(window))
        wa, wb = self.signal.window
        tol = 1e-12 * max(1.0, self.signal.horizon)
        if a < wa - tol or b > wb + tol:
            raise InvalidArgument(f"window {window} outside signal window {self.signal.window}")
        ts = self.signal.times
        inner = ts[(ts > a) & (ts < b)]
        return np.unique(np.concatenate([[a, b], inner]))

    def sample(self, times: np.ndarray, pts: np.ndarray):
        """mu, grad mu and Hessian at every (time, point) pair: shapes (T,P), (T,P,d), (T,P,d,d)."""
        z = self.signal.value(np.asarray(times, dtype=float))  # (T, N)
        coefs = self.coefficients.coefficients
        f = np.stack([c.value(pts) for c in coefs])  # (N, P)
        g = np.stack([c.gradient(pts) for c in coefs])  # (N, P, d)
        h = np.stack([c.hessian(pts) for c in coefs])  # (N, P, d, d)
        return -z @ f, -np.tensordot(z, g, axes=1), -np.tensordot(z, h, axes=1)

    def _check_region(self, region: Region, h: float, refine: int) -> None:
        if refine < 1 or h <= 0:
            raise InvalidArgument("lattice spacing and refinement must be positive")
        if isinstance(region, Ball) and region.radius <= 0 or isinstance(region, Box) and any(
            b <= a for a, b in zip(region.lo, region.hi)
        ):
            raise InvalidArgument("empty spatial region")
        if region.d != self.d:
            raise InvalidArgument("region dimension differs from field dimension")
        if self.domain is not None and isinstance(region, Ball) and not self.domain.contains_ball(region):
            raise InvalidArgument("region leaves the domain")

    def norm_series(
        self,
        window: tuple[float, float],
        region: Region,
        h: float,
        refine: int = 4,
        xi0: Sequence[float] | float | None = None,
        t0: float | None = None,
    ) -> "NormSeries":
        """Spatial sup-norms at every window node; window sups follow by running maxima."""
        self._check_region(region, h, refine)
        if not window[1] >= window[0]:
            raise InvalidArgument("empty time window")
        times = self.window_times(window)
        pts = region.lattice(h / refine)
        if xi0 is None:
            xi0 = region.center if isinstance(region, Ball) else tuple((a + b) / 2 for a, b in zip(region.lo, region.hi))
        p0 = np.atleast_1d(np.asarray(xi0, dtype=float))
        t_ref = min(window) if t0 is None else float(t0)
        series = NormSeries(self, pts, p0, t_ref, times, {})
        series.rows = series.spatial_sups(times)
        return series

    def mu_norms(
        self,
        window: tuple[float, float],
        region: Region,
        h: float,
        refine: int = 4,
        xi0: Sequence[float] | float | None = None,
        t0: float | None = None,
    ) -> MuNorms:
        """Sup-norms of mu over window x region on a lattice of spacing h/refine.

        mu is affine in t between signal samples, so the time sup is exact;
        the spatial sup is taken over the refined lattice.  ``xi0`` defaults
        to the region centre, ``t0`` to the window start.
        """
        return self.norm_series(window, region, h, refine, xi0, t0).total()

    def describe(self) -> dict[str, Any]:
        out: dict[str, Any] = {"coefficients": list(self.coefficients.sources), "signal": self.signal.describe()}
        if self.domain is not None:
            out["domain"] = {"lo": list(self.domain.lo), "hi": list(self.domain.hi)}
        return out


_NORM_KEYS = ("c0", "grad", "lap", "hess", "dev_point", "dt_c0", "dt_grad", "dt_lap", "dt_hess")


@dataclass(eq=False)
class NormSeries:
    """Per-time spatial sups over a fixed lattice; ``upto(t)`` gives window norms on [start, t]."""

    field: NoiseField
    pts: np.ndarray
    p0: np.ndarray
    t_ref: float
    times: np.ndarray
    rows: dict[str, np.ndarray]

    def spatial_sups(self, times: np.ndarray) -> dict[str, np.ndarray]:
        times = np.atleast_1d(np.asarray(times, dtype=float))
        out: dict[str, list[np.ndarray]] = {k: [] for k in _NORM_KEYS}
        ref, gref, href = self.field.sample(np.array([self.t_ref]), self.pts)
        chunk = max(1, 2_000_000 // max(1, self.pts.shape[0] * self.field.d ** 2))
        for a in range(0, len(times), chunk):
            ts = times[a : a + chunk]
            mu, grad, hess = self.field.sample(ts, self.pts)
            mu0, _, _ = self.field.sample(ts, self.p0[None, :])
            dmu, dgrad, dhess = ref - mu, gref - grad, href - hess
            out["c0"].append(np.max(np.abs(mu), axis=1))
            out["grad"].append(np.max(np.linalg.norm(grad, axis=-1), axis=1))
            out["lap"].append(np.max(np.abs(np.trace(hess, axis1=-2, axis2=-1)), axis=1))
            out["hess"].append(np.max(np.linalg.norm(hess, axis=(-2, -1)), axis=1))
            out["dev_point"].append(np.max(np.abs(mu0 - mu), axis=1))
            out["dt_c0"].append(np.max(np.abs(dmu), axis=1))
            out["dt_grad"].append(np.max(np.linalg.norm(dgrad, axis=-1), axis=1))
            out["dt_lap"].append(np.max(np.abs(np.trace(dhess, axis1=-2, axis2=-1)), axis=1))
            out["dt_hess"].append(np.max(np.linalg.norm(dhess, axis=(-2, -1)), axis=1))
        return {k: np.concatenate(v) for k, v in out.items()}

    def total(self) -> MuNorms:
        return MuNorms(**{k: float(np.max(v)) for k, v in self.rows.items()})

    def upto(self, t: float) -> MuNorms:
        """Norms over [times[0], t] (exact in time: nodes up to t plus t itself)."""
        if t < self.times[0] - 1e-12 or t > self.times[-1] * (1 + 1e-12) + 1e-12:
            raise InvalidArgument(f"time {t} outside norm window")
        k = int(np.searchsorted(self.times, t, side="right"))
        extra = self.spatial_sups(np.array([min(max(t, self.times[0]), self.times[-1])]))
        return MuNorms(**{key: float(max(np.max(self.rows[key][:k], initial=0.0), extra[key][0])) for key in _NORM_KEYS})

    def cumulative(self) -> dict[str, np.ndarray]:
        """Running maxima at the window nodes."""
        return {k: np.maximum.accumulate(v) for k, v in self.rows.items()}
