"""Semi-implicit Newton solver for dY/dt = rho1 * Lap( Phi(rho2) * Phi_reg(Y) ).

The scheme is backward Euler in the diffusion term with the coefficient
fields frozen at the new time level.  Each step solves the cellwise
nonlinear system by damped Newton iteration: a banded (tridiagonal) solve
in 1D, a sparse LU solve in 2D.  Dirichlet nodes are pinned to the boundary
data at the new time level.

Using Phi(rho2 * Y) = Phi(rho2) * Phi(Y) for rho2 >= 0 lets the regularized
nonlinearity act on Y alone, which keeps the Jacobian invertible at fronts.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import TYPE_CHECKING, Callable, Union

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_banded
from scipy.sparse.linalg import splu

from .errors import InvalidArgument, NumericalBlowup, SolverDivergence
from .grid import Grid, Trajectory

if TYPE_CHECKING:
    from .noise_field import NoiseField

logger = logging.getLogger(__name__)

Coefficient = Union[float, np.ndarray, Callable[[float], Union[np.ndarray, float]]]
Observer = Callable[[float, np.ndarray], None]

REG_FACTOR = 1e-6
THRESHOLD_FACTOR = 10.0


def phi(r, m: float):
    """Phi(r) = |r|^m sgn(r)."""
    r = np.asarray(r, dtype=float)
    return np.abs(r) ** m * np.sign(r)


def phi_reg(r, m: float, delta: float):
    """Non-degenerate regularization Phi(r) + delta*r."""
    r = np.asarray(r, dtype=float)
    return phi(r, m) + delta * r


def dphi_reg(r, m: float, delta: float):
    r = np.asarray(r, dtype=float)
    return m * np.abs(r) ** (m - 1.0) + delta


def default_delta_reg(scale: float, m: float) -> float:
    return REG_FACTOR * scale ** (m - 1.0)


def default_threshold(delta_reg: float, m: float) -> float:
    """Support threshold: ten times the level where Phi' equals the regularization."""
    if delta_reg <= 0:
        return 0.0
    return THRESHOLD_FACTOR * delta_reg ** (1.0 / (m - 1.0))


@dataclass(frozen=True)
class SolverParams:
    m: float
    dt: float
    delta_reg: float | None = None
    newton_tol: float = 1e-10
    newton_max: int = 50
    support_threshold: float | None = None
    save_every: int = 1
    scheme: str = "semi-implicit"

    def __post_init__(self) -> None:
        if not self.m > 1:
            raise InvalidArgument(f"m must exceed 1, got {self.m}")
        if not self.dt > 0:
            raise InvalidArgument(f"dt must be positive, got {self.dt}")
        if not self.newton_tol > 0:
            raise InvalidArgument("newton_tol must be positive")
        if self.delta_reg is not None and self.delta_reg < 0:
            raise InvalidArgument("delta_reg must be non-negative")
        if self.save_every < 1:
            raise InvalidArgument("save_every must be >= 1")
        if self.scheme != "semi-implicit":
            raise InvalidArgument(f"unknown scheme {self.scheme!r}")

    @property
    def eps_scheme(self) -> float:
        """Cellwise tolerance for ordering/domination checks (relative to data scale)."""
        return 10.0 * self.newton_tol

    def resolved(self, scale: float) -> "SolverParams":
        """Fill in scale-dependent defaults for delta_reg and the support threshold."""
        scale = scale if scale > 0 else 1.0
        delta = default_delta_reg(scale, self.m) if self.delta_reg is None else self.delta_reg
        tau = default_threshold(delta, self.m) if self.support_threshold is None else self.support_threshold
        return SolverParams(self.m, self.dt, delta, self.newton_tol, self.newton_max, tau, self.save_every, self.scheme)


def _evaluator(c: Coefficient | None, grid: Grid, default: float) -> Callable[[float], np.ndarray]:
    if c is None:
        const = np.full(grid.shape, default)
        return lambda t: const
    if callable(c):
        def ev(t: float) -> np.ndarray:
            v = np.asarray(c(t), dtype=float)
            return np.broadcast_to(v, grid.shape)
        return ev
    arr = np.broadcast_to(np.asarray(c, dtype=float), grid.shape).copy()
    return lambda t: arr


class _Laplacian:
    """Discrete Laplacian split into interior-interior and interior-boundary parts."""

    def __init__(self, grid: Grid):
        self.grid = grid
        self.h2 = grid.h ** 2
        interior = grid.interior
        self.simple_1d = grid.d == 1 and bool(interior[1:-1].all()) and not interior[0] and not interior[-1]
        if not self.simple_1d:
            mats = []
            for ax, n in enumerate(grid.shape):
                d1 = sp.diags([np.ones(n - 1), -2.0 * np.ones(n), np.ones(n - 1)], [-1, 0, 1], format="csr")
                parts = [sp.identity(k, format="csr") for k in grid.shape]
                parts[ax] = d1
                op = parts[0]
                for p in parts[1:]:
                    op = sp.kron(op, p, format="csr")
                mats.append(op)
            full = sum(mats[1:], mats[0]) / self.h2
            flat_int = interior.reshape(-1)
            self.idx_int = np.flatnonzero(flat_int)
            self.idx_bnd = np.flatnonzero(~flat_int)
            full = full.tocsr()
            self.L_int = full[self.idx_int][:, self.idx_int].tocsr()
            self.B = full[self.idx_int][:, self.idx_bnd].tocsr()

    def interior_values(self, full: np.ndarray) -> np.ndarray:
        if self.simple_1d:
            return full[1:-1]
        return full.reshape(-1)[self.idx_int]

    def apply(self, w_int: np.ndarray, w_full_bnd: np.ndarray) -> np.ndarray:
        """Laplacian at interior nodes of the field equal to w_int inside and w_full_bnd on the boundary."""
        if self.simple_1d:
            w = w_full_bnd.copy()
            w[1:-1] = w_int
            return (w[:-2] - 2.0 * w[1:-1] + w[2:]) / self.h2
        wb = w_full_bnd.reshape(-1)[self.idx_bnd]
        return self.L_int @ w_int + self.B @ wb

    def newton_solve(self, r1: np.ndarray, a: np.ndarray, dt: float, rhs: np.ndarray) -> np.ndarray:
        """Solve (I - dt*diag(r1)*L_int*diag(a)) x = rhs."""
        if self.simple_1d:
            c = dt * r1 / self.h2
            n = len(rhs)
            ab = np.empty((3, n))
            ab[1] = 1.0 + 2.0 * c * a
            ab[0, 0] = 0.0
            ab[0, 1:] = -c[:-1] * a[1:]
            ab[2, -1] = 0.0
            ab[2, :-1] = -c[1:] * a[:-1]
            return solve_banded((1, 1), ab, rhs, overwrite_ab=True, check_finite=False)
        n = len(rhs)
        jac = sp.identity(n, format="csc") - dt * (sp.diags(r1) @ self.L_int @ sp.diags(a))
        return splu(jac.tocsc()).solve(rhs)


def solve_general(
    rho1: Coefficient | None,
    rho2: Coefficient | None,
    y0: np.ndarray | float,
    g: Coefficient | None,
    grid: Grid,
    params: SolverParams,
    t_end: float,
    t0: float = 0.0,
    observer: Observer | None = None,
) -> Trajectory:
    """Integrate dY/dt = rho1 Lap(Phi(rho2) Phi_reg(Y)) from t0 to t_end.

    ``rho1``, ``rho2`` and ``g`` may be constants, grid arrays or callables
    ``t -> array on the full grid``; ``None`` means 1 for the rho's and 0 for g.
    The number of steps is ceil((t_end - t0)/dt); the step is shrunk so the
    last step lands on t_end.
    """
    if not t_end > t0:
        raise InvalidArgument(f"t_end={t_end} must exceed t0={t0}")
    m = params.m
    ev1 = _evaluator(rho1, grid, 1.0)
    ev2 = _evaluator(rho2, grid, 1.0)
    evg = _evaluator(g, grid, 0.0)

    y = np.broadcast_to(np.asarray(y0, dtype=float), grid.shape).copy()
    g0 = evg(t0)
    y[grid.dirichlet] = g0[grid.dirichlet]
    scale = max(float(np.max(np.abs(y))), float(np.max(np.abs(g0))))
    p = params.resolved(scale)
    delta = p.delta_reg
    tol_abs = p.newton_tol * (scale if scale > 0 else 1.0)

    n_steps = max(1, int(math.ceil((t_end - t0) / p.dt - 1e-9)))
    dt = (t_end - t0) / n_steps
    lap = _Laplacian(grid)

    times = [t0]
    snaps = [y.copy()]
    total_newton = 0
    max_newton = 0
    yi = lap.interior_values(y).copy()
    for n in range(n_steps):
        t = t0 + (n + 1) * dt
        r1 = lap.interior_values(ev1(t))
        q = phi(ev2(t), m)
        q_int = lap.interior_values(q)
        gt = evg(t)
        w_bnd = q * phi_reg(gt, m, delta)
        y_old = yi.copy()

        def residual(v: np.ndarray) -> np.ndarray:
            return v - y_old - dt * r1 * lap.apply(q_int * phi_reg(v, m, delta), w_bnd)

        res = residual(yi)
        rn = float(np.max(np.abs(res))) if res.size else 0.0
        it = 0
        while rn > tol_abs:
            if it >= p.newton_max:
                raise SolverDivergence(f"Newton did not converge, residual {rn:.3e} > {tol_abs:.3e}", n + 1)
            a = q_int * dphi_reg(yi, m, delta)
            step = lap.newton_solve(r1, a, dt, -res)
            lam = 1.0
            while True:
                trial = yi + lam * step
                res_t = residual(trial)
                rn_t = float(np.max(np.abs(res_t)))
                if rn_t < rn or lam < 1.0 / 64:
                    break
                lam *= 0.5
            yi, res, rn = trial, res_t, rn_t
            it += 1
            if not math.isfinite(rn):
                raise NumericalBlowup("non-finite residual in Newton iteration", n + 1)
        total_newton += it
        max_newton = max(max_newton, it)
        if not np.all(np.isfinite(yi)):
            raise NumericalBlowup("non-finite solution values", n + 1)

        if lap.simple_1d:
            y = gt.copy()
            y[1:-1] = yi
        else:
            y = np.array(gt, dtype=float, copy=True)
            y.reshape(-1)[lap.idx_int] = yi
        if observer is not None:
            observer(t, y)
        if (n + 1) % p.save_every == 0 or n + 1 == n_steps:
            times.append(t)
            snaps.append(y.copy())

    meta = {
        "params": asdict(p),
        "n_steps": n_steps,
        "dt_effective": dt,
        "newton_iterations_total": total_newton,
        "newton_iterations_max": max_newton,
        "data_scale": scale,
    }
    return Trajectory(grid, np.array(times), np.array(snaps), {"kind": "dirichlet"}, meta)


def solve_spme(
    x0: np.ndarray | float,
    field: "NoiseField",
    lam: float,
    g: Coefficient | None,
    grid: Grid,
    params: SolverParams,
    t_end: float,
    t0: float = 0.0,
    observer: Observer | None = None,
) -> Trajectory:
    """Solve the noisy equation through the exponential transform.

    With ``e(t) = exp(mu_t - lam*t)`` the transformed unknown ``Y = e X``
    solves dY/dt = e Lap Phi(Y / e); boundary data for Y is ``e g``.
    The returned trajectory holds X.  ``observer`` sees Y.
    """
    if lam < 0:
        raise InvalidArgument("drift lambda must be non-negative")
    mu = field.on_grid(grid)

    def expo(t: float) -> np.ndarray:
        return np.exp(mu(t) - lam * t)

    def inv_expo(t: float) -> np.ndarray:
        return np.exp(-mu(t) + lam * t)

    evg = _evaluator(g, grid, 0.0)

    def g_y(t: float) -> np.ndarray:
        return expo(t) * evg(t)

    y0 = expo(t0) * np.broadcast_to(np.asarray(x0, dtype=float), grid.shape)
    ytraj = solve_general(expo, inv_expo, y0, g_y, grid, params, t_end, t0=t0, observer=observer)
    xs = np.array([ytraj.values[k] * inv_expo(t) for k, t in enumerate(ytraj.times)])
    return ytraj.with_values(xs, variable="X", drift=lam, noise=field.describe())


@dataclass
class LinfReport:
    sup_norms: np.ndarray
    bound: float
    violated: bool
    first_violation: int | None


def monitor_linf(traj: Trajectory, c_monitor: float = 1.0) -> LinfReport:
    """Per-snapshot sup norms and a flag for ||Y_t|| > c_monitor * ||Y_0||."""
    sups = traj.sup_norms()
    bound = c_monitor * float(sups[0])
    over = np.flatnonzero(sups > bound * (1.0 + 1e-12) + 1e-300)
    return LinfReport(sups, bound, bool(over.size), int(over[0]) if over.size else None)
