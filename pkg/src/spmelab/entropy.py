"""Bump-codeword construction for lower bounds on the epsilon-entropy of the attractor.

Each bump x_i = M 1_{B(eps/2, xi_i)}, M = (kappa eps)^(2/(m-1)), is evolved under the
rescaled equation  dU/dt = rho1 Lap Phi(rho2 U)  on (t_start, 1/delta].  While the
supports stay inside the disjoint balls B(eps, xi_i), every binary codeword c gives
a distinct state sum_i c_i U^i(T), so 2^|R_eps| states are pairwise separated in L1.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from .bounds import exp_coefficient_norms, l1_lower_bound
from .errors import ContainmentFailure, InsufficientData, InvalidArgument, SpmeError
from .grid import Grid, Trajectory
from .noise_field import Box, NoiseField
from .solver import SolverParams, solve_general
from .support import support_of
from .transforms import AttractorRescaling

logger = logging.getLogger(__name__)

T_START_FRACTION = 1e-3
MAX_SHRINK = 6
CELLS_PER_EPS = 16


class TooFewCenters(InvalidArgument):
    """The lattice spacing leaves fewer than two bump centres inside the domain."""


def theoretical_exponent(d: int, m: float) -> float | Fraction:
    """d(m-1) / (2 + d(m-1)); exact when m is an int or Fraction."""
    if isinstance(m, (int, Fraction)):
        a = d * (Fraction(m) - 1)
        return a / (2 + a)
    a = d * (m - 1.0)
    return a / (2.0 + a)


@dataclass(frozen=True, eq=False)
class BumpGrid:
    eps: float
    centers: np.ndarray
    kappa: float
    m: float
    domain: Box

    @property
    def count(self) -> int:
        return len(self.centers)

    @property
    def height(self) -> float:
        return (self.kappa * self.eps) ** (2.0 / (self.m - 1.0))

    @property
    def d(self) -> int:
        return self.centers.shape[1]

    def with_kappa(self, kappa: float) -> "BumpGrid":
        return replace(self, kappa=kappa)

    def initial(self, grid: Grid, i: int) -> np.ndarray:
        """M on the closed ball of radius eps/2 around centre i, 0 elsewhere."""
        dist = grid.distance_from(self.centers[i])
        return np.where(dist <= 0.5 * self.eps * (1 + 1e-12), self.height, 0.0)

    def codeword_initial(self, grid: Grid, code: Sequence[int]) -> np.ndarray:
        out = np.zeros(grid.shape)
        for i, c in enumerate(code):
            if c:
                out += self.initial(grid, i)
        return out

    def describe(self) -> dict[str, Any]:
        return {"eps": self.eps, "count": self.count, "kappa": self.kappa, "height": self.height, "m": self.m}


def build_bump_grid(eps: float, domain: Box, kappa: float, m: float) -> BumpGrid:
    """Axis-aligned lattice with spacing 2 eps whose closed eps-balls lie inside the open domain."""
    if not (eps > 0 and kappa > 0 and m > 1):
        raise InvalidArgument("need eps > 0, kappa > 0, m > 1")
    lo, hi = np.asarray(domain.lo, dtype=float), np.asarray(domain.hi, dtype=float)
    axes = []
    for a, b in zip(lo, hi):
        # centres a + 2 eps k with a + eps < c - eps and c + eps < b, i.e. strictly inside by eps
        k = np.arange(1, int(math.floor((b - a) / (2 * eps))) + 1)
        c = a + 2 * eps * k
        c = c[(c - eps > a + 1e-12 * (b - a)) & (c + eps < b - 1e-12 * (b - a))]
        axes.append(c)
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
    if len(mesh) < 2:
        raise TooFewCenters(f"eps={eps} leaves {len(mesh)} centre(s) in the domain; need at least 2")
    return BumpGrid(float(eps), mesh, float(kappa), float(m), domain)


@dataclass
class ContainmentCertificate:
    index: int
    max_radius: float
    margin: float
    contained: bool

    def as_dict(self) -> dict[str, Any]:
        return {"index": self.index, "max_radius": self.max_radius, "margin": self.margin, "contained": self.contained}


@dataclass(eq=False)
class BumpEvolution:
    bumps: BumpGrid
    grid: Grid
    trajectories: list[Trajectory]
    certificates: list[ContainmentCertificate]
    rescaling: AttractorRescaling
    t_start: float
    kappa_history: list[float]
    params: SolverParams
    tau: float
    field: NoiseField
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def T(self) -> float:
        return self.rescaling.T

    @property
    def certified(self) -> bool:
        return all(c.contained for c in self.certificates)

    def final_states(self) -> np.ndarray:
        return np.array([tr.values[-1] for tr in self.trajectories])

    def single_l1(self) -> np.ndarray:
        """||U^i(T)||_1 for each bump."""
        return self.final_states().reshape(len(self.trajectories), -1).sum(axis=1) * self.grid.cell_volume

    def combine(self, code: Sequence[int], k: int = -1) -> np.ndarray:
        if len(code) != len(self.trajectories):
            raise InvalidArgument("codeword length differs from the number of bumps")
        out = np.zeros(self.grid.shape)
        for c, tr in zip(code, self.trajectories):
            if c:
                out += tr.values[k]
        return out

    def coefficients(self):
        return self.rescaling.coefficients(self.field, self.grid)

    def describe(self) -> dict[str, Any]:
        return {
            "bumps": self.bumps.describe(),
            "grid": self.grid.describe(),
            "rescaling": self.rescaling.describe(),
            "t_start": self.t_start,
            "kappa_history": self.kappa_history,
            "tau": self.tau,
            "certified": self.certified,
            "min_margin": min(c.margin for c in self.certificates),
        }


def _entropy_grid(bumps: BumpGrid, h: float | None) -> Grid:
    h = bumps.eps / CELLS_PER_EPS if h is None else h
    return Grid.box(bumps.domain.lo, bumps.domain.hi, h)


def _solve_bump(y0, rho1, rho2, grid, params, t_start, T, center, eps, observe: bool):
    """Solve one initial datum; track the farthest supported node from ``center`` at every step."""
    dist = grid.distance_from(center) if center is not None else None
    state = {"r": 0.0, "tau": None}

    def observer(t: float, y: np.ndarray) -> None:
        mask = support_of(y, state["tau"])
        if mask.any():
            state["r"] = max(state["r"], float(dist[mask].max()))

    scale = float(np.max(np.abs(y0)))
    resolved = params.resolved(scale)
    state["tau"] = resolved.support_threshold
    if observe:
        observer(t_start, y0)
    traj = solve_general(rho1, rho2, y0, 0.0, grid, params, T, t0=t_start, observer=observer if observe else None)
    return traj, state["r"], resolved


def evolve_bumps(
    bumps: BumpGrid,
    field: NoiseField,
    lam: float,
    delta: float,
    params: SolverParams,
    h: float | None = None,
    t_start_fraction: float = T_START_FRACTION,
    max_shrink: int = MAX_SHRINK,
) -> BumpEvolution:
    """Evolve every bump under the rescaled coefficients, halving kappa until all stay in B(eps, xi_i).

    The field's signal must run backward in time (sign = -1) and cover [G(t_start), 0].
    """
    resc = AttractorRescaling(delta, lam, params.m)
    if params.m != bumps.m:
        raise InvalidArgument("bump grid and solver disagree on m")
    T = resc.T
    t_start = t_start_fraction * T
    g_start = resc.G(t_start)
    lo, hi = field.signal.window
    if not (lo <= g_start + 1e-12 and hi >= -1e-12):
        raise InvalidArgument(f"signal window {field.signal.window} must cover [{g_start:.6g}, 0]")
    grid = _entropy_grid(bumps, h)
    rho1, rho2 = resc.coefficients(field, grid)
    history = [bumps.kappa]
    current = bumps
    for attempt in range(max_shrink + 1):
        trajs, certs = [], []
        resolved = params
        for i in range(current.count):
            y0 = current.initial(grid, i)
            traj, r_max, resolved = _solve_bump(y0, rho1, rho2, grid, params, t_start, T, current.centers[i], current.eps, True)
            margin = current.eps - r_max
            certs.append(ContainmentCertificate(i, r_max, margin, margin > 0))
            trajs.append(traj)
            if margin <= 0:
                break
        if all(c.contained for c in certs) and len(certs) == current.count:
            logger.info("eps=%g: %d bumps certified with kappa=%g", current.eps, current.count, current.kappa)
            return BumpEvolution(
                current, grid, trajs, certs, resc, t_start, history, params,
                float(resolved.support_threshold or 0.0), field,
                {"attempts": attempt + 1},
            )
        if attempt == max_shrink:
            break
        current = current.with_kappa(current.kappa / 2.0)
        history.append(current.kappa)
        logger.info("eps=%g: containment failed, shrinking kappa to %g", current.eps, current.kappa)
    raise ContainmentFailure(
        f"bumps at eps={bumps.eps} escape B(eps, xi_i) after {max_shrink} halvings of kappa",
        {"kappa_history": history, "certificates": [c.as_dict() for c in certs]},
    )


@dataclass
class SuperpositionReport:
    code: list[int]
    max_difference: float
    eps: float

    @property
    def passed(self) -> bool:
        return self.max_difference <= self.eps

    def as_dict(self) -> dict[str, Any]:
        return {"code": self.code, "max_difference": self.max_difference, "eps_scheme": self.eps, "passed": self.passed}


def superposition_check(ev: BumpEvolution, code: Sequence[int]) -> SuperpositionReport:
    """Solve the summed initial datum directly and compare with sum_i c_i U^i at every saved snapshot.

    The tolerance is 2 * n_steps * newton_tol * height = 0.2 * n_steps * eps_scheme * height.
    """
    code = [int(bool(c)) for c in code]
    y0 = ev.bumps.codeword_initial(ev.grid, code)
    rho1, rho2 = ev.coefficients()
    joint = solve_general(rho1, rho2, y0, 0.0, ev.grid, ev.params, ev.T, t0=ev.t_start)
    worst = 0.0
    for k in range(len(joint)):
        worst = max(worst, float(np.max(np.abs(joint.values[k] - ev.combine(code, k)))))
    # Each Newton-truncated step leaves a residual of at most newton_tol * height and
    # the implicit step is a sup-norm contraction, so two independently converged
    # solves can drift apart by the accumulated truncation of both.
    n_steps = int(joint.meta.get("n_steps", 1))
    tol = ev.params.eps_scheme * max(ev.bumps.height, 1e-300) * max(1.0, 0.2 * n_steps)
    return SuperpositionReport(code, worst, tol)


def coefficient_constant(ev: BumpEvolution, refine: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Running C(t) = |rho1|_{C^{0,2}} + |rho2^m|_{C^0} over the evolution's saved times."""
    times = ev.trajectories[0].times
    pts = ev.grid.points.reshape(-1, ev.grid.d)
    if refine > 1:
        step = ev.grid.h / refine
        axes = [np.arange(lo, hi + 0.5 * step, step) for lo, hi in zip(ev.grid.lo, ev.grid.hi)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, ev.grid.d)
    resc = ev.rescaling
    eta = resc.eta
    n1 = exp_coefficient_norms(ev.field, times, pts, 1.0, resc.G, lambda t: eta * resc.G(t))
    n2 = exp_coefficient_norms(ev.field, times, pts, -1.0, resc.G, lambda t: eta * resc.G(t), power=ev.params.m)
    c = np.maximum.accumulate(n1.c02) + np.maximum.accumulate(n2.c0_pow)
    return times, c


@dataclass
class L1FloorReport:
    index: int
    times: np.ndarray
    l1: np.ndarray
    floor: np.ndarray
    slack: float

    @property
    def holds(self) -> bool:
        return bool(np.all(self.l1 >= self.floor * (1.0 - self.slack)))

    def as_dict(self) -> dict[str, Any]:
        ratio = self.l1 / np.maximum(self.floor, 1e-300)
        return {"index": self.index, "holds": self.holds, "min_ratio": float(ratio.min()), "final_l1": float(self.l1[-1])}


def l1_floor(ev: BumpEvolution, i: int, slack: float = 0.01) -> L1FloorReport:
    """|U^i_t|_1 against exp(-C t |U^i|_inf^(m-1)) |U^i_0|_1 along the saved snapshots."""
    tr = ev.trajectories[i]
    times, c = coefficient_constant(ev)
    l1 = tr.l1_norms()
    sup = np.maximum.accumulate(tr.sup_norms())
    floor = np.array([
        l1_lower_bound(float(t - tr.t0), float(l1[0]), float(sup[k]), float(c[k]), ev.params.m)
        for k, t in enumerate(tr.times)
    ])
    return L1FloorReport(i, tr.times, l1, floor, slack)


@dataclass
class SeparationReport:
    applicable: bool
    distance: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.applicable and self.distance >= self.bound * (1.0 - 1e-12)

    def as_dict(self) -> dict[str, Any]:
        return {"applicable": self.applicable, "distance": self.distance, "bound": self.bound, "holds": self.holds}


def l1_separation(ev: BumpEvolution, code_a: Sequence[int], code_b: Sequence[int]) -> SeparationReport:
    """L1 distance at T of two codeword states, checked against the summed single-bump floors."""
    if not ev.certified:
        return SeparationReport(False, float("nan"), float("nan"))
    diff = ev.combine(code_a) - ev.combine(code_b)
    dist = float(np.abs(diff).sum() * ev.grid.cell_volume)
    times, c = coefficient_constant(ev)
    bound = 0.0
    for i, (a, b) in enumerate(zip(code_a, code_b)):
        if bool(a) != bool(b):
            tr = ev.trajectories[i]
            sup = float(tr.sup_norms().max())
            bound += l1_lower_bound(ev.T - ev.t_start, float(tr.l1_norms()[0]), sup, float(c[-1]), ev.params.m)
    return SeparationReport(True, dist, bound)


def separation_scale(ev: BumpEvolution) -> float:
    """delta(eps) = half the minimum pairwise L1 distance between codeword states.

    With disjoint supports two codewords differ by at least one bump, so the
    minimum is the smallest single-bump norm at T.
    """
    if not ev.certified:
        raise ContainmentFailure("separation scale needs certified disjoint supports", ev.describe())
    return 0.5 * float(ev.single_l1().min())


@dataclass
class EntropyRecord:
    eps: list[float]
    counts: list[int]
    deltas: list[float]
    d: int
    m: float
    log2_H: np.ndarray = field(init=False)
    log2_inv_delta: np.ndarray = field(init=False)
    slope: float = field(init=False)
    intercept: float = field(init=False)

    def __post_init__(self) -> None:
        self.log2_H = np.log2(np.asarray(self.counts, dtype=float))
        self.log2_inv_delta = -np.log2(np.asarray(self.deltas, dtype=float))
        self.slope, self.intercept = (float(v) for v in np.polyfit(self.log2_inv_delta, self.log2_H, 1))

    @property
    def theoretical(self) -> float:
        return float(theoretical_exponent(self.d, self.m))

    @property
    def monotone(self) -> bool:
        order = np.argsort(self.eps)[::-1]
        counts = np.asarray(self.counts)[order]
        return bool(np.all(np.diff(counts) >= 0))

    def rows(self) -> list[dict[str, float]]:
        return [
            {"eps": e, "count": int(c), "delta": dl, "H_bits": int(c)}
            for e, c, dl in zip(self.eps, self.counts, self.deltas)
        ]

    def as_dict(self) -> dict[str, Any]:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "theoretical_exponent": self.theoretical,
            "monotone": self.monotone,
            "ladder": self.rows(),
        }


def entropy_estimate(eps_list: Sequence[float], counts: Sequence[int], deltas: Sequence[float], d: int, m: float) -> EntropyRecord:
    """Least-squares slope of log2 H against log2(1/delta), where H = |R_eps| certified bits."""
    if not (len(eps_list) == len(counts) == len(deltas)):
        raise InvalidArgument("eps, counts and deltas must have equal length")
    if len(eps_list) < 4:
        raise InsufficientData(f"need at least 4 ladder points, got {len(eps_list)}")
    if np.any(np.asarray(deltas) <= 0) or np.any(np.asarray(counts) < 1):
        raise InvalidArgument("separation scales must be positive and counts at least 1")
    span = max(eps_list) / min(eps_list)
    if span < 10:
        logger.warning("eps ladder spans a factor %.3g (< 10); the fitted exponent is less reliable", span)
    return EntropyRecord(list(map(float, eps_list)), list(map(int, counts)), list(map(float, deltas)), d, m)


def run_ladder(
    eps_list: Sequence[float],
    field: NoiseField,
    lam: float,
    delta: float,
    params: SolverParams,
    kappa: float = 0.5,
    domain: Box | None = None,
    cells_per_eps: int = CELLS_PER_EPS,
) -> tuple[EntropyRecord, list[BumpEvolution]]:
    domain = field.domain if domain is None else domain
    if domain is None:
        raise InvalidArgument("entropy ladder needs a domain")
    evs = []
    for eps in eps_list:
        bumps = build_bump_grid(eps, domain, kappa, params.m)
        evs.append(evolve_bumps(bumps, field, lam, delta, params, h=eps / cells_per_eps))
    record = entropy_estimate(
        [e.bumps.eps for e in evs], [e.bumps.count for e in evs], [separation_scale(e) for e in evs], evs[0].grid.d, params.m
    )
    return record, evs


__all__ = [
    "BumpGrid",
    "BumpEvolution",
    "ContainmentCertificate",
    "EntropyRecord",
    "TooFewCenters",
    "build_bump_grid",
    "evolve_bumps",
    "superposition_check",
    "l1_floor",
    "l1_separation",
    "separation_scale",
    "entropy_estimate",
    "theoretical_exponent",
    "run_ladder",
    "SpmeError",
]
