"""Canonical experiments.  Each ``run_*`` takes a validated config and returns a Report."""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .. import signals as sg
from ..barriers import Barrier, certify_domination, certify_supersolution, space_frozen_constant
from ..bounds import (
    det_hole_bound,
    effective_c_det,
    exp_coefficient_norms,
    general_bounds,
    homog_hole_bound,
    perturbed_c_det,
    propagation_bound,
    propagation_radius,
    propagation_radius_constant,
    small_ball_bound,
    small_time_bound,
)
from ..entropy import (
    build_bump_grid,
    entropy_estimate,
    evolve_bumps,
    l1_floor,
    l1_separation,
    separation_scale,
    superposition_check,
    theoretical_exponent,
)
from ..errors import DomainMarginError, InvalidArgument
from ..grid import Grid, Trajectory
from ..noise_field import Ball, Box, NoiseField
from ..oracle import BarenblattProfile, TestFunction, barenblatt_convergence, barenblatt_eval, barenblatt_is_weak_solution_check
from ..solver import SolverParams, default_delta_reg, solve_general, solve_spme
from ..support import SupportRecord, containment_margin_fields, support_of
from ..transforms import (
    AttractorRescaling,
    homogeneous_solution_map,
    invert_time_change,
    spatial_transform,
    time_change_homogeneous,
)
from .config import ExperimentConfig, SignalSpec

logger = logging.getLogger(__name__)

PASS, VIOLATION, INCONCLUSIVE = "pass", "violation", "inconclusive"
_RANK = {PASS: 0, INCONCLUSIVE: 1, VIOLATION: 2}


def worst_status(statuses: Sequence[str]) -> str:
    return max(statuses, key=_RANK.__getitem__, default=PASS)


@dataclass
class Table:
    columns: list[str]
    rows: list[list[Any]]


@dataclass
class Report:
    kind: str
    status: str
    body: dict[str, Any]
    tables: dict[str, Table] = field(default_factory=dict)
    curves: dict[str, dict[str, Any]] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)


# -- builders --------------------------------------------------------------------


def build_signal(spec: SignalSpec, seed: int, horizon: float, n_channels: int = 1, sign: int = 1) -> sg.Signal:
    n = max(2, int(math.ceil(horizon / spec.dt - 1e-9)))
    seeds = [seed] if n_channels == 1 else sg.spawn_seeds(seed, n_channels)

    def one(s: int) -> sg.Signal:
        if spec.kind == "brownian":
            return sg.gen_brownian(n, spec.dt, s, sign)
        if spec.kind == "fbm":
            return sg.gen_fbm(spec.hurst, n, spec.dt, s, sign)
        if spec.kind == "linear-drift":
            return sg.linear_drift(spec.rate, n, spec.dt, sign)
        return sg.constant_zero(n, spec.dt, sign)

    parts = [one(s) for s in seeds]
    return parts[0] if n_channels == 1 else sg.stack(parts)


def build_field(cfg: ExperimentConfig, seed: int, domain: Box, horizon: float, sign: int = 1) -> NoiseField:
    sig = build_signal(cfg.signal, seed, horizon, len(cfg.coefficients), sign)
    return NoiseField.from_strings(cfg.coefficients, sig, domain)


def solver_params(cfg: ExperimentConfig, h: float, dt: float | None = None) -> SolverParams:
    s = cfg.solver
    return SolverParams(
        cfg.m,
        dt if dt is not None else (s.dt if s.dt is not None else h * h),
        s.delta_reg,
        s.newton_tol,
        s.newton_max,
        0.0 if cfg.validate_.force_threshold_zero else s.support_threshold,
        s.save_every,
    )


def initial_data(spec, grid: Grid, m: float) -> np.ndarray:
    pts = grid.points
    c = np.asarray(spec.center, dtype=float)
    if len(c) != grid.d:
        raise InvalidArgument("initial-data centre has the wrong dimension")
    if spec.kind == "zero":
        return np.zeros(grid.shape)
    if spec.kind == "bump":
        return np.where(np.linalg.norm(pts - c, axis=-1) <= spec.radius, spec.mass, 0.0)
    prof = BarenblattProfile(m, grid.d, spec.mass, spec.t0, tuple(c))
    return barenblatt_eval(spec.t0, pts, prof)


def _map(fn: Callable[[Any], Any], items: Sequence[Any], workers: int) -> list[Any]:
    """Ordered map; a bounded process pool when workers > 1."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def _tau(traj: Trajectory) -> float:
    return float(traj.meta.get("params", {}).get("support_threshold") or 0.0)


def _thin(times: np.ndarray, n: int) -> np.ndarray:
    if len(times) <= n:
        return times
    idx = np.unique(np.linspace(0, len(times) - 1, n).round().astype(int))
    return times[idx]


# -- simulate ----------------------------------------------------------------------


def _simulate_one(args) -> dict[str, Any]:
    cfg, seed = args
    grid = Grid.box(cfg.grid.lo, cfg.grid.hi, cfg.grid.h)
    domain = Box(tuple(cfg.grid.lo), tuple(cfg.grid.hi))
    t_end = cfg.propagation.t_end
    field_ = build_field(cfg, seed, domain, t_end)
    x0 = initial_data(cfg.propagation.initial, grid, cfg.m)
    X = solve_spme(x0, field_, cfg.lam, 0.0, grid, solver_params(cfg, grid.h), t_end)
    rec = SupportRecord(X, _tau(X))
    return {
        "seed": seed,
        "tau": rec.tau,
        "sup_norms": X.sup_norms().tolist(),
        "l1_norms": X.l1_norms().tolist(),
        "times": X.times.tolist(),
        "fronts": rec.fronts(),
        "newton_iterations_max": X.meta["newton_iterations_max"],
    }


def run_simulate(cfg: ExperimentConfig) -> Report:
    results = _map(_simulate_one, [(cfg, s) for s in cfg.signal.seeds], cfg.workers)
    tables = {}
    for r in results:
        cols = list(r["fronts"][0].keys())
        tables[f"fronts_seed{r['seed']}"] = Table(cols, [[row[c] for c in cols] for row in r.pop("fronts")])
    status = INCONCLUSIVE if any(r["tau"] == 0 for r in results) else PASS
    return Report("simulate", status, {"runs": results}, tables)


# -- hole filling ------------------------------------------------------------------


def _boundary_points(center: np.ndarray, R: float, n: int = 256) -> np.ndarray:
    if len(center) == 1:
        return np.array([[center[0] - R], [center[0] + R]])
    a = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    return center + R * np.stack([np.cos(a), np.sin(a)], axis=-1)


def check_bound(rec: SupportRecord, xi0, bound, slack: float) -> dict[str, Any]:
    """vanish_radius(t) >= R*(t) - slack on snapshots up to the bound's valid horizon."""
    ts = rec.traj.times[rec.traj.times <= bound.valid_until * (1 + 1e-12)]
    measured = np.array([rec.vanish_radius(xi0, t) for t in ts])
    required = np.atleast_1d(bound.radius(ts)) - slack
    bad = np.flatnonzero(measured < required)
    return {
        "bound": bound.as_dict(),
        "n_checked": int(len(ts)),
        "violations": int(bad.size),
        "first_violation": None if not bad.size else {"t": float(ts[bad[0]]), "measured": float(measured[bad[0]]), "required": float(required[bad[0]])},
        "min_margin": float(np.min(measured - required)) if len(ts) else None,
        "_curve": (ts, np.atleast_1d(bound.radius(ts))),
    }


def _hole_fill_one(args) -> dict[str, Any]:
    cfg, seed = args
    hf = cfg.hole_fill
    m, h, lam = cfg.m, cfg.grid.h, cfg.lam
    c = np.asarray(hf.center, dtype=float)
    d = len(c)
    grid = Grid.on_ball(c, hf.R, h)
    cd = effective_c_det(m, d)
    T_det = hf.R ** 2 * cd / hf.H ** (m - 1.0)
    window_end = hf.window_factor * T_det
    t_end = hf.t_end if hf.t_end is not None else window_end
    field_ = build_field(cfg, seed, Box(tuple(c - hf.R), tuple(c + hf.R)), max(t_end, window_end))
    params = solver_params(cfg, h)
    t0 = time.perf_counter()
    X = solve_spme(0.0, field_, lam, hf.H, grid, params, t_end)
    solve_time = time.perf_counter() - t0
    tau = _tau(X)
    rec = SupportRecord(X, tau)
    checks: dict[str, Any] = {}
    skipped: dict[str, str] = {}
    window = (0.0, window_end)
    for kind in hf.bounds:
        if kind == "deterministic":
            if not (field_.is_zero and lam == 0):
                skipped[kind] = "requires zero noise"
                continue
            b = det_hole_bound(hf.R, hf.H, m, d)
        elif kind == "homogeneous":
            if not field_.is_spatially_constant:
                skipped[kind] = "requires spatially constant coefficients"
                continue
            tc = time_change_homogeneous(field_, c, m, times=field_.window_times(window), lam=lam)
            nu = field_.frozen_at(c)(tc.times) - lam * tc.times
            b = homog_hole_bound(hf.R, hf.H * float(np.exp(nu).max()), m, tc, d)
        elif lam != 0:
            skipped[kind] = "stochastic bounds are stated without drift"
            continue
        elif kind == "small-ball":
            ts = field_.window_times(window)
            mu_b, _, _ = field_.sample(ts, _boundary_points(c, hf.R))
            b = small_ball_bound(hf.R, c, field_, hf.H * float(np.exp(mu_b).max()), m, d, window=window, refine=hf.refine)
        else:
            b = small_time_bound(hf.R, c, field_, hf.H, m, d, window=window, refine=hf.refine)
        checks[kind] = check_bound(rec, c, b, 2.0 * h)

    centre = np.argmin(grid.distance_from(c))
    centre_idx = np.unravel_index(centre, grid.shape)
    hit = np.flatnonzero(np.abs(X.values[(slice(None),) + centre_idx]) > tau)
    fill_time = float(X.times[hit[0]]) if hit.size else None
    result: dict[str, Any] = {"seed": seed, "tau": tau, "h": h, "T_det": T_det, "t_end": t_end, "centre_fill_time": fill_time}
    verdicts = [c_["violations"] == 0 for c_ in checks.values()]
    if "deterministic" in checks:
        rate = math.sqrt(hf.H ** (m - 1.0) / cd)
        slack_t = X.meta["dt_effective"] + 2.0 * h * 2.0 * math.sqrt(T_det) / rate
        ok = fill_time is None or fill_time >= T_det - slack_t
        if fill_time is None and t_end < T_det:
            ok = False
        result["fill_time_check"] = {"required": T_det - slack_t, "passed": ok}
        verdicts.append(ok)
        barrier = Barrier("space-frozen", tuple(c), T_det, space_frozen_constant(m, d), m)
        cert = certify_supersolution(barrier, None, h, hf.R, _thin(X.times, 60), tolerance="barrier")
        dom = certify_domination(X, barrier, hf.R)
        result["barrier"] = {"constant": barrier.constant, "supersolution": cert.as_dict(), "domination": dom.as_dict()}
        verdicts.append(cert.passed)
        if dom.applicable:
            verdicts.append(dom.dominated)
    result["checks"] = checks
    result["skipped"] = skipped
    result["status"] = INCONCLUSIVE if tau == 0 else (PASS if all(verdicts) else VIOLATION)
    result["timings"] = {"solve": solve_time}
    result["_vanish"] = (X.times, np.array([rec.vanish_radius(c, t) for t in X.times]))
    return result


def _strip_private(d: dict[str, Any]) -> dict[str, Any]:
    return {k: (_strip_private(v) if isinstance(v, dict) else v) for k, v in d.items() if not k.startswith("_")}


def run_hole_fill(cfg: ExperimentConfig) -> Report:
    with perturbed_c_det(cfg.validate_.c_det_scale):
        results = _map(_hole_fill_one, [(cfg, s) for s in cfg.signal.seeds], cfg.workers)
    tables, curves, timings = {}, {}, {}
    for r in results:
        ts, vr = r["_vanish"]
        kinds = list(r["checks"].keys())
        sched = {k: r["checks"][k]["_curve"] for k in kinds}
        rows = []
        for j, t in enumerate(ts):
            row = [float(t), float(vr[j])]
            for k in kinds:
                kt, kr = sched[k]
                row.append(float(kr[j]) if j < len(kt) else None)
            rows.append(row)
        tables[f"fronts_seed{r['seed']}"] = Table(["t", "vanish_radius"] + [f"R_{k}" for k in kinds], rows)
        curves[f"hole_fill_seed{r['seed']}"] = {
            "x": ts.tolist(),
            "series": {"measured": vr.tolist(), **{k: [float(v) for v in sched[k][1]] for k in kinds}},
            "xlabel": "t",
            "ylabel": "vanishing radius",
        }
        timings[f"seed{r['seed']}"] = r.pop("timings")["solve"]
    body = {"runs": [_strip_private(r) for r in results], "c_det_scale": cfg.validate_.c_det_scale}
    summary = [[r["seed"], r["status"], r["centre_fill_time"]] + [r["checks"][k]["violations"] for k in r["checks"]] for r in results]
    kinds = list(results[0]["checks"].keys()) if results else []
    tables["summary"] = Table(["seed", "status", "centre_fill_time"] + [f"violations_{k}" for k in kinds], summary)
    return Report("hole-fill", worst_status([r["status"] for r in results]), body, tables, curves, timings)


# -- propagation -------------------------------------------------------------------


def _propagation_one(args) -> dict[str, Any]:
    cfg, seed = args
    ps = cfg.propagation
    m, lam = cfg.m, cfg.lam
    grid = Grid.box(cfg.grid.lo, cfg.grid.hi, cfg.grid.h)
    d = grid.d
    field_ = build_field(cfg, seed, Box(tuple(cfg.grid.lo), tuple(cfg.grid.hi)), ps.t_end)
    x0 = initial_data(ps.initial, grid, m)
    params = solver_params(cfg, grid.h)
    t0 = time.perf_counter()
    X = solve_spme(x0, field_, lam, 0.0, grid, params, ps.t_end)
    solve_time = time.perf_counter() - t0
    tau = _tau(X)
    rec = SupportRecord(X, tau)
    touch = next((k for k in range(len(X)) if rec.touches_boundary(k)), None)
    t_touch = float(X.times[touch]) if touch is not None else None
    limit = len(X) if touch is None else touch
    slack = 2.0 * grid.h
    out: dict[str, Any] = {"seed": seed, "tau": tau, "boundary_touch_time": t_touch, "checks": []}
    violations = 0
    if not rec.masks[0].any():
        empty = all(not rec.masks[k].any() for k in range(len(X)))
        out["empty_support_preserved"] = empty
        out["status"] = PASS if empty else VIOLATION
        out["timings"] = {"solve": solve_time}
        out["_fronts"] = (rec.fronts(), None)
        return out
    Y = spatial_transform(X, field_, "forward", lam)
    H_y = float(np.abs(Y.values[:limit]).max())
    H_x = float(np.abs(X.values[:limit]).max())
    radius_curve = None
    for s in ps.s_values:
        ks = int(np.searchsorted(X.times, s - 1e-12))
        if ks >= limit:
            continue
        s_t = float(X.times[ks])
        mask_s = rec.masks[ks]
        if not mask_s.any():
            continue
        for hh in ps.h_values:
            entry: dict[str, Any] = {"s": s_t, "h": hh, "kind": "propagation"}
            try:
                pb = propagation_bound(mask_s, grid, hh, field_, H_y, m, s=s_t, window_end=ps.t_end, refine=ps.refine)
            except DomainMarginError as exc:
                entry["skipped"] = str(exc)
                out["checks"].append(entry)
                continue
            worst, bad = math.inf, 0
            for k in range(ks + 1, limit):
                if X.times[k] - s_t > pb.horizon * (1 + 1e-12):
                    break
                mg = containment_margin_fields(X.values[ks], X.values[k], grid, hh, tau)
                worst = min(worst, mg)
                bad += mg < -slack
            entry.update({"bound": pb.as_dict(), "min_margin": None if worst == math.inf else worst, "violations": int(bad)})
            violations += bad
            out["checks"].append(entry)
        if lam != 0:
            out["checks"].append({"s": s_t, "kind": "radius", "skipped": "radius schedule is stated without drift"})
            continue
        cbar = propagation_radius_constant(field_, grid, m, s_t, ps.t_end, ps.refine)
        worst, bad = math.inf, 0
        radii = []
        for k in range(ks + 1, limit):
            r = propagation_radius(float(X.times[k] - s_t), H_x, m, d, cbar)
            radii.append((float(X.times[k]), r))
            mg = containment_margin_fields(X.values[ks], X.values[k], grid, r, tau)
            worst = min(worst, mg)
            bad += mg < -slack
        out["checks"].append(
            {"s": s_t, "kind": "radius", "H": H_x, "min_margin": None if worst == math.inf else worst, "violations": int(bad)}
        )
        violations += bad
        if radius_curve is None:
            radius_curve = (s_t, mask_s, radii)
    out["violations"] = int(violations)
    out["status"] = INCONCLUSIVE if tau == 0 else (PASS if violations == 0 else VIOLATION)
    out["timings"] = {"solve": solve_time}
    out["_fronts"] = (rec.fronts(), radius_curve)
    return out


def run_propagation(cfg: ExperimentConfig) -> Report:
    with perturbed_c_det(cfg.validate_.c_det_scale):
        results = _map(_propagation_one, [(cfg, s) for s in cfg.signal.seeds], cfg.workers)
    grid_axes = Grid.box(cfg.grid.lo, cfg.grid.hi, cfg.grid.h).axes
    tables, curves, timings = {}, {}, {}
    for r in results:
        fronts, radius_curve = r.pop("_fronts")
        cols = list(fronts[0].keys())
        extra: dict[float, tuple[float, float]] = {}
        if radius_curve is not None and len(grid_axes) == 1:
            s_t, mask, radii = radius_curve
            idx = np.flatnonzero(mask)
            lo, hi = grid_axes[0][idx[0]], grid_axes[0][idx[-1]]
            extra = {t: (lo - rad, hi + rad) for t, rad in radii}
            cols = cols + ["bound_x_min", "bound_x_max"]
        rows = []
        for row in fronts:
            b = extra.get(row["t"])
            rows.append([row[c] for c in cols if not c.startswith("bound_")] + ([b[0], b[1]] if b else ([None, None] if extra else [])))
        tables[f"fronts_seed{r['seed']}"] = Table(cols, rows)
        if extra:
            ts = [row["t"] for row in fronts if row["t"] in extra]
            curves[f"fronts_seed{r['seed']}"] = {
                "x": ts,
                "series": {
                    "x_max": [next(rw["x_max"] for rw in fronts if rw["t"] == t) for t in ts],
                    "bound_x_max": [extra[t][1] for t in ts],
                },
                "xlabel": "t",
                "ylabel": "front position",
            }
        timings[f"seed{r['seed']}"] = r.pop("timings")["solve"]
    status = worst_status([r["status"] for r in results])
    return Report("propagation", status, {"runs": results}, tables, curves, timings)


# -- entropy -------------------------------------------------------------------------


def _entropy_one(args) -> dict[str, Any]:
    cfg, seed = args
    es = cfg.entropy
    m = cfg.m
    domain = Box(tuple(cfg.grid.lo), tuple(cfg.grid.hi))
    resc = AttractorRescaling(es.delta, cfg.lam, m)
    t_start = 1e-3 * resc.T
    field_ = build_field(cfg, seed, domain, abs(resc.G(t_start)) + cfg.signal.dt, sign=-1)
    dt = (resc.T - t_start) / es.steps
    params = SolverParams(m, dt, cfg.solver.delta_reg, cfg.solver.newton_tol, cfg.solver.newton_max,
                          cfg.solver.support_threshold, max(1, es.steps // 40))
    evs, rows, checks = [], [], []
    t0 = time.perf_counter()
    for eps in es.eps:
        bumps = build_bump_grid(eps, domain, es.kappa, m)
        ev = evolve_bumps(bumps, field_, cfg.lam, es.delta, params, h=eps / es.cells_per_eps)
        evs.append(ev)
        floor = l1_floor(ev, 0)
        code_a = [1] * ev.bumps.count
        code_b = [1] + [0] * (ev.bumps.count - 1)
        sep = l1_separation(ev, code_a, code_b)
        entry = {"eps": eps, "evolution": ev.describe(), "l1_floor": floor.as_dict(), "separation": sep.as_dict()}
        ok = floor.holds and sep.holds
        for j in range(es.superposition_checks):
            code = [(i + j) % 2 for i in range(ev.bumps.count)]
            sp = superposition_check(ev, code)
            entry.setdefault("superposition", []).append(sp.as_dict())
            ok = ok and sp.passed
        entry["passed"] = ok
        checks.append(entry)
        rows.append([eps, ev.bumps.count, separation_scale(ev), ev.bumps.count, ev.bumps.kappa])
    rec = entropy_estimate([r[0] for r in rows], [r[1] for r in rows], [r[2] for r in rows], domain.d, m)
    target = float(theoretical_exponent(domain.d, m)) - 0.1
    ok = rec.slope >= target and rec.monotone and all(c["passed"] for c in checks)
    return {
        "seed": seed,
        "noise": cfg.signal.kind,
        "fit": rec.as_dict(),
        "slope": rec.slope,
        "theoretical_exponent": rec.theoretical,
        "slope_threshold": target,
        "checks": checks,
        "status": PASS if ok else VIOLATION,
        "_rows": rows,
        "timings": {"solve": time.perf_counter() - t0},
    }


def run_entropy(cfg: ExperimentConfig) -> Report:
    results = _map(_entropy_one, [(cfg, s) for s in cfg.signal.seeds], cfg.workers)
    tables, timings = {}, {}
    for r in results:
        tables[f"entropy_seed{r['seed']}"] = Table(["eps", "count", "delta", "H_bits", "kappa"], r.pop("_rows"))
        timings[f"seed{r['seed']}"] = r.pop("timings")["solve"]
    return Report("entropy", worst_status([r["status"] for r in results]), {"runs": results}, tables, {}, timings)


# -- bounds only -----------------------------------------------------------------------


def _bounds_one(args) -> dict[str, Any]:
    cfg, seed = args
    hf = cfg.hole_fill
    m = cfg.m
    c = np.asarray(hf.center, dtype=float)
    d = len(c)
    T_det = hf.R ** 2 * effective_c_det(m, d) / hf.H ** (m - 1.0)
    window = (0.0, hf.window_factor * T_det)
    field_ = build_field(cfg, seed, Box(tuple(c - hf.R), tuple(c + hf.R)), window[1])
    out: dict[str, Any] = {"seed": seed, "bounds": {}}
    out["bounds"]["deterministic"] = det_hole_bound(hf.R, hf.H, m, d).as_dict()
    ts = field_.window_times(window)
    if field_.is_spatially_constant:
        tc = time_change_homogeneous(field_, c, m, times=ts)
        out["bounds"]["homogeneous"] = homog_hole_bound(hf.R, hf.H, m, tc, d).as_dict()
    mu_b, _, _ = field_.sample(ts, _boundary_points(c, hf.R))
    out["bounds"]["small-ball"] = small_ball_bound(
        hf.R, c, field_, hf.H * float(np.exp(mu_b).max()), m, d, window=window, refine=hf.refine
    ).as_dict()
    out["bounds"]["small-time"] = small_time_bound(hf.R, c, field_, hf.H, m, d, window=window, refine=hf.refine).as_dict()
    pts = Ball(tuple(c), hf.R).lattice(hf.R / 16.0)
    n1 = exp_coefficient_norms(field_, ts, pts, 1.0, lambda t: t, lambda t: 0.0 * t)
    n2 = exp_coefficient_norms(field_, ts, pts, -1.0, lambda t: t, lambda t: 0.0 * t)
    gb = general_bounds(n1.upto("c0"), n2.upto("c02"), hf.R, hf.H, m, d, window[1])
    out["bounds"]["general"] = gb.hole.as_dict()
    return out


def run_bounds_only(cfg: ExperimentConfig) -> Report:
    with perturbed_c_det(cfg.validate_.c_det_scale):
        results = _map(_bounds_one, [(cfg, s) for s in cfg.signal.seeds], cfg.workers)
    rows = []
    for r in results:
        for kind, b in r["bounds"].items():
            rows.append([r["seed"], kind, b["T_star"], b["clamped"], b["modulation"], b["C_det"]])
    tables = {"bounds": Table(["seed", "kind", "T_star", "clamped", "modulation", "C_det"], rows)}
    return Report("bounds-only", PASS, {"runs": results}, tables)


# -- validate -----------------------------------------------------------------------------


def suite_oracle(cfg: ExperimentConfig) -> dict[str, Any]:
    prof = BarenblattProfile(2.0, 1, 1.0 / 12.0, 1.0)
    ladder = [1 / 64, 1 / 128, 1 / 256]
    conv = barenblatt_convergence(prof, (-2.0, 2.0), ladder, 2.0)
    test = TestFunction(1.5, 0.4, (0.0,), 1.5)
    weak = barenblatt_is_weak_solution_check(prof, test, (-2.0, 2.0), ladder)
    decreasing = all(a > b for a, b in zip(conv.errors, conv.errors[1:]))
    core_second = all(3.0 <= r <= 5.0 for r in conv.core_ratios)
    weak_ok = all(3.2 <= r <= 4.8 for r in weak.ratios)
    passed = decreasing and conv.errors[-1] <= 0.05 and core_second and weak_ok
    return {"passed": passed, "convergence": conv.as_dict(), "weak_residual": {"residuals": weak.residuals, "ratios": weak.ratios}}


def comparison_pair(seed: int, h: float = 1.0 / 64, t_end: float = 0.05) -> dict[str, Any]:
    """Solve two ordered initial data under a shared random noise field; report the worst inversion."""
    rng = np.random.default_rng(seed)
    grid = Grid.box(-1.0, 1.0, h)
    x = grid.points[..., 0]
    kinds = ["brownian", "fbm", "zero"]
    kind = kinds[seed % 3]
    n = int(math.ceil(t_end / (h * h)))
    if kind == "brownian":
        sig = sg.gen_brownian(n, h * h, seed)
    elif kind == "fbm":
        sig = sg.gen_fbm(float(rng.uniform(0.2, 0.8)), n, h * h, seed)
    else:
        sig = sg.constant_zero(n, h * h)
    amp = float(rng.uniform(0.0, 1.0))
    field_ = NoiseField.from_strings([f"{amp:.6f}*sin(pi*x)"], sig, Box((-1.0,), (1.0,)))

    def blob() -> np.ndarray:
        c, w, a = rng.uniform(-0.5, 0.5), rng.uniform(0.1, 0.4), rng.uniform(0.2, 1.0)
        return a * np.maximum(1.0 - ((x - c) / w) ** 2, 0.0)

    lower = blob()
    upper = lower + blob() + rng.uniform(0.0, 0.3) * (np.abs(x) < rng.uniform(0.1, 0.8))
    m = float(rng.choice([1.5, 2.0, 3.0]))
    scale = float(np.abs(upper).max())
    # Both runs must solve the same regularised equation, so the
    # scale-dependent regularisation is pinned from the larger datum.
    params = SolverParams(m, h * h, delta_reg=default_delta_reg(scale, m))
    a = solve_spme(lower, field_, 0.0, 0.0, grid, params, t_end)
    b = solve_spme(upper, field_, 0.0, 0.0, grid, params, t_end)
    worst = float((a.values - b.values).max())
    return {"seed": seed, "m": m, "noise": kind, "max_inversion": worst, "tolerance": params.eps_scheme * scale}


def suite_comparison(cfg: ExperimentConfig) -> dict[str, Any]:
    pairs = _map(comparison_pair, list(range(cfg.validate_.comparison_pairs)), cfg.workers)
    passed = all(p["max_inversion"] <= p["tolerance"] for p in pairs)
    return {"passed": passed, "pairs": pairs}


def suite_transforms(cfg: ExperimentConfig) -> dict[str, Any]:
    grid = Grid.box(-1.0, 1.0, 1.0 / 32)
    sig = sg.gen_brownian(256, 1.0 / 256, 11)
    field_ = NoiseField.from_strings(["sin(pi*x)"], sig, Box((-1.0,), (1.0,)))
    vals = np.random.default_rng(3).uniform(0, 1, (5,) + grid.shape)
    X = Trajectory(grid, np.linspace(0, 1, 5), vals)
    back = spatial_transform(spatial_transform(X, field_, "forward", 0.3), field_, "inverse", 0.3)
    err_space = float(np.abs(back.values - X.values).max())
    const = NoiseField.from_strings(["0.5"], sig, Box((-1.0,), (1.0,)))
    tc = time_change_homogeneous(const, (0.0,), 2.0)
    ts = np.linspace(0, 1, 37)
    err_clock = float(np.abs(invert_time_change(tc, tc.forward(ts)) - ts).max())
    prof = BarenblattProfile(2.0, 1, 1.0 / 12.0, 1.0)
    g = Grid.box(-2.0, 2.0, 1.0 / 32)
    x0 = barenblatt_eval(1.0, g.points[..., 0], prof)
    short = NoiseField.from_strings(["0.5"], sg.gen_brownian(64, 1.0 / 256, 5), Box((-2.0,), (2.0,)))
    p = SolverParams(2.0, 1.0 / 1024)
    Xs = solve_spme(x0, short, 0.0, None, g, p, 0.25)
    tcs = time_change_homogeneous(short, (0.0,), 2.0)
    u = solve_general(None, None, x0, None, g, p, 1.0 + tcs.max_value * (1 + 1e-7), t0=1.0)
    Xm = homogeneous_solution_map(u, short, 2.0, times=Xs.times)
    err_map = float((np.abs(Xs.values - Xm.values).max(axis=1) / np.abs(Xm.values).max(axis=1)).max())
    passed = err_space <= 1e-12 and err_clock <= 1e-12 and err_map <= 0.02
    return {"passed": passed, "spatial_roundtrip": err_space, "clock_roundtrip": err_clock, "homogeneous_map": err_map}


def suite_fbm(cfg: ExperimentConfig, n_paths: int = 4000) -> dict[str, Any]:
    out = {}
    passed = True
    n, dt = 16, 1.0 / 16
    for hurst in (0.3, 0.5, 0.7):
        paths = np.array([sg.gen_fbm(hurst, n, dt, 1000 + k).values[0, 1:] for k in range(n_paths)])
        emp = paths.T @ paths / n_paths
        exact = sg.fbm_covariance(hurst, dt * np.arange(1, n + 1))
        err = float(np.abs(emp - exact).max())
        tol = 6.0 * float(np.sqrt(2.0 / n_paths)) * float(np.diag(exact).max())
        out[str(hurst)] = {"max_abs_error": err, "tolerance": tol}
        passed = passed and err <= tol
    return {"passed": passed, "covariance": out}


def suite_hole_fill(cfg: ExperimentConfig) -> dict[str, Any]:
    sub = cfg.model_copy(
        update={
            "kind": "hole-fill",
            "coefficients": ["0"],
            "grid": cfg.grid.model_copy(update={"lo": [-1.0], "hi": [1.0], "h": 1.0 / 32}),
            "signal": cfg.signal.model_copy(update={"kind": "zero", "seeds": [0]}),
            "hole_fill": cfg.hole_fill.model_copy(update={"R": 1.0, "H": 1.0, "center": [0.0], "bounds": ["deterministic"]}),
            "m": 2.0,
            "lam": 0.0,
            "workers": 1,
        }
    )
    rep = run_hole_fill(sub)
    run = rep.body["runs"][0]
    return {
        "passed": rep.status == PASS,
        "inconclusive": rep.status == INCONCLUSIVE,
        "status": rep.status,
        "c_det_scale": cfg.validate_.c_det_scale,
        "barrier": run.get("barrier"),
        "fill_time_check": run.get("fill_time_check"),
        "violations": {k: v["violations"] for k, v in run["checks"].items()},
    }


def suite_barrier(cfg: ExperimentConfig) -> dict[str, Any]:
    out = []
    passed = True
    with perturbed_c_det(cfg.validate_.c_det_scale):
        for h in (1 / 64, 1 / 128, 1 / 256):
            b = Barrier("space-frozen", (0.0,), 1.0, space_frozen_constant(2.0, 1), 2.0)
            ts = np.linspace(0.0, 1.0, 41)
            ok = certify_supersolution(b, None, h, 0.5, ts)
            bad = certify_supersolution(b.scaled(10.0), None, h, 0.5, ts)
            out.append({"h": h, "min_residual": ok.min_residual, "tolerance": ok.tolerance, "canary_violations": len(bad.failing)})
            passed = passed and ok.passed and not bad.passed
    return {"passed": passed, "grids": out}


SUITES = {
    "oracle": suite_oracle,
    "comparison": suite_comparison,
    "transforms": suite_transforms,
    "fbm": suite_fbm,
    "hole-fill": suite_hole_fill,
    "barrier": suite_barrier,
}


def run_validate(cfg: ExperimentConfig) -> Report:
    body: dict[str, Any] = {"suites": {}}
    timings = {}
    statuses = []
    for name in cfg.validate_.suites:
        t0 = time.perf_counter()
        res = SUITES[name](cfg)
        timings[name] = time.perf_counter() - t0
        body["suites"][name] = res
        statuses.append(INCONCLUSIVE if res.get("inconclusive") else (PASS if res["passed"] else VIOLATION))
    rows = [[n, s] for n, s in zip(cfg.validate_.suites, statuses)]
    return Report("validate", worst_status(statuses), body, {"suites": Table(["suite", "status"], rows)}, {}, timings)


RUNNERS: dict[str, Callable[[ExperimentConfig], Report]] = {
    "simulate": run_simulate,
    "hole-fill": run_hole_fill,
    "propagation": run_propagation,
    "entropy": run_entropy,
    "bounds-only": run_bounds_only,
    "validate": run_validate,
}


def run_experiment(cfg: ExperimentConfig) -> Report:
    return RUNNERS[cfg.kind](cfg)
