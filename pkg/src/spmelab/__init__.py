"""spmelab: numerical laboratory for stochastic porous-medium equations.

Simulates dX = Lap(|X|^(m-1) X) dt + sum_k f_k X o dz^(k) through the
exponential transform, evaluates explicit hole-filling and finite-speed
bounds, checks measured supports against them, and runs the bump-codeword
entropy experiment.
"""
from .barriers import Barrier, certify_domination, certify_supersolution, eval_barrier_space, eval_barrier_time
from .bounds import (
    c_det,
    det_hole_bound,
    general_bounds,
    homog_hole_bound,
    l1_lower_bound,
    propagation_bound,
    propagation_radius,
    small_ball_bound,
    small_ball_constant,
    small_time_bound,
    small_time_constant,
)
from .entropy import build_bump_grid, entropy_estimate, evolve_bumps, theoretical_exponent
from .errors import SpmeError
from .grid import Grid, Trajectory
from .noise_field import Ball, Box, NoiseField
from .oracle import BarenblattProfile, barenblatt_eval
from .signals import Signal, gen_brownian, gen_fbm
from .solver import SolverParams, solve_general, solve_spme
from .support import SupportRecord, containment_margin, vanish_radius
from .transforms import attractor_rescaling, homogeneous_solution_map, time_change_homogeneous

__version__ = "0.1.0"

__all__ = [
    "Ball",
    "BarenblattProfile",
    "Barrier",
    "Box",
    "Grid",
    "NoiseField",
    "Signal",
    "SolverParams",
    "SpmeError",
    "SupportRecord",
    "Trajectory",
    "attractor_rescaling",
    "barenblatt_eval",
    "build_bump_grid",
    "c_det",
    "certify_domination",
    "certify_supersolution",
    "containment_margin",
    "det_hole_bound",
    "entropy_estimate",
    "eval_barrier_space",
    "eval_barrier_time",
    "evolve_bumps",
    "gen_brownian",
    "gen_fbm",
    "general_bounds",
    "homog_hole_bound",
    "homogeneous_solution_map",
    "l1_lower_bound",
    "propagation_bound",
    "propagation_radius",
    "small_ball_bound",
    "small_ball_constant",
    "small_time_bound",
    "small_time_constant",
    "solve_general",
    "solve_spme",
    "theoretical_exponent",
    "time_change_homogeneous",
    "vanish_radius",
]
