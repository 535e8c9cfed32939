"""
Service layer: drives the geometry core for catalog, check and solve requests.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd

from immerse.geometry.alignment import Alignment, rigid_alignment
from immerse.geometry.compatibility import ResidualReport, full_report
from immerse.geometry.homogeneous_models import realize_target
from immerse.geometry.immersion_solver import (
    GATE_STRIDE,
    ImmersionSolution,
    LambdaField,
    holonomy_scan,
    solve_grid,
)
from immerse.models.models import RunConfig
from immerse.store.catalog import MODEL_FAMILIES, STRUCTURE_VARIANTS, find_family
from immerse.store.fixtures import ImmersionProblem
from immerse.store.problem import build_problem

logger = logging.getLogger(__name__)


@dataclass
class CheckOutcome:
    problem: ImmersionProblem
    report: ResidualReport
    tol: float

    @property
    def passed(self) -> bool:
        return self.report.passed(self.tol)


@dataclass
class SolveOutcome:
    problem: ImmersionProblem
    solution: ImmersionSolution
    failed: List[str]
    alignment: Optional[Alignment] = None

    @property
    def passed(self) -> bool:
        return not self.failed


def obtain_catalog(family: str = None) -> dict:
    """
    Retrieves the model families and G-structure variants, optionally one family only.
    """
    logger.debug(f"Obtaining catalog for family={family}.")
    models = MODEL_FAMILIES if family is None else [find_family(family)]
    return {"models": models, "structures": STRUCTURE_VARIANTS}


def obtain_problem(config: RunConfig, base_dir: Optional[Path] = None) -> ImmersionProblem:
    """
    Assembles the problem a run configuration describes.
    """
    logger.debug(f"Obtaining problem for run {config.name!r}.")
    return build_problem(config, base_dir)


def obtain_check(config: RunConfig, base_dir: Optional[Path] = None) -> CheckOutcome:
    """
    Evaluates every compatibility family over the grid of the run.
    """
    logger.debug(f"Obtaining compatibility report for run {config.name!r}.")
    problem = obtain_problem(config, base_dir)
    report = full_report(problem.model, problem.data, problem.spec, problem.grid,
                         samples_per_node=config.samples_per_node, seed=config.seed)
    return CheckOutcome(problem, report, config.tolerances.check)


def obtain_solve(config: RunConfig, base_dir: Optional[Path] = None, holonomy: bool = True) -> SolveOutcome:
    """
    Reconstructs the immersion, verifies it and aligns it with the exact one when known.
    """
    logger.debug(f"Obtaining solution for run {config.name!r}.")
    problem = obtain_problem(config, base_dir)
    target = realize_target(problem.model)
    solution = solve_grid(problem.data, problem.frame, target, problem.grid, problem.spec,
                          problem.initial_condition(), step_refine=config.step_refine, order=config.order,
                          force=config.force, gate=config.tolerances.gate, seed=config.seed)
    if holonomy:
        lam = LambdaField(problem.data, problem.frame, target)
        stride = max(1, min(problem.grid.shape) // GATE_STRIDE)
        solution.holonomy, _ = holonomy_scan(lam, target, problem.grid, config.step_refine, stride)

    tolerances = config.tolerances
    failed = solution.verification.failed(tolerances.verify, tolerances.alpha)
    alignment = None
    if problem.exact_point is not None:
        nodes = problem.grid.nodes().reshape(-1, problem.grid.dim)
        exact = np.stack([problem.exact_point(x) for x in nodes])
        alignment = rigid_alignment(solution.points.reshape(exact.shape), exact)
    return SolveOutcome(problem, solution, failed, alignment)


def convergence_study(config: RunConfig, levels: int = 3) -> pd.DataFrame:
    """
    Solves at successive 2x grid refinements and reports the node error at
    the coarse nodes, against the exact immersion when known and the finest
    level otherwise.
    """
    logger.debug(f"Running convergence study for run {config.name!r} over {levels} levels.")
    runs = []
    for level in range(levels):
        refined = _refined(config, 2 ** level)
        problem = obtain_problem(refined)
        solution = solve_grid(problem.data, problem.frame, realize_target(problem.model), problem.grid,
                              problem.spec, problem.initial_condition(), step_refine=config.step_refine,
                              order=config.order, force=config.force, gate=config.tolerances.gate,
                              seed=config.seed, verify=False)
        runs.append((problem, solution))

    coarse = runs[0][0].grid
    reference = runs[-1]
    rows = []
    for level, (problem, solution) in enumerate(runs):
        points = _coarse_points(solution, 2 ** level)
        if problem.exact_point is not None:
            exact = np.stack([problem.exact_point(x) for x in coarse.nodes().reshape(-1, coarse.dim)])
        else:
            exact = _coarse_points(reference[1], 2 ** (levels - 1))
        rows.append({
            "samples": problem.grid.shape[0],
            "h": float(np.max(problem.grid.spacing)),
            "error": float(np.max(np.abs(points - exact))),
        })
    table = pd.DataFrame(rows)
    table["ratio"] = table["error"].shift(1) / table["error"]
    if problem.exact_point is None:
        table = table.iloc[:-1]
    return table


def _coarse_points(solution: ImmersionSolution, factor: int) -> np.ndarray:
    picked = solution.points[tuple(slice(None, None, factor) for _ in solution.grid.shape)]
    return picked.reshape(-1, picked.shape[-1])


def _refined(config: RunConfig, factor: int) -> RunConfig:
    if factor == 1:
        return config
    if config.preset is not None:
        base = _preset_samples(config)
        params = {**config.preset_params, "samples": (base - 1) * factor + 1}
        return config.model_copy(update={"preset_params": params})
    chart = config.chart.model_copy(update={"samples": [(s - 1) * factor + 1 for s in config.chart.samples]})
    initial = config.initial
    if initial.node is not None:
        initial = initial.model_copy(update={"node": [i * factor for i in initial.node]})
    return config.model_copy(update={"chart": chart, "initial": initial})


def _preset_samples(config: RunConfig) -> int:
    if "samples" in config.preset_params:
        return int(config.preset_params["samples"])
    return build_problem(config).grid.shape[0]
