"""
Controller handles response formatting and interaction with services.
"""

import logging

from immerse.models.models import (
    CatalogResponse,
    CheckResponse,
    FamilyResidualOut,
    ModelFamily,
    RunConfig,
    SolveResponse,
    StructureVariant,
    VerificationOut,
)
from immerse.service.service import CheckOutcome, SolveOutcome, obtain_catalog, obtain_check, obtain_solve

logger = logging.getLogger(__name__)


def get_catalog_controller(family: str = None) -> CatalogResponse:
    """
    Retrieves the catalog of model families and structure variants.
    """
    logger.info(f"Retrieving catalog for family={family}...")
    catalog = obtain_catalog(family)
    return CatalogResponse(
        models=[ModelFamily(**entry) for entry in catalog["models"]],
        structures=[StructureVariant(**entry) for entry in catalog["structures"]],
    )


def check_response(config: RunConfig, outcome: CheckOutcome) -> CheckResponse:
    report = outcome.report
    rows = [dict(f.to_dict(), form="affine") for f in report.families.values()]
    rows += [dict(f.to_dict(), form="metric") for f in report.metric_forms.values()]
    return CheckResponse(
        name=config.name,
        passed=outcome.passed,
        tol=outcome.tol,
        violated=report.violated(outcome.tol),
        families=[FamilyResidualOut(**row) for row in rows],
        nodes=report.nodes,
        seed=report.seed,
        samples_per_node=report.samples_per_node,
    )


def check_controller(config: RunConfig) -> CheckResponse:
    """
    Runs the compatibility check of a run configuration.
    """
    logger.info(f"Checking compatibility for run {config.name!r}...")
    response = check_response(config, obtain_check(config))
    logger.info(f"Compatibility check of {config.name!r}: passed={response.passed}")
    return response


def solve_response(config: RunConfig, outcome: SolveOutcome, include_points: bool = True) -> SolveResponse:
    solution = outcome.solution
    verification = solution.verification
    return SolveResponse(
        name=config.name,
        passed=outcome.passed,
        failed=outcome.failed,
        samples=list(solution.grid.shape),
        verification=None if verification is None else VerificationOut(**verification.to_dict()),
        diagnostics=solution.diagnostics(),
        alignment_error=None if outcome.alignment is None else outcome.alignment.max_error,
        points=solution.points.reshape(-1, solution.points.shape[-1]).tolist() if include_points else None,
    )


def solve_controller(config: RunConfig, include_points: bool = True) -> SolveResponse:
    """
    Reconstructs and verifies the immersion of a run configuration.
    """
    logger.info(f"Solving run {config.name!r}...")
    response = solve_response(config, obtain_solve(config), include_points)
    logger.info(f"Solve of {config.name!r}: passed={response.passed}")
    return response
