"""
Router definitions for catalog, check and solve endpoints.
"""

import logging

from fastapi import APIRouter, HTTPException

from immerse.controller.controller import check_controller, get_catalog_controller, solve_controller
from immerse.geometry.errors import CONFIGURATION_ERRORS, MATHEMATICAL_ERRORS
from immerse.models.models import CatalogResponse, CheckResponse, ErrorResponse, RunConfig, SolveResponse

logger = logging.getLogger(__name__)


router = APIRouter()

ERROR_RESPONSES = {400: {"model": ErrorResponse}, 409: {"model": ErrorResponse}}

logger.info("Registering router endpoints...")


def _run(action, *args):
    """Maps configuration errors to 400 and mathematical failures to 409."""
    try:
        return action(*args)
    except CONFIGURATION_ERRORS as e:
        logger.warning(f"Configuration error: {e}")
        raise HTTPException(status_code=400, detail=str(e))
    except MATHEMATICAL_ERRORS as e:
        logger.warning(f"Mathematical failure: {e}")
        raise HTTPException(status_code=409, detail=str(e))


@router.get("/catalog", response_model=CatalogResponse, status_code=200, tags=["GET /catalog"])
async def get_catalog_endpoint():
    """
    Routes GET /catalog endpoint.
    """
    logger.info("GET /catalog endpoint called.")
    return get_catalog_controller()


@router.get("/catalog/{family}", response_model=CatalogResponse, status_code=200, tags=["GET /catalog"],
            responses={404: {"model": ErrorResponse}})
async def get_catalog_family_endpoint(family: str):
    """
    Routes GET /catalog/{family} endpoint.
    Returns the entry of one model family together with the structure variants.
    """
    logger.info(f"GET /catalog/{family} endpoint called.")
    try:
        return get_catalog_controller(family)
    except CONFIGURATION_ERRORS as e:
        raise HTTPException(status_code=404, detail=str(e))


@router.post("/check", response_model=CheckResponse, status_code=200, tags=["POST /check"],
             responses=ERROR_RESPONSES)
def check_endpoint(config: RunConfig):
    """
    Evaluates the compatibility equations of a run configuration.

    **Example request body:**
    ```json
    {"name": "sphere", "preset": "unit_sphere", "preset_params": {"samples": 21}}
    ```

    **Response:** Residual max-norms per equation family; passed is false when
    any family exceeds the check tolerance.
    """
    logger.info(f"POST /check called for {config.name!r}")
    return _run(check_controller, config)


@router.post("/solve", response_model=SolveResponse, status_code=200, tags=["POST /solve"],
             responses=ERROR_RESPONSES)
def solve_endpoint(config: RunConfig, include_points: bool = True):
    """
    Reconstructs the immersion of a run configuration.

    **Example request body:**
    ```json
    {"name": "sphere", "preset": "unit_sphere", "preset_params": {"samples": 21}, "step_refine": 2}
    ```

    **Response:** Verification residuals, diagnostics and the node points.
    A failing residual gate answers 409 unless force is set.
    """
    logger.info(f"POST /solve called for {config.name!r}")
    return _run(solve_controller, config, include_points)
