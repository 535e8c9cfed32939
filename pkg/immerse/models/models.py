"""
Data models and schemas for run configurations and API responses.
"""

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, model_validator

from immerse.geometry import settings


# ---------------------------------------------------------
# Run configuration
# ---------------------------------------------------------
class ChartConfig(BaseModel):
    """
    Rectangular sampled chart U.
    """
    coord_min: List[float] = Field(..., example=[0.3, 0.0], description="Lower corner of the coordinate box")
    coord_max: List[float] = Field(..., example=[2.84, 3.14], description="Upper corner of the coordinate box")
    samples: List[int] = Field(..., example=[41, 41], description="Samples per axis (at least 3)")


class FieldConfig(BaseModel):
    """
    A named field: a preset field reference, a sampled file or a constant value.
    """
    ref: Optional[str] = Field(None, example="unit_sphere.metric", description="Registry name preset.field")
    file: Optional[str] = Field(None, example="fields/metric.npy", description="Path or http(s) URL of a sampled field")
    constant: Optional[Any] = Field(None, example=[[1.0, 0.0], [0.0, 1.0]], description="Constant value")
    order: int = Field(3, ge=1, le=3, description="Interpolation order of sampled fields (1 or 3)")
    params: Dict[str, Any] = Field(default_factory=dict, description="Preset parameters for ref fields")

    @model_validator(mode="after")
    def exactly_one_source(self):
        given = [name for name in ("ref", "file", "constant") if getattr(self, name) is not None]
        if len(given) != 1:
            raise ValueError(f"A field needs exactly one of ref, file, constant (got {given or 'none'})")
        if self.order not in (1, 3):
            raise ValueError("Interpolation order must be 1 or 3")
        return self


class WhitneyConfig(BaseModel):
    """
    Names of the fields making up the data on TM + E0.
    """
    metric: Optional[str] = Field(None, example="g", description="Metric on TM (isometric problems)")
    metric_index: int = Field(0, ge=0)
    christoffel: str = Field("levi_civita", example="levi_civita",
                             description="Christoffel field of the connection on TM, or levi_civita")
    normal_metric: Optional[str] = Field(None, example="g0", description="Bundle metric on E0")
    normal_metric_index: int = Field(0, ge=0)
    normal_christoffel: str = Field(..., example="gamma0", description="Christoffel field of the connection on E0")
    alpha0: str = Field(..., example="alpha0", description="E0-valued symmetric 2-form, shape (k, n, n)")
    weingarten: Optional[str] = Field(None, description="A0 field, shape (n, n, k); derived from alpha0 when isometric")


class StructureConfig(BaseModel):
    """
    G-structure on E-hat. Product children split E-hat into consecutive blocks.
    """
    kind: str = Field(..., example="orthonormal", description="One of the catalog structure variants or product")
    rank: Optional[int] = Field(None, ge=1, description="Block rank (product children only)")
    frame: Optional[str] = None
    subbundle: Optional[str] = None
    subbundle_index: int = 0
    section: Optional[str] = None
    complex_structure: Optional[str] = None
    orientation: int = Field(1, description="+1 or -1 (oriented_unit_vector_3d)")
    use_metric: bool = Field(True, description="Attach the Whitney metric (or its block) to the structure")
    children: List["StructureConfig"] = Field(default_factory=list)


class ModelConfig(BaseModel):
    """
    Target model space: a catalog family with its parameters.
    """
    family: str = Field(..., example="spaceform", description="spaceform, complex_spaceform, lie_group, "
                                                            "ekappatau or product")
    params: Dict[str, Any] = Field(default_factory=dict, example={"c": 1.0, "dim": 3, "index": 0})
    factors: List["ModelConfig"] = Field(default_factory=list, description="Factors of a product model")


class InitialConfig(BaseModel):
    """
    Initial condition sigma0 at the node x0.
    """
    mode: str = Field("identity", example="exact", description="identity, exact, explicit or element")
    node: Optional[List[int]] = Field(None, description="Grid index of x0, centre node by default")
    point: Optional[List[float]] = None
    frame: Optional[List[List[float]]] = None
    element: Optional[List[List[float]]] = None


class ToleranceConfig(BaseModel):
    check: float = Field(settings.CHECK_TOL, gt=0, description="Pass threshold of cmd_check")
    gate: float = Field(settings.RESIDUAL_GATE, gt=0, description="Residual gate before solving")
    verify: float = Field(settings.VERIFY_TOL, gt=0, description="Pass threshold of solution verification")
    alpha: Optional[float] = Field(None, gt=0, description="Threshold of the alpha recovery check")


class OutputConfig(BaseModel):
    dir: str = Field("out", description="Directory receiving reports and meshes")
    formats: List[str] = Field(default_factory=lambda: ["json", "obj", "csv", "npz"])


class RunConfig(BaseModel):
    """
    One run: either a preset (with parameters) or a fully described problem.
    """
    name: str = Field("run", example="unit_sphere", description="Run name, used for output file names")
    preset: Optional[str] = Field(None, example="unit_sphere", description="Built-in preset")
    preset_params: Dict[str, Any] = Field(default_factory=dict, example={"samples": 41})
    chart: Optional[ChartConfig] = None
    fields: Dict[str, FieldConfig] = Field(default_factory=dict)
    whitney: Optional[WhitneyConfig] = None
    structure: Optional[StructureConfig] = None
    model: Optional[ModelConfig] = None
    frame_section: Optional[str] = Field(None, description="Field name of the P-hat frame section s")
    initial: InitialConfig = Field(default_factory=InitialConfig)
    tolerances: ToleranceConfig = Field(default_factory=ToleranceConfig)
    seed: int = Field(settings.DEFAULT_SEED, ge=0)
    samples_per_node: Optional[int] = Field(None, ge=0)
    step_refine: int = Field(1, ge=1, description="Integration substeps per grid edge")
    order: Optional[List[int]] = Field(None, description="Sweep axis order")
    force: bool = Field(False, description="Solve even when the residual gate fails")
    output: OutputConfig = Field(default_factory=OutputConfig)

    @model_validator(mode="after")
    def preset_or_problem(self):
        if self.preset is None:
            missing = [name for name in ("chart", "whitney", "structure", "model", "frame_section")
                       if getattr(self, name) is None]
            if missing:
                raise ValueError(f"Without a preset the config needs {', '.join(missing)}")
        return self


# ---------------------------------------------------------
# Responses
# ---------------------------------------------------------
class FamilyResidualOut(BaseModel):
    name: str
    form: str
    max_norm: float
    rms: float
    samples: int
    worst_point: Optional[List[float]] = None


class CheckResponse(BaseModel):
    """
    Schema for compatibility check response.
    """
    name: str
    passed: bool
    tol: float
    violated: List[str]
    families: List[FamilyResidualOut]
    nodes: int
    seed: int
    samples_per_node: int


class VerificationOut(BaseModel):
    pullback_metric: Optional[float] = None
    differential: float
    alpha_recovery: Optional[float] = None
    frame_preservation: float
    nodes: int


class SolveResponse(BaseModel):
    """
    Schema for solve response. Points are the ambient coordinates per node (C order).
    """
    name: str
    passed: bool
    failed: List[str]
    samples: List[int]
    verification: Optional[VerificationOut] = None
    diagnostics: Dict[str, Any]
    alignment_error: Optional[float] = None
    points: Optional[List[List[float]]] = None


class ModelFamily(BaseModel):
    """
    Model space family in the catalog.
    """
    family: str
    description: str
    structure: str
    params: Dict[str, str]
    constraints: List[str]
    curvature: str


class StructureVariant(BaseModel):
    """
    G-structure variant in the catalog.
    """
    kind: str
    group: str
    fields: List[str]
    quotient: str
    metric: bool


class CatalogResponse(BaseModel):
    models: List[ModelFamily]
    structures: List[StructureVariant]


class ErrorResponse(BaseModel):
    """
    Error response model following RFC 7807.
    """
    type: str
    title: str
    status: int
    detail: str
    instance: str
