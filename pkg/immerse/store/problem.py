"""
Assembles an ImmersionProblem from a validated RunConfig.
"""
import logging
from dataclasses import replace
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from immerse.geometry.chart_manifold import (
    ChartGrid,
    ClosedForm,
    ConnectionField,
    FieldSource,
    MetricField,
    WhitneyData,
    levi_civita_connection,
)
from immerse.geometry.compatibility import weingarten_field
from immerse.geometry.errors import ConfigurationError, ShapeError
from immerse.geometry.g_structure import (
    ADAPTED_ORTHONORMAL,
    ALMOST_COMPLEX,
    ORIENTED_UNIT_VECTOR_3D,
    ORTHONORMAL,
    PRODUCT,
    SUBBUNDLE,
    TRIVIAL_FRAME,
    UNIT_SECTION,
    UNITARY,
    GStructureSpec,
)
from immerse.geometry.immersion_solver import InitialCondition
from immerse.models.models import FieldConfig, ModelConfig, RunConfig, StructureConfig
from immerse.store.catalog import build_model
from immerse.store.field_files import FieldLoader
from immerse.store.fixtures import ImmersionProblem
from immerse.store.registry import FixtureRegistry

logger = logging.getLogger(__name__)


def build_problem(config: RunConfig, base_dir: Optional[Path] = None) -> ImmersionProblem:
    """
    ImmersionProblem described by a run configuration.

    Args:
        config: validated run configuration
        base_dir: directory against which relative field files resolve
    """
    if config.preset is not None:
        problem = FixtureRegistry().build(config.preset, config.preset_params)
        if "initial" in config.model_fields_set:
            problem = replace(problem, initial=initial_condition(config))
        logger.debug(f"Run {config.name!r} uses preset {config.preset!r}")
        return problem

    grid = ChartGrid(np.asarray(config.chart.coord_min, dtype=float), np.asarray(config.chart.coord_max, dtype=float),
                     tuple(config.chart.samples))
    fields = resolve_fields(config.fields, grid, base_dir)
    data = whitney_data(config, fields, grid)
    model = model_from_config(config.model)
    if data.n + data.k != model.dim:
        raise ShapeError(f"n + k = {data.n} + {data.k} does not match the target dimension {model.dim}")
    frame = _lookup(fields, config.frame_section, "frame_section")
    if frame.value_shape != (model.dim, model.dim):
        raise ShapeError(f"Frame section has shape {frame.value_shape}, expected {(model.dim, model.dim)}")
    spec = structure_spec(config.structure, fields, data.whitney_metric(), model.dim)
    if spec.rank != model.dim:
        raise ShapeError(f"G-structure has rank {spec.rank}, target dimension is {model.dim}")
    logger.debug(f"Assembled run {config.name!r}: n={data.n}, k={data.k}, model {model.family}")
    return ImmersionProblem(
        name=config.name,
        grid=grid,
        data=data,
        spec=spec,
        model=model,
        frame=frame,
        initial=initial_condition(config),
        fields=fields,
    )


def initial_condition(config: RunConfig) -> InitialCondition:
    initial = config.initial

    def array(value):
        return None if value is None else np.asarray(value, dtype=float)

    return InitialCondition(
        mode=initial.mode,
        point=array(initial.point),
        frame=array(initial.frame),
        element=array(initial.element),
        node=None if initial.node is None else tuple(initial.node),
    )


# ---------------------------------------------------------
# Fields
# ---------------------------------------------------------
def resolve_fields(entries: Dict[str, FieldConfig], grid: ChartGrid,
                   base_dir: Optional[Path] = None) -> Dict[str, FieldSource]:
    registry = FixtureRegistry()
    loader = None
    fields = {}
    for name, entry in entries.items():
        if entry.ref is not None:
            fields[name] = registry.field(entry.ref, entry.params)
        elif entry.file is not None:
            loader = loader or FieldLoader()
            fields[name] = loader.load(entry.file, grid, order=entry.order, base_dir=base_dir)
        else:
            fields[name] = ClosedForm.constant(entry.constant, grid.dim, domain=grid.box, name=name)
        if fields[name].dim != grid.dim:
            raise ShapeError(f"Field {name!r} lives on a {fields[name].dim}-dimensional chart, "
                             f"the run chart has dimension {grid.dim}")
    return fields


def _lookup(fields: Dict[str, FieldSource], name: Optional[str], role: str) -> FieldSource:
    if name is None:
        raise ConfigurationError(f"No field given for {role}")
    if name not in fields:
        raise ConfigurationError(f"{role} refers to unknown field {name!r}")
    return fields[name]


def whitney_data(config: RunConfig, fields: Dict[str, FieldSource], grid: ChartGrid) -> WhitneyData:
    spec = config.whitney
    n = grid.dim
    g = MetricField(_lookup(fields, spec.metric, "metric"), spec.metric_index) if spec.metric else None
    g0 = (MetricField(_lookup(fields, spec.normal_metric, "normal_metric"), spec.normal_metric_index)
          if spec.normal_metric else None)
    if spec.christoffel == "levi_civita":
        if g is None:
            raise ConfigurationError("christoffel = levi_civita needs a metric")
        tangent = levi_civita_connection(g)
    else:
        tangent = ConnectionField(n, _lookup(fields, spec.christoffel, "christoffel"))
    gamma0 = _lookup(fields, spec.normal_christoffel, "normal_christoffel")
    if len(gamma0.value_shape) != 3:
        raise ShapeError(f"Normal Christoffel field has shape {gamma0.value_shape}, expected (n, k, k)")
    normal = ConnectionField(gamma0.value_shape[1], gamma0)
    alpha0 = _lookup(fields, spec.alpha0, "alpha0")
    if spec.weingarten is not None:
        a0 = _lookup(fields, spec.weingarten, "weingarten")
    elif g is not None and g0 is not None:
        a0 = weingarten_field(g, g0, alpha0)
    else:
        raise ConfigurationError("Affine problems need an explicit weingarten field")
    return WhitneyData(tangent, normal, alpha0, a0, g=g, g0=g0, meta={"run": config.name})


# ---------------------------------------------------------
# Model and structure
# ---------------------------------------------------------
def model_from_config(config: ModelConfig):
    def triple(entry: ModelConfig):
        return entry.family, entry.params, tuple(triple(f) for f in entry.factors)

    return build_model(*triple(config))


def _block_metric(metric: Optional[MetricField], start: int, stop: int) -> Optional[MetricField]:
    if metric is None:
        return None
    source = metric.source
    block = ClosedForm(lambda x: source(x)[start:stop, start:stop], source.dim, (stop - start, stop - start),
                       domain=source.domain, name=f"{source.name}[{start}:{stop}]")
    index = int(np.sum(np.linalg.eigvalsh(block(_any_point(source))) < 0))
    return MetricField(block, index)


def _any_point(source: FieldSource):
    return source.domain.lo if source.domain is not None else np.zeros(source.dim)


def structure_spec(config: StructureConfig, fields: Dict[str, FieldSource], metric: Optional[MetricField],
                   rank: int) -> GStructureSpec:
    """GStructureSpec on a block of rank `rank` carrying `metric` (the Whitney metric or its block)."""
    kind = config.kind
    if kind == PRODUCT:
        if not config.children:
            raise ConfigurationError("A product structure needs children")
        ranks = [child.rank for child in config.children]
        if any(r is None for r in ranks) or sum(ranks) != rank:
            raise ShapeError(f"Product children ranks {ranks} must be given and add up to {rank}")
        offsets = np.concatenate([[0], np.cumsum(ranks)])
        children = [structure_spec(child, fields, _block_metric(metric, int(a), int(b)), int(b - a))
                    for child, a, b in zip(config.children, offsets[:-1], offsets[1:])]
        return GStructureSpec.product(children)

    metric = metric if config.use_metric else None
    if kind == TRIVIAL_FRAME:
        spec = GStructureSpec.trivial_frame(_lookup(fields, config.frame, "structure.frame"))
    elif kind == ORTHONORMAL:
        spec = GStructureSpec.orthonormal(_require_metric(metric, kind))
    elif kind == SUBBUNDLE:
        spec = GStructureSpec.subbundle_of(_lookup(fields, config.subbundle, "structure.subbundle"))
    elif kind == ADAPTED_ORTHONORMAL:
        spec = GStructureSpec.adapted_orthonormal(_require_metric(metric, kind),
                                                  _lookup(fields, config.subbundle, "structure.subbundle"),
                                                  config.subbundle_index)
    elif kind == UNIT_SECTION:
        spec = GStructureSpec.unit_section(_lookup(fields, config.section, "structure.section"), metric)
    elif kind == ALMOST_COMPLEX:
        spec = GStructureSpec.almost_complex(_lookup(fields, config.complex_structure,
                                                     "structure.complex_structure"))
    elif kind == UNITARY:
        spec = GStructureSpec.unitary(_lookup(fields, config.complex_structure, "structure.complex_structure"),
                                      _require_metric(metric, kind))
    elif kind == ORIENTED_UNIT_VECTOR_3D:
        spec = GStructureSpec.oriented_unit_vector_3d(_lookup(fields, config.section, "structure.section"),
                                                      _require_metric(metric, kind), config.orientation)
    else:
        raise ConfigurationError(f"Unknown structure kind {kind!r}")
    if spec.rank != rank:
        raise ShapeError(f"Structure {kind!r} has rank {spec.rank}, its block has rank {rank}")
    return spec


def _require_metric(metric: Optional[MetricField], kind: str) -> MetricField:
    if metric is None:
        raise ConfigurationError(f"Structure {kind!r} needs the metrics g and g0 in the whitney section")
    return metric
