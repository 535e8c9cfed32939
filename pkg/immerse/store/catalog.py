"""
Static catalog of target model families and G-structure variants, and the
builder turning a model description into a ModelSpace.
"""
import logging

import numpy as np

from immerse.geometry.errors import ConfigurationError, UnsupportedModel
from immerse.geometry.g_structure import (
    ADAPTED_ORTHONORMAL,
    ALMOST_COMPLEX,
    METRIC_KINDS,
    ORIENTED_UNIT_VECTOR_3D,
    ORTHONORMAL,
    SUBBUNDLE,
    TRIVIAL_FRAME,
    UNIT_SECTION,
    UNITARY,
)
from immerse.geometry.homogeneous_models import (
    ComplexSpaceForm,
    EKappaTau,
    LieGroupLeftInvariant,
    ModelSpace,
    Product,
    SpaceForm,
)

logger = logging.getLogger(__name__)

# ---------------------------------------------------------
# Model families
# ---------------------------------------------------------
MODEL_FAMILIES = [
    {
        "family": SpaceForm.family,
        "description": "Pseudo-Riemannian space form of constant sectional curvature c",
        "structure": ORTHONORMAL,
        "params": {"c": "float, sectional curvature", "dim": "int >= 1", "index": "int, 0 <= index <= dim"},
        "constraints": ["n-bar = dim"],
        "curvature": "R(X, Y)Z = c (<Y, Z> X - <X, Z> Y), T = 0, In = 0",
    },
    {
        "family": ComplexSpaceForm.family,
        "description": "Kaehler space form of constant holomorphic sectional curvature c",
        "structure": UNITARY,
        "params": {"c": "float, holomorphic sectional curvature", "dim": "even int >= 2",
                   "index": "even int"},
        "constraints": ["n-bar = dim is even", "c != 0 realized for Riemannian signature only"],
        "curvature": "R(X, Y)Z = c/4 (<Y, Z> X - <X, Z> Y + <JY, Z> JX - <JX, Z> JY + 2 <X, JY> JZ), "
                     "T = 0, In = 0",
    },
    {
        "family": LieGroupLeftInvariant.family,
        "description": "Lie group with a left-invariant connection and the left-invariant frame",
        "structure": TRIVIAL_FRAME,
        "params": {"name": "abelian | heisenberg | so3", "dim": "int (abelian only)",
                   "connection": "levi_civita | flat"},
        "constraints": ["n-bar = dim of the algebra"],
        "curvature": "T(X, Y) = Gamma_X Y - Gamma_Y X - [X, Y], "
                     "R(X, Y) = [Gamma_X, Gamma_Y] - Gamma_[X, Y], In = Gamma",
    },
    {
        "family": EKappaTau.family,
        "description": "Homogeneous 3-manifold E(kappa, tau) with unit Killing field xi",
        "structure": ORIENTED_UNIT_VECTOR_3D,
        "params": {"kappa": "float, base curvature", "tau": "float, bundle curvature"},
        "constraints": ["n-bar = 3"],
        "curvature": "R(X, Y)Z = (kappa - 3 tau^2)(<Y, Z> X - <X, Z> Y) - (kappa - 4 tau^2)"
                     "(<Y, xi><Z, xi> X - <X, xi><Z, xi> Y + <X, xi><Y, Z> xi - <Y, xi><X, Z> xi), "
                     "T = 0, In(u) = tau u x . - 2 tau <u, xi> xi x .",
    },
    {
        "family": Product.family,
        "description": "Product of catalog models with the product G-structure",
        "structure": "product",
        "params": {"factors": "list of model descriptions"},
        "constraints": ["n-bar = sum of the factor dimensions", "at least two factors"],
        "curvature": "block diagonal in the factor tensors",
    },
]

# ---------------------------------------------------------
# G-structure variants
# ---------------------------------------------------------
STRUCTURE_VARIANTS = [
    {"kind": TRIVIAL_FRAME, "group": "{1}", "fields": ["frame"], "quotient": "gl(n)"},
    {"kind": ORTHONORMAL, "group": "O(p, q)", "fields": ["metric"], "quotient": "Sym"},
    {"kind": SUBBUNDLE, "group": "stabilizer of a subspace", "fields": ["subbundle"],
     "quotient": "Hom(F, E/F)"},
    {"kind": ADAPTED_ORTHONORMAL, "group": "O(p1, q1) x O(p2, q2)", "fields": ["metric", "subbundle"],
     "quotient": "Sym + Hom(F, F-perp)"},
    {"kind": UNIT_SECTION, "group": "stabilizer of a vector", "fields": ["section", "metric (optional)"],
     "quotient": "E (or Sym + xi-perp with a metric)"},
    {"kind": ALMOST_COMPLEX, "group": "GL(m, C)", "fields": ["complex_structure"],
     "quotient": "J-anticommuting endomorphisms"},
    {"kind": UNITARY, "group": "U(p, q)", "fields": ["metric", "complex_structure"],
     "quotient": "Sym + anticommuting skew part"},
    {"kind": ORIENTED_UNIT_VECTOR_3D, "group": "SO(2)", "fields": ["metric", "section"],
     "quotient": "Sym + xi-perp"},
]
for variant in STRUCTURE_VARIANTS:
    variant["metric"] = variant["kind"] in METRIC_KINDS


def find_family(family: str) -> dict:
    for entry in MODEL_FAMILIES:
        if entry["family"] == family:
            return entry
    raise UnsupportedModel(f"Unknown model family {family!r}; available: "
                           f"{', '.join(e['family'] for e in MODEL_FAMILIES)}")


def build_model(family: str, params: dict = None, factors=()) -> ModelSpace:
    """
    ModelSpace from a catalog family name and parameters. factors are
    (family, params, factors) triples of a product.
    """
    params = dict(params or {})
    find_family(family)
    try:
        if family == SpaceForm.family:
            return SpaceForm(float(params.get("c", 0.0)), int(params["dim"]), int(params.get("index", 0)))
        if family == ComplexSpaceForm.family:
            return ComplexSpaceForm(float(params.get("c", 0.0)), int(params["dim"]), int(params.get("index", 0)))
        if family == EKappaTau.family:
            return EKappaTau(float(params.get("kappa", 0.0)), float(params.get("tau", 0.0)))
        if family == LieGroupLeftInvariant.family:
            extra = {}
            if "inner_product" in params:
                extra["inner_product"] = np.asarray(params["inner_product"], dtype=float)
            if "base_frame" in params:
                extra["base_frame"] = np.asarray(params["base_frame"], dtype=float)
            return LieGroupLeftInvariant.named(
                params.get("name", "heisenberg"),
                int(params.get("dim", 3)),
                connection=params.get("connection", "levi_civita"),
                with_matrices=bool(params.get("with_matrices", True)),
                **extra,
            )
        return Product(tuple(build_model(*factor) for factor in factors))
    except KeyError as e:
        raise ConfigurationError(f"Model family {family!r} needs parameter {e}") from e
