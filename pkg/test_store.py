import json

import numpy as np
import pytest

from immerse.geometry.chart_manifold import ChartGrid
from immerse.geometry.compatibility import full_report
from immerse.geometry.errors import ConfigurationError, ShapeError, UnsupportedModel
from immerse.geometry.g_structure import PRODUCT
from immerse.geometry.homogeneous_models import EKappaTau, Product, SpaceForm, realize_target
from immerse.geometry.immersion_solver import solve_grid
from immerse.models.models import RunConfig
from immerse.store.catalog import MODEL_FAMILIES, STRUCTURE_VARIANTS, build_model
from immerse.store.exports import (
    export_archive,
    load_solution,
    mesh_faces,
    read_obj_vertices,
    save_solution,
    write_obj,
)
from immerse.store.field_files import FieldLoader, read_csv_field, write_csv_field, write_npy_field
from immerse.store.problem import build_problem
from immerse.store.registry import FixtureRegistry


def flat_config(**overrides) -> dict:
    payload = {
        "name": "flat_fields",
        "chart": {"coord_min": [-1.0, -1.0], "coord_max": [1.0, 1.0], "samples": [7, 7]},
        "fields": {
            "g": {"constant": np.eye(2).tolist()},
            "g0": {"constant": [[1.0]]},
            "gamma": {"constant": np.zeros((2, 2, 2)).tolist()},
            "gamma0": {"constant": np.zeros((2, 1, 1)).tolist()},
            "alpha0": {"constant": np.zeros((1, 2, 2)).tolist()},
            "frame": {"constant": np.eye(3).tolist()},
        },
        "whitney": {"metric": "g", "christoffel": "gamma", "normal_metric": "g0",
                    "normal_christoffel": "gamma0", "alpha0": "alpha0"},
        "structure": {"kind": "orthonormal"},
        "model": {"family": "spaceform", "params": {"c": 0.0, "dim": 3}},
        "frame_section": "frame",
    }
    payload.update(overrides)
    return payload


# ---------------------------------------------------------
# Catalog
# ---------------------------------------------------------
def test_catalog_lists_five_families_and_eight_variants():
    assert len(MODEL_FAMILIES) == 5
    assert len(STRUCTURE_VARIANTS) == 8
    assert {v["kind"] for v in STRUCTURE_VARIANTS if v["metric"]} == {
        "orthonormal", "adapted_orthonormal", "unitary", "oriented_unit_vector_3d"}


def test_build_model():
    assert build_model("spaceform", {"c": 1.0, "dim": 3}) == SpaceForm(1.0, 3)
    assert build_model("ekappatau", {"kappa": -1.0, "tau": 0.5}) == EKappaTau(-1.0, 0.5)
    product = build_model("product", factors=[("spaceform", {"c": -1.0, "dim": 2}, ()),
                                              ("spaceform", {"dim": 1}, ())])
    assert isinstance(product, Product) and product.dim == 3
    assert build_model("lie_group", {"name": "heisenberg"}).dim == 3
    with pytest.raises(UnsupportedModel):
        build_model("torus")
    with pytest.raises(ConfigurationError):
        build_model("spaceform", {"c": 1.0})


# ---------------------------------------------------------
# Registry
# ---------------------------------------------------------
def test_registry_is_a_singleton():
    assert FixtureRegistry() is FixtureRegistry()
    assert "unit_sphere" in FixtureRegistry().names()


def test_registry_caches_problems():
    registry = FixtureRegistry()
    first = registry.build("flat_plane", {"samples": 5})
    assert registry.build("flat_plane", {"samples": 5}) is first
    assert registry.build("flat_plane", {"samples": 7}) is not first


def test_registry_named_fields():
    metric = FixtureRegistry().field("unit_sphere.metric", {"samples": 11})
    assert np.allclose(metric(np.array([np.pi / 2, 0.5])), np.eye(2))
    with pytest.raises(ConfigurationError):
        FixtureRegistry().field("unit_sphere.torsion")
    with pytest.raises(ConfigurationError):
        FixtureRegistry().build("klein_bottle")
    with pytest.raises(ConfigurationError):
        FixtureRegistry().build("unit_sphere", {"radius": 2.0})


def test_registry_loads_preset_aliases(tmp_path, fresh_registry):
    alias = {"name": "coarse_sphere", "base": "unit_sphere", "params": {"samples": 9},
             "description": "Coarse round sphere"}
    (tmp_path / "coarse_sphere.json").write_text(json.dumps(alias))
    fresh_registry.initialize(str(tmp_path))
    assert "coarse_sphere" in fresh_registry.names()
    assert fresh_registry.build("coarse_sphere").grid.shape == (9, 9)


def test_registry_rejects_unknown_base(tmp_path, fresh_registry):
    (tmp_path / "bad.json").write_text(json.dumps({"name": "bad", "base": "mobius"}))
    with pytest.raises(ConfigurationError):
        fresh_registry.initialize(str(tmp_path))


# ---------------------------------------------------------
# Field files
# ---------------------------------------------------------
def test_csv_field_file(tmp_path):
    grid = ChartGrid(np.zeros(2), np.ones(2), (5, 6))
    nodes = grid.nodes()
    values = (nodes[..., 0] + 2.0 * nodes[..., 1])[..., None, None] * np.eye(2) + 2.0
    path = write_csv_field(tmp_path / "g.csv", "g", values, 2)
    header, _ = read_csv_field(path)
    assert header == {"field": "g", "dims": 2, "shape": (5, 6), "value_shape": (2, 2)}
    field = FieldLoader(str(tmp_path)).load(str(path), grid, order=1)
    assert field.value_shape == (2, 2)
    assert np.allclose(field(grid.node((2, 3))), values[2, 3])


def test_npy_field_file_with_relative_path(tmp_path):
    grid = ChartGrid(np.zeros(2), np.ones(2), (5, 5))
    values = np.random.default_rng(0).normal(size=(5, 5, 3))
    write_npy_field(tmp_path / "section.npy", "section", values, 2)
    field = FieldLoader(str(tmp_path)).load("section.npy", grid, order=3, base_dir=tmp_path)
    assert np.allclose(field(grid.node((1, 4))), values[1, 4])


def test_field_files_must_match_the_grid(tmp_path):
    values = np.zeros((5, 5, 2))
    write_npy_field(tmp_path / "v.npy", "v", values, 2)
    with pytest.raises(ShapeError):
        FieldLoader().load(str(tmp_path / "v.npy"), ChartGrid(np.zeros(2), np.ones(2), (7, 7)))
    with pytest.raises(ConfigurationError):
        FieldLoader().load(str(tmp_path / "missing.npy"), ChartGrid(np.zeros(2), np.ones(2), (5, 5)))


def test_csv_header_is_required(tmp_path):
    path = tmp_path / "bare.csv"
    path.write_text("# field: bare\n1.0\n2.0\n")
    with pytest.raises(ConfigurationError):
        read_csv_field(path)


# ---------------------------------------------------------
# Problem assembly
# ---------------------------------------------------------
def test_preset_config_builds_the_preset():
    config = RunConfig(name="s", preset="unit_sphere", preset_params={"samples": 11})
    problem = build_problem(config)
    assert problem.name == "unit_sphere"
    assert problem.grid.shape == (11, 11)


def test_preset_initial_override():
    config = RunConfig(name="s", preset="unit_sphere", preset_params={"samples": 11},
                       initial={"mode": "identity", "node": [2, 3]})
    problem = build_problem(config)
    assert problem.initial.mode == "identity"
    assert problem.initial.node == (2, 3)


def test_constant_field_config_is_flat():
    problem = build_problem(RunConfig.model_validate(flat_config()))
    report = full_report(problem.model, problem.data, problem.spec, problem.grid, samples_per_node=1)
    assert report.worst().max_norm < 1e-12
    solution = solve_grid(problem.data, problem.frame, realize_target(problem.model), problem.grid, problem.spec,
                          problem.initial_condition(), verify=False)
    assert np.allclose(solution.points[..., :2], problem.grid.nodes(), atol=1e-12)


def test_product_structure_config():
    payload = flat_config(
        structure={"kind": "product", "children": [{"kind": "orthonormal", "rank": 2},
                                                   {"kind": "orthonormal", "rank": 1}]},
        model={"family": "product", "factors": [{"family": "spaceform", "params": {"dim": 2}},
                                                {"family": "spaceform", "params": {"dim": 1}}]},
    )
    problem = build_problem(RunConfig.model_validate(payload))
    assert problem.spec.kind == PRODUCT
    assert [c.rank for c in problem.spec.children] == [2, 1]
    report = full_report(problem.model, problem.data, problem.spec, problem.grid, samples_per_node=1)
    assert report.worst().max_norm < 1e-12


def test_sphere_from_named_fields(load_config_json):
    config = RunConfig.model_validate(load_config_json("unit_sphere_fields.json"))
    problem = build_problem(config)
    report = full_report(problem.model, problem.data, problem.spec, problem.grid, samples_per_node=1, stride=4)
    assert report.worst().max_norm < 1e-6


def test_dimension_mismatch_is_a_shape_error():
    payload = flat_config(model={"family": "spaceform", "params": {"c": 0.0, "dim": 4}})
    with pytest.raises(ShapeError):
        build_problem(RunConfig.model_validate(payload))


def test_unknown_field_names_are_configuration_errors():
    payload = flat_config(frame_section="sigma")
    with pytest.raises(ConfigurationError):
        build_problem(RunConfig.model_validate(payload))


def test_affine_data_needs_a_weingarten_field():
    payload = flat_config()
    payload["whitney"] = {"christoffel": "gamma", "normal_christoffel": "gamma0", "alpha0": "alpha0"}
    payload["structure"] = {"kind": "trivial_frame", "frame": "frame"}
    with pytest.raises(ConfigurationError):
        build_problem(RunConfig.model_validate(payload))


def test_config_needs_a_preset_or_a_problem():
    with pytest.raises(ValueError):
        RunConfig.model_validate({"name": "empty"})
    with pytest.raises(ValueError):
        RunConfig.model_validate(flat_config(fields={"g": {"ref": "a.b", "constant": 1.0}}))


# ---------------------------------------------------------
# Exports
# ---------------------------------------------------------
def test_mesh_faces():
    faces = mesh_faces((3, 4))
    assert faces.shape == (6, 4)
    assert faces[0].tolist() == [1, 2, 6, 5]
    assert faces.max() == 12


def test_obj_and_archive(tmp_path):
    problem = FixtureRegistry().build("flat_plane", {"samples": 5})
    solution = solve_grid(problem.data, problem.frame, realize_target(problem.model), problem.grid, problem.spec,
                          problem.initial_condition(), verify=False)
    obj = write_obj(tmp_path / "flat.obj", solution.display_points(), solution.grid.shape)
    vertices = read_obj_vertices(obj)
    assert vertices.shape == (25, 3)
    assert np.allclose(vertices, solution.display_points().reshape(-1, 3), atol=1e-11)
    assert sum(line.startswith("f ") for line in obj.read_text().splitlines()) == 16

    archive_path = save_solution(tmp_path / "flat.npz", solution)
    archive = load_solution(archive_path)
    assert archive["grid"].shape == (5, 5)
    assert np.array_equal(archive["points"], solution.points)

    written = export_archive(archive_path, tmp_path / "export")
    assert written["obj"].read_text() == obj.read_text().replace("o immersion", "o flat")
    assert written["csv"].exists()
