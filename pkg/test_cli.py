import json

import numpy as np
import pytest

from immerse.cli.cli import EXIT_CONFIG, EXIT_FAILURE, EXIT_OK, main
from immerse.geometry.alignment import rigid_alignment
from immerse.store.exports import read_obj_vertices
from immerse.store.fixtures import unit_sphere


def sphere_config(samples: int = 21, **params) -> dict:
    return {
        "name": "sphere",
        "preset": "unit_sphere",
        "preset_params": {"samples": samples, **params},
        "step_refine": 8,
        "tolerances": {"check": 1e-7, "verify": 1e-4, "alpha": 1e-3},
    }


def test_check_passes_on_the_sphere(write_config, tmp_path, capsys):
    path = write_config(sphere_config())
    assert main(["check", str(path), "--out", str(tmp_path / "out")]) == EXIT_OK
    report = json.loads((tmp_path / "out" / "sphere_report.json").read_text())
    assert report["passed"]
    assert all(f["max_norm"] < 1e-7 for f in report["families"])
    assert "PASSED" in capsys.readouterr().out


def test_check_names_the_violated_family(configs_dir, tmp_path, capsys):
    code = main(["check", str(configs_dir / "unit_sphere_perturbed.json"), "--out", str(tmp_path)])
    assert code == EXIT_FAILURE
    report = json.loads((tmp_path / "unit_sphere_perturbed_report.json").read_text())
    assert not report["passed"]
    assert "codazzi_alpha" in report["violated"]
    assert "FAILED" in capsys.readouterr().out


def test_malformed_config_exits_with_2(load_config_json, write_config, tmp_path):
    payload = load_config_json("unit_sphere_fields.json")
    payload["model"]["params"]["dim"] = 4
    path = write_config(payload)
    assert main(["check", str(path), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_degenerate_metric_exits_with_2(load_config_json, write_config, tmp_path, capsys):
    payload = load_config_json("unit_sphere_fields.json")
    payload["fields"]["g"] = {"constant": [[1.0, 0.0], [0.0, 0.0]]}
    path = write_config(payload)
    assert main(["check", str(path), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "degenera" in capsys.readouterr().err.lower()


def test_chart_outside_the_fields_exits_with_1(load_config_json, write_config, tmp_path):
    payload = load_config_json("unit_sphere_fields.json")
    payload["chart"]["coord_min"] = [0.0, 0.0]
    path = write_config(payload)
    assert main(["check", str(path), "--out", str(tmp_path)]) == EXIT_FAILURE


def test_initial_node_outside_the_grid_exits_with_2(write_config, tmp_path):
    payload = sphere_config(samples=11)
    payload["initial"] = {"mode": "identity", "node": [0, 11]}
    path = write_config(payload)
    assert main(["solve", str(path), "--out", str(tmp_path), "--force"]) == EXIT_CONFIG


def test_invalid_json_exits_with_2(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{\"name\": ")
    assert main(["check", str(path)]) == EXIT_CONFIG
    assert main(["check", str(tmp_path / "absent.json")]) == EXIT_CONFIG


def test_solve_writes_a_sphere_mesh(write_config, tmp_path):
    out = tmp_path / "out"
    path = write_config(sphere_config())
    assert main(["solve", str(path), "--out", str(out)]) == EXIT_OK
    vertices = read_obj_vertices(out / "sphere.obj")
    problem = unit_sphere(samples=21)
    exact = np.stack([problem.exact_point(x) for x in problem.grid.nodes().reshape(-1, 2)])
    assert rigid_alignment(vertices, exact).max_error < 1e-6
    for name in ("sphere_solution.json", "sphere.csv", "sphere.npz"):
        assert (out / name).exists()


def test_solve_flat_plane_is_planar(configs_dir, tmp_path):
    assert main(["solve", str(configs_dir / "flat_plane.json"), "--out", str(tmp_path)]) == EXIT_OK
    vertices = read_obj_vertices(tmp_path / "flat_plane.obj")
    assert np.max(np.abs(vertices[:, 2])) < 1e-12


def test_solve_h2xr_has_constant_height(configs_dir, tmp_path):
    assert main(["solve", str(configs_dir / "hyperbolic_plane_h2xr.json"), "--out", str(tmp_path)]) == EXIT_OK
    table = np.genfromtxt(tmp_path / "hyperbolic_plane_h2xr.csv", delimiter=",", names=True)
    assert np.max(np.abs(table["f3"] - table["f3"][0])) < 1e-9


def test_solve_refuses_incompatible_data(write_config, tmp_path):
    path = write_config(sphere_config(samples=11, alpha_scale=1.1))
    assert main(["solve", str(path), "--out", str(tmp_path)]) == EXIT_FAILURE
    assert main(["solve", str(path), "--out", str(tmp_path), "--force"]) == EXIT_FAILURE


def test_runs_are_deterministic(write_config, tmp_path):
    path = write_config(sphere_config(samples=11, alpha_perturbation=0.05))
    for run in ("a", "b"):
        main(["check", str(path), "--out", str(tmp_path / run), "--seed", "7"])
    first = (tmp_path / "a" / "sphere_report.json").read_bytes()
    assert first == (tmp_path / "b" / "sphere_report.json").read_bytes()

    path = write_config(sphere_config(samples=11), "solve.json")
    for run in ("a", "b"):
        main(["solve", str(path), "--out", str(tmp_path / run), "--seed", "7"])
    assert (tmp_path / "a" / "sphere.obj").read_bytes() == (tmp_path / "b" / "sphere.obj").read_bytes()
    assert (tmp_path / "a" / "sphere_solution.json").read_bytes() == \
        (tmp_path / "b" / "sphere_solution.json").read_bytes()


def test_catalog_listing(capsys):
    assert main(["catalog"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "Model families (5)" in out
    assert "G-structure variants (8)" in out


def test_catalog_single_model(capsys):
    assert main(["catalog", "--model", "ekappatau"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "kappa" in out and "tau" in out
    assert "n-bar = 3" in out


def test_catalog_json(capsys):
    assert main(["catalog", "--model", "spaceform", "--json"]) == EXIT_OK
    catalog = json.loads(capsys.readouterr().out)
    assert [m["family"] for m in catalog["models"]] == ["spaceform"]
    assert set(catalog["models"][0]["params"]) == {"c", "dim", "index"}


def test_catalog_unknown_model():
    assert main(["catalog", "--model", "klein"]) == EXIT_CONFIG


def test_export_converts_an_archive(configs_dir, tmp_path):
    main(["solve", str(configs_dir / "flat_plane.json"), "--out", str(tmp_path)])
    code = main(["export", str(tmp_path / "flat_plane.npz"), "--out", str(tmp_path / "exported"),
                 "--format", "obj"])
    assert code == EXIT_OK
    assert (tmp_path / "exported" / "flat_plane.obj").read_text() == (tmp_path / "flat_plane.obj").read_text()
    assert not (tmp_path / "exported" / "flat_plane.csv").exists()


def test_convergence_study(write_config, tmp_path):
    payload = sphere_config(samples=21, frame_twist=1.0)
    payload["step_refine"] = 1
    path = write_config(payload)
    assert main(["converge", str(path), "--levels", "2", "--out", str(tmp_path)]) == EXIT_OK
    table = np.genfromtxt(tmp_path / "sphere_convergence.csv", delimiter=",", names=True)
    assert table["error"][1] > 1e-10
    assert table["ratio"][1] >= 8.0


@pytest.mark.parametrize("name", [
    "clifford_torus.json",
    "flat_torus_s4.json",
    "nil_vertical_cylinder.json",
])
def test_shipped_configs_pass_the_check(configs_dir, tmp_path, name):
    assert main(["check", str(configs_dir / name), "--out", str(tmp_path)]) == EXIT_OK
