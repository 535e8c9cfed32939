"""
Writers for run outputs: JSON reports, solution archives (.npz), OBJ meshes
and CSV node tables.
"""
import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from immerse.geometry.chart_manifold import ChartGrid
from immerse.geometry.errors import ConfigurationError
from immerse.geometry.immersion_solver import ImmersionSolution

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12g"


def _prepare(path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_json(path, payload: dict) -> Path:
    path = _prepare(path)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    logger.info(f"Wrote {path}")
    return path


def mesh_faces(shape) -> np.ndarray:
    """Quads (1-based vertex indices, C order) of a 2-dimensional node grid."""
    rows, cols = shape
    faces = []
    for i in range(rows - 1):
        for j in range(cols - 1):
            a = i * cols + j + 1
            faces.append((a, a + 1, a + cols + 1, a + cols))
    return np.asarray(faces, dtype=int).reshape(-1, 4)


def write_obj(path, points, grid_shape, name: str = "immersion") -> Path:
    """
    OBJ mesh of display coordinates. Only 2-dimensional charts have faces;
    other charts are written as a point cloud.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    lines = [f"o {name}"]
    lines += [f"v {FLOAT_FORMAT % x} {FLOAT_FORMAT % y} {FLOAT_FORMAT % z}" for x, y, z in points]
    if len(grid_shape) == 2:
        lines += [f"f {a} {b} {c} {d}" for a, b, c, d in mesh_faces(grid_shape)]
    path = _prepare(path)
    path.write_text("\n".join(lines) + "\n")
    logger.info(f"Wrote {path} ({points.shape[0]} vertices)")
    return path


def read_obj_vertices(path) -> np.ndarray:
    vertices = [line.split()[1:4] for line in Path(path).read_text().splitlines() if line.startswith("v ")]
    return np.asarray(vertices, dtype=float)


def write_csv(path, table: pd.DataFrame) -> Path:
    path = _prepare(path)
    table.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.info(f"Wrote {path}")
    return path


# ---------------------------------------------------------
# Solution archives
# ---------------------------------------------------------
def save_solution(path, solution: ImmersionSolution) -> Path:
    """Arrays needed to re-export a solution without solving again."""
    path = _prepare(path)
    with open(path, "wb") as handle:
        np.savez(
            handle,
            coord_min=solution.grid.coord_min,
            coord_max=solution.grid.coord_max,
            samples=np.asarray(solution.grid.shape),
            points=solution.points,
            display=solution.display_points(),
            frames=solution.frames,
            x0_index=np.asarray(solution.x0_index),
        )
    logger.info(f"Wrote {path}")
    return path


def load_solution(path) -> dict:
    """Archive written by save_solution as a dict with the grid rebuilt."""
    try:
        with np.load(path, allow_pickle=False) as archive:
            data = {key: archive[key] for key in archive.files}
    except (OSError, ValueError) as e:
        logger.error(f"Error reading solution archive {path}: {e}")
        raise ConfigurationError(f"Cannot read solution archive {path}: {e}") from e
    data["grid"] = ChartGrid(data["coord_min"], data["coord_max"], tuple(int(s) for s in data["samples"]))
    return data


def archive_table(archive: dict) -> pd.DataFrame:
    """Node table of a loaded archive, same columns as ImmersionSolution.to_frame."""
    grid = archive["grid"]
    nodes = grid.nodes().reshape(-1, grid.dim)
    points = archive["points"].reshape(-1, archive["points"].shape[-1])
    columns = {f"x{i}": nodes[:, i] for i in range(grid.dim)}
    columns.update({f"f{j}": points[:, j] for j in range(points.shape[1])})
    return pd.DataFrame(columns)


def export_archive(archive_path, out_dir, formats=("obj", "csv"), name: str = None) -> dict:
    """Converts a saved solution archive to OBJ and/or CSV."""
    archive = load_solution(archive_path)
    name = name or Path(archive_path).stem
    out_dir = Path(out_dir)
    written = {}
    if "obj" in formats:
        written["obj"] = write_obj(out_dir / f"{name}.obj", archive["display"], archive["grid"].shape, name)
    if "csv" in formats:
        written["csv"] = write_csv(out_dir / f"{name}.csv", archive_table(archive))
    return written
