"""
Loads grid-sampled fields from .npy (with a JSON sidecar) or .csv files,
downloading http(s) sources into the field cache first.
"""
import json
import logging
import os
from pathlib import Path
from typing import Optional

import httpx
import numpy as np
import pandas as pd
from dotenv import load_dotenv

from immerse.geometry.chart_manifold import ChartGrid, GridSampled
from immerse.geometry.errors import ConfigurationError, ShapeError

load_dotenv()

logger = logging.getLogger(__name__)

FIELD_CACHE = os.getenv("IMMERSE_FIELD_CACHE", "./field_cache")
HEADER_KEYS = ("field", "dims", "shape", "value_shape")


class FieldLoader:
    """Downloads and caches sampled field files."""

    def __init__(self, cache_dir: Optional[str] = None):
        self.cache_dir = Path(cache_dir or FIELD_CACHE)

    def _download_file(self, url: str) -> Path:
        """
        Downloads url into the cache, reusing an earlier download.

        Args:
            url: http(s) location of the field file
        """
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        local_path = self.cache_dir / Path(httpx.URL(url).path).name
        if local_path.exists():
            logger.info(f"Using cached: {local_path.name}")
            return local_path

        logger.info(f"Downloading {local_path.name} from {url}")
        try:
            with httpx.Client(timeout=60.0) as client:
                response = client.get(url)
                response.raise_for_status()
                local_path.write_bytes(response.content)
            logger.info(f"Downloaded: {local_path.name} ({len(response.content)} bytes)")
            return local_path
        except httpx.HTTPStatusError as e:
            logger.error(f"HTTP error downloading {local_path.name}: {e.response.status_code}")
            raise ConfigurationError(f"Could not download field file {url}") from e
        except Exception as e:
            logger.error(f"Failed to download {local_path.name}: {e}")
            raise

    def resolve(self, source: str, base_dir: Optional[Path] = None) -> Path:
        """Local path of a field file; relative paths resolve against base_dir."""
        if source.startswith(("http://", "https://")):
            path = self._download_file(source)
            if path.suffix == ".npy":
                self._download_sidecar(source, path)
            return path
        path = Path(source)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        if not path.exists():
            raise ConfigurationError(f"Field file {path} not found")
        return path

    def _download_sidecar(self, source: str, path: Path) -> None:
        sidecar = path.with_suffix(".json")
        if not sidecar.exists():
            self._download_file(source[: -len(".npy")] + ".json")

    def load(self, source: str, grid: ChartGrid, order: int = 3, base_dir: Optional[Path] = None) -> GridSampled:
        path = self.resolve(source, base_dir)
        if path.suffix == ".npy":
            header, values = read_npy_field(path)
        elif path.suffix == ".csv":
            header, values = read_csv_field(path)
        else:
            raise ConfigurationError(f"Unsupported field file type {path.suffix!r}")
        return sampled_field(header, values, grid, order)


# ---------------------------------------------------------
# Formats
# ---------------------------------------------------------
def _parse_header(header: dict, path: Path) -> dict:
    missing = [key for key in HEADER_KEYS if key not in header]
    if missing:
        raise ConfigurationError(f"Field file {path} misses header keys {missing}")
    return {
        "field": str(header["field"]),
        "dims": int(header["dims"]),
        "shape": tuple(int(s) for s in header["shape"]),
        "value_shape": tuple(int(s) for s in header["value_shape"]),
    }


def read_npy_field(path: Path):
    """Values from the .npy file, header from the .json sidecar next to it."""
    sidecar = Path(path).with_suffix(".json")
    try:
        header = _parse_header(json.loads(sidecar.read_text()), sidecar)
        values = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as e:
        logger.error(f"Error reading field file {path}: {e}")
        raise ConfigurationError(f"Cannot read field file {path}: {e}") from e
    return header, values


def read_csv_field(path: Path):
    """
    CSV with '#'-prefixed header lines (field, dims, shape, value_shape)
    followed by one flattened value row per node in C order.
    """
    raw = {}
    with open(path) as handle:
        for line in handle:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].partition(":")
            raw[key.strip()] = value.split() if key.strip() != "field" else value.strip()
    header = _parse_header({k: (v[0] if k == "dims" else v) for k, v in raw.items()}, path)
    try:
        table = pd.read_csv(path, comment="#", header=None, skipinitialspace=True)
    except (OSError, ValueError) as e:
        logger.error(f"Error reading field file {path}: {e}")
        raise ConfigurationError(f"Cannot read field file {path}: {e}") from e
    return header, table.to_numpy(dtype=float)


def write_csv_field(path: Path, name: str, values, dims: int) -> Path:
    """Inverse of read_csv_field."""
    values = np.asarray(values, dtype=float)
    shape, value_shape = values.shape[:dims], values.shape[dims:]
    lines = [
        f"# field: {name}",
        f"# dims: {dims}",
        f"# shape: {' '.join(str(s) for s in shape)}",
        f"# value_shape: {' '.join(str(s) for s in value_shape)}",
    ]
    rows = pd.DataFrame(values.reshape(int(np.prod(shape)), -1))
    Path(path).write_text("\n".join(lines) + "\n" + rows.to_csv(header=False, index=False, float_format="%.17g"))
    return Path(path)


def write_npy_field(path: Path, name: str, values, dims: int) -> Path:
    values = np.asarray(values, dtype=float)
    np.save(path, values, allow_pickle=False)
    header = {"field": name, "dims": dims, "shape": list(values.shape[:dims]),
              "value_shape": list(values.shape[dims:])}
    Path(path).with_suffix(".json").write_text(json.dumps(header, indent=2))
    return Path(path)


def sampled_field(header: dict, values, grid: ChartGrid, order: int = 3) -> GridSampled:
    if header["dims"] != grid.dim or header["shape"] != grid.shape:
        raise ShapeError(f"Field {header['field']!r} sampled on {header['shape']}, chart grid is {grid.shape}")
    values = np.asarray(values, dtype=float).reshape(header["shape"] + header["value_shape"])
    logger.debug(f"Loaded sampled field {header['field']!r} with value shape {header['value_shape']}")
    return GridSampled(grid, values, order=order, name=header["field"])
