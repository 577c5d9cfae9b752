"""Plant, controller and trace files.

Plant and controller files are JSON documents written one matrix row per line with
shortest round-trip float reprs, so a stored file reloads and re-stores to the same
bytes. Traces are comma separated tables.
"""

import os
import json

import numpy as np
import polars as pl

from ..utils import jsonify
from .closedloop import assemble, lqg_cost
from .config import config
from .exceptions import ControllerFileError, DimensionError, PlantFileError
from .model import ControllerParams, PlantModel, check_controller_pr, realize_controller

FIXTURE_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "fixtures")

PLANT_MATRICES = ("A", "B", "C", "D", "E", "F", "G", "d")
CONTROLLER_MATRICES = ("R", "b", "e")


def fixture_path(name: str) -> str:
    """Path of a bundled fixture, e.g. fixture_path('example8.plant')"""
    path = os.path.join(FIXTURE_DIR, name)
    if not os.path.exists(path):
        raise FileNotFoundError(f"No bundled fixture named {name}")
    return path


def _format_float(x: float) -> str:
    return repr(float(x))


def _format_value(value, indent: str = "  ") -> str:
    if isinstance(value, np.ndarray) and value.ndim == 2:
        value = value.tolist()
    if isinstance(value, list) and value and all(isinstance(row, list) for row in value):
        rows = [
            "[" + ", ".join(_format_float(x) if isinstance(x, (int, float)) else json.dumps(x) for x in row) + "]"
            for row in value
        ]
        inner = f",\n{indent}  ".join(rows)
        return f"[\n{indent}  {inner}\n{indent}]"
    return json.dumps(value)


def dumps(doc: dict) -> str:
    body = ",\n".join(f"  {json.dumps(key)}: {_format_value(value)}" for key, value in doc.items())
    return "{\n" + body + "\n}\n"


def _read_json(path: str, error_cls) -> dict:
    try:
        with open(path) as f:
            doc = json.load(f)
    except json.JSONDecodeError as err:
        raise error_cls(f"{path}:{err.lineno}:{err.colno}: {err.msg}")
    except OSError as err:
        raise error_cls(f"Unable to read {path}: {err}")
    if not isinstance(doc, dict):
        raise error_cls(f"{path}: top level must be an object")
    return doc


def _read_matrix(doc: dict, key: str, path: str, error_cls) -> np.ndarray:
    if key not in doc:
        raise error_cls(f"{path}: missing matrix {key}")
    rows = doc[key]
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise error_cls(f"{path}: {key} must be a non-empty list of rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise error_cls(f"{path}: {key} has ragged rows (lengths {sorted(widths)})")
    try:
        return np.array(rows, dtype=float)
    except (TypeError, ValueError) as err:
        raise error_cls(f"{path}: {key} has non-numeric entries ({err})")


def load_plant(path: str) -> PlantModel:
    doc = _read_json(path, PlantFileError)
    mats = {key: _read_matrix(doc, key, path, PlantFileError) for key in PLANT_MATRICES}
    if "theta1" in doc:
        mats["theta1"] = _read_matrix(doc, "theta1", path, PlantFileError)

    dims = doc.get("dims")
    if not isinstance(dims, dict):
        raise PlantFileError(f"{path}: missing dims")
    expected = {
        "A": ("n", "n"),
        "B": ("n", "m1"),
        "C": ("p1", "n"),
        "D": ("p1", "m1"),
        "E": ("n", "p2"),
        "F": ("r", "n"),
        "G": ("r", "p2"),
        "d": ("p2", "m2"),
    }
    for key, (rows, cols) in expected.items():
        try:
            shape = (int(dims[rows]), int(dims[cols]))
        except (KeyError, TypeError, ValueError):
            raise PlantFileError(f"{path}: dims must give integer {rows} and {cols}")
        if mats[key].shape != shape:
            raise PlantFileError(
                f"{path}: {key} is {mats[key].shape[0]}x{mats[key].shape[1]}, dims say {shape[0]}x{shape[1]}"
            )

    try:
        return PlantModel(name=doc.get("name", ""), notes=doc.get("notes", ""), **mats)
    except DimensionError as err:
        raise PlantFileError(f"{path}: {err}")


def store_plant(plant: PlantModel, path: str) -> None:
    doc = {}
    if plant.name:
        doc["name"] = plant.name
    if plant.notes:
        doc["notes"] = plant.notes
    doc["dims"] = plant.dims
    for key in PLANT_MATRICES:
        doc[key] = getattr(plant, key)
    with open(path, "w") as f:
        f.write(dumps(doc))


def load_controller(path: str, plant: PlantModel = None) -> ControllerParams:
    """Reads (R, b, e); derived entries in the file are ignored and recomputed on demand"""
    doc = _read_json(path, ControllerFileError)
    mats = {key: _read_matrix(doc, key, path, ControllerFileError) for key in CONTROLLER_MATRICES}
    try:
        u = ControllerParams(**mats)
        if plant is not None:
            u.check_plant(plant)
    except DimensionError as err:
        raise ControllerFileError(f"{path}: {err}")
    return u


def controller_document(u: ControllerParams, plant: PlantModel = None) -> dict:
    doc = {key: getattr(u, key) for key in CONTROLLER_MATRICES}
    if plant is None:
        return doc

    real = realize_controller(plant, u)
    sys = assemble(plant, real)
    cost = lqg_cost(plant, u)
    pr = check_controller_pr(plant, real, config.pr_tolerance)
    doc["a"] = real.a
    doc["c"] = real.c
    doc["pr_residuals"] = {k: float(v) for k, v in pr.residuals.items()}
    doc["stabilizing"] = cost.stabilizing
    doc["cost"] = cost.value if cost.stabilizing else None
    doc["eigenvalues"] = jsonify({"eig": sys.sorted_eigenvalues()})["eig"]
    return doc


def store_controller(u: ControllerParams, path: str, plant: PlantModel = None) -> None:
    with open(path, "w") as f:
        f.write(dumps(controller_document(u, plant)))


def write_trace(rows: list[dict] | pl.DataFrame, path: str) -> pl.DataFrame:
    df = rows if isinstance(rows, pl.DataFrame) else pl.DataFrame(rows)
    df.write_csv(path)
    return df


def read_trace(path: str) -> pl.DataFrame:
    return pl.read_csv(path)
