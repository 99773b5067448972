"""JSON and CSV formats.

Graph JSON::

    {"vertices": 3, "edges": [{"source": 0, "target": 1, "length": 1.0}, ...]}

``length`` must be present on every edge (metric graph) or on none.

Condition JSON is one of::

    {"preset": "krein", "params": {...}}
    {"Y_basis": [[...], ...], "R": [[...], ...]}
    {"C": [[...], ...], "B": [[...], ...]}

Matrix entries are numbers or ``[re, im]`` pairs.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .conditions import ConditionCB, ConditionYR, preset_conditions
from .errors import MixedLengths, SchemaError, ValidationError
from .graphs import Graph, MetricGraph

SCHEMA_VERSION = 1


def _version() -> str:
    from . import __version__
    return __version__


def _load_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise SchemaError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None


def graph_from_dict(data) -> Graph | MetricGraph:
    if not isinstance(data, dict) or "vertices" not in data or "edges" not in data:
        raise SchemaError('graph JSON needs "vertices" and "edges"')
    n = data["vertices"]
    if not isinstance(n, int) or isinstance(n, bool):
        raise SchemaError('"vertices" must be an integer')
    if not isinstance(data["edges"], list):
        raise SchemaError('"edges" must be a list')
    edges, lengths = [], []
    for j, e in enumerate(data["edges"]):
        if not isinstance(e, dict):
            raise SchemaError(f"edge {j}: expected an object")
        try:
            s, t = e["source"], e["target"]
        except KeyError as exc:
            raise SchemaError(f"edge {j}: missing {exc.args[0]!r}") from None
        if not all(isinstance(x, int) and not isinstance(x, bool) for x in (s, t)):
            raise SchemaError(f"edge {j}: source and target must be integers")
        edges.append((s, t))
        if "length" in e:
            ell = e["length"]
            if not isinstance(ell, (int, float)) or isinstance(ell, bool):
                raise SchemaError(f"edge {j}: length must be a number")
            lengths.append(float(ell))
    if lengths and len(lengths) != len(edges):
        raise MixedLengths(f"{len(lengths)} of {len(edges)} edges carry a length; give all or none")
    graph = Graph(n, tuple(edges))
    return MetricGraph(graph, tuple(lengths)) if lengths else graph


def parse_graph_json(path) -> Graph | MetricGraph:
    try:
        return graph_from_dict(_load_json(path))
    except ValidationError as exc:
        if isinstance(exc, SchemaError):
            raise
        raise type(exc)(f"{path}: {exc}") from None


def graph_to_dict(g: Graph | MetricGraph) -> dict:
    graph = g.graph if isinstance(g, MetricGraph) else g
    edges = [{"source": s, "target": t} for s, t in graph.edges]
    if isinstance(g, MetricGraph):
        for e, ell in zip(edges, g.lengths):
            e["length"] = ell
    return {"vertices": graph.vertex_count, "edges": edges}


def _complex_matrix(data, name) -> np.ndarray:
    if not isinstance(data, list):
        raise SchemaError(f"{name} must be a list of rows")

    def entry(x):
        if isinstance(x, (int, float)) and not isinstance(x, bool):
            return complex(x)
        if isinstance(x, list) and len(x) == 2 and all(isinstance(y, (int, float)) for y in x):
            return complex(x[0], x[1])
        raise SchemaError(f"{name}: entries must be numbers or [re, im] pairs, got {x!r}")

    rows = [[entry(x) for x in row] if isinstance(row, list) else None for row in data]
    if any(r is None for r in rows) or len({len(r) for r in rows}) > 1:
        raise SchemaError(f"{name} must be a rectangular list of rows")
    return np.array(rows, dtype=complex).reshape(len(rows), len(rows[0]) if rows else 0)


def _matrix_json(a: np.ndarray) -> list:
    a = np.asarray(a)
    if np.all(a.imag == 0):
        return [[float(x) for x in row] for row in a.real]
    return [[[float(x.real), float(x.imag)] for x in row] for row in a]


def condition_from_dict(data, mg: MetricGraph | None = None) -> ConditionYR | ConditionCB:
    if not isinstance(data, dict):
        raise SchemaError("condition JSON must be an object")
    if "preset" in data:
        if mg is None:
            raise SchemaError("a preset condition needs a metric graph")
        return preset_conditions(mg, data["preset"], data.get("params") or {})
    if "Y_basis" in data:
        Q = _complex_matrix(data["Y_basis"], "Y_basis")
        R = _complex_matrix(data.get("R", []), "R") if data.get("R") else np.zeros((Q.shape[1],) * 2)
        if R.shape != (Q.shape[1], Q.shape[1]):
            raise SchemaError(f"R must be {Q.shape[1]} x {Q.shape[1]}, got {R.shape}")
        return ConditionYR(Q, R, name=data.get("name", "custom"))
    if "C" in data and "B" in data:
        return ConditionCB(_complex_matrix(data["C"], "C"), _complex_matrix(data["B"], "B"))
    raise SchemaError('condition JSON needs "preset", "Y_basis" or "C" and "B"')


def parse_condition_json(path, mg: MetricGraph | None = None):
    return condition_from_dict(_load_json(path), mg)


def condition_to_dict(cond) -> dict:
    if isinstance(cond, ConditionYR):
        return {"name": cond.name, "Y_basis": _matrix_json(cond.Y_basis), "R": _matrix_json(cond.R)}
    return {"C": _matrix_json(cond.C), "B": _matrix_json(cond.B)}


def _clean(obj):
    """JSON-safe copy: numpy scalars/arrays to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def envelope(payload: dict, config: dict) -> dict:
    return {"schema_version": SCHEMA_VERSION, "tool_version": _version(),
            "config": _clean(config), "result": _clean(payload)}


def dumps(payload: dict, config: dict) -> str:
    return json.dumps(envelope(payload, config), indent=2, sort_keys=True) + "\n"


def write_json(path, payload: dict, config: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(payload, config), encoding="utf-8")
    return path


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence], config: dict) -> Path:
    """CSV with the run configuration in leading ``#`` comment lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# schema_version: {SCHEMA_VERSION}\n# tool_version: {_version()}\n")
        fh.write("# config: " + json.dumps(_clean(config), sort_keys=True) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]
