"""Experiment records, their JSON/CSV serialization, and gate-file loading.

JSON is the primary format: one object, keys sorted, UTF-8, floats at full
repr precision so records round-trip losslessly. CSV exists only for
trace-like payloads (a record carries its column mapping when it has one).
Complex matrices serialize as nested row-major arrays of [re, im] pairs.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .orbital import GateSequence
from .qstate import DenseOperator


@dataclass
class ExperimentRecord:
    """One reproducible experiment result.

    provenance labels each payload entry: "exact" for deterministically
    computed values, "sampled" for seeded frequencies, "reference" for
    values quoted for comparison only, "parameter" for echoed inputs.
    wall_time_s is the only field expected to differ between identical runs.
    """

    command: str
    config: dict
    payload: dict
    provenance: dict
    artifact_version: str
    wall_time_s: float
    csv_columns: list | None = field(default=None)

    def to_dict(self) -> dict:
        return asdict(self)


def record_from_dict(data: dict) -> ExperimentRecord:
    return ExperimentRecord(
        command=data["command"],
        config=data["config"],
        payload=data["payload"],
        provenance=data["provenance"],
        artifact_version=data["artifact_version"],
        wall_time_s=data["wall_time_s"],
        csv_columns=data.get("csv_columns"),
    )


def emit(record: ExperimentRecord, fmt: str = "json") -> bytes:
    """Serialize a record: sorted-key JSON, or CSV for trace-like payloads."""
    if fmt == "json":
        return (json.dumps(record.to_dict(), sort_keys=True, indent=2) + "\n").encode("utf-8")
    if fmt == "csv":
        if not record.csv_columns:
            raise ValueError(f"command {record.command!r} has no tabular payload; use json")
        headers = [header for header, _ in record.csv_columns]
        columns = [record.payload[key] for _, key in record.csv_columns]
        lengths = {len(col) for col in columns}
        if len(lengths) != 1:
            raise ValueError("csv columns have mismatched lengths")  # internal bug
        lines = [",".join(headers)]
        for row in zip(*columns):
            lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
        return ("\n".join(lines) + "\n").encode("utf-8")
    raise ValueError(f"unknown format {fmt!r}")


def parse(blob: bytes) -> ExperimentRecord:
    """Inverse of emit(..., 'json')."""
    return record_from_dict(json.loads(blob.decode("utf-8")))


def matrix_to_pairs(matrix: np.ndarray) -> list:
    """Row-major nested lists of [re, im] pairs."""
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(matrix)]


def vector_to_pairs(vector: np.ndarray) -> list:
    return [[float(v.real), float(v.imag)] for v in np.asarray(vector)]


def pairs_to_matrix(rows: list) -> np.ndarray:
    try:
        arr = np.asarray(rows, dtype=float)
    except (TypeError, ValueError) as err:
        raise ValueError(f"malformed matrix entries: {err}") from err
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValueError(f"expected rows of [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def _nesting_depth(node) -> int:
    depth = 0
    while isinstance(node, list):
        depth += 1
        node = node[0] if node else None
    return depth


def load_gates(path: str | Path) -> GateSequence:
    """Read a gate sequence from a JSON file of [re, im]-pair matrices.

    The file holds either a single matrix (depth-3 nesting) or a list of
    matrices (depth-4). Every gate must be square, equally sized, and
    unitary; failures name the offending gate index.
    """
    raw = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as err:
        raise ValueError(f"gate file {path} is not valid JSON: {err}") from err
    if not isinstance(data, list) or not data:
        raise ValueError(f"gate file {path} must hold a non-empty JSON array (M >= 1)")
    depth = _nesting_depth(data)
    if depth == 3:
        matrices = [data]
    elif depth == 4:
        matrices = data
    else:
        raise ValueError(f"gate file {path}: expected a matrix or list of matrices of [re, im] pairs")

    gates = []
    dim = None
    for k, rows in enumerate(matrices):
        try:
            mat = pairs_to_matrix(rows)
        except ValueError as err:
            raise ValueError(f"gate {k}: {err}") from err
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"gate {k} is not square: shape {mat.shape}")
        if dim is None:
            dim = mat.shape[0]
        elif mat.shape[0] != dim:
            raise ValueError(f"gate {k} has dim {mat.shape[0]}, expected {dim}")
        op = DenseOperator(mat.shape[0], mat)
        if op.unitarity_defect() > 1e-10:
            raise ValueError(f"gate {k} is not unitary (max |U†U − I| = {op.unitarity_defect():.3e})")
        gates.append(op)
    return GateSequence(dim, tuple(gates))
