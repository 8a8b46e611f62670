"""Shared helpers for the versioned JSON formats."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .errors import SchemaError

SUPPORTED_MAJOR = 1


def check_version(data: dict, expected_format: str | None) -> None:
    """Reject records with a foreign format tag or an unknown major version.

    Records without tags are accepted as the current version so that plain
    ``{"n": ..., "edges": ...}`` files keep working.
    """
    if not isinstance(data, dict):
        raise SchemaError("expected a JSON object")
    fmt = data.get("format")
    if expected_format is not None and fmt is not None and fmt != expected_format:
        raise SchemaError(f"expected format {expected_format!r}, got {fmt!r}")
    version = data.get("version")
    if version is None:
        return
    try:
        major = int(str(version).split(".")[0])
    except ValueError:
        raise SchemaError(f"unparseable version {version!r}") from None
    if major != SUPPORTED_MAJOR:
        raise SchemaError(f"unsupported major version {major} (supported: {SUPPORTED_MAJOR})")


def dump_json(obj: Any, path: str | Path) -> None:
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=False) + "\n")


def load_json(path: str | Path) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc


def complex_to_json(arr: np.ndarray) -> dict:
    arr = np.asarray(arr, dtype=complex)
    return {
        "shape": list(arr.shape),
        "re": arr.real.ravel().tolist(),
        "im": arr.imag.ravel().tolist(),
    }


def complex_from_json(rec: dict) -> np.ndarray:
    try:
        shape = tuple(int(s) for s in rec["shape"])
        data = np.asarray(rec["re"], dtype=float) + 1j * np.asarray(rec["im"], dtype=float)
        return data.reshape(shape)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed complex array record: {exc}") from exc
