"""JSON/CSV emission with fixed layouts and schema validation."""

from __future__ import annotations

import csv
import json
import math
from fractions import Fraction
from pathlib import Path

import jsonschema
import numpy as np

from .errors import InvariantViolation

SCHEMA_VERSION = 1

# Every report shares this envelope; ``result`` is command specific.
REPORT_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "command", "paper_anchor", "config", "result"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "command": {"type": "string"},
        "paper_anchor": {"type": "string", "minLength": 1},
        "config": {"type": "object"},
        "result": {"type": "object"},
    },
}

RESULT_SCHEMAS = {
    "exponents check": {"required": ["admissible", "max_epsilon", "binding_constraint"]},
    "thinset count": {"required": ["count", "integral", "ratio", "boundary_cases"]},
    "thinset enum": {"required": ["count", "path", "boundary_cases"]},
    "sieve": {"required": ["limit", "primes", "path"]},
    "expsum direct": {"required": ["sum", "bounds"]},
    "expsum vaughan": {"required": ["sigma1", "sigma21", "sigma22", "sigma3", "recombined", "direct", "difference"]},
    "expsum transfer3": {"required": ["rows"]},
    "expsum transfer4": {"required": ["rows"]},
    "variation": {"required": ["r"]},
    "ergodic avg": {"required": ["rows", "ratios"]},
    "ergodic hilbert": {"required": ["rows", "ratios"]},
    "preset": {"required": ["name", "criterion", "passed", "details"]},
}


def to_jsonable(obj):
    """Convert numpy scalars, complex numbers, fractions and non-finite floats."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": to_jsonable(obj.real), "im": to_jsonable(obj.imag)}
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, Fraction):
        return str(obj)
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "as_dict"):
        return to_jsonable(obj.as_dict())
    return str(obj)


def make_report(command: str, anchor: str, config: dict, result: dict) -> dict:
    return to_jsonable({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "paper_anchor": anchor,
        "config": config,
        "result": result,
    })


def validate(report: dict) -> None:
    schema = dict(REPORT_SCHEMA)
    key = "preset" if report.get("command", "").startswith("preset") else report.get("command")
    if key in RESULT_SCHEMAS:
        schema = json.loads(json.dumps(REPORT_SCHEMA))
        schema["properties"]["result"] = {"type": "object", **RESULT_SCHEMAS[key]}
    try:
        jsonschema.validate(report, schema)
    except jsonschema.ValidationError as exc:
        raise InvariantViolation(f"report does not match its schema: {exc.message}") from None


def dumps(report: dict) -> str:
    """Canonical serialisation: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(report: dict, path) -> str:
    validate(report)
    text = dumps(report)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return text


def write_csv(path, header: list[str], rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])
