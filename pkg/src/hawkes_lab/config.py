"""JSON configuration: schema, parsing into specs, and serialisation."""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import jsonschema

from .chains import MarkChainSpec, RegimeSpec
from .errors import ConfigNotFoundError, ConfigurationError, ValidationError
from .hawkes import HawkesSpec, Identity, Saturating, ScaledSoft
from .kernels import kernel_from_dict
from .price import PriceModelSpec

SCHEMA_VERSION = 1

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_matrix = {"type": "array", "minItems": 1, "items": {"type": "array", "minItems": 1, "items": _num}}


def _tagged(variants: dict) -> dict:
    """Object schema discriminated by ``type``; each variant closed to extra keys."""
    return {
        "type": "object",
        "required": ["type"],
        "properties": {"type": {"enum": list(variants)}},
        "allOf": [
            {
                "if": {"properties": {"type": {"const": name}}, "required": ["type"]},
                "then": {
                    "properties": {"type": {}, **props},
                    "required": list(props),
                    "additionalProperties": False,
                },
            }
            for name, props in variants.items()
        ],
    }


MODEL_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["hawkes", "marks"],
    "properties": {
        "s0": _num,
        "hawkes": {
            "type": "object",
            "additionalProperties": False,
            "required": ["base", "kernel"],
            "properties": {
                "base": _tagged({
                    "fixed": {"lambda": _pos},
                    "regime": {"A": _matrix, "lambdas": {"type": "array", "minItems": 1, "items": _pos}},
                }),
                "kernel": _tagged({
                    "exponential": {"alpha": _nonneg, "beta": _pos},
                    "power_law": {"k": _nonneg, "c": _pos, "p": _pos},
                    "zero": {},
                }),
                "nonlinearity": _tagged({
                    "identity": {},
                    "saturating": {"cap": _pos},
                    "scaled_soft": {"cap": _pos, "slope": _pos},
                }),
            },
        },
        "marks": {
            "type": "object",
            "additionalProperties": False,
            "required": ["P", "a"],
            "properties": {
                "P": {"type": "array", "minItems": 2,
                      "items": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}}},
                "a": {"type": "array", "minItems": 2, "items": _num},
            },
        },
    },
}

RUN_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "horizon": _pos,
        "n": _pos,
        "t": _pos,
        "paths": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "workers": {"type": "integer", "minimum": 1},
        "mode": {"enum": ["lln", "fclt"]},
        "out": {"type": "string"},
    },
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["model"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "model": MODEL_SCHEMA,
        "run": RUN_SCHEMA,
    },
}

_VALIDATOR = jsonschema.Draft202012Validator(CONFIG_SCHEMA)


def _leaf_errors(error):
    if error.context:
        for sub in error.context:
            yield from _leaf_errors(sub)
    else:
        yield error


def validate_document(doc) -> None:
    """Raise :class:`ConfigurationError` listing every offending key path."""
    problems = []
    for err in _VALIDATOR.iter_errors(doc):
        for leaf in _leaf_errors(err):
            path = ".".join(str(p) for p in leaf.absolute_path) or "<root>"
            problems.append((path, leaf.message))
    if problems:
        problems = sorted(set(problems))
        detail = "; ".join(f"{p}: {m}" for p, m in problems)
        raise ConfigurationError(f"schema violation: {detail}", paths=[p for p, _ in problems])


def hawkes_from_dict(d: dict) -> HawkesSpec:
    base = d["base"]
    if base["type"] == "fixed":
        background = float(base["lambda"])
    else:
        background = RegimeSpec(base["A"], base["lambdas"])
    h = d.get("nonlinearity", {"type": "identity"})
    if h["type"] == "identity":
        nonlin = Identity()
    elif h["type"] == "saturating":
        nonlin = Saturating(float(h["cap"]))
    else:
        nonlin = ScaledSoft(float(h["cap"]), float(h["slope"]))
    return HawkesSpec(background, kernel_from_dict(d["kernel"]), nonlin)


def model_from_dict(d: dict) -> PriceModelSpec:
    try:
        return PriceModelSpec(
            float(d.get("s0", 0.0)), hawkes_from_dict(d["hawkes"]), MarkChainSpec.from_dict(d["marks"])
        )
    except ValidationError as exc:
        exc.paths = tuple("model." + p if not p.startswith("model.") else p for p in exc.paths)
        raise


@dataclass
class RunParams:
    horizon: Optional[float] = None
    n: Optional[float] = None
    t: Optional[float] = None
    paths: Optional[int] = None
    seed: Optional[int] = None
    workers: Optional[int] = None
    mode: Optional[str] = None
    out: Optional[str] = None

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self) if getattr(self, f.name) is not None}


@dataclass(eq=False)
class RunConfig:
    model: PriceModelSpec
    run: RunParams = field(default_factory=RunParams)

    def to_dict(self):
        d = {"schema_version": SCHEMA_VERSION, "model": self.model.to_dict()}
        run = self.run.to_dict()
        if run:
            d["run"] = run
        return d

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.to_dict() == other.to_dict()

    def content_hash(self) -> str:
        """Git blob hash of the canonical JSON form."""
        data = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def parse_config(doc: dict) -> RunConfig:
    validate_document(doc)
    run = RunParams(**doc.get("run", {}))
    return RunConfig(model_from_dict(doc["model"]), run)


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigNotFoundError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"invalid JSON in {path}: {exc}") from exc
    return parse_config(doc)


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        return _clean(obj.item())
    return obj


def dumps(obj) -> str:
    """Deterministic JSON; floats use the shortest round-trip repr, non-finite become null."""
    return json.dumps(_clean(obj), indent=2) + "\n"


def atomic_write(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_report(report: dict, path) -> None:
    atomic_write(path, dumps(report))


def write_config(config: RunConfig, path) -> None:
    atomic_write(path, dumps(config.to_dict()))
