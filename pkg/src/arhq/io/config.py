"""Strict JSON run configuration.

Unknown keys are fatal (silent misconfiguration is the usual failure mode
in quantization experiments); omitted optional keys get the documented
defaults.  Error messages are path-qualified, e.g.
``act_quantizer.bits: ...``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from arhq.errors import ConfigError
from arhq.io.synth import SynthSpec
from arhq.io.tensorfile import load_tensor
from arhq.pipeline import LayerConfig
from arhq.quantizers import QuantizerSpec

__all__ = ["RunConfig", "load_config", "parse_config"]

# Accepted shorthand on the CLI and in configs.
METHOD_ALIASES = {"svd": "svd_plain", "asvd": "activation_weighted"}

_RUN_KEYS = {
    "rank",
    "floor",
    "smoothing",
    "act_quantizer",
    "weight_quantizer",
    "methods",
    "variants",
    "seed",
    "layer_name",
    "eval_in_sample",
    "synth",
}
_SYNTH_KEYS = {
    "d_in",
    "d_out",
    "n_calib",
    "n_eval",
    "weight_spectrum",
    "residual_anisotropy",
    "seed",
}


@dataclass
class RunConfig:
    """A layer configuration plus run-level settings."""

    layer: LayerConfig
    synth: Optional[SynthSpec] = None
    layer_name: str = "layer0"
    eval_in_sample: bool = False

    def to_dict(self) -> dict:
        doc = self.layer.snapshot()
        doc["layer_name"] = self.layer_name
        doc["eval_in_sample"] = self.eval_in_sample
        if self.synth is not None:
            doc["synth"] = self.synth.to_dict()
        return doc


def _fail(path: str, message: str):
    raise ConfigError(f"{path}: {message}")


def _expect(value, types, path: str, what: str):
    # bool is an int subclass; never accept it where a number is expected
    if isinstance(value, bool) or not isinstance(value, types):
        _fail(path, f"expected {what}, got {type(value).__name__}")
    return value


def _canonical_methods(raw, path: str):
    if not isinstance(raw, list) or not all(isinstance(m, str) for m in raw):
        _fail(path, "expected a list of method names")
    return tuple(METHOD_ALIASES.get(m, m) for m in raw)


def _parse_smoothing(value, path: str, base_dir: Path):
    if value is None:
        return None
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, dict):
        unknown = set(value) - {"alpha", "scales", "scales_file"}
        if unknown:
            _fail(path, f"unknown keys {sorted(unknown)}")
        if len(value) != 1:
            _fail(path, "expected exactly one of alpha, scales, scales_file")
        if "alpha" in value:
            return float(_expect(value["alpha"], (int, float), f"{path}.alpha", "a number"))
        if "scales" in value:
            vec = value["scales"]
            if not isinstance(vec, list) or not vec:
                _fail(f"{path}.scales", "expected a non-empty list of numbers")
            return np.asarray(vec, dtype=np.float64)
        scales = load_tensor(base_dir / value["scales_file"])
        return np.asarray(scales, dtype=np.float64).reshape(-1)
    _fail(path, "expected null, a number, or an object")


def _parse_quantizer(value, path: str) -> QuantizerSpec:
    if not isinstance(value, dict):
        _fail(path, "expected an object")
    try:
        return QuantizerSpec.from_dict(value)
    except (ConfigError, TypeError) as exc:
        _fail(path, str(exc))


def _parse_synth(value, path: str) -> SynthSpec:
    if not isinstance(value, dict):
        _fail(path, "expected an object")
    unknown = set(value) - _SYNTH_KEYS
    if unknown:
        _fail(path, f"unknown keys {sorted(unknown)}")
    try:
        return SynthSpec(**value)
    except Exception as exc:
        _fail(path, str(exc))


def parse_config(doc: dict, base_dir=".") -> RunConfig:
    """Validate a config document and apply defaults."""
    base_dir = Path(base_dir)
    if not isinstance(doc, dict):
        raise ConfigError(f"config root: expected an object, got {type(doc).__name__}")
    unknown = set(doc) - _RUN_KEYS
    if unknown:
        raise ConfigError(f"config root: unknown keys {sorted(unknown)}")
    if "rank" not in doc:
        raise ConfigError("rank: required key is missing")
    _expect(doc["rank"], int, "rank", "an integer")

    kwargs = {"rank": doc["rank"]}
    if "floor" in doc and doc["floor"] is not None:
        kwargs["floor"] = float(_expect(doc["floor"], (int, float), "floor", "a number"))
    if "smoothing" in doc:
        kwargs["smoothing"] = _parse_smoothing(doc["smoothing"], "smoothing", base_dir)
    if "act_quantizer" in doc:
        kwargs["act_quantizer"] = _parse_quantizer(doc["act_quantizer"], "act_quantizer")
    if "weight_quantizer" in doc:
        kwargs["weight_quantizer"] = _parse_quantizer(doc["weight_quantizer"], "weight_quantizer")
    if "methods" in doc:
        kwargs["methods"] = _canonical_methods(doc["methods"], "methods")
    if "variants" in doc:
        variants = doc["variants"]
        if not isinstance(variants, list) or not all(isinstance(v, str) for v in variants):
            raise ConfigError("variants: expected a list of strings")
        kwargs["variants"] = tuple(variants)
    if "seed" in doc:
        kwargs["seed"] = _expect(doc["seed"], int, "seed", "an integer")
    try:
        layer = LayerConfig(**kwargs)
    except ConfigError as exc:
        raise ConfigError(f"config: {exc}") from exc

    synth = _parse_synth(doc["synth"], "synth") if "synth" in doc else None
    layer_name = doc.get("layer_name", "layer0")
    _expect(layer_name, str, "layer_name", "a string")
    eval_in_sample = doc.get("eval_in_sample", False)
    if not isinstance(eval_in_sample, bool):
        raise ConfigError("eval_in_sample: expected a boolean")
    return RunConfig(layer, synth, layer_name, eval_in_sample)


def load_config(path) -> RunConfig:
    """Load and validate a JSON config file."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return parse_config(doc, base_dir=path.parent)
