"""Python access to the ctbpnet simulator and feature extractors."""

import json

from ._ctbpnet import __version__, class_names, dfm, static_features
from . import _ctbpnet

__all__ = [
    "__version__",
    "class_names",
    "check_supercritical",
    "simulate",
    "load_record",
    "generate",
    "classify",
    "dfm",
    "static_features",
]


def _num(x):
    return float(x) if isinstance(x, str) else x


def check_supercritical(model_class, params=None):
    out = json.loads(_ctbpnet._check_supercritical(model_class, json.dumps(params or {})))
    out["condition_value"] = _num(out["condition_value"])
    out["collapsed_conservative_value"] = _num(out["collapsed_conservative_value"])
    return out


def simulate(model_class, params=None, size=1000, seed=1, max_attempts=1):
    """Returns the record as a dict, or None when every attempt died out."""
    return json.loads(_ctbpnet._simulate(model_class, json.dumps(params or {}), size, seed, max_attempts))


def load_record(path):
    return json.loads(_ctbpnet._load_record(str(path)))


def generate(out_dir, classes=(), per_class=10, size=1000, seed=1, max_attempts=1000, workers=1):
    """Writes a dataset directory and returns its manifest."""
    return json.loads(
        _ctbpnet._generate(str(out_dir), list(classes), per_class, size, seed, max_attempts, workers)
    )


def classify(model_path, record_dir):
    return json.loads(_ctbpnet._classify(str(model_path), str(record_dir)))
