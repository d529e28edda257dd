"""
Canonical JSON for bodies, coverings and answers.

Floats use Python's shortest round-trip repr, keys keep insertion order and
non-finite reals are written as the strings "inf", "-inf" and "nan", so equal
inputs and seeds give byte-identical files.
"""
import json
import math

import numpy as np

from .bodies import body_from_json
from .errors import InputError
from .macbeath import Covering, CoveringElement

FORMAT_VERSION = 1


def plain(obj):
    """Recursively convert numpy and non-finite values into JSON-safe Python objects."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dumps(obj):
    return json.dumps(plain(obj), indent=2, allow_nan=False) + "\n"


def loads(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError("malformed JSON: %s" % exc) from None


def _real(v):
    if isinstance(v, str):
        try:
            return float(v)
        except ValueError:
            raise InputError("not a real number: %r" % v) from None
    return float(v)


def covering_to_json(cov):
    return {
        "format": FORMAT_VERSION,
        "dim": cov.ambient.dim,
        "eps": cov.eps,
        "c": cov.c,
        "target": cov.target.to_json(),
        "ambient": cov.ambient.to_json(),
        "verified": bool(cov.verified),
        "elements": [{"center": e.center, "scale": e.scale, "layer": int(e.layer)} for e in cov.elements],
        "layers": {str(k): v for k, v in cov.layer_histogram().items()},
        "report": cov.report,
    }


def covering_from_json(spec):
    """Inverse of :func:`covering_to_json`; verification status is not trusted."""
    try:
        target = body_from_json(spec["target"])
        ambient = body_from_json(spec["ambient"])
        els = [CoveringElement(np.array([_real(v) for v in e["center"]], dtype=float),
                               _real(e["scale"]), int(e["layer"])) for e in spec["elements"]]
        cov = Covering(ambient, target, _real(spec["c"]), _real(spec["eps"]), els)
    except (KeyError, TypeError) as exc:
        raise InputError("bad covering file: %s" % exc) from None
    for e in els:
        if e.center.shape != (ambient.dim,):
            raise InputError("element center has the wrong dimension")
    cov.report = spec.get("report")
    return cov
