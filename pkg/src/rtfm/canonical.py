"""Canonical JSON encoding and content hashing.

Wire payloads and on-disk artifacts must be byte-identical for identical
inputs, so floats are always rendered with ``%.17g`` (enough digits to
round-trip any IEEE double) and object keys are sorted.
"""

from __future__ import annotations

import hashlib
import math
from typing import Any

import numpy as np


def _format_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise ValueError("non-finite float in canonical payload")
    return format(x, ".17g")


def _encode(obj: Any, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_format_float(float(obj)))
    elif isinstance(obj, str):
        import json

        out.append(json.dumps(obj, ensure_ascii=True))
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = obj.tolist() if isinstance(obj, np.ndarray) else obj
        out.append("[")
        for i, item in enumerate(items):
            if i:
                out.append(",")
            _encode(item, out)
        out.append("]")
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise TypeError(f"non-string key {key!r} in canonical payload")
            if i:
                out.append(",")
            _encode(key, out)
            out.append(":")
            _encode(obj[key], out)
        out.append("}")
    else:
        raise TypeError(f"cannot canonically encode {type(obj).__name__}")


def canonical_dumps(obj: Any) -> str:
    """Serialize to canonical JSON: sorted keys, compact separators,
    floats formatted with 17 significant digits. NaN is not representable;
    missing values must be encoded as ``null`` by the caller."""
    out: list[str] = []
    _encode(obj, out)
    return "".join(out)


def content_hash(obj: Any) -> str:
    """sha256 hex digest of the canonical encoding."""
    return hashlib.sha256(canonical_dumps(obj).encode("utf-8")).hexdigest()


def file_hash(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
