"""Config hashing and output headers."""

from __future__ import annotations

import hashlib
import json
import math
from typing import Any

from . import __version__


def _clean(obj: Any) -> Any:
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def canonical_json(obj: Any) -> str:
    return json.dumps(_clean(obj), sort_keys=True, separators=(",", ":"))


def config_hash(obj: Any) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()[:16]


def header_lines(cfg_hash: str, seed: int | None) -> list[str]:
    return [f"# config_hash={cfg_hash}", f"# seed={seed if seed is not None else 'none'}", f"# version={__version__}"]
