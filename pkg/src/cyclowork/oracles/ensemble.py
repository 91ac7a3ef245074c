"""Monte Carlo work samples and their serialisation."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from ..numerics import EnsembleStats, summarize
from ..provenance import header_lines


@dataclass
class WorkSampleEnsemble:
    samples: np.ndarray
    stats: EnsembleStats
    metadata: dict = field(default_factory=dict)

    @classmethod
    def from_samples(cls, samples: np.ndarray, **metadata) -> "WorkSampleEnsemble":
        samples = np.asarray(samples, dtype=float)
        return cls(samples=samples, stats=summarize(samples), metadata=dict(metadata))

    @property
    def flags(self) -> list[str]:
        return list(self.metadata.get("flags", []))

    def write_csv(self, path: str | Path) -> None:
        lines = header_lines(self.metadata.get("config_hash", ""), self.metadata.get("seed"))
        lines.append("trajectory_id,W")
        lines += [f"{i},{w:.17g}" for i, w in enumerate(self.samples)]
        Path(path).write_text("\n".join(lines) + "\n")

    def summary(self) -> dict:
        return {"stats": self.stats.to_dict(), **self.metadata}

    def write_summary(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n")


def map_chunks(fn: Callable[[int, int], np.ndarray], n: int, chunk: int, threads: int) -> np.ndarray:
    """Evaluate ``fn(start, stop)`` over fixed index chunks; results ordered by index.

    Chunk boundaries do not depend on ``threads``, so the output is identical
    for any worker count.
    """
    bounds = [(s, min(s + chunk, n)) for s in range(0, n, chunk)]
    if threads <= 1:
        parts = [fn(a, b) for a, b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda ab: fn(*ab), bounds))
    return np.concatenate(parts) if parts else np.empty(0)
