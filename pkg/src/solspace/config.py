"""Engine defaults, overridable via a JSON config file."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path


@dataclass(frozen=True)
class EngineConfig:
    rho: float = 0.5  # elimination fraction per cycle
    k: int | None = None  # cluster count; None = choose_k heuristic
    lam: float = 0.5  # metric-vs-shape balance in distances
    embedding: str = "tsne"  # default for interactive sessions
    rng_seed: int = 0

    # t-SNE hyperparameters
    tsne_perplexity: float = 30.0
    tsne_iterations: int = 1000
    tsne_learning_rate: float = 200.0

    # level-of-detail distance thresholds, meters
    lod_full: float = 3.0
    lod_representative: float = 10.0

    # room-scale layout, meters
    room_width: float = 20.0
    room_depth: float = 20.0
    room_margin: float = 0.05  # fraction kept clear at the walls
    sky_height: float = 3.0
    table_height: float = 1.1

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(doc: dict) -> "EngineConfig":
        known = {f for f in EngineConfig.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return replace(EngineConfig(), **doc)

    @staticmethod
    def load(path: str) -> "EngineConfig":
        return EngineConfig.from_dict(json.loads(Path(path).read_text()))
