"""Event-sourced state machine for one exploration session.

State is a pure fold of the event log: replaying the log against the same
solution space reproduces the state byte-for-byte. Events cover seed
selection, re-cluster cycles, cluster expansion, and embedding switches;
the session also materializes the spatial layout and per-solution
visualization-table payloads the UI renders.
"""

from __future__ import annotations

import enum
import json
import zlib
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import cluster as cluster_mod
from . import recommend
from .config import EngineConfig
from .core import FeatureWeights, SolutionSpace, weighted_feature_matrix
from .errors import ContractError, ConflictError, NotFoundError
from .reduce import Embedding, TsneConfig

EVENT_TYPES = ("create_session", "select_seed", "remove_seed",
               "trigger_recluster", "expand_cluster", "set_embedding_method")


@dataclass(frozen=True)
class SessionEvent:
    seq: int
    timestamp: float
    type: str
    payload: dict

    def __post_init__(self):
        if self.type not in EVENT_TYPES:
            raise ContractError(f"unknown event type {self.type!r}")

    def to_line(self) -> str:
        return json.dumps({"seq": self.seq, "ts": self.timestamp,
                           "type": self.type, "payload": self.payload},
                          sort_keys=True, separators=(",", ":"))

    @staticmethod
    def from_line(line: str) -> "SessionEvent":
        doc = json.loads(line)
        return SessionEvent(seq=int(doc["seq"]), timestamp=float(doc["ts"]),
                            type=doc["type"], payload=doc["payload"])


class LodLevel(enum.IntEnum):
    """Detail tiers, ordered so that more detail compares greater."""

    STAR = 0
    REPRESENTATIVE = 1
    FULL_DETAIL = 2


def lod_for(distance: float, thresholds: tuple[float, float] = (3.0, 10.0)) -> LodLevel:
    """Presentation tier for an object at `distance` meters from the viewer."""
    if distance < 0:
        raise ContractError("distance must be >= 0")
    full, rep = thresholds
    if distance < full:
        return LodLevel.FULL_DETAIL
    if distance < rep:
        return LodLevel.REPRESENTATIVE
    return LodLevel.STAR


@dataclass(frozen=True)
class SpatialLayout:
    """Star points in the sky and representative tables below them."""

    star_ids: tuple[str, ...]
    star_positions: np.ndarray  # n x 3 meters, y = sky height
    tables: tuple[tuple[str, str, tuple[float, float, float]], ...]  # (cluster, rep id, pos)
    room: tuple[float, float]
    sky_height: float
    table_height: float


def _jitter(solution_id: str, radius: float = 0.1) -> tuple[float, float]:
    """Deterministic in-room jitter for degenerate (all-identical) embeddings."""
    h = zlib.crc32(solution_id.encode())
    ang = (h & 0xFFFF) / 0xFFFF * 2 * np.pi
    r = ((h >> 16) & 0xFFFF) / 0xFFFF * radius
    return r * np.cos(ang), r * np.sin(ang)


def compute_layout(tree: cluster_mod.ClusterTree, embedding: Embedding,
                   survivors: np.ndarray, space: SolutionSpace,
                   config: EngineConfig) -> SpatialLayout:
    """Scale the embedding's (x, z) plane into the room with a margin,
    preserving aspect ratio. Stars sit at sky height; each representative's
    table sits directly below its cluster's star centroid."""
    coords = embedding.coords
    n = coords.shape[0]
    if n != len(survivors):
        raise ContractError("embedding does not cover the survivor set")
    ids = [space.solutions[i].id for i in survivors]
    xz = coords[:, :2].copy()
    center = (xz.max(axis=0) + xz.min(axis=0)) / 2.0
    span = xz.max(axis=0) - xz.min(axis=0)
    avail_x = config.room_width * (1.0 - 2 * config.room_margin)
    avail_z = config.room_depth * (1.0 - 2 * config.room_margin)
    max_span = float(span.max())
    if n == 1:
        pts = np.zeros((1, 2))
    elif max_span <= 0.0:
        pts = np.array([_jitter(i) for i in ids])
    else:
        scale = min(avail_x / max_span, avail_z / max_span)
        pts = (xz - center) * scale
    stars = np.column_stack([pts[:, 0], np.full(n, config.sky_height), pts[:, 1]])

    row_of = {int(s): r for r, s in enumerate(survivors)}
    tables = []

    def walk(c: cluster_mod.Cluster):
        rows = [row_of[m] for m in c.members]
        cx = float(stars[rows, 0].mean())
        cz = float(stars[rows, 2].mean())
        tables.append((c.id, space.solutions[c.representative].id,
                       (cx, config.table_height, cz)))
        for ch in c.children or ():
            walk(ch)

    for c in tree.roots:
        walk(c)
    return SpatialLayout(
        star_ids=tuple(ids),
        star_positions=stars,
        tables=tuple(tables),
        room=(config.room_width, config.room_depth),
        sky_height=config.sky_height,
        table_height=config.table_height,
    )


@dataclass(frozen=True)
class VisualizationTableModel:
    solution_id: str
    spider: tuple[tuple[str, float, float], ...]  # (channel, normalized, raw)
    radial: tuple[tuple[str, float], ...]  # (channel, population percentile)
    detail_tier: str


def table_model(space: SolutionSpace, survivors: np.ndarray,
                sid: str) -> VisualizationTableModel:
    """Spider-diagram and radial-graph payload for one surviving solution.

    Radial values are population percentiles against the current survivor
    set: rank/(n-1)*100 with the midpoint tie rule; a singleton population
    puts every channel at 50."""
    survivors = np.asarray(survivors, dtype=np.int64)
    i = space.index_of(sid) if sid in {space.solutions[j].id for j in survivors} else None
    if i is None:
        raise NotFoundError(f"solution {sid!r} is not in the survivor set")
    row = space.metric[i]
    spider = tuple(
        (ch, float(row[j]), space.raw_value(i, ch))
        for j, ch in enumerate(space.metric_channels)
    )
    pop = space.metric[survivors]
    n = len(survivors)
    radial = []
    for j, ch in enumerate(space.metric_channels):
        if n == 1:
            pct = 50.0
        else:
            col = pop[:, j]
            less = float(np.count_nonzero(col < row[j]))
            equal = float(np.count_nonzero(col == row[j]))
            rank = less + (equal - 1.0) / 2.0  # midpoint tie rule
            pct = rank / (n - 1) * 100.0
        radial.append((ch, pct))
    return VisualizationTableModel(solution_id=sid, spider=spider,
                                   radial=tuple(radial), detail_tier="full")


class ExplorationSession:
    """Materialized state of one exploration, driven only by apply_event."""

    def __init__(self, space: SolutionSpace, space_ref: str):
        self.space = space
        self.space_ref = space_ref
        self.config = EngineConfig()
        self.cycle = 0
        self.seeds: list[tuple[str, int]] = []  # (solution id, creation cycle)
        self.survivors = np.arange(len(space), dtype=np.int64)
        self.weights = FeatureWeights.uniform(space.n_metric, space.n_shape)
        self.tree: Optional[cluster_mod.ClusterTree] = None
        self.embedding: Optional[Embedding] = None
        self.layout: Optional[SpatialLayout] = None
        self.log: list[SessionEvent] = []

    # -- basic accessors ----------------------------------------------------

    @property
    def version(self) -> int:
        return len(self.log)

    def seed_ids(self) -> list[str]:
        return [s for s, _ in self.seeds]

    def seed_indices(self) -> list[int]:
        return [self.space.index_of(s) for s, _ in self.seeds]

    def survivor_ids(self) -> list[str]:
        return [self.space.solutions[i].id for i in self.survivors]

    def _weighted_rows(self, indices: np.ndarray) -> np.ndarray:
        return weighted_feature_matrix(self.space.metric[indices],
                                       self.space.shape[indices], self.weights)

    # -- event application --------------------------------------------------

    def apply_event(self, event: SessionEvent,
                    progress: Optional[Callable] = None) -> None:
        if event.seq != len(self.log):
            raise ConflictError(
                f"stale sequence number {event.seq}; next is {len(self.log)}")
        if event.type == "create_session":
            if event.seq != 0:
                raise ContractError("create_session must be event 0")
            self._apply_create(event.payload, progress)
        elif not self.log:
            raise ContractError("first event must be create_session")
        elif event.type == "select_seed":
            self._apply_select(event.payload["id"])
        elif event.type == "remove_seed":
            self._apply_remove(event.payload["id"])
        elif event.type == "trigger_recluster":
            self._apply_recluster(event.payload, progress)
        elif event.type == "expand_cluster":
            self._apply_expand(event.payload)
        elif event.type == "set_embedding_method":
            self._apply_set_method(event.payload["method"], progress)
        self.log.append(event)

    def _tsne_config(self, seed: int) -> TsneConfig:
        return TsneConfig(perplexity=self.config.tsne_perplexity,
                          iterations=self.config.tsne_iterations,
                          learning_rate=self.config.tsne_learning_rate,
                          seed=seed)

    def _recompute_scene(self, rng_seed: int, progress=None) -> None:
        self.tree, self.embedding = recommend.cluster_and_embed(
            self.space, self.survivors, self.weights, self.config.k, rng_seed,
            embed_method=self.config.embedding,
            tsne_config=self._tsne_config(rng_seed), progress=progress)
        self.layout = compute_layout(self.tree, self.embedding, self.survivors,
                                     self.space, self.config)
        if progress is not None:
            progress("layout", 1.0, {})

    def _apply_create(self, payload: dict, progress=None) -> None:
        if self.log:
            raise ContractError("session already created")
        cfg = payload.get("config") or {}
        self.config = EngineConfig.from_dict(cfg) if cfg else EngineConfig()
        self._recompute_scene(self.config.rng_seed, progress)

    def _apply_select(self, sid: str) -> None:
        if sid not in set(self.survivor_ids()):
            raise NotFoundError(f"solution {sid!r} is not in the survivor set")
        if sid in self.seed_ids():
            raise ContractError(f"solution {sid!r} is already a seed")
        self.seeds.append((sid, self.cycle))

    def _apply_remove(self, sid: str) -> None:
        if sid not in self.seed_ids():
            raise NotFoundError(f"solution {sid!r} is not a seed")
        self.seeds = [(s, c) for s, c in self.seeds if s != sid]

    def _apply_recluster(self, payload: dict, progress=None) -> None:
        if not self.seeds:
            raise ContractError("at least one seed required")
        rho = float(payload.get("rho", self.config.rho))
        k = payload.get("k", self.config.k)
        rng_seed = int(payload.get("seed", self.config.rng_seed))
        result = recommend.run_cycle(
            self.space, self.survivors, self.seed_indices(), rho, k, rng_seed,
            cycle=self.cycle + 1, embed_method=self.config.embedding,
            tsne_config=self._tsne_config(rng_seed), lam=self.config.lam,
            progress=progress)
        self.weights = result.weights
        self.survivors = np.array(result.survivors, dtype=np.int64)
        self.tree = result.tree
        self.embedding = result.embedding
        self.cycle = result.cycle
        self.layout = compute_layout(self.tree, self.embedding, self.survivors,
                                     self.space, self.config)
        if progress is not None:
            progress("layout", 1.0, {})

    def _apply_expand(self, payload: dict) -> None:
        if self.tree is None:
            raise ContractError("no cluster tree to expand")
        self.tree, diag = cluster_mod.expand_cluster(
            self.tree, payload["cluster_id"], int(payload["k_child"]),
            int(payload.get("seed", self.config.rng_seed)), self._weighted_rows)
        if diag is None:
            self.layout = compute_layout(self.tree, self.embedding, self.survivors,
                                         self.space, self.config)

    def _apply_set_method(self, method: str, progress=None) -> None:
        if method not in ("pca", "tsne"):
            raise ContractError(f"unknown embedding method {method!r}")
        from dataclasses import replace
        self.config = replace(self.config, embedding=method)
        self._recompute_scene(self.config.rng_seed, progress)

    # -- derived payloads ---------------------------------------------------

    def table_model(self, sid: str) -> VisualizationTableModel:
        return table_model(self.space, self.survivors, sid)

    # -- serialization ------------------------------------------------------

    def serialize_state(self) -> bytes:
        """Canonical bytes of the materialized state (log excluded)."""
        layout = self.layout
        doc = {
            "space_ref": self.space_ref,
            "config": self.config.to_dict(),
            "cycle": self.cycle,
            "version": self.version,
            "seeds": [[s, c] for s, c in self.seeds],
            "survivors": [int(i) for i in self.survivors],
            "tree": self.tree.serialize().decode() if self.tree else None,
            "embedding": {
                "method": self.embedding.method,
                "coords": self.embedding.coords.tolist(),
            } if self.embedding else None,
            "layout": {
                "star_ids": list(layout.star_ids),
                "stars": layout.star_positions.tolist(),
                "tables": [[cid, rid, list(pos)] for cid, rid, pos in layout.tables],
                "room": list(layout.room),
                "sky_height": layout.sky_height,
                "table_height": layout.table_height,
            } if layout else None,
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()


def replay(events: list[SessionEvent], space: SolutionSpace,
           space_ref: str = "") -> ExplorationSession:
    """Rebuild a session purely from its event log."""
    session = ExplorationSession(space, space_ref)
    for ev in events:
        session.apply_event(ev)
    return session


def write_log(events: list[SessionEvent], path: str) -> None:
    with open(path, "w") as fh:
        for ev in events:
            fh.write(ev.to_line() + "\n")


def read_log(path: str) -> list[SessionEvent]:
    with open(path) as fh:
        return [SessionEvent.from_line(line) for line in fh if line.strip()]
