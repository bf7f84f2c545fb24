"""Domain types shared by all modules, metric normalization, and weighted
distance in feature space.

A solution's quantitative properties become the *metric* block of its
feature vector (min-max normalized per channel); its shape descriptor
histogram becomes the *shape* block. Distances blend a weighted Euclidean
metric over the first block with a weighted L1 over the second.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, IngestError

# The eleven scalar property channels used as metric features, in canonical
# order. center_of_mass contributes three channels. objective_value is
# stored on records but is an optimizer internal, not a metric channel.
METRIC_CHANNELS: tuple[str, ...] = (
    "com_x",
    "com_y",
    "com_z",
    "weight",
    "overhang_percentage",
    "surface_area",
    "area_volume_ratio",
    "max_displacement",
    "max_strain",
    "total_strain",
    "max_vonmises",
)

SHAPE_BINS = 64

VOLUME_MINIMIZATION_LEVELS = 168  # ordered discrete solver setting, 1-based


@dataclass(frozen=True)
class ParamSet:
    """Generator inputs varied across the dataset."""

    middle_load: float  # N
    outer_load: float  # N
    voxel_size: float  # mm
    volume_minimization: int  # ordered level, 1..VOLUME_MINIMIZATION_LEVELS

    def violations(self) -> list[str]:
        out = []
        if not self.middle_load > 0:
            out.append("middle_load must be > 0")
        if not self.outer_load > 0:
            out.append("outer_load must be > 0")
        if not self.voxel_size > 0:
            out.append("voxel_size must be > 0")
        if self.volume_minimization < 1:
            out.append("volume_minimization must be >= 1")
        return out


@dataclass(frozen=True)
class PropertySet:
    """Computed properties of one design. Units are documented conventions."""

    center_of_mass: tuple[float, float, float]  # mm
    weight: float  # g
    overhang_percentage: float  # [0, 100]
    surface_area: float  # mm^2
    area_volume_ratio: float  # 1/mm
    max_displacement: float  # mm
    max_strain: float
    total_strain: float
    max_vonmises: float  # MPa
    objective_value: float

    def channel_values(self) -> np.ndarray:
        """The 11 metric channels in METRIC_CHANNELS order."""
        cx, cy, cz = self.center_of_mass
        return np.array(
            [
                cx,
                cy,
                cz,
                self.weight,
                self.overhang_percentage,
                self.surface_area,
                self.area_volume_ratio,
                self.max_displacement,
                self.max_strain,
                self.total_strain,
                self.max_vonmises,
            ],
            dtype=float,
        )

    def violations(self) -> list[str]:
        out = []
        if not self.surface_area > 0:
            out.append("surface_area must be > 0")
        if not self.weight > 0:
            out.append("weight must be > 0")
        if not 0.0 <= self.overhang_percentage <= 100.0:
            out.append("overhang_percentage out of [0,100]")
        vals = self.channel_values()
        if not np.all(np.isfinite(vals)) or not np.isfinite(self.objective_value):
            out.append("non-finite property value")
        return out


@dataclass(frozen=True)
class DesignSolution:
    id: str
    params: ParamSet
    properties: PropertySet
    mesh_ref: str  # path relative to dataset root


@dataclass(frozen=True)
class FeatureVector:
    """One solution's position in feature space.

    metric components lie in [0,1]; shape is a histogram summing to 1.
    """

    metric: np.ndarray
    shape: np.ndarray


@dataclass(frozen=True)
class FeatureWeights:
    """Non-negative per-channel weights, each block summing to 1, plus the
    scalar balance lam in [0,1] splitting metric vs shape blocks."""

    metric: np.ndarray
    shape: np.ndarray
    lam: float = 0.5

    def __post_init__(self):
        if np.any(self.metric < 0) or np.any(self.shape < 0):
            raise ContractError("feature weights must be non-negative")
        if not 0.0 <= self.lam <= 1.0:
            raise ContractError("lam must lie in [0,1]")
        for name, block in (("metric", self.metric), ("shape", self.shape)):
            if block.size and abs(float(block.sum()) - 1.0) > 1e-9:
                raise ContractError(f"{name} weight block must sum to 1")

    @staticmethod
    def uniform(n_metric: int, n_shape: int = SHAPE_BINS, lam: float = 0.5) -> "FeatureWeights":
        return FeatureWeights(
            metric=np.full(n_metric, 1.0 / n_metric),
            shape=np.full(n_shape, 1.0 / n_shape),
            lam=lam,
        )


def normalize_metrics(raw: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Min-max scale each column of an N x m property matrix into [0,1].

    Constant columns map to 0.5 everywhere so they stay neutral in distances
    and centered on spider axes. Returns (scaled matrix, bounds) where
    bounds is m x 2 (min, max) recorded for later inverse display.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 2 or raw.shape[0] < 1 or raw.shape[1] < 1:
        raise ContractError("property matrix must be N x m with N,m >= 1")
    bad = np.argwhere(~np.isfinite(raw))
    if bad.size:
        r, c = bad[0]
        raise IngestError(f"non-finite property value at row {r}, column {c}")
    lo = raw.min(axis=0)
    hi = raw.max(axis=0)
    span = hi - lo
    const = span == 0
    safe_span = np.where(const, 1.0, span)
    scaled = (raw - lo) / safe_span
    scaled[:, const] = 0.5
    return scaled, np.stack([lo, hi], axis=1)


def weighted_distance(a: FeatureVector, b: FeatureVector, w: FeatureWeights) -> float:
    """Blend of weighted Euclidean over metric channels and weighted L1 over
    shape histogram bins:

        d = lam * sqrt(sum w_j (a_j - b_j)^2)  +  (1 - lam) * sum w_j |a_j - b_j|
    """
    if a.metric.shape != b.metric.shape or a.shape.shape != b.shape.shape:
        raise ContractError("feature vectors have mismatched dimensions")
    if w.metric.shape != a.metric.shape or w.shape.shape != a.shape.shape:
        raise ContractError("weights do not match feature dimensions")
    dm = a.metric - b.metric
    metric_term = float(np.sqrt(np.dot(w.metric, dm * dm)))
    shape_term = float(np.dot(w.shape, np.abs(a.shape - b.shape)))
    return w.lam * metric_term + (1.0 - w.lam) * shape_term


def weighted_distances(metric: np.ndarray, shape: np.ndarray,
                       ref_metric: np.ndarray, ref_shape: np.ndarray,
                       w: FeatureWeights) -> np.ndarray:
    """Vectorized weighted_distance from every row of (metric, shape) to one
    reference vector."""
    dm = metric - ref_metric
    metric_term = np.sqrt((dm * dm) @ w.metric)
    shape_term = np.abs(shape - ref_shape) @ w.shape
    return w.lam * metric_term + (1.0 - w.lam) * shape_term


def weighted_feature_matrix(metric: np.ndarray, shape: np.ndarray,
                            w: FeatureWeights) -> np.ndarray:
    """Embed the weighted metric into plain Euclidean space for k-means and
    dimension reduction: scale each channel by sqrt of its effective weight."""
    mcols = metric * np.sqrt(w.lam * w.metric)
    scols = shape * np.sqrt((1.0 - w.lam) * w.shape)
    return np.hstack([mcols, scols])


class SolutionSpace:
    """Immutable, ordered collection of solutions with aligned features.

    Solutions are ordered by id; `metric` and `shape` hold the feature
    blocks row-aligned with `solutions`. Safe to share across readers.
    """

    def __init__(self, solutions: list[DesignSolution], metric: np.ndarray,
                 shape: np.ndarray, bounds: np.ndarray,
                 metric_channels: tuple[str, ...] = METRIC_CHANNELS):
        order = sorted(range(len(solutions)), key=lambda i: solutions[i].id)
        self.solutions = [solutions[i] for i in order]
        ids = [s.id for s in self.solutions]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise IngestError(f"duplicate solution ids: {dupes[:5]}")
        self.metric = np.asarray(metric, dtype=float)[order]
        self.shape = np.asarray(shape, dtype=float)[order]
        self.bounds = np.asarray(bounds, dtype=float)
        self.metric_channels = tuple(metric_channels)
        if len(self.solutions) != self.metric.shape[0] or len(self.solutions) != self.shape.shape[0]:
            raise ContractError("solutions and features must be aligned")
        self._index = {s.id: i for i, s in enumerate(self.solutions)}
        self.metric.setflags(write=False)
        self.shape.setflags(write=False)
        self.bounds.setflags(write=False)

    def __len__(self) -> int:
        return len(self.solutions)

    @property
    def n_metric(self) -> int:
        return self.metric.shape[1]

    @property
    def n_shape(self) -> int:
        return self.shape.shape[1]

    def index_of(self, solution_id: str) -> int:
        try:
            return self._index[solution_id]
        except KeyError:
            raise ContractError(f"unknown solution id {solution_id!r}") from None

    def feature(self, i: int) -> FeatureVector:
        return FeatureVector(metric=self.metric[i], shape=self.shape[i])

    def raw_value(self, i: int, channel: str) -> float:
        j = self.metric_channels.index(channel)
        lo, hi = self.bounds[j]
        return float(lo + self.metric[i, j] * (hi - lo))

    def serialize(self) -> bytes:
        """Canonical byte serialization; identical inputs give identical bytes."""
        doc = {
            "channels": list(self.metric_channels),
            "bounds": self.bounds.tolist(),
            "solutions": [
                {
                    "id": s.id,
                    "params": {
                        "middle_load": s.params.middle_load,
                        "outer_load": s.params.outer_load,
                        "voxel_size": s.params.voxel_size,
                        "volume_minimization": s.params.volume_minimization,
                    },
                    "metric": self.metric[i].tolist(),
                    "shape": self.shape[i].tolist(),
                    "mesh": s.mesh_ref,
                }
                for i, s in enumerate(self.solutions)
            ],
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
