"""Dataset loading, validation, and synthetic dataset generation.

A dataset on disk is:

    <root>/manifest.json                 dataset-level manifest
    <root>/meta/<id>.json                one record per solution
    <root>/meshes/<id>.stl               referenced triangle meshes

The synthetic generator emits procedural monitor-stand-like geometry over a
full-factorial parameter grid. Geometric properties are computed exactly
from the emitted mesh; performance properties come from a documented smooth
deterministic function of parameters and geometry plus seeded noise.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import geometry
from .core import (METRIC_CHANNELS, VOLUME_MINIMIZATION_LEVELS, DesignSolution,
                   ParamSet, PropertySet, SolutionSpace, normalize_metrics)
from .errors import IngestError

MIN_DESIGN_LOAD = 200.0  # N; static floor from the 8.3 kg monitor mass
MONITOR_MASS_KG = 8.3

PLA_DENSITY = 0.00124  # g/mm^3
PLATFORM_HEIGHT = 80.0  # mm, monitor raised off the desk

DEFAULT_DESCRIPTOR_PAIRS = 2048

# Default full-factorial grid: 5 x 5 x 4 x 42 = 16,800 designs.
DEFAULT_MIDDLE_LOADS = [100.0, 125.0, 150.0, 175.0, 200.0]
DEFAULT_OUTER_LOADS = [100.0, 125.0, 150.0, 175.0, 200.0]
DEFAULT_VOXEL_SIZES = [1.0, 1.5, 2.0, 3.0]
DEFAULT_VM_LEVELS = list(range(1, VOLUME_MINIMIZATION_LEVELS + 1))


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    count: int
    parameters: dict[str, list]
    properties: list[str]
    mesh_format: str

    def to_json(self) -> str:
        return json.dumps(
            {
                "name": self.name,
                "count": self.count,
                "parameters": self.parameters,
                "properties": self.properties,
                "mesh_format": self.mesh_format,
            },
            sort_keys=True,
            indent=1,
        )


@dataclass(frozen=True)
class SynthConfig:
    middle_loads: list[float] = field(default_factory=lambda: list(DEFAULT_MIDDLE_LOADS))
    outer_loads: list[float] = field(default_factory=lambda: list(DEFAULT_OUTER_LOADS))
    voxel_sizes: list[float] = field(default_factory=lambda: list(DEFAULT_VOXEL_SIZES))
    vm_levels: list[int] = field(default_factory=lambda: list(DEFAULT_VM_LEVELS))
    seed: int = 0
    strut_range: tuple[int, int] = (3, 6)
    tessellation: int = 6  # segments per disk
    noise_sigma_fraction: float = 0.02  # of each synthesized channel's range

    def __post_init__(self):
        for name in ("middle_loads", "outer_loads", "voxel_sizes", "vm_levels"):
            if not getattr(self, name):
                raise IngestError(f"SynthConfig.{name} must be non-empty")
        if min(self.middle_loads) + min(self.outer_loads) < MIN_DESIGN_LOAD:
            raise IngestError(
                f"grid admits designs below the {MIN_DESIGN_LOAD} N static load floor")

    def grid_size(self) -> int:
        return (len(self.middle_loads) * len(self.outer_loads)
                * len(self.voxel_sizes) * len(self.vm_levels))

    def grid(self):
        i = 0
        for ml in self.middle_loads:
            for ol in self.outer_loads:
                for vx in self.voxel_sizes:
                    for vm in self.vm_levels:
                        yield i, ParamSet(middle_load=ml, outer_load=ol,
                                          voxel_size=vx, volume_minimization=vm)
                        i += 1


# ---------------------------------------------------------------------------
# procedural geometry

def _box(center, size) -> np.ndarray:
    """Axis-aligned closed box as a 12 x 3 x 3 triangle soup."""
    cx, cy, cz = center
    hx, hy, hz = size[0] / 2, size[1] / 2, size[2] / 2
    corners = np.array([[cx + sx * hx, cy + sy * hy, cz + sz * hz]
                        for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)])
    # outward-wound faces of the unit box corner ordering above
    quads = [
        (0, 1, 3, 2), (4, 6, 7, 5),  # x- x+
        (0, 4, 5, 1), (2, 3, 7, 6),  # y- y+
        (0, 2, 6, 4), (1, 5, 7, 3),  # z- z+
    ]
    tris = []
    for a, b, c, d in quads:
        tris.append(corners[[a, b, c]])
        tris.append(corners[[a, c, d]])
    return np.array(tris)


def _disk(center, radius: float, height: float, segments: int) -> np.ndarray:
    """Closed vertical cylinder (z axis), 4*segments triangles."""
    cx, cy, z0 = center
    ang = np.linspace(0.0, 2 * math.pi, segments, endpoint=False)
    ring = np.stack([cx + radius * np.cos(ang), cy + radius * np.sin(ang)], axis=1)
    lo = np.column_stack([ring, np.full(segments, z0)])
    hi = np.column_stack([ring, np.full(segments, z0 + height)])
    clo = np.array([cx, cy, z0])
    chi = np.array([cx, cy, z0 + height])
    tris = []
    for i in range(segments):
        j = (i + 1) % segments
        tris.append(np.stack([clo, lo[j], lo[i]]))  # bottom cap, facing down
        tris.append(np.stack([chi, hi[i], hi[j]]))  # top cap, facing up
        tris.append(np.stack([lo[i], lo[j], hi[j]]))  # wall
        tris.append(np.stack([lo[i], hi[j], hi[i]]))
    return np.array(tris)


_DISK_CENTERS = np.array([[-80.0, -30.0], [0.0, 60.0], [80.0, -30.0]])


def build_stand_mesh(params: ParamSet, cfg: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    """One monitor-stand-like triangle soup: three desk disks, three top
    platforms at 80 mm, and load-bearing struts whose count and thickness
    follow the parameters."""
    total_load = params.middle_load + params.outer_load
    vm_frac = params.volume_minimization / max(cfg.vm_levels)
    lo, hi = cfg.strut_range
    n_extra = lo + int(round((1.0 - vm_frac) * (hi - lo)))
    # thicker struts under heavier loads, thinner under aggressive minimization
    thickness = (4.0 + 6.0 * (total_load / 400.0)) * (1.25 - 0.7 * vm_frac)
    thickness *= 1.0 + 0.1 * (params.voxel_size - 2.0)
    disk_r = 18.0 + 4.0 * (params.outer_load / 200.0)

    parts = []
    for cx, cy in _DISK_CENTERS:
        parts.append(_disk((cx, cy, 0.0), disk_r, 4.0, cfg.tessellation))
        parts.append(_box((cx, cy, PLATFORM_HEIGHT + 2.0), (44.0, 34.0, 4.0)))
        parts.append(_box((cx, cy, PLATFORM_HEIGHT / 2 + 2.0),
                          (thickness, thickness, PLATFORM_HEIGHT - 4.0)))
    # extra diagonal struts between random platform pairs, jittered
    for _ in range(n_extra):
        a, b = rng.choice(3, size=2, replace=False)
        ax, ay = _DISK_CENTERS[a] + rng.normal(scale=3.0, size=2)
        bx, by = _DISK_CENTERS[b] + rng.normal(scale=3.0, size=2)
        mx, my = (ax + bx) / 2, (ay + by) / 2
        span = math.hypot(bx - ax, by - ay)
        parts.append(_box((mx, my, PLATFORM_HEIGHT / 2 + 2.0),
                          (max(span, thickness), thickness * 0.8, thickness * 0.8)))
    return np.concatenate(parts)


def _overhang_percentage(soup: np.ndarray) -> float:
    """Share of facet area whose outward normal points more than 45 degrees
    below the horizon (downward-facing overhang), in [0, 100]."""
    e1 = soup[:, 1] - soup[:, 0]
    e2 = soup[:, 2] - soup[:, 0]
    n = np.cross(e1, e2)
    areas = 0.5 * np.linalg.norm(n, axis=1)
    total = areas.sum()
    nz = np.divide(n[:, 2], 2.0 * areas, out=np.zeros(len(n)), where=areas > 0)
    overhang = areas[nz < -math.sqrt(0.5)].sum()
    return float(100.0 * overhang / total) if total > 0 else 0.0


def _geometric_properties(soup: np.ndarray) -> dict[str, float]:
    mesh = geometry.weld_vertices(soup.reshape(-1, 3))
    area = geometry.surface_area(mesh)
    vol = geometry.volume(mesh)
    com = geometry.center_of_mass(mesh)
    return {
        "com_x": float(com[0]),
        "com_y": float(com[1]),
        "com_z": float(com[2]),
        "weight": vol * PLA_DENSITY,
        "overhang_percentage": _overhang_percentage(soup),
        "surface_area": area,
        "area_volume_ratio": area / vol,
    }


def _base_performance(params: ParamSet, weight_g: float, cfg: SynthConfig) -> dict[str, float]:
    """Smooth deterministic performance model. Stiffness grows with strut
    material (weight) and shrinks with the minimization level; stresses grow
    with load. Not physics, just reproducible structure."""
    total_load = params.middle_load + params.outer_load
    vm_frac = params.volume_minimization / max(cfg.vm_levels)
    stiffness = weight_g * (1.1 - vm_frac) * (1.0 + 0.2 / params.voxel_size)
    max_disp = 40.0 * total_load / (stiffness + 1.0)
    max_strain = max_disp / PLATFORM_HEIGHT
    total_strain = max_strain * (2.0 + vm_frac)
    max_vonmises = 0.4 * total_load / (1.0 + weight_g / 100.0) * (1.0 + vm_frac)
    objective = weight_g / 100.0 + max_disp + 0.5 * max_vonmises
    return {
        "max_displacement": max_disp,
        "max_strain": max_strain,
        "total_strain": total_strain,
        "max_vonmises": max_vonmises,
        "objective_value": objective,
    }


PERF_CHANNELS = ("max_displacement", "max_strain", "total_strain",
                 "max_vonmises", "objective_value")


def _solution_id(i: int) -> str:
    return f"s{i:05d}"


def generate_synthetic(cfg: SynthConfig, out_dir: str | os.PathLike) -> DatasetManifest:
    """Emit one mesh + one metadata record per grid point. Deterministic:
    the same SynthConfig yields a byte-identical output tree."""
    root = Path(out_dir)
    if cfg.grid_size() == 0:
        raise IngestError("parameter grid is empty")
    try:
        (root / "meta").mkdir(parents=True, exist_ok=True)
        (root / "meshes").mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise IngestError(f"output directory not writable: {e}") from e

    records = []
    for i, params in cfg.grid():
        rng = np.random.default_rng([cfg.seed, i])
        soup = build_stand_mesh(params, cfg, rng)
        sid = _solution_id(i)
        geometry.write_binary_stl(soup, str(root / "meshes" / f"{sid}.stl"))
        geo = _geometric_properties(soup)
        perf = _base_performance(params, geo["weight"], cfg)
        records.append((sid, params, geo, perf))

    # seeded noise on the performance channels, sigma = fraction of channel range
    perf_matrix = np.array([[r[3][ch] for ch in PERF_CHANNELS] for r in records])
    spans = perf_matrix.max(axis=0) - perf_matrix.min(axis=0)
    noise_rng = np.random.default_rng([cfg.seed, 0xFACE])
    noise = noise_rng.normal(size=perf_matrix.shape) * (cfg.noise_sigma_fraction * spans)
    noisy = np.maximum(perf_matrix + noise, perf_matrix * 0.01)

    for row, (sid, params, geo, _) in enumerate(records):
        properties = dict(geo)
        properties.update({ch: float(noisy[row, j]) for j, ch in enumerate(PERF_CHANNELS)})
        doc = {
            "id": sid,
            "params": {
                "middle_load": params.middle_load,
                "outer_load": params.outer_load,
                "voxel_size": params.voxel_size,
                "volume_minimization": params.volume_minimization,
            },
            "properties": properties,
            "mesh": f"meshes/{sid}.stl",
        }
        (root / "meta" / f"{sid}.json").write_text(
            json.dumps(doc, sort_keys=True, separators=(",", ":")))

    manifest = DatasetManifest(
        name="synthetic-monitor-stands",
        count=cfg.grid_size(),
        parameters={
            "middle_load": list(cfg.middle_loads),
            "outer_load": list(cfg.outer_loads),
            "voxel_size": list(cfg.voxel_sizes),
            "volume_minimization": list(cfg.vm_levels),
        },
        properties=list(METRIC_CHANNELS) + ["objective_value"],
        mesh_format="stl",
    )
    (root / "manifest.json").write_text(manifest.to_json())
    return manifest


# ---------------------------------------------------------------------------
# loading

def _parse_record(doc: dict, source: str) -> DesignSolution:
    try:
        params = ParamSet(
            middle_load=float(doc["params"]["middle_load"]),
            outer_load=float(doc["params"]["outer_load"]),
            voxel_size=float(doc["params"]["voxel_size"]),
            volume_minimization=int(doc["params"]["volume_minimization"]),
        )
        p = doc["properties"]
        props = PropertySet(
            center_of_mass=(float(p["com_x"]), float(p["com_y"]), float(p["com_z"])),
            weight=float(p["weight"]),
            overhang_percentage=float(p["overhang_percentage"]),
            surface_area=float(p["surface_area"]),
            area_volume_ratio=float(p["area_volume_ratio"]),
            max_displacement=float(p["max_displacement"]),
            max_strain=float(p["max_strain"]),
            total_strain=float(p["total_strain"]),
            max_vonmises=float(p["max_vonmises"]),
            objective_value=float(p["objective_value"]),
        )
        return DesignSolution(id=str(doc["id"]), params=params,
                              properties=props, mesh_ref=str(doc["mesh"]))
    except (KeyError, TypeError, ValueError) as e:
        raise IngestError(f"{source}: malformed record ({e})") from e


def validate_record(record: DesignSolution) -> list[str]:
    """Invariant violations of one parsed record; empty list means valid."""
    return record.params.violations() + record.properties.violations()


def load_manifest(root: str | os.PathLike) -> DatasetManifest:
    path = Path(root) / "manifest.json"
    if not path.is_file():
        raise IngestError(f"no manifest found in {root}")
    doc = json.loads(path.read_text())
    return DatasetManifest(
        name=doc["name"], count=int(doc["count"]),
        parameters=doc["parameters"], properties=list(doc["properties"]),
        mesh_format=doc["mesh_format"],
    )


def save_space(space: SolutionSpace, path: str | os.PathLike) -> None:
    """Cache an ingested space (features + records) as a single .npz file."""
    records = [
        {
            "id": s.id,
            "params": {
                "middle_load": s.params.middle_load,
                "outer_load": s.params.outer_load,
                "voxel_size": s.params.voxel_size,
                "volume_minimization": s.params.volume_minimization,
            },
            "properties": {
                **dict(zip(METRIC_CHANNELS, s.properties.channel_values().tolist())),
                "objective_value": s.properties.objective_value,
            },
            "mesh": s.mesh_ref,
        }
        for s in space.solutions
    ]
    np.savez_compressed(
        path,
        metric=space.metric, shape=space.shape, bounds=space.bounds,
        records=np.frombuffer(json.dumps(records).encode(), dtype=np.uint8),
    )


def load_space(path: str | os.PathLike) -> SolutionSpace:
    """Load a space cached by save_space."""
    with np.load(path) as data:
        records = json.loads(bytes(data["records"].tobytes()).decode())
        solutions = [_parse_record(doc, str(path)) for doc in records]
        return SolutionSpace(solutions, data["metric"], data["shape"], data["bounds"])


def load_dataset(root: str | os.PathLike,
                 descriptor_pairs: int = DEFAULT_DESCRIPTOR_PAIRS,
                 descriptor_seed: int = 0,
                 progress=None) -> SolutionSpace:
    """Load and validate a dataset directory into an immutable SolutionSpace.

    Features are built here: the 11 property channels min-max normalized,
    plus a D2 shape descriptor per mesh. Ordering is stable by solution id
    regardless of file enumeration order.
    """
    root = Path(root)
    load_manifest(root)  # existence check; counts verified against records
    meta_dir = root / "meta"
    if not meta_dir.is_dir():
        raise IngestError(f"no meta/ directory in {root}")

    records: list[DesignSolution] = []
    violations: list[str] = []
    for path in sorted(meta_dir.glob("*.json")):
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise IngestError(f"{path}: invalid JSON ({e})") from e
        rec = _parse_record(doc, str(path))
        bad = validate_record(rec)
        violations.extend(f"{path}: {v}" for v in bad)
        records.append(rec)
    if not records:
        raise IngestError(f"no solution records under {meta_dir}")
    if violations:
        raise IngestError("invalid records:\n" + "\n".join(violations[:20]))

    records.sort(key=lambda r: r.id)
    missing = [r.id for r in records if not (root / r.mesh_ref).is_file()]
    if missing:
        raise IngestError(f"missing mesh files for ids: {missing}")

    raw = np.stack([r.properties.channel_values() for r in records])
    metric, bounds = normalize_metrics(raw)

    shape_rows = []
    for i, rec in enumerate(records):
        mesh = geometry.parse_mesh(str(root / rec.mesh_ref))
        desc = geometry.d2_descriptor(mesh, n_pairs=max(descriptor_pairs, 1000),
                                      seed=descriptor_seed)
        shape_rows.append(desc.histogram)
        if progress is not None and i % 500 == 0:
            progress(i, len(records))
    return SolutionSpace(records, metric, np.stack(shape_rows), bounds)
