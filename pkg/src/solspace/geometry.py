"""Triangle meshes: parsing, exact geometric properties, and the D2 shape
descriptor used as the clustering proxy for geometric similarity.

Supported formats: ASCII STL, binary STL (little-endian, 84-byte header),
and OBJ restricted to vertices and triangular faces.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .core import SHAPE_BINS
from .errors import MeshError

WELD_TOLERANCE = 1e-6  # mm

DEFAULT_D2_PAIRS = 100_000


@dataclass(frozen=True)
class TriangleMesh:
    vertices: np.ndarray  # V x 3, mm
    triangles: np.ndarray  # T x 3 vertex indices

    def __post_init__(self):
        if self.triangles.shape[0] < 1:
            raise MeshError("mesh has no triangles")
        if not np.all(np.isfinite(self.vertices)):
            raise MeshError("mesh has non-finite coordinates")
        if self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices):
            raise MeshError("triangle index out of range")


@dataclass(frozen=True)
class ShapeDescriptor:
    """Histogram of sampled pairwise surface distances, normalized by the
    largest sampled distance. Rigid- and scale-invariant up to sampling noise."""

    histogram: np.ndarray  # SHAPE_BINS bins, sums to 1
    max_pair_distance: float  # mm, normalization scale


def weld_vertices(points: np.ndarray, tolerance: float = WELD_TOLERANCE) -> TriangleMesh:
    """Build a mesh from a flat 3T x 3 triangle-soup point array, merging
    points that coincide within `tolerance`."""
    keys = np.round(points / tolerance).astype(np.int64)
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    verts = points[first]
    tris = inverse.reshape(-1, 3).astype(np.int64)
    return TriangleMesh(vertices=verts, triangles=tris)


def _parse_binary_stl(data: bytes, path: str) -> TriangleMesh:
    if len(data) < 84:
        raise MeshError(f"{path}: truncated binary STL at byte {len(data)}")
    (count,) = struct.unpack_from("<I", data, 80)
    expected = 84 + count * 50
    if len(data) < expected:
        raise MeshError(f"{path}: truncated binary STL at byte {len(data)} (expected {expected})")
    if count == 0:
        raise MeshError(f"{path}: binary STL declares 0 triangles")
    body = np.frombuffer(data, dtype=np.uint8, count=count * 50, offset=84)
    records = body.reshape(count, 50)
    floats = records[:, :48].copy().view("<f4").reshape(count, 12)
    points = floats[:, 3:12].astype(np.float64).reshape(-1, 3)  # skip normals
    return weld_vertices(points)


def _parse_ascii_stl(text: str, path: str) -> TriangleMesh:
    coords = []
    for lineno, line in enumerate(text.splitlines(), 1):
        parts = line.split()
        if parts and parts[0] == "vertex":
            if len(parts) != 4:
                raise MeshError(f"{path}:{lineno}: malformed vertex line")
            try:
                coords.append([float(p) for p in parts[1:4]])
            except ValueError:
                raise MeshError(f"{path}:{lineno}: non-numeric vertex") from None
    if not coords or len(coords) % 3 != 0:
        raise MeshError(f"{path}: ASCII STL holds {len(coords)} vertices, not a multiple of 3")
    return weld_vertices(np.array(coords, dtype=float))


def _parse_obj(text: str, path: str) -> TriangleMesh:
    verts: list[list[float]] = []
    tris: list[list[int]] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "v":
            if len(parts) < 4:
                raise MeshError(f"{path}:{lineno}: malformed v line")
            verts.append([float(p) for p in parts[1:4]])
        elif parts[0] == "f":
            if len(parts) != 4:
                raise MeshError(f"{path}:{lineno}: only triangular faces supported")
            idx = []
            for tok in parts[1:]:
                i = int(tok.split("/")[0])
                idx.append(i - 1 if i > 0 else len(verts) + i)
            tris.append(idx)
        # all other OBJ statements ignored
    if not tris:
        raise MeshError(f"{path}: OBJ file has no faces")
    points = np.array(verts, dtype=float)[np.array(tris, dtype=np.int64)].reshape(-1, 3)
    return weld_vertices(points)


def parse_mesh(path: str) -> TriangleMesh:
    """Parse an STL (ASCII or binary) or OBJ file, welding coincident vertices."""
    with open(path, "rb") as fh:
        data = fh.read()
    if not data:
        raise MeshError(f"{path}: empty file (byte 0)")
    lower = str(path).lower()
    if lower.endswith(".obj"):
        return _parse_obj(data.decode("utf-8", errors="replace"), str(path))
    if lower.endswith(".stl"):
        head = data[:512].lstrip()
        if head.startswith(b"solid") and b"facet" in data[:4096]:
            return _parse_ascii_stl(data.decode("utf-8", errors="replace"), str(path))
        return _parse_binary_stl(data, str(path))
    raise MeshError(f"{path}: unsupported mesh format (expect .stl or .obj)")


def _triangle_corners(mesh: TriangleMesh) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    v = mesh.vertices
    t = mesh.triangles
    return v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]


def triangle_areas(mesh: TriangleMesh) -> np.ndarray:
    a, b, c = _triangle_corners(mesh)
    return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


def surface_area(mesh: TriangleMesh) -> float:
    """Total surface area in mm^2."""
    return float(triangle_areas(mesh).sum())


def is_closed(mesh: TriangleMesh) -> bool:
    """True iff every undirected edge is shared by exactly two triangles."""
    t = mesh.triangles
    edges = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    edges = np.sort(edges, axis=1)
    _, counts = np.unique(edges, axis=0, return_counts=True)
    return bool(np.all(counts == 2))


def _require_closed(mesh: TriangleMesh, op: str) -> None:
    if not is_closed(mesh):
        raise MeshError(f"{op} requires a closed orientable surface "
                        "(every edge shared by exactly 2 triangles)")


def volume(mesh: TriangleMesh) -> float:
    """Enclosed volume in mm^3 via signed tetrahedra (divergence theorem)."""
    _require_closed(mesh, "volume")
    a, b, c = _triangle_corners(mesh)
    signed = np.einsum("ij,ij->i", a, np.cross(b, c)) / 6.0
    return abs(float(signed.sum()))


def center_of_mass(mesh: TriangleMesh) -> np.ndarray:
    """Centroid of the enclosed solid, assuming uniform density."""
    _require_closed(mesh, "center_of_mass")
    a, b, c = _triangle_corners(mesh)
    signed = np.einsum("ij,ij->i", a, np.cross(b, c)) / 6.0
    total = float(signed.sum())
    if total == 0.0:
        raise MeshError("center_of_mass undefined for zero-volume mesh")
    tet_centroids = (a + b + c) / 4.0  # fourth vertex is the origin
    return (signed[:, None] * tet_centroids).sum(axis=0) / total


def sample_surface(mesh: TriangleMesh, n: int, rng: np.random.Generator) -> np.ndarray:
    """Sample n points uniformly by area over the mesh surface."""
    areas = triangle_areas(mesh)
    total = areas.sum()
    if total <= 0:
        raise MeshError("cannot sample a zero-area mesh")
    choice = rng.choice(len(areas), size=n, p=areas / total)
    a, b, c = _triangle_corners(mesh)
    u = rng.random(n)
    v = rng.random(n)
    flip = u + v > 1.0
    u[flip] = 1.0 - u[flip]
    v[flip] = 1.0 - v[flip]
    return a[choice] + u[:, None] * (b[choice] - a[choice]) + v[:, None] * (c[choice] - a[choice])


def d2_descriptor(mesh: TriangleMesh, n_pairs: int = DEFAULT_D2_PAIRS,
                  seed: int = 0) -> ShapeDescriptor:
    """D2 shape distribution: histogram of distances between n_pairs random
    surface point pairs, normalized by the largest sampled distance."""
    if n_pairs < 1000:
        raise MeshError("d2_descriptor needs n_pairs >= 1000")
    rng = np.random.default_rng(seed)
    p = sample_surface(mesh, n_pairs, rng)
    q = sample_surface(mesh, n_pairs, rng)
    d = np.linalg.norm(p - q, axis=1)
    dmax = float(d.max())
    if dmax <= 0:
        raise MeshError("degenerate mesh: all sampled pair distances are zero")
    hist, _ = np.histogram(d / dmax, bins=SHAPE_BINS, range=(0.0, 1.0))
    # the normalized maximum lands exactly on 1.0 and is included in the last bin
    return ShapeDescriptor(histogram=hist / float(n_pairs), max_pair_distance=dmax)


def write_binary_stl(mesh_points: np.ndarray, path: str) -> None:
    """Write a triangle soup (T x 3 x 3 float array) as binary STL."""
    tris = np.asarray(mesh_points, dtype=np.float64).reshape(-1, 3, 3)
    n = tris.shape[0]
    e1 = tris[:, 1] - tris[:, 0]
    e2 = tris[:, 2] - tris[:, 0]
    normals = np.cross(e1, e2)
    lens = np.linalg.norm(normals, axis=1, keepdims=True)
    normals = np.divide(normals, lens, out=np.zeros_like(normals), where=lens > 0)
    records = np.zeros((n, 50), dtype=np.uint8)
    floats = np.concatenate([normals[:, None, :], tris], axis=1).astype("<f4")
    records[:, :48] = floats.reshape(n, 12).view(np.uint8)
    with open(path, "wb") as fh:
        fh.write(b"\0" * 80)
        fh.write(struct.pack("<I", n))
        fh.write(records.tobytes())
