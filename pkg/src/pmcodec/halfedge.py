"""Half-edge triangle mesh on an integer coordinate grid.

Vertices live on an ``N^3`` grid and are identified by their integer
coordinate triple. Every face owns exactly three half-edges stored at
``3*f, 3*f+1, 3*f+2`` so ``next``/``prev``/``face`` are pure arithmetic;
only ``origin`` and ``twin`` are stored. Deleted faces and vertices are
tombstoned and their ids recycled through free lists, so ids held by a
caller stay valid across unrelated edits.
"""

from __future__ import annotations

import io
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import (
    CollisionError,
    NonManifoldAfterQuantization,
    ObjIndexError,
    ObjParseError,
    TopologyError,
)

Coord = tuple[int, int, int]
Face = tuple[int, int, int]


@dataclass(frozen=True)
class GridSpec:
    """Maps real coordinates to ``n_bins`` bins per axis.

    ``origin`` is the real-space point that maps to the grid corner and
    ``scale`` the real length of the full grid edge.
    """

    n_bins: int = 128
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)
    scale: float = 1.0

    def __post_init__(self):
        if self.n_bins < 2:
            raise ValueError(f"n_bins must be >= 2, got {self.n_bins}")
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    @classmethod
    def fit(cls, points, n_bins=128):
        """Grid whose unit cube holds ``points`` with the longest axis spanning it."""
        pts = np.asarray(points, dtype=np.float64)
        lo = pts.min(axis=0)
        extent = float((pts.max(axis=0) - lo).max())
        if extent <= 0:
            raise ValueError("points have zero extent")
        return cls(n_bins, tuple(float(c) for c in lo), extent)

    def normalize(self, points):
        pts = np.asarray(points, dtype=np.float64)
        return (pts - np.asarray(self.origin)) / self.scale

    def quantize(self, points) -> np.ndarray:
        u = self.normalize(points)
        return np.clip(np.floor(u * self.n_bins), 0, self.n_bins - 1).astype(np.int64)

    def dequantize(self, bins) -> np.ndarray:
        b = np.asarray(bins, dtype=np.float64)
        return (b + 0.5) / self.n_bins * self.scale + np.asarray(self.origin)


@dataclass
class RawMesh:
    vertices: np.ndarray  # (n, 3) float
    faces: np.ndarray  # (m, 3) int, 0-based
    ignored: int = 0  # OBJ records skipped by the loader


class HalfEdgeMesh:
    def __init__(self):
        self._pos: list[Coord | None] = []
        self._out: list[set[int]] = []
        self._free_vertices: list[int] = []
        self._coord_index: dict[Coord, int] = {}
        self._he_origin: list[int] = []
        self._he_twin: list[int] = []
        self._face_alive: list[bool] = []
        self._free_faces: list[int] = []
        self._edge: dict[tuple[int, int], int] = {}
        self._n_vertices = 0
        self._n_faces = 0
        self._n_border = 0

    @classmethod
    def from_faces(cls, coords: Sequence[Sequence[int]], faces: Iterable[Sequence[int]]):
        mesh = cls()
        for c in coords:
            mesh.add_vertex(c)
        for f in faces:
            mesh.add_face(*f)
        return mesh

    def copy(self) -> "HalfEdgeMesh":
        m = HalfEdgeMesh.__new__(HalfEdgeMesh)
        m._pos = list(self._pos)
        m._out = [set(s) for s in self._out]
        m._free_vertices = list(self._free_vertices)
        m._coord_index = dict(self._coord_index)
        m._he_origin = list(self._he_origin)
        m._he_twin = list(self._he_twin)
        m._face_alive = list(self._face_alive)
        m._free_faces = list(self._free_faces)
        m._edge = dict(self._edge)
        m._n_vertices = self._n_vertices
        m._n_faces = self._n_faces
        m._n_border = self._n_border
        return m

    # -- sizes -------------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return self._n_vertices

    @property
    def n_faces(self) -> int:
        return self._n_faces

    @property
    def n_halfedges(self) -> int:
        return 3 * self._n_faces

    @property
    def n_boundary_halfedges(self) -> int:
        return self._n_border

    @property
    def is_closed(self) -> bool:
        return self._n_border == 0

    # -- vertices ----------------------------------------------------------

    def add_vertex(self, coord) -> int:
        c = (int(coord[0]), int(coord[1]), int(coord[2]))
        if c in self._coord_index:
            raise CollisionError(f"a vertex already exists at {c}")
        if self._free_vertices:
            v = self._free_vertices.pop()
            self._pos[v] = c
        else:
            v = len(self._pos)
            self._pos.append(c)
            self._out.append(set())
        self._coord_index[c] = v
        self._n_vertices += 1
        return v

    def remove_vertex(self, v: int) -> None:
        self._check_vertex(v)
        if self._out[v]:
            raise TopologyError(f"vertex {v} still has incident faces")
        del self._coord_index[self._pos[v]]
        self._pos[v] = None
        self._free_vertices.append(v)
        self._n_vertices -= 1

    def is_active(self, v: int) -> bool:
        return 0 <= v < len(self._pos) and self._pos[v] is not None

    def _check_vertex(self, v):
        if not self.is_active(v):
            raise ValueError(f"vertex {v} is not active")

    def position(self, v: int) -> Coord:
        self._check_vertex(v)
        return self._pos[v]

    def find_vertex(self, coord) -> int | None:
        return self._coord_index.get(tuple(int(c) for c in coord))

    def vertices(self) -> list[int]:
        return [v for v, p in enumerate(self._pos) if p is not None]

    def coords(self) -> dict[Coord, int]:
        return dict(self._coord_index)

    # -- faces -------------------------------------------------------------

    def add_face(self, a: int, b: int, c: int) -> int:
        for v in (a, b, c):
            self._check_vertex(v)
        if a == b or b == c or c == a:
            raise TopologyError(f"degenerate face ({a}, {b}, {c})")
        loop = ((a, b), (b, c), (c, a))
        for u, w in loop:
            if (u, w) in self._edge:
                raise TopologyError(
                    f"directed edge {u}->{w} already used: inconsistent orientation "
                    "or more than two faces on an edge"
                )
        if self._free_faces:
            f = self._free_faces.pop()
            self._face_alive[f] = True
        else:
            f = len(self._face_alive)
            self._face_alive.append(True)
            self._he_origin.extend((-1, -1, -1))
            self._he_twin.extend((-1, -1, -1))
        for i, (u, w) in enumerate(loop):
            h = 3 * f + i
            self._he_origin[h] = u
            self._edge[(u, w)] = h
            self._out[u].add(h)
            tw = self._edge.get((w, u), -1)
            self._he_twin[h] = tw
            if tw >= 0:
                self._he_twin[tw] = h
                self._n_border -= 1
            else:
                self._n_border += 1
        self._n_faces += 1
        return f

    def remove_face(self, f: int) -> None:
        if not (0 <= f < len(self._face_alive) and self._face_alive[f]):
            raise ValueError(f"face {f} is not active")
        fv = self.face_vertices(f)
        for i in range(3):
            h = 3 * f + i
            u, w = fv[i], fv[(i + 1) % 3]
            del self._edge[(u, w)]
            self._out[u].discard(h)
            tw = self._he_twin[h]
            if tw >= 0:
                self._he_twin[tw] = -1
                self._n_border += 1
            else:
                self._n_border -= 1
            self._he_twin[h] = -1
            self._he_origin[h] = -1
        self._face_alive[f] = False
        self._free_faces.append(f)
        self._n_faces -= 1

    def face_vertices(self, f: int) -> Face:
        h = 3 * f
        return (self._he_origin[h], self._he_origin[h + 1], self._he_origin[h + 2])

    def faces(self) -> Iterator[tuple[int, Face]]:
        for f, alive in enumerate(self._face_alive):
            if alive:
                yield f, self.face_vertices(f)

    def face_list(self) -> list[Face]:
        return [fv for _, fv in self.faces()]

    def vertex_faces(self, v: int) -> set[int]:
        self._check_vertex(v)
        return {h // 3 for h in self._out[v]}

    # -- half-edges --------------------------------------------------------

    @staticmethod
    def next(h: int) -> int:
        return h - h % 3 + (h + 1) % 3

    @staticmethod
    def prev(h: int) -> int:
        return h - h % 3 + (h + 2) % 3

    @staticmethod
    def face_of(h: int) -> int:
        return h // 3

    def origin(self, h: int) -> int:
        return self._he_origin[h]

    def dest(self, h: int) -> int:
        return self._he_origin[self.next(h)]

    def twin(self, h: int) -> int | None:
        t = self._he_twin[h]
        return None if t < 0 else t

    def halfedge(self, u: int, w: int) -> int | None:
        return self._edge.get((u, w))

    def outgoing(self, v: int) -> set[int]:
        self._check_vertex(v)
        return set(self._out[v])

    def halfedge_ids(self) -> list[int]:
        return [h for f, alive in enumerate(self._face_alive) if alive for h in (3 * f, 3 * f + 1, 3 * f + 2)]

    # -- adjacency ---------------------------------------------------------

    def neighbors(self, v: int) -> set[int]:
        self._check_vertex(v)
        out = set()
        for h in self._out[v]:
            out.add(self._he_origin[self.next(h)])
            out.add(self._he_origin[self.prev(h)])
        return out

    def has_edge(self, u: int, w: int) -> bool:
        return (u, w) in self._edge or (w, u) in self._edge

    def is_boundary_edge(self, u: int, w: int) -> bool:
        a = self._edge.get((u, w))
        b = self._edge.get((w, u))
        if a is None and b is None:
            raise ValueError(f"({u}, {w}) is not an edge")
        return a is None or b is None

    def is_boundary_vertex(self, v: int) -> bool:
        self._check_vertex(v)
        for h in self._out[v]:
            if self._he_twin[h] < 0 or self._he_twin[self.prev(h)] < 0:
                return True
        return False

    def edges(self) -> list[tuple[int, int]]:
        """Undirected edges, each once as ``(min, max)``."""
        return sorted({(min(u, w), max(u, w)) for u, w in self._edge})

    # -- comparison --------------------------------------------------------

    def signature(self) -> tuple[frozenset, frozenset]:
        """Order- and id-independent (vertex set, face set) in coordinates."""
        pos = self._pos
        faces = frozenset(rotate_min(tuple(pos[v] for v in fv)) for _, fv in self.faces())
        return frozenset(self._coord_index), faces

    def __repr__(self):
        return f"HalfEdgeMesh(V={self.n_vertices}, F={self.n_faces})"


def rotate_min(tri, key=None):
    """Cyclically rotate ``tri`` so its smallest element (under ``key``) leads."""
    k = (lambda x: x) if key is None else key
    i = min(range(3), key=lambda j: k(tri[j]))
    return tuple(tri[i:]) + tuple(tri[:i])


def neighbors(mesh: HalfEdgeMesh, v: int) -> set[int]:
    return mesh.neighbors(v)


def is_boundary_edge(mesh: HalfEdgeMesh, u: int, w: int) -> bool:
    return mesh.is_boundary_edge(u, w)


# ---------------------------------------------------------------------------
# manifold validation


@dataclass
class ManifoldReport:
    violations: list[tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {k for k, _ in self.violations}

    def add(self, kind, detail):
        self.violations.append((kind, detail))

    def __bool__(self):
        return self.ok

    def __str__(self):
        if self.ok:
            return "manifold"
        return "; ".join(f"{k}: {d}" for k, d in self.violations)


def count_fans(v, faces: Iterable[Sequence[int]]) -> int:
    """Number of edge-connected face groups around ``v`` among ``faces``."""
    faces = [f for f in faces if v in f]
    if not faces:
        return 0
    parent = list(range(len(faces)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    by_spoke = defaultdict(list)
    for i, f in enumerate(faces):
        for w in f:
            if w != v:
                by_spoke[w].append(i)
    for group in by_spoke.values():
        for i in group[1:]:
            parent[find(i)] = find(group[0])
    return len({find(i) for i in range(len(faces))})


def validate_manifold(mesh, n_vertices=None) -> ManifoldReport:
    """Check a mesh (or a plain face list) for manifold violations.

    Works on the face list only, so it doubles as an oracle for the
    half-edge bookkeeping.
    """
    if isinstance(mesh, HalfEdgeMesh):
        faces = mesh.face_list()
        verts = mesh.vertices()
    else:
        faces = [tuple(int(i) for i in f) for f in mesh]
        verts = range(n_vertices) if n_vertices is not None else sorted({v for f in faces for v in f})

    report = ManifoldReport()
    good = []
    seen = set()
    for f in faces:
        if len(set(f)) < 3:
            report.add("degenerate face", str(f))
            continue
        key = frozenset(f)
        if key in seen:
            report.add("duplicate face", str(f))
        seen.add(key)
        good.append(f)

    directed = defaultdict(int)
    undirected = defaultdict(int)
    incident = defaultdict(list)
    for f in good:
        for i in range(3):
            u, w = f[i], f[(i + 1) % 3]
            directed[(u, w)] += 1
            undirected[(min(u, w), max(u, w))] += 1
            incident[u].append(f)
    for e, n in sorted(undirected.items()):
        if n > 2:
            report.add("edge-manifold violation", f"edge {e} has {n} faces")
    for e, n in sorted(directed.items()):
        if n > 1:
            report.add("inconsistent orientation", f"half-edge {e} appears {n} times")
    for v in verts:
        if v not in incident:
            report.add("isolated vertex", str(v))
            continue
        fans = count_fans(v, incident[v])
        if fans > 1:
            report.add("vertex-fan violation", f"vertex {v} has {fans} fans")
    return report


# ---------------------------------------------------------------------------
# ordering


def vertex_rank_key(coord):
    x, y, z = coord
    return (z, y, x)


def canonical_order(mesh: HalfEdgeMesh) -> list[Face]:
    """Faces sorted by z-y-x vertex rank, each rotated to lead with its lowest vertex."""
    pos = mesh._pos
    key = lambda v: vertex_rank_key(pos[v])  # noqa: E731
    rotated = [rotate_min(fv, key) for _, fv in mesh.faces()]
    rotated.sort(key=lambda f: tuple(key(v) for v in f))
    return rotated


# ---------------------------------------------------------------------------
# OBJ I/O and quantization


def load_obj(data) -> RawMesh:
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("ascii")
    verts = []
    faces = []
    face_lines = []
    ignored = 0
    for lineno, line in enumerate(io.StringIO(data), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "v":
            if len(parts) < 4:
                raise ObjParseError("vertex needs 3 coordinates", lineno)
            try:
                xyz = [float(p) for p in parts[1:4]]
            except ValueError as exc:
                raise ObjParseError(f"bad vertex coordinate: {exc}", lineno) from None
            verts.append(xyz)
        elif tag == "f":
            if len(parts) < 4:
                raise ObjParseError("face needs at least 3 vertices", lineno)
            idx = []
            for p in parts[1:]:
                ref = p.split("/", 1)[0]
                try:
                    i = int(ref)
                except ValueError:
                    raise ObjParseError(f"bad face index {p!r}", lineno) from None
                if i == 0:
                    raise ObjIndexError("face index 0 is invalid", lineno)
                idx.append(i - 1 if i > 0 else len(verts) + i)
            for k in range(1, len(idx) - 1):
                faces.append((idx[0], idx[k], idx[k + 1]))
                face_lines.append(lineno)
        else:
            ignored += 1
    n = len(verts)
    for f, lineno in zip(faces, face_lines):
        for i in f:
            if not 0 <= i < n:
                raise ObjIndexError(f"face references vertex {i + 1}, only {n} defined", lineno)
    v = np.asarray(verts, dtype=np.float64).reshape(-1, 3)
    if not np.all(np.isfinite(v)):
        raise ObjParseError("non-finite vertex coordinate")
    return RawMesh(v, np.asarray(faces, dtype=np.int64).reshape(-1, 3), ignored)


def save_obj(mesh: HalfEdgeMesh, grid: GridSpec | None = None) -> bytes:
    grid = grid or GridSpec()
    out = io.StringIO()
    out.write(f"# pmcodec n_bins={grid.n_bins}\n")
    order = sorted(mesh.vertices(), key=lambda v: vertex_rank_key(mesh.position(v)))
    local = {v: i + 1 for i, v in enumerate(order)}
    if order:
        pts = grid.dequantize([mesh.position(v) for v in order])
        for p in pts:
            out.write("v {!r} {!r} {!r}\n".format(*(float(c) for c in p)))
    for f in canonical_order(mesh):
        out.write("f {} {} {}\n".format(*(local[v] for v in f)))
    return out.getvalue().encode("ascii")


def quantize(raw: RawMesh, grid: GridSpec) -> HalfEdgeMesh:
    """Snap to ``grid``, weld coincident vertices and drop collapsed faces."""
    bins = grid.quantize(raw.vertices) if len(raw.vertices) else np.zeros((0, 3), np.int64)
    weld: dict[Coord, int] = {}
    coords: list[Coord] = []
    faces: list[Face] = []
    remap: dict[int, int] = {}

    def vid(i):
        if i not in remap:
            c = tuple(int(x) for x in bins[i])
            if c not in weld:
                weld[c] = len(coords)
                coords.append(c)
            remap[i] = weld[c]
        return remap[i]

    for f in raw.faces:
        a, b, c = (vid(int(i)) for i in f)
        if a == b or b == c or c == a:
            continue
        faces.append((a, b, c))
    report = validate_manifold(faces, n_vertices=len(coords))
    if not faces:
        report.add("empty mesh", "no faces survive quantization")
    if not report.ok:
        raise NonManifoldAfterQuantization(report)
    return HalfEdgeMesh.from_faces(coords, faces)


def normalize_quantize(raw: RawMesh, n_bins: int = 128) -> tuple[HalfEdgeMesh, GridSpec]:
    if len(raw.faces) == 0:
        raise ValueError("mesh has no faces")
    v = np.asarray(raw.vertices, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite vertex coordinates")
    used = v[np.unique(np.asarray(raw.faces).ravel())]
    grid = GridSpec.fit(used, n_bins)
    return quantize(raw, grid), grid


def mesh_arrays(mesh: HalfEdgeMesh, grid: GridSpec | None = None):
    """Float vertex array and 0-based face array; grid-unit coordinates mapped through ``grid``."""
    order = mesh.vertices()
    local = {v: i for i, v in enumerate(order)}
    bins = np.array([mesh.position(v) for v in order], dtype=np.float64).reshape(-1, 3)
    pts = grid.dequantize(bins) if grid is not None else bins
    faces = np.array([[local[v] for v in f] for f in mesh.face_list()], dtype=np.int64).reshape(-1, 3)
    return pts, faces


def triangle_normal(p0, p1, p2):
    """Unnormalized normal; exact for integer inputs."""
    ux, uy, uz = p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]
    vx, vy, vz = p2[0] - p0[0], p2[1] - p0[1], p2[2] - p0[2]
    return (uy * vz - uz * vy, uz * vx - ux * vz, ux * vy - uy * vx)


def triangle_area(p0, p1, p2) -> float:
    n = triangle_normal(p0, p1, p2)
    return 0.5 * math.sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2])
