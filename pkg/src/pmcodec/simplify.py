"""Quadric-ordered half-edge collapse down to a base mesh."""

from __future__ import annotations

import heapq
import math

import numpy as np

from .errors import DegenerateFaceError, InvalidCollapseError, NonManifoldError
from .halfedge import (
    GridSpec,
    HalfEdgeMesh,
    count_fans,
    triangle_normal,
    validate_manifold,
    vertex_rank_key,
)
from .progressive import ProgressiveMesh, VSplitRecord

BOUNDARY_WEIGHT = 1000.0


def _plane_quadric(normal, point, weight):
    n = np.asarray(normal, dtype=np.float64)
    p = np.append(n, -float(n @ np.asarray(point, dtype=np.float64)))
    return weight * np.outer(p, p)


def face_quadric(p0, p1, p2) -> np.ndarray:
    """Area-weighted fundamental quadric of the triangle's supporting plane."""
    n = np.asarray(triangle_normal(p0, p1, p2), dtype=np.float64)
    norm = float(np.linalg.norm(n))
    if norm == 0.0:
        raise DegenerateFaceError(f"zero-area face {p0}, {p1}, {p2}")
    return _plane_quadric(n / norm, p0, 0.5 * norm)


def quadric_error(q: np.ndarray, point) -> float:
    v = np.array([point[0], point[1], point[2], 1.0])
    return float(v @ q @ v)


def vertex_quadrics(mesh: HalfEdgeMesh, boundary_weight: float = BOUNDARY_WEIGHT) -> dict[int, np.ndarray]:
    """Per-vertex quadric sums.

    Zero-area faces contribute nothing. Each border edge adds a plane that
    contains the edge and is perpendicular to its face, weighted by
    ``boundary_weight * |edge|^2``, so rims resist being pulled inward.
    """
    q = {v: np.zeros((4, 4)) for v in mesh.vertices()}
    for _, (a, b, c) in mesh.faces():
        pa, pb, pc = mesh.position(a), mesh.position(b), mesh.position(c)
        try:
            fq = face_quadric(pa, pb, pc)
        except DegenerateFaceError:
            continue
        q[a] += fq
        q[b] += fq
        q[c] += fq
    if boundary_weight > 0:
        for h in mesh.halfedge_ids():
            if mesh.twin(h) is not None:
                continue
            a, b = mesh.origin(h), mesh.dest(h)
            c = mesh.dest(mesh.next(h))
            pa, pb = mesh.position(a), mesh.position(b)
            n = triangle_normal(pa, pb, mesh.position(c))
            e = np.subtract(pb, pa, dtype=np.float64)
            m = np.cross(e, n)
            mn = float(np.linalg.norm(m))
            if mn == 0.0:
                continue
            bq = _plane_quadric(m / mn, pa, boundary_weight * float(e @ e))
            q[a] += bq
            q[b] += bq
    return q


def collapse_cost(mesh: HalfEdgeMesh, s: int, t: int, quadrics=None) -> float:
    """Error of ``Q_s + Q_t`` at the kept position of ``s``."""
    if not mesh.has_edge(s, t):
        raise ValueError(f"({s}, {t}) is not an edge")
    if quadrics is None:
        quadrics = vertex_quadrics(mesh)
    return max(0.0, quadric_error(quadrics[s] + quadrics[t], mesh.position(s)))


def _dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def is_collapse_valid(mesh: HalfEdgeMesh, s: int, t: int) -> tuple[bool, str]:
    """Whether merging ``t`` into ``s`` keeps the mesh manifold and invertible."""
    if not mesh.has_edge(s, t):
        raise ValueError(f"({s}, {t}) is not an edge")
    h_ts = mesh.halfedge(t, s)
    h_st = mesh.halfedge(s, t)
    boundary = h_ts is None or h_st is None
    vanish = {h // 3 for h in (h_ts, h_st) if h is not None}

    floor = 4 if mesh.is_closed else 1
    if mesh.n_faces - len(vanish) < floor:
        return False, "result below minimum complexity"

    common = mesh.neighbors(s) & mesh.neighbors(t)
    if len(common) != (1 if boundary else 2):
        return False, f"link condition: {len(common)} shared neighbors"
    if not boundary and mesh.is_boundary_vertex(s) and mesh.is_boundary_vertex(t):
        return False, "interior edge joins two border vertices"

    pos_s = mesh.position(s)
    moved = []
    for f in mesh.vertex_faces(t) - vanish:
        fv = mesh.face_vertices(f)
        pts = [mesh.position(v) for v in fv]
        before = triangle_normal(*pts)
        after = triangle_normal(*(pos_s if v == t else p for v, p in zip(fv, pts)))
        if _dot(before, after) <= 0:
            return False, "face normal flips"
        moved.append(tuple(s if v == t else v for v in fv))

    star = [mesh.face_vertices(f) for f in mesh.vertex_faces(s) - vanish] + moved
    keys = set()
    directed = set()
    for fv in star:
        key = frozenset(fv)
        if key in keys:
            return False, "duplicate face"
        keys.add(key)
        for i in range(3):
            e = (fv[i], fv[(i + 1) % 3])
            if e in directed:
                return False, "edge-manifold violation"
            directed.add(e)
    if count_fans(s, star) != 1:
        return False, "vertex-fan violation"
    return True, "ok"


def ecol(mesh: HalfEdgeMesh, s: int, t: int) -> VSplitRecord:
    """Merge ``t`` into ``s`` in place; return the record that undoes it."""
    ok, reason = is_collapse_valid(mesh, s, t)
    if not ok:
        raise InvalidCollapseError(f"cannot collapse {t} into {s}: {reason}")
    h_ts = mesh.halfedge(t, s)
    h_st = mesh.halfedge(s, t)
    l = None if h_ts is None else mesh.dest(mesh.next(h_ts))
    r = None if h_st is None else mesh.dest(mesh.next(h_st))
    rec = VSplitRecord(
        mesh.position(s),
        None if l is None else mesh.position(l),
        None if r is None else mesh.position(r),
        mesh.position(t),
    )
    vanish = {h // 3 for h in (h_ts, h_st) if h is not None}
    t_faces = sorted(mesh.vertex_faces(t))
    old = [(f, mesh.face_vertices(f)) for f in t_faces]
    for f in t_faces:
        mesh.remove_face(f)
    for f, fv in old:
        if f not in vanish:
            mesh.add_face(*(s if v == t else v for v in fv))
    mesh.remove_vertex(t)
    return rec


def decimate_to_pm(mesh: HalfEdgeMesh, grid: GridSpec | None = None, check: bool = False) -> ProgressiveMesh:
    """Greedily collapse the cheapest valid edge until none is left.

    The input is not modified. Both orientations of every edge are
    candidates; entries carry per-vertex version stamps and are dropped
    when either endpoint changed since they were queued. With ``check``
    the mesh is re-validated after every collapse.
    """
    report = validate_manifold(mesh)
    if not report.ok:
        raise NonManifoldError(report)
    mesh = mesh.copy()
    quadrics = vertex_quadrics(mesh)
    version: dict[int, int] = {v: 0 for v in mesh.vertices()}
    heap: list = []

    def push(s, t):
        cost = max(0.0, quadric_error(quadrics[s] + quadrics[t], mesh.position(s)))
        entry = (
            cost,
            vertex_rank_key(mesh.position(s)),
            vertex_rank_key(mesh.position(t)),
            s,
            t,
            version[s],
            version[t],
        )
        heapq.heappush(heap, entry)

    for a, b in mesh.edges():
        push(a, b)
        push(b, a)

    records: list[VSplitRecord] = []
    while heap:
        cost, _, _, s, t, vs, vt = heapq.heappop(heap)
        if not (mesh.is_active(s) and mesh.is_active(t)):
            continue
        if version[s] != vs or version[t] != vt or not mesh.has_edge(s, t):
            continue
        ok, _ = is_collapse_valid(mesh, s, t)
        if not ok:
            continue
        assert math.isfinite(cost)
        records.append(ecol(mesh, s, t))
        quadrics[s] = quadrics[s] + quadrics.pop(t)
        del version[t]
        if check:
            rep = validate_manifold(mesh)
            if not rep.ok:
                raise NonManifoldError(rep, f"collapse {t}->{s} broke the mesh: {rep}")
        touched = {s} | mesh.neighbors(s)
        for v in touched:
            version[v] += 1
        pairs = set()
        for v in touched:
            for w in mesh.neighbors(v):
                pairs.add((v, w))
                pairs.add((w, v))
        for a, b in sorted(pairs):
            push(a, b)
    records.reverse()
    return ProgressiveMesh(mesh, records, grid or GridSpec())
