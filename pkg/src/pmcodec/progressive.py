"""Vertex splits: ring traversal, record application and level replay."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import CollisionError, InvalidRecordError, TopologyError, TraversalError
from .halfedge import Coord, GridSpec, HalfEdgeMesh


@dataclass(frozen=True)
class VSplitRecord:
    """One refinement step, addressed by grid coordinates.

    ``l`` and ``r`` are the third vertices of the faces that the split
    restores, ``(s, l, t)`` and ``(r, s, t)``. ``None`` marks the missing
    side of a boundary split.
    """

    s: Coord
    l: Coord | None
    r: Coord | None
    t: Coord

    def __post_init__(self):
        if self.l is None and self.r is None:
            raise InvalidRecordError("only one of v_l and v_r may be NIL")
        if self.s == self.t:
            raise InvalidRecordError("v_t must differ from v_s")
        for c in (self.s, self.l, self.r, self.t):
            if c is not None and len(c) != 3:
                raise InvalidRecordError(f"bad coordinate {c!r}")

    @property
    def is_boundary(self) -> bool:
        return self.l is None or self.r is None


@dataclass
class ProgressiveMesh:
    base: HalfEdgeMesh
    records: list[VSplitRecord] = field(default_factory=list)
    grid: GridSpec = field(default_factory=GridSpec)

    @property
    def n_records(self) -> int:
        return len(self.records)

    @property
    def n_interior(self) -> int:
        return sum(not r.is_boundary for r in self.records)

    @property
    def n_boundary(self) -> int:
        return sum(r.is_boundary for r in self.records)

    def final_face_count(self) -> int:
        return self.base.n_faces + 2 * self.n_interior + self.n_boundary


def ring_faces(mesh: HalfEdgeMesh, s: int, l: int | None, r: int | None):
    """Split the faces around ``s`` into those kept by ``s`` and those handed to ``v_t``.

    Walks clockwise from the half-edge ``l -> s`` by ``twin(next(h))`` until
    the face whose third vertex is ``r``. If a border interrupts the walk
    (``s`` on the boundary), the remainder is collected counterclockwise from
    ``s -> r`` by ``twin(prev(g))`` until the border.
    """
    if l is None and r is None:
        raise InvalidRecordError("only one of v_l and v_r may be NIL")
    ring = mesh.neighbors(s)
    for name, v in (("v_l", l), ("v_r", r)):
        if v is not None and v not in ring:
            raise InvalidRecordError(f"{name} is not adjacent to v_s")
    if l is not None and l == r:
        raise InvalidRecordError("v_l and v_r coincide")

    stay: list[int] = []
    seen: set[int] = set()
    reached = False
    if l is not None:
        h = mesh.halfedge(l, s)
        while h is not None:
            f = h // 3
            if f in seen:
                raise TraversalError("clockwise walk from v_l closed the ring without meeting v_r")
            seen.add(f)
            stay.append(f)
            out = mesh.next(h)
            if r is not None and mesh.dest(out) == r:
                reached = True
                break
            h = mesh.twin(out)
    if r is not None and not reached:
        g = mesh.halfedge(s, r)
        while g is not None:
            f = g // 3
            if f in seen:
                raise TraversalError("counterclockwise walk from v_r re-entered visited faces")
            seen.add(f)
            stay.append(f)
            g = mesh.twin(mesh.prev(g))
    move = sorted(mesh.vertex_faces(s) - seen)
    return stay, move


def partition_ring(mesh: HalfEdgeMesh, s: int, l: int | None, r: int | None):
    """(vertices staying adjacent to ``s`` only, vertices re-homed to ``v_t``)."""
    stay_f, move_f = ring_faces(mesh, s, l, r)
    ends = {s, l, r}
    stay = {v for f in stay_f for v in mesh.face_vertices(f)} - ends
    move = mesh.neighbors(s) - stay - ends
    return stay, move


def _lookup(mesh, coord, name):
    if coord is None:
        return None
    v = mesh.find_vertex(coord)
    if v is None:
        raise InvalidRecordError(f"{name} {coord} is not a vertex of the mesh")
    return v


def vsplit_apply(mesh: HalfEdgeMesh, record: VSplitRecord) -> int:
    """Apply ``record`` in place and return the id of the new vertex."""
    s = _lookup(mesh, record.s, "v_s")
    l = _lookup(mesh, record.l, "v_l")
    r = _lookup(mesh, record.r, "v_r")
    if mesh.find_vertex(record.t) is not None:
        raise CollisionError(f"v_t {record.t} collides with an existing vertex")
    _, move = ring_faces(mesh, s, l, r)

    t = mesh.add_vertex(record.t)
    old = [mesh.face_vertices(f) for f in move]
    added: list[int] = []
    for f in move:
        mesh.remove_face(f)
    try:
        for fv in old:
            added.append(mesh.add_face(*(t if v == s else v for v in fv)))
        if l is not None:
            added.append(mesh.add_face(s, l, t))
        if r is not None:
            added.append(mesh.add_face(r, s, t))
    except TopologyError:
        for f in added:
            mesh.remove_face(f)
        for fv in old:
            mesh.add_face(*fv)
        mesh.remove_vertex(t)
        raise
    return t


def reconstruct(pm: ProgressiveMesh, k: int | None = None) -> HalfEdgeMesh:
    """Mesh at level ``k``: the base with the first ``k`` records applied."""
    n = pm.n_records
    if k is None:
        k = n
    if not 0 <= k <= n:
        raise ValueError(f"level {k} outside [0, {n}]")
    mesh = pm.base.copy()
    for rec in pm.records[:k]:
        vsplit_apply(mesh, rec)
    return mesh


def iter_levels(pm: ProgressiveMesh):
    """Yield ``(k, mesh)`` for k = 0..n, mutating one working copy."""
    mesh = pm.base.copy()
    yield 0, mesh
    for k, rec in enumerate(pm.records, start=1):
        vsplit_apply(mesh, rec)
        yield k, mesh
