import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pmcodec.corpus import icosphere
from pmcodec.errors import (
    CollisionError,
    NonManifoldAfterQuantization,
    ObjIndexError,
    ObjParseError,
    TopologyError,
)
from pmcodec.halfedge import (
    GridSpec,
    HalfEdgeMesh,
    RawMesh,
    canonical_order,
    count_fans,
    is_boundary_edge,
    load_obj,
    neighbors,
    normalize_quantize,
    quantize,
    save_obj,
    validate_manifold,
)

from conftest import APEX, B1, B2, B3, B4, PYRAMID_COORDS, PYRAMID_FACES, TETRA_COORDS, TETRA_FACES


def brute_neighbors(faces, v):
    out = set()
    for f in faces:
        if v in f:
            out |= set(f)
    out.discard(v)
    return out


def by_coord(mesh, c):
    return mesh.find_vertex(c)


# -- OBJ ------------------------------------------------------------------


def test_load_minimal_obj():
    raw = load_obj(b"v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n")
    assert raw.vertices.shape == (3, 3)
    assert raw.faces.tolist() == [[0, 1, 2]]


def test_load_fan_triangulates_quads():
    raw = load_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
    assert raw.faces.tolist() == [[0, 1, 2], [0, 2, 3]]


def test_load_index_out_of_range():
    with pytest.raises(ObjIndexError) as e:
        load_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n")
    assert e.value.line == 4


def test_load_parse_error_has_line():
    with pytest.raises(ObjParseError) as e:
        load_obj("v 0 0 0\nv 1 zero 0\n")
    assert e.value.line == 2


def test_load_ignores_other_records_and_slashes():
    text = "# c\nmtllib a.mtl\nv 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nvt 0 0\nf 1/1/1 2/2/1 3//1\n"
    raw = load_obj(text)
    assert raw.faces.tolist() == [[0, 1, 2]]
    assert raw.ignored == 3


def test_load_negative_indices():
    raw = load_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n")
    assert raw.faces.tolist() == [[0, 1, 2]]


def test_save_tetra_counts(tetra):
    text = save_obj(tetra, GridSpec(128)).decode()
    lines = text.splitlines()
    assert sum(l.startswith("v ") for l in lines) == 4
    assert sum(l.startswith("f ") for l in lines) == 4


def test_save_empty_mesh_header_only():
    text = save_obj(HalfEdgeMesh(), GridSpec(128)).decode()
    assert all(l.startswith("#") for l in text.splitlines())


def test_save_load_round_trip_corpus(corpus_pms):
    for _, mesh, pm in corpus_pms[::7]:
        again = quantize(load_obj(save_obj(mesh, pm.grid)), pm.grid)
        assert again.signature() == mesh.signature()


# -- quantization ---------------------------------------------------------


def test_quantize_bounds():
    g = GridSpec(128)
    assert g.quantize([[0.0, 0.0, 0.0]]).tolist() == [[0, 0, 0]]
    assert g.quantize([[1.0, 1.0, 1.0]]).tolist() == [[127, 127, 127]]
    assert g.quantize([[0.5, 0.999, 0.0078125]]).tolist() == [[64, 127, 1]]


def test_fit_maps_longest_axis_to_unit():
    pts = np.array([[1.0, 2.0, 3.0], [5.0, 3.0, 4.0]])
    u = GridSpec.fit(pts).normalize(pts)
    assert np.allclose(u.min(axis=0), 0)
    assert np.isclose(u.max(), 1.0)
    assert np.allclose(u[1], [1.0, 0.25, 0.25])


def test_weld_near_duplicates_drops_degenerate_face():
    # p3 sits 1e-9 from p2: both land in one bin, face (p1, p3, p2) collapses.
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1e-9, 1, 0]], dtype=float)
    raw = RawMesh(v, np.array([[0, 1, 2], [1, 3, 2]]))
    mesh, _ = normalize_quantize(raw, 128)
    assert mesh.n_vertices == 3
    assert mesh.n_faces == 1


def test_weld_into_non_manifold_is_rejected():
    # Two triangles meeting only through vertices that weld together: a bowtie.
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0.5, 0.5, 1], [2, 2, 1], [2, 1.5, 1], [0.5 + 1e-9, 0.5, 1]])
    raw = RawMesh(v, np.array([[0, 1, 3], [4, 5, 6]]))
    with pytest.raises(NonManifoldAfterQuantization) as e:
        normalize_quantize(raw, 128)
    assert "vertex-fan violation" in e.value.report.kinds()


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=3, max_size=3), st.integers(2, 512))
def test_bin_stability(p, n):
    g = GridSpec(n)
    q = g.quantize([p])
    assert (g.quantize(g.dequantize(q)) == q).all()


# -- connectivity -----------------------------------------------------------


def test_tetra_neighbors(tetra):
    for v in tetra.vertices():
        assert neighbors(tetra, v) == set(tetra.vertices()) - {v}


def test_pyramid_neighbors_match_brute_force(pyramid):
    apex, b1 = by_coord(pyramid, APEX), by_coord(pyramid, B1)
    ids = {by_coord(pyramid, c) for c in (B1, B2, B3, B4)}
    assert neighbors(pyramid, apex) == ids
    assert neighbors(pyramid, b1) == {by_coord(pyramid, c) for c in (B2, B3, B4, APEX)}
    for v in pyramid.vertices():
        assert neighbors(pyramid, v) == brute_neighbors(pyramid.face_list(), v)


def test_neighbors_of_inactive_vertex_errors(pyramid):
    with pytest.raises((ValueError, KeyError, IndexError)):
        pyramid.neighbors(99)


def test_neighbors_brute_force_on_corpus(corpus_pms):
    for _, mesh, _ in corpus_pms:
        faces = mesh.face_list()
        adj = {}
        for f in faces:
            for v in f:
                adj.setdefault(v, set()).update(w for w in f if w != v)
        for v in mesh.vertices():
            assert mesh.neighbors(v) == adj[v]


def test_boundary_edges():
    tet = HalfEdgeMesh.from_faces(TETRA_COORDS, TETRA_FACES)
    assert not any(is_boundary_edge(tet, u, w) for u, w in tet.edges())
    tri = HalfEdgeMesh.from_faces([(0, 0, 0), (1, 0, 0), (0, 1, 0)], [(0, 1, 2)])
    assert all(is_boundary_edge(tri, u, w) for u, w in tri.edges())


def test_two_triangles_shared_edge(strip):
    shared = (1, 2)
    edges = strip.edges()
    assert len(edges) == 5
    for u, w in edges:
        assert is_boundary_edge(strip, u, w) == ({u, w} != set(shared))


def test_boundary_edge_not_an_edge(strip):
    with pytest.raises(ValueError):
        strip.is_boundary_edge(0, 3)


def test_halfedge_invariants_on_corpus(corpus_pms):
    for _, mesh, _ in corpus_pms[::3]:
        hs = mesh.halfedge_ids()
        assert len(hs) == 3 * mesh.n_faces == mesh.n_halfedges
        for h in hs:
            assert mesh.next(mesh.next(mesh.next(h))) == h
            t = mesh.twin(h)
            if t is not None:
                assert mesh.twin(t) == h
                assert mesh.origin(t) == mesh.origin(mesh.next(h))


def test_add_face_rejects_repeated_halfedge(pyramid):
    a, b = by_coord(pyramid, B1), by_coord(pyramid, B2)
    c = pyramid.add_vertex((9, 9, 9))
    with pytest.raises(TopologyError):
        pyramid.add_face(a, b, c)  # b1->b2 already used


def test_add_vertex_collision(pyramid):
    with pytest.raises(CollisionError):
        pyramid.add_vertex(B1)


# -- validation -----------------------------------------------------------


def test_icosphere_is_manifold():
    mesh, _ = normalize_quantize(icosphere(2), 128)
    assert validate_manifold(mesh).ok


def test_three_faces_on_one_edge():
    rep = validate_manifold([(0, 1, 2), (1, 0, 3), (0, 1, 4)])
    assert "edge-manifold violation" in rep.kinds()


def test_two_cones_joined_at_apex():
    # apex 0; ring 1-2-3 above, ring 4-5-6 below
    faces = [(0, 1, 2), (0, 2, 3), (0, 3, 1), (0, 5, 4), (0, 6, 5), (0, 4, 6)]
    assert count_fans(0, faces) == 2
    rep = validate_manifold(faces)
    assert rep.kinds() == {"vertex-fan violation"}


def test_duplicate_and_isolated_and_orientation():
    assert "duplicate face" in validate_manifold([(0, 1, 2), (1, 2, 0)]).kinds()
    assert "isolated vertex" in validate_manifold([(0, 1, 2)], n_vertices=4).kinds()
    assert "inconsistent orientation" in validate_manifold([(0, 1, 2), (0, 1, 3)]).kinds()


def test_validate_accepts_halfedge_mesh(pyramid):
    assert validate_manifold(pyramid).ok


# -- canonical order --------------------------------------------------------


def test_rotation_never_reverses():
    # ranks: v0 < v1 < v2 by z
    coords = [(0, 0, 0), (0, 0, 1), (0, 0, 2), (5, 5, 5)]
    mesh = HalfEdgeMesh.from_faces(coords, [(2, 0, 1)])
    assert canonical_order(mesh) == [(0, 1, 2)]


def test_z_major_rank():
    coords = [(9, 9, 1), (0, 0, 2), (5, 0, 0)]
    mesh = HalfEdgeMesh.from_faces(coords, [(0, 1, 2)])
    assert canonical_order(mesh) == [(2, 0, 1)]


# rank (z, y, x): B1 < B2 < B4 < B3 < APEX
PYRAMID_GOLDEN = [(B1, B2, APEX), (B1, B4, B3), (B1, B3, B2), (B1, APEX, B4), (B2, B3, APEX), (B4, APEX, B3)]


def test_pyramid_golden_order(pyramid):
    got = [tuple(pyramid.position(v) for v in f) for f in canonical_order(pyramid)]
    assert got == PYRAMID_GOLDEN


def test_canonical_order_permutation_invariant(corpus_pms):
    rng = random.Random(1)
    for _, mesh, _ in corpus_pms[::10]:
        coords = [mesh.position(v) for v in mesh.vertices()]
        idx = {v: i for i, v in enumerate(mesh.vertices())}
        faces = [tuple(idx[v] for v in f) for f in mesh.face_list()]
        perm = list(range(len(coords)))
        rng.shuffle(perm)
        inv = {old: new for new, old in enumerate(perm)}
        shuffled = [coords[old] for old in perm]
        sfaces = [tuple(inv[v] for v in f) for f in faces]
        rng.shuffle(sfaces)
        sfaces = [f[k:] + f[:k] for f, k in zip(sfaces, itertools.cycle([0, 1, 2]))]
        other = HalfEdgeMesh.from_faces(shuffled, sfaces)

        def listing(m):
            return [tuple(m.position(v) for v in f) for f in canonical_order(m)]

        assert listing(other) == listing(mesh)
