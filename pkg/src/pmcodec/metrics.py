"""Set-level comparison of generated and reference shapes via point clouds.

Distances between clouds are Chamfer distances (sum of the two mean squared
nearest-neighbour distances). ``cov``, ``mmd`` and ``one_nna`` work on lists
of clouds; the ``*_from_matrix`` variants take precomputed distance matrices.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree
from scipy.stats import entropy

from .halfedge import GridSpec, HalfEdgeMesh, mesh_arrays


def sample_points(vertices, faces, n: int = 2048, seed: int = 0) -> np.ndarray:
    """Area-weighted uniform samples on the surface, shape ``(n, 3)``."""
    v = np.asarray(vertices, dtype=np.float64)
    f = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    if len(f) == 0:
        raise ValueError("mesh has no faces")
    a, b, c = v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]
    area = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
    total = area.sum()
    if not total > 0:
        raise ValueError("mesh has zero surface area")
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(f), size=n, p=area / total)
    r1 = np.sqrt(rng.random(n))
    r2 = rng.random(n)
    w0 = 1.0 - r1
    w1 = r1 * (1.0 - r2)
    w2 = r1 * r2
    return w0[:, None] * a[idx] + w1[:, None] * b[idx] + w2[:, None] * c[idx]


def sample_mesh(mesh: HalfEdgeMesh, n: int = 2048, seed: int = 0, n_bins: int = 128) -> np.ndarray:
    """Sample a grid mesh in unit-cube coordinates."""
    v, f = mesh_arrays(mesh, GridSpec(n_bins))
    return sample_points(v, f, n, seed)


def normalize_unit_cube(vertices) -> np.ndarray:
    """Translate and uniformly scale so the longest axis spans [0, 1]."""
    v = np.asarray(vertices, dtype=np.float64)
    return GridSpec.fit(v).normalize(v)


def _check(cloud):
    c = np.asarray(cloud, dtype=np.float64)
    if c.ndim != 2 or c.shape[1] != 3 or len(c) == 0:
        raise ValueError("point cloud must be a non-empty (n, 3) array")
    return c


def chamfer(a, b) -> float:
    a, b = _check(a), _check(b)
    da, _ = cKDTree(b).query(a)
    db, _ = cKDTree(a).query(b)
    return float(np.mean(da**2) + np.mean(db**2))


def chamfer_matrix(rows, cols) -> np.ndarray:
    rows = [_check(c) for c in rows]
    cols = [_check(c) for c in cols]
    row_trees = [cKDTree(c) for c in rows]
    col_trees = [cKDTree(c) for c in cols]
    out = np.empty((len(rows), len(cols)))
    for i, (a, ta) in enumerate(zip(rows, row_trees)):
        for j, (b, tb) in enumerate(zip(cols, col_trees)):
            da, _ = tb.query(a)
            db, _ = ta.query(b)
            out[i, j] = np.mean(da**2) + np.mean(db**2)
    return out


def _nonempty(*sets):
    for s in sets:
        if len(s) == 0:
            raise ValueError("cloud sets must be non-empty")


def cov_from_matrix(d_gen_ref) -> float:
    """Percent of references that are the nearest reference of some generated cloud."""
    d = np.asarray(d_gen_ref, dtype=np.float64)
    hit = np.unique(np.argmin(d, axis=1))
    return 100.0 * len(hit) / d.shape[1]


def mmd_from_matrix(d_gen_ref) -> float:
    """Mean over references of the distance to the closest generated cloud."""
    d = np.asarray(d_gen_ref, dtype=np.float64)
    return float(np.min(d, axis=0).mean())


def one_nna_from_matrix(d_gg, d_gr, d_rr) -> float:
    """Leave-one-out 1-NN accuracy (percent) over the pooled gen + ref set."""
    d_gg, d_gr, d_rr = (np.asarray(x, dtype=np.float64) for x in (d_gg, d_gr, d_rr))
    ng, nr = d_gr.shape
    if ng < 2 or nr < 2:
        raise ValueError("1-NNA needs at least two clouds per set")
    pooled = np.block([[d_gg, d_gr], [d_gr.T, d_rr]])
    np.fill_diagonal(pooled, np.inf)
    labels = np.r_[np.ones(ng, bool), np.zeros(nr, bool)]
    nearest = np.argmin(pooled, axis=1)
    return 100.0 * float(np.mean(labels[nearest] == labels))


def cov(gen, ref) -> float:
    _nonempty(gen, ref)
    return cov_from_matrix(chamfer_matrix(gen, ref))


def mmd(gen, ref) -> float:
    _nonempty(gen, ref)
    return mmd_from_matrix(chamfer_matrix(gen, ref))


def one_nna(gen, ref) -> float:
    _nonempty(gen, ref)
    return one_nna_from_matrix(chamfer_matrix(gen, gen), chamfer_matrix(gen, ref), chamfer_matrix(ref, ref))


def occupancy_histogram(clouds, resolution: int = 28) -> np.ndarray:
    """Point counts per voxel of a ``resolution^3`` grid over the unit cube."""
    pts = np.concatenate([_check(c) for c in clouds], axis=0)
    idx = np.clip(np.floor(pts * resolution), 0, resolution - 1).astype(np.int64)
    flat = np.ravel_multi_index(idx.T, (resolution,) * 3)
    return np.bincount(flat, minlength=resolution**3).astype(np.float64)


def jsd_from_histograms(p, q) -> float:
    """Jensen-Shannon divergence in bits; 0 for identical, 1 for disjoint support."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if np.any(p < 0) or np.any(q < 0):
        raise ValueError("histograms must be non-negative")
    p = p / p.sum()
    q = q / q.sum()
    m = 0.5 * (p + q)
    value = entropy(m, base=2) - 0.5 * (entropy(p, base=2) + entropy(q, base=2))
    return float(min(1.0, max(0.0, value)))


def jsd(gen, ref, resolution: int = 28) -> float:
    _nonempty(gen, ref)
    return jsd_from_histograms(occupancy_histogram(gen, resolution), occupancy_histogram(ref, resolution))


def all_metrics(gen, ref, resolution: int = 28) -> dict[str, float]:
    _nonempty(gen, ref)
    d_gr = chamfer_matrix(gen, ref)
    out = {
        "cov": cov_from_matrix(d_gr),
        "mmd": mmd_from_matrix(d_gr),
        "jsd": jsd(gen, ref, resolution),
    }
    if len(gen) >= 2 and len(ref) >= 2:
        out["one_nna"] = one_nna_from_matrix(chamfer_matrix(gen, gen), d_gr, chamfer_matrix(ref, ref))
    return out
