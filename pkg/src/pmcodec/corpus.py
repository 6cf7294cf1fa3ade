"""Synthetic manifold meshes for tests and experiments."""

from __future__ import annotations

import numpy as np

from .halfedge import RawMesh


def _raw(v, f):
    return RawMesh(np.asarray(v, dtype=np.float64), np.asarray(f, dtype=np.int64))


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def icosphere(level: int = 1) -> RawMesh:
    phi = (1 + 5**0.5) / 2
    v = [
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ]
    f = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [np.array(p, dtype=np.float64) / np.linalg.norm(p) for p in v]
    for _ in range(level):
        mid = {}

        def midpoint(a, b):
            key = (min(a, b), max(a, b))
            if key not in mid:
                p = verts[a] + verts[b]
                verts.append(p / np.linalg.norm(p))
                mid[key] = len(verts) - 1
            return mid[key]

        nf = []
        for a, b, c in f:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            nf += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        f = nf
    return _raw(verts, f)


def torus(nu: int = 16, nv: int = 8, major: float = 1.0, minor: float = 0.35) -> RawMesh:
    v = []
    for i in range(nu):
        a = 2 * np.pi * i / nu
        for j in range(nv):
            b = 2 * np.pi * j / nv
            rr = major + minor * np.cos(b)
            v.append((rr * np.cos(a), rr * np.sin(a), minor * np.sin(b)))
    f = []
    for i in range(nu):
        for j in range(nv):
            p = i * nv + j
            q = ((i + 1) % nu) * nv + j
            p1 = i * nv + (j + 1) % nv
            q1 = ((i + 1) % nu) * nv + (j + 1) % nv
            f += [(p, q, q1), (p, q1, p1)]
    return _raw(v, f)


def grid_patch(nx: int, ny: int, heights=None) -> RawMesh:
    """Open ``nx`` by ``ny`` quad grid in the unit square, split into triangles."""
    xs = np.linspace(0.0, 1.0, nx + 1)
    ys = np.linspace(0.0, float(ny) / max(nx, ny), ny + 1) if ny != nx else np.linspace(0.0, 1.0, ny + 1)
    v = []
    for j in range(ny + 1):
        for i in range(nx + 1):
            z = 0.0 if heights is None else float(heights[j, i])
            v.append((xs[i], ys[j], z))
    f = []
    w = nx + 1
    for j in range(ny):
        for i in range(nx):
            a, b, c, d = j * w + i, j * w + i + 1, (j + 1) * w + i + 1, (j + 1) * w + i
            if (i + j) % 2:
                f += [(a, b, c), (a, c, d)]
            else:
                f += [(a, b, d), (b, c, d)]
    return _raw(v, f)


def subdivided_cube(k: int = 3) -> RawMesh:
    """Closed cube surface with each side cut into a ``k`` by ``k`` grid."""
    index = {}
    verts = []

    def vid(p):
        key = tuple(int(c) for c in p)
        if key not in index:
            index[key] = len(verts)
            verts.append(np.array(key, dtype=np.float64) / k - 0.5)
        return index[key]

    faces = []
    # (axis, side): outward normal along +/- axis
    for axis in range(3):
        u_ax, v_ax = (axis + 1) % 3, (axis + 2) % 3
        for side in (0, k):
            for i in range(k):
                for j in range(k):
                    def P(a, b):
                        p = [0, 0, 0]
                        p[axis], p[u_ax], p[v_ax] = side, a, b
                        return vid(p)

                    a, b, c, d = P(i, j), P(i + 1, j), P(i + 1, j + 1), P(i, j + 1)
                    quad = [(a, b, c), (a, c, d)] if side == k else [(a, c, b), (a, d, c)]
                    faces += quad
    return _raw(verts, faces)


def transform(raw: RawMesh, rng: np.random.Generator, noise: float = 0.0, rotate: bool = True) -> RawMesh:
    v = raw.vertices.copy()
    if noise:
        v = v + rng.normal(scale=noise, size=v.shape)
    if rotate:
        v = v @ random_rotation(rng).T
    v = v * rng.uniform(0.5, 2.0) + rng.uniform(-1.0, 1.0, size=3)
    return RawMesh(v, raw.faces.copy())


def build_corpus(seed: int = 0, size: int = 100) -> list[tuple[str, RawMesh]]:
    """Mixed corpus of icospheres, tori, noised cubes and open strips."""
    rng = np.random.default_rng(seed)
    out = []
    kinds = ["icosphere", "torus", "cube", "strip"]
    for i in range(size):
        kind = kinds[i % 4]
        if kind == "icosphere":
            level = (1, 2, 1, 2, 3)[(i // 4) % 5]
            raw = transform(icosphere(level), rng)
            name = f"icosphere_l{level}_{i:03d}"
        elif kind == "torus":
            nu = int(rng.integers(10, 21))
            nv = int(rng.integers(6, 11))
            raw = transform(torus(nu, nv, 1.0, float(rng.uniform(0.3, 0.45))), rng)
            name = f"torus_{nu}x{nv}_{i:03d}"
        elif kind == "cube":
            k = int(rng.integers(2, 6))
            raw = transform(subdivided_cube(k), rng, noise=0.02)
            name = f"cube_k{k}_{i:03d}"
        else:
            nx = int(rng.integers(3, 13))
            ny = int(rng.integers(1, 5))
            heights = rng.normal(scale=0.03, size=(ny + 1, nx + 1)) if i % 8 == 3 else None
            raw = transform(grid_patch(nx, ny, heights), rng, rotate=heights is not None)
            name = f"strip_{nx}x{ny}_{i:03d}"
        out.append((name, raw))
    return out
