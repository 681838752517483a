"""Synthetic meshes shared by the test modules."""
from __future__ import annotations

import numpy as np
from scipy.spatial.transform import Rotation

from primdecomp.mesh import IndexedMesh
from primdecomp.primitives import Cylinder, Sphere, quantize

_CUBE_FACES = [(0, 2, 3, 1), (4, 5, 7, 6), (0, 1, 5, 4), (2, 6, 7, 3), (0, 4, 6, 2), (1, 3, 7, 5)]


def merge(*meshes: IndexedMesh) -> IndexedMesh:
    verts, faces, base = [], [], 0
    for m in meshes:
        verts.append(m.vertices)
        faces.extend(tuple(i + base for i in f) for f in m.faces)
        base += m.n_vertices
    return IndexedMesh(np.concatenate(verts), faces)


def box(lo=(0, 0, 0), hi=(1, 1, 1), triangulate=False) -> IndexedMesh:
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    V = np.array([[(lo, hi)[x][0], (lo, hi)[y][1], (lo, hi)[z][2]] for z in (0, 1) for y in (0, 1) for x in (0, 1)])
    if triangulate:
        F = [t for a, b, c, d in _CUBE_FACES for t in ((a, b, c), (a, c, d))]
    else:
        F = _CUBE_FACES
    return IndexedMesh(V, F)


def cube(triangulate=True) -> IndexedMesh:
    """Axis-aligned unit cube; 12 triangles by default."""
    return box(triangulate=triangulate)


def rigid(mesh: IndexedMesh, seed: int, shift=(0.0, 0.0, 0.0)) -> IndexedMesh:
    R = Rotation.random(random_state=seed).as_matrix()
    return IndexedMesh(mesh.vertices @ R.T + np.asarray(shift), mesh.faces)


def ngon_prism(n=32, r=1.0, h=1.0) -> IndexedMesh:
    th = 2 * np.pi * np.arange(n) / n
    ring = np.c_[r * np.cos(th), r * np.sin(th), np.zeros(n)]
    V = np.vstack([ring, ring + [0, 0, h]])
    F = [(k, (k + 1) % n, n + (k + 1) % n, n + k) for k in range(n)]
    F += [tuple(range(n - 1, -1, -1)), tuple(range(n, 2 * n))]
    return IndexedMesh(V, F)


def uv_sphere(segments=64, r=1.0) -> IndexedMesh:
    return quantize(Sphere([0, 0, 0], r), segments)


def wedge() -> IndexedMesh:
    """Gable roof: isosceles triangle (base 2, height 1) extruded by 3."""
    V = np.array([[0, 0, 0], [2, 0, 0], [1, 0, 1], [0, 3, 0], [2, 3, 0], [1, 3, 1]], float)
    F = [(0, 1, 2), (3, 5, 4), (0, 3, 4, 1), (1, 4, 5, 2), (2, 5, 3, 0)]
    return IndexedMesh(V, F)


def box_grid(k=3, size=0.6, pitch=1.0) -> IndexedMesh:
    return merge(*[
        box((i * pitch, j * pitch, 0), (i * pitch + size, j * pitch + size, size))
        for i in range(k) for j in range(k)
    ])


def cube_in_cube() -> IndexedMesh:
    return merge(box((0, 0, 0), (3, 3, 3)), box((1, 1, 1), (2, 2, 2)))


def two_cubes(gap=10.0, triangulate=True) -> IndexedMesh:
    return merge(box(triangulate=triangulate), box((gap + 1, 0, 0), (gap + 2, 1, 1), triangulate))


def half_overlap_cubes() -> IndexedMesh:
    return merge(box(), box((0.5, 0, 0), (1.5, 1, 1)))


def plane(n: int, triangulate=False) -> IndexedMesh:
    """Unit square in z=0 split into ``n x n`` quads (or ``2 n^2`` triangles)."""
    xs = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    V = np.c_[X.ravel(), Y.ravel(), np.zeros(X.size)]
    i = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    a = (i * (n + 1) + j).ravel()
    if triangulate:
        F = np.concatenate([np.stack([a, a + n + 1, a + n + 2], 1), np.stack([a, a + n + 2, a + 1], 1)])
    else:
        F = np.stack([a, a + n + 1, a + n + 2, a + 1], 1)
    return IndexedMesh(V, F.tolist())


def quad_soup(n=40, seed=0) -> IndexedMesh:
    """Disconnected random planar quads."""
    rng = np.random.default_rng(seed)
    verts, faces = [], []
    for k in range(n):
        c = rng.uniform(-2, 2, 3)
        u, v = Rotation.random(random_state=int(rng.integers(1 << 31))).as_matrix()[:2]
        a, b = rng.uniform(0.05, 0.8, 2)
        verts += [c, c + a * u, c + a * u + b * v, c + b * v]
        faces.append(tuple(range(4 * k, 4 * k + 4)))
    return IndexedMesh(np.array(verts), faces)


def fractal_boxes(levels=2) -> IndexedMesh:
    """Cube with smaller cubes stacked on its faces, recursively; separate closed shells."""
    out = []
    dirs = [np.eye(3)[i] * s for i in range(3) for s in (1, -1)]

    def grow(center, half, level, skip):
        out.append(box(center - half, center + half))
        if level == 0:
            return
        for d in dirs:
            if skip is not None and np.allclose(d, -skip):
                continue
            grow(center + d * (half + half / 3), half / 3, level - 1, d)

    grow(np.zeros(3), 1.0, levels, None)
    return merge(*out)


def speeder() -> IndexedMesh:
    """Around 12k faces of hover-bike-like parts: hull, engines, struts, seat."""
    parts = [
        quantize(Cylinder([0, 0, 0], [0, 6, 0], 0.6), 96),
        quantize(Sphere([0, 6, 0], 0.6), 48),
        quantize(Cylinder([-0.8, 7, 0.4], [-0.8, 12, 0.4], 0.25), 64),
        quantize(Cylinder([0.8, 7, 0.4], [0.8, 12, 0.4], 0.25), 64),
        quantize(Sphere([0, 2, 0.9], 0.5), 40),
    ]
    # struts and seat as finely split boxes
    for lo, hi in [((-1.0, 6.8, 0.3), (1.0, 7.2, 0.5)), ((-0.4, 1.0, 0.5), (0.4, 3.0, 0.8))]:
        parts.append(subdivided_box(lo, hi, 20))
    return merge(*[_split_long_faces(p) for p in parts])


def subdivided_box(lo, hi, n) -> IndexedMesh:
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    sq = plane(n)
    faces_out = []
    for axis in range(3):
        for side in (0, 1):
            u, v = (axis + 1) % 3, (axis + 2) % 3
            V = np.zeros((sq.n_vertices, 3))
            V[:, u] = lo[u] + sq.vertices[:, 0] * (hi[u] - lo[u])
            V[:, v] = lo[v] + sq.vertices[:, 1] * (hi[v] - lo[v])
            V[:, axis] = (lo, hi)[side][axis]
            F = sq.faces if side else [f[::-1] for f in sq.faces]
            faces_out.append(IndexedMesh(V, F))
    return merge(*faces_out)


def _split_long_faces(m: IndexedMesh) -> IndexedMesh:
    # fan triangulate so every part contributes triangle faces
    return IndexedMesh(m.vertices, m.triangles().tolist())


ENCLOSURE_SUITE = {
    "cube": cube,
    "rotated_cube": lambda: rigid(cube(), 7, (2.0, -1.0, 0.5)),
    "ngon32": ngon_prism,
    "uv_sphere": lambda: uv_sphere(32),
    "wedge": wedge,
    "box_grid": box_grid,
    "cube_in_cube": cube_in_cube,
    "two_cubes": two_cubes,
    "plane": lambda: plane(12),
    "quad_soup": quad_soup,
    "tri_plane_rotated": lambda: rigid(plane(8, triangulate=True), 3),
    "fractal": lambda: fractal_boxes(1),
}
