"""Surface-sampled one-way distances and per-primitive storage cost."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Union

import numba as nb
import numpy as np

from .decomposer import PrimitiveSet
from .mesh import IndexedMesh
from .primitives import KIND_NAMES, Primitive, quantize

__all__ = [
    "DistanceReport",
    "ByteCostReport",
    "FLOATS_PER_KIND",
    "DEFAULT_SAMPLES",
    "sample_surface",
    "point_mesh_distances",
    "one_way_distance",
    "byte_cost",
    "hull_byte_cost",
    "TriangleTree",
]

DEFAULT_SAMPLES = 100_000

FLOATS_PER_KIND = {"obb": 10, "capsule": 7, "sphere": 4, "cylinder": 7, "frustum": 8, "prism": 11}
FLOAT_BYTES = 4
INT_BYTES = 2

_LEAF = 4


@dataclass(frozen=True)
class DistanceReport:
    hausdorff_normalized: float
    chamfer_normalized: float
    sample_count: int
    seed: int
    bbox_diagonal: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ByteCostReport:
    counts: dict = field(default_factory=dict)
    float_count: int = 0
    int_count: int = 0
    total_bytes: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# sampling


def _as_mesh(source, segments: int) -> IndexedMesh:
    if isinstance(source, IndexedMesh):
        return source
    prims = source.primitives if isinstance(source, PrimitiveSet) else list(source)
    verts, faces, base = [], [], 0
    for p in prims:
        m = quantize(p, segments)
        verts.append(m.vertices)
        faces.extend(tuple(i + base for i in f) for f in m.faces)
        base += m.n_vertices
    if not verts:
        return IndexedMesh(np.zeros((0, 3)), [])
    return IndexedMesh(np.concatenate(verts), faces, validate=False)


def _triangle_arrays(mesh: IndexedMesh) -> np.ndarray:
    T = mesh.triangles()
    return np.ascontiguousarray(mesh.vertices[T]) if len(T) else np.zeros((0, 3, 3))


def sample_surface(
    source: Union[IndexedMesh, PrimitiveSet, Iterable[Primitive]],
    count: int,
    seed: int = 0,
    segments: int = 32,
) -> np.ndarray:
    """Area-weighted uniform samples on the surface of a mesh or primitive set.

    Primitives are quantized at ``segments`` first.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    tri = _triangle_arrays(_as_mesh(source, segments))
    if len(tri) == 0:
        raise ValueError("source has no surface to sample")
    area = 0.5 * np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1)
    total = math.fsum(area)
    if not total > 0:
        raise ValueError("source has zero surface area")
    rng = np.random.default_rng(seed)
    cdf = np.cumsum(area)
    pick = np.searchsorted(cdf, rng.random(count) * cdf[-1], side="right")
    pick = np.minimum(pick, len(tri) - 1)
    r = rng.random((count, 2))
    s = np.sqrt(r[:, 0])[:, None]
    t = r[:, 1][:, None]
    a, b, c = tri[pick, 0], tri[pick, 1], tri[pick, 2]
    return (1.0 - s) * a + s * (1.0 - t) * b + s * t * c


# ---------------------------------------------------------------------------
# exact point-triangle distance with an AABB tree


@nb.njit(cache=True)
def _closest_sq(px, py, pz, T):
    """Squared distance from p to triangle T (3x3 rows), by Voronoi region."""
    ax, ay, az = T[0, 0], T[0, 1], T[0, 2]
    abx, aby, abz = T[1, 0] - ax, T[1, 1] - ay, T[1, 2] - az
    acx, acy, acz = T[2, 0] - ax, T[2, 1] - ay, T[2, 2] - az
    apx, apy, apz = px - ax, py - ay, pz - az
    d1 = abx * apx + aby * apy + abz * apz
    d2 = acx * apx + acy * apy + acz * apz
    if d1 <= 0.0 and d2 <= 0.0:
        return apx * apx + apy * apy + apz * apz
    bpx, bpy, bpz = px - T[1, 0], py - T[1, 1], pz - T[1, 2]
    d3 = abx * bpx + aby * bpy + abz * bpz
    d4 = acx * bpx + acy * bpy + acz * bpz
    if d3 >= 0.0 and d4 <= d3:
        return bpx * bpx + bpy * bpy + bpz * bpz
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        v = d1 / (d1 - d3)
        qx, qy, qz = apx - v * abx, apy - v * aby, apz - v * abz
        return qx * qx + qy * qy + qz * qz
    cpx, cpy, cpz = px - T[2, 0], py - T[2, 1], pz - T[2, 2]
    d5 = abx * cpx + aby * cpy + abz * cpz
    d6 = acx * cpx + acy * cpy + acz * cpz
    if d6 >= 0.0 and d5 <= d6:
        return cpx * cpx + cpy * cpy + cpz * cpz
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        w = d2 / (d2 - d6)
        qx, qy, qz = apx - w * acx, apy - w * acy, apz - w * acz
        return qx * qx + qy * qy + qz * qz
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        bcx, bcy, bcz = T[2, 0] - T[1, 0], T[2, 1] - T[1, 1], T[2, 2] - T[1, 2]
        qx, qy, qz = bpx - w * bcx, bpy - w * bcy, bpz - w * bcz
        return qx * qx + qy * qy + qz * qz
    denom = va + vb + vc
    if denom == 0.0:
        # zero-area triangle that slipped past the edge tests
        return min(apx * apx + apy * apy + apz * apz, bpx * bpx + bpy * bpy + bpz * bpz)
    v = vb / denom
    w = vc / denom
    qx = apx - v * abx - w * acx
    qy = apy - v * aby - w * acy
    qz = apz - v * abz - w * acz
    return qx * qx + qy * qy + qz * qz


@nb.njit(cache=True)
def _build(tri):
    n = tri.shape[0]
    order = np.arange(n)
    cent = np.empty((n, 3))
    tlo = np.empty((n, 3))
    thi = np.empty((n, 3))
    for i in range(n):
        for k in range(3):
            a, b, c = tri[i, 0, k], tri[i, 1, k], tri[i, 2, k]
            tlo[i, k] = min(a, b, c)
            thi[i, k] = max(a, b, c)
            cent[i, k] = (a + b + c) / 3.0
    cap = max(1, 2 * n)
    lo = np.empty((cap, 3))
    hi = np.empty((cap, 3))
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    start = np.zeros(cap, np.int64)
    stop = np.zeros(cap, np.int64)
    start[0], stop[0] = 0, n
    stack = np.empty(cap, np.int64)
    stack[0] = 0
    sp = 1
    count = 1
    while sp > 0:
        sp -= 1
        node = stack[sp]
        s, e = start[node], stop[node]
        for k in range(3):
            mn, mx = np.inf, -np.inf
            cmn, cmx = np.inf, -np.inf
            for j in range(s, e):
                t = order[j]
                mn = min(mn, tlo[t, k])
                mx = max(mx, thi[t, k])
                cmn = min(cmn, cent[t, k])
                cmx = max(cmx, cent[t, k])
            lo[node, k], hi[node, k] = mn, mx
        if e - s <= _LEAF:
            continue
        # split on the widest centroid axis at the median
        best, ext = 0, -1.0
        for k in range(3):
            cmn, cmx = np.inf, -np.inf
            for j in range(s, e):
                cmn = min(cmn, cent[order[j], k])
                cmx = max(cmx, cent[order[j], k])
            if cmx - cmn > ext:
                ext, best = cmx - cmn, k
        if ext <= 0.0:
            continue
        keys = np.empty(e - s)
        for j in range(s, e):
            keys[j - s] = cent[order[j], best]
        perm = np.argsort(keys, kind="mergesort")
        seg = order[s:e].copy()
        for j in range(e - s):
            order[s + j] = seg[perm[j]]
        mid = s + (e - s) // 2
        l, r = count, count + 1
        count += 2
        left[node], right[node] = l, r
        start[l], stop[l] = s, mid
        start[r], stop[r] = mid, e
        stack[sp] = l
        stack[sp + 1] = r
        sp += 2
    return order, lo[:count], hi[:count], left[:count], right[:count], start[:count], stop[:count]


@nb.njit(cache=True)
def _box_sq(px, py, pz, lo, hi, node):
    d = 0.0
    for k, p in ((0, px), (1, py), (2, pz)):
        if p < lo[node, k]:
            t = lo[node, k] - p
            d += t * t
        elif p > hi[node, k]:
            t = p - hi[node, k]
            d += t * t
    return d


@nb.njit(cache=True)
def _query(P, tri, order, lo, hi, left, right, start, stop):
    out = np.empty(P.shape[0])
    stack = np.empty(128, np.int64)
    for i in range(P.shape[0]):
        px, py, pz = P[i, 0], P[i, 1], P[i, 2]
        best = np.inf
        stack[0] = 0
        sp = 1
        while sp > 0:
            sp -= 1
            node = stack[sp]
            if _box_sq(px, py, pz, lo, hi, node) >= best:
                continue
            l = left[node]
            if l < 0:
                for j in range(start[node], stop[node]):
                    d = _closest_sq(px, py, pz, tri[order[j]])
                    if d < best:
                        best = d
                continue
            r = right[node]
            dl = _box_sq(px, py, pz, lo, hi, l)
            dr = _box_sq(px, py, pz, lo, hi, r)
            # push the far child first so the near one is visited next
            if dl <= dr:
                stack[sp] = r
                stack[sp + 1] = l
            else:
                stack[sp] = l
                stack[sp + 1] = r
            sp += 2
        out[i] = math.sqrt(best)
    return out


class TriangleTree:
    """AABB tree over a mesh's fan-triangulated faces."""

    def __init__(self, mesh: IndexedMesh):
        self.tri = _triangle_arrays(mesh)
        if len(self.tri) == 0:
            raise ValueError("mesh has no faces")
        self._nodes = _build(self.tri)

    def distances(self, points) -> np.ndarray:
        P = np.ascontiguousarray(np.asarray(points, dtype=np.float64).reshape(-1, 3))
        return _query(P, self.tri, *self._nodes)


def point_mesh_distances(points, mesh: IndexedMesh) -> np.ndarray:
    """Unsigned distance from each point to the closest point on ``mesh``."""
    return TriangleTree(mesh).distances(points)


def one_way_distance(from_samples, to_mesh: IndexedMesh, seed: int = 0) -> DistanceReport:
    """Max and mean distance from ``from_samples`` to ``to_mesh`` over its bbox diagonal.

    ``seed`` is only recorded in the report.
    """
    d = point_mesh_distances(from_samples, to_mesh)
    diag = to_mesh.bbox_diagonal()
    if not diag > 0:
        raise ValueError("target mesh has a degenerate bounding box")
    haus = float(d.max()) if len(d) else 0.0
    cham = math.fsum(d) / len(d) if len(d) else 0.0
    # mean of values bounded by the max can still exceed it by rounding
    cham = min(cham, haus)
    return DistanceReport(haus / diag, cham / diag, int(len(d)), int(seed), float(diag))


# ---------------------------------------------------------------------------
# storage


def _kinds(source) -> list[str]:
    if isinstance(source, PrimitiveSet):
        return [e.primitive.kind for e in source.entries]
    out = []
    for p in source:
        kind = p if isinstance(p, str) else p.kind
        if kind not in FLOATS_PER_KIND:
            raise ValueError(f"unknown primitive kind {kind!r}")
        out.append(kind)
    return out


def byte_cost(source: Union[PrimitiveSet, Iterable]) -> ByteCostReport:
    """Storage for a primitive set: each kind's float count times four bytes."""
    counts = {k: 0 for k in KIND_NAMES}
    for k in _kinds(source):
        counts[k] += 1
    floats = sum(FLOATS_PER_KIND[k] * n for k, n in counts.items())
    return ByteCostReport(counts, floats, 0, floats * FLOAT_BYTES)


def hull_byte_cost(hulls: Iterable[IndexedMesh]) -> ByteCostReport:
    """Storage for triangle meshes: xyz floats per vertex, three 2-byte indices per triangle."""
    floats = ints = n = 0
    for h in hulls:
        n += 1
        floats += 3 * h.n_vertices
        ints += 3 * len(h.triangles())
    return ByteCostReport({"hull": n}, floats, ints, floats * FLOAT_BYTES + ints * INT_BYTES)
