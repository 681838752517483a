"""The six convex primitive types."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import ClassVar, Union

import numpy as np

from ..mesh import IndexedMesh
from . import _kernels as K

__all__ = [
    "Obb",
    "Sphere",
    "Capsule",
    "Cylinder",
    "Frustum",
    "TrapezoidalPrism",
    "Primitive",
    "KIND_NAMES",
    "KIND_CODES",
    "volume",
    "contains",
    "quantize",
    "aabb",
    "from_params",
]

KIND_NAMES = ("obb", "sphere", "capsule", "cylinder", "prism", "frustum")
KIND_CODES = {name: i for i, name in enumerate(KIND_NAMES)}


def _vec(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64).reshape(3).copy()


class _Shape:
    code: ClassVar[int]
    kind: ClassVar[str]

    def params(self) -> np.ndarray:
        raise NotImplementedError

    def volume(self) -> float:
        return float(K.volume_k(self.code, self.params()))

    def contains(self, x, tol: float = 0.0):
        return contains(self, x, tol)

    def __eq__(self, other) -> bool:
        if type(other) is not type(self):
            return NotImplemented
        return bool(np.array_equal(self.params(), other.params()))

    def __hash__(self):
        return hash((self.code, self.params().tobytes()))


@dataclass(frozen=True, eq=False)
class Obb(_Shape):
    center: np.ndarray
    axes: np.ndarray  # rows
    half_extents: np.ndarray
    code: ClassVar[int] = K.OBB
    kind: ClassVar[str] = "obb"

    def __post_init__(self):
        object.__setattr__(self, "center", _vec(self.center))
        object.__setattr__(self, "axes", np.asarray(self.axes, dtype=np.float64).reshape(3, 3).copy())
        object.__setattr__(self, "half_extents", _vec(self.half_extents))

    def params(self) -> np.ndarray:
        p = np.zeros(K.N_PARAMS)
        p[0:3] = self.center
        p[3:12] = self.axes.reshape(-1)
        p[12:15] = self.half_extents
        return p


@dataclass(frozen=True, eq=False)
class Sphere(_Shape):
    center: np.ndarray
    radius: float
    code: ClassVar[int] = K.SPHERE
    kind: ClassVar[str] = "sphere"

    def __post_init__(self):
        object.__setattr__(self, "center", _vec(self.center))
        object.__setattr__(self, "radius", float(self.radius))

    def params(self) -> np.ndarray:
        p = np.zeros(K.N_PARAMS)
        p[0:3] = self.center
        p[3] = self.radius
        return p


@dataclass(frozen=True, eq=False)
class _Segment(_Shape):
    start: np.ndarray
    end: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "start", _vec(self.start))
        object.__setattr__(self, "end", _vec(self.end))
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def height(self) -> float:
        return float(np.linalg.norm(self.end - self.start))

    @property
    def axis(self) -> np.ndarray:
        d = self.end - self.start
        n = np.linalg.norm(d)
        return d / n if n > 0 else np.array([0.0, 0.0, 1.0])

    def params(self) -> np.ndarray:
        p = np.zeros(K.N_PARAMS)
        p[0:3] = self.start
        p[3:6] = self.end
        p[6] = self.radius
        return p


@dataclass(frozen=True, eq=False)
class Cylinder(_Segment):
    code: ClassVar[int] = K.CYLINDER
    kind: ClassVar[str] = "cylinder"


@dataclass(frozen=True, eq=False)
class Capsule(_Segment):
    """Sphere-swept segment; ``start``/``end`` are the cap-sphere centers."""

    code: ClassVar[int] = K.CAPSULE
    kind: ClassVar[str] = "capsule"


@dataclass(frozen=True, eq=False)
class Frustum(_Shape):
    base_center: np.ndarray
    axis: np.ndarray
    height: float
    r_bot: float
    r_top: float
    code: ClassVar[int] = K.FRUSTUM
    kind: ClassVar[str] = "frustum"

    def __post_init__(self):
        object.__setattr__(self, "base_center", _vec(self.base_center))
        object.__setattr__(self, "axis", _vec(self.axis))
        for name in ("height", "r_bot", "r_top"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def end(self) -> np.ndarray:
        return self.base_center + self.height * self.axis

    def params(self) -> np.ndarray:
        p = np.zeros(K.N_PARAMS)
        p[0:3] = self.base_center
        p[3:6] = self.axis
        p[6] = self.height
        p[7] = self.r_bot
        p[8] = self.r_top
        return p


@dataclass(frozen=True, eq=False)
class TrapezoidalPrism(_Shape):
    """Isosceles trapezoid extruded along ``axes[0]``.

    The half-width along ``axes[2]`` runs linearly from ``h_zb`` on the
    ``-axes[1]`` face to ``h_zt`` on the ``+axes[1]`` face.
    """

    center: np.ndarray
    axes: np.ndarray  # rows a_x, a_y, a_z
    h_x: float
    h_y: float
    h_zt: float
    h_zb: float
    code: ClassVar[int] = K.PRISM
    kind: ClassVar[str] = "prism"

    def __post_init__(self):
        object.__setattr__(self, "center", _vec(self.center))
        object.__setattr__(self, "axes", np.asarray(self.axes, dtype=np.float64).reshape(3, 3).copy())
        for name in ("h_x", "h_y", "h_zt", "h_zb"):
            object.__setattr__(self, name, float(getattr(self, name)))

    def params(self) -> np.ndarray:
        p = np.zeros(K.N_PARAMS)
        p[0:3] = self.center
        p[3:12] = self.axes.reshape(-1)
        p[12:16] = (self.h_x, self.h_y, self.h_zt, self.h_zb)
        return p


Primitive = Union[Obb, Sphere, Capsule, Cylinder, Frustum, TrapezoidalPrism]


def from_params(code: int, p) -> Primitive:
    p = np.asarray(p, dtype=np.float64)
    if code == K.OBB:
        return Obb(p[0:3], p[3:12].reshape(3, 3), p[12:15])
    if code == K.SPHERE:
        return Sphere(p[0:3], p[3])
    if code == K.CAPSULE:
        return Capsule(p[0:3], p[3:6], p[6])
    if code == K.CYLINDER:
        return Cylinder(p[0:3], p[3:6], p[6])
    if code == K.PRISM:
        return TrapezoidalPrism(p[0:3], p[3:12].reshape(3, 3), p[12], p[13], p[14], p[15])
    if code == K.FRUSTUM:
        return Frustum(p[0:3], p[3:6], p[6], p[7], p[8])
    raise ValueError(f"unknown primitive code {code}")


def volume(p: Primitive) -> float:
    return p.volume()


def contains(p: Primitive, x, tol: float = 0.0):
    """Whether ``x`` lies inside ``p`` grown by ``tol``; vectorised over ``(n, 3)`` input."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = np.ascontiguousarray(x.reshape(-1, 3))
    res = K.contains_k(p.code, p.params(), X, float(tol))
    return bool(res[0]) if single else res


def aabb(p: Primitive) -> tuple[np.ndarray, np.ndarray]:
    return K.aabb_k(p.code, p.params())


# ---------------------------------------------------------------------------
# quantisation

_BOX_FACES = [(0, 4, 6, 2), (1, 3, 7, 5), (0, 1, 5, 4), (2, 6, 7, 3), (0, 2, 3, 1), (4, 5, 7, 6)]


def _orient_outward(verts: np.ndarray, faces: list[tuple[int, ...]], center: np.ndarray):
    out = []
    for f in faces:
        pts = verts[list(f)]
        # Newell normal
        n = np.zeros(3)
        for i in range(len(f)):
            a, b = pts[i], pts[(i + 1) % len(f)]
            n += np.array([(a[1] - b[1]) * (a[2] + b[2]), (a[2] - b[2]) * (a[0] + b[0]), (a[0] - b[0]) * (a[1] + b[1])])
        if n @ (pts.mean(axis=0) - center) < 0:
            f = tuple(reversed(f))
        out.append(f)
    return out


def _box_mesh(center, axes, hx, hy, hz_neg_y, hz_pos_y) -> IndexedMesh:
    verts = np.empty((8, 3))
    for i in range(8):
        sx = 1.0 if i & 1 else -1.0
        sy = 1.0 if i & 2 else -1.0
        sz = 1.0 if i & 4 else -1.0
        hz = hz_pos_y if sy > 0 else hz_neg_y
        verts[i] = center + sx * hx * axes[0] + sy * hy * axes[1] + sz * hz * axes[2]
    return IndexedMesh(verts, _orient_outward(verts, _BOX_FACES, np.asarray(center)))


def _frame(axis):
    e1, e2 = K.plane_basis(np.asarray(axis, dtype=np.float64))
    return e1, e2


def _ring(center, e1, e2, radius, n):
    th = 2.0 * np.pi * np.arange(n) / n
    return center + radius * (np.cos(th)[:, None] * e1 + np.sin(th)[:, None] * e2)


def _tube_mesh(base, axis, h, r_bot, r_top, n) -> IndexedMesh:
    axis = np.asarray(axis, dtype=np.float64)
    e1, e2 = _frame(axis)
    bot = _ring(base, e1, e2, r_bot, n)
    top = _ring(base + h * axis, e1, e2, r_top, n)
    verts = np.vstack([bot, top])
    faces = [(k, (k + 1) % n, n + (k + 1) % n, n + k) for k in range(n)]
    faces.append(tuple(range(n - 1, -1, -1)))
    faces.append(tuple(range(n, 2 * n)))
    return IndexedMesh(verts, _orient_outward(verts, faces, base + 0.5 * h * axis))


def _stacked_rings_mesh(rings: list[np.ndarray], south, north, center) -> IndexedMesh:
    """Close a stack of equal-size rings with a pole vertex at each end."""
    n = len(rings[0])
    verts = [np.asarray(south)[None, :]] + rings + [np.asarray(north)[None, :]]
    V = np.vstack(verts)
    faces = []
    s = 0
    first = 1
    for k in range(n):
        faces.append((s, first + (k + 1) % n, first + k))
    for j in range(len(rings) - 1):
        a0 = 1 + j * n
        b0 = a0 + n
        for k in range(n):
            faces.append((a0 + k, a0 + (k + 1) % n, b0 + (k + 1) % n, b0 + k))
    north_i = len(V) - 1
    last = 1 + (len(rings) - 1) * n
    for k in range(n):
        faces.append((north_i, last + k, last + (k + 1) % n))
    return IndexedMesh(V, _orient_outward(V, faces, np.asarray(center)))


def _sphere_mesh(center, axis, radius, n_lon, n_lat, radial_scale) -> IndexedMesh:
    e1, e2 = _frame(axis)
    axis = np.asarray(axis, dtype=np.float64)
    rings = []
    for j in range(1, n_lat):
        phi = np.pi * j / n_lat
        z = -np.cos(phi) * radius
        rr = np.sin(phi) * radius * radial_scale
        rings.append(_ring(center + z * axis, e1, e2, rr, n_lon))
    return _stacked_rings_mesh(rings, center - radius * axis, center + radius * axis, center)


def _capsule_mesh(start, end, radius, n_lon, n_cap, radial_scale) -> IndexedMesh:
    d = end - start
    h = np.linalg.norm(d)
    axis = d / h if h > 0 else np.array([0.0, 0.0, 1.0])
    e1, e2 = _frame(axis)
    rings = []
    for j in range(1, n_cap + 1):
        phi = 0.5 * np.pi * j / n_cap
        rings.append(_ring(start - np.cos(phi) * radius * axis, e1, e2, np.sin(phi) * radius * radial_scale, n_lon))
    if h > 0:
        for j in range(n_cap, 0, -1):
            phi = 0.5 * np.pi * j / n_cap
            rings.append(_ring(end + np.cos(phi) * radius * axis, e1, e2, np.sin(phi) * radius * radial_scale, n_lon))
    else:
        for j in range(n_cap - 1, 0, -1):
            phi = 0.5 * np.pi * j / n_cap
            rings.append(_ring(end + np.cos(phi) * radius * axis, e1, e2, np.sin(phi) * radius * radial_scale, n_lon))
    return _stacked_rings_mesh(rings, start - radius * axis, end + radius * axis, 0.5 * (start + end))


def quantize(p: Primitive, segments: int = 32, circumscribed: bool = False) -> IndexedMesh:
    """Polygonal approximation of ``p``.

    Vertices lie on the analytic surface, so curved kinds come out slightly
    inside the primitive. ``circumscribed`` pushes ring radii out by
    ``1 / cos(pi / segments)`` instead.
    """
    if segments < 3:
        raise ValueError("segments must be >= 3")
    scale = 1.0 / math.cos(math.pi / segments) if circumscribed else 1.0
    if isinstance(p, Obb):
        h = p.half_extents
        return _box_mesh(p.center, p.axes, h[0], h[1], h[2], h[2])
    if isinstance(p, TrapezoidalPrism):
        return _box_mesh(p.center, p.axes, p.h_x, p.h_y, p.h_zb, p.h_zt)
    if isinstance(p, Cylinder):
        return _tube_mesh(p.start, p.axis, p.height, p.radius * scale, p.radius * scale, segments)
    if isinstance(p, Frustum):
        return _tube_mesh(p.base_center, p.axis, p.height, p.r_bot * scale, p.r_top * scale, segments)
    if isinstance(p, Sphere):
        return _sphere_mesh(p.center, np.array([0.0, 0.0, 1.0]), p.radius, segments, -(-segments // 2), scale)
    if isinstance(p, Capsule):
        return _capsule_mesh(p.start, p.end, p.radius, segments, max(1, -(-segments // 4)), scale)
    raise TypeError(f"not a primitive: {p!r}")
