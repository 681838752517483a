"""Fitting primitives to point sets on an eigenvector frame."""
from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from ..quadric import EigenBasis, Quadric
from . import _kernels as K
from .shapes import (
    KIND_CODES,
    KIND_NAMES,
    Capsule,
    Cylinder,
    Frustum,
    Obb,
    Primitive,
    Sphere,
    TrapezoidalPrism,
    from_params,
)

__all__ = [
    "ConfigError",
    "FitConfig",
    "DEFAULT_WEIGHTS",
    "MIN_EXTENT",
    "fit_obb",
    "fit_sphere",
    "fit_cylinder",
    "fit_capsule",
    "fit_frustum",
    "fit_trapezoidal_prism",
    "fit_all",
    "fit_arrays",
    "isotropic_basis",
]

MIN_EXTENT = 1e-3

DEFAULT_WEIGHTS = MappingProxyType(
    {"obb": 1.0, "sphere": 1.0, "capsule": 1.0, "cylinder": 1.05, "prism": 1.4, "frustum": 2.1}
)

# candidate first axes tried when the quadric carries no orientation at all
_MAX_ISOTROPIC_AXES = 64


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class FitConfig:
    """Which primitive kinds compete and how their volumes are weighted."""

    kinds: frozenset = frozenset(KIND_NAMES)
    weights: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    min_extent: float = MIN_EXTENT

    def __post_init__(self):
        kinds = frozenset(self.kinds)
        unknown = kinds - set(KIND_NAMES)
        if unknown:
            raise ConfigError(f"unknown primitive kinds: {sorted(unknown)}")
        if not kinds:
            raise ConfigError("at least one primitive kind must be enabled")
        w = dict(DEFAULT_WEIGHTS)
        for k, v in dict(self.weights).items():
            if k not in KIND_CODES:
                raise ConfigError(f"weight for unknown kind {k!r}")
            if not (v > 0 and np.isfinite(v)):
                raise ConfigError(f"weight for {k} must be positive, got {v}")
            w[k] = float(v)
        if not self.min_extent > 0:
            raise ConfigError("min_extent must be positive")
        object.__setattr__(self, "kinds", kinds)
        object.__setattr__(self, "weights", MappingProxyType(w))

    @property
    def enabled_mask(self) -> np.ndarray:
        return np.array([name in self.kinds for name in KIND_NAMES], dtype=np.bool_)

    @property
    def weight_array(self) -> np.ndarray:
        return np.array([self.weights[name] for name in KIND_NAMES], dtype=np.float64)


def _points(points) -> np.ndarray:
    P = np.ascontiguousarray(np.asarray(points, dtype=np.float64).reshape(-1, 3))
    if len(P) == 0:
        raise ValueError("cannot fit a primitive to an empty point set")
    return P


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64).reshape(3)
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("axis must be non-zero")
    return v / n


def _rows(basis) -> np.ndarray:
    if isinstance(basis, EigenBasis):
        return np.ascontiguousarray(basis.axes)
    return np.ascontiguousarray(np.asarray(basis, dtype=np.float64).reshape(3, 3))


def fit_obb(basis, points, min_extent: float = MIN_EXTENT) -> Obb:
    B = _rows(basis)
    c, half = K.fit_obb_k(_points(points), B, min_extent)
    return Obb(c, B, half)


def fit_sphere(center, points, min_extent: float = MIN_EXTENT) -> Sphere:
    c = np.asarray(center, dtype=np.float64).reshape(3)
    return Sphere(c, K.fit_sphere_k(_points(points), c, min_extent))


def fit_cylinder(axis, anchor, points, min_extent: float = MIN_EXTENT) -> Cylinder:
    s, e, r = K.fit_cylinder_k(_points(points), _unit(axis), np.asarray(anchor, dtype=np.float64).reshape(3), min_extent)
    return Cylinder(s, e, r)


def fit_capsule(axis, anchor, points, min_extent: float = MIN_EXTENT) -> Capsule:
    s, e, r = K.fit_capsule_k(_points(points), _unit(axis), np.asarray(anchor, dtype=np.float64).reshape(3), min_extent)
    return Capsule(s, e, r)


def fit_frustum(axis, anchor, points, min_extent: float = MIN_EXTENT) -> Frustum:
    """Frustum along ``axis`` through ``anchor``; the base sits at the lowest axial point."""
    a = _unit(axis)
    base, h, rb, rt = K.fit_frustum_k(_points(points), a, np.asarray(anchor, dtype=np.float64).reshape(3), min_extent)
    return Frustum(base, a, h, rb, rt)


def fit_trapezoidal_prism(axes, center, points, min_extent: float = MIN_EXTENT) -> TrapezoidalPrism:
    """``axes`` rows are (a_x, a_y, a_z): extrusion, taper, and width direction."""
    A = _rows(axes)
    c = np.asarray(center, dtype=np.float64).reshape(3)
    hx, hy, hzt, hzb = K.fit_prism_k(_points(points), A[0], A[1], A[2], c, min_extent)
    return TrapezoidalPrism(c, A, hx, hy, hzt, hzb)


def isotropic_basis(P: np.ndarray) -> np.ndarray:
    """Frame for a point set whose quadric is a multiple of the identity.

    Each distinct hull-facet normal (largest facets first) is tried as one
    axis with the minimum-area rectangle of the projection giving the other
    two; the smallest box wins. Degenerate clouds use their own span.
    """
    P = np.unique(np.asarray(P, dtype=np.float64).reshape(-1, 3), axis=0)
    if len(P) < 2:
        return np.eye(3)
    centered = P - P.mean(axis=0)
    _, sv, vt = np.linalg.svd(centered, full_matrices=False)
    span = sv[0]
    if span == 0:
        return np.eye(3)
    if len(sv) < 3 or sv[2] <= 1e-12 * span:
        # planar (or collinear) cloud: pin the plane normal, rectangle in-plane
        n = np.ascontiguousarray(vt[2] if len(vt) == 3 else np.cross(vt[0], vt[1]) if len(vt) == 2 else K.plane_basis(vt[0])[0])
        n = n / np.linalg.norm(n)
        u, v = K.rect_in_plane(np.ascontiguousarray(P), n)
        return np.stack([K._canon(n), K._canon(u), K._canon(v)])
    try:
        hull = ConvexHull(P)
    except QhullError:
        return np.stack([K._canon(np.ascontiguousarray(w)) for w in vt])
    normals = hull.equations[:, :3]
    tri = P[hull.simplices]
    areas = 0.5 * np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1)
    canon = np.array([K._canon(np.ascontiguousarray(n)) for n in normals])
    key = np.round(canon, 9)
    uniq, inv = np.unique(key, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    total = np.zeros(len(uniq))
    np.add.at(total, inv, areas)
    rep = np.zeros(len(uniq), dtype=np.int64)
    rep[inv[::-1]] = np.arange(len(inv))[::-1]
    order = np.lexsort((np.arange(len(uniq)), -total))[:_MAX_ISOTROPIC_AXES]
    HP = np.ascontiguousarray(P[np.unique(hull.simplices)])
    best, best_vol = None, np.inf
    for j in order:
        n = canon[rep[j]]
        n = n / np.linalg.norm(n)
        u, v = K.rect_in_plane(HP, n)
        B = np.stack([n, u, v])
        proj = HP @ B.T
        vol = float(np.prod(proj.max(axis=0) - proj.min(axis=0)))
        if vol < best_vol * (1 - 1e-12):
            best_vol, best = vol, B
    return np.stack([K._canon(np.ascontiguousarray(w)) for w in best])


def fit_arrays(Q: np.ndarray, P: np.ndarray, enabled: np.ndarray, weights: np.ndarray, clamp: float):
    """Array-level ``fit_all``: returns ``(code, params, volume, weighted_volume)``."""
    status, code, params, vol, wvol = K.fit_quadric(Q, P, enabled, weights, clamp)
    if status != 0:
        B = isotropic_basis(P)
        code, params, vol, wvol = K.fit_best(P, np.ascontiguousarray(B), enabled, weights, clamp)
    return int(code), params, float(vol), float(wvol)


def fit_all(quadric: Quadric | np.ndarray, points, config: FitConfig | None = None) -> tuple[Primitive, float]:
    """Best enclosing primitive for ``points`` oriented by ``quadric``.

    Returns the primitive and its weighted volume ``k(kind) * V``.
    """
    config = config or FitConfig()
    Q = quadric.matrix if isinstance(quadric, Quadric) else np.asarray(quadric, dtype=np.float64)
    code, params, _, wvol = fit_arrays(
        np.ascontiguousarray(Q), _points(points), config.enabled_mask, config.weight_array, config.min_extent
    )
    return from_params(code, params), wvol
