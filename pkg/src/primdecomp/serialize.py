"""Primitive-set JSON schema and colored OBJ export.

JSON layout (``version`` 1)::

    {"version": 1, "units": "model",
     "primitives": [{"kind": "obb", "params": [...], "subsumed_faces": [...]}, ...],
     "provenance": {...}}

``params`` per kind:

    obb       center[3] half_extents[3] quaternion[4]
    sphere    center[3] radius
    capsule   start[3] end[3] radius          (start/end are the cap centers)
    cylinder  start[3] end[3] radius
    frustum   start[3] end[3] r_bot r_top     (r_bot at start)
    prism     center[3] h_x h_y h_zt h_zb quaternion[4]

Quaternions are unit ``(x, y, z, w)`` with ``w >= 0`` and rotate the local
frame to world: local x, y, z map to the columns of the rotation matrix.
For the prism, local x is the extrusion axis, y the taper direction, and
the half-width along z is ``h_zt`` at ``+y`` and ``h_zb`` at ``-y``.
"""
from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from .decomposer import PrimitiveSet
from .mesh import IndexedMesh
from .primitives import (
    KIND_NAMES,
    Capsule,
    Cylinder,
    Frustum,
    Obb,
    Primitive,
    Sphere,
    TrapezoidalPrism,
    quantize,
)

__all__ = [
    "SCHEMA_VERSION",
    "PARAM_COUNTS",
    "KIND_COLORS",
    "SchemaError",
    "PrimitiveRecord",
    "PrimitiveSetFile",
    "to_record",
    "to_primitive",
    "quat_from_axes",
    "axes_from_quat",
    "dumps",
    "loads",
    "export_obj",
    "export_mtl",
]

SCHEMA_VERSION = 1

PARAM_COUNTS = {"obb": 10, "sphere": 4, "capsule": 7, "cylinder": 7, "frustum": 8, "prism": 11}

# diffuse colors per kind
KIND_COLORS = {
    "obb": (0.20, 0.75, 0.25),
    "cylinder": (0.95, 0.85, 0.15),
    "prism": (0.15, 0.35, 0.90),
    "capsule": (0.90, 0.15, 0.15),
    "sphere": (0.55, 0.80, 1.00),
    "frustum": (1.00, 0.75, 0.45),
}

_QUAT_TOL = 1e-7


class SchemaError(ValueError):
    pass


@dataclass(frozen=True)
class PrimitiveRecord:
    kind: str
    params: tuple[float, ...]
    subsumed_faces: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in PARAM_COUNTS:
            raise SchemaError(f"unknown primitive kind {self.kind!r}")
        # + 0.0 folds -0.0 into 0.0 so equal shapes serialize identically
        params = tuple(float(x) + 0.0 for x in self.params)
        if len(params) != PARAM_COUNTS[self.kind]:
            raise SchemaError(f"{self.kind} needs {PARAM_COUNTS[self.kind]} params, got {len(params)}")
        if not all(math.isfinite(x) for x in params):
            raise SchemaError(f"non-finite parameter in {self.kind}")
        if self.kind in ("obb", "prism"):
            q = params[-4:]
            if abs(math.sqrt(math.fsum(x * x for x in q)) - 1.0) > _QUAT_TOL:
                raise SchemaError(f"{self.kind} quaternion is not unit length")
        object.__setattr__(self, "params", params)
        if self.subsumed_faces is not None:
            object.__setattr__(self, "subsumed_faces", tuple(int(f) for f in self.subsumed_faces))


@dataclass(frozen=True)
class PrimitiveSetFile:
    primitives: tuple[PrimitiveRecord, ...]
    units: str = "model"
    provenance: dict = field(default_factory=dict)
    version: int = SCHEMA_VERSION

    def to_primitives(self) -> list[Primitive]:
        return [to_primitive(r) for r in self.primitives]

    @classmethod
    def from_set(cls, pset: PrimitiveSet, units: str = "model", provenance: dict | None = None, faces: bool = True):
        recs = tuple(to_record(e.primitive, e.faces if faces else None) for e in pset.entries)
        prov = dict(pset.provenance)
        prov.update(provenance or {})
        return cls(recs, units, prov)


# ---------------------------------------------------------------------------
# orientation


def quat_from_axes(axes) -> tuple[np.ndarray, np.ndarray]:
    """Unit quaternion for a frame given as rows; returns ``(q, axes)``.

    A left-handed frame has its third row negated first, which is harmless
    for the z-symmetric box and prism. The returned axes are the rows the
    quaternion encodes.
    """
    A = np.asarray(axes, dtype=np.float64).reshape(3, 3).copy()
    if np.linalg.det(A) < 0:
        A[2] = -A[2]
    q = Rotation.from_matrix(A.T).as_quat()
    if q[3] < 0 or (q[3] == 0 and q[np.flatnonzero(q)[0]] < 0):
        q = -q
    return q, A


def axes_from_quat(q) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    return Rotation.from_quat(q / np.linalg.norm(q)).as_matrix().T


# ---------------------------------------------------------------------------
# record <-> primitive


def to_record(p: Primitive, faces: Sequence[int] | None = None) -> PrimitiveRecord:
    if isinstance(p, Obb):
        q, _ = quat_from_axes(p.axes)
        params = [*p.center, *p.half_extents, *q]
    elif isinstance(p, Sphere):
        params = [*p.center, p.radius]
    elif isinstance(p, (Capsule, Cylinder)):
        params = [*p.start, *p.end, p.radius]
    elif isinstance(p, Frustum):
        params = [*p.base_center, *p.end, p.r_bot, p.r_top]
    elif isinstance(p, TrapezoidalPrism):
        q, _ = quat_from_axes(p.axes)
        params = [*p.center, p.h_x, p.h_y, p.h_zt, p.h_zb, *q]
    else:
        raise TypeError(f"not a primitive: {p!r}")
    return PrimitiveRecord(p.kind, tuple(params), None if faces is None else tuple(faces))


def to_primitive(r: PrimitiveRecord) -> Primitive:
    v = np.asarray(r.params)
    if r.kind == "obb":
        return Obb(v[0:3], axes_from_quat(v[6:10]), v[3:6])
    if r.kind == "sphere":
        return Sphere(v[0:3], v[3])
    if r.kind == "capsule":
        return Capsule(v[0:3], v[3:6], v[6])
    if r.kind == "cylinder":
        return Cylinder(v[0:3], v[3:6], v[6])
    if r.kind == "frustum":
        d = v[3:6] - v[0:3]
        h = float(np.linalg.norm(d))
        axis = d / h if h > 0 else np.array([0.0, 0.0, 1.0])
        return Frustum(v[0:3], axis, h, v[6], v[7])
    if r.kind == "prism":
        return TrapezoidalPrism(v[0:3], axes_from_quat(v[7:11]), v[3], v[4], v[5], v[6])
    raise SchemaError(f"unknown primitive kind {r.kind!r}")


# ---------------------------------------------------------------------------
# JSON


def _record_dict(r: PrimitiveRecord) -> dict:
    d = {"kind": r.kind, "params": list(r.params)}
    if r.subsumed_faces is not None:
        d["subsumed_faces"] = list(r.subsumed_faces)
    return d


def dumps(f: PrimitiveSetFile) -> str:
    """Deterministic JSON; floats are written with ``repr`` so they parse back exactly."""
    doc = {
        "version": f.version,
        "units": f.units,
        "primitives": [_record_dict(r) for r in f.primitives],
        "provenance": f.provenance,
    }
    return json.dumps(doc, sort_keys=True, indent=1, allow_nan=False) + "\n"


def loads(text: str | bytes) -> PrimitiveSetFile:
    try:
        doc = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("top level must be an object")
    version = doc.get("version")
    if not isinstance(version, int) or version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported version {version!r}")
    prims = doc.get("primitives")
    if not isinstance(prims, list):
        raise SchemaError("'primitives' must be a list")
    recs = []
    for i, d in enumerate(prims):
        if not isinstance(d, dict) or not isinstance(d.get("params"), list):
            raise SchemaError(f"primitive {i} is malformed")
        try:
            recs.append(PrimitiveRecord(d.get("kind"), tuple(d["params"]), d.get("subsumed_faces")))
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"primitive {i}: {exc}") from exc
    units = doc.get("units", "model")
    prov = doc.get("provenance", {})
    if not isinstance(units, str) or not isinstance(prov, dict):
        raise SchemaError("'units' must be a string and 'provenance' an object")
    return PrimitiveSetFile(tuple(recs), units, prov, version)


# ---------------------------------------------------------------------------
# OBJ


def export_mtl() -> str:
    out = io.StringIO()
    for kind in KIND_NAMES:
        r, g, b = KIND_COLORS[kind]
        out.write(f"newmtl kind_{kind}\nKd {r:.2f} {g:.2f} {b:.2f}\nKa 0.00 0.00 0.00\nd 1.0\n\n")
    return out.getvalue()


def export_obj(prims: Iterable[Primitive], segments: int = 32, mtllib: str | None = None) -> str:
    """Quantized primitives, one ``o <kind>_<index>`` object each with a per-kind material."""
    out = io.StringIO()
    if mtllib:
        out.write(f"mtllib {mtllib}\n")
    base = 1
    for i, p in enumerate(prims):
        m: IndexedMesh = quantize(p, segments)
        out.write(f"o {p.kind}_{i}\nusemtl kind_{p.kind}\n")
        for x, y, z in m.vertices.tolist():
            out.write(f"v {x!r} {y!r} {z!r}\n")
        for f in m.faces:
            out.write("f " + " ".join(str(j + base) for j in f) + "\n")
        base += m.n_vertices
    return out.getvalue()
