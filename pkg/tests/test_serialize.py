import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from primdecomp.decomposer import DecomposeConfig, decompose
from primdecomp.mesh import parse_obj
from primdecomp.primitives import Capsule, Cylinder, Frustum, Obb, Sphere, TrapezoidalPrism, aabb, contains, quantize
from primdecomp.serialize import (
    KIND_COLORS,
    PARAM_COUNTS,
    PrimitiveRecord,
    PrimitiveSetFile,
    SchemaError,
    axes_from_quat,
    dumps,
    export_mtl,
    export_obj,
    loads,
    quat_from_axes,
    to_primitive,
    to_record,
)

import meshgen


def random_primitives(seed):
    rng = np.random.default_rng(seed)
    R = Rotation.random(random_state=seed).as_matrix()
    c = rng.normal(size=3)
    axis = R[0]
    return [
        Obb(c, R, rng.uniform(0.1, 2, 3)),
        Sphere(c, rng.uniform(0.1, 2)),
        Capsule(c, c + axis * rng.uniform(0.1, 2), rng.uniform(0.1, 1)),
        Cylinder(c, c + axis * rng.uniform(0.1, 2), rng.uniform(0.1, 1)),
        Frustum(c, axis, rng.uniform(0.1, 2), rng.uniform(0.1, 1), rng.uniform(0.1, 1)),
        TrapezoidalPrism(c, R, *rng.uniform(0.1, 2, 4)),
    ]


def same_shape(p, q):
    assert type(p) is type(q)
    assert q.volume() == pytest.approx(p.volume(), rel=1e-12)
    lo, hi = aabb(p)
    lo2, hi2 = aabb(q)
    assert np.allclose(lo, lo2, atol=1e-12) and np.allclose(hi, hi2, atol=1e-12)
    # each surface lies inside the other, and a 1% grown copy does not
    for a, b in ((p, q), (q, p)):
        S = quantize(a, 16).vertices
        assert contains(b, S, tol=1e-9).all()
        c = S.mean(axis=0)
        assert not contains(b, c + (S - c) * 1.01, tol=0.0).all()


def test_param_counts_follow_float_table():
    assert PARAM_COUNTS == {"obb": 10, "sphere": 4, "capsule": 7, "cylinder": 7, "frustum": 8, "prism": 11}


@pytest.mark.parametrize("seed", range(5))
def test_record_round_trip(seed):
    for p in random_primitives(seed):
        r = to_record(p)
        assert len(r.params) == PARAM_COUNTS[p.kind]
        q = to_primitive(r)
        same_shape(p, q)
        r2 = to_record(q)
        assert np.allclose(r2.params, r.params, rtol=0, atol=1e-12)


def test_frustum_record_layout():
    f = Frustum([1, 2, 3], [0, 0, 1], 2.0, 0.5, 0.25)
    assert to_record(f).params == (1.0, 2.0, 3.0, 1.0, 2.0, 5.0, 0.5, 0.25)


def test_obb_record_layout_identity_rotation():
    r = to_record(Obb([1, 2, 3], np.eye(3), [0.5, 1.0, 1.5]))
    assert r.params == (1.0, 2.0, 3.0, 0.5, 1.0, 1.5, 0.0, 0.0, 0.0, 1.0)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**31 - 1), st.booleans())
def test_property_quaternion_unit_and_axes(seed, flip):
    A = Rotation.random(random_state=seed).as_matrix().T
    if flip:
        A = A.copy()
        A[2] = -A[2]
    q, used = quat_from_axes(A)
    assert abs(np.linalg.norm(q) - 1) < 1e-12
    assert q[3] >= 0
    assert np.allclose(axes_from_quat(q), used, atol=1e-12)
    assert np.allclose(used[:2], A[:2])
    assert np.allclose(np.abs(used[2]), np.abs(A[2]))


def test_file_round_trip_is_byte_stable():
    ps = decompose(meshgen.box_grid(2), config=DecomposeConfig(4), provenance={"input": "grid.obj"})
    f = PrimitiveSetFile.from_set(ps)
    text = dumps(f)
    f2 = loads(text)
    assert f2 == f
    assert dumps(f2) == text
    assert [r.subsumed_faces for r in f2.primitives] == [e.faces for e in ps]
    for p, q in zip(ps.primitives, f2.to_primitives()):
        same_shape(p, q)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_property_json_round_trip(seed):
    recs = tuple(to_record(p) for p in random_primitives(seed))
    f = PrimitiveSetFile(recs, "m", {"seed": seed})
    assert loads(dumps(f)) == f


def test_signed_zero_folded():
    assert dumps(PrimitiveSetFile((PrimitiveRecord("sphere", (-0.0, 0.0, 1.0, 1.0)),))).count("-0.0") == 0


def test_document_shape():
    doc = json.loads(dumps(PrimitiveSetFile((PrimitiveRecord("sphere", (0, 0, 0, 1)),))))
    assert doc == {"version": 1, "units": "model", "provenance": {},
                   "primitives": [{"kind": "sphere", "params": [0.0, 0.0, 0.0, 1.0]}]}


@pytest.mark.parametrize(
    "text",
    [
        "not json",
        "[]",
        '{"version": 2, "primitives": []}',
        '{"version": 1}',
        '{"version": 1, "primitives": [{"kind": "torus", "params": [0, 0, 0, 1]}]}',
        '{"version": 1, "primitives": [{"kind": "sphere", "params": [0, 0, 1]}]}',
        '{"version": 1, "primitives": [{"kind": "sphere", "params": [0, 0, 0, NaN]}]}',
        '{"version": 1, "primitives": [{"kind": "sphere", "params": [0, 0, 0, "x"]}]}',
        '{"version": 1, "primitives": [{"kind": "obb", "params": [0, 0, 0, 1, 1, 1, 0, 0, 0, 2]}]}',
        '{"version": 1, "primitives": [5]}',
        '{"version": 1, "primitives": [], "units": 3}',
    ],
)
def test_schema_errors(text):
    with pytest.raises(SchemaError):
        loads(text)


def test_quaternion_tolerance():
    q = np.array([0.0, 0.0, 0.0, 1.0 + 5e-8])
    PrimitiveRecord("obb", (0, 0, 0, 1, 1, 1, *q))
    with pytest.raises(SchemaError):
        PrimitiveRecord("obb", (0, 0, 0, 1, 1, 1, 0, 0, 0, 1.0 + 1e-6))


def test_export_obj_objects_and_materials():
    prims = random_primitives(1)
    text = export_obj(prims, segments=8, mtllib="x.mtl")
    assert text.startswith("mtllib x.mtl\n")
    names = [l.split()[1] for l in text.splitlines() if l.startswith("o ")]
    assert names == [f"{p.kind}_{i}" for i, p in enumerate(prims)]
    mats = [l.split()[1] for l in text.splitlines() if l.startswith("usemtl ")]
    assert mats == [f"kind_{p.kind}" for p in prims]
    m = parse_obj(text)
    assert m.n_faces > 0
    # every exported vertex lies on or inside its primitive
    for p in prims:
        assert contains(p, quantize(p, 8).vertices, tol=1e-9).all()


def test_mtl_palette():
    text = export_mtl()
    for kind in PARAM_COUNTS:
        assert f"newmtl kind_{kind}" in text
    # boxes green, cylinders yellow, prisms blue, capsules red
    r, g, b = KIND_COLORS["obb"]
    assert g > r and g > b
    r, g, b = KIND_COLORS["cylinder"]
    assert r > b and g > b
    r, g, b = KIND_COLORS["prism"]
    assert b > r and b > g
    r, g, b = KIND_COLORS["capsule"]
    assert r > g and r > b


def test_export_deterministic():
    prims = random_primitives(2)
    assert export_obj(prims) == export_obj(prims)
    assert math.isfinite(sum(float(t) for l in export_obj(prims).splitlines() if l.startswith("v ") for t in l.split()[1:]))
