"""Polygon meshes: OBJ ingest, vertex welding, face adjacency and per-face attributes."""
from __future__ import annotations

import io
import os
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence, TextIO, Union

import numpy as np

__all__ = [
    "MeshError",
    "ObjParseError",
    "MeshStructureError",
    "IndexedMesh",
    "FaceAttributes",
    "parse_obj",
    "read_obj",
    "write_obj",
    "deduplicate_vertices",
    "face_attributes",
]


class MeshError(ValueError):
    """Base class for invalid mesh input."""


class ObjParseError(MeshError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class MeshStructureError(MeshError):
    pass


class IndexedMesh:
    """Vertices plus polygonal faces (each face a list of >= 3 vertex indices).

    Faces are stored twice: as a list of tuples for convenience and as a CSR
    pair (``face_offsets``, ``face_indices``) for the vectorised paths.
    """

    def __init__(self, vertices, faces: Iterable[Sequence[int]], validate: bool = True):
        self.vertices = np.ascontiguousarray(np.asarray(vertices, dtype=np.float64).reshape(-1, 3))
        self.faces: list[tuple[int, ...]] = [tuple(int(i) for i in f) for f in faces]
        sizes = np.fromiter((len(f) for f in self.faces), dtype=np.int64, count=len(self.faces))
        self.face_offsets = np.zeros(len(self.faces) + 1, dtype=np.int64)
        np.cumsum(sizes, out=self.face_offsets[1:])
        if self.faces:
            self.face_indices = np.fromiter(
                (i for f in self.faces for i in f), dtype=np.int64, count=int(self.face_offsets[-1])
            )
        else:
            self.face_indices = np.zeros(0, dtype=np.int64)
        if validate:
            self._validate()

    def _validate(self) -> None:
        n = len(self.vertices)
        for k, f in enumerate(self.faces):
            if len(f) < 3:
                raise MeshStructureError(f"face {k} has {len(f)} vertices, need at least 3")
            if len(set(f)) != len(f):
                raise MeshStructureError(f"face {k} repeats a vertex index: {f}")
        if len(self.face_indices):
            lo, hi = int(self.face_indices.min()), int(self.face_indices.max())
            if lo < 0 or hi >= n:
                raise MeshStructureError(f"face index out of range [0, {n}): {lo if lo < 0 else hi}")
        if not np.all(np.isfinite(self.vertices)):
            raise MeshStructureError("non-finite vertex coordinate")

    def __repr__(self) -> str:
        return f"IndexedMesh(n_vertices={self.n_vertices}, n_faces={self.n_faces})"

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def face_vertices(self, k: int) -> np.ndarray:
        return self.face_indices[self.face_offsets[k] : self.face_offsets[k + 1]]

    @cached_property
    def edge_pairs(self) -> np.ndarray:
        """Unique ``(a, b)`` face pairs with ``a < b`` that share an undirected edge."""
        if self.n_faces == 0:
            return np.zeros((0, 2), dtype=np.int64)
        sizes = np.diff(self.face_offsets)
        owner = np.repeat(np.arange(self.n_faces, dtype=np.int64), sizes)
        nxt_pos = np.arange(len(self.face_indices), dtype=np.int64) + 1
        ends = self.face_offsets[1:] - 1
        nxt_pos[ends] = self.face_offsets[:-1]
        u = self.face_indices
        v = self.face_indices[nxt_pos]
        lo = np.minimum(u, v)
        hi = np.maximum(u, v)
        key = lo * max(self.n_vertices, 1) + hi
        order = np.argsort(key, kind="stable")
        key = key[order]
        owner = owner[order]
        starts = np.flatnonzero(np.r_[True, key[1:] != key[:-1]])
        counts = np.diff(np.r_[starts, len(key)])
        pairs = []
        two = starts[counts == 2]
        if len(two):
            pairs.append(np.stack([owner[two], owner[two + 1]], axis=1))
        for s, c in zip(starts[counts > 2], counts[counts > 2]):
            grp = owner[s : s + c]
            ii, jj = np.triu_indices(c, 1)
            pairs.append(np.stack([grp[ii], grp[jj]], axis=1))
        if not pairs:
            return np.zeros((0, 2), dtype=np.int64)
        p = np.concatenate(pairs)
        p = np.sort(p, axis=1)
        p = p[p[:, 0] != p[:, 1]]
        p = np.unique(p, axis=0)
        return p

    @cached_property
    def adjacency(self) -> list[frozenset[int]]:
        """For each face, the faces sharing at least one edge with it."""
        nbrs: list[set[int]] = [set() for _ in range(self.n_faces)]
        for a, b in self.edge_pairs.tolist():
            nbrs[a].add(b)
            nbrs[b].add(a)
        return [frozenset(s) for s in nbrs]

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        used = self.vertices[np.unique(self.face_indices)] if len(self.face_indices) else self.vertices
        if len(used) == 0:
            return np.zeros(3), np.zeros(3)
        return used.min(axis=0), used.max(axis=0)

    def bbox_diagonal(self) -> float:
        lo, hi = self.bounding_box()
        return float(np.linalg.norm(hi - lo))

    def triangles(self) -> np.ndarray:
        """Fan-triangulated faces as a ``(T, 3)`` index array."""
        tris = []
        for f in self.faces:
            for i in range(1, len(f) - 1):
                tris.append((f[0], f[i], f[i + 1]))
        return np.asarray(tris, dtype=np.int64).reshape(-1, 3)


# ---------------------------------------------------------------------------
# OBJ


def parse_obj(source: Union[str, bytes, TextIO]) -> IndexedMesh:
    """Parse Wavefront OBJ text. Only ``v`` and ``f`` records are read."""
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if isinstance(source, str):
        source = io.StringIO(source)
    verts: list[tuple[float, float, float]] = []
    faces: list[tuple[int, ...]] = []
    for lineno, raw in enumerate(source, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "v":
            if len(parts) < 4:
                raise ObjParseError("vertex record needs 3 coordinates", lineno)
            try:
                verts.append((float(parts[1]), float(parts[2]), float(parts[3])))
            except ValueError:
                raise ObjParseError(f"bad vertex coordinate in {line!r}", lineno) from None
        elif tag == "f":
            if len(parts) < 4:
                raise ObjParseError(f"face with {len(parts) - 1} vertices, need at least 3", lineno)
            idx = []
            for tok in parts[1:]:
                head = tok.split("/", 1)[0]
                try:
                    i = int(head)
                except ValueError:
                    raise ObjParseError(f"bad face index {tok!r}", lineno) from None
                if i == 0:
                    raise ObjParseError("face index 0 is invalid in OBJ", lineno)
                idx.append(i - 1 if i > 0 else len(verts) + i)
            faces.append(tuple(idx))
    n = len(verts)
    for k, f in enumerate(faces):
        for i in f:
            if i < 0 or i >= n:
                raise MeshStructureError(f"face {k} references vertex {i + 1} but only {n} exist")
    return IndexedMesh(np.asarray(verts, dtype=np.float64).reshape(-1, 3), faces)


def read_obj(path: Union[str, os.PathLike]) -> IndexedMesh:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_obj(fh)


def write_obj(mesh: IndexedMesh) -> str:
    """Serialise to OBJ text; coordinates use ``repr`` so they parse back bit-exactly."""
    out = io.StringIO()
    for x, y, z in mesh.vertices.tolist():
        out.write(f"v {x!r} {y!r} {z!r}\n")
    for f in mesh.faces:
        out.write("f " + " ".join(str(i + 1) for i in f) + "\n")
    return out.getvalue()


# ---------------------------------------------------------------------------
# welding


def _clean_face(face: Sequence[int]) -> tuple[int, ...] | None:
    # drop cyclically-consecutive repeats first; anything still repeating is degenerate
    out = [i for k, i in enumerate(face) if i != face[k - 1]] if len(face) > 1 else list(face)
    if len(out) < 3 or len(set(out)) != len(out):
        return None
    return tuple(out)


def deduplicate_vertices(mesh: IndexedMesh, epsilon: float = 0.0) -> IndexedMesh:
    """Weld vertices closer than ``epsilon`` (exact coordinate equality when 0).

    The first vertex of each cluster is kept as representative and vertex order
    follows first occurrence, so a mesh without duplicates comes back unchanged.
    Faces that collapse below three distinct vertices are dropped.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    V = mesh.vertices
    n = len(V)
    if n == 0:
        return IndexedMesh(V, [], validate=False)
    if epsilon == 0:
        _, first, inverse = np.unique(V, axis=0, return_index=True, return_inverse=True)
        inverse = inverse.reshape(-1)
        # relabel clusters by first occurrence
        order = np.argsort(first, kind="stable")
        rank = np.empty_like(order)
        rank[order] = np.arange(len(order))
        remap = rank[inverse]
        new_vertices = V[first[order]]
    else:
        remap, new_vertices = _grid_weld(V, float(epsilon))
    new_faces = []
    for f in mesh.faces:
        g = _clean_face([int(remap[i]) for i in f])
        if g is not None:
            new_faces.append(g)
    return IndexedMesh(new_vertices, new_faces)


def _grid_weld(V: np.ndarray, eps: float) -> tuple[np.ndarray, np.ndarray]:
    # cells never smaller than eps, and coarse enough that indices fit in int64
    cell = max(eps, float(np.abs(V).max()) * 2.0**-52)
    cells = np.floor(V / cell).astype(np.int64)
    grid: dict[tuple[int, int, int], list[int]] = {}
    reps: list[int] = []
    remap = np.empty(len(V), dtype=np.int64)
    eps2 = eps * eps
    offsets = [(dx, dy, dz) for dx in (-1, 0, 1) for dy in (-1, 0, 1) for dz in (-1, 0, 1)]
    for i, (p, c) in enumerate(zip(V, cells.tolist())):
        hit = -1
        best = np.inf
        for dx, dy, dz in offsets:
            for r in grid.get((c[0] + dx, c[1] + dy, c[2] + dz), ()):
                d = V[reps[r]] - p
                d2 = float(d @ d)
                if d2 <= eps2 and (d2 < best or (d2 == best and r < hit)):
                    best, hit = d2, r
        if hit < 0:
            hit = len(reps)
            reps.append(i)
            grid.setdefault(tuple(c), []).append(hit)
        remap[i] = hit
    return remap, V[np.asarray(reps, dtype=np.int64)]


# ---------------------------------------------------------------------------
# attributes


@dataclass(frozen=True)
class FaceAttributes:
    """Per-record normal, tangent and area.

    Triangles and quads get one record each; larger polygons get one record
    per fan triangle. ``face`` maps each record back to its owning face.
    """

    normal: np.ndarray
    tangent: np.ndarray
    area: np.ndarray
    face: np.ndarray

    def __len__(self) -> int:
        return len(self.area)


def _tri_records(p0, p1, p2):
    c = np.cross(p2 - p0, p1 - p0)
    clen = np.linalg.norm(c, axis=1)
    area = 0.5 * clen
    normal = np.zeros_like(c)
    nz = clen > 0
    normal[nz] = c[nz] / clen[nz, None]

    # edges in winding order and the vertex each one starts from
    edges = np.stack([p1 - p0, p2 - p1, p0 - p2], axis=1)
    starts = np.stack([p0, p1, p2], axis=1)
    opposite = np.stack([p2, p0, p1], axis=1)
    lengths = np.linalg.norm(edges, axis=2)
    order = np.argsort(lengths, axis=1, kind="stable")
    rows = np.arange(len(p0))[:, None]
    e = edges[rows, order]
    t = 0.5 * (e[:, 0] - e[:, 1] + e[:, 2])
    j2 = order[:, 2]
    r = np.arange(len(p0))
    v_off = opposite[r, j2]
    v_in = starts[r, j2]
    side = np.einsum("ij,ij->i", v_off - v_in, np.cross(e[:, 2], normal))
    t[side < 0] *= -1.0
    return normal, t, area


def face_attributes(mesh: IndexedMesh) -> FaceAttributes:
    """Normals, tangents and areas for every face (fan records for n-gons, n > 4)."""
    V = mesh.vertices
    off = mesh.face_offsets
    idx = mesh.face_indices
    sizes = np.diff(off)
    F = mesh.n_faces

    rec_face, rec_sub, normals, tangents, areas = [], [], [], [], []

    tri = np.flatnonzero(sizes == 3)
    if len(tri):
        b = off[tri]
        n, t, a = _tri_records(V[idx[b]], V[idx[b + 1]], V[idx[b + 2]])
        rec_face.append(tri)
        rec_sub.append(np.zeros(len(tri), dtype=np.int64))
        normals.append(n), tangents.append(t), areas.append(a)

    quad = np.flatnonzero(sizes == 4)
    if len(quad):
        b = off[quad]
        v0, v1, v2, v3 = (V[idx[b + k]] for k in range(4))
        c = np.cross(v0 - v2, v1 - v3)
        clen = np.linalg.norm(c, axis=1)
        n = np.zeros_like(c)
        nz = clen > 0
        n[nz] = c[nz] / clen[nz, None]
        t = v0 - v2 + v1 - v3
        a = 0.5 * (
            np.linalg.norm(np.cross(v1 - v0, v2 - v0), axis=1)
            + np.linalg.norm(np.cross(v2 - v0, v3 - v0), axis=1)
        )
        a[~nz] = 0.0
        rec_face.append(quad)
        rec_sub.append(np.zeros(len(quad), dtype=np.int64))
        normals.append(n), tangents.append(t), areas.append(a)

    poly = np.flatnonzero(sizes > 4)
    if len(poly):
        fan_counts = sizes[poly] - 2
        owner = np.repeat(poly, fan_counts)
        sub = np.arange(int(fan_counts.sum())) - np.repeat(np.cumsum(fan_counts) - fan_counts, fan_counts)
        b = off[owner]
        n, t, a = _tri_records(V[idx[b]], V[idx[b + sub + 1]], V[idx[b + sub + 2]])
        rec_face.append(owner)
        rec_sub.append(sub)
        normals.append(n), tangents.append(t), areas.append(a)

    if F == 0:
        z = np.zeros((0, 3))
        return FaceAttributes(z, z.copy(), np.zeros(0), np.zeros(0, dtype=np.int64))
    face = np.concatenate(rec_face)
    sub = np.concatenate(rec_sub)
    order = np.lexsort((sub, face))
    return FaceAttributes(
        normal=np.concatenate(normals)[order],
        tangent=np.concatenate(tangents)[order],
        area=np.concatenate(areas)[order],
        face=face[order],
    )
