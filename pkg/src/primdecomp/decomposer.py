"""Greedy bottom-up merging of per-face primitives."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from ._queue import MergeQueue
from .mesh import FaceAttributes, IndexedMesh, face_attributes
from .primitives import _kernels as K
from .primitives.fit import DEFAULT_WEIGHTS, MIN_EXTENT, ConfigError, FitConfig, fit_arrays
from .primitives.shapes import KIND_NAMES, Primitive, from_params
from .quadric import face_quadrics

__all__ = [
    "DecomposeConfig",
    "DecomposeError",
    "IntersectionSampling",
    "CollapseState",
    "PrimitiveEntry",
    "PrimitiveSet",
    "decompose",
    "merge_cost",
    "merge_cost_with_intersection",
    "intersection_volume",
    "enclosure_violations",
]

# merged regions are cut down to their 3D hull vertices past this many points
REDUCE_ABOVE = 64
# relative thickness under which a point cloud is treated as planar
_PLANAR_RTOL = 1e-12
# merge costs this small relative to the merged volumes count as exact ties
_ZERO_RTOL = 1e-12
# containment slack for culling, relative to the input bbox diagonal
CULL_RTOL = 1e-9


class DecomposeError(ValueError):
    pass


@dataclass(frozen=True)
class IntersectionSampling:
    """Rejection-sampled overlap correction for merge costs."""

    samples: int = 50_000
    seed: int = 0

    def __post_init__(self):
        if self.samples < 1:
            raise ConfigError("intersection sample count must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")


@dataclass(frozen=True)
class DecomposeConfig:
    target_primitives: int = 1
    max_excess_volume: float = math.inf
    weights: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    tangent_epsilon: float = 0.0
    kinds: frozenset = frozenset(KIND_NAMES)
    intersection: Optional[IntersectionSampling] = None
    cull: bool = True
    # also drop topological update edges whose cost exceeds the threshold
    threshold_on_update: bool = False
    min_extent: float = MIN_EXTENT

    def __post_init__(self):
        if int(self.target_primitives) != self.target_primitives or self.target_primitives < 1:
            raise ConfigError("target_primitives must be an integer >= 1")
        if not self.max_excess_volume > 0:
            raise ConfigError("max_excess_volume must be positive")
        if not (self.tangent_epsilon >= 0 and math.isfinite(self.tangent_epsilon)):
            raise ConfigError("tangent_epsilon must be finite and >= 0")
        fit = FitConfig(kinds=self.kinds, weights=self.weights, min_extent=self.min_extent)
        object.__setattr__(self, "target_primitives", int(self.target_primitives))
        object.__setattr__(self, "kinds", fit.kinds)
        object.__setattr__(self, "weights", fit.weights)

    @property
    def fit_config(self) -> FitConfig:
        return FitConfig(kinds=self.kinds, weights=self.weights, min_extent=self.min_extent)

    def to_dict(self) -> dict:
        return {
            "target_primitives": self.target_primitives,
            "max_excess_volume": self.max_excess_volume if math.isfinite(self.max_excess_volume) else "inf",
            "weights": {k: self.weights[k] for k in KIND_NAMES},
            "tangent_epsilon": self.tangent_epsilon,
            "kinds": [k for k in KIND_NAMES if k in self.kinds],
            "intersection": None
            if self.intersection is None
            else {"samples": self.intersection.samples, "seed": self.intersection.seed},
            "cull": self.cull,
            "threshold_on_update": self.threshold_on_update,
            "min_extent": self.min_extent,
        }


@dataclass(frozen=True)
class PrimitiveEntry:
    primitive: Primitive
    faces: tuple[int, ...]
    weighted_volume: float


@dataclass
class PrimitiveSet:
    entries: list[PrimitiveEntry]
    provenance: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def primitives(self) -> list[Primitive]:
        return [e.primitive for e in self.entries]

    def kind_counts(self) -> dict[str, int]:
        out = {k: 0 for k in KIND_NAMES}
        for e in self.entries:
            out[e.primitive.kind] += 1
        return out


# ---------------------------------------------------------------------------
# point handling


def reduce_points(P: np.ndarray, force: bool = True) -> np.ndarray:
    """Convex-hull vertices of ``P`` (every fit depends only on these).

    Planar clouds go through a compiled 2D hull; otherwise a 3D hull is
    computed when ``force`` is set.
    """
    if len(P) <= 4:
        return P
    planar, idx = K.planar_reduce(P, _PLANAR_RTOL)
    if planar:
        return np.ascontiguousarray(P[idx])
    if not force:
        return P
    try:
        hull = ConvexHull(P)
    except QhullError:
        return P
    return np.ascontiguousarray(P[np.sort(hull.vertices)])


# ---------------------------------------------------------------------------
# intersection estimate


def intersection_volume(p0: tuple[int, np.ndarray], p1: tuple[int, np.ndarray], samples: int, rng) -> float:
    """Monte Carlo estimate of ``V(p0 ∩ p1)`` for ``(kind, params)`` pairs.

    Points are rejection-sampled uniformly inside the smaller primitive; the
    fraction also inside the other one scales that primitive's volume.
    """
    v0 = K.volume_k(p0[0], p0[1])
    v1 = K.volume_k(p1[0], p1[1])
    small, big = (p0, p1) if v0 <= v1 else (p1, p0)
    vs = min(v0, v1)
    lo_s, hi_s = K.aabb_k(small[0], small[1])
    lo_b, hi_b = K.aabb_k(big[0], big[1])
    if np.any(hi_s < lo_b) or np.any(hi_b < lo_s):
        return 0.0
    center, R, half = K.local_frame(small[0], small[1])
    box = 8.0 * float(np.prod(half))
    accept = min(max(vs / box, 1e-3), 1.0) if box > 0 else 1.0
    got = 0
    hits = 0
    while got < samples:
        want = samples - got
        n = int(min(max(want / accept * 1.1 + 16, 64), 4_000_000))
        X = K.sample_in_frame(center, R, half, rng.random((n, 3)))
        inside = K.contains_k(small[0], small[1], X, 0.0)
        X = X[inside][:want]
        got += len(X)
        if len(X):
            hits += int(np.count_nonzero(K.contains_k(big[0], big[1], np.ascontiguousarray(X), 0.0)))
    return hits / samples * vs


# ---------------------------------------------------------------------------
# merge state


class CollapseState:
    """Mutable merge engine: DSU over faces, cyclic face rings and a lazy queue.

    Each queue entry is ``(cost, merged_faces, seq, a, b, gen_a, gen_b)``;
    equal costs go to the smaller merge first, then to the older entry. An
    entry is live only while both generation stamps match, so merged-away
    roots invalidate their old entries without searching the queue.
    """

    def __init__(self, mesh: IndexedMesh, attrs: FaceAttributes, config: DecomposeConfig):
        F = mesh.n_faces
        self.mesh = mesh
        self.config = config
        fit = config.fit_config
        self._enabled = fit.enabled_mask
        self._weights = fit.weight_array
        self._clamp = float(config.min_extent)

        lo, hi = mesh.bounding_box()
        aabb_vol = float(np.prod(hi - lo))
        M = config.max_excess_volume
        self.threshold = math.inf if math.isinf(M) else M * aabb_vol
        self.diag = mesh.bbox_diagonal()

        self.parent = list(range(F))
        self.size = np.ones(F, dtype=np.int64)
        self.nxt = list(range(F))
        self.gen = np.zeros(F, dtype=np.int64)
        self.live = F
        self.Q = face_quadrics(attrs, F, config.tangent_epsilon)
        self.points: list[Optional[np.ndarray]] = [
            np.ascontiguousarray(mesh.vertices[mesh.face_vertices(f)]) for f in range(F)
        ]
        self.hull_base = [0] * F
        self.nbrs: list[set[int]] = [set(s) for s in mesh.adjacency]
        self.kind = np.full(F, -1, dtype=np.int64)
        self.params = np.zeros((F, K.N_PARAMS))
        self.vol = np.zeros(F)
        self.wvol = np.zeros(F)
        self.queue = MergeQueue(4 * F)
        self.seq = 0
        self.pairwise = False
        self.stats = {"pops": 0, "stale_discarded": 0, "merges": 0, "invalid_executed": 0, "pushes": 0}

        st, kinds, params, vols, wvols = K.fit_groups(
            mesh.vertices, mesh.face_offsets, mesh.face_indices, self.Q, self._enabled, self._weights, self._clamp
        )
        for f in np.flatnonzero(st != 0):
            kinds[f], params[f], vols[f], wvols[f] = self._fit(self.Q[f], self.points[f])
        self.kind[:] = kinds
        self.params[:] = params
        self.vol[:] = vols
        self.wvol[:] = wvols

    # -- helpers -----------------------------------------------------------

    def _fit(self, Q, P):
        return fit_arrays(np.ascontiguousarray(Q), P, self._enabled, self._weights, self._clamp)

    def find(self, f: int) -> int:
        parent = self.parent
        r = f
        while parent[r] != r:
            r = parent[r]
        while parent[f] != r:
            parent[f], f = r, parent[f]
        return r

    def is_root(self, r: int) -> bool:
        return self.parent[r] == r

    def ring(self, r: int) -> list[int]:
        out = [r]
        f = self.nxt[r]
        while f != r:
            out.append(f)
            f = self.nxt[f]
        return out

    def roots(self) -> list[int]:
        return [f for f in range(len(self.parent)) if self.parent[f] == f]

    def primitive(self, r: int) -> Primitive:
        return from_params(int(self.kind[r]), self.params[r])

    def _isect(self, a: int, b: int) -> float:
        mode = self.config.intersection
        rng = np.random.default_rng([mode.seed, a, b])
        return intersection_volume(
            (int(self.kind[a]), self.params[a]), (int(self.kind[b]), self.params[b]), mode.samples, rng
        )

    def _push(self, a: np.ndarray, b: np.ndarray, wv: np.ndarray, thresholded: bool) -> None:
        """Queue merges ``a[j]``-``b[j]`` whose candidates have weighted volume ``wv[j]``."""
        base = self.wvol[a] + self.wvol[b]
        cost = wv - base
        if self.config.intersection is not None:
            cost = cost + np.array([self._isect(int(x), int(y)) for x, y in zip(a.tolist(), b.tolist())])
        # rounding noise on flush merges would otherwise decide the order
        cost[np.abs(cost) <= _ZERO_RTOL * base] = 0.0
        if thresholded:
            keep = cost <= self.threshold
            a, b, cost = a[keep], b[keep], cost[keep]
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        m = len(cost)
        seq = np.arange(self.seq + 1, self.seq + m + 1, dtype=np.int64)
        self.seq += m
        self.stats["pushes"] += m
        self.queue.push(
            np.ascontiguousarray(cost), self.size[lo] + self.size[hi], seq, lo, hi, self.gen[lo], self.gen[hi]
        )

    def _push_costs(self, a: int, others: list[int], wv: np.ndarray, thresholded: bool) -> None:
        if others:
            b = np.asarray(others, dtype=np.int64)
            self._push(np.full(len(b), a, dtype=np.int64), b, wv, thresholded)

    def _fix_deferred(self, st, kinds, params, vols, wvols, Q0, P0, others):
        for j in np.flatnonzero(st != 0):
            b = others[j]
            X = np.concatenate([P0, self.points[b]])
            kinds[j], params[j], vols[j], wvols[j] = self._fit(Q0 + self.Q[b], X)

    def candidate_costs(self, a: int, others: list[int]) -> np.ndarray:
        """Weighted volumes of ``a`` merged with each root in ``others``."""
        if not others:
            return np.zeros(0)
        pts = [self.points[b] for b in others]
        offs = np.zeros(len(pts) + 1, dtype=np.int64)
        np.cumsum([len(p) for p in pts], out=offs[1:])
        P = np.ascontiguousarray(np.concatenate(pts))
        Qs = np.ascontiguousarray(self.Q[others])
        res = K.fit_against(self.points[a], self.Q[a], P, offs, Qs, self._enabled, self._weights, self._clamp)
        st, kinds, params, vols, wvols = res
        if np.any(st != 0):
            self._fix_deferred(st, kinds, params, vols, wvols, self.Q[a], self.points[a], others)
        return wvols

    # -- phases ------------------------------------------------------------

    def seed(self) -> None:
        pairs = self.mesh.edge_pairs
        if len(pairs) == 0:
            return
        m = self.mesh
        st, kinds, params, vols, wvols = K.fit_pairs(
            m.vertices, m.face_offsets, m.face_indices, self.Q, np.ascontiguousarray(pairs),
            self._enabled, self._weights, self._clamp,
        )
        for j in np.flatnonzero(st != 0):
            a, b = pairs[j]
            X = np.concatenate([self.points[a], self.points[b]])
            kinds[j], params[j], vols[j], wvols[j] = self._fit(self.Q[a] + self.Q[b], X)
        self._push(pairs[:, 0].copy(), pairs[:, 1].copy(), wvols, thresholded=True)

    def enter_pairwise(self) -> None:
        """Connect every pair of live primitives and queue the affordable merges."""
        self.pairwise = True
        roots = self.roots()
        for r in roots:
            self.nbrs[r] = set(roots)
            self.nbrs[r].discard(r)
        for i, a in enumerate(roots[:-1]):
            others = roots[i + 1 :]
            self._push_costs(a, others, self.candidate_costs(a, others), thresholded=True)

    def merge(self, a: int, b: int) -> int:
        r, o = (a, b) if (int(self.size[a]), -a) >= (int(self.size[b]), -b) else (b, a)
        Q = self.Q[a] + self.Q[b]
        X = np.ascontiguousarray(np.concatenate([self.points[a], self.points[b]]))
        kind, params, vol, wvol = self._fit(Q, X)
        self.parent[o] = r
        self.size[r] += self.size[o]
        self.nxt[r], self.nxt[o] = self.nxt[o], self.nxt[r]
        self.Q[r] = Q
        # 3D hulls are recomputed only once the point count has doubled
        base = self.hull_base[a] + self.hull_base[b]
        if len(X) > REDUCE_ABOVE and len(X) > 2 * base:
            self.points[r] = reduce_points(X)
            self.hull_base[r] = len(self.points[r])
        else:
            self.points[r] = reduce_points(X, force=False)
            self.hull_base[r] = min(base, len(self.points[r]))
        self.points[o] = None
        self.kind[r] = kind
        self.params[r] = params
        self.vol[r] = vol
        self.wvol[r] = wvol
        self.gen[r] += 1
        self.gen[o] += 1
        self.live -= 1
        self.stats["merges"] += 1

        nb = (self.nbrs[a] | self.nbrs[b]) - {a, b}
        for n in nb:
            s = self.nbrs[n]
            s.discard(a)
            s.discard(b)
            s.add(r)
        self.nbrs[r] = nb
        self.nbrs[o] = set()
        others = sorted(nb)
        thresholded = self.pairwise or self.config.threshold_on_update
        self._push_costs(r, others, self.candidate_costs(r, others), thresholded)
        return r

    def run(self, target: int) -> None:
        stats = self.stats
        while self.live > target:
            found, _, a, b, popped = self.queue.pop(self.gen)
            stats["pops"] += popped
            stats["stale_discarded"] += popped - found
            if not found:
                if self.pairwise or self.live <= 1:
                    break
                self.enter_pairwise()
                continue
            if not (self.is_root(a) and self.is_root(b)) or a == b:
                self.stats["invalid_executed"] += 1
            self.merge(a, b)

    def cull(self) -> int:
        """Drop primitives whose points all lie in another kept primitive.

        Smallest weighted volume is tried first; the faces of a culled
        primitive move to its container. Returns the number culled.
        """
        tol = CULL_RTOL * self.diag
        roots = self.roots()
        order = sorted(roots, key=lambda r: (self.wvol[r], r))
        boxes = {r: K.aabb_k(int(self.kind[r]), self.params[r]) for r in roots}
        kept = set(roots)
        culled = 0
        for r in order:
            P = self.points[r]
            plo = P.min(axis=0) - tol
            phi = P.max(axis=0) + tol
            for c in sorted(kept, key=lambda s: (self.wvol[s], s)):
                if c == r:
                    continue
                lo, hi = boxes[c]
                if np.any(plo < lo - tol) or np.any(phi > hi + tol):
                    continue
                if np.all(K.contains_k(int(self.kind[c]), self.params[c], P, tol)):
                    kept.discard(r)
                    self.parent[r] = c
                    self.size[c] += self.size[r]
                    self.nxt[c], self.nxt[r] = self.nxt[r], self.nxt[c]
                    self.points[c] = reduce_points(np.ascontiguousarray(np.concatenate([self.points[c], P])))
                    self.points[r] = None
                    self.gen[r] += 1
                    self.live -= 1
                    culled += 1
                    break
        return culled


# ---------------------------------------------------------------------------
# public API


def _as_pair(p) -> tuple[int, np.ndarray]:
    if isinstance(p, tuple):
        return int(p[0]), np.asarray(p[1], dtype=np.float64)
    return p.code, p.params()


def merge_cost(p0, p1, config: DecomposeConfig | None = None):
    """Merged candidate and its excess-volume cost for two live primitives.

    ``p0``/``p1`` are ``(quadric_matrix, points, stored_weighted_volume)``.
    Returns ``(candidate, weighted_volume, cost)``.
    """
    config = config or DecomposeConfig()
    fit = config.fit_config
    Q0, P0, w0 = p0
    Q1, P1, w1 = p1
    X = np.ascontiguousarray(np.concatenate([np.asarray(P0, float).reshape(-1, 3), np.asarray(P1, float).reshape(-1, 3)]))
    code, params, _, wv = fit_arrays(
        np.ascontiguousarray(np.asarray(Q0, float) + np.asarray(Q1, float)), X, fit.enabled_mask, fit.weight_array, fit.min_extent
    )
    return from_params(code, params), wv, wv - (w0 + w1)


def merge_cost_with_intersection(p0, p1, prim0, prim1, config: DecomposeConfig, key=(0, 1)):
    """``merge_cost`` with the sampled overlap ``V(prim0 ∩ prim1)`` added back."""
    if config.intersection is None:
        raise ConfigError("intersection mode is not enabled in this config")
    cand, wv, cost = merge_cost(p0, p1, config)
    rng = np.random.default_rng([config.intersection.seed, *key])
    v = intersection_volume(_as_pair(prim0), _as_pair(prim1), config.intersection.samples, rng)
    return cand, wv, cost + v


def decompose(
    mesh: IndexedMesh,
    attrs: FaceAttributes | None = None,
    config: DecomposeConfig | None = None,
    provenance: dict | None = None,
) -> PrimitiveSet:
    """Merge per-face primitives until at most ``target_primitives`` remain
    or no affordable merge is left, then cull enclosed primitives."""
    config = config or DecomposeConfig()
    if mesh.n_faces == 0:
        raise DecomposeError("mesh has no faces")
    attrs = attrs if attrs is not None else face_attributes(mesh)
    state = CollapseState(mesh, attrs, config)
    n_culled = 0
    if config.target_primitives < mesh.n_faces:
        state.seed()
        state.run(config.target_primitives)
        if config.cull:
            n_culled = state.cull()
    entries = []
    for r in state.roots():
        faces = tuple(sorted(state.ring(r)))
        entries.append((faces, r))
    entries.sort()
    out = [PrimitiveEntry(state.primitive(r), faces, float(state.wvol[r])) for faces, r in entries]
    stats = dict(state.stats, culled=n_culled)
    prov = {"config": config.to_dict()}
    if provenance:
        prov.update(provenance)
    return PrimitiveSet(out, prov, stats)


def enclosure_violations(mesh: IndexedMesh, pset: PrimitiveSet, rtol: float = CULL_RTOL) -> list[tuple[int, int]]:
    """``(entry index, vertex id)`` pairs where a face vertex escapes its owning primitive.

    Every face must be owned by exactly one entry; an unowned or doubly owned
    face is reported with vertex id ``-1``.
    """
    tol = rtol * mesh.bbox_diagonal()
    owner = np.full(mesh.n_faces, -1, dtype=np.int64)
    bad: list[tuple[int, int]] = []
    for i, e in enumerate(pset.entries):
        faces = np.asarray(e.faces, dtype=np.int64)
        if np.any(owner[faces] >= 0):
            bad.append((i, -1))
        owner[faces] = i
        vids = np.unique(np.concatenate([mesh.face_vertices(int(f)) for f in faces])) if len(faces) else []
        if len(vids) == 0:
            continue
        inside = e.primitive.contains(mesh.vertices[vids], tol)
        bad.extend((i, int(v)) for v in np.asarray(vids)[~inside])
    if np.any(owner < 0):
        bad.append((-1, -1))
    return bad
