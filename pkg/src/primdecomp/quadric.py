"""Area-weighted 3x3 orientation quadrics and their symmetric eigendecomposition."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .mesh import FaceAttributes

__all__ = [
    "Quadric",
    "EigenBasis",
    "face_quadric",
    "face_quadrics",
    "add",
    "eigen_basis",
    "eigh3",
]

# analytic eigenvectors are trusted only when every eigenvalue gap exceeds this
# fraction of the spectral radius; closer roots go through Jacobi
_ANALYTIC_GAP = 1e-4


@dataclass(frozen=True)
class Quadric:
    """Symmetric 3x3 matrix stored as its six unique entries (xx, xy, xz, yy, yz, zz)."""

    m: tuple[float, float, float, float, float, float] = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_matrix(cls, a) -> "Quadric":
        a = np.asarray(a, dtype=np.float64)
        return cls((float(a[0, 0]), float(a[0, 1]), float(a[0, 2]), float(a[1, 1]), float(a[1, 2]), float(a[2, 2])))

    @classmethod
    def zero(cls) -> "Quadric":
        return cls()

    @property
    def matrix(self) -> np.ndarray:
        xx, xy, xz, yy, yz, zz = self.m
        return np.array([[xx, xy, xz], [xy, yy, yz], [xz, yz, zz]])

    def __add__(self, other: "Quadric") -> "Quadric":
        return add(self, other)

    def scaled(self, k: float) -> "Quadric":
        return Quadric(tuple(k * v for v in self.m))

    def frobenius(self) -> float:
        xx, xy, xz, yy, yz, zz = self.m
        return math.sqrt(xx * xx + yy * yy + zz * zz + 2.0 * (xy * xy + xz * xz + yz * yz))


@dataclass(frozen=True)
class EigenBasis:
    """Orthonormal eigenvectors ordered by descending ``|lambda|``: w2, w1, w0."""

    w2: np.ndarray
    w1: np.ndarray
    w0: np.ndarray
    lambda2: float
    lambda1: float
    lambda0: float

    @property
    def axes(self) -> np.ndarray:
        """Rows (w2, w1, w0)."""
        return np.stack([self.w2, self.w1, self.w0])

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([self.lambda2, self.lambda1, self.lambda0])


def face_quadric(normal, tangent, area: float, tangent_epsilon: float = 0.0) -> Quadric:
    """``area * (n n^T + eps * t t^T)`` with ``t`` normalised; tangent term skipped when eps is 0."""
    n = np.asarray(normal, dtype=np.float64)
    q = np.outer(n, n)
    if tangent_epsilon > 0:
        t = np.asarray(tangent, dtype=np.float64)
        tl = np.linalg.norm(t)
        if tl > 0:
            t = t / tl
            q = q + tangent_epsilon * np.outer(t, t)
    return Quadric.from_matrix(area * q)


def face_quadrics(attrs: FaceAttributes, n_faces: int, tangent_epsilon: float = 0.0) -> np.ndarray:
    """Per-face quadric matrices ``(F, 3, 3)``; fan records accumulate into their face."""
    n = attrs.normal
    q = np.einsum("ki,kj->kij", n, n)
    if tangent_epsilon > 0:
        tl = np.linalg.norm(attrs.tangent, axis=1)
        t = np.zeros_like(attrs.tangent)
        nz = tl > 0
        t[nz] = attrs.tangent[nz] / tl[nz, None]
        q = q + tangent_epsilon * np.einsum("ki,kj->kij", t, t)
    q *= attrs.area[:, None, None]
    out = np.zeros((n_faces, 3, 3))
    np.add.at(out, attrs.face, q)
    return out


def add(a: Quadric, b: Quadric) -> Quadric:
    return Quadric(tuple(x + y for x, y in zip(a.m, b.m)))


def eigen_basis(q: Quadric | np.ndarray) -> EigenBasis:
    """Eigendecomposition with deterministic signs (largest-magnitude component positive)."""
    a = q.matrix if isinstance(q, Quadric) else np.asarray(q, dtype=np.float64)
    vals, vecs = eigh3(np.ascontiguousarray(a, dtype=np.float64))
    return EigenBasis(
        w2=vecs[0].copy(),
        w1=vecs[1].copy(),
        w0=vecs[2].copy(),
        lambda2=float(vals[0]),
        lambda1=float(vals[1]),
        lambda0=float(vals[2]),
    )


# ---------------------------------------------------------------------------
# kernels


@njit(cache=True)
def _null_vector(a, lam):
    # eigenvector for lam: the largest cross product of two rows of (A - lam I)
    r00 = a[0, 0] - lam
    r11 = a[1, 1] - lam
    r22 = a[2, 2] - lam
    r01 = a[0, 1]
    r02 = a[0, 2]
    r12 = a[1, 2]
    # rows (r00, r01, r02), (r01, r11, r12), (r02, r12, r22)
    c0x = r01 * r12 - r02 * r11
    c0y = r02 * r01 - r00 * r12
    c0z = r00 * r11 - r01 * r01
    c1x = r01 * r22 - r02 * r12
    c1y = r02 * r02 - r00 * r22
    c1z = r00 * r12 - r01 * r02
    c2x = r11 * r22 - r12 * r12
    c2y = r12 * r02 - r01 * r22
    c2z = r01 * r12 - r11 * r02
    d0 = c0x * c0x + c0y * c0y + c0z * c0z
    d1 = c1x * c1x + c1y * c1y + c1z * c1z
    d2 = c2x * c2x + c2y * c2y + c2z * c2z
    if d0 >= d1 and d0 >= d2:
        s = 1.0 / math.sqrt(d0) if d0 > 0 else 0.0
        return c0x * s, c0y * s, c0z * s, d0
    if d1 >= d2:
        s = 1.0 / math.sqrt(d1) if d1 > 0 else 0.0
        return c1x * s, c1y * s, c1z * s, d1
    s = 1.0 / math.sqrt(d2) if d2 > 0 else 0.0
    return c2x * s, c2y * s, c2z * s, d2


@njit(cache=True)
def _jacobi3(a):
    m = a.copy()
    v = np.eye(3)
    for _sweep in range(64):
        off = m[0, 1] ** 2 + m[0, 2] ** 2 + m[1, 2] ** 2
        diag = m[0, 0] ** 2 + m[1, 1] ** 2 + m[2, 2] ** 2
        if off <= 1e-36 * diag or off == 0.0:
            break
        for p in range(2):
            for r in range(p + 1, 3):
                apq = m[p, r]
                if apq == 0.0:
                    continue
                theta = (m[r, r] - m[p, p]) / (2.0 * apq)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(3):
                    mkp = m[k, p]
                    mkr = m[k, r]
                    m[k, p] = c * mkp - s * mkr
                    m[k, r] = s * mkp + c * mkr
                for k in range(3):
                    mpk = m[p, k]
                    mrk = m[r, k]
                    m[p, k] = c * mpk - s * mrk
                    m[r, k] = s * mpk + c * mrk
                for k in range(3):
                    vkp = v[k, p]
                    vkr = v[k, r]
                    v[k, p] = c * vkp - s * vkr
                    v[k, r] = s * vkp + c * vkr
    vals = np.array([m[0, 0], m[1, 1], m[2, 2]])
    return vals, v.T.copy()


@njit(cache=True)
def eigh3(a):
    """Eigenpairs of a symmetric 3x3 matrix.

    Returns ``(vals, rows)`` sorted by descending ``|lambda|`` with rows holding
    unit eigenvectors. Closed-form roots; Jacobi rotations when roots nearly coincide.
    """
    a00 = a[0, 0]
    a11 = a[1, 1]
    a22 = a[2, 2]
    a01 = 0.5 * (a[0, 1] + a[1, 0])
    a02 = 0.5 * (a[0, 2] + a[2, 0])
    a12 = 0.5 * (a[1, 2] + a[2, 1])
    s = np.empty((3, 3))
    s[0, 0] = a00
    s[1, 1] = a11
    s[2, 2] = a22
    s[0, 1] = s[1, 0] = a01
    s[0, 2] = s[2, 0] = a02
    s[1, 2] = s[2, 1] = a12

    p1 = a01 * a01 + a02 * a02 + a12 * a12
    q = (a00 + a11 + a22) / 3.0
    p2 = (a00 - q) ** 2 + (a11 - q) ** 2 + (a22 - q) ** 2 + 2.0 * p1
    scale = max(abs(a00), abs(a11), abs(a22), math.sqrt(p1))

    use_jacobi = True
    vecs = np.eye(3)
    if scale > 0 and p2 > 1e-24 * scale * scale:
        p = math.sqrt(p2 / 6.0)
        b00 = (a00 - q) / p
        b11 = (a11 - q) / p
        b22 = (a22 - q) / p
        b01 = a01 / p
        b02 = a02 / p
        b12 = a12 / p
        det = b00 * (b11 * b22 - b12 * b12) - b01 * (b01 * b22 - b12 * b02) + b02 * (b01 * b12 - b11 * b02)
        r = det / 2.0
        if r <= -1.0:
            phi = math.pi / 3.0
        elif r >= 1.0:
            phi = 0.0
        else:
            phi = math.acos(r) / 3.0
        hi = q + 2.0 * p * math.cos(phi)
        lo = q + 2.0 * p * math.cos(phi + 2.0 * math.pi / 3.0)
        mid = 3.0 * q - hi - lo
        radius = max(abs(hi), abs(lo))
        if hi - mid > _ANALYTIC_GAP * radius and mid - lo > _ANALYTIC_GAP * radius:
            hx, hy, hz, d_hi = _null_vector(s, hi)
            lx, ly, lz, d_lo = _null_vector(s, lo)
            if d_hi > 0 and d_lo > 0:
                dot = lx * hx + ly * hy + lz * hz
                lx -= dot * hx
                ly -= dot * hy
                lz -= dot * hz
                ln = 1.0 / math.sqrt(lx * lx + ly * ly + lz * lz)
                lx *= ln
                ly *= ln
                lz *= ln
                mx = ly * hz - lz * hy
                my = lz * hx - lx * hz
                mz = lx * hy - ly * hx
                mn = 1.0 / math.sqrt(mx * mx + my * my + mz * mz)
                vecs[0, 0] = hx
                vecs[0, 1] = hy
                vecs[0, 2] = hz
                vecs[1, 0] = mx * mn
                vecs[1, 1] = my * mn
                vecs[1, 2] = mz * mn
                vecs[2, 0] = lx
                vecs[2, 1] = ly
                vecs[2, 2] = lz
                use_jacobi = False
    if use_jacobi:
        if scale == 0.0:
            return np.zeros(3), np.eye(3)
        _, vecs = _jacobi3(s)
    # Rayleigh quotients, then order by |lambda| descending (stable)
    vals = np.empty(3)
    for i in range(3):
        acc = 0.0
        for j in range(3):
            acc += vecs[i, j] * (s[j, 0] * vecs[i, 0] + s[j, 1] * vecs[i, 1] + s[j, 2] * vecs[i, 2])
        vals[i] = acc
    o0, o1, o2 = 0, 1, 2
    if abs(vals[o1]) > abs(vals[o0]):
        o0, o1 = o1, o0
    if abs(vals[o2]) > abs(vals[o1]):
        o1, o2 = o2, o1
        if abs(vals[o1]) > abs(vals[o0]):
            o0, o1 = o1, o0
    out_vals = np.empty(3)
    out_vecs = np.empty((3, 3))
    for i, oi in enumerate((o0, o1, o2)):
        out_vals[i] = vals[oi]
        k = 0
        best = abs(vecs[oi, 0])
        for j in range(1, 3):
            if abs(vecs[oi, j]) > best:
                best = abs(vecs[oi, j])
                k = j
        sg = -1.0 if vecs[oi, k] < 0 else 1.0
        for j in range(3):
            out_vecs[i, j] = sg * vecs[oi, j]
    return out_vals, out_vecs
