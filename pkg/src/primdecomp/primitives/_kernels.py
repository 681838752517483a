"""Compiled fitting, containment and basis-resolution kernels.

Primitives travel through the kernels as ``(kind, params)`` with ``params`` a
length-16 float array. Layouts:

    OBB       center[0:3] axes[3:12] (rows) half[12:15]
    SPHERE    center[0:3] radius[3]
    CAPSULE   start[0:3] end[3:6] radius[6]
    CYLINDER  start[0:3] end[3:6] radius[6]
    PRISM     center[0:3] axes[3:12] (rows x, y, z) hx[12] hy[13] hzt[14] hzb[15]
    FRUSTUM   base[0:3] axis[3:6] height[6] r_bot[7] r_top[8]
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

from ..quadric import eigh3

OBB, SPHERE, CAPSULE, CYLINDER, PRISM, FRUSTUM = 0, 1, 2, 3, 4, 5
N_KINDS = 6
N_PARAMS = 16

# relative slack under which two weighted volumes count as a tie
TIE_RTOL = 1e-9
# relative eigenvalue gap under which eigenvectors are treated as arbitrary
DEGENERATE_RTOL = 1e-6

_PERMS = np.array([[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]], dtype=np.int64)


@njit(cache=True)
def _cross(a, b):
    return np.array([a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]])


@njit(cache=True)
def _dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


@njit(cache=True)
def _canon(w):
    k = 0
    best = abs(w[0])
    for i in range(1, 3):
        if abs(w[i]) > best:
            best = abs(w[i])
            k = i
    if w[k] < 0:
        return -w
    return w.copy()


@njit(cache=True)
def plane_basis(n):
    """Two unit vectors spanning the plane orthogonal to unit ``n``."""
    ax = 0
    m = abs(n[0])
    for i in range(1, 3):
        if abs(n[i]) < m:
            m = abs(n[i])
            ax = i
    e = np.zeros(3)
    e[ax] = 1.0
    e1 = _cross(n, e)
    e1 = e1 / math.sqrt(e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2])
    e2 = _cross(n, e1)
    return e1, e2


# ---------------------------------------------------------------------------
# 2D hull and minimum-area rectangle


@njit(cache=True)
def hull2d(xy):
    """Indices of strictly convex hull vertices (counter-clockwise, monotone chain)."""
    n = xy.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    o1 = np.argsort(xy[:, 1], kind="mergesort")
    o2 = np.argsort(xy[o1, 0], kind="mergesort")
    order = o1[o2]
    # drop exact duplicates
    keep = np.empty(n, dtype=np.int64)
    m = 0
    for k in range(n):
        i = order[k]
        if m > 0:
            j = keep[m - 1]
            if xy[i, 0] == xy[j, 0] and xy[i, 1] == xy[j, 1]:
                continue
        keep[m] = i
        m += 1
    pts = keep[:m]
    if m < 3:
        return pts.copy()
    h = np.empty(2 * m, dtype=np.int64)
    k = 0
    for t in range(m):
        i = pts[t]
        while k >= 2:
            a = h[k - 2]
            b = h[k - 1]
            cr = (xy[b, 0] - xy[a, 0]) * (xy[i, 1] - xy[a, 1]) - (xy[b, 1] - xy[a, 1]) * (xy[i, 0] - xy[a, 0])
            if cr <= 0:
                k -= 1
            else:
                break
        h[k] = i
        k += 1
    lower = k + 1
    for t in range(m - 2, -1, -1):
        i = pts[t]
        while k >= lower:
            a = h[k - 2]
            b = h[k - 1]
            cr = (xy[b, 0] - xy[a, 0]) * (xy[i, 1] - xy[a, 1]) - (xy[b, 1] - xy[a, 1]) * (xy[i, 0] - xy[a, 0])
            if cr <= 0:
                k -= 1
            else:
                break
        h[k] = i
        k += 1
    return h[: k - 1].copy()


@njit(cache=True)
def min_area_rect_dir(xy):
    """Direction of the minimum-area enclosing rectangle, flush with a hull edge.

    Returns ``(ok, u)``; ``ok`` is False for fewer than two distinct points.
    """
    h = hull2d(xy)
    u = np.array([1.0, 0.0])
    nh = h.shape[0]
    if nh < 2:
        return False, u
    if nh == 2:
        dx = xy[h[1], 0] - xy[h[0], 0]
        dy = xy[h[1], 1] - xy[h[0], 1]
        ln = math.sqrt(dx * dx + dy * dy)
        u[0] = dx / ln
        u[1] = dy / ln
        return True, u
    best = np.inf
    for e in range(nh):
        e2 = (e + 1) % nh
        dx = xy[h[e2], 0] - xy[h[e], 0]
        dy = xy[h[e2], 1] - xy[h[e], 1]
        ln = math.sqrt(dx * dx + dy * dy)
        if ln == 0.0:
            continue
        dx /= ln
        dy /= ln
        lo0 = np.inf
        hi0 = -np.inf
        lo1 = np.inf
        hi1 = -np.inf
        for k in range(nh):
            px = xy[h[k], 0]
            py = xy[h[k], 1]
            s = px * dx + py * dy
            t = -px * dy + py * dx
            lo0 = min(lo0, s)
            hi0 = max(hi0, s)
            lo1 = min(lo1, t)
            hi1 = max(hi1, t)
        area = (hi0 - lo0) * (hi1 - lo1)
        if area < best * (1.0 - 1e-12):
            best = area
            u[0] = dx
            u[1] = dy
    return True, u


@njit(cache=True)
def rect_in_plane(P, n):
    """In-plane axes (u, v) of the min-area rectangle of ``P`` projected along ``n``."""
    e1, e2 = plane_basis(n)
    m = P.shape[0]
    xy = np.empty((m, 2))
    for i in range(m):
        xy[i, 0] = P[i, 0] * e1[0] + P[i, 1] * e1[1] + P[i, 2] * e1[2]
        xy[i, 1] = P[i, 0] * e2[0] + P[i, 1] * e2[1] + P[i, 2] * e2[2]
    ok, d = min_area_rect_dir(xy)
    if not ok:
        return e1, e2
    u = d[0] * e1 + d[1] * e2
    u = u / math.sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2])
    v = _cross(n, u)
    return u, v


@njit(cache=True)
def resolve_basis(Q, P):
    """Eigenbasis of ``Q``, with any 2D-degenerate eigenspace pinned by the
    minimum-area rectangle of ``P`` in that plane.

    Returns ``(status, rows)``; status 1 means all three eigenvalues coincide
    and the caller must pick the frame.
    """
    vals, B = eigh3(Q)
    scale = max(abs(vals[0]), abs(vals[1]), abs(vals[2]))
    if scale == 0.0:
        return 1, B
    tol = DEGENERATE_RTOL * scale
    g01 = abs(vals[0] - vals[1]) <= tol
    g12 = abs(vals[1] - vals[2]) <= tol
    if g01 and g12:
        return 1, B
    if g01:
        fixed = B[2].copy()
        s0, s1 = 0, 1
    elif g12:
        fixed = B[0].copy()
        s0, s1 = 1, 2
    else:
        return 0, B
    if P.shape[0] >= 2:
        u, v = rect_in_plane(P, fixed)
        B[s0] = _canon(u)
        B[s1] = _canon(v)
    return 0, B


# ---------------------------------------------------------------------------
# per-kind fits


@njit(cache=True)
def fit_obb_k(P, B, clamp):
    center = np.zeros(3)
    half = np.zeros(3)
    for i in range(3):
        w = B[i]
        lo = np.inf
        hi = -np.inf
        for k in range(P.shape[0]):
            s = P[k, 0] * w[0] + P[k, 1] * w[1] + P[k, 2] * w[2]
            lo = min(lo, s)
            hi = max(hi, s)
        half[i] = max(0.5 * (hi - lo), clamp)
        center += 0.5 * (hi + lo) * w
    return center, half


@njit(cache=True)
def fit_sphere_k(P, c, clamp):
    r2 = 0.0
    for k in range(P.shape[0]):
        d0 = P[k, 0] - c[0]
        d1 = P[k, 1] - c[1]
        d2 = P[k, 2] - c[2]
        r2 = max(r2, d0 * d0 + d1 * d1 + d2 * d2)
    return max(math.sqrt(r2), clamp)


@njit(cache=True)
def _axial_lateral(P, a, c):
    n = P.shape[0]
    t = np.empty(n)
    rho = np.empty(n)
    for k in range(n):
        d0 = P[k, 0] - c[0]
        d1 = P[k, 1] - c[1]
        d2 = P[k, 2] - c[2]
        s = d0 * a[0] + d1 * a[1] + d2 * a[2]
        l0 = d0 - s * a[0]
        l1 = d1 - s * a[1]
        l2 = d2 - s * a[2]
        t[k] = s
        rho[k] = math.sqrt(l0 * l0 + l1 * l1 + l2 * l2)
    return t, rho


@njit(cache=True)
def _clamped_span(lo, hi, clamp):
    if hi - lo < clamp:
        mid = 0.5 * (lo + hi)
        return mid - 0.5 * clamp, mid + 0.5 * clamp
    return lo, hi


@njit(cache=True)
def fit_cylinder_k(P, a, c, clamp):
    t, rho = _axial_lateral(P, a, c)
    r = max(rho.max(), clamp)
    lo, hi = _clamped_span(t.min(), t.max(), clamp)
    return c + lo * a, c + hi * a, r


@njit(cache=True)
def fit_capsule_k(P, a, c, clamp):
    t, rho = _axial_lateral(P, a, c)
    r = max(rho.max(), clamp)
    top = -np.inf
    bot = np.inf
    for k in range(P.shape[0]):
        s = math.sqrt(max(r * r - rho[k] * rho[k], 0.0))
        top = max(top, t[k] - s)
        bot = min(bot, t[k] + s)
    if top < bot:
        mid = 0.5 * (top + bot)
        top = mid
        bot = mid
    return c + bot * a, c + top * a, r


@njit(cache=True)
def _solve_side(r, y, r_opp, bottom):
    # radius the given side needs so the linear profile reaches r at y
    if bottom:
        return (r - r_opp * y) / (1.0 - y)
    return (r - r_opp * (1.0 - y)) / y


@njit(cache=True)
def _fix_side(ys, rs, r_opp, bottom):
    need = 0.0
    for k in range(ys.shape[0]):
        y = ys[k]
        if bottom:
            if 1.0 - y <= 1e-12:
                continue
        elif y <= 1e-12:
            continue
        need = max(need, _solve_side(rs[k], y, r_opp, bottom))
    return need


@njit(cache=True)
def subsume_linear(ys, rs, clamp):
    """Bottom/top half-widths of a linearly tapering profile covering ``rs`` at ``ys``.

    ``ys`` lie in [0, 1]; the width at y is ``bot * (1 - y) + top * y``. A single
    greedy pass tracks one constraint point per side, then each side is refit
    against the other (smaller side first) so every sample is covered.
    """
    bot = 0.0
    top = 0.0
    rs_top = 0.0
    ys_top = 1.0
    rs_bot = 0.0
    ys_bot = 0.0
    for k in range(ys.shape[0]):
        y = ys[k]
        r = rs[k]
        if y <= 0.5:
            nxt = abs(_solve_side(r, y, top, True))
            if nxt > bot:
                rs_bot = r
                ys_bot = y
                bot = nxt
                top = abs(_solve_side(rs_top, ys_top, bot, False))
        else:
            nxt = abs(_solve_side(r, y, bot, False))
            if nxt > top:
                rs_top = r
                ys_top = y
                top = nxt
                bot = abs(_solve_side(rs_bot, ys_bot, top, True))
    fix_top_first = top < bot
    if fix_top_first:
        top = _fix_side(ys, rs, bot, False)
        bot = _fix_side(ys, rs, top, True)
    else:
        bot = _fix_side(ys, rs, top, True)
        top = _fix_side(ys, rs, bot, False)
    return max(bot, clamp), max(top, clamp)


@njit(cache=True)
def fit_frustum_k(P, a, c, clamp):
    t, rho = _axial_lateral(P, a, c)
    lo, hi = _clamped_span(t.min(), t.max(), clamp)
    h = hi - lo
    ys = np.empty(t.shape[0])
    for k in range(t.shape[0]):
        ys[k] = min(max((t[k] - lo) / h, 0.0), 1.0)
    r_bot, r_top = subsume_linear(ys, rho, clamp)
    return c + lo * a, h, r_bot, r_top


@njit(cache=True)
def fit_prism_k(P, ax, ay, az, c, clamp):
    n = P.shape[0]
    hx = 0.0
    hy = 0.0
    sy = np.empty(n)
    zs = np.empty(n)
    for k in range(n):
        d0 = P[k, 0] - c[0]
        d1 = P[k, 1] - c[1]
        d2 = P[k, 2] - c[2]
        hx = max(hx, abs(d0 * ax[0] + d1 * ax[1] + d2 * ax[2]))
        sy[k] = d0 * ay[0] + d1 * ay[1] + d2 * ay[2]
        hy = max(hy, abs(sy[k]))
        zs[k] = abs(d0 * az[0] + d1 * az[1] + d2 * az[2])
    hx = max(hx, clamp)
    hy = max(hy, clamp)
    ys = np.empty(n)
    for k in range(n):
        ys[k] = min(max((sy[k] + hy) / (2.0 * hy), 0.0), 1.0)
    hzb, hzt = subsume_linear(ys, zs, clamp)
    return hx, hy, hzt, hzb


# ---------------------------------------------------------------------------
# volumes


@njit(cache=True)
def volume_k(kind, p):
    if kind == OBB:
        return 8.0 * p[12] * p[13] * p[14]
    if kind == SPHERE:
        return 4.0 / 3.0 * math.pi * p[3] ** 3
    if kind == CAPSULE or kind == CYLINDER:
        d = p[3:6] - p[0:3]
        h = math.sqrt(_dot(d, d))
        r = p[6]
        if kind == CYLINDER:
            return math.pi * r * r * h
        return math.pi * r * r * h + 4.0 / 3.0 * math.pi * r ** 3
    if kind == PRISM:
        return 4.0 * p[12] * p[13] * (p[14] + p[15])
    # frustum
    h = p[6]
    rb = p[7]
    rt = p[8]
    return math.pi * h / 3.0 * (rt * rt + rt * rb + rb * rb)


# ---------------------------------------------------------------------------
# combined selection


@njit(cache=True)
def _better(w, best_w):
    return w < best_w * (1.0 - TIE_RTOL)


@njit(cache=True)
def fit_best(P, B, enabled, weights, clamp):
    """Fit every enabled candidate on basis rows ``B`` and keep the lowest weighted volume.

    Candidates are visited in tie-break order (OBB, sphere, capsules, cylinders,
    prisms, frustum); a later one must beat the incumbent by more than TIE_RTOL.
    Everything is computed in basis coordinates about the OBB center.
    Returns ``(kind, params, volume, weighted_volume)``.
    """
    n = P.shape[0]
    d = np.empty((n, 3))
    lo = np.full(3, np.inf)
    hi = np.full(3, -np.inf)
    for k in range(n):
        for i in range(3):
            s = P[k, 0] * B[i, 0] + P[k, 1] * B[i, 1] + P[k, 2] * B[i, 2]
            d[k, i] = s
            if s < lo[i]:
                lo[i] = s
            if s > hi[i]:
                hi[i] = s
    half = np.empty(3)
    c = np.zeros(3)
    for i in range(3):
        mid = 0.5 * (hi[i] + lo[i])
        half[i] = max(0.5 * (hi[i] - lo[i]), clamp)
        for j in range(3):
            c[j] += mid * B[i, j]
        for k in range(n):
            d[k, i] -= mid

    best = np.zeros(N_PARAMS)
    best_kind = -1
    best_w = np.inf
    best_v = np.inf

    if enabled[OBB]:
        v = 8.0 * half[0] * half[1] * half[2]
        w = weights[OBB] * v
        if _better(w, best_w):
            best_kind, best_w, best_v = OBB, w, v
            best[:] = 0.0
            best[0:3] = c
            for i in range(3):
                for j in range(3):
                    best[3 + 3 * i + j] = B[i, j]
            best[12:15] = half

    if enabled[SPHERE]:
        r2 = 0.0
        for k in range(n):
            r2 = max(r2, d[k, 0] * d[k, 0] + d[k, 1] * d[k, 1] + d[k, 2] * d[k, 2])
        r = max(math.sqrt(r2), clamp)
        v = 4.0 / 3.0 * math.pi * r ** 3
        w = weights[SPHERE] * v
        if _better(w, best_w):
            best_kind, best_w, best_v = SPHERE, w, v
            best[:] = 0.0
            best[0:3] = c
            best[3] = r

    # lateral radius about each axis, shared by capsules, cylinders and the frustum
    rad = np.zeros(3)
    tlo = np.full(3, np.inf)
    thi = np.full(3, -np.inf)
    for k in range(n):
        x = d[k, 0]
        y = d[k, 1]
        z = d[k, 2]
        rad[0] = max(rad[0], y * y + z * z)
        rad[1] = max(rad[1], x * x + z * z)
        rad[2] = max(rad[2], x * x + y * y)
        for i in range(3):
            tlo[i] = min(tlo[i], d[k, i])
            thi[i] = max(thi[i], d[k, i])
    for i in range(3):
        rad[i] = max(math.sqrt(rad[i]), clamp)

    if enabled[CAPSULE]:
        for i in range(3):
            j = (i + 1) % 3
            l = (i + 2) % 3
            r = rad[i]
            top = -np.inf
            bot = np.inf
            for k in range(n):
                rho2 = d[k, j] * d[k, j] + d[k, l] * d[k, l]
                s = math.sqrt(max(r * r - rho2, 0.0))
                top = max(top, d[k, i] - s)
                bot = min(bot, d[k, i] + s)
            if top < bot:
                mid = 0.5 * (top + bot)
                top = mid
                bot = mid
            v = math.pi * r * r * (top - bot) + 4.0 / 3.0 * math.pi * r ** 3
            w = weights[CAPSULE] * v
            if _better(w, best_w):
                best_kind, best_w, best_v = CAPSULE, w, v
                best[:] = 0.0
                for q in range(3):
                    best[q] = c[q] + bot * B[i, q]
                    best[3 + q] = c[q] + top * B[i, q]
                best[6] = r

    cyl_axis = 0
    if enabled[CYLINDER] or enabled[FRUSTUM]:
        cyl_best = np.inf
        for i in range(3):
            t0, t1 = _clamped_span(tlo[i], thi[i], clamp)
            r = rad[i]
            v = math.pi * r * r * (t1 - t0)
            if v < cyl_best * (1.0 - TIE_RTOL):
                cyl_best = v
                cyl_axis = i
            if enabled[CYLINDER]:
                w = weights[CYLINDER] * v
                if _better(w, best_w):
                    best_kind, best_w, best_v = CYLINDER, w, v
                    best[:] = 0.0
                    for q in range(3):
                        best[q] = c[q] + t0 * B[i, q]
                        best[3 + q] = c[q] + t1 * B[i, q]
                    best[6] = r

    ys = np.empty(n)
    zs = np.empty(n)
    if enabled[PRISM]:
        for q in range(6):
            ix = _PERMS[q, 0]
            iy = _PERMS[q, 1]
            iz = _PERMS[q, 2]
            hx = 0.0
            hy = 0.0
            for k in range(n):
                hx = max(hx, abs(d[k, ix]))
                hy = max(hy, abs(d[k, iy]))
            hx = max(hx, clamp)
            hy = max(hy, clamp)
            for k in range(n):
                ys[k] = min(max((d[k, iy] + hy) / (2.0 * hy), 0.0), 1.0)
                zs[k] = abs(d[k, iz])
            hzb, hzt = subsume_linear(ys, zs, clamp)
            v = 4.0 * hx * hy * (hzt + hzb)
            w = weights[PRISM] * v
            if _better(w, best_w):
                best_kind, best_w, best_v = PRISM, w, v
                best[:] = 0.0
                best[0:3] = c
                for j in range(3):
                    best[3 + j] = B[ix, j]
                    best[6 + j] = B[iy, j]
                    best[9 + j] = B[iz, j]
                best[12] = hx
                best[13] = hy
                best[14] = hzt
                best[15] = hzb

    if enabled[FRUSTUM]:
        i = cyl_axis
        j = (i + 1) % 3
        l = (i + 2) % 3
        t0, t1 = _clamped_span(tlo[i], thi[i], clamp)
        h = t1 - t0
        for k in range(n):
            ys[k] = min(max((d[k, i] - t0) / h, 0.0), 1.0)
            zs[k] = math.sqrt(d[k, j] * d[k, j] + d[k, l] * d[k, l])
        rb, rt = subsume_linear(ys, zs, clamp)
        v = math.pi * h / 3.0 * (rt * rt + rt * rb + rb * rb)
        w = weights[FRUSTUM] * v
        if _better(w, best_w):
            best_kind, best_w, best_v = FRUSTUM, w, v
            best[:] = 0.0
            for q in range(3):
                best[q] = c[q] + t0 * B[i, q]
                best[3 + q] = B[i, q]
            best[6] = h
            best[7] = rb
            best[8] = rt

    return best_kind, best, best_v, best_w


@njit(cache=True)
def fit_quadric(Q, P, enabled, weights, clamp):
    """``resolve_basis`` then ``fit_best``; status 1 defers an isotropic ``Q`` to the caller."""
    status, B = resolve_basis(Q, P)
    if status != 0:
        return status, -1, np.zeros(N_PARAMS), np.inf, np.inf
    kind, params, v, w = fit_best(P, B, enabled, weights, clamp)
    return 0, kind, params, v, w


@njit(cache=True)
def gather(V, idx):
    out = np.empty((idx.shape[0], 3))
    for k in range(idx.shape[0]):
        out[k] = V[idx[k]]
    return out


@njit(cache=True)
def union_sorted(a, b):
    """Sorted union of two sorted unique int arrays."""
    out = np.empty(a.shape[0] + b.shape[0], dtype=np.int64)
    i = 0
    j = 0
    k = 0
    while i < a.shape[0] and j < b.shape[0]:
        if a[i] < b[j]:
            out[k] = a[i]
            i += 1
        elif b[j] < a[i]:
            out[k] = b[j]
            j += 1
        else:
            out[k] = a[i]
            i += 1
            j += 1
        k += 1
    while i < a.shape[0]:
        out[k] = a[i]
        i += 1
        k += 1
    while j < b.shape[0]:
        out[k] = b[j]
        j += 1
        k += 1
    return out[:k].copy()


@njit(cache=True)
def fit_pairs(V, offsets, indices, Qs, pairs, enabled, weights, clamp):
    """Fit the union of every listed pair of point groups.

    Groups are CSR slices of sorted vertex ids; ``Qs`` holds one quadric per
    group. Returns status, kind, params, volume and weighted volume per pair.
    """
    m = pairs.shape[0]
    status = np.zeros(m, dtype=np.int64)
    kinds = np.full(m, -1, dtype=np.int64)
    params = np.zeros((m, N_PARAMS))
    vols = np.zeros(m)
    wvols = np.zeros(m)
    for e in range(m):
        a = pairs[e, 0]
        b = pairs[e, 1]
        ia = indices[offsets[a] : offsets[a + 1]]
        ib = indices[offsets[b] : offsets[b + 1]]
        u = union_sorted(ia, ib)
        P = gather(V, u)
        Q = Qs[a] + Qs[b]
        st, k, p, v, w = fit_quadric(Q, P, enabled, weights, clamp)
        status[e] = st
        kinds[e] = k
        params[e] = p
        vols[e] = v
        wvols[e] = w
    return status, kinds, params, vols, wvols


# ---------------------------------------------------------------------------
# containment and local frames


@njit(cache=True)
def contains_k(kind, p, X, tol):
    n = X.shape[0]
    out = np.empty(n, dtype=np.bool_)
    for k in range(n):
        x = X[k]
        if kind == OBB or kind == PRISM:
            d = x - p[0:3]
            s0 = abs(_dot(d, p[3:6]))
            s1 = _dot(d, p[6:9])
            s2 = abs(_dot(d, p[9:12]))
            if kind == OBB:
                out[k] = s0 <= p[12] + tol and abs(s1) <= p[13] + tol and s2 <= p[14] + tol
            else:
                y = min(max((s1 + p[13]) / (2.0 * p[13]), 0.0), 1.0)
                hw = p[15] * (1.0 - y) + p[14] * y
                out[k] = s0 <= p[12] + tol and abs(s1) <= p[13] + tol and s2 <= hw + tol
        elif kind == SPHERE:
            d = x - p[0:3]
            out[k] = math.sqrt(_dot(d, d)) <= p[3] + tol
        elif kind == CAPSULE or kind == CYLINDER:
            a = p[3:6] - p[0:3]
            h = math.sqrt(_dot(a, a))
            d = x - p[0:3]
            if h > 0:
                a = a / h
                t = _dot(d, a)
            else:
                t = 0.0
            if kind == CYLINDER:
                l = d - t * a
                out[k] = t >= -tol and t <= h + tol and math.sqrt(_dot(l, l)) <= p[6] + tol
            else:
                tc = min(max(t, 0.0), h)
                q = d - tc * a if h > 0 else d
                out[k] = math.sqrt(_dot(q, q)) <= p[6] + tol
        else:
            a = p[3:6]
            h = p[6]
            d = x - p[0:3]
            t = _dot(d, a)
            l = d - t * a
            y = min(max(t / h, 0.0), 1.0)
            rr = p[7] * (1.0 - y) + p[8] * y
            out[k] = t >= -tol and t <= h + tol and math.sqrt(_dot(l, l)) <= rr + tol
    return out


@njit(cache=True)
def local_frame(kind, p):
    """Center, axis rows and half sizes of a box that tightly bounds the primitive."""
    R = np.eye(3)
    half = np.zeros(3)
    if kind == OBB or kind == PRISM:
        c = p[0:3].copy()
        R[0] = p[3:6]
        R[1] = p[6:9]
        R[2] = p[9:12]
        half[0] = p[12]
        half[1] = p[13]
        half[2] = p[14] if kind == OBB else max(p[14], p[15])
        return c, R, half
    if kind == SPHERE:
        half[:] = p[3]
        return p[0:3].copy(), R, half
    if kind == CAPSULE or kind == CYLINDER:
        s = p[0:3]
        e = p[3:6]
        d = e - s
        h = math.sqrt(_dot(d, d))
        a = d / h if h > 0 else np.array([0.0, 0.0, 1.0])
        e1, e2 = plane_basis(a)
        R[0] = a
        R[1] = e1
        R[2] = e2
        r = p[6]
        half[0] = 0.5 * h + (r if kind == CAPSULE else 0.0)
        half[1] = r
        half[2] = r
        return 0.5 * (s + e), R, half
    a = p[3:6]
    e1, e2 = plane_basis(a)
    R[0] = a
    R[1] = e1
    R[2] = e2
    rm = max(p[7], p[8])
    half[0] = 0.5 * p[6]
    half[1] = rm
    half[2] = rm
    return p[0:3] + 0.5 * p[6] * a, R, half


@njit(cache=True)
def aabb_k(kind, p):
    c, R, half = local_frame(kind, p)
    ext = np.zeros(3)
    for i in range(3):
        for j in range(3):
            ext[j] += abs(R[i, j]) * half[i]
    return c - ext, c + ext


@njit(cache=True)
def fit_groups(V, offsets, indices, Qs, enabled, weights, clamp):
    """Fit each CSR group of vertex ids on its own quadric."""
    m = offsets.shape[0] - 1
    status = np.zeros(m, dtype=np.int64)
    kinds = np.full(m, -1, dtype=np.int64)
    params = np.zeros((m, N_PARAMS))
    vols = np.zeros(m)
    wvols = np.zeros(m)
    for g in range(m):
        P = gather(V, indices[offsets[g] : offsets[g + 1]])
        st, k, p, v, w = fit_quadric(Qs[g], P, enabled, weights, clamp)
        status[g] = st
        kinds[g] = k
        params[g] = p
        vols[g] = v
        wvols[g] = w
    return status, kinds, params, vols, wvols


@njit(cache=True)
def fit_against(P0, Q0, P, offsets, Qs, enabled, weights, clamp):
    """Fit ``P0`` joined with each CSR slice of ``P`` on the summed quadric."""
    m = offsets.shape[0] - 1
    status = np.zeros(m, dtype=np.int64)
    kinds = np.full(m, -1, dtype=np.int64)
    params = np.zeros((m, N_PARAMS))
    vols = np.zeros(m)
    wvols = np.zeros(m)
    n0 = P0.shape[0]
    for g in range(m):
        lo = offsets[g]
        hi = offsets[g + 1]
        X = np.empty((n0 + hi - lo, 3))
        X[:n0] = P0
        X[n0:] = P[lo:hi]
        st, k, p, v, w = fit_quadric(Q0 + Qs[g], X, enabled, weights, clamp)
        status[g] = st
        kinds[g] = k
        params[g] = p
        vols[g] = v
        wvols[g] = w
    return status, kinds, params, vols, wvols


@njit(cache=True)
def sample_in_frame(center, R, half, u):
    """Map unit-cube samples ``u`` in [0, 1)^3 into the box (center, rows R, half)."""
    n = u.shape[0]
    out = np.empty((n, 3))
    for k in range(n):
        for j in range(3):
            s = center[j]
            for i in range(3):
                s += (2.0 * u[k, i] - 1.0) * half[i] * R[i, j]
            out[k, j] = s
    return out


@njit(cache=True)
def planar_reduce(P, rtol):
    """Hull vertices of ``P`` when it is planar within ``rtol`` of its extent.

    Returns ``(planar, idx)``; ``idx`` lists kept rows in ascending order.
    """
    n = P.shape[0]
    c = np.zeros(3)
    lo = np.full(3, np.inf)
    hi = np.full(3, -np.inf)
    for k in range(n):
        for j in range(3):
            c[j] += P[k, j]
            lo[j] = min(lo[j], P[k, j])
            hi[j] = max(hi[j], P[k, j])
    c /= n
    C = np.zeros((3, 3))
    for k in range(n):
        d = P[k] - c
        for i in range(3):
            for j in range(3):
                C[i, j] += d[i] * d[j]
    span = math.sqrt(((hi - lo) ** 2).sum())
    _, rows = eigh3(C)
    nrm = rows[2]
    dmin = np.inf
    dmax = -np.inf
    for k in range(n):
        s = _dot((P[k] - c), nrm)
        dmin = min(dmin, s)
        dmax = max(dmax, s)
    if dmax - dmin > rtol * span:
        return False, np.arange(n)
    e1, e2 = plane_basis(nrm)
    xy = np.empty((n, 2))
    for k in range(n):
        d = P[k] - c
        xy[k, 0] = _dot(d, e1)
        xy[k, 1] = _dot(d, e2)
    return True, np.sort(hull2d(xy))
