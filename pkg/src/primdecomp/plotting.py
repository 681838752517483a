"""Report figures: the decomposition over its input, and distance histograms."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from mpl_toolkits.mplot3d.art3d import Poly3DCollection  # noqa: E402

from .mesh import IndexedMesh  # noqa: E402
from .primitives import KIND_NAMES, Primitive, quantize  # noqa: E402
from .serialize import KIND_COLORS  # noqa: E402

__all__ = ["decomposition_figure", "distance_figure"]


def _polys(mesh: IndexedMesh) -> list[np.ndarray]:
    return [mesh.vertices[list(f)] for f in mesh.faces]


def _equal_axes(ax, lo, hi):
    c = 0.5 * (lo + hi)
    r = 0.5 * float(np.max(hi - lo)) or 1.0
    ax.set_xlim(c[0] - r, c[0] + r)
    ax.set_ylim(c[1] - r, c[1] + r)
    ax.set_zlim(c[2] - r, c[2] + r)


def decomposition_figure(mesh: IndexedMesh, prims: list[Primitive], path, segments: int = 16, title: str = ""):
    """Input mesh beside the colored primitives, plus a per-kind count bar."""
    fig = plt.figure(figsize=(12, 4.5))
    lo, hi = mesh.bounding_box()
    ax0 = fig.add_subplot(1, 3, 1, projection="3d")
    ax0.add_collection3d(
        Poly3DCollection(_polys(mesh), facecolor=(0.7, 0.7, 0.7), edgecolor=(0.3, 0.3, 0.3), linewidths=0.1)
    )
    ax0.set_title(f"input ({mesh.n_faces} faces)")
    ax1 = fig.add_subplot(1, 3, 2, projection="3d")
    for p in prims:
        q = quantize(p, segments)
        ax1.add_collection3d(
            Poly3DCollection(_polys(q), facecolor=KIND_COLORS[p.kind], edgecolor="k", linewidths=0.1, alpha=0.6)
        )
        plo, phi = q.bounding_box()
        lo, hi = np.minimum(lo, plo), np.maximum(hi, phi)
    ax1.set_title(f"{len(prims)} primitives")
    for ax in (ax0, ax1):
        _equal_axes(ax, lo, hi)
        ax.set_xticks([])
        ax.set_yticks([])
        ax.set_zticks([])
    ax2 = fig.add_subplot(1, 3, 3)
    counts = [sum(p.kind == k for p in prims) for k in KIND_NAMES]
    ax2.bar(KIND_NAMES, counts, color=[KIND_COLORS[k] for k in KIND_NAMES], edgecolor="k")
    ax2.set_ylabel("count")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def distance_figure(distances: np.ndarray, diag: float, path, title: str = ""):
    """Histogram of normalized sample-to-input distances."""
    d = np.asarray(distances) / diag
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(d, bins=60, color=(0.3, 0.5, 0.8))
    ax.axvline(d.mean(), color="k", ls="--", lw=1, label=f"mean {d.mean():.3g}")
    ax.axvline(d.max(), color="r", ls="-", lw=1, label=f"max {d.max():.3g}")
    ax.set_xlabel("distance / bbox diagonal")
    ax.set_ylabel("samples")
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
