"""Discrete geometry over the stored-pixel set.

Jump flooding labels every pixel with (approximately) its nearest
stored pixel; the dual triangulation is read off the label map by
scanning 2x2 corners where three or more cells meet. Triangle error
buckets drive the densification, per-cell weights drive the tonal
initialization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .grid import Mask


@dataclass
class VoronoiLabels:
    """Per-pixel index of the nearest stored pixel plus the seed list."""

    labels: np.ndarray        # (H, W) int32
    seeds: np.ndarray         # (m, 2) int32 rows of (y, x), row-major order
    max_radius: float = 0.0   # largest pixel-to-seed distance observed

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def nseeds(self) -> int:
        return self.seeds.shape[0]


@dataclass
class DelaunayMesh:
    """Triangulation dual to the label map.

    ``triangles`` are index triples into ``vertices`` (ascending within
    each triple, lexicographically sorted overall); ``edges`` are the
    label-adjacency pairs. ``degenerate`` flags meshes with no triangle
    (fewer than three seeds, or collinear seeds).
    """

    vertices: np.ndarray           # (m, 2) int32 rows of (y, x)
    triangles: np.ndarray          # (T, 3) int32
    edges: np.ndarray              # (E, 2) int32
    degenerate: bool = False

    @property
    def ntriangles(self) -> int:
        return self.triangles.shape[0]


@dataclass
class CellErrors:
    """Aggregated error per triangle with the per-triangle peak pixel."""

    sums: np.ndarray        # (T,) float64
    argmax_flat: np.ndarray  # (T,) int64 row-major pixel index, -1 if empty
    argmax_val: np.ndarray  # (T,) float64
    unassigned: float = 0.0  # error mass left over when no triangle exists

    @property
    def total(self) -> float:
        return float(self.sums.sum()) + self.unassigned


def _steps_for(max_dim: int, start_hint: float | None) -> np.ndarray:
    if start_hint is not None and start_hint >= 1:
        start = 1 << max(0, math.ceil(math.log2(max(1.0, start_hint))))
        start = min(start, max(1, max_dim // 2))
    elif max_dim >= 2:
        start = 1 << (math.ceil(math.log2(max_dim)) - 1)
    else:
        start = 1
    steps = [1]  # extra unit step ahead of the halving sequence
    s = start
    while s >= 1:
        steps.append(s)
        s //= 2
    return np.array(steps, dtype=np.int64)


def jump_flood_voronoi(mask: Mask, start_hint: float | None = None) -> VoronoiLabels:
    """Label every pixel with its (approximate) nearest stored pixel.

    ``start_hint`` bounds the largest seed-to-pixel distance; when the
    previous mask of a densification pass is known, its cell radius
    shrinks the step schedule.
    """
    ys, xs = np.nonzero(mask.indicator)
    if ys.size == 0:
        raise ValueError("mask has no stored pixels to seed from")
    seeds = np.stack([ys, xs], axis=1).astype(np.int64)
    h, w = mask.height, mask.width
    labels = np.full((h, w), -1, dtype=np.int32)
    labels[ys, xs] = np.arange(ys.size, dtype=np.int32)
    steps = _steps_for(max(h, w), start_hint)
    labels = kernels.jfa_run(labels, seeds, steps)
    d2 = kernels.jfa_dist2(labels, seeds)
    return VoronoiLabels(labels=labels, seeds=seeds.astype(np.int32),
                         max_radius=float(math.sqrt(float(d2.max()))))


def delaunay_from_voronoi(labels: VoronoiLabels) -> DelaunayMesh:
    """Extract the dual triangulation from the label map.

    Edges connect seeds whose cells touch 4-adjacently. Every 2x2 pixel
    corner where three distinct cells meet emits a triangle; a corner
    meeting four cells splits along the lexicographically smallest
    diagonal, which fixes the cocircular tie deterministically.
    """
    lab = labels.labels
    h, w = lab.shape
    m = labels.nseeds

    pairs = []
    a = lab[:, :-1].ravel()
    b = lab[:, 1:].ravel()
    keep = a != b
    pairs.append(np.stack([np.minimum(a[keep], b[keep]),
                           np.maximum(a[keep], b[keep])], axis=1))
    a = lab[:-1, :].ravel()
    b = lab[1:, :].ravel()
    keep = a != b
    pairs.append(np.stack([np.minimum(a[keep], b[keep]),
                           np.maximum(a[keep], b[keep])], axis=1))
    allp = np.concatenate(pairs, axis=0)
    edges = (np.unique(allp, axis=0) if allp.size
             else np.zeros((0, 2), dtype=np.int64))

    parts = []
    if h >= 2 and w >= 2 and m >= 3:
        tl = lab[:-1, :-1].ravel()
        tr = lab[:-1, 1:].ravel()
        bl = lab[1:, :-1].ravel()
        br = lab[1:, 1:].ravel()
        stack = np.stack([tl, tr, bl, br], axis=1)
        srt = np.sort(stack, axis=1)
        dup = srt[:, 1:] == srt[:, :-1]
        ndist = 4 - np.sum(dup, axis=1)

        three = ndist == 3
        if np.any(three):
            s = srt[three]
            d = dup[three]
            # exactly one duplicated neighbor pair; drop one of the twins
            t0 = s[:, 0]
            t1 = np.where(d[:, 0], s[:, 2], s[:, 1])
            t2 = np.where(d[:, 2], s[:, 2], s[:, 3])
            parts.append(np.stack([t0, t1, t2], axis=1))

        four = ndist == 4
        if np.any(four):
            a, b2, c, d4 = (tl[four], tr[four], bl[four], br[four])
            d1lo = np.minimum(a, d4)
            d1hi = np.maximum(a, d4)
            d2lo = np.minimum(b2, c)
            d2hi = np.maximum(b2, c)
            use1 = (d1lo < d2lo) | ((d1lo == d2lo) & (d1hi <= d2hi))
            t_a = np.where(use1[:, None],
                           np.stack([a, b2, d4], axis=1),
                           np.stack([a, b2, c], axis=1))
            t_b = np.where(use1[:, None],
                           np.stack([a, c, d4], axis=1),
                           np.stack([b2, c, d4], axis=1))
            parts.append(np.sort(t_a, axis=1))
            parts.append(np.sort(t_b, axis=1))
    if parts:
        tri_arr = np.unique(np.concatenate(parts, axis=0),
                            axis=0).astype(np.int32)
    else:
        tri_arr = np.zeros((0, 3), dtype=np.int32)
    return DelaunayMesh(vertices=labels.seeds.copy(),
                        triangles=tri_arr,
                        edges=edges.astype(np.int32),
                        degenerate=tri_arr.shape[0] == 0)


def _seed_min_triangle(mesh: DelaunayMesh, nseeds: int) -> np.ndarray:
    out = np.full(nseeds, -1, dtype=np.int32)
    for t in range(mesh.ntriangles):
        for v in mesh.triangles[t]:
            if out[v] < 0:
                out[v] = t
    return out


def accumulate_errors(mesh: DelaunayMesh, error_map: np.ndarray,
                      labels: VoronoiLabels) -> CellErrors:
    """Bucket a nonnegative per-pixel error map by triangle.

    Each pixel lands in exactly one bucket: the lowest-index triangle
    containing it (inclusive edges), or, outside the hull, the lowest
    triangle incident to its cell seed. Sums therefore partition the
    total error exactly.
    """
    err = np.asarray(error_map, dtype=np.float64)
    if err.ndim != 2:
        raise ValueError("error map must be a single (H, W) plane")
    if np.any(err < 0):
        raise ValueError("error map must be nonnegative")
    if mesh.ntriangles == 0:
        return CellErrors(sums=np.zeros(0), argmax_flat=np.zeros(0, np.int64),
                          argmax_val=np.zeros(0), unassigned=float(err.sum()))
    h, w = err.shape
    vy = np.ascontiguousarray(mesh.vertices[:, 0].astype(np.int64))
    vx = np.ascontiguousarray(mesh.vertices[:, 1].astype(np.int64))
    tris = np.ascontiguousarray(mesh.triangles.astype(np.int64))
    assign = kernels.assign_triangles(tris, vy, vx, h, w)
    smt = _seed_min_triangle(mesh, labels.nseeds).astype(np.int32)
    assign = kernels.fallback_assign(assign, labels.labels, smt)
    sums, amax_idx, amax_val = kernels.reduce_cells(assign, err,
                                                    mesh.ntriangles)
    return CellErrors(sums=sums, argmax_flat=amax_idx, argmax_val=amax_val)


def voronoi_cell_errors(labels: VoronoiLabels, error_map: np.ndarray):
    """Per-Voronoi-cell error sums and argmax pixels (densification
    variant that buckets by cell instead of by triangle)."""
    err = np.asarray(error_map, dtype=np.float64)
    h, w = err.shape
    flat_lab = labels.labels.ravel().astype(np.int64)
    flat_err = err.ravel()
    m = labels.nseeds
    sums = np.bincount(flat_lab, weights=flat_err, minlength=m)
    idx = np.arange(flat_lab.size)
    order = np.lexsort((idx, -flat_err, flat_lab))
    first = np.ones(order.size, dtype=bool)
    first[1:] = flat_lab[order[1:]] != flat_lab[order[:-1]]
    amax_idx = np.full(m, -1, dtype=np.int64)
    amax_val = np.full(m, -1.0, dtype=np.float64)
    lead = order[first]
    amax_idx[flat_lab[lead]] = lead
    amax_val[flat_lab[lead]] = flat_err[lead]
    return sums, amax_idx, amax_val


def voronoi_weights(labels: VoronoiLabels, scheme: str = "inverse-log") -> np.ndarray:
    """Per-pixel weight toward the pixel's seed; sums to 1 within each cell.

    ``constant`` weighs every cell member equally; ``inverse-log``
    applies 1/ln(2 + d) so far-away pixels count less (the +2 keeps the
    seed's own d=0 term finite and maximal).
    """
    lab = labels.labels.astype(np.int64)
    m = labels.nseeds
    if scheme == "constant":
        raw = np.ones(lab.size, dtype=np.float64)
    elif scheme in ("inverse-log", "inverse-log-distance"):
        d2 = kernels.jfa_dist2(labels.labels, labels.seeds.astype(np.int64))
        raw = 1.0 / np.log(2.0 + np.sqrt(d2.ravel().astype(np.float64)))
    else:
        raise ValueError("scheme must be 'constant' or 'inverse-log'")
    cell_tot = np.bincount(lab.ravel(), weights=raw, minlength=m)
    return (raw / cell_tot[lab.ravel()]).reshape(lab.shape)


def cell_weighted_average(labels: VoronoiLabels, weights: np.ndarray,
                          plane: np.ndarray) -> np.ndarray:
    """Weighted average of ``plane`` over each cell; returns (m,) values."""
    lab = labels.labels.ravel().astype(np.int64)
    return np.bincount(lab, weights=(weights * plane).ravel(),
                       minlength=labels.nseeds)


def export_labels_ppm(labels: VoronoiLabels, path):
    """Debug dump: color each cell by a deterministic palette."""
    from .grid import Image
    from .pnm import write_image
    lab = labels.labels.astype(np.int64)
    r = (lab * 131 + 89) % 256
    g = (lab * 197 + 53) % 256
    b = (lab * 233 + 17) % 256
    write_image(path, Image(np.stack([r, g, b]).astype(np.float64)))


def export_mesh_text(mesh: DelaunayMesh, path):
    """Debug dump: one vertex / edge / triangle per line."""
    with open(path, "w") as fh:
        for y, x in mesh.vertices:
            fh.write(f"v {x} {y}\n")
        for a, b in mesh.edges:
            fh.write(f"e {a} {b}\n")
        for a, b, c in mesh.triangles:
            fh.write(f"t {a} {b} {c}\n")
