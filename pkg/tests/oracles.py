"""Independent reference computations the tests check against.

Everything here deliberately avoids the library's solver paths: dense
matrices are assembled column by column and solved directly, nearest
seeds are found by exhaustive scan, and the reference triangulation
comes from scipy's Qhull wrapper.
"""

import numpy as np
from scipy.spatial import ConvexHull, Delaunay

from sparsepaint import kernels
from sparsepaint.grid import Image, Mask


def dense_system_matrix(mask: Mask) -> np.ndarray:
    """Dense inpainting system matrix assembled via unit vectors."""
    h, w = mask.height, mask.width
    n = h * w
    a = np.zeros((n, n))
    e = np.zeros((1, h, w))
    for j in range(n):
        e.ravel()[j] = 1.0
        a[:, j] = kernels.inpaint_matvec(e, mask.indicator, 1.0).ravel()
        e.ravel()[j] = 0.0
    return a


def dense_sym_matrix(mask: Mask) -> np.ndarray:
    h, w = mask.height, mask.width
    n = h * w
    a = np.zeros((n, n))
    e = np.zeros((1, h, w))
    for j in range(n):
        e.ravel()[j] = 1.0
        a[:, j] = kernels.sym_matvec(e, mask.indicator, 1.0).ravel()
        e.ravel()[j] = 0.0
    return a


def dense_inpaint(f: Image, mask: Mask) -> Image:
    """Direct dense solve of the stored-value interpolation system."""
    a = dense_system_matrix(mask)
    out = np.zeros_like(f.data, dtype=np.float64)
    mflat = mask.indicator.ravel().astype(bool)
    for ch in range(f.channels):
        b = np.where(mflat, f.data[ch].ravel().astype(np.float64), 0.0)
        out[ch] = np.linalg.solve(a, b).reshape(f.height, f.width)
    return Image(out)


def brute_force_labels(mask: Mask):
    """Exhaustive nearest-seed scan; ties go to the lower seed index."""
    ys, xs = np.nonzero(mask.indicator)
    seeds = np.stack([ys, xs], axis=1).astype(np.int64)
    yy, xx = np.mgrid[0:mask.height, 0:mask.width]
    d2 = ((yy[..., None] - seeds[:, 0]) ** 2
          + (xx[..., None] - seeds[:, 1]) ** 2)
    return np.argmin(d2, axis=-1).astype(np.int32), d2.min(axis=-1)


def reference_delaunay_edges(points: np.ndarray):
    """Edge set of the Qhull Delaunay triangulation of the seed points
    (points given as (m, 2) rows of (y, x))."""
    tri = Delaunay(points[:, ::-1].astype(np.float64))
    edges = set()
    for simplex in tri.simplices:
        for i in range(3):
            a, b = int(simplex[i]), int(simplex[(i + 1) % 3])
            edges.add((min(a, b), max(a, b)))
    return edges


def hull_vertex_count(points: np.ndarray) -> int:
    return len(ConvexHull(points[:, ::-1].astype(np.float64)).vertices)


def circumcircle_margin(points, a, b, c) -> float:
    """Smallest signed distance from any other point to the circumcircle
    of (a, b, c); positive when the circle is empty."""
    p = points[:, ::-1].astype(np.float64)
    ax, ay = p[a]
    bx, by = p[b]
    cx, cy = p[c]
    d = 2 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    if abs(d) < 1e-12:
        return -np.inf
    ux = ((ax ** 2 + ay ** 2) * (by - cy) + (bx ** 2 + by ** 2) * (cy - ay)
          + (cx ** 2 + cy ** 2) * (ay - by)) / d
    uy = ((ax ** 2 + ay ** 2) * (cx - bx) + (bx ** 2 + by ** 2) * (ax - cx)
          + (cx ** 2 + cy ** 2) * (bx - ax)) / d
    r = np.hypot(ax - ux, ay - uy)
    others = np.ones(len(p), dtype=bool)
    others[[a, b, c]] = False
    if not np.any(others):
        return np.inf
    dist = np.hypot(p[others, 0] - ux, p[others, 1] - uy)
    return float(dist.min() - r)


def random_instance(rng, size, density, channels=1, lo=0.0, hi=255.0):
    """Random image and mask with at least one stored pixel."""
    f = Image(rng.uniform(lo, hi, (channels, size, size)))
    m = rng.random((size, size)) < density
    if not m.any():
        m.ravel()[rng.integers(0, size * size)] = True
    return f, Mask(m)


def reference_visible_triangle_count(points, height, width) -> int:
    """Qhull Delaunay triangles whose circumcenter falls inside the
    image rectangle; the remainder cannot produce a cell corner in a
    tessellation clipped to the image."""
    p = points[:, ::-1].astype(np.float64)
    tri = Delaunay(p)
    count = 0
    for s in tri.simplices:
        (ax, ay), (bx, by), (cx, cy) = p[s[0]], p[s[1]], p[s[2]]
        d = 2 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
        if abs(d) < 1e-12:
            continue
        ux = ((ax ** 2 + ay ** 2) * (by - cy) + (bx ** 2 + by ** 2)
              * (cy - ay) + (cx ** 2 + cy ** 2) * (ay - by)) / d
        uy = ((ax ** 2 + ay ** 2) * (cx - bx) + (bx ** 2 + by ** 2)
              * (ax - cx) + (cx ** 2 + cy ** 2) * (bx - ax)) / d
        if -0.5 <= ux <= width - 0.5 and -0.5 <= uy <= height - 0.5:
            count += 1
    return count
