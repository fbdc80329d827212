"""Pure-numpy implementations of the hot kernels.

Reference backend: every function here has a numba twin in
``numba_impl`` with identical semantics. Arrays are (channels, H, W)
for pixel data and (H, W) uint8 for masks. Reductions accumulate in
float64 with a fixed order so results are reproducible run to run.
"""

import numpy as np


def _neighbor_degree(h, w):
    # number of in-grid 4-neighbors per pixel (4 interior, 3 edge, 2 corner)
    deg = np.full((h, w), 4.0)
    deg[0, :] -= 1.0
    deg[-1, :] -= 1.0
    deg[:, 0] -= 1.0
    deg[:, -1] -= 1.0
    return deg


def _shift_sum(x):
    # sum of the four 4-neighbor values, zero where the neighbor falls
    # outside the grid (out-of-grid neighbors never enter the stencil sums)
    acc = np.zeros_like(x)
    acc[:, 1:, :] += x[:, :-1, :]
    acc[:, :-1, :] += x[:, 1:, :]
    acc[:, :, 1:] += x[:, :, :-1]
    acc[:, :, :-1] += x[:, :, 1:]
    return acc


def negated_laplacian(x, inv_h2):
    """Five-point negated Laplacian with reflecting boundaries, L x."""
    deg = _neighbor_degree(x.shape[1], x.shape[2]).astype(x.dtype)
    return (deg[None] * x - _shift_sum(x)) * x.dtype.type(inv_h2)


def inpaint_matvec(x, mask, inv_h2):
    """A x with A = C + (I-C) L."""
    lap = negated_laplacian(x, inv_h2)
    m = mask.astype(bool)
    return np.where(m[None], x, lap)


def sym_matvec(x, mask, inv_h2):
    """Symmetrized product (C + (I-C) L (I-C)) x."""
    m = mask.astype(bool)
    xt = np.where(m[None], 0, x)
    deg = _neighbor_degree(x.shape[1], x.shape[2]).astype(x.dtype)
    lap = (deg[None] * xt - _shift_sum(xt)) * x.dtype.type(inv_h2)
    return np.where(m[None], x, lap)


def sym_rhs(b, mask, inv_h2):
    """Transform raw right-hand side b of A x = b into (C - (I-C) L C) form."""
    m = mask.astype(bool)
    bm = np.where(m[None], b, 0)
    acc = _shift_sum(bm) * b.dtype.type(inv_h2)
    return np.where(m[None], b, b + acc)


def ct_apply(w, mask, inv_h2):
    """Transposed modified-mask product (C - C L (I-C)) w."""
    m = mask.astype(bool)
    wn = np.where(m[None], 0, w)
    acc = _shift_sum(wn) * w.dtype.type(inv_h2)
    return np.where(m[None], w + acc, 0)


def sym_residual(u, bsym, mask, inv_h2):
    """Residual of the symmetrized system and per-channel squared norms."""
    r = bsym - sym_matvec(u, mask, inv_h2)
    norms = np.array(
        [np.dot(rc.ravel().astype(np.float64), rc.ravel().astype(np.float64))
         for rc in r], dtype=np.float64)
    return r, norms


def _local_matvec(p, mask_loc, diag, inv_h2):
    acc = np.zeros_like(p)
    pt = np.where(mask_loc, 0, p)
    acc[1:, :] += pt[:-1, :]
    acc[:-1, :] += pt[1:, :]
    acc[:, 1:] += pt[:, :-1]
    acc[:, :-1] += pt[:, 1:]
    return np.where(mask_loc, p, (diag * p - acc) * p.dtype.type(inv_h2))


def _block_diag(mask, y0, x0, bh, bw, gamma, h_img, w_img):
    # diagonal of the Robin-closed local negated Laplacian: each in-block
    # neighbor adds 1, each inner-boundary neighbor adds (1 - gamma),
    # image-boundary neighbors add nothing (reflection)
    diag = np.zeros((bh, bw))
    ys = np.arange(y0, y0 + bh)[:, None]
    xs = np.arange(x0, x0 + bw)[None, :]
    for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        ny = ys + dy
        nx = xs + dx
        in_img = (ny >= 0) & (ny < h_img) & (nx >= 0) & (nx < w_img)
        in_blk = (ny >= y0) & (ny < y0 + bh) & (nx >= x0) & (nx < x0 + bw)
        diag += np.where(in_img & in_blk, 1.0, 0.0)
        diag += np.where(in_img & ~in_blk, 1.0 - gamma, 0.0)
    return diag


def oras_apply(u, r, mask, xs, ys, bh, bw, gamma, taus, cap, weights, inv_h2):
    """One ORAS sweep: independent Robin-closed block CG solves on the
    restricted residual, then deterministic weighted accumulation into u."""
    channels = u.shape[0]
    h_img, w_img = mask.shape
    nbx = xs.size
    nby = ys.size
    corr = np.zeros((nby * nbx, channels, bh, bw), dtype=u.dtype)
    for bi in range(nby * nbx):
        y0 = int(ys[bi // nbx])
        x0 = int(xs[bi % nbx])
        mask_loc = mask[y0:y0 + bh, x0:x0 + bw].astype(bool)
        diag = _block_diag(mask, y0, x0, bh, bw, gamma, h_img, w_img)
        diag = diag.astype(u.dtype)
        for ch in range(channels):
            res = r[ch, y0:y0 + bh, x0:x0 + bw].copy()
            v = np.zeros((bh, bw), dtype=u.dtype)
            p = res.copy()
            rs = float(np.dot(res.ravel().astype(np.float64),
                              res.ravel().astype(np.float64)))
            tau = float(taus[ch])
            it = 0
            while rs > tau and it < cap:
                ap = _local_matvec(p, mask_loc, diag, inv_h2)
                pap = float(np.dot(p.ravel().astype(np.float64),
                                   ap.ravel().astype(np.float64)))
                if pap <= 0.0:
                    break
                alpha = rs / pap
                v += u.dtype.type(alpha) * p
                res -= u.dtype.type(alpha) * ap
                rs_new = float(np.dot(res.ravel().astype(np.float64),
                                      res.ravel().astype(np.float64)))
                beta = rs_new / rs
                rs = rs_new
                p = res + u.dtype.type(beta) * p
                it += 1
            corr[bi, ch] = v
    for bi in range(nby * nbx):
        y0 = int(ys[bi // nbx])
        x0 = int(xs[bi % nbx])
        w_blk = weights[bi].astype(u.dtype)
        for ch in range(channels):
            u[ch, y0:y0 + bh, x0:x0 + bw] += w_blk * corr[bi, ch]


def restrict_values(fine):
    """Box-average each 2x2 fine block into one coarse pixel (odd tails
    average over the remaining 1- or 2-wide strip)."""
    c, h, w = fine.shape
    ch = (h + 1) // 2
    cw = (w + 1) // 2
    out = np.zeros((c, ch, cw), dtype=fine.dtype)
    cnt = np.zeros((ch, cw), dtype=fine.dtype)
    for dy in (0, 1):
        for dx in (0, 1):
            part = fine[:, dy::2, dx::2]
            out[:, :part.shape[1], :part.shape[2]] += part
            cnt[:part.shape[1], :part.shape[2]] += 1
    return out / cnt[None]


def restrict_mask(mask, values):
    """Coarse mask = OR over each 2x2 block, coarse value = mean of the
    covered fine mask-pixel values."""
    h, w = mask.shape
    ch = (h + 1) // 2
    cw = (w + 1) // 2
    c = values.shape[0]
    cmask = np.zeros((ch, cw), dtype=np.uint8)
    acc = np.zeros((c, ch, cw), dtype=np.float64)
    cnt = np.zeros((ch, cw), dtype=np.float64)
    for dy in (0, 1):
        for dx in (0, 1):
            m = mask[dy::2, dx::2].astype(bool)
            ph, pw = m.shape
            cmask[:ph, :pw] |= m.astype(np.uint8)
            cnt[:ph, :pw] += m
            acc[:, :ph, :pw] += np.where(m[None], values[:, dy::2, dx::2], 0)
    cvals = np.zeros((c, ch, cw), dtype=values.dtype)
    nz = cnt > 0
    cvals[:, nz] = (acc[:, nz] / cnt[nz]).astype(values.dtype)
    return cmask, cvals


def prolongate(coarse, h, w):
    """Bilinear interpolation from the coarse cell-centered grid onto the
    fine grid; exact on constants."""
    c, chh, cww = coarse.shape
    fy = (np.arange(h) + 0.5) / 2.0 - 0.5
    fx = (np.arange(w) + 0.5) / 2.0 - 0.5
    y0 = np.clip(np.floor(fy).astype(np.int64), 0, chh - 1)
    x0 = np.clip(np.floor(fx).astype(np.int64), 0, cww - 1)
    y1 = np.minimum(y0 + 1, chh - 1)
    x1 = np.minimum(x0 + 1, cww - 1)
    wy = (fy - y0).astype(coarse.dtype)
    wx = (fx - x0).astype(coarse.dtype)
    wy = np.clip(wy, 0, 1)[None, :, None]
    wx = np.clip(wx, 0, 1)[None, None, :]
    v00 = coarse[:, y0][:, :, x0]
    v01 = coarse[:, y0][:, :, x1]
    v10 = coarse[:, y1][:, :, x0]
    v11 = coarse[:, y1][:, :, x1]
    one = coarse.dtype.type(1)
    return ((one - wy) * ((one - wx) * v00 + wx * v01)
            + wy * ((one - wx) * v10 + wx * v11))


def jfa_run(labels, seeds, steps):
    """Jump-flood nearest-seed propagation over the given step sequence."""
    h, w = labels.shape
    cur = labels.copy()
    py, px = np.mgrid[0:h, 0:w]
    sy = seeds[:, 0].astype(np.int64)
    sx = seeds[:, 1].astype(np.int64)

    def dist2_of(lab):
        d = np.full((h, w), np.iinfo(np.int64).max, dtype=np.int64)
        has = lab >= 0
        ly = sy[lab[has]]
        lx = sx[lab[has]]
        d[has] = (py[has] - ly) ** 2 + (px[has] - lx) ** 2
        return d

    for step in steps:
        best = cur.copy()
        bd = dist2_of(cur)
        for dy in (-step, 0, step):
            for dx in (-step, 0, step):
                if dy == 0 and dx == 0:
                    continue
                cand = np.full((h, w), -1, dtype=cur.dtype)
                ys0 = max(0, dy)
                ys1 = h + min(0, dy)
                xs0 = max(0, dx)
                xs1 = w + min(0, dx)
                cand[ys0:ys1, xs0:xs1] = cur[ys0 - dy:ys1 - dy,
                                             xs0 - dx:xs1 - dx]
                has = cand >= 0
                cd = np.full((h, w), np.iinfo(np.int64).max, dtype=np.int64)
                cy = sy[cand[has]]
                cx = sx[cand[has]]
                cd[has] = (py[has] - cy) ** 2 + (px[has] - cx) ** 2
                better = cd < bd
                tie = (cd == bd) & has & (best >= 0) & (cand < best)
                upd = better | tie
                best[upd] = cand[upd]
                bd[upd] = cd[upd]
        cur = best
    return cur


def jfa_dist2(labels, seeds):
    """Squared distance from every pixel to its labeled seed."""
    h, w = labels.shape
    py, px = np.mgrid[0:h, 0:w]
    ly = seeds[labels.ravel(), 0].reshape(h, w).astype(np.int64)
    lx = seeds[labels.ravel(), 1].reshape(h, w).astype(np.int64)
    return (py - ly) ** 2 + (px - lx) ** 2


def fs_dither(dens):
    """Serpentine Floyd-Steinberg error diffusion, threshold 0.5."""
    h, w = dens.shape
    buf = dens.astype(np.float64).copy()
    out = np.zeros((h, w), dtype=np.uint8)
    for y in range(h):
        rng = range(w) if y % 2 == 0 else range(w - 1, -1, -1)
        sgn = 1 if y % 2 == 0 else -1
        for x in rng:
            val = buf[y, x]
            bit = 1 if val >= 0.5 else 0
            out[y, x] = bit
            err = val - bit
            xn = x + sgn
            if 0 <= xn < w:
                buf[y, xn] += err * (7.0 / 16.0)
            if y + 1 < h:
                xb = x - sgn
                if 0 <= xb < w:
                    buf[y + 1, xb] += err * (3.0 / 16.0)
                buf[y + 1, x] += err * (5.0 / 16.0)
                if 0 <= xn < w:
                    buf[y + 1, xn] += err * (1.0 / 16.0)
    return out


def assign_triangles(tris, vy, vx, h, w):
    """Rasterize triangles onto the pixel grid; inclusive edges, lowest
    triangle index wins contested pixels."""
    assign = np.full((h, w), -1, dtype=np.int32)
    py, px = np.mgrid[0:h, 0:w]
    for t in range(tris.shape[0]):
        ay, ax = int(vy[tris[t, 0]]), int(vx[tris[t, 0]])
        by, bx = int(vy[tris[t, 1]]), int(vx[tris[t, 1]])
        cy, cx = int(vy[tris[t, 2]]), int(vx[tris[t, 2]])
        ylo = max(0, min(ay, by, cy))
        yhi = min(h - 1, max(ay, by, cy))
        xlo = max(0, min(ax, bx, cx))
        xhi = min(w - 1, max(ax, bx, cx))
        if ylo > yhi or xlo > xhi:
            continue
        sy = py[ylo:yhi + 1, xlo:xhi + 1]
        sx = px[ylo:yhi + 1, xlo:xhi + 1]
        e0 = (bx - ax) * (sy - ay) - (by - ay) * (sx - ax)
        e1 = (cx - bx) * (sy - by) - (cy - by) * (sx - bx)
        e2 = (ax - cx) * (sy - cy) - (ay - cy) * (sx - cx)
        inside = ((e0 >= 0) & (e1 >= 0) & (e2 >= 0)) | \
                 ((e0 <= 0) & (e1 <= 0) & (e2 <= 0))
        sub = assign[ylo:yhi + 1, xlo:xhi + 1]
        sub[inside & (sub < 0)] = t
    return assign


def fallback_assign(assign, labels, seed_min_tri):
    """Assign hull-exterior pixels to the lowest triangle incident to
    their Voronoi seed."""
    out = assign.copy()
    miss = out < 0
    if np.any(miss):
        t = seed_min_tri[labels[miss]]
        out[miss] = np.where(t >= 0, t, 0)
    return out


def reduce_cells(assign, err, ntris):
    """Per-triangle error sums and argmax pixel (row-major first wins)."""
    flat_a = assign.ravel()
    flat_e = err.ravel().astype(np.float64)
    sums = np.bincount(flat_a, weights=flat_e, minlength=ntris)
    # sort by (triangle, -error, pixel index): the first row per triangle
    # is its argmax with row-major tie-breaking
    idx = np.arange(flat_a.size)
    order = np.lexsort((idx, -flat_e, flat_a))
    first = np.ones(order.size, dtype=bool)
    first[1:] = flat_a[order[1:]] != flat_a[order[:-1]]
    amax_idx = np.full(ntris, -1, dtype=np.int64)
    amax_val = np.full(ntris, -1.0, dtype=np.float64)
    lead = order[first]
    amax_idx[flat_a[lead]] = lead
    amax_val[flat_a[lead]] = flat_e[lead]
    return sums, amax_idx, amax_val
