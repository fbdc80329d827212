"""Numba-compiled twins of the numpy kernels.

Same signatures and semantics as ``numpy_impl``; hot loops are explicit
and parallel where safe. Every parallel region writes disjoint memory
and all floating reductions run in a fixed order, so results are
bit-identical across runs and thread counts (within this backend).
"""

import numpy as np
from numba import njit, prange


@njit(cache=True, parallel=True)
def negated_laplacian(x, inv_h2):
    c, h, w = x.shape
    out = np.empty_like(x)
    for y in prange(h):
        for ch in range(c):
            for xx in range(w):
                v = x[ch, y, xx]
                diag = 0.0
                acc = 0.0
                if y > 0:
                    diag += 1.0
                    acc += x[ch, y - 1, xx]
                if y < h - 1:
                    diag += 1.0
                    acc += x[ch, y + 1, xx]
                if xx > 0:
                    diag += 1.0
                    acc += x[ch, y, xx - 1]
                if xx < w - 1:
                    diag += 1.0
                    acc += x[ch, y, xx + 1]
                out[ch, y, xx] = (diag * v - acc) * inv_h2
    return out


@njit(cache=True, parallel=True)
def inpaint_matvec(x, mask, inv_h2):
    c, h, w = x.shape
    out = np.empty_like(x)
    for y in prange(h):
        for ch in range(c):
            for xx in range(w):
                if mask[y, xx]:
                    out[ch, y, xx] = x[ch, y, xx]
                else:
                    v = x[ch, y, xx]
                    diag = 0.0
                    acc = 0.0
                    if y > 0:
                        diag += 1.0
                        acc += x[ch, y - 1, xx]
                    if y < h - 1:
                        diag += 1.0
                        acc += x[ch, y + 1, xx]
                    if xx > 0:
                        diag += 1.0
                        acc += x[ch, y, xx - 1]
                    if xx < w - 1:
                        diag += 1.0
                        acc += x[ch, y, xx + 1]
                    out[ch, y, xx] = (diag * v - acc) * inv_h2
    return out


@njit(cache=True, parallel=True)
def sym_matvec(x, mask, inv_h2):
    c, h, w = x.shape
    out = np.empty_like(x)
    for y in prange(h):
        for ch in range(c):
            for xx in range(w):
                if mask[y, xx]:
                    out[ch, y, xx] = x[ch, y, xx]
                else:
                    v = x[ch, y, xx]
                    diag = 0.0
                    acc = 0.0
                    if y > 0:
                        diag += 1.0
                        if not mask[y - 1, xx]:
                            acc += x[ch, y - 1, xx]
                    if y < h - 1:
                        diag += 1.0
                        if not mask[y + 1, xx]:
                            acc += x[ch, y + 1, xx]
                    if xx > 0:
                        diag += 1.0
                        if not mask[y, xx - 1]:
                            acc += x[ch, y, xx - 1]
                    if xx < w - 1:
                        diag += 1.0
                        if not mask[y, xx + 1]:
                            acc += x[ch, y, xx + 1]
                    out[ch, y, xx] = (diag * v - acc) * inv_h2
    return out


@njit(cache=True, parallel=True)
def sym_rhs(b, mask, inv_h2):
    c, h, w = b.shape
    out = np.empty_like(b)
    for y in prange(h):
        for ch in range(c):
            for xx in range(w):
                if mask[y, xx]:
                    out[ch, y, xx] = b[ch, y, xx]
                else:
                    acc = 0.0
                    if y > 0 and mask[y - 1, xx]:
                        acc += b[ch, y - 1, xx]
                    if y < h - 1 and mask[y + 1, xx]:
                        acc += b[ch, y + 1, xx]
                    if xx > 0 and mask[y, xx - 1]:
                        acc += b[ch, y, xx - 1]
                    if xx < w - 1 and mask[y, xx + 1]:
                        acc += b[ch, y, xx + 1]
                    out[ch, y, xx] = b[ch, y, xx] + acc * inv_h2
    return out


@njit(cache=True, parallel=True)
def ct_apply(wimg, mask, inv_h2):
    c, h, w = wimg.shape
    out = np.empty_like(wimg)
    for y in prange(h):
        for ch in range(c):
            for xx in range(w):
                if mask[y, xx]:
                    acc = 0.0
                    if y > 0 and not mask[y - 1, xx]:
                        acc += wimg[ch, y - 1, xx]
                    if y < h - 1 and not mask[y + 1, xx]:
                        acc += wimg[ch, y + 1, xx]
                    if xx > 0 and not mask[y, xx - 1]:
                        acc += wimg[ch, y, xx - 1]
                    if xx < w - 1 and not mask[y, xx + 1]:
                        acc += wimg[ch, y, xx + 1]
                    out[ch, y, xx] = wimg[ch, y, xx] + acc * inv_h2
                else:
                    out[ch, y, xx] = 0.0
    return out


@njit(cache=True)
def sym_residual(u, bsym, mask, inv_h2):
    r = bsym - sym_matvec(u, mask, inv_h2)
    c = u.shape[0]
    norms = np.zeros(c, dtype=np.float64)
    for ch in range(c):
        acc = 0.0
        flat = r[ch].ravel()
        for i in range(flat.size):
            acc += np.float64(flat[i]) * np.float64(flat[i])
        norms[ch] = acc
    return r, norms


@njit(cache=True, parallel=True)
def oras_apply(u, r, mask, xs, ys, bh, bw, gamma, taus, cap, weights, inv_h2):
    channels = u.shape[0]
    h_img, w_img = mask.shape
    nbx = xs.size
    nby = ys.size
    nb = nbx * nby
    corr = np.zeros((nb, channels, bh, bw), dtype=u.dtype)
    scal = np.empty(2, dtype=u.dtype)
    for job in prange(nb * channels):
        bi = job // channels
        ch = job % channels
        y0 = ys[bi // nbx]
        x0 = xs[bi % nbx]
        res = np.empty((bh, bw), dtype=u.dtype)
        for i in range(bh):
            for j in range(bw):
                res[i, j] = r[ch, y0 + i, x0 + j]
        v = np.zeros((bh, bw), dtype=u.dtype)
        p = res.copy()
        ap = np.empty((bh, bw), dtype=u.dtype)
        rs = 0.0
        for i in range(bh):
            for j in range(bw):
                rs += np.float64(res[i, j]) * np.float64(res[i, j])
        tau = taus[ch]
        it = 0
        while rs > tau and it < cap:
            # ap = Robin-closed local symmetrized matvec of p
            for i in range(bh):
                gy = y0 + i
                for j in range(bw):
                    gx = x0 + j
                    if mask[gy, gx]:
                        ap[i, j] = p[i, j]
                    else:
                        diag = 0.0
                        acc = 0.0
                        if gy > 0:
                            if i > 0:
                                diag += 1.0
                                if not mask[gy - 1, gx]:
                                    acc += p[i - 1, j]
                            else:
                                diag += 1.0 - gamma
                        if gy < h_img - 1:
                            if i < bh - 1:
                                diag += 1.0
                                if not mask[gy + 1, gx]:
                                    acc += p[i + 1, j]
                            else:
                                diag += 1.0 - gamma
                        if gx > 0:
                            if j > 0:
                                diag += 1.0
                                if not mask[gy, gx - 1]:
                                    acc += p[i, j - 1]
                            else:
                                diag += 1.0 - gamma
                        if gx < w_img - 1:
                            if j < bw - 1:
                                diag += 1.0
                                if not mask[gy, gx + 1]:
                                    acc += p[i, j + 1]
                            else:
                                diag += 1.0 - gamma
                        ap[i, j] = (diag * p[i, j] - acc) * inv_h2
            pap = 0.0
            for i in range(bh):
                for j in range(bw):
                    pap += np.float64(p[i, j]) * np.float64(ap[i, j])
            if pap <= 0.0:
                break
            a_loc = np.empty(2, dtype=u.dtype)
            a_loc[0] = rs / pap
            alpha = a_loc[0]
            for i in range(bh):
                for j in range(bw):
                    v[i, j] += alpha * p[i, j]
                    res[i, j] -= alpha * ap[i, j]
            rs_new = 0.0
            for i in range(bh):
                for j in range(bw):
                    rs_new += np.float64(res[i, j]) * np.float64(res[i, j])
            a_loc[1] = rs_new / rs
            beta = a_loc[1]
            rs = rs_new
            for i in range(bh):
                for j in range(bw):
                    p[i, j] = res[i, j] + beta * p[i, j]
            it += 1
        for i in range(bh):
            for j in range(bw):
                corr[bi, ch, i, j] = v[i, j]
    # deterministic sequential accumulation in block order
    for bi in range(nb):
        y0 = ys[bi // nbx]
        x0 = xs[bi % nbx]
        for ch in range(channels):
            for i in range(bh):
                for j in range(bw):
                    scal[0] = weights[bi, i, j]
                    u[ch, y0 + i, x0 + j] += scal[0] * corr[bi, ch, i, j]


@njit(cache=True)
def restrict_values(fine):
    c, h, w = fine.shape
    ch = (h + 1) // 2
    cw = (w + 1) // 2
    out = np.zeros((c, ch, cw), dtype=fine.dtype)
    for k in range(c):
        for i in range(ch):
            y1 = min(2 * i + 2, h)
            for j in range(cw):
                x1 = min(2 * j + 2, w)
                acc = 0.0
                cnt = 0
                for y in range(2 * i, y1):
                    for x in range(2 * j, x1):
                        acc += fine[k, y, x]
                        cnt += 1
                out[k, i, j] = acc / cnt
    return out


@njit(cache=True)
def restrict_mask(mask, values):
    h, w = mask.shape
    c = values.shape[0]
    ch = (h + 1) // 2
    cw = (w + 1) // 2
    cmask = np.zeros((ch, cw), dtype=np.uint8)
    cvals = np.zeros((c, ch, cw), dtype=values.dtype)
    for i in range(ch):
        y1 = min(2 * i + 2, h)
        for j in range(cw):
            x1 = min(2 * j + 2, w)
            cnt = 0
            for y in range(2 * i, y1):
                for x in range(2 * j, x1):
                    if mask[y, x]:
                        cnt += 1
            if cnt > 0:
                cmask[i, j] = 1
                for k in range(c):
                    acc = 0.0
                    for y in range(2 * i, y1):
                        for x in range(2 * j, x1):
                            if mask[y, x]:
                                acc += values[k, y, x]
                    cvals[k, i, j] = acc / cnt
    return cmask, cvals


@njit(cache=True, parallel=True)
def prolongate(coarse, h, w):
    c, chh, cww = coarse.shape
    out = np.empty((c, h, w), dtype=coarse.dtype)
    for y in prange(h):
        fy = (y + 0.5) / 2.0 - 0.5
        y0 = int(np.floor(fy))
        wy = fy - y0
        if y0 < 0:
            y0 = 0
            wy = 0.0
        if y0 > chh - 1:
            y0 = chh - 1
            wy = 0.0
        y1 = min(y0 + 1, chh - 1)
        for x in range(w):
            fx = (x + 0.5) / 2.0 - 0.5
            x0 = int(np.floor(fx))
            wx = fx - x0
            if x0 < 0:
                x0 = 0
                wx = 0.0
            if x0 > cww - 1:
                x0 = cww - 1
                wx = 0.0
            x1 = min(x0 + 1, cww - 1)
            for k in range(c):
                v = ((1.0 - wy) * ((1.0 - wx) * coarse[k, y0, x0]
                                   + wx * coarse[k, y0, x1])
                     + wy * ((1.0 - wx) * coarse[k, y1, x0]
                             + wx * coarse[k, y1, x1]))
                out[k, y, x] = v
    return out


@njit(cache=True, parallel=True)
def _jfa_pass(cur, nxt, sy, sx, step):
    h, w = cur.shape
    for y in prange(h):
        for x in range(w):
            best = cur[y, x]
            if best >= 0:
                dy = y - sy[best]
                dx = x - sx[best]
                bd = dy * dy + dx * dx
            else:
                bd = np.int64(4) * (h * h + w * w)
            for oy in range(-1, 2):
                ny = y + oy * step
                if ny < 0 or ny >= h:
                    continue
                for ox in range(-1, 2):
                    if oy == 0 and ox == 0:
                        continue
                    nx = x + ox * step
                    if nx < 0 or nx >= w:
                        continue
                    cand = cur[ny, nx]
                    if cand < 0:
                        continue
                    dy = y - sy[cand]
                    dx = x - sx[cand]
                    cd = dy * dy + dx * dx
                    if cd < bd or (cd == bd and best >= 0 and cand < best):
                        bd = cd
                        best = cand
            nxt[y, x] = best


@njit(cache=True)
def jfa_run(labels, seeds, steps):
    cur = labels.copy()
    nxt = np.empty_like(cur)
    sy = seeds[:, 0].astype(np.int64)
    sx = seeds[:, 1].astype(np.int64)
    for s in steps:
        _jfa_pass(cur, nxt, sy, sx, s)
        tmp = cur
        cur = nxt
        nxt = tmp
    return cur


@njit(cache=True, parallel=True)
def jfa_dist2(labels, seeds):
    h, w = labels.shape
    out = np.empty((h, w), dtype=np.int64)
    for y in prange(h):
        for x in range(w):
            s = labels[y, x]
            dy = np.int64(y) - seeds[s, 0]
            dx = np.int64(x) - seeds[s, 1]
            out[y, x] = dy * dy + dx * dx
    return out


@njit(cache=True)
def fs_dither(dens):
    h, w = dens.shape
    buf = dens.astype(np.float64).copy()
    out = np.zeros((h, w), dtype=np.uint8)
    for y in range(h):
        if y % 2 == 0:
            x0, x1, sgn = 0, w, 1
        else:
            x0, x1, sgn = w - 1, -1, -1
        x = x0
        while x != x1:
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
            x += sgn
    return out


@njit(cache=True)
def assign_triangles(tris, vy, vx, h, w):
    assign = np.full((h, w), -1, dtype=np.int32)
    for t in range(tris.shape[0]):
        ay = vy[tris[t, 0]]
        ax = vx[tris[t, 0]]
        by = vy[tris[t, 1]]
        bx = vx[tris[t, 1]]
        cy = vy[tris[t, 2]]
        cx = vx[tris[t, 2]]
        ylo = max(0, min(ay, min(by, cy)))
        yhi = min(h - 1, max(ay, max(by, cy)))
        xlo = max(0, min(ax, min(bx, cx)))
        xhi = min(w - 1, max(ax, max(bx, cx)))
        for y in range(ylo, yhi + 1):
            for x in range(xlo, xhi + 1):
                if assign[y, x] >= 0:
                    continue
                e0 = (bx - ax) * (y - ay) - (by - ay) * (x - ax)
                e1 = (cx - bx) * (y - by) - (cy - by) * (x - bx)
                e2 = (ax - cx) * (y - cy) - (ay - cy) * (x - cx)
                if (e0 >= 0 and e1 >= 0 and e2 >= 0) or \
                   (e0 <= 0 and e1 <= 0 and e2 <= 0):
                    assign[y, x] = t
    return assign


@njit(cache=True, parallel=True)
def fallback_assign(assign, labels, seed_min_tri):
    h, w = assign.shape
    out = np.empty_like(assign)
    for y in prange(h):
        for x in range(w):
            t = assign[y, x]
            if t < 0:
                t = seed_min_tri[labels[y, x]]
                if t < 0:
                    t = 0
            out[y, x] = t
    return out


@njit(cache=True)
def reduce_cells(assign, err, ntris):
    h, w = assign.shape
    sums = np.zeros(ntris, dtype=np.float64)
    amax_idx = np.full(ntris, -1, dtype=np.int64)
    amax_val = np.full(ntris, -1.0, dtype=np.float64)
    for y in range(h):
        for x in range(w):
            t = assign[y, x]
            e = np.float64(err[y, x])
            sums[t] += e
            if e > amax_val[t]:
                amax_val[t] = e
                amax_idx[t] = y * w + x
    return sums, amax_idx, amax_val
