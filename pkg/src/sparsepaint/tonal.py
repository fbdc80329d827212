"""Tonal optimization: which values to store at the mask pixels.

Minimizes the reconstruction error over stored values g, a linear
least-squares problem whose operator (stored values -> reconstruction)
is only ever applied matrix-free by solving sparse inpainting systems.
Solvers: conjugate gradients on the normal equations, and a restricted
additive Schwarz method whose block corrections solve locally
restricted normal equations. A per-cell error-balancing iteration
provides a cheap warm start.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import correlate

from . import kernels
from .geometry import (VoronoiLabels, cell_weighted_average,
                       jump_flood_voronoi, voronoi_weights)
from .grid import Image, Mask
from .solver import (GridHierarchy, InpaintSolver, MultigridConfig,
                     build_decomposition)


@dataclass
class TonalState:
    """Stored values g (zero off-mask), their reconstruction and MSE."""

    g: Image
    u: Image
    mse: float
    history: list = field(default_factory=list)
    iterations: int = 0
    inner_solves: int = 0
    converged: bool = True

    @property
    def psnr(self) -> float:
        return math.inf if self.mse == 0 else 10 * math.log10(255.0 ** 2 / self.mse)


@dataclass
class RasTonalConfig:
    block: int = 64
    overlap: int = 6
    local_iters: int = 30
    local_tol: float = 0.1         # squared-residual reduction per block solve
    inner_cycles: int = 2          # V-cycles per warm-started product
    inner_tol: float | None = None  # overrides both policies when set
    cold_tol: float = 1e-4         # accuracy of products without a warm start
    local_product_tol: float = 1e-2  # accuracy of block-local products
    rel_improvement: float = 1e-3  # outer stop: relative MSE improvement
    max_outer: int = 50
    final_tol: float = 1e-6        # accuracy of the reported reconstruction

    def __post_init__(self):
        if self.block < self.overlap + 2:
            raise ValueError("block size must be at least overlap + 2")
        if self.local_iters < 1 or self.max_outer < 1:
            raise ValueError("iteration caps must be positive")


@dataclass
class InitConfig:
    scheme: str = "voronoi-richardson"  # none | neighbor-balance | voronoi-richardson
    tau: float = 1.0
    weight_scheme: str = "inverse-log"
    max_steps: int = 20
    stop_on_mse_increase: bool = True
    inner_cycles: int = 2
    inner_tol: float | None = None
    final_tol: float = 1e-6

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("step size must be positive")
        if self.scheme not in ("none", "neighbor-balance",
                               "voronoi-richardson"):
            raise ValueError("unknown initialization scheme")


def _mse(a, b) -> float:
    d = a.astype(np.float64) - b.astype(np.float64)
    return float(np.mean(d * d))


def _chan_dot(a, b):
    c = a.shape[0]
    out = np.empty(c, dtype=np.float64)
    for ch in range(c):
        out[ch] = float(np.dot(a[ch].ravel().astype(np.float64),
                               b[ch].ravel().astype(np.float64)))
    return out


class _TonalSystem:
    """Matrix-free products with the inpainting operator on one mask.

    Warm-started products run a fixed number of V-cycles (the previous
    solution is a near-solution); products without a warm start must be
    solved properly, so they iterate to ``cold_tol``.
    """

    def __init__(self, mask_arr, solver: InpaintSolver,
                 inner_cycles=1, inner_tol=None, cold_tol=1e-4,
                 cold_max_cycles=100):
        self.mask = mask_arr
        self.hier = GridHierarchy.build(Mask(mask_arr), None, solver.cfg)
        self.inner_cycles = inner_cycles
        self.inner_tol = inner_tol
        self.cold_tol = cold_tol
        self.cold_max_cycles = cold_max_cycles
        self.dtype = solver.cfg.np_dtype
        self.solves = 0

    def _solve(self, bsym, warm, tol=None, cycles=None):
        self.solves += 1
        if tol is None:
            if self.inner_tol is not None:
                tol = self.inner_tol
            elif warm is None:
                tol = self.cold_tol
        u, _ = self.hier.solve_sym(
            bsym, init=warm, tol=tol,
            cycles=self.inner_cycles if cycles is None else cycles,
            max_cycles=self.cold_max_cycles)
        return u

    def apply_B(self, x, warm=None, tol=None, cycles=None):
        """Reconstruction from stored values x (solves the symmetrized
        inpainting system with rhs formed from x at the mask)."""
        b = np.where(self.mask[None].astype(bool), x, 0).astype(self.dtype)
        bsym = kernels.sym_rhs(b, self.mask, 1.0)
        return self._solve(bsym, warm, tol, cycles)

    def apply_Bt(self, y, warm=None, tol=None, cycles=None):
        """Adjoint product: symmetric solve against y followed by the
        transposed modified-mask operator; supported on the mask."""
        w = self._solve(y.astype(self.dtype), warm, tol, cycles)
        return kernels.ct_apply(w, self.mask, 1.0), w


def apply_B(x: Image, mask: Mask, solver: InpaintSolver | None = None,
            inner_tol: float = 1e-8) -> Image:
    """Public matrix-free product: stored values -> reconstruction."""
    if mask.count == 0:
        raise ValueError("singular system: empty mask")
    if solver is None:
        solver = InpaintSolver(MultigridConfig(dtype="float64"))
    sys_ = _TonalSystem(mask.indicator, solver, inner_tol=inner_tol)
    return Image(sys_.apply_B(x.data.astype(sys_.dtype)))


def apply_Bt(y: Image, mask: Mask, solver: InpaintSolver | None = None,
             inner_tol: float = 1e-8) -> Image:
    """Public matrix-free adjoint product."""
    if mask.count == 0:
        raise ValueError("singular system: empty mask")
    if solver is None:
        solver = InpaintSolver(MultigridConfig(dtype="float64"))
    sys_ = _TonalSystem(mask.indicator, solver, inner_tol=inner_tol)
    z, _ = sys_.apply_Bt(y.data.astype(sys_.dtype))
    return Image(z)


def initial_state(f: Image, mask: Mask,
                  solver: InpaintSolver | None = None,
                  final_tol: float = 1e-6) -> TonalState:
    """Baseline state g = f at the mask, with its reconstruction."""
    if solver is None:
        solver = InpaintSolver()
    u, rep = solver.inpaint(f, mask, tol=final_tol)
    g = np.where(mask.indicator[None].astype(bool),
                 f.data.astype(u.data.dtype), 0)
    return TonalState(g=Image(g), u=u, mse=_mse(f.data, u.data),
                      converged=rep.converged)


def _final_state(f, mask, sys_: _TonalSystem, g_best, warm, history,
                 iterations, final_tol) -> TonalState:
    b = np.where(sys_.mask[None].astype(bool), g_best, 0).astype(sys_.dtype)
    bsym = kernels.sym_rhs(b, sys_.mask, 1.0)
    u, rep = sys_.hier.solve_sym(bsym, init=warm, tol=final_tol)
    sys_.solves += 1
    m = mask.indicator.astype(bool)
    for ch in range(u.shape[0]):
        u[ch][m] = g_best[ch][m]
    return TonalState(g=Image(g_best.copy()), u=Image(u),
                      mse=_mse(f.data, u), history=history,
                      iterations=iterations, inner_solves=sys_.solves,
                      converged=rep.converged)


def cgnr_tonal(f: Image, mask: Mask, init: TonalState | None = None,
               solver: InpaintSolver | None = None,
               rel_improvement: float = 1e-3, max_iters: int = 100,
               inner_cycles: int = 1, inner_tol: float | None = None,
               cold_tol: float = 1e-4, final_tol: float = 1e-6) -> TonalState:
    """Conjugate gradients on the normal equations of the stored-value
    least-squares problem.

    The primal residual (hence the MSE) is available every iteration;
    the loop stops once the relative MSE improvement drops below the
    threshold and the best iterate is returned, evaluated against a
    tight final reconstruction. Products against conjugate directions
    have no usable warm start and are solved to ``cold_tol``; the
    adjoint solves against the slowly-changing residual are warm-started.
    """
    if solver is None:
        solver = InpaintSolver()
    if mask.count == 0:
        raise ValueError("singular system: empty mask")
    sys_ = _TonalSystem(mask.indicator, solver, inner_cycles, inner_tol,
                        cold_tol=cold_tol)
    dtype = sys_.dtype
    f_arr = f.data.astype(dtype)
    mbool = mask.indicator[None].astype(bool)
    if init is None:
        g = np.where(mbool, f_arr, 0)
        warm = None
    else:
        g = np.where(mbool, init.g.data.astype(dtype), 0)
        warm = init.u.data.astype(dtype)

    t0 = time.perf_counter()
    history = []
    u = sys_.apply_B(g, warm=warm)
    r = f_arr - u
    mse = _mse(f_arr, u)
    best_g = g.copy()
    best_mse = mse
    history.append((0, mse, time.perf_counter() - t0, sys_.solves))

    z, w_warm = sys_.apply_Bt(r)
    zs = _chan_dot(z, z)
    p = z.copy()
    it = 0
    prev_mse = mse
    while it < max_iters and zs.sum() > 0:
        w = sys_.apply_B(p)
        ws = _chan_dot(w, w)
        alpha = np.where(ws > 0, zs / np.where(ws > 0, ws, 1), 0.0)
        a = alpha.astype(dtype)[:, None, None]
        g = g + a * p
        r = r - a * w
        mse = float(np.mean((r.astype(np.float64)) ** 2))
        it += 1
        history.append((it, mse, time.perf_counter() - t0, sys_.solves))
        if mse < best_mse:
            best_mse = mse
            best_g = g.copy()
        if prev_mse - mse < rel_improvement * prev_mse:
            break
        prev_mse = mse
        z, w_warm = sys_.apply_Bt(r, warm=w_warm)
        zs_new = _chan_dot(z, z)
        beta = np.where(zs > 0, zs_new / np.where(zs > 0, zs, 1), 0.0)
        p = z + beta.astype(dtype)[:, None, None] * p
        zs = zs_new
    return _final_state(f, mask, sys_, best_g, u, history, it, final_tol)


def _normal_cg(sys_: _TonalSystem, rhs, cap, tol):
    """CG on the normal matrix of one (sub)system; rhs already lives in
    the normal-equation (mask-supported) space."""
    dtype = rhs.dtype
    v = np.zeros_like(rhs)
    r = rhs.copy()
    p = r.copy()
    rs = _chan_dot(r, r)
    rs0 = rs.sum()
    if rs0 == 0:
        return v
    it = 0
    while it < cap and rs.sum() > tol * rs0:
        bp = sys_.apply_B(p)
        mp, _ = sys_.apply_Bt(bp)
        pmp = _chan_dot(p, mp)
        alpha = np.where(pmp > 0, rs / np.where(pmp > 0, pmp, 1), 0.0)
        if not np.any(alpha > 0):
            break
        a = alpha.astype(dtype)[:, None, None]
        v = v + a * p
        r = r - a * mp
        rs_new = _chan_dot(r, r)
        beta = np.where(rs > 0, rs_new / np.where(rs > 0, rs, 1), 0.0)
        p = r + beta.astype(dtype)[:, None, None] * p
        rs = rs_new
        it += 1
    return v


def _averaging_weights(decomp):
    """Per-block weights assigning each pixel the reciprocal of its
    cover count (plain averaging over overlapping blocks)."""
    cover = np.zeros((decomp.height, decomp.width))
    nbx = decomp.xs.size
    for bi in range(decomp.nblocks):
        y0 = int(decomp.ys[bi // nbx])
        x0 = int(decomp.xs[bi % nbx])
        cover[y0:y0 + decomp.bh, x0:x0 + decomp.bw] += 1.0
    return 1.0 / cover


def ras_tonal(f: Image, mask: Mask, init: TonalState | None = None,
              cfg: RasTonalConfig | None = None,
              solver: InpaintSolver | None = None) -> TonalState:
    """Restricted additive Schwarz on the stored-value normal equations.

    Each outer iteration computes the global normal-equation residual
    with warm-started matrix-free products, solves one restricted
    normal system per overlapping block independently (reflecting
    closures on all block sides), and blends the corrections with plain
    averaging at multiply-covered mask pixels.
    """
    if cfg is None:
        cfg = RasTonalConfig()
    if solver is None:
        solver = InpaintSolver()
    if mask.count == 0:
        raise ValueError("singular system: empty mask")
    sys_ = _TonalSystem(mask.indicator, solver, cfg.inner_cycles,
                        inner_tol=cfg.inner_tol, cold_tol=cfg.cold_tol)
    dtype = sys_.dtype
    f_arr = f.data.astype(dtype)
    mbool = mask.indicator[None].astype(bool)
    if init is None:
        g = np.where(mbool, f_arr, 0)
        u_warm = None
    else:
        g = np.where(mbool, init.g.data.astype(dtype), 0)
        u_warm = init.u.data.astype(dtype)
    w_warm = None

    h, w = mask.indicator.shape
    decomp = build_decomposition(h, w, cfg.block, cfg.overlap)
    inv_cover = _averaging_weights(decomp)
    nbx = decomp.xs.size
    blocks = []
    for bi in range(decomp.nblocks):
        y0 = int(decomp.ys[bi // nbx])
        x0 = int(decomp.xs[bi % nbx])
        sl = (slice(y0, y0 + decomp.bh), slice(x0, x0 + decomp.bw))
        sub_mask = mask.indicator[sl]
        if sub_mask.sum() == 0:
            continue
        blocks.append((sl, _TonalSystem(
            np.ascontiguousarray(sub_mask), solver, cfg.inner_cycles,
            inner_tol=(cfg.inner_tol if cfg.inner_tol is not None
                       else cfg.local_product_tol))))

    t0 = time.perf_counter()
    history = []
    best_g = g.copy()
    best_mse = math.inf
    prev_mse = None
    outer = 0
    while outer < cfg.max_outer:
        u = sys_.apply_B(g, warm=u_warm)
        u_warm = u
        r_pr = f_arr - u
        mse = _mse(f_arr, u)
        history.append((outer, mse, time.perf_counter() - t0, sys_.solves))
        if mse < best_mse:
            best_mse = mse
            best_g = g.copy()
        if prev_mse is not None and prev_mse - mse < cfg.rel_improvement * prev_mse:
            break
        prev_mse = mse
        rhs, w_warm = sys_.apply_Bt(r_pr, warm=w_warm)
        upd = np.zeros_like(g)
        for sl, loc in blocks:
            local_rhs = np.ascontiguousarray(rhs[:, sl[0], sl[1]])
            v = _normal_cg(loc, local_rhs, cfg.local_iters, cfg.local_tol)
            upd[:, sl[0], sl[1]] += inv_cover[sl].astype(dtype) * v
        g = g + upd
        outer += 1
    total_inner = sys_.solves + sum(loc.solves for _, loc in blocks)
    state = _final_state(f, mask, sys_, best_g, u_warm, history, outer,
                         cfg.final_tol)
    state.inner_solves = total_inner
    return state


def neighbor_balance_init(f: Image, u: Image, mask: Mask,
                          solver: InpaintSolver | None = None,
                          final_tol: float = 1e-6) -> TonalState:
    """Single error-balancing step: add the mean signed reconstruction
    error of the 3x3 neighborhood (border-clipped, center included) to
    each stored pixel's value.

    With a solver given, the reconstruction of the balanced values is
    recomputed so the returned state is self-consistent; otherwise the
    incoming reconstruction is kept.
    """
    diff = f.data.astype(np.float64) - u.data.astype(np.float64)
    kern = np.ones((3, 3))
    cnt = correlate(np.ones(diff.shape[1:]), kern, mode="constant", cval=0.0)
    mbool = mask.indicator.astype(bool)
    g = np.zeros_like(f.data, dtype=u.data.dtype)
    for ch in range(diff.shape[0]):
        s = correlate(diff[ch], kern, mode="constant", cval=0.0)
        vals = u.data[ch].astype(np.float64) + s / cnt
        g[ch][mbool] = vals[mbool].astype(u.data.dtype)
    if solver is None:
        unew = u.copy()
        return TonalState(g=Image(g), u=unew, mse=_mse(f.data, unew.data))
    sys_ = _TonalSystem(mask.indicator, solver)
    return _final_state(f, mask, sys_, g.astype(sys_.dtype),
                        u.data.astype(sys_.dtype), [], 1, final_tol)


def voronoi_richardson_init(f: Image, mask: Mask,
                            cfg: InitConfig | None = None,
                            solver: InpaintSolver | None = None,
                            labels: VoronoiLabels | None = None,
                            weights: np.ndarray | None = None) -> TonalState:
    """Error balancing over whole cells: a damped fixed-point iteration
    that pushes each stored value toward interpolating its cell's
    weighted average, tracking the true MSE and stopping once it rises.

    This surrogate is cheap (one reconstruction per step) and lands
    close enough to the optimum to serve as a warm start.
    """
    if cfg is None:
        cfg = InitConfig()
    if solver is None:
        solver = InpaintSolver()
    if mask.count == 0:
        raise ValueError("singular system: empty mask")
    if labels is None:
        labels = jump_flood_voronoi(mask)
    if weights is None:
        weights = voronoi_weights(labels, cfg.weight_scheme)

    sys_ = _TonalSystem(mask.indicator, solver, cfg.inner_cycles,
                        inner_tol=cfg.inner_tol)
    dtype = sys_.dtype
    f_arr = f.data.astype(dtype)
    mbool = mask.indicator[None].astype(bool)
    g = np.where(mbool, f_arr, 0)
    seed_flat = (labels.seeds[:, 0].astype(np.int64) * mask.width
                 + labels.seeds[:, 1].astype(np.int64))

    t0 = time.perf_counter()
    u, _ = solver.inpaint(f, mask)  # proper first reconstruction
    u = u.data.astype(dtype)
    mse = _mse(f_arr, u)
    history = [(0, mse, time.perf_counter() - t0, sys_.solves)]
    best_g = g.copy()
    best_mse = mse
    prev_mse = mse
    steps = 0
    for k in range(1, cfg.max_steps + 1):
        for ch in range(g.shape[0]):
            delta = cell_weighted_average(
                labels, weights,
                f_arr[ch].astype(np.float64) - u[ch].astype(np.float64))
            gflat = g[ch].ravel()
            gflat[seed_flat] += (cfg.tau * delta).astype(dtype)
        u = sys_.apply_B(g, warm=u)
        mse = _mse(f_arr, u)
        steps = k
        history.append((k, mse, time.perf_counter() - t0, sys_.solves))
        if mse < best_mse:
            best_mse = mse
            best_g = g.copy()
        if cfg.stop_on_mse_increase and mse > prev_mse:
            break
        prev_mse = mse
    return _final_state(f, mask, sys_, best_g, u, history, steps,
                        cfg.final_tol)


def dense_tonal_oracle(f: Image, mask: Mask, max_pixels: int = 4096) -> TonalState:
    """Assemble the reconstruction operator column by column with dense
    solves and solve the normal equations directly. Desk-scale only."""
    n = f.height * f.width
    if n > max_pixels:
        raise ValueError(f"dense oracle limited to {max_pixels} pixels")
    if mask.count == 0:
        raise ValueError("singular system: empty mask")
    h, w = f.height, f.width
    mflat = mask.indicator.ravel().astype(bool)
    midx = np.nonzero(mflat)[0]
    a = np.zeros((n, n))
    e = np.zeros((1, h, w))
    for j in range(n):
        e.ravel()[j] = 1.0
        a[:, j] = kernels.inpaint_matvec(e, mask.indicator, 1.0).ravel()
        e.ravel()[j] = 0.0
    rhs_cols = np.zeros((n, midx.size))
    rhs_cols[midx, np.arange(midx.size)] = 1.0
    b_cols = np.linalg.solve(a, rhs_cols)  # reconstruction per unit value
    normal = b_cols.T @ b_cols
    g = np.zeros_like(f.data, dtype=np.float64)
    u = np.zeros_like(g)
    for ch in range(f.channels):
        rhs = b_cols.T @ f.data[ch].astype(np.float64).ravel()
        g_k = np.linalg.solve(normal, rhs)
        g[ch].ravel()[midx] = g_k
        u[ch] = (b_cols @ g_k).reshape(h, w)
    return TonalState(g=Image(g), u=Image(u), mse=_mse(f.data, u))
