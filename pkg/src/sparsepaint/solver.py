"""Multigrid ORAS solver for the sparse inpainting system.

Solves A u = C f through its symmetric positive definite reformulation.
The smoother is an optimized restricted additive Schwarz sweep over
overlapping pixel blocks with Robin closures at inner block boundaries;
a V-cycle supplies coarse corrections, and a reduced full-multigrid
cascade provides the initial guess for standalone solves.
"""

from __future__ import annotations

import functools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .grid import Image, Mask

_DTYPES = {"float32": np.float32, "float64": np.float64}


@dataclass
class OrasConfig:
    """Block Schwarz smoother parameters."""

    block: int = 32
    overlap: int = 6
    alpha: float = 1.0
    rho: float = 0.25

    def __post_init__(self):
        if self.overlap < 1:
            raise ValueError("overlap must be at least 1")
        if self.block < self.overlap + 2:
            raise ValueError("block size must be at least overlap + 2")
        if self.alpha <= 0:
            raise ValueError("Robin coefficient must be positive")
        if not 0 < self.rho < 1:
            raise ValueError("local residual fraction must be in (0, 1)")

    def robin_gamma(self, h: float = 1.0) -> float:
        """Ghost-value factor folded into the local diagonal."""
        return (1.0 - self.alpha * h) / (1.0 + self.alpha * h)


@dataclass
class MultigridConfig:
    """Multigrid embedding: levels, smoothing counts, cycle policy.

    ``tol`` drives standalone solves (relative residual of the
    symmetrized system); with ``tol=None`` exactly ``cycles`` V-cycles
    run, which is the mode used inside tonal optimization.
    """

    levels: int = 0  # 0 = auto: coarsen until one smoother block remains
    pre: int = 1
    post: int = 1
    cycles: int = 1
    mode: str = "fmg"  # "fmg" (coarse-to-fine init) or "vcycle"
    tol: float | None = 1e-4
    max_cycles: int = 100
    dtype: str = "float32"
    oras: OrasConfig = field(default_factory=OrasConfig)

    def __post_init__(self):
        if self.levels < 0:
            raise ValueError("levels must be nonnegative (0 = auto)")
        if self.pre < 0 or self.post < 0 or (self.pre == 0 and self.post == 0):
            raise ValueError("need at least one smoothing sweep per cycle")
        if self.cycles < 1:
            raise ValueError("cycles must be at least 1")
        if self.mode not in ("fmg", "vcycle"):
            raise ValueError("mode must be 'fmg' or 'vcycle'")
        if self.dtype not in _DTYPES:
            raise ValueError("dtype must be 'float32' or 'float64'")

    @property
    def np_dtype(self):
        return _DTYPES[self.dtype]


@dataclass
class SolverReport:
    """Convergence bookkeeping for one solve."""

    iterations: int = 0
    per_level: dict = field(default_factory=dict)
    residuals: list = field(default_factory=list)
    seconds: float = 0.0
    converged: bool = False
    breakdown: bool = False


@dataclass
class BlockDecomposition:
    """Overlapping uniform blocks covering the grid plus the pointwise
    partition-of-unity weights used to blend local corrections."""

    block: int
    overlap: int
    height: int
    width: int
    bh: int
    bw: int
    ys: np.ndarray
    xs: np.ndarray
    weights: np.ndarray  # (nblocks, bh, bw), sums to exactly 1 per pixel

    @property
    def nblocks(self) -> int:
        return self.ys.size * self.xs.size

    def rects(self):
        out = []
        for y0 in self.ys:
            for x0 in self.xs:
                out.append((int(y0), int(x0), self.bh, self.bw))
        return out

    def weight_sums(self) -> np.ndarray:
        """Pointwise sum of block weights; identity check helper."""
        total = np.zeros((self.height, self.width))
        nbx = self.xs.size
        for bi in range(self.nblocks):
            y0 = int(self.ys[bi // nbx])
            x0 = int(self.xs[bi % nbx])
            total[y0:y0 + self.bh, x0:x0 + self.bw] += self.weights[bi]
        return total


def _starts(dim, size, stride):
    if dim <= size:
        return np.array([0], dtype=np.int64)
    n = math.ceil((dim - size) / stride) + 1
    return np.array([min(i * stride, dim - size) for i in range(n)],
                    dtype=np.int64)


@functools.lru_cache(maxsize=128)
def build_decomposition(height, width, block=32, overlap=6) -> BlockDecomposition:
    """Tile the grid with overlapping blocks (edge blocks pulled inward
    so every block is full size whenever the image allows).

    Cached: decompositions depend only on the geometry, are shared freely
    and must never be mutated by callers."""
    bh = min(block, height)
    bw = min(block, width)
    stride = block - overlap
    ys = _starts(height, bh, stride)
    xs = _starts(width, bw, stride)
    nb = ys.size * xs.size
    nbx = xs.size

    raw = np.empty((nb, bh, bw))
    big = float(max(height, width))
    for bi in range(nb):
        y0 = int(ys[bi // nbx])
        x0 = int(xs[bi % nbx])
        di = np.full((bh, bw), big)
        ii = np.arange(bh)[:, None].astype(float)
        jj = np.arange(bw)[None, :].astype(float)
        if y0 > 0:
            di = np.minimum(di, ii)
        if y0 + bh < height:
            di = np.minimum(di, bh - 1 - ii)
        if x0 > 0:
            di = np.minimum(di, jj)
        if x0 + bw < width:
            di = np.minimum(di, bw - 1 - jj)
        raw[bi] = np.minimum(di + 1.0, float(overlap))

    # pointwise normalization; the last covering block takes the exact
    # float complement so per-pixel sums are exactly 1.0
    total = np.zeros((height, width))
    last = np.full((height, width), -1, dtype=np.int64)
    for bi in range(nb):
        y0 = int(ys[bi // nbx])
        x0 = int(xs[bi % nbx])
        total[y0:y0 + bh, x0:x0 + bw] += raw[bi]
        last[y0:y0 + bh, x0:x0 + bw] = bi
    acc = np.zeros((height, width))
    weights = np.empty_like(raw)
    for bi in range(nb):
        y0 = int(ys[bi // nbx])
        x0 = int(xs[bi % nbx])
        sl = (slice(y0, y0 + bh), slice(x0, x0 + bw))
        wn = raw[bi] / total[sl]
        is_last = last[sl] == bi
        wn = np.where(is_last, 1.0 - acc[sl], wn)
        acc[sl] += wn
        weights[bi] = wn
    return BlockDecomposition(block=block, overlap=overlap, height=height,
                              width=width, bh=bh, bw=bw, ys=ys, xs=xs,
                              weights=weights)


@dataclass
class _Level:
    mask: np.ndarray           # (H, W) uint8
    decomp: BlockDecomposition
    values: np.ndarray | None  # (C, H, W) stored pixel values, cascade only
    weights: np.ndarray | None = None  # decomp weights cast to solve dtype
    mask_flat: np.ndarray | None = None  # flat indices of stored pixels


class GridHierarchy:
    """Mask pyramid plus per-level block decompositions.

    Coarse masks OR their fine 2x2 blocks; coarse stored values average
    the covered fine stored values, so density grows with depth.
    """

    def __init__(self, levels, cfg: MultigridConfig):
        self.levels = levels
        self.cfg = cfg
        self.gamma = cfg.oras.robin_gamma()

    @classmethod
    def build(cls, mask: Mask, values: Image | None,
              cfg: MultigridConfig) -> "GridHierarchy":
        dtype = cfg.np_dtype
        m = mask.indicator
        v = None
        if values is not None:
            v = values.data.astype(dtype)
        levels = []
        level = 0
        while True:
            h, w = m.shape
            decomp = build_decomposition(h, w, cfg.oras.block, cfg.oras.overlap)
            levels.append(_Level(mask=m, decomp=decomp, values=v,
                                 weights=decomp.weights.astype(dtype),
                                 mask_flat=np.nonzero(m.ravel())[0]))
            level += 1
            coarse_enough = max(h, w) <= cfg.oras.block
            if cfg.levels > 0:
                if level >= cfg.levels or max(h, w) <= 2:
                    break
            elif coarse_enough:
                break
            if v is None:
                m, _ = kernels.restrict_mask(m, np.zeros((1, h, w), dtype))
            else:
                m, v = kernels.restrict_mask(m, v)
        return cls(levels, cfg)

    @property
    def nlevels(self) -> int:
        return len(self.levels)

    # -- level-local operations on raw arrays ---------------------------

    def _residual(self, lv, u, bsym):
        return kernels.sym_residual(u, bsym, self.levels[lv].mask, 1.0)

    def _smooth(self, lv, u, bsym, sweeps):
        level = self.levels[lv]
        d = level.decomp
        rho = self.cfg.oras.rho
        n = level.mask.size
        cap = d.bh * d.bw
        wts = level.weights
        if wts is None or wts.dtype != u.dtype:
            wts = d.weights.astype(u.dtype)
        for _ in range(sweeps):
            r, norms = self._residual(lv, u, bsym)
            taus = rho * (d.bh * d.bw / n) * norms
            kernels.oras_apply(u, r, level.mask, d.xs, d.ys, d.bh, d.bw,
                               self.gamma, taus, cap, wts, 1.0)
        return u

    def _enforce(self, lv, u, bsym):
        idx = self.levels[lv].mask_flat
        if idx is None:
            idx = np.nonzero(self.levels[lv].mask.ravel())[0]
        for ch in range(u.shape[0]):
            u[ch].ravel()[idx] = bsym[ch].ravel()[idx]
        return u

    def _vcycle(self, lv, u, bsym):
        cfg = self.cfg
        if lv == self.nlevels - 1:
            self._smooth(lv, u, bsym, cfg.pre + cfg.post)
            return u
        self._smooth(lv, u, bsym, cfg.pre)
        r, _ = self._residual(lv, u, bsym)
        r_coarse = kernels.restrict_values(r)
        cmask = self.levels[lv + 1].mask
        bsym_c = kernels.sym_rhs(r_coarse, cmask, 1.0)
        e = np.zeros_like(r_coarse)
        self._enforce(lv + 1, e, bsym_c)
        self._vcycle(lv + 1, e, bsym_c)
        h, w = self.levels[lv].mask.shape
        u += kernels.prolongate(e, h, w)
        self._enforce(lv, u, bsym)
        self._smooth(lv, u, bsym, cfg.post)
        return u

    def _cascade(self, channels, dtype):
        """Coarse-to-fine initialization: solve the coarsest stored-value
        problem, then prolongate upward with one smoothing sweep per level."""
        lv = self.nlevels - 1
        level = self.levels[lv]
        u = np.zeros((channels,) + level.mask.shape, dtype)
        bsym = self._level_rhs(lv, dtype)
        self._enforce(lv, u, bsym)
        self._smooth(lv, u, bsym, 1)
        for lv in range(self.nlevels - 2, -1, -1):
            h, w = self.levels[lv].mask.shape
            u = kernels.prolongate(u, h, w)
            bsym = self._level_rhs(lv, dtype)
            self._enforce(lv, u, bsym)
            self._smooth(lv, u, bsym, 1)
        return u

    def _level_rhs(self, lv, dtype):
        level = self.levels[lv]
        if level.values is None:
            raise ValueError("hierarchy was built without stored values")
        b = np.where(level.mask[None].astype(bool), level.values, 0)
        return kernels.sym_rhs(b.astype(dtype), level.mask, 1.0)

    # -- top-level solve -------------------------------------------------

    def solve_sym(self, bsym, init=None, tol=None, cycles=None,
                  max_cycles=None, cascade=False) -> tuple[np.ndarray, SolverReport]:
        """Drive V-cycles on the finest level for the symmetrized system
        with right-hand side ``bsym`` (arrays in, arrays out)."""
        cfg = self.cfg
        t0 = time.perf_counter()
        report = SolverReport()
        bsym = np.ascontiguousarray(bsym)  # flat-index enforcement needs views
        dtype = bsym.dtype
        if init is not None:
            u = np.ascontiguousarray(init.astype(dtype, copy=True))
        elif cascade and self.nlevels > 1:
            u = self._cascade(bsym.shape[0], dtype)
        else:
            u = np.zeros_like(bsym)
        self._enforce(0, u, bsym)

        if tol is None:
            n_cycles = cfg.cycles if cycles is None else cycles
            for _ in range(n_cycles):
                self._vcycle(0, u, bsym)
            report.iterations = n_cycles
            report.converged = True
        else:
            cap = cfg.max_cycles if max_cycles is None else max_cycles
            bnorm = math.sqrt(float(
                np.dot(bsym.ravel().astype(np.float64),
                       bsym.ravel().astype(np.float64))))
            scale = bnorm if bnorm > 0 else 1.0
            done = 0
            while True:
                _, norms = self._residual(0, u, bsym)
                rel = math.sqrt(float(norms.sum())) / scale
                report.residuals.append(rel)
                if rel <= tol:
                    report.converged = True
                    break
                if done >= cap:
                    break
                self._vcycle(0, u, bsym)
                done += 1
            report.iterations = done
        report.per_level = {lv: report.iterations for lv in range(self.nlevels)}
        report.seconds = time.perf_counter() - t0
        return u, report


def _raw_rhs(f_arr, mask_arr):
    return np.where(mask_arr[None].astype(bool), f_arr, 0)


def oras_iteration(u: Image, f: Image, mask: Mask, decomp: BlockDecomposition,
                   cfg: OrasConfig) -> Image:
    """One Schwarz sweep on the inpainting system for rhs C f.

    The interpolation condition is enforced first; block corrections are
    computed independently and blended with the partition-of-unity
    weights in deterministic block order.
    """
    work = u.data.copy()
    mask_arr = mask.indicator
    b = _raw_rhs(f.data.astype(work.dtype), mask_arr)
    bsym = kernels.sym_rhs(b, mask_arr, 1.0)
    m = mask_arr.astype(bool)
    for ch in range(work.shape[0]):
        work[ch][m] = bsym[ch][m]
    r, norms = kernels.sym_residual(work, bsym, mask_arr, 1.0)
    taus = cfg.rho * (decomp.bh * decomp.bw / mask_arr.size) * norms
    kernels.oras_apply(work, r, mask_arr, decomp.xs, decomp.ys, decomp.bh,
                       decomp.bw, cfg.robin_gamma(), taus,
                       decomp.bh * decomp.bw,
                       decomp.weights.astype(work.dtype), 1.0)
    return Image(work)


def vcycle(u: Image, f: Image, mask: Mask, hierarchy: GridHierarchy,
           cfg: MultigridConfig | None = None) -> Image:
    """One V-cycle (pre-smooth, coarse correction, post-smooth).

    ``cfg`` overrides the smoothing policy the hierarchy was built with;
    the level structure itself is reused as-is.
    """
    hier = hierarchy
    if cfg is not None and cfg is not hierarchy.cfg:
        hier = GridHierarchy(hierarchy.levels, cfg)
    dtype = hier.cfg.np_dtype
    work = np.ascontiguousarray(u.data.astype(dtype, copy=True))
    b = _raw_rhs(f.data.astype(dtype), mask.indicator)
    bsym = kernels.sym_rhs(b, mask.indicator, 1.0)
    hier._enforce(0, work, bsym)
    hier._vcycle(0, work, bsym)
    return Image(work)


def cg_solve(matvec, rhs, init=None, tol=1e-10, max_iters=None):
    """Plain conjugate gradients on a symmetric positive definite operator.

    Stops when the residual norm falls below ``tol`` times the initial
    residual norm. A non-positive curvature direction is reported as a
    breakdown and the best iterate seen is returned.
    """
    wrap = isinstance(rhs, Image)
    b = rhs.data if wrap else np.asarray(rhs)
    if init is None:
        x = np.zeros_like(b)
    else:
        x = (init.data if isinstance(init, Image) else np.asarray(init)).copy()
        x = x.astype(b.dtype)

    def op(v):
        out = matvec(Image(v)) if wrap else matvec(v)
        return out.data if isinstance(out, Image) else out

    def dot(a, c):
        return float(np.dot(a.ravel().astype(np.float64),
                            c.ravel().astype(np.float64)))

    t0 = time.perf_counter()
    report = SolverReport()
    cap = b.size if max_iters is None else max_iters
    r = b - op(x)
    rs = dot(r, r)
    report.residuals.append(math.sqrt(rs))
    if rs == 0.0:
        report.converged = True
        report.seconds = time.perf_counter() - t0
        return (Image(x) if wrap else x), report
    thresh = tol * tol * rs
    p = r.copy()
    best_rs = rs
    best_x = x.copy()
    it = 0
    while it < cap and rs > thresh:
        ap = op(p)
        pap = dot(p, ap)
        if pap <= 0.0:
            report.breakdown = True
            break
        alpha = rs / pap
        x += b.dtype.type(alpha) * p
        r -= b.dtype.type(alpha) * ap
        rs_new = dot(r, r)
        beta = rs_new / rs
        rs = rs_new
        p = r + b.dtype.type(beta) * p
        it += 1
        report.residuals.append(math.sqrt(rs))
        if rs < best_rs:
            best_rs = rs
            best_x = x.copy()
    out = x if rs <= best_rs else best_x
    report.iterations = it
    report.converged = rs <= thresh
    report.seconds = time.perf_counter() - t0
    return (Image(out) if wrap else out), report


def inpaint(f: Image, mask: Mask, cfg: MultigridConfig | None = None,
            init: Image | None = None) -> tuple[Image, SolverReport]:
    """Reconstruct an image from its stored pixels.

    Without ``init`` the reduced full-multigrid cascade builds the first
    guess; with ``init`` the cascade is skipped and V-cycles start
    directly from it (the mode used inside tonal optimization). The
    output interpolates the stored values exactly.
    """
    if cfg is None:
        cfg = MultigridConfig()
    if mask.count == 0:
        raise ValueError("singular system: empty mask")
    dtype = cfg.np_dtype
    f_arr = f.data.astype(dtype)
    hier = GridHierarchy.build(mask, Image(f_arr), cfg)
    b = _raw_rhs(f_arr, mask.indicator)
    bsym = kernels.sym_rhs(b, mask.indicator, 1.0)
    init_arr = None if init is None else init.data.astype(dtype)
    cascade = cfg.mode == "fmg" and init is None
    u, report = hier.solve_sym(bsym, init=init_arr, tol=cfg.tol,
                               cycles=cfg.cycles, max_cycles=cfg.max_cycles,
                               cascade=cascade)
    m = mask.indicator.astype(bool)
    for ch in range(u.shape[0]):
        u[ch][m] = f_arr[ch][m]
    return Image(u), report


_UNSET = object()


class InpaintSolver:
    """Configured solver handle passed into the optimization drivers."""

    def __init__(self, cfg: MultigridConfig | None = None):
        self.cfg = cfg if cfg is not None else MultigridConfig()

    def inpaint(self, f: Image, mask: Mask, init: Image | None = None,
                tol=_UNSET, cycles=None):
        cfg = self.cfg
        if tol is not _UNSET or cycles is not None:
            cfg = MultigridConfig(
                levels=cfg.levels, pre=cfg.pre, post=cfg.post,
                cycles=cfg.cycles if cycles is None else cycles,
                mode=cfg.mode,
                tol=cfg.tol if tol is _UNSET else tol,
                max_cycles=cfg.max_cycles, dtype=cfg.dtype, oras=cfg.oras)
        return inpaint(f, mask, cfg, init=init)

    def hierarchy(self, mask: Mask, values: Image | None = None) -> GridHierarchy:
        return GridHierarchy.build(mask, values, self.cfg)
