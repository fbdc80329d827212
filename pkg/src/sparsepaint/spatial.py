"""Mask construction: which pixels to store.

The main method grows the mask greedily, one pixel per high-error
triangle of the current mesh per iteration. Baselines: the smoothed
Laplacian-magnitude dithering approach, probabilistic sparsification
from a full mask, and nonlocal pixel exchange as a post-process.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from . import kernels
from .geometry import (accumulate_errors, delaunay_from_voronoi,
                       jump_flood_voronoi, voronoi_cell_errors)
from .grid import Image, Mask, quality
from .solver import InpaintSolver


@dataclass
class DensificationConfig:
    density: float = 0.05
    iterations: int = 20
    growth: float = 1.0            # factor on pixels added per iteration
    initial_fraction: float | None = None  # None = one per-iteration share
    initial_scheme: str = "laplacian-dither"  # or "uniform-random"
    init_sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.density <= 1:
            raise ValueError("density must be in (0, 1]")
        if self.iterations < 1:
            raise ValueError("need at least one iteration")
        if self.growth <= 0:
            raise ValueError("growth factor must be positive")
        if self.initial_scheme not in ("laplacian-dither", "uniform-random"):
            raise ValueError("unknown initial mask scheme")


@dataclass
class PsConfig:
    candidate_fraction: float = 0.3
    return_fraction: float = 0.005
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.return_fraction < self.candidate_fraction <= 1:
            raise ValueError("need 0 < q < p <= 1")


@dataclass
class NlpeConfig:
    cycles: int = 5
    candidates: int = 5
    seed: int = 0
    mse_floor: float = 1e-9  # below this the reconstruction counts as exact

    def __post_init__(self):
        if self.cycles < 1:
            raise ValueError("cycles must be at least 1")
        if self.candidates < 1:
            raise ValueError("need at least one candidate per swap")


def _target_count(density, n):
    target = int(math.floor(density * n))
    if target < 1:
        raise ValueError("density too low: no pixel budget")
    return target


def uniform_random_mask(height, width, count, seed=0) -> Mask:
    """Exactly ``count`` stored pixels, uniformly placed."""
    n = height * width
    if not 1 <= count <= n:
        raise ValueError("count out of range")
    rng = np.random.default_rng(seed)
    picks = rng.choice(n, size=count, replace=False)
    m = np.zeros(n, dtype=np.uint8)
    m[picks] = 1
    return Mask(m.reshape(height, width))


def _exact_count(bits, dens, target):
    """Add/remove at the highest/lowest density values to hit target."""
    flat_b = bits.ravel().astype(bool).copy()
    flat_d = dens.ravel()
    cnt = int(flat_b.sum())
    idx = np.arange(flat_b.size)
    if cnt > target:
        cand = idx[flat_b]
        order = np.lexsort((cand, flat_d[cand]))
        flat_b[cand[order[:cnt - target]]] = False
    elif cnt < target:
        cand = idx[~flat_b]
        order = np.lexsort((cand, -flat_d[cand]))
        flat_b[cand[order[:target - cnt]]] = True
    return flat_b.reshape(bits.shape)


def laplacian_density_map(f: Image, density, sigma=1.0):
    """Laplacian magnitude of the (optionally presmoothed) image,
    rescaled so its mean matches the target density, clamped to [0, 1].
    Returns None for images with vanishing Laplacian (constant)."""
    data = f.data.astype(np.float64)
    if sigma > 0:
        data = np.stack([gaussian_filter(c, sigma, mode="reflect")
                         for c in data])
    mag = np.abs(kernels.negated_laplacian(data, 1.0)).sum(axis=0)
    total = mag.sum()
    if total == 0:
        return None
    n = mag.size
    return np.clip(mag * (density * n / total), 0.0, 1.0)


def analytic_mask(f: Image, density, dither="floyd-steinberg", sigma=1.0,
                  seed=0, count=None) -> Mask:
    """Mask with local density proportional to the smoothed Laplacian
    magnitude, dithered to binary and corrected to the exact pixel count.

    ``floyd-steinberg`` runs serpentine error diffusion; ``random``
    flips one biased coin per pixel. Constant images fall back to
    uniform random placement.
    """
    n = f.height * f.width
    target = _target_count(density, n) if count is None else int(count)
    if target < 1:
        raise ValueError("density too low: no pixel budget")
    if target >= n:
        return Mask(np.ones((f.height, f.width), dtype=np.uint8))
    dens = laplacian_density_map(f, target / n, sigma)
    if dens is None:
        return uniform_random_mask(f.height, f.width, target, seed)
    if dither == "floyd-steinberg":
        bits = kernels.fs_dither(dens).astype(bool)
    elif dither == "random":
        rng = np.random.default_rng(seed)
        bits = rng.random(dens.shape) < dens
    else:
        raise ValueError("dither must be 'floyd-steinberg' or 'random'")
    return Mask(_exact_count(bits, dens, target))


def _schedule(total, iterations, growth, initial_fraction):
    """Split the pixel budget into an initial share plus one count per
    iteration following the multiplicative growth rule; any rounding
    remainder lands in the final iteration."""
    weights = [growth ** i for i in range(iterations + 1)]
    if initial_fraction is None:
        init = int(round(total * weights[0] / sum(weights)))
    else:
        init = int(math.floor(initial_fraction * total))
    init = max(1, min(total, init))
    remaining = total - init
    counts = [0] * iterations
    if remaining > 0:
        def seq(m1):
            out = []
            m = m1
            for _ in range(iterations):
                out.append(m)
                m = int(round(growth * m))
            return out

        lo, hi = 0, remaining
        while lo < hi:  # largest m1 with sum(seq(m1)) <= remaining
            mid = (lo + hi + 1) // 2
            if sum(seq(mid)) <= remaining:
                lo = mid
            else:
                hi = mid - 1
        counts = seq(lo)
        counts[-1] += remaining - sum(counts)
    return init, counts


def _error_map(u: Image, f: Image):
    diff = u.data.astype(np.float64) - f.data.astype(np.float64)
    return (diff * diff).sum(axis=0)


def _fill_highest_error(mask_arr, err, want):
    flat_e = err.ravel()
    idx = np.arange(flat_e.size)
    free = ~mask_arr.ravel().astype(bool)
    cand = idx[free]
    order = np.lexsort((cand, -flat_e[cand]))
    out = mask_arr.ravel().copy()
    out[cand[order[:want]]] = 1
    return out.reshape(mask_arr.shape)


def delaunay_densify(f: Image, cfg: DensificationConfig,
                     solver: InpaintSolver | None = None,
                     partition: str = "delaunay"):
    """Grow the mask at the highest-error pixels of the highest-error
    mesh cells, one pixel per cell per iteration.

    Per iteration: reconstruct from the current mask, bucket the squared
    error map by the current Delaunay triangles (or Voronoi cells for
    ``partition='voronoi'``), then add the per-bucket peak-error pixel
    in each of the scheduled number of top buckets. Returns the final
    mask, its reconstruction and the per-iteration history rows
    (iteration, mask count, mse, psnr, seconds).
    """
    if partition not in ("delaunay", "voronoi"):
        raise ValueError("partition must be 'delaunay' or 'voronoi'")
    if solver is None:
        solver = InpaintSolver()
    n = f.height * f.width
    total = _target_count(cfg.density, n)
    init_count, counts = _schedule(total, cfg.iterations, cfg.growth,
                                   cfg.initial_fraction)
    if cfg.initial_scheme == "laplacian-dither":
        mask = analytic_mask(f, init_count / n, dither="random",
                             sigma=cfg.init_sigma, seed=cfg.seed,
                             count=init_count)
    else:
        mask = uniform_random_mask(f.height, f.width, init_count, cfg.seed)

    history = []
    t_start = time.perf_counter()
    u = None
    radius_hint = None
    carry = 0
    for it, quota in enumerate(counts):
        u, _ = solver.inpaint(f, mask, init=u)
        err = _error_map(u, f)
        q = quality(f, u)
        history.append((it, mask.count, q.mse, q.psnr,
                        time.perf_counter() - t_start))
        want = quota + carry
        if want <= 0:
            carry = 0
            continue
        labels = jump_flood_voronoi(mask, start_hint=radius_hint)
        radius_hint = labels.max_radius
        if partition == "delaunay":
            mesh = delaunay_from_voronoi(labels)
            ce = accumulate_errors(mesh, err, labels)
            sums, amax = ce.sums, ce.argmax_flat
        else:
            sums, amax, _ = voronoi_cell_errors(labels, err)
        order = np.lexsort((np.arange(sums.size), -sums))
        flat_mask = mask.indicator.ravel()
        picked = []
        for t in order:
            if len(picked) >= want:
                break
            px = amax[t]
            if px < 0 or flat_mask[px]:
                continue
            picked.append(px)
        if picked:
            new = mask.indicator.copy()
            new.ravel()[np.array(picked, dtype=np.int64)] = 1
            mask = Mask(new)
        carry = want - len(picked)

    if carry > 0:
        u, _ = solver.inpaint(f, mask, init=u)
        err = _error_map(u, f)
        mask = Mask(_fill_highest_error(mask.indicator, err, carry))

    u, _ = solver.inpaint(f, mask, init=u)
    q = quality(f, u)
    history.append((len(counts), mask.count, q.mse, q.psnr,
                    time.perf_counter() - t_start))
    assert mask.count == total
    return mask, u, history


def probabilistic_sparsify(f: Image, density, cfg: PsConfig | None = None,
                           solver: InpaintSolver | None = None) -> Mask:
    """Shrink a full mask to the target density: temporarily drop a
    random candidate slice of the mask, reconstruct, and return the
    worst-hit candidates to the mask."""
    if cfg is None:
        cfg = PsConfig()
    if solver is None:
        solver = InpaintSolver()
    n = f.height * f.width
    target = _target_count(density, n)
    if density >= 1.0:
        return Mask(np.ones((f.height, f.width), dtype=np.uint8))
    rng = np.random.default_rng(cfg.seed)
    mask_flat = np.ones(n, dtype=np.uint8)
    u = f.copy()
    count = n
    while count > target:
        members = np.nonzero(mask_flat)[0]
        k_remove = min(max(1, int(cfg.candidate_fraction * count)), count - 1)
        cand = np.sort(rng.choice(members, size=k_remove, replace=False))
        trial = mask_flat.copy()
        trial[cand] = 0
        u, _ = solver.inpaint(f, Mask(trial.reshape(f.height, f.width)),
                              init=u)
        err = _error_map(u, f).ravel()
        count2 = count - k_remove
        k_back = int(cfg.return_fraction * n)
        if count2 + k_back >= count:
            k_back = k_remove - 1
        if count2 + k_back < target:
            k_back = target - count2
        if k_back > 0:
            order = np.lexsort((cand, -err[cand]))
            trial[cand[order[:k_back]]] = 1
        mask_flat = trial
        count = int(mask_flat.sum())
    assert count == target
    return Mask(mask_flat.reshape(f.height, f.width))


def nlpe(f: Image, mask: Mask, cfg: NlpeConfig | None = None,
         solver: InpaintSolver | None = None) -> Mask:
    """Nonlocal pixel exchange: relocate single stored pixels to
    high-error positions, keeping only swaps that lower the MSE.

    One cycle attempts as many swaps as there are stored pixels; each
    attempt tries ``candidates`` target positions sampled with
    probability proportional to the pointwise error.
    """
    if cfg is None:
        cfg = NlpeConfig()
    if solver is None:
        solver = InpaintSolver()
    count = mask.count
    n = f.height * f.width
    if count == 0 or count == n:
        raise ValueError("mask must be nonempty and not full")
    rng = np.random.default_rng(cfg.seed)
    cur = mask.indicator.ravel().copy()
    u, _ = solver.inpaint(f, mask)
    best_mse = quality(f, u).mse
    for _ in range(cfg.cycles):
        for _ in range(count):
            if best_mse <= cfg.mse_floor:
                break  # numerically exact already; nothing to gain
            err = _error_map(u, f).ravel()
            members = np.nonzero(cur)[0]
            src = rng.choice(members)
            free = np.nonzero(cur == 0)[0]
            weights = err[free]
            wsum = weights.sum()
            k = min(cfg.candidates, free.size)
            if wsum > 0:
                targets = rng.choice(free, size=k, replace=False,
                                     p=weights / wsum)
            else:
                targets = rng.choice(free, size=k, replace=False)
            best_swap = None
            for dst in np.sort(targets):
                trial = cur.copy()
                trial[src] = 0
                trial[dst] = 1
                ut, _ = solver.inpaint(
                    f, Mask(trial.reshape(f.height, f.width)), init=u)
                mse_t = quality(f, ut).mse
                if mse_t < best_mse and (best_swap is None
                                         or mse_t < best_swap[0]):
                    best_swap = (mse_t, dst, ut)
            if best_swap is not None:
                best_mse, dst, u = best_swap
                cur[src] = 0
                cur[dst] = 1
    out = Mask(cur.reshape(f.height, f.width))
    assert out.count == count
    return out


def history_csv_rows(history):
    """Render densification history rows for the CSV emitters."""
    return [
        {"iteration": it, "mask_count": cnt, "mse": mse, "psnr": psnr,
         "seconds": sec}
        for it, cnt, mse, psnr, sec in history
    ]
