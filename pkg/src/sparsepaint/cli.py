"""Batch command-line frontend.

Subcommands: inpaint, mask, tonal, optimize, sweep, eval. Solver and
pipeline settings live in a flat key=value config file; every key is
also a command-line flag (flags win). Exit codes: 0 success, 1
numerical non-convergence (artifacts are still written), 2 usage or
I/O errors.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
import time
from dataclasses import dataclass, fields

import numpy as np

from . import pnm
from .grid import Image, Mask, quality
from .solver import InpaintSolver, MultigridConfig, OrasConfig
from .spatial import (DensificationConfig, NlpeConfig, PsConfig,
                      analytic_mask, delaunay_densify, nlpe,
                      probabilistic_sparsify, uniform_random_mask)
from .tonal import (InitConfig, RasTonalConfig, cgnr_tonal, initial_state,
                    neighbor_balance_init, ras_tonal, voronoi_richardson_init)

SPATIAL_METHODS = ("dd", "aa", "ps", "ps+nlpe", "random")
TONAL_METHODS = ("none", "balance", "voronoi-init", "cgnr", "ras", "ras+vi")


@dataclass
class PipelineConfig:
    """Flat bag of every tunable; sections map onto the library configs."""

    density: float = 0.05
    spatial: str = "dd"
    tonal: str = "ras+vi"
    seed: int = 0
    # solver (multigrid + smoother)
    block: int = 32
    overlap: int = 6
    alpha: float = 1.0
    rho: float = 0.25
    levels: int = 0
    pre: int = 1
    post: int = 1
    cycles: int = 1
    mode: str = "fmg"
    tol: float = 1e-4
    max_cycles: int = 100
    dtype: str = "float32"
    # densification
    iterations: int = 20
    growth: float = 1.0
    initial_fraction: float = -1.0  # negative = one per-iteration share
    initial_scheme: str = "laplacian-dither"
    init_sigma: float = 1.0
    # sparsification / exchange baselines
    ps_p: float = 0.3
    ps_q: float = 0.005
    nlpe_cycles: int = 5
    nlpe_candidates: int = 5
    # tonal
    tonal_block: int = 64
    tonal_overlap: int = 6
    local_iters: int = 30
    local_tol: float = 0.1
    inner_cycles: int = 2
    rel_improvement: float = 1e-3
    max_outer: int = 50
    final_tol: float = 1e-6
    vi_tau: float = 1.0
    vi_weights: str = "inverse-log"
    vi_steps: int = 20
    # output
    deterministic_output: bool = False

    def validate(self):
        if self.spatial not in SPATIAL_METHODS:
            raise ValueError(f"spatial must be one of {SPATIAL_METHODS}")
        if self.tonal not in TONAL_METHODS:
            raise ValueError(f"tonal must be one of {TONAL_METHODS}")
        if not 0 < self.density <= 1:
            raise ValueError("density must be in (0, 1]")

    def solver(self) -> InpaintSolver:
        # tol <= 0 selects the fixed-cycle budget (no residual stopping)
        return InpaintSolver(MultigridConfig(
            levels=self.levels, pre=self.pre, post=self.post,
            cycles=self.cycles, mode=self.mode,
            tol=self.tol if self.tol > 0 else None,
            max_cycles=self.max_cycles, dtype=self.dtype,
            oras=OrasConfig(block=self.block, overlap=self.overlap,
                            alpha=self.alpha, rho=self.rho)))

    def densification(self) -> DensificationConfig:
        frac = None if self.initial_fraction < 0 else self.initial_fraction
        return DensificationConfig(
            density=self.density, iterations=self.iterations,
            growth=self.growth, initial_fraction=frac,
            initial_scheme=self.initial_scheme, init_sigma=self.init_sigma,
            seed=self.seed)

    def ras(self) -> RasTonalConfig:
        return RasTonalConfig(
            block=self.tonal_block, overlap=self.tonal_overlap,
            local_iters=self.local_iters, local_tol=self.local_tol,
            inner_cycles=self.inner_cycles,
            rel_improvement=self.rel_improvement, max_outer=self.max_outer,
            final_tol=self.final_tol)

    def vi(self) -> InitConfig:
        return InitConfig(tau=self.vi_tau, weight_scheme=self.vi_weights,
                          max_steps=self.vi_steps,
                          inner_cycles=self.inner_cycles,
                          final_tol=self.final_tol)


def load_config_file(path) -> dict:
    """Parse a key=value config file; blank lines and # comments allowed."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, val = line.split("=", 1)
            out[key.strip().replace("-", "_")] = val.strip()
    return out


def _coerce(name, raw, target_type):
    if target_type is bool:
        low = str(raw).strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"config key {name}: expected a boolean, got {raw!r}")
    return target_type(raw)


def build_pipeline_config(args) -> PipelineConfig:
    cfg = PipelineConfig()
    known = {f.name: f.type for f in fields(PipelineConfig)}
    types = {name: type(getattr(cfg, name)) for name in known}
    if getattr(args, "config", None):
        for key, val in load_config_file(args.config).items():
            if key not in types:
                raise ValueError(f"unknown config key: {key}")
            setattr(cfg, key, _coerce(key, val, types[key]))
    for name in types:
        val = getattr(args, name, None)
        if val is not None:
            setattr(cfg, name, val)
    cfg.validate()
    return cfg


def _add_config_flags(parser):
    parser.add_argument("--config", help="key=value config file")
    cfg = PipelineConfig()
    for f in fields(PipelineConfig):
        flag = "--" + f.name.replace("_", "-")
        t = type(getattr(cfg, f.name))
        if t is bool:
            parser.add_argument(flag, default=None,
                                action=argparse.BooleanOptionalAction)
        else:
            parser.add_argument(flag, type=t, default=None)


def _write_csv(path, header, rows, deterministic=False):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        for row in rows:
            out = list(row)
            if deterministic and "seconds" in header:
                out[header.index("seconds")] = 0.0
            wr.writerow(out)


def _fmt_seconds(sec, deterministic):
    return 0.0 if deterministic else round(sec, 4)


def _spatial_rows(history):
    return [(it, cnt, f"{mse:.8g}", f"{psnr:.6g}", round(sec, 4))
            for it, cnt, mse, psnr, sec in history]


def _tonal_rows(history):
    rows = []
    for it, mse, sec, solves in history:
        psnr = math.inf if mse == 0 else 10 * math.log10(255.0 ** 2 / mse)
        rows.append((it, f"{mse:.8g}", f"{psnr:.6g}", round(sec, 4), solves))
    return rows


def run_spatial(f: Image, cfg: PipelineConfig, solver: InpaintSolver):
    """Spatial stage: returns (mask, history or None)."""
    n = f.height * f.width
    target = int(cfg.density * n)
    if cfg.spatial == "dd":
        mask, _, hist = delaunay_densify(f, cfg.densification(), solver)
        return mask, hist
    if cfg.spatial == "aa":
        return analytic_mask(f, cfg.density, dither="floyd-steinberg",
                             sigma=cfg.init_sigma, seed=cfg.seed), None
    if cfg.spatial == "random":
        return uniform_random_mask(f.height, f.width, target, cfg.seed), None
    ps_cfg = PsConfig(candidate_fraction=cfg.ps_p, return_fraction=cfg.ps_q,
                      seed=cfg.seed)
    mask = probabilistic_sparsify(f, cfg.density, ps_cfg, solver)
    if cfg.spatial == "ps+nlpe":
        mask = nlpe(f, mask, NlpeConfig(cycles=cfg.nlpe_cycles,
                                        candidates=cfg.nlpe_candidates,
                                        seed=cfg.seed), solver)
    return mask, None


def run_tonal(f: Image, mask: Mask, cfg: PipelineConfig,
              solver: InpaintSolver):
    """Tonal stage: returns the final TonalState."""
    if cfg.tonal == "none":
        return initial_state(f, mask, solver, final_tol=cfg.final_tol)
    if cfg.tonal == "balance":
        u, _ = solver.inpaint(f, mask, tol=cfg.final_tol)
        return neighbor_balance_init(f, u, mask, solver,
                                     final_tol=cfg.final_tol)
    if cfg.tonal == "voronoi-init":
        return voronoi_richardson_init(f, mask, cfg.vi(), solver)
    if cfg.tonal == "cgnr":
        return cgnr_tonal(f, mask, solver=solver,
                          rel_improvement=cfg.rel_improvement,
                          max_iters=cfg.max_outer,
                          inner_cycles=cfg.inner_cycles,
                          final_tol=cfg.final_tol)
    if cfg.tonal == "ras":
        return ras_tonal(f, mask, cfg=cfg.ras(), solver=solver)
    vi = voronoi_richardson_init(f, mask, cfg.vi(), solver)
    return ras_tonal(f, mask, init=vi, cfg=cfg.ras(), solver=solver)


def run_pipeline(f: Image, cfg: PipelineConfig):
    """Full optimize pipeline; returns (mask, state, histories, seconds)."""
    solver = cfg.solver()
    t0 = time.perf_counter()
    mask, spatial_hist = run_spatial(f, cfg, solver)
    state = run_tonal(f, mask, cfg, solver)
    return mask, state, spatial_hist, time.perf_counter() - t0


def _fail(msg, code=2):
    print(f"error: {msg}", file=sys.stderr)
    return code


def cmd_eval(args):
    ref = pnm.read_image(args.reference)
    test = pnm.read_image(args.test)
    q = quality(ref, test)
    print(f"mse={q.mse:.8g} psnr={q.psnr_label()}")
    return 0


def cmd_inpaint(args):
    cfg = build_pipeline_config(args)
    mask = pnm.read_mask(args.mask)
    values = pnm.read_tonal(args.values, wide=args.wide_values)
    if (values.height, values.width) != (mask.height, mask.width):
        raise ValueError("mask and value dimensions disagree")
    solver = cfg.solver()
    u, report = solver.inpaint(values, mask)
    pnm.write_image(args.output, u)
    if args.reference:
        ref = pnm.read_image(args.reference)
        q = quality(ref, u)
        print(f"mse={q.mse:.8g} psnr={q.psnr_label()}")
    return 0 if report.converged else 1


def cmd_mask(args):
    cfg = build_pipeline_config(args)
    f = pnm.read_image(args.input)
    solver = cfg.solver()
    mask, hist = run_spatial(f, cfg, solver)
    pnm.write_mask(args.output, mask)
    if args.csv and hist is not None:
        _write_csv(args.csv, ["iteration", "mask_count", "mse", "psnr",
                              "seconds"], _spatial_rows(hist),
                   cfg.deterministic_output)
    print(f"mask_count={mask.count} density={mask.density():.6f}")
    return 0


def cmd_tonal(args):
    cfg = build_pipeline_config(args)
    f = pnm.read_image(args.input)
    mask = pnm.read_mask(args.mask)
    solver = cfg.solver()
    state = run_tonal(f, mask, cfg, solver)
    pnm.write_tonal(args.output_values, state.g, mask)
    pnm.write_tonal(args.output_values + ".wide", state.g, mask, wide=True)
    if args.output_recon:
        pnm.write_image(args.output_recon, state.u)
    if args.csv:
        _write_csv(args.csv, ["iteration", "mse", "psnr", "seconds",
                              "inner_solves"], _tonal_rows(state.history),
                   cfg.deterministic_output)
    q = quality(f, state.u)
    print(f"mse={q.mse:.8g} psnr={q.psnr_label()}")
    return 0 if state.converged else 1


def cmd_optimize(args):
    cfg = build_pipeline_config(args)
    f = pnm.read_image(args.input)
    mask, state, spatial_hist, seconds = run_pipeline(f, cfg)
    prefix = args.output_prefix
    ext = "pgm" if f.channels == 1 else "ppm"
    pnm.write_mask(f"{prefix}.mask.pbm", mask)
    pnm.write_tonal(f"{prefix}.values.{ext}", state.g, mask)
    pnm.write_tonal(f"{prefix}.values16.{ext}", state.g, mask, wide=True)
    pnm.write_image(f"{prefix}.recon.{ext}", state.u)
    if spatial_hist is not None:
        _write_csv(f"{prefix}.spatial.csv",
                   ["iteration", "mask_count", "mse", "psnr", "seconds"],
                   _spatial_rows(spatial_hist), cfg.deterministic_output)
    if state.history:
        _write_csv(f"{prefix}.tonal.csv",
                   ["iteration", "mse", "psnr", "seconds", "inner_solves"],
                   _tonal_rows(state.history), cfg.deterministic_output)
    q = quality(f, state.u)
    print(f"{cfg.density},{cfg.spatial},{cfg.tonal},{q.mse:.8g},"
          f"{q.psnr_label()},{_fmt_seconds(seconds, cfg.deterministic_output)}")
    return 0 if state.converged else 1


def box_downscale(img: Image, resolution: int) -> Image:
    """Reduce the longer side to roughly ``resolution`` by integer box
    averaging (experiment setup; decoupled from the solver transfers)."""
    factor = max(1, round(max(img.height, img.width) / resolution))
    if factor == 1:
        return img.copy()
    h = (img.height // factor) * factor
    w = (img.width // factor) * factor
    data = img.data[:, :h, :w]
    c = data.shape[0]
    view = data.reshape(c, h // factor, factor, w // factor, factor)
    return Image(view.mean(axis=(2, 4)))


def cmd_sweep(args):
    import os

    cfg = build_pipeline_config(args)
    densities = [float(x) for x in args.densities.split(",") if x]
    if not densities:
        raise ValueError("empty densities list")
    resolutions = [int(x) for x in args.resolutions.split(",") if x] \
        if args.resolutions else [0]
    names = sorted(x for x in os.listdir(args.corpus)
                   if x.lower().endswith((".pgm", ".ppm")))
    if not names:
        raise ValueError(f"no PGM/PPM images found in {args.corpus}")
    rows = []
    for name in names:
        base = pnm.read_image(os.path.join(args.corpus, name))
        for res in resolutions:
            img = box_downscale(base, res) if res else base
            for dens in densities:
                run_cfg = PipelineConfig(**{
                    f.name: getattr(cfg, f.name)
                    for f in fields(PipelineConfig)})
                run_cfg.density = dens
                try:
                    mask, state, _, seconds = run_pipeline(img, run_cfg)
                    q = quality(img, state.u)
                    rows.append((name, img.width, img.height, dens,
                                 cfg.spatial, cfg.tonal, mask.count,
                                 f"{q.mse:.8g}", f"{q.psnr:.6g}",
                                 _fmt_seconds(seconds,
                                              cfg.deterministic_output),
                                 "ok"))
                except Exception as exc:  # record the failure, keep going
                    rows.append((name, img.width, img.height, dens,
                                 cfg.spatial, cfg.tonal, 0, "", "", 0.0,
                                 f"failed: {exc}"))
    _write_csv(args.csv, ["image", "width", "height", "density", "spatial",
                          "tonal", "mask_count", "mse", "psnr", "seconds",
                          "status"], rows, cfg.deterministic_output)
    failures = sum(1 for r in rows if r[-1] != "ok")
    print(f"sweep: {len(rows)} rows, {failures} failures -> {args.csv}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sparsepaint",
        description="Sparse-pixel image reconstruction and data optimization")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="MSE/PSNR between two images")
    p.add_argument("reference")
    p.add_argument("test")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("inpaint", help="reconstruct from mask + values")
    p.add_argument("--mask", required=True)
    p.add_argument("--values", required=True)
    p.add_argument("--wide-values", action="store_true",
                   help="values file is the 16-bit fixed-point variant")
    p.add_argument("--output", required=True)
    p.add_argument("--reference")
    _add_config_flags(p)
    p.set_defaults(func=cmd_inpaint)

    p = sub.add_parser("mask", help="spatial optimization only")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--csv")
    _add_config_flags(p)
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("tonal", help="tonal optimization for a given mask")
    p.add_argument("--input", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--output-values", required=True)
    p.add_argument("--output-recon")
    p.add_argument("--csv")
    _add_config_flags(p)
    p.set_defaults(func=cmd_tonal)

    p = sub.add_parser("optimize", help="full pipeline: mask, tonal, recon")
    p.add_argument("--input", required=True)
    p.add_argument("--output-prefix", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep", help="corpus x densities x resolutions")
    p.add_argument("--corpus", required=True)
    p.add_argument("--densities", required=True)
    p.add_argument("--resolutions", default="")
    p.add_argument("--csv", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        return _fail(exc)


if __name__ == "__main__":
    sys.exit(main())
