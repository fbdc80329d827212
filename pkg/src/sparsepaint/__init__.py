"""Sparse-pixel image reconstruction.

Reconstructs images from a small stored subset of pixels by diffusion
interpolation, and optimizes both where those pixels sit (mesh-guided
densification) and which values they store (matrix-free least squares
via domain decomposition).
"""

from .geometry import (CellErrors, DelaunayMesh, VoronoiLabels,
                       accumulate_errors, delaunay_from_voronoi,
                       export_labels_ppm, export_mesh_text,
                       jump_flood_voronoi, voronoi_cell_errors,
                       voronoi_weights)
from .grid import (Image, Mask, QualityReport, StencilSpec,
                   apply_inpainting_matrix, apply_negated_laplacian,
                   apply_symmetrized_matrix, prolongate, quality, restrict,
                   restrict_mask, symmetrized_rhs)
from .kernels import BACKEND
from .pnm import (read_image, read_mask, read_tonal, write_image, write_mask,
                  write_tonal)
from .solver import (BlockDecomposition, GridHierarchy, InpaintSolver,
                     MultigridConfig, OrasConfig, SolverReport,
                     build_decomposition, cg_solve, inpaint, oras_iteration,
                     vcycle)
from .spatial import (DensificationConfig, NlpeConfig, PsConfig,
                      analytic_mask, delaunay_densify, nlpe,
                      probabilistic_sparsify, uniform_random_mask)
from .tonal import (InitConfig, RasTonalConfig, TonalState, apply_B, apply_Bt,
                    cgnr_tonal, dense_tonal_oracle, initial_state,
                    neighbor_balance_init, ras_tonal, voronoi_richardson_init)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Image", "Mask", "QualityReport", "StencilSpec",
    "apply_negated_laplacian", "apply_inpainting_matrix",
    "apply_symmetrized_matrix", "symmetrized_rhs", "quality",
    "restrict", "restrict_mask", "prolongate",
    "read_image", "write_image", "read_mask", "write_mask",
    "read_tonal", "write_tonal",
    "OrasConfig", "MultigridConfig", "SolverReport", "BlockDecomposition",
    "GridHierarchy", "InpaintSolver", "build_decomposition",
    "cg_solve", "oras_iteration", "vcycle", "inpaint",
    "VoronoiLabels", "DelaunayMesh", "CellErrors",
    "jump_flood_voronoi", "delaunay_from_voronoi", "accumulate_errors",
    "voronoi_cell_errors", "voronoi_weights",
    "export_labels_ppm", "export_mesh_text",
    "DensificationConfig", "PsConfig", "NlpeConfig",
    "analytic_mask", "delaunay_densify", "probabilistic_sparsify", "nlpe",
    "uniform_random_mask",
    "TonalState", "RasTonalConfig", "InitConfig",
    "apply_B", "apply_Bt", "cgnr_tonal", "ras_tonal",
    "neighbor_balance_init", "voronoi_richardson_init",
    "dense_tonal_oracle", "initial_state",
]
