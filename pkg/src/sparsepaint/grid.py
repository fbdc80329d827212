"""Pixel-grid containers and the shared linear-algebra substrate.

Images are stored planar as (channels, height, width) float arrays,
masks as (height, width) uint8 indicator grids. The operations here
(negated Laplacian with reflecting boundaries, the inpainting system
matrix and its symmetrized form, grid transfers, quality metrics)
back every solver in the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels


@dataclass
class StencilSpec:
    """Grid spacing and boundary rule of the 5-point stencil."""

    h: float = 1.0
    boundary: str = "reflect"

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("grid spacing h must be positive")
        if self.boundary != "reflect":
            raise ValueError("only reflecting boundaries are supported")

    @property
    def inv_h2(self) -> float:
        return 1.0 / (self.h * self.h)


DEFAULT_STENCIL = StencilSpec()


@dataclass
class Image:
    """Multi-channel image; ``data`` has shape (channels, height, width)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim == 2:
            arr = arr[None]
        if arr.ndim != 3:
            raise ValueError("image data must be 2-D or (channels, H, W)")
        if not np.issubdtype(arr.dtype, np.floating):
            arr = arr.astype(np.float64)
        if arr.size and not np.all(np.isfinite(arr)):
            raise ValueError("image values must be finite")
        self.data = arr

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self):
        return self.data.shape

    def copy(self) -> "Image":
        return Image(self.data.copy())

    def astype(self, dtype) -> "Image":
        return Image(self.data.astype(dtype))

    @classmethod
    def zeros(cls, channels, height, width, dtype=np.float64) -> "Image":
        return cls(np.zeros((channels, height, width), dtype=dtype))


@dataclass
class Mask:
    """Binary indicator over the pixel grid; shape (height, width)."""

    indicator: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.indicator)
        if arr.ndim != 2:
            raise ValueError("mask must be 2-D")
        self.indicator = (arr != 0).astype(np.uint8)

    @property
    def height(self) -> int:
        return self.indicator.shape[0]

    @property
    def width(self) -> int:
        return self.indicator.shape[1]

    @property
    def count(self) -> int:
        return int(self.indicator.sum())

    def density(self) -> float:
        return self.count / self.indicator.size

    def copy(self) -> "Mask":
        return Mask(self.indicator.copy())


@dataclass
class QualityReport:
    """Mean squared error over all pixels and channels, and PSNR vs a
    255 peak. A zero-MSE comparison reports the ``exact`` sentinel."""

    mse: float
    psnr: float = field(init=False)

    def __post_init__(self):
        if self.mse < 0:
            raise ValueError("mse must be nonnegative")
        if self.mse == 0.0:
            self.psnr = math.inf
        else:
            self.psnr = 10.0 * math.log10(255.0 ** 2 / self.mse)

    @property
    def exact(self) -> bool:
        return self.mse == 0.0

    def psnr_label(self) -> str:
        return "exact" if self.exact else f"{self.psnr:.4f}"

    def __str__(self):
        return f"mse={self.mse:.6g} psnr={self.psnr_label()}"


def _check_same_shape(a: Image, b: Image):
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")


def _check_mask_shape(img: Image, mask: Mask):
    if (img.height, img.width) != (mask.height, mask.width):
        raise ValueError("image and mask dimensions disagree")


def apply_negated_laplacian(img: Image, stencil: StencilSpec = DEFAULT_STENCIL) -> Image:
    """L u: 4u - (left + right + up + down), out-of-range neighbors
    replaced by the center value (reflecting boundary), divided by h^2."""
    return Image(kernels.negated_laplacian(img.data, stencil.inv_h2))


def apply_inpainting_matrix(img: Image, mask: Mask,
                            stencil: StencilSpec = DEFAULT_STENCIL) -> Image:
    """A u with A = C + (I-C) L: identity at mask pixels, Laplacian rows
    elsewhere."""
    _check_mask_shape(img, mask)
    return Image(kernels.inpaint_matvec(img.data, mask.indicator, stencil.inv_h2))


def apply_symmetrized_matrix(img: Image, mask: Mask,
                             stencil: StencilSpec = DEFAULT_STENCIL) -> Image:
    """The symmetric positive definite reformulation C + (I-C) L (I-C)
    applied to img; shares its solution with the raw system."""
    _check_mask_shape(img, mask)
    return Image(kernels.sym_matvec(img.data, mask.indicator, stencil.inv_h2))


def symmetrized_rhs(f: Image, mask: Mask,
                    stencil: StencilSpec = DEFAULT_STENCIL) -> Image:
    """Right-hand side (C - (I-C) L C) f matching apply_symmetrized_matrix.

    Note: expects the raw right-hand side of the original system, i.e.
    C f for inpainting; entries of f outside the mask also participate
    when solving general systems.
    """
    _check_mask_shape(f, mask)
    return Image(kernels.sym_rhs(f.data, mask.indicator, stencil.inv_h2))


def quality(reference: Image, test: Image) -> QualityReport:
    """MSE and PSNR of test against reference."""
    _check_same_shape(reference, test)
    diff = reference.data.astype(np.float64) - test.data.astype(np.float64)
    mse = float(np.mean(diff * diff))
    return QualityReport(mse=mse)


def restrict(img: Image) -> Image:
    """Fine-to-coarse transfer: 2x2 block average, coarse size ceil(n/2)."""
    if img.height < 2 and img.width < 2:
        raise ValueError("nothing to restrict: image is a single pixel")
    return Image(kernels.restrict_values(img.data))


def restrict_mask(mask: Mask, values: Image) -> tuple[Mask, Image]:
    """Coarse mask pixel = OR over its fine 2x2 block; its value is the
    average of the covered fine mask-pixel values."""
    _check_mask_shape(values, mask)
    cmask, cvals = kernels.restrict_mask(mask.indicator, values.data)
    return Mask(cmask), Image(cvals)


def prolongate(coarse: Image, height: int, width: int) -> Image:
    """Coarse-to-fine bilinear interpolation onto a (height, width) grid."""
    return Image(kernels.prolongate(coarse.data, height, width))


def clamp_to_bytes(img: Image) -> np.ndarray:
    """Round and clamp to uint8; only used at image export."""
    return np.clip(np.rint(img.data), 0, 255).astype(np.uint8)
