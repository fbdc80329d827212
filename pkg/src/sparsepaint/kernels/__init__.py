"""Backend selection for the hot kernels.

``SPARSEPAINT_BACKEND`` picks the implementation: ``numba`` (default when
importable), ``numpy`` for the pure-numpy fallback, or ``auto``.
``SPARSEPAINT_THREADS`` caps the numba thread pool; default is all cores.
Within one backend, results are bit-identical across runs and thread
counts; across backends they agree only to rounding.
"""

import os

_KERNEL_NAMES = [
    "negated_laplacian",
    "inpaint_matvec",
    "sym_matvec",
    "sym_rhs",
    "ct_apply",
    "sym_residual",
    "oras_apply",
    "restrict_values",
    "restrict_mask",
    "prolongate",
    "jfa_run",
    "jfa_dist2",
    "fs_dither",
    "assign_triangles",
    "fallback_assign",
    "reduce_cells",
]


def _load_numba():
    threads = os.environ.get("SPARSEPAINT_THREADS", "").strip()
    if threads:
        import numba

        numba.set_num_threads(max(1, int(threads)))
    from . import numba_impl

    return numba_impl


def _select():
    requested = os.environ.get("SPARSEPAINT_BACKEND", "auto").strip().lower()
    if requested in ("", "auto"):
        try:
            return "numba", _load_numba()
        except ImportError:
            from . import numpy_impl

            return "numpy", numpy_impl
    if requested == "numba":
        return "numba", _load_numba()
    if requested == "numpy":
        from . import numpy_impl

        return "numpy", numpy_impl
    raise ValueError(
        f"SPARSEPAINT_BACKEND must be 'numba', 'numpy' or 'auto', "
        f"got {requested!r}")


BACKEND, _impl = _select()

for _name in _KERNEL_NAMES:
    globals()[_name] = getattr(_impl, _name)

__all__ = ["BACKEND"] + _KERNEL_NAMES
