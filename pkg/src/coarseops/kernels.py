"""Backend selection for the numeric kernels.

The compiled extension is preferred when it imports; otherwise the numpy
fallback is used.  ``COARSEOPS_FORCE_PURE=1`` forces the fallback, which
is useful for benchmarking and for debugging kernel-level disagreements.

Both backends expose the same functions:

``spectral_norm(m, tol, max_iter) -> (value, residual, iterations)``
``top_singular(m, tol, max_iter) -> (u, sigma, v, residual, iterations)``
``singular_values(m) -> descending ndarray``
``block_norms(m, row_off, col_off) -> (ny, nx) ndarray``
``masked_norm(m, rows, cols) -> float``
``ql_exact(m, row_off, col_off, nbr_masks) -> float``
"""

from __future__ import annotations

import os

from . import _purekernels

if os.environ.get("COARSEOPS_FORCE_PURE") == "1":
    _impl = _purekernels
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _purekernels

SMALL_DIM = _purekernels.SMALL_DIM

spectral_norm = _impl.spectral_norm
top_singular = _impl.top_singular
singular_values = _impl.singular_values
block_norms = _impl.block_norms
masked_norm = _impl.masked_norm
ql_exact = _impl.ql_exact


def backend() -> str:
    """Name of the active backend: ``"compiled"`` or ``"pure"``."""
    return _impl.BACKEND_NAME
