"""Selects the compiled kernels when available, the pure-Python ones otherwise.

Set WAVEKIT_PURE_PYTHON=1 to force the fallback.
"""
from __future__ import annotations

import os

from . import _purepy

BACKEND = "python"
_impl = _purepy
if os.environ.get("WAVEKIT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _speedups as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _purepy

two_square_pairs = _impl.two_square_pairs
two_square_count_table = _impl.two_square_count_table
marching_squares = _impl.marching_squares

__all__ = ["BACKEND", "two_square_pairs", "two_square_count_table", "marching_squares"]
