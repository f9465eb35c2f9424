"""Kernel dispatch: the compiled extension when importable, numpy otherwise.

Set ``UNICONV_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels
if os.environ.get("UNICONV_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels


def _prep(px, py):
    return np.ascontiguousarray(px, dtype=np.int_), np.ascontiguousarray(py, dtype=np.int_)


def pair_midpoint_violations(px, py, ok, impl=None):
    impl = impl or _impl
    px, py = _prep(px, py)
    ok = np.ascontiguousarray(ok, dtype=np.uint8)
    count, i, j = impl.pair_midpoint_violations(px, py, ok)
    return int(count), int(i), int(j)


def min_pair_midpoint_depth(px, py, depth, eps, tol, impl=None):
    impl = impl or _impl
    px, py = _prep(px, py)
    depth = np.ascontiguousarray(depth, dtype=float)
    best, count, i, j = impl.min_pair_midpoint_depth(px, py, depth, float(eps), float(tol))
    return float(best), int(count), int(i), int(j)
