"""Compiled vs numpy raster kernels on boundary-pair scans.

    python3 benchmarks/bench_kernels.py [--sizes 500 1000 2000 4000] [--repeat 3]

Each case rasterizes a unit disc at about 10^6 cells, takes an evenly spaced
subset of its boundary cells and times both kernels on the same input. The
two backends must agree exactly; the script exits non-zero otherwise.
"""

import argparse
import sys
import time

import numpy as np
from scipy import ndimage

from uniconv import _pykernels, kernels
from uniconv.calculus import QuadraticMap
from uniconv.geometry import PNormBall
from uniconv.imagecheck import _subsample, _tolerant, rasterize_image


def best_of(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[500, 1000, 2000, 4000])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if kernels.BACKEND != "cython":
        print("compiled extension not available; only the numpy fallback can run")
        return 1
    from uniconv import _ckernels

    img = rasterize_image(QuadraticMap.linear(np.eye(2)), PNormBall([0.0, 0.0], 1.0), seed=0)
    ok = _tolerant(img)
    depth = ndimage.distance_transform_edt(ndimage.binary_fill_holes(img.grid))
    bnd_all = img.boundary_cells()
    eps = 1.0 / img.h
    print(f"raster {img.shape}, {len(bnd_all)} boundary cells")
    print(f"{'kernel':<26}{'pairs':>8}{'cython s':>12}{'numpy s':>12}{'speedup':>10}")
    mismatch = False
    for n in args.sizes:
        b = _subsample(bnd_all, n)
        px, py = b[:, 0], b[:, 1]
        cases = [
            ("pair_midpoint_violations", lambda impl: kernels.pair_midpoint_violations(px, py, ok, impl=impl)),
            ("min_pair_midpoint_depth", lambda impl: kernels.min_pair_midpoint_depth(px, py, depth, eps, 1.0, impl=impl)),
        ]
        for name, fn in cases:
            tc, rc = best_of(lambda: fn(_ckernels), args.repeat)
            tp, rp = best_of(lambda: fn(_pykernels), args.repeat)
            mismatch |= rc != rp
            print(f"{name:<26}{len(b):>8}{tc:>12.4f}{tp:>12.4f}{tp / tc:>10.1f}")
    if mismatch:
        print("backends disagree")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
