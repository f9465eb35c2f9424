"""Pure numpy versions of the raster kernels, processed in row blocks."""

import numpy as np

BLOCK = 512


def pair_midpoint_violations(px, py, ok):
    px = np.asarray(px, dtype=np.int64)
    py = np.asarray(py, dtype=np.int64)
    ok = np.asarray(ok, dtype=bool)
    n = len(px)
    count = 0
    first = (-1, -1)
    for s in range(0, n, BLOCK):
        i = np.arange(s, min(s + BLOCK, n))
        cx = (px[i, None] + px[None, :] + 1) // 2
        cy = (py[i, None] + py[None, :] + 1) // 2
        bad = ~ok[cx, cy] & (np.arange(n)[None, :] > i[:, None])
        c = int(bad.sum())
        if c and count == 0:
            r, col = np.argwhere(bad)[0]
            first = (int(i[r]), int(col))
        count += c
    return count, first[0], first[1]


def min_pair_midpoint_depth(px, py, depth, eps, tol):
    px = np.asarray(px, dtype=np.int64)
    py = np.asarray(py, dtype=np.int64)
    depth = np.asarray(depth, dtype=float)
    n = len(px)
    lo = eps - tol
    lo2 = lo * lo if lo > 0 else 0.0
    hi2 = (eps + tol) ** 2
    best, count, bi, bj = 1e300, 0, -1, -1
    for s in range(0, n, BLOCK):
        i = np.arange(s, min(s + BLOCK, n))
        dx = (px[None, :] - px[i, None]).astype(float)
        dy = (py[None, :] - py[i, None]).astype(float)
        d = dx * dx + dy * dy
        sel = (d >= lo2) & (d <= hi2) & (np.arange(n)[None, :] > i[:, None])
        r, col = np.nonzero(sel)
        if len(r) == 0:
            continue
        count += len(r)
        gi = i[r]
        mx = 0.5 * (px[gi] + px[col])
        my = 0.5 * (py[gi] + py[col])
        x0, x1 = np.floor(mx).astype(np.int64), np.ceil(mx).astype(np.int64)
        y0, y1 = np.floor(my).astype(np.int64), np.ceil(my).astype(np.int64)
        v = np.minimum(
            np.minimum(depth[x0, y0], depth[x1, y0]),
            np.minimum(depth[x0, y1], depth[x1, y1]),
        )
        k = int(np.argmin(v))
        if v[k] < best:
            best, bi, bj = float(v[k]), int(gi[k]), int(col[k])
    return best, count, bi, bj
