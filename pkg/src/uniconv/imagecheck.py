"""
Raster oracle for images f(S) in the plane.

The image is approximated by marking the cells of a square lattice hit by
f(x) for dense low-discrepancy samples x of S, plus dense samples of the
boundary of S. Convexity is refuted (never proved) by midpoint tests on cell
centres, and the modulus of the image is estimated from a Euclidean distance
transform of the marked region.
"""

from __future__ import annotations

import io
import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.stats import qmc

from . import kernels
from .calculus import SmoothMap
from .cones import ProductCone, Singleton
from .errors import InvalidParameterError, UnsupportedDimensionError
from .geometry import ConvexSet, boundary_points, sample_points
from .sampling import as_rng, unit_directions

log = logging.getLogger(__name__)

CHUNK = 2**18
_BOX3 = np.ones((3, 3), dtype=bool)


@dataclass
class RasterImage:
    """Boolean lattice ``grid[ix, iy]``; cell (ix, iy) covers
    [x0 + ix h, x0 + (ix+1) h) x [y0 + iy h, y0 + (iy+1) h) with (x0, y0) = bbox[:2]."""

    grid: np.ndarray
    h: float
    bbox: tuple[float, float, float, float]
    samples: int = 0

    @property
    def marked_count(self) -> int:
        return int(self.grid.sum())

    @property
    def shape(self) -> tuple[int, int]:
        return self.grid.shape

    @property
    def area(self) -> float:
        return self.marked_count * self.h * self.h

    def cell_of(self, Y) -> np.ndarray:
        Y = np.asarray(Y, dtype=float)
        origin = np.array(self.bbox[:2])
        return np.floor((Y - origin) / self.h).astype(np.int64)

    def centers(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=float)
        return np.array(self.bbox[:2]) + (idx + 0.5) * self.h

    def mark(self, Y) -> int:
        """Mark the cells hit by the rows of Y; returns how many fell outside the box."""
        idx = self.cell_of(Y)
        nx, ny = self.grid.shape
        inb = (idx[:, 0] >= 0) & (idx[:, 0] < nx) & (idx[:, 1] >= 0) & (idx[:, 1] < ny)
        self.grid[idx[inb, 0], idx[inb, 1]] = True
        self.samples += int(inb.sum())
        return int((~inb).sum())

    def boundary_cells(self, filled: bool = True) -> np.ndarray:
        """Marked cells with at least one unmarked 4-neighbour, as (k, 2) indices."""
        g = ndimage.binary_fill_holes(self.grid) if filled else self.grid
        inner = ndimage.binary_erosion(g, structure=ndimage.generate_binary_structure(2, 1), border_value=0)
        return np.argwhere(g & ~inner)

    @classmethod
    def empty_for(cls, lo, hi, h: float, margin_cells: int = 3) -> "RasterImage":
        lo = np.asarray(lo, dtype=float) - margin_cells * h
        hi = np.asarray(hi, dtype=float) + margin_cells * h
        shape = tuple(int(math.ceil(v)) + 1 for v in (hi - lo) / h)
        return cls(np.zeros(shape, dtype=bool), float(h), (lo[0], lo[1], lo[0] + shape[0] * h, lo[1] + shape[1] * h))

    @classmethod
    def from_points(cls, points, h: float, margin_cells: int = 3) -> "RasterImage":
        """Raster of an explicit planar point cloud (used for synthetic controls)."""
        P = np.asarray(points, dtype=float)
        if P.ndim != 2 or P.shape[1] != 2:
            raise UnsupportedDimensionError("raster images live in R^2")
        if not h > 0:
            raise InvalidParameterError("cell size must be positive")
        img = cls.empty_for(P.min(axis=0), P.max(axis=0), h, margin_cells)
        img.mark(P)
        return img


def _pilot(f: SmoothMap, S: ConvexSet, rng):
    X = sample_points(S, 4096, seed=rng)
    B = boundary_points(S, unit_directions(2048, S.dim, seed=rng))
    return X, f.eval_batch(np.vstack([X, B]))


def _sample_budget(f, S, X, h, density, fallback):
    """Samples of S needed for ``density`` expected hits in the sparsest image cell."""
    lo, hi = S.bounding_box()
    box_vol = float(np.prod(hi - lo))
    # fraction of the box inside S, from a quick Sobol estimate
    U = lo + qmc.Sobol(S.dim, scramble=True, seed=1).random_base2(12) * (hi - lo)
    vol = box_vol * float(S.inside(U).mean())
    if f.n == 2 and vol > 0:
        jac = np.abs(np.linalg.det(f.jacobian_batch(X)))
        stretch = float(jac.max())
        if stretch > 0:
            return int(math.ceil(density * vol * stretch / (h * h))), vol
    return fallback, vol


def _fill(f, S, Y, lo, hi, h, budget, boundary_samples, seed):
    rng = as_rng(seed)
    img = RasterImage.empty_for(lo, hi, h, margin_cells=3)
    slo, shi = S.bounding_box()
    engine = qmc.Sobol(S.dim, scramble=True, seed=rng)
    taken = 0
    outside = 0
    while taken < budget:
        U = slo + engine.random(CHUNK) * (shi - slo)
        U = U[S.inside(U)][: budget - taken]
        taken += len(U)
        outside += img.mark(f.eval_batch(U))
    dirs = unit_directions(boundary_samples, S.dim, seed=rng)
    outside += img.mark(f.eval_batch(boundary_points(S, dirs)))
    outside += img.mark(Y)
    return img, outside


def rasterize_image(
    f: SmoothMap,
    S: ConvexSet,
    h: float | None = None,
    density: float = 4.0,
    cells: int = 1_000_000,
    seed=0,
    max_samples: int = 2**23,
    boundary_samples: int | None = None,
) -> RasterImage:
    """Raster of f(S) at cell size h (default: about ``cells`` cells over the image box).

    The number of interior samples is chosen so that the cell receiving the
    fewest samples in expectation (where |det Df| is largest) still gets
    ``density`` of them, capped at ``max_samples``.
    """
    if f.m != 2:
        raise UnsupportedDimensionError(f"image rasters need m = 2, got m = {f.m}")
    if S.dim != f.n:
        raise InvalidParameterError("set dimension does not match the map")
    rng = as_rng(seed)
    X, Y = _pilot(f, S, rng)
    lo, hi = Y.min(axis=0), Y.max(axis=0)
    ext = hi - lo
    if h is None:
        if ext.max() == 0.0:
            h = 1e-6 * (1.0 + float(np.abs(Y).max()))
        else:
            eff = np.maximum(ext, 1e-3 * ext.max())
            h = math.sqrt(float(np.prod(eff)) / cells)
    if not h > 0:
        raise InvalidParameterError("cell size must be positive")
    n_cells = float(np.prod(ext / h + 1.0))
    budget, _ = _sample_budget(f, S, X, h, density, int(density * n_cells * 4))
    budget = int(min(max(budget, 4096), max_samples))
    if boundary_samples is None:
        boundary_samples = int(min(2**21, 32 * (ext.sum() / h + 8)))

    for grow in (0.1, 0.5, 2.0):
        img, outside = _fill(f, S, Y, lo - grow * ext, hi + grow * ext, h, budget, boundary_samples, seed)
        if not outside:
            break
        # the pilot underestimated the image box; rebuild with a wider one
        log.info("raster box grown: %d samples fell outside", outside)
    return img


@dataclass(frozen=True)
class MidpointTest:
    violations: int
    ok: bool
    sampled_pairs: int
    boundary_pairs: int
    first_violation: tuple | None = None


def _tolerant(img: RasterImage) -> np.ndarray:
    return ndimage.binary_dilation(img.grid, structure=_BOX3)


def _subsample(idx: np.ndarray, limit: int) -> np.ndarray:
    if len(idx) <= limit:
        return idx
    c = idx.mean(axis=0)
    order = np.argsort(np.arctan2(idx[:, 1] - c[1], idx[:, 0] - c[0]), kind="stable")
    keep = np.linspace(0, len(idx) - 1, limit).round().astype(int)
    return idx[order[keep]]


def midpoint_convexity_test(
    img: RasterImage, pairs: int = 100_000, seed=0, max_boundary: int = 3000
) -> MidpointTest:
    """Midpoints of marked-cell centres must be marked, up to one cell of slack.

    Random pairs of marked cells are checked, and every pair from a
    (subsampled) list of boundary cells is scanned exhaustively by the
    compiled kernel, since boundary pairs are where nonconvexity shows.
    """
    marked = np.argwhere(img.grid)
    if len(marked) == 0:
        raise InvalidParameterError("raster has no marked cells")
    ok = _tolerant(img)
    rng = as_rng(seed)
    i = rng.integers(0, len(marked), pairs)
    j = rng.integers(0, len(marked), pairs)
    mid = (marked[i] + marked[j] + 1) // 2
    bad = ~ok[mid[:, 0], mid[:, 1]]
    first = None
    if bad.any():
        k = int(np.argmax(bad))
        first = (tuple(img.centers(marked[i[k]])), tuple(img.centers(marked[j[k]])))
    bnd = _subsample(img.boundary_cells(filled=False), max_boundary)
    bcount, bi, bj = kernels.pair_midpoint_violations(bnd[:, 0], bnd[:, 1], ok)
    if first is None and bcount:
        first = (tuple(img.centers(bnd[bi])), tuple(img.centers(bnd[bj])))
    total = int(bad.sum()) + bcount
    nb = len(bnd)
    return MidpointTest(total, total == 0, pairs, nb * (nb - 1) // 2, first)


@dataclass(frozen=True)
class ImageModulus:
    curve: list
    c_hat: float
    tolerance: float
    c_tolerance: float
    skipped: list = field(default_factory=list)

    def rows(self):
        return [(float(e), float(d)) for e, d, _ in self.curve]


def _raster_diameter(img: RasterImage, bnd) -> float:
    pts = img.centers(_subsample(bnd, 2000))
    best = 0.0
    for s in range(0, len(pts), 512):
        d = np.linalg.norm(pts[s : s + 512, None, :] - pts[None, :, :], axis=-1)
        best = max(best, float(d.max()))
    return best


def empirical_image_modulus(
    img: RasterImage,
    epsilon_grid=None,
    min_pairs: int = 8,
    max_boundary: int = 4000,
    chord_tol_cells: float = 1.0,
) -> ImageModulus:
    """Modulus curve of the rastered set and the fitted constant c_hat = min delta/eps^2.

    For each eps, boundary-cell pairs at centre distance eps (within
    ``chord_tol_cells`` cells) are scanned; the depth of the midpoint is read
    from the Euclidean distance transform of the (hole-filled) raster and
    converted to an inscribed radius (D - 1/2) h. Values are accurate to about
    two cells, reported as ``tolerance``; ``c_tolerance`` is the matching
    slack on c_hat at the smallest eps used.
    """
    filled = ndimage.binary_fill_holes(img.grid)
    depth = ndimage.distance_transform_edt(filled)
    bnd = _subsample(img.boundary_cells(filled=True), max_boundary)
    if len(bnd) < 2:
        raise InvalidParameterError("raster too small to estimate a modulus")
    h = img.h
    if epsilon_grid is None:
        diam = _raster_diameter(img, bnd)
        epsilon_grid = diam * np.linspace(0.2, 0.9, 8)
    curve, skipped = [], []
    for eps in np.atleast_1d(np.asarray(epsilon_grid, dtype=float)):
        if not eps > 0:
            raise InvalidParameterError("epsilon values must be positive")
        best, count, _, _ = kernels.min_pair_midpoint_depth(
            bnd[:, 0], bnd[:, 1], depth, eps / h, chord_tol_cells
        )
        if count < min_pairs:
            log.info("epsilon %.6g skipped: only %d chord pairs", eps, count)
            skipped.append(float(eps))
            continue
        curve.append((float(eps), max(0.0, best - 0.5) * h, count))
    if not curve:
        return ImageModulus([], 0.0, 2.0 * h, math.inf, skipped)
    c_hat = min(d / e**2 for e, d, _ in curve)
    e_min = min(e for e, _, _ in curve)
    return ImageModulus(curve, float(c_hat), 2.0 * h, 2.0 * h / e_min**2, skipped)


@dataclass(frozen=True)
class ConvexLikeResult:
    ok: bool
    violations: int
    checked: int


def _as_cone(cone, k: int) -> ProductCone:
    if isinstance(cone, ProductCone):
        return cone
    if isinstance(cone, Singleton):
        if not cone.is_cone:
            raise InvalidParameterError("convex-likeness is defined with respect to a cone")
        return ProductCone.zero(cone.dim)
    table = {"zero": "zero", "full": "free", "free": "free", "nonneg": "nonneg", "nonpos": "nonpos"}
    if isinstance(cone, str) and cone in table:
        return ProductCone((table[cone],) * k)
    return ProductCone(tuple(cone))


def _dominated(grid: np.ndarray, cone: ProductCone) -> np.ndarray:
    """Cells y with y in (marked cells) + C, by cumulative ORs along each axis."""
    g = grid
    for axis, kind in enumerate(cone.kinds):
        if kind == "nonneg":
            g = np.logical_or.accumulate(g, axis=axis)
        elif kind == "nonpos":
            g = np.flip(np.logical_or.accumulate(np.flip(g, axis=axis), axis=axis), axis=axis)
        elif kind == "free":
            g = np.broadcast_to(g.any(axis=axis, keepdims=True), g.shape)
    return np.ascontiguousarray(g)


def convex_like_check(
    f: SmoothMap,
    S: ConvexSet,
    cone="zero",
    samples: int = 2000,
    img: RasterImage | None = None,
    seed=0,
    t_values=(0.25, 0.5, 0.75),
) -> ConvexLikeResult:
    """Check (1-t) f(x1) + t f(x2) in f(S) + C on sampled x1, x2 in S."""
    cone = _as_cone(cone, f.m)
    if cone.dim != 2:
        raise UnsupportedDimensionError("the cone must live in the image plane R^2")
    if img is None:
        img = rasterize_image(f, S, seed=seed)
    target = _dominated(_tolerant(img), cone)
    rng = as_rng(seed)
    X1 = sample_points(S, samples, seed=rng, method="uniform")
    X2 = sample_points(S, samples, seed=rng, method="uniform")
    Y1, Y2 = f.eval_batch(X1), f.eval_batch(X2)
    nx, ny = target.shape
    violations = 0
    for t in t_values:
        idx = img.cell_of((1.0 - t) * Y1 + t * Y2)
        # cells past the box edge inherit the edge verdict; the box margin is unmarked
        ix = np.clip(idx[:, 0], 0, nx - 1)
        iy = np.clip(idx[:, 1], 0, ny - 1)
        violations += int((~target[ix, iy]).sum())
    return ConvexLikeResult(violations == 0, violations, samples * len(t_values))


def write_modulus_csv(path, result: ImageModulus) -> None:
    buf = io.StringIO()
    buf.write("epsilon,delta_hat,pairs\n")
    for e, d, n in result.curve:
        buf.write(f"{e!r},{d!r},{n}\n")
    _atomic_write(path, buf.getvalue().encode())


def pbm_bytes(img: RasterImage) -> bytes:
    """Binary PBM (P4); the first row is the top of the image (largest y)."""
    rows = np.flip(img.grid.T, axis=0)
    packed = np.packbits(rows, axis=1)
    return f"P4\n{rows.shape[1]} {rows.shape[0]}\n".encode() + packed.tobytes()


def write_pbm(path, img: RasterImage) -> None:
    _atomic_write(path, pbm_bytes(img))


def _atomic_write(path, data: bytes) -> None:
    path = os.fspath(path)
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)
