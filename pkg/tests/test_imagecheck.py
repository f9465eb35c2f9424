import math

import numpy as np
import pytest
from scipy import ndimage

from instances import annulus_sector
from uniconv.calculus import QuadraticMap
from uniconv.certify import certify_problem
from uniconv.errors import UnsupportedDimensionError
from uniconv.geometry import BallIntersection, PNormBall, Polytope, empirical_modulus
from uniconv.imagecheck import (
    RasterImage,
    convex_like_check,
    empirical_image_modulus,
    midpoint_convexity_test,
    pbm_bytes,
    rasterize_image,
    write_modulus_csv,
    write_pbm,
)

IDENT = QuadraticMap.linear(np.eye(2))
DISC = PNormBall([0.0, 0.0], 1.0)
# complex squaring z -> z^2 on a disc around 1: the image is a nonconvex limacon
SQUARE_MAP = QuadraticMap(
    np.stack([np.diag([2.0, -2.0]), [[0.0, 2.0], [2.0, 0.0]]]), np.zeros((2, 2)), [0.0, 0.0]
)


@pytest.fixture(scope="module")
def disc_raster():
    return rasterize_image(IDENT, DISC, cells=400_000)


@pytest.fixture(scope="module")
def worked_raster():
    x0 = np.array([1.0, 1.0]) / math.sqrt(2)
    f = QuadraticMap(np.stack([np.diag([2.0, -2.0]), np.diag([2.0, 2.0])]), np.zeros((2, 2)), [0.0, -1.0])
    S = PNormBall(x0, 0.5)
    return f, S, x0, rasterize_image(f, S, cells=400_000)


def test_disc_area():
    img = rasterize_image(IDENT, DISC, h=0.01)
    assert abs(img.area - math.pi) <= 0.02 * math.pi


def test_margin_invariant(disc_raster):
    g = disc_raster.grid
    assert not g[:2].any() and not g[-2:].any() and not g[:, :2].any() and not g[:, -2:].any()


def test_constant_map_single_cell():
    const = QuadraticMap.linear(np.zeros((2, 2)), [1.0, 2.0])
    assert rasterize_image(const, DISC).marked_count == 1


def test_unsupported_dimension():
    with pytest.raises(UnsupportedDimensionError):
        rasterize_image(QuadraticMap.linear(np.eye(3)), PNormBall(np.zeros(3), 1.0))


def test_worked_image_connected(worked_raster):
    *_, img = worked_raster
    _, count = ndimage.label(img.grid, structure=np.ones((3, 3)))
    assert count == 1


def test_disc_midpoint_ok(disc_raster):
    assert midpoint_convexity_test(disc_raster).ok


def test_annulus_violations_at_every_resolution():
    pts = annulus_sector(np.random.default_rng(0))
    counts = [midpoint_convexity_test(RasterImage.from_points(pts, h)).violations for h in (0.04, 0.02, 0.01)]
    assert all(c > 0 for c in counts)


def test_worked_certified_image_midpoint_ok(worked_raster):
    *_, img = worked_raster
    assert midpoint_convexity_test(img).ok


def test_nonconvex_image_detected():
    img = rasterize_image(SQUARE_MAP, PNormBall([1.0, 0.0], 0.95), cells=200_000)
    res = midpoint_convexity_test(img)
    assert not res.ok and res.first_violation is not None


def test_disc_modulus(disc_raster):
    m = empirical_image_modulus(disc_raster)
    assert m.c_hat >= 0.125 - m.c_tolerance
    assert not m.skipped


def test_square_modulus_flat():
    img = rasterize_image(IDENT, Polytope.box([-1, -1], [1, 1]), cells=250_000)
    m = empirical_image_modulus(img)
    assert m.c_hat <= m.c_tolerance


def test_worked_modulus_above_certificate(worked_raster):
    f, S, x0, img = worked_raster
    cert = certify_problem(f, S, x0)
    m = empirical_image_modulus(img)
    assert m.c_hat > 0
    assert m.c_hat >= cert.image_modulus_constant - m.c_tolerance


@pytest.mark.parametrize(
    "S", [PNormBall([0.0, 0.0], 1.0), BallIntersection([[-0.5, 0.0], [0.5, 0.0]], 1.0)]
)
def test_identity_image_reproduces_set_modulus(S):
    img = rasterize_image(IDENT, S, cells=400_000)
    eps = [0.3, 0.6, 0.9]
    m = empirical_image_modulus(img, eps)
    for e, d in m.rows():
        geo = empirical_modulus(S, e, samples=4000).delta
        assert abs(d - geo) <= 2 * img.h


def test_too_few_pairs_skipped(disc_raster):
    m = empirical_image_modulus(disc_raster, [0.5, 50.0])
    assert m.skipped == [50.0] and len(m.curve) == 1


def test_convex_like(worked_raster):
    f, S, _, img = worked_raster
    assert convex_like_check(f, S, "full", img=img).ok
    assert convex_like_check(f, S, "zero", img=img).ok
    assert convex_like_check(f, S, "nonneg", img=img).ok


def test_convex_like_fails_without_cone_on_nonconvex_image():
    S = PNormBall([1.0, 0.0], 0.95)
    img = rasterize_image(SQUARE_MAP, S, cells=200_000)
    assert not convex_like_check(SQUARE_MAP, S, "zero", img=img, samples=4000).ok
    assert convex_like_check(SQUARE_MAP, S, "full", img=img).ok


def test_uncertified_instance_recorded(capsys):
    x0 = np.array([1.0, 1.0]) / math.sqrt(2)
    f = QuadraticMap(np.stack([np.diag([2.0, -2.0]), np.diag([2.0, 2.0])]), np.zeros((2, 2)), [0.0, -1.0])
    img = rasterize_image(f, PNormBall(x0, 1.2), cells=200_000)
    res = midpoint_convexity_test(img)
    # sufficiency only: the outcome is data, not a claim
    print(f"uncertified r=1.2 image: midpoint violations={res.violations}")


def test_exports(tmp_path, disc_raster):
    m = empirical_image_modulus(disc_raster, [0.5, 1.0])
    write_modulus_csv(tmp_path / "m.csv", m)
    lines = (tmp_path / "m.csv").read_text().splitlines()
    assert lines[0] == "epsilon,delta_hat,pairs" and len(lines) == 3
    write_pbm(tmp_path / "r.pbm", disc_raster)
    data = (tmp_path / "r.pbm").read_bytes()
    nx, ny = disc_raster.shape
    assert data.startswith(f"P4\n{nx} {ny}\n".encode())
    assert len(data) == len(pbm_bytes(disc_raster)) == len(f"P4\n{nx} {ny}\n") + ny * ((nx + 7) // 8)
