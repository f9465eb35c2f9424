import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from instances import random_quadratic_map
from uniconv.calculus import (
    BlackBoxMap,
    LipschitzBound,
    QuadraticMap,
    as_blackbox,
    eval_map,
    image_diameter_bound,
    jacobian,
    lip_derivative,
    midpoint_defect_check,
    reg_bound,
)
from uniconv.errors import (
    DimensionMismatchError,
    InvalidParameterError,
    NonFiniteError,
    NotOntoError,
    RegionError,
)
from uniconv.geometry import PNormBall


def test_worked_values(image_map, x0):
    assert eval_map(image_map, x0) == pytest.approx([0.0, 0.0], abs=1e-15)
    np.testing.assert_allclose(jacobian(image_map, x0), [[math.sqrt(2), -math.sqrt(2)], [math.sqrt(2), math.sqrt(2)]])
    assert reg_bound(image_map, x0).value == pytest.approx(0.5, abs=1e-12)


def test_lip_exact_and_sampled(image_map, x0):
    exact = lip_derivative(image_map, x0, 1.0)
    assert exact.value == pytest.approx(2 * math.sqrt(2), abs=1e-12)
    assert exact.certified
    sampled = lip_derivative(image_map, x0, 1.0, method="sampled")
    assert sampled.value <= exact.value + 1e-12
    assert sampled.value / exact.value > 0.98


def test_lip_sweep_against_svd_oracle():
    # for m = 1, lip = spectral norm of A
    rng = np.random.default_rng(0)
    for _ in range(5):
        f = random_quadratic_map(rng, 3, 1)
        assert lip_derivative(f, np.zeros(3), 1.0).value == pytest.approx(np.abs(np.linalg.eigvalsh(f.A[0])).max(), rel=1e-9)


def test_lip_requires_quadratic_for_exact(image_map, x0):
    with pytest.raises(InvalidParameterError):
        lip_derivative(as_blackbox(image_map), x0, 1.0)
    with pytest.raises(InvalidParameterError):
        lip_derivative(image_map, x0, 0.0)


def test_asymmetric_component_named():
    with pytest.raises(InvalidParameterError, match="component 1"):
        QuadraticMap(np.stack([np.eye(2), [[1.0, 2.0], [0.0, 1.0]]]), np.zeros((2, 2)), [0, 0])


def test_reg_bound_rank_loss():
    f = QuadraticMap.linear([[1.0, 2.0], [2.0, 4.0]])
    r = reg_bound(f, np.zeros(2))
    assert math.isinf(r.value) and not r.surjective


def test_reg_bound_more_outputs_than_inputs():
    with pytest.raises(NotOntoError):
        reg_bound(QuadraticMap.linear(np.ones((3, 2))), np.zeros(2))


def test_reg_bound_identity():
    assert reg_bound(QuadraticMap.linear(np.eye(3)), np.zeros(3)).value == 1.0


def test_non_finite_detected():
    f = BlackBoxMap(lambda x: np.array([np.inf]), 1, 1)
    with pytest.raises(NonFiniteError):
        eval_map(f, [0.0])


def test_dimension_checked(image_map):
    with pytest.raises(DimensionMismatchError):
        image_map.eval_batch(np.zeros(3))


def test_finite_differences_match_analytic(image_map):
    bb = as_blackbox(image_map)
    rng = np.random.default_rng(1)
    for x in rng.standard_normal((10, 2)):
        np.testing.assert_allclose(bb.jacobian_batch(x), image_map.jacobian_batch(x), atol=1e-8)


def test_midpoint_defect_worked_pair(image_map, x0):
    lip = lip_derivative(image_map, x0, 1.0)
    res = midpoint_defect_check(image_map, [1.0, 0.0], [0.0, 1.0], lip)
    # (f(x1)+f(x2))/2 = (0, 0), f(mid) = (0, -1/2)
    assert res.defect == pytest.approx(0.5)
    assert res.bound == pytest.approx(math.sqrt(2) / 2)
    assert res.ok


def test_midpoint_defect_region(image_map, x0):
    lip = lip_derivative(image_map, x0, 0.1)
    with pytest.raises(RegionError):
        midpoint_defect_check(image_map, x0, x0 + 1.0, lip)


def test_image_diameter_bound(image_map, x0):
    d = image_diameter_bound(image_map, PNormBall(x0, 0.5))
    # Df has orthogonal columns, so ||Df(x)|| = 2 sqrt2 max(|x1|, |x2|)
    assert d.beta == pytest.approx(2 * math.sqrt(2) * (1 / math.sqrt(2) + 0.5), rel=1e-6)
    assert d.beta_plus_one == pytest.approx(d.beta + 1)


@given(seed=st.integers(0, 2**20), n=st.integers(1, 3), m=st.integers(1, 3))
def test_midpoint_estimate_property(seed, n, m):
    rng = np.random.default_rng(seed)
    f = random_quadratic_map(rng, n, m)
    lip = lip_derivative(f, np.zeros(n), 2.0)
    for _ in range(20):
        x1, x2 = rng.uniform(-1, 1, (2, n))
        assert midpoint_defect_check(f, x1, x2, lip).ok


@given(seed=st.integers(0, 2**20))
def test_reg_is_inverse_smallest_singular_value(seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((2, 3))
    r = reg_bound(QuadraticMap.linear(M), np.zeros(3))
    smin = np.linalg.svd(M, compute_uv=False)[-1]
    # oracle: 1/sigma_min = ||pinv(M)||
    assert r.value == pytest.approx(np.linalg.norm(np.linalg.pinv(M), 2), rel=1e-9)
    assert r.value == pytest.approx(1 / smin, rel=1e-12)


def test_lipschitz_bound_dataclass_fields(image_map, x0):
    lb = lip_derivative(image_map, x0, 1.0)
    assert isinstance(lb, LipschitzBound) and lb.method == "exact-quadratic" and lb.radius == 1.0
