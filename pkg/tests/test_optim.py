import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import X0, worked_g, worked_phi, worked_problem
from instances import random_spd, random_symmetric
from uniconv.calculus import QuadraticMap
from uniconv.certify import certify_problem
from uniconv.cones import ProductCone, Singleton
from uniconv.errors import DimensionMismatchError, InfeasibleError, PreconditionError
from uniconv.geometry import PNormBall, sample_points
from uniconv.optim import (
    ProblemSpec,
    build_image_map,
    duality_gap,
    find_multiplier,
    global_solve,
    interior_nonoptimality_check,
    lagrangian_eval,
    saddle_check,
    solve,
    trust_region_min,
)


def circle_sweep_oracle(r, count=1_000_000):
    """min of x1^2 - x2^2 over the unit circle points within distance r of x0."""
    t = np.linspace(0, 2 * math.pi, count, endpoint=False)
    X = np.column_stack([np.cos(t), np.sin(t)])
    ok = np.linalg.norm(X - X0, axis=1) <= r
    return float(np.min(X[ok, 0] ** 2 - X[ok, 1] ** 2))


def polar_grid(S, k=600):
    r = S.radius * np.sqrt(np.linspace(0, 1, k))
    t = np.linspace(0, 2 * math.pi, k, endpoint=False)
    R, T = np.meshgrid(r, t)
    return S.center + np.column_stack([(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()])


class TestImageMap:
    def test_worked_map(self):
        p = worked_problem(0.5)
        Phi = build_image_map(p).map
        assert Phi.m == 2
        np.testing.assert_allclose(Phi.A, [np.diag([2.0, -2.0]), np.diag([2.0, 2.0])])
        np.testing.assert_allclose(Phi.eval_batch(X0), [0.0, 0.0], atol=1e-15)

    def test_base_point_image(self):
        p = worked_problem(0.5)
        x = np.array([0.3, 0.6])
        Phi = build_image_map(p, x).map
        np.testing.assert_allclose(Phi.eval_batch(x), [0.0, float(worked_g().eval_batch(x)[0])], atol=1e-15)

    def test_constant_objective(self):
        const = QuadraticMap(np.zeros((1, 2, 2)), np.zeros((1, 2)), [3.0])
        p = ProblemSpec(const, worked_g(), PNormBall(X0, 0.5), ProductCone.zero(1), X0)
        X = sample_points(p.S, 50)
        assert np.all(build_image_map(p).map.eval_batch(X)[:, 0] == 0.0)

    def test_translation_identity(self):
        p = worked_problem(0.5)
        xb = global_solve(p).x_bar
        X = sample_points(p.S, 500, seed=2)
        a = build_image_map(p, xb).map.eval_batch(X)
        b = build_image_map(p).map.eval_batch(X)
        shift = float(p.objective(X0) - p.objective(xb))
        np.testing.assert_allclose(a[:, 0], b[:, 0] + shift, rtol=0, atol=1e-15)
        np.testing.assert_array_equal(a[:, 1], b[:, 1])

    def test_no_image_point_in_Q_at_solution(self):
        p = worked_problem(0.5)
        xb = global_solve(p).x_bar
        ispace = build_image_map(p, xb)
        # feasible points: unit circle arc inside S, plus interior samples
        t = np.linspace(0, 2 * math.pi, 20_000, endpoint=False)
        arc = np.column_stack([np.cos(t), np.sin(t)])
        arc = arc[p.S.inside(arc)]
        Y = ispace.map.eval_batch(np.vstack([arc, sample_points(p.S, 2000)]))
        Y[: len(arc), 1] = 0.0  # on the circle g vanishes up to rounding
        assert not ispace.in_Q(Y).any()

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            ProblemSpec(worked_phi(), worked_g(), PNormBall(X0, 0.5), ProductCone.zero(2), X0)


class TestLagrangian:
    def test_zero_multiplier(self):
        p = worked_problem(0.5)
        x = np.array([0.2, 0.9])
        assert lagrangian_eval(p, [0.0], x) == pytest.approx(float(p.objective(x)))

    def test_feasible_point_any_multiplier(self):
        p = worked_problem(0.5)
        x = np.array([math.cos(1.0), math.sin(1.0)])
        for y in (-3.0, 0.5, 7.0):
            assert lagrangian_eval(p, [y], x) == pytest.approx(float(p.objective(x)), abs=1e-14)

    def test_substitution(self):
        assert lagrangian_eval(worked_problem(0.5), [1.0], [1.0, 0.0]) == 1.0


class TestGlobalSolve:
    def test_certified_r_half(self):
        rep = global_solve(worked_problem(0.5))
        theta = math.pi / 4 + 2 * math.asin(0.25)
        np.testing.assert_allclose(rep.x_bar, [math.cos(theta), math.sin(theta)], atol=1e-9)
        assert np.linalg.norm(rep.x_bar - X0) == pytest.approx(0.5, abs=1e-9)
        assert rep.boundary_distance <= 1e-9
        assert rep.phi_value == pytest.approx(circle_sweep_oracle(0.5), abs=1e-4)
        assert rep.phi_value == pytest.approx(math.cos(2 * theta), abs=1e-12)

    def test_interior_solution_r_09(self):
        rep = global_solve(worked_problem(0.9))
        np.testing.assert_allclose(rep.x_bar, [0.0, 1.0], atol=1e-9)
        assert rep.phi_value == pytest.approx(-1.0)
        assert rep.boundary_distance == pytest.approx(0.9 - math.sqrt(2 - math.sqrt(2)), abs=1e-9)

    def test_linear_objective_on_disc(self):
        phi = QuadraticMap.linear([[1.0, 2.0]])
        S = PNormBall([1.0, -1.0], 2.0)
        rep = global_solve(ProblemSpec(phi, None, S, None, np.array([1.0, -1.0])))
        expect = S.center - 2.0 * np.array([1.0, 2.0]) / math.sqrt(5)
        np.testing.assert_allclose(rep.x_bar, expect, atol=1e-12)

    def test_infeasible(self):
        p = ProblemSpec(worked_phi(), worked_g(), PNormBall([5.0, 5.0], 0.5), ProductCone.zero(1), np.array([5.0, 5.0]))
        with pytest.raises(InfeasibleError):
            global_solve(p)

    def test_empty_level_set(self):
        g = QuadraticMap(np.diag([2.0, 2.0])[None], np.zeros((1, 2)), [1.0])
        p = ProblemSpec(worked_phi(), g, PNormBall(X0, 0.5), ProductCone.zero(1), X0)
        with pytest.raises(InfeasibleError):
            global_solve(p)

    def test_singleton_target(self):
        # g(x) = x1^2 + x2^2 - 1 in {3}: the circle of radius 2
        p = ProblemSpec(worked_phi(), worked_g(), PNormBall([0.0, 2.0], 0.5), Singleton([3.0]), np.array([0.0, 2.0]))
        rep = global_solve(p)
        assert np.linalg.norm(rep.x_bar) == pytest.approx(2.0, abs=1e-12)
        assert rep.phi_value == pytest.approx(-4.0)

    def test_inequality_constraint_against_grid(self):
        # x in S with x1^2 + x2^2 - 1 >= 0
        p = ProblemSpec(worked_phi(), worked_g(), PNormBall(X0, 0.5), ProductCone(("nonneg",)), X0)
        rep = global_solve(p)
        assert p.feasible(rep.x_bar)
        G = polar_grid(p.S, 800)
        G = G[p.g.eval_batch(G)[:, 0] >= 0]
        grid_min = float(np.min(p.objective(G)))
        assert rep.phi_value <= grid_min + 1e-9
        assert rep.phi_value >= grid_min - 5e-3


def test_trust_region_oracles():
    rng = np.random.default_rng(7)
    for _ in range(30):
        n = int(rng.integers(2, 4))
        A, b = random_symmetric(rng, n, 2.0), rng.standard_normal(n)
        c, r = rng.standard_normal(n), rng.uniform(0.2, 2.0)
        x = trust_region_min(A, b, c, r)
        assert np.linalg.norm(x - c) <= r * (1 + 1e-12)
        S = PNormBall(c, r)
        X = sample_points(S, 20_000, seed=rng)
        q = lambda Z: 0.5 * np.einsum("...i,ij,...j->...", Z, A, Z) + Z @ b
        assert q(x) <= float(np.min(q(X))) + 1e-10


def test_trust_region_hard_case():
    # A = diag(-1, 1) with b orthogonal to the bottom eigenvector: mu = 1, x2 = -b2 / 2
    x = trust_region_min(np.diag([-1.0, 1.0]), [0.0, 0.5], np.zeros(2), 1.0)
    assert np.linalg.norm(x) == pytest.approx(1.0)
    assert x[1] == pytest.approx(-0.25)
    t = np.linspace(0, 2 * math.pi, 100_000)
    q = lambda Z: -0.5 * Z[..., 0] ** 2 + 0.5 * Z[..., 1] ** 2 + 0.5 * Z[..., 1]
    assert q(x) == pytest.approx(-0.5625)
    assert q(x) <= q(np.column_stack([np.cos(t), np.sin(t)])).min() + 1e-12


class TestMultiplier:
    def test_worked_multiplier(self):
        p = worked_problem(0.5)
        xb = global_solve(p).x_bar
        m = find_multiplier(p, xb)
        assert m.found and m.residual >= -1e-6
        # grid oracle for the inner minimisation
        G = polar_grid(p.S)
        assert float(np.min(lagrangian_eval(p, m.y, G))) >= lagrangian_eval(p, m.y, xb) - 1e-6

    def test_identically_zero_constraint(self):
        zero = QuadraticMap(np.zeros((1, 2, 2)), np.zeros((1, 2)), [0.0])
        p = ProblemSpec(worked_phi(), zero, PNormBall(X0, 0.5), ProductCone.zero(1), X0)
        xb = global_solve(p).x_bar
        assert find_multiplier(p, xb).found
        assert not find_multiplier(p, X0).found

    def test_interior_orthant_forces_zero(self):
        # g(x) = x1 + 10 stays interior to the nonneg orthant on S
        g = QuadraticMap.linear([[1.0, 0.0]], [10.0])
        p = ProblemSpec(worked_phi(), g, PNormBall(X0, 0.5), ProductCone(("nonneg",)), X0)
        rep = global_solve(p)
        m = find_multiplier(p, rep.x_bar)
        assert m.y[0] == 0.0 and m.found

    def test_not_found_is_reported(self):
        p = worked_problem(0.5)
        m = find_multiplier(p, X0)
        assert not m.found and m.status in ("not-found", "cap-exhausted")


class TestDuality:
    def test_worked_gap(self):
        est = duality_gap(worked_problem(0.5))
        assert -1e-9 <= est.gap <= 1e-4 and not est.truncated

    def test_convex_toy(self):
        phi = QuadraticMap.linear([[1.0, -1.0]])
        g = QuadraticMap.linear([[1.0, 1.0]], [-0.5])
        p = ProblemSpec(phi, g, PNormBall([0.0, 0.0], 1.0), ProductCone(("nonpos",)), np.zeros(2))
        est = duality_gap(p)
        assert abs(est.gap) <= 1e-6

    def test_requires_cone(self):
        p = ProblemSpec(worked_phi(), worked_g(), PNormBall([0.0, 2.0], 0.5), Singleton([3.0]), np.array([0.0, 2.0]))
        with pytest.raises(PreconditionError):
            duality_gap(p)

    @given(seed=st.integers(0, 2**20), kind=st.sampled_from(["zero", "nonneg", "nonpos"]))
    def test_weak_duality(self, seed, kind):
        rng = np.random.default_rng(seed)
        x0 = rng.uniform(-1, 1, 2)
        phi = QuadraticMap(random_symmetric(rng, 2)[None], rng.standard_normal((1, 2)), [0.0])
        A = random_spd(rng, 2)
        b = rng.standard_normal(2)
        g = QuadraticMap(A[None], b[None], [-(0.5 * x0 @ A @ x0 + b @ x0)])
        p = ProblemSpec(phi, g, PNormBall(x0, rng.uniform(0.2, 1.5)), ProductCone((kind,)), x0)
        assert duality_gap(p).gap >= -1e-9


class TestSaddle:
    def test_worked_saddle(self):
        p = worked_problem(0.5)
        xb = global_solve(p).x_bar
        y = find_multiplier(p, xb).y
        res = saddle_check(p, xb, y)
        assert res.ok and res.left_violation <= 1e-12

    def test_same_multiplier_equalities(self):
        p = worked_problem(0.5)
        xb = global_solve(p).x_bar
        y = find_multiplier(p, xb).y
        assert lagrangian_eval(p, y, xb) == pytest.approx(float(p.objective(xb)), abs=1e-14)

    def test_perturbed_point_fails(self):
        p = worked_problem(0.5)
        xb = global_solve(p).x_bar
        y = find_multiplier(p, xb).y
        t = math.pi / 4 + 0.3
        res = saddle_check(p, np.array([math.cos(t), math.sin(t)]), y)
        assert not res.ok and res.right_violation > 1e-3


class TestInterior:
    def test_worked_radii(self):
        res = interior_nonoptimality_check(worked_problem(0.5), (0.1, 0.01))
        assert res.ok and not res.skipped

    def test_constant_objective_skipped(self):
        const = QuadraticMap(np.zeros((1, 2, 2)), np.zeros((1, 2)), [3.0])
        p = ProblemSpec(const, worked_g(), PNormBall(X0, 0.5), ProductCone.zero(1), X0)
        res = interior_nonoptimality_check(p)
        assert res.skipped and not res.ok

    def test_linear_surjective(self):
        phi = QuadraticMap.linear([[1.0, 0.0, 0.0]])
        g = QuadraticMap.linear([[0.0, 1.0, 0.0]])
        p = ProblemSpec(phi, g, PNormBall(np.zeros(3), 1.0), ProductCone.zero(1), np.zeros(3))
        assert interior_nonoptimality_check(p, (0.5, 0.05, 0.005)).ok


def certified_random_problem(rng):
    """Random planar instance with an equality constraint through x0 and a certified ball."""
    from uniconv.calculus import lip_derivative, reg_bound
    from uniconv.certify import sharp_radius

    while True:
        x0 = rng.uniform(-1, 1, 2)
        phi = QuadraticMap(random_symmetric(rng, 2)[None], rng.standard_normal((1, 2)), [0.0])
        A = random_spd(rng, 2)
        b = rng.standard_normal(2)
        g = QuadraticMap(A[None], b[None], [-(0.5 * x0 @ A @ x0 + b @ x0)])
        p = ProblemSpec(phi, g, PNormBall(x0, 1.0), ProductCone.zero(1), x0)
        Phi = build_image_map(p).map
        reg = reg_bound(Phi, x0)
        if not reg.surjective or reg.value > 10:
            continue
        lip = lip_derivative(Phi, x0, 1.0)
        r = 0.8 * sharp_radius(0.125, reg, lip, 1e-6, 10.0)
        return ProblemSpec(phi, g, PNormBall(x0, r), ProductCone.zero(1), x0)


@given(seed=st.integers(0, 2**20))
def test_certified_solutions_on_boundary(seed):
    p = certified_random_problem(np.random.default_rng(seed))
    assert certify_problem(build_image_map(p).map, p.S, p.x0).certified
    rep = global_solve(p)
    assert p.feasible(rep.x_bar, 1e-9)
    assert rep.boundary_distance <= 1e-6


def test_solve_report_uncertified_flag():
    p = worked_problem(0.9)
    cert = certify_problem(build_image_map(p).map, p.S, p.x0)
    rep = solve(p, certificate=cert)
    assert rep.certified is False
    assert rep.boundary_distance >= 0.13
    assert rep.as_dict()["x_bar"] == pytest.approx([0.0, 1.0], abs=1e-9)
