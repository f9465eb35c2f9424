"""
Certificate that a smooth map sends a uniformly convex set onto a uniformly
convex image.

The verdict is the strict inequality reg * lip / 8 < c between the exact
regularity bound of f at x0, the Lipschitz constant of Df and the power-2
modulus constant of the set. When it holds, a lower estimate of the image's
power-2 constant sigma * eta / beta^2 is assembled from an openness rate
sigma, a slack eta and a derivative bound beta.

The pointwise verdict guarantees a convex image only for sets inside some
unquantified ball around x0. ``uniform_certified`` is the computable
sufficient version for the given set: by Weyl's inequality
sigma_min(Df(x)) >= 1/reg - lip * |x - x0|, so ``reg_uniform`` =
1 / (1/reg - lip * rho) bounds the regularity over all of S, and
reg_uniform * lip / 8 < c makes the midpoint argument work on S itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .calculus import (
    LipschitzBound,
    RegularityBound,
    SmoothMap,
    image_diameter_bound,
    lip_derivative,
    reg_bound,
)
from .errors import InvalidParameterError, NotOntoError, PreconditionError
from .geometry import ConvexSet, sample_points, boundary_points
from .sampling import as_rng, unit_directions, uniform_in_euclidean_ball

STRICT_MARGIN = 1e-12


@dataclass(frozen=True)
class Certificate:
    c: float
    reg: float
    lip: float
    condition_lhs: float
    certified: bool
    r0: float | None = None
    rho: float | None = None
    image_modulus_constant: float = 0.0
    sigma: float | None = None
    eta: float | None = None
    beta: float | None = None
    reason: str = ""
    reg_uniform: float | None = None
    uniform_certified: bool = False

    def as_dict(self) -> dict:
        return {
            "c": self.c,
            "reg": self.reg,
            "lip": self.lip,
            "r0": self.r0,
            "condition_lhs": self.condition_lhs,
            "certified": self.certified,
            "rho": self.rho,
            "image_modulus_constant": self.image_modulus_constant,
            "sigma": self.sigma,
            "eta": self.eta,
            "beta": self.beta,
            "reason": self.reason,
            "reg_uniform": self.reg_uniform,
            "uniform_certified": self.uniform_certified,
        }


def _value(bound) -> float:
    return float(bound.value if hasattr(bound, "value") else bound)


def check_condition(c: float, reg: RegularityBound | float, lip: LipschitzBound | float) -> Certificate:
    reg_v, lip_v = _value(reg), _value(lip)
    if c < 0:
        raise InvalidParameterError("modulus constant must be nonnegative")
    if math.isinf(reg_v):
        return Certificate(c, reg_v, lip_v, math.inf, False, reason="not-surjective")
    lhs = reg_v * lip_v / 8.0
    if c <= 0:
        return Certificate(c, reg_v, lip_v, lhs, False, reason="no power-2 modulus")
    ok = lhs < c and lhs <= c - STRICT_MARGIN * max(1.0, c)
    reason = "" if ok else f"reg*lip/8 = {lhs!r} >= c = {c!r}"
    return Certificate(c, reg_v, lip_v, lhs, ok, reason=reason)


def uniform_reg(reg: RegularityBound | float, lip: LipschitzBound | float, rho: float) -> float:
    """Upper bound on 1/sigma_min(Df) over ball(x0, rho); inf once it may vanish."""
    reg_v, lip_v = _value(reg), _value(lip)
    if math.isinf(reg_v):
        return math.inf
    floor = 1.0 / reg_v - lip_v * rho
    return 1.0 / floor if floor > 0 else math.inf


def admissible_radius(gamma: float, reg: RegularityBound | float, lip: LipschitzBound | float) -> float:
    """8 gamma / (reg lip + 1): any r-convex set with smaller r is certified."""
    reg_v, lip_v = _value(reg), _value(lip)
    if not gamma > 0:
        raise InvalidParameterError("gamma must be positive")
    if math.isinf(reg_v):
        raise NotOntoError("derivative is not onto; no admissible radius")
    return 8.0 * gamma / (reg_v * lip_v + 1.0)


def sharp_radius(
    gamma: float, reg, lip, lo: float, hi: float, tol: float = 1e-13
) -> float:
    """Bisection for the largest ball radius r with c = gamma / r still certified."""
    if not check_condition(gamma / lo, reg, lip).certified:
        raise InvalidParameterError("lower end of the bracket is not certified")
    if check_condition(gamma / hi, reg, lip).certified:
        return hi
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if check_condition(gamma / mid, reg, lip).certified:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class OpennessEstimate:
    sigma: float
    sigma_theory: float
    sigma_raw: float


def _newton_hits(f: SmoothMap, X, Y, radius, iters=30):
    """Minimum-norm Newton from X towards targets Y; True where it lands within radius."""
    Z = X.copy()
    scale = 1.0 + np.linalg.norm(Y, axis=-1)
    done = np.zeros(len(X), dtype=bool)
    for _ in range(iters):
        R = f.eval_batch(Z) - Y
        res = np.linalg.norm(R, axis=-1)
        done = res <= 1e-12 * scale
        if np.all(done):
            break
        J = f.jacobian_batch(Z)
        step = np.einsum("bij,bj->bi", np.linalg.pinv(J), R)
        step[done] = 0.0
        Z = Z - step
        bad = ~np.all(np.isfinite(Z), axis=-1)
        Z[bad] = X[bad]
    R = f.eval_batch(Z) - Y
    done = np.linalg.norm(R, axis=-1) <= 1e-10 * scale
    return done & (np.linalg.norm(Z - X, axis=-1) <= radius * (1.0 + 1e-9))


def estimate_openness_rate(
    f: SmoothMap,
    x0,
    radii,
    samples: int = 32,
    seed=0,
    points=None,
    spread: float | None = None,
    fan: int = 32,
    iters: int = 30,
) -> OpennessEstimate:
    """Empirical rate sigma with f(ball(x, r)) covering ball(f(x), sigma r).

    For base points x (given, or sampled in ball(x0, spread)) and each radius
    r, bisects per direction u on the largest sigma whose target
    f(x) + sigma r u is reached by a Newton inverse solve within ball(x, r).
    The estimate is the minimum over points, radii and directions, clipped to
    the theoretical anchor 1 / reg(f; x0).
    """
    x0 = np.asarray(x0, dtype=float)
    reg = reg_bound(f, x0)
    if not reg.surjective:
        raise PreconditionError("derivative at x0 is not onto")
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    theory = 1.0 / reg.value
    rng = as_rng(seed)
    if points is None:
        spread = 0.1 * float(radii.min()) if spread is None else spread
        extra = uniform_in_euclidean_ball(max(samples - 1, 0), x0, spread, rng) if spread > 0 else np.empty((0, f.n))
        points = np.vstack([x0[None, :], extra])
    points = np.atleast_2d(np.asarray(points, dtype=float))
    U = unit_directions(fan, f.m, seed=rng) if f.m != 1 else np.array([[1.0], [-1.0]])
    P = np.repeat(points, len(U), axis=0)
    D = np.tile(U, (len(points), 1))
    FP = f.eval_batch(P)
    best = math.inf
    for r in radii:
        lo = np.zeros(len(P))
        hi = np.full(len(P), theory)
        top = _newton_hits(f, P, FP + (theory * r) * D, r)
        lo[top] = theory
        open_ = ~top
        for _ in range(iters):
            if not np.any(open_):
                break
            mid = 0.5 * (lo + hi)
            hit = _newton_hits(f, P[open_], FP[open_] + (mid[open_] * r)[:, None] * D[open_], r)
            idx = np.flatnonzero(open_)
            lo[idx[hit]] = mid[idx[hit]]
            hi[idx[~hit]] = mid[idx[~hit]]
        best = min(best, float(lo.min()))
    return OpennessEstimate(min(best, theory), theory, best)


def certify_problem(
    f: SmoothMap,
    S: ConvexSet,
    x0,
    r0: float | None = None,
    seed=0,
    lip: LipschitzBound | None = None,
    openness_points: int = 48,
) -> Certificate:
    """Assemble the full certificate for f on S near x0."""
    x0 = np.asarray(x0, dtype=float)
    rho = S.support_radius(x0)
    if r0 is None:
        r0 = rho
    if rho > r0 * (1.0 + 1e-9) + 1e-12:
        raise PreconditionError(f"set is not inside ball(x0, r0): reaches {rho} > r0 = {r0}")
    reg = reg_bound(f, x0)
    if lip is None:
        method = "exact" if hasattr(f, "A") else "sampled"
        lip = lip_derivative(f, x0, r0, method=method, seed=seed)
    cert = check_condition(S.power2_constant(), reg, lip)
    k_uni = uniform_reg(reg, lip, rho)
    uni = check_condition(cert.c, k_uni, lip).certified
    cert = replace(cert, r0=float(r0), rho=float(rho), reg_uniform=float(k_uni), uniform_certified=bool(uni))
    if not cert.certified:
        return cert
    c = cert.c
    eta = 0.5 * (c - cert.condition_lhs)
    dbound = image_diameter_bound(f, S, seed=seed)
    beta = dbound.beta_plus_one
    # keep every ball the openness inclusion is applied to inside radius rho
    if dbound.bound > 0 and eta * dbound.bound**2 / beta**2 >= rho:
        eta = 0.5 * rho * beta**2 / dbound.bound**2
    r_max = eta * dbound.bound**2 / beta**2 if dbound.bound > 0 else rho
    r_max = min(max(r_max, 1e-6 * rho), rho)
    rng = as_rng(seed)
    k = max(openness_points // 2, 1)
    pts = np.vstack(
        [
            x0[None, :],
            boundary_points(S, unit_directions(k, S.dim, seed=rng)),
            sample_points(S, k, seed=rng),
        ]
    )
    op = estimate_openness_rate(f, x0, r_max * np.array([1.0, 0.25, 1.0 / 16]), points=pts, seed=rng)
    sigma = min(op.sigma, op.sigma_theory)
    return replace(
        cert,
        eta=float(eta),
        beta=float(beta),
        sigma=float(sigma),
        image_modulus_constant=float(sigma * eta / beta**2),
    )
