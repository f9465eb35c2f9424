"""
Uniformly convex sets in R^n and their moduli of convexity.

Sets are described analytically (p-norm balls, intersections of equal-radius
balls, sublevel sets of strongly convex quadratics, polytopes) and each
family exposes an exact signed distance to its boundary (``margin``). The
brute-force modulus estimator relies on that margin, so it always returns an
upper estimate of the true modulus that tightens as the sample grows.

All distances are measured in the ambient norm of the set (``set.p``).
Sublevel sets and polytopes live in Euclidean space.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import optimize

from .errors import (
    DimensionMismatchError,
    DomainError,
    InvalidParameterError,
    SamplingError,
)
from .sampling import as_rng, random_directions, sobol, unit_directions


def pnorm(v, p: float) -> np.ndarray:
    """p-norm along the last axis."""
    v = np.asarray(v, dtype=float)
    if p == 2:
        return np.sqrt(np.einsum("...i,...i->...", v, v))
    return np.sum(np.abs(v) ** p, axis=-1) ** (1.0 / p)


def _check_p(p: float) -> float:
    p = float(p)
    if not (1.0 < p < math.inf):
        raise InvalidParameterError(
            f"norm exponent p={p} is not uniformly convex; need 1 < p < inf"
        )
    return p


def lp_power2_constant(p: float) -> float:
    """Largest c with delta(eps) >= c eps^2 on (0, 2] for the unit l^p ball.

    For 1 < p < 2 this is the classical (p - 1)/8. For p = 2 it is 1/8, the
    limit of delta(eps)/eps^2 at 0. For p > 2 the modulus is of power type p
    and no positive power-2 constant exists.
    """
    p = _check_p(p)
    if p < 2.0:
        return (p - 1.0) / 8.0
    if p == 2.0:
        return 0.125
    return 0.0


class Membership(NamedTuple):
    inside: bool
    margin: float


@dataclass(frozen=True)
class ModulusBound:
    epsilon: float
    delta: float
    c: float
    diam: float


class ConvexSet(ABC):
    """Closed bounded convex set with nonempty interior and an exact margin."""

    dim: int
    p: float = 2.0

    @abstractmethod
    def margin(self, x) -> np.ndarray:
        """Signed distance to the boundary: positive inside, negative outside."""

    def inside(self, x) -> np.ndarray:
        return self.margin(x) >= 0.0

    @abstractmethod
    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]: ...

    @abstractmethod
    def interior_point(self) -> np.ndarray: ...

    @abstractmethod
    def power2_constant(self) -> float:
        """Analytic c with delta_S(eps) >= c eps^2 (0 when none is known)."""

    @abstractmethod
    def inequality_constraints(self) -> list[dict]:
        """Smooth constraints ``fun(x) >= 0`` describing the set, scipy style."""

    def diameter(self) -> float:
        pts = boundary_points(self, unit_directions(512, self.dim, seed=0))
        return _max_pairwise(pts, self.p)

    def support_radius(self, x0) -> float:
        """max over the set of ||x - x0|| (Euclidean), by boundary sampling."""
        x0 = np.asarray(x0, dtype=float)
        count = 4096 if self.dim <= 3 else 16384
        pts = boundary_points(self, unit_directions(count, self.dim, seed=1))
        return float(np.max(np.linalg.norm(pts - x0, axis=1)))

    def _check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise DimensionMismatchError(
                f"point has dimension {x.shape[-1]}, set has dimension {self.dim}"
            )
        return x


class PNormBall(ConvexSet):
    def __init__(self, center, radius: float, p: float = 2.0):
        self.center = np.atleast_1d(np.asarray(center, dtype=float))
        self.radius = float(radius)
        self.p = _check_p(p)
        self.dim = self.center.size
        if not self.radius > 0:
            raise InvalidParameterError("ball radius must be positive")

    def __repr__(self):
        return f"PNormBall(center={self.center.tolist()}, radius={self.radius}, p={self.p})"

    def margin(self, x):
        x = self._check_point(x)
        return self.radius - pnorm(x - self.center, self.p)

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def interior_point(self):
        return self.center.copy()

    def diameter(self):
        return 2.0 * self.radius

    def power2_constant(self):
        return lp_power2_constant(self.p) / self.radius

    def support_radius(self, x0):
        x0 = np.asarray(x0, dtype=float)
        if self.p == 2:
            return float(np.linalg.norm(x0 - self.center) + self.radius)
        return super().support_radius(x0)

    def inequality_constraints(self):
        c, r, p = self.center, self.radius, self.p
        if p == 2:
            return [
                {
                    "type": "ineq",
                    "fun": lambda x: r * r - np.dot(x - c, x - c),
                    "jac": lambda x: -2.0 * (x - c),
                }
            ]
        return [
            {
                "type": "ineq",
                "fun": lambda x: r**p - np.sum(np.abs(x - c) ** p),
                "jac": lambda x: -p * np.sign(x - c) * np.abs(x - c) ** (p - 1),
            }
        ]


class BallIntersection(ConvexSet):
    """Intersection of closed p-norm balls sharing one radius (an r-convex set)."""

    def __init__(self, centers, radius: float, p: float = 2.0):
        self.centers = np.atleast_2d(np.asarray(centers, dtype=float))
        self.radius = float(radius)
        self.p = _check_p(p)
        self.dim = self.centers.shape[1]
        if not self.radius > 0:
            raise InvalidParameterError("ball radius must be positive")
        if len(self.centers) == 0:
            raise InvalidParameterError("at least one ball is required")
        self._interior = self._chebyshev_center()
        if self.margin(self._interior) <= 0:
            raise InvalidParameterError("ball intersection has empty interior")

    def __repr__(self):
        return (
            f"BallIntersection(centers={self.centers.tolist()}, "
            f"radius={self.radius}, p={self.p})"
        )

    def _chebyshev_center(self):
        start = self.centers.mean(axis=0)
        res = optimize.minimize(
            lambda x: -self.margin(x),
            start,
            method="Nelder-Mead",
            options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000},
        )
        x = res.x if self.margin(res.x) >= self.margin(start) else start
        return np.asarray(x, dtype=float)

    def margin(self, x):
        x = self._check_point(x)
        d = pnorm(x[..., None, :] - self.centers, self.p)
        return self.radius - np.max(d, axis=-1)

    def bounding_box(self):
        return (
            np.max(self.centers - self.radius, axis=0),
            np.min(self.centers + self.radius, axis=0),
        )

    def interior_point(self):
        return self._interior.copy()

    def power2_constant(self):
        return lp_power2_constant(self.p) / self.radius

    def inequality_constraints(self):
        return [PNormBall(c, self.radius, self.p).inequality_constraints()[0] for c in self.centers]


class Sublevel(ConvexSet):
    """{x : 0.5 x'Ax + b'x + c <= level} for symmetric positive definite A."""

    def __init__(self, A, b, c: float, level: float):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.dim = self.A.shape[0]
        self.b = np.asarray(b, dtype=float).reshape(self.dim)
        self.c = float(c)
        self.level = float(level)
        if not np.allclose(self.A, self.A.T, rtol=1e-12, atol=1e-12):
            raise InvalidParameterError("sublevel matrix A must be symmetric")
        lam, Q = np.linalg.eigh(self.A)
        if lam[0] <= 0:
            raise InvalidParameterError("sublevel matrix A must be positive definite")
        self._lam, self._Q = lam, Q
        self.minimizer = -np.linalg.solve(self.A, self.b)
        self.height = self.level - self.value(self.minimizer)
        if not self.height > 0:
            raise InvalidParameterError("sublevel set has empty interior")

    def __repr__(self):
        return f"Sublevel(A={self.A.tolist()}, b={self.b.tolist()}, c={self.c}, level={self.level})"

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * np.einsum("...i,ij,...j->...", x, self.A, x) + x @ self.b + self.c

    @property
    def kappa(self) -> float:
        """Strong convexity modulus: theta(s) = kappa s^2 with kappa = lambda_min/2."""
        return 0.5 * self._lam[0]

    @property
    def lipschitz(self) -> float:
        """sup of ||grad phi|| over the set, sqrt(2 h lambda_max)."""
        return math.sqrt(2.0 * self.height * self._lam[-1])

    def inside(self, x):
        x = self._check_point(x)
        return self.value(x) <= self.level

    def margin(self, x):
        x = self._check_point(x)
        w = (x - self.minimizer) @ self._Q
        return _ellipsoid_signed_distance(w, self._lam, 2.0 * self.height)

    def bounding_box(self):
        half = np.sqrt(2.0 * self.height * np.diag(np.linalg.inv(self.A)))
        return self.minimizer - half, self.minimizer + half

    def interior_point(self):
        return self.minimizer.copy()

    def diameter(self):
        return 2.0 * math.sqrt(2.0 * self.height / self._lam[0])

    def power2_constant(self):
        return self.kappa / (4.0 * self.lipschitz)

    def inequality_constraints(self):
        return [
            {
                "type": "ineq",
                "fun": lambda x: self.level - self.value(x),
                "jac": lambda x: -(self.A @ x + self.b),
            }
        ]


class Polytope(ConvexSet):
    """{x : Gx <= h}. Never uniformly convex; used as a negative control."""

    def __init__(self, G, h):
        self.G = np.atleast_2d(np.asarray(G, dtype=float))
        self.h = np.asarray(h, dtype=float).reshape(-1)
        self.dim = self.G.shape[1]
        norms = np.linalg.norm(self.G, axis=1)
        if np.any(norms == 0) or len(self.h) != len(self.G):
            raise InvalidParameterError("polytope rows must be nonzero and match h")
        self._norms = norms
        self._box = self._lp_box()
        self._interior = self._lp_center()
        if self.margin(self._interior) <= 0:
            raise InvalidParameterError("polytope has empty interior")

    @classmethod
    def box(cls, lo, hi):
        lo, hi = np.asarray(lo, float), np.asarray(hi, float)
        n = lo.size
        G = np.vstack([np.eye(n), -np.eye(n)])
        return cls(G, np.concatenate([hi, -lo]))

    def __repr__(self):
        return f"Polytope(G={self.G.tolist()}, h={self.h.tolist()})"

    def _lp_box(self):
        lo, hi = np.empty(self.dim), np.empty(self.dim)
        for i in range(self.dim):
            e = np.zeros(self.dim)
            e[i] = 1.0
            for sign, out in ((1.0, lo), (-1.0, hi)):
                res = optimize.linprog(sign * e, A_ub=self.G, b_ub=self.h, bounds=[(None, None)] * self.dim)
                if res.status != 0:
                    raise InvalidParameterError("polytope is empty or unbounded")
                out[i] = res.x[i]
        return lo, hi

    def _lp_center(self):
        # maximise t subject to G x + ||g_i|| t <= h
        cost = np.zeros(self.dim + 1)
        cost[-1] = -1.0
        A = np.column_stack([self.G, self._norms])
        res = optimize.linprog(cost, A_ub=A, b_ub=self.h, bounds=[(None, None)] * self.dim + [(0, None)])
        return res.x[: self.dim]

    def margin(self, x):
        x = self._check_point(x)
        return np.min((self.h - x @ self.G.T) / self._norms, axis=-1)

    def bounding_box(self):
        return self._box[0].copy(), self._box[1].copy()

    def interior_point(self):
        return self._interior.copy()

    def power2_constant(self):
        return 0.0

    def inequality_constraints(self):
        return [
            {"type": "ineq", "fun": lambda x: self.h - self.G @ x, "jac": lambda x: -self.G}
        ]


def _ellipsoid_signed_distance(w, lam, level, iters: int = 200) -> np.ndarray:
    """Signed Euclidean distance from points w to {z : sum lam z^2 = level}.

    Coordinates are in the eigenbasis of the quadratic form. The nearest
    boundary point is z_i = w_i / (1 + mu lam_i); mu is found by bisection,
    with mu in (-1/lam_max, 0] for interior points and mu > 0 outside. The
    interior hard case (w orthogonal to the top eigenspace) is closed form.
    """
    w = np.asarray(w, dtype=float)
    shape = w.shape[:-1]
    w = w.reshape(-1, w.shape[-1])
    lam = np.asarray(lam, dtype=float)
    g0 = np.sum(lam * w * w, axis=1)
    out = np.empty(len(w))

    def G(mu, ww):
        z = ww / (1.0 + mu[:, None] * lam)
        return np.sum(lam * z * z, axis=1), z

    inner = g0 <= level
    if np.any(inner):
        wi = w[inner]
        lmax = lam[-1]
        top = np.isclose(lam, lmax, rtol=1e-12, atol=0.0)
        s_hi = np.full(len(wi), (1.0 - 1e-13) / lmax)
        g_hi, _ = G(-s_hi, wi)
        easy = g_hi >= level
        d = np.empty(len(wi))
        if np.any(easy):
            we = wi[easy]
            lo = np.zeros(len(we))
            hi = s_hi[easy].copy()
            for _ in range(iters):
                mid = 0.5 * (lo + hi)
                g, _ = G(-mid, we)
                up = g < level
                lo = np.where(up, mid, lo)
                hi = np.where(up, hi, mid)
            _, z = G(-0.5 * (lo + hi), we)
            d[easy] = np.linalg.norm(z - we, axis=1)
        if np.any(~easy):
            wh = wi[~easy]
            z = np.zeros_like(wh)
            z[:, ~top] = wh[:, ~top] / (1.0 - lam[~top] / lmax)
            rest = level - np.sum(lam[~top] * z[:, ~top] ** 2, axis=1)
            t = np.sqrt(np.clip(rest, 0.0, None) / lmax)
            diff = z - wh
            diff[:, top] = 0.0
            top_norm = np.linalg.norm(wh[:, top], axis=1)
            d[~easy] = np.sqrt(np.sum(diff**2, axis=1) + (t - top_norm) ** 2)
        out[inner] = d
    outer = ~inner
    if np.any(outer):
        wo = w[outer]
        lo = np.zeros(len(wo))
        hi = np.ones(len(wo))
        for _ in range(200):
            g, _ = G(hi, wo)
            if np.all(g <= level):
                break
            hi = np.where(g > level, 2.0 * hi, hi)
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            g, _ = G(mid, wo)
            big = g > level
            lo = np.where(big, mid, lo)
            hi = np.where(big, hi, mid)
        _, z = G(0.5 * (lo + hi), wo)
        out[outer] = -np.linalg.norm(z - wo, axis=1)
    return out.reshape(shape) if shape else out[0]


def _max_pairwise(pts, p):
    best = 0.0
    for i in range(0, len(pts), 256):
        d = pnorm(pts[i : i + 256, None, :] - pts[None, :, :], p)
        best = max(best, float(d.max()))
    return best


def raycast(S: ConvexSet, origin, directions, iters: int = 64) -> np.ndarray:
    """Largest t with origin + t d in S, per direction, by bisection.

    ``origin`` must lie in S. The returned t is on the inside of the exit.
    """
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    origin = np.asarray(origin, dtype=float)
    if origin.ndim == 1:
        origin = np.broadcast_to(origin, directions.shape)
    lo_box, hi_box = S.bounding_box()
    span = float(np.linalg.norm(hi_box - lo_box))
    scale = np.linalg.norm(directions, axis=1)
    lo = np.zeros(len(directions))
    hi = 1.01 * span / scale + 1e-12
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        ok = S.inside(origin + mid[:, None] * directions)
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    return lo


def boundary_points(S: ConvexSet, directions, origin=None) -> np.ndarray:
    origin = S.interior_point() if origin is None else np.asarray(origin, dtype=float)
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    t = raycast(S, origin, directions)
    if np.any(t <= 0):
        raise SamplingError("boundary could not be localised from the interior point")
    return origin + t[:, None] * directions


def sample_points(S: ConvexSet, count: int, seed=0, method: str = "sobol") -> np.ndarray:
    """Points of S by rejection from its bounding box."""
    lo, hi = S.bounding_box()
    out = []
    have = 0
    draw = max(64, 2 * count)
    rng = as_rng(seed)
    for _ in range(64):
        if method == "sobol":
            u = sobol(draw, S.dim, rng)
        else:
            u = rng.random((draw, S.dim))
        x = lo + u * (hi - lo)
        x = x[S.inside(x)]
        out.append(x)
        have += len(x)
        if have >= count:
            break
        draw *= 2
    pts = np.concatenate(out)[:count]
    if len(pts) < count:
        raise SamplingError("could not draw enough interior points")
    return pts


def contains(S: ConvexSet, x) -> Membership:
    m = float(S.margin(np.asarray(x, dtype=float)))
    return Membership(m >= 0.0, m)


def modulus_lp_ball(p: float, epsilon: float) -> ModulusBound:
    """Modulus of convexity of the unit l^p ball.

    Exact closed form for p >= 2, the (p - 1) eps^2 / 8 lower bound for
    1 < p < 2. ``c`` is the best power-2 constant valid on all of (0, 2].
    """
    if not p > 1:
        raise InvalidParameterError(f"p={p} must exceed 1")
    if not (0 < epsilon <= 2):
        raise DomainError(f"epsilon={epsilon} outside (0, 2]")
    if p >= 2:
        delta = 1.0 - (1.0 - (epsilon / 2.0) ** p) ** (1.0 / p)
    else:
        delta = (p - 1.0) / 8.0 * epsilon**2
    return ModulusBound(float(epsilon), float(delta), lp_power2_constant(p), 2.0)


def modulus_scaled(gamma: float, r: float, epsilon: float) -> ModulusBound:
    """Lower bound for an r-convex set: r * gamma (eps/r)^2 = (gamma/r) eps^2."""
    if not (gamma > 0 and r > 0):
        raise InvalidParameterError("gamma and r must be positive")
    if not (0 < epsilon <= 2 * r):
        raise DomainError(f"epsilon={epsilon} outside (0, 2r]")
    c = gamma / r
    return ModulusBound(float(epsilon), c * epsilon**2, c, 2.0 * r)


def modulus_sublevel(
    theta: float | Callable[[float], float],
    lip_phi: float,
    epsilon: float,
    diam: float = math.inf,
) -> ModulusBound:
    """theta(eps) / (4 lip) for a sublevel set of a uniformly convex function.

    ``theta`` is either a callable or a number kappa meaning theta(s) = kappa s^2;
    only the latter yields a power-2 constant.
    """
    if not lip_phi > 0:
        raise InvalidParameterError("Lipschitz bound must be positive")
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    if callable(theta):
        return ModulusBound(float(epsilon), float(theta(epsilon)) / (4.0 * lip_phi), 0.0, diam)
    kappa = float(theta)
    c = kappa / (4.0 * lip_phi)
    return ModulusBound(float(epsilon), c * epsilon**2, c, diam)


def modulus_intersection(constants: Sequence[float]) -> float:
    constants = list(constants)
    if not constants:
        raise InvalidParameterError("need at least one constant")
    if any(not c > 0 for c in constants):
        raise InvalidParameterError("power-2 constants must be positive")
    return float(min(constants))


def _inward_basis(S, x1, c0, rng):
    e1 = c0 - x1
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    w = rng.standard_normal(x1.shape)
    w -= np.sum(w * e1, axis=1, keepdims=True) * e1
    e2 = w / np.linalg.norm(w, axis=1, keepdims=True)
    return e1, e2


def _exit_points(S, x1, e1, e2, phi):
    d = np.cos(phi)[:, None] * e1 + np.sin(phi)[:, None] * e2
    return x1 + raycast(S, x1, d)[:, None] * d


def _boundary_chords(S, eps, count, rng, iters=48):
    """Chords with both endpoints on the boundary and p-length close to eps.

    From a boundary point the chord length is continuous in the direction
    angle, at least eps towards the interior point and zero pointing away
    from it, so bisection on the angle lands on length eps.
    """
    c0 = S.interior_point()
    x1 = boundary_points(S, random_directions(count, S.dim, rng), c0)
    e1, e2 = _inward_basis(S, x1, c0, rng)
    through = _exit_points(S, x1, e1, e2, np.zeros(count))
    keep = pnorm(through - x1, S.p) >= eps
    x1, e1, e2 = x1[keep], e1[keep], e2[keep]
    lo = np.zeros(len(x1))
    hi = np.full(len(x1), math.pi)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        long_enough = pnorm(_exit_points(S, x1, e1, e2, mid) - x1, S.p) >= eps
        lo = np.where(long_enough, mid, lo)
        hi = np.where(long_enough, hi, mid)
    return x1, _exit_points(S, x1, e1, e2, lo)


def _fixed_length_pairs(S, eps, starts, rng):
    u = random_directions(len(starts), S.dim, rng)
    u /= pnorm(u, S.p)[:, None]
    x2 = starts + eps * u
    ok = S.inside(x2)
    return starts[ok], x2[ok]


def empirical_modulus(
    S: ConvexSet,
    epsilon: float,
    samples: int = 10_000,
    chord_tol: float | None = None,
    seed=0,
) -> ModulusBound:
    """Brute-force estimate of delta_S(epsilon) from above.

    Half the pairs are boundary-to-boundary chords (where the infimum lives),
    a quarter start on the boundary and a quarter start anywhere in S. The
    estimate is the smallest midpoint margin over pairs whose length is within
    ``chord_tol`` of epsilon.
    """
    if samples < 100:
        raise InvalidParameterError("need at least 100 samples")
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    diam = S.diameter()
    if epsilon >= diam:
        raise DomainError(f"epsilon={epsilon} is not below the diameter {diam}")
    tol = epsilon / 100.0 if chord_tol is None else float(chord_tol)
    rng = as_rng(seed)
    best = math.inf
    accepted = 0
    n_a, n_b = samples // 2, samples // 4
    n_c = samples - n_a - n_b
    for _ in range(8):
        a1, a2 = _boundary_chords(S, epsilon, n_a, rng)
        b_start = boundary_points(S, random_directions(n_b, S.dim, rng))
        b1, b2 = _fixed_length_pairs(S, epsilon, b_start, rng)
        c_start = sample_points(S, n_c, seed=rng, method="uniform")
        c1, c2 = _fixed_length_pairs(S, epsilon, c_start, rng)
        x1 = np.concatenate([a1, b1, c1])
        x2 = np.concatenate([a2, b2, c2])
        if len(x1):
            ok = np.abs(pnorm(x2 - x1, S.p) - epsilon) <= tol
            x1, x2 = x1[ok], x2[ok]
        if len(x1):
            best = min(best, float(np.min(S.margin(0.5 * (x1 + x2)))))
            accepted += len(x1)
        if accepted >= samples // 2:
            break
    if accepted == 0:
        raise SamplingError(f"no admissible chord of length {epsilon} was found")
    best = max(best, 0.0)
    return ModulusBound(float(epsilon), best, best / epsilon**2, diam)


def extremality_check(
    S: ConvexSet, boundary_samples: int = 200, tol: float = 1e-2, seed=0
) -> bool:
    """Sampled test of extr S = fr S (n <= 3).

    A boundary point b is declared non-extreme when some direction u keeps
    both b + 2 tol u and b - 2 tol u inside S; by convexity that is the same as
    b being the midpoint of two members at distance >= 2 tol from it.
    """
    if S.dim > 3:
        raise InvalidParameterError("extremality_check supports n <= 3")
    rng = as_rng(seed)
    if S.dim == 1:
        return True
    dirs = unit_directions(boundary_samples, S.dim, seed=rng)
    if S.dim == 2:
        shift = rng.random() * 2 * math.pi / boundary_samples
        c, s = math.cos(shift), math.sin(shift)
        dirs = dirs @ np.array([[c, s], [-s, c]])
    pts = boundary_points(S, dirs)
    step = 2.0 * tol
    atol = 1e-12 * max(1.0, float(np.max(np.abs(pts))))

    def score(b, u):
        u = u / np.linalg.norm(u, axis=-1, keepdims=True)
        return np.minimum(S.margin(b + step * u), S.margin(b - step * u))

    grid = unit_directions(360 if S.dim == 2 else 2000, S.dim, half=True)
    for b in pts:
        vals = score(b[None, :], grid)
        k = int(np.argmax(vals))
        if vals[k] >= -atol:
            return False
        if S.dim == 2:
            a0 = math.atan2(grid[k, 1], grid[k, 0])
            da = math.pi / len(grid)
            res = optimize.minimize_scalar(
                lambda a: -float(score(b, np.array([math.cos(a), math.sin(a)]))),
                bounds=(a0 - da, a0 + da),
                method="bounded",
                options={"xatol": 1e-12},
            )
            top = -res.fun
        else:
            u0 = grid[k]
            th0, ph0 = math.acos(np.clip(u0[2], -1, 1)), math.atan2(u0[1], u0[0])

            def neg(v):
                th, ph = v
                u = np.array([math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)])
                return -float(score(b, u))

            res = optimize.minimize(neg, [th0, ph0], method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-15})
            top = -res.fun
        if top >= -atol:
            return False
    return True
