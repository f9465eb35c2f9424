"""
Smooth maps R^n -> R^m, their derivatives, and the two constants that drive
the convexity certificate: the exact regularity bound at a point and the
Lipschitz constant of the derivative over a ball.

Operator norms are Euclidean and computed by dense SVD; everything here is
meant for small matrices (m, n <= 16).
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy import optimize

from .errors import (
    DimensionMismatchError,
    InvalidParameterError,
    NonFiniteError,
    NotOntoError,
    RegionError,
)
from .sampling import as_rng, uniform_in_euclidean_ball, unit_directions

RANK_TOL = 1e-10
FD_STEP = np.finfo(float).eps ** (1.0 / 3.0)


def opnorm(M) -> np.ndarray:
    """Spectral norm of a matrix or a stack of matrices."""
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return np.zeros(M.shape[:-2])
    return np.linalg.norm(M, ord=2, axis=(-2, -1))


class SmoothMap(ABC):
    n: int
    m: int

    @abstractmethod
    def eval_batch(self, X) -> np.ndarray:
        """Evaluate at every row of X, shape (..., n) -> (..., m)."""

    @abstractmethod
    def jacobian_batch(self, X) -> np.ndarray:
        """Jacobians at every row of X, shape (..., n) -> (..., m, n)."""

    def __call__(self, x):
        return self.eval_batch(x)

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise DimensionMismatchError(f"expected input dimension {self.n}, got {x.shape[-1]}")
        return x


class QuadraticMap(SmoothMap):
    """f_i(x) = 0.5 x'A_i x + b_i'x + c_i, i = 1..m."""

    def __init__(self, A, b, c):
        A = np.asarray(A, dtype=float)
        if A.ndim == 2:
            A = A[None]
        self.A = A
        self.m, self.n = A.shape[0], A.shape[1]
        self.b = np.asarray(b, dtype=float).reshape(self.m, self.n)
        self.c = np.asarray(c, dtype=float).reshape(self.m)
        if A.shape != (self.m, self.n, self.n):
            raise DimensionMismatchError(f"A has shape {A.shape}, expected (m, n, n)")
        for i, Ai in enumerate(A):
            if not np.allclose(Ai, Ai.T, rtol=1e-12, atol=1e-12):
                raise InvalidParameterError(f"component {i}: matrix A is not symmetric")

    @classmethod
    def linear(cls, M, c=None):
        M = np.atleast_2d(np.asarray(M, dtype=float))
        m, n = M.shape
        return cls(np.zeros((m, n, n)), M, np.zeros(m) if c is None else c)

    @classmethod
    def stack(cls, *maps: "QuadraticMap") -> "QuadraticMap":
        return cls(
            np.concatenate([q.A for q in maps]),
            np.concatenate([q.b for q in maps]),
            np.concatenate([q.c for q in maps]),
        )

    def __repr__(self):
        return f"QuadraticMap(n={self.n}, m={self.m})"

    def eval_batch(self, X):
        X = self._check(X)
        quad = 0.5 * np.einsum("ijk,...j,...k->...i", self.A, X, X)
        return quad + X @ self.b.T + self.c

    def jacobian_batch(self, X):
        X = self._check(X)
        return np.einsum("ijk,...k->...ij", self.A, X) + self.b

    def derivative_slope(self, u) -> np.ndarray:
        """Df(x + u) - Df(x), which does not depend on x."""
        return np.einsum("ijk,...k->...ij", self.A, np.asarray(u, dtype=float))


class BlackBoxMap(SmoothMap):
    """Map given by an evaluator; Jacobian analytic if supplied, else central differences."""

    def __init__(self, fun: Callable, n: int, m: int, jac: Callable | None = None):
        self.fun, self.jac = fun, jac
        self.n, self.m = int(n), int(m)

    def __repr__(self):
        return f"BlackBoxMap(n={self.n}, m={self.m})"

    def _one(self, x):
        y = np.atleast_1d(np.asarray(self.fun(x), dtype=float))
        if y.shape != (self.m,):
            raise DimensionMismatchError(f"evaluator returned shape {y.shape}, expected ({self.m},)")
        return y

    def eval_batch(self, X):
        X = self._check(X)
        flat = X.reshape(-1, self.n)
        out = np.array([self._one(x) for x in flat]).reshape(X.shape[:-1] + (self.m,))
        return out

    def fd_jacobian(self, x):
        x = np.asarray(x, dtype=float)
        h = FD_STEP * max(1.0, float(np.linalg.norm(x)))
        J = np.empty((self.m, self.n))
        for j in range(self.n):
            e = np.zeros(self.n)
            e[j] = h
            J[:, j] = (self._one(x + e) - self._one(x - e)) / (2.0 * h)
        return J

    def jacobian_batch(self, X):
        X = self._check(X)
        flat = X.reshape(-1, self.n)
        if self.jac is not None:
            Js = [np.asarray(self.jac(x), dtype=float).reshape(self.m, self.n) for x in flat]
        else:
            Js = [self.fd_jacobian(x) for x in flat]
        return np.array(Js).reshape(X.shape[:-1] + (self.m, self.n))


def as_blackbox(f: SmoothMap, analytic_jacobian: bool = False) -> BlackBoxMap:
    """Hide the structure of ``f`` behind an evaluator (used as an FD oracle)."""
    jac = (lambda x: f.jacobian_batch(x)) if analytic_jacobian else None
    return BlackBoxMap(lambda x: f.eval_batch(x), f.n, f.m, jac)


@dataclass(frozen=True)
class RegularityBound:
    value: float
    x0: np.ndarray
    surjective: bool
    sigma_min: float


@dataclass(frozen=True)
class LipschitzBound:
    value: float
    center: np.ndarray
    radius: float
    method: str
    certified: bool = False


class MidpointDefect(NamedTuple):
    defect: float
    bound: float
    ok: bool


class DiameterBound(NamedTuple):
    beta: float
    bound: float
    beta_plus_one: float


def eval_map(f: SmoothMap, x) -> np.ndarray:
    y = f.eval_batch(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(y)):
        raise NonFiniteError("map produced a non-finite value")
    return y


def jacobian(f: SmoothMap, x) -> np.ndarray:
    J = f.jacobian_batch(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(J)):
        raise NonFiniteError("Jacobian has non-finite entries")
    return J


def _slope_norm(f: QuadraticMap, U):
    U = U / np.linalg.norm(U, axis=-1, keepdims=True)
    return opnorm(f.derivative_slope(U))


def lip_derivative(
    f: SmoothMap,
    center,
    radius: float,
    method: str = "exact",
    directions: int = 10_000,
    pairs: int = 4000,
    seed=0,
) -> LipschitzBound:
    """Lipschitz constant of Df over the Euclidean ball(center, radius).

    ``exact`` (quadratic maps only): Df is affine, so the constant is
    max over unit u of ||[A_i u]_i||. Found by a quasi-uniform sweep of the
    sphere followed by local ascent from the best directions; certified for
    n <= 3. ``sampled``: max difference quotient over random pairs, a lower
    estimate.
    """
    center = np.asarray(center, dtype=float)
    if center.shape != (f.n,):
        raise DimensionMismatchError("center dimension does not match the map")
    if not radius > 0:
        raise InvalidParameterError("region radius must be positive")
    if method == "exact":
        if not isinstance(f, QuadraticMap):
            raise InvalidParameterError("exact Lipschitz bound needs a quadratic map")
        if not np.any(f.A):
            return LipschitzBound(0.0, center, float(radius), "exact-quadratic", True)
        if f.n == 1:
            val = float(_slope_norm(f, np.ones((1, 1)))[0])
            return LipschitzBound(val, center, float(radius), "exact-quadratic", True)
        U = unit_directions(directions, f.n, seed=seed, half=True)
        vals = _slope_norm(f, U)
        best = float(vals.max())
        for k in np.argsort(vals)[-5:]:
            res = optimize.minimize(
                lambda u: -float(_slope_norm(f, u[None, :])[0]),
                U[k],
                method="Nelder-Mead",
                options={"xatol": 1e-13, "fatol": 1e-15, "maxiter": 20000},
            )
            best = max(best, -float(res.fun))
        return LipschitzBound(best, center, float(radius), "exact-quadratic", f.n <= 3)
    if method == "sampled":
        rng = as_rng(seed)
        X = uniform_in_euclidean_ball(pairs, center, radius, rng)
        Y = uniform_in_euclidean_ball(pairs, center, radius, rng)
        dist = np.linalg.norm(X - Y, axis=1)
        ok = dist > 1e-12 * max(1.0, radius)
        diff = f.jacobian_batch(X[ok]) - f.jacobian_batch(Y[ok])
        val = float(np.max(opnorm(diff) / dist[ok])) if np.any(ok) else 0.0
        return LipschitzBound(val, center, float(radius), "sampled", False)
    raise InvalidParameterError(f"unknown method {method!r}")


def reg_bound(f: SmoothMap, x0) -> RegularityBound:
    """Exact regularity bound 1/sigma_min(Df(x0)); +inf when Df(x0) is not onto."""
    x0 = np.asarray(x0, dtype=float)
    if f.m > f.n:
        raise NotOntoError(f"a map R^{f.n} -> R^{f.m} cannot have a surjective derivative")
    J = jacobian(f, x0)
    s = np.linalg.svd(J, compute_uv=False)
    smax, smin = float(s[0]), float(s[-1])
    if smax == 0.0 or smin <= RANK_TOL * smax:
        return RegularityBound(math.inf, x0, False, smin)
    return RegularityBound(1.0 / smin, x0, True, smin)


def midpoint_defect_check(
    f: SmoothMap, x1, x2, lip: LipschitzBound, tol: float = 1e-9
) -> MidpointDefect:
    """Both sides of ||(f(x1)+f(x2))/2 - f((x1+x2)/2)|| <= lip/8 ||x1-x2||^2."""
    x1, x2 = np.asarray(x1, dtype=float), np.asarray(x2, dtype=float)
    reach = lip.radius * (1.0 + 1e-12)
    for x in (x1, x2):
        if np.linalg.norm(x - lip.center) > reach:
            raise RegionError("segment leaves the region of the Lipschitz bound")
    y = f.eval_batch(np.stack([x1, x2, 0.5 * (x1 + x2)]))
    defect = float(np.linalg.norm(0.5 * (y[0] + y[1]) - y[2]))
    bound = lip.value / 8.0 * float(np.dot(x1 - x2, x1 - x2))
    return MidpointDefect(defect, bound, defect <= bound + tol)


def image_diameter_bound(f: SmoothMap, S, samples: int = 4096, seed=0) -> DiameterBound:
    """beta = sup over S of ||Df(x)||, with diam f(S) <= beta diam S.

    The sup is sampled over boundary and interior points and polished by local
    ascent over boundary directions; for quadratic maps ||Df|| is convex in x
    so the boundary carries the maximum.
    """
    from .geometry import boundary_points, sample_points

    dirs = unit_directions(samples, S.dim, seed=seed)
    origin = S.interior_point()
    bpts = boundary_points(S, dirs, origin)
    ipts = sample_points(S, max(64, samples // 4), seed=seed)
    pts = np.concatenate([bpts, ipts, origin[None, :]])
    norms = opnorm(f.jacobian_batch(pts))
    beta = float(norms.max())

    def on_boundary(u):
        u = u / np.linalg.norm(u)
        return boundary_points(S, u[None, :], origin)[0]

    for k in np.argsort(norms[: len(bpts)])[-3:]:
        res = optimize.minimize(
            lambda u: -float(opnorm(f.jacobian_batch(on_boundary(u)))),
            dirs[k],
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 400},
        )
        beta = max(beta, -float(res.fun))
    return DiameterBound(beta, beta * S.diameter(), beta + 1.0)
