"""
Constrained minimisation over a uniformly convex set, studied in image space.

Problem: minimise phi(x) over x in S subject to g(x) in C. The image map
Phi_{x0}(x) = (phi(x) - phi(x0), g(x)) and the set Q = (-inf, 0) x C recast
optimality of x0 as Phi_{x0}(S) and Q being disjoint. The routines below find
the global solution by oracle-style search at desk scale, then look for a
Lagrange multiplier, a saddle point and a zero duality gap.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import optimize

from .calculus import BlackBoxMap, QuadraticMap, SmoothMap, reg_bound
from .cones import ProductCone, Singleton
from .errors import (
    DimensionMismatchError,
    InfeasibleError,
    InvalidParameterError,
    PreconditionError,
)
from .geometry import ConvexSet, PNormBall, sample_points
from .sampling import as_rng

SWEEP_ANGLES = 2**17
MULTIPLIER_CAP = 2.0**16
FEAS_TOL = 1e-8


@dataclass(frozen=True)
class ProblemSpec:
    """minimise phi over S subject to g(x) in C; ``g=None`` means no constraint."""

    phi: SmoothMap
    g: SmoothMap | None
    S: ConvexSet
    C: ProductCone | Singleton | None
    x0: np.ndarray

    def __post_init__(self):
        x0 = np.asarray(self.x0, dtype=float)
        object.__setattr__(self, "x0", x0)
        if self.phi.m != 1:
            raise DimensionMismatchError("the objective must be real-valued")
        n = self.phi.n
        if self.S.dim != n or x0.shape != (n,):
            raise DimensionMismatchError("objective, set and base point disagree on the dimension")
        if self.g is None:
            if self.C is not None and self.C.dim != 0:
                raise DimensionMismatchError("target set given without a constraint map")
            object.__setattr__(self, "C", None)
            return
        if self.g.n != n:
            raise DimensionMismatchError("constraint map has the wrong input dimension")
        C = self.C if self.C is not None else ProductCone.whole_space(self.g.m)
        if C.dim != self.g.m:
            raise DimensionMismatchError(f"target lives in R^{C.dim}, constraint map in R^{self.g.m}")
        object.__setattr__(self, "C", C)

    @property
    def n(self) -> int:
        return self.phi.n

    @property
    def k(self) -> int:
        return 0 if self.g is None else self.g.m

    def objective(self, X) -> np.ndarray:
        return self.phi.eval_batch(X)[..., 0]

    def constraint_residual(self, X) -> np.ndarray:
        """dist(g(x), C) per point (0 when unconstrained)."""
        X = np.asarray(X, dtype=float)
        if self.g is None:
            return np.zeros(X.shape[:-1])
        return self.C.distance(self.g.eval_batch(X))

    def feasible(self, X, tol: float = FEAS_TOL) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return (self.S.margin(X) >= -tol) & (self.constraint_residual(X) <= tol)

    @property
    def cone(self) -> ProductCone | None:
        """C as a ProductCone when C is a cone, else None."""
        if self.g is None:
            return ProductCone(())
        if isinstance(self.C, ProductCone):
            return self.C
        return ProductCone.zero(self.C.dim) if self.C.is_cone else None


@dataclass(frozen=True)
class ImageSpace:
    map: SmoothMap
    C: ProductCone | Singleton | None
    x0: np.ndarray

    def in_Q(self, Y) -> np.ndarray:
        """Membership of image points in Q = (-inf, 0) x C."""
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        first = Y[:, 0] < 0.0
        if Y.shape[1] == 1:
            return first
        return first & (self.C.distance(Y[:, 1:]) <= 0.0)


@dataclass(frozen=True)
class SolveReport:
    x_bar: np.ndarray
    phi_value: float
    boundary_distance: float
    feasibility: float
    method: str
    certified: bool | None = None
    multiplier: np.ndarray | None = None
    multiplier_residual: float | None = None
    multiplier_status: str = "not-run"
    lagrangian_min_ok: bool | None = None
    duality_gap: float | None = None
    gap_truncated: bool | None = None
    saddle_ok: bool | None = None
    interior_nonopt_ok: bool | None = None
    notes: tuple[str, ...] = field(default_factory=tuple)

    def as_dict(self) -> dict:
        d = asdict(self)
        for key in ("x_bar", "multiplier"):
            if d[key] is not None:
                d[key] = [float(v) for v in np.atleast_1d(d[key])]
        d["notes"] = list(self.notes)
        return d


def build_image_map(p: ProblemSpec, x0=None) -> ImageSpace:
    """Phi_{x0} with the shift -phi(x0) folded into the first component."""
    x0 = p.x0 if x0 is None else np.asarray(x0, dtype=float)
    if x0.shape != (p.n,):
        raise DimensionMismatchError("base point has the wrong dimension")
    shift = float(p.objective(x0))
    parts = [p.phi] + ([] if p.g is None else [p.g])
    if all(isinstance(q, QuadraticMap) for q in parts):
        phi = p.phi
        head = QuadraticMap(phi.A, phi.b, phi.c - shift)
        Phi = head if p.g is None else QuadraticMap.stack(head, p.g)
    else:
        def fun(x):
            y = p.phi.eval_batch(x) - shift
            return y if p.g is None else np.concatenate([y, p.g.eval_batch(x)])

        def jac(x):
            J = p.phi.jacobian_batch(x)
            return J if p.g is None else np.vstack([J, p.g.jacobian_batch(x)])

        Phi = BlackBoxMap(fun, p.n, 1 + p.k, jac)
    return ImageSpace(Phi, p.C, x0)


def lagrangian_eval(p: ProblemSpec, y_star, x) -> np.ndarray | float:
    """phi(x) + <y*, g(x)>, vectorised over rows of x."""
    x = np.asarray(x, dtype=float)
    val = p.objective(x)
    if p.g is not None:
        y = np.asarray(y_star, dtype=float).reshape(p.k)
        val = val + p.g.eval_batch(x) @ y
    return float(val) if np.ndim(val) == 0 else val


def _lagrangian_quadratic(p: ProblemSpec, y) -> QuadraticMap | None:
    maps = [p.phi] + ([] if p.g is None else [p.g])
    if not all(isinstance(q, QuadraticMap) for q in maps):
        return None
    A, b, c = p.phi.A[0].copy(), p.phi.b[0].copy(), float(p.phi.c[0])
    if p.g is not None:
        y = np.asarray(y, dtype=float).reshape(p.k)
        A = A + np.einsum("i,ijk->jk", y, p.g.A)
        b = b + y @ p.g.b
        c = c + float(y @ p.g.c)
    return QuadraticMap(A[None], b[None], [c])


# ---------------------------------------------------------------- inner solvers


def trust_region_min(A, b, center, radius):
    """Global minimiser of 0.5 x'Ax + b'x over the Euclidean ball(center, radius).

    Eigen-decomposition plus bisection on the secular equation, with the
    hard case handled explicitly.
    """
    A = np.asarray(A, dtype=float)
    center = np.asarray(center, dtype=float)
    lam, Q = np.linalg.eigh(A)
    g = Q.T @ (A @ center + np.asarray(b, dtype=float))
    scale = max(1.0, float(np.abs(lam).max()))
    gnorm = float(np.linalg.norm(g))
    if lam[0] > 1e-14 * scale:
        u = -g / lam
        if np.linalg.norm(u) <= radius:
            return center + Q @ u
    lo = max(0.0, -float(lam[0]))
    deg = np.abs(lam - lam[0]) <= 1e-12 * scale
    if lam[0] <= 1e-14 * scale and np.all(np.abs(g[deg]) <= 1e-12 * (1.0 + gnorm)):
        u = np.zeros_like(g)
        d = lam[~deg] + lo
        u[~deg] = -g[~deg] / d
        rest = radius**2 - float(u @ u)
        if rest >= 0.0:
            u[np.flatnonzero(deg)[0]] = math.sqrt(rest)
            return center + Q @ u

    def unorm(mu):
        d = lam + mu
        with np.errstate(divide="ignore", invalid="ignore"):
            v = np.where(g == 0.0, 0.0, g / d)
        return float(np.linalg.norm(v)) if np.all(np.isfinite(v)) else math.inf

    a, bb = lo, lo + gnorm / radius + 1e-300
    for _ in range(300):
        mid = 0.5 * (a + bb)
        if mid <= a or mid >= bb:
            break
        if unorm(mid) > radius:
            a = mid
        else:
            bb = mid
    u = -g / (lam + bb)
    nu = float(np.linalg.norm(u))
    if nu > 0:
        u *= radius / nu
    return center + Q @ u


def _scipy_constraints(p: ProblemSpec, with_g: bool = True) -> list[dict]:
    cons = list(p.S.inequality_constraints())
    if with_g and p.g is not None:
        g = p.g
        if isinstance(p.C, Singleton):
            pt = np.asarray(p.C.point)
            cons.append({"type": "eq", "fun": lambda x: g.eval_batch(x) - pt, "jac": lambda x: g.jacobian_batch(x)})
        else:
            for i, kind in enumerate(p.C.kinds):
                if kind == "free":
                    continue
                if isinstance(g, QuadraticMap) and not np.any(g.A[i]) and not np.any(g.b[i]):
                    # a constant component is either always or never satisfied
                    if ProductCone((kind,)).distance(g.c[i : i + 1])[()] > 0:
                        raise InfeasibleError(f"constraint component {i} is a constant outside C")
                    continue
                sgn = -1.0 if kind == "nonpos" else 1.0
                cons.append(
                    {
                        "type": "eq" if kind == "zero" else "ineq",
                        "fun": lambda x, i=i, s=sgn: s * g.eval_batch(x)[i],
                        "jac": lambda x, i=i, s=sgn: s * g.jacobian_batch(x)[i],
                    }
                )
    return cons


def _violation(x, cons) -> float:
    worst = 0.0
    for c in cons:
        v = np.atleast_1d(c["fun"](x))
        worst = max(worst, float(np.max(np.abs(v) if c["type"] == "eq" else -v, initial=0.0)))
    return worst


def _polish_active(x, cons, iters: int = 6, active: float = 1e-7):
    """Minimum-norm Newton steps onto the active constraints (SLSQP stops at ~1e-8)."""
    best, best_viol = x, _violation(x, cons)
    for _ in range(iters):
        F, J = [], []
        for c in cons:
            v = np.atleast_1d(c["fun"](x))
            jac = np.atleast_2d(c["jac"](x))
            mask = np.ones(len(v), bool) if c["type"] == "eq" else v <= active
            F.append(v[mask])
            J.append(jac[mask])
        F = np.concatenate(F) if F else np.zeros(0)
        if F.size == 0 or not np.any(F):
            break
        x = x - np.linalg.pinv(np.vstack(J)) @ F
        viol = _violation(x, cons)
        if viol <= best_viol:
            best, best_viol = x, viol
    return best


def _multistart(fun, jac, cons, starts, accept):
    """SLSQP from each start; returns accepted local minima sorted by value."""
    found = []
    for x in starts:
        res = optimize.minimize(
            fun, x, jac=jac, constraints=cons, method="SLSQP",
            options={"maxiter": 500, "ftol": 1e-15},
        )
        x = _polish_active(res.x, cons) if cons and np.all(np.isfinite(res.x)) else res.x
        if np.all(np.isfinite(x)) and accept(x):
            found.append((float(fun(x)), tuple(x)))
    found.sort()
    return [(v, np.array(x)) for v, x in found]


def minimize_over_set(q: SmoothMap, S: ConvexSet, extra=(), samples: int = 2048, polish: int = 8, seed=0):
    """Global minimum of the scalar map q over S (exact for quadratics on Euclidean balls).

    Returns (x, value). ``extra`` points are always included as candidates.
    """
    if isinstance(q, QuadraticMap) and isinstance(S, PNormBall) and S.p == 2:
        x = trust_region_min(q.A[0], q.b[0], S.center, S.radius)
        cands = [x] + [np.asarray(e, dtype=float) for e in extra]
    else:
        X = sample_points(S, samples, seed=seed)
        vals = q.eval_batch(X)[:, 0]
        starts = X[np.argsort(vals)[:polish]]
        starts = np.vstack([starts, S.interior_point()[None, :]])
        fun = lambda x: float(q.eval_batch(x)[0])
        jac = lambda x: q.jacobian_batch(x)[0]
        loc = _multistart(fun, jac, S.inequality_constraints(), starts, lambda x: S.margin(x) >= -1e-10)
        cands = [X[int(np.argmin(vals))]] + [x for _, x in loc] + [np.asarray(e, dtype=float) for e in extra]
    C = np.array(cands)
    v = q.eval_batch(C)[:, 0]
    i = int(np.argmin(v))
    return C[i], float(v[i])


# ---------------------------------------------------------------- global solve


def _ellipse_case(p: ProblemSpec):
    """Parametrisation x(theta) of {g = target} when it is an ellipse in R^2."""
    if p.n != 2 or p.k != 1 or not isinstance(p.g, QuadraticMap):
        return None
    if isinstance(p.C, Singleton):
        target = p.C.point[0]
    elif p.C.kinds == ("zero",):
        target = 0.0
    else:
        return None
    A, b, c = p.g.A[0], p.g.b[0], float(p.g.c[0]) - target
    lam = np.linalg.eigvalsh(A)
    if lam[0] * lam[-1] <= 0:
        return None
    if lam[0] < 0:
        A, b, c = -A, -b, -c
    xc = -np.linalg.solve(A, b)
    level = 0.5 * float(xc @ A @ xc) - c
    if level < 0:
        return "empty"
    w, V = np.linalg.eigh(A)
    M = V @ np.diag(np.sqrt(2.0 * level / w))

    def x_of(t):
        t = np.asarray(t, dtype=float)
        return xc + np.stack([np.cos(t), np.sin(t)], axis=-1) @ M.T

    return x_of


def _sweep_ellipse(p: ProblemSpec, x_of):
    t = np.arange(SWEEP_ANGLES) * (2.0 * math.pi / SWEEP_ANGLES)
    step = 2.0 * math.pi / SWEEP_ANGLES
    X = x_of(t)
    F = p.S.inside(X)
    if not F.any():
        return None
    val = np.where(F, p.objective(X), np.inf)
    cands = []
    # ends of feasible arcs, located by bisection on membership
    change = np.flatnonzero(F != np.roll(F, -1))
    for i in change:
        a, b = t[i], t[i] + step
        fa = F[i]
        for _ in range(80):
            m = 0.5 * (a + b)
            if bool(p.S.inside(x_of(m))) == fa:
                a = m
            else:
                b = m
        cands.append(a if fa else b)
    # interior local minima along the curve, polished by bounded Brent
    left, right = np.roll(val, 1), np.roll(val, -1)
    loc = np.flatnonzero(np.isfinite(val) & (val <= left) & (val <= right))
    loc = loc[np.argsort(val[loc], kind="stable")[:8]]
    phi_t = lambda s: float(p.objective(x_of(s)))
    for i in loc:
        cands.append(t[i])
        if np.isfinite(left[i]) and np.isfinite(right[i]):
            res = optimize.minimize_scalar(
                phi_t, bounds=(t[i] - step, t[i] + step), method="bounded", options={"xatol": 1e-14}
            )
            if p.S.inside(x_of(res.x)):
                cands.append(float(res.x))
    best = None
    for s_ in cands:
        x = x_of(s_)
        if bool(p.S.inside(x)):
            key = (float(p.objective(x)), tuple(x))
            if best is None or key < best[0]:
                best = (key, x)
    return None if best is None else best[1]


def _multistart_solve(p: ProblemSpec, starts: int, seed):
    rng = as_rng(seed)
    S0 = np.vstack([p.x0[None, :], p.S.interior_point()[None, :], sample_points(p.S, starts, seed=rng)])
    fun = lambda x: float(p.objective(x))
    jac = lambda x: p.phi.jacobian_batch(x)[0]
    loc = _multistart(fun, jac, _scipy_constraints(p), S0, lambda x: bool(p.feasible(x)))
    if not loc:
        return None
    return loc[0][1]


def _report(p: ProblemSpec, x, method: str) -> SolveReport:
    x = np.asarray(x, dtype=float)
    return SolveReport(
        x_bar=x,
        phi_value=float(p.objective(x)),
        boundary_distance=max(0.0, float(p.S.margin(x))),
        feasibility=float(p.constraint_residual(x)),
        method=method,
    )


def global_solve(p: ProblemSpec, tol: float = 1e-9, starts: int = 64, seed=0) -> SolveReport:
    """Global minimiser of phi over S and g^{-1}(C), by the most reliable route available.

    * no constraint, quadratic phi, Euclidean ball S: exact trust-region solve;
    * one equality constraint whose level set is an ellipse in R^2: dense sweep
      of the angle parameter, polished at arc ends and local minima;
    * otherwise: multi-start SLSQP from low-discrepancy points of S.
    """
    if p.g is None or (isinstance(p.C, ProductCone) and all(k == "free" for k in p.C.kinds)):
        if isinstance(p.phi, QuadraticMap) and isinstance(p.S, PNormBall) and p.S.p == 2:
            x, _ = minimize_over_set(p.phi, p.S, seed=seed)
            return _report(p, x, "trust-region")
        x, _ = minimize_over_set(p.phi, p.S, samples=max(2048, 32 * starts), polish=starts // 4, seed=seed)
        return _report(p, x, "multistart")
    x_of = _ellipse_case(p)
    if x_of == "empty":
        raise InfeasibleError("the constraint level set is empty")
    if x_of is not None:
        x = _sweep_ellipse(p, x_of)
        if x is not None:
            return _report(p, x, "curve-sweep")
    x = _multistart_solve(p, starts, seed)
    if x is None:
        raise InfeasibleError("no feasible point found in S with g(x) in C")
    return _report(p, x, "multistart")


# ---------------------------------------------------------------- multipliers


def _inner_min(p: ProblemSpec, y, x_ref, seed=0) -> tuple[np.ndarray, float]:
    """argmin and min over S of L(y, .), with x_ref always among the candidates."""
    q = _lagrangian_quadratic(p, y)
    if q is None:
        y = np.asarray(y, dtype=float)
        q = BlackBoxMap(
            lambda x: np.atleast_1d(lagrangian_eval(p, y, x)),
            p.n,
            1,
            lambda x: p.phi.jacobian_batch(x) + (0 if p.g is None else y @ p.g.jacobian_batch(x)),
        )
    return minimize_over_set(q, p.S, extra=[x_ref], seed=seed)


def _concave_ascent(value_and_grad, intervals, start, cap, tol, sweeps=30, start_bound=1.0):
    """Maximise a concave function over a box of intervals by coordinate bisection.

    Each coordinate is bisected on the sign of its supergradient; open
    interval ends start at +-start_bound and double while the maximiser sits on them,
    up to ``cap``. Returns (y, value, truncated).
    """
    y = np.array(start, dtype=float)
    k = len(y)
    truncated = False
    best = value_and_grad(y)[0]
    for _ in range(sweeps):
        before = best
        for i in range(k):
            lo_lim, hi_lim = intervals[i]
            if lo_lim == hi_lim:
                y[i] = lo_lim
                continue
            bound = max(start_bound, abs(y[i]) * 2.0)
            while True:
                lo = max(lo_lim, -bound)
                hi = min(hi_lim, bound)

                def slope(t):
                    z = y.copy()
                    z[i] = t
                    return value_and_grad(z)[1][i]

                if slope(hi) > 0:
                    a = hi
                elif slope(lo) < 0:
                    a = lo
                else:
                    a_, b_ = lo, hi
                    for _ in range(100):
                        m = 0.5 * (a_ + b_)
                        if m <= a_ or m >= b_:
                            break
                        if slope(m) > 0:
                            a_ = m
                        else:
                            b_ = m
                    a = 0.5 * (a_ + b_)
                pinned = (a == hi and hi < hi_lim) or (a == lo and lo > lo_lim)
                if pinned and bound < cap:
                    bound = min(cap, bound * 2.0)
                    continue
                truncated = truncated or pinned
                break
            y[i] = a
        best = value_and_grad(y)[0]
        if k == 1 or abs(best - before) <= tol * 1e-3:
            break
    return y, best, truncated


@dataclass(frozen=True)
class MultiplierResult:
    y: np.ndarray
    residual: float
    found: bool
    status: str


def find_multiplier(
    p: ProblemSpec, x_bar, tol: float = 1e-6, cap: float = MULTIPLIER_CAP, seed=0
) -> MultiplierResult:
    """Search y* in N_C(g(x_bar)) with min_S L(y*, .) - L(y*, x_bar) >= -tol.

    The residual is concave in y*; it is maximised by coordinate bisection
    on its supergradient g(x_y) - g(x_bar), with the search range doubled up
    to ``cap``. ``status`` separates cap exhaustion from a true miss.
    """
    x_bar = np.asarray(x_bar, dtype=float)
    if p.g is None:
        _, v = _inner_min(p, np.zeros(0), x_bar, seed)
        res = v - float(p.objective(x_bar))
        ok = res >= -tol
        return MultiplierResult(np.zeros(0), res, ok, "found" if ok else "not-found")
    gbar = p.g.eval_batch(x_bar)
    intervals = p.C.normal_intervals(gbar if isinstance(p.C, ProductCone) else gbar - np.asarray(p.C.point))
    Lbar = lambda y: float(p.objective(x_bar)) + float(y @ gbar)

    def vg(y):
        x, v = _inner_min(p, y, x_bar, seed)
        return v - Lbar(y), p.g.eval_batch(x) - gbar

    y, res, truncated = _concave_ascent(vg, intervals, np.zeros(p.k), cap, tol)
    ok = res >= -tol
    status = "found" if ok else ("cap-exhausted" if truncated else "not-found")
    return MultiplierResult(y, float(res), bool(ok), status)


@dataclass(frozen=True)
class GapEstimate:
    primal: float
    dual: float
    gap: float
    y: np.ndarray
    truncated: bool


def duality_gap(
    p: ProblemSpec,
    y_box: float = 1.0,
    cap: float = MULTIPLIER_CAP,
    solution: SolveReport | None = None,
    seed=0,
) -> GapEstimate:
    """inf_x sup_{y in C-dual} L - sup_{y in C-dual} inf_x L, for a cone C.

    For feasible x the inner sup equals phi(x) and is +inf otherwise, so the
    primal value is the global solve value. The dual value is maximised over
    the dual cone with range doubling from ``y_box`` up to ``cap``.
    """
    cone = p.cone
    if cone is None:
        raise PreconditionError("the duality gap is defined for a cone C")
    sol = solution or global_solve(p, seed=seed)
    primal = sol.phi_value
    if p.g is None:
        _, v = _inner_min(p, np.zeros(0), sol.x_bar, seed)
        return GapEstimate(primal, v, primal - v, np.zeros(0), False)

    def vg(y):
        x, v = _inner_min(p, y, sol.x_bar, seed)
        return v, p.g.eval_batch(x)

    y, dual, truncated = _concave_ascent(vg, cone.dual_intervals(), np.zeros(p.k), max(cap, y_box), 1e-12, start_bound=y_box)
    return GapEstimate(primal, float(dual), float(primal - dual), y, bool(truncated))


@dataclass(frozen=True)
class SaddleResult:
    ok: bool
    left_violation: float
    right_violation: float


def saddle_check(p: ProblemSpec, x_bar, y_star, samples: int = 2000, tol: float = 1e-7, seed=0) -> SaddleResult:
    """L(y, x_bar) <= L(y*, x_bar) <= L(y*, x) on sampled y in C-dual and x in S."""
    x_bar = np.asarray(x_bar, dtype=float)
    rng = as_rng(seed)
    mid = lagrangian_eval(p, y_star, x_bar)
    left = 0.0
    if p.k:
        cone = p.cone
        if cone is None:
            raise PreconditionError("saddle points are checked for a cone C")
        B = max(1.0, 4.0 * float(np.abs(y_star).max()))
        lo = np.array([max(a, -B) for a, _ in cone.dual_intervals()])
        hi = np.array([min(b, B) for _, b in cone.dual_intervals()])
        Y = lo + rng.random((samples, p.k)) * (hi - lo)
        gbar = p.g.eval_batch(x_bar)
        left = max(0.0, float(np.max(p.objective(x_bar) + Y @ gbar)) - mid)
    X = sample_points(p.S, samples, seed=rng)
    _, vmin = _inner_min(p, np.asarray(y_star, dtype=float), x_bar, seed)
    low = min(vmin, float(np.min(lagrangian_eval(p, y_star, X))))
    right = max(0.0, mid - low)
    scale = tol * (1.0 + abs(mid))
    return SaddleResult(left <= scale and right <= scale, left, right)


@dataclass(frozen=True)
class InteriorCheck:
    ok: bool
    skipped: bool
    reason: str
    improvements: tuple = ()


def interior_nonoptimality_check(p: ProblemSpec, radii=(0.1, 0.01), x0=None, seed=0) -> InteriorCheck:
    """Confirm that an interior x0 with an open image map is not a local solution.

    For each radius r a feasible x in ball(x0, r) with
    phi(x) < phi(x0) - 1e-9 (1 + |phi(x0)|) is searched for.
    """
    x0 = p.x0 if x0 is None else np.asarray(x0, dtype=float)
    Phi = build_image_map(p, x0).map
    if Phi.m > Phi.n or not reg_bound(Phi, x0).surjective:
        return InteriorCheck(False, True, "image map is not open at x0 (derivative not onto)")
    if not p.S.margin(x0) > 0:
        return InteriorCheck(False, True, "x0 is not an interior point of S")
    f0 = float(p.objective(x0))
    margin = 1e-9 * (1.0 + abs(f0))
    found = []
    rng = as_rng(seed)
    for r in radii:
        local = PNormBall(x0, r)
        cons = _scipy_constraints(p) + local.inequality_constraints()
        starts = np.vstack([x0[None, :], sample_points(local, 16, seed=rng)])
        fun = lambda x: float(p.objective(x))
        jac = lambda x: p.phi.jacobian_batch(x)[0]
        accept = lambda x: bool(p.feasible(x, 1e-10)) and float(local.margin(x)) >= -1e-12
        loc = _multistart(fun, jac, cons, starts, accept)
        better = [v for v, _ in loc if v < f0 - margin]
        found.append((float(r), float(min(better)) if better else None))
    ok = all(v is not None for _, v in found)
    return InteriorCheck(ok, False, "" if ok else "no better feasible point at some radius", tuple(found))


def solve(p: ProblemSpec, tol: float = 1e-6, seed=0, certificate=None, radii=(0.1, 0.01)) -> SolveReport:
    """Global solve followed by the multiplier, gap, saddle and interior checks."""
    rep = global_solve(p, seed=seed)
    notes = []
    mult = find_multiplier(p, rep.x_bar, tol=tol, seed=seed)
    rep = replace(
        rep,
        certified=None if certificate is None else bool(certificate.certified),
        multiplier=mult.y,
        multiplier_residual=mult.residual,
        multiplier_status=mult.status,
        lagrangian_min_ok=mult.found,
    )
    if p.cone is not None:
        gap = duality_gap(p, solution=rep, seed=seed)
        rep = replace(rep, duality_gap=gap.gap, gap_truncated=gap.truncated)
    else:
        notes.append("gap skipped: C is not a cone")
    if mult.found and p.cone is not None:
        rep = replace(rep, saddle_ok=saddle_check(p, rep.x_bar, mult.y, seed=seed).ok)
    inter = interior_nonoptimality_check(p, radii, seed=seed)
    if inter.skipped:
        notes.append(f"interior check skipped: {inter.reason}")
    else:
        rep = replace(rep, interior_nonopt_ok=inter.ok)
    return replace(rep, notes=tuple(notes))
