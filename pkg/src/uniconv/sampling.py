"""Seeded random and low-discrepancy point generators."""

from __future__ import annotations

import math

import numpy as np
from scipy.stats import qmc


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sobol(count: int, dim: int, seed=0) -> np.ndarray:
    """Scrambled Sobol points in [0, 1)^dim.

    Draws the next power of two and truncates, which keeps scipy from warning
    about unbalanced sample sizes.
    """
    if count <= 0:
        return np.empty((0, dim))
    m = max(0, math.ceil(math.log2(count)))
    engine = qmc.Sobol(d=dim, scramble=True, seed=as_rng(seed))
    return engine.random_base2(m)[:count]


def unit_directions(count: int, dim: int, seed=0, half: bool = False) -> np.ndarray:
    """Quasi-uniform unit vectors in R^dim.

    In 2-D the directions are evenly spaced angles, in 3-D a Fibonacci
    lattice; higher dimensions use normalised Gaussian Sobol points. With
    ``half=True`` only one of each antipodal pair is produced.
    """
    if dim == 1:
        return np.array([[1.0]]) if half else np.array([[1.0], [-1.0]])
    if dim == 2:
        span = math.pi if half else 2.0 * math.pi
        t = np.arange(count) * (span / count)
        return np.column_stack([np.cos(t), np.sin(t)])
    if dim == 3:
        k = np.arange(count) + 0.5
        z = 1.0 - k / count if half else 1.0 - 2.0 * k / count
        golden = math.pi * (3.0 - math.sqrt(5.0))
        rho = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
        phi = golden * k
        return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])
    from scipy.special import ndtri

    u = sobol(count, dim, seed)
    g = ndtri(np.clip(u, 1e-12, 1 - 1e-12))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    if half:
        g[g[:, 0] < 0] *= -1.0
    return g


def random_directions(count: int, dim: int, rng) -> np.ndarray:
    rng = as_rng(rng)
    g = rng.standard_normal((count, dim))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return g / norms


def uniform_in_euclidean_ball(count: int, center, radius: float, rng) -> np.ndarray:
    rng = as_rng(rng)
    center = np.asarray(center, dtype=float)
    n = center.size
    d = random_directions(count, n, rng)
    r = radius * rng.random(count) ** (1.0 / n)
    return center + d * r[:, None]
