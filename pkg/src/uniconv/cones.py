"""Closed convex cones generated by orthants, and singleton targets.

A ``ProductCone`` is a product of one-dimensional cones, one per component:
``zero`` ({0}), ``nonneg`` ([0, inf)), ``nonpos`` ((-inf, 0]) or ``free`` (R).
Normal cones and dual cones are then available in closed form as per-component
intervals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError

KINDS = ("zero", "nonneg", "nonpos", "free")


@dataclass(frozen=True)
class ProductCone:
    kinds: tuple[str, ...]

    def __post_init__(self):
        kinds = tuple(self.kinds)
        for k in kinds:
            if k not in KINDS:
                raise InvalidParameterError(f"unknown cone component {k!r}; expected one of {KINDS}")
        object.__setattr__(self, "kinds", kinds)

    @classmethod
    def zero(cls, k: int) -> "ProductCone":
        return cls(("zero",) * k)

    @classmethod
    def whole_space(cls, k: int) -> "ProductCone":
        return cls(("free",) * k)

    @property
    def dim(self) -> int:
        return len(self.kinds)

    is_cone = True

    def distance(self, y) -> np.ndarray:
        """Euclidean distance from y (shape (..., k)) to the cone."""
        y = np.asarray(y, dtype=float)
        parts = []
        for i, k in enumerate(self.kinds):
            v = y[..., i]
            if k == "zero":
                parts.append(np.abs(v))
            elif k == "nonneg":
                parts.append(np.maximum(0.0, -v))
            elif k == "nonpos":
                parts.append(np.maximum(0.0, v))
            else:
                parts.append(np.zeros_like(v))
        if not parts:
            return np.zeros(y.shape[:-1])
        return np.sqrt(np.sum(np.stack(parts, axis=-1) ** 2, axis=-1))

    def dual_intervals(self) -> list[tuple[float, float]]:
        """Per-component bounds of the dual cone {y* : <y*, y> <= 0 on C}."""
        table = {
            "zero": (-math.inf, math.inf),
            "nonneg": (-math.inf, 0.0),
            "nonpos": (0.0, math.inf),
            "free": (0.0, 0.0),
        }
        return [table[k] for k in self.kinds]

    def normal_intervals(self, ybar, tol: float = 1e-9) -> list[tuple[float, float]]:
        """Per-component bounds of the normal cone to C at ybar."""
        ybar = np.asarray(ybar, dtype=float)
        out = []
        for k, v in zip(self.kinds, ybar):
            if k == "zero":
                out.append((-math.inf, math.inf))
            elif k == "free":
                out.append((0.0, 0.0))
            elif abs(v) <= tol:
                out.append((-math.inf, 0.0) if k == "nonneg" else (0.0, math.inf))
            else:
                out.append((0.0, 0.0))
        return out


@dataclass(frozen=True)
class Singleton:
    point: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "point", tuple(float(v) for v in np.atleast_1d(self.point)))

    @property
    def dim(self) -> int:
        return len(self.point)

    @property
    def is_cone(self) -> bool:
        return all(v == 0.0 for v in self.point)

    def distance(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return np.linalg.norm(y - np.asarray(self.point), axis=-1)

    def dual_intervals(self):
        if not self.is_cone:
            raise InvalidParameterError("a nonzero singleton is not a cone")
        return [(-math.inf, math.inf)] * self.dim

    def normal_intervals(self, ybar, tol: float = 1e-9):
        return [(-math.inf, math.inf)] * self.dim
