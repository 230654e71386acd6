"""Uniform grids, sampled functions and weighted quadrature.

Everything downstream works on two kinds of grids: a spatial grid (lattice
nodes of a box, endpoints included) carrying primal potentials, and a moment
grid (cell centers of the bounding box of a convex body) carrying Legendre
duals.  Values may be +inf only on moment grids; +inf is a dedicated
sentinel and every operation branches on it explicitly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class ConfigurationError(ValueError):
    """Invalid grid, body or experiment configuration."""


class SingularIntegrandError(ValueError):
    """+inf value met at a positive-weight node without a truncation cap."""


def _as_tuple(x) -> tuple:
    if np.isscalar(x):
        return (float(x),)
    return tuple(float(v) for v in x)


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform lattice on a box; nodes include both endpoints per axis."""

    lo: tuple
    hi: tuple
    cells: tuple

    def __post_init__(self):
        object.__setattr__(self, "lo", _as_tuple(self.lo))
        object.__setattr__(self, "hi", _as_tuple(self.hi))
        cells = (self.cells,) if np.isscalar(self.cells) else tuple(int(c) for c in self.cells)
        object.__setattr__(self, "cells", cells)
        n = len(self.lo)
        if n not in (1, 2) or len(self.hi) != n or len(self.cells) != n:
            raise ConfigurationError("grid dimension must be 1 or 2 and consistent")
        for lo, hi, c in zip(self.lo, self.hi, self.cells):
            if not lo < hi:
                raise ConfigurationError(f"need lo < hi, got [{lo}, {hi}]")
            if c < 8:
                raise ConfigurationError(f"need at least 8 cells per axis, got {c}")

    @property
    def ndim(self) -> int:
        return len(self.lo)

    @property
    def spacing(self) -> tuple:
        return tuple((h - l) / c for l, h, c in zip(self.lo, self.hi, self.cells))

    @property
    def shape(self) -> tuple:
        return tuple(c + 1 for c in self.cells)

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(l, h, c + 1) for l, h, c in zip(self.lo, self.hi, self.cells)]

    def nodes(self) -> np.ndarray:
        """All node coordinates, shape (N, ndim)."""
        axs = self.axes()
        if self.ndim == 1:
            return axs[0][:, None]
        g = np.meshgrid(*axs, indexing="ij")
        return np.stack([a.ravel() for a in g], axis=1)


@dataclass(frozen=True)
class MomentGrid:
    """Cell-center grid over the bounding box of a convex body.

    Nodes whose center lies in the body get the full cell volume as weight,
    others get zero.  For intervals (n=1) the weights sum exactly to the
    body volume; for polygons the boundary error is O(h * perimeter).
    """

    lo: tuple
    hi: tuple
    cells: tuple
    mask: np.ndarray = field(compare=False)
    weights: np.ndarray = field(compare=False)

    @property
    def ndim(self) -> int:
        return len(self.lo)

    @property
    def spacing(self) -> tuple:
        return tuple((h - l) / c for l, h, c in zip(self.lo, self.hi, self.cells))

    @property
    def shape(self) -> tuple:
        return tuple(self.cells)

    def axes(self) -> list[np.ndarray]:
        return [
            l + (np.arange(c) + 0.5) * s
            for l, c, s in zip(self.lo, self.cells, self.spacing)
        ]

    def nodes(self) -> np.ndarray:
        axs = self.axes()
        if self.ndim == 1:
            return axs[0][:, None]
        g = np.meshgrid(*axs, indexing="ij")
        return np.stack([a.ravel() for a in g], axis=1)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))


def moment_grid(body, cells) -> MomentGrid:
    """Build the cell-center grid over ``body``'s bounding box."""
    lo, hi = body.bounding_box()
    cells = (cells,) * body.ndim if np.isscalar(cells) else tuple(int(c) for c in cells)
    if any(c < 8 for c in cells):
        raise ConfigurationError("need at least 8 moment cells per axis")
    spacing = [(h - l) / c for l, h, c in zip(lo, hi, cells)]
    axs = [l + (np.arange(c) + 0.5) * s for l, c, s in zip(lo, cells, spacing)]
    if body.ndim == 1:
        pts = axs[0][:, None]
        shape = (cells[0],)
    else:
        g = np.meshgrid(*axs, indexing="ij")
        pts = np.stack([a.ravel() for a in g], axis=1)
        shape = tuple(cells)
    mask = body.contains(pts).reshape(shape)
    if not mask.any():
        raise ConfigurationError("body has no interior at this resolution")
    weights = np.where(mask, float(np.prod(spacing)), 0.0)
    return MomentGrid(tuple(lo), tuple(hi), cells, mask, weights)


@dataclass(frozen=True)
class SampledFunction:
    """Node values on a grid; +inf is allowed only on moment grids."""

    grid: object  # SpatialGrid | MomentGrid
    values: np.ndarray = field(compare=False)
    provenance: str = "derived"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise ConfigurationError(
                f"value shape {values.shape} does not match grid shape {self.grid.shape}"
            )
        if np.isneginf(values).any() or np.isnan(values).any():
            raise ConfigurationError("values must be real or +inf")
        if np.isposinf(values).any() and isinstance(self.grid, SpatialGrid):
            raise ConfigurationError("+inf values are only allowed on moment grids")
        if not np.isfinite(values).any():
            raise ConfigurationError("need at least one finite value")
        object.__setattr__(self, "values", values)

    @property
    def has_infinite(self) -> bool:
        return bool(np.isposinf(self.values).any())


def lp_norm_against(values: np.ndarray, grid: MomentGrid, p: float,
                    truncate: float | None = None) -> float:
    """(sum_j w_j |v_j|^p)^(1/p) against the moment-grid weights.

    +inf at a positive-weight node raises unless ``truncate`` caps it.
    """
    if p < 1:
        raise ConfigurationError(f"need p >= 1, got {p}")
    v = np.asarray(values, dtype=float)
    w = grid.weights
    pos = w > 0
    if np.isposinf(v[pos]).any():
        if truncate is None:
            raise SingularIntegrandError(
                "+inf at a positive-weight node; pass a truncation cap"
            )
        v = np.minimum(v, truncate)
    return float(np.sum(w[pos] * np.abs(v[pos]) ** p) ** (1.0 / p))
