"""Monge-Ampère measures, mixed measures, the energy functional and I_p.

Two independent discrete realizations are kept deliberately: the atomic
pushforward (one atom per finite moment node at the dual gradient, exact
mass conservation) and the Hessian density on the spatial grid (supports
pointwise comparisons).  Cross-checks between them guard both.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bodies import Body
from .duality import DualPotential, PrimalPotential, to_dual, to_primal
from .grids import ConfigurationError, SpatialGrid

NEGATIVE_CLAMP_FRACTION = 1e-6


class PolarizationError(ValueError):
    """Mixed measure came out negative beyond tolerance."""


class RequiresTruncationError(ValueError):
    """Operation needs a finite dual; truncate singular inputs first."""


@dataclass(frozen=True)
class AtomicMeasure:
    """Finitely many atoms (location, mass >= 0)."""

    locations: np.ndarray = field(compare=False)
    masses: np.ndarray = field(compare=False)
    provenance: str = "derived"

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    def integrate(self, values_at_atoms: np.ndarray) -> float:
        return float(np.sum(self.masses * values_at_atoms))


@dataclass(frozen=True)
class DensityField:
    """Nonnegative density per spatial node; clamped negative mass recorded."""

    grid: SpatialGrid
    density: np.ndarray = field(compare=False)
    clamped_mass: float = 0.0

    @property
    def total(self) -> float:
        return float(self.density.sum() * np.prod(self.grid.spacing))


def _dual_gradient(u: DualPotential) -> np.ndarray:
    """Gradient of the dual values on the moment grid, shape (*grid, ndim).

    Central differences where both neighbours are finite, one-sided at the
    boundary of the finite set; nan where no finite neighbour exists.
    """
    v = u.values
    out = np.full(v.shape + (u.grid.ndim,), np.nan)
    for axis in range(u.grid.ndim):
        h = u.grid.spacing[axis]
        vm = np.moveaxis(v, axis, 0)
        fin = np.isfinite(vm)
        has_prev = np.zeros_like(fin)
        has_prev[1:] = fin[:-1]
        has_next = np.zeros_like(fin)
        has_next[:-1] = fin[1:]
        vprev = np.roll(vm, 1, axis=0)
        vnext = np.roll(vm, -1, axis=0)
        g = np.full(vm.shape, np.nan)
        with np.errstate(invalid="ignore"):
            central = fin & has_prev & has_next
            g[central] = ((vnext - vprev) / (2 * h))[central]
            fwd = fin & has_next & ~central
            g[fwd] = ((vnext - vm) / h)[fwd]
            bwd = fin & has_prev & ~central
            g[bwd] = ((vm - vprev) / h)[bwd]
        out[..., axis] = np.moveaxis(g, 0, axis)
    return out


def ma_atomic(u: DualPotential) -> AtomicMeasure:
    """Pushforward of the moment-grid weights under the dual gradient."""
    grad = _dual_gradient(u)
    w = u.grid.weights.ravel()
    g = grad.reshape(-1, u.grid.ndim)
    keep = (w > 0) & np.isfinite(g).all(axis=1)
    return AtomicMeasure(g[keep], w[keep], provenance=u.provenance)


def ma_density(u: PrimalPotential) -> DensityField:
    """Discrete Hessian density on the spatial grid; negatives clamped."""
    v = u.values
    grid = u.grid
    rho = np.zeros_like(v)
    if grid.ndim == 1:
        h = grid.spacing[0]
        rho[1:-1] = (v[2:] - 2 * v[1:-1] + v[:-2]) / (h * h)
    else:
        hx, hy = grid.spacing
        vxx = np.zeros_like(v)
        vyy = np.zeros_like(v)
        vxy = np.zeros_like(v)
        vxx[1:-1, :] = (v[2:, :] - 2 * v[1:-1, :] + v[:-2, :]) / (hx * hx)
        vyy[:, 1:-1] = (v[:, 2:] - 2 * v[:, 1:-1] + v[:, :-2]) / (hy * hy)
        vxy[1:-1, 1:-1] = (
            v[2:, 2:] - v[2:, :-2] - v[:-2, 2:] + v[:-2, :-2]
        ) / (4 * hx * hy)
        rho = vxx * vyy - vxy * vxy
        rho[0, :] = rho[-1, :] = 0.0
        rho[:, 0] = rho[:, -1] = 0.0
    clamped = float(-rho[rho < 0].sum() * np.prod(grid.spacing))
    rho = np.maximum(rho, 0.0)
    return DensityField(grid, rho, clamped_mass=clamped)


def density_to_atoms(field_: DensityField, provenance: str = "density") -> AtomicMeasure:
    w = field_.density.ravel() * float(np.prod(field_.grid.spacing))
    keep = w > 0
    return AtomicMeasure(field_.grid.nodes()[keep], w[keep], provenance=provenance)


def ma_mixed_pair(u: DualPotential, v: DualPotential, spatial_grid: SpatialGrid,
                  tol_fraction: float = 5e-3) -> AtomicMeasure:
    """Mixed measure of two potentials (n=2) by midpoint polarization.

    det((A+B)/2) = det(A)/4 + D(A,B)/2 + det(B)/4 fixes the combination
    2*rho_mid - rho_u/2 - rho_v/2 for the mixed density D.
    """
    if u.grid.ndim != 2:
        raise ConfigurationError("mixed measures are defined for n=2 only")
    if u.grid != v.grid:
        raise ConfigurationError("mixed pair needs a common moment grid")
    pu = to_primal(u, spatial_grid)
    pv = to_primal(v, spatial_grid)
    mid = PrimalPotential(spatial_grid, 0.5 * (pu.values + pv.values), body=u.body)
    rho_mid = ma_density(mid).density
    rho_u = ma_density(pu).density
    rho_v = ma_density(pv).density
    mixed = 2.0 * rho_mid - 0.5 * rho_u - 0.5 * rho_v
    cell = float(np.prod(spatial_grid.spacing))
    neg = float(-mixed[mixed < 0].sum() * cell)
    vol = u.body.volume()
    if neg > tol_fraction * vol:
        raise PolarizationError(
            f"negative mixed mass {neg:.3e} exceeds {tol_fraction:.1e} * vol"
        )
    mixed = np.maximum(mixed, 0.0)
    w = mixed.ravel() * cell
    keep = w > 0
    return AtomicMeasure(spatial_grid.nodes()[keep], w[keep], provenance="mixed")


def _relative_values(u: DualPotential, points: np.ndarray) -> np.ndarray:
    """u - V evaluated at points, with V the support function of the body."""
    return u.eval_primal(points) - u.body.support_many(points)


def energy(u: DualPotential, spatial_grid: SpatialGrid | None = None) -> float:
    """Volume-normalized Monge-Ampère energy; zero at the minimal potential.

    1d: E = (1/2 vol) [ int (u-V) dMA(u) + int (u-V) dMA(V) ].
    2d: the middle term integrates against the mixed measure, needing a
    spatial grid for the polarization route.
    """
    if u.is_singular:
        raise RequiresTruncationError("energy needs a finite dual; truncate first")
    body = u.body
    vol = body.volume()
    vzero = DualPotential(body, u.grid, np.zeros(u.grid.shape), provenance="minimal")
    mau = ma_atomic(u)
    mav = ma_atomic(vzero)
    terms = [
        mau.integrate(_relative_values(u, mau.locations)),
        mav.integrate(_relative_values(u, mav.locations)),
    ]
    if u.grid.ndim == 2:
        if spatial_grid is None:
            raise ConfigurationError("2d energy needs a spatial grid for the mixed term")
        mixed = ma_mixed_pair(u, vzero, spatial_grid)
        terms.insert(1, mixed.integrate(_relative_values(u, mixed.locations)))
    n = u.grid.ndim
    return float(sum(terms) / ((n + 1) * vol))


def i_p(u: DualPotential, v: DualPotential, p: float) -> float:
    """int |u - v|^p against MA(u) + MA(v), via the atomic pushforwards."""
    if u.grid != v.grid:
        raise ConfigurationError("i_p needs a common moment grid")
    if p < 1:
        raise ConfigurationError(f"need p >= 1, got {p}")
    total = 0.0
    for m in (ma_atomic(u), ma_atomic(v)):
        du = u.eval_primal(m.locations) - v.eval_primal(m.locations)
        total += m.integrate(np.abs(du) ** p)
    return float(total)
