"""Built-in closed forms, bundled potential pairs, and the seeded generator.

Closed forms are referenced by string id so that experiment configs never
carry parsed arithmetic.  Duals are convex functions of the moment variable
p; primals are convex functions of the spatial variable x.  +inf is returned
only at declared singular loci.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bodies import Body, ClassBody
from .duality import DualPotential, PrimalPotential, convexify_moment_values
from .grids import ConfigurationError, MomentGrid, SpatialGrid

INF = float("inf")


@dataclass(frozen=True)
class ClosedForm:
    kind: str  # "primal" | "dual"
    fn: object  # scalar callable
    note: str
    hessian_bound: float | None = None  # primal obstacles only
    singular: bool = False


def _support_unit(x):
    return max(0.0, x)


CLOSED_FORMS: dict[str, ClosedForm] = {
    "support_[0,1]": ClosedForm("primal", _support_unit, "support function of [0,1]"),
    "shifted_support": ClosedForm(
        "primal", lambda x: max(0.0, x - 1.0), "support function translated by 1"
    ),
    "quadratic": ClosedForm("primal", lambda x: 0.5 * x * x, "x^2/2", hessian_bound=1.0),
    "quadratic_bump": ClosedForm(
        "primal",
        lambda x: 0.5 * x * x + 0.2 * math.cos(3.0 * x),
        "x^2/2 with a cosine ripple",
        hessian_bound=1.0 + 0.2 * 9.0,
    ),
    "soft_ramp": ClosedForm(
        "primal",
        lambda x: 0.5 * (x + math.sqrt(x * x + 0.25)),
        "smoothed positive part, slopes in (0,1)",
        hessian_bound=1.0,
    ),
    "dual_zero": ClosedForm("dual", lambda p: 0.0, "dual of the support function"),
    "dual_ramp": ClosedForm("dual", lambda p: p, "affine dual, all mass at x=1"),
    "dual_crossing": ClosedForm("dual", lambda p: 1.0 - p, "affine dual, all mass at x=-1"),
    "dual_quadratic": ClosedForm("dual", lambda p: 0.5 * p * p, "p^2/2"),
    "dual_log_barrier": ClosedForm(
        "dual",
        lambda p: -math.log(1.0 - p) if p < 1.0 else INF,
        "-log(1-p), +inf at p=1",
        singular=True,
    ),
    "dual_power_cusp": ClosedForm(
        "dual", lambda p: abs(p) ** 1.5, "|p|^{3/2} power cusp"
    ),
    "dual_vee": ClosedForm("dual", lambda p: abs(p - 0.5), "|p - 1/2| kink"),
}


def eval_closed_form(expr_id: str, point) -> float:
    """Evaluate a corpus closed form at a scalar (1d) or pair (2d) point."""
    if expr_id not in CLOSED_FORMS:
        raise ConfigurationError(f"unknown closed form {expr_id!r}")
    form = CLOSED_FORMS[expr_id]
    if np.isscalar(point):
        return float(form.fn(float(point)))
    point = tuple(float(v) for v in np.atleast_1d(point))
    if len(point) == 1:
        return float(form.fn(point[0]))
    return float(form.fn(*point))


def sample_closed_form(expr_id: str, grid) -> np.ndarray:
    """Sample a 1d closed form on every node of a grid."""
    form = CLOSED_FORMS.get(expr_id)
    if form is None:
        raise ConfigurationError(f"unknown closed form {expr_id!r}")
    pts = grid.axes()[0]
    return np.array([form.fn(float(x)) for x in pts])


def dual_from_form(expr_id: str, body: Body, grid: MomentGrid) -> DualPotential:
    form = CLOSED_FORMS.get(expr_id)
    if form is None:
        raise ConfigurationError(f"unknown closed form {expr_id!r}")
    if form.kind != "dual":
        raise ConfigurationError(f"{expr_id!r} is not a dual closed form")
    vals = sample_closed_form(expr_id, grid)
    return DualPotential(body, grid, vals, provenance=expr_id)


def primal_from_form(expr_id: str, grid: SpatialGrid, body: Body | None = None) -> PrimalPotential:
    form = CLOSED_FORMS.get(expr_id)
    if form is None:
        raise ConfigurationError(f"unknown closed form {expr_id!r}")
    if form.kind != "primal":
        raise ConfigurationError(f"{expr_id!r} is not a primal closed form")
    vals = sample_closed_form(expr_id, grid)
    return PrimalPotential(grid, vals, body=body, provenance=expr_id)


# bundled pair catalog: name -> (dual id 0, dual id 1, note)
PAIR_CATALOG: dict[str, tuple[str, str, str]] = {
    "ramp_pair": ("dual_zero", "dual_ramp", "duals 0 and p; d_1 = 1/2"),
    "crossing_pair": ("dual_ramp", "dual_crossing", "duals p and 1-p; d_2 = 3^{-1/2}"),
    "quadratic_pair": ("dual_zero", "dual_quadratic", "duals 0 and p^2/2"),
    "cusp_pair": ("dual_power_cusp", "dual_vee", "power cusp against a kink"),
    "log_barrier_singular": (
        "dual_zero",
        "dual_log_barrier",
        "singular endpoint; d_1 -> 1, d_2 -> sqrt(2)",
    ),
}


def random_dual(rng: np.random.Generator, body: Body, grid: MomentGrid,
                pieces: tuple[int, int] = (3, 8),
                slope_range: tuple[float, float] = (-2.0, 3.0),
                offset_scale: float = 1.0) -> DualPotential:
    """Random convex piecewise-affine dual with a few pieces (1d)."""
    if grid.ndim != 1:
        raise ConfigurationError("random duals are generated on 1d moment grids")
    lo, hi = grid.lo[0], grid.hi[0]
    k = int(rng.integers(pieces[0], pieces[1] + 1))
    knots = np.sort(rng.uniform(lo, hi, size=k - 1))
    slopes = np.sort(rng.uniform(*slope_range, size=k))
    p = grid.axes()[0]
    seg = np.searchsorted(knots, p)
    # integrate the step-slope function from lo
    knot_vals = np.concatenate([[0.0], np.cumsum(slopes[:-1] * np.diff(np.concatenate([[lo], knots])))])
    edges = np.concatenate([[lo], knots])
    vals = knot_vals[seg] + slopes[seg] * (p - edges[seg])
    vals += rng.uniform(-offset_scale, offset_scale)
    return DualPotential(body, grid, vals, provenance="random_piecewise_affine")


def random_dual_pairs(seed: int, count: int, body: Body,
                      grid: MomentGrid) -> list[tuple[DualPotential, DualPotential]]:
    """Deterministic corpus of dual pairs for the verification suites."""
    rng = np.random.default_rng(seed)
    return [
        (random_dual(rng, body, grid), random_dual(rng, body, grid))
        for _ in range(count)
    ]


def pair_from_catalog(name: str, body: Body, grid: MomentGrid) -> tuple[DualPotential, DualPotential]:
    if name not in PAIR_CATALOG:
        raise ConfigurationError(f"unknown bundled pair {name!r}")
    id0, id1, _ = PAIR_CATALOG[name]
    return dual_from_form(id0, body, grid), dual_from_form(id1, body, grid)
