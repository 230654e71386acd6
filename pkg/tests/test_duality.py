import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ppgeo import (
    Body,
    DualPotential,
    SampledFunction,
    SpatialGrid,
    conjugate_1d,
    conjugate_nd,
    convexify,
    default_class_body,
    moment_grid,
    to_dual,
    to_primal,
)
from ppgeo.corpus import random_dual
from ppgeo.duality import convexify_moment_values, lower_hull_indices

BODY = default_class_body(1).p_body
GRID = moment_grid(BODY, 256)
SPATIAL = SpatialGrid((-4.0,), (5.0,), (512,))


def _convex_values(x, slopes, anchor=0.0):
    """max of affine pieces through a common envelope; always convex."""
    return np.max(slopes[None, :] * (x[:, None]) - anchor * slopes[None, :] ** 2, axis=1)


def test_conjugate_of_quadratic_is_quadratic():
    x = np.linspace(-6, 6, 1201)
    q = np.linspace(-3, 3, 601)
    star = conjugate_1d(x, 0.5 * x**2, q)
    assert np.allclose(star, 0.5 * q**2, atol=1e-4)


def test_conjugate_brute_oracle_agrees():
    x = np.linspace(-2, 3, 301)
    rng = np.random.default_rng(0)
    v = np.abs(x - 0.3) + 0.2 * x**2 + rng.uniform(0, 1)
    q = np.linspace(-1, 2, 97)
    fast = conjugate_1d(x, v, q)
    brute = conjugate_1d(x, v, q, brute=True)
    assert np.allclose(fast, brute, atol=1e-12)


def test_lower_hull_of_convex_data_keeps_everything():
    x = np.linspace(0, 1, 50)
    idx = lower_hull_indices(x, (x - 0.4) ** 2)
    assert len(idx) == 50


def test_infinite_nodes_drop_out():
    x = np.linspace(0, 1, 33)
    v = x.copy()
    v[-1] = np.inf
    star = conjugate_1d(x, v, np.array([0.5]))
    finite = conjugate_1d(x[:-1], v[:-1], np.array([0.5]))
    assert star[0] == finite[0]


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_double_conjugate_is_identity_on_convex(seed):
    u = random_dual(np.random.default_rng(seed), BODY, GRID)
    back = to_dual(to_primal(u, SPATIAL), GRID)
    h = max(max(SPATIAL.spacing), max(GRID.spacing))
    assert np.abs(back.values - u.values).max() <= 2 * h * 1.0


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_order_reversal(seed):
    rng = np.random.default_rng(seed)
    u = random_dual(rng, BODY, GRID)
    # v = u + nonnegative offset, so primal(v) <= primal(u) and v* >= u*
    v = DualPotential(BODY, GRID, u.values + rng.uniform(0.0, 1.0), "shifted")
    pu = to_primal(u, SPATIAL).values
    pv = to_primal(v, SPATIAL).values
    assert (pv <= pu + 1e-12).all()


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_min_max_exchange(seed):
    rng = np.random.default_rng(seed)
    u, v = random_dual(rng, BODY, GRID), random_dual(rng, BODY, GRID)
    # conjugate of the pointwise max of duals = min of primals, convexified
    roof = DualPotential(BODY, GRID, np.maximum(u.values, v.values), "roof")
    proof = to_primal(roof, SPATIAL).values
    pmin = np.minimum(to_primal(u, SPATIAL).values, to_primal(v, SPATIAL).values)
    assert (proof <= pmin + 1e-9).all()
    hull = convexify(SampledFunction(SPATIAL, pmin), body=BODY).values
    # slope quantization tilts the reconstruction by O(h_m * |x|)
    tol = 3 * max(GRID.spacing) * float(np.abs(SPATIAL.axes()[0]).max())
    assert np.abs(proof - hull).max() <= tol


def test_conjugate_nd_separable_quadratic():
    axes = [np.linspace(-3, 3, 301), np.linspace(-3, 3, 301)]
    X, Y = np.meshgrid(*axes, indexing="ij")
    vals = 0.5 * (X**2 + Y**2)
    q = [np.linspace(-1, 1, 41), np.linspace(-1, 1, 41)]
    star = conjugate_nd(vals, axes, q)
    QX, QY = np.meshgrid(*q, indexing="ij")
    assert np.allclose(star, 0.5 * (QX**2 + QY**2), atol=1e-3)


def test_2d_double_conjugate_of_affine():
    body = default_class_body(2).p_body
    grid = moment_grid(body, 32)
    ax = grid.axes()
    P1, P2 = np.meshgrid(ax[0], ax[1], indexing="ij")
    u = DualPotential(body, grid, 0.7 * P1 - 0.3 * P2, "affine")
    sp = SpatialGrid((-3.0, -3.0), (3.0, 3.0), (96, 96))
    back = to_dual(to_primal(u, sp), grid)
    h = max(max(sp.spacing), max(grid.spacing))
    assert np.abs(back.values - u.values)[grid.mask].max() <= 2 * h * 2**0.5


def test_eval_primal_matches_to_primal():
    u = random_dual(np.random.default_rng(11), BODY, GRID)
    pts = SPATIAL.nodes()
    direct = u.eval_primal(pts)
    via_grid = to_primal(u, SPATIAL).values
    assert np.allclose(direct, via_grid, atol=1e-12)


def test_convexify_moment_values_idempotent_on_convex():
    u = random_dual(np.random.default_rng(3), BODY, GRID)
    out = convexify_moment_values(GRID, u.values)
    assert np.allclose(out, u.values, atol=1e-10)


def test_dual_potential_convexity_guard():
    vals = GRID.axes()[0] ** 2
    vals[40] += 1.0  # a spike breaks convexity
    u = DualPotential(BODY, GRID, vals, "broken")
    assert not u.check_convex()
