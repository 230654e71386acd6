import numpy as np
import pytest

from ppgeo import (
    Body,
    SampledFunction,
    SpatialGrid,
    default_class_body,
    dual_from_form,
    envelope,
    measure_identity_residual,
    minkowski_sum,
    moment_grid,
    multi_rooftop,
    rooftop,
)
from ppgeo.corpus import sample_closed_form
from ppgeo.envelopes import envelope_density, estimate_hessian_bound

KLASS = default_class_body(1)
GRID = moment_grid(KLASS.p_body, 1024)
SPATIAL = SpatialGrid((-4.0,), (5.0,), (2048,))


def obstacle(name):
    return SampledFunction(SPATIAL, sample_closed_form(name, SPATIAL), name)


def test_admissible_obstacle_is_its_own_envelope():
    f = obstacle("support_[0,1]")
    rec = envelope(f, KLASS.p_body, GRID)
    assert np.abs(rec.primal.values - f.values).max() <= 1e-9
    assert rec.contact_mask.all()


def test_envelope_of_quadratic_closed_form():
    f = obstacle("quadratic")
    rec = envelope(f, KLASS.p_body, GRID, hessian_bound=1.0)
    x = SPATIAL.axes()[0]
    exact = np.where(x < 0, 0.0, np.where(x < 1, 0.5 * x * x, x - 0.5))
    assert np.abs(rec.primal.values - exact).max() <= 1e-5


def test_contact_set_of_quadratic_over_perturbed_body():
    eps = 0.25
    body = minkowski_sum(KLASS.p_body, KLASS.q_body, eps)
    grid = moment_grid(body, 1024)
    f = obstacle("quadratic")
    rec = envelope(f, body, grid, hessian_bound=1.0)
    x = SPATIAL.axes()[0]
    h = max(SPATIAL.spacing)
    contact_x = x[rec.contact_mask]
    # contact where f' = x lands in [-0.25, 1.25], up to a cell
    assert abs(contact_x.min() - (-eps)) <= 2 * h
    assert abs(contact_x.max() - (1 + eps)) <= 2 * h


def test_envelope_monotone_in_body():
    f = obstacle("quadratic")
    small = envelope(f, KLASS.p_body, GRID, hessian_bound=1.0)
    big_body = minkowski_sum(KLASS.p_body, KLASS.q_body, 0.5)
    big = envelope(f, big_body, moment_grid(big_body, 1024), hessian_bound=1.0)
    # more admissible slopes lift the envelope
    assert (big.primal.values >= small.primal.values - 1e-9).all()


def test_envelope_below_obstacle():
    f = obstacle("quadratic_bump")
    rec = envelope(f, KLASS.p_body, GRID, hessian_bound=2.8)
    assert (rec.primal.values <= f.values + rec.contact_tol).all()


def test_iterative_envelope_cross_check():
    f = obstacle("quadratic")
    direct = envelope(f, KLASS.p_body, GRID, hessian_bound=1.0)
    iterated = envelope(f, KLASS.p_body, GRID, hessian_bound=1.0, iterative=True)
    assert np.abs(direct.primal.values - iterated.primal.values).max() <= 1e-6


def test_rooftop_is_pointwise_dual_max():
    u = dual_from_form("dual_quadratic", KLASS.p_body, GRID)
    v = dual_from_form("dual_vee", KLASS.p_body, GRID)
    r = rooftop(u, v)
    assert np.array_equal(r.values, np.maximum(u.values, v.values))


def test_rooftop_commutes_with_envelope_of_min():
    u = dual_from_form("dual_quadratic", KLASS.p_body, GRID)
    v = dual_from_form("dual_vee", KLASS.p_body, GRID)
    r = rooftop(u, v)
    fmin = SampledFunction(
        SPATIAL,
        np.minimum(u.eval_primal(SPATIAL.nodes()), v.eval_primal(SPATIAL.nodes())),
        "min",
    )
    rec = envelope(fmin, KLASS.p_body, GRID)
    # slope quantization tilts the reconstruction by O(h_m * |x|)
    tol = 3 * max(GRID.spacing) * float(np.abs(SPATIAL.axes()[0]).max())
    assert np.abs(rec.primal.values - r.eval_primal(SPATIAL.nodes())).max() <= tol


def test_multi_rooftop_associative():
    forms = ["dual_zero", "dual_quadratic", "dual_vee"]
    us = [dual_from_form(f, KLASS.p_body, GRID) for f in forms]
    a = multi_rooftop(us)
    b = rooftop(rooftop(us[0], us[1]), us[2])
    assert np.array_equal(a.values, b.values)


@pytest.mark.parametrize(
    "name,c", [("quadratic", 1.0), ("quadratic_bump", 2.8), ("soft_ramp", 1.0)]
)
def test_measure_identity(name, c):
    f = obstacle(name)
    rec = envelope(f, KLASS.p_body, GRID, hessian_bound=c)
    h = max(SPATIAL.spacing)
    assert measure_identity_residual(rec) <= 10 * h * c
    assert envelope_density(rec).max() <= c * 1.01


def test_hessian_bound_estimate():
    f = obstacle("quadratic")
    assert estimate_hessian_bound(f) == pytest.approx(1.0, rel=1e-6)


def test_contact_never_empty():
    # the discrete envelope attains the obstacle at the conjugacy argmax
    # nodes, so contact survives even a kink placed between nodes and a
    # zero curvature allowance
    x = SPATIAL.axes()[0]
    off = x[100] + 0.4 * (x[101] - x[100])
    f = SampledFunction(SPATIAL, 10.0 * np.abs(x - off) + 3.0, "steep")
    rec = envelope(f, KLASS.p_body, GRID, hessian_bound=0.0)
    assert rec.contact_mask.any()
    assert (rec.primal.values <= f.values + 1e-9).all()
