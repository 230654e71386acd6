import json
import math

import numpy as np
import pytest

from ppgeo import (
    SampledFunction,
    SpatialGrid,
    d1_energy,
    default_class_body,
    dp_dual_oracle,
    dp_endpoint,
    dp_limit,
    dp_singular,
    dual_from_form,
    epsilon_family,
    ma_density,
    ma_solve_1d,
    moment_grid,
    pair_from_catalog,
    to_primal,
    truncate_dual,
)
from ppgeo.corpus import random_dual_pairs, sample_closed_form
from ppgeo.metric import (
    CSV_HEADER,
    affine_invariance_check,
    sup_bound_check,
    sup_relative,
    translate_dual,
)

KLASS = default_class_body(1)
GRID = moment_grid(KLASS.p_body, 1024)
SPATIAL = SpatialGrid((-4.0,), (5.0,), (2048,))
FAMILY = epsilon_family(KLASS, 1024)


def test_ramp_pair_hand_values():
    u, v = pair_from_catalog("ramp_pair", KLASS.p_body, GRID)
    assert dp_endpoint(u, v, 1.0) == pytest.approx(0.5, abs=1e-12)
    assert dp_endpoint(u, v, 2.0) == pytest.approx(3 ** -0.5, rel=1e-5)


def test_crossing_pair_hand_values():
    u, v = pair_from_catalog("crossing_pair", KLASS.p_body, GRID)
    assert dp_endpoint(u, v, 1.0) == pytest.approx(0.5, abs=1e-12)
    assert dp_endpoint(u, v, 2.0) == pytest.approx(3 ** -0.5, rel=1e-5)


def test_metric_axioms_on_corpus():
    pairs = random_dual_pairs(23, 5, KLASS.p_body, GRID)
    for u, v in pairs:
        assert dp_endpoint(u, u, 2.0) == 0.0
        assert dp_endpoint(u, v, 2.0) == dp_endpoint(v, u, 2.0)
    (u, v), (w, _) = pairs[0], pairs[1]
    assert dp_endpoint(u, v, 2.0) <= (
        dp_endpoint(u, w, 2.0) + dp_endpoint(w, v, 2.0) + 1e-12
    )


def test_holder_ordering_in_p():
    u, v = random_dual_pairs(5, 1, KLASS.p_body, GRID)[0]
    d1, d2, d3 = (dp_endpoint(u, v, p) for p in (1.0, 2.0, 3.0))
    assert d1 <= d2 + 1e-12 <= d3 + 1e-12


def test_oracle_agrees_with_endpoint():
    for u, v in random_dual_pairs(31, 5, KLASS.p_body, GRID):
        for p in (1.0, 2.0, 3.0):
            a = dp_endpoint(u, v, p)
            b = dp_dual_oracle(u, v, p)
            assert a == pytest.approx(b, rel=1e-12, abs=1e-300)


def test_d1_energy_route():
    u, v = pair_from_catalog("ramp_pair", KLASS.p_body, GRID)
    assert d1_energy(u, v, SPATIAL) == pytest.approx(0.5, rel=1e-2)
    for u, v in random_dual_pairs(17, 5, KLASS.p_body, GRID):
        assert d1_energy(u, v, SPATIAL) == pytest.approx(
            dp_endpoint(u, v, 1.0), rel=1e-2
        )


def test_limit_route_matches_endpoint():
    f = SampledFunction(SPATIAL, sample_closed_form("quadratic", SPATIAL), "quadratic")
    g = SampledFunction(SPATIAL, sample_closed_form("soft_ramp", SPATIAL), "soft_ramp")
    rep = dp_limit(f, g, FAMILY, 2.0, hessian_bounds=(1.0, 1.0))
    assert rep.route == "epsilon_limit"
    assert len(rep.table) == 7
    dev = rep.cross_route["deviation_endpoint"]
    assert dev <= max(0.02 * rep.value, 5 * max(SPATIAL.spacing))


def test_limit_route_ramp_pair_value():
    # primal obstacles of the ramp pair: 0-dual and p-dual potentials
    u, v = pair_from_catalog("ramp_pair", KLASS.p_body, GRID)
    fu = SampledFunction(SPATIAL, to_primal(u, SPATIAL).values, "u")
    fv = SampledFunction(SPATIAL, to_primal(v, SPATIAL).values, "v")
    rep = dp_limit(fu, fv, FAMILY, 1.0)
    assert rep.value == pytest.approx(0.5, rel=0.02)


def test_singular_limits():
    u = dual_from_form("dual_zero", KLASS.p_body, GRID)
    v = dual_from_form("dual_log_barrier", KLASS.p_body, GRID)
    r1 = dp_singular(u, v, 1.0)
    r2 = dp_singular(u, v, 2.0)
    assert r1.value == pytest.approx(1.0, rel=0.02)
    assert r2.value == pytest.approx(math.sqrt(2.0), rel=0.02)
    assert r1.converged and r2.converged
    # increments dominated by the I_p Cauchy bounds
    for inc, bound in zip(r1.cross_route["increments"], r1.cross_route["cauchy_bounds"]):
        assert inc <= bound + 1e-12


def test_truncation_is_monotone():
    v = dual_from_form("dual_log_barrier", KLASS.p_body, GRID)
    t4 = truncate_dual(v, 4.0)
    t8 = truncate_dual(v, 8.0)
    finite = np.isfinite(v.values)
    assert (t4.values <= t8.values + 1e-12).all()
    assert (t8.values[finite] <= v.values[finite] + 1e-12).all()


def test_ma_solve_recovers_quadratic_potential():
    u = dual_from_form("dual_quadratic", KLASS.p_body, GRID)
    target = ma_density(to_primal(u, SPATIAL))
    dv = SampledFunction(SPATIAL, target.density, "target")
    _, primal = ma_solve_1d(dv, KLASS.p_body)
    ref = to_primal(u, SPATIAL).values
    ref = ref - (ref - KLASS.p_body.support_many(SPATIAL.nodes())).max()
    assert np.abs(primal.values - ref).max() <= 0.02


def test_sup_normalization_after_solve():
    u = dual_from_form("dual_quadratic", KLASS.p_body, GRID)
    dv = SampledFunction(SPATIAL, ma_density(to_primal(u, SPATIAL)).density, "t")
    dual, _ = ma_solve_1d(dv, KLASS.p_body)
    assert sup_relative(dual, SPATIAL) == pytest.approx(0.0, abs=1e-9)


def test_translate_dual_is_exact_isometry():
    u, v = random_dual_pairs(3, 1, KLASS.p_body, GRID)[0]
    report = affine_invariance_check(u, v, c=0.0, b=0.37, p=2.0)
    assert report["relative_deviation"] <= 1e-12


def test_translate_dual_shifts_body():
    u = dual_from_form("dual_quadratic", KLASS.p_body, GRID)
    t = translate_dual(u, c=0.25, b=0.0)
    coords = sorted(v[0] for v in t.body.vertices)
    assert coords == [0.25, 1.25]


def test_sup_bound_from_distance():
    pool = [w for pr in random_dual_pairs(9, 8, KLASS.p_body, GRID) for w in pr]
    phi = dual_from_form("dual_zero", KLASS.p_body, GRID)
    report = sup_bound_check(pool[:-4], 1.0, phi, SPATIAL, holdout=pool[-4:])
    assert report["holdout_satisfied"]
    assert np.isfinite(report["C1"]) and np.isfinite(report["C2"])


def test_report_serialization():
    f = SampledFunction(SPATIAL, sample_closed_form("quadratic", SPATIAL), "quadratic")
    g = SampledFunction(SPATIAL, sample_closed_form("soft_ramp", SPATIAL), "soft_ramp")
    rep = dp_limit(f, g, FAMILY, 2.0, hessian_bounds=(1.0, 1.0))
    payload = json.loads(rep.to_json())
    assert payload["format_version"] == 1
    assert len(payload["table"]) == 7
    csv_text = rep.to_csv()
    assert csv_text.splitlines()[0] == ",".join(CSV_HEADER)
    assert len(csv_text.splitlines()) == 8
