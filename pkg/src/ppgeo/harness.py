"""Theorem-level verification suites with measured slacks.

Each suite checks one statement of the metric geometry on a deterministic
corpus and reports the worst slack against a pinned tolerance.  Tolerances
come in three classes: identity (1e-9 relative, dual-route exact),
quadrature (max(1%, 5h)) and convergence (2% at the finest schedule entry).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .bodies import ClassBody, EpsilonFamily, default_class_body, epsilon_family
from .corpus import dual_from_form, random_dual_pairs
from .duality import DualPotential, convexify_moment_values, to_primal
from .envelopes import envelope, multi_rooftop, rooftop
from .geodesics import geodesic
from .grids import MomentGrid, SampledFunction, SpatialGrid, moment_grid
from .measures import i_p, ma_density
from .metric import dp_dual_oracle, dp_endpoint, dp_limit, truncate_dual

IDENTITY_TOL = 1e-9
CONVERGENCE_TOL = 0.02


def quadrature_tol(h: float) -> float:
    return max(0.01, 5.0 * h)


@dataclass
class TheoremReport:
    suite: str
    description: str
    corpus: str
    slacks: list = field(default_factory=list)
    tolerance: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def worst_slack(self) -> float:
        return max(self.slacks) if self.slacks else 0.0

    @property
    def verdict(self) -> str:
        return "pass" if self.worst_slack <= self.tolerance else "fail"

    def to_json(self) -> str:
        return json.dumps(
            {
                "format_version": 1,
                "suite": self.suite,
                "description": self.description,
                "corpus": self.corpus,
                "slacks": self.slacks,
                "worst_slack": self.worst_slack,
                "tolerance": self.tolerance,
                "verdict": self.verdict,
                "details": self.details,
            },
            indent=2,
            sort_keys=True,
        )

    def to_text(self) -> str:
        return (
            f"[{self.verdict.upper():4s}] {self.suite}: worst slack "
            f"{self.worst_slack:.3e} vs tolerance {self.tolerance:.3e} "
            f"({self.description}; corpus: {self.corpus})"
        )


@dataclass(frozen=True)
class Lab:
    """Shared fixtures for the suites: bodies, grids, seeded corpus."""

    klass: ClassBody
    grid: MomentGrid
    spatial: SpatialGrid
    family: EpsilonFamily
    seed: int
    pairs: tuple

    @property
    def h(self) -> float:
        return max(self.grid.spacing)


def make_lab(ndim: int = 1, cells: int = 1024, spatial_cells: int = 2048,
             seed: int = 20240, n_pairs: int = 20) -> Lab:
    klass = default_class_body(ndim)
    grid = moment_grid(klass.p_body, cells)
    if ndim == 1:
        spatial = SpatialGrid((-4.0,), (5.0,), (spatial_cells,))
    else:
        spatial = SpatialGrid((-4.0, -4.0), (5.0, 5.0), (spatial_cells, spatial_cells))
    family = epsilon_family(klass, cells)
    pairs = tuple(random_dual_pairs(seed, n_pairs, klass.p_body, grid))
    return Lab(klass, grid, spatial, family, seed, pairs)


def _primal_obstacle(u: DualPotential, spatial: SpatialGrid) -> SampledFunction:
    primal = to_primal(u, spatial)
    return SampledFunction(spatial, primal.values, provenance=u.provenance)


def check_pythagorean(lab: Lab, p: float, eps_route_pairs: int = 0) -> TheoremReport:
    """d_p^p(u,v) = d_p^p(u,P(u,v)) + d_p^p(v,P(u,v)).

    Exact on dual cells (max(a,b)-a and max(a,b)-b partition |a-b|), hence
    identity tolerance; optionally re-verified through the epsilon limit.
    """
    slacks = []
    for u, v in lab.pairs:
        roof = rooftop(u, v)
        lhs = dp_endpoint(u, v, p) ** p
        rhs = dp_endpoint(u, roof, p) ** p + dp_endpoint(v, roof, p) ** p
        slacks.append(abs(lhs - rhs) / max(1.0, abs(lhs)))
    details = {}
    if eps_route_pairs:
        eps_errors = []
        for u, v in lab.pairs[:eps_route_pairs]:
            fu = _primal_obstacle(u, lab.spatial)
            fv = _primal_obstacle(v, lab.spatial)
            fmin = SampledFunction(lab.spatial, np.minimum(fu.values, fv.values))
            lhs = dp_limit(fu, fv, lab.family, p).value ** p
            rhs = (
                dp_limit(fu, fmin, lab.family, p).value ** p
                + dp_limit(fv, fmin, lab.family, p).value ** p
            )
            eps_errors.append(abs(lhs - rhs) / max(abs(lhs), 1e-12))
        details["epsilon_route_errors"] = eps_errors
        details["epsilon_route_tolerance"] = CONVERGENCE_TOL
        details["epsilon_route_pass"] = max(eps_errors) <= CONVERGENCE_TOL
    report = TheoremReport(
        suite="pythagorean",
        description="squared-distance partition at the rooftop",
        corpus=f"{len(lab.pairs)} seeded pairs, p={p}",
        slacks=slacks,
        tolerance=IDENTITY_TOL,
        details=details,
    )
    return report


def check_max_inequality(lab: Lab, p: float) -> TheoremReport:
    """d_p(u, max(u,v)) >= d_p(v, P(u,v)), plus the max-form inequality."""
    slacks = []
    remark_slacks = []
    for u, v in lab.pairs:
        roof = rooftop(u, v)
        # max(u, v) in primal has dual = convexified pointwise-min of duals
        vmax_vals = convexify_moment_values(lab.grid, np.minimum(u.values, v.values))
        vmax = DualPotential(u.body, lab.grid, vmax_vals, provenance="max")
        lhs = dp_endpoint(u, vmax, p)
        rhs = dp_endpoint(v, roof, p)
        slacks.append(max(0.0, rhs - lhs) / max(1.0, rhs))
        duv = dp_endpoint(u, v, p) ** p
        dsum = dp_endpoint(u, vmax, p) ** p + dp_endpoint(v, vmax, p) ** p
        remark_slacks.append(max(0.0, duv - dsum) / max(1.0, duv))
    return TheoremReport(
        suite="max_inequality",
        description="distance to the max dominates distance to the rooftop",
        corpus=f"{len(lab.pairs)} seeded pairs, p={p}",
        slacks=slacks + remark_slacks,
        tolerance=quadrature_tol(lab.h),
        details={"remark_worst": max(remark_slacks)},
    )


def check_geodesic_metric(lab: Lab, p: float, n_t: int = 5) -> TheoremReport:
    """d_p(u_t, u_s) = |t - s| d_p(u0, u1) along the geodesic."""
    ts = np.linspace(0.0, 1.0, n_t)
    slacks = []
    for u, v in lab.pairs:
        curve = geodesic(u, v)
        base = dp_endpoint(u, v, p)
        for t in ts:
            for s in ts:
                d = dp_endpoint(curve.potential_at(t), curve.potential_at(s), p)
                slacks.append(abs(d - abs(t - s) * base) / max(base, 1e-15))
    return TheoremReport(
        suite="geodesic_metric",
        description="constant-speed property of the dual-affine geodesic",
        corpus=f"{len(lab.pairs)} pairs x {n_t}x{n_t} (t,s) grid, p={p}",
        slacks=slacks,
        tolerance=1e-6,
    )


def cauchy_sequence(lab: Lab, kind: str = "monotone", n: int = 8) -> list[DualPotential]:
    """Synthetic sequence with d_p(u_j, u_{j+1}) <= 2^-j, by dual interpolation."""
    g = dual_from_form("dual_ramp", lab.klass.p_body, lab.grid)
    if kind == "monotone":
        return [
            DualPotential(g.body, g.grid, (1.0 - 2.0**-j) * g.values, "cauchy")
            for j in range(n)
        ]
    p_nodes = lab.grid.axes()[0]
    wiggles = [0.5 * np.abs(p_nodes - 0.3), 0.5 * np.abs(p_nodes - 0.7)]
    return [
        DualPotential(g.body, g.grid, g.values + 2.0**-j * wiggles[j % 2], "cauchy")
        for j in range(n)
    ]


def check_completeness(lab: Lab, p: float, kind: str = "monotone",
                       j_max: int = 6, k_max: int = 10) -> TheoremReport:
    """Rooftops along a Cauchy sequence contract: d_p(u_j, v_{j,k}) <= 2^{1-j}."""
    seq = cauchy_sequence(lab, kind, n=j_max + k_max + 1)
    budget_ok = all(
        dp_endpoint(seq[j], seq[j + 1], p) <= 2.0**-j + 1e-12
        for j in range(len(seq) - 1)
    )
    slacks = []
    monotone_violation = 0.0
    limit_distances = []
    for j in range(j_max + 1):
        prev = None
        for k in range(1, k_max + 1):
            v_jk = multi_rooftop(seq[j : j + k + 1])
            d = dp_endpoint(seq[j], v_jk, p)
            slacks.append(max(0.0, d - 2.0 ** (1 - j) * 1.0) / 2.0 ** (1 - j))
            if prev is not None:
                # v_{j,k} decreases in k, so its dual must not decrease
                monotone_violation = max(
                    monotone_violation, float((prev - v_jk.values).max())
                )
            prev = v_jk.values
        limit_distances.append(dp_endpoint(seq[j], multi_rooftop(seq[j:]), p))
    return TheoremReport(
        suite="completeness",
        description="rooftop construction along a synthetic Cauchy sequence",
        corpus=f"{kind} sequence, j<=%d, k<=%d, p=%s" % (j_max, k_max, p),
        slacks=slacks,
        tolerance=0.05,
        details={
            "budget_ok": budget_ok,
            "rooftop_monotone_violation": monotone_violation,
            "limit_distances": limit_distances,
            "limit_decreasing": all(
                b <= a + 1e-12 for a, b in zip(limit_distances, limit_distances[1:])
            ),
        },
    )


def check_monotone_continuity(lab: Lab, p: float,
                              caps=(2.0, 4.0, 8.0, 16.0)) -> TheoremReport:
    """u_j decreasing to u forces d_p(u_j, u) -> 0; I_p^{1/p} decays too."""
    barrier = dual_from_form("dual_log_barrier", lab.klass.p_body, lab.grid)
    gaps = [dp_endpoint(truncate_dual(barrier, m), barrier, p) for m in caps]
    ip_gaps = [
        i_p(truncate_dual(barrier, m), barrier, p) ** (1.0 / p) for m in caps
    ]
    shift_gaps = [
        dp_endpoint(barrier.shift(1.0 / j), barrier, p) for j in (1, 2, 4, 8)
    ]
    decreasing = all(b <= a + 1e-12 for a, b in zip(gaps, gaps[1:]))
    shift_exact = [abs(g - 1.0 / j) for g, j in zip(shift_gaps, (1, 2, 4, 8))]
    slacks = [gaps[-1], 0.0 if decreasing else 1.0, max(shift_exact)]
    return TheoremReport(
        suite="monotone_continuity",
        description="distance continuity along decreasing approximants",
        corpus=f"log-barrier caps {caps} and constant shifts, p={p}",
        slacks=slacks,
        tolerance=CONVERGENCE_TOL,
        details={
            "cap_gaps": gaps,
            "ip_gaps": ip_gaps,
            "ip_decreasing": all(b <= a + 1e-12 for a, b in zip(ip_gaps, ip_gaps[1:])),
            "shift_gaps": shift_gaps,
        },
    )


def check_epsilon_lemmas(lab: Lab, p: float,
                         obstacles: tuple[str, str] = ("quadratic", "quadratic_bump"),
                         velocity_t: float = 1e-3) -> TheoremReport:
    """Convergence of the approximation scheme as the class opens up.

    (a) I_p in the perturbed classes tends to the limit value;
    (b) envelope densities are pointwise nondecreasing in eps and bounded;
    (c) contact-masked velocity integrands converge in weighted L1.
    """
    from .corpus import CLOSED_FORMS, sample_closed_form

    f_vals = [sample_closed_form(o, lab.spatial) for o in obstacles]
    bounds = [CLOSED_FORMS[o].hessian_bound for o in obstacles]
    fs = [SampledFunction(lab.spatial, v, o) for v, o in zip(f_vals, obstacles)]

    # limiting-class quantities
    e0 = envelope(fs[0], lab.klass.p_body, lab.grid, hessian_bound=bounds[0])
    e1 = envelope(fs[1], lab.klass.p_body, lab.grid, hessian_bound=bounds[1])
    ip_limit = i_p(e0.dual, e1.dual, p)
    rho_limit = ma_density(e0.primal).density
    vel_limit = np.abs(
        geodesic(e0.dual, e1.dual).primal_at(velocity_t, lab.spatial)
        - e0.primal.values
    ) / velocity_t
    mask_limit = e0.contact_mask

    cell = float(np.prod(lab.spatial.spacing))
    ip_table, monotone_fracs, sup_bounds, vel_l1 = [], [], [], []
    rho_prev = None
    h = max(lab.spatial.spacing)
    for eps, body, grid in zip(lab.family.schedule, lab.family.bodies, lab.family.grids):
        a0 = envelope(fs[0], body, grid, hessian_bound=bounds[0])
        a1 = envelope(fs[1], body, grid, hessian_bound=bounds[1])
        ip_table.append(i_p(a0.dual, a1.dual, p))
        rho = ma_density(a0.primal).density
        if rho_prev is not None:
            # contact sets (and densities) shrink along the decreasing schedule
            ok = rho <= rho_prev + 5.0 * h
            monotone_fracs.append(float(ok.mean()))
        rho_prev = rho
        sup_bounds.append(float(rho.max()))
        vel = np.abs(
            geodesic(a0.dual, a1.dual).primal_at(velocity_t, lab.spatial)
            - a0.primal.values
        ) / velocity_t
        vel_l1.append(
            float(
                np.sum(
                    np.abs(
                        a0.contact_mask * vel**p * rho
                        - mask_limit * vel_limit**p * rho_limit
                    )
                )
                * cell
            )
        )
    ip_gap = abs(ip_table[-1] - ip_limit) / max(abs(ip_limit), 1e-12)
    n = lab.klass.ndim
    density_bound = max(bounds) ** n * 1.01
    vel_scale = max(vel_l1[0], 1e-12)
    slacks = [
        ip_gap,
        # >=99% of nodes must satisfy the slack-adjusted monotonicity
        max(0.0, 0.99 - min(monotone_fracs)) if monotone_fracs else 0.0,
        max(0.0, max(sup_bounds) / density_bound - 1.0),
        # the masked velocity integrand must not drift away from its limit
        max(0.0, vel_l1[-1] / vel_scale - 1.0) * CONVERGENCE_TOL,
    ]
    return TheoremReport(
        suite="epsilon_lemmas",
        description="density/velocity/I_p convergence of the class opening",
        corpus=f"obstacles {obstacles}, p={p}, schedule of {len(lab.family.schedule)}",
        slacks=slacks,
        tolerance=CONVERGENCE_TOL,
        details={
            "ip_table": ip_table,
            "ip_limit": ip_limit,
            "ip_final_gap": ip_gap,
            "density_monotone_fractions": monotone_fracs,
            "density_sup_per_eps": sup_bounds,
            "density_bound": density_bound,
            "velocity_l1_gaps": vel_l1,
        },
    )


SUITES = {
    "pythagorean": lambda lab, p: check_pythagorean(lab, p, eps_route_pairs=0),
    "max_inequality": check_max_inequality,
    "geodesic_metric": check_geodesic_metric,
    "completeness": check_completeness,
    "monotone_continuity": check_monotone_continuity,
    "epsilon_lemmas": check_epsilon_lemmas,
}

# statements covered by each suite, for the coverage table in reports
COVERAGE = {
    "pythagorean": "squared-distance partition at the rooftop",
    "max_inequality": "max/rooftop distance inequalities",
    "geodesic_metric": "constant-speed geodesic identity",
    "completeness": "Cauchy sequences converge via rooftop limits",
    "monotone_continuity": "continuity along decreasing approximants",
    "epsilon_lemmas": "convergence of the class-opening approximation",
}


def run_suites(names: list[str], lab: Lab | None = None, p: float = 2.0,
               max_workers: int = 1) -> list[TheoremReport]:
    """Run the selected suites; reports merged in declared order."""
    lab = lab if lab is not None else make_lab()
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise KeyError(f"unknown suites: {unknown}")
    if max_workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            futures = [pool.submit(SUITES[n], lab, p) for n in names]
            return [f.result() for f in futures]
    return [SUITES[n](lab, p) for n in names]
