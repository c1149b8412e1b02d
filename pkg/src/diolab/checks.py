"""Named invariant bundles: cross-module identities run as one-shot verdicts.

Each bundle returns {"name", "passed", "details"}; run_check_suite wraps a
bundle list into a machine-readable report.  The acceptance test suite runs
the same bundles, so CLI checks and pytest agree by construction.
"""

from __future__ import annotations

import math

import numpy as np

from .boxset import BoxUnion
from .dimfun import Ball, PowerLaw, ball_transform, invert
from .estimators import uniform_samples
from .geometry import (
    c_geom_constant,
    cover_neighborhood,
    equivalence_scan_points,
    Neighborhood,
    relevant_shifts,
    ResonantPlane,
)
from .problems import LinearFormsProblem, PsiPowerLaw
from .series import (
    critical_exponent_analytic,
    critical_exponent_numeric,
    hausdorff_sum,
    schmidt_sum,
)
from .slicing import INFLATE, DEFLATE, SliceSpec, slice_balls, slicing_inequality_check, transform_family
from .problems import restrict_to_zi

EXPONENT_GRID = [(n, m, tau)
                 for n, m in [(2, 1), (1, 2), (2, 2)]
                 for tau in (1.5, 2.0, 3.0)
                 if tau > n / m]


def check_collapse(H: int = 256) -> dict:
    """hausdorff_sum with f = r^(nm) equals schmidt_sum bitwise."""
    failures = []
    for n, m in [(2, 1), (1, 2), (2, 2)]:
        for tau in (1.5, 2.0, 3.0):
            p = LinearFormsProblem(n, m, PsiPowerLaw(tau))
            a = schmidt_sum(p, H).sums
            b = hausdorff_sum(p, PowerLaw(float(n * m)), H).sums
            if not np.array_equal(a, b):
                failures.append((n, m, tau))
    return {"name": "collapse", "passed": not failures,
            "details": {"H": H, "failures": failures}}


def check_exponents(tol: float = 0.02, H_max: int = 1 << 14) -> dict:
    """Analytic closed form vs numeric bisection across the (n, m, tau) grid."""
    rows = []
    passed = True
    for n, m, tau in EXPONENT_GRID:
        p = LinearFormsProblem(n, m, PsiPowerLaw(tau))
        exact = critical_exponent_analytic(p)
        lo = (n - 1) * m + 0.05 * m
        hi = n * m - 0.05 * m
        numeric = critical_exponent_numeric(p, (lo, hi), tol=tol, H_max=H_max)
        err = abs(numeric.s_star - exact.s_star)
        ok = err <= tol and math.isfinite(numeric.s_star)
        passed &= ok
        rows.append({"n": n, "m": m, "tau": tau, "analytic": exact.s_star,
                     "numeric": numeric.s_star, "error": err, "ok": ok})
    return {"name": "exponents", "passed": passed, "details": {"grid": rows, "tol": tol}}


def check_equivalence(points: int = 1000, H: int = 50, seed: int = 11) -> dict:
    """Torus membership vs plane-neighborhood membership through relevant_shifts."""
    rows = []
    passed = True
    for n, m, tau in EXPONENT_GRID:
        p = LinearFormsProblem(n, m, PsiPowerLaw(tau))
        pts = uniform_samples(seed, points, n * m)
        codes = equivalence_scan_points(p, pts, H)
        bad = int(np.count_nonzero(codes))
        passed &= bad == 0
        rows.append({"n": n, "m": m, "tau": tau, "violations": bad})
    return {"name": "equivalence", "passed": passed,
            "details": {"points": points, "H": H, "grid": rows}}


def check_covering(h_max: int = 30) -> dict:
    """Cover counts <= C_geom (|a|/psi)^((n-1)m) and shift counts <= C_shift |a|^m,
    with one frozen constant per (n, m), over every a up to the height cap."""
    rows = []
    passed = True
    for n, m, tau in [(2, 1, 2.0), (2, 2, 1.5)]:
        p = LinearFormsProblem(n, m, PsiPowerLaw(tau))
        cg = c_geom_constant(n, m)
        worst_cover = 0.0
        worst_shift = 0.0
        count_checked = 0
        for h in range(1, h_max + 1):
            from ._kernels import shell_vectors

            for a in shell_vectors(n, h):
                a = tuple(int(v) for v in a)
                psi = p.psi_value(a)
                delta = psi / h
                plane = ResonantPlane(a, (0,) * m)
                report = cover_neighborhood(Neighborhood(plane, delta), delta)
                ratio_pow = report.ratio ** report.exponent
                worst_cover = max(worst_cover, report.count / (cg * ratio_pow))
                shifts = relevant_shifts(a, p.b, psi / math.sqrt(sum(x * x for x in a)))
                worst_shift = max(worst_shift,
                                  shifts.count / (shifts.c_shift * float(h) ** m))
                count_checked += 1
                if worst_cover > 1.0 or worst_shift > 1.0:
                    passed = False
        rows.append({"n": n, "m": m, "tau": tau, "a_checked": count_checked,
                     "worst_cover_ratio": worst_cover, "worst_shift_ratio": worst_shift,
                     "c_geom": cg})
    return {"name": "covering", "passed": passed, "details": {"grid": rows}}


def check_ball_calculus(seed: int = 5) -> dict:
    """B^m = B bitwise; inflate/deflate round trip within 1e-12 relative;
    the psi~ radius identity exact per ball (m = 1 multiplicative form)."""
    rng = np.random.default_rng(seed)
    issues = []

    for m in (1, 2, 3):
        for _ in range(200):
            r = float(rng.uniform(1e-9, 1.0))
            ball = Ball((0.0,) * m, r)
            if ball_transform(ball, PowerLaw(float(m)), m) is not ball:
                issues.append(("fixed-point", m, r))

    for s in (0.5, 0.75, 1.3):
        g = PowerLaw(s)
        radii = rng.uniform(1e-8, 0.5, size=500)
        for m in (1, 2):
            fwd = np.array([g.eval(r) ** (1.0 / m) for r in radii])
            back = np.array([invert(g, rr ** m) for rr in fwd])
            rel = np.abs(back - radii) / radii
            if rel.max() > 1e-12:
                issues.append(("round-trip", s, m, float(rel.max())))

    prob = restrict_to_zi(LinearFormsProblem(2, 1, PsiPowerLaw(3.0)), 1)
    fam = slice_balls(SliceSpec(prob, ((0.381966,),)), 1, 8)
    g = PowerLaw(0.75)
    inflated = transform_family(fam, g, 1, INFLATE)
    for (a, _), radius, tilde in zip(inflated.tags, inflated.radii, inflated.psi_tilde):
        h = max(abs(x) for x in a)
        if radius != g.eval(prob.psi_value(a) / h):
            issues.append(("radius-route", a))
        if tilde != radius * h:  # psi~^m == g(psi/|a|) |a|^m for m = 1, exactly
            issues.append(("psi-tilde", a))
    deflated = transform_family(inflated, g, 1, DEFLATE)
    rel = np.abs(deflated.radii - fam.radii) / fam.radii
    if rel.max() > 1e-12:
        issues.append(("family-round-trip", float(rel.max())))

    return {"name": "ball-calculus", "passed": not issues,
            "details": {"issues": issues[:20]}}


def slicing_corpus() -> list:
    """Box unions with their (f, l) combinations; >= 12 unions across R^2, R^3."""
    r2 = [
        BoxUnion((((0.0, 0.0), (1.0, 1.0)),)),
        BoxUnion((((0.0, 0.0), (1.0, 0.5)),)),
        BoxUnion((((0.0, 0.0), (1.0, 0.25)),)),
        BoxUnion((((0.0, 0.0), (0.5, 1.0)), ((0.5, 0.0), (1.0, 0.5)))),  # L-shape
        BoxUnion((((0.0, 0.0), (0.4, 0.4)), ((0.6, 0.6), (1.0, 1.0)))),  # two squares
        BoxUnion((((0.0, 0.0), (1.0, 1.0)), ((0.25, 0.25), (0.75, 0.75)))),  # overlap
        BoxUnion((((0.1, 0.2), (0.9, 0.8)),)),
    ]
    r3 = [
        BoxUnion((((0.0, 0.0, 0.0), (1.0, 1.0, 1.0)),)),
        BoxUnion((((0.0, 0.0, 0.0), (1.0, 1.0, 0.5)),)),
        BoxUnion((((0.0, 0.0, 0.0), (0.5, 1.0, 1.0)), ((0.5, 0.0, 0.0), (1.0, 1.0, 0.5)))),
        BoxUnion((((0.0, 0.0, 0.0), (0.4, 0.4, 0.4)), ((0.5, 0.5, 0.5), (1.0, 1.0, 1.0)))),
        BoxUnion((((0.2, 0.0, 0.1), (0.8, 1.0, 0.9)),)),
    ]
    cases = []
    for A in r2:
        for f, l in [(PowerLaw(2.0), 1), (PowerLaw(1.5), 1)]:
            cases.append((A, f, l))
    for A in r3:
        for f, l in [(PowerLaw(3.0), 1), (PowerLaw(3.0), 2), (PowerLaw(2.0), 1)]:
            cases.append((A, f, l))
    return cases


def check_slicing_inequality() -> dict:
    """The projection-slice inequality holds one-sidedly on the whole corpus."""
    rows = []
    passed = True
    for A, f, l in slicing_corpus():
        rep = slicing_inequality_check(A, f, l)
        passed &= rep.holds
        rows.append({"boxes": len(A.boxes), "dim": A.dim, "f": f.s, "l": l,
                     "lhs": rep.lhs_bound, "rhs": rep.rhs_bound, "holds": rep.holds})
    return {"name": "slicing-inequality", "passed": passed,
            "details": {"cases": len(rows), "rows": rows}}


CHECKS = {
    "collapse": check_collapse,
    "exponents": check_exponents,
    "equivalence": check_equivalence,
    "covering": check_covering,
    "ball-calculus": check_ball_calculus,
    "slicing-inequality": check_slicing_inequality,
}


def run_check_suite(preset: str) -> dict:
    if preset == "all":
        results = [fn() for fn in CHECKS.values()]
    elif preset in CHECKS:
        results = [CHECKS[preset]()]
    else:
        raise ValueError(f"unknown check preset {preset!r}; have {sorted(CHECKS)} and 'all'")
    return {"preset": preset,
            "passed": all(r["passed"] for r in results),
            "checks": results}
