import math

import numpy as np
import pytest

from diolab.boxset import BoxUnion, grid_cover_count, interior_packing_count
from diolab.dimfun import PowerLaw, PowerLogLaw
from diolab.problems import LinearFormsProblem, PsiPowerLaw, PsiTable, restrict_to_zi
from diolab.slicing import (
    DEFLATE,
    INFLATE,
    SliceSpec,
    circle_union_length,
    deterministic_slices,
    pattern_component_lengths,
    psi_tilde_power,
    shrink_family,
    slice_ball_center,
    slice_balls,
    slice_measure_probe,
    slice_to_hausdorff_pipeline,
    slicing_inequality_check,
    transform_family,
    window_deflated_content,
    window_union_length,
)
from diolab.geometry import satisfies


def z1_problem(tau=3.0, n=2, m=1, b=()):
    return restrict_to_zi(LinearFormsProblem(n, m, PsiPowerLaw(tau), b), 1)


def table_z1(entries, b=()):
    return restrict_to_zi(LinearFormsProblem(2, 1, PsiTable(tuple(entries)), b), 1)


def test_slice_ball_center_hand_computed():
    # a = (2, 1), x_{1,2} = 0.5, p = -1: center (0 - (0.5 - 1))/2 = 0.25
    spec = SliceSpec(table_z1([((2, 1), 0.1)]), ((0.5,),))
    center = slice_ball_center(spec, (2, 1), (-1,))
    assert center[0] == pytest.approx(0.25)


def test_slice_ball_center_zero_tangential():
    spec = SliceSpec(table_z1([((1, 0), 0.1)]), ((0.7,),))
    assert slice_ball_center(spec, (1, 0), (0,))[0] == pytest.approx(0.0)


def test_slice_spec_requires_z1():
    p = LinearFormsProblem(2, 1, PsiPowerLaw(2.0))
    with pytest.raises(ValueError):
        SliceSpec(p, ((0.5,),))


def test_slice_balls_radius_and_count():
    spec = SliceSpec(z1_problem(tau=2.0), ((0.3,),))
    fam = slice_balls(spec, 2, 3)
    # shells 2, 3: per shell 2(2h+1) vectors, each |a_1| = h shifts
    assert len(fam) == 2 * 5 * 2 + 2 * 7 * 3
    for (a, _), r in zip(fam.tags, fam.radii):
        h = max(abs(x) for x in a)
        assert r == pytest.approx(float(h) ** -2.0 / h)


def test_slice_membership_equivalence():
    # X on the slice lies in a slice ball for a iff the full system holds at a
    rng = np.random.default_rng(0)
    prob = z1_problem(tau=1.5)
    x02 = 0.37
    spec = SliceSpec(prob, ((x02,),))
    fam = slice_balls(spec, 1, 6)
    for _ in range(40):
        x1 = float(rng.random())
        X = [[x1, x02]]
        for a in {tag[0] for tag in fam.tags}:
            in_ball = False
            for (ta, tp), c, r in zip(fam.tags, fam.centers, fam.radii):
                if ta != a:
                    continue
                d = abs(x1 - c[0])
                if min(d, 1.0 - d) < r:
                    in_ball = True
                    break
            assert in_ball == satisfies(X, a, prob)


def test_transform_family_sqrt():
    fam = slice_balls(SliceSpec(table_z1([((1, 0), 0.01)]), ((0.0,),)), 1, 1)
    out = transform_family(fam, PowerLaw(0.5), 1, INFLATE)
    assert out.radii[0] == pytest.approx(0.1)


def test_transform_inflate_deflate_identity():
    fam = slice_balls(SliceSpec(z1_problem(tau=2.5), ((0.2,),)), 1, 5)
    g = PowerLaw(0.75)
    round_trip = transform_family(transform_family(fam, g, 1, INFLATE), g, 1, DEFLATE)
    assert np.allclose(round_trip.radii, fam.radii, rtol=1e-12, atol=0)
    # log-law quotient: radii must sit inside its capped domain (shells >= 2)
    fam = slice_balls(SliceSpec(z1_problem(tau=2.5), ((0.2,),)), 2, 5)
    gl = PowerLogLaw(0.75, 1.0)
    round_trip = transform_family(transform_family(fam, gl, 1, INFLATE), gl, 1, DEFLATE)
    assert np.allclose(round_trip.radii, fam.radii, rtol=1e-10, atol=0)


def test_transform_gm_is_identity():
    fam = slice_balls(SliceSpec(z1_problem(tau=2.0), ((0.1,),)), 1, 4)
    out = transform_family(fam, PowerLaw(1.0), 1, INFLATE)
    assert np.array_equal(out.radii, fam.radii)


def test_psi_tilde_identity_exact_per_ball():
    # psi~(a)^m == g(psi(a)/|a|) |a|^m, multiplicative form, bitwise for m = 1
    prob = z1_problem(tau=3.0)
    fam = slice_balls(SliceSpec(prob, ((0.45,),)), 1, 6)
    g = PowerLaw(0.75)
    inflated = transform_family(fam, g, 1, INFLATE)
    assert inflated.psi_tilde is not None
    for (a, _), radius, tilde in zip(inflated.tags, inflated.radii, inflated.psi_tilde):
        h = max(abs(x) for x in a)
        assert radius == g.eval(prob.psi_value(a) / h)  # canonical route, bitwise
        assert tilde ** 1 == g.eval(prob.psi_value(a) / h) * float(h) ** 1  # exact


def test_psi_tilde_power_law():
    # psi = |a|^-3, f = r^1.75, g = r^0.75: psi~ = |a|^-2
    assert psi_tilde_power(LinearFormsProblem(2, 1, PsiPowerLaw(3.0)),
                           PowerLaw(1.75)).tau == pytest.approx(2.0)
    # f = r^1.9: psi~ = |a|^-2.6
    assert psi_tilde_power(LinearFormsProblem(2, 1, PsiPowerLaw(3.0)),
                           PowerLaw(1.9)).tau == pytest.approx(2.6)


def test_shrink_family():
    fam = slice_balls(SliceSpec(z1_problem(tau=2.0), ((0.2,),)), 2, 3)
    half = shrink_family(fam, 0.5)
    assert np.array_equal(half.radii, fam.radii * 0.5)
    third_then = shrink_family(shrink_family(fam, 0.5), 0.4)
    direct = shrink_family(fam, 0.2)
    assert np.allclose(third_then.radii, direct.radii, rtol=1e-15)


def test_shrink_family_divergent_trend_survives():
    # shrinking every ball by a constant factor leaves the coverage trend
    # intact: cumulative unions of the shrunk family still climb toward 1
    prob = z1_problem(tau=3.0)
    g = PowerLaw(0.75)
    spec = SliceSpec(prob, ((0.7302,),))
    lengths = []
    for hi in (4, 8, 16, 32):
        fam = transform_family(slice_balls(spec, 1, hi), g, 1, INFLATE)
        shrunk = shrink_family(fam, 1.0 / 3)
        lengths.append(circle_union_length(shrunk.centers[:, 0], shrunk.radii))
    assert all(b >= a for a, b in zip(lengths, lengths[1:]))
    assert lengths[-1] > 0.95


def test_circle_union_disjoint():
    assert circle_union_length(np.array([0.2, 0.6]), np.array([0.05, 0.1])) == pytest.approx(0.3)


def test_circle_union_wraparound():
    # [0.95, 1.05] mod 1 merged with [0.0, 0.1]: total 0.15
    length = circle_union_length(np.array([0.0, 0.05]), np.array([0.05, 0.05]))
    assert length == pytest.approx(0.15)


def test_circle_union_brute_force_oracle():
    rng = np.random.default_rng(42)
    for _ in range(20):
        n = rng.integers(1, 30)
        centers = rng.random(n)
        radii = rng.random(n) * 0.08
        exact = circle_union_length(centers, radii)
        grid = np.arange(0.0, 1.0, 1e-5) + 5e-6
        d = np.abs(grid[:, None] - centers[None, :])
        d = np.minimum(d, 1.0 - d)
        brute = np.mean(np.any(d < radii[None, :], axis=1))
        assert exact == pytest.approx(brute, abs=2e-3)


def test_slice_measure_probe_exact_m1():
    fam = slice_balls(SliceSpec(z1_problem(tau=2.0), ((0.4,),)), 2, 2)
    probe = slice_measure_probe(fam)
    assert probe.exact
    assert probe.value == pytest.approx(circle_union_length(fam.centers[:, 0], fam.radii))


def test_window_union_matches_materialized_family():
    prob = z1_problem(tau=3.0)
    g = PowerLaw(0.75)
    x02 = float(deterministic_slices(1)[0])
    spec = SliceSpec(prob, ((x02,),))
    for lo, hi in [(2, 3), (4, 7), (8, 15)]:
        fam = slice_balls(spec, lo, hi)
        inflated = transform_family(fam, g, 1, INFLATE)
        expected = circle_union_length(inflated.centers[:, 0], inflated.radii)
        got = window_union_length(lambda h: g.eval(float(h) ** -3.0 / h), lo, hi, x02, 0.0)
        assert got.exact
        assert got.value == pytest.approx(expected, abs=1e-12)


def test_window_union_full_when_radius_covers():
    got = window_union_length(lambda h: 1.0, 1, 1, 0.3, 0.0)
    assert got.value == 1.0 and got.exact


def test_window_union_randomized_against_materialized_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(10):
        tau = float(rng.uniform(1.2, 3.0))
        x02 = float(rng.random())
        s_g = float(rng.uniform(0.4, 1.0))
        g = PowerLaw(s_g)
        lo = int(rng.integers(2, 12))
        hi = lo + int(rng.integers(1, 10))
        prob = z1_problem(tau=tau)
        fam = transform_family(slice_balls(SliceSpec(prob, ((x02,),)), lo, hi),
                               g, 1, INFLATE)
        expected = circle_union_length(fam.centers[:, 0], fam.radii)
        got = window_union_length(
            lambda h: g.eval(float(h) ** (-tau) / h), lo, hi, x02, 0.0)
        assert got.exact
        assert got.value == pytest.approx(expected, abs=1e-11)


def test_window_union_guard_reports_upper_bound():
    g = PowerLaw(0.75)
    infl = lambda h: g.eval(float(h) ** -3.0 / h)
    x02 = 0.61803
    exact = window_union_length(infl, 8, 15, x02, 0.0)
    bound = window_union_length(infl, 8, 15, x02, 0.0, interval_guard=10)
    assert exact.exact and not bound.exact
    assert bound.value >= exact.value


def brute_circle_components(centers, radii):
    """Component lengths of a union of arcs on the circle; None if it covers."""
    lo = np.mod(np.asarray(centers) - radii, 1.0)
    merged = []
    for s, e in sorted(zip(lo, lo + 2.0 * np.asarray(radii))):
        if merged and s <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], e)
        else:
            merged.append([s, e])
    while len(merged) > 1 and merged[-1][1] >= merged[0][0] + 1.0:
        s0, e0 = merged.pop(0)
        merged[-1][1] = max(merged[-1][1], e0 + 1.0)
    if merged and merged[0][1] - merged[0][0] >= 1.0:
        return None
    return [e - s for s, e in merged]


def test_window_deflated_content_matches_brute_merge():
    prob = z1_problem(tau=3.0)
    g = PowerLaw(0.75)
    x02 = 0.381966
    for lo, hi in [(2, 3), (4, 7)]:
        total = 0.0
        for h in range(lo, hi + 1):
            fam = slice_balls(SliceSpec(prob, ((x02,),)), h, h)
            comps = brute_circle_components(fam.centers[:, 0], fam.radii)
            if comps is None:
                total += g.eval(0.5)  # full circle counts as one ball of radius 1/2
            else:
                total += sum(g.eval(L / 2.0) for L in comps)
        got = window_deflated_content(g, lambda h: float(h) ** -3.0 / h, lo, hi, x02, 0.0)
        assert got == pytest.approx(total, rel=1e-9)


def test_pattern_components_full_circle():
    assert pattern_component_lengths(np.array([0.0, 0.3, 0.6]), 1.0, 0.3) is None


def test_pipeline_divergent_case():
    # psi = |a|^-3, f = r^1.75: psi~ = |a|^-2, divergent; last-window unions near 1
    report = slice_to_hausdorff_pipeline(
        LinearFormsProblem(2, 1, PsiPowerLaw(3.0)), PowerLaw(1.75),
        n_slices=4, ks=range(1, 8))
    assert report.psi_tilde_tau == pytest.approx(2.0)
    assert report.slices_reaching_threshold >= 3
    assert report.contents_strictly_increasing(last=4)


def test_pipeline_convergent_case_stalls():
    report = slice_to_hausdorff_pipeline(
        LinearFormsProblem(2, 1, PsiPowerLaw(3.0)), PowerLaw(1.9),
        n_slices=4, ks=range(1, 8))
    finals = [s.final_union for s in report.slices]
    assert all(f < 0.5 for f in finals)


def test_pipeline_collapse_case():
    # f = r^(nm): psi~ = psi, deflate is the identity
    tilde = psi_tilde_power(LinearFormsProblem(2, 1, PsiPowerLaw(3.0)), PowerLaw(2.0))
    assert tilde.tau == pytest.approx(3.0)


def test_pipeline_psi_tilde_schmidt_oracle():
    # the series module is the oracle: psi~ = |a|^-2 has divergent Schmidt sum,
    # psi~ = |a|^-2.6 convergent (over Z_1)
    from diolab.series import CONVERGES, DIVERGES, classify, schmidt_sum

    base = LinearFormsProblem(2, 1, PsiPowerLaw(3.0))
    div = restrict_to_zi(LinearFormsProblem(2, 1, psi_tilde_power(base, PowerLaw(1.75))), 1)
    conv = restrict_to_zi(LinearFormsProblem(2, 1, psi_tilde_power(base, PowerLaw(1.9))), 1)
    assert classify(schmidt_sum(div, 1 << 14)).verdict == DIVERGES
    assert classify(schmidt_sum(conv, 1 << 14)).verdict == CONVERGES


# --- the box-union inequality harness ------------------------------------------


def test_box_union_volume_with_overlap():
    A = BoxUnion((((0.0, 0.0), (1.0, 1.0)), ((0.5, 0.5), (1.5, 1.0))))
    assert A.volume() == pytest.approx(1.25)


def test_grid_cover_count_unit_square():
    A = BoxUnion((((0.0, 0.0), (1.0, 1.0)),))
    assert grid_cover_count(A, 1.0 / 4) == 25  # inclusive of boundary cells


def test_interior_packing_count():
    A = BoxUnion((((0.0, 0.0), (1.0, 1.0)),))
    assert interior_packing_count(A, 1.0 / 8) == 16


def test_slicing_inequality_unit_square():
    A = BoxUnion((((0.0, 0.0), (1.0, 1.0)),))
    rep = slicing_inequality_check(A, PowerLaw(2.0), 1)
    assert rep.holds
    # lhs is close to the exact area/2; rhs close to 4/pi
    assert rep.lhs_bound == pytest.approx(0.5, rel=0.1)
    assert rep.rhs_bound == pytest.approx(4.0 / math.pi, rel=0.05)


def test_slicing_inequality_empty():
    rep = slicing_inequality_check(BoxUnion(()), PowerLaw(2.0), 1)
    assert rep.holds and rep.lhs_bound == 0.0


def test_slicing_inequality_strips():
    for eps in (1.0, 0.5, 0.25):
        A = BoxUnion((((0.0, 0.0), (1.0, eps)),))
        rep = slicing_inequality_check(A, PowerLaw(2.0), 1)
        assert rep.holds


def test_slicing_inequality_r3():
    cube = BoxUnion((((0.0, 0.0, 0.0), (1.0, 1.0, 1.0)),))
    for f, l in [(PowerLaw(3.0), 1), (PowerLaw(3.0), 2), (PowerLaw(2.0), 1),
                 (PowerLaw(1.5), 1)]:
        rep = slicing_inequality_check(cube, f, l)
        assert rep.holds, (f, l, rep)


def test_slicing_inequality_abstains_rather_than_refutes():
    # f = r^3 in R^2: both sides vanish; upper(lhs) > 0 = lower(rhs) must abstain
    A = BoxUnion((((0.0, 0.0), (1.0, 1.0)),))
    rep = slicing_inequality_check(A, PowerLaw(3.0), 1)
    assert not rep.holds and rep.abstained


def test_deterministic_slices_are_reproducible():
    a = deterministic_slices(8)
    b = deterministic_slices(8)
    assert np.array_equal(a, b)
    assert len(np.unique(a)) == 8
