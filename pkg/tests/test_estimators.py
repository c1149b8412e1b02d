import numpy as np
import pytest

from diolab.dimfun import PowerLaw
from diolab.estimators import (
    SAMPLING_CENTER,
    SAMPLING_EXACT,
    TOWARD_ONE,
    TOWARD_ZERO,
    GenerationSet,
    box_count,
    content_upper_bound,
    dyadic_window,
    generation_set,
    mc_measure,
    uniform_samples,
    wilson_interval,
    window_hits,
    window_union_bound,
    zero_one_probe,
)
from diolab.problems import (
    LinearFormsProblem,
    PsiPowerLaw,
    PsiTable,
    SquaresProblem,
    iter_ball,
)


def lf(n=2, m=1, tau=2.0, **kw):
    return LinearFormsProblem(n, m, PsiPowerLaw(tau), **kw)


def brute_window_hits(problem, pts, h1, h2):
    out = np.zeros(len(pts), dtype=bool)
    for i, flat in enumerate(pts):
        x = flat.reshape(problem.m, problem.n)
        for a in iter_ball(problem.n, h1, h2):
            psi = problem.psi_value(a)
            if psi == 0.0:
                continue
            v = x @ np.asarray(a, dtype=float) - np.asarray(problem.b)
            if np.max(np.abs(v - np.rint(v))) < psi:
                out[i] = True
                break
    return out


def brute_squares_hits(problem, pts, h1, h2):
    out = np.zeros(len(pts), dtype=bool)
    for i, x in enumerate(pts):
        for h in range(h1, h2 + 1):
            psi = problem.psi_at(h)
            if psi <= 0:
                continue
            done = False
            for a in iter_ball(2, h, h):
                v = a[0] ** 2 * x[0] + a[1] ** 2 * x[1]
                p = 0
                while p * p <= v + psi:
                    if abs(v - p * p) < psi:
                        out[i] = True
                        done = True
                        break
                    p += 1
                if done:
                    break
            if done:
                break
    return out


def test_window_hits_matches_brute_force_lf21():
    p = lf(tau=2.5)
    pts = uniform_samples(3, 60, 2)
    got = window_hits(p, pts, 2, 9)
    want = brute_window_hits(p, pts, 2, 9)
    assert np.array_equal(got, want)


def test_window_hits_matches_brute_force_inhomogeneous():
    p = lf(tau=2.0, b=(0.3,))
    pts = uniform_samples(5, 40, 2)
    assert np.array_equal(window_hits(p, pts, 2, 8), brute_window_hits(p, pts, 2, 8))


def test_window_hits_matches_brute_force_n1m2():
    p = lf(n=1, m=2, tau=1.5)
    pts = uniform_samples(7, 50, 2)
    assert np.array_equal(window_hits(p, pts, 1, 12), brute_window_hits(p, pts, 1, 12))


def test_window_hits_z1_support():
    from diolab.problems import restrict_to_zi

    p = restrict_to_zi(lf(tau=2.0), 1)
    pts = uniform_samples(11, 40, 2)
    assert np.array_equal(window_hits(p, pts, 2, 7), brute_window_hits(p, pts, 2, 7))


def test_window_hits_z2_support_swaps():
    from diolab.problems import restrict_to_zi

    p = restrict_to_zi(lf(tau=2.0), 2)
    pts = uniform_samples(13, 40, 2)
    assert np.array_equal(window_hits(p, pts, 2, 7), brute_window_hits(p, pts, 2, 7))


def test_window_hits_table_psi():
    p = LinearFormsProblem(2, 1, PsiTable((((2, 1), 0.2), ((4, -3), 0.1))))
    pts = uniform_samples(17, 80, 2)
    assert np.array_equal(window_hits(p, pts, 1, 5), brute_window_hits(p, pts, 1, 5))


def test_window_hits_squares_matches_brute():
    sp = SquaresProblem(PsiPowerLaw(2.0))
    pts = uniform_samples(19, 40, 2)
    assert np.array_equal(window_hits(sp, pts, 1, 6), brute_squares_hits(sp, pts, 1, 6))


def test_mc_measure_empty_support():
    p = LinearFormsProblem(2, 1, PsiTable(()))
    rep = mc_measure(p, 1, 64, 500, seed=1)
    assert rep.fraction == 0.0


def test_mc_measure_out_of_theorem_flag():
    # n = m = 1 is allowed for exploration but flagged
    rep = mc_measure(lf(n=1, m=1, tau=2.0), 1, 16, 200, seed=1)
    assert rep.out_of_theorem
    rep = mc_measure(lf(n=2, m=1, tau=2.0), 1, 16, 200, seed=1)
    assert not rep.out_of_theorem


def test_mc_measure_deterministic():
    p = lf(tau=2.5)
    r1 = mc_measure(p, 2, 32, 2000, seed=42)
    r2 = mc_measure(p, 2, 32, 2000, seed=42)
    assert r1.hits == r2.hits and r1.fraction == r2.fraction


def test_mc_union_bound_invariant():
    p = lf(tau=2.5)
    for k in (3, 4, 5):
        lo, hi = dyadic_window(k)
        rep = mc_measure(p, lo, hi, 20000, seed=9)
        bound = window_union_bound(p, lo, hi)
        half = (rep.wilson_ci[1] - rep.wilson_ci[0]) / 2
        assert rep.fraction <= bound + 3 * half


def test_wilson_interval_sane():
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi
    assert wilson_interval(0, 100)[0] == 0.0


def test_zero_one_probe_divergent():
    rep = zero_one_probe(lf(tau=2.0), range(4, 9), samples=4000, seed=2)
    assert rep.verdict == TOWARD_ONE
    fracs = [r.fraction for r in rep.cumulative]
    assert all(f2 >= f1 for f1, f2 in zip(fracs, fracs[1:]))
    assert fracs[-1] > 0.9


def test_zero_one_probe_convergent():
    rep = zero_one_probe(lf(tau=2.5), range(1, 7), samples=4000, seed=2)
    assert rep.verdict == TOWARD_ZERO
    assert rep.bound_satisfied


def test_zero_one_probe_squares_divergent():
    rep = zero_one_probe(SquaresProblem(PsiPowerLaw(1.0)), range(1, 5),
                         samples=1500, seed=8)
    assert rep.verdict == TOWARD_ONE


def test_generation_set_nesting():
    p = lf(n=1, m=1, tau=2.0)
    g3 = generation_set(p, 3)
    g2 = g3.truncate(2)
    pts = uniform_samples(4, 2000, 1)
    m3 = g3.membership(pts)
    m2 = g2.membership(pts)
    assert np.all(m2[m3])  # G_3 subset of G_2


def test_generation_set_single_window_equals_window_hits():
    p = lf(tau=2.0)
    g1 = generation_set(p, 1, first_k=2)
    pts = uniform_samples(21, 500, 2)
    assert np.array_equal(g1.membership(pts), window_hits(p, pts, *dyadic_window(2)))


def test_generation_set_membership_matches_double_loop():
    p = lf(n=1, m=1, tau=2.0)
    gset = generation_set(p, 3)
    pts = uniform_samples(23, 300, 1)
    got = gset.membership(pts)
    want = np.ones(len(pts), dtype=bool)
    for k, (lo, hi) in enumerate(gset.windows):
        want &= brute_window_hits(p, pts, lo, hi)
    assert np.array_equal(got, want)


def test_generation_windows_must_increase():
    with pytest.raises(ValueError):
        GenerationSet(lf(), [(4, 8), (6, 10)])


def strip_problem():
    # a single thin strip around x_1 = 0: table psi, one vector
    return LinearFormsProblem(2, 1, PsiTable((((1, 0), 2.0 ** -9),)))


def test_box_count_single_strip_slope_one():
    gset = GenerationSet(strip_problem(), [(1, 1)])
    deltas = [2.0 ** -e for e in range(3, 8)]
    rep = box_count(gset, deltas, SAMPLING_EXACT)
    assert rep.slope == pytest.approx(1.0, abs=0.1)
    # counts per scale: the strip occupies the first column plus wraps at x=1
    assert all(c2 >= c1 for c1, c2 in zip(rep.counts, rep.counts[1:]))


def test_box_count_probe_agrees_with_exact_on_strip():
    # narrow strip: probes under-count at scales coarser than the probe
    # spacing (that is the documented probe bias) but never over-count
    gset = GenerationSet(strip_problem(), [(1, 1)])
    deltas = [2.0 ** -e for e in range(3, 8)]
    exact = box_count(gset, deltas, SAMPLING_EXACT)
    probed = box_count(gset, deltas, "subgrid:3")
    assert all(pc <= ec for pc, ec in zip(probed.counts, exact.counts))

    # wide strip: every probed scale resolves it, counts nearly coincide
    wide = LinearFormsProblem(2, 1, PsiTable((((1, 0), 2.0 ** -4),)))
    gset = GenerationSet(wide, [(1, 1)])
    exact = box_count(gset, deltas, SAMPLING_EXACT)
    probed = box_count(gset, deltas, "subgrid:3")
    assert all(ec >= pc >= 0.9 * ec for pc, ec in zip(probed.counts, exact.counts))
    assert probed.slope == pytest.approx(exact.slope, abs=0.1)


def test_box_count_center_probe_runs():
    gset = GenerationSet(strip_problem(), [(1, 1)])
    rep = box_count(gset, [2.0 ** -e for e in range(3, 8)], SAMPLING_CENTER)
    assert rep.counts[-1] >= rep.counts[0] >= 0


def test_box_count_monotone_and_slope_range():
    import math

    sp = SquaresProblem(PsiPowerLaw(3.0))
    gset = generation_set(sp, 2, first_k=1)
    deltas = [2.0 ** -e for e in range(4, 9)]
    rep = box_count(gset, deltas, SAMPLING_EXACT)
    assert all(c2 >= c1 > 0 for c1, c2 in zip(rep.counts, rep.counts[1:]))
    assert 0.0 <= rep.slope <= 2.0
    # the local slope between any two adjacent scales stays in [0, ambient dim]
    for (d1, n1), (d2, n2) in zip(zip(rep.scales, rep.counts),
                                  zip(rep.scales[1:], rep.counts[1:])):
        local = math.log(n2 / n1) / math.log(d1 / d2)
        assert 0.0 <= local <= 2.0


def test_box_count_simultaneous_case_dimension():
    # W_{1,2}(tau=2): exponent of convergence (n+m)/(1+tau) = 1; K = 3
    # generations with the window start matched to the probed widths a^-(1+tau)
    p = lf(n=1, m=2, tau=2.0)
    gset = generation_set(p, 3, first_k=2)
    rep = box_count(gset, [2.0 ** -e for e in range(6, 13)], SAMPLING_EXACT)
    assert rep.slope == pytest.approx(1.0, abs=0.15)


def test_content_upper_bound_unit_square():
    # window [1,1] of tau=2 saturates the square: 256 boxes at rho = 1/16,
    # sup-norm balls of radius 1/32, total 256 * (1/32)^2 = 0.25
    gset = GenerationSet(lf(tau=2.0), [(1, 1)])
    rep = content_upper_bound(gset, PowerLaw(2.0), 1.0 / 16)
    assert rep.boxes == 256
    assert rep.value == pytest.approx(0.25)


def test_content_upper_bound_empty_set():
    gset = GenerationSet(LinearFormsProblem(2, 1, PsiTable(())), [(1, 4)])
    rep = content_upper_bound(gset, PowerLaw(2.0), 1.0 / 8)
    assert rep.value == 0.0


def test_content_decreases_for_supdimensional_exponent():
    # f = r^s with s above the box dimension: content shrinks as rho shrinks
    gset = GenerationSet(strip_problem(), [(1, 1)])
    vals = [content_upper_bound(gset, PowerLaw(1.9), 2.0 ** -e).value for e in (4, 5, 6, 7)]
    assert all(v2 < v1 for v1, v2 in zip(vals, vals[1:]))


def test_exact_vs_probe_window_mask_consistency():
    # exact rasterization marks every box whose probe points are members
    from diolab.estimators import _exact_window_mask

    p = lf(tau=2.0)
    R = 64
    mask = _exact_window_mask(p, 2, 3, R)
    centers = (np.arange(R) + 0.5) / R
    grid = np.stack(np.meshgrid(centers, centers, indexing="ij"), axis=-1).reshape(-1, 2)
    member = window_hits(p, grid, 2, 3).reshape(R, R)
    assert np.all(mask[member])
