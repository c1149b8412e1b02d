"""Partial sums of the convergence criteria, classification, exponent solvers.

All criterion sums run through one accumulation engine (compensated summation,
shells ascending, checkpoints at powers of two) so that algebraically equal
criteria produce bitwise equal series.  In particular the general-measure sum
with f(r) = r^(nm) short-circuits its per-term quotient to psi(a)^m and is
then term-for-term identical to the plain Schmidt sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dimfun import DimensionFunction, PowerLaw, derive_quotient
from .problems import (
    LinearFormsProblem,
    PsiPowerLaw,
    PsiTable,
    SquaresProblem,
    iter_shell,
    shell_count,
    zi_shell_count,
)

CONVERGES = "converges"
DIVERGES = "diverges"
INCONCLUSIVE = "inconclusive"

FLAG_FULL_DIMENSION = "full-dimension"
FLAG_EMPTY_SET = "empty-set"
FLAG_OUT_OF_THEOREM = "out-of-theorem"
FLAG_BELOW_BRACKET = "transition-below-bracket"
FLAG_ABOVE_BRACKET = "transition-above-bracket"


@dataclass
class PartialSumSeries:
    heights: np.ndarray  # checkpoint heights, increasing
    sums: np.ndarray  # S_H at each checkpoint
    label: str

    def __post_init__(self):
        self.heights = np.asarray(self.heights, dtype=np.int64)
        self.sums = np.asarray(self.sums, dtype=np.float64)
        if np.any(np.diff(self.sums) < 0):
            raise ValueError("partial sums must be non-decreasing")


class _Kahan:
    """Compensated accumulator; error-free up to second-order terms."""

    __slots__ = ("total", "comp")

    def __init__(self):
        self.total = 0.0
        self.comp = 0.0

    def add(self, x: float) -> None:
        y = x - self.comp
        t = self.total + y
        self.comp = (t - self.total) - y
        self.total = t


def _checkpoints(H: int) -> list:
    pts = [1 << k for k in range(0, H.bit_length()) if (1 << k) <= H]
    if pts[-1] != H:
        pts.append(H)
    return pts


def _accumulate(term_at_shell, H: int, label: str) -> PartialSumSeries:
    if H < 1:
        raise ValueError("H must be >= 1")
    acc = _Kahan()
    marks = _checkpoints(H)
    heights, sums = [], []
    next_mark = 0
    for h in range(1, H + 1):
        acc.add(term_at_shell(h))
        if h == marks[next_mark]:
            heights.append(h)
            sums.append(acc.total)
            next_mark += 1
    return PartialSumSeries(np.array(heights), np.array(sums), label)


def _shell_weight_factory(p: LinearFormsProblem, weight):
    """Shell h -> sum of weight(psi(a), |a|) over the shell, support applied.

    Radial power-law psi with pure Z_i supports has a closed-form shell count;
    tables and registry supports enumerate (tables only over their entries).
    """
    n, m = p.n, p.m
    if isinstance(p.psi, PsiPowerLaw) and not p.support.custom:
        pinned = len(p.support.zi)
        if pinned == 0:
            def term(h):
                return shell_count(n, h) * weight(p.psi.at_height(h), h)
        else:
            def term(h):
                return zi_shell_count(n, h, pinned) * weight(p.psi.at_height(h), h)
        return term

    if isinstance(p.psi, PsiTable):
        by_shell = {}
        for a, _ in p.psi.entries:  # entries are sorted by (|a|, a)
            h = max(abs(x) for x in a)
            psi = p.psi_value(a)
            if psi == 0.0:
                continue
            by_shell.setdefault(h, []).append(psi)

        def term(h):
            acc = _Kahan()
            for psi in by_shell.get(h, ()):
                acc.add(weight(psi, h))
            return acc.total

        return term

    # power law with custom registry support: enumerate the shell
    def term(h):
        acc = _Kahan()
        count = 0
        for a in iter_shell(n, h):
            count += 1
            psi = p.psi_value(a)
            if psi != 0.0:
                acc.add(weight(psi, h))
        assert count == shell_count(n, h)
        return acc.total

    return term


def schmidt_sum(p: LinearFormsProblem, H: int) -> PartialSumSeries:
    """S_h = sum over 0 < |a| <= h of psi(a)^m."""
    m = p.m

    def weight(psi, h):
        return psi ** m

    return _accumulate(_shell_weight_factory(p, weight), H, "schmidt")


def hausdorff_sum(p: LinearFormsProblem, f: DimensionFunction, H: int) -> PartialSumSeries:
    """S_h = sum of g(psi(a)/|a|) * |a|^m with g(r) = r^-(n-1)m f(r).

    Terms with psi(a) = 0 are skipped (they contribute no solutions).
    g = r^m collapses the criterion to the Schmidt sum, term by term.
    """
    g = derive_quotient(f, (p.n - 1) * p.m)
    m = p.m
    if isinstance(g, PowerLaw) and g.s == m:
        def weight(psi, h):
            return psi ** m
    else:
        def weight(psi, h):
            return g.eval(psi / h) * float(h) ** m

    return _accumulate(_shell_weight_factory(p, weight), H, "hausdorff")


def cor1_sum(p: LinearFormsProblem, s: float, H: int) -> PartialSumSeries:
    """S_h = sum of psi(a)^delta * |a|^(m-delta), delta = s - (n-1)m."""
    delta = s - (p.n - 1) * p.m
    if delta <= 0:
        raise ValueError("s must exceed (n-1)m; behavior at the endpoint is open")
    m = p.m

    def weight(psi, h):
        return psi ** delta * float(h) ** (m - delta)

    return _accumulate(_shell_weight_factory(p, weight), H, f"cor1(s={s:g})")


def squares_sum(sp: SquaresProblem, f: DimensionFunction, H: int) -> PartialSumSeries:
    """S_H = sum over h of g(psi(h)/h^2) * h^2 with g(r) = r^-1 f(r).

    With f = r^s this is the squares criterion sum psi(h)^(s-1) h^(4-2s).
    """
    g = derive_quotient(f, 1)

    def term(h):
        psi = sp.psi_at(h)
        if psi == 0.0:
            return 0.0
        return g.eval(psi / float(h) ** 2) * float(h) ** 2

    return _accumulate(term, H, "squares")


# --- convergence classification ---------------------------------------------

@dataclass
class Classification:
    verdict: str
    limit: float | None = None
    error_bar: float | None = None
    growth_exponent: float | None = None
    details: dict = field(default_factory=dict)


def classify(series: PartialSumSeries, eps_div: float = 0.05,
             stability_tol: float = 0.25) -> Classification:
    """Diagnose convergence from dyadic increments.

    Fits log dS = log c + beta log H + gamma log log H over the trailing
    dyadic windows.  beta > -eps_div with a sane fit reads as non-summable
    (diverges); beta <= -eps_div with a stable tail extrapolation reads as
    summable (converges); anything else is inconclusive.
    """
    H = series.heights
    S = series.sums
    if len(H) < 8 or H[-1] < 100 * H[0]:
        raise ValueError("need >= 8 checkpoints spanning >= 2 decades of H")

    if S[-1] == 0.0:
        return Classification(CONVERGES, limit=0.0, error_bar=0.0,
                              details={"reason": "identically zero"})

    inc = np.diff(S)
    mid = np.sqrt(H[1:].astype(float) * H[:-1].astype(float))
    pos = inc > 0
    # a finitely supported criterion exhausts: trailing increments all zero
    if not pos[-1] and not np.any(inc[len(inc) // 2:]):
        return Classification(CONVERGES, limit=float(S[-1]), error_bar=0.0,
                              details={"reason": "finite support exhausted"})

    use = np.where(pos)[0]
    use = use[use >= max(2, len(inc) - max(6, len(inc) // 2))]
    if len(use) < 4:
        return Classification(INCONCLUSIVE, details={"reason": "too few usable windows"})

    def fit(idx):
        x = np.log(mid[idx])
        A = np.column_stack([np.ones_like(x), x, np.log(np.log(mid[idx]))])
        y = np.log(inc[idx])
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        resid = y - A @ coef
        rms = float(np.sqrt(np.mean(resid ** 2))) if len(y) > 3 else 0.0
        return coef, rms

    coef, rms = fit(use)
    beta = float(coef[1])
    details = {"beta": beta, "gamma": float(coef[2]), "fit_rms": rms,
               "windows_used": len(use)}

    if rms > 0.5:
        return Classification(INCONCLUSIVE, details={**details, "reason": "irregular increments"})

    if beta > -eps_div:
        growth = beta if beta > eps_div else 0.0
        return Classification(DIVERGES, growth_exponent=growth, details=details)

    def tail_from(coefs, h_last):
        # sum the fitted model over the next dyadic windows (geometric decay)
        c0, b, g0 = coefs
        hs = h_last * 2.0 ** np.arange(1, 400)
        terms = np.exp(c0 + b * np.log(hs) + g0 * np.log(np.log(hs)))
        return float(np.sum(terms[np.isfinite(terms)]))

    tail = tail_from(coef, float(mid[use][-1]))
    limit = float(S[-1]) + tail
    if len(use) >= 6:
        coef2, _ = fit(use[:-2])
        limit2 = float(S[-1]) + tail_from(coef2, float(mid[use][-1]))
        drift = abs(limit - limit2)
        if limit > 0 and drift > stability_tol * max(tail, 1e-300):
            return Classification(INCONCLUSIVE,
                                  details={**details, "reason": "unstable tail extrapolation"})
        err = max(drift, 0.05 * tail)
    else:
        err = 0.25 * tail
    details["tail"] = tail
    return Classification(CONVERGES, limit=limit, error_bar=err, details=details)


# --- critical exponents ------------------------------------------------------

METHOD_ANALYTIC = "analytic"
METHOD_BISECTION = "numeric-bisection"


@dataclass
class ExponentResult:
    s_star: float
    method: str
    bracket: tuple
    flags: tuple = ()
    diagnostics: dict = field(default_factory=dict)


def critical_exponent_analytic(p: LinearFormsProblem) -> ExponentResult:
    """Exponent of convergence for psi = |a|^-tau with full support.

    The criterion sum over shells is sum h^(n-1-tau*delta+m-delta), which
    converges exactly when delta > (n+m)/(1+tau); hence
    s* = (n-1)m + (n+m)/(1+tau) for tau > n/m, and s* = nm (the sum diverges
    for every delta <= m) at or below tau = n/m.
    """
    if not isinstance(p.psi, PsiPowerLaw) or not p.support.is_all:
        raise ValueError("closed form needs a power-law psi with full support")
    n, m, tau = p.n, p.m, p.psi.tau
    flags = () if p.theorem_mode else (FLAG_OUT_OF_THEOREM,)
    if tau <= n / m:
        return ExponentResult(float(n * m), METHOD_ANALYTIC,
                              (float(n * m), float(n * m)),
                              flags + (FLAG_FULL_DIMENSION,))
    s = (n - 1) * m + (n + m) / (1.0 + tau)
    return ExponentResult(s, METHOD_ANALYTIC, (s, s), flags)


def critical_exponent_numeric(p: LinearFormsProblem, bracket: tuple,
                              tol: float = 0.02, H_max: int = 1 << 14,
                              eps_div: float = 0.02) -> ExponentResult:
    """Bisection on s over classify() of the exponent-probe partial sums.

    eps_div defaults tighter than the standalone classifier: the fitted
    increment slope near the transition is -(s - s*) * (1 + tau), so the
    bisection bias is about eps_div / (1 + tau) and must sit inside tol.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    floor_s, cap_s = (p.n - 1) * p.m, p.n * p.m
    if not (floor_s < lo < hi <= cap_s):
        raise ValueError(f"bracket must satisfy {floor_s} < lo < hi <= {cap_s}")

    if isinstance(p.psi, PsiTable) and all(v == 0.0 for _, v in p.psi.entries):
        return ExponentResult(lo, METHOD_BISECTION, (lo, lo), (FLAG_EMPTY_SET,))

    probes = []

    def probe(s):
        for H in (H_max, 2 * H_max):
            verdict = classify(cor1_sum(p, s, H), eps_div=eps_div).verdict
            if verdict != INCONCLUSIVE:
                probes.append((s, H, verdict))
                return verdict
        probes.append((s, 2 * H_max, INCONCLUSIVE))
        return INCONCLUSIVE

    v_lo, v_hi = probe(lo), probe(hi)
    flags = () if p.theorem_mode else (FLAG_OUT_OF_THEOREM,)
    diag = {"probes": probes}
    if INCONCLUSIVE in (v_lo, v_hi):
        return ExponentResult(math.nan, METHOD_BISECTION, (lo, hi),
                              flags + (INCONCLUSIVE,), diag)
    if v_lo == CONVERGES:
        # the sum already converges at the bracket floor (terms are monotone
        # non-increasing in s, so it converges everywhere above)
        return ExponentResult(lo, METHOD_BISECTION, (lo, lo),
                              flags + (FLAG_BELOW_BRACKET,), diag)
    if v_hi == DIVERGES:
        flag = FLAG_FULL_DIMENSION if hi == cap_s else FLAG_ABOVE_BRACKET
        return ExponentResult(hi, METHOD_BISECTION, (hi, hi),
                              flags + (flag,), diag)

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        v = probe(mid)
        if v == INCONCLUSIVE:
            return ExponentResult(math.nan, METHOD_BISECTION, (lo, hi),
                                  flags + (INCONCLUSIVE,), diag)
        if v == DIVERGES:
            lo = mid
        else:
            hi = mid
    return ExponentResult(0.5 * (lo + hi), METHOD_BISECTION, (lo, hi), flags, diag)


def squares_critical_exponent(tau: float) -> ExponentResult:
    """dim S_2(tau) = (5+tau)/(2+tau) for tau > 1; full dimension 2 otherwise.

    At tau <= 1 the criterion sum at s = 2 is sum psi(h), divergent.
    """
    if tau <= 1:
        return ExponentResult(2.0, METHOD_ANALYTIC, (2.0, 2.0), (FLAG_FULL_DIMENSION,))
    s = (5.0 + tau) / (2.0 + tau)
    return ExponentResult(s, METHOD_ANALYTIC, (s, s))


def squares_exponent_numeric(sp: SquaresProblem, bracket: tuple = (1.05, 1.95),
                             tol: float = 0.02, H_max: int = 1 << 14,
                             eps_div: float = 0.02) -> ExponentResult:
    """Bisection on the squares criterion sum; cross-check for the closed form."""
    lo, hi = float(bracket[0]), float(bracket[1])

    def probe(s):
        from .dimfun import PowerLaw as PL
        return classify(squares_sum(sp, PL(s), H_max), eps_div=eps_div).verdict

    if probe(lo) != DIVERGES or probe(hi) != CONVERGES:
        return ExponentResult(math.nan, METHOD_BISECTION, (lo, hi), (INCONCLUSIVE,))
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        v = probe(mid)
        if v == INCONCLUSIVE:
            return ExponentResult(math.nan, METHOD_BISECTION, (lo, hi), (INCONCLUSIVE,))
        if v == DIVERGES:
            lo = mid
        else:
            hi = mid
    return ExponentResult(0.5 * (lo + hi), METHOD_BISECTION, (lo, hi))
