"""Monte Carlo measure probes, zero-one trend detection, box-counting dimension.

Sampling is counter-based (Philox keyed by the seed), drawn once up front, so
reports are bit-identical for a fixed seed regardless of thread count.  Box
counting uses exact slab/box intersection masks for the two-dimensional
problems and subgrid/center probes otherwise; the finite-generation bias is
carried in every report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .dimfun import NORM_SUP, DimensionFunction
from .problems import (
    LinearFormsProblem,
    PsiPowerLaw,
    PsiTable,
    SquaresProblem,
    iter_ball,
    shell_count,
)
from .series import CONVERGES, DIVERGES, classify, schmidt_sum, _Kahan

TOWARD_ONE = "toward-one"
TOWARD_ZERO = "toward-zero"
INCONCLUSIVE = "inconclusive"

BIAS_NOTE = (
    "finite-generation proxy: G_K is a superset of the limsup set restricted to "
    "the probed windows; measured slopes and fractions carry a K-dependent bias "
    "that this report does not extrapolate away"
)


def uniform_samples(seed: int, count: int, dim: int) -> np.ndarray:
    gen = np.random.Generator(np.random.Philox(int(seed)))
    return gen.random((count, dim))


def wilson_interval(hits: int, n: int, z: float = 1.96) -> tuple:
    if n == 0:
        return (0.0, 1.0)
    phat = hits / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


@dataclass
class MCMeasureReport:
    window: tuple
    samples: int
    hits: int
    fraction: float
    wilson_ci: tuple
    seed: int
    out_of_theorem: bool = False

    def to_dict(self) -> dict:
        return {
            "window": list(self.window),
            "samples": self.samples,
            "hits": self.hits,
            "fraction": self.fraction,
            "wilson_ci": list(self.wilson_ci),
            "seed": self.seed,
            "out_of_theorem": self.out_of_theorem,
        }


def window_psi_by_shell(problem, h1: int, h2: int) -> np.ndarray:
    hs = np.arange(h1, h2 + 1, dtype=np.float64)
    if isinstance(problem, SquaresProblem):
        if isinstance(problem.psi, PsiPowerLaw):
            return hs ** (-problem.psi.tau)
        return np.array([problem.psi_at(int(h)) for h in hs])
    if isinstance(problem.psi, PsiPowerLaw):
        return hs ** (-problem.psi.tau)
    raise ValueError("per-shell psi cache needs a radial law")


def window_hits(problem, points: np.ndarray, h1: int, h2: int) -> np.ndarray:
    """Boolean mask: sample hit by at least one a with h1 <= |a| <= h2."""
    if isinstance(problem, SquaresProblem):
        psi = window_psi_by_shell(problem, h1, h2)
        return _kernels.squares_window_hits(points, psi, h1)

    p = problem
    X = points.reshape(-1, p.m, p.n)
    fast_support = p.support.is_all or (not p.support.custom and p.support.zi <= {1, 2})
    if isinstance(p.psi, PsiPowerLaw) and p.n <= 2 and fast_support:
        if p.support.zi == {2} and p.n == 2:
            X = np.ascontiguousarray(X[:, :, ::-1])  # Z_2 is Z_1 with columns swapped
            z1 = True
        else:
            z1 = bool(p.support.zi)
        psi = window_psi_by_shell(p, h1, h2)
        sym = not any(p.b)
        return _kernels.lf_window_hits(X, p.b, psi, h1, p.n, z1, sym)

    # general path: enumerate explicitly (tables and registry supports)
    hit = np.zeros(X.shape[0], dtype=bool)
    b = np.asarray(p.b)
    if isinstance(p.psi, PsiTable):
        vectors = [(a, p.psi_value(a)) for a, _ in p.psi.entries
                   if h1 <= max(abs(x) for x in a) <= h2]
    else:
        vectors = ((a, p.psi_value(a)) for a in iter_ball(p.n, h1, h2))
    for a, psi in vectors:
        if psi == 0.0:
            continue
        alive = np.flatnonzero(~hit)
        if alive.size == 0:
            break
        T = X[alive] @ np.asarray(a, dtype=np.float64) - b
        D = np.abs(T - np.rint(T))
        hit[alive[np.all(D < psi, axis=1)]] = True
    return hit


def _ambient_dim(problem) -> int:
    return problem.ambient_dim


def _out_of_theorem(problem) -> bool:
    return isinstance(problem, LinearFormsProblem) and not problem.theorem_mode


def mc_measure(problem, H1: int, H2: int, samples: int, seed: int) -> MCMeasureReport:
    """Fraction of uniform points hit by some a in the height window."""
    if H1 > H2 or samples < 1:
        raise ValueError("need H1 <= H2 and samples >= 1")
    pts = uniform_samples(seed, samples, _ambient_dim(problem))
    mask = window_hits(problem, pts, H1, H2)
    hits = int(mask.sum())
    return MCMeasureReport((H1, H2), samples, hits, hits / samples,
                           wilson_interval(hits, samples), seed,
                           _out_of_theorem(problem))


# --- union bounds -------------------------------------------------------------

def window_union_bound(problem, h1: int, h2: int) -> float:
    """First Borel-Cantelli direction: sum over the window of the exact torus
    measure bound per a, (2 psi(a))^m for linear forms."""
    acc = _Kahan()
    if isinstance(problem, SquaresProblem):
        # measure of {|a^2.x - p^2| < psi} inside the square is <= 2 psi / max(a_i^2)
        for h in range(h1, h2 + 1):
            psi = problem.psi_at(h)
            if psi == 0.0:
                continue
            A = _kernels.shell_vectors(2, h).astype(np.float64)
            W = A * A
            vmax = W.sum(axis=1)
            p_count = np.floor(np.sqrt(vmax + psi)) + 2.0
            per_a = np.minimum(1.0, 2.0 * psi / W.max(axis=1))
            acc.add(float(np.sum(p_count * per_a)))
        return acc.total
    p = problem
    if isinstance(p.psi, PsiPowerLaw) and not p.support.custom:
        from .problems import zi_shell_count

        pinned = len(p.support.zi)
        for h in range(h1, h2 + 1):
            cnt = shell_count(p.n, h) if pinned == 0 else zi_shell_count(p.n, h, pinned)
            acc.add(cnt * min(1.0, 2.0 * p.psi.at_height(h)) ** p.m)
        return acc.total
    total_iter = (p.psi.entries if isinstance(p.psi, PsiTable)
                  else ((a, None) for a in iter_ball(p.n, h1, h2)))
    for a, _ in total_iter:
        h = max(abs(x) for x in a)
        if not h1 <= h <= h2:
            continue
        psi = p.psi_value(a)
        if psi > 0:
            acc.add(min(1.0, 2.0 * psi) ** p.m)
    return acc.total


# --- zero-one probe -------------------------------------------------------------

def dyadic_window(k: int) -> tuple:
    """Window k holds heights 2^(k-1) <= h <= 2^k - 1."""
    return (1 << (k - 1), (1 << k) - 1)


@dataclass
class ZeroOneReport:
    verdict: str
    windows: list
    cumulative: list  # MCMeasureReport per window upper end, over [1, hi]
    per_window: list | None  # MCMeasureReport per window, non-cumulative
    union_bounds: list | None
    series_verdict: str
    samples: int
    seed: int
    bound_satisfied: bool | None = None
    notes: str = ""

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "windows": [list(w) for w in self.windows],
            "cumulative": [r.to_dict() for r in self.cumulative],
            "per_window": [r.to_dict() for r in self.per_window] if self.per_window else None,
            "union_bounds": self.union_bounds,
            "series_verdict": self.series_verdict,
            "samples": self.samples,
            "seed": self.seed,
            "bound_satisfied": self.bound_satisfied,
            "notes": self.notes,
        }


def _criterion_series(problem, H: int):
    if isinstance(problem, SquaresProblem):
        # the squares zero-one criterion is the plain scalar sum of psi(h)
        from .series import _accumulate

        return _accumulate(lambda h: problem.psi_at(h), H, "squares-measure")
    return schmidt_sum(problem, H)


def zero_one_probe(problem, ks, samples: int, seed: int,
                   force_per_window: bool = False) -> ZeroOneReport:
    """Trend probe for the zero-one dichotomy over dyadic windows.

    Toward-zero: the criterion series converges and every non-cumulative
    window fraction sits under its union bound plus 3 CI half-widths.
    Toward-one: cumulative fractions are non-decreasing with final > 0.9.
    Per-window scans are skipped in the divergent case unless forced (they
    are the expensive half and do not enter the toward-one verdict).
    """
    ks = list(ks)
    if len(ks) < 4:
        raise ValueError("need at least 4 windows")
    windows = [dyadic_window(k) for k in ks]
    pts = uniform_samples(seed, samples, _ambient_dim(problem))
    oot = _out_of_theorem(problem)

    H_classify = max(windows[-1][1] + 1, 1 << 14)
    if isinstance(getattr(problem, "psi", None), PsiTable):
        H_classify = max(256, windows[-1][1] + 1)
    series_verdict = classify(_criterion_series(problem, H_classify)).verdict

    per_window = None
    union_bounds = None
    bound_ok = None
    if series_verdict == CONVERGES or force_per_window:
        per_window = []
        union_bounds = []
        for lo, hi in windows:
            mask = window_hits(problem, pts, lo, hi)
            hits = int(mask.sum())
            per_window.append(MCMeasureReport((lo, hi), samples, hits, hits / samples,
                                              wilson_interval(hits, samples), seed, oot))
            union_bounds.append(window_union_bound(problem, lo, hi))
        bound_ok = all(
            rep.fraction <= bound + 3.0 * (rep.wilson_ci[1] - rep.wilson_ci[0]) / 2.0
            for rep, bound in zip(per_window, union_bounds)
        )

    cumulative = []
    for _, hi in windows:
        mask = window_hits(problem, pts, 1, hi)
        hits = int(mask.sum())
        cumulative.append(MCMeasureReport((1, hi), samples, hits, hits / samples,
                                          wilson_interval(hits, samples), seed, oot))

    fracs = [r.fraction for r in cumulative]
    if series_verdict == CONVERGES:
        verdict = TOWARD_ZERO if bound_ok else INCONCLUSIVE
    elif series_verdict == DIVERGES:
        monotone = all(f2 >= f1 for f1, f2 in zip(fracs, fracs[1:]))
        verdict = TOWARD_ONE if monotone and fracs[-1] > 0.9 else INCONCLUSIVE
    else:
        verdict = INCONCLUSIVE

    notes = ""
    if isinstance(problem, LinearFormsProblem) and isinstance(problem.psi, PsiPowerLaw):
        if problem.psi.at_height(1) >= 0.5:
            notes = ("psi(1) >= 1/2 saturates the first shell (every point is within "
                     "||.|| <= 1/2 of the a = e_1 plane), so cumulative coverage starts at 1")
    return ZeroOneReport(verdict, windows, cumulative, per_window, union_bounds,
                         series_verdict, samples, seed, bound_ok, notes)


# --- generation sets -------------------------------------------------------------

@dataclass
class GenerationSet:
    """Finite-K truncation of the limsup set: hit in every height window."""

    problem: object
    windows: list

    def __post_init__(self):
        for (l1, h1), (l2, h2) in zip(self.windows, self.windows[1:]):
            if not (l1 <= h1 < l2 <= h2):
                raise ValueError("windows must be disjoint and increasing")

    @property
    def K(self) -> int:
        return len(self.windows)

    def membership(self, points: np.ndarray) -> np.ndarray:
        out = np.ones(points.shape[0], dtype=bool)
        for lo, hi in self.windows:
            idx = np.flatnonzero(out)
            if idx.size == 0:
                break
            out[idx] &= window_hits(self.problem, points[idx], lo, hi)
        return out

    def truncate(self, K: int) -> "GenerationSet":
        return GenerationSet(self.problem, self.windows[:K])


def generation_set(problem, K: int, first_k: int = 1, windows=None) -> GenerationSet:
    if windows is None:
        windows = [dyadic_window(k) for k in range(first_k, first_k + K)]
    return GenerationSet(problem, list(windows))


# --- box counting ----------------------------------------------------------------

SAMPLING_EXACT = "exact"
SAMPLING_CENTER = "center"


@dataclass
class BoxCountReport:
    scales: list
    counts: list
    slope: float
    residual: float
    fit_range: tuple
    sampling: str
    windows: list
    bias_note: str = BIAS_NOTE

    def to_dict(self) -> dict:
        return {
            "scales": self.scales,
            "counts": self.counts,
            "slope": self.slope,
            "residual": self.residual,
            "fit_range": list(self.fit_range),
            "sampling": self.sampling,
            "windows": [list(w) for w in self.windows],
            "bias_note": self.bias_note,
        }


def _exact_window_mask(problem, lo: int, hi: int, R: int) -> np.ndarray:
    """Exact slab/box rasterization of the window union onto an R x R grid."""
    mask = np.zeros((R, R), dtype=bool)
    if isinstance(problem, SquaresProblem):
        for h in range(lo, hi + 1):
            psi = problem.psi_at(h)
            if psi <= 0:
                continue
            A = _kernels.shell_vectors(2, h).astype(np.float64)
            W = A * A
            vmax = W.sum(axis=1)
            pmax = np.floor(np.sqrt(vmax + psi)).astype(np.int64)
            counts = pmax + 1
            rows = np.repeat(np.arange(len(A)), counts)
            offs = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
            C = offs.astype(np.float64) ** 2
            _kernels.raster_strips(mask, W[rows, 0], W[rows, 1], C,
                                   np.full(len(rows), psi))
        return mask
    p = problem
    if p.n == 2 and p.m == 1:
        z1 = p.support.zi == {1}
        for h in range(lo, hi + 1):
            psi = p.psi.at_height(h) if isinstance(p.psi, PsiPowerLaw) else None
            A = _kernels.shell_vectors(2, h, z1_only=z1).astype(np.float64)
            psis = (np.full(len(A), psi) if psi is not None
                    else np.array([p.psi_value(tuple(int(v) for v in a)) for a in A]))
            keep = psis > 0
            A, psis = A[keep], psis[keep]
            if not len(A):
                continue
            lo_dot = np.minimum(A, 0.0).sum(axis=1)
            hi_dot = np.maximum(A, 0.0).sum(axis=1)
            p_lo = np.floor(lo_dot - p.b[0] - psis).astype(np.int64)
            p_hi = np.ceil(hi_dot - p.b[0] + psis).astype(np.int64)
            counts = p_hi - p_lo + 1
            rows = np.repeat(np.arange(len(A)), counts)
            offs = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
            C = p.b[0] + (p_lo[rows] + offs).astype(np.float64)
            _kernels.raster_strips(mask, A[rows, 0], A[rows, 1], C, psis[rows])
        return mask
    if p.n == 1 and p.m == 2:
        for h in range(lo, hi + 1):
            for a in (h, -h):
                psi = p.psi_value((a,))
                if psi <= 0:
                    continue
                ivals = []
                for j in range(2):
                    lo_p = int(math.floor(min(0.0, float(a)) - p.b[j] - psi))
                    hi_p = int(math.ceil(max(0.0, float(a)) - p.b[j] + psi))
                    pts = [((p.b[j] + q - psi) / a, (p.b[j] + q + psi) / a)
                           for q in range(lo_p, hi_p + 1)]
                    ivals.append([(min(u, v), max(u, v)) for u, v in pts])
                x0, x1 = zip(*ivals[0])
                y0, y1 = zip(*ivals[1])
                X0 = np.repeat(x0, len(y0))
                X1 = np.repeat(x1, len(y0))
                Y0 = np.tile(y0, len(x0))
                Y1 = np.tile(y1, len(x0))
                _kernels.raster_rects(mask, X0, X1, Y0, Y1)
        return mask
    raise ValueError("exact rasterization covers the two-dimensional problems")


def _probe_counts(gset: GenerationSet, R: int, subgrid: int) -> int:
    dim = _ambient_dim(gset.problem)
    total_pts = (R * subgrid) ** dim
    if total_pts > 1 << 24:
        raise ValueError(f"probe grid of {total_pts} points exceeds the guard; "
                         "use exact sampling or coarser scales")
    axes = [(np.arange(R * subgrid) + 0.5) / (R * subgrid)] * dim
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
    member = gset.membership(grid)
    member = member.reshape((R * subgrid,) * dim)
    # a box counts when any of its subgrid probes is a member
    for axis in range(dim):
        shape = list(member.shape)
        shape[axis] = R
        member = member.reshape(shape[:axis] + [R, subgrid] + shape[axis + 1:]).any(axis=axis + 1)
    return int(member.sum())


def _count_at_scale(gset: GenerationSet, delta: float, sampling: str) -> int:
    R = int(round(1.0 / delta))
    dim = _ambient_dim(gset.problem)
    if sampling == SAMPLING_EXACT:
        if dim != 2:
            raise ValueError("exact sampling needs a two-dimensional ambient space")
        acc = None
        for lo, hi in gset.windows:
            m = _exact_window_mask(gset.problem, lo, hi, R)
            acc = m if acc is None else (acc & m)
        return int(acc.sum())
    if sampling == SAMPLING_CENTER:
        return _probe_counts(gset, R, 1)
    if sampling.startswith("subgrid:"):
        return _probe_counts(gset, R, int(sampling.split(":")[1]))
    raise ValueError(f"unknown sampling mode {sampling!r}")


def box_count(gset: GenerationSet, deltas, sampling: str = SAMPLING_EXACT,
              fit_range: tuple | None = None) -> BoxCountReport:
    """N(delta) over a geometric scale list plus the log-log slope fit."""
    deltas = list(deltas)
    if len(deltas) < 5:
        raise ValueError("need at least 5 scales")
    counts = [_count_at_scale(gset, d, sampling) for d in deltas]
    fit = fit_range or (0, len(deltas))
    sl = slice(*fit)
    x = np.log(1.0 / np.asarray(deltas[sl], dtype=float))
    y = np.log(np.maximum(np.asarray(counts[sl], dtype=float), 1.0))
    coef = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - np.polyval(coef, x)) ** 2)))
    return BoxCountReport([float(d) for d in deltas], counts, float(coef[0]),
                          resid, fit, sampling, gset.windows)


@dataclass
class ContentReport:
    f_label: str
    rho: float
    norm: str
    boxes: int
    ball_radius: float
    value: float


def content_upper_bound(gset: GenerationSet, f: DimensionFunction, rho: float,
                        norm: str = NORM_SUP,
                        sampling: str = SAMPLING_EXACT) -> ContentReport:
    """Sum of f(ball radius) over the occupied-box cover at scale rho.

    Balls circumscribe the boxes: radius rho/2 in the sup norm, rho sqrt(k)/2
    in the Euclidean norm.  This upper-bounds the rho-content H^f_rho of the
    probed set (any cover bounds the infimum).
    """
    from .dimfun import format_dimension_function

    dim = _ambient_dim(gset.problem)
    boxes = _count_at_scale(gset, rho, sampling)
    radius = rho / 2.0 if norm == NORM_SUP else rho * math.sqrt(dim) / 2.0
    return ContentReport(format_dimension_function(f), rho, norm, boxes, radius,
                         boxes * f.eval(radius))
