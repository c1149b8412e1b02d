"""Resonant planes, delta-neighborhoods, hit lists, covering and shift counts.

Membership in the approximable set uses the torus metric ||.|| (distance to
the nearest integer); neighborhood geometry works in the cube with explicit
integer shifts p.  equivalence_check is the bridge between the two pictures
and is part of the test suite.  All inequalities are strict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from . import _kernels
from .problems import LinearFormsProblem, PsiPowerLaw, iter_ball

KIND_LINEAR = "linear"
KIND_SQUARED = "squared"


@dataclass(frozen=True)
class ResonantPlane:
    """a.x_j - b_j = p_j per form; Squared kind uses coefficients a^2 and shift p^2."""

    a: tuple
    p: tuple
    b: tuple = ()
    kind: str = KIND_LINEAR

    def __post_init__(self):
        a = tuple(int(x) for x in self.a)
        if all(x == 0 for x in a):
            raise ValueError("a must be nonzero")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "p", tuple(int(x) for x in self.p))
        if self.kind == KIND_SQUARED:
            if len(a) != 2 or len(self.p) != 1:
                raise ValueError("squared planes live in n=2, m=1")
            object.__setattr__(self, "b", (0.0,) * len(self.p))
        else:
            b = tuple(float(x) for x in self.b) if self.b else (0.0,) * len(self.p)
            if len(b) != len(self.p):
                raise ValueError("b and p must have m entries each")
            object.__setattr__(self, "b", b)

    @property
    def coefficients(self) -> np.ndarray:
        a = np.asarray(self.a, dtype=np.float64)
        return a * a if self.kind == KIND_SQUARED else a

    @property
    def offsets(self) -> np.ndarray:
        p = np.asarray(self.p, dtype=np.float64)
        if self.kind == KIND_SQUARED:
            return p * p
        return np.asarray(self.b) + p


@dataclass(frozen=True)
class Neighborhood:
    plane: ResonantPlane
    delta: float

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("delta must be >= 0; delta = 0 is the empty set")


def _as_point(X, m: int, n: int) -> np.ndarray:
    pt = np.asarray(X, dtype=np.float64).reshape(m, n)
    return pt


def satisfies(X, a, problem: LinearFormsProblem) -> bool:
    """max_j ||a.x_j - b_j|| < psi(a), strict; psi(a) = 0 never holds."""
    psi = problem.psi_value(a)
    if psi == 0.0:
        return False
    x = _as_point(X, problem.m, problem.n)
    av = np.asarray(a, dtype=np.float64)
    v = x @ av - np.asarray(problem.b)
    return bool(np.max(np.abs(v - np.rint(v))) < psi)


def neighborhood_membership(X, nb: Neighborhood) -> bool:
    """Euclidean distance of every column to its hyperplane below delta (strict)."""
    if nb.delta == 0.0:
        return False
    w = nb.plane.coefficients
    c = nb.plane.offsets
    x = _as_point(X, len(nb.plane.p), len(nb.plane.a))
    nrm = math.sqrt(float(w @ w))
    dists = np.abs(x @ w - c) / nrm
    return bool(np.max(dists) < nb.delta)


# --- relevant shifts ----------------------------------------------------------

@dataclass
class ShiftRange:
    """Per-coordinate inclusive integer ranges of shifts whose neighborhood meets
    the unit cube, with boundary slack (conservative superset)."""

    lows: tuple
    highs: tuple
    c_shift: float
    height: int

    @property
    def count(self) -> int:
        return int(np.prod([hi - lo + 1 for lo, hi in zip(self.lows, self.highs)]))

    @property
    def certified(self) -> bool:
        return self.count <= self.c_shift * float(self.height) ** len(self.lows)

    def __iter__(self):
        ranges = [range(lo, hi + 1) for lo, hi in zip(self.lows, self.highs)]
        return iter(product(*ranges))

    def coordinate_contains(self, j: int, p: int) -> bool:
        return self.lows[j] <= p <= self.highs[j]


def c_shift_constant(n: int, m: int, psi_max: float = 1.0) -> float:
    """count_j <= sum|a_i| + 2 W + 3 <= (n + 2 psi_max + 3) |a| per coordinate."""
    return float(n + 2.0 * psi_max + 3.0) ** m


def relevant_shifts(a, b, delta: float) -> ShiftRange:
    """Integer shifts p for which the delta-neighborhood can meet the cube.

    Ranges come from interval arithmetic on a.x over [0,1]^n, widened by
    delta * |a|_2 in value space; the bound count <= C |a|^m is certified with
    C depending only on (n, m) and the psi regime.
    """
    a = np.asarray(a, dtype=np.float64)
    if not np.any(a):
        raise ValueError("a must be nonzero")
    b = np.asarray(b, dtype=np.float64)
    h = int(np.max(np.abs(a)))
    w = delta * math.sqrt(float(a @ a))
    lo_dot = float(np.minimum(a, 0.0).sum())
    hi_dot = float(np.maximum(a, 0.0).sum())
    lows = tuple(int(math.floor(lo_dot - bj - w)) for bj in b)
    highs = tuple(int(math.ceil(hi_dot - bj + w)) for bj in b)
    c = c_shift_constant(len(a), len(b), psi_max=max(1.0, w))
    return ShiftRange(lows, highs, c, h)


def relevant_shifts_squared(a, delta: float) -> ShiftRange:
    """Shifts p >= 0 with p^2 within reach of a^2 . x over the unit square."""
    a = np.asarray(a, dtype=np.float64)
    w2 = a * a
    vmax = float(w2.sum())
    w = delta * math.sqrt(float(w2 @ w2))
    h = int(np.max(np.abs(a)))
    p_hi = int(math.floor(math.sqrt(max(0.0, vmax + w)))) + 1
    return ShiftRange((0,), (p_hi,), float(math.sqrt(2.0) + 3.0), h)


# --- the torus/cube equivalence ------------------------------------------------

def _psi_by_shell(problem, H: int) -> np.ndarray:
    if isinstance(problem.psi, PsiPowerLaw):
        return np.arange(1, H + 1, dtype=np.float64) ** (-problem.psi.tau)
    raise ValueError("shell-cached psi needs a radial power law")


def equivalence_check(X, problem: LinearFormsProblem, H: int) -> bool:
    """Reference implementation: satisfies <=> some enumerated shift is within
    delta = psi(a)/sqrt(a.a) of every column, for every 0 < |a| <= H."""
    x = _as_point(X, problem.m, problem.n)
    for a in iter_ball(problem.n, 1, H):
        psi = problem.psi_value(a)
        lhs = satisfies(x, a, problem)
        rhs = False
        if psi > 0.0:
            nrm = math.sqrt(sum(ai * ai for ai in a))
            delta = psi / nrm
            shifts = relevant_shifts(a, problem.b, delta)
            per_form = []
            for j in range(problem.m):
                v = float(np.dot(x[j], a)) - problem.b[j]
                ok = any(
                    abs(v - p) / nrm < delta
                    for p in range(shifts.lows[j], shifts.highs[j] + 1)
                )
                per_form.append(ok)
            rhs = all(per_form)
        if lhs != rhs:
            return False
    return True


def equivalence_scan_points(problem: LinearFormsProblem, points: np.ndarray, H: int) -> np.ndarray:
    """Vectorized equivalence self-test; returns a per-point code array
    (0 ok, 1 membership mismatch, 2 nearest shift missed by the range)."""
    if problem.n > 2:
        raise ValueError("fast scan supports n <= 2")
    if not problem.support.is_all:
        raise ValueError("fast scan runs on full support")
    X = points.reshape(-1, problem.m, problem.n)
    psi = _psi_by_shell(problem, H)
    return _kernels.equivalence_scan(X, problem.b, psi, H, problem.n, False)


# --- finite-window hit lists ----------------------------------------------------

def hit_list(X, problem: LinearFormsProblem, H1: int, H2: int):
    """All a with H1 <= |a| <= H2, psi(a) > 0, satisfying the system at X.

    Returns (a, psi(a), max_j ||a.x_j - b_j||) rows sorted lexicographically.
    """
    if H1 > H2:
        raise ValueError("need H1 <= H2")
    x = _as_point(X, problem.m, problem.n)
    rows = []
    for a in iter_ball(problem.n, max(1, H1), H2):
        psi = problem.psi_value(a)
        if psi == 0.0:
            continue
        v = x @ np.asarray(a, dtype=np.float64) - np.asarray(problem.b)
        dist = float(np.max(np.abs(v - np.rint(v))))
        if dist < psi:
            rows.append((a, psi, dist))
    rows.sort(key=lambda r: r[0])
    return rows


# --- covering of a neighborhood --------------------------------------------------

@dataclass
class CoverReport:
    count: int
    radius: float
    ratio: float  # |a| / psi(a)
    exponent: int  # (n-1) m
    c_geom: float
    certified: bool
    per_form_counts: tuple
    balls: list | None = None


def c_geom_constant(n: int, m: int) -> float:
    """Per-form bound: columns <= (1/r + 1)^(n-1) cells, each column crossed by
    <= 2 sqrt(n) + n + 1 cells of the dominant axis; fixed per (n, m)."""
    return float((2.0 * math.sqrt(n) + n + 1.0) * 2.0 ** (n - 1)) ** m


def _cover_slab_2d_counts(a, c, halfwidth, r):
    """Vectorized cell count for the open slab {|a.x - c| < halfwidth}."""
    ncells = int(math.ceil(1.0 / r))
    i_dom = 0 if abs(a[0]) >= abs(a[1]) else 1
    w_dom, w_tan = float(a[i_dom]), float(a[1 - i_dom])
    cols = np.arange(ncells, dtype=np.float64)
    tlo = cols * r
    thi = np.minimum((cols + 1.0) * r, 1.0)
    v1, v2 = w_tan * tlo, w_tan * thi
    vlo, vhi = np.minimum(v1, v2), np.maximum(v1, v2)
    lo = (c - halfwidth - vhi) / w_dom
    hi = (c + halfwidth - vlo) / w_dom
    lo, hi = np.minimum(lo, hi), np.maximum(lo, hi)
    lo = np.maximum(lo, 0.0)
    hi = np.minimum(hi, 1.0)
    live = hi > lo
    i0 = np.floor(lo / r)
    i0 = np.where((i0 + 1.0) * r <= lo, i0 + 1.0, i0)
    i0 = np.where((i0 + 1.0) * r <= lo, i0 + 1.0, i0)
    i1 = np.minimum(np.floor(hi / r), ncells - 1)
    i1 = np.where(i1 * r >= hi, i1 - 1.0, i1)
    i1 = np.where(i1 * r >= hi, i1 - 1.0, i1)
    cells = np.where(live, np.maximum(0.0, i1 - i0 + 1.0), 0.0)
    return int(cells.sum())


def _cover_slab_2d(a, c, halfwidth, r, collect):
    """Count side-r grid cells of the unit square meeting the open slab
    {|a.x - c| < halfwidth}; cells touching only the closed boundary stay out."""
    if not collect:
        return _cover_slab_2d_counts(a, c, halfwidth, r), []
    ncells = int(math.ceil(1.0 / r))
    i_dom = 0 if abs(a[0]) >= abs(a[1]) else 1
    i_tan = 1 - i_dom
    w_dom, w_tan = float(a[i_dom]), float(a[i_tan])
    count = 0
    balls = []
    for col in range(ncells):
        tlo, thi = col * r, min((col + 1) * r, 1.0)
        v1, v2 = w_tan * tlo, w_tan * thi
        vlo, vhi = min(v1, v2), max(v1, v2)
        lo = (c - halfwidth - vhi) / w_dom
        hi = (c + halfwidth - vlo) / w_dom
        if lo > hi:
            lo, hi = hi, lo
        lo, hi = max(lo, 0.0), min(hi, 1.0)
        if hi <= lo:
            continue
        i0 = int(math.floor(lo / r))
        while (i0 + 1) * r <= lo:
            i0 += 1
        i1 = min(int(math.floor(hi / r)), ncells - 1)
        while i1 >= 0 and i1 * r >= hi:
            i1 -= 1
        if i1 < i0:
            continue
        count += i1 - i0 + 1
        if collect:
            for i in range(i0, i1 + 1):
                cell = [0.0, 0.0]
                cell[i_dom] = (i + 0.5) * r
                cell[i_tan] = (col + 0.5) * r
                balls.append(tuple(cell))
    return count, balls


def cover_neighborhood(nb: Neighborhood, r: float, collect_balls: bool = False) -> CoverReport:
    """Concrete grid-aligned cover of the neighborhood inside the cube by
    sup-norm balls of radius r, with the certified count bound.

    The construction tiles the cube with side-r cells (each sits inside the
    sup-ball of radius r at its center) and keeps cells meeting each form's
    slab; the full cover is the product over forms.
    """
    if r <= 0:
        raise ValueError("ball radius must be positive")
    if not math.isclose(r, nb.delta, rel_tol=1e-9):
        raise ValueError("cover is built at r = nb.delta = psi(a)/|a|")
    plane = nb.plane
    n = len(plane.a)
    m = len(plane.p)
    w = plane.coefficients
    offs = plane.offsets
    nrm = math.sqrt(float(w @ w))
    halfwidth = nb.delta * nrm  # value-space halfwidth of each slab
    per_form = []
    balls_per_form = []
    for j in range(m):
        if n == 1:
            # the neighborhood is itself a ball of radius delta per form
            per_form.append(1)
            balls_per_form.append([(offs[j] / w[0],)])
        elif n == 2:
            cnt, balls = _cover_slab_2d(w, float(offs[j]), halfwidth, r, collect_balls)
            per_form.append(cnt)
            balls_per_form.append(balls)
        else:
            raise ValueError("covers are implemented for n <= 2")
    count = int(np.prod(per_form))
    ratio = 1.0 / nb.delta  # |a|/psi(a), since the cover runs at delta = psi/|a|
    exponent = (n - 1) * m
    cg = c_geom_constant(n, m)
    certified = count <= cg * ratio ** exponent
    balls = None
    if collect_balls and count <= 100_000:
        balls = []
        for combo in product(*balls_per_form):
            center = tuple(c for cell in combo for c in cell)
            balls.append(center)
    return CoverReport(count, r, ratio, exponent, cg, certified, tuple(per_form), balls)
