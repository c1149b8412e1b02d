"""Dimension functions, quotient derivation, monotonicity checks, ball transform.

The algebra is deliberately closed: power laws r^s, power-log laws
r^s * log(1/r)^k, and tabulated monotone interpolants.  Quotients
g(r) = r^-l f(r) and limit comparisons are then exact exponent arithmetic
instead of numerics.
"""

from __future__ import annotations

import csv
import math
import re
from bisect import bisect_left
from dataclasses import dataclass

import numpy as np

TABULATED_DECAY_THRESHOLD = 1e-6

NON_INCREASING = "non-increasing"
NON_DECREASING = "non-decreasing"
NOT_MONOTONE = "not-monotone"


class NotADimensionFunction(ValueError):
    """The requested function does not decay to 0 at 0 (or fails monotonicity)."""


class DomainError(ValueError):
    """Evaluation outside (0, domain_max]."""


def _check_domain(r: float, r_max: float) -> None:
    if not (0.0 < r <= r_max):
        raise DomainError(f"r={r} outside domain (0, {r_max}]")


@dataclass(frozen=True)
class PowerLaw:
    """f(r) = r^s on (0, 1], s > 0."""

    s: float

    def __post_init__(self):
        if not self.s > 0:
            raise NotADimensionFunction(f"r^s needs s > 0, got s={self.s}")

    @property
    def domain_max(self) -> float:
        return 1.0

    def eval(self, r: float) -> float:
        _check_domain(r, self.domain_max)
        return r ** self.s

    def eval_many(self, r: np.ndarray) -> np.ndarray:
        return r ** self.s


@dataclass(frozen=True)
class PowerLogLaw:
    """f(r) = r^s * log(1/r)^k.

    Domain is capped at 1/e so the log factor stays >= 1, and further at
    exp(-k/s) for k > 0 so f is non-decreasing on the whole domain.
    s = 0 is allowed with k < 0 (pure negative log power still decays).
    """

    s: float
    k: float

    def __post_init__(self):
        if not (self.s > 0 or (self.s == 0 and self.k < 0)):
            raise NotADimensionFunction(
                f"r^s*log^k needs s > 0, or s = 0 with k < 0; got s={self.s} k={self.k}"
            )

    @property
    def domain_max(self) -> float:
        if self.k > 0:
            return math.exp(-max(1.0, self.k / self.s))
        return math.exp(-1.0)

    def eval(self, r: float) -> float:
        _check_domain(r, self.domain_max)
        return r ** self.s * math.log(1.0 / r) ** self.k

    def eval_many(self, r: np.ndarray) -> np.ndarray:
        return r ** self.s * np.log(1.0 / r) ** self.k


@dataclass(frozen=True)
class Tabulated:
    """Piecewise-linear monotone interpolant through (r_i, f_i) samples.

    Below the first sample the graph continues linearly through the origin,
    which keeps f continuous, non-decreasing and f(r) -> 0.  The decay of the
    samples themselves is enforced at construction: f_0 <= threshold * f_last.
    """

    rs: tuple
    fs: tuple
    decay_threshold: float = TABULATED_DECAY_THRESHOLD

    def __post_init__(self):
        rs, fs = self.rs, self.fs
        if len(rs) != len(fs) or len(rs) < 2:
            raise NotADimensionFunction("need >= 2 samples")
        if any(r2 <= r1 for r1, r2 in zip(rs, rs[1:])) or rs[0] <= 0:
            raise NotADimensionFunction("sample radii must be positive, strictly increasing")
        if any(f < 0 for f in fs) or any(f2 < f1 for f1, f2 in zip(fs, fs[1:])):
            raise NotADimensionFunction("sample values must be non-negative, non-decreasing")
        if fs[0] > self.decay_threshold * fs[-1]:
            raise NotADimensionFunction(
                f"first sample {fs[0]} exceeds {self.decay_threshold} * last sample {fs[-1]}; "
                "tabulated function does not visibly decay to 0"
            )

    @property
    def domain_max(self) -> float:
        return self.rs[-1]

    def eval(self, r: float) -> float:
        _check_domain(r, self.domain_max)
        if r < self.rs[0]:
            return self.fs[0] * (r / self.rs[0])
        i = bisect_left(self.rs, r)
        if self.rs[i] == r:
            return self.fs[i]
        r1, r2 = self.rs[i - 1], self.rs[i]
        f1, f2 = self.fs[i - 1], self.fs[i]
        return f1 + (f2 - f1) * (r - r1) / (r2 - r1)

    def eval_many(self, r: np.ndarray) -> np.ndarray:
        rs = np.concatenate(([0.0], np.asarray(self.rs)))
        fs = np.concatenate(([0.0], np.asarray(self.fs)))
        return np.interp(r, rs, fs)


DimensionFunction = PowerLaw | PowerLogLaw | Tabulated


def derive_quotient(f: DimensionFunction, l: int) -> DimensionFunction:
    """g(r) = r^-l f(r); raises NotADimensionFunction when g fails to decay."""
    if l < 0:
        raise ValueError("l must be a non-negative integer")
    if l == 0:
        return f
    if isinstance(f, PowerLaw):
        if f.s <= l:
            raise NotADimensionFunction(f"r^{f.s} / r^{l} does not decay to 0")
        return PowerLaw(f.s - l)
    if isinstance(f, PowerLogLaw):
        s = f.s - l
        if s < 0 or (s == 0 and f.k >= 0):
            raise NotADimensionFunction(
                f"r^{f.s}*log^{f.k} / r^{l} does not decay to 0"
            )
        return PowerLogLaw(s, f.k)
    gs = tuple(fv * rv ** (-l) for rv, fv in zip(f.rs, f.fs))
    try:
        return Tabulated(f.rs, gs, f.decay_threshold)
    except NotADimensionFunction as exc:
        raise NotADimensionFunction(f"tabulated quotient r^-{l} f(r): {exc}") from exc


def check_monotone_ratio(f: DimensionFunction, k: int, grid: int = 100) -> str:
    """Classify monotonicity of r -> r^-k f(r) on the domain.

    Exact for the law kinds (sign of the exponent gap, with the log
    correction evaluated at the domain edge); grid-certified for Tabulated.
    Constants are reported as non-decreasing.
    """
    if grid < 2:
        raise ValueError("grid must be >= 2")
    if isinstance(f, PowerLaw):
        e = f.s - k
        return NON_DECREASING if e >= 0 else NON_INCREASING
    if isinstance(f, PowerLogLaw):
        e = f.s - k
        j = f.k
        edge = e * math.log(1.0 / f.domain_max)  # derivative sign factor at r_max
        if e == 0:
            if j == 0:
                return NON_DECREASING
            return NON_INCREASING if j > 0 else NON_DECREASING
        if e > 0:
            if j <= 0 or edge >= j:
                return NON_DECREASING
            return NOT_MONOTONE
        # e < 0: decreasing near 0; near the edge the sign is e*L - j
        if j >= 0 or edge <= j:
            return NON_INCREASING
        return NOT_MONOTONE
    lo, hi = f.rs[0], f.rs[-1]
    pts = sorted(set(np.geomspace(lo, hi, grid)) | set(f.rs))
    vals = [f.eval(r) * r ** (-k) for r in pts]
    diffs = [v2 - v1 for v1, v2 in zip(vals, vals[1:])]
    up = all(d >= 0 for d in diffs)
    down = all(d <= 0 for d in diffs)
    if up:
        return NON_DECREASING
    if down:
        return NON_INCREASING
    return NOT_MONOTONE


RATIO_TO_ZERO = "zero"
RATIO_TO_INFINITY = "infinity"
RATIO_FINITE = "finite"


def ratio_limit(f: DimensionFunction, g: DimensionFunction) -> str:
    """Limit of f(r)/g(r) as r -> 0, exact for the law kinds.

    When the ratio tends to 0, H^f(F) = 0 whenever H^g(F) is finite.
    """
    if isinstance(f, Tabulated) or isinstance(g, Tabulated):
        raise ValueError("ratio limit is only exact for law kinds")
    sf, kf = f.s, getattr(f, "k", 0.0)
    sg, kg = g.s, getattr(g, "k", 0.0)
    if sf > sg:
        return RATIO_TO_ZERO
    if sf < sg:
        return RATIO_TO_INFINITY
    if kf < kg:
        return RATIO_TO_ZERO
    if kf > kg:
        return RATIO_TO_INFINITY
    return RATIO_FINITE


def invert(f: DimensionFunction, y: float) -> float:
    """Solve f(r) = y on (0, domain_max]; exact for power laws."""
    if isinstance(f, PowerLaw):
        return y ** (1.0 / f.s)
    if isinstance(f, PowerLogLaw):
        lo, hi = 1e-300, f.domain_max
        if not (0.0 < y <= f.eval(hi)):
            raise DomainError(f"y={y} outside the range of {f}")
        for _ in range(200):
            mid = math.sqrt(lo * hi)
            if f.eval(mid) < y:
                lo = mid
            else:
                hi = mid
            if hi / lo < 1.0 + 1e-15:
                break
        return math.sqrt(lo * hi)
    raise NotADimensionFunction("tabulated functions are not inverted")


# --- ball calculus -----------------------------------------------------------

NORM_SUP = "sup"
NORM_EUCLIDEAN = "euclidean"


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float
    norm: str = NORM_EUCLIDEAN

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")
        if self.norm not in (NORM_SUP, NORM_EUCLIDEAN):
            raise ValueError(f"unknown norm {self.norm!r}")


def transform_radius(radius: float, f: DimensionFunction, m: int) -> float:
    """Radius of the transformed ball: f(r)^(1/m).

    f = r^m is short-circuited to the identity so the fixed point is bitwise.
    """
    if isinstance(f, PowerLaw) and f.s == m:
        return radius
    value = f.eval(radius)
    return value if m == 1 else value ** (1.0 / m)


def ball_transform(ball: Ball, f: DimensionFunction, m: int) -> Ball:
    """B -> B(x, f(r)^(1/m)); same center and norm."""
    r = transform_radius(ball.radius, f, m)
    if r == ball.radius:
        return ball
    return Ball(ball.center, r, ball.norm)


# --- config-string grammar ---------------------------------------------------

_LAW_RE = re.compile(
    r"^r\^(?P<s>[-+]?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?)"
    r"(?:\*log\^(?P<k>[-+]?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?))?$"
)


def parse_dimension_function(text: str) -> DimensionFunction:
    """Parse "r^s", "r^s*log^k", or "table:<path.csv>" (CSV columns r,f)."""
    text = text.strip()
    if text.startswith("table:"):
        path = text[len("table:"):]
        rs, fs = [], []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                try:
                    rs.append(float(row[0]))
                except ValueError:  # header row
                    continue
                fs.append(float(row[1]))
        return Tabulated(tuple(rs), tuple(fs))
    match = _LAW_RE.match(text)
    if not match:
        raise ValueError(f"cannot parse dimension function {text!r}")
    s = float(match.group("s"))
    if match.group("k") is None:
        return PowerLaw(s)
    return PowerLogLaw(s, float(match.group("k")))


def format_dimension_function(f: DimensionFunction) -> str:
    if isinstance(f, PowerLaw):
        return f"r^{f.s:g}"
    if isinstance(f, PowerLogLaw):
        return f"r^{f.s:g}*log^{f.k:g}"
    return f"table:<{len(f.rs)} samples>"
