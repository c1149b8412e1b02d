"""Approximation problem specs: linear-forms problems, the squares set, psi families.

Heights are always sup-norm heights |a| = max|a_i|.  Support restrictions
(Z_i sets, fixed registry predicates) zero out psi off the support, which is
how every downstream operation (sums, hit tests, slices) sees them.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from itertools import product
from pathlib import Path

ENUMERATION_GUARD = 60_000_000  # max vectors a brute-force enumeration may touch


def _is_prime(n: int) -> bool:
    n = abs(n)
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


# Custom supports come from this fixed registry so configs stay serializable.
CUSTOM_SUPPORTS = {
    "coordinates-all-prime": lambda a: all(_is_prime(ai) for ai in a),
    "coordinates-all-odd": lambda a: all(ai % 2 != 0 for ai in a),
}


@dataclass(frozen=True)
class Support:
    """Support predicate: intersection of Z_i sets and an optional registry predicate.

    zi holds the indices i (1-based) with |a| = |a_i| required; vectors on the
    boundary of several Z_i belong to every one of them.
    """

    zi: frozenset = frozenset()
    custom: str = ""

    def __post_init__(self):
        if self.custom and self.custom not in CUSTOM_SUPPORTS:
            raise ValueError(f"unknown custom support {self.custom!r}; "
                             f"registry has {sorted(CUSTOM_SUPPORTS)}")

    def contains(self, a) -> bool:
        h = max(abs(int(ai)) for ai in a)
        if h == 0:
            return False
        for i in self.zi:
            if abs(int(a[i - 1])) != h:
                return False
        if self.custom:
            return CUSTOM_SUPPORTS[self.custom](a)
        return True

    @property
    def is_all(self) -> bool:
        return not self.zi and not self.custom

    def describe(self) -> str:
        if self.is_all:
            return "all"
        parts = [f"zi:{i}" for i in sorted(self.zi)]
        if self.custom:
            parts.append(f"custom:{self.custom}")
        return "+".join(parts)


SUPPORT_ALL = Support()


@dataclass(frozen=True)
class PsiPowerLaw:
    """psi(a) = |a|^-tau."""

    tau: float

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive so psi -> 0")

    def at_height(self, h: int) -> float:
        return float(h) ** (-self.tau)


@dataclass(frozen=True)
class PsiTable:
    """Finitely supported psi: explicit values on integer vectors, zero elsewhere."""

    entries: tuple  # ((a tuple, value), ...) sorted by (|a|, a)

    def __post_init__(self):
        if any(v < 0 for _, v in self.entries):
            raise ValueError("psi values must be non-negative")
        object.__setattr__(
            self,
            "entries",
            tuple(sorted(self.entries, key=lambda e: (max(abs(x) for x in e[0]), e[0]))),
        )

    def lookup(self):
        return dict(self.entries)

    @property
    def max_height(self) -> int:
        if not self.entries:
            return 0
        return max(max(abs(x) for x in a) for a, _ in self.entries)


PsiSpec = PsiPowerLaw | PsiTable


@dataclass(frozen=True)
class LinearFormsProblem:
    """The tuple (n, m, b, psi) defining the system ||a.x_j - b_j|| < psi(a)."""

    n: int
    m: int
    psi: PsiSpec
    b: tuple = ()
    support: Support = SUPPORT_ALL

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("need n >= 1 and m >= 1")
        b = tuple(float(x) for x in self.b) if self.b else (0.0,) * self.m
        if len(b) != self.m:
            raise ValueError(f"b must have m={self.m} entries")
        object.__setattr__(self, "b", b)
        if any(i < 1 or i > self.n for i in self.support.zi):
            raise ValueError("Z_i index out of range")

    @property
    def theorem_mode(self) -> bool:
        """n + m > 2; smaller cases are exploratory and flagged out-of-theorem."""
        return self.n + self.m > 2

    @property
    def ambient_dim(self) -> int:
        return self.n * self.m

    def psi_value(self, a) -> float:
        """psi(a) on the support, 0 off it; a = 0 is a domain error."""
        a = tuple(int(x) for x in a)
        h = max(abs(x) for x in a)
        if h == 0:
            raise ValueError("psi is not defined at a = 0")
        if not self.support.contains(a):
            return 0.0
        if isinstance(self.psi, PsiPowerLaw):
            return self.psi.at_height(h)
        return self.psi.lookup().get(a, 0.0)

    def psi_max(self) -> float:
        if isinstance(self.psi, PsiPowerLaw):
            return 1.0
        return max((v for _, v in self.psi.entries), default=0.0)


@dataclass(frozen=True)
class SquaresProblem:
    """S_2(psi): |a^2 . x - p^2| < psi(|a|) for infinitely many (a, p)."""

    psi: PsiSpec

    def __post_init__(self):
        if isinstance(self.psi, PsiTable):
            vals = self.psi_values(self.psi.max_height)
            if any(v2 > v1 for v1, v2 in zip(vals, vals[1:])):
                raise ValueError("squares psi table must be non-increasing in h")

    @property
    def ambient_dim(self) -> int:
        return 2

    def psi_at(self, h: int) -> float:
        if h < 1:
            raise ValueError("heights start at 1")
        if isinstance(self.psi, PsiPowerLaw):
            return self.psi.at_height(h)
        return self.psi.lookup().get((h,), 0.0)

    def psi_values(self, h_max: int) -> list:
        return [self.psi_at(h) for h in range(1, h_max + 1)]


Problem = LinearFormsProblem | SquaresProblem


# --- shell enumeration -------------------------------------------------------

def shell_count(n: int, h: int) -> int:
    """Number of integer vectors with |a| = h (sup norm): (2h+1)^n - (2h-1)^n."""
    return (2 * h + 1) ** n - (2 * h - 1) ** n


def zi_shell_count(n: int, h: int, n_pinned: int) -> int:
    """Vectors with |a| = h and |a_i| = h for n_pinned given coordinates."""
    return 2 ** n_pinned * (2 * h + 1) ** (n - n_pinned)


def iter_shell(n: int, h: int):
    """All a with |a| = h, in lexicographic order."""
    if h == 0:
        return
    for a in product(range(-h, h + 1), repeat=n):
        if max(abs(x) for x in a) == h:
            yield a


def iter_ball(n: int, h_lo: int, h_hi: int):
    """All a with h_lo <= |a| <= h_hi, shells ascending, lexicographic within."""
    total = (2 * h_hi + 1) ** n
    if total > ENUMERATION_GUARD:
        raise ValueError(f"enumeration of {total} vectors exceeds the guard")
    for h in range(max(1, h_lo), h_hi + 1):
        yield from iter_shell(n, h)


def restrict_to_zi(p: LinearFormsProblem, i: int) -> LinearFormsProblem:
    """Intersect the support with Z_i = {a : |a| = |a_i|}; idempotent."""
    if not 1 <= i <= p.n:
        raise ValueError(f"index {i} out of range for n={p.n}")
    support = Support(p.support.zi | {i}, p.support.custom)
    return LinearFormsProblem(p.n, p.m, p.psi, p.b, support)


def zi_decompose(p: LinearFormsProblem, H: int) -> list:
    """Per-coordinate partial Schmidt sums over Z_i up to height H.

    Boundary vectors with |a| = |a_i| for several i are counted in each such
    Z_i, so the sums may overcount relative to the unrestricted sum (that is
    the direction the covering inequality needs).
    """
    if H < 1:
        raise ValueError("H must be >= 1")
    from .series import schmidt_sum  # local import; series builds on problems

    out = []
    for i in range(1, p.n + 1):
        series = schmidt_sum(restrict_to_zi(p, i), H)
        out.append((i, float(series.sums[-1])))
    return out


# --- config ingestion --------------------------------------------------------

def load_table_csv(path, n: int) -> PsiTable:
    """CSV with n integer columns then a value column."""
    entries = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                a = tuple(int(x) for x in row[:n])
            except ValueError:  # header
                continue
            entries.append((a, float(row[n])))
    return PsiTable(tuple(entries))


def parse_support(text: str) -> Support:
    text = (text or "all").strip().lower()
    if text in ("", "all"):
        return SUPPORT_ALL
    zi = set()
    custom = ""
    for part in text.split("+"):
        if part.startswith("zi:"):
            zi.add(int(part[3:]))
        elif part.startswith("z") and part[1:].isdigit():
            zi.add(int(part[1:]))
        elif part.startswith("custom:"):
            custom = part[len("custom:"):]
        else:
            raise ValueError(f"cannot parse support {text!r}")
    return Support(frozenset(zi), custom)


def parse_problem(spec: dict, base_dir: Path | None = None) -> Problem:
    """Build a problem from a decoded TOML/JSON mapping."""
    base = Path(base_dir) if base_dir else Path(".")
    kind = spec.get("kind", "linear_forms")
    psi_spec = spec.get("psi", {})
    law = psi_spec.get("law", "power")
    n = int(spec.get("n", 2 if kind == "squares" else spec.get("n", 0) or 0))

    if kind == "squares":
        if law == "power":
            psi = PsiPowerLaw(float(psi_spec["tau"]))
        else:
            psi = load_table_csv(base / psi_spec["table_path"], 1)
        return SquaresProblem(psi)

    n = int(spec["n"])
    m = int(spec["m"])
    if law == "power":
        psi = PsiPowerLaw(float(psi_spec["tau"]))
    elif law == "table":
        psi = load_table_csv(base / psi_spec["table_path"], n)
    else:
        raise ValueError(f"unknown psi law {law!r}")
    support = parse_support(psi_spec.get("support", "all"))
    b = tuple(float(x) for x in spec.get("b", ()))
    return LinearFormsProblem(n, m, psi, b, support)


def load_problem(path) -> Problem:
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        spec = json.loads(text)
    else:
        try:
            import tomllib
        except ImportError:
            import tomli as tomllib
        spec = tomllib.loads(text)
    return parse_problem(spec, base_dir=path.parent)


def problem_to_dict(p: Problem) -> dict:
    """Resolved config for provenance headers."""
    if isinstance(p, SquaresProblem):
        psi = ({"law": "power", "tau": p.psi.tau}
               if isinstance(p.psi, PsiPowerLaw)
               else {"law": "table", "entries": len(p.psi.entries)})
        return {"kind": "squares", "psi": psi}
    psi = ({"law": "power", "tau": p.psi.tau}
           if isinstance(p.psi, PsiPowerLaw)
           else {"law": "table", "entries": len(p.psi.entries)})
    psi["support"] = p.support.describe()
    return {"kind": "linear_forms", "n": p.n, "m": p.m, "b": list(p.b),
            "psi": psi, "theorem_mode": p.theorem_mode}
