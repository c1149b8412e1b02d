"""Axis-aligned box unions in R^k and the grid calculus used on them.

Slices of box unions are box unions, so two-sided Hausdorff-content bounds
(grid covers above, Lebesgue-density / packing below) stay exact arithmetic.
Used by the slicing-inequality check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np


def unit_ball_volume(k: int) -> float:
    """Lebesgue volume of the unit k-ball."""
    return math.pi ** (k / 2.0) / math.gamma(k / 2.0 + 1.0)


@dataclass(frozen=True)
class BoxUnion:
    """Finite union of closed axis-aligned boxes; may overlap."""

    boxes: tuple  # ((lo tuple, hi tuple), ...)

    def __post_init__(self):
        boxes = []
        for lo, hi in self.boxes:
            lo = tuple(float(x) for x in lo)
            hi = tuple(float(x) for x in hi)
            if len(lo) != len(hi):
                raise ValueError("box corners must share a dimension")
            if any(h <= l for l, h in zip(lo, hi)):
                raise ValueError("boxes need positive extent on every axis")
            boxes.append((lo, hi))
        object.__setattr__(self, "boxes", tuple(boxes))
        if boxes and len({len(lo) for lo, _ in boxes}) != 1:
            raise ValueError("all boxes must share a dimension")

    @property
    def dim(self) -> int:
        return len(self.boxes[0][0]) if self.boxes else 0

    @property
    def empty(self) -> bool:
        return not self.boxes

    def decompose(self) -> list:
        """Disjoint grid cells (pairwise non-overlapping boxes) covering the union."""
        if self.empty:
            return []
        k = self.dim
        cuts = [sorted({b[0][ax] for b in self.boxes} | {b[1][ax] for b in self.boxes})
                for ax in range(k)]
        cells = []
        for idx in product(*[range(len(c) - 1) for c in cuts]):
            lo = tuple(cuts[ax][i] for ax, i in enumerate(idx))
            hi = tuple(cuts[ax][i + 1] for ax, i in enumerate(idx))
            mid = tuple(0.5 * (l + h) for l, h in zip(lo, hi))
            if any(all(bl[ax] <= mid[ax] <= bh[ax] for ax in range(k))
                   for bl, bh in self.boxes):
                cells.append((lo, hi))
        return cells

    def volume(self) -> float:
        return sum(
            math.prod(h - l for l, h in zip(lo, hi)) for lo, hi in self.decompose()
        )

    def slice_first_coords(self, d: int, y_cell) -> "BoxUnion":
        """Restriction to a fiber over an arrangement cell of the last k-d axes."""
        y_mid = tuple(0.5 * (l + h) for l, h in y_cell)
        kept = []
        for lo, hi in self.boxes:
            if all(lo[d + j] <= y_mid[j] <= hi[d + j] for j in range(len(y_mid))):
                kept.append((lo[:d], hi[:d]))
        return BoxUnion(tuple(kept))

    def projection_cells(self, d: int) -> list:
        """Arrangement cells of the projection to the last k-d coordinates."""
        if self.empty:
            return []
        k = self.dim
        cuts = [sorted({b[0][ax] for b in self.boxes} | {b[1][ax] for b in self.boxes})
                for ax in range(d, k)]
        cells = []
        for idx in product(*[range(len(c) - 1) for c in cuts]):
            cell = tuple((cuts[j][i], cuts[j][i + 1]) for j, i in enumerate(idx))
            cells.append(cell)
        return cells


def grid_cover_count(union: BoxUnion, t: float) -> int:
    """Number of aligned side-t grid cells meeting the closed union (d <= 2).

    Inclusive at boundaries: the count must yield a genuine cover.
    """
    if union.empty:
        return 0
    d = union.dim
    if d == 0:
        return 1
    cells = union.decompose()
    if d == 1:
        idx = set()
        for (lo,), (hi,) in cells:
            idx.update(range(int(math.floor(lo / t)), int(math.floor(hi / t)) + 1))
        return len(idx)
    if d == 2:
        los = np.array([c[0] for c in cells])
        his = np.array([c[1] for c in cells])
        i0 = np.floor(los[:, 0] / t).astype(int)
        i1 = np.floor(his[:, 0] / t).astype(int)
        j0 = np.floor(los[:, 1] / t).astype(int)
        j1 = np.floor(his[:, 1] / t).astype(int)
        oi, oj = i0.min(), j0.min()
        mask = np.zeros((i1.max() - oi + 1, j1.max() - oj + 1), dtype=bool)
        for a, b, c, e in zip(i0, i1, j0, j1):
            mask[a - oi:b - oi + 1, c - oj:e - oj + 1] = True
        return int(mask.sum())
    raise ValueError("grid covers implemented for d <= 2")


def interior_packing_count(union: BoxUnion, radius: float) -> int:
    """Aligned cells of side 2*radius fully inside the union (per disjoint cell),
    i.e. a count of disjoint balls of the given radius packed into the union."""
    if union.empty:
        return 0
    side = 2.0 * radius
    total = 0
    for lo, hi in union.decompose():
        cnt = 1
        for l, h in zip(lo, hi):
            lo_i = int(math.ceil(l / side))
            hi_i = int(math.floor(h / side))
            cnt *= max(0, hi_i - lo_i)
        total += cnt
    return total
