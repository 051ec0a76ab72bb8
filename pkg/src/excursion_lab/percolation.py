"""Excursion-set events on binarized grid configurations.

A configuration is a boolean grid: cell (x, y) is active when the field value
satisfies f >= -level (ties are active).  Active-set connectivity is
4-adjacency; the inactive complement uses 8-adjacency, which is the matching
pair that makes crossing/blocking duality exact on the square lattice:

* in a rectangle, exactly one of {active left-right 4-crossing,
  inactive top-bottom 8-crossing} occurs;
* in an annulus, an active 4-connected circuit around the hole exists iff no
  inactive 8-path joins the inner boundary to the outer boundary.

Events are specified in cell coordinates.  Rectangle crossings carry two
distinguished boundary arcs given as half-open index ranges along the
boundary cycle of the rectangle, which lets the same type express plain side
crossings and arc-restricted crossings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import ndimage

from .parallel import run_blocks
from .rng import replicate_rng

__all__ = [
    "binarize",
    "label_components",
    "RectCross",
    "AnnulusCircuit",
    "XEvent",
    "cross_lr",
    "cross_tb",
    "cross_arc",
    "boundary_cycle",
    "has_event",
    "estimate_event_probability",
]

_STRUCT4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
_STRUCT8 = np.ones((3, 3), dtype=bool)

_NBR8 = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)]


def binarize(values, level):
    """Active set of the excursion at the given level: {f >= -level}."""
    if not math.isfinite(level):
        raise ValueError(f"level must be finite, got {level}")
    return np.asarray(values, dtype=np.float64) >= -level


def label_components(mask, connectivity=4):
    """Connected-component labels of a boolean mask (0 = background)."""
    if connectivity == 4:
        structure = _STRUCT4
    elif connectivity == 8:
        structure = _STRUCT8
    else:
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    labels, n = ndimage.label(mask, structure=structure)
    return labels, n


# ---------------------------------------------------------------------------
# Event specifications


def boundary_cycle(width, height):
    """Cells of a width x height rectangle's boundary in cyclic order.

    Starts at local cell (0, 0), walks the bottom row rightward, the right
    column upward, the top row leftward, and the left column downward.  For
    one-cell-thick rectangles the enumeration degenerates to a simple path.
    Returns an (P, 2) array of local (x, y) cell coordinates.
    """
    if width < 1 or height < 1:
        raise ValueError("rectangle must be at least 1x1")
    if height == 1:
        return np.array([(x, 0) for x in range(width)], dtype=np.int64)
    if width == 1:
        return np.array([(0, y) for y in range(height)], dtype=np.int64)
    cells = []
    cells += [(x, 0) for x in range(width)]
    cells += [(width - 1, y) for y in range(1, height)]
    cells += [(x, height - 1) for x in range(width - 2, -1, -1)]
    cells += [(0, y) for y in range(height - 2, 0, -1)]
    return np.array(cells, dtype=np.int64)


def _arc_cells(cycle, arc):
    start, stop = arc
    n = len(cycle)
    if not (0 <= start < n and start < stop <= start + n):
        raise ValueError(f"arc {arc} out of range for boundary of length {n}")
    idx = np.arange(start, stop) % n
    return cycle[idx]


@dataclass(frozen=True)
class RectCross:
    """Active 4-connected crossing of a cell rectangle between two boundary arcs.

    The rectangle covers cells [x0, x1) x [y0, y1).  Arcs s0 and s2 are
    half-open index ranges [a, b) along the boundary cycle (b may exceed the
    cycle length to express wrap-around).  The event holds when some active
    4-connected path inside the rectangle joins an active s0 cell to an
    active s2 cell.
    """

    x0: int
    y0: int
    x1: int
    y1: int
    s0: tuple
    s2: tuple

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError("rectangle must be non-empty")
        w, h = self.width, self.height
        cycle = boundary_cycle(w, h)
        a = {tuple(c) for c in _arc_cells(cycle, self.s0)}
        b = {tuple(c) for c in _arc_cells(cycle, self.s2)}
        if not a or not b:
            raise ValueError("arcs must be non-empty")
        if a & b:
            # Thin rectangles may use identical arcs (the event degenerates
            # to "some cell of the arc is active"); partial overlap is
            # always a construction error.  Disjoint contiguous index
            # ranges always leave two complementary gap arcs, either of
            # which may be empty (full-side arcs on 2-thick rectangles).
            if not ((w == 1 or h == 1) and self.s0 == self.s2):
                raise ValueError("arcs must be disjoint or identical")

    @property
    def width(self):
        return self.x1 - self.x0

    @property
    def height(self):
        return self.y1 - self.y0

    def arc_cells(self, which):
        """Grid coordinates of the cells in arc 's0' or 's2'."""
        cycle = boundary_cycle(self.width, self.height)
        arc = self.s0 if which == "s0" else self.s2
        cells = _arc_cells(cycle, arc)
        return cells + np.array([self.x0, self.y0])

    @property
    def d0(self):
        """Separation scale: min distance between opposite arc/gap pairs."""
        a = self.arc_cells("s0").astype(float)
        b = self.arc_cells("s2").astype(float)
        d_arcs = np.min(
            np.hypot(a[:, None, 0] - b[None, :, 0], a[:, None, 1] - b[None, :, 1])
        )
        return float(d_arcs)


@dataclass(frozen=True)
class AnnulusCircuit:
    """Active 4-connected circuit separating the hole of an annulus.

    The annulus consists of cells whose centre distance to (cx, cy) lies in
    [a, b]; the hole is the cells at distance < a.  By matching-lattice
    duality the circuit exists iff the inactive set admits no 8-connected
    path from the annulus's inner boundary cells to its outer boundary cells,
    which is how the event is evaluated.
    """

    cx: float
    cy: float
    a: float
    b: float

    def __post_init__(self):
        if not (0 < self.a < self.b):
            raise ValueError(f"need 0 < a < b, got a={self.a}, b={self.b}")

    @property
    def d0(self):
        """Separation scale: the inner radius."""
        return float(self.a)


@dataclass(frozen=True)
class XEvent:
    """One active component of a vertical strip touching four boundary rays.

    The strip occupies columns [x0, x0+width) restricted to rows [y0, y1).
    The rays are, on each of the strip's outer columns, the rows below
    y_base and the rows from y_base + gap upward (all truncated to the box).
    The event asks for a single active 4-connected component inside the box
    meeting all four ray segments; this truncation is a stronger hypothesis
    than the untruncated strip event, so containments verified with it
    remain valid.  A zero-length ray degenerates to the single cell at its
    anchor height (the corner-point convention), never to an empty set.
    """

    x0: int
    width: int
    y0: int
    y1: int
    y_base: int
    gap: int

    def __post_init__(self):
        if self.width < 1:
            raise ValueError("strip width must be >= 1")
        if self.gap < 0:
            raise ValueError("gap must be >= 0")
        if self.y0 >= self.y1:
            raise ValueError("need y0 < y1")
        if not (self.y0 <= self.y_base and self.y_base + self.gap <= self.y1):
            raise ValueError("rays must fit: need y0 <= y_base and y_base + gap <= y1")

    def ray_rows(self):
        if self.y_base > self.y0:
            low = np.arange(self.y0, self.y_base)
        else:
            low = np.array([self.y0], dtype=np.int64)
        top = self.y_base + self.gap
        if self.y1 > top:
            high = np.arange(top, self.y1)
        else:
            high = np.array([self.y1 - 1], dtype=np.int64)
        return low, high


def cross_lr(x0, y0, x1, y1):
    """Left-to-right side crossing of the rectangle [x0,x1) x [y0,y1)."""
    w, h = x1 - x0, y1 - y0
    if w == 1:
        # Every cell of a single column touches both vertical edges, so the
        # crossing degenerates to "some cell in the column is active".
        full = (0, max(h, 1))
        return RectCross(x0, y0, x1, y1, s0=full, s2=full)
    if h == 1:
        return RectCross(x0, y0, x1, y1, s0=(0, 1), s2=(w - 1, w))
    top_left = 2 * w + h - 3
    return RectCross(x0, y0, x1, y1, s0=(top_left, top_left + h), s2=(w - 1, w + h - 1))


def cross_tb(x0, y0, x1, y1):
    """Top-to-bottom side crossing of the rectangle [x0,x1) x [y0,y1)."""
    w, h = x1 - x0, y1 - y0
    if h == 1:
        # Single row: every cell touches both horizontal edges.
        full = (0, max(w, 1))
        return RectCross(x0, y0, x1, y1, s0=full, s2=full)
    if w == 1:
        return RectCross(x0, y0, x1, y1, s0=(h - 1, h), s2=(0, 1))
    # The top row starts one step earlier than its row-run in the cycle:
    # the top-right corner cell belongs to the right-column run.
    top_row_start = w + h - 2
    return RectCross(
        x0, y0, x1, y1, s0=(top_row_start, top_row_start + w), s2=(0, w)
    )


def cross_arc(x0, y0, x1, y1, row_lo, row_hi):
    """Crossing from the full left side to right-column rows [row_lo, row_hi).

    Rows are relative to the rectangle; the right arc must not swallow the
    corners' cycle neighbours unless it spans the full side.
    """
    w, h = x1 - x0, y1 - y0
    if not (0 <= row_lo < row_hi <= h):
        raise ValueError(f"need 0 <= row_lo < row_hi <= {h}")
    if w < 2 or h < 2:
        raise ValueError("arc crossings need a rectangle of at least 2x2")
    # Right column rows y=0..h-1 sit at cycle indices w-1 .. w+h-2.
    s2 = (w - 1 + row_lo, w - 1 + row_hi)
    top_left = 2 * w + h - 3
    return RectCross(x0, y0, x1, y1, s0=(top_left, top_left + h), s2=s2)


# ---------------------------------------------------------------------------
# Event evaluation


def _check_domain(shape, x0, y0, x1, y1):
    ny, nx = shape
    if not (0 <= x0 and x1 <= nx and 0 <= y0 and y1 <= ny):
        raise ValueError(
            f"event domain [{x0},{x1})x[{y0},{y1}) exceeds grid {nx}x{ny}"
        )


@lru_cache(maxsize=256)
def _annulus_geometry(spec: AnnulusCircuit, shape):
    """Masks for an annulus event on a given grid shape.

    Returns (annulus mask, inner boundary mask, outer boundary mask) as
    (ny, nx) boolean arrays.
    """
    ny, nx = shape
    # Every cell centre within the outer radius must lie on the grid; the
    # disc itself may overhang the half-cell margin beyond the last centre.
    if not (
        spec.cx - spec.b > -1
        and spec.cx + spec.b < nx
        and spec.cy - spec.b > -1
        and spec.cy + spec.b < ny
    ):
        raise ValueError(
            f"annulus (centre ({spec.cx},{spec.cy}), outer {spec.b}) "
            f"exceeds grid {nx}x{ny}"
        )
    ys, xs = np.mgrid[0:ny, 0:nx]
    dist = np.hypot(xs - spec.cx, ys - spec.cy)
    ann = (dist >= spec.a) & (dist <= spec.b)
    if not np.any(dist < spec.a):
        raise ValueError("annulus hole contains no cell; inner radius too small")
    if not np.any(ann):
        raise ValueError("annulus contains no cell")
    inner = np.zeros_like(ann)
    outer = np.zeros_like(ann)
    for dx, dy in _NBR8:
        ndist = np.hypot(xs + dx - spec.cx, ys + dy - spec.cy)
        inner |= ann & (ndist < spec.a)
        outer |= ann & (ndist > spec.b)
    return ann, inner, outer


def _rect_cross_holds(active_sub, spec):
    labels, n = label_components(active_sub, connectivity=4)
    if n == 0:
        return False
    a = spec.arc_cells("s0") - np.array([spec.x0, spec.y0])
    b = spec.arc_cells("s2") - np.array([spec.x0, spec.y0])
    la = labels[a[:, 1], a[:, 0]]
    lb = labels[b[:, 1], b[:, 0]]
    la = la[la > 0]
    if la.size == 0:
        return False
    lb = lb[lb > 0]
    if lb.size == 0:
        return False
    return bool(np.isin(la, lb).any())


def has_event(active, spec):
    """Whether the event holds on a boolean configuration."""
    active = np.asarray(active, dtype=bool)
    if isinstance(spec, RectCross):
        _check_domain(active.shape, spec.x0, spec.y0, spec.x1, spec.y1)
        sub = active[spec.y0 : spec.y1, spec.x0 : spec.x1]
        return _rect_cross_holds(sub, spec)
    if isinstance(spec, AnnulusCircuit):
        ann, inner, outer = _annulus_geometry(spec, active.shape)
        inactive = ann & ~active
        labels, n = label_components(inactive, connectivity=8)
        if n == 0:
            return True
        li = labels[inner & inactive]
        lo = labels[outer & inactive]
        if li.size == 0 or lo.size == 0:
            return True
        return not bool(np.isin(li, lo).any())
    if isinstance(spec, XEvent):
        _check_domain(active.shape, spec.x0, spec.y0, spec.x0 + spec.width, spec.y1)
        sub = active[spec.y0 : spec.y1, spec.x0 : spec.x0 + spec.width]
        labels, n = label_components(sub, connectivity=4)
        if n == 0:
            return False
        low, high = spec.ray_rows()
        low = low - spec.y0
        high = high - spec.y0
        common = None
        for col in (0, spec.width - 1):
            for rows in (low, high):
                ls = labels[rows, col]
                ls = set(ls[ls > 0].tolist())
                if not ls:
                    return False
                common = ls if common is None else (common & ls)
                if not common:
                    return False
        return bool(common)
    raise TypeError(f"unknown event spec {type(spec).__name__}")


# ---------------------------------------------------------------------------
# Monte Carlo probability estimation


def estimate_event_probability(
    sampler, events, levels, n, master_seed, workers=1, block_size=256
):
    """Empirical probabilities of events across levels.

    Each replicate draws one field from its own (master_seed, index) stream,
    so estimates are independent of batching and worker count.  Returns
    (counts, estimates, stderrs) with shape (len(events), len(levels));
    stderr is the binomial standard error.
    """
    events = list(events)
    levels = [float(l) for l in levels]
    if n < 1:
        raise ValueError("n must be >= 1")

    def block(lo, hi):
        counts = np.zeros((len(events), len(levels)), dtype=np.int64)
        for i in range(lo, hi):
            rng = replicate_rng(master_seed, i)
            values = sampler.sample_values(rng)
            for jl, level in enumerate(levels):
                active = binarize(values, level)
                for je, spec in enumerate(events):
                    if has_event(active, spec):
                        counts[je, jl] += 1
        return counts

    parts = run_blocks(block, n, workers=workers, block_size=block_size)
    counts = np.zeros((len(events), len(levels)), dtype=np.int64)
    for part in parts:
        counts += part
    p = counts / float(n)
    stderr = np.sqrt(np.maximum(p * (1.0 - p), 0.0) / n)
    return counts, p, stderr
