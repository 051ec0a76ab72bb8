"""Crossing-event gluing constructions and machine-checkable containments.

A construction plan asserts a monotone containment between percolation
events on a finite grid: whenever every listed *copy* event (a translated,
rotated and/or reflected placement of a base event) holds in a configuration,
a *target* event must hold as well.  Plans are data, so the claimed
containment can be checked exhaustively or by randomized fuzzing on concrete
configurations; :func:`verify_plan` evaluates one configuration and returns
either :class:`Ok` or a serialisable :class:`Counterexample`.

The module ships four plan families:

* :func:`plan_cross_x_cross` — two arc crossings glued through a
  double-touch strip event into one longer crossing;
* :func:`plan_x_from_crossings` — four arc crossings and one long crossing
  assembled into a double-touch event with elongated gap;
* :func:`plan_long_rectangle` — fifteen copies (ten arc crossings, five
  square crossings) forming five wall surrounds that force a crossing of a
  5:4 rectangle;
* :func:`plan_circuit_gluing` — a chain of overlapping annulus circuits
  forcing a crossing of the long rectangle inscribed in the chain.

Also provided: the arc-width quarter-quantile estimator
:func:`estimate_alpha`, the iterated-logarithm counter :func:`log_star`,
and :func:`good_scale_search` over a tabulated arc-width function.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .kernels import GridSpec, make_sampler
from .parallel import DEFAULT_BLOCK, run_blocks
from .percolation import (
    AnnulusCircuit,
    RectCross,
    XEvent,
    cross_arc,
    cross_lr,
    has_event,
    label_components,
)
from .rng import replicate_rng
from .variance import EstimatorReport

__all__ = [
    "EventCopy",
    "ConstructionPlan",
    "Ok",
    "Counterexample",
    "FuzzReport",
    "verify_plan",
    "fuzz_plan",
    "targeted_cross_x_cross_configs",
    "plan_cross_x_cross",
    "plan_x_from_crossings",
    "plan_long_rectangle",
    "plan_circuit_gluing",
    "estimate_alpha",
    "log_star",
    "Divergent",
    "DIVERGENT",
    "TabulatedAlpha",
    "good_scale_search",
    "encode_rle",
    "decode_rle",
]


# ---------------------------------------------------------------------------
# Event copies: placements of a base event under lattice symmetries


def _rot_once(x, y):
    # Quarter turn counterclockwise on unit cells: [x,x+1)x[y,y+1) maps to
    # [-y-1,-y)x[x,x+1).
    return -y - 1, x


@dataclass(frozen=True)
class EventCopy:
    """A base event placed by an integer translation, rotation and flips.

    The cell map is ``translate o rotation^rot o flips``: reflections are
    applied first (``flip_h`` sends x to -x-1, ``flip_v`` sends y to -y-1),
    then ``rot`` quarter turns counterclockwise, then the translation
    ``(dx, dy)``.  Annulus bases only support pure translations, since the
    event is invariant under the other symmetries anyway.
    """

    base: object
    dx: int = 0
    dy: int = 0
    rot: int = 0
    flip_h: bool = False
    flip_v: bool = False

    def __post_init__(self):
        if self.rot not in (0, 1, 2, 3):
            raise ValueError("rot must be one of 0, 1, 2, 3")
        if isinstance(self.base, AnnulusCircuit):
            if self.rot != 0 or self.flip_h or self.flip_v:
                raise ValueError("annulus copies support translation only")
        elif not isinstance(self.base, (RectCross, XEvent)):
            raise TypeError(f"unsupported base event {type(self.base).__name__}")

    def map_cells(self, xs, ys):
        """Map base-frame cell coordinates to plan-frame coordinates."""
        xs = np.asarray(xs, dtype=np.int64)
        ys = np.asarray(ys, dtype=np.int64)
        if self.flip_h:
            xs = -xs - 1
        if self.flip_v:
            ys = -ys - 1
        for _ in range(self.rot):
            xs, ys = _rot_once(xs, ys)
        return xs + self.dx, ys + self.dy

    def base_box(self):
        """Bounding box (x0, y0, x1, y1) of the base event's domain."""
        b = self.base
        if isinstance(b, RectCross):
            return b.x0, b.y0, b.x1, b.y1
        if isinstance(b, XEvent):
            return b.x0, b.y0, b.x0 + b.width, b.y1
        raise TypeError("annulus copies have no rectangular base box")

    def image_box(self):
        """Bounding box of the copy's footprint in the plan frame."""
        if isinstance(self.base, AnnulusCircuit):
            b = self.base
            cx, cy = b.cx + self.dx, b.cy + self.dy
            return (
                math.floor(cx - b.b),
                math.floor(cy - b.b),
                math.ceil(cx + b.b) + 1,
                math.ceil(cy + b.b) + 1,
            )
        x0, y0, x1, y1 = self.base_box()
        corners_x = np.array([x0, x1 - 1, x0, x1 - 1])
        corners_y = np.array([y0, y0, y1 - 1, y1 - 1])
        gx, gy = self.map_cells(corners_x, corners_y)
        return int(gx.min()), int(gy.min()), int(gx.max()) + 1, int(gy.max()) + 1

    @cached_property
    def _extraction(self):
        x0, y0, x1, y1 = self.base_box()
        ys, xs = np.mgrid[y0:y1, x0:x1]
        gx, gy = self.map_cells(xs, ys)
        return (slice(y0, y1), slice(x0, x1)), gy, gx

    def holds(self, config):
        """Evaluate the transformed event on a plan-frame configuration."""
        config = np.asarray(config, dtype=bool)
        if isinstance(self.base, AnnulusCircuit):
            b = self.base
            moved = AnnulusCircuit(b.cx + self.dx, b.cy + self.dy, b.a, b.b)
            return has_event(config, moved)
        box, gy, gx = self._extraction
        _, _, bx1, by1 = self.base_box()
        sub = np.zeros((by1, bx1), dtype=bool)
        sub[box] = config[gy, gx]
        return has_event(sub, self.base)


# ---------------------------------------------------------------------------
# Plans, verification results


@dataclass(frozen=True)
class ConstructionPlan:
    """A claimed containment: all copy events together imply the target."""

    name: str
    kind: str
    width: int
    height: int
    copies: tuple
    target: object
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("plan box must be non-empty")
        for copy in self.copies:
            x0, y0, x1, y1 = copy.image_box()
            if isinstance(copy.base, AnnulusCircuit):
                # The annulus needs every centre within its outer radius
                # on-grid; the half-cell overhang past the last centre is fine.
                b = copy.base
                cx, cy = b.cx + copy.dx, b.cy + copy.dy
                ok = (
                    cx - b.b > -1
                    and cx + b.b < self.width
                    and cy - b.b > -1
                    and cy + b.b < self.height
                )
            else:
                ok = 0 <= x0 and 0 <= y0 and x1 <= self.width and y1 <= self.height
            if not ok:
                raise ValueError(
                    f"copy footprint {(x0, y0, x1, y1)} exceeds plan box "
                    f"{self.width}x{self.height}"
                )
        t = self.target
        if isinstance(t, RectCross):
            tx0, ty0, tx1, ty1 = t.x0, t.y0, t.x1, t.y1
        elif isinstance(t, XEvent):
            tx0, ty0, tx1, ty1 = t.x0, t.y0, t.x0 + t.width, t.y1
        else:
            raise TypeError("target must be a rectangle or double-touch event")
        if not (0 <= tx0 and 0 <= ty0 and tx1 <= self.width and ty1 <= self.height):
            raise ValueError("target exceeds plan box")

    @property
    def shape(self):
        return (self.height, self.width)


def encode_rle(bits):
    """Run-length encode a flat boolean sequence as ``first;len,len,...``."""
    bits = np.asarray(bits, dtype=bool).ravel()
    if bits.size == 0:
        return "0;"
    changes = np.flatnonzero(np.diff(bits.astype(np.int8)))
    bounds = np.concatenate(([0], changes + 1, [bits.size]))
    runs = np.diff(bounds)
    return f"{int(bits[0])};" + ",".join(str(int(r)) for r in runs)


def decode_rle(text, size):
    """Inverse of :func:`encode_rle`; returns a flat boolean array."""
    head, _, body = text.partition(";")
    first = bool(int(head))
    out = np.zeros(size, dtype=bool)
    pos = 0
    value = first
    if body:
        for token in body.split(","):
            run = int(token)
            out[pos : pos + run] = value
            pos += run
            value = not value
    if pos != size:
        raise ValueError(f"run lengths cover {pos} bits, expected {size}")
    return out


@dataclass(frozen=True)
class Ok:
    """The configuration is consistent with the plan's containment."""


@dataclass(frozen=True)
class Counterexample:
    """A configuration where every copy event holds but the target fails."""

    plan_name: str
    width: int
    height: int
    config: np.ndarray
    reason: str = "all copy events hold but the target fails"

    def to_json(self):
        return json.dumps(
            {
                "plan": self.plan_name,
                "width": self.width,
                "height": self.height,
                "config_rle": encode_rle(self.config),
                "reason": self.reason,
            }
        )

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        w, h = int(data["width"]), int(data["height"])
        config = decode_rle(data["config_rle"], w * h).reshape(h, w)
        return cls(data["plan"], w, h, config, data["reason"])


def verify_plan(plan, config):
    """Check one configuration against a plan's claimed containment.

    Returns :class:`Ok` when some copy event fails (the containment's
    hypothesis is not met) or when the target holds; returns
    :class:`Counterexample` when every copy holds yet the target fails.
    """
    config = np.asarray(config, dtype=bool)
    if config.shape != plan.shape:
        raise ValueError(f"config shape {config.shape} != plan shape {plan.shape}")
    for copy in plan.copies:
        if not copy.holds(config):
            return Ok()
    if has_event(config, plan.target):
        return Ok()
    return Counterexample(plan.name, plan.width, plan.height, config.copy())


# ---------------------------------------------------------------------------
# Plan builders


def _arc_hi(a, b, limit):
    """Right-arc upper row: closed-point convention when the arc degenerates."""
    if b > a:
        return b
    if a >= limit:
        raise ValueError("degenerate arc at the top corner is not representable")
    return a + 1


def plan_cross_x_cross(R, Q, a, b):
    """Glue two arc crossings through a strip double-touch into a long crossing.

    Copy 1 crosses the left R-square from its full left side to the
    right-column arc rows [a, b); the strip event occupies the last Q columns
    of that square with its gap at rows [a, b); copy 2 is copy 1 reflected in
    a vertical axis and placed so its full side is the far right edge and its
    arc lands on the strip's left column.  If all three hold, the strip
    component's wall-to-wall chords seal pockets around both arc endpoints,
    so the three paths join into a single left-right crossing of the
    (2R-Q) x R box.
    """
    R, Q, a, b = int(R), int(Q), int(a), int(b)
    if R < 2:
        raise ValueError("need R >= 2")
    if not 1 <= Q <= R:
        raise ValueError("need 1 <= Q <= R")
    if not 0 <= a <= b <= R:
        raise ValueError("need 0 <= a <= b <= R")
    hi = _arc_hi(a, b, R)
    arc = cross_arc(0, 0, R, R, a, hi)
    strip = XEvent(x0=R - Q, width=Q, y0=0, y1=R, y_base=a, gap=b - a)
    copies = (
        EventCopy(arc),
        EventCopy(strip),
        EventCopy(arc, dx=2 * R - Q, dy=0, flip_h=True),
    )
    return ConstructionPlan(
        name=f"cross-x-cross-R{R}-Q{Q}-a{a}-b{b}",
        kind="cross-x-cross",
        width=2 * R - Q,
        height=R,
        copies=copies,
        target=cross_lr(0, 0, 2 * R - Q, R),
        params={"R": R, "Q": Q, "a": a, "b": b},
    )


def plan_x_from_crossings(R, c, d):
    """Build an elongated double-touch event from five crossings.

    The centre copy is a quarter-turned (R+d) x R crossing, spanning the
    R x (R+d) box top to bottom.  Four corner copies of the arc crossing
    Cross(R; (R+c)/2, R) are placed by quarter-symmetries so each one's arc
    lands exactly on one truncated ray of the target (the four corner
    segments of length (R-c)/2) while its full side spans the width of the
    corresponding horizontal band; each corner path therefore crosses its
    band and must meet the centre path, joining all four rays into one
    component: the double-touch event with gap c+d truncated to the box.
    """
    R, c, d = int(R), int(c), int(d)
    if R < 2:
        raise ValueError("need R >= 2")
    if not 0 <= c < R:
        raise ValueError("need 0 <= c < R")
    if (R + c) % 2:
        raise ValueError("need R + c even")
    if d < 0:
        raise ValueError("need d >= 0")
    half = (R - c) // 2
    arc = cross_arc(0, 0, R, R, (R + c) // 2, R)
    copies = (
        EventCopy(cross_lr(0, 0, R + d, R), dx=R, dy=0, rot=1),
        EventCopy(arc, dx=0, dy=d),                       # upper-right ray
        EventCopy(arc, dx=R, dy=d, flip_h=True),          # upper-left ray
        EventCopy(arc, dx=0, dy=R, flip_v=True),          # lower-right ray
        EventCopy(arc, dx=R, dy=R, rot=2),                # lower-left ray
    )
    target = XEvent(x0=0, width=R, y0=0, y1=R + d, y_base=half, gap=c + d)
    return ConstructionPlan(
        name=f"x-from-crossings-R{R}-c{c}-d{d}",
        kind="x-from-crossings",
        width=R,
        height=R + d,
        copies=copies,
        target=target,
        params={"R": R, "c": c, "d": d},
    )


def _surround(arc, square, bx, wall):
    """Three copies whose joint occurrence seals a pocket on one wall.

    The two arc-crossing copies become pincers: each connects the full
    opposite wall of the R-square block at column offset ``bx`` to a
    wall segment beside the block-centred interval [bx+3R/8, bx+5R/8); the
    square crossing ties the pincers together, yielding a wall-to-wall
    chord whose feet straddle that interval.
    """
    if wall == "bottom":
        p_left = EventCopy(arc, dx=bx + arc.x1, dy=arc.y1, rot=1, flip_h=True)
        p_right = EventCopy(arc, dx=bx, dy=arc.y1, rot=3)
    else:
        p_left = EventCopy(arc, dx=bx + arc.x1, dy=0, rot=1)
        p_right = EventCopy(arc, dx=bx, dy=0, rot=3, flip_h=True)
    return [p_left, p_right, EventCopy(square, dx=bx, dy=0)]


def plan_long_rectangle(R):
    """Force a crossing of the 5R/4 x R rectangle from fifteen copies.

    Five surrounds (each two arc crossings plus one square crossing, see
    :func:`_surround`) are placed on square blocks at column offsets 0,
    R/8 and R/4: bottom and top surrounds on the two outer offsets plus a
    bottom surround in between.  Bottom and top chords of the same block
    are linked through that block's square crossing; chords of the two
    outer blocks either interleave on the shared wall (forcing a shared
    cell) or nest, in which case the inner chord's block reaches the
    opposite wall and must pierce the enclosing pocket.  Either way the
    union is connected and contains both square crossings, which touch
    the rectangle's short sides.
    """
    R = int(R)
    if R < 8 or R % 8:
        raise ValueError("need R divisible by 8 and >= 8")
    arc = cross_arc(0, 0, R, R, 5 * R // 8, R)
    square = cross_lr(0, 0, R, R)
    copies = (
        *_surround(arc, square, 0, "bottom"),
        *_surround(arc, square, 0, "top"),
        *_surround(arc, square, R // 8, "bottom"),
        *_surround(arc, square, R // 4, "bottom"),
        *_surround(arc, square, R // 4, "top"),
    )
    return ConstructionPlan(
        name=f"long-rectangle-R{R}",
        kind="long-rectangle",
        width=5 * R // 4,
        height=R,
        copies=copies,
        target=cross_lr(0, 0, 5 * R // 4, R),
        params={"R": R},
    )


def plan_circuit_gluing(R, n_annuli=5):
    """Glue a chain of annulus circuits into a long rectangle crossing.

    The annuli have inner radius 5R and outer radius 10R - 1/2, centred at
    height 10R - 1/2 and spaced 9R apart, so consecutive holes overlap and
    the holes' union covers every column of the target at mid-height.  If a
    top-bottom inactive 8-connected path crossed the target rectangle, it
    would pass through some hole and reach the top or bottom edge, which sits
    at the outer radius; the portion between its last hole cell and its first
    outer-boundary contact would be an inactive radial crossing of that
    annulus, contradicting its circuit event.  Hence the target - the
    inscribed rectangle whose short sides cut the first and last holes 2R
    from their centres - must be crossed left to right.  The default chain of
    five annuli yields a 40R x 20R crossing.
    """
    R, n_annuli = int(R), int(n_annuli)
    if R < 1:
        raise ValueError("need R >= 1")
    if n_annuli < 1:
        raise ValueError("need at least one annulus")
    width = 20 * R + 9 * R * (n_annuli - 1)
    height = 20 * R
    copies = tuple(
        EventCopy(
            AnnulusCircuit(
                cx=10 * R + 9 * R * k,
                cy=10 * R - 0.5,
                a=5 * R,
                b=10 * R - 0.5,
            )
        )
        for k in range(n_annuli)
    )
    target = cross_lr(8 * R, 0, 12 * R + 9 * R * (n_annuli - 1), height)
    return ConstructionPlan(
        name=f"circuit-gluing-R{R}-n{n_annuli}",
        kind="circuit-gluing",
        width=width,
        height=height,
        copies=copies,
        target=target,
        params={"R": R, "n_annuli": n_annuli},
    )


# ---------------------------------------------------------------------------
# Fuzzing


def targeted_cross_x_cross_configs(plan):
    """Sixteen structured configurations for a cross-x-cross plan.

    Each configuration draws explicit path skeletons realising one of the
    2^4 boundary-attachment patterns: entry wall (bottom/top) of each arc
    crossing, pivot column of the first crossing (shallow/deep), and the
    strip bar position (left/right quarter).  All three copy events hold by
    construction, so each pattern exercises the verifier's target check on a
    distinct connection topology.
    """
    if plan.kind != "cross-x-cross":
        raise ValueError("targeted configs exist only for cross-x-cross plans")
    R, Q, a, b = (plan.params[k] for k in ("R", "Q", "a", "b"))
    t1 = a  # arc row reached by both crossings
    left_col = R - Q
    out = []
    for pattern in range(16):
        p, q, r, s = ((pattern >> k) & 1 for k in range(4))
        cfg = np.zeros(plan.shape, dtype=bool)
        # First crossing: entry row, pivot column, then along the arc row.
        e1 = 0 if p == 0 else R - 1
        c1 = max(0, left_col // 2) if q == 0 else max(0, R - 2)
        cfg[e1, 0 : c1 + 1] = True
        cfg[min(e1, t1) : max(e1, t1) + 1, c1] = True
        cfg[t1, c1 : R] = True
        # Second crossing (vertically reflected copy): from the far right
        # side to the strip's left column at the arc row.
        e2 = 0 if r == 0 else R - 1
        c2 = max(left_col, 2 * R - Q - 2)
        cfg[e2, c2 : 2 * R - Q] = True
        cfg[min(e2, t1) : max(e2, t1) + 1, c2] = True
        cfg[t1, left_col : c2 + 1] = True
        # Strip double-touch: a full-height bar plus wall rows across the strip.
        m = left_col + min(Q - 1, (Q // 4) if s == 0 else (3 * Q) // 4)
        cfg[:, m] = True
        cfg[0, left_col : R] = True
        cfg[R - 1, left_col : R] = True
        out.append(cfg)
    return out


@dataclass(frozen=True)
class FuzzReport:
    """Aggregate result of randomized plan verification."""

    plan_name: str
    n_checked: int
    n_targeted: int
    n_counterexamples: int
    counterexamples: tuple
    seed: int

    @property
    def ok(self):
        return self.n_counterexamples == 0


def fuzz_plan(
    plan,
    n,
    master_seed,
    densities=(0.3, 0.5, 0.7),
    include_targeted=True,
    max_keep=5,
    workers=1,
    block_size=DEFAULT_BLOCK,
):
    """Verify a plan on ``n`` random configurations; return a FuzzReport.

    Replicate ``i`` draws an independent Bernoulli configuration at density
    ``densities[i % len(densities)]`` from its own seeded stream, so results
    do not depend on the worker count.  For cross-x-cross plans the first
    sixteen replicates overlay random noise on the sixteen structured
    attachment patterns instead, guaranteeing each connection topology
    appears in the corpus at least once.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    densities = tuple(float(d) for d in densities)
    if not densities or not all(0.0 <= d <= 1.0 for d in densities):
        raise ValueError("densities must be probabilities")
    targeted = []
    if include_targeted and plan.kind == "cross-x-cross":
        targeted = targeted_cross_x_cross_configs(plan)
    shape = plan.shape

    def block(lo, hi):
        bad = []
        for i in range(lo, hi):
            rng = replicate_rng(master_seed, i)
            config = rng.random(shape) < densities[i % len(densities)]
            if i < len(targeted):
                config = targeted[i] | (rng.random(shape) < 0.15)
            result = verify_plan(plan, config)
            if isinstance(result, Counterexample):
                bad.append((i, result))
        return bad

    results = run_blocks(block, n, workers=workers, block_size=block_size)
    counterexamples = [ce for chunk in results for ce in chunk]
    return FuzzReport(
        plan_name=plan.name,
        n_checked=n,
        n_targeted=min(len(targeted), n),
        n_counterexamples=len(counterexamples),
        counterexamples=tuple(ce for _, ce in counterexamples[:max_keep]),
        seed=master_seed,
    )


# ---------------------------------------------------------------------------
# Arc-width quarter-quantile estimator


def _wilson_bounds(successes, n, z=1.959963984540054):
    p = successes / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    return max(0.0, centre - half), min(1.0, centre + half)


def estimate_alpha(kernel, R, grid, n, master_seed, sampler="spectral", workers=1):
    """Smallest centred right-arc width crossed with probability >= 1/4.

    For each sampled field, active cells are those with value >= 0 on the
    side-R square (R in field units).  Per sample we record the minimal
    admissible arc width ``alpha`` (in cells, same parity as the side) such
    that the full left side connects to the centred right-column arc of
    that width; a zero width means the single mid-height cell.  Because the
    per-sample widths share one configuration, the empirical probability
    is exactly non-decreasing in ``alpha``, and the estimate is the least
    width whose empirical probability reaches 1/4.

    The report's estimate and stderr are in field units (width and half of
    the 95% confidence band).  Metadata records the cell-unit values, the
    upper-half-window check (connection probability to the arc from
    mid-height upward at the estimated width, which should stay above
    1/8 - 3*stderr), and ``undefined = "true"`` when even the full side
    fails to reach probability 1/4 or the distribution never connects.
    """
    t0 = time.perf_counter()
    if n < 1:
        raise ValueError("need n >= 1")
    side = int(round(R / grid.spacing))
    if side < 2 or side % 2:
        raise ValueError("the square side must be an even number >= 2 of cells")
    if side > grid.nx or side > grid.ny:
        raise ValueError("grid does not cover the requested square")
    smp = make_sampler(kernel, grid, sampler) if isinstance(sampler, str) else sampler

    indicators = np.zeros((n, side), dtype=bool)

    def block(lo, hi):
        for i in range(lo, hi):
            values = smp.sample_values(replicate_rng(master_seed, i))
            active = np.asarray(values)[:side, :side] >= 0.0
            labels, count = label_components(active, connectivity=4)
            if count == 0:
                continue
            left = np.unique(labels[:, 0])
            left = left[left > 0]
            if left.size == 0:
                continue
            right = labels[:, side - 1]
            indicators[i] = np.isin(right, left) & (right > 0)
        return None

    run_blocks(block, n, workers=workers)

    rows = np.arange(side)
    # Minimal admissible width containing row r: 0 for the mid-height row,
    # otherwise determined by which end of the window reaches r first.
    width_for_row = np.where(
        rows == side // 2,
        0,
        np.maximum(side - 2 * rows, 2 * rows - side + 2),
    )
    per_sample = np.full(n, np.inf)
    any_rows = indicators.any(axis=1)
    hit = np.flatnonzero(any_rows)
    if hit.size:
        widths = np.where(indicators[hit], width_for_row[None, :], np.inf)
        per_sample[hit] = widths.min(axis=1)

    alphas = np.arange(0, side + 1, 2)
    p_hat = np.array([(per_sample <= al).mean() for al in alphas])
    bounds = [
        _wilson_bounds(int(round(p * n)), n) for p in p_hat
    ]
    lo_b = np.array([b[0] for b in bounds])
    hi_b = np.array([b[1] for b in bounds])

    def first_at_least(values, threshold):
        idx = np.flatnonzero(values >= threshold)
        return int(alphas[idx[0]]) if idx.size else None

    alpha_cells = first_at_least(p_hat, 0.25)
    band_lo = first_at_least(hi_b, 0.25)
    band_hi = first_at_least(lo_b, 0.25)
    metadata = {
        "R": f"{R:.12g}",
        "side_cells": str(side),
        "sampler": getattr(smp, "name", str(sampler)),
    }
    if alpha_cells is None:
        estimate = math.nan
        stderr = math.nan
        metadata["undefined"] = "true"
    else:
        estimate = alpha_cells * grid.spacing
        if band_lo is None:
            band_lo = alpha_cells
        span = (band_hi - band_lo) if band_hi is not None else (side - band_lo)
        stderr = 0.5 * span * grid.spacing
        metadata["alpha_cells"] = str(alpha_cells)
        metadata["band_lo_cells"] = str(band_lo)
        metadata["band_hi_cells"] = "inf" if band_hi is None else str(band_hi)
        metadata["p_at_alpha"] = f"{p_hat[alphas.tolist().index(alpha_cells)]:.12g}"
        # Upper-half-window check: connection to the arc [side/2, (side+alpha)/2).
        top = side // 2 + max(alpha_cells // 2, 1)
        ear_hits = indicators[:, side // 2 : top].any(axis=1)
        ear_p = float(ear_hits.mean())
        ear_se = math.sqrt(max(ear_p * (1 - ear_p), 1e-300) / n)
        metadata["ear_p"] = f"{ear_p:.12g}"
        metadata["ear_stderr"] = f"{ear_se:.12g}"
        metadata["ear_threshold"] = f"{0.125 - 3 * ear_se:.12g}"
        metadata["ear_ok"] = str(ear_p >= 0.125 - 3 * ear_se).lower()
    return EstimatorReport(
        estimate=float(estimate),
        stderr=float(stderr),
        n=n,
        seed=master_seed,
        wall_time=time.perf_counter() - t0,
        metadata=metadata,
    )


# ---------------------------------------------------------------------------
# Iterated logarithm and good-scale search


class Divergent:
    """Sentinel: the iterated logarithm fails to reach 1."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Divergent"


DIVERGENT = Divergent()

_LOG_STAR_MAX_STEPS = 10_000


def log_star(b, x):
    """Number of base-``b`` logarithms needed to bring ``x`` to at most 1.

    Returns :data:`DIVERGENT` when the iteration stops decreasing (the orbit
    is monotone, so approaching a fixed point above 1 from either side, or
    growing, means 1 is never reached) or exceeds the step cap.
    """
    b = float(b)
    x = float(x)
    if not b > 1.0:
        raise ValueError("base must be > 1")
    if not math.isfinite(x):
        raise ValueError("x must be finite")
    log_b = math.log(b)
    count = 0
    current = x
    while current > 1.0:
        if count >= _LOG_STAR_MAX_STEPS:
            return DIVERGENT
        nxt = math.log(current) / log_b
        if nxt >= current - 1e-12 * max(1.0, abs(current)):
            return DIVERGENT
        current = nxt
        count += 1
    return count


@dataclass(frozen=True)
class TabulatedAlpha:
    """A tabulated arc-width function, linearly interpolated between knots.

    Values must satisfy 1 <= alpha(x) <= x at every knot; evaluation
    outside the tabulated range is an error.
    """

    xs: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        vs = np.asarray(self.values, dtype=float)
        if xs.ndim != 1 or xs.shape != vs.shape or xs.size < 2:
            raise ValueError("need matching 1-d tables with at least two knots")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(vs))):
            raise ValueError("knots must be finite")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("knot positions must be strictly increasing")
        if np.any(vs < 1.0) or np.any(vs > xs):
            raise ValueError("alpha values must lie in [1, x] at every knot")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "values", vs)

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(y < self.xs[0]) or np.any(y > self.xs[-1]):
            raise ValueError("evaluation outside the tabulated range")
        return np.interp(y, self.xs, self.values)


_SCALE_TOL = 1e-9


def good_scale_search(alpha_fn, x0, x_max):
    """Tabulated scales x in [x0, x_max] passing either good-scale test.

    A scale x is good when the arc-width function alpha satisfies at least
    one of: (1) alpha(y) >= y/4 for some y in [x/4, x]; (2)
    alpha(y + alpha(x)) <= 2 alpha(y) for some y in [x/4, x/2].  Both
    conditions compare piecewise-linear functions, so each is decided
    exactly by evaluating at the tabulated knots inside the interval, the
    interval endpoints, and (for the second test) knot positions shifted
    by alpha(x).
    """
    if not isinstance(alpha_fn, TabulatedAlpha):
        raise TypeError("alpha_fn must be a TabulatedAlpha")
    x0 = float(x0)
    x_max = float(x_max)
    if not x0 <= x_max:
        raise ValueError("need x0 <= x_max")
    needed_lo = x0 / 4.0
    needed_hi = x_max + float(alpha_fn(np.array(x_max)))
    if needed_lo < alpha_fn.xs[0] - _SCALE_TOL or needed_hi > alpha_fn.xs[-1] + _SCALE_TOL:
        raise ValueError(
            "table must cover [x0/4, x_max + alpha(x_max)] = "
            f"[{needed_lo:g}, {needed_hi:g}]"
        )
    knots = alpha_fn.xs

    def probe_points(lo, hi, shift=0.0):
        pts = [lo, hi]
        inside = knots[(knots >= lo) & (knots <= hi)]
        pts.extend(inside.tolist())
        if shift:
            shifted = knots - shift
            inside2 = shifted[(shifted >= lo) & (shifted <= hi)]
            pts.extend(inside2.tolist())
        return np.array(sorted(set(pts)))

    good = []
    for x in knots[(knots >= x0 - _SCALE_TOL) & (knots <= x_max + _SCALE_TOL)]:
        ys1 = probe_points(x / 4.0, x)
        cond1 = bool(np.any(alpha_fn(ys1) >= ys1 / 4.0 - _SCALE_TOL))
        ax = float(alpha_fn(np.array(x)))
        ys2 = probe_points(x / 4.0, x / 2.0, shift=ax)
        cond2 = bool(np.any(alpha_fn(ys2 + ax) <= 2.0 * alpha_fn(ys2) + _SCALE_TOL))
        if cond1 or cond2:
            good.append(float(x))
    return good

