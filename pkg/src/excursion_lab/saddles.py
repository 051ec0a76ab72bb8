"""Discrete saddle detection, four-arm reach events, and circle criticality.

A grid vertex is a discrete saddle when the cyclic sign sequence of
(neighbour - centre) differences around its 8-neighbourhood, with zero
differences collapsed, alternates at least four times — the grid proxy for
an index-1 critical point.  A saddle "reaches distance R" when four arms,
two in the closed super-level set {f >= value} and two in the closed
sub-level set {f <= value}, leave its R-ball through pairwise distinct
components in the alternating cyclic order prescribed by the neighbourhood
signs.  Reach is monotone: arms for a larger ball restrict to arms for a
smaller one.

Circle criticality counts strict local extrema of the field restricted to a
centred circle (bilinear interpolation at a resolution tied to the radius),
and the interior bound check compares the number of 2R-reaching saddles
inside the R-ball with max(0, circle extrema - 3).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy import ndimage

from .kernels import make_sampler
from .parallel import DEFAULT_BLOCK, run_blocks
from .rng import replicate_rng
from .variance import EstimatorReport

__all__ = [
    "DiscreteSaddle",
    "detect_saddles",
    "saddle_alternation_map",
    "saddle_arms_reach",
    "estimate_four_arm",
    "circle_critical_points",
    "interior_saddle_bound_check",
    "four_partition_compatibility",
    "DegenerateCircleError",
]

# 8-neighbourhood in cyclic (counter-clockwise) order starting east.
_CYC_DX = np.array([1, 1, 0, -1, -1, -1, 0, 1], dtype=np.int64)
_CYC_DY = np.array([0, 1, 1, 1, 0, -1, -1, -1], dtype=np.int64)


class DegenerateCircleError(ValueError):
    """Raised when the circle restriction has a flat plateau."""


@dataclass(frozen=True)
class DiscreteSaddle:
    """Interior vertex whose neighbourhood signs alternate >= 4 times."""

    vertex: tuple
    value: float
    alternations: int

    def __post_init__(self):
        if self.alternations < 4 or self.alternations % 2:
            raise ValueError("a saddle needs an even alternation count >= 4")


@njit(cache=True, nogil=True)
def _alternation_map(values, cyc_dx, cyc_dy):
    ny, nx = values.shape
    out = np.zeros((ny, nx), dtype=np.int64)
    for y in range(1, ny - 1):
        for x in range(1, nx - 1):
            v = values[y, x]
            first = 0
            prev = 0
            count = 0
            for k in range(8):
                d = values[y + cyc_dy[k], x + cyc_dx[k]] - v
                s = 0
                if d > 0:
                    s = 1
                elif d < 0:
                    s = -1
                if s == 0:
                    continue
                if prev == 0:
                    first = s
                    prev = s
                elif s != prev:
                    count += 1
                    prev = s
            if prev != 0 and prev != first:
                count += 1
            out[y, x] = count
    return out


def _field_and_geometry(field):
    """(values, spacing, origin) with bare arrays treated as unit-spaced."""
    grid = getattr(field, "grid", None)
    values = np.asarray(getattr(field, "values", field), dtype=np.float64)
    if values.ndim != 2:
        raise ValueError("field values must be 2-D")
    if grid is None:
        return values, 1.0, (0.0, 0.0)
    return values, float(grid.spacing), (float(grid.origin[0]), float(grid.origin[1]))


def saddle_alternation_map(field):
    """Alternation counts for every vertex (0 on the boundary ring)."""
    values, _, _ = _field_and_geometry(field)
    return _alternation_map(values, _CYC_DX, _CYC_DY)


def detect_saddles(field):
    """All interior vertices with >= 4 neighbourhood sign alternations."""
    values, _, _ = _field_and_geometry(field)
    alt = _alternation_map(values, _CYC_DX, _CYC_DY)
    ys, xs = np.nonzero(alt >= 4)
    return [
        DiscreteSaddle(vertex=(int(x), int(y)), value=float(values[y, x]),
                       alternations=int(alt[y, x]))
        for y, x in zip(ys, xs)
    ]


# ---------------------------------------------------------------------------
# Four-arm reach


def _neighbour_runs(values, sx, sy):
    """Maximal cyclic runs of equal-sign neighbours (zeros collapsed).

    Returns a list of (sign, [(x, y), ...]) in cyclic order.
    """
    v = values[sy, sx]
    signed = []
    for k in range(8):
        x, y = sx + int(_CYC_DX[k]), sy + int(_CYC_DY[k])
        d = values[y, x] - v
        if d > 0:
            signed.append((1, (x, y)))
        elif d < 0:
            signed.append((-1, (x, y)))
    if not signed:
        return []
    runs = []
    for sign, cell in signed:
        if runs and runs[-1][0] == sign:
            runs[-1][1].append(cell)
        else:
            runs.append((sign, [cell]))
    if len(runs) > 1 and runs[0][0] == runs[-1][0]:
        runs[0] = (runs[0][0], runs[-1][1] + runs[0][1])
        runs.pop()
    return runs


_STRUCT4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


def _interleaved(m, ia, ic, ib, id_):
    """Whether plus runs (ia, ic) and minus runs (ib, id_) alternate cyclically."""
    span = (ic - ia) % m
    b_in = 0 < (ib - ia) % m < span
    d_in = 0 < (id_ - ia) % m < span
    return b_in != d_in


def _arm_selection(values, sx, sy, rc):
    """Interleaved four-arm selection inside the rc-cell ball, if one exists.

    Returns None or a list of four (sign, label_grid, label, window_origin)
    arms in cyclic order; the caller only needs existence plus the label
    geometry for exit bookkeeping.
    """
    ny, nx = values.shape
    k = int(math.floor(rc))
    if sx - k < 0 or sy - k < 0 or sx + k >= nx or sy + k >= ny:
        raise ValueError("arm ball exceeds the grid")
    win = values[sy - k : sy + k + 1, sx - k : sx + k + 1]
    offs = np.arange(-k, k + 1, dtype=np.float64)
    dist = np.hypot(offs[None, :], offs[:, None])
    ball = dist <= rc + 1e-9
    centre = (k, k)
    v = values[sy, sx]
    shell = ball & (dist > rc - 1.0)

    masks = {}
    labels = {}
    reach = {}
    for sign, member in ((1, win >= v), (-1, win <= v)):
        m = member & ball
        m[centre] = False
        lab, _ = ndimage.label(m, structure=_STRUCT4)
        masks[sign] = m
        labels[sign] = lab
        reach[sign] = set(np.unique(lab[shell & m]).tolist()) - {0}

    runs = _neighbour_runs(values, sx, sy)
    m_runs = len(runs)
    if m_runs < 4:
        return None
    run_info = []
    for sign, cells in runs:
        labs = set()
        for x, y in cells:
            lab = labels[sign][y - (sy - k), x - (sx - k)]
            if lab > 0 and lab in reach[sign]:
                labs.add(int(lab))
        run_info.append((sign, labs))

    plus = [i for i, (s, _) in enumerate(run_info) if s == 1]
    minus = [i for i, (s, _) in enumerate(run_info) if s == -1]
    for a_idx in range(len(plus)):
        for c_idx in range(a_idx + 1, len(plus)):
            ia, ic = plus[a_idx], plus[c_idx]
            for b_idx in range(len(minus)):
                for d_idx in range(b_idx + 1, len(minus)):
                    ib, id_ = minus[b_idx], minus[d_idx]
                    if not _interleaved(m_runs, ia, ic, ib, id_):
                        continue
                    choice = []
                    ok = True
                    for i1, i2 in ((ia, ic), (ib, id_)):
                        s1, l1 = run_info[i1]
                        s2, l2 = run_info[i2]
                        pick = None
                        for la in sorted(l1):
                            for lb in sorted(l2):
                                if la != lb:
                                    pick = (s1, la, s2, lb)
                                    break
                            if pick:
                                break
                        if pick is None:
                            ok = False
                            break
                        choice.append(pick)
                    if ok:
                        return {
                            "window_origin": (sx - k, sy - k),
                            "labels": labels,
                            "arms": [
                                (choice[0][0], choice[0][1]),
                                (choice[1][0], choice[1][1]),
                                (choice[0][2], choice[0][3]),
                                (choice[1][2], choice[1][3]),
                            ],
                        }
    return None


def saddle_arms_reach(field, saddle, R):
    """Whether four alternating arms from the saddle reach distance R.

    R is in field-length units.  True when two closed-super-level and two
    closed-sub-level arms, in pairwise distinct components of the punctured
    R-ball and interleaved around the saddle, all meet the ball's outer
    shell.  Monotone: truth at R implies truth at any smaller radius.
    """
    values, spacing, _ = _field_and_geometry(field)
    rc = R / spacing
    if rc < 1.0:
        raise ValueError("R must be at least one grid spacing")
    sx, sy = saddle.vertex
    return _arm_selection(values, sx, sy, rc) is not None


def estimate_four_arm(
    kernel, R_list, n, master_seed, spacing=0.5, sampler="spectral", workers=1
):
    """P[some saddle in the central unit ball reaches distance R], per R.

    Draws n fields on a grid sized for the largest R; every R shares the
    same fields, so the estimates are monotone non-increasing in R sample
    by sample.  Returns {R: EstimatorReport}.
    """
    R_list = sorted(float(R) for R in R_list)
    if not R_list or R_list[0] <= 0:
        raise ValueError("R_list must contain positive radii")
    if n < 1:
        raise ValueError("n must be >= 1")
    half = R_list[-1] + 1.0 + 2 * spacing
    k = int(math.ceil(half / spacing))
    side = 2 * k + 1
    from .kernels import GridSpec

    grid = GridSpec(side, side, spacing)
    smp = make_sampler(kernel, grid, sampler)
    centre = (k, k)
    ball_cells = 1.0 / spacing

    import time

    t0 = time.perf_counter()

    def block(lo, hi):
        counts = np.zeros(len(R_list), dtype=np.int64)
        for i in range(lo, hi):
            values = smp.sample_values(replicate_rng(master_seed, i))
            alt = _alternation_map(values, _CYC_DX, _CYC_DY)
            ys, xs = np.nonzero(alt >= 4)
            near = (xs - centre[0]) ** 2 + (ys - centre[1]) ** 2 <= ball_cells**2
            best = -1
            for y, x in zip(ys[near], xs[near]):
                reached = best
                for j in range(best + 1, len(R_list)):
                    if _arm_selection(values, int(x), int(y), R_list[j] / spacing):
                        reached = j
                    else:
                        break
                best = max(best, reached)
                if best == len(R_list) - 1:
                    break
            if best >= 0:
                counts[: best + 1] += 1
        return counts

    parts = run_blocks(block, n, workers=workers, block_size=DEFAULT_BLOCK)
    counts = np.zeros(len(R_list), dtype=np.int64)
    for p in parts:
        counts += p
    wall = time.perf_counter() - t0
    out = {}
    for j, R in enumerate(R_list):
        p_hat = counts[j] / n
        out[R] = EstimatorReport(
            estimate=float(p_hat),
            stderr=float(math.sqrt(max(p_hat * (1 - p_hat), 0.0) / n)),
            n=n,
            seed=master_seed,
            wall_time=wall,
            metadata={"R": f"{R:.12g}", "count": str(int(counts[j]))},
        )
    return out


# ---------------------------------------------------------------------------
# Circle criticality and the interior bound


def _bilinear(values, px, py):
    ny, nx = values.shape
    x0 = np.clip(np.floor(px).astype(np.int64), 0, nx - 2)
    y0 = np.clip(np.floor(py).astype(np.int64), 0, ny - 2)
    tx = px - x0
    ty = py - y0
    return (
        values[y0, x0] * (1 - tx) * (1 - ty)
        + values[y0, x0 + 1] * tx * (1 - ty)
        + values[y0 + 1, x0] * (1 - tx) * ty
        + values[y0 + 1, x0 + 1] * tx * ty
    )


def default_circle_resolution(R_cells):
    return max(64, int(math.ceil(8 * math.pi * R_cells)))


def _circle_extrema_angles(values, cx, cy, rc, n_theta):
    """Angles (sorted, in [0, 2pi)) of strict local extrema on the circle."""
    theta = np.linspace(0.0, 2 * math.pi, n_theta, endpoint=False)
    ring = _bilinear(values, cx + rc * np.cos(theta), cy + rc * np.sin(theta))
    nxt = np.roll(ring, -1)
    if np.any(ring == nxt):
        raise DegenerateCircleError("plateau on the circle restriction")
    prev = np.roll(ring, 1)
    extreme = ((ring > prev) & (ring > nxt)) | ((ring < prev) & (ring < nxt))
    return theta[extreme]


def circle_critical_points(field, center, R, n_theta=None):
    """Strict local extrema of the field restricted to a centred circle.

    center and R are in field-length units.  Samples n_theta equally spaced
    angles with bilinear interpolation; raises DegenerateCircleError on a
    flat plateau (equal consecutive samples).  The count is even.
    """
    values, spacing, origin = _field_and_geometry(field)
    cx = (center[0] - origin[0]) / spacing
    cy = (center[1] - origin[1]) / spacing
    rc = R / spacing
    if n_theta is None:
        n_theta = default_circle_resolution(rc)
    if n_theta < 16:
        raise ValueError("n_theta must be >= 16")
    ny, nx = values.shape
    if cx - rc < 0 or cy - rc < 0 or cx + rc > nx - 1 or cy + rc > ny - 1:
        raise ValueError("circle exceeds the grid")
    return _circle_extrema_angles(values, cx, cy, rc, n_theta).size


def _grid_centre(values, spacing, origin):
    ny, nx = values.shape
    return (
        origin[0] + spacing * (nx - 1) / 2.0,
        origin[1] + spacing * (ny - 1) / 2.0,
    )


def _central_2R_saddles(field, R):
    values, spacing, origin = _field_and_geometry(field)
    centre = _grid_centre(values, spacing, origin)
    ccx = (centre[0] - origin[0]) / spacing
    ccy = (centre[1] - origin[1]) / spacing
    rc = R / spacing
    ny, nx = values.shape
    need = 3.0 * rc
    if ccx - need < 0 or ccy - need < 0 or ccx + need > nx - 1 or ccy + need > ny - 1:
        raise ValueError("grid too small: need the 3R ball around the centre")
    alt = _alternation_map(values, _CYC_DX, _CYC_DY)
    ys, xs = np.nonzero(alt >= 4)
    inside = (xs - ccx) ** 2 + (ys - ccy) ** 2 <= rc * rc
    found = []
    for y, x in zip(ys[inside], xs[inside]):
        sel = _arm_selection(values, int(x), int(y), 2.0 * rc)
        if sel is not None:
            found.append(((int(x), int(y)), sel))
    return found, centre


def interior_saddle_bound_check(field, R, n_theta=None):
    """Compare central 2R-reaching saddles with circle extrema on radius R.

    Returns (n_saddles_2R, n_boundary_crit, holds) where holds means
    n_saddles_2R <= max(0, n_boundary_crit - 3).  The ball is centred on
    the grid centre; R is in field-length units.
    """
    found, centre = _central_2R_saddles(field, R)
    n_circ = circle_critical_points(field, centre, R, n_theta=n_theta)
    n_sad = len(found)
    return n_sad, n_circ, n_sad <= max(0, n_circ - 3)


def four_partition_compatibility(field, R):
    """Pairwise laminarity of the arm stars of central 2R-saddles.

    Each saddle's four arms exit the radius-R circle at four angles, which
    split the circle's strict local extrema into four classes; two saddles
    are compatible when their partitions coincide (adjacent vertices often
    detect one underlying saddle) or when one class of the first contains
    all but one class of the second (the containment is automatically
    symmetric).  Returns (n_pairs_checked, n_violations).  Diagnostic only
    — the grid proxy has no exactness guarantee.
    """
    values, spacing, origin = _field_and_geometry(field)
    found, centre = _central_2R_saddles(field, R)
    ccx = (centre[0] - origin[0]) / spacing
    ccy = (centre[1] - origin[1]) / spacing
    rc = R / spacing
    crit = _circle_extrema_angles(
        values, ccx, ccy, rc, default_circle_resolution(rc)
    )

    def first_exit(mask, wx, wy, ox, oy):
        # Breadth-first walk of the arm from the saddle's own neighbourhood;
        # the first cell on or past the circle plays the role of the arm
        # path's first intersection with it.
        seen = {(wx, wy)}
        queue = deque()
        for dx, dy in zip(_CYC_DX, _CYC_DY):
            p = (wx + int(dx), wy + int(dy))
            if 0 <= p[1] < mask.shape[0] and 0 <= p[0] < mask.shape[1]:
                if mask[p[1], p[0]] and p not in seen:
                    seen.add(p)
                    queue.append(p)
        while queue:
            x, y = queue.popleft()
            gx, gy = x + ox, y + oy
            if math.hypot(gx - ccx, gy - ccy) >= rc:
                return math.atan2(gy - ccy, gx - ccx) % (2 * math.pi)
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                p = (x + dx, y + dy)
                if 0 <= p[1] < mask.shape[0] and 0 <= p[0] < mask.shape[1]:
                    if mask[p[1], p[0]] and p not in seen:
                        seen.add(p)
                        queue.append(p)
        return None

    def exit_angles(entry):
        (sx, sy), sel = entry
        ox, oy = sel["window_origin"]
        angles = []
        for sign, lab in sel["arms"]:
            ang = first_exit(sel["labels"][sign] == lab, sx - ox, sy - oy, ox, oy)
            if ang is None:
                return None
            angles.append(ang)
        return sorted(angles)

    def classes(cuts):
        # Partition the extremum indices into the four cyclic arcs
        # [cuts[k], cuts[k+1]) delimited by the exit angles.
        out = [set(), set(), set(), set()]
        for idx, ang in enumerate(crit):
            k = int(np.searchsorted(cuts, ang, side="right")) - 1
            out[k % 4].add(idx)
        return [frozenset(c) for c in out]

    stars = [classes(a) for a in (exit_angles(e) for e in found) if a is not None]
    everything = frozenset(range(crit.size))

    def compatible(a, b):
        # Equal partitions arise when adjacent vertices detect the same
        # underlying saddle; only genuinely different partitions must nest.
        if set(a) == set(b):
            return True
        return any(everything - pj <= pi for pi in a for pj in b)

    n_pairs = 0
    n_viol = 0
    for i in range(len(stars)):
        for j in range(i + 1, len(stars)):
            n_pairs += 1
            if not compatible(stars[i], stars[j]):
                n_viol += 1
    return n_pairs, n_viol
