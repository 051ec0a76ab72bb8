"""Shared test helpers: an independent reference oracle for event queries.

Everything here is deliberately written from scratch in pure Python
(dict/set BFS, explicit loops) so that agreement with the library is
evidence of correctness rather than of shared code.  The reference
evaluates each event kind directly from its definition:

- rectangle crossing: breadth-first search over active cells;
- annulus circuit: the operational definition — no inactive 8-connected
  path within the annulus from its inner boundary cells to its outer
  boundary cells (the primal "separating circuit" picture is provided
  separately; the two coincide whenever b - a exceeds one diagonal
  step, and the operational form is the contract);
- X-shape: one active component of the strip box meets all four rays.
"""

import numpy as np
import pytest

from excursion_lab.percolation import AnnulusCircuit, RectCross, XEvent

N4 = ((1, 0), (-1, 0), (0, 1), (0, -1))
N8 = N4 + ((1, 1), (1, -1), (-1, 1), (-1, -1))


def bfs_reach(cells, starts, neighbours):
    """Set of cells reachable from starts inside the given cell set."""
    cells = set(cells)
    frontier = [c for c in starts if c in cells]
    seen = set(frontier)
    while frontier:
        x, y = frontier.pop()
        for dx, dy in neighbours:
            nxt = (x + dx, y + dy)
            if nxt in cells and nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return seen


def components(cells, neighbours):
    """List of connected components (as sets) of a cell set."""
    remaining = set(cells)
    out = []
    while remaining:
        start = next(iter(remaining))
        comp = bfs_reach(remaining, [start], neighbours)
        remaining -= comp
        out.append(comp)
    return out


def reference_boundary_cycle(width, height):
    """Boundary cells in cycle order, recomputed with explicit loops."""
    if width == 1:
        return [(0, y) for y in range(height)]
    if height == 1:
        return [(x, 0) for x in range(width)]
    cyc = [(x, 0) for x in range(width)]
    cyc += [(width - 1, y) for y in range(1, height)]
    cyc += [(x, height - 1) for x in range(width - 2, -1, -1)]
    cyc += [(0, y) for y in range(height - 2, 0, -1)]
    return cyc


def _arc_cells(cycle, lo, hi):
    n = len(cycle)
    return [cycle[i % n] for i in range(lo, hi)]


def reference_rect_cross(active, spec: RectCross):
    w = spec.x1 - spec.x0
    h = spec.y1 - spec.y0
    cycle = reference_boundary_cycle(w, h)
    arc0 = [(spec.x0 + x, spec.y0 + y) for x, y in _arc_cells(cycle, *spec.s0)]
    arc2 = [(spec.x0 + x, spec.y0 + y) for x, y in _arc_cells(cycle, *spec.s2)]
    inside = {
        (x, y)
        for y in range(spec.y0, spec.y1)
        for x in range(spec.x0, spec.x1)
        if active[y, x]
    }
    if (w == 1 or h == 1) and spec.s0 == spec.s2:
        return any(c in inside for c in arc0)
    reached = bfs_reach(inside, [c for c in arc0 if c in inside], N4)
    return any(c in reached for c in arc2)


def reference_annulus(active, spec: AnnulusCircuit):
    """Operational circuit check: no inactive 8-path crosses the annulus.

    Inner (outer) boundary cells are annulus cells with an 8-neighbour
    position — on-grid or not — at distance < a (> b).  The event holds
    iff no 8-connected path of inactive annulus cells joins an inner
    boundary cell to an outer boundary cell.
    """
    ny, nx = active.shape

    def dist(x, y):
        return ((x - spec.cx) ** 2 + (y - spec.cy) ** 2) ** 0.5

    ann = {
        (x, y)
        for y in range(ny)
        for x in range(nx)
        if spec.a <= dist(x, y) <= spec.b
    }
    inner = {
        c for c in ann
        if any(dist(c[0] + dx, c[1] + dy) < spec.a for dx, dy in N8)
    }
    outer = {
        c for c in ann
        if any(dist(c[0] + dx, c[1] + dy) > spec.b for dx, dy in N8)
    }
    inactive_ann = {c for c in ann if not active[c[1], c[0]]}
    reached = bfs_reach(inactive_ann, [c for c in inner if c in inactive_ann], N8)
    return not any(c in reached for c in outer)


def primal_annulus_separates(active, spec: AnnulusCircuit):
    """Does some active 4-component of the annulus separate hole from infinity?

    The intuitive picture behind the circuit event: a component separates
    iff, with its cells removed from the plane, no 8-connected path leads
    from the disc around the centre off the grid.  Implies the operational
    definition always; equivalent to it when b - a > sqrt(2), i.e. when a
    single diagonal step cannot jump the annulus.
    """
    ny, nx = active.shape

    def dist(x, y):
        return ((x - spec.cx) ** 2 + (y - spec.cy) ** 2) ** 0.5

    ann = {
        (x, y)
        for y in range(ny)
        for x in range(nx)
        if spec.a <= dist(x, y) <= spec.b
    }
    active_ann = {c for c in ann if active[c[1], c[0]]}
    # Seeds for the escape search: every cell centre strictly inside the
    # inner radius, or the cell containing the centre if no such cell.
    hole = [
        (x, y) for y in range(ny) for x in range(nx) if dist(x, y) < spec.a
    ]
    if not hole:
        cx = min(max(int(round(spec.cx)), 0), nx - 1)
        cy = min(max(int(round(spec.cy)), 0), ny - 1)
        hole = [(cx, cy)]
    for comp in components(active_ann, N4):
        frontier = [c for c in hole if c not in comp]
        if not frontier:
            continue
        seen = set(frontier)
        escaped = False
        while frontier and not escaped:
            x, y = frontier.pop()
            for dx, dy in N8:
                p = (x + dx, y + dy)
                if not (0 <= p[0] < nx and 0 <= p[1] < ny):
                    escaped = True
                    break
                if p not in comp and p not in seen:
                    seen.add(p)
                    frontier.append(p)
        if not escaped:
            return True
    return False


def reference_x_event(active, spec: XEvent):
    x_left = spec.x0
    x_right = spec.x0 + spec.width - 1
    low = list(range(spec.y0, spec.y_base)) or [spec.y0]
    top = spec.y_base + spec.gap
    high = list(range(top, spec.y1)) or [spec.y1 - 1]
    box = {
        (x, y)
        for y in range(spec.y0, spec.y1)
        for x in range(spec.x0, spec.x0 + spec.width)
        if active[y, x]
    }
    rays = [
        {(x_left, y) for y in low},
        {(x_left, y) for y in high},
        {(x_right, y) for y in low},
        {(x_right, y) for y in high},
    ]
    for comp in components(box, N4):
        if all(comp & ray for ray in rays):
            return True
    return False


def reference_has_event(active, spec):
    active = np.asarray(active, dtype=bool)
    if isinstance(spec, RectCross):
        return reference_rect_cross(active, spec)
    if isinstance(spec, AnnulusCircuit):
        return reference_annulus(active, spec)
    if isinstance(spec, XEvent):
        return reference_x_event(active, spec)
    raise TypeError(f"unsupported event {type(spec).__name__}")


def reference_maximin_T(values, spec: RectCross):
    """Brute-force T for a rectangle crossing: -max over paths of min f.

    Activates cells one by one in decreasing value order (ties by
    (row, col)) and reports minus the value completing the event, with
    the completing cell.  Independent of both sweep and bisection.
    """
    values = np.asarray(values, dtype=np.float64)
    ny, nx = values.shape
    order = sorted(
        ((x, y) for y in range(ny) for x in range(nx)),
        key=lambda c: (-values[c[1], c[0]], c[1], c[0]),
    )
    active = np.zeros_like(values, dtype=bool)
    for x, y in order:
        active[y, x] = True
        if reference_rect_cross(active, spec):
            return -values[y, x], (x, y)
    raise AssertionError("event impossible on full activation")


@pytest.fixture
def rng():
    return np.random.default_rng(20260823)
