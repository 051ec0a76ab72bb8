"""Threshold height and location for increasing excursion events.

Every event in :mod:`.percolation` is increasing in the active set, so for a
fixed field f there is a least level at which the event holds:

    T(f) = inf{level : event holds on {f >= -level}}.

On a finite grid the infimum is attained at a grid value, and there is a
pivot cell S whose activation completes the event, with f(S) = -T exactly.
A single descending sweep recovers both: activate cells in decreasing field
order (ties broken by (row, column) position), merge 4-connected neighbours
with a union-find whose roots remember which distinguished terminal sets
their component touches, and stop at the first cell whose component touches
all of them.

Annulus circuits are handled through matching-lattice duality: the circuit
holds iff the inactive set has no 8-connected path from the inner to the
outer boundary of the annulus, so the sweep runs on -f with 8-connectivity
between those boundaries and the threshold is negated back.  In both modes
the certificate f(S) = -T holds exactly.

An independent bisection oracle evaluates events directly on prefix
configurations via :func:`.percolation.has_event` and binary-searches the
least prefix length; with the shared tie order it must agree with the sweep
cell-for-cell.  A Kruskal variant covers rectangular edge lattices, where
T = -(maximin over terminal-to-terminal edge paths of the minimum edge
value).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field
from functools import lru_cache

import numpy as np
from numba import njit

from .percolation import (
    AnnulusCircuit,
    RectCross,
    XEvent,
    _annulus_geometry,
    _check_domain,
    has_event,
)

__all__ = [
    "EventImpossibleError",
    "ThresholdResult",
    "threshold_sweep",
    "threshold_sweep_batch",
    "threshold_bisect_oracle",
    "EdgeLattice",
    "threshold_sweep_edges",
    "four_arm_certificate",
    "event_domain_mask",
]


class EventImpossibleError(RuntimeError):
    """Raised when no configuration on the domain realises the event."""


@dataclass(frozen=True)
class ThresholdResult:
    """Outcome of a threshold sweep.

    T is the least level at which the event holds; S is the pivot — the
    cell (x, y) whose activation completes the event, or the edge index in
    edge-lattice mode; merge_rank is S's position in the descending sweep
    order; certificate is the field value at S and equals -T exactly.
    on_boundary / on_corner record whether S lies on the event domain's
    boundary (cell events only; always False in edge mode).
    """

    T: float
    S: object
    merge_rank: int
    certificate: float
    on_boundary: bool = False
    on_corner: bool = False


# ---------------------------------------------------------------------------
# Union-find cores


@njit(cache=True, nogil=True)
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True, nogil=True)
def _sweep_core(order, nbr_idx, nbr_count, term_mask, need_mask):
    n = order.shape[0]
    parent = np.full(n, -1, dtype=np.int64)
    size = np.ones(n, dtype=np.int64)
    mask = term_mask.copy()
    for step in range(n):
        c = order[step]
        parent[c] = c
        for k in range(nbr_count[c]):
            nb = nbr_idx[c, k]
            if parent[nb] >= 0:
                ra = _find(parent, c)
                rb = _find(parent, nb)
                if ra != rb:
                    if size[ra] < size[rb]:
                        ra, rb = rb, ra
                    parent[rb] = ra
                    size[ra] += size[rb]
                    mask[ra] |= mask[rb]
        r = _find(parent, c)
        if (mask[r] & need_mask) == need_mask:
            return step, c
    return -1, -1


@njit(cache=True, nogil=True)
def _sweep_batch_core(orders, nbr_idx, nbr_count, term_mask, need_mask, out_rank, out_cell):
    for i in range(orders.shape[0]):
        rank, cell = _sweep_core(orders[i], nbr_idx, nbr_count, term_mask, need_mask)
        out_rank[i] = rank
        out_cell[i] = cell


@njit(cache=True, nogil=True)
def _edge_sweep_core(order, edge_u, edge_v, vertex_mask, need_mask):
    n_vertices = vertex_mask.shape[0]
    parent = np.arange(n_vertices)
    size = np.ones(n_vertices, dtype=np.int64)
    mask = vertex_mask.copy()
    for step in range(order.shape[0]):
        e = order[step]
        ra = _find(parent, edge_u[e])
        rb = _find(parent, edge_v[e])
        if ra != rb:
            if size[ra] < size[rb]:
                ra, rb = rb, ra
            parent[rb] = ra
            size[ra] += size[rb]
            mask[ra] |= mask[rb]
            if (mask[ra] & need_mask) == need_mask:
                return step, e
    return -1, -1


# ---------------------------------------------------------------------------
# Sweep geometry (cached per event spec and grid shape)


class _SweepGeometry:
    """Precomputed domain, adjacency, and terminal data for one event."""

    __slots__ = (
        "dual",
        "cell_index",
        "nbr_idx",
        "nbr_count",
        "term_mask",
        "need_mask",
        "boundary",
        "corner",
        "nx",
    )

    def __init__(self, dual, cell_index, nbr_idx, nbr_count, term_mask, need_mask,
                 boundary, corner, nx):
        self.dual = dual
        self.cell_index = cell_index
        self.nbr_idx = nbr_idx
        self.nbr_count = nbr_count
        self.term_mask = term_mask
        self.need_mask = need_mask
        self.boundary = boundary
        self.corner = corner
        self.nx = nx


_OFFSETS4 = ((1, 0), (-1, 0), (0, 1), (0, -1))
_OFFSETS8 = _OFFSETS4 + ((1, 1), (1, -1), (-1, 1), (-1, -1))


def _adjacency(mask, offsets):
    ny, nx = mask.shape
    cell_index = np.flatnonzero(mask.reshape(-1)).astype(np.int64)
    n = cell_index.size
    dom_of = np.full(ny * nx, -1, dtype=np.int64)
    dom_of[cell_index] = np.arange(n)
    ys, xs = np.divmod(cell_index, nx)
    nbr_idx = np.full((n, len(offsets)), -1, dtype=np.int64)
    nbr_count = np.zeros(n, dtype=np.int64)
    rows = np.arange(n)
    for dx, dy in offsets:
        x2 = xs + dx
        y2 = ys + dy
        ok = (x2 >= 0) & (x2 < nx) & (y2 >= 0) & (y2 < ny)
        nb = np.full(n, -1, dtype=np.int64)
        nb[ok] = dom_of[y2[ok] * nx + x2[ok]]
        take = nb >= 0
        nbr_idx[rows[take], nbr_count[take]] = nb[take]
        nbr_count[take] += 1
    return cell_index, dom_of, nbr_idx, nbr_count


def _box_boundary_masks(cell_index, nx, x0, y0, x1, y1):
    ys, xs = np.divmod(cell_index, nx)
    on_x = (xs == x0) | (xs == x1 - 1)
    on_y = (ys == y0) | (ys == y1 - 1)
    return on_x | on_y, on_x & on_y


@lru_cache(maxsize=256)
def _geometry_for(spec, shape):
    ny, nx = shape
    if isinstance(spec, RectCross):
        _check_domain(shape, spec.x0, spec.y0, spec.x1, spec.y1)
        mask = np.zeros(shape, dtype=bool)
        mask[spec.y0 : spec.y1, spec.x0 : spec.x1] = True
        cell_index, dom_of, nbr_idx, nbr_count = _adjacency(mask, _OFFSETS4)
        term = np.zeros(cell_index.size, dtype=np.uint8)
        for bit, which in ((1, "s0"), (2, "s2")):
            cells = spec.arc_cells(which)
            term[dom_of[cells[:, 1] * nx + cells[:, 0]]] |= bit
        boundary, corner = _box_boundary_masks(
            cell_index, nx, spec.x0, spec.y0, spec.x1, spec.y1
        )
        return _SweepGeometry(
            False, cell_index, nbr_idx, nbr_count, term, np.uint8(3),
            boundary, corner, nx,
        )
    if isinstance(spec, XEvent):
        x1 = spec.x0 + spec.width
        _check_domain(shape, spec.x0, spec.y0, x1, spec.y1)
        mask = np.zeros(shape, dtype=bool)
        mask[spec.y0 : spec.y1, spec.x0 : x1] = True
        cell_index, dom_of, nbr_idx, nbr_count = _adjacency(mask, _OFFSETS4)
        term = np.zeros(cell_index.size, dtype=np.uint8)
        low, high = spec.ray_rows()
        for bit_pair, col in ((0, spec.x0), (2, x1 - 1)):
            term[dom_of[low * nx + col]] |= np.uint8(1 << bit_pair)
            term[dom_of[high * nx + col]] |= np.uint8(1 << (bit_pair + 1))
        boundary, corner = _box_boundary_masks(
            cell_index, nx, spec.x0, spec.y0, x1, spec.y1
        )
        return _SweepGeometry(
            False, cell_index, nbr_idx, nbr_count, term, np.uint8(15),
            boundary, corner, nx,
        )
    if isinstance(spec, AnnulusCircuit):
        ann, inner, outer = _annulus_geometry(spec, shape)
        cell_index, dom_of, nbr_idx, nbr_count = _adjacency(ann, _OFFSETS8)
        term = np.zeros(cell_index.size, dtype=np.uint8)
        term[dom_of[np.flatnonzero(inner.reshape(-1))]] |= 1
        term[dom_of[np.flatnonzero(outer.reshape(-1))]] |= 2
        boundary = term > 0
        corner = np.zeros_like(boundary)
        return _SweepGeometry(
            True, cell_index, nbr_idx, nbr_count, term, np.uint8(3),
            boundary, corner, nx,
        )
    raise TypeError(f"unknown event spec {type(spec).__name__}")


def event_domain_mask(spec, shape):
    """Boolean grid marking the cells an event can see."""
    geom = _geometry_for(spec, tuple(shape))
    mask = np.zeros(int(shape[0]) * int(shape[1]), dtype=bool)
    mask[geom.cell_index] = True
    return mask.reshape(shape)


# ---------------------------------------------------------------------------
# Sweeps


def _field_values(field):
    values = getattr(field, "values", field)
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"field values must be 2-D, got shape {arr.shape}")
    return arr


def _sweep_order(values_flat, geom):
    vals = values_flat[geom.cell_index]
    if geom.dual:
        vals = -vals
    return np.argsort(-vals, kind="stable").astype(np.int64)


def threshold_sweep(field, spec):
    """Threshold height and pivot cell of an increasing event.

    Accepts a FieldSample or a bare (ny, nx) value array.  Ties in field
    values resolve by (row, column) position, identically to the bisection
    oracle.
    """
    values = _field_values(field)
    geom = _geometry_for(spec, values.shape)
    flat = values.reshape(-1)
    order = _sweep_order(flat, geom)
    rank, dom = _sweep_core(
        order, geom.nbr_idx, geom.nbr_count, geom.term_mask, geom.need_mask
    )
    if rank < 0:
        raise EventImpossibleError(
            f"{type(spec).__name__} terminals never connect on this domain"
        )
    cell = int(geom.cell_index[dom])
    y, x = divmod(cell, geom.nx)
    value = float(flat[cell])
    return ThresholdResult(
        T=-value,
        S=(int(x), int(y)),
        merge_rank=int(rank),
        certificate=value,
        on_boundary=bool(geom.boundary[dom]),
        on_corner=bool(geom.corner[dom]),
    )


def threshold_sweep_batch(values_batch, spec, grid_shape=None):
    """Vectorised sweep over a batch of fields sharing one event.

    values_batch is (m, ny, nx), or (m, n_cells) row-major flats with
    grid_shape=(ny, nx) given.  Returns (T, sx, sy, merge_rank) arrays of
    length m; (sx, sy) are the pivot cell coordinates.
    """
    arr = np.asarray(values_batch, dtype=np.float64)
    if arr.ndim == 3:
        shape = arr.shape[1:]
        flat = arr.reshape(arr.shape[0], -1)
    elif arr.ndim == 2 and grid_shape is not None:
        shape = (int(grid_shape[0]), int(grid_shape[1]))
        if arr.shape[1] != shape[0] * shape[1]:
            raise ValueError("flat batch width does not match grid_shape")
        flat = arr
    else:
        raise ValueError("need (m, ny, nx) values or (m, n_cells) with grid_shape")
    geom = _geometry_for(spec, shape)
    vals = flat[:, geom.cell_index]
    if geom.dual:
        vals = -vals
    orders = np.argsort(-vals, axis=1, kind="stable").astype(np.int64)
    m = orders.shape[0]
    out_rank = np.empty(m, dtype=np.int64)
    out_cell = np.empty(m, dtype=np.int64)
    _sweep_batch_core(
        orders, geom.nbr_idx, geom.nbr_count, geom.term_mask, geom.need_mask,
        out_rank, out_cell,
    )
    if np.any(out_rank < 0):
        raise EventImpossibleError(
            f"{type(spec).__name__} terminals never connect on this domain"
        )
    cells = geom.cell_index[out_cell]
    sy, sx = np.divmod(cells, geom.nx)
    T = -flat[np.arange(m), cells]
    return T, sx.astype(np.int64), sy.astype(np.int64), out_rank


def threshold_bisect_oracle(field, spec):
    """Independent threshold computation by direct event evaluation.

    Binary-searches the least prefix of cells, taken in decreasing field
    order (dual order for circuits), whose activation realises the event,
    evaluating each candidate with :func:`.percolation.has_event`.  Returns
    (T, S) and must agree with :func:`threshold_sweep` exactly, ties
    included.
    """
    values = _field_values(field)
    geom = _geometry_for(spec, values.shape)
    flat = values.reshape(-1)
    order = _sweep_order(flat, geom)
    n = order.size
    ny_nx = flat.size

    def holds(k):
        chosen = geom.cell_index[order[:k]]
        if geom.dual:
            active = np.ones(ny_nx, dtype=bool)
            active[chosen] = False
            return not has_event(active.reshape(values.shape), spec)
        active = np.zeros(ny_nx, dtype=bool)
        active[chosen] = True
        return has_event(active.reshape(values.shape), spec)

    if not holds(n):
        raise EventImpossibleError(
            f"{type(spec).__name__} cannot occur even with every cell active"
        )
    lo, hi = 1, n
    while lo < hi:
        mid = (lo + hi) // 2
        if holds(mid):
            hi = mid
        else:
            lo = mid + 1
    cell = int(geom.cell_index[order[lo - 1]])
    y, x = divmod(cell, geom.nx)
    return -float(flat[cell]), (int(x), int(y))


# ---------------------------------------------------------------------------
# Edge lattices (Bernoulli-style bond model)


@lru_cache(maxsize=64)
def _edge_endpoints_table(width, height):
    """Canonical edge order: horizontal edges row-major, then vertical."""
    xs, ys = np.meshgrid(np.arange(width - 1), np.arange(height))
    hu = (ys * width + xs).reshape(-1)
    xs2, ys2 = np.meshgrid(np.arange(width), np.arange(height - 1))
    vu = (ys2 * width + xs2).reshape(-1)
    u = np.concatenate([hu, vu]).astype(np.int64)
    v = np.concatenate([hu + 1, vu + width]).astype(np.int64)
    return u, v


@dataclass
class EdgeLattice:
    """Rectangular grid graph with one value per edge and two terminal sets.

    Vertices are (x, y) with 0 <= x < width, 0 <= y < height, flattened
    row-major.  Edges follow the canonical order: horizontal (x,y)-(x+1,y)
    row-major, then vertical (x,y)-(x,y+1) row-major.  set_a and set_b are
    disjoint non-empty vertex index arrays (the left/right columns in the
    standard crossing setup).
    """

    width: int
    height: int
    edge_values: np.ndarray
    set_a: np.ndarray = dataclass_field(default=None)
    set_b: np.ndarray = dataclass_field(default=None)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("lattice must have positive dimensions")
        self.edge_values = np.asarray(self.edge_values, dtype=np.float64).reshape(-1)
        if self.edge_values.size != self.n_edges:
            raise ValueError(
                f"expected {self.n_edges} edge values, got {self.edge_values.size}"
            )
        if not np.all(np.isfinite(self.edge_values)):
            raise ValueError("edge values must be finite")
        if self.set_a is None:
            self.set_a = np.arange(self.height) * self.width
        if self.set_b is None:
            self.set_b = np.arange(self.height) * self.width + (self.width - 1)
        self.set_a = np.asarray(self.set_a, dtype=np.int64).reshape(-1)
        self.set_b = np.asarray(self.set_b, dtype=np.int64).reshape(-1)
        for name, s in (("set_a", self.set_a), ("set_b", self.set_b)):
            if s.size == 0:
                raise ValueError(f"{name} must be non-empty")
            if s.min() < 0 or s.max() >= self.n_vertices:
                raise ValueError(f"{name} contains out-of-range vertex indices")
        if np.intersect1d(self.set_a, self.set_b).size:
            raise ValueError("terminal vertex sets must be disjoint")

    @property
    def n_vertices(self):
        return self.width * self.height

    @property
    def n_edges(self):
        return (self.width - 1) * self.height + self.width * (self.height - 1)

    def edge_endpoints(self, index):
        """Endpoints ((x0, y0), (x1, y1)) of the edge at a canonical index."""
        u, v = _edge_endpoints_table(self.width, self.height)
        a, b = int(u[index]), int(v[index])
        return (
            (a % self.width, a // self.width),
            (b % self.width, b // self.width),
        )

    @classmethod
    def left_right(cls, width, height, edge_values):
        """Lattice with the left and right vertex columns as terminals."""
        if width < 2:
            raise ValueError("left-right terminals need width >= 2")
        return cls(width=width, height=height, edge_values=edge_values)


def threshold_sweep_edges(lat):
    """Kruskal threshold sweep on an edge lattice.

    Adds edges in decreasing value order until the two terminal vertex sets
    connect; T is minus that edge's value, S its canonical index.
    Equivalently T = -(maximin over terminal-joining edge paths of the
    minimum edge value along the path).
    """
    u, v = _edge_endpoints_table(lat.width, lat.height)
    order = np.argsort(-lat.edge_values, kind="stable").astype(np.int64)
    vmask = np.zeros(lat.n_vertices, dtype=np.uint8)
    vmask[lat.set_a] |= 1
    vmask[lat.set_b] |= 2
    rank, e = _edge_sweep_core(order, u, v, vmask, np.uint8(3))
    if rank < 0:
        raise EventImpossibleError("terminal vertex sets never connect")
    value = float(lat.edge_values[e])
    return ThresholdResult(
        T=-value, S=int(e), merge_rank=int(rank), certificate=value
    )


# ---------------------------------------------------------------------------
# Diagnostics


def four_arm_certificate(field, spec):
    """Arm structure around the pivot at the threshold level (diagnostic).

    In the sweep's orientation (dual for circuits), collects the connected
    components of the at-threshold active set minus the pivot that are
    adjacent to the pivot, and likewise for the inactive remainder of the
    domain under the matching connectivity.  Reports the counts and whether
    active arms reach both terminal sets.  Grid arms are approximate stand-ins
    for continuum arm quadruples; use for inspection, not verification.
    """
    values = _field_values(field)
    result = threshold_sweep(values, spec)
    geom = _geometry_for(spec, values.shape)
    flat = values.reshape(-1)
    vals = flat[geom.cell_index]
    if geom.dual:
        vals = -vals
    sx, sy = result.S
    pivot_flat = sy * geom.nx + sx
    dom_of = {int(c): i for i, c in enumerate(geom.cell_index)}
    pivot_dom = dom_of[pivot_flat]
    active = vals >= vals[pivot_dom]

    n = vals.size
    domain = np.zeros(flat.size, dtype=bool)
    domain[geom.cell_index] = True
    matching_offsets = _OFFSETS4 if geom.dual else _OFFSETS8
    _, _, match_idx, match_count = _adjacency(
        domain.reshape(values.shape), matching_offsets
    )

    def components(member, nbr_idx, nbr_count):
        parent = np.arange(n)

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for c in range(n):
            if not member[c]:
                continue
            for k in range(nbr_count[c]):
                nb = nbr_idx[c, k]
                if member[nb]:
                    ra, rb = find(c), find(nb)
                    if ra != rb:
                        parent[rb] = ra
        return find

    active_wo = active.copy()
    active_wo[pivot_dom] = False
    find_a = components(active_wo, geom.nbr_idx, geom.nbr_count)
    arm_roots = set()
    touches = 0
    for k in range(geom.nbr_count[pivot_dom]):
        nb = geom.nbr_idx[pivot_dom, k]
        if active_wo[nb]:
            arm_roots.add(find_a(int(nb)))
    for root in list(arm_roots):
        bits = 0
        for c in range(n):
            if active_wo[c] and find_a(c) == root:
                bits |= int(geom.term_mask[c])
        touches |= bits

    inactive = ~active
    find_b = components(inactive, match_idx, match_count)
    inactive_roots = set()
    for k in range(match_count[pivot_dom]):
        nb = match_idx[pivot_dom, k]
        if inactive[nb]:
            inactive_roots.add(find_b(int(nb)))

    return {
        "T": result.T,
        "S": result.S,
        "n_active_arms": len(arm_roots),
        "n_inactive_arms": len(inactive_roots),
        "active_arms_reach_terminals": (touches & int(geom.need_mask))
        == int(geom.need_mask),
    }
