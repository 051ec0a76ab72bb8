"""Variance and delocalisation estimators for threshold heights.

For a Gaussian field f = LW on a finite grid and any of the increasing
events, the threshold T(f) is Lipschitz in W with gradient supported on the
pivot cell, which yields an exact covariance identity for Gaussian vectors:

    Var(T) = integral over s in (0, 1) of E[kappa(x_S(f) - x_S(f_s))] ds,

where f_s = s f + sqrt(1 - s^2) f~ is the Ornstein-Uhlenbeck coupling of f
with an independent copy f~ (s = e^{-t} absorbs the e^{-t} weight exactly)
and kappa is the field's covariance function at the physical offset between
the two pivot locations.  This module estimates both sides, profiles where
the pivot lands (the delocalisation quantity sigma(r) = sup_x P[S in
B_x(r)]), tabulates the bound functionals built from sigma, and provides
the hypercontractive and tanh-integral inequality checks used alongside
them.  All estimators are bit-reproducible from (inputs, master_seed) for
any worker count: replicates use counter-based per-index streams and are
reduced in fixed block order.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field as dataclass_field

import numpy as np
from scipy import integrate, ndimage

from .kernels import ExactSampler, make_sampler
from .parallel import DEFAULT_BLOCK, run_blocks
from .rng import derive_seed, replicate_rng
from .threshold import threshold_sweep_batch

__all__ = [
    "EstimatorReport",
    "ThresholdSamples",
    "DelocProfile",
    "BoundReport",
    "HypercontractivityReport",
    "TailProfile",
    "sample_thresholds",
    "empirical_variance_T",
    "variance_formula_rhs",
    "deloc_profile",
    "bound_report",
    "hypercontractivity_check",
    "tanh_bound_check",
    "tail_profile",
]


@dataclass
class EstimatorReport:
    """Monte Carlo estimate with its standard error and provenance."""

    estimate: float
    stderr: float
    n: int
    seed: int
    wall_time: float
    metadata: dict = dataclass_field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        # NaN estimate/stderr pairs mark undefined estimates.
        if not (self.stderr >= 0) and not (
            math.isnan(self.stderr) and math.isnan(self.estimate)
        ):
            raise ValueError("stderr must be non-negative")


@dataclass
class ThresholdSamples:
    """Per-replicate sweep outputs: T values and pivot cell coordinates."""

    T: np.ndarray
    sx: np.ndarray
    sy: np.ndarray
    seed: int


# ---------------------------------------------------------------------------
# Field batching (deterministic per replicate index)


def _values_block(sampler, seed, lo, hi):
    """Row-major flat field values for replicates [lo, hi)."""
    n_cells = sampler.grid.n_cells
    if isinstance(sampler, ExactSampler):
        z = np.empty((hi - lo, n_cells))
        for i in range(lo, hi):
            z[i - lo] = replicate_rng(seed, i).standard_normal(n_cells)
        return z @ sampler._chol.T
    out = np.empty((hi - lo, n_cells))
    for i in range(lo, hi):
        out[i - lo] = sampler.sample_values(replicate_rng(seed, i)).reshape(-1)
    return out


def sample_thresholds(
    kernel, grid, spec, n, master_seed, sampler="exact", workers=1,
    block_size=DEFAULT_BLOCK,
):
    """Draw n independent fields and sweep each: returns T and pivot arrays.

    Replicate i always uses the stream keyed (master_seed, i), so results are
    byte-identical for any worker count or block schedule.
    """
    smp = sampler if hasattr(sampler, "sample_values") else make_sampler(
        kernel, grid, sampler
    )
    shape = (grid.ny, grid.nx)

    def block(lo, hi):
        vals = _values_block(smp, master_seed, lo, hi)
        return threshold_sweep_batch(vals, spec, grid_shape=shape)

    parts = run_blocks(block, n, workers=workers, block_size=block_size)
    T = np.concatenate([p[0] for p in parts])
    sx = np.concatenate([p[1] for p in parts])
    sy = np.concatenate([p[2] for p in parts])
    return ThresholdSamples(T=T, sx=sx, sy=sy, seed=master_seed)


# ---------------------------------------------------------------------------
# Both sides of the variance identity


def jackknife_variance_stderr(T):
    """Standard error of the sample variance by leave-one-out jackknife."""
    n = T.size
    if n < 4:
        # Too few replicates for a stable jackknife; normal-theory fallback.
        return float(np.var(T, ddof=1) * math.sqrt(2.0 / max(n - 1, 1)))
    s1 = T.sum()
    s2 = np.square(T).sum()
    m = n - 1
    loo = (s2 - np.square(T) - np.square(s1 - T) / m) / (m - 1)
    return float(math.sqrt((n - 1) / n * np.square(loo - loo.mean()).sum()))


def empirical_variance_T(
    kernel, grid, spec, n, master_seed, sampler="exact", workers=1
):
    """Sample variance of T over n independent fields, jackknife stderr."""
    if n < 2:
        raise ValueError("variance needs n >= 2")
    t0 = time.perf_counter()
    samples = sample_thresholds(
        kernel, grid, spec, n, master_seed, sampler=sampler, workers=workers
    )
    est = float(np.var(samples.T, ddof=1))
    se = jackknife_variance_stderr(samples.T)
    return EstimatorReport(
        estimate=est,
        stderr=se,
        n=n,
        seed=master_seed,
        wall_time=time.perf_counter() - t0,
        metadata={"mean_T": f"{np.mean(samples.T):.12g}", "side": "empirical"},
    )


def _h_prime(theta, t):
    return (theta / 2.0) * np.exp(theta * t / 2.0)


def variance_formula_rhs(
    kernel, grid, spec, n_pairs, quad_nodes, master_seed, h_theta=None, workers=1
):
    """Right side of the variance identity by Gauss-Legendre quadrature.

    For each node s_q in (0, 1), draws n_pairs coupled pairs (f, f_sq),
    sweeps both, and averages kappa at the physical offset between the two
    pivots; node means combine with the quadrature weights.  The estimator
    is symmetrised: each draw contributes both kappa(S(f) - S(f_s)) and the
    term with f and f~ exchanged, whose expectations agree because kappa is
    even.  With h_theta set, each term carries the weight h'(T) h'(T_s) for
    h(t) = exp(h_theta * t / 2), estimating Var(h(T)) instead.

    Requires the exact sampler (the identity is exact for finite Gaussian
    vectors).  Per-node sub-streams are derived from master_seed, so the
    result is independent of workers and block schedule.
    """
    if n_pairs < 2:
        raise ValueError("need n_pairs >= 2")
    if quad_nodes < 1:
        raise ValueError("need quad_nodes >= 1")
    t0 = time.perf_counter()
    smp = ExactSampler(kernel, grid)
    shape = (grid.ny, grid.nx)
    n_cells = grid.n_cells
    spacing = grid.spacing
    x_leg, w_leg = np.polynomial.legendre.leggauss(quad_nodes)
    nodes = (x_leg + 1.0) / 2.0
    weights = w_leg / 2.0

    node_mean = np.empty(quad_nodes)
    node_se = np.empty(quad_nodes)
    half1_total = 0.0
    half2_total = 0.0

    for q in range(quad_nodes):
        s = nodes[q]
        c = math.sqrt(max(0.0, 1.0 - s * s))
        sub_seed = derive_seed(master_seed, f"rhs-node-{q}")

        def block(lo, hi, s=s, c=c, sub_seed=sub_seed):
            m = hi - lo
            z = np.empty((m, 2 * n_cells))
            for i in range(lo, hi):
                z[i - lo] = replicate_rng(sub_seed, i).standard_normal(2 * n_cells)
            f = z[:, :n_cells] @ smp._chol.T
            g = z[:, n_cells:] @ smp._chol.T
            stacked = np.concatenate([f, s * f + c * g, g, s * g + c * f])
            T, sx, sy, _ = threshold_sweep_batch(stacked, spec, grid_shape=shape)
            Tf, Tfs, Tg, Tgs = np.split(T, 4)
            xf, xfs, xg, xgs = np.split(sx, 4)
            yf, yfs, yg, ygs = np.split(sy, 4)
            k1 = kernel.evaluate((xf - xfs) * spacing, (yf - yfs) * spacing)
            k2 = kernel.evaluate((xg - xgs) * spacing, (yg - ygs) * spacing)
            if h_theta is not None:
                k1 = k1 * _h_prime(h_theta, Tf) * _h_prime(h_theta, Tfs)
                k2 = k2 * _h_prime(h_theta, Tg) * _h_prime(h_theta, Tgs)
            a = 0.5 * (k1 + k2)
            return float(a.sum()), float(np.square(a).sum()), float(k1.sum()), float(k2.sum())

        parts = run_blocks(block, n_pairs, workers=workers)
        sa = sum(p[0] for p in parts)
        saa = sum(p[1] for p in parts)
        half1_total += weights[q] * sum(p[2] for p in parts) / n_pairs
        half2_total += weights[q] * sum(p[3] for p in parts) / n_pairs
        mean = sa / n_pairs
        var = max(saa / n_pairs - mean * mean, 0.0)
        node_mean[q] = mean
        node_se[q] = math.sqrt(var / n_pairs)

    # Normalising by the weight mass, computed with the same dot-product
    # reduction, makes constant integrands (e.g. the one-cell event, where
    # every node mean is exactly kappa(0)) come out exact in floating point.
    denom = float(np.dot(weights, np.ones_like(weights)))
    estimate = float(np.dot(weights, node_mean) / denom)
    stderr = float(math.sqrt(np.dot(np.square(weights), np.square(node_se))) / denom)
    meta = {
        "side": "formula",
        "quad_nodes": str(quad_nodes),
        "half1": f"{half1_total:.12g}",
        "half2": f"{half2_total:.12g}",
        "node_s": json.dumps([f"{v:.12g}" for v in nodes]),
        "node_estimate": json.dumps([f"{v:.12g}" for v in node_mean]),
        "node_stderr": json.dumps([f"{v:.12g}" for v in node_se]),
    }
    if h_theta is not None:
        meta["h_theta"] = f"{h_theta:.12g}"
    return EstimatorReport(
        estimate=estimate,
        stderr=stderr,
        n=n_pairs,
        seed=master_seed,
        wall_time=time.perf_counter() - t0,
        metadata=meta,
    )


# ---------------------------------------------------------------------------
# Delocalisation profile and bound functionals


@dataclass
class DelocProfile:
    """Empirical sup-ball hit probabilities of the pivot location.

    sigma[j] estimates sup over cell centers x of P[S in B_x(radii[j])],
    with the sup restricted to the grid's cell centers; counts is the raw
    per-cell hit heatmap.
    """

    radii: np.ndarray
    sigma: np.ndarray
    counts: np.ndarray
    n: int


def deloc_profile(samples, grid, radii):
    """Profile sigma(r) from pivot samples at the given physical radii.

    samples may be a ThresholdSamples or an (n, 2) array of (x, y) cells.
    Ball membership uses cell-center distances in field-length units.
    """
    if hasattr(samples, "sx"):
        sx, sy = np.asarray(samples.sx), np.asarray(samples.sy)
    else:
        arr = np.asarray(samples)
        sx, sy = arr[:, 0], arr[:, 1]
    n = sx.size
    if n < 100:
        raise ValueError("delocalisation profile needs at least 100 samples")
    radii = np.asarray(radii, dtype=np.float64)
    if radii.size == 0 or np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be ascending and positive")
    counts = np.zeros((grid.ny, grid.nx), dtype=np.int64)
    np.add.at(counts, (sy, sx), 1)
    sigma = np.empty(radii.size)
    for j, r in enumerate(radii):
        rc = r / grid.spacing
        k = int(math.floor(rc))
        offs = np.arange(-k, k + 1)
        disc = (offs[:, None] ** 2 + offs[None, :] ** 2) <= rc * rc + 1e-12
        ball_counts = ndimage.convolve(
            counts, disc.astype(np.int64), mode="constant", cval=0
        )
        sigma[j] = ball_counts.max() / n
    return DelocProfile(radii=radii, sigma=sigma, counts=counts, n=n)


@dataclass
class BoundReport:
    """Bound functionals built from the delocalisation profile.

    m_bar[j] = max(kappa_bar(r_j), 1 / |log sigma(r_j)|); m_lower[j] =
    sigma(r_j)^3 * r_j^-4 * max(log r_j, |log sigma(r_j)|)^-2.  Radii where
    sigma is 0 or 1 are flagged degenerate and carry NaN entries.  ratio is
    var_hat / min of m_bar over non-degenerate radii (trend quantity only;
    no constant-level claim is made).
    """

    r_grid: np.ndarray
    m_bar: np.ndarray
    m_lower: np.ndarray
    var_hat: float
    degenerate: np.ndarray
    ratio: float


def bound_report(kernel, deloc, var_hat, r_grid, search_radius=None, step=1e-3):
    """Tabulate the upper/lower bound functionals at the requested radii.

    Each r in r_grid must match one of the profile's radii.
    """
    r_grid = np.asarray(r_grid, dtype=np.float64)
    if search_radius is None:
        search_radius = float(2.0 * r_grid.max() + 10.0)
    m_bar = np.empty(r_grid.size)
    m_lower = np.empty(r_grid.size)
    degenerate = np.zeros(r_grid.size, dtype=bool)
    for j, r in enumerate(r_grid):
        match = np.flatnonzero(np.isclose(deloc.radii, r, rtol=1e-9, atol=1e-12))
        if match.size != 1:
            raise ValueError(f"radius {r} not present in the profile")
        sig = float(deloc.sigma[match[0]])
        if sig <= 0.0 or sig >= 1.0:
            degenerate[j] = True
            m_bar[j] = np.nan
            m_lower[j] = np.nan
            continue
        log_sig = abs(math.log(sig))
        m_bar[j] = max(kernel.kappa_bar(r, search_radius, step=step), 1.0 / log_sig)
        m_lower[j] = sig**3 * r**-4.0 * max(math.log(r), log_sig) ** -2.0
    good = m_bar[~degenerate]
    ratio = float(var_hat / good.min()) if good.size else float("nan")
    return BoundReport(
        r_grid=r_grid,
        m_bar=m_bar,
        m_lower=m_lower,
        var_hat=float(var_hat),
        degenerate=degenerate,
        ratio=ratio,
    )


# ---------------------------------------------------------------------------
# Hypercontractivity check


@dataclass
class HypercontractivityReport:
    """Per-super-cell test of the OU hypercontractive inequality.

    For each partition block j, C'_j is the block together with its
    adjacent blocks, and the inequality under test is
    P[S(f) in C'_j, S(f_t) in C'_j] <= P[S(f) in C'_j]^(2/p) with
    p = 1 + e^{-t}.  violations lists blocks where the left side exceeds
    the right by more than 3 combined standard errors.
    """

    t: float
    p_norm: float
    blocks: list
    lhs: np.ndarray
    rhs: np.ndarray
    stderr: np.ndarray
    violations: list
    n_pairs: int
    seed: int


def hypercontractivity_check(
    kernel, grid, spec, cell_partition, t, n_pairs, master_seed, workers=1
):
    """Monte Carlo check of the OU hypercontractive inequality per super-cell.

    cell_partition is the side length, in cells, of the square partition
    blocks.  t >= 0 is the OU time (t = inf uses an independent partner).
    """
    if cell_partition < 1:
        raise ValueError("cell_partition must be >= 1")
    if not (t >= 0):
        raise ValueError("t must be >= 0")
    s = math.exp(-t) if np.isfinite(t) else 0.0
    c = math.sqrt(max(0.0, 1.0 - s * s))
    p_norm = 1.0 + s
    smp = ExactSampler(kernel, grid)
    shape = (grid.ny, grid.nx)
    n_cells = grid.n_cells
    nbx = -(-grid.nx // cell_partition)
    nby = -(-grid.ny // cell_partition)
    n_blocks = nbx * nby
    seed = derive_seed(master_seed, "hyper")

    def block_fn(lo, hi):
        m = hi - lo
        z = np.empty((m, 2 * n_cells))
        for i in range(lo, hi):
            z[i - lo] = replicate_rng(seed, i).standard_normal(2 * n_cells)
        f = z[:, :n_cells] @ smp._chol.T
        ft = s * f + c * (z[:, n_cells:] @ smp._chol.T)
        T, sx, sy, _ = threshold_sweep_batch(
            np.concatenate([f, ft]), spec, grid_shape=shape
        )
        bx, bxt = np.split(sx // cell_partition, 2)
        by, byt = np.split(sy // cell_partition, 2)
        b = by * nbx + bx
        bt = byt * nbx + bxt
        joint = np.zeros((n_blocks, n_blocks), dtype=np.int64)
        np.add.at(joint, (b, bt), 1)
        marg = np.zeros(n_blocks, dtype=np.int64)
        np.add.at(marg, b, 1)
        return joint, marg

    parts = run_blocks(block_fn, n_pairs, workers=workers)
    joint = np.zeros((n_blocks, n_blocks), dtype=np.int64)
    marg = np.zeros(n_blocks, dtype=np.int64)
    for pj, pm in parts:
        joint += pj
        marg += pm

    lhs = np.empty(n_blocks)
    rhs = np.empty(n_blocks)
    se = np.empty(n_blocks)
    blocks = []
    violations = []
    exponent = 2.0 / p_norm
    for jb in range(n_blocks):
        jy, jx = divmod(jb, nbx)
        hood = []
        for yy in range(max(0, jy - 1), min(nby, jy + 2)):
            for xx in range(max(0, jx - 1), min(nbx, jx + 2)):
                hood.append(yy * nbx + xx)
        hood = np.array(hood)
        p_hat = marg[hood].sum() / n_pairs
        lhs_hat = joint[np.ix_(hood, hood)].sum() / n_pairs
        se_l = math.sqrt(max(lhs_hat * (1 - lhs_hat), 0.0) / n_pairs)
        se_p = math.sqrt(max(p_hat * (1 - p_hat), 0.0) / n_pairs)
        se_r = exponent * p_hat ** (exponent - 1.0) * se_p if p_hat > 0 else 0.0
        lhs[jb] = lhs_hat
        rhs[jb] = p_hat**exponent
        se[jb] = math.sqrt(se_l * se_l + se_r * se_r)
        blocks.append((jx, jy))
        if lhs_hat - rhs[jb] > 3.0 * se[jb]:
            violations.append((jx, jy))
    return HypercontractivityReport(
        t=float(t),
        p_norm=p_norm,
        blocks=blocks,
        lhs=lhs,
        rhs=rhs,
        stderr=se,
        violations=violations,
        n_pairs=n_pairs,
        seed=master_seed,
    )


# ---------------------------------------------------------------------------
# Inequality and tail utilities


def tanh_bound_check(alpha):
    """Check the integral bound int_0^inf alpha^tanh(t/2) e^-t dt <= 2/|ln alpha|.

    Returns (lhs, rhs); raises if alpha is outside (0, 1) or the inequality
    fails beyond quadrature tolerance.
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    lhs, _ = integrate.quad(
        lambda t: alpha ** math.tanh(t / 2.0) * math.exp(-t),
        0.0,
        np.inf,
        epsabs=1e-10,
        limit=200,
    )
    rhs = 2.0 / abs(math.log(alpha))
    if lhs > rhs + 1e-8:
        raise ArithmeticError(
            f"tanh integral bound violated: lhs={lhs!r} > rhs={rhs!r}"
        )
    return float(lhs), float(rhs)


@dataclass
class TailProfile:
    """Centered exceedance table P[|T - mean| >= t] with Wilson intervals.

    rate is the least-squares exponential decay exponent fitted through the
    origin on ln p over the tail region (exceedance <= 0.5 and positive);
    NaN when fewer than two tail points exist.
    """

    thresholds: np.ndarray
    exceedance: np.ndarray
    wilson_low: np.ndarray
    wilson_high: np.ndarray
    rate: float
    n: int


def _wilson(k, n, z=1.96):
    p = k / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return center - half, center + half


def tail_profile(t_samples, thresholds):
    """Exceedance profile of |T - mean(T)| at the given thresholds."""
    T = np.asarray(t_samples, dtype=np.float64).reshape(-1)
    if T.size < 1000:
        raise ValueError("tail profile needs at least 1000 samples")
    thresholds = np.asarray(thresholds, dtype=np.float64)
    dev = np.abs(T - T.mean())
    n = T.size
    p = np.empty(thresholds.size)
    lo = np.empty(thresholds.size)
    hi = np.empty(thresholds.size)
    for j, th in enumerate(thresholds):
        k = int(np.count_nonzero(dev >= th))
        p[j] = k / n
        lo[j], hi[j] = _wilson(k, n)
    tail = (p > 0) & (p <= 0.5) & (thresholds > 0)
    if np.count_nonzero(tail) >= 2:
        ts = thresholds[tail]
        rate = float(-(ts @ np.log(p[tail])) / (ts @ ts))
    else:
        rate = float("nan")
    return TailProfile(
        thresholds=thresholds,
        exceedance=p,
        wilson_low=lo,
        wilson_high=hi,
        rate=rate,
        n=n,
    )
