"""Acceptance suite: one test per numbered release criterion.

Each test runs one end-to-end check at its stated sample size and tolerance
and prints a single ``[PASS] criterion N: ...`` (or ``[FAIL]``) line, so
``pytest tests/test_acceptance.py -s`` yields a thirteen-line scoreboard.
Statistical checks use fixed seeds; their margins were sized so a pass
reflects a systematic effect, not a lucky draw.
"""

import csv
import json
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate, stats

from conftest import N8, bfs_reach
from test_threshold import _enumerate_path_maximin

import excursion_lab.experiments as experiments
from excursion_lab.kernels import (
    FieldSample,
    GridSpec,
    StationaryKernel,
    make_sampler,
)
from excursion_lab.percolation import (
    AnnulusCircuit,
    cross_lr,
    estimate_event_probability,
)
from excursion_lab.saddles import (
    circle_critical_points,
    estimate_four_arm,
    interior_saddle_bound_check,
)
from excursion_lab.threshold import (
    EdgeLattice,
    threshold_bisect_oracle,
    threshold_sweep,
    threshold_sweep_edges,
)
from excursion_lab.variance import (
    deloc_profile,
    empirical_variance_T,
    hypercontractivity_check,
    sample_thresholds,
    tanh_bound_check,
    variance_formula_rhs,
)


def _verdict(num, label, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {label}"
    if detail:
        line += f" -- {detail}"
    print(line)
    assert ok, line


def _white_field(rng, side=8):
    grid = GridSpec(side, side, 1.0)
    return FieldSample(grid, rng.standard_normal((side, side)), "white", None, "manual")


def test_criterion_01_self_dual_square_crossing():
    """Level-0 square crossing probability is 1/2 up to finite-size error.

    Random plane-wave field on a 256 x 256 grid spanning ~51 length units;
    2000 replicates, single worker, wall-clock budget ten minutes.
    """
    kernel = StationaryKernel("plane-wave")
    grid = GridSpec(256, 256, 0.2)
    sampler = make_sampler(kernel, grid, "spectral")
    event = cross_lr(0, 0, 256, 256)
    t0 = time.monotonic()
    _, est, _ = estimate_event_probability(
        sampler, [event], [0.0], 2000, 60001, workers=1
    )
    wall = time.monotonic() - t0
    p_hat = float(est[0, 0])
    _verdict(
        1,
        "self-dual square crossing at level 0",
        abs(p_hat - 0.5) <= 0.03 and wall < 600.0,
        f"p_hat={p_hat:.4f}, {wall:.0f}s single-threaded",
    )


def test_criterion_02_variance_formula_two_routes():
    """Quadrature variance formula agrees with the direct MC variance.

    Gaussian kernel, exact sampling, 12 x 12 square crossing; 16 quadrature
    nodes and 2e5 pairs against 2e5 direct threshold samples.  The 1 x 1
    instance is a closed-form anchor: T is minus the one cell value, so both
    sides equal 1, and the quadrature route is deterministic there.
    """
    kernel = StationaryKernel.gaussian(1.0)
    grid = GridSpec(12, 12, 0.7)
    spec = cross_lr(0, 0, 12, 12)
    rhs = variance_formula_rhs(
        kernel, grid, spec, n_pairs=200_000, quad_nodes=16, master_seed=60021,
        workers=8,
    )
    emp = empirical_variance_T(kernel, grid, spec, 200_000, 60022, workers=8)
    gap = abs(rhs.estimate - emp.estimate)
    tol = 3.0 * math.hypot(rhs.stderr, emp.stderr)

    cell = GridSpec(1, 1, 1.0)
    cell_spec = cross_lr(0, 0, 1, 1)
    r1 = variance_formula_rhs(
        kernel, cell, cell_spec, n_pairs=2000, quad_nodes=16, master_seed=60023
    )
    e1 = empirical_variance_T(kernel, cell, cell_spec, 200_000, 60024, workers=8)
    single_ok = abs(r1.estimate - 1.0) <= 1e-9 and abs(e1.estimate - 1.0) <= 4.0 * e1.stderr
    _verdict(
        2,
        "variance formula matches empirical variance",
        gap <= tol and single_ok,
        f"12x12 gap={gap:.5f} tol={tol:.5f}; single-cell rhs={r1.estimate!r}",
    )


def test_criterion_03_threshold_oracle_equivalence():
    """Union-find sweep and direct bisection agree exactly on (T, S).

    1e3 random 8 x 8 fields, each checked for the rectangle crossing and
    an annulus circuit, plus every value ordering of the 2 x 2 crossing.
    """
    rng = np.random.default_rng(60031)
    events = (cross_lr(0, 0, 8, 8), AnnulusCircuit(3.5, 3.5, 1.0, 3.0))
    mismatches = 0
    for _ in range(1000):
        field = _white_field(rng)
        for spec in events:
            res = threshold_sweep(field, spec)
            t_ref, s_ref = threshold_bisect_oracle(field, spec)
            if res.T != t_ref or tuple(res.S) != tuple(s_ref):
                mismatches += 1

    import itertools

    grid2 = GridSpec(2, 2, 1.0)
    spec2 = cross_lr(0, 0, 2, 2)
    exhaustive = 0
    for perm in itertools.permutations((0.25, 0.5, 0.75, 1.0)):
        vals = np.array(perm, dtype=np.float64).reshape(2, 2)
        field = FieldSample(grid2, vals, "white", None, "manual")
        res = threshold_sweep(field, spec2)
        t_ref, s_ref = threshold_bisect_oracle(field, spec2)
        if res.T != t_ref or tuple(res.S) != tuple(s_ref):
            exhaustive += 1
    _verdict(
        3,
        "threshold sweep equals bisection oracle",
        mismatches == 0 and exhaustive == 0,
        f"random mismatches={mismatches}/2000, exhaustive 2x2 mismatches={exhaustive}/24",
    )


def _radial_dual_threshold(values, spec):
    """Least level at which an active 8-path joins the annulus boundaries.

    Independent reimplementation used for the circuit-duality identity: the
    circuit threshold of f must equal minus this quantity evaluated on -f.
    """
    ny, nx = values.shape

    def dist(x, y):
        return math.hypot(x - spec.cx, y - spec.cy)

    ann = [
        (x, y)
        for y in range(ny)
        for x in range(nx)
        if spec.a <= dist(x, y) <= spec.b
    ]
    inner = [
        c for c in ann
        if any(dist(c[0] + dx, c[1] + dy) < spec.a for dx, dy in N8)
    ]
    outer = {
        c for c in ann
        if any(dist(c[0] + dx, c[1] + dy) > spec.b for dx, dy in N8)
    }

    def path_at(level):
        act = {c for c in ann if values[c[1], c[0]] + level >= 0.0}
        reach = bfs_reach(act, [c for c in inner if c in act], N8)
        return any(c in reach for c in outer)

    cand = sorted({-values[c[1], c[0]] for c in ann})
    lo, hi = 0, len(cand) - 1
    if not path_at(cand[hi]):
        raise AssertionError("radial path impossible with every cell active")
    while lo < hi:
        mid = (lo + hi) // 2
        if path_at(cand[mid]):
            hi = mid
        else:
            lo = mid + 1
    return cand[lo]


def test_criterion_04_exact_identities():
    """Structural identities of the threshold map hold exactly.

    On 1e3 random instances each: shift equivariance, the sup-norm
    Lipschitz bound, monotonicity under pointwise increase, the pivot
    certificate f(S) = -T, and circuit duality T_circ(f) = -T_dual(-f)
    against an independent dual-path computation.
    """
    rng = np.random.default_rng(60041)
    grid = GridSpec(8, 8, 1.0)
    spec = cross_lr(0, 0, 8, 8)
    ann = AnnulusCircuit(3.5, 3.5, 1.0, 3.0)
    shift_bad = lip_bad = mono_bad = cert_bad = dual_bad = 0
    fp_guard = 1e-12
    for _ in range(1000):
        vals = rng.standard_normal((8, 8))
        field = FieldSample(grid, vals, "white", None, "manual")
        base = threshold_sweep(field, spec)

        c = float(rng.uniform(-1.0, 1.0))
        shifted = threshold_sweep(
            FieldSample(grid, vals + c, "white", None, "manual"), spec
        )
        if shifted.T != base.T - c or tuple(shifted.S) != tuple(base.S):
            shift_bad += 1

        g = 0.3 * rng.standard_normal((8, 8))
        pert = threshold_sweep(
            FieldSample(grid, vals + g, "white", None, "manual"), spec
        )
        if abs(pert.T - base.T) > np.abs(g).max() + fp_guard:
            lip_bad += 1

        up = np.abs(rng.standard_normal((8, 8)))
        raised = threshold_sweep(
            FieldSample(grid, vals + up, "white", None, "manual"), spec
        )
        if raised.T > base.T + fp_guard:
            mono_bad += 1

        circ = threshold_sweep(field, ann)
        sx, sy = base.S
        cx, cy = circ.S
        if vals[sy, sx] != -base.T or vals[cy, cx] != -circ.T:
            cert_bad += 1

        if circ.T != -_radial_dual_threshold(-vals, ann):
            dual_bad += 1
    ok = shift_bad == lip_bad == mono_bad == cert_bad == dual_bad == 0
    _verdict(
        4,
        "exact threshold identities",
        ok,
        f"violations shift={shift_bad} lip={lip_bad} mono={mono_bad} "
        f"cert={cert_bad} dual={dual_bad} (1000 instances each)",
    )


def test_criterion_05_directional_derivative():
    """Finite differences of T along a direction recover -v(S).

    With the pivot S unchanged across h in {1e-2, 1e-3, 1e-4} the threshold
    is exactly linear in h, so the slope error must stay inside a linear
    envelope in h (rounding keeps it orders of magnitude below it).
    """
    rng = np.random.default_rng(60051)
    grid = GridSpec(8, 8, 1.0)
    spec = cross_lr(0, 0, 8, 8)
    steps = (1e-2, 1e-3, 1e-4)
    stable = 0
    attempts = 0
    worst_ratio = 0.0
    bad = 0
    while stable < 100 and attempts < 400:
        attempts += 1
        vals = rng.standard_normal((8, 8))
        v = rng.standard_normal((8, 8))
        base = threshold_sweep(FieldSample(grid, vals, "white", None, "manual"), spec)
        res_h = [
            threshold_sweep(
                FieldSample(grid, vals + h * v, "white", None, "manual"), spec
            )
            for h in steps
        ]
        if any(tuple(r.S) != tuple(base.S) for r in res_h):
            continue
        stable += 1
        sx, sy = base.S
        target = -v[sy, sx]
        for h, r in zip(steps, res_h):
            err = abs((r.T - base.T) / h - target)
            worst_ratio = max(worst_ratio, err / h)
            if err > 1e-4 * h:
                bad += 1
    _verdict(
        5,
        "directional derivative of the threshold",
        stable >= 100 and bad == 0,
        f"{stable} stable instances, max err/h={worst_ratio:.2e} (bound 1e-4)",
    )


def test_criterion_06_rsw_fuzz_builtin_plans(tmp_path):
    """Built-in glueing plans survive 1e4 random configs per plan per size.

    Runs the fuzz experiment end to end through the CLI with the default
    plan suite (sizes 8 and 16, densities 0.3/0.5/0.7) and requires a clean
    exit: the counterexample exit code must never fire on built-ins.
    """
    out_dir = tmp_path / "fuzz"
    cfg = {
        "kind": "rsw-fuzz",
        "out_dir": str(out_dir),
        "mc": {"master_seed": 60061, "n": 10000, "workers": 8},
    }
    cfg_path = tmp_path / "fuzz.json"
    cfg_path.write_text(json.dumps(cfg), encoding="utf-8")
    proc = subprocess.run(
        [sys.executable, "-m", "excursion_lab.cli", "run", "--config", str(cfg_path)],
        capture_output=True,
        text=True,
    )
    rows = []
    if proc.returncode == 0:
        with (out_dir / "results.csv").open(encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
    sizes_seen = sorted({row["R"] for row in rows})
    total = sum(int(row["n"]) for row in rows)
    clean = all(row["estimate"] == "0" for row in rows)
    per_plan = all(int(row["n"]) >= 10000 for row in rows)
    _verdict(
        6,
        "randomised fuzz of built-in plans",
        proc.returncode == 0 and len(rows) == 8 and clean and per_plan,
        f"exit={proc.returncode}, {len(rows)} plans (R={sizes_seen}), "
        f"{total} configs, zero counterexamples",
    )


def test_criterion_07_tanh_integral_bound():
    """The damped tanh integral stays below 2/|ln a| at all tested a.

    The library quadrature is cross-checked against adaptive quadrature to
    1e-8 absolute accuracy.
    """
    alphas = (0.999, 0.9, 1.0 / math.e, 0.1, 0.01, 1e-6)
    worst_gap = -math.inf
    worst_quad = 0.0
    ok = True
    for alpha in alphas:
        lhs, rhs = tanh_bound_check(alpha)
        ref, ref_err = integrate.quad(
            lambda t: alpha ** math.tanh(t / 2.0) * math.exp(-t),
            0.0,
            np.inf,
            epsabs=1e-12,
            epsrel=1e-12,
            limit=400,
        )
        quad_err = abs(lhs - ref)
        worst_quad = max(worst_quad, quad_err)
        worst_gap = max(worst_gap, lhs - rhs)
        if lhs > rhs or quad_err > 1e-8 or ref_err > 1e-9:
            ok = False
    _verdict(
        7,
        "tanh integral bound",
        ok,
        f"max lhs-rhs={worst_gap:.3e}, max quadrature error={worst_quad:.2e}",
    )


def test_criterion_08_hypercontractivity():
    """No super-cell violates the two-point hypercontractive bound.

    Exact-sampled 8 x 8 Gaussian-kernel field cut into 3 x 3 super-cells;
    t in {0, ln 2, 2}; 1e5 correlated pairs per t; a violation is an excess
    beyond three standard errors.  At t = 0 both sides coincide exactly.
    """
    kernel = StationaryKernel.gaussian(1.0)
    grid = GridSpec(8, 8, 0.7)
    spec = cross_lr(0, 0, 8, 8)
    ok = True
    details = []
    for t in (0.0, math.log(2.0), 2.0):
        rep = hypercontractivity_check(
            kernel, grid, spec, cell_partition=3, t=t,
            n_pairs=100_000, master_seed=60081, workers=8,
        )
        details.append(f"t={t:.2f}: {len(rep.violations)} violations")
        if rep.violations:
            ok = False
        if t == 0.0 and not np.allclose(rep.lhs, rep.rhs):
            ok = False
    _verdict(8, "hypercontractive block bound", ok, "; ".join(details))


def test_criterion_09_variance_decreases_with_scale():
    """Threshold variance falls as the crossing square grows.

    Random plane-wave field at spacing 0.5, square side R in {16, 32, 64}
    length units, 5000 replicates each: variance strictly decreasing and the
    95% intervals at R=16 and R=64 disjoint.
    """
    kernel = StationaryKernel("plane-wave")
    out = {}
    for R in (16.0, 32.0, 64.0):
        side = int(R / 0.5)
        grid = GridSpec(side, side, 0.5)
        rep = empirical_variance_T(
            kernel, grid, cross_lr(0, 0, side, side), 5000, 60091,
            sampler="spectral", workers=8,
        )
        out[R] = rep
    v16, v32, v64 = (out[R].estimate for R in (16.0, 32.0, 64.0))
    decreasing = v16 > v32 > v64
    lo16 = v16 - 1.96 * out[16.0].stderr
    hi64 = v64 + 1.96 * out[64.0].stderr
    _verdict(
        9,
        "threshold variance decreases with scale",
        decreasing and lo16 > hi64,
        f"var={v16:.4f}/{v32:.4f}/{v64:.4f}, CI gap {lo16:.4f} > {hi64:.4f}",
    )


def test_criterion_10_annulus_delocalisation():
    """The circuit pivot is angularly delocalised around the annulus.

    5000 exact-sampled pivots of an isotropic Gaussian-kernel field on a
    64 x 64 grid.  Chi-square over 24 angular sectors against the annulus'
    own discrete angular measure (cell count per sector -- equal sector
    probabilities would pretend the lattice has no discretisation), and the
    ball concentration sigma(r) at r = d0/20 stays below 10*(2r)/(2*pi*d0).
    """
    kernel = StationaryKernel.gaussian(3.0)
    grid = GridSpec(64, 64, 1.0)
    spec = AnnulusCircuit(31.5, 31.5, 14.0, 29.0)
    samples = sample_thresholds(
        kernel, grid, spec, 5000, 23, sampler="exact", workers=8
    )

    ys, xs = np.mgrid[0:64, 0:64]
    dist = np.hypot(xs - spec.cx, ys - spec.cy)
    in_annulus = (dist >= spec.a) & (dist <= spec.b)
    cell_angles = np.arctan2(ys - spec.cy, xs - spec.cx)[in_annulus]
    cell_counts = np.histogram(cell_angles, bins=24, range=(-np.pi, np.pi))[0]

    angles = np.arctan2(samples.sy - spec.cy, samples.sx - spec.cx)
    observed = np.histogram(angles, bins=24, range=(-np.pi, np.pi))[0]
    expected = cell_counts / cell_counts.sum() * observed.sum()
    p_value = float(stats.chisquare(observed, expected).pvalue)

    d0 = 2.0 * spec.b
    r = d0 / 20.0
    profile = deloc_profile(samples, grid, [r])
    sigma = float(profile.sigma[0])
    bound = 10.0 * (2.0 * r) / (2.0 * math.pi * d0)
    _verdict(
        10,
        "annulus pivot delocalisation",
        p_value > 0.01 and sigma <= bound,
        f"chi2 p={p_value:.3f}, sigma(d0/20)={sigma:.4f} <= {bound:.4f}",
    )


def test_criterion_11_saddle_suite():
    """Saddle statistics behave as predicted at accessible scales.

    (a) The interior saddle count stays within the circle-extrema budget in
    at least 99% of 500 random plane-wave fields; (b) the four-arm reach
    probability is non-increasing over R in {4, 8, 16} within confidence
    intervals; (c) the mean number of circle critical points grows linearly
    in R (mean/R stable within 20% over R in {10, 20, 40}).
    """
    kernel = StationaryKernel("plane-wave")

    side = 79
    grid = GridSpec(side, side, 0.5)
    sampler = make_sampler(kernel, grid, "spectral")
    from excursion_lab.rng import replicate_rng

    holds = 0
    for i in range(500):
        field = sampler.sample(replicate_rng(60111, i))
        _, _, bound_ok = interior_saddle_bound_check(field, 6.0)
        holds += bound_ok
    frac = holds / 500.0

    reports = estimate_four_arm(kernel, [4.0, 8.0, 16.0], 2000, 60112, workers=8)
    p4, p8, p16 = (reports[R].estimate for R in (4.0, 8.0, 16.0))
    s4, s8, s16 = (reports[R].stderr for R in (4.0, 8.0, 16.0))
    arm_ok = (
        p8 <= p4 + 1.96 * math.hypot(s4, s8)
        and p16 <= p8 + 1.96 * math.hypot(s8, s16)
    )

    ratios = {}
    for R in (10.0, 20.0, 40.0):
        side_c = 2 * int(2 * R) + 21
        grid_c = GridSpec(side_c, side_c, 0.5)
        sampler_c = make_sampler(kernel, grid_c, "spectral")
        centre = (side_c - 1) / 2 * 0.5
        counts = [
            circle_critical_points(
                sampler_c.sample(replicate_rng(60113, i)), (centre, centre), R
            )
            for i in range(200)
        ]
        ratios[R] = float(np.mean(counts)) / R
    spread = max(ratios.values()) / min(ratios.values())
    _verdict(
        11,
        "saddle suite",
        frac >= 0.99 and arm_ok and spread <= 1.20,
        f"bound holds {frac:.1%}; four-arm {p4:.3f}>={p8:.3f}>={p16:.3f}; "
        f"circle mean/R spread x{spread:.3f}",
    )


def test_criterion_12_bernoulli_edge_duality(tmp_path):
    """Edge-lattice self-duality and the minimax-path oracle.

    A 33 x 32 lattice with iid edge values is self-dual, so P[T <= 0] = 1/2;
    estimated over 1e4 sweeps through the experiment runner.  Separately,
    the Kruskal sweep must equal the brute-force path maximin on 1e3 random
    4 x 4 lattices.
    """
    cfg = experiments.ExperimentConfig.from_dict(
        {
            "kind": "bernoulli",
            "out_dir": str(tmp_path / "bern"),
            "mc": {"master_seed": 60121, "n": 10000, "workers": 8},
            "params": {"width": 33, "height": 32},
        }
    )
    experiments.run(cfg)
    with (tmp_path / "bern" / "results.csv").open(encoding="utf-8") as fh:
        rows = {row["param"]: row for row in csv.DictReader(fh)}
    p_hat = float(rows["p_T_le_0"]["estimate"])

    rng = np.random.default_rng(60122)
    mismatches = 0
    for _ in range(1000):
        lat = EdgeLattice.left_right(4, 4, rng.standard_normal(24))
        res = threshold_sweep_edges(lat)
        if res.T != -_enumerate_path_maximin(lat) or lat.edge_values[res.S] != -res.T:
            mismatches += 1
    _verdict(
        12,
        "edge-lattice duality and path oracle",
        abs(p_hat - 0.5) <= 0.02 and mismatches == 0,
        f"p_hat={p_hat:.4f} (33x32, n=10000); oracle mismatches={mismatches}/1000",
    )


def _determinism_configs(base_dir):
    seed = 60131
    kernel = {"kind": "plane-wave"}
    grid = {"spacing": 0.5}
    return {
        "crossing-curve": {
            "kind": "crossing-curve", "mc": {"master_seed": seed, "n": 600},
            "kernel": kernel, "grid": grid, "sampler": "spectral",
            "scales": [8], "levels": [0.0, 0.3],
        },
        "threshold-stats": {
            "kind": "threshold-stats", "mc": {"master_seed": seed, "n": 600},
            "kernel": kernel, "grid": grid, "sampler": "spectral",
            "scales": [8],
        },
        "variance-formula": {
            "kind": "variance-formula", "mc": {"master_seed": seed, "n": 600},
            "kernel": {"kind": "gaussian", "scale": 1.0}, "grid": grid,
            "sampler": "exact", "scales": [4],
        },
        "deloc": {
            "kind": "deloc", "mc": {"master_seed": seed, "n": 600},
            "kernel": {"kind": "gaussian", "scale": 1.0}, "grid": grid,
            "sampler": "exact", "scales": [12],
            "params": {"a_frac": 0.15, "b_frac": 0.4},
        },
        "rsw-fuzz": {
            "kind": "rsw-fuzz", "mc": {"master_seed": seed, "n": 600},
            "params": {"plans": [
                {"builder": "cross-x-cross", "R": 8, "Q": 4, "a": 2, "b": 6}
            ]},
        },
        "saddle-stats": {
            "kind": "saddle-stats", "mc": {"master_seed": seed, "n": 300},
            "kernel": kernel, "grid": grid, "sampler": "spectral",
            "params": {
                "four_arm_R": [1.0, 2.0], "circle_R": [3.0], "n_circle": 8,
                "bound_R": 2.0, "n_bound": 8,
            },
        },
        "alpha": {
            "kind": "alpha", "mc": {"master_seed": seed, "n": 600},
            "kernel": kernel, "grid": grid, "sampler": "spectral",
            "scales": [8],
        },
        "bernoulli": {
            "kind": "bernoulli", "mc": {"master_seed": seed, "n": 600},
            "params": {"width": 9, "height": 8},
        },
        "field-dump": {
            "kind": "field-dump", "mc": {"master_seed": seed},
            "kernel": kernel,
            "grid": {"nx": 12, "ny": 7, "spacing": 0.5},
            "sampler": "spectral",
        },
    }


def test_criterion_13_worker_count_determinism(tmp_path):
    """Every experiment kind writes byte-identical outputs at 1 or 8 workers."""
    identical = []
    differing = []
    for kind, base in _determinism_configs(tmp_path).items():
        blobs = {}
        for workers in (1, 8):
            data = json.loads(json.dumps(base))
            data["out_dir"] = str(tmp_path / f"{kind}-w{workers}")
            data.setdefault("mc", {})["workers"] = workers
            cfg = experiments.ExperimentConfig.from_dict(data)
            manifest = experiments.run(cfg)
            blobs[workers] = {
                name: (Path(data["out_dir"]) / name).read_bytes()
                for name in manifest.outputs
            }
        same = blobs[1].keys() == blobs[8].keys() and all(
            blobs[1][name] == blobs[8][name] for name in blobs[1]
        )
        (identical if same else differing).append(kind)
    _verdict(
        13,
        "byte-identical outputs across worker counts",
        not differing,
        f"{len(identical)}/{len(identical) + len(differing)} kinds identical"
        + (f"; differing: {differing}" if differing else ""),
    )
