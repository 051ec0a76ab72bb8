"""Config-driven experiment runner with byte-stable CSV and field outputs.

A single UTF-8 JSON file describes an experiment: the kernel, grid, sampler,
Monte Carlo block, and kind-specific knobs.  ``validate`` returns a list of
human-readable diagnostics with field paths (empty means runnable), and
``run`` dispatches on the experiment kind, writes the output files, and
returns a :class:`RunManifest` recording the config hash, tool version,
wall-clock interval, and a SHA-256 digest per output file.

Experiment kinds
----------------
``crossing-curve``
    Crossing probability versus level for square left-right crossings, one
    grid per entry of ``scales``.
``threshold-stats``
    Var(T), mean(T), exceedance tail, and pivot spread per scale.
``variance-formula``
    Quadrature right side of the variance identity against the empirical
    variance, with a combined-standard-error verdict row.
``deloc``
    Pivot delocalisation profile and bound functionals for a centred
    annulus circuit event at each scale.
``rsw-fuzz``
    Randomised verification of construction plans; any counterexamples are
    serialised to JSON files next to the CSV.
``saddle-stats``
    Four-arm saddle frequencies, circle critical-point counts, and the
    interior saddle bound hit rate.
``alpha``
    Crossing-width estimates per scale with the excluded-arc sanity check.
``bernoulli``
    Edge-model threshold statistics on a rectangular lattice with
    independent standard normal edge values.
``field-dump``
    One sampled field written in the binary field-file format.

Every floating-point value is rounded to 12 significant digits before
serialisation, and all randomness is derived from ``(master_seed,
replicate index)``, so repeated runs produce byte-identical outputs for
any worker count.  The manifest contains wall-clock timestamps and is the
only artifact excluded from byte-level comparison.

CSV schema: header ``kind,kernel,R,level,param,n,estimate,stderr,seed``;
kinds may append extra columns after ``seed``, and the full header is
recorded in the manifest under ``csv_columns``.
"""

from __future__ import annotations

import csv
import datetime
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .kernels import GridSpec, StationaryKernel, make_sampler, write_field
from .parallel import DEFAULT_BLOCK, run_blocks
from .percolation import AnnulusCircuit, cross_lr, estimate_event_probability
from .rng import derive_seed, replicate_rng
from .rsw import (
    estimate_alpha,
    fuzz_plan,
    plan_circuit_gluing,
    plan_cross_x_cross,
    plan_long_rectangle,
    plan_x_from_crossings,
)
from .saddles import (
    circle_critical_points,
    estimate_four_arm,
    interior_saddle_bound_check,
)
from .threshold import EdgeLattice, threshold_sweep_edges
from .variance import (
    bound_report,
    deloc_profile,
    empirical_variance_T,
    jackknife_variance_stderr,
    sample_thresholds,
    tail_profile,
    variance_formula_rhs,
)

__all__ = [
    "BASE_COLUMNS",
    "EXPERIMENT_KINDS",
    "TOOL_VERSION",
    "ConfigError",
    "ExperimentConfig",
    "RunManifest",
    "fmt",
    "validate",
    "run",
]

TOOL_VERSION = __version__

BASE_COLUMNS = (
    "kind",
    "kernel",
    "R",
    "level",
    "param",
    "n",
    "estimate",
    "stderr",
    "seed",
)

EXPERIMENT_KINDS = (
    "crossing-curve",
    "threshold-stats",
    "variance-formula",
    "deloc",
    "rsw-fuzz",
    "saddle-stats",
    "alpha",
    "bernoulli",
    "field-dump",
)

_SAMPLERS = ("exact", "spectral")
_KERNEL_KINDS = ("plane-wave", "gaussian", "white")
_EXACT_CELL_LIMIT = 4096
_SEED_LIMIT = 2**64

# Kinds that sample a Gaussian field and therefore need kernel + spacing.
_FIELD_KINDS = frozenset(EXPERIMENT_KINDS) - {"rsw-fuzz", "bernoulli"}
# Kinds whose per-scale grids come from the `scales` array.
_SCALE_KINDS = frozenset(
    {"crossing-curve", "threshold-stats", "variance-formula", "deloc", "alpha"}
)


def fmt(x):
    """Canonical string for a float: 12 significant digits.

    Centralising the rounding here is what makes CSV bytes platform- and
    scheduling-independent; every float that reaches an output file must
    pass through this function.
    """
    return f"{float(x):.12g}"


def _utc_now():
    return (
        datetime.datetime.now(datetime.timezone.utc)
        .replace(microsecond=0)
        .isoformat()
    )


def _sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class ConfigError(ValueError):
    """Raised by run() when validate() reports diagnostics."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed experiment configuration.

    Parsing is deliberately lenient: missing or malformed fields are kept
    as-is so that :func:`validate` can report every problem with a field
    path instead of failing on the first one.  ``run`` refuses configs
    with a non-empty diagnostic list.
    """

    data: dict
    source: str = "<dict>"

    @classmethod
    def from_dict(cls, data, source="<dict>"):
        if not isinstance(data, dict):
            raise ConfigError(["config: top level must be a JSON object"])
        return cls(data=data, source=source)

    @classmethod
    def from_file(cls, path):
        text = Path(path).read_text(encoding="utf-8")
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"config: invalid JSON ({exc})"]) from exc
        return cls.from_dict(data, source=str(path))

    # -- typed accessors (None when absent or wrong shape) ---------------
    def _get(self, *path):
        node = self.data
        for key in path:
            if not isinstance(node, dict) or key not in node:
                return None
            node = node[key]
        return node

    @property
    def kind(self):
        return self._get("kind")

    @property
    def out_dir(self):
        return self._get("out_dir")

    @property
    def master_seed(self):
        return self._get("mc", "master_seed")

    @property
    def n(self):
        return self._get("mc", "n")

    @property
    def workers(self):
        w = self._get("mc", "workers")
        return 1 if w is None else w

    @property
    def kernel_spec(self):
        return self._get("kernel")

    @property
    def grid_spec(self):
        g = self._get("grid")
        return g if isinstance(g, dict) else {}

    @property
    def spacing(self):
        return self.grid_spec.get("spacing")

    @property
    def sampler(self):
        s = self._get("sampler")
        return "spectral" if s is None else s

    @property
    def levels(self):
        return self._get("levels")

    @property
    def scales(self):
        return self._get("scales")

    @property
    def params(self):
        p = self._get("params")
        return p if isinstance(p, dict) else {}

    def with_overrides(self, master_seed=None, workers=None):
        """Copy with the CLI-level master_seed / workers overrides applied."""
        data = json.loads(json.dumps(self.data))
        mc = data.setdefault("mc", {})
        if master_seed is not None:
            mc["master_seed"] = int(master_seed)
        if workers is not None:
            mc["workers"] = int(workers)
        return ExperimentConfig(data=data, source=self.source)

    def canonical_json(self):
        """Whitespace-independent serialisation used for the config hash."""
        return json.dumps(
            self.data, sort_keys=True, separators=(",", ":"), ensure_ascii=False
        )

    def sha256(self):
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()

    def build_kernel(self):
        spec = self.kernel_spec or {}
        kind = spec.get("kind")
        if kind == "plane-wave":
            return StationaryKernel.plane_wave()
        if kind == "gaussian":
            return StationaryKernel.gaussian(float(spec["scale"]))
        if kind == "white":
            return StationaryKernel.white()
        raise ConfigError([f"kernel.kind: unknown kernel {kind!r}"])


def _is_int(x):
    return isinstance(x, int) and not isinstance(x, bool)


def _is_num(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _check_mc(cfg, out, need_n):
    seed = cfg.master_seed
    if seed is None:
        out.append("mc.master_seed required")
    elif not _is_int(seed) or not (0 <= seed < _SEED_LIMIT):
        out.append("mc.master_seed: must be an integer in [0, 2^64)")
    if need_n:
        n = cfg.n
        if n is None or not _is_int(n) or n < 1:
            out.append("mc.n: must be an integer >= 1")
    w = cfg.workers
    if not _is_int(w) or w < 1:
        out.append("mc.workers: must be an integer >= 1")


def _check_kernel(cfg, out):
    spec = cfg.kernel_spec
    if not isinstance(spec, dict) or "kind" not in spec:
        out.append("kernel.kind required")
        return
    kind = spec["kind"]
    if kind not in _KERNEL_KINDS:
        out.append(f"kernel.kind: unknown kernel {kind!r}")
        return
    if kind == "gaussian":
        scale = spec.get("scale")
        if not _is_num(scale) or not scale > 0:
            out.append("kernel.scale: must be a number > 0")


def _check_spacing(cfg, out):
    spacing = cfg.spacing
    if spacing is None:
        out.append("grid.spacing required")
    elif not _is_num(spacing) or not (spacing > 0 and math.isfinite(spacing)):
        out.append("grid.spacing: must be a finite number > 0")


def _check_scales(cfg, out, even=False):
    scales = cfg.scales
    if (
        not isinstance(scales, list)
        or not scales
        or not all(_is_int(s) and s >= 2 for s in scales)
    ):
        out.append("scales: must be a non-empty array of integers >= 2")
        return None
    if even and any(s % 2 for s in scales):
        out.append("scales: side cell counts must be even")
        return None
    return scales


def _max_cells(cfg):
    """Largest grid (in cells) the config will sample, or None if unknown."""
    if cfg.kind == "field-dump":
        nx, ny = cfg.grid_spec.get("nx"), cfg.grid_spec.get("ny")
        if _is_int(nx) and _is_int(ny):
            return nx * ny
        return None
    scales = cfg.scales
    if isinstance(scales, list) and all(_is_int(s) for s in scales) and scales:
        return max(scales) ** 2
    return None


def validate(config):
    """Schema and cross-field checks; returns diagnostics, raises nothing."""
    cfg = config
    out = []
    kind = cfg.kind
    if kind is None:
        out.append("kind required")
        return out
    if kind not in EXPERIMENT_KINDS:
        out.append(f"kind: unknown experiment kind {kind!r}")
        return out
    if not isinstance(cfg.out_dir, str) or not cfg.out_dir:
        out.append("out_dir required")
    _check_mc(cfg, out, need_n=kind != "field-dump")

    if kind in _FIELD_KINDS:
        _check_kernel(cfg, out)
        _check_spacing(cfg, out)
        if cfg.sampler not in _SAMPLERS:
            out.append("sampler: must be 'exact' or 'spectral'")

    if kind == "variance-formula" and cfg.sampler != "exact":
        out.append("sampler: exact sampler required")

    if cfg.sampler == "exact" and kind in _FIELD_KINDS:
        cells = _max_cells(cfg)
        if cells is not None and cells > _EXACT_CELL_LIMIT:
            out.append(
                f"sampler: exact sampler limited to {_EXACT_CELL_LIMIT} cells"
                f" per grid (largest requested grid has {cells})"
            )

    if kind in _SCALE_KINDS:
        _check_scales(cfg, out, even=kind == "alpha")

    if kind == "crossing-curve":
        levels = cfg.levels
        if (
            not isinstance(levels, list)
            or not levels
            or not all(_is_num(v) and math.isfinite(v) for v in levels)
        ):
            out.append("levels: must be a non-empty array of finite numbers")

    if kind == "deloc":
        p = cfg.params
        a_frac = p.get("a_frac", 0.25)
        b_frac = p.get("b_frac", 0.5)
        if not (_is_num(a_frac) and _is_num(b_frac) and 0 < a_frac < b_frac <= 0.5):
            out.append("params.a_frac/params.b_frac: need 0 < a_frac < b_frac <= 0.5")

    if kind == "threshold-stats":
        event = cfg.params.get("event", "square")
        if event not in ("square", "annulus"):
            out.append("params.event: must be 'square' or 'annulus'")
        elif event == "annulus":
            p = cfg.params
            a_frac = p.get("a_frac", 0.25)
            b_frac = p.get("b_frac", 0.5)
            if not (
                _is_num(a_frac) and _is_num(b_frac) and 0 < a_frac < b_frac <= 0.5
            ):
                out.append(
                    "params.a_frac/params.b_frac: need 0 < a_frac < b_frac <= 0.5"
                )

    if kind == "field-dump":
        for key in ("nx", "ny"):
            v = cfg.grid_spec.get(key)
            if not _is_int(v) or v < 1:
                out.append(f"grid.{key}: must be an integer >= 1")

    if kind == "rsw-fuzz":
        plans = cfg.params.get("plans")
        if plans is not None:
            if not isinstance(plans, list) or not plans:
                out.append("params.plans: must be a non-empty array of plan specs")
            else:
                for i, spec in enumerate(plans):
                    try:
                        _build_plan(spec)
                    except (ConfigError, ValueError, TypeError, KeyError) as exc:
                        out.append(f"params.plans[{i}]: {exc}")
        densities = cfg.params.get("densities")
        if densities is not None and (
            not isinstance(densities, list)
            or not densities
            or not all(_is_num(d) and 0 < d < 1 for d in densities)
        ):
            out.append("params.densities: must be numbers strictly between 0 and 1")

    if kind == "bernoulli":
        p = cfg.params
        width = p.get("width", 33)
        height = p.get("height", 32)
        if not (_is_int(width) and width >= 2):
            out.append("params.width: must be an integer >= 2")
        if not (_is_int(height) and height >= 1):
            out.append("params.height: must be an integer >= 1")

    return out


# ---------------------------------------------------------------------------
# Output plumbing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunManifest:
    """Provenance record for one run: config hash, versions, file digests."""

    config_sha256: str
    tool_version: str
    kind: str
    started_at: str
    finished_at: str
    outputs: dict
    csv_columns: tuple
    notes: dict = field(default_factory=dict)

    def to_json(self):
        payload = {
            "config_sha256": self.config_sha256,
            "tool_version": self.tool_version,
            "kind": self.kind,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "outputs": dict(sorted(self.outputs.items())),
            "csv_columns": list(self.csv_columns),
            "notes": dict(sorted(self.notes.items())),
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(
            config_sha256=d["config_sha256"],
            tool_version=d["tool_version"],
            kind=d["kind"],
            started_at=d["started_at"],
            finished_at=d["finished_at"],
            outputs=dict(d["outputs"]),
            csv_columns=tuple(d["csv_columns"]),
            notes=dict(d.get("notes", {})),
        )

    def verify_outputs(self, out_dir):
        """Recompute every output digest; returns list of mismatch messages."""
        problems = []
        for name, digest in self.outputs.items():
            path = Path(out_dir) / name
            if not path.is_file():
                problems.append(f"{name}: missing")
            elif _sha256_file(path) != digest:
                problems.append(f"{name}: digest mismatch")
        return problems


def _cell(value):
    if value is None or value == "":
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return fmt(value)


def _write_csv(path, columns, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(col)) for col in columns])


def _row(kind, kernel, R, level, param, n, estimate, stderr, seed, **extra):
    base = {
        "kind": kind,
        "kernel": kernel,
        "R": R,
        "level": level,
        "param": param,
        "n": n,
        "estimate": estimate,
        "stderr": stderr,
        "seed": seed,
    }
    base.update(extra)
    return base


def _square_grid(cfg, side):
    return GridSpec(nx=side, ny=side, spacing=float(cfg.spacing))


# ---------------------------------------------------------------------------
# Experiment kinds
# ---------------------------------------------------------------------------


def _run_crossing_curve(cfg, out_dir, written):
    kernel = cfg.build_kernel()
    kname = kernel.descriptor()
    levels = [float(v) for v in cfg.levels]
    rows = []
    for side in cfg.scales:
        grid = _square_grid(cfg, side)
        sampler = make_sampler(kernel, grid, cfg.sampler)
        event = cross_lr(0, 0, side, side)
        seed = derive_seed(cfg.master_seed, f"crossing-curve R={side}")
        counts, p, stderr = estimate_event_probability(
            sampler, [event], levels, cfg.n, seed, workers=cfg.workers
        )
        for j, level in enumerate(levels):
            rows.append(
                _row(
                    cfg.kind, kname, side, level, "p_cross",
                    cfg.n, p[0, j], stderr[0, j], seed,
                )
            )
    return _emit(out_dir, written, BASE_COLUMNS, rows)


def _threshold_samples(cfg, kernel, side, label):
    grid = _square_grid(cfg, side)
    if cfg.params.get("event", "square") == "annulus":
        c = (side - 1) / 2.0
        a_frac = float(cfg.params.get("a_frac", 0.25))
        b_frac = float(cfg.params.get("b_frac", 0.5))
        event = AnnulusCircuit(cx=c, cy=c, a=a_frac * side, b=b_frac * side)
    else:
        event = cross_lr(0, 0, side, side)
    seed = derive_seed(cfg.master_seed, label)
    samples = sample_thresholds(
        kernel, grid, event, cfg.n, seed,
        sampler=cfg.sampler, workers=cfg.workers,
    )
    return grid, samples, seed


def _run_threshold_stats(cfg, out_dir, written):
    kernel = cfg.build_kernel()
    kname = kernel.descriptor()
    thresholds = [
        float(t) for t in cfg.params.get("tail_thresholds", [0.5, 1.0, 1.5, 2.0])
    ]
    emit_pivots = bool(cfg.params.get("emit_pivots", False))
    rows = []
    for side in cfg.scales:
        grid, samples, seed = _threshold_samples(
            cfg, kernel, side, f"threshold-stats R={side}"
        )
        T = samples.T
        n = cfg.n
        var_hat = float(np.var(T, ddof=1))
        rows.append(
            _row(cfg.kind, kname, side, "", "var_T", n,
                 var_hat, jackknife_variance_stderr(T), seed)
        )
        rows.append(
            _row(cfg.kind, kname, side, "", "mean_T", n,
                 float(T.mean()), float(T.std(ddof=1) / math.sqrt(n)), seed)
        )
        if n >= 1000:  # the tail profile refuses smaller samples
            tails = tail_profile(T, thresholds)
            for j, t in enumerate(tails.thresholds):
                half = (tails.wilson_high[j] - tails.wilson_low[j]) / 2.0
                rows.append(
                    _row(cfg.kind, kname, side, t, "tail", n,
                         tails.exceedance[j], half, seed,
                         wilson_low=tails.wilson_low[j],
                         wilson_high=tails.wilson_high[j])
                )
            rows.append(
                _row(cfg.kind, kname, side, "", "tail_rate", n,
                     tails.rate, "", seed)
            )
        radii = cfg.params.get("radii")
        if radii is None:
            radii = [side * cfg.spacing / 20, side * cfg.spacing / 8]
        profile = deloc_profile(samples, grid, [float(r) for r in radii])
        for j, r in enumerate(profile.radii):
            sig = profile.sigma[j]
            rows.append(
                _row(cfg.kind, kname, side, r, "sigma", n, sig,
                     math.sqrt(max(sig * (1 - sig), 0.0) / n), seed)
            )
        if emit_pivots:
            cells, counts = np.unique(
                np.stack([samples.sx, samples.sy], axis=1),
                axis=0, return_counts=True,
            )
            for (sx, sy), count in zip(cells, counts):
                rows.append(
                    _row(cfg.kind, kname, side, "", "pivot_count", n,
                         int(count), "", seed, sx=int(sx), sy=int(sy))
                )
    columns = BASE_COLUMNS + ("wilson_low", "wilson_high")
    if emit_pivots:
        columns = columns + ("sx", "sy")
    return _emit(out_dir, written, columns, rows)


def _run_variance_formula(cfg, out_dir, written):
    kernel = cfg.build_kernel()
    kname = kernel.descriptor()
    quad_nodes = int(cfg.params.get("quad_nodes", 16))
    n_pairs = int(cfg.params.get("n_pairs", cfg.n))
    rows = []
    ok_all = True
    for side in cfg.scales:
        grid = _square_grid(cfg, side)
        event = cross_lr(0, 0, side, side)
        seed_rhs = derive_seed(cfg.master_seed, f"variance-formula rhs R={side}")
        seed_emp = derive_seed(cfg.master_seed, f"variance-formula emp R={side}")
        rhs = variance_formula_rhs(
            kernel, grid, event, n_pairs=n_pairs, quad_nodes=quad_nodes,
            master_seed=seed_rhs, workers=cfg.workers,
        )
        emp = empirical_variance_T(
            kernel, grid, event, cfg.n, seed_emp,
            sampler=cfg.sampler, workers=cfg.workers,
        )
        gap = abs(rhs.estimate - emp.estimate)
        combined = math.hypot(rhs.stderr, emp.stderr)
        ok = gap <= 3.0 * combined
        ok_all = ok_all and ok
        rows.append(
            _row(cfg.kind, kname, side, "", "rhs", n_pairs,
                 rhs.estimate, rhs.stderr, seed_rhs)
        )
        rows.append(
            _row(cfg.kind, kname, side, "", "empirical", cfg.n,
                 emp.estimate, emp.stderr, seed_emp)
        )
        rows.append(
            _row(cfg.kind, kname, side, "", "verdict", cfg.n,
                 gap, combined, cfg.master_seed, ok=ok)
        )
    columns = BASE_COLUMNS + ("ok",)
    return _emit(
        out_dir, written, columns, rows, notes={"all_verdicts_ok": ok_all}
    )


def _run_deloc(cfg, out_dir, written):
    kernel = cfg.build_kernel()
    kname = kernel.descriptor()
    a_frac = float(cfg.params.get("a_frac", 0.25))
    b_frac = float(cfg.params.get("b_frac", 0.5))
    rows = []
    for side in cfg.scales:
        grid = _square_grid(cfg, side)
        c = (side - 1) / 2.0
        event = AnnulusCircuit(cx=c, cy=c, a=a_frac * side, b=b_frac * side)
        seed = derive_seed(cfg.master_seed, f"deloc R={side}")
        samples = sample_thresholds(
            kernel, grid, event, cfg.n, seed,
            sampler=cfg.sampler, workers=cfg.workers,
        )
        radii = cfg.params.get("radii")
        if radii is None:
            d0 = 2.0 * b_frac * side * cfg.spacing
            radii = [d0 / 20, d0 / 10, d0 / 4]
        radii = [float(r) for r in radii]
        profile = deloc_profile(samples, grid, radii)
        var_hat = float(np.var(samples.T, ddof=1))
        n = cfg.n
        for j, r in enumerate(profile.radii):
            sig = profile.sigma[j]
            rows.append(
                _row(cfg.kind, kname, side, r, "sigma", n, sig,
                     math.sqrt(max(sig * (1 - sig), 0.0) / n), seed)
            )
        bounds = bound_report(kernel, profile, var_hat, radii)
        for j, r in enumerate(bounds.r_grid):
            rows.append(
                _row(cfg.kind, kname, side, r, "m_bar", n,
                     bounds.m_bar[j], "", seed,
                     degenerate=bool(bounds.degenerate[j]))
            )
            rows.append(
                _row(cfg.kind, kname, side, r, "m_lower", n,
                     bounds.m_lower[j], "", seed,
                     degenerate=bool(bounds.degenerate[j]))
            )
        rows.append(
            _row(cfg.kind, kname, side, "", "var_T", n,
                 var_hat, jackknife_variance_stderr(samples.T), seed)
        )
        rows.append(
            _row(cfg.kind, kname, side, "", "var_ratio", n, bounds.ratio, "", seed)
        )
    columns = BASE_COLUMNS + ("degenerate",)
    return _emit(out_dir, written, columns, rows)


_PLAN_BUILDERS = {
    "cross-x-cross": plan_cross_x_cross,
    "x-from-crossings": plan_x_from_crossings,
    "long-rectangle": plan_long_rectangle,
    "circuit-gluing": plan_circuit_gluing,
}


def _build_plan(spec):
    if not isinstance(spec, dict):
        raise ConfigError(["plan spec must be an object"])
    builder_name = spec.get("builder")
    if builder_name not in _PLAN_BUILDERS:
        raise ConfigError([f"unknown plan builder {builder_name!r}"])
    kwargs = {k: v for k, v in spec.items() if k != "builder"}
    return _PLAN_BUILDERS[builder_name](**kwargs)


def _default_plan_suite(sizes):
    specs = []
    for R in sizes:
        specs.append(
            {"builder": "cross-x-cross", "R": R, "Q": R // 2,
             "a": R // 4, "b": 3 * R // 4}
        )
        c = R // 2 if (R + R // 2) % 2 == 0 else R // 2 + 1
        specs.append({"builder": "x-from-crossings", "R": R, "c": c, "d": R // 4})
        if R % 8 == 0:
            specs.append({"builder": "long-rectangle", "R": R})
        specs.append({"builder": "circuit-gluing", "R": max(R // 8, 1)})
    return specs


def _run_rsw_fuzz(cfg, out_dir, written):
    params = cfg.params
    sizes = params.get("sizes", [8, 16])
    specs = params.get("plans")
    if specs is None:
        specs = _default_plan_suite(sizes)
    densities = tuple(params.get("densities", [0.3, 0.5, 0.7]))
    include_targeted = bool(params.get("include_targeted", True))
    rows = []
    n_counterexamples = 0
    for spec in specs:
        plan = _build_plan(spec)
        seed = derive_seed(cfg.master_seed, f"rsw-fuzz {plan.name}")
        report = fuzz_plan(
            plan, cfg.n, seed, densities=densities,
            include_targeted=include_targeted, workers=cfg.workers,
        )
        n_counterexamples += report.n_counterexamples
        for k, ce in enumerate(report.counterexamples):
            name = f"counterexample-{plan.name}-{k}.json"
            path = out_dir / name
            path.write_text(ce.to_json(), encoding="utf-8")
            written.append(path)
        rows.append(
            _row(cfg.kind, "bernoulli", plan.params.get("R", ""), "",
                 plan.name, report.n_checked, report.n_counterexamples, "",
                 seed, targeted=report.n_targeted)
        )
    columns = BASE_COLUMNS + ("targeted",)
    return _emit(
        out_dir, written, columns, rows,
        notes={"n_counterexamples": n_counterexamples},
    )


def _run_saddle_stats(cfg, out_dir, written):
    kernel = cfg.build_kernel()
    kname = kernel.descriptor()
    spacing = float(cfg.spacing)
    params = cfg.params
    rows = []

    four_arm_R = [float(r) for r in params.get("four_arm_R", [4.0, 8.0, 16.0])]
    seed_fa = derive_seed(cfg.master_seed, "saddle-stats four-arm")
    reports = estimate_four_arm(
        kernel, four_arm_R, cfg.n, seed_fa,
        spacing=spacing, sampler=cfg.sampler, workers=cfg.workers,
    )
    for R in four_arm_R:
        rep = reports[R]
        rows.append(
            _row(cfg.kind, kname, R, "", "four_arm", rep.n,
                 rep.estimate, rep.stderr, seed_fa,
                 count=int(rep.metadata["count"]))
        )

    circle_R = [float(r) for r in params.get("circle_R", [10.0, 20.0, 40.0])]
    n_circle = int(params.get("n_circle", 50))
    for R in circle_R:
        side = 2 * math.ceil((R + 1.0) / spacing) + 3
        grid = GridSpec(nx=side, ny=side, spacing=spacing)
        sampler = make_sampler(kernel, grid, cfg.sampler)
        seed_c = derive_seed(cfg.master_seed, f"saddle-stats circle R={fmt(R)}")
        centre = (
            grid.origin[0] + (side - 1) / 2.0 * spacing,
            grid.origin[1] + (side - 1) / 2.0 * spacing,
        )

        def block(lo, hi, _sampler=sampler, _centre=centre, _R=R, _seed=seed_c):
            counts = np.empty(hi - lo, dtype=np.int64)
            for i in range(lo, hi):
                fld = _sampler.sample(replicate_rng(_seed, i))
                counts[i - lo] = circle_critical_points(fld, _centre, _R)
            return counts

        parts = run_blocks(block, n_circle, workers=cfg.workers,
                           block_size=DEFAULT_BLOCK)
        counts = np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)
        per_R = counts / R
        rows.append(
            _row(cfg.kind, kname, R, "", "circle_mean_per_R", n_circle,
                 float(per_R.mean()),
                 float(per_R.std(ddof=1) / math.sqrt(n_circle))
                 if n_circle > 1 else "",
                 seed_c, count=int(counts.sum()))
        )

    bound_R = float(params.get("bound_R", 6.0))
    n_bound = int(params.get("n_bound", cfg.n))
    # The interior check inspects arms out to 2R and needs the 3R ball
    # around the grid centre on-grid.
    side = 2 * math.ceil((3 * bound_R + 1.0) / spacing) + 3
    grid = GridSpec(nx=side, ny=side, spacing=spacing)
    sampler = make_sampler(kernel, grid, cfg.sampler)
    seed_b = derive_seed(cfg.master_seed, "saddle-stats interior-bound")

    def bound_block(lo, hi):
        hits = np.empty(hi - lo, dtype=np.int64)
        for i in range(lo, hi):
            fld = sampler.sample(replicate_rng(seed_b, i))
            _, _, holds = interior_saddle_bound_check(fld, bound_R)
            hits[i - lo] = 1 if holds else 0
        return hits

    parts = run_blocks(bound_block, n_bound, workers=cfg.workers,
                       block_size=DEFAULT_BLOCK)
    hits = np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)
    rate = float(hits.mean()) if n_bound else float("nan")
    rows.append(
        _row(cfg.kind, kname, bound_R, "", "interior_bound_rate", n_bound,
             rate, math.sqrt(max(rate * (1 - rate), 0.0) / n_bound), seed_b,
             count=int(hits.sum()))
    )
    columns = BASE_COLUMNS + ("count",)
    return _emit(out_dir, written, columns, rows)


def _run_alpha(cfg, out_dir, written):
    kernel = cfg.build_kernel()
    kname = kernel.descriptor()
    rows = []
    for side in cfg.scales:
        grid = _square_grid(cfg, side)
        R = side * cfg.spacing
        seed = derive_seed(cfg.master_seed, f"alpha R={side}")
        rep = estimate_alpha(
            kernel, R, grid, cfg.n, seed,
            sampler=cfg.sampler, workers=cfg.workers,
        )
        rows.append(
            _row(cfg.kind, kname, side, "", "alpha_hat", rep.n,
                 rep.estimate, rep.stderr, seed,
                 ear_p=rep.metadata.get("ear_p", ""),
                 ear_ok=rep.metadata.get("ear_ok", ""))
        )
    columns = BASE_COLUMNS + ("ear_p", "ear_ok")
    return _emit(out_dir, written, columns, rows)


def _run_bernoulli(cfg, out_dir, written):
    width = int(cfg.params.get("width", 33))
    height = int(cfg.params.get("height", 32))
    n_edges = (width - 1) * height + width * (height - 1)
    seed = derive_seed(cfg.master_seed, f"bernoulli {width}x{height}")

    def block(lo, hi):
        T = np.empty(hi - lo, dtype=np.float64)
        for i in range(lo, hi):
            values = replicate_rng(seed, i).standard_normal(n_edges)
            lat = EdgeLattice.left_right(width, height, values)
            T[i - lo] = threshold_sweep_edges(lat).T
        return T

    parts = run_blocks(block, cfg.n, workers=cfg.workers, block_size=DEFAULT_BLOCK)
    T = np.concatenate(parts)
    n = cfg.n
    p_hat = float((T <= 0.0).mean())
    rows = [
        _row(cfg.kind, "bernoulli", width, 0.0, "p_T_le_0", n, p_hat,
             math.sqrt(max(p_hat * (1 - p_hat), 0.0) / n), seed),
        _row(cfg.kind, "bernoulli", width, "", "var_T", n,
             float(np.var(T, ddof=1)), jackknife_variance_stderr(T), seed),
        _row(cfg.kind, "bernoulli", width, "", "mean_T", n,
             float(T.mean()), float(T.std(ddof=1) / math.sqrt(n)), seed),
    ]
    notes = {"lattice": f"{width}x{height}", "n_edges": n_edges}
    return _emit(out_dir, written, BASE_COLUMNS, rows, notes=notes)


def _run_field_dump(cfg, out_dir, written):
    kernel = cfg.build_kernel()
    g = cfg.grid_spec
    grid = GridSpec(nx=int(g["nx"]), ny=int(g["ny"]), spacing=float(g["spacing"]))
    sampler = make_sampler(kernel, grid, cfg.sampler)
    fld = sampler.sample(replicate_rng(cfg.master_seed, 0), seed=cfg.master_seed)
    path = out_dir / "field.bin"
    write_field(path, fld)
    written.append(path)
    return (), {}


_HANDLERS = {
    "crossing-curve": _run_crossing_curve,
    "threshold-stats": _run_threshold_stats,
    "variance-formula": _run_variance_formula,
    "deloc": _run_deloc,
    "rsw-fuzz": _run_rsw_fuzz,
    "saddle-stats": _run_saddle_stats,
    "alpha": _run_alpha,
    "bernoulli": _run_bernoulli,
    "field-dump": _run_field_dump,
}


def _emit(out_dir, written, columns, rows, notes=None):
    path = out_dir / "results.csv"
    _write_csv(path, columns, rows)
    written.append(path)
    return tuple(columns), dict(notes or {})


def run(config):
    """Validate, dispatch, and write outputs plus manifest.json.

    Raises ConfigError on validation diagnostics.  On any failure the
    partially written output files are removed.  The returned manifest is
    also written to ``<out_dir>/manifest.json``; because it records
    wall-clock timestamps it is the one file not covered by the
    byte-reproducibility guarantee.
    """
    diagnostics = validate(config)
    if diagnostics:
        raise ConfigError(diagnostics)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = _utc_now()
    written = []
    try:
        columns, notes = _HANDLERS[config.kind](config, out_dir, written)
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    manifest = RunManifest(
        config_sha256=config.sha256(),
        tool_version=TOOL_VERSION,
        kind=config.kind,
        started_at=started,
        finished_at=_utc_now(),
        outputs={p.name: _sha256_file(p) for p in written},
        csv_columns=tuple(columns),
        notes=notes,
    )
    (out_dir / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    return manifest
