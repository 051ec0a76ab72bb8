"""Stationary planar Gaussian fields on regular grids.

Covariance kernels (monochromatic plane-wave ensemble with J0 correlation,
squared-exponential, and explicit callable kernels), two samplers (exact via
dense Cholesky, approximate via random plane-wave superposition), the
Ornstein-Uhlenbeck coupling used by the variance identities, and a simple
binary field-file format.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .bessel import bessel_j0

__all__ = [
    "StationaryKernel",
    "GridSpec",
    "FieldSample",
    "ExactSampler",
    "SpectralSampler",
    "make_sampler",
    "ou_mix",
    "write_field",
    "read_field",
]

PLANE_WAVE = "plane-wave"
GAUSSIAN = "gaussian"
MATRIX_FREE = "matrix-free"

EXACT_CELL_LIMIT = 4096  # dense covariance factorisation cap
DEFAULT_JITTER = 1e-12
DEFAULT_N_WAVES = 256


class StationaryKernel:
    """Stationary covariance kernel kappa(x - y) with kappa(0) = 1."""

    def __init__(self, kind, params=None, fn=None, isotropic=None):
        self.kind = kind
        self.params = dict(params or {})
        if kind == PLANE_WAVE:
            self._isotropic = True
        elif kind == GAUSSIAN:
            scale = float(self.params.get("scale", 0.0))
            if not (scale > 0 and math.isfinite(scale)):
                raise ValueError(f"gaussian kernel needs scale > 0, got {scale}")
            self.params["scale"] = scale
            self._isotropic = True
        elif kind == MATRIX_FREE:
            if fn is None:
                raise ValueError("matrix-free kernel needs a callable fn(dx, dy)")
            self._fn = fn
            self._isotropic = bool(isotropic)
        else:
            raise ValueError(f"unknown kernel kind {kind!r}")

    @classmethod
    def plane_wave(cls):
        """Monochromatic isotropic ensemble; correlation J0(|x - y|)."""
        return cls(PLANE_WAVE)

    @classmethod
    def gaussian(cls, scale):
        """Squared-exponential correlation exp(-|x - y|^2 / (2 scale^2))."""
        return cls(GAUSSIAN, {"scale": scale})

    @classmethod
    def matrix_free(cls, fn, isotropic=False, name="custom"):
        """Kernel given by an explicit callable on coordinate offsets."""
        return cls(MATRIX_FREE, {"name": name}, fn=fn, isotropic=isotropic)

    @classmethod
    def white(cls):
        """Unit-variance independent cells (kappa = 1 at zero offset only)."""

        def fn(dx, dy):
            return np.where((np.asarray(dx) == 0) & (np.asarray(dy) == 0), 1.0, 0.0)

        return cls(MATRIX_FREE, {"name": "white"}, fn=fn, isotropic=True)

    @property
    def isotropic(self):
        return self._isotropic

    def descriptor(self) -> str:
        """Short id used in file headers and CSV columns."""
        if self.kind == PLANE_WAVE:
            return PLANE_WAVE
        if self.kind == GAUSSIAN:
            return f"gaussian:{self.params['scale']:.12g}"
        return f"matrix-free:{self.params.get('name', 'custom')}"

    def evaluate(self, dx, dy):
        """kappa at offsets (dx, dy), given in field-length units."""
        dx = np.asarray(dx, dtype=np.float64)
        dy = np.asarray(dy, dtype=np.float64)
        if not (np.all(np.isfinite(dx)) and np.all(np.isfinite(dy))):
            raise ValueError("kernel arguments must be finite")
        if self.kind == PLANE_WAVE:
            return bessel_j0(np.hypot(dx, dy))
        if self.kind == GAUSSIAN:
            s = self.params["scale"]
            return np.exp(-(dx * dx + dy * dy) / (2.0 * s * s))
        return np.asarray(self._fn(dx, dy), dtype=np.float64)

    def kappa_bar(self, r, search_radius, step=1e-3):
        """sup |kappa| over the annulus r <= |x| <= search_radius.

        Numeric scan at the given radial resolution; for anisotropic kernels
        the angle is scanned at a matching arc-length resolution.  This is a
        diagnostic quantity, not a certified bound.
        """
        if not (0 <= r <= search_radius) or step <= 0:
            raise ValueError("need 0 <= r <= search_radius and step > 0")
        radii = np.arange(r, search_radius + step, step)
        if radii.size == 0:
            return 0.0
        if self._isotropic:
            vals = self.evaluate(radii, np.zeros_like(radii))
            return float(np.max(np.abs(vals)))
        n_ang = max(8, int(np.ceil(2 * np.pi * search_radius / step)))
        n_ang = min(n_ang, 4096)  # cost cap for the scan
        angles = np.linspace(0.0, 2 * np.pi, n_ang, endpoint=False)
        best = 0.0
        for a in angles:
            vals = self.evaluate(radii * np.cos(a), radii * np.sin(a))
            best = max(best, float(np.max(np.abs(vals))))
        return best


@dataclass(frozen=True)
class GridSpec:
    """Regular grid of nx * ny cells; cell (ix, iy) sits at origin + spacing*(ix, iy)."""

    nx: int
    ny: int
    spacing: float
    origin: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError(f"grid must have nx, ny >= 1, got {self.nx}x{self.ny}")
        if not (self.spacing > 0 and math.isfinite(self.spacing)):
            raise ValueError(f"grid spacing must be positive, got {self.spacing}")

    @property
    def n_cells(self):
        return self.nx * self.ny

    def positions(self):
        """(n_cells, 2) array of cell coordinates in field-length units, row-major."""
        ys, xs = np.mgrid[0 : self.ny, 0 : self.nx]
        px = self.origin[0] + xs * self.spacing
        py = self.origin[1] + ys * self.spacing
        return np.column_stack([px.ravel(), py.ravel()])


@dataclass
class FieldSample:
    """One realisation of the field on a grid; values has shape (ny, nx)."""

    grid: GridSpec
    values: np.ndarray
    kernel_id: str
    seed: int | None = None
    sampler: str = "explicit"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.grid.ny, self.grid.nx):
            raise ValueError(
                f"values shape {self.values.shape} does not match grid "
                f"{self.grid.ny}x{self.grid.nx}"
            )


def _covariance_matrix(kernel, grid):
    pos = grid.positions()
    dx = pos[:, 0][:, None] - pos[:, 0][None, :]
    dy = pos[:, 1][:, None] - pos[:, 1][None, :]
    return kernel.evaluate(dx, dy)


class ExactSampler:
    """Draws fields with exactly the kernel's covariance on the grid.

    Dense Cholesky of the n_cells x n_cells covariance with a small diagonal
    jitter; limited to grids of at most 4096 cells.
    """

    name = "exact"

    def __init__(self, kernel, grid, jitter=DEFAULT_JITTER):
        if grid.n_cells > EXACT_CELL_LIMIT:
            raise ValueError(
                f"exact sampler limited to {EXACT_CELL_LIMIT} cells, "
                f"grid has {grid.n_cells}"
            )
        self.kernel = kernel
        self.grid = grid
        if float(kernel.evaluate(0.0, 0.0)) <= 0.0:
            raise ValueError("degenerate kernel: non-positive variance at offset 0")
        cov = _covariance_matrix(kernel, grid)
        cov = cov + jitter * np.eye(grid.n_cells)
        self._chol = np.linalg.cholesky(cov)

    def sample_values(self, rng):
        z = rng.standard_normal(self.grid.n_cells)
        return (self._chol @ z).reshape(self.grid.ny, self.grid.nx)

    def sample_batch(self, rng, n):
        z = rng.standard_normal((self.grid.n_cells, n))
        flat = self._chol @ z
        return flat.T.reshape(n, self.grid.ny, self.grid.nx)

    def sample(self, rng, seed=None):
        return FieldSample(
            self.grid, self.sample_values(rng), self.kernel.descriptor(), seed, self.name
        )


class SpectralSampler:
    """Superposition of random plane waves with the kernel's spectral law.

    f(x) = sqrt(2/M) sum_k cos(<x, w_k> + phi_k) with fresh wavevectors for
    every field (no quenched disorder).  Marginals are approximately Gaussian
    with variance 1 for any M; the covariance is exact in expectation.
    """

    name = "spectral"

    def __init__(self, kernel, grid, n_waves=DEFAULT_N_WAVES):
        if n_waves < 1:
            raise ValueError("n_waves must be >= 1")
        if kernel.kind not in (PLANE_WAVE, GAUSSIAN):
            raise ValueError(
                f"spectral sampler supports plane-wave and gaussian kernels, "
                f"not {kernel.kind!r}"
            )
        self.kernel = kernel
        self.grid = grid
        self.n_waves = n_waves
        ox, oy = grid.origin
        self._xs = ox + grid.spacing * np.arange(grid.nx)
        self._ys = oy + grid.spacing * np.arange(grid.ny)

    def _draw_waves(self, rng):
        m = self.n_waves
        if self.kernel.kind == PLANE_WAVE:
            theta = rng.uniform(0.0, 2 * np.pi, m)
            waves = np.column_stack([np.cos(theta), np.sin(theta)])
        else:  # gaussian: spectral law N(0, I / scale^2)
            waves = rng.standard_normal((m, 2)) / self.kernel.params["scale"]
        phases = rng.uniform(0.0, 2 * np.pi, m)
        return waves, phases

    def sample_values(self, rng):
        waves, phases = self._draw_waves(rng)
        # The phase splits along grid axes, so the wave sum is the real part
        # of a rank-M product of per-axis complex exponentials:
        # cos(x wx + y wy + phi) = Re[exp(i x wx) exp(i(y wy + phi))].
        u = np.exp(1j * self._xs[:, None] * waves[None, :, 0])
        v = np.exp(1j * (self._ys[:, None] * waves[None, :, 1] + phases[None, :]))
        return (v @ u.T).real * math.sqrt(2.0 / self.n_waves)

    def sample_batch(self, rng, n):
        return np.stack([self.sample_values(rng) for _ in range(n)])

    def sample(self, rng, seed=None):
        return FieldSample(
            self.grid, self.sample_values(rng), self.kernel.descriptor(), seed, self.name
        )


def make_sampler(kernel, grid, sampler, n_waves=DEFAULT_N_WAVES, jitter=DEFAULT_JITTER):
    if sampler == "exact":
        return ExactSampler(kernel, grid, jitter=jitter)
    if sampler == "spectral":
        return SpectralSampler(kernel, grid, n_waves=n_waves)
    raise ValueError(f"unknown sampler {sampler!r}")


def ou_mix(values, fresh_values, s):
    """Ornstein-Uhlenbeck coupling at correlation s = exp(-t).

    Given a field f and an independent copy g of the same law, returns
    f_t = s*f + sqrt(1 - s^2)*g, which is marginally the same law and jointly
    the time-t evolution of f.
    """
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"need 0 <= s <= 1, got {s}")
    return s * values + math.sqrt(1.0 - s * s) * fresh_values


def ou_partner(sampler, fld: FieldSample, t, rng):
    """Sample the time-t OU evolution of an existing field."""
    if t < 0:
        raise ValueError(f"need t >= 0, got {t}")
    fresh = sampler.sample_values(rng)
    mixed = ou_mix(fld.values, fresh, math.exp(-t))
    return FieldSample(fld.grid, mixed, fld.kernel_id, None, sampler.name)


# ---------------------------------------------------------------------------
# Field file format: one UTF-8 JSON header line, then nx*ny little-endian
# float64 values in row-major order.

_HEADER_KEYS = ("nx", "ny", "spacing", "kernel", "seed", "sampler")


def write_field(path, fld: FieldSample):
    header = {
        "nx": fld.grid.nx,
        "ny": fld.grid.ny,
        "spacing": fld.grid.spacing,
        "kernel": fld.kernel_id,
        "seed": fld.seed,
        "sampler": fld.sampler,
    }
    payload = fld.values.astype("<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(payload)


def read_field(path) -> FieldSample:
    with open(path, "rb") as fh:
        raw = fh.read()
    newline = raw.find(b"\n")
    if newline < 0:
        raise ValueError(f"{path}: missing header line")
    try:
        header = json.loads(raw[:newline].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValueError(f"{path}: bad header: {exc}") from exc
    missing = [k for k in _HEADER_KEYS if k not in header]
    if missing:
        raise ValueError(f"{path}: header missing keys {missing}")
    nx, ny = int(header["nx"]), int(header["ny"])
    body = raw[newline + 1 :]
    expected = nx * ny * 8
    if len(body) != expected:
        raise ValueError(
            f"{path}: expected {expected} payload bytes for {nx}x{ny} field, "
            f"got {len(body)}"
        )
    values = np.frombuffer(body, dtype="<f8").astype(np.float64).reshape(ny, nx)
    grid = GridSpec(nx, ny, float(header["spacing"]))
    return FieldSample(
        grid,
        values,
        str(header["kernel"]),
        header["seed"],
        str(header["sampler"]),
    )
