"""Covariance kernels, samplers, grid geometry, and field-file IO."""

import math

import numpy as np
import pytest
import scipy.special

from excursion_lab.kernels import (
    ExactSampler,
    FieldSample,
    GridSpec,
    SpectralSampler,
    StationaryKernel,
    make_sampler,
    ou_mix,
    read_field,
    write_field,
)
from excursion_lab.rng import replicate_rng


def _cov_matrix(kernel, grid):
    xs = np.arange(grid.nx) * grid.spacing
    ys = np.arange(grid.ny) * grid.spacing
    px, py = np.meshgrid(xs, ys)
    px, py = px.ravel(), py.ravel()
    return kernel.evaluate(px[:, None] - px[None, :], py[:, None] - py[None, :])


class TestKernels:
    def test_unit_variance_at_zero(self):
        for k in (
            StationaryKernel.plane_wave(),
            StationaryKernel.gaussian(0.7),
            StationaryKernel.white(),
        ):
            assert k.evaluate(0.0, 0.0) == pytest.approx(1.0, abs=1e-14)

    def test_plane_wave_is_bessel(self, rng):
        k = StationaryKernel.plane_wave()
        d = rng.uniform(0, 20, size=(2, 100))
        r = np.hypot(d[0], d[1])
        assert np.allclose(k.evaluate(d[0], d[1]), scipy.special.j0(r), atol=1e-12)

    def test_gaussian_values(self):
        k = StationaryKernel.gaussian(2.0)
        assert k.evaluate(2.0, 0.0) == pytest.approx(math.exp(-0.5), rel=1e-12)
        assert k.evaluate(3.0, 4.0) == pytest.approx(math.exp(-25 / 8), rel=1e-12)

    def test_white_kernel(self):
        k = StationaryKernel.white()
        assert k.evaluate(0.0, 0.0) == 1.0
        assert k.evaluate(0.5, 0.0) == 0.0
        assert k.evaluate(0.0, 1e-9) == 0.0

    def test_isotropy_flag(self):
        assert StationaryKernel.plane_wave().isotropic
        assert StationaryKernel.gaussian(1.0).isotropic

    def test_descriptor_round_trip_strings(self):
        assert StationaryKernel.plane_wave().descriptor() == "plane-wave"
        assert StationaryKernel.gaussian(1.5).descriptor() == "gaussian:1.5"

    def test_matrix_free(self):
        k = StationaryKernel.matrix_free(
            lambda dx, dy: np.exp(-np.abs(dx) - np.abs(dy)),
            isotropic=False,
            name="laplace",
        )
        assert k.evaluate(1.0, 2.0) == pytest.approx(math.exp(-3.0), rel=1e-12)

    def test_covariance_positive_semidefinite(self):
        grid = GridSpec(6, 5, 0.8)
        for kernel in (StationaryKernel.plane_wave(), StationaryKernel.gaussian(1.1)):
            w = np.linalg.eigvalsh(_cov_matrix(kernel, grid))
            assert w.min() > -1e-9

    def test_kappa_bar_gaussian_decreasing(self):
        # For the squared exponential the sup over |x| >= r is attained at r.
        k = StationaryKernel.gaussian(1.0)
        for r in (0.5, 1.0, 2.0):
            val = k.kappa_bar(r, search_radius=8.0)
            assert val == pytest.approx(math.exp(-r * r / 2), abs=1e-3)

    def test_kappa_bar_plane_wave_envelope(self):
        # J0 oscillates, so the sup over |x| >= r is the local envelope max.
        k = StationaryKernel.plane_wave()
        val = k.kappa_bar(3.0, search_radius=30.0)
        assert 0.2 < val < 0.45  # |J0| max on [3, inf) is ~0.30 near x=3.8


class TestGrid:
    def test_positions(self):
        g = GridSpec(3, 2, 0.5, origin=(1.0, -1.0))
        assert g.n_cells == 6
        pos = g.positions()
        assert pos.shape == (6, 2)
        assert pos[2].tolist() == [2.0, -1.0]  # row-major: cell (2, 0)
        assert pos[3].tolist() == [1.0, -0.5]  # cell (0, 1)

    def test_validation(self):
        with pytest.raises(ValueError):
            GridSpec(0, 3, 0.5)
        with pytest.raises(ValueError):
            GridSpec(3, 3, 0.0)
        with pytest.raises(ValueError):
            GridSpec(3, 3, -1.0)


class TestExactSampler:
    def test_matches_covariance(self):
        kernel = StationaryKernel.gaussian(1.0)
        grid = GridSpec(4, 4, 0.7)
        sampler = make_sampler(kernel, grid, "exact")
        n = 40000
        acc = np.zeros((grid.n_cells, grid.n_cells))
        mean = np.zeros(grid.n_cells)
        for i in range(n // 2000):
            block = np.stack(
                [
                    sampler.sample_values(replicate_rng(99, i * 2000 + j)).ravel()
                    for j in range(2000)
                ]
            )
            acc += block.T @ block
            mean += block.sum(axis=0)
        emp = acc / n
        target = _cov_matrix(kernel, grid)
        # SE of a covariance entry is ~ sqrt((1 + k^2)/n) <= 0.0071.
        assert np.max(np.abs(emp - target)) < 5 * 0.0071
        assert np.max(np.abs(mean / n)) < 5 / math.sqrt(n)

    def test_cell_limit(self):
        kernel = StationaryKernel.white()
        with pytest.raises(ValueError):
            make_sampler(kernel, GridSpec(65, 64, 1.0), "exact")

    def test_deterministic_given_rng(self):
        sampler = make_sampler(
            StationaryKernel.plane_wave(), GridSpec(5, 5, 0.5), "exact"
        )
        a = sampler.sample_values(replicate_rng(5, 0))
        b = sampler.sample_values(replicate_rng(5, 0))
        assert np.array_equal(a, b)


class TestSpectralSampler:
    def test_marginal_moments(self):
        sampler = make_sampler(
            StationaryKernel.plane_wave(), GridSpec(8, 8, 0.5), "spectral"
        )
        vals = np.stack(
            [sampler.sample_values(replicate_rng(7, i)) for i in range(4000)]
        )
        assert abs(vals.mean()) < 0.02
        assert np.var(vals) == pytest.approx(1.0, abs=0.02)

    def test_covariance_in_expectation(self):
        kernel = StationaryKernel.gaussian(1.0)
        grid = GridSpec(6, 1, 0.5)
        sampler = make_sampler(kernel, grid, "spectral")
        n = 20000
        block = np.stack(
            [sampler.sample_values(replicate_rng(11, i)).ravel() for i in range(n)]
        )
        emp = block.T @ block / n
        target = _cov_matrix(kernel, grid)
        assert np.max(np.abs(emp - target)) < 0.05

    def test_fresh_waves_per_field(self):
        sampler = make_sampler(
            StationaryKernel.plane_wave(), GridSpec(4, 4, 0.5), "spectral"
        )
        a = sampler.sample_values(replicate_rng(3, 0))
        b = sampler.sample_values(replicate_rng(3, 1))
        assert not np.array_equal(a, b)


class TestOuMix:
    def test_endpoint_identity(self, rng):
        f = rng.standard_normal(50)
        g = rng.standard_normal(50)
        assert np.array_equal(ou_mix(f, g, 1.0), f)
        assert np.allclose(ou_mix(f, g, 0.0), g)

    def test_mixture_coefficients(self, rng):
        f = rng.standard_normal(10)
        g = rng.standard_normal(10)
        s = 0.6
        assert np.allclose(ou_mix(f, g, s), s * f + math.sqrt(1 - s * s) * g)

    def test_invalid_s(self, rng):
        f = rng.standard_normal(3)
        with pytest.raises(ValueError):
            ou_mix(f, f, 1.5)
        with pytest.raises(ValueError):
            ou_mix(f, f, -0.1)


class TestFieldIO:
    def _sample(self, seed=21):
        sampler = make_sampler(
            StationaryKernel.gaussian(1.0), GridSpec(7, 5, 0.5), "exact"
        )
        return sampler.sample(replicate_rng(seed, 0), seed=seed)

    def test_round_trip(self, tmp_path):
        fld = self._sample()
        path = tmp_path / "f.bin"
        write_field(path, fld)
        back = read_field(path)
        assert np.array_equal(back.values, fld.values)
        assert back.grid == fld.grid
        assert back.kernel_id == fld.kernel_id
        assert back.seed == fld.seed
        assert back.sampler == fld.sampler

    def test_bytes_deterministic(self, tmp_path):
        p1, p2 = tmp_path / "a.bin", tmp_path / "b.bin"
        write_field(p1, self._sample())
        write_field(p2, self._sample())
        assert p1.read_bytes() == p2.read_bytes()

    def test_header_is_json_line(self, tmp_path):
        import json

        path = tmp_path / "f.bin"
        write_field(path, self._sample())
        header = path.read_bytes().split(b"\n", 1)[0]
        meta = json.loads(header)
        assert meta["nx"] == 7 and meta["ny"] == 5

    def test_corrupt_payload_rejected(self, tmp_path):
        path = tmp_path / "f.bin"
        write_field(path, self._sample())
        data = path.read_bytes()
        path.write_bytes(data[:-8])  # truncate one value
        with pytest.raises(ValueError):
            read_field(path)
