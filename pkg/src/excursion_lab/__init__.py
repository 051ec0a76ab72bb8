"""Simulation and verification toolkit for planar excursion-set percolation.

Subpackages by theme:

- :mod:`excursion_lab.kernels` — stationary covariance kernels, grids,
  exact and spectral Gaussian field samplers, binary field-file IO.
- :mod:`excursion_lab.percolation` — excursion events (rectangle
  crossings, X-shapes, annulus circuits), connectivity, duality, and
  Monte Carlo event probabilities.
- :mod:`excursion_lab.threshold` — critical-level sweep, its bisection
  oracle, pivot certificates, and the edge-lattice variant.
- :mod:`excursion_lab.variance` — variance identity, delocalisation and
  tail profiles, hypercontractivity and tanh-integral checks.
- :mod:`excursion_lab.saddles` — discrete saddle detection, four-arm
  statistics, circle critical points, interior saddle bound.
- :mod:`excursion_lab.rsw` — deterministic construction plans for
  crossing-event containments, randomised plan verification, crossing
  width estimation, iterated-logarithm and good-scale utilities.
- :mod:`excursion_lab.experiments` — config-driven experiment runner
  with byte-stable outputs; :mod:`excursion_lab.cli` exposes it as the
  ``excursion-lab`` command.
"""

__version__ = "1.0.0"
