"""Seeded correlated log-normal permeability fields for the sand layers.

Gaussian fields are sampled by FFT circulant embedding of an exponential
covariance, then exponentiated around the layer's geometric-mean
permeability.  Clay cells keep their constant permeability.  The RNG is
Philox (counter based), so fields are bit-reproducible across platforms
for a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import LinearNDInterpolator
from scipy.spatial import cKDTree

from .grid import CLAY, Grid, MaterialMap


@dataclass(frozen=True)
class FieldSpec:
    log_variance: float
    correlation_length: float
    seed: int

    def __post_init__(self) -> None:
        if self.log_variance < 0:
            raise ValueError("log_variance must be >= 0")
        if self.correlation_length <= 0:
            raise ValueError("correlation_length must be > 0")


def _gaussian_field(grid: Grid, corr_length: float, rng: np.random.Generator) -> np.ndarray:
    """Standard (zero-mean, unit-variance) Gaussian field with exponential covariance."""
    # embed on a torus at least twice the domain in each direction
    m, n = 2 * grid.ny, 2 * grid.nx
    jy = np.minimum(np.arange(m), m - np.arange(m)) * grid.dy
    jx = np.minimum(np.arange(n), n - np.arange(n)) * grid.dx
    dist = np.hypot(jx[None, :], jy[:, None])
    cov = np.exp(-dist / corr_length)
    lam = np.fft.fft2(cov).real
    lam = np.maximum(lam, 0.0)  # clip small negative embedding eigenvalues
    xi = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
    y = np.fft.fft2(np.sqrt(lam / (m * n)) * xi)
    return y.real[: grid.ny, : grid.nx]


def generate_log_normal_field(
    grid: Grid, material: MaterialMap, spec: FieldSpec
) -> np.ndarray:
    """Per-cell permeability (m^2): correlated log-normal per sand layer.

    ln k is stationary Gaussian with the requested variance and geometric
    mean equal to each layer's mean permeability; clay cells keep their
    constant value.
    """
    k = material.k.copy()
    if spec.log_variance == 0.0:
        return k
    sigma = np.sqrt(spec.log_variance)
    for lid, props in material.props.items():
        if lid == CLAY:
            continue
        mask = material.lithology == lid
        if not mask.any():
            continue
        rng = np.random.Generator(np.random.Philox(key=[spec.seed, lid]))
        z = _gaussian_field(grid, spec.correlation_length, rng)
        # condition each layer on its prescribed geometric mean: a finite
        # layer holds few correlation lengths, so the raw sample mean of
        # ln k wanders several percent between realizations
        zl = z[mask]
        k[mask] = props.k_mean * np.exp(sigma * (zl - zl.mean()))
    return k


class FieldFileError(ValueError):
    """Raised for malformed or out-of-domain field sample files."""


def import_field(grid: Grid, path, mode: str = "nearest") -> np.ndarray:
    """Read (x, y, k) samples and map them onto cell centers.

    ``mode`` is "nearest" or "bilinear"; bilinear falls back to nearest
    outside the convex hull of the samples so every cell is covered.
    """
    try:
        data = np.loadtxt(path, ndmin=2)
    except ValueError as err:
        raise FieldFileError(f"malformed field file {path}: {err}") from err
    if data.shape[1] != 3 or data.shape[0] == 0:
        raise FieldFileError(f"field file {path} must hold (x, y, k) triplets")
    x, y, v = data.T
    if (x < 0).any() or (x > grid.width).any() or (y < 0).any() or (y > grid.height).any():
        raise FieldFileError("field sample coordinates outside the domain")

    xv, yv = grid.cell_centers()
    pts = np.column_stack([xv.ravel(), yv.ravel()])
    tree = cKDTree(np.column_stack([x, y]))
    _, nearest_idx = tree.query(pts)
    nearest = v[nearest_idx]
    if mode == "nearest":
        out = nearest
    elif mode == "bilinear":
        if data.shape[0] < 3:
            out = nearest  # too few samples to triangulate
        else:
            interp = LinearNDInterpolator(np.column_stack([x, y]), v)
            out = interp(pts)
            hole = np.isnan(out)
            out[hole] = nearest[hole]
    else:
        raise ValueError(f"unknown interpolation mode {mode!r}")
    return out.reshape(grid.ny, grid.nx)
