"""Periodic tensor-product grids on the unit torus and their discrete calculus.

Cells are uniform with centers at (i + 1/2) h, h = 1/N, on [0,1)^n for
n = 1, 2, 3.  All index arithmetic wraps modulo N on every axis, so sampled
fields are exactly periodic; there are no ghost cells.  Integration is the
midpoint rule (spectrally accurate for smooth periodic integrands), gradients
are centered second-order differences, and the face divergence telescopes to
zero total mass on every periodic flux array.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    GridTooCoarseError,
    NonFiniteFieldError,
    ShapeError,
    UnsupportedDimensionError,
)


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered grid on [0,1)^dim with periodic wrap."""

    dim: int
    cells_per_axis: int

    @property
    def spacing(self) -> float:
        return 1.0 / self.cells_per_axis

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.cells_per_axis,) * self.dim

    @property
    def cell_count(self) -> int:
        return self.cells_per_axis**self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    def axis_centers(self) -> np.ndarray:
        """Cell-center coordinates (i + 1/2) h along one axis."""
        return (np.arange(self.cells_per_axis) + 0.5) * self.spacing

    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Cell-center coordinate arrays, broadcastable to ``shape``.

        The k-th array has the axis-k centers along axis k and singleton
        extents elsewhere, so arithmetic over several of them broadcasts to
        the full grid shape without materializing dense meshes.
        """
        centers = self.axis_centers()
        out = []
        for k in range(self.dim):
            form = [1] * self.dim
            form[k] = self.cells_per_axis
            out.append(centers.reshape(form))
        return tuple(out)


def build_grid(dim: int, cells_per_axis: int) -> Grid:
    """Validated grid constructor."""
    if dim not in (1, 2, 3):
        raise UnsupportedDimensionError(f"dim must be 1, 2, or 3; got {dim}")
    if cells_per_axis < 4:
        raise GridTooCoarseError(f"cells_per_axis must be >= 4; got {cells_per_axis}")
    return Grid(dim=int(dim), cells_per_axis=int(cells_per_axis))


def _as_field_array(grid: Grid, values, expected_shape: tuple[int, ...]) -> np.ndarray:
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.shape != expected_shape:
        raise ShapeError(f"expected array of shape {expected_shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteFieldError("field contains NaN or infinite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ScalarField:
    """One real value per cell.  Immutable once constructed."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _as_field_array(self.grid, self.values, self.grid.shape))

    def min(self) -> float:
        return float(self.values.min())

    def max(self) -> float:
        return float(self.values.max())


@dataclass(frozen=True)
class VectorField:
    """dim real components per cell, stored as (dim, N, ..., N)."""

    grid: Grid
    components: np.ndarray

    def __post_init__(self):
        expected = (self.grid.dim,) + self.grid.shape
        object.__setattr__(self, "components", _as_field_array(self.grid, self.components, expected))

    def magnitude(self) -> np.ndarray:
        """Pointwise Euclidean norm."""
        return np.sqrt(np.sum(self.components**2, axis=0))


def integrate(field: ScalarField) -> float:
    """Midpoint-rule integral h^n * sum(values)."""
    return field.grid.cell_volume * float(field.values.sum())


def gradient_arrays(values: np.ndarray, spacing: float) -> list[np.ndarray]:
    """Centered periodic differences (v[i+1] - v[i-1]) / (2h) per axis."""
    two_h = 2.0 * spacing
    return [
        (np.roll(values, -1, axis=k) - np.roll(values, 1, axis=k)) / two_h
        for k in range(values.ndim)
    ]


def centered_gradient(field: ScalarField) -> VectorField:
    """Second-order centered gradient with periodic wrap."""
    comps = gradient_arrays(field.values, field.grid.spacing)
    return VectorField(field.grid, np.stack(comps))


def centered_hessian(field: ScalarField) -> np.ndarray:
    """Discrete Hessian, shape (dim, dim, N, ..., N).

    Diagonal entries use the compact 3-point second difference; off-diagonal
    entries apply the centered first difference twice (exactly symmetric
    because the roll operations commute).
    """
    grid = field.grid
    v = field.values
    h = grid.spacing
    n = grid.dim
    out = np.empty((n, n) + grid.shape)
    firsts = gradient_arrays(v, h)
    for k in range(n):
        out[k, k] = (np.roll(v, -1, axis=k) - 2.0 * v + np.roll(v, 1, axis=k)) / h**2
        for l in range(k + 1, n):
            cross = (np.roll(firsts[k], -1, axis=l) - np.roll(firsts[k], 1, axis=l)) / (2.0 * h)
            out[k, l] = cross
            out[l, k] = cross
    return out


def face_divergence(grid: Grid, face_flux) -> ScalarField:
    """Conservative divergence of per-face fluxes.

    ``face_flux`` holds one array per axis, each of the grid's shape;
    entry i along axis k is the flux through the face between cells i and
    i+1 (wrapping).  The cell value is sum_k (flux_k[i] - flux_k[i-1]) / h,
    so the total over all cells telescopes to zero.
    """
    fluxes = list(face_flux)
    if len(fluxes) != grid.dim:
        raise ShapeError(f"expected {grid.dim} face-flux arrays, got {len(fluxes)}")
    acc = np.zeros(grid.shape)
    for k, flux in enumerate(fluxes):
        arr = np.asarray(flux, dtype=np.float64)
        if arr.shape != grid.shape:
            raise ShapeError(f"face flux on axis {k} has shape {arr.shape}, expected {grid.shape}")
        acc += arr - np.roll(arr, 1, axis=k)
    return ScalarField(grid, acc / grid.spacing)
