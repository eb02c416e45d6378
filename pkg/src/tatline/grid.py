"""Uniformly sampled scalar fields in 2 or 3 dimensions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Node layout of a uniform grid: ``origin + index * spacing`` per axis."""

    shape: tuple[int, ...]
    origin: tuple[float, ...]
    spacing: tuple[float, ...]

    def __post_init__(self):
        shape = tuple(int(n) for n in self.shape)
        origin = tuple(float(o) for o in self.origin)
        spacing = tuple(float(s) for s in self.spacing)
        if not (len(shape) == len(origin) == len(spacing)):
            raise ValueError("shape, origin and spacing must have equal length")
        if any(n < 1 for n in shape):
            raise ValueError(f"grid counts must be positive, got {shape}")
        if any(not s > 0 for s in spacing):
            raise ValueError(f"grid spacing must be positive, got {spacing}")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "spacing", spacing)

    @classmethod
    def from_bounds(cls, lower, upper, shape) -> "GridSpec":
        """Grid whose first and last nodes sit on ``lower`` and ``upper``."""
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))
        shape = tuple(int(n) for n in np.atleast_1d(shape))
        spacing = tuple(
            (hi - lo) / (n - 1) if n > 1 else 1.0 for lo, hi, n in zip(lower, upper, shape)
        )
        return cls(shape, tuple(lower), spacing)

    @property
    def ndim(self) -> int:
        return len(self.shape)

    def axes(self) -> list[np.ndarray]:
        return [o + s * np.arange(n) for n, o, s in zip(self.shape, self.origin, self.spacing)]

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*self.axes(), indexing="ij")

    def nodes(self) -> np.ndarray:
        """All node coordinates, shape ``(*shape, ndim)``."""
        return np.stack(self.mesh(), axis=-1)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))


@dataclass
class Grid:
    """Sampled field; ``values[i, j(, k)]`` lives at node ``origin + (i, j(, k)) * spacing``."""

    values: np.ndarray
    origin: tuple[float, ...]
    spacing: tuple[float, ...]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values)
        spec = GridSpec(self.values.shape, self.origin, self.spacing)
        self.origin, self.spacing = spec.origin, spec.spacing

    @classmethod
    def zeros(cls, spec: GridSpec) -> "Grid":
        return cls(np.zeros(spec.shape), spec.origin, spec.spacing)

    @property
    def spec(self) -> GridSpec:
        return GridSpec(self.values.shape, self.origin, self.spacing)

    @property
    def ndim(self) -> int:
        return self.values.ndim

    def axes(self) -> list[np.ndarray]:
        return self.spec.axes()

    def mass(self) -> float:
        return float(self.values.sum() * self.spec.cell_volume)

    def sample(self, points, fill_value: float = 0.0) -> np.ndarray:
        """Multilinear interpolation at ``points`` (shape ``(..., ndim)``)."""
        from scipy.ndimage import map_coordinates

        points = np.asarray(points, dtype=float)
        coords = [
            (points[..., d] - self.origin[d]) / self.spacing[d] for d in range(self.ndim)
        ]
        out = map_coordinates(
            np.asarray(self.values, dtype=float),
            [c.ravel() for c in coords],
            order=1,
            mode="constant",
            cval=fill_value,
        )
        return out.reshape(points.shape[:-1])

    def resample(self, spec: GridSpec, fill_value: float = 0.0) -> "Grid":
        return Grid(self.sample(spec.nodes(), fill_value), spec.origin, spec.spacing)


# Aliases matching the 2D / 3D naming used in the docs.
Grid2D = Grid
Grid3D = Grid
