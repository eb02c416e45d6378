"""Indicator phantoms (discs and balls) with closed-form means and projections.

Every quantity here is exact up to round-off, so the rest of the package
tests against these functions rather than against other numerics.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy.special import j1

from .grid import Grid, GridSpec


@dataclass(frozen=True)
class Disc2D:
    center: tuple[float, float]
    radius: float
    amplitude: float = 1.0

    def __post_init__(self):
        center = tuple(float(c) for c in self.center)
        if len(center) != 2:
            raise ValueError(f"disc center must be 2D, got {self.center}")
        if not np.all(np.isfinite(center)):
            raise ValueError(f"disc center must be finite, got {self.center}")
        if not (self.radius > 0 and np.isfinite(self.radius)):
            raise ValueError(f"radius must be positive, got {self.radius}")
        if not np.isfinite(self.amplitude):
            raise ValueError("amplitude must be finite")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "amplitude", float(self.amplitude))


@dataclass(frozen=True)
class Ball3D:
    center: tuple[float, float, float]
    radius: float
    amplitude: float = 1.0

    def __post_init__(self):
        center = tuple(float(c) for c in self.center)
        if len(center) != 3:
            raise ValueError(f"ball center must be 3D, got {self.center}")
        if not np.all(np.isfinite(center)):
            raise ValueError(f"ball center must be finite, got {self.center}")
        if not (self.radius > 0 and np.isfinite(self.radius)):
            raise ValueError(f"radius must be positive, got {self.radius}")
        if not np.isfinite(self.amplitude):
            raise ValueError("amplitude must be finite")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "amplitude", float(self.amplitude))


Primitive = Union[Disc2D, Ball3D]


@dataclass(frozen=True)
class Phantom:
    """Sum of indicator primitives of one dimension.

    An empty phantom is the zero function; pass ``dimension`` explicitly in
    that case (defaults to 2).
    """

    primitives: tuple[Primitive, ...] = ()
    dimension: int = field(default=0)

    def __post_init__(self):
        prims = tuple(self.primitives)
        dims = {2 if isinstance(p, Disc2D) else 3 if isinstance(p, Ball3D) else None for p in prims}
        if None in dims:
            raise TypeError("primitives must be Disc2D or Ball3D instances")
        if len(dims) > 1:
            raise ValueError("a phantom cannot mix discs and balls")
        dim = dims.pop() if dims else (self.dimension or 2)
        if self.dimension and self.dimension != dim:
            raise ValueError(f"dimension {self.dimension} does not match primitives ({dim}D)")
        object.__setattr__(self, "primitives", prims)
        object.__setattr__(self, "dimension", dim)

    @classmethod
    def discs(cls, specs: Sequence[Sequence[float]]) -> "Phantom":
        """Build from ``(u, v, r, a)`` rows."""
        return cls(tuple(Disc2D((s[0], s[1]), s[2], s[3] if len(s) > 3 else 1.0) for s in specs), 2)

    @classmethod
    def balls(cls, specs: Sequence[Sequence[float]]) -> "Phantom":
        """Build from ``(x, y, z, r, a)`` rows."""
        return cls(
            tuple(Ball3D((s[0], s[1], s[2]), s[3], s[4] if len(s) > 4 else 1.0) for s in specs), 3
        )

    def __add__(self, other: "Phantom") -> "Phantom":
        if self.dimension != other.dimension:
            raise ValueError("cannot add phantoms of different dimension")
        return Phantom(self.primitives + other.primitives, self.dimension)

    def __len__(self) -> int:
        return len(self.primitives)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Centers ``(k, dim)``, radii ``(k,)`` and amplitudes ``(k,)``."""
        k = len(self.primitives)
        centers = np.array([p.center for p in self.primitives], dtype=float).reshape(k, self.dimension)
        radii = np.array([p.radius for p in self.primitives], dtype=float)
        amps = np.array([p.amplitude for p in self.primitives], dtype=float)
        return centers, radii, amps

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        centers, radii, _ = self.arrays()
        if not len(radii):
            z = np.zeros(self.dimension)
            return z, z
        return (centers - radii[:, None]).min(axis=0), (centers + radii[:, None]).max(axis=0)

    def scaled(self, factor: float) -> "Phantom":
        """Same geometry, amplitudes multiplied by ``factor``."""
        cls = Disc2D if self.dimension == 2 else Ball3D
        return Phantom(
            tuple(cls(p.center, p.radius, p.amplitude * factor) for p in self.primitives),
            self.dimension,
        )


def _points(phantom: Phantom, point) -> np.ndarray:
    pts = np.asarray(point, dtype=float)
    if pts.shape[-1:] != (phantom.dimension,):
        raise ValueError(
            f"points must have trailing dimension {phantom.dimension}, got shape {pts.shape}"
        )
    return pts


def evaluate(phantom: Phantom, point) -> np.ndarray | float:
    """Sum of amplitudes of the primitives containing ``point`` (boundary inclusive)."""
    pts = _points(phantom, point)
    out = np.zeros(pts.shape[:-1])
    for p in phantom.primitives:
        d2 = np.sum((pts - np.asarray(p.center)) ** 2, axis=-1)
        out = out + p.amplitude * (d2 <= p.radius**2)
    return out if out.ndim else float(out)


def rasterize(phantom: Phantom, spec: GridSpec, supersample: int = 1) -> Grid:
    """Sample the phantom on ``spec``; with ``supersample=s`` each node averages
    ``s**ndim`` sub-samples spread uniformly over its cell."""
    if spec.ndim != phantom.dimension:
        raise ValueError(f"{spec.ndim}D grid for a {phantom.dimension}D phantom")
    s = int(supersample)
    if s < 1:
        raise ValueError("supersample must be >= 1")
    nodes = spec.nodes()
    if s == 1:
        return Grid(evaluate(phantom, nodes), spec.origin, spec.spacing)
    offsets = (np.arange(s) + 0.5) / s - 0.5
    spacing = np.asarray(spec.spacing)
    acc = np.zeros(spec.shape)
    for shift in np.stack(np.meshgrid(*([offsets] * spec.ndim), indexing="ij"), -1).reshape(-1, spec.ndim):
        acc += evaluate(phantom, nodes + shift * spacing)
    return Grid(acc / s**spec.ndim, spec.origin, spec.spacing)


def _disc_arc_fraction(d: np.ndarray, r: np.ndarray, R: float) -> np.ndarray:
    """Fraction of the circle (radius ``r``, center at distance ``d`` from the
    disc center) lying inside a disc of radius ``R``."""
    d, r = np.broadcast_arrays(np.asarray(d, float), np.asarray(r, float))
    out = np.zeros(d.shape)
    inside = d + r <= R
    out[inside] = 1.0
    partial = ~inside & (r < d + R) & (r > d - R)
    if np.any(partial):
        dp, rp = d[partial], r[partial]
        # law of cosines; clamp for tangency round-off
        c = np.clip((dp**2 + rp**2 - R**2) / (2.0 * dp * rp), -1.0, 1.0)
        out[partial] = np.arccos(c) / np.pi
    return out


def circular_mean(phantom: Phantom, center, r) -> np.ndarray | float:
    """Mean of the phantom over the circle of radius ``r`` about ``center``.

    ``center`` has shape ``(..., 2)`` and broadcasts against ``r``.
    """
    if phantom.dimension != 2:
        raise ValueError("circular_mean needs a 2D phantom")
    c = _points(phantom, center)
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("radius must be non-negative")
    out = np.zeros(np.broadcast_shapes(c.shape[:-1], r.shape))
    for p in phantom.primitives:
        d = np.sqrt(np.sum((c - np.asarray(p.center)) ** 2, axis=-1))
        out = out + p.amplitude * _disc_arc_fraction(d, r, p.radius)
    return out if out.ndim else float(out)


def _ball_cap_fraction(d, r, R: float) -> np.ndarray:
    d, r = np.broadcast_arrays(np.asarray(d, float), np.asarray(r, float))
    out = np.zeros(d.shape)
    inside = d + r <= R
    out[inside] = 1.0
    partial = ~inside & (r < d + R) & (r > d - R)
    if np.any(partial):
        dp, rp = d[partial], r[partial]
        out[partial] = (R**2 - (dp - rp) ** 2) / (4.0 * dp * rp)
    return out


def spherical_mean(phantom: Phantom, center, r) -> np.ndarray | float:
    """Mean of a ball phantom over the sphere of radius ``r`` about ``center``."""
    if phantom.dimension != 3:
        raise ValueError("spherical_mean needs a 3D phantom")
    c = _points(phantom, center)
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("radius must be non-negative")
    out = np.zeros(np.broadcast_shapes(c.shape[:-1], r.shape))
    for p in phantom.primitives:
        d = np.sqrt(np.sum((c - np.asarray(p.center)) ** 2, axis=-1))
        out = out + p.amplitude * _ball_cap_fraction(d, r, p.radius)
    return out if out.ndim else float(out)


def radon_of_phantom(phantom: Phantom, direction, offset) -> np.ndarray | float:
    """Line integral over ``{s*tau + offset*tau_perp}`` with ``tau_perp = (-tau2, tau1)``."""
    if phantom.dimension != 2:
        raise ValueError("radon_of_phantom needs a 2D phantom")
    tau = np.asarray(direction, dtype=float)
    if tau.shape[-1:] != (2,):
        raise ValueError("direction must be a 2-vector")
    if not np.allclose(np.linalg.norm(tau, axis=-1), 1.0, atol=1e-9):
        raise ValueError("direction must be a unit vector")
    perp = np.stack([-tau[..., 1], tau[..., 0]], axis=-1)
    offset = np.asarray(offset, dtype=float)
    out = np.zeros(np.broadcast_shapes(perp.shape[:-1], offset.shape))
    for p in phantom.primitives:
        dist = np.abs(perp @ np.asarray(p.center) - offset)
        out = out + p.amplitude * 2.0 * np.sqrt(np.clip(p.radius**2 - dist**2, 0.0, None))
    return out if out.ndim else float(out)


def fourier_cosine(phantom: Phantom, lam, kappa) -> np.ndarray:
    """Closed-form Fourier-cosine transform of the phantom viewed as data on ``v > 0``.

    For a 2D phantom ``lam`` is scalar-valued and the transform is
    ``(1/pi) * int int_0^inf H(u, v) cos(kappa v) exp(-i lam u) dv du``; for a
    3D phantom ``lam`` has trailing dimension 2 and the prefactor is
    ``2 (2 pi)^(-3/2)``. Primitives are assumed to lie in ``v >= radius``
    (otherwise the mirrored copy overlaps and the result is not the transform
    of the phantom).
    """
    centers, radii, amps = phantom.arrays()
    kappa = np.asarray(kappa, dtype=float)
    if phantom.dimension == 2:
        lam = np.asarray(lam, dtype=float)
        rho = np.sqrt(lam**2 + kappa**2)
        out = np.zeros(np.broadcast_shapes(lam.shape, kappa.shape), dtype=complex)
        for (uc, vc), R, a in zip(centers, radii, amps):
            x = R * rho
            safe = np.where(x > 1e-8, x, 1.0)
            shape = np.where(x > 1e-8, 2.0 * j1(safe) / safe, 1.0 - x**2 / 8.0)
            out += a * R**2 * shape * np.cos(kappa * vc) * np.exp(-1j * lam * uc)
        return out
    lam = np.asarray(lam, dtype=float)
    if lam.shape[-1:] != (2,):
        raise ValueError("3D phantoms need 2-component lam")
    rho = np.sqrt(np.sum(lam**2, axis=-1) + kappa**2)
    out = np.zeros(np.broadcast_shapes(lam.shape[:-1], kappa.shape), dtype=complex)
    pref = (2.0 * np.pi) ** -1.5
    for (xc, yc, zc), R, a in zip(centers, radii, amps):
        x = R * rho
        safe = np.where(x > 1e-4, x, 1.0)
        shape = np.where(x > 1e-4, 3.0 * (np.sin(safe) - safe * np.cos(safe)) / safe**3, 1.0 - x**2 / 10.0)
        vol = 4.0 / 3.0 * np.pi * R**3
        phase = np.exp(-1j * (lam[..., 0] * xc + lam[..., 1] * yc))
        out += pref * a * vol * shape * 2.0 * np.cos(kappa * zc) * phase
    return out


def check_above_line(phantom: Phantom, axis: int = -1) -> bool:
    """True if every primitive stays strictly on the positive side of the
    recording line/plane ``x[axis] = 0``; warns otherwise."""
    centers, radii, _ = phantom.arrays()
    ok = bool(np.all(centers[:, axis] - radii > 0)) if len(radii) else True
    if not ok:
        warnings.warn("phantom touches or crosses the recording line v <= 0", stacklevel=3)
    return ok


NINE_DISCS = (
    # u, v, radius, amplitude: a 3x3 layout inside [-10, 10] x [0, 20]
    (-6.0, 4.0, 2.5, 1.0),
    (0.0, 4.0, 1.5, 0.8),
    (6.0, 4.0, 2.0, 1.0),
    (-6.0, 10.0, 1.5, 0.8),
    (0.0, 10.0, 2.5, 1.0),
    (6.0, 10.0, 1.5, 0.6),
    (-6.0, 16.0, 2.0, 1.0),
    (0.0, 16.0, 2.0, 0.6),
    (6.0, 16.0, 2.5, 0.8),
)


def nine_discs() -> Phantom:
    """Nine-disc test phantom supported in ``[-10, 10] x [0, 20]``."""
    return Phantom.discs(NINE_DISCS)
