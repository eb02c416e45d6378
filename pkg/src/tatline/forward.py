"""Line-detector data: the 2D wave solution on the recording line.

The trace at a detector ``(u, 0)`` follows from the circular means
``Phi(r)`` of the initial data about that detector through the Abel-type
pair

    Q(t) = d/dt int_0^t r Phi(r) / sqrt(t^2 - r^2) dr = t int_0^t Phi'(r) / sqrt(t^2 - r^2) dr
    Phi(r) = (2/pi) int_0^r Q(t) / sqrt(r^2 - t^2) dt

Both singular kernels are integrated after the substitutions ``r = t sin a``
and ``t = r sin a``.  With ``Phi`` (resp. ``Q``) taken piecewise linear
between samples the substituted integrals are exact, which is what the
cached kernel matrices below implement.  Sound speed is 1 throughout.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from . import phantom as ph


class SamplingWarning(UserWarning):
    """Time/detector sampling violates a guard (aliasing or truncation risk)."""


class GeometryWarning(UserWarning):
    """Phantom intersects the recording line."""


@dataclass
class RadialProfile:
    """Samples ``values[j]`` at radius (or time) ``j * dr``."""

    values: np.ndarray
    dr: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if not self.dr > 0:
            raise ValueError("dr must be positive")

    @property
    def n(self) -> int:
        return self.values.shape[-1]

    @property
    def r(self) -> np.ndarray:
        return self.dr * np.arange(self.n)


@dataclass(frozen=True)
class TraceSpec:
    """Detectors at ``u0 + i*du`` (``i < n_u``) on the line ``v = 0``, times ``j*dt`` (``j < n_t``)."""

    u0: float
    du: float
    n_u: int
    dt: float
    n_t: int

    def __post_init__(self):
        if not (self.du > 0 and self.dt > 0):
            raise ValueError("du and dt must be positive")
        if self.n_u < 2 or self.n_t < 2:
            raise ValueError("need at least two detectors and two time samples")

    @classmethod
    def from_window(cls, u_min: float, u_max: float, n_u: int, t_max: float, n_t: int) -> "TraceSpec":
        """Detectors spanning ``[u_min, u_max]`` inclusive; times ``[0, t_max)``."""
        return cls(float(u_min), (u_max - u_min) / (n_u - 1), int(n_u), t_max / n_t, int(n_t))

    @property
    def u(self) -> np.ndarray:
        return self.u0 + self.du * np.arange(self.n_u)

    @property
    def t(self) -> np.ndarray:
        return self.dt * np.arange(self.n_t)


@dataclass
class WaveTrace:
    """``values[i, j]`` is the trace at detector ``u0 + i*du`` and time ``j*dt``."""

    values: np.ndarray
    u0: float
    du: float
    dt: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("trace values must be 2D (detector, time)")
        if not (self.du > 0 and self.dt > 0):
            raise ValueError("du and dt must be positive")
        if min(self.values.shape) < 2:
            raise ValueError("need at least two detectors and two time samples")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("trace contains non-finite values")

    @property
    def n_u(self) -> int:
        return self.values.shape[0]

    @property
    def n_t(self) -> int:
        return self.values.shape[1]

    @property
    def u(self) -> np.ndarray:
        return self.u0 + self.du * np.arange(self.n_u)

    @property
    def t(self) -> np.ndarray:
        return self.dt * np.arange(self.n_t)

    @property
    def spec(self) -> TraceSpec:
        return TraceSpec(self.u0, self.du, self.n_u, self.dt, self.n_t)

    def __add__(self, other: "WaveTrace") -> "WaveTrace":
        if self.spec != other.spec:
            raise ValueError("traces have different sampling")
        return replace(self, values=self.values + other.values, meta=dict(self.meta))


@dataclass
class PlanarTrace:
    """Data of a planar detector array: ``values[i1, i2, j]`` at ``(u0 + i*du, 0)``, time ``j*dt``."""

    values: np.ndarray
    u0: tuple[float, float]
    du: tuple[float, float]
    dt: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 3:
            raise ValueError("planar trace values must be 3D (u1, u2, time)")
        self.u0 = tuple(float(x) for x in self.u0)
        self.du = tuple(float(x) for x in self.du)

    @property
    def n_t(self) -> int:
        return self.values.shape[-1]


# -- Abel-type kernels -------------------------------------------------------


@lru_cache(maxsize=16)
def _q_kernel(n_t: int, oversample: int) -> np.ndarray:
    """``W[j, k]`` with ``Q(t_j) = sum_k (Phi[k+1] - Phi[k]) * W[j, k]`` for a radial
    grid ``o`` times finer than the time grid."""
    o = oversample
    n_cells = (n_t - 1) * o
    t = (np.arange(n_t) * o)[:, None].astype(float)  # in units of the fine step
    k = np.arange(n_cells)[None, :].astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        lo = np.arcsin(np.minimum(k, t) / t)
        hi = np.arcsin(np.minimum(k + 1.0, t) / t)
        w = t * (hi - lo)
    w[0] = 0.0
    w.setflags(write=False)
    return w


@lru_cache(maxsize=16)
def _abel_kernel(n: int) -> np.ndarray:
    """``A[j, k]`` with ``M(r_j) = sum_k A[j, k] Q[k]`` for piecewise linear ``Q``."""
    r = np.arange(n, dtype=float)[:, None]
    k = np.arange(n, dtype=float)[None, :]
    tk = np.minimum(k, r)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(r > 0, np.arcsin(tk / r), 0.0)
    c = np.sqrt(np.clip(r**2 - tk**2, 0.0, None))
    d_asin = np.diff(s, axis=1)
    d_sqrt = c[:, :-1] - c[:, 1:]
    # Q = Q_k (k + 1 - t) + Q_{k+1} (t - k) on cell k (unit step)
    a = np.zeros((n, n))
    a[:, :-1] += k[:, 1:] * d_asin - d_sqrt
    a[:, 1:] += d_sqrt - k[:, :-1] * d_asin
    a *= 2.0 / np.pi
    a.setflags(write=False)
    return a


def _q_apply(phi_fine: np.ndarray, n_t: int, oversample: int) -> np.ndarray:
    dphi = np.diff(phi_fine, axis=-1)
    return dphi @ _q_kernel(n_t, oversample).T


def q_from_circular_means(profile: RadialProfile) -> RadialProfile:
    """Trace ``Q(t) = t * int_0^t Phi'(r) / sqrt(t^2 - r^2) dr`` on the profile's grid.

    This is the integrated-by-parts form of the D'Alembert relation and
    assumes ``Phi(0) = 0`` (detector outside the support): a constant
    profile maps to zero.  ``Phi'`` is the cell difference, i.e. the central
    difference at cell midpoints; each cell is integrated exactly in
    ``a = arcsin(r/t)``.  Leading axes of ``values`` are batched.
    """
    if profile.n < 3:
        raise ValueError("need at least 3 radial samples to differentiate")
    return RadialProfile(_q_apply(profile.values, profile.n, 1), profile.dr)


def abel_inverse(q: RadialProfile, nodes: int | None = None) -> RadialProfile:
    """Circular means ``M(r) = (2/pi) int_0^r Q(t) / sqrt(r^2 - t^2) dt``.

    By default ``Q`` is taken piecewise linear and each cell is integrated
    exactly after ``t = r sin a``.  With ``nodes`` set, Gauss-Legendre in
    ``a`` on ``[0, pi/2]`` with that many nodes is used instead (``Q``
    linearly interpolated).
    """
    if q.n < 2:
        raise ValueError("need at least 2 samples")
    if nodes is None:
        return RadialProfile(q.values @ _abel_kernel(q.n).T, q.dr)
    if nodes < 1:
        raise ValueError("nodes must be positive")
    x, w = np.polynomial.legendre.leggauss(int(nodes))
    alpha = (x + 1.0) * np.pi / 4.0
    w = w * np.pi / 4.0
    r = np.arange(q.n, dtype=float)
    pos = r[:, None] * np.sin(alpha)[None, :]  # in grid units
    i0 = np.clip(np.floor(pos).astype(int), 0, q.n - 2)
    f = pos - i0
    vals = q.values[..., i0] * (1 - f) + q.values[..., i0 + 1] * f
    return RadialProfile((2.0 / np.pi) * (vals @ w), q.dr)


def j_transform(psi: RadialProfile) -> RadialProfile:
    """``J(psi)(u) = int_0^u psi(t) / sqrt(u^2 - t^2) dt`` (piecewise-linear ``psi``)."""
    return RadialProfile(abel_inverse(psi).values * (np.pi / 2.0), psi.dr)


def k_transform(psi: RadialProfile) -> RadialProfile:
    """``K(psi)(u) = u * J(psi)(u)``."""
    return RadialProfile(psi.r * j_transform(psi).values, psi.dr)


# -- trace simulation --------------------------------------------------------


def required_window(phantom: ph.Phantom) -> float:
    """Time window that holds the full signal of detectors near the phantom:
    1.25 x (farthest support depth + support diameter)."""
    lo, hi = phantom.bounding_box()
    if not len(phantom):
        return 0.0
    depth = float(np.max(np.abs([lo[-1], hi[-1]])))
    diameter = float(np.linalg.norm(hi - lo))
    return 1.25 * (depth + diameter)


def _guards(phantom: ph.Phantom, spec: TraceSpec, meta: dict) -> None:
    if not ph.check_above_line(phantom):
        meta["touches_line"] = True
    if spec.dt > spec.du:
        warnings.warn(f"dt={spec.dt:g} exceeds du={spec.du:g}; temporal aliasing likely", SamplingWarning, stacklevel=3)
        meta["dt_guard"] = False
    need = required_window(phantom)
    if spec.n_t * spec.dt < need:
        warnings.warn(f"time window {spec.n_t * spec.dt:g} shorter than {need:g}", SamplingWarning, stacklevel=3)
        meta["window_guard"] = False


def circular_mean_profiles(phantom: ph.Phantom, u: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Circular means about detectors ``(u_i, 0)``, shape ``(len(u), len(r))``."""
    centers = np.stack([u, np.zeros_like(u)], axis=-1)[:, None, :]
    return np.asarray(ph.circular_mean(phantom, centers, r[None, :]))


def simulate_trace(
    phantom: ph.Phantom,
    spec: TraceSpec,
    mirror: bool = True,
    oversample: int = 4,
) -> WaveTrace:
    """Trace of the 2D wave equation started from the phantom, recorded on ``v = 0``.

    With ``mirror=True`` the initial data is the even extension
    ``H(u, |v|)`` of the phantom, so the circular means are doubled (the
    phantom is assumed to live in ``v > 0``).  ``mirror=False`` gives the
    physical trace of the phantom alone, which equals the mirrored trace of
    half the phantom.  The radial grid is ``oversample`` times finer than
    the time grid; ``Q`` is returned at the time nodes.
    """
    if phantom.dimension != 2:
        raise ValueError("simulate_trace needs a 2D phantom")
    meta = {"mirror": bool(mirror), "oversample": int(oversample)}
    _guards(phantom, spec, meta)
    o = int(oversample)
    r = (spec.dt / o) * np.arange((spec.n_t - 1) * o + 1)
    phi = circular_mean_profiles(phantom, spec.u, r)
    if mirror:
        phi *= 2.0
    values = _q_apply(phi, spec.n_t, o) if len(phantom) else np.zeros((spec.n_u, spec.n_t))
    return WaveTrace(values, spec.u0, spec.du, spec.dt, meta)


def trace_from_profiles(phi_fine: np.ndarray, spec: TraceSpec, oversample: int, meta=None) -> WaveTrace:
    """Trace from precomputed circular means on the ``oversample``-fold radial grid."""
    values = _q_apply(np.asarray(phi_fine, float), spec.n_t, int(oversample))
    return WaveTrace(values, spec.u0, spec.du, spec.dt, dict(meta or {}))


def ball_pressure(phantom: ph.Phantom, points, t) -> np.ndarray:
    """3D pressure ``p = d/dt (t * spherical_mean)`` of a ball phantom (closed form)."""
    if phantom.dimension != 3:
        raise ValueError("ball_pressure needs a 3D phantom")
    pts = np.asarray(points, dtype=float)
    t = np.asarray(t, dtype=float)
    out = np.zeros(np.broadcast_shapes(pts.shape[:-1], t.shape))
    for b in phantom.primitives:
        d = np.sqrt(np.sum((pts - np.asarray(b.center)) ** 2, axis=-1))
        d, tt = np.broadcast_arrays(d, t)
        R = b.radius
        full = d + tt <= R
        partial = ~full & (tt < d + R) & (tt > d - R)
        val = np.zeros(d.shape)
        val[full] = 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            val[partial] = (d[partial] - tt[partial]) / (2.0 * d[partial])
        out = out + b.amplitude * val
    return out


def simulate_planar_trace(
    phantom: ph.Phantom,
    u0: tuple[float, float],
    du: tuple[float, float],
    n_u: tuple[int, int],
    dt: float,
    n_t: int,
) -> PlanarTrace:
    """Planar-array data ``G(u1, u2, t)`` of the 3D wave with even initial data ``H(u, |v|)``.

    The ball phantom must sit in ``z > 0``; the mirror image doubles the
    pressure on the plane ``z = 0``.
    """
    ph.check_above_line(phantom)
    u1 = u0[0] + du[0] * np.arange(n_u[0])
    u2 = u0[1] + du[1] * np.arange(n_u[1])
    pts = np.stack(np.meshgrid(u1, u2, [0.0], indexing="ij"), axis=-1)[:, :, 0, :]
    t = dt * np.arange(n_t)
    values = 2.0 * ball_pressure(phantom, pts[:, :, None, :], t[None, None, :])
    return PlanarTrace(values, u0, du, dt, {"mirror": True})


# -- measurement corruption --------------------------------------------------


def add_uniform_noise(trace: WaveTrace, level: float, seed: int) -> WaveTrace:
    """Add i.i.d. noise uniform on ``[-e, e]``, ``e = level * max|values|``.

    Draws come from numpy's Philox4x64 counter-based generator seeded with
    ``seed``, so results are reproducible across platforms.
    """
    if level < 0:
        raise ValueError("noise level must be non-negative")
    e = level * float(np.max(np.abs(trace.values)))
    rng = np.random.Generator(np.random.Philox(seed))
    noise = rng.uniform(-e, e, size=trace.values.shape) if e > 0 else 0.0
    meta = dict(trace.meta, noise_level=float(level), noise_seed=int(seed), noise_bound=e)
    return replace(trace, values=trace.values + noise, meta=meta)


def truncate_aperture(trace: WaveTrace, u_min: float, u_max: float) -> WaveTrace:
    """Keep only detectors with ``u_min <= u <= u_max``."""
    if not u_min < u_max:
        raise ValueError("u_min must be smaller than u_max")
    tol = 1e-9 * trace.du
    keep = np.flatnonzero((trace.u >= u_min - tol) & (trace.u <= u_max + tol))
    if keep.size < 2:
        raise ValueError(f"aperture [{u_min}, {u_max}] keeps fewer than two detectors")
    meta = dict(trace.meta, aperture=(float(u_min), float(u_max)))
    return WaveTrace(trace.values[keep], float(trace.u[keep[0]]), trace.du, trace.dt, meta)
