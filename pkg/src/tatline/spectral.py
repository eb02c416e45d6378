"""Fourier reconstruction of the initial data from line (or plane) data.

Pipeline, for data ``G(u, t)`` on ``v = 0``:

1. ``trace_spectrum``: ``Gbar(lam, w) = c_n int_0^K (int G e^{-i lam.u} du) cos(w t) dt``
   with ``K`` the acquisition window, an FFT in ``u`` and an even-extension
   FFT (type-I cosine transform) in ``t``.
2. ``apply_dispersion``: ``C[H](lam, k) = Gbar(lam, sqrt(k^2 + |lam|^2)) * k / sqrt(k^2 + |lam|^2)``
   by linear interpolation in ``w`` (source and target share the ``lam``
   nodes, so bilinear interpolation reduces to one dimension).
3. ``inverse_cosine_image``: inverse cosine transform in ``k`` and inverse
   FFT in ``lam``.

``c_n = 2 (2 pi)^(-(n+1)/2)`` for ``n`` detector dimensions (``1/pi`` for a
line).  The frequency axes keep numpy's FFT order: index 0 is ``lam = 0``
and ``w = 0``; ``lam_k = k * dlam`` for ``k < N/2`` and ``(k - N) * dlam``
above.  Total cost is ``O(N^2 log N)`` for ``N x N`` data.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import phantom as ph
from .forward import PlanarTrace, WaveTrace
from .grid import Grid, GridSpec


class SymmetryWarning(UserWarning):
    """Reconstructed image has a non-negligible imaginary part."""


IMAG_TOLERANCE = 1e-6


def transform_constant(n: int) -> float:
    return 2.0 * (2.0 * np.pi) ** (-(n + 1) / 2.0)


def dct1(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Unnormalized type-I cosine transform via even extension and FFT.

    ``y_k = x_0 + (-1)^k x_{M} + 2 sum_{l=1}^{M-1} x_l cos(pi k l / M)`` for
    ``M + 1`` samples: the endpoint samples are counted once, interior ones
    twice (they appear on both halves of the extension).  Applying it twice
    multiplies by ``2 M``.
    """
    x = np.moveaxis(np.asarray(x), axis, -1)
    if x.shape[-1] < 2:
        raise ValueError("need at least 2 samples")
    ext = np.concatenate([x, x[..., -2:0:-1]], axis=-1)
    if np.iscomplexobj(ext):
        y = np.fft.fft(ext, axis=-1)[..., : x.shape[-1]]
    else:
        y = np.fft.rfft(ext, axis=-1).real
    return np.moveaxis(y, -1, axis)


def _signed_index(n: int) -> np.ndarray:
    return np.fft.fftfreq(n) * n


def _as_tuple(x) -> tuple[float, ...]:
    return tuple(float(v) for v in np.atleast_1d(x))


@dataclass
class Spectrum:
    """Complex samples over ``(lam_1[, lam_2], w)``; the last axis is ``w = m * domega``."""

    values: np.ndarray
    dlam: tuple[float, ...]
    domega: float
    u0: tuple[float, ...] = (0.0,)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        self.dlam = _as_tuple(self.dlam)
        self.u0 = _as_tuple(self.u0)
        if self.values.ndim != len(self.dlam) + 1:
            raise ValueError("values must have one axis per lam component plus the w axis")
        if len(self.u0) != len(self.dlam):
            raise ValueError("u0 and dlam must have the same length")
        if not (self.domega > 0 and all(d > 0 for d in self.dlam)):
            raise ValueError("frequency steps must be positive")

    @property
    def n(self) -> int:
        return len(self.dlam)

    def lam_axes(self) -> list[np.ndarray]:
        return [d * _signed_index(m) for d, m in zip(self.dlam, self.values.shape[:-1])]

    @property
    def lam(self) -> np.ndarray:
        """``lam`` axis for one detector dimension."""
        return self.lam_axes()[0]

    def lam_norm(self) -> np.ndarray:
        """``|lam|`` broadcast over the ``lam`` axes."""
        grids = np.meshgrid(*self.lam_axes(), indexing="ij")
        return np.sqrt(sum(g**2 for g in grids))

    @property
    def omega(self) -> np.ndarray:
        return self.domega * np.arange(self.values.shape[-1])


def _taper(n_t: int, fraction: float = 0.1) -> np.ndarray:
    w = np.ones(n_t)
    m = max(int(round(fraction * n_t)), 1)
    x = np.arange(1, m + 1) / m
    w[n_t - m :] = 0.5 * (1.0 + np.cos(np.pi * x))
    return w


def _spectrum_kernel(values, u0, du, dt, pad: float, taper: bool) -> Spectrum:
    values = np.asarray(values, dtype=float)
    n = values.ndim - 1
    n_t = values.shape[-1]
    if taper:
        values = values * _taper(n_t)
    n_pad = [int(np.ceil(pad * m)) for m in values.shape[:-1]]
    m_t = int(np.ceil(pad * n_t))
    padded = np.zeros(n_pad + [m_t + 1])
    padded[tuple(slice(0, m) for m in values.shape)] = values
    cos_part = dct1(padded, axis=-1) * (dt / 2.0)
    spec = np.fft.fftn(cos_part, axes=tuple(range(n)))
    dlam = tuple(2.0 * np.pi / (m * d) for m, d in zip(n_pad, du))
    phase = np.ones(n_pad)
    for axis, (m, d, o) in enumerate(zip(n_pad, dlam, u0)):
        shape = [1] * n
        shape[axis] = m
        phase = phase * np.exp(-1j * d * _signed_index(m) * o).reshape(shape)
    spec *= (phase * np.prod(du))[..., None] * transform_constant(n)
    meta = {"pad": pad, "taper": bool(taper), "du": tuple(du), "dt": dt, "data_shape": values.shape}
    return Spectrum(spec, dlam, np.pi / (m_t * dt), tuple(u0), meta)


def trace_spectrum(trace: WaveTrace, pad: float = 2.0, taper: bool = False) -> Spectrum:
    """Discrete ``Gbar`` on ``(lam, w >= 0)``; the integral in ``t`` stops at the
    acquisition window, the data are zero-padded by ``pad`` in both variables."""
    if min(trace.values.shape) < 8:
        raise ValueError("trace_spectrum needs at least 8 samples per axis")
    if pad < 1:
        raise ValueError("pad must be >= 1")
    return _spectrum_kernel(trace.values, (trace.u0,), (trace.du,), trace.dt, pad, taper)


def forward_cosine_image(image: Grid, pad: float = 1.0) -> Spectrum:
    """``C[H](lam, k)`` of an image sampled on ``(u..., v >= 0)`` with ``v`` starting at 0.

    Same discretization as ``trace_spectrum`` (``v`` plays the role of ``t``).
    """
    if abs(image.origin[-1]) > 1e-12 * image.spacing[-1]:
        raise ValueError("the v axis must start at 0")
    return _spectrum_kernel(image.values, image.origin[:-1], image.spacing[:-1], image.spacing[-1], pad, False)


def _interp_omega(src: np.ndarray, lam_abs: np.ndarray, omega_t: np.ndarray, domega: float, cubic: bool):
    """Interpolate ``src[..., j]`` (at ``j*domega``) to ``omega_t`` using only nodes
    strictly outside the cone ``w <= |lam|``; out-of-range targets give 0."""
    n_w = src.shape[-1]
    x = omega_t / domega
    j0 = np.floor(x).astype(np.int64)
    f = x - j0
    out = np.zeros(omega_t.shape, dtype=complex)
    in_range = (j0 < n_w - 1) | ((j0 == n_w - 1) & (f <= 1e-12))
    j0c = np.clip(j0, 0, n_w - 1)
    j1c = np.clip(j0 + 1, 0, n_w - 1)
    g0 = np.take_along_axis(src, j0c, axis=-1)
    g1 = np.take_along_axis(src, j1c, axis=-1)
    v0 = (j0c * domega > lam_abs) & in_range
    v1 = (j1c * domega > lam_abs) & in_range & (j0 + 1 <= n_w - 1)
    both = v0 & v1
    out[both] = (1 - f[both]) * g0[both] + f[both] * g1[both]
    only1 = v1 & ~v0
    out[only1] = g1[only1]
    only0 = v0 & ~v1
    out[only0] = g0[only0]
    if cubic:
        jm = j0 - 1
        jp = j0 + 2
        ok = both & (jm >= 0) & (jp <= n_w - 1)
        ok &= np.clip(jm, 0, None) * domega > lam_abs
        if np.any(ok):
            gm = np.take_along_axis(src, np.clip(jm, 0, n_w - 1), axis=-1)
            gp = np.take_along_axis(src, np.clip(jp, 0, n_w - 1), axis=-1)
            t = f
            # Catmull-Rom
            cub = 0.5 * (
                2 * g0
                + (-gm + g1) * t
                + (2 * gm - 5 * g0 + 4 * g1 - gp) * t**2
                + (-gm + 3 * g0 - 3 * g1 + gp) * t**3
            )
            out[ok] = cub[ok]
    return out


def dispersion_map(lam_abs: np.ndarray, kappa: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Source frequency ``sqrt(k^2 + |lam|^2)`` and weight ``k / sqrt(k^2 + |lam|^2)``
    (zero on the row ``k = 0``)."""
    lam_abs = np.asarray(lam_abs, dtype=float)[..., None]
    kappa = np.asarray(kappa, dtype=float)
    omega = np.sqrt(kappa**2 + lam_abs**2)
    with np.errstate(divide="ignore", invalid="ignore"):
        weight = np.where(kappa > 0, kappa / np.where(omega > 0, omega, 1.0), 0.0)
    return omega, weight


def apply_dispersion(
    spec: Spectrum,
    kappa: np.ndarray | None = None,
    interp: str = "bilinear",
    weight_first: bool = True,
    chunk: int = 64,
) -> Spectrum:
    """Map ``Gbar`` onto the cosine spectrum of the initial data on ``(lam, kappa)``.

    ``kappa`` must be uniform from 0 (default: the source ``w`` grid).
    Source nodes on or inside the cone ``w <= |lam|`` never enter the
    stencil; targets whose source frequency exceeds the sampled range are
    set to 0.  ``interp="cubic"`` uses a Catmull-Rom stencil where four
    valid nodes are available.

    With ``weight_first`` (default) the product ``Gbar * sqrt(w^2 - lam^2) / w``
    is interpolated; it stays bounded at the cone, whereas ``Gbar`` itself
    blows up there.  ``weight_first=False`` interpolates ``Gbar`` and then
    multiplies by the weight at the target node.
    """
    if interp not in ("bilinear", "cubic"):
        raise ValueError(f"unknown interpolation {interp!r}")
    if kappa is None:
        kappa = spec.omega
    kappa = np.asarray(kappa, dtype=float)
    if kappa.ndim != 1 or kappa.size < 2 or kappa[0] != 0.0:
        raise ValueError("kappa must be a 1D grid starting at 0")
    dk = np.diff(kappa)
    if not np.allclose(dk, dk[0], rtol=1e-9):
        raise ValueError("kappa must be uniform")
    lam_abs = spec.lam_norm()
    lead = spec.values.shape[:-1]
    out = np.zeros(lead + (kappa.size,), dtype=complex)
    src = spec.values.reshape(-1, spec.values.shape[-1])
    la = lam_abs.reshape(-1)
    res = out.reshape(-1, kappa.size)
    for start in range(0, src.shape[0], chunk):
        sl = slice(start, start + chunk)
        omega_t, weight = dispersion_map(la[sl], kappa)
        block = src[sl]
        if weight_first:
            w_src = np.sqrt(np.clip(spec.omega**2 - la[sl, None] ** 2, 0.0, None))
            w_src = np.divide(w_src, spec.omega, out=np.zeros_like(w_src), where=spec.omega > 0)
            vals = _interp_omega(block * w_src, la[sl, None], omega_t, spec.domega, interp == "cubic")
            res[sl] = np.where(kappa > 0, vals, 0.0)
        else:
            vals = _interp_omega(block, la[sl, None], omega_t, spec.domega, interp == "cubic")
            res[sl] = vals * weight
    meta = dict(spec.meta, interp=interp)
    return Spectrum(out, spec.dlam, float(dk[0]), spec.u0, meta)


def inverse_cosine_image(spec: Spectrum, grid_spec: GridSpec | None = None) -> Grid:
    """Image from its cosine spectrum over ``(lam, k = m * domega)``.

    The native grid has ``du = 2 pi / (N dlam)`` per detector axis starting
    at ``spec.u0`` and ``dv = pi / (M dk)`` with ``M + 1`` rows from ``v = 0``.
    If ``grid_spec`` is given the native image is resampled onto it
    (multilinear, zero outside).  The imaginary residue relative to the real
    part is stored in ``meta["imag_residue"]``; above ``1e-6`` a
    ``SymmetryWarning`` is issued and ``meta["symmetry_ok"]`` is False.
    """
    n = spec.n
    m_k = spec.values.shape[-1] - 1
    z = dct1(spec.values, axis=-1) * (spec.domega / 2.0)
    shape = spec.values.shape[:-1]
    phase = np.ones(shape, dtype=complex)
    for axis, (m, d, o) in enumerate(zip(shape, spec.dlam, spec.u0)):
        s = [1] * n
        s[axis] = m
        phase = phase * np.exp(1j * d * _signed_index(m) * o).reshape(s)
    z = z * phase[..., None]
    img = np.fft.ifftn(z, axes=tuple(range(n))) * (np.prod(shape) * np.prod(spec.dlam))
    img *= transform_constant(n)
    real = img.real
    norm = np.linalg.norm(real)
    resid = float(np.linalg.norm(img.imag) / norm) if norm > 0 else float(np.linalg.norm(img.imag))
    meta = {"imag_residue": resid, "symmetry_ok": resid <= IMAG_TOLERANCE}
    if not meta["symmetry_ok"]:
        warnings.warn(f"imaginary residue {resid:.2e} exceeds {IMAG_TOLERANCE:g}", SymmetryWarning, stacklevel=2)
    du = tuple(2.0 * np.pi / (m * d) for m, d in zip(shape, spec.dlam))
    dv = np.pi / (m_k * spec.domega)
    grid = Grid(real, tuple(spec.u0) + (0.0,), du + (dv,), meta)
    if grid_spec is not None:
        out = grid.resample(grid_spec)
        out.meta = meta
        return out
    return grid


def _reconstruct_kernel(values, u0, du, dt, grid_spec, pad, taper, interp, weight_first=True) -> Grid:
    values = np.asarray(values, dtype=float)
    s = _spectrum_kernel(values, u0, du, dt, pad, taper)
    h = apply_dispersion(s, interp=interp, weight_first=weight_first)
    img = inverse_cosine_image(h)
    if grid_spec is not None:
        out = img.resample(grid_spec)
        out.meta = img.meta
        return out
    # crop to the detector range and the acquisition window
    crop = tuple(slice(0, m) for m in values.shape)
    return Grid(img.values[crop], img.origin, img.spacing, img.meta)


def reconstruct(
    trace: WaveTrace,
    grid_spec: GridSpec | None = None,
    pad: float = 2.0,
    taper: bool = False,
    interp: str = "bilinear",
    weight_first: bool = True,
) -> Grid:
    """Initial data ``H(u, v)``, ``v >= 0``, from a line trace.

    Without ``grid_spec`` the image lives on the data grid: ``u`` at the
    detector positions and ``v = j * dt`` for ``j < n_t``.  See
    ``apply_dispersion`` for ``interp`` and ``weight_first``.
    """
    if trace.dt > trace.du * (1 + 1e-12):
        from .forward import SamplingWarning

        warnings.warn("dt exceeds du; expect temporal aliasing", SamplingWarning, stacklevel=2)
    return _reconstruct_kernel(
        trace.values, (trace.u0,), (trace.du,), trace.dt, grid_spec, pad, taper, interp, weight_first
    )


def reconstruct_nd(
    data: WaveTrace | PlanarTrace,
    grid_spec: GridSpec | None = None,
    n: int | None = None,
    pad: float = 2.0,
    taper: bool = False,
    interp: str = "bilinear",
    weight_first: bool = True,
) -> Grid:
    """Reconstruction from data on an ``n``-dimensional detector set (``n`` in {1, 2}).

    ``n = 1`` runs exactly the code path of ``reconstruct``.
    """
    if n is None:
        n = 1 if isinstance(data, WaveTrace) else 2
    if n not in (1, 2):
        raise ValueError(f"unsupported detector dimension n={n}")
    if n == 1:
        if not isinstance(data, WaveTrace):
            raise TypeError("n=1 needs a WaveTrace")
        return reconstruct(data, grid_spec, pad, taper, interp, weight_first)
    if not isinstance(data, PlanarTrace):
        raise TypeError("n=2 needs a PlanarTrace")
    return _reconstruct_kernel(data.values, data.u0, data.du, data.dt, grid_spec, pad, taper, interp, weight_first)


# -- analytic spectra --------------------------------------------------------


def synthesize_gbar(phantom: ph.Phantom, lam, omega) -> np.ndarray:
    """``Gbar(lam, w) = C[H](lam, sqrt(w^2 - |lam|^2)) * w / sqrt(w^2 - |lam|^2)`` for
    ``w > |lam|`` and 0 otherwise, with ``C[H]`` in closed form."""
    lam = np.asarray(lam, dtype=float)
    omega = np.asarray(omega, dtype=float)
    lam_abs = np.abs(lam) if phantom.dimension == 2 else np.linalg.norm(lam, axis=-1)
    lam_abs, omega = np.broadcast_arrays(lam_abs, omega)
    inside = omega > lam_abs
    kappa = np.sqrt(np.where(inside, omega**2 - lam_abs**2, 1.0))
    if phantom.dimension == 2:
        lam_b = np.broadcast_to(lam, lam_abs.shape)
    else:
        lam_b = np.broadcast_to(lam, lam_abs.shape + (2,))
    hbar = ph.fourier_cosine(phantom, lam_b, kappa)
    return np.where(inside, hbar * omega / kappa, 0.0)


def spectrum_blowup_probe(
    phantom: ph.Phantom,
    eps=(1e-1, 1e-2, 1e-3, 1e-4),
    lam=None,
) -> dict:
    """Growth of ``max_lam |Gbar(lam, |lam| (1 + eps))|`` as ``eps`` shrinks.

    The slope is fitted on log-log axes against ``eps (2 + eps)``, i.e.
    ``(w^2 - lam^2) / lam^2`` along the probed curve; for ``C[H]`` bounded
    away from zero near the cone it is ``-1/2``.
    """
    eps = np.sort(np.asarray(eps, dtype=float))[::-1]
    if lam is None:
        lam = np.linspace(0.01, 1.0, 100)
    lam = np.asarray(lam, dtype=float)
    peaks = []
    for e in eps:
        g = synthesize_gbar(phantom, lam, np.abs(lam) * (1.0 + e))
        peaks.append(float(np.max(np.abs(g))) if g.size else 0.0)
    peaks = np.array(peaks)
    x = eps * (2.0 + eps)
    if np.all(peaks > 0):
        slope = float(np.polyfit(np.log(x), np.log(peaks), 1)[0])
    else:
        slope = float("nan")
    growing = bool(np.all(np.diff(peaks) > 0)) if np.any(peaks > 0) else False
    return {"eps": eps.tolist(), "max_abs_gbar": peaks.tolist(), "slope": slope, "monotone_growth": growing}


# -- visibility --------------------------------------------------------------


def _visible_interval(u_p, v_p, aperture):
    a, b = aperture
    th_a = np.arctan2(v_p, u_p - a)
    th_b = np.arctan2(v_p, u_p - b)
    return th_a, th_b


def visibility_map(aperture: tuple[float, float], grid_spec: GridSpec) -> Grid:
    """Fraction of line directions through each point that meet the detector segment.

    A boundary through the point whose normal has one of these directions
    is stably recoverable.  Equals the angle the aperture subtends at the
    point divided by ``pi``; 0 for ``v <= 0``.
    """
    a, b = float(aperture[0]), float(aperture[1])
    if not a < b:
        raise ValueError("aperture must be a non-empty interval")
    u, v = grid_spec.mesh()
    with np.errstate(invalid="ignore"):
        if np.isinf(a) and np.isinf(b):
            frac = np.ones_like(u)
        else:
            th_a, th_b = _visible_interval(u, v, (a, b))
            frac = (th_b - th_a) / np.pi
    frac = np.where(v > 0, np.clip(frac, 0.0, 1.0), 0.0)
    return Grid(frac, grid_spec.origin, grid_spec.spacing)


def directional_visibility(points, normal_angles, aperture, halfwidth: float = np.deg2rad(5.0)) -> np.ndarray:
    """Fraction of normal directions in ``normal_angle +- halfwidth`` whose line
    through the point meets the aperture (1 = stably visible, 0 = invisible)."""
    pts = np.asarray(points, dtype=float)
    th = np.mod(np.asarray(normal_angles, dtype=float), np.pi)
    th_a, th_b = _visible_interval(pts[..., 0], pts[..., 1], aperture)
    lo, hi = th - halfwidth, th + halfwidth
    overlap = np.zeros(np.broadcast_shapes(th.shape, th_a.shape))
    for shift in (-np.pi, 0.0, np.pi):
        overlap += np.clip(np.minimum(hi, th_b + shift) - np.maximum(lo, th_a + shift), 0.0, None)
    return np.where(pts[..., 1] > 0, np.clip(overlap / (2 * halfwidth), 0.0, 1.0), 0.0)
