"""2D Radon transform, filtered backprojection and the line-detector 3D pipeline.

Lines are ``{s * tau + r * tau_perp}`` with ``tau = (cos th, sin th)`` and
``tau_perp = (-sin th, cos th)``, so the offset of a point ``x`` is
``x . tau_perp``.  A rotation ``sigma = (cos phi, sin phi)`` of the detector
array points the detector lines along ``e1 = (cos phi, sin phi, 0)``; the
detector coordinate ``u`` runs along ``e2 = (-sin phi, cos phi, 0)`` and
``v`` is the height ``z``.  The data of one rotation are therefore the 2D
wave data of the slice-wise Radon transform at ``tau = e1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import forward as fw
from . import phantom as ph
from . import spectral as sp
from .grid import Grid, GridSpec


@dataclass
class Sinogram:
    """``values[i, j]`` is the line integral at angle ``thetas[i]`` and offset ``r0 + j * dr``."""

    values: np.ndarray
    thetas: np.ndarray
    r0: float
    dr: float
    z: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.thetas = np.asarray(self.thetas, dtype=float).ravel()
        if self.values.ndim != 2 or self.values.shape[0] != self.thetas.size:
            raise ValueError("values must have shape (n_theta, n_r)")
        if self.thetas.size < 1:
            raise ValueError("need at least one angle")
        if not self.dr > 0:
            raise ValueError("dr must be positive")
        n_r = self.values.shape[1]
        if abs(self.r0 + 0.5 * (n_r - 1) * self.dr) > 1e-9 * self.dr * max(n_r, 1):
            raise ValueError("offsets must be symmetric about 0")
        self.r0 = float(self.r0)
        self.dr = float(self.dr)

    @property
    def n_theta(self) -> int:
        return self.values.shape[0]

    @property
    def n_r(self) -> int:
        return self.values.shape[1]

    @property
    def r(self) -> np.ndarray:
        return self.r0 + self.dr * np.arange(self.n_r)


def uniform_angles(n: int, full: bool = False) -> np.ndarray:
    """``n`` equispaced angles over ``[0, pi)`` (or ``[0, 2 pi)``)."""
    if n < 1:
        raise ValueError("need at least one angle")
    return (2.0 if full else 1.0) * np.pi * np.arange(n) / n


def symmetric_offsets(n: int, dr: float) -> np.ndarray:
    return dr * (np.arange(n) - 0.5 * (n - 1))


def _offsets_for(spec: GridSpec, dr: float | None = None) -> np.ndarray:
    """Symmetric offsets covering every node of a 2D grid (rotation about the origin)."""
    lo = np.asarray(spec.origin[:2])
    hi = lo + np.asarray(spec.spacing[:2]) * (np.asarray(spec.shape[:2]) - 1)
    reach = max(np.hypot(x, y) for x in (lo[0], hi[0]) for y in (lo[1], hi[1]))
    dr = float(min(spec.spacing[:2])) if dr is None else float(dr)
    n = 2 * int(np.ceil(reach / dr)) + 3
    return symmetric_offsets(n, dr)


def radon_grid(image: Grid, n_theta: int | np.ndarray, offsets=None, step: float | None = None) -> Sinogram:
    """Line integrals of a sampled image by bilinear ray marching.

    ``n_theta`` is a count (uniform over ``[0, pi)``) or an explicit angle
    array.  Offsets default to a symmetric set covering the image with the
    finer grid spacing.  The marching step is at most half the finer
    spacing.
    """
    if image.ndim != 2:
        raise ValueError("radon_grid needs a 2D image")
    thetas = uniform_angles(int(n_theta)) if np.ndim(n_theta) == 0 else np.asarray(n_theta, float)
    r = _offsets_for(image.spec) if offsets is None else np.asarray(offsets, dtype=float)
    if r.size > 1:
        dr = float(r[1] - r[0])
    else:
        dr = float(min(image.spacing))
    h_max = 0.5 * min(image.spacing)
    h = h_max if step is None else min(float(step), h_max)
    lo = np.asarray(image.origin)
    hi = lo + np.asarray(image.spacing) * (np.asarray(image.values.shape) - 1)
    reach = max(np.hypot(x, y) for x in (lo[0], hi[0]) for y in (lo[1], hi[1]))
    n_s = int(np.ceil(2 * reach / h)) + 1
    s = np.linspace(-reach, reach, n_s)
    ds = s[1] - s[0] if n_s > 1 else 0.0
    out = np.zeros((thetas.size, r.size))
    for i, th in enumerate(thetas):
        tau = np.array([np.cos(th), np.sin(th)])
        perp = np.array([-tau[1], tau[0]])
        pts = s[None, :, None] * tau + r[:, None, None] * perp
        out[i] = image.sample(pts).sum(axis=1) * ds
    return Sinogram(out, thetas, float(r[0]), dr, meta={"step": ds})


def ramp_filter(n_r: int, dr: float, apodize: bool = False) -> np.ndarray:
    """Frequency response (length ``n_fft``) of the band-limited ramp for
    offsets sampled at ``dr``, built from the spatial Ram-Lak kernel."""
    n_fft = int(2 ** np.ceil(np.log2(2 * n_r)))
    k = np.fft.fftfreq(n_fft) * n_fft
    h = np.zeros(n_fft)
    h[0] = 1.0 / (4.0 * dr**2)
    odd = (k.astype(int) % 2) == 1
    h[odd] = -1.0 / (np.pi * k[odd] * dr) ** 2
    resp = np.real(np.fft.fft(h)) * dr
    if apodize:
        resp *= np.cos(np.pi * np.fft.fftfreq(n_fft))
    return resp


def _filter_rows(values: np.ndarray, dr: float, apodize: bool) -> np.ndarray:
    n_r = values.shape[-1]
    resp = ramp_filter(n_r, dr, apodize)
    spec = np.fft.fft(values, n=resp.size, axis=-1) * resp
    return np.real(np.fft.ifft(spec, axis=-1))[..., :n_r]


def _backproject(q: np.ndarray, thetas: np.ndarray, r0: float, dr: float, points: np.ndarray) -> np.ndarray:
    """``sum_i q[..., i, r(x . tau_perp_i)]`` with linear interpolation in ``r``;
    ``q`` has shape ``(..., n_theta, n_r)``, points ``(P, 2)``."""
    lead = q.shape[:-2]
    n_r = q.shape[-1]
    out = np.zeros(lead + (points.shape[0],))
    for i, th in enumerate(thetas):
        pos = (points[:, 0] * -np.sin(th) + points[:, 1] * np.cos(th) - r0) / dr
        j0 = np.floor(pos).astype(np.int64)
        f = pos - j0
        ok = (j0 >= 0) & (j0 < n_r - 1)
        j0 = np.clip(j0, 0, n_r - 2)
        row = q[..., i, :]
        val = row[..., j0] * (1.0 - f) + row[..., j0 + 1] * f
        out += np.where(ok, val, 0.0)
    return out


def fbp_inverse(sino: Sinogram, grid_spec: GridSpec, apodize: bool = False) -> Grid:
    """Filtered backprojection onto a 2D grid (Ram-Lak ramp, optional cosine window)."""
    if grid_spec.ndim != 2:
        raise ValueError("fbp_inverse needs a 2D grid")
    q = _filter_rows(sino.values, sino.dr, apodize)
    pts = grid_spec.nodes().reshape(-1, 2)
    vals = _backproject(q, sino.thetas, sino.r0, sino.dr, pts) * (np.pi / sino.n_theta)
    meta = {"n_theta": sino.n_theta, "apodize": bool(apodize)}
    if sino.z is not None:
        meta["z"] = sino.z
    return Grid(vals.reshape(grid_spec.shape), grid_spec.origin, grid_spec.spacing, meta)


# -- 3D pipeline ------------------------------------------------------------


@dataclass
class Pipeline3DData:
    """Traces of all rotations ``sigmas`` (angles ``phi``), one per rotation."""

    traces: list
    sigmas: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.sigmas = np.asarray(self.sigmas, dtype=float).ravel()
        if len(self.traces) < 1 or len(self.traces) != self.sigmas.size:
            raise ValueError("need one trace per rotation and at least one rotation")
        ref = self.traces[0].spec
        for tr in self.traces[1:]:
            if tr.spec != ref:
                raise ValueError("all traces must share the same sampling")

    @property
    def spec(self) -> fw.TraceSpec:
        return self.traces[0].spec

    def stack(self) -> np.ndarray:
        return np.stack([tr.values for tr in self.traces])


def projected_ball_mean(d, r, radius: float, amplitude: float = 1.0) -> np.ndarray:
    """Circular mean of ``2 a sqrt(R^2 - rho^2)`` (projection of a ball) over the
    circle of radius ``r`` whose center is ``d`` away from the profile center.

    Closed form through complete elliptic integrals (parameter convention of
    ``scipy.special.ellipk``).
    """
    d, r = np.broadcast_arrays(np.abs(np.asarray(d, float)), np.abs(np.asarray(r, float)))
    R = float(radius)
    out = np.zeros(d.shape)
    gap = R**2 - (d - r) ** 2
    inside = d + r <= R
    cross = ~inside & (gap > 0)
    if np.any(inside):
        g = gap[inside]
        m = np.divide(4.0 * d[inside] * r[inside], g, out=np.zeros_like(g), where=g > 0)
        out[inside] = 2.0 * np.sqrt(g) * special.ellipe(np.clip(m, 0.0, 1.0))
    if np.any(cross):
        dr = d[cross] * r[cross]
        k2 = np.clip(gap[cross] / (4.0 * dr), 0.0, 1.0)
        out[cross] = 4.0 * np.sqrt(dr) * (special.ellipe(k2) - (1.0 - k2) * special.ellipk(k2))
    return (2.0 * amplitude / np.pi) * out


def projected_phantom(phantom: ph.Phantom, phi: float) -> list[tuple[float, float, float, float]]:
    """Per ball ``(u_c, z_c, R, a)`` of the projection along ``e1(phi)``."""
    e2 = np.array([-np.sin(phi), np.cos(phi)])
    out = []
    for b in phantom.primitives:
        c = np.asarray(b.center, float)
        out.append((float(c[:2] @ e2), float(c[2]), b.radius, b.amplitude))
    return out


def _projection_profiles(phantom: ph.Phantom, phi: float, u: np.ndarray, r: np.ndarray) -> np.ndarray:
    phi_vals = np.zeros((u.size, r.size))
    for uc, zc, R, a in projected_phantom(phantom, phi):
        d = np.hypot(u - uc, zc)[:, None]
        phi_vals += projected_ball_mean(d, r[None, :], R, a)
    return phi_vals


def _check_balls(phantom: ph.Phantom) -> None:
    if phantom.dimension != 3:
        raise ValueError("the 3D pipeline needs a ball phantom")
    for b in phantom.primitives:
        if not isinstance(b, ph.Ball3D):
            raise TypeError(f"unsupported primitive {type(b).__name__}")
        if b.center[2] - b.radius <= 0:
            raise ValueError("balls must lie strictly above the detector plane z = 0")


def forward_3d(phantom: ph.Phantom, sigmas, spec: fw.TraceSpec, oversample: int = 4) -> Pipeline3DData:
    """Physical line-detector data for every rotation angle in ``sigmas``.

    Each trace is the 2D wave data of the projected phantom, whose circular
    means are evaluated in closed form on a radial grid ``oversample`` times
    finer than the time grid.
    """
    _check_balls(phantom)
    sigmas = np.asarray(sigmas, dtype=float).ravel()
    o = int(oversample)
    r = (spec.dt / o) * np.arange((spec.n_t - 1) * o + 1)
    traces = []
    for phi in sigmas:
        prof = _projection_profiles(phantom, float(phi), spec.u, r)
        traces.append(fw.trace_from_profiles(prof, spec, o, {"mirror": False, "sigma": float(phi)}))
    return Pipeline3DData(traces, sigmas, {"oversample": o})


def reconstruct_3d(
    data: Pipeline3DData,
    volume_spec: GridSpec,
    pad: float = 2.0,
    interp: str = "bilinear",
    apodize: bool = False,
    weight_first: bool = True,
) -> Grid:
    """Volume from line-detector data: 2D wave inversion per rotation, then
    slice-wise filtered backprojection.

    The traces are physical (no mirror image), hence the factor 2 on the
    2D reconstructions.  The rotation angles must be uniform over ``[0, pi)``
    or ``[0, 2 pi)``.
    """
    if volume_spec.ndim != 3:
        raise ValueError("volume_spec must be 3D")
    dr = float(min(volume_spec.spacing[:2]))
    r = _offsets_for(volume_spec, dr)
    z = volume_spec.axes()[2]
    dz = volume_spec.spacing[2]
    plane = GridSpec((r.size, z.size), (float(r[0]), float(z[0])), (dr, dz))
    slabs = np.empty((data.sigmas.size, r.size, z.size))
    for i, tr in enumerate(data.traces):
        slabs[i] = 2.0 * sp.reconstruct(tr, plane, pad=pad, interp=interp, weight_first=weight_first).values
    q = _filter_rows(np.moveaxis(slabs, 2, 0), dr, apodize)  # (n_z, n_sigma, n_r)
    xy = GridSpec(volume_spec.shape[:2], volume_spec.origin[:2], volume_spec.spacing[:2])
    pts = xy.nodes().reshape(-1, 2)
    vals = _backproject(q, data.sigmas, float(r[0]), dr, pts) * (np.pi / data.sigmas.size)
    if data.sigmas.max() >= np.pi:
        vals *= 0.5  # each line seen twice over the full circle
    vol = np.moveaxis(vals.reshape((z.size,) + volume_spec.shape[:2]), 0, 2)
    return Grid(vol, volume_spec.origin, volume_spec.spacing, {"n_sigma": int(data.sigmas.size)})


def _line_pressure(phantom: ph.Phantom, phi: float, y: np.ndarray, t: float, n_line: int) -> float:
    e1 = np.array([np.cos(phi), np.sin(phi), 0.0])
    e2 = np.array([-np.sin(phi), np.cos(phi), 0.0])
    base = y[0] * e2 + np.array([0.0, 0.0, y[1]])
    total = 0.0
    for b in phantom.primitives:
        c = np.asarray(b.center, float)
        s_c = float((c - base) @ e1)
        perp2 = float(np.sum((c - base - s_c * e1) ** 2))
        half = (t + b.radius) ** 2 - perp2
        if half <= 0:
            continue
        half = np.sqrt(half)
        h = 2.0 * half / n_line
        s = s_c - half + h * (np.arange(n_line) + 0.5)
        pts = base + s[:, None] * e1
        single = ph.Phantom((b,), 3)
        total += float(fw.ball_pressure(single, pts, t).sum() * h)
    return total


def _projected_trace_value(phantom: ph.Phantom, phi: float, y: np.ndarray, t: float, n_radial: int) -> float:
    if t <= 0:
        return 0.0
    r = np.linspace(0.0, t, n_radial + 1)
    prof = np.zeros_like(r)
    for uc, zc, R, a in projected_phantom(phantom, phi):
        prof += projected_ball_mean(np.hypot(y[0] - uc, y[1] - zc), r, R, a)
    s = np.arcsin(np.clip(r / t, 0.0, 1.0))
    return float((t / (r[1] - r[0])) * np.sum(np.diff(prof) * np.diff(s)))


def decomposition_check(
    phantom: ph.Phantom,
    sigma: float,
    samples,
    n_line: int = 10_000,
    n_radial: int = 20_000,
) -> dict:
    """Compare line integrals of the 3D pressure with the 2D wave solution of
    the projected phantom at samples ``(y1, y2, t)``.

    Deviations are relative to the largest reference magnitude.
    """
    if phantom.dimension != 3:
        raise ValueError("decomposition_check needs a 3D phantom")
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    lhs = np.array([_line_pressure(phantom, sigma, s[:2], s[2], n_line) for s in samples])
    rhs = np.array([_projected_trace_value(phantom, sigma, s[:2], s[2], n_radial) for s in samples])
    dev = np.abs(lhs - rhs)
    scale = float(np.max(np.abs(rhs))) if rhs.size else 0.0
    if scale > 0:
        max_rel, rms_rel = float(dev.max() / scale), float(np.sqrt(np.mean(dev**2)) / scale)
    else:
        max_rel = rms_rel = 0.0 if not np.any(dev) else float("inf")
    return {
        "line": lhs,
        "projected": rhs,
        "max_abs": float(dev.max()) if dev.size else 0.0,
        "max_rel": max_rel,
        "rms_rel": rms_rel,
        "scale": scale,
        "n_line": int(n_line),
        "n_radial": int(n_radial),
    }
