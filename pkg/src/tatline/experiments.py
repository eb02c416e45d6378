"""Scripted end-to-end experiments.

Each function returns a plain ``dict`` report; with ``out_dir`` it also
writes images (PGM), raw data (``WL*1``), ``metrics.txt`` and a
``manifest.txt`` listing every parameter and library version.
"""

from __future__ import annotations

import platform
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from . import forward as fw
from . import io
from . import metrics as mt
from . import phantom as ph
from . import radon as rd
from . import spectral as sp
from .grid import Grid, GridSpec

NAMES = ("fig3", "fig4", "blowup", "decomposition", "pipeline3d")


def manifest(name: str, params: dict) -> dict:
    out = {f"param.{k}": v for k, v in params.items()}
    out.update(
        {
            "experiment": name,
            "version.tatline": __version__,
            "version.numpy": np.__version__,
            "version.scipy": scipy.__version__,
            "version.python": platform.python_version(),
        }
    )
    return out


def _write_bundle(out_dir, name: str, params: dict, report: dict, files: dict) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for fname, obj in files.items():
        path = out / fname
        if fname.endswith(".pgm"):
            io.write_pgm(path, obj)
        elif isinstance(obj, fw.WaveTrace):
            io.write_trace(path, obj)
        elif isinstance(obj, rd.Sinogram):
            io.write_sinogram(path, obj)
        elif isinstance(obj, Grid):
            io.write_grid(path, obj)
        else:
            io.atomic_write(path, obj)
    scalars = {k: v for k, v in report.items() if not isinstance(v, (dict,))}
    io.atomic_write(out / "metrics.txt", io.format_report(scalars))
    io.atomic_write(out / "manifest.txt", io.format_report(manifest(name, params)))


def _timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, 1e3 * (time.perf_counter() - t0)


# -- nine discs, full aperture ---------------------------------------------------


def fig3_params(**overrides) -> dict:
    p = {
        "u_min": -100.0,
        "u_max": 100.0,
        "n_u": 512,
        "t_max": 120.0,
        "n_t": 512,
        "noise_level": 0.05,
        "seed": 20071,
        "grid_lower": (-10.0, 0.0),
        "grid_upper": (10.0, 20.0),
        "grid_shape": (201, 201),
        "pad": 2.0,
        "interp": "bilinear",
        "dilate": 3,
    }
    p.update(overrides)
    return p


def fig3(out_dir=None, phantom: ph.Phantom | None = None, **overrides) -> dict:
    """Nine discs seen by the array ``[-100, 100]``, exact and noisy data."""
    p = fig3_params(**overrides)
    phantom = ph.nine_discs() if phantom is None else phantom
    spec = fw.TraceSpec.from_window(p["u_min"], p["u_max"], p["n_u"], p["t_max"], p["n_t"])
    grid = GridSpec.from_bounds(p["grid_lower"], p["grid_upper"], p["grid_shape"])
    ref = ph.rasterize(phantom, grid, supersample=4)
    mask = mt.support_mask(ref, dilate=p["dilate"])

    trace, t_sim = _timed(fw.simulate_trace, phantom, spec)
    rec, t_rec = _timed(sp.reconstruct, trace, grid, pad=p["pad"], interp=p["interp"])
    noisy = fw.add_uniform_noise(trace, p["noise_level"], p["seed"])
    rec_noisy = sp.reconstruct(noisy, grid, pad=p["pad"], interp=p["interp"])

    found = mt.blob_centers(rec, len(phantom), threshold=0.35)
    miss = mt.match_centers(found, phantom.arrays()[0]) if len(phantom) else np.zeros(0)
    report = {
        "rel_l2": mt.rel_l2(rec, ref, mask),
        "rel_l2_noisy": mt.rel_l2(rec_noisy, ref, mask),
        "rmse": mt.rmse(rec, ref, mask),
        "psnr": mt.psnr(rec, ref, mask),
        "center_error_max": float(np.max(miss)) if miss.size else 0.0,
        "cell": float(max(grid.spacing)),
        "imag_residue": float(rec.meta.get("imag_residue", 0.0)),
        "runtime_ms.simulate": t_sim,
        "runtime_ms.reconstruct": t_rec,
        "trace_argmax_u": float(trace.u[np.argmax(np.abs(trace.values).max(axis=1))]),
    }
    if out_dir is not None:
        files = {
            "phantom.pgm": ref.values,
            "data.pgm": trace.values,
            "recon_exact.pgm": rec.values,
            "recon_noisy.pgm": rec_noisy.values,
            "data.wlt": trace,
            "data_noisy.wlt": noisy,
            "recon_exact.wlv": rec,
            "recon_noisy.wlv": rec_noisy,
            "phantom.txt": io.format_phantom(phantom),
        }
        _write_bundle(out_dir, "fig3", p, report, files)
    return report


# -- limited aperture ----------------------------------------------------------------


def boundary_samples(phantom: ph.Phantom, n: int = 720):
    """Points on every disc boundary and their outward normal angles."""
    pts, ang = [], []
    alpha = 2 * np.pi * (np.arange(n) + 0.5) / n
    for d in phantom.primitives:
        c = np.asarray(d.center)
        pts.append(c + d.radius * np.stack([np.cos(alpha), np.sin(alpha)], axis=-1))
        ang.append(alpha)
    return np.concatenate(pts), np.concatenate(ang)


def gradient_magnitude(grid: Grid) -> Grid:
    g = np.gradient(grid.values, *grid.spacing)
    return Grid(np.sqrt(sum(x**2 for x in g)), grid.origin, grid.spacing)


def fig4_params(**overrides) -> dict:
    p = fig3_params(noise_level=0.0)
    p.update({"aperture": (-20.0, 20.0), "visible": 0.9, "invisible": 0.1})
    p.update(overrides)
    return p


def fig4(out_dir=None, phantom: ph.Phantom | None = None, **overrides) -> dict:
    """Data kept only for ``|u| <= 20``: boundaries whose normals miss the
    aperture lose their edges."""
    p = fig4_params(**overrides)
    phantom = ph.nine_discs() if phantom is None else phantom
    spec = fw.TraceSpec.from_window(p["u_min"], p["u_max"], p["n_u"], p["t_max"], p["n_t"])
    grid = GridSpec.from_bounds(p["grid_lower"], p["grid_upper"], p["grid_shape"])
    trace = fw.simulate_trace(phantom, spec)
    cut = fw.truncate_aperture(trace, *p["aperture"])
    rec, t_rec = _timed(sp.reconstruct, cut, grid, pad=p["pad"], interp=p["interp"])
    full = sp.reconstruct(trace, grid, pad=p["pad"], interp=p["interp"])
    vis = sp.visibility_map(p["aperture"], grid)

    ref = ph.rasterize(phantom, grid, supersample=4)
    pts, normals = boundary_samples(phantom)
    dvis = sp.directional_visibility(pts, normals, p["aperture"])
    grad = gradient_magnitude(rec).sample(pts)
    good, bad = dvis > p["visible"], dvis < p["invisible"]
    g_vis = float(grad[good].mean()) if good.any() else float("nan")
    g_inv = float(grad[bad].mean()) if bad.any() else float("nan")
    report = {
        "gradient_visible": g_vis,
        "gradient_invisible": g_inv,
        "gradient_ratio": g_inv / g_vis if good.any() and bad.any() else float("nan"),
        "n_visible": int(good.sum()),
        "n_invisible": int(bad.sum()),
        "n_detectors": cut.n_u,
        "rel_l2_limited": mt.rel_l2(rec, ref, mt.support_mask(ref, p["dilate"])),
        "runtime_ms.reconstruct": t_rec,
    }
    if out_dir is not None:
        overlay = rec.values / max(np.abs(rec.values).max(), 1e-300) + 0.5 * (vis.values < p["invisible"])
        files = {
            "recon_limited.pgm": rec.values,
            "recon_full.pgm": full.values,
            "visibility.pgm": vis.values,
            "overlay.pgm": overlay,
            "data_limited.wlt": cut,
            "recon_limited.wlv": rec,
            "visibility.wlv": vis,
        }
        _write_bundle(out_dir, "fig4", p, report, files)
    return report


# -- cone singularity ----------------------------------------------------------------


def blowup(out_dir=None, **overrides) -> dict:
    p = {"eps": (1e-1, 1e-2, 1e-3, 1e-4), "disc": (0.0, 10.0, 2.5, 1.0)}
    p.update(overrides)
    res = sp.spectrum_blowup_probe(ph.Phantom.discs([p["disc"]]), eps=p["eps"])
    report = {
        "slope": res["slope"],
        "monotone_growth": res["monotone_growth"],
        "eps": res["eps"],
        "max_abs_gbar": res["max_abs_gbar"],
    }
    if out_dir is not None:
        csv = "eps,max_abs_gbar\n" + "".join(f"{e:.17g},{g:.17g}\n" for e, g in zip(res["eps"], res["max_abs_gbar"]))
        _write_bundle(out_dir, "blowup", p, report, {"blowup.csv": csv})
    return report


# -- line vs projected decomposition---------------------------------------------------


def decomposition(out_dir=None, **overrides) -> dict:
    p = {"ball": (0.7, -0.4, 6.0, 2.0, 1.0), "sigma": 0.6, "n_samples": 100, "seed": 7, "n_line": 10_000}
    p.update(overrides)
    ball = ph.Phantom.balls([p["ball"]])
    rng = np.random.Generator(np.random.Philox(p["seed"]))
    y1 = rng.uniform(-10.0, 10.0, p["n_samples"])
    t = rng.uniform(2.0, 14.0, p["n_samples"])
    samples = np.column_stack([y1, np.zeros_like(y1), t])
    rep = rd.decomposition_check(ball, p["sigma"], samples, n_line=p["n_line"])
    coarse = rd.decomposition_check(ball, p["sigma"], samples, n_line=p["n_line"] // 10)
    report = {
        "max_rel": rep["max_rel"],
        "rms_rel": rep["rms_rel"],
        "max_rel_coarse": coarse["max_rel"],
        "refinement_gain": coarse["max_rel"] / rep["max_rel"] if rep["max_rel"] > 0 else float("inf"),
    }
    if out_dir is not None:
        rows = "y1,y2,t,line,projected\n" + "".join(
            f"{a:.17g},{b:.17g},{c:.17g},{d:.17g},{e:.17g}\n"
            for (a, b, c), d, e in zip(samples, rep["line"], rep["projected"])
        )
        _write_bundle(out_dir, "decomposition", p, report, {"samples.csv": rows})
    return report


# -- 3D pipeline -----------------------------------------------------------------------


def pipeline3d_params(**overrides) -> dict:
    p = {
        "balls": ((0.0, 0.0, 5.0, 2.0, 1.0),),
        "n_sigma": 180,
        "u_min": -100.0,
        "u_max": 100.0,
        "n_u": 1024,
        "t_max": 120.0,
        "n_t": 1024,
        "lower": (-3.0, -3.0, 2.0),
        "upper": (3.0, 3.0, 8.0),
        "shape": (49, 49, 49),
        "dilate": 2,
        "planar_n": 128,
        "planar_half_width": 32.0,
        "planar_n_t": 128,
        "planar_t_max": 64.0,
    }
    p.update(overrides)
    return p


def pipeline3d(out_dir=None, **overrides) -> dict:
    """Line-detector data of balls for ``n_sigma`` rotations, then the
    2D-wave / Radon reconstruction."""
    p = pipeline3d_params(**overrides)
    balls = ph.Phantom.balls(p["balls"])
    spec = fw.TraceSpec.from_window(p["u_min"], p["u_max"], p["n_u"], p["t_max"], p["n_t"])
    vol = GridSpec.from_bounds(p["lower"], p["upper"], p["shape"])
    data, t_fwd = _timed(rd.forward_3d, balls, rd.uniform_angles(p["n_sigma"]), spec)
    rec, t_rec = _timed(rd.reconstruct_3d, data, vol)
    ref = ph.rasterize(balls, vol, supersample=2)
    mask = mt.support_mask(ref, dilate=p["dilate"])
    found = mt.blob_centers(rec, len(balls), threshold=0.5)
    miss = mt.match_centers(found, balls.arrays()[0])

    # the same balls seen by a planar array, inverted directly in 3D
    n, half = p["planar_n"], p["planar_half_width"]
    du = 2.0 * half / n
    planar = fw.simulate_planar_trace(balls, (-half, -half), (du, du), (n, n), p["planar_t_max"] / p["planar_n_t"], p["planar_n_t"])
    rec_pl, t_pl = _timed(sp.reconstruct_nd, planar, vol)
    miss_pl = mt.match_centers(mt.blob_centers(rec_pl, len(balls), threshold=0.5), balls.arrays()[0])
    report = {
        "rel_l2": mt.rel_l2(rec, ref, mask),
        "center_error_max": float(np.max(miss)),
        "planar_center_error_max": float(np.max(miss_pl)),
        "planar_rel_l2": mt.rel_l2(rec_pl, ref, mask),
        "voxel": float(max(vol.spacing)),
        "runtime_ms.forward": t_fwd,
        "runtime_ms.reconstruct": t_rec,
        "runtime_ms.planar": t_pl,
    }
    if out_dir is not None:
        mid = rec.values.shape[2] // 2
        files = {"volume.wlv": rec, "volume_planar.wlv": rec_pl, "slice_xy.pgm": rec.values[:, :, mid], "slice_xz.pgm": rec.values[:, rec.values.shape[1] // 2, :]}
        _write_bundle(out_dir, "pipeline3d", p, report, files)
    return report


def run(name: str, out_dir=None, **overrides) -> dict:
    funcs = {"fig3": fig3, "fig4": fig4, "blowup": blowup, "decomposition": decomposition, "pipeline3d": pipeline3d}
    if name not in funcs:
        raise KeyError(name)
    return funcs[name](out_dir, **overrides)
