"""Command-line front end (``tatline <command> ...``).

Exit codes: 0 success, 2 usage, 3 validation, 4 I/O, 5 numerical invariant
violated (e.g. a reconstruction whose imaginary residue is too large).
Options given on the command line override values from ``--config``.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from . import experiments as ex
from . import forward as fw
from . import io
from . import metrics as mt
from . import phantom as ph
from . import radon as rd
from . import spectral as sp
from .grid import GridSpec

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4, 5


class NumericalError(RuntimeError):
    pass


def _add_grid(p, dim=2):
    n = "+" if dim is None else dim
    p.add_argument("--lower", type=float, nargs=n, metavar="X", help="first grid node")
    p.add_argument("--upper", type=float, nargs=n, metavar="X", help="last grid node")
    p.add_argument("--shape", type=int, nargs=n, metavar="N", help="nodes per axis")


def _add_trace(p):
    p.add_argument("--u-min", type=float)
    p.add_argument("--u-max", type=float)
    p.add_argument("--n-u", type=int)
    p.add_argument("--t-max", type=float)
    p.add_argument("--n-t", type=int)


def _add_recon(p):
    p.add_argument("--pad", type=float, help="zero-padding factor for u and t (default 2)")
    p.add_argument("--interp", choices=("bilinear", "cubic"))
    p.add_argument("--taper", action="store_true", default=None, help="cosine taper on the last 10%% of t")
    p.add_argument(
        "--interp-first",
        action="store_true",
        help="interpolate Gbar before weighting (default: interpolate the weighted spectrum)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tatline", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="key = value config file with sections")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="phantom utilities")
    psub = p.add_subparsers(dest="action", required=True)
    r = psub.add_parser("rasterize", help="sample a phantom file on a grid")
    r.add_argument("--phantom")
    _add_grid(r, dim=None)
    r.add_argument("--supersample", type=int, default=4)
    r.add_argument("--out", required=True)
    r.add_argument("--pgm")
    r.add_argument("--csv")

    p = sub.add_parser("simulate", help="line-detector trace of a 2D phantom")
    p.add_argument("--phantom")
    _add_trace(p)
    p.add_argument("--physical", action="store_true", help="no mirror image (trace of the phantom alone)")
    p.add_argument("--oversample", type=int, default=4)
    p.add_argument("--out", required=True)
    p.add_argument("--pgm")
    p.add_argument("--csv")

    p = sub.add_parser("noise", help="add uniform noise relative to the trace maximum")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--level", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)

    p = sub.add_parser("truncate", help="keep detectors inside [u_min, u_max]")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--u-min", type=float, required=True)
    p.add_argument("--u-max", type=float, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("reconstruct", help="Fourier reconstruction from a trace")
    p.add_argument("--in", dest="inp", required=True)
    _add_grid(p)
    _add_recon(p)
    p.add_argument("--out", required=True)
    p.add_argument("--pgm")
    p.add_argument("--spectrum", help="dump Gbar as WLF1")
    p.add_argument("--reference", help="WLV1 reference for metrics")
    p.add_argument("--metrics", help="write metrics here (default: stdout)")
    p.add_argument("--dilate", type=int, default=3)

    p = sub.add_parser("radon", help="sinogram of a WLV1 image")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--n-theta", type=int, default=180)
    p.add_argument("--out", required=True)

    p = sub.add_parser("fbp", help="filtered backprojection of a WLS1 sinogram")
    p.add_argument("--in", dest="inp", required=True)
    _add_grid(p)
    p.add_argument("--apodize", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--pgm")

    p = sub.add_parser("pipeline3d", help="3D line-detector data of balls and reconstruction")
    p.add_argument("--phantom")
    _add_trace(p)
    p.add_argument("--n-sigma", type=int, default=180)
    _add_grid(p, dim=3)
    p.add_argument("--out", required=True)

    p = sub.add_parser("visibility", help="visibility map of an aperture")
    p.add_argument("--aperture", type=float, nargs=2, required=True, metavar=("U_MIN", "U_MAX"))
    _add_grid(p)
    p.add_argument("--out", required=True)
    p.add_argument("--pgm")

    p = sub.add_parser("metrics", help="compare two WLV1 grids")
    p.add_argument("reconstruction")
    p.add_argument("reference")
    p.add_argument("--dilate", type=int, default=None, help="also report on the dilated support of the reference")

    p = sub.add_parser("experiment", help="run a scripted experiment")
    p.add_argument("name")
    p.add_argument("--out", default=None, help="output directory (default: out/<name>)")
    return parser


# -- helpers -----------------------------------------------------------------------


def _config(args) -> io.ExperimentConfig:
    cfg = io.read_config(args.config) if args.config else io.ExperimentConfig()
    overrides = {
        "phantom": getattr(args, "phantom", None),
        "u_min": getattr(args, "u_min", None),
        "u_max": getattr(args, "u_max", None),
        "n_u": getattr(args, "n_u", None),
        "t_max": getattr(args, "t_max", None),
        "n_t": getattr(args, "n_t", None),
        "noise_level": getattr(args, "level", None),
        "seed": getattr(args, "seed", None),
        "pad": getattr(args, "pad", None),
        "interp": getattr(args, "interp", None),
        "taper": getattr(args, "taper", None),
    }
    for key, val in overrides.items():
        if val is not None:
            setattr(cfg, key, val)
    for key, attr in (("lower", "grid_lower"), ("upper", "grid_upper"), ("shape", "grid_shape")):
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg, attr, tuple(val))
    return cfg.validate()


def _grid(cfg: io.ExperimentConfig, dim: int = 2) -> GridSpec:
    if len(cfg.grid_lower) != dim or len(cfg.grid_upper) != dim or len(cfg.grid_shape) != dim:
        raise ValueError(f"grid bounds and shape need {dim} entries")
    return cfg.grid_spec()


def _need_phantom(cfg) -> ph.Phantom:
    if cfg.phantom is None:
        raise ValueError("no phantom file given (--phantom or [phantom] file)")
    return io.read_phantom(cfg.phantom)


def _trace_spec(cfg) -> fw.TraceSpec:
    return fw.TraceSpec.from_window(cfg.u_min, cfg.u_max, cfg.n_u, cfg.t_max, cfg.n_t)


def _emit(report: dict, path=None) -> None:
    text = io.format_report(report)
    if path:
        io.atomic_write(path, text)
    else:
        sys.stdout.write(text)


# -- commands ----------------------------------------------------------------------


def cmd_rasterize(args):
    cfg = io.read_config(args.config) if args.config else io.ExperimentConfig()
    phantom = io.read_phantom(args.phantom or cfg.phantom) if (args.phantom or cfg.phantom) else None
    if phantom is None:
        raise ValueError("no phantom file given")
    lower = args.lower or cfg.grid_lower
    upper = args.upper or cfg.grid_upper
    shape = args.shape or cfg.grid_shape
    spec = GridSpec.from_bounds(lower, upper, shape)
    if spec.ndim != phantom.dimension:
        raise ValueError(f"grid is {spec.ndim}D but the phantom is {phantom.dimension}D")
    grid = ph.rasterize(phantom, spec, supersample=args.supersample)
    io.write_grid(args.out, grid)
    if args.pgm:
        io.write_pgm(args.pgm, grid.values if grid.ndim == 2 else grid.values[:, :, grid.values.shape[2] // 2])
    if args.csv:
        io.write_csv(args.csv, grid)


def cmd_simulate(args):
    cfg = _config(args)
    phantom = _need_phantom(cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        trace = fw.simulate_trace(phantom, _trace_spec(cfg), mirror=not args.physical, oversample=args.oversample)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    io.write_trace(args.out, trace)
    if args.pgm:
        io.write_pgm(args.pgm, trace.values)
    if args.csv:
        io.write_csv(args.csv, trace)


def cmd_noise(args):
    cfg = _config(args)
    trace = io.read_trace(args.inp)
    io.write_trace(args.out, fw.add_uniform_noise(trace, cfg.noise_level, cfg.seed))


def cmd_truncate(args):
    trace = io.read_trace(args.inp)
    io.write_trace(args.out, fw.truncate_aperture(trace, args.u_min, args.u_max))


def _check_symmetry(grid):
    if not grid.meta.get("symmetry_ok", True):
        raise NumericalError(f"imaginary residue {grid.meta.get('imag_residue'):.3g} exceeds tolerance")


def cmd_reconstruct(args):
    cfg = _config(args)
    trace = io.read_trace(args.inp)
    grid_spec = _grid(cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sp.SymmetryWarning)
        spec = sp.trace_spectrum(trace, pad=cfg.pad, taper=cfg.taper)
        if args.spectrum:
            io.write_spectrum(args.spectrum, spec)
        h = sp.apply_dispersion(spec, interp=cfg.interp, weight_first=not args.interp_first)
        img = sp.inverse_cosine_image(h)
    out = img.resample(grid_spec)
    out.meta = img.meta
    _check_symmetry(img)
    io.write_grid(args.out, out)
    if args.pgm:
        io.write_pgm(args.pgm, out.values)
    report = {"imag_residue": float(img.meta.get("imag_residue", 0.0))}
    if args.reference:
        ref = io.read_grid(args.reference)
        if ref.values.shape != out.values.shape:
            raise ValueError("reference grid does not match the reconstruction grid")
        report.update(mt.report(out, ref, {"support": mt.support_mask(ref, args.dilate)}))
    _emit(report, args.metrics)


def cmd_radon(args):
    img = io.read_grid(args.inp)
    io.write_sinogram(args.out, rd.radon_grid(img, args.n_theta))


def cmd_fbp(args):
    cfg = _config(args)
    sino = io.read_sinogram(args.inp)
    out = rd.fbp_inverse(sino, _grid(cfg), apodize=args.apodize)
    io.write_grid(args.out, out)
    if args.pgm:
        io.write_pgm(args.pgm, out.values)


def cmd_pipeline3d(args):
    cfg = _config(args)
    balls = _need_phantom(cfg)
    data = rd.forward_3d(balls, rd.uniform_angles(args.n_sigma), _trace_spec(cfg))
    vol = rd.reconstruct_3d(data, _grid(cfg, 3), pad=cfg.pad, interp=cfg.interp)
    io.write_grid(args.out, vol)


def cmd_visibility(args):
    cfg = _config(args)
    vis = sp.visibility_map(tuple(args.aperture), _grid(cfg))
    io.write_grid(args.out, vis)
    if args.pgm:
        io.write_pgm(args.pgm, vis.values)


def cmd_metrics(args):
    a, b = io.read_grid(args.reconstruction), io.read_grid(args.reference)
    if a.values.shape != b.values.shape:
        raise ValueError(f"grid shapes differ: {a.values.shape} vs {b.values.shape}")
    masks = {"support": mt.support_mask(b, args.dilate)} if args.dilate is not None else None
    _emit(mt.report(a, b, masks))


def cmd_experiment(args):
    out = args.out or str(Path("out") / args.name)
    report = ex.run(args.name, out)
    _emit({k: v for k, v in report.items() if np.isscalar(v)})


COMMANDS = {
    "simulate": cmd_simulate,
    "noise": cmd_noise,
    "truncate": cmd_truncate,
    "reconstruct": cmd_reconstruct,
    "radon": cmd_radon,
    "fbp": cmd_fbp,
    "pipeline3d": cmd_pipeline3d,
    "visibility": cmd_visibility,
    "metrics": cmd_metrics,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    if args.command == "experiment" and args.name not in ex.NAMES:
        parser.print_usage(sys.stderr)
        print(f"tatline: unknown experiment {args.name!r}; choose from {', '.join(ex.NAMES)}", file=sys.stderr)
        return EXIT_USAGE
    func = cmd_rasterize if args.command == "phantom" else COMMANDS[args.command]
    try:
        func(args)
    except NumericalError as exc:
        print(f"tatline: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except io.FormatError as exc:
        print(f"tatline: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"tatline: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, TypeError) as exc:
        print(f"tatline: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
