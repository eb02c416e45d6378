"""File formats: raw little-endian ``WL*1`` containers, CSV, PGM, phantom text
files and ``key = value`` experiment configs.

All binary layouts start with a 4-byte magic followed by a fixed header
(``<`` byte order, ``u32`` counts, ``f64`` reals) and row-major ``f64`` data:

* ``WLT1`` trace: n_u, n_t, u0, du, dt, values[n_u, n_t]
* ``WLS1`` sinogram: n_theta, n_r, r0, dr, z (NaN if unset), thetas[n_theta], values[n_theta, n_r]
* ``WLV1`` grid: ndim, dims[ndim], origin[ndim], spacing[ndim], values
* ``WLF1`` spectrum: n, dims[n + 1], dlam[n], domega, u0[n], values as interleaved (re, im)
"""

from __future__ import annotations

import configparser
import os
import struct
import tempfile
from dataclasses import dataclass, field
from io import StringIO
from pathlib import Path

import numpy as np

from .forward import WaveTrace
from .grid import Grid, GridSpec
from .phantom import Ball3D, Disc2D, Phantom
from .radon import Sinogram
from .spectral import Spectrum


class FormatError(ValueError):
    """Malformed or mismatched file content."""


# -- atomic writes -----------------------------------------------------------


def atomic_write(path, data: bytes | str) -> Path:
    """Write to a temporary file next to ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, (bytes, bytearray)) else "w"
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _f64(a) -> bytes:
    return np.ascontiguousarray(a, dtype="<f8").tobytes()


class _Reader:
    def __init__(self, buf: bytes, path):
        self.buf, self.pos, self.path = buf, 0, path

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.buf):
            raise FormatError(f"{self.path}: truncated header")
        out = struct.unpack_from(fmt, self.buf, self.pos)
        self.pos += size
        return out

    def array(self, count: int, shape) -> np.ndarray:
        size = 8 * count
        if self.pos + size > len(self.buf):
            raise FormatError(f"{self.path}: expected {count} values, file is truncated")
        out = np.frombuffer(self.buf, dtype="<f8", count=count, offset=self.pos).astype(float)
        self.pos += size
        return out.reshape(shape)

    def done(self):
        if self.pos != len(self.buf):
            raise FormatError(f"{self.path}: {len(self.buf) - self.pos} trailing bytes")


def _open(path, magic: bytes) -> _Reader:
    buf = Path(path).read_bytes()
    if buf[:4] != magic:
        raise FormatError(f"{path}: expected magic {magic.decode()}, found {buf[:4]!r}")
    r = _Reader(buf, path)
    r.pos = 4
    return r


# -- WLT1 ----------------------------------------------------------------------


def trace_bytes(trace: WaveTrace) -> bytes:
    head = struct.pack("<4sIIddd", b"WLT1", trace.n_u, trace.n_t, trace.u0, trace.du, trace.dt)
    return head + _f64(trace.values)


def write_trace(path, trace: WaveTrace) -> Path:
    return atomic_write(path, trace_bytes(trace))


def read_trace(path) -> WaveTrace:
    r = _open(path, b"WLT1")
    n_u, n_t, u0, du, dt = r.take("<IIddd")
    values = r.array(n_u * n_t, (n_u, n_t))
    r.done()
    return WaveTrace(values, u0, du, dt)


# -- WLS1 ----------------------------------------------------------------------


def sinogram_bytes(sino: Sinogram) -> bytes:
    z = float("nan") if sino.z is None else float(sino.z)
    head = struct.pack("<4sIIddd", b"WLS1", sino.n_theta, sino.n_r, sino.r0, sino.dr, z)
    return head + _f64(sino.thetas) + _f64(sino.values)


def write_sinogram(path, sino: Sinogram) -> Path:
    return atomic_write(path, sinogram_bytes(sino))


def read_sinogram(path) -> Sinogram:
    r = _open(path, b"WLS1")
    n_th, n_r, r0, dr, z = r.take("<IIddd")
    thetas = r.array(n_th, (n_th,))
    values = r.array(n_th * n_r, (n_th, n_r))
    r.done()
    return Sinogram(values, thetas, r0, dr, None if np.isnan(z) else z)


# -- WLV1 ----------------------------------------------------------------------


def grid_bytes(grid: Grid) -> bytes:
    nd = grid.ndim
    head = struct.pack(f"<4sI{nd}I", b"WLV1", nd, *grid.values.shape)
    return head + _f64(grid.origin) + _f64(grid.spacing) + _f64(grid.values)


def write_grid(path, grid: Grid) -> Path:
    return atomic_write(path, grid_bytes(grid))


def read_grid(path) -> Grid:
    r = _open(path, b"WLV1")
    (nd,) = r.take("<I")
    if not 1 <= nd <= 8:
        raise FormatError(f"{path}: implausible dimension count {nd}")
    dims = r.take(f"<{nd}I")
    origin = r.array(nd, (nd,))
    spacing = r.array(nd, (nd,))
    values = r.array(int(np.prod(dims)), dims)
    r.done()
    try:
        return Grid(values, tuple(origin), tuple(spacing))
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


# -- WLF1 ----------------------------------------------------------------------


def spectrum_bytes(spec: Spectrum) -> bytes:
    n = spec.n
    head = struct.pack(f"<4sI{n + 1}I", b"WLF1", n, *spec.values.shape)
    inter = np.stack([spec.values.real, spec.values.imag], axis=-1)
    return head + _f64(spec.dlam) + _f64([spec.domega]) + _f64(spec.u0) + _f64(inter)


def write_spectrum(path, spec: Spectrum) -> Path:
    return atomic_write(path, spectrum_bytes(spec))


def read_spectrum(path) -> Spectrum:
    r = _open(path, b"WLF1")
    (n,) = r.take("<I")
    if not 1 <= n <= 3:
        raise FormatError(f"{path}: implausible axis count {n}")
    dims = r.take(f"<{n + 1}I")
    dlam = r.array(n, (n,))
    (domega,) = r.array(1, (1,))
    u0 = r.array(n, (n,))
    inter = r.array(2 * int(np.prod(dims)), tuple(dims) + (2,))
    r.done()
    return Spectrum(inter[..., 0] + 1j * inter[..., 1], tuple(dlam), float(domega), tuple(u0))


# -- CSV / PGM -----------------------------------------------------------------


def trace_csv(trace: WaveTrace) -> str:
    """Long-format ``u,t,value`` rows, u-major."""
    uu, tt = np.meshgrid(trace.u, trace.t, indexing="ij")
    rows = np.column_stack([uu.ravel(), tt.ravel(), trace.values.ravel()])
    lines = ["u,t,value"] + [f"{u:.17g},{t:.17g},{v:.17g}" for u, t, v in rows]
    return "\n".join(lines) + "\n"


def grid_csv(grid: Grid) -> str:
    names = ["x", "y", "z"][: grid.ndim] if grid.ndim <= 3 else [f"x{i}" for i in range(grid.ndim)]
    nodes = grid.spec.nodes().reshape(-1, grid.ndim)
    lines = [",".join(names + ["value"])]
    for p, v in zip(nodes, grid.values.ravel()):
        lines.append(",".join(f"{c:.17g}" for c in p) + f",{v:.17g}")
    return "\n".join(lines) + "\n"


def write_csv(path, obj) -> Path:
    text = trace_csv(obj) if isinstance(obj, WaveTrace) else grid_csv(obj)
    return atomic_write(path, text)


def to_pgm(values: np.ndarray) -> bytes:
    """8-bit binary PGM of a 2D array, min-max normalized.  Rows of the image
    run along the second array axis so that ``v`` (or ``t``) points up."""
    a = np.asarray(values, dtype=float)
    if a.ndim != 2:
        raise ValueError("PGM export needs a 2D array")
    img = np.flipud(a.T)
    lo, hi = float(np.min(img)), float(np.max(img))
    scaled = np.zeros(img.shape) if hi <= lo else (img - lo) / (hi - lo)
    pix = np.round(scaled * 255).astype(np.uint8)
    h, w = pix.shape
    return f"P5\n{w} {h}\n255\n".encode() + pix.tobytes()


def write_pgm(path, values) -> Path:
    return atomic_write(path, to_pgm(values))


def read_pgm(path) -> np.ndarray:
    """Pixel rows as stored (top row first), ``uint8``."""
    buf = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while pos < len(buf) and buf[pos : pos + 1].isspace():
            pos += 1
        if buf[pos : pos + 1] == b"#":
            while pos < len(buf) and buf[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(buf) and not buf[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError(f"{path}: truncated PGM header")
        tokens.append(buf[start:pos])
    if tokens[0] != b"P5":
        raise FormatError(f"{path}: not a binary PGM")
    w, h, maxval = (int(t) for t in tokens[1:])
    if maxval > 255:
        raise FormatError(f"{path}: only 8-bit PGM is supported")
    pos += 1
    data = np.frombuffer(buf, dtype=np.uint8, count=w * h, offset=pos)
    return data.reshape(h, w)


# -- phantom text files ----------------------------------------------------------


def parse_phantom(text: str, source: str = "<phantom>") -> Phantom:
    """``disc u v r a`` / ``ball x y z r a`` lines, ``#`` comments."""
    prims, kinds = [], set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0].lower()
        want = {"disc": 4, "ball": 5}.get(kind)
        if want is None:
            raise FormatError(f"{source}:{lineno}: unknown primitive {parts[0]!r}")
        if len(parts) - 1 != want:
            raise FormatError(f"{source}:{lineno}: {kind} needs {want} numbers, got {len(parts) - 1}")
        try:
            nums = [float(p) for p in parts[1:]]
        except ValueError:
            raise FormatError(f"{source}:{lineno}: not a number in {line!r}") from None
        if not all(np.isfinite(nums)):
            raise FormatError(f"{source}:{lineno}: non-finite value")
        try:
            if kind == "disc":
                prims.append(Disc2D(tuple(nums[:2]), nums[2], nums[3]))
            else:
                prims.append(Ball3D(tuple(nums[:3]), nums[3], nums[4]))
        except ValueError as exc:
            raise FormatError(f"{source}:{lineno}: {exc}") from None
        kinds.add(kind)
        if len(kinds) > 1:
            raise FormatError(f"{source}:{lineno}: discs and balls cannot be mixed")
    dim = 3 if "ball" in kinds else 2
    return Phantom(tuple(prims), dim)


def read_phantom(path) -> Phantom:
    return parse_phantom(Path(path).read_text(), str(path))


def format_phantom(phantom: Phantom) -> str:
    lines = []
    for p in phantom.primitives:
        kind = "disc" if isinstance(p, Disc2D) else "ball"
        nums = [*p.center, p.radius, p.amplitude]
        lines.append(kind + " " + " ".join(f"{x:.17g}" for x in nums))
    return "\n".join(lines) + ("\n" if lines else "")


def write_phantom(path, phantom: Phantom) -> Path:
    return atomic_write(path, format_phantom(phantom))


# -- experiment configs ------------------------------------------------------------


@dataclass
class ExperimentConfig:
    phantom: str | None = None
    u_min: float = -100.0
    u_max: float = 100.0
    n_u: int = 512
    t_max: float = 120.0
    n_t: int = 512
    noise_level: float = 0.0
    seed: int = 0
    grid_lower: tuple[float, float] = (-10.0, 0.0)
    grid_upper: tuple[float, float] = (10.0, 20.0)
    grid_shape: tuple[int, int] = (201, 201)
    pad: float = 2.0
    interp: str = "bilinear"
    taper: bool = False
    pipeline: str = "2d"
    output: str = "out"
    extra: dict = field(default_factory=dict)

    def validate(self, check_paths: bool = True) -> "ExperimentConfig":
        if not self.u_min < self.u_max:
            raise ValueError("u_min must be smaller than u_max")
        for name in ("n_u", "n_t", "t_max", "pad"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.noise_level < 0:
            raise ValueError("noise level must be non-negative")
        if self.interp not in ("bilinear", "cubic"):
            raise ValueError(f"unknown interpolation {self.interp!r}")
        if self.pipeline not in ("2d", "3d", "nd"):
            raise ValueError(f"unknown pipeline {self.pipeline!r}")
        if any(n < 2 for n in self.grid_shape):
            raise ValueError("grid needs at least 2 nodes per axis")
        if check_paths and self.phantom is not None and not Path(self.phantom).exists():
            raise FileNotFoundError(self.phantom)
        return self

    def grid_spec(self) -> GridSpec:
        return GridSpec.from_bounds(self.grid_lower, self.grid_upper, self.grid_shape)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "extra"}


# section, key, attribute, parser
_CONFIG_KEYS = [
    ("phantom", "file", "phantom", str),
    ("trace", "u_min", "u_min", float),
    ("trace", "u_max", "u_max", float),
    ("trace", "n_u", "n_u", int),
    ("trace", "t_max", "t_max", float),
    ("trace", "n_t", "n_t", int),
    ("noise", "level", "noise_level", float),
    ("noise", "seed", "seed", int),
    ("grid", "lower", "grid_lower", lambda s: tuple(float(x) for x in s.replace(",", " ").split())),
    ("grid", "upper", "grid_upper", lambda s: tuple(float(x) for x in s.replace(",", " ").split())),
    ("grid", "shape", "grid_shape", lambda s: tuple(int(x) for x in s.replace(",", " ").split())),
    ("reconstruct", "pad", "pad", float),
    ("reconstruct", "interp", "interp", str),
    ("reconstruct", "taper", "taper", lambda s: s.strip().lower() in ("1", "true", "yes", "on")),
    ("run", "pipeline", "pipeline", str),
    ("run", "output", "output", str),
]


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise FormatError(f"{source}: {exc}") from None
    cfg = ExperimentConfig()
    known = set()
    for section, key, attr, conv in _CONFIG_KEYS:
        known.add((section, key))
        if cp.has_option(section, key):
            raw = cp.get(section, key)
            try:
                setattr(cfg, attr, conv(raw))
            except ValueError:
                raise FormatError(f"{source}: [{section}] {key} = {raw!r} is not valid") from None
    for section in cp.sections():
        for key, val in cp.items(section):
            if (section, key) not in known:
                cfg.extra[f"{section}.{key}"] = val
    return cfg


def read_config(path) -> ExperimentConfig:
    """Parse a config file; a relative phantom path is taken relative to the file."""
    cfg = parse_config(Path(path).read_text(), str(path))
    if cfg.phantom is not None and not Path(cfg.phantom).is_absolute():
        cfg.phantom = str(Path(path).parent / cfg.phantom)
    return cfg


def format_config(cfg: ExperimentConfig) -> str:
    cp = configparser.ConfigParser()
    for section, key, attr, _ in _CONFIG_KEYS:
        val = getattr(cfg, attr)
        if val is None:
            continue
        if isinstance(val, tuple):
            val = " ".join(str(v) for v in val)
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, key, str(val))
    buf = StringIO()
    cp.write(buf)
    return buf.getvalue()


def format_report(report: dict) -> str:
    """Plain-text ``key = value`` lines (sorted) for metrics and manifests."""
    lines = []
    for k in sorted(report):
        v = report[k]
        if isinstance(v, float):
            v = f"{v:.10g}"
        elif isinstance(v, (list, tuple, np.ndarray)):
            v = " ".join(f"{x:.10g}" if isinstance(x, float) else str(x) for x in np.asarray(v).ravel().tolist())
        lines.append(f"{k} = {v}")
    return "\n".join(lines) + "\n"
