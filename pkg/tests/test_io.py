import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tatline import forward as fw
from tatline import io
from tatline import phantom as ph
from tatline import radon as rd
from tatline import spectral as sp
from tatline.grid import Grid

finite = st.floats(-1e6, 1e6, allow_nan=False)


def sample_objects():
    rng = np.random.default_rng(42)
    trace = fw.WaveTrace(rng.normal(size=(7, 5)), -3.5, 0.25, 0.125)
    sino = rd.Sinogram(rng.normal(size=(4, 9)), rd.uniform_angles(4), -2.0, 0.5, z=1.5)
    sino_noz = rd.Sinogram(rng.normal(size=(3, 5)), rd.uniform_angles(3), -1.0, 0.5)
    grid2 = Grid(rng.normal(size=(6, 4)), (-1.0, 0.0), (0.5, 0.25))
    grid3 = Grid(rng.normal(size=(3, 4, 5)), (0.0, 1.0, 2.0), (0.1, 0.2, 0.3))
    spec = sp.Spectrum(rng.normal(size=(8, 6)) + 1j * rng.normal(size=(8, 6)), 0.3, 0.2, -4.0)
    return [
        ("trace", trace, io.write_trace, io.read_trace),
        ("sino", sino, io.write_sinogram, io.read_sinogram),
        ("sino_noz", sino_noz, io.write_sinogram, io.read_sinogram),
        ("grid2", grid2, io.write_grid, io.read_grid),
        ("grid3", grid3, io.write_grid, io.read_grid),
        ("spec", spec, io.write_spectrum, io.read_spectrum),
    ]


@pytest.mark.parametrize("name,obj,writer,reader", sample_objects())
def test_binary_byte_round_trip(tmp_path, name, obj, writer, reader):
    a = tmp_path / f"{name}.bin"
    b = tmp_path / f"{name}_again.bin"
    writer(a, obj)
    back = reader(a)
    writer(b, back)
    assert a.read_bytes() == b.read_bytes()
    assert np.array_equal(back.values, obj.values)


def test_wlt1_layout(tmp_path):
    tr = fw.WaveTrace(np.arange(6.0).reshape(2, 3), 1.0, 0.5, 0.25)
    raw = io.trace_bytes(tr)
    assert raw[:4] == b"WLT1"
    assert struct.unpack_from("<IIddd", raw, 4) == (2, 3, 1.0, 0.5, 0.25)
    assert np.array_equal(np.frombuffer(raw[36:], "<f8"), np.arange(6.0))


def test_sinogram_z_none_survives(tmp_path):
    s = rd.Sinogram(np.ones((2, 3)), [0.0, 1.0], -1.0, 1.0)
    io.write_sinogram(tmp_path / "s.wls", s)
    assert io.read_sinogram(tmp_path / "s.wls").z is None


@pytest.mark.parametrize("name,obj,writer,reader", sample_objects())
def test_binary_corruption_is_rejected(tmp_path, name, obj, writer, reader):
    path = tmp_path / "f.bin"
    writer(path, obj)
    raw = path.read_bytes()
    for bad in (raw[:-8], raw + b"\0", b"XXXX" + raw[4:], raw[:10]):
        path.write_bytes(bad)
        with pytest.raises(io.FormatError):
            reader(path)


@settings(max_examples=30, deadline=None)
@given(
    arrays(np.float64, st.tuples(st.integers(2, 6), st.integers(2, 6)), elements=finite),
    finite,
    st.floats(1e-3, 10),
    st.floats(1e-3, 10),
)
def test_trace_round_trip_property(values, u0, du, dt):
    tr = fw.WaveTrace(values, u0, du, dt)
    raw = io.trace_bytes(tr)
    import tempfile
    from pathlib import Path

    with tempfile.TemporaryDirectory() as d:
        p = Path(d) / "t.wlt"
        p.write_bytes(raw)
        back = io.read_trace(p)
    assert io.trace_bytes(back) == raw


def test_atomic_write_leaves_no_temp(tmp_path):
    io.atomic_write(tmp_path / "sub" / "a.txt", "hello")
    assert (tmp_path / "sub" / "a.txt").read_text() == "hello"
    assert [p.name for p in (tmp_path / "sub").iterdir()] == ["a.txt"]


def test_csv_exports():
    tr = fw.WaveTrace(np.arange(4.0).reshape(2, 2), 0.0, 1.0, 0.5)
    lines = io.trace_csv(tr).splitlines()
    assert lines[0] == "u,t,value" and lines[1:] == ["0,0,0", "0,0.5,1", "1,0,2", "1,0.5,3"]
    g = Grid(np.array([[1.0, 2.0]]), (0.0, 0.0), (1.0, 1.0))
    assert io.grid_csv(g).splitlines() == ["x,y,value", "0,0,1", "0,1,2"]


def test_pgm_orientation_and_round_trip(tmp_path):
    a = np.zeros((4, 3))
    a[0, 2] = 1.0  # first u, last v -> top-left pixel
    io.write_pgm(tmp_path / "a.pgm", a)
    pix = io.read_pgm(tmp_path / "a.pgm")
    assert pix.shape == (3, 4)
    assert pix[0, 0] == 255 and pix.sum() == 255
    assert not io.read_pgm(io.write_pgm(tmp_path / "flat.pgm", np.ones((2, 2)))).any()
    with pytest.raises(ValueError):
        io.to_pgm(np.zeros(5))
    (tmp_path / "bad.pgm").write_bytes(b"P2\n1 1\n255\n0")
    with pytest.raises(io.FormatError):
        io.read_pgm(tmp_path / "bad.pgm")


def test_phantom_text_round_trip(tmp_path):
    text = "# nine discs\n" + "".join(f"disc {u} {v} {r} {a}\n" for u, v, r, a in ph.NINE_DISCS)
    p = io.parse_phantom(text)
    assert p == ph.nine_discs()
    io.write_phantom(tmp_path / "p.txt", p)
    assert io.read_phantom(tmp_path / "p.txt") == p
    balls = io.parse_phantom("ball 0 0 5 2 1  # centre\n\nball 1 1 4 0.5 2\n")
    assert balls.dimension == 3 and len(balls) == 2
    assert io.parse_phantom("# nothing\n") == ph.Phantom((), 2)


@pytest.mark.parametrize(
    "text,where",
    [
        ("disc 0 5 2\n", ":1:"),
        ("disc 0 5 2 1\nsquare 1 2 3 4\n", ":2:"),
        ("disc 0 5 x 1\n", ":1:"),
        ("disc 0 5 -2 1\n", ":1:"),
        ("disc 0 5 2 nan\n", ":1:"),
        ("disc 0 5 2 1\nball 0 0 5 1 1\n", ":2:"),
    ],
)
def test_phantom_text_errors(text, where):
    with pytest.raises(io.FormatError, match=where):
        io.parse_phantom(text, "p.txt")


def test_config_parse_and_round_trip(tmp_path):
    (tmp_path / "discs.txt").write_text("disc 0 10 2 1\n")
    text = """
[phantom]
file = discs.txt
[trace]
u_min = -50
n_u = 256   # detectors
[noise]
level = 0.05
seed = 9
[grid]
lower = -5, 0
upper = 5 10
shape = 51 51
[reconstruct]
interp = cubic
taper = yes
[custom]
note = hello
"""
    (tmp_path / "c.ini").write_text(text)
    cfg = io.read_config(tmp_path / "c.ini").validate()
    assert cfg.phantom == str(tmp_path / "discs.txt")
    assert cfg.u_min == -50 and cfg.n_u == 256 and cfg.u_max == 100
    assert cfg.noise_level == 0.05 and cfg.seed == 9
    assert cfg.grid_lower == (-5.0, 0.0) and cfg.grid_shape == (51, 51)
    assert cfg.interp == "cubic" and cfg.taper is True
    assert cfg.extra == {"custom.note": "hello"}
    again = io.parse_config(io.format_config(cfg))
    assert again.as_dict() == cfg.as_dict()


@pytest.mark.parametrize(
    "text",
    ["[trace]\nn_u = many\n", "no section header\n", "[grid]\nshape = 3 x\n"],
)
def test_config_errors(text):
    with pytest.raises(io.FormatError):
        io.parse_config(text)


def test_config_validation():
    with pytest.raises(ValueError):
        io.ExperimentConfig(u_min=5, u_max=1).validate()
    with pytest.raises(ValueError):
        io.ExperimentConfig(interp="spline").validate()
    with pytest.raises(FileNotFoundError):
        io.ExperimentConfig(phantom="/nonexistent/p.txt").validate()


def test_format_report():
    text = io.format_report({"b": 0.5, "a": 2, "c": [1.0, 2.5], "d": "x"})
    assert text == "a = 2\nb = 0.5\nc = 1 2.5\nd = x\n"
