import numpy as np
import pytest
from scipy import integrate

from tatline import forward as fw
from tatline import metrics as mt
from tatline import phantom as ph
from tatline import radon as rd
from tatline.grid import Grid, GridSpec


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_sinogram_validation():
    with pytest.raises(ValueError):
        rd.Sinogram(np.zeros((3, 5)), np.zeros(2), -2.0, 1.0)
    with pytest.raises(ValueError):
        rd.Sinogram(np.zeros((2, 5)), np.zeros(2), -1.0, 1.0)  # not symmetric
    s = rd.Sinogram(np.zeros((2, 5)), [0.0, 1.0], -2.0, 1.0)
    assert np.allclose(s.r, [-2, -1, 0, 1, 2])
    assert np.allclose(rd.uniform_angles(4), [0, np.pi / 4, np.pi / 2, 3 * np.pi / 4])


def test_radon_zero_and_chord():
    spec = GridSpec.from_bounds((-1, -1), (1, 1), (201, 201))
    assert not rd.radon_grid(Grid.zeros(spec), 8).values.any()
    p = ph.Phantom.discs([(0.2, -0.1, 0.5, 1.5)])
    img = ph.rasterize(p, spec, supersample=4)
    th = np.array([0.0, 0.7, 2.1])
    for t in th:
        # offset of the line through the disc centre
        off = -0.2 * np.sin(t) + (-0.1) * np.cos(t)
        s = rd.radon_grid(img, np.array([t]), offsets=np.array([-abs(off), abs(off)]))
        got = s.values[0, 1 if off > 0 else 0]
        ref = ph.radon_of_phantom(p, (np.cos(t), np.sin(t)), off)
        assert abs(ref - 2 * 0.5 * 1.5) < 1e-12
        assert abs(got / ref - 1) < 0.01


def test_radon_rotation_is_angle_shift():
    n_theta, k = 90, 15
    theta0 = k * np.pi / n_theta
    spec = GridSpec.from_bounds((-1, -1), (1, 1), (161, 161))
    discs = [(0.3, 0.1, 0.25, 1.0), (-0.2, -0.35, 0.15, 0.7)]
    c, s_ = np.cos(theta0), np.sin(theta0)
    rot = [(c * u - s_ * v, s_ * u + c * v, r, a) for u, v, r, a in discs]
    a = rd.radon_grid(ph.rasterize(ph.Phantom.discs(discs), spec, 3), n_theta)
    b = rd.radon_grid(ph.rasterize(ph.Phantom.discs(rot), spec, 3), n_theta)
    assert rel(b.values[k:], a.values[: n_theta - k]) <= 1e-2


def test_fbp_zero():
    sino = rd.Sinogram(np.zeros((16, 31)), rd.uniform_angles(16), -15.0, 1.0)
    assert not rd.fbp_inverse(sino, GridSpec.from_bounds((-5, -5), (5, 5), (11, 11))).values.any()


def test_ramp_filter_response():
    resp = rd.ramp_filter(64, 0.5)
    f = np.abs(np.fft.fftfreq(resp.size, d=0.5))
    mid = (f > 0.05) & (f < 0.6)
    # close to |f| away from dc and the band edge
    assert np.allclose(resp[mid], f[mid], rtol=0.05)
    assert np.all(rd.ramp_filter(64, 0.5, apodize=True) <= resp + 1e-15)


def test_fbp_disc():
    spec = GridSpec.from_bounds((-1, -1), (1, 1), (256, 256))
    p = ph.Phantom.discs([(0.3, -0.2, 0.5, 1.0)])
    img = ph.rasterize(p, spec, supersample=4)
    offsets = rd.symmetric_offsets(256, 2 * np.sqrt(2) / 255)
    sino = rd.radon_grid(img, 256, offsets=offsets)
    rec = rd.fbp_inverse(sino, spec)
    support = img.values > 0
    assert rel(rec.values[support], img.values[support]) <= 0.10


def test_fbp_round_trip_refines():
    errs = []
    for n in (64, 128, 256):
        spec = GridSpec.from_bounds((-1, -1), (1, 1), (n, n))
        img = ph.rasterize(ph.Phantom.discs([(0.1, 0.0, 0.5, 1.0)]), spec, supersample=4)
        sino = rd.radon_grid(img, n)
        errs.append(mt.rel_l2(rd.fbp_inverse(sino, spec), img))
    assert errs[0] > errs[1] > errs[2]


def test_projected_ball_mean_against_quadrature():
    R, a = 2.0, 1.3
    f = lambda rho: a * 2 * np.sqrt(np.clip(R**2 - rho**2, 0, None))
    for d, r in [(0.0, 1.0), (0.5, 1.0), (1.0, 0.7), (3.0, 2.0), (1.5, 3.0), (0.2, 2.5), (4.0, 1.0)]:
        g = lambda al: f(np.hypot(d + r * np.cos(al), r * np.sin(al)))
        ref = integrate.quad(g, 0, np.pi, limit=400, epsabs=1e-13)[0] / np.pi
        assert abs(rd.projected_ball_mean(d, r, R, a) - ref) < 1e-9


def test_forward_3d_checks():
    spec = fw.TraceSpec.from_window(-20, 20, 41, 30, 60)
    zero = rd.forward_3d(ph.Phantom((), 3), rd.uniform_angles(4), spec)
    assert not zero.stack().any()
    with pytest.raises((TypeError, ValueError)):
        rd.forward_3d(ph.Phantom.discs([(0, 5, 1, 1)]), [0.0], spec)
    with pytest.raises(ValueError):
        rd.forward_3d(ph.Phantom.balls([(0, 0, 1, 2, 1)]), [0.0], spec)


def test_forward_3d_symmetries():
    spec = fw.TraceSpec.from_window(-20, 20, 81, 30, 120)
    centred = rd.forward_3d(ph.Phantom.balls([(0.0, 0.0, 5.0, 2.0, 1.0)]), rd.uniform_angles(6), spec)
    st = centred.stack()
    assert np.allclose(st, st[0], rtol=0, atol=1e-12 * np.abs(st).max())
    off = ph.Phantom.balls([(1.2, -0.7, 4.0, 1.5, 1.0)])
    sig = 0.4
    data = rd.forward_3d(off, [sig, sig + np.pi], spec)
    a, b = data.traces[0].values, data.traces[1].values[::-1]
    assert rel(b, a) <= 1e-6


def test_reconstruct_3d_zero():
    spec = fw.TraceSpec.from_window(-20, 20, 32, 30, 32)
    data = rd.forward_3d(ph.Phantom((), 3), rd.uniform_angles(8), spec)
    vol = rd.reconstruct_3d(data, GridSpec.from_bounds((-1, -1, 1), (1, 1, 3), (9, 9, 9)))
    assert not vol.values.any()


def test_reconstruct_3d_two_balls_centres():
    balls = ph.Phantom.balls([(1.5, 0.0, 5.0, 1.2, 1.0), (-1.5, 1.0, 6.0, 1.0, 1.0)])
    spec = fw.TraceSpec.from_window(-60, 60, 384, 80, 384)
    vol = GridSpec.from_bounds((-3.5, -3.5, 3), (3.5, 3.5, 8), (36, 36, 26))
    rec = rd.reconstruct_3d(rd.forward_3d(balls, rd.uniform_angles(60), spec), vol)
    found = mt.blob_centers(rec, 2, threshold=0.5)
    miss = mt.match_centers(found, balls.arrays()[0])
    assert np.all(miss <= max(vol.spacing))


def test_decomposition_trivial_cases():
    samples = np.array([[0.0, 0.0, 3.0], [1.0, 0.5, 4.0]])
    zero = rd.decomposition_check(ph.Phantom((), 3), 0.3, samples, n_line=100, n_radial=100)
    assert zero["max_rel"] == 0.0 and zero["max_abs"] == 0.0
    ball = ph.Phantom.balls([(0.0, 0.0, 10.0, 1.0, 1.0)])
    early = rd.decomposition_check(ball, 0.3, np.array([[0.0, 0.0, 5.0]]), n_line=100, n_radial=100)
    assert early["line"][0] == 0.0 and early["projected"][0] == 0.0


def test_decomposition_small_budget_agrees():
    ball = ph.Phantom.balls([(0.7, -0.4, 6.0, 2.0, 1.0)])
    rng = np.random.Generator(np.random.Philox(5))
    samples = np.column_stack([rng.uniform(-6, 6, 12), np.zeros(12), rng.uniform(3, 12, 12)])
    rep = rd.decomposition_check(ball, 0.6, samples, n_line=4000, n_radial=8000)
    assert rep["max_rel"] < 0.02
