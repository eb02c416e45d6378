import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tatline import metrics as mt
from tatline import phantom as ph
from tatline.grid import Grid, GridSpec


def test_rel_l2_trivial():
    b = np.arange(12.0).reshape(3, 4)
    assert mt.rel_l2(b, b) == 0.0
    assert np.isclose(mt.rel_l2(2 * b, b), 1.0)
    assert mt.rel_l2(np.zeros(3), np.zeros(3)) == 0.0
    assert mt.rel_l2(np.ones(3), np.zeros(3)) == float("inf")


def test_shifted_disc_brute_force():
    spec = GridSpec.from_bounds((-2, -2), (2, 2), (81, 81))
    a = ph.rasterize(ph.Phantom.discs([(0.0, 0.0, 1.0, 1.0)]), spec, 3)
    b = ph.rasterize(ph.Phantom.discs([(spec.spacing[0], 0.0, 1.0, 1.0)]), spec, 3)
    num = sum((x - y) ** 2 for x, y in zip(a.values.ravel().tolist(), b.values.ravel().tolist()))
    den = sum(y**2 for y in b.values.ravel().tolist())
    assert np.isclose(mt.rel_l2(a, b), np.sqrt(num / den), rtol=1e-12)


def test_report_and_mask():
    spec = GridSpec.from_bounds((0, 0), (1, 1), (11, 11))
    ref = Grid(np.zeros(spec.shape), spec.origin, spec.spacing)
    ref.values[5, 5] = 1.0
    m = mt.support_mask(ref, dilate=1)
    assert m.sum() == 5
    rep = mt.report(ref, ref, {"support": m})
    assert rep["rel_l2"] == 0.0 and rep["rel_l2.support"] == 0.0 and rep["psnr"] == float("inf")


@settings(max_examples=50, deadline=None)
@given(
    arrays(np.float64, 20, elements=st.floats(-10, 10)),
    arrays(np.float64, 20, elements=st.floats(-10, 10)),
    st.floats(0.1, 10),
)
def test_rel_l2_properties(a, b, c):
    if np.linalg.norm(b) == 0:
        return
    assert mt.rel_l2(a, b) >= 0
    assert np.isclose(mt.rel_l2(c * a, c * b), mt.rel_l2(a, b))
    assert mt.rmse(a, b) == mt.rmse(b, a)


def test_blob_centers():
    spec = GridSpec.from_bounds((-5, -5), (5, 5), (101, 101))
    truth = np.array([[2.0, 1.0], [-2.5, -2.0]])
    g = ph.rasterize(ph.Phantom.discs([(2.0, 1.0, 1.0, 1.0), (-2.5, -2.0, 0.7, 0.8)]), spec, 3)
    found = mt.blob_centers(g, 2)
    assert np.all(mt.match_centers(found, truth) < 0.05)
    assert mt.blob_centers(Grid.zeros(spec), 1).shape == (0, 2)
    assert np.isinf(mt.match_centers(np.zeros((0, 2)), truth)).all()
