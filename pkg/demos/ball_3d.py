"""A ball seen by a rotating line detector array, reduced to 2D wave
problems and a Radon inversion; then the same ball seen by a planar
array and inverted directly.  Small grid so it runs in seconds.

    python3 demos/ball_3d.py
"""

import numpy as np

from tatline import forward as fw
from tatline import metrics as mt
from tatline import phantom as ph
from tatline import radon as rd
from tatline import spectral as sp
from tatline.grid import GridSpec

ball = ph.Phantom.balls([(0.5, -0.5, 5.0, 2.0, 1.0)])
vol = GridSpec.from_bounds((-3, -3, 2), (3, 3, 8), (25, 25, 25))
truth = ball.arrays()[0]

data = rd.forward_3d(ball, rd.uniform_angles(60), fw.TraceSpec.from_window(-60, 60, 384, 80, 384))
rec = rd.reconstruct_3d(data, vol)
err = mt.match_centers(mt.blob_centers(rec, 1), truth)[0]
print(f"line detectors, 60 angles: centre error {err:.3f} (voxel {max(vol.spacing):.3f})")

planar = fw.simulate_planar_trace(ball, (-24, -24), (0.5, 0.5), (96, 96), 0.5, 96)
rec_pl = sp.reconstruct_nd(planar, vol)
err = mt.match_centers(mt.blob_centers(rec_pl, 1), truth)[0]
print(f"planar array:              centre error {err:.3f}")
print(f"peak values {rec.values.max():.2f} (line), {rec_pl.values.max():.2f} (planar), true 1")
