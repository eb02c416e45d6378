"""Keep only detectors with |u| <= 20 and see which edges survive.

Boundaries whose normals cannot reach the short array fade out; the
visibility map shows where that happens.

    python3 demos/limited_aperture.py [out_dir]
"""

import sys

from tatline import experiments as ex
from tatline import io
from tatline import spectral as sp
from tatline.grid import GridSpec

out = sys.argv[1] if len(sys.argv) > 1 else "out/demo_limited_aperture"

rep = ex.fig4(out)
print(f"{rep['n_detectors']} detectors kept")
print(f"edge strength, visible arcs:   {rep['gradient_visible']:.3f}")
print(f"edge strength, invisible arcs: {rep['gradient_invisible']:.3f}")
print(f"ratio {rep['gradient_ratio']:.2f}")

# how the visible fraction of directions grows with the aperture
grid = GridSpec.from_bounds((-10, 1), (10, 20), (81, 81))
for half in (10, 20, 50, 100, 400):
    vis = sp.visibility_map((-half, half), grid)
    print(f"|u| <= {half:4d}: mean visibility {vis.values.mean():.3f}")
    io.write_pgm(f"{out}/visibility_{half}.pgm", vis.values)
