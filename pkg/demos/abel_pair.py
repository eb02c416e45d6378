"""Circular means of a disc -> line-detector signal Q -> back to the means.

Prints the round-trip error for a few resolutions to show first-order
convergence on an indicator phantom.

    python3 demos/abel_pair.py
"""

import numpy as np

from tatline import forward as fw
from tatline import phantom as ph

disc = ph.Phantom.discs([(1.0, 5.0, 2.0, 1.0)])
prev = None
for n in (256, 512, 1024, 2048, 4096):
    dr = 12.0 / (n - 1)
    r = dr * np.arange(n)
    phi = fw.RadialProfile(ph.circular_mean(disc, np.zeros((n, 2)), r), dr)
    q = fw.q_from_circular_means(phi)
    back = fw.abel_inverse(q)
    err = np.linalg.norm(back.values - phi.values) / np.linalg.norm(phi.values)
    order = "" if prev is None else f"  order {np.log2(prev / err):.2f}"
    print(f"n = {n:5d}  rel error {err:.2e}{order}")
    prev = err
