"""Thermoacoustic tomography with line detectors: simulation and Fourier reconstruction."""

__version__ = "0.1.0"

from .grid import Grid, GridSpec  # noqa: E402,F401
from .phantom import Ball3D, Disc2D, Phantom  # noqa: E402,F401
from .forward import TraceSpec, WaveTrace, simulate_trace  # noqa: E402,F401
from .spectral import reconstruct, reconstruct_nd  # noqa: E402,F401
