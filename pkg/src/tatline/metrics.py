"""Error measures between a reconstruction and a reference on the same grid."""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .grid import Grid


def _pair(a, b, mask=None):
    a = np.asarray(a.values if isinstance(a, Grid) else a, dtype=np.float64)
    b = np.asarray(b.values if isinstance(b, Grid) else b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != a.shape:
            raise ValueError("mask must match the grid shape")
        a, b = a[mask], b[mask]
    return a.ravel(), b.ravel()


def rel_l2(a, b, mask=None) -> float:
    """``||a - b|| / ||b||``; 0 when both vanish, inf when only ``b`` does."""
    a, b = _pair(a, b, mask)
    num = float(np.linalg.norm(a - b))
    den = float(np.linalg.norm(b))
    if den == 0.0:
        return 0.0 if num == 0.0 else float("inf")
    return num / den


def rmse(a, b, mask=None) -> float:
    a, b = _pair(a, b, mask)
    return float(np.sqrt(np.mean((a - b) ** 2))) if a.size else 0.0


def psnr(a, b, mask=None) -> float:
    """Peak signal-to-noise ratio in dB with the reference's peak magnitude."""
    a, b = _pair(a, b, mask)
    peak = float(np.max(np.abs(b))) if b.size else 0.0
    err = rmse(a, b)
    if err == 0.0:
        return float("inf")
    if peak == 0.0:
        return float("-inf")
    return 20.0 * np.log10(peak / err)


def support_mask(reference, dilate: int = 3, level: float = 0.0) -> np.ndarray:
    """Nodes where ``|reference| > level``, grown by ``dilate`` cells."""
    vals = reference.values if isinstance(reference, Grid) else np.asarray(reference)
    mask = np.abs(vals) > level
    if dilate > 0 and mask.any():
        mask = ndimage.binary_dilation(mask, iterations=int(dilate))
    return mask


def report(a, b, masks: dict | None = None) -> dict:
    """``rel_l2``, ``rmse`` and ``psnr`` over the whole grid plus per named region."""
    out = {"rel_l2": rel_l2(a, b), "rmse": rmse(a, b), "psnr": psnr(a, b)}
    for name, m in (masks or {}).items():
        out[f"rel_l2.{name}"] = rel_l2(a, b, m)
        out[f"rmse.{name}"] = rmse(a, b, m)
    return out


def blob_centers(grid: Grid, n: int, threshold: float = 0.5, smooth: float = 1.0) -> np.ndarray:
    """Centroids (physical coordinates) of the ``n`` largest connected regions
    above ``threshold * max`` after a light Gaussian smoothing (in cells)."""
    vals = ndimage.gaussian_filter(grid.values, smooth) if smooth > 0 else grid.values
    top = float(vals.max())
    if top <= 0:
        return np.zeros((0, grid.ndim))
    labels, count = ndimage.label(vals > threshold * top)
    if count == 0:
        return np.zeros((0, grid.ndim))
    idx = np.arange(1, count + 1)
    sizes = ndimage.sum_labels(np.ones_like(vals), labels, idx)
    keep = idx[np.argsort(sizes)[::-1][:n]]
    cents = np.array(ndimage.center_of_mass(vals, labels, keep))
    return np.asarray(grid.origin) + cents * np.asarray(grid.spacing)


def match_centers(found: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """Distance from each true center to its nearest found center."""
    found = np.atleast_2d(found)
    truth = np.atleast_2d(truth)
    if found.size == 0:
        return np.full(len(truth), np.inf)
    d = np.linalg.norm(truth[:, None, :] - found[None, :, :], axis=-1)
    return d.min(axis=1)
