"""Seam visibility and global-fit metrics, plus the synthetic degradation experiment."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image import AlignedInput, Canvas
from .seams import Seam


def seam_energy(canvas: Canvas, seam: Seam) -> float:
    """Sum over rows and channels of the squared difference across each seam face.

    Only the one vertical face per row is counted. Rows whose face touches an
    invalid pixel are skipped.
    """
    rows = np.arange(seam.row0, seam.row0 + seam.rows)
    s = seam.faces
    if np.any(s < 1) or np.any(s >= canvas.nx) or rows[-1] >= canvas.ny:
        raise ValueError("seam lies outside the canvas interior")
    ok = canvas.mask[rows, s - 1] & canvas.mask[rows, s]
    d = canvas.data[:, rows, s] - canvas.data[:, rows, s - 1]
    return float(np.sum(d[:, ok] ** 2))


@dataclass(frozen=True)
class GlobalFit:
    coef: np.ndarray  # per channel
    mse: np.ndarray  # per channel
    count: int


def _compared(candidate: Canvas, reference: Canvas, exclude_clipped: bool) -> np.ndarray:
    if candidate.data.shape != reference.data.shape:
        raise ValueError("candidate and reference differ in shape")
    keep = candidate.mask & reference.mask
    if exclude_clipped:
        for c in (candidate, reference):
            keep &= np.all((c.data > 0) & (c.data < 255), axis=0)
    if not np.any(keep):
        raise ValueError("no pixels left to compare")
    return keep


def fit_global_scale(candidate: Canvas, reference: Canvas, exclude_clipped: bool = True) -> GlobalFit:
    """Least-squares c per channel for candidate ~ c * reference, and its MSE."""
    keep = _compared(candidate, reference, exclude_clipped)
    coef, mse = [], []
    for ch in range(candidate.nc):
        a, r = candidate.data[ch][keep], reference.data[ch][keep]
        rr = float(r @ r)
        if rr == 0.0:
            raise ValueError("reference is zero on all compared pixels")
        c = float(a @ r) / rr
        coef.append(c)
        mse.append(float(np.mean((a - c * r) ** 2)))
    return GlobalFit(np.array(coef), np.array(mse), int(keep.sum()))


def fit_global_offset(candidate: Canvas, reference: Canvas, exclude_clipped: bool = True) -> GlobalFit:
    """Mean alignment: candidate ~ reference + c per channel, and its MSE."""
    keep = _compared(candidate, reference, exclude_clipped)
    coef, mse = [], []
    for ch in range(candidate.nc):
        d = candidate.data[ch][keep] - reference.data[ch][keep]
        c = float(d.mean())
        coef.append(c)
        mse.append(float(np.mean((d - c) ** 2)))
    return GlobalFit(np.array(coef), np.array(mse), int(keep.sum()))


def synth_degrade(image: Canvas, side: str = "left", mode: str = "multiplicative",
                  amount: float = 1.3, overlap: int = 16) -> tuple[AlignedInput, AlignedInput]:
    """Split ``image`` into two overlapping crops and change the brightness of one.

    The left crop spans columns [0, (nx + overlap) // 2), the right crop the
    last ``nx - start`` columns so that exactly ``overlap`` columns are shared.
    The modified crop is clipped to [0, 255].
    """
    nx = image.nx
    if overlap < 1 or overlap >= nx:
        raise ValueError(f"overlap {overlap} does not fit an image of width {nx}")
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    if mode not in ("additive", "multiplicative"):
        raise ValueError(f"mode must be 'additive' or 'multiplicative', got {mode!r}")
    end = (nx + overlap) // 2
    start = end - overlap
    crops = [image.data[:, :, :end], image.data[:, :, start:]]
    k = 0 if side == "left" else 1
    changed = crops[k] + amount if mode == "additive" else crops[k] * amount
    crops[k] = np.clip(changed, 0.0, 255.0)
    return AlignedInput(Canvas(crops[0]), (0, 0)), AlignedInput(Canvas(crops[1]), (start, 0))


def smooth_test_image(n: int = 128) -> Canvas:
    """Deterministic 8-bit greyscale scene with soft shading and blobs.

    Values stay inside [30, 190], so neither +30 nor x1.3 clips, and the
    image carries little contrast of its own across the central columns.
    """
    y, x = np.mgrid[0:n, 0:n] / (n / 128.0)
    v = (105.0
         + 45.0 * np.sin(np.pi * y / 64.0) * np.cos(np.pi * x / 96.0)
         + 40.0 * np.exp(-((x - 36.0) ** 2 + (y - 84.0) ** 2) / (2 * 14.0 ** 2))
         - 35.0 * np.exp(-((x - 100.0) ** 2 + (y - 36.0) ** 2) / (2 * 11.0 ** 2))
         + 4.0 * np.sin(x / 2.5) * np.sin(y / 3.5)
         + 20.0 * (y / 128.0))
    return Canvas(np.floor(np.clip(v, 30, 190) + 0.5))
