"""Drift vector fields on the staggered grid and their composition for blending.

Samples live on pixel faces. ``dx[c, y, i]`` sits on the vertical face between
pixels ``(y, i-1)`` and ``(y, i)``, so ``dx`` has shape (nc, ny, nx+1) and its
first and last columns are the outer boundary. ``dy[c, j, x]`` sits between
``(j-1, x)`` and ``(j, x)`` with shape (nc, ny+1, nx).
"""
from __future__ import annotations

import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .image import Canvas, Partition
from .seams import Seam

log = logging.getLogger(__name__)


def face_masks(support: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Faces whose two neighbouring pixels both lie in ``support``."""
    ny, nx = support.shape
    fx = np.zeros((ny, nx + 1), dtype=bool)
    fy = np.zeros((ny + 1, nx), dtype=bool)
    fx[:, 1:-1] = support[:, :-1] & support[:, 1:]
    fy[1:-1, :] = support[:-1, :] & support[1:, :]
    return fx, fy


@dataclass(frozen=True, eq=False)
class StaggeredField:
    dx: np.ndarray
    dy: np.ndarray
    support: np.ndarray  # pixels the field was computed on

    def __post_init__(self):
        nc, ny, nx1 = self.dx.shape
        if self.dy.shape != (nc, ny + 1, nx1 - 1):
            raise ValueError(f"dy shape {self.dy.shape} does not match dx {self.dx.shape}")
        if self.support.shape != (ny, nx1 - 1):
            raise ValueError("support shape does not match the field")
        if not (np.all(np.isfinite(self.dx)) and np.all(np.isfinite(self.dy))):
            raise ValueError("field samples must be finite")

    @property
    def nc(self) -> int:
        return self.dx.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.support.shape

    def restricted(self, mask: np.ndarray) -> "StaggeredField":
        """Zero every face not strictly inside ``mask`` (no-flux boundary)."""
        fx, fy = face_masks(mask)
        return StaggeredField(np.where(fx, self.dx, 0.0), np.where(fy, self.dy, 0.0), self.support & mask)

    def boundary_is_zero(self, mask: np.ndarray = None) -> bool:
        fx, fy = face_masks(self.support if mask is None else mask)
        return not (np.any(self.dx[:, ~fx]) or np.any(self.dy[:, ~fy]))


@dataclass(frozen=True)
class AlphaParams:
    half_width: int = 16

    def __post_init__(self):
        if self.half_width < 0:
            raise ValueError("alpha half-width must be >= 0")


def canonical_drift(canvas: Canvas, h: float = 1.0) -> StaggeredField:
    """Face samples 2 (v_b - v_a) / (h (v_b + v_a)) of grad(v)/v on the mask.

    The ratio form makes the field exactly invariant under scaling ``v``.
    """
    v, mask = canvas.data, canvas.mask
    if np.any(v[:, mask] <= 0):
        raise ValueError("positivity violated; apply offset")
    fx, fy = face_masks(mask)
    dx = np.zeros(v.shape[:2] + (v.shape[2] + 1,))
    dy = np.zeros((v.shape[0], v.shape[1] + 1, v.shape[2]))
    with np.errstate(divide="ignore", invalid="ignore"):
        a, b = v[:, :, :-1], v[:, :, 1:]
        dx[:, :, 1:-1] = np.where(fx[:, 1:-1], 2.0 * (b - a) / (h * (b + a)), 0.0)
        a, b = v[:, :-1, :], v[:, 1:, :]
        dy[:, 1:-1, :] = np.where(fy[1:-1, :], 2.0 * (b - a) / (h * (b + a)), 0.0)
    return StaggeredField(dx, dy, mask.copy())


def stitch_fields(fields: list[StaggeredField], partition: Partition) -> StaggeredField:
    """Compose per-input fields along a partition.

    A face inside one owner's region takes that owner's sample. A face between
    two owners takes the mean of both samples, or the one sample available
    when only one owner's field covers the face.
    """
    owner = partition.owner
    nc = fields[0].nc
    out = []
    for axis in ("dx", "dy"):
        if axis == "dx":
            oa = np.pad(owner, ((0, 0), (1, 0)), constant_values=-1)
            ob = np.pad(owner, ((0, 0), (0, 1)), constant_values=-1)
        else:
            oa = np.pad(owner, ((1, 0), (0, 0)), constant_values=-1)
            ob = np.pad(owner, ((0, 1), (0, 0)), constant_values=-1)
        valid = (oa >= 0) & (ob >= 0)
        total = np.zeros((nc,) + oa.shape)
        count = np.zeros(oa.shape, dtype=np.int64)
        for k, f in enumerate(fields):
            has = face_masks(f.support)[0 if axis == "dx" else 1]
            take = has & valid & ((oa == k) | (ob == k))
            total += np.where(take, getattr(f, axis), 0.0)
            count += take
        missing = valid & (count == 0)
        if np.any(missing):
            log.warning("%d %s faces between regions have no drift data; set to 0", int(missing.sum()), axis)
        with np.errstate(invalid="ignore"):
            out.append(np.where(count > 0, total / np.maximum(count, 1), 0.0))
    return StaggeredField(out[0], out[1], partition.mask.copy())


def stitch_drift(fields: list[StaggeredField], partition: Partition) -> StaggeredField:
    return stitch_fields(fields, partition)


def seam_removal_drift(naive: Canvas, seams: list[Seam], h: float = 1.0) -> StaggeredField:
    """Canonical drift of the naive stitch with every seam face set to zero."""
    field = canonical_drift(naive, h)
    dx, dy = field.dx.copy(), field.dy.copy()
    for seam in seams:
        mx, my = seam.face_masks(naive.shape)
        dx[:, mx] = 0.0
        dy[:, my] = 0.0
    return StaggeredField(dx, dy, field.support)


def alpha_weight(pos, s, w: int):
    """Weight of the left field at horizontal position ``pos`` for seam face ``s``."""
    pos = np.asarray(pos, dtype=np.float64)
    if w == 0:
        return np.where(pos < s, 1.0, np.where(pos == s, 0.5, 0.0))
    return np.clip((s + w - pos) / (2 * w), 0.0, 1.0)


def alpha_blend_drift(left: StaggeredField, right: StaggeredField, seam: Seam,
                      params: AlphaParams) -> StaggeredField:
    """Linear blend of two fields inside a window of half-width w around the seam.

    Vertical face ``i`` sits at position ``i`` in face coordinates; horizontal
    faces sit at pixel centres ``x + 1/2`` and see the mean seam position of
    the two rows they separate. With ``w = 0`` this reproduces the hard seam.
    Where only one field has data, that field is used as is.
    """
    ny, nx = left.shape
    w = params.half_width
    lo, hi = (seam.faces - w, seam.faces + w - 1) if w > 0 else (seam.faces - 1, seam.faces)
    both = left.support & right.support
    for j, (a, b) in enumerate(zip(lo, hi)):
        y = seam.row0 + j
        if a < 0 or b >= nx or not np.all(both[y, a:b + 1]):
            raise ValueError(f"alpha window [{a}, {b}] at row {y} exceeds the overlap")

    rows = np.arange(seam.row0, seam.row0 + seam.rows)
    s_row = np.full(ny, np.nan)
    s_row[rows] = seam.faces
    ax = np.ones((ny, nx + 1))
    ax[rows] = alpha_weight(np.arange(nx + 1)[None, :], seam.faces[:, None], w)

    # horizontal faces between rows j-1 and j
    s_up = np.concatenate([[np.nan], s_row])
    s_dn = np.concatenate([s_row, [np.nan]])
    s_face = np.where(np.isnan(s_up), s_dn, np.where(np.isnan(s_dn), s_up, 0.5 * (s_up + s_dn)))
    ay = np.ones((ny + 1, nx))
    spanned = ~np.isnan(s_face)
    ay[spanned] = alpha_weight(np.arange(nx)[None, :] + 0.5, s_face[spanned][:, None], w)

    out = []
    for axis, alpha, fmask in (("dx", ax, 0), ("dy", ay, 1)):
        hl = face_masks(left.support)[fmask]
        hr = face_masks(right.support)[fmask]
        fl, fr = getattr(left, axis), getattr(right, axis)
        mixed = alpha * fl + (1.0 - alpha) * fr
        out.append(np.where(hl & hr, mixed, np.where(hl, fl, np.where(hr, fr, 0.0))))
    return StaggeredField(out[0], out[1], left.support | right.support)


_HEADER = struct.Struct("<4s3i")


def write_field(path, field: StaggeredField) -> None:
    """One record per channel: 'OSMD', nx, ny, channel, then dx and dy as <f8."""
    ny, nx = field.shape
    with open(path, "wb") as fh:
        for c in range(field.nc):
            fh.write(_HEADER.pack(b"OSMD", nx, ny, c))
            fh.write(field.dx[c].astype("<f8").tobytes())
            fh.write(field.dy[c].astype("<f8").tobytes())


def read_field(path) -> StaggeredField:
    buf = Path(path).read_bytes()
    pos, dxs, dys, shape = 0, [], [], None
    while pos < len(buf):
        magic, nx, ny, c = _HEADER.unpack_from(buf, pos)
        if magic != b"OSMD":
            raise ValueError(f"{path}: bad field record magic {magic!r}")
        if c != len(dxs):
            raise ValueError(f"{path}: channel records out of order")
        pos += _HEADER.size
        n = ny * (nx + 1)
        dxs.append(np.frombuffer(buf, "<f8", n, pos).reshape(ny, nx + 1))
        pos += 8 * n
        n = (ny + 1) * nx
        dys.append(np.frombuffer(buf, "<f8", n, pos).reshape(ny + 1, nx))
        pos += 8 * n
        shape = (ny, nx)
    if shape is None:
        raise ValueError(f"{path}: empty field file")
    dx, dy = np.array(dxs, dtype=np.float64), np.array(dys, dtype=np.float64)
    # support is not stored in the file
    return StaggeredField(dx, dy, np.ones(shape, dtype=bool))
