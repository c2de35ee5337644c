"""Vertical seams between horizontally chained inputs.

A seam stores one vertical-face index per row: face ``s`` lies between pixel
columns ``s - 1`` and ``s`` of the canvas. The mismatch assigned to a face is
the squared difference of the two inputs at column ``s``, the first column
the right input owns, summed over channels. Middle and optimal seams are
scored with the same mismatch, so their costs are directly comparable.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .image import AlignedInput, Partition

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Seam:
    faces: np.ndarray  # absolute face index per row
    row0: int = 0
    cost: float = 0.0
    orientation: str = "vertical"

    def __post_init__(self):
        faces = np.array(self.faces, dtype=np.int64)
        faces.flags.writeable = False
        object.__setattr__(self, "faces", faces)
        if self.orientation != "vertical":
            raise ValueError("only vertical seams are supported; transpose the inputs for horizontal ones")
        if faces.ndim != 1 or faces.size == 0:
            raise ValueError("a seam needs at least one row")
        if np.any(np.abs(np.diff(faces)) > 1):
            raise ValueError("seam steps must satisfy |s[j+1] - s[j]| <= 1")

    @property
    def rows(self) -> int:
        return self.faces.size

    def face_at_row(self, y: int):
        j = y - self.row0
        return int(self.faces[j]) if 0 <= j < self.faces.size else None

    def face_masks(self, shape: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
        """Faces separating the two sides of the seam, as (dx, dy) masks.

        Besides the one vertical face per row, a diagonal step between rows
        also separates the sides along the horizontal faces it crosses.
        """
        ny, nx = shape
        dx = np.zeros((ny, nx + 1), dtype=bool)
        dy = np.zeros((ny + 1, nx), dtype=bool)
        rows = np.arange(self.row0, self.row0 + self.rows)
        dx[rows, self.faces] = True
        for j in range(self.rows - 1):
            a, b = sorted((self.faces[j], self.faces[j + 1]))
            dy[self.row0 + j + 1, a:b] = True
        return dx, dy

    def __eq__(self, other):
        return (isinstance(other, Seam) and self.row0 == other.row0
                and np.array_equal(self.faces, other.faces)
                and self.cost == other.cost)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class OverlapRegion:
    """Rectangle (x0, y0, x1, y1) shared by two inputs plus both patches on it."""

    rect: tuple[int, int, int, int]
    left: np.ndarray  # (nc, h, w)
    right: np.ndarray

    def __post_init__(self):
        x0, y0, x1, y1 = self.rect
        if x1 <= x0 or y1 <= y0:
            raise ValueError("inputs do not overlap")
        shape = (y1 - y0, x1 - x0)
        for p in (self.left, self.right):
            if p.shape[1:] != shape:
                raise ValueError(f"patch shape {p.shape[1:]} does not match overlap {shape}")

    @property
    def width(self) -> int:
        return self.rect[2] - self.rect[0]

    @property
    def height(self) -> int:
        return self.rect[3] - self.rect[1]

    def face_errors(self) -> np.ndarray:
        """Mismatch per (row, interior face); column t is local face t + 1."""
        d = self.left[:, :, 1:] - self.right[:, :, 1:]
        return np.sum(d * d, axis=0)


def overlap_region(left: AlignedInput, right: AlignedInput) -> OverlapRegion:
    lx0, ly0, lx1, ly1 = left.rect
    rx0, ry0, rx1, ry1 = right.rect
    x0, y0, x1, y1 = max(lx0, rx0), max(ly0, ry0), min(lx1, rx1), min(ly1, ry1)
    if x1 <= x0 or y1 <= y0:
        raise ValueError("inputs do not overlap")
    if rx0 < lx0 or rx1 < lx1:
        raise ValueError("inputs must be chained left to right")
    lp = left.image.data[:, y0 - ly0:y1 - ly0, x0 - lx0:x1 - lx0]
    rp = right.image.data[:, y0 - ry0:y1 - ry0, x0 - rx0:x1 - rx0]
    return OverlapRegion((x0, y0, x1, y1), lp, rp)


def middle_seam(overlap: OverlapRegion) -> Seam:
    """Straight seam at the face nearest the overlap centre (left on ties)."""
    x0, y0, _, _ = overlap.rect
    w = overlap.width
    m = w // 2
    d = overlap.left[:, :, m] - overlap.right[:, :, m]
    # row-by-row accumulation, same order as the dynamic program
    cost = float(np.cumsum(np.sum(d * d, axis=0))[-1])
    return Seam(np.full(overlap.height, x0 + m), y0, cost)


def optimal_seam(overlap: OverlapRegion) -> Seam:
    """Minimum error boundary cut through the overlap by dynamic programming.

    Ties go to the smaller face index, both in the recurrence and in the final
    selection.
    """
    if overlap.width < 2:
        log.warning("overlap of width %d has no interior face; using the middle seam", overlap.width)
        return middle_seam(overlap)
    e = overlap.face_errors()
    h, f = e.shape
    cum = np.empty_like(e)
    back = np.zeros((h, f), dtype=np.int64)
    cum[0] = e[0]
    idx = np.arange(f)
    for j in range(1, h):
        prev = cum[j - 1]
        cand = np.full((3, f), np.inf)
        cand[0, 1:] = prev[:-1]
        cand[1] = prev
        cand[2, :-1] = prev[1:]
        k = np.argmin(cand, axis=0)
        back[j] = idx + k - 1
        cum[j] = e[j] + cand[k, idx]
    path = np.empty(h, dtype=np.int64)
    path[-1] = int(np.argmin(cum[-1]))
    for j in range(h - 1, 0, -1):
        path[j - 1] = back[j, path[j]]
    x0, y0 = overlap.rect[:2]
    return Seam(x0 + 1 + path, y0, float(cum[-1, path[-1]]))


def chain_overlaps(inputs: list[AlignedInput]) -> list[OverlapRegion]:
    return [overlap_region(a, b) for a, b in zip(inputs, inputs[1:])]


def build_partition(inputs: list[AlignedInput], seams: list[Seam], shape: tuple[int, int]) -> Partition:
    """Assign every covered pixel to one input of a left-to-right chain.

    Input ``k`` owns the pixels right of seam ``k-1`` and left of seam ``k``
    (a seam only constrains the rows it spans). A covered pixel outside its
    chain region falls back to the first input covering it.
    """
    if len(seams) != len(inputs) - 1:
        raise ValueError(f"{len(inputs)} inputs need {len(inputs) - 1} seams, got {len(seams)}")
    ny, nx = shape
    for k, seam in enumerate(seams):
        ov = overlap_region(inputs[k], inputs[k + 1])
        x0, y0, x1, y1 = ov.rect
        if seam.row0 < y0 or seam.row0 + seam.rows > y1:
            raise ValueError(f"seam {k} rows [{seam.row0}, {seam.row0 + seam.rows}) leave the overlap rows [{y0}, {y1})")
        if np.any(seam.faces < x0) or np.any(seam.faces > x1):
            raise ValueError(f"seam {k} leaves the overlap faces [{x0}, {x1}]")
    xs = np.arange(nx)[None, :]
    owner = np.full(shape, -1, dtype=np.int64)
    fallback = np.full(shape, -1, dtype=np.int64)
    for k in reversed(range(len(inputs))):
        region = np.ones(shape, dtype=bool)
        for side, idx in ((1, k - 1), (-1, k)):
            if not 0 <= idx < len(seams):
                continue
            s = seams[idx]
            lim = np.full((ny, 1), -1)
            rows = slice(s.row0, s.row0 + s.rows)
            lim[rows, 0] = s.faces
            on = np.zeros((ny, 1), dtype=bool)
            on[rows] = True
            inside = (xs >= lim) if side == 1 else (xs < lim)
            region &= ~on | inside
        sup = inputs[k].support(shape)
        owner[region & sup] = k
        fallback[sup] = k
    unassigned = owner < 0
    owner[unassigned] = fallback[unassigned]
    return Partition(owner)


def write_seams(path, seams: list[Seam]) -> None:
    lines = []
    for s in seams:
        head = f"vertical {s.rows} {s.cost!r}"
        if s.row0:
            head += f" {s.row0}"
        lines.append(head)
        lines.extend(str(int(f)) for f in s.faces)
    Path(path).write_text("\n".join(lines) + "\n")


def read_seams(path) -> list[Seam]:
    tok = Path(path).read_text().split("\n")
    seams, i = [], 0
    while i < len(tok):
        head = tok[i].split()
        i += 1
        if not head:
            continue
        if head[0] != "vertical" or len(head) not in (3, 4):
            raise ValueError(f"{path}:{i}: expected 'vertical <rows> <cost>'")
        rows, cost = int(head[1]), float(head[2])
        row0 = int(head[3]) if len(head) == 4 else 0
        faces = [int(t) for t in tok[i:i + rows]]
        if len(faces) != rows:
            raise ValueError(f"{path}: seam block truncated")
        i += rows
        seams.append(Seam(faces, row0, cost))
    return seams
