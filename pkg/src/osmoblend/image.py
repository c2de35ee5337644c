"""Canvas containers, manifests, naive stitching and value-range helpers.

Arrays follow numpy image order: a canvas with ``nc`` channels, width ``nx``
and height ``ny`` stores its data as ``(nc, ny, nx)`` and its mask as
``(ny, nx)``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)


class ManifestError(ValueError):
    """Raised for unreadable or malformed manifests."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Canvas:
    """Multi-channel raster with a per-pixel validity mask.

    Arrays are copied on construction and made read-only.
    """

    data: np.ndarray
    mask: np.ndarray = None

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64)
        if data.ndim == 2:
            data = data[None]
        if data.ndim != 3 or data.shape[0] not in (1, 3):
            raise ValueError(f"expected 1 or 3 channels, got array of shape {data.shape}")
        if self.mask is None:
            mask = np.ones(data.shape[1:], dtype=bool)
        else:
            mask = np.array(self.mask, dtype=bool)
        if mask.shape != data.shape[1:]:
            raise ValueError(f"mask shape {mask.shape} does not match data {data.shape[1:]}")
        if not np.all(np.isfinite(data)):
            raise ValueError("canvas intensities must be finite")
        if np.any(data < 0):
            raise ValueError("canvas intensities must be nonnegative")
        object.__setattr__(self, "data", _frozen(data))
        object.__setattr__(self, "mask", _frozen(mask))

    @property
    def nc(self) -> int:
        return self.data.shape[0]

    @property
    def ny(self) -> int:
        return self.data.shape[1]

    @property
    def nx(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int]:
        """(ny, nx)"""
        return self.data.shape[1:]

    def with_data(self, data: np.ndarray) -> "Canvas":
        return Canvas(data, self.mask)

    def shifted(self, offset: float) -> "Canvas":
        """Add ``offset`` on valid pixels (invalid pixels stay 0)."""
        return Canvas(np.where(self.mask, self.data + offset, 0.0), self.mask)


@dataclass(frozen=True)
class AlignedInput:
    image: Canvas
    offset: tuple[int, int]  # (x, y) of the top-left pixel inside the target canvas

    @property
    def rect(self) -> tuple[int, int, int, int]:
        """Placed rectangle as (x0, y0, x1, y1), half-open."""
        x, y = self.offset
        return x, y, x + self.image.nx, y + self.image.ny

    def check_fits(self, shape: tuple[int, int]) -> None:
        x0, y0, x1, y1 = self.rect
        ny, nx = shape
        if x0 < 0 or y0 < 0 or x1 > nx or y1 > ny:
            raise ValueError(f"input rectangle {self.rect} exceeds canvas {nx}x{ny}")

    def support(self, shape: tuple[int, int]) -> np.ndarray:
        """Boolean coverage mask of this input on a canvas of ``shape``."""
        self.check_fits(shape)
        x0, y0, x1, y1 = self.rect
        m = np.zeros(shape, dtype=bool)
        m[y0:y1, x0:x1] = True
        return m

    def padded(self, shape: tuple[int, int]) -> Canvas:
        """The input zero-padded to the target canvas, masked to its support."""
        self.check_fits(shape)
        x0, y0, x1, y1 = self.rect
        data = np.zeros((self.image.nc,) + tuple(shape))
        data[:, y0:y1, x0:x1] = self.image.data
        return Canvas(data, self.support(shape))


@dataclass(frozen=True, eq=False)
class Partition:
    """Owner index per pixel (-1 where no input covers the pixel).

    ``boundary_dx`` has shape (ny, nx+1) and flags vertical faces whose two
    neighbours have different owners; ``boundary_dy`` (ny+1, nx) does the same
    for horizontal faces.
    """

    owner: np.ndarray
    boundary_dx: np.ndarray = field(init=False)
    boundary_dy: np.ndarray = field(init=False)

    def __post_init__(self):
        owner = _frozen(np.array(self.owner, dtype=np.int64))
        ny, nx = owner.shape
        bdx = np.zeros((ny, nx + 1), dtype=bool)
        bdy = np.zeros((ny + 1, nx), dtype=bool)
        a, b = owner[:, :-1], owner[:, 1:]
        bdx[:, 1:-1] = (a != b) & (a >= 0) & (b >= 0)
        a, b = owner[:-1, :], owner[1:, :]
        bdy[1:-1, :] = (a != b) & (a >= 0) & (b >= 0)
        object.__setattr__(self, "owner", owner)
        object.__setattr__(self, "boundary_dx", _frozen(bdx))
        object.__setattr__(self, "boundary_dy", _frozen(bdy))

    @property
    def mask(self) -> np.ndarray:
        return self.owner >= 0

    @property
    def shape(self) -> tuple[int, int]:
        return self.owner.shape


@dataclass(frozen=True)
class ChannelStats:
    mean: float
    min: float
    max: float


def read_manifest_lines(path: Path):
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ManifestError(f"{path}: cannot read manifest: {e}") from e
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def load_manifest(path) -> tuple[list[AlignedInput], tuple[int, int]]:
    """Read a manifest of ``<path> <offset_x> <offset_y>`` lines.

    An optional ``canvas <nx> <ny>`` line fixes the target size; otherwise the
    canvas is the bounding box of all placed rectangles (anchored at 0, 0).
    Image paths are resolved relative to the manifest. Returns the inputs in
    listed order and the canvas shape as (ny, nx).
    """
    from .io import read_image

    path = Path(path)
    inputs: list[AlignedInput] = []
    explicit = None
    for lineno, tok in read_manifest_lines(path):
        where = f"{path}:{lineno}"
        if tok[0] == "canvas":
            if len(tok) != 3:
                raise ManifestError(f"{where}: expected 'canvas <nx> <ny>'")
            try:
                nx, ny = int(tok[1]), int(tok[2])
            except ValueError:
                raise ManifestError(f"{where}: canvas size must be integers") from None
            if nx <= 0 or ny <= 0:
                raise ManifestError(f"{where}: canvas size must be positive")
            explicit = (ny, nx)
            continue
        if len(tok) != 3:
            raise ManifestError(f"{where}: expected '<path> <offset_x> <offset_y>'")
        try:
            ox, oy = int(tok[1]), int(tok[2])
        except ValueError:
            raise ManifestError(f"{where}: offsets must be integers") from None
        if ox < 0 or oy < 0:
            raise ManifestError(f"{where}: negative offset ({ox}, {oy}) puts the image outside the canvas")
        img_path = Path(tok[0])
        if not img_path.is_absolute():
            img_path = path.parent / img_path
        try:
            img = read_image(img_path)
        except (OSError, ValueError) as e:
            raise ManifestError(f"{where}: cannot load {img_path}: {e}") from e
        inputs.append(AlignedInput(img, (ox, oy)))
    if not inputs:
        raise ManifestError(f"{path}: manifest lists no images")
    nc = {a.image.nc for a in inputs}
    if len(nc) != 1:
        raise ManifestError(f"{path}: inputs mix greyscale and colour images")
    bbox = (max(a.rect[3] for a in inputs), max(a.rect[2] for a in inputs))
    shape = explicit if explicit is not None else bbox
    for a in inputs:
        if a.rect[2] > shape[1] or a.rect[3] > shape[0]:
            raise ManifestError(f"{path}: input at {a.offset} does not fit the {shape[1]}x{shape[0]} canvas")
    return inputs, shape


def coverage(inputs: list[AlignedInput], shape: tuple[int, int]) -> np.ndarray:
    m = np.zeros(shape, dtype=bool)
    for a in inputs:
        m |= a.support(shape)
    return m


def naive_stitch(inputs: list[AlignedInput], partition: Partition) -> Canvas:
    """Mosaic of the inputs: every pixel takes its owner's intensity.

    Pixels without an owner are left at 0 and marked invalid.
    """
    shape = partition.shape
    nc = inputs[0].image.nc
    data = np.zeros((nc,) + tuple(shape))
    mask = np.zeros(shape, dtype=bool)
    for k, a in enumerate(inputs):
        own = (partition.owner == k)
        if np.any(own & ~a.support(shape)):
            raise ValueError(f"partition assigns pixels to input {k} outside its support")
        data[:, own] = a.padded(shape).data[:, own]
        mask |= own
    return Canvas(data, mask)


def channel_stats(canvas: Canvas, channel: int) -> ChannelStats:
    if not np.any(canvas.mask):
        raise ValueError("channel_stats of a canvas with an empty mask")
    vals = canvas.data[channel][canvas.mask]
    return ChannelStats(float(vals.sum() / vals.size), float(vals.min()), float(vals.max()))


def clip_to_range(canvas, lo: float, hi: float, mask: np.ndarray = None) -> Canvas:
    """Clamp intensities into [lo, hi].

    Accepts a Canvas or a raw (nc, ny, nx) array, which may hold negative
    solver output; the result is always a Canvas.
    """
    if lo > hi:
        raise ValueError(f"empty range [{lo}, {hi}]")
    if isinstance(canvas, Canvas):
        data, mask = canvas.data, canvas.mask if mask is None else mask
    else:
        data = np.asarray(canvas, dtype=np.float64)
    return Canvas(np.clip(data, lo, hi), mask)


def quantize(canvas: Canvas) -> np.ndarray:
    """8-bit rendering: clip to [0, 255], round half away from zero."""
    v = np.clip(canvas.data, 0.0, 255.0)
    q = np.floor(v + 0.5)  # values are nonnegative, so this is half-away-from-zero
    return q.astype(np.uint8)

