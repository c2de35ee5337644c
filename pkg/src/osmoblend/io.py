"""8-bit image files: binary PGM (P5) and PPM (P6), PNG when Pillow is available."""
from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .image import Canvas, quantize

_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n?)*(\S+)")


def _header(buf: bytes, count: int) -> tuple[list[bytes], int]:
    pos, out = 0, []
    for _ in range(count):
        m = _TOKEN.match(buf, pos)
        if m is None:
            raise ValueError("truncated netpbm header")
        out.append(m.group(1))
        pos = m.end()
    # exactly one whitespace byte separates the header from the raster
    if pos >= len(buf) or not buf[pos:pos + 1].isspace():
        raise ValueError("malformed netpbm header")
    return out, pos + 1


def decode_pnm(buf: bytes) -> np.ndarray:
    """Decode P5/P6 bytes to uint8 of shape (ny, nx) or (ny, nx, 3)."""
    tok, pos = _header(buf, 4)
    magic = tok[0]
    if magic not in (b"P5", b"P6"):
        raise ValueError(f"unsupported netpbm magic {magic!r}; only P5/P6")
    nx, ny, maxval = (int(t) for t in tok[1:])
    if maxval != 255:
        raise ValueError(f"only 8-bit netpbm files are supported (maxval {maxval})")
    nc = 1 if magic == b"P5" else 3
    n = nx * ny * nc
    raster = np.frombuffer(buf, dtype=np.uint8, count=n, offset=pos) if len(buf) - pos >= n else None
    if raster is None:
        raise ValueError("truncated netpbm raster")
    return raster.reshape((ny, nx) if nc == 1 else (ny, nx, 3)).copy()


def encode_pnm(pixels: np.ndarray) -> bytes:
    pixels = np.asarray(pixels)
    if pixels.dtype != np.uint8:
        raise ValueError("encode_pnm expects uint8 pixels")
    if pixels.ndim == 2:
        magic = b"P5"
    elif pixels.ndim == 3 and pixels.shape[2] == 3:
        magic = b"P6"
    else:
        raise ValueError(f"cannot encode array of shape {pixels.shape}")
    ny, nx = pixels.shape[:2]
    return magic + f"\n{nx} {ny}\n255\n".encode() + np.ascontiguousarray(pixels).tobytes()


def to_canvas(pixels: np.ndarray) -> Canvas:
    pixels = np.asarray(pixels)
    if pixels.ndim == 3:
        pixels = np.moveaxis(pixels, 2, 0)
    return Canvas(pixels.astype(np.float64))


def to_pixels(canvas: Canvas) -> np.ndarray:
    """uint8 array in file layout: (ny, nx) or (ny, nx, 3)."""
    q = quantize(canvas)
    return q[0] if canvas.nc == 1 else np.moveaxis(q, 0, 2)


def read_pixels(path) -> np.ndarray:
    path = Path(path)
    if path.suffix.lower() == ".png":
        try:
            from PIL import Image
        except ImportError:  # pragma: no cover
            raise ValueError("PNG support needs Pillow (pip install osmoblend[png])") from None
        with Image.open(path) as im:
            if im.mode not in ("L", "RGB"):
                im = im.convert("RGB")
            return np.asarray(im, dtype=np.uint8)
    return decode_pnm(path.read_bytes())


def read_image(path) -> Canvas:
    return to_canvas(read_pixels(path))


def write_image(path, canvas: Canvas) -> None:
    path = Path(path)
    pixels = to_pixels(canvas)
    if path.suffix.lower() == ".png":
        try:
            from PIL import Image
        except ImportError:  # pragma: no cover
            raise ValueError("PNG support needs Pillow (pip install osmoblend[png])") from None
        Image.fromarray(pixels).save(path)
        return
    path.write_bytes(encode_pnm(pixels))
