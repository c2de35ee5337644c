"""Regenerate the natural-image crops in tests/data from scikit-image's bundled samples."""
from pathlib import Path

import skimage.data

from osmoblend.io import encode_pnm

OUT = Path(__file__).resolve().parent.parent / "tests" / "data"


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "camera64.pgm").write_bytes(encode_pnm(skimage.data.camera()[180:244, 220:284]))
    (OUT / "camera128.pgm").write_bytes(encode_pnm(skimage.data.camera()[300:428, 50:178]))
    (OUT / "astronaut48.ppm").write_bytes(encode_pnm(skimage.data.astronaut()[100:148, 180:228]))


if __name__ == "__main__":
    main()
