#!/usr/bin/env python3
"""Regenerate the packaged synthetic-source face patches.

Picks four well-detectable face crops from the LFW subset shipped with
scikit-image and stores them as 160x160 grayscale PNGs under
src/snowframe/assets/.
"""

from pathlib import Path

import numpy as np
from PIL import Image
from skimage import data

ASSETS = Path(__file__).resolve().parent.parent / "src" / "snowframe" / "assets"
FACE_IDS = (3, 17, 41, 63)
SIZE = 160


def main() -> None:
    ASSETS.mkdir(parents=True, exist_ok=True)
    lfw = data.lfw_subset()
    for i, fid in enumerate(FACE_IDS):
        face = (lfw[fid] * 255).clip(0, 255).astype(np.uint8)
        im = Image.fromarray(face).resize((SIZE, SIZE), Image.BILINEAR)
        im.save(ASSETS / f"face_{i}.png")
    print(f"wrote {len(FACE_IDS)} face assets to {ASSETS}")


if __name__ == "__main__":
    main()
