#!/usr/bin/env python3
"""Generate the committed detector test corpus.

Builds grayscale scene photos with real face crops planted at known
positions (plus two untouched portrait photos), negative texture scenes,
and the six-face cap image. Face crops come from the LFW subset that
ships with scikit-image; backgrounds come from scikit-image's sample
photos. Everything is seeded, so the corpus is reproducible.

Writes tests/fixtures/corpus/{faces,negatives}/*.png, labels.json and
sixfaces.png. Run tools/make_reference.py afterwards to refresh the
reference detections.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image
from skimage import data

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "tests" / "fixtures" / "corpus"
SCENE_W, SCENE_H = 480, 360
SEED = 20140712


def to_gray(img: np.ndarray) -> np.ndarray:
    if img.ndim == 3:
        img = (77 * img[..., 0].astype(np.uint32)
               + 150 * img[..., 1].astype(np.uint32)
               + 29 * img[..., 2].astype(np.uint32)) >> 8
    return img.astype(np.uint8)


def fit(img: np.ndarray, w: int, h: int) -> np.ndarray:
    return np.array(Image.fromarray(img).resize((w, h), Image.BILINEAR))


def soften(img: np.ndarray, lo: int, hi: int) -> np.ndarray:
    """Compress intensity range so planted faces keep contrast headroom."""
    f = img.astype(np.float64) / 255.0
    return (lo + f * (hi - lo)).round().astype(np.uint8)


def backgrounds() -> list[np.ndarray]:
    mats = [
        data.brick(), data.grass(), data.gravel(), to_gray(data.coffee()),
        data.moon(), data.text(), to_gray(data.rocket()), data.camera(),
        to_gray(data.hubble_deep_field()), data.page(),
    ]
    return [soften(fit(to_gray(m), SCENE_W, SCENE_H), 60, 190) for m in mats]


def plant_face(scene: np.ndarray, face: np.ndarray, x: int, y: int, size: int,
               rng: np.random.RandomState) -> None:
    patch = fit(face, size, size).astype(np.float64)
    gain = rng.uniform(0.92, 1.06)
    patch = np.clip(patch * gain + rng.uniform(-5, 5), 0, 255)
    # Oval feather so the paste has no rectangular seam.
    yy, xx = np.mgrid[0:size, 0:size]
    cx = cy = (size - 1) / 2
    r = np.sqrt(((xx - cx) / (size / 2)) ** 2 + ((yy - cy) / (size / 2)) ** 2)
    mask = np.clip((1.08 - r) / 0.16, 0, 1)
    region = scene[y:y + size, x:x + size].astype(np.float64)
    blended = patch * mask + region * (1 - mask)
    scene[y:y + size, x:x + size] = blended.round().astype(np.uint8)


def place_rects(rng: np.random.RandomState, count: int,
                sizes: tuple[int, int]) -> list[tuple[int, int, int]]:
    placed: list[tuple[int, int, int]] = []
    attempts = 0
    while len(placed) < count and attempts < 200:
        attempts += 1
        size = int(rng.randint(sizes[0], sizes[1] + 1))
        x = int(rng.randint(8, SCENE_W - size - 8))
        y = int(rng.randint(8, SCENE_H - size - 8))
        clear = all(
            x + size + 28 < px or px + ps + 28 < x
            or y + size + 28 < py or py + ps + 28 < y
            for px, py, ps in placed
        )
        if clear:
            placed.append((x, y, size))
    return placed


def main() -> None:
    rng = np.random.RandomState(SEED)
    faces_dir = CORPUS / "faces"
    neg_dir = CORPUS / "negatives"
    faces_dir.mkdir(parents=True, exist_ok=True)
    neg_dir.mkdir(parents=True, exist_ok=True)

    lfw = data.lfw_subset()[:100]  # the first 100 entries are faces
    bgs = backgrounds()
    labels: dict[str, list[list[int]]] = {}

    # Generated scenes: 1-3 planted faces over varied backgrounds.
    for i in range(22):
        scene = bgs[i % len(bgs)].copy()
        n_faces = 1 + (i % 3)
        spots = place_rects(rng, n_faces, (68, 150))
        rects = []
        for (x, y, size) in spots:
            face = (lfw[rng.randint(0, 100)] * 255).clip(0, 255).astype(np.uint8)
            plant_face(scene, face, x, y, size, rng)
            rects.append([x, y, size, size])
        name = f"scene_{i:02d}.png"
        Image.fromarray(scene).save(faces_dir / name)
        labels[f"faces/{name}"] = rects

    # Two untouched portrait photos.
    astro = to_gray(data.astronaut())
    astro = fit(astro, SCENE_W, SCENE_W)[:SCENE_H]
    Image.fromarray(astro).save(faces_dir / "portrait_astronaut.png")
    labels["faces/portrait_astronaut.png"] = [[160, 55, 110, 110]]

    import matplotlib.cbook as cbook
    with cbook.get_sample_data("grace_hopper.jpg") as f:
        hopper = to_gray(np.asarray(Image.open(f).convert("RGB")))
    hopper = fit(hopper, SCENE_W, int(SCENE_W * hopper.shape[0] / hopper.shape[1]))
    hopper = hopper[:SCENE_H] if hopper.shape[0] >= SCENE_H else fit(hopper, SCENE_W, SCENE_H)
    Image.fromarray(hopper).save(faces_dir / "portrait_hopper.png")
    labels["faces/portrait_hopper.png"] = [[150, 40, 180, 180]]

    # Negatives: faceless textures and scenery.
    neg_sources = [
        data.brick(), data.grass(), data.gravel(), data.moon(), data.text(),
        to_gray(data.coffee()), to_gray(data.chelsea()), data.coins(),
        to_gray(data.hubble_deep_field()), data.checkerboard(),
    ]
    for i, mat in enumerate(neg_sources):
        scene = soften(fit(to_gray(mat), SCENE_W, SCENE_H), 40, 215)
        Image.fromarray(scene).save(neg_dir / f"negative_{i:02d}.png")

    # Cap image: six faces of strictly increasing size.
    six = soften(fit(data.gravel(), 640, 420), 70, 170)
    sizes = [70, 85, 100, 115, 130, 145]
    positions = [(20, 30), (120, 180), (240, 20), (360, 170), (20, 230), (480, 30)]
    six_rects = []
    for (x, y), size in zip(positions, sizes):
        face = (lfw[rng.randint(0, 100)] * 255).clip(0, 255).astype(np.uint8)
        plant_face(six, face, x, y, size, rng)
        six_rects.append([x, y, size, size])
    Image.fromarray(six).save(CORPUS / "sixfaces.png")
    labels["sixfaces.png"] = six_rects

    (CORPUS / "labels.json").write_text(json.dumps(labels, indent=1))
    print(f"wrote {len(labels)} labeled images under {CORPUS}")


if __name__ == "__main__":
    main()
