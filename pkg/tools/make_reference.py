#!/usr/bin/env python3
"""Run the reference cascade detector over the committed corpus.

Requires an OpenCV 4.x python environment (the package itself never
imports cv2); run with that interpreter, e.g.:

    /path/to/cv4-venv/bin/python tools/make_reference.py

Produces tests/fixtures/corpus/reference.json: the frozen oracle the
parity tests compare against. Parameters mirror the detector defaults
(scale factor 1.1, 3 neighbors, min size 24).
"""

from __future__ import annotations

import json
from pathlib import Path

import cv2

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "tests" / "fixtures" / "corpus"
CASCADE = ROOT / "tests" / "fixtures" / "cascades" / "haarcascade_frontalface_default.xml"

PARAMS = {"scaleFactor": 1.1, "minNeighbors": 3, "minSize": (24, 24)}


def main() -> None:
    classifier = cv2.CascadeClassifier(str(CASCADE))
    assert not classifier.empty(), CASCADE

    results: dict[str, list[list[int]]] = {}
    images = sorted(CORPUS.glob("faces/*.png")) + sorted(CORPUS.glob("negatives/*.png"))
    images.append(CORPUS / "sixfaces.png")
    for path in images:
        gray = cv2.imread(str(path), cv2.IMREAD_GRAYSCALE)
        rects = classifier.detectMultiScale(gray, **PARAMS)
        key = str(path.relative_to(CORPUS))
        results[key] = [[int(v) for v in r] for r in rects]

    labels = json.loads((CORPUS / "labels.json").read_text())
    found = missed = 0
    for key, planted in labels.items():
        refs = results.get(key, [])
        for (x, y, w, h) in planted:
            hit = any(
                abs(rx + rw / 2 - (x + w / 2)) < w / 2
                and abs(ry + rh / 2 - (y + h / 2)) < h / 2
                for (rx, ry, rw, rh) in refs
            )
            found += hit
            missed += not hit
    neg_hits = {k: v for k, v in results.items() if k.startswith("negatives/") and v}

    out = {
        "detector": f"opencv-{cv2.__version__} CascadeClassifier",
        "cascade": CASCADE.name,
        "params": {"scale_factor": 1.1, "min_neighbors": 3, "min_size": 24},
        "detections": results,
    }
    (CORPUS / "reference.json").write_text(json.dumps(out, indent=1))
    print(f"planted faces found by reference: {found}, missed: {missed}")
    print(f"negatives with reference detections: {len(neg_hits)} {list(neg_hits)}")


if __name__ == "__main__":
    main()
