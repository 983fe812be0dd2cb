import json
import os
from pathlib import Path

import pytest

# The sandbox TBB is too old for numba; pick OpenMP before numba loads.
os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")

from snowframe.cascade import load_cascade

FIXTURES = Path(__file__).parent / "fixtures"
CASCADE_PATH = FIXTURES / "cascades" / "haarcascade_frontalface_default.xml"
CORPUS = FIXTURES / "corpus"


@pytest.fixture(scope="session")
def stock_cascade():
    return load_cascade(CASCADE_PATH)


@pytest.fixture(scope="session")
def stock_cascade_text():
    return CASCADE_PATH.read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def reference_detections():
    return json.loads((CORPUS / "reference.json").read_text())


def make_cascade_xml(
    window=(24, 24),
    stages=None,
    features=None,
) -> str:
    """Build minimal cascade XML for parser tests.

    stages: list of (threshold, [(feature_idx, thr, left, right), ...])
    features: list of ([(x, y, w, h, weight), ...], tilted_flag)
    """
    if stages is None:
        stages = [(0.5, [(0, 0.1, -1.0, 1.0)])]
    if features is None:
        features = [([(0, 0, 24, 12, 1.0), (0, 12, 24, 12, -1.0)], False)]

    stage_xml = []
    for threshold, weaks in stages:
        weak_xml = "".join(
            "<_><internalNodes>0 -1 {} {!r}</internalNodes>"
            "<leafValues>{!r} {!r}</leafValues></_>".format(fi, thr, left, right)
            for fi, thr, left, right in weaks
        )
        stage_xml.append(
            f"<_><maxWeakCount>{len(weaks)}</maxWeakCount>"
            f"<stageThreshold>{threshold!r}</stageThreshold>"
            f"<weakClassifiers>{weak_xml}</weakClassifiers></_>"
        )
    feat_xml = []
    for rects, tilted in features:
        rect_xml = "".join(
            f"<_>{x} {y} {w} {h} {wt!r}</_>" for (x, y, w, h, wt) in rects
        )
        tilted_xml = f"<tilted>{int(tilted)}</tilted>" if tilted else ""
        feat_xml.append(f"<_><rects>{rect_xml}</rects>{tilted_xml}</_>")

    return (
        "<?xml version=\"1.0\"?>\n<opencv_storage>\n"
        "<cascade type_id=\"opencv-cascade-classifier\">"
        "<stageType>BOOST</stageType><featureType>HAAR</featureType>"
        f"<height>{window[1]}</height><width>{window[0]}</width>"
        f"<stages>{''.join(stage_xml)}</stages>"
        f"<features>{''.join(feat_xml)}</features>"
        "</cascade>\n</opencv_storage>\n"
    )
