"""Boosted Haar cascade model and its XML interchange parser.

The on-disk format is the stock ``<cascade>`` XML used by mainstream
cascade tooling: ``stageType BOOST`` / ``featureType HAAR``, a window
size, a list of stages holding stump weak classifiers (``internalNodes``
of the form ``0 -1 featureIndex threshold`` plus two ``leafValues``),
and a flat feature table of weighted rectangles. Pretrained frontal-face
files load unmodified; see tests/fixtures/cascades.

Only upright stump cascades are supported. Tilted features and tree
classifiers raise at parse time rather than silently misdetecting.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path


class CascadeError(Exception):
    """Base class for cascade load failures."""


class CascadeParseError(CascadeError):
    """Malformed XML; carries the (line, column) reported by the parser."""

    def __init__(self, message: str, position: tuple[int, int] | None = None):
        if position is not None:
            message = f"{message} (line {position[0]}, column {position[1]})"
        super().__init__(message)
        self.position = position


class UnsupportedFeatureError(CascadeError):
    """Feature uses a capability we do not implement (tilted rects)."""


class UnsupportedStructureError(CascadeError):
    """Weak classifier is not a two-leaf stump."""


class CascadeValidationError(CascadeError):
    """Structurally valid XML describing an inconsistent model."""


@dataclass(frozen=True)
class WeightedRect:
    """Rectangle in model-window units with a signed weight."""

    x: int
    y: int
    w: int
    h: int
    weight: float


@dataclass(frozen=True)
class HaarFeature:
    rects: tuple[WeightedRect, ...]
    tilted: bool = False


@dataclass(frozen=True)
class WeakClassifier:
    feature_index: int
    threshold: float
    left_value: float
    right_value: float


@dataclass(frozen=True)
class Stage:
    threshold: float
    weak: tuple[WeakClassifier, ...]


@dataclass(frozen=True)
class CascadeModel:
    """Immutable parsed cascade; safe to share across threads."""

    window_width: int
    window_height: int
    stages: tuple[Stage, ...]
    features: tuple[HaarFeature, ...]

    @property
    def stage_count(self) -> int:
        return len(self.stages)

    @property
    def feature_count(self) -> int:
        return len(self.features)

    def truncated(self, n_stages: int) -> "CascadeModel":
        """Model restricted to the first ``n_stages`` stages."""
        if not 1 <= n_stages <= len(self.stages):
            raise ValueError(f"stage prefix {n_stages} out of range")
        return CascadeModel(
            self.window_width, self.window_height, self.stages[:n_stages], self.features
        )


def _require(elem: ET.Element, tag: str, context: str) -> ET.Element:
    child = elem.find(tag)
    if child is None:
        raise CascadeValidationError(f"missing <{tag}> in {context}")
    return child


def _text(elem: ET.Element, tag: str, context: str) -> str:
    child = _require(elem, tag, context)
    if child.text is None:
        raise CascadeValidationError(f"empty <{tag}> in {context}")
    return child.text.strip()


def _parse_feature(elem: ET.Element, index: int) -> HaarFeature:
    tilted_elem = elem.find("tilted")
    tilted = tilted_elem is not None and tilted_elem.text is not None \
        and tilted_elem.text.strip() not in ("0", "")
    if tilted:
        raise UnsupportedFeatureError(
            f"feature {index} is tilted; only upright features are supported"
        )
    rects_elem = _require(elem, "rects", f"feature {index}")
    rects = []
    for rect_elem in rects_elem.findall("_"):
        if rect_elem.text is None:
            raise CascadeValidationError(f"empty rect entry in feature {index}")
        parts = rect_elem.text.split()
        if len(parts) != 5:
            raise CascadeValidationError(
                f"rect entry in feature {index} has {len(parts)} fields, expected 5"
            )
        try:
            x, y, w, h = (int(p) for p in parts[:4])
            weight = float(parts[4])
        except ValueError as exc:
            raise CascadeValidationError(
                f"non-numeric rect entry in feature {index}: {rect_elem.text!r}"
            ) from exc
        rects.append(WeightedRect(x, y, w, h, weight))
    if not 2 <= len(rects) <= 3:
        raise CascadeValidationError(
            f"feature {index} has {len(rects)} rects, expected 2 or 3"
        )
    return HaarFeature(tuple(rects), tilted=False)


def _parse_weak(elem: ET.Element, stage_index: int, weak_index: int) -> WeakClassifier:
    ctx = f"stage {stage_index} weak {weak_index}"
    internal = _text(elem, "internalNodes", ctx).split()
    leaves = _text(elem, "leafValues", ctx).split()
    if len(internal) % 4 != 0 or not internal:
        raise CascadeValidationError(f"{ctx}: internalNodes length {len(internal)} not a multiple of 4")
    node_count = len(internal) // 4
    if node_count != 1:
        raise UnsupportedStructureError(
            f"{ctx}: {node_count} internal nodes; only stump classifiers are supported"
        )
    if len(leaves) != 2:
        raise UnsupportedStructureError(
            f"{ctx}: {len(leaves)} leaf values; only stump classifiers are supported"
        )
    try:
        feature_index = int(internal[2])
        threshold = float(internal[3])
        left, right = float(leaves[0]), float(leaves[1])
    except ValueError as exc:
        raise CascadeValidationError(f"{ctx}: non-numeric node fields") from exc
    return WeakClassifier(feature_index, threshold, left, right)


def parse_cascade(xml: str) -> CascadeModel:
    """Parse cascade XML text into a validated :class:`CascadeModel`."""
    try:
        root = ET.fromstring(xml)
    except ET.ParseError as exc:
        raise CascadeParseError(f"malformed cascade XML: {exc.msg}", exc.position) from exc

    cascade = root if root.tag == "cascade" else root.find("cascade")
    if cascade is None:
        raise CascadeValidationError("no <cascade> element found")

    stage_type = _text(cascade, "stageType", "<cascade>")
    if stage_type != "BOOST":
        raise UnsupportedStructureError(f"stageType {stage_type!r}; expected BOOST")
    feature_type = _text(cascade, "featureType", "<cascade>")
    if feature_type != "HAAR":
        raise UnsupportedFeatureError(f"featureType {feature_type!r}; expected HAAR")

    try:
        width = int(_text(cascade, "width", "<cascade>"))
        height = int(_text(cascade, "height", "<cascade>"))
    except ValueError as exc:
        raise CascadeValidationError("non-integer window size") from exc
    if width < 4 or height < 4:
        raise CascadeValidationError(f"window {width}x{height} below minimum 4x4")

    features_elem = _require(cascade, "features", "<cascade>")
    features = tuple(
        _parse_feature(elem, i) for i, elem in enumerate(features_elem.findall("_"))
    )

    stages_elem = _require(cascade, "stages", "<cascade>")
    stages = []
    for si, stage_elem in enumerate(stages_elem.findall("_")):
        try:
            threshold = float(_text(stage_elem, "stageThreshold", f"stage {si}"))
        except ValueError as exc:
            raise CascadeValidationError(f"stage {si}: non-numeric threshold") from exc
        weak_elem = _require(stage_elem, "weakClassifiers", f"stage {si}")
        weak = tuple(
            _parse_weak(elem, si, wi) for wi, elem in enumerate(weak_elem.findall("_"))
        )
        if not weak:
            raise CascadeValidationError(f"stage {si} has no weak classifiers")
        stages.append(Stage(threshold, weak))
    if not stages:
        raise CascadeValidationError("cascade has no stages")

    model = CascadeModel(width, height, tuple(stages), features)
    _validate(model)
    return model


def load_cascade(path: str | Path) -> CascadeModel:
    return parse_cascade(Path(path).read_text(encoding="utf-8"))


def _validate(model: CascadeModel) -> None:
    for si, stage in enumerate(model.stages):
        for wi, weak in enumerate(stage.weak):
            if not 0 <= weak.feature_index < len(model.features):
                raise CascadeValidationError(
                    f"stage {si} weak {wi} references feature {weak.feature_index} "
                    f"of {len(model.features)}"
                )
    for fi, feature in enumerate(model.features):
        for rect in feature.rects:
            if rect.w < 1 or rect.h < 1 or rect.x < 0 or rect.y < 0:
                raise CascadeValidationError(f"feature {fi}: degenerate rect {rect}")
            if rect.x + rect.w > model.window_width or rect.y + rect.h > model.window_height:
                raise CascadeValidationError(
                    f"feature {fi}: rect {rect} exceeds window "
                    f"{model.window_width}x{model.window_height}"
                )
