"""Temporal face tracking and snow-figure slot assignment.

Detections are matched to live tracks greedily in descending-IoU order;
matched tracks smooth their rect exponentially, unmatched ones age out
after a miss budget. Confirmed tracks claim one of the four figure
slots, keep it until death, and free slots go to the largest unslotted
faces first.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .detect import Detection
from .geometry import Rect, iou


@dataclass(frozen=True)
class TrackerParams:
    iou_match_threshold: float = 0.3
    min_hits: int = 3
    max_misses: int = 15
    smoothing: float = 0.5
    slot_count: int = 4

    def __post_init__(self):
        if not 0.0 < self.iou_match_threshold < 1.0:
            raise ValueError("iou_match_threshold must be in (0, 1)")
        if not 0.0 <= self.smoothing <= 1.0:
            raise ValueError("smoothing must be in [0, 1]")
        if self.slot_count != 4:
            raise ValueError("slot_count is fixed at 4")


@dataclass(frozen=True)
class FaceTrack:
    id: int
    rect: tuple[float, float, float, float]  # exponentially smoothed
    hits: int = 1
    misses: int = 0
    confirmed: bool = False
    slot: int | None = None

    @property
    def rect_int(self) -> Rect:
        x, y, w, h = self.rect
        return (int(round(x)), int(round(y)), int(round(w)), int(round(h)))

    @property
    def area(self) -> float:
        return self.rect[2] * self.rect[3]


def update_tracks(
    tracks: list[FaceTrack],
    detections: list[Detection],
    params: TrackerParams,
    next_id: int,
) -> tuple[list[FaceTrack], int]:
    """One matching round; returns surviving tracks and the next fresh id.

    Pairs are taken greedily by descending IoU (pairs below the match
    threshold are never taken). Matched tracks smooth toward the
    detection and reset their miss count; unmatched tracks age and die
    past max_misses; unmatched detections start new unconfirmed tracks.
    """
    pairs = []
    for ti, track in enumerate(tracks):
        for di, det in enumerate(detections):
            v = iou(track.rect_int, det.rect)
            if v >= params.iou_match_threshold:
                pairs.append((v, ti, di))
    # Descending IoU; deterministic tie-break on (track, detection) order.
    pairs.sort(key=lambda p: (-p[0], p[1], p[2]))

    matched_t: dict[int, int] = {}
    matched_d: set[int] = set()
    for v, ti, di in pairs:
        if ti in matched_t or di in matched_d:
            continue
        matched_t[ti] = di
        matched_d.add(di)

    a = params.smoothing
    out: list[FaceTrack] = []
    for ti, track in enumerate(tracks):
        if ti in matched_t:
            dx, dy, dw, dh = detections[matched_t[ti]].rect
            ox, oy, ow, oh = track.rect
            rect = (
                a * dx + (1 - a) * ox,
                a * dy + (1 - a) * oy,
                a * dw + (1 - a) * ow,
                a * dh + (1 - a) * oh,
            )
            hits = track.hits + 1
            out.append(replace(
                track, rect=rect, hits=hits, misses=0,
                confirmed=track.confirmed or hits >= params.min_hits,
            ))
        else:
            if track.misses + 1 > params.max_misses:
                continue
            out.append(replace(track, misses=track.misses + 1))

    for di, det in enumerate(detections):
        if di not in matched_d:
            x, y, w, h = det.rect
            confirmed = params.min_hits <= 1
            out.append(FaceTrack(next_id, (float(x), float(y), float(w), float(h)),
                                 confirmed=confirmed))
            next_id += 1
    return out, next_id


def assign_slots(tracks: list[FaceTrack], params: TrackerParams) -> list[FaceTrack]:
    """Give free slots to confirmed tracks, largest first, lowest index first.

    A track that already holds a slot keeps it for life; at most
    slot_count slots are ever occupied.
    """
    held = {t.slot for t in tracks if t.slot is not None}
    free = [s for s in range(params.slot_count) if s not in held]
    claimants = sorted(
        (t for t in tracks if t.confirmed and t.slot is None),
        key=lambda t: (-t.area, t.id),
    )
    assignment = {t.id: s for t, s in zip(claimants, free)}
    return [
        replace(t, slot=assignment[t.id]) if t.id in assignment else t
        for t in tracks
    ]


@dataclass
class Tracker:
    """Stateful wrapper owned by the pipeline stage; not thread-safe."""

    params: TrackerParams = field(default_factory=TrackerParams)
    tracks: list[FaceTrack] = field(default_factory=list)
    next_id: int = 1

    def update(self, detections: list[Detection]) -> list[FaceTrack]:
        self.tracks, self.next_id = update_tracks(
            self.tracks, detections, self.params, self.next_id
        )
        self.tracks = assign_slots(self.tracks, self.params)
        return self.tracks

    def slotted(self) -> dict[int, FaceTrack]:
        return {t.slot: t for t in self.tracks if t.slot is not None}

    def snapshot(self) -> dict:
        """Serializable state for sleep persistence."""
        return {
            "next_id": self.next_id,
            "tracks": [
                {
                    "id": t.id, "rect": list(t.rect), "hits": t.hits,
                    "misses": t.misses, "confirmed": t.confirmed, "slot": t.slot,
                }
                for t in self.tracks
            ],
        }

    def restore(self, snapshot: dict) -> None:
        self.next_id = snapshot["next_id"]
        self.tracks = [
            FaceTrack(t["id"], tuple(t["rect"]), t["hits"], t["misses"],
                      t["confirmed"], t["slot"])
            for t in snapshot["tracks"]
        ]
