"""Acceptance suite: one test per release criterion.

Each test prints a single "ACCEPTANCE PASS" line with the measured
numbers (visible with `pytest -s tests/test_acceptance.py`). Tolerances
are pinned here and nowhere else.
"""

import itertools
import json
import re
import time
import urllib.request

import numpy as np
import pytest
from PIL import Image

from snowframe.cascade import load_cascade
from snowframe.compose import Rgba8Frame
from snowframe.config import resolve_config
from snowframe.detect import DetectParams, detect_multiscale, integral_images
from snowframe.engine import Engine, WallClock
from snowframe.frames import DirectorySink, NullSink, SyntheticSource
from snowframe.geometry import iou
from snowframe.lifecycle import EngineState, EventKind, LifecycleEvent, transition
from snowframe.thermal import ThermalModel, thermal_step

from conftest import CASCADE_PATH, CORPUS

REPORT = "ACCEPTANCE PASS: {}"


def ok(name, detail):
    print(REPORT.format(f"{name} - {detail}"))


# 1 ---------------------------------------------------------------------------

def test_cascade_fixture_load_counts_exact(stock_cascade, stock_cascade_text):
    stages = len(re.findall(r"<maxWeakCount>", stock_cascade_text)) - 1
    features = len(re.findall(r"<rects>", stock_cascade_text))
    assert stock_cascade.stage_count == stages
    assert stock_cascade.feature_count == features
    ok("cascade fixture load",
       f"{stages} stages, {features} features match text scan exactly")


# 2 ---------------------------------------------------------------------------

def test_integral_image_oracle_1000_images():
    rng = np.random.RandomState(20140712)
    t0 = time.time()
    checked = 0
    for i in range(1000):
        h = int(rng.randint(1, 129))
        w = int(rng.randint(1, 129))
        img = rng.randint(0, 256, (h, w), np.uint8)
        ii = integral_images(img)
        px = img.astype(np.int64)
        sq = px * px
        # brute force: every entry summed directly from raw pixels
        brute_sum = np.empty((h + 1, w + 1), np.int64)
        brute_sq = np.empty((h + 1, w + 1), np.int64)
        for y in range(h + 1):
            for x in range(w + 1):
                brute_sum[y, x] = px[:y, :x].sum()
                brute_sq[y, x] = sq[:y, :x].sum()
        assert np.array_equal(ii.sum, brute_sum)
        assert np.array_equal(ii.sqsum, brute_sq)
        checked += (h + 1) * (w + 1)
    elapsed = time.time() - t0
    assert elapsed < 60.0
    ok("integral-image oracle",
       f"1000 images, {checked} entries exact in {elapsed:.1f}s")


# 3 ---------------------------------------------------------------------------

def pair_rects(reference, mine, threshold=0.6):
    used = set()
    paired = 0
    for ref in reference:
        best, best_i = 0.0, None
        for i, rect in enumerate(mine):
            if i in used:
                continue
            v = iou(tuple(ref), tuple(rect))
            if v > best:
                best, best_i = v, i
        if best >= threshold:
            used.add(best_i)
            paired += 1
    return paired


def test_detector_parity_on_committed_corpus(stock_cascade, reference_detections):
    ref = reference_detections["detections"]
    params = DetectParams(min_size=24, max_faces=16)
    face_images = sorted(k for k in ref if k.startswith("faces/"))
    assert len(face_images) >= 20
    total = paired = 0
    for key in face_images:
        img = np.asarray(Image.open(CORPUS / key).convert("L"))
        mine = [d.rect for d in detect_multiscale(stock_cascade, img, params)]
        paired += pair_rects(ref[key], mine)
        total += len(ref[key])
    rate = paired / total
    assert rate >= 0.90, f"parity {paired}/{total} = {rate:.1%}"

    neg_images = sorted(k for k in ref if k.startswith("negatives/"))
    assert len(neg_images) == 10
    clean = 0
    for key in neg_images:
        img = np.asarray(Image.open(CORPUS / key).convert("L"))
        clean += not detect_multiscale(stock_cascade, img, DetectParams(min_size=24))
    assert clean >= 8, f"only {clean}/10 negatives clean"
    ok("detector parity",
       f"{paired}/{total} reference faces paired at IoU>=0.6 ({rate:.1%}), "
       f"{clean}/10 negatives clean")


# 4 ---------------------------------------------------------------------------

def test_four_face_cap_on_six_face_image(stock_cascade, reference_detections):
    ref = reference_detections["detections"]["sixfaces.png"]
    assert len(ref) == 6
    img = np.asarray(Image.open(CORPUS / "sixfaces.png"))
    capped = detect_multiscale(stock_cascade, img,
                               DetectParams(min_size=24, max_faces=4))
    assert len(capped) == 4
    top4 = sorted(ref, key=lambda r: -(r[2] * r[3]))[:4]
    assert pair_rects(top4, [d.rect for d in capped]) == 4
    areas = [d.score for d in capped]
    assert areas == sorted(areas, reverse=True)
    ok("four-face cap", "6 reference faces -> exactly the 4 largest returned")


# 5 ---------------------------------------------------------------------------

def test_output_format_and_capture_pacing(stock_cascade):
    config = resolve_config({"cascade": str(CASCADE_PATH)})
    sink = DimensionsSink()
    engine = Engine(config, SyntheticSource(faces=1), sink, model=stock_cascade)
    engine.start()
    composed = engine.run(max_ticks=600)  # 10 simulated seconds at 60 Hz
    tel = engine.telemetry()
    assert composed == 600
    assert sink.sizes == {(1280, 800)}
    assert tel.captures_consumed == 300  # 30 fps capture, every frame consumed
    assert tel.frames_dropped == 0
    ok("output format",
       "600 frames of 1280x800 over 10 s; 300 captures at 30 fps, exact")


class DimensionsSink(NullSink):
    def __init__(self):
        super().__init__()
        self.sizes = set()

    def write(self, frame):
        self.sizes.add((frame.width, frame.height))
        super().write(frame)


# 6 ---------------------------------------------------------------------------

def test_throughput_headless_synthetic(stock_cascade):
    config = resolve_config({"cascade": str(CASCADE_PATH)})
    engine = Engine(config, SyntheticSource(faces=2), NullSink(),
                    model=stock_cascade)
    engine.start()
    engine.run(max_ticks=60)  # warm the JIT kernels and caches
    engine2 = Engine(config, SyntheticSource(faces=2), NullSink(),
                     model=stock_cascade)
    engine2.start()
    t0 = time.time()
    frames = engine2.run(max_ticks=240)
    fps = frames / (time.time() - t0)
    assert fps >= 20.0, f"throughput {fps:.1f} fps below the 20 fps floor"
    ok("throughput",
       f"measured {fps:.1f} composed 1280x800 fps headless "
       f"(target 30; machine-dependent)")


# 7 ---------------------------------------------------------------------------

def test_thermal_reproduction():
    t0 = time.time()
    model = ThermalModel()
    for _ in range(3600):
        model = thermal_step(model, 1.0, 1.0)
    fan_on = model.temp
    assert fan_on == pytest.approx(25.0, abs=0.5)

    model = ThermalModel(temp=25.0, fan=False)
    crossed = None
    temps = [model.temp]
    for s in range(1, 1501):
        model = thermal_step(model, 1.0, 1.0)
        temps.append(model.temp)
        if crossed is None and model.temp > 40.0:
            crossed = s
    assert crossed is not None
    assert all(b >= a for a, b in zip(temps, temps[1:]))
    elapsed = time.time() - t0
    assert elapsed < 1.0
    ok("thermal reproduction",
       f"fan-on steady {fan_on:.2f} C; fan-off crosses 40 C at {crossed}s "
       f"({elapsed * 1000:.0f} ms)")


# 8 ---------------------------------------------------------------------------

def test_lifecycle_exhaustive_and_stress(stock_cascade):
    # exhaustive (state x event) sweep against the documented table
    from test_lifecycle import expected_transition
    pairs = 0
    for state, kind in itertools.product(EngineState, EventKind):
        assert transition(state, LifecycleEvent(kind)) == \
            expected_transition(state, kind)
        pairs += 1

    # 1000 random sleep/wake/health interleavings against a live engine
    from snowframe.control import ControlServer
    import threading

    config = resolve_config({
        "cascade": str(CASCADE_PATH),
        "capture": {"width": 480, "height": 360, "fps": 30},
        "output": {"width": 320, "height": 200, "fps": 60},
        "detect": {"downscale": 1.0, "cadence_hz": 10},
    })
    engine = Engine(config, SyntheticSource(480, 360, 30.0, faces=1), NullSink(),
                    clock=WallClock(), model=stock_cascade)
    engine.start()
    server = ControlServer(engine, port=0)
    server.start()
    runner = threading.Thread(target=engine.run, daemon=True)
    runner.start()
    rng = np.random.RandomState(1)
    legal = {s.value for s in EngineState}
    t0 = time.time()
    try:
        for i in range(1000):
            op = int(rng.randint(0, 3))
            path, method = [("/sleep", "POST"), ("/wake", "POST"),
                            ("/health", "GET")][op]
            req = urllib.request.Request(
                f"http://127.0.0.1:{server.port}{path}", method=method)
            with urllib.request.urlopen(req, timeout=10) as resp:
                payload = json.loads(resp.read())
                assert resp.status == 200
            if method == "GET":
                assert payload["state"] in legal
            assert time.time() - t0 < 55, f"stalled after {i} requests"
    finally:
        engine.submit(EventKind.SHUTDOWN_REQUESTED, wait=False)
        runner.join(timeout=10)
        server.stop()
    elapsed = time.time() - t0
    assert elapsed < 60.0
    assert engine.telemetry().fault_reason is None
    ok("lifecycle",
       f"{pairs} table pairs exact; 1000-request stress in {elapsed:.1f}s, "
       f"no deadlock, no illegal state")


# 9 ---------------------------------------------------------------------------

def test_determinism_300_frame_png_sequences(tmp_path, stock_cascade):
    def run(out_dir):
        config = resolve_config({
            "cascade": str(CASCADE_PATH),
            "snow": {"seed": 7, "spawn_rate": 30.0},
        })
        engine = Engine(config, SyntheticSource(faces=2),
                        DirectorySink(out_dir), model=stock_cascade)
        engine.start()
        engine.run(max_ticks=300)
        return sorted(out_dir.glob("*.png"))

    a = run(tmp_path / "run_a")
    b = run(tmp_path / "run_b")
    assert len(a) == len(b) == 300
    for x, y in zip(a, b):
        assert x.read_bytes() == y.read_bytes(), f"{x.name} differs"
    ok("determinism", "two seeded runs produced bit-identical 300-frame "
                      "PNG sequences")


# 10 --------------------------------------------------------------------------

def random_premul(rng, n):
    a = rng.randint(0, 256, (1, n, 1), np.uint16)
    rgb = rng.randint(0, 256, (1, n, 3), np.uint16) * a // 255
    return np.concatenate([rgb, a], axis=2).astype(np.uint8)


def test_compositor_opaque_top_dominance_exact():
    from snowframe.compose import Layer, Scene, composite

    rng = np.random.RandomState(3)
    w = h = 64
    junk = []
    for z in range(3):
        px = random_premul(rng, w * h).reshape(h, w, 4)
        junk.append(Layer(z, Rgba8Frame(w, h, px), (0, 0, w, h)))
    top_px = random_premul(rng, w * h).reshape(h, w, 4)
    top_px[..., 3] = 255
    top = Rgba8Frame(w, h, top_px)
    out = composite(Scene((w, h), junk + [Layer(99, top, (0, 0, w, h))]))
    assert np.array_equal(out.pixels, top_px)
    ok("compositor algebra (opaque top)",
       "fully opaque top layer reproduced exactly over arbitrary stacks")


def test_compositor_associativity_within_1_lsb():
    # KNOWN RED. The 1-LSB bound is unattainable for any source-over that
    # quantizes intermediates to 8 bits: each association accumulates up
    # to ~0.5 LSB from the intermediate rounding, ~0.5 LSB through the
    # rounded alpha entering the next inverse-alpha factor, and ~0.5 LSB
    # from the final rounding, so |left - right| can reach 2. The blend
    # already rounds to nearest at every step (exact halves do not exist
    # for v*f/255 with integer v, f), so no rounding scheme does better.
    # Measured: max deviation 2 on roughly 10 of 400k channels for every
    # seed tried. See the decisions ledger for the full analysis.
    from snowframe.compose import _source_over

    rng = np.random.RandomState(3)
    n = 100_000
    a8, b8, c8 = (random_premul(rng, n) for _ in range(3))

    def over(top_arr, bottom_arr):
        buf = bottom_arr.copy()
        _source_over(buf, top_arr)
        return buf

    left = over(over(a8, b8), c8)
    right = over(a8, over(b8, c8))
    diff = np.abs(left.astype(np.int16) - right.astype(np.int16))
    count2 = int((diff >= 2).sum())
    assert int(diff.max()) <= 1, (
        f"associativity deviation {int(diff.max())} LSB on {count2} of "
        f"{4 * n} channels; a 1-LSB max is not achievable with 8-bit "
        f"intermediate rounding (see test comment)"
    )
    ok("compositor algebra (associativity)",
       f"max deviation {int(diff.max())} LSB over {n} random pixels")
