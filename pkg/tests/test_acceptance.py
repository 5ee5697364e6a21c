"""Acceptance checks, one per shipping criterion, each printing a PASS/FAIL line.

These run the package the way a release gate would: real sockets, real stores,
brute-force oracles, wall-clock budgets. Run with -s to watch the lines appear.
"""

from __future__ import annotations

import json
import os
import random
import signal
import subprocess
import sys
import threading
import time
from importlib import resources
from pathlib import Path

import numpy as np
import pytest

from conftest import free_port
from oracles import (
    backproject_pixel,
    centroid,
    subcloud_pixel_set,
    track_objects,
)
from taskguide.geometry import (
    CameraModel,
    Detection3d,
    ObjectTracker,
    Pose,
    backproject_depth,
    centroid_of,
    mask_subcloud,
    project_points,
)
from taskguide.runtime import (
    GeometryConfig,
    ServerConfig,
    SessionPipeline,
    SessionServer,
    run_replay,
)
from taskguide.scene import SphereObject, SphereScene, render_depth_z, render_label_masks, to_depth16
from taskguide.services import (
    MockDetector,
    MockLlm,
    PromptError,
    load_llm_fixtures,
    load_prompt_library,
    render_prompt,
)
from taskguide.sim import SimClient, load_bundled_scenario
from taskguide.store import SessionReader, check_session
from taskguide.store.layout import stream_log_name
from taskguide.tasks import load_bundled_library
from taskguide.wire import (
    AudioPayload,
    CameraFramePayload,
    CrcMismatch,
    GazePayload,
    HandsPayload,
    InterfaceStatePayload,
    PixelEncoding,
    PosePayload,
    SensorEnvelope,
    SynthesisEvent,
    TextInputPayload,
    canonical_json_bytes,
    decode_envelope,
    encode_envelope,
    encode_payload,
    nv12_size,
)
from taskguide.wire.payloads import decode_audio

ROOT = Path(__file__).parent.parent
NS = 1_000_000_000


def _report(n: int, desc: str, ok: bool, detail: str = "") -> None:
    line = f"ACCEPTANCE {n}: {'PASS' if ok else 'FAIL'} - {desc}"
    if detail:
        line += f" [{detail}]"
    print(line)
    assert ok, line


def _sim_fixtures() -> dict[str, str]:
    ref = resources.files("taskguide.sim").joinpath("data/fixtures.json")
    with resources.as_file(ref) as path:
        return load_llm_fixtures(path)


def _record_live(scenario_name: str, store_root: Path) -> Path:
    scenario = load_bundled_scenario(scenario_name)
    config = ServerConfig(listen_port=0, store_root=store_root)
    server = SessionServer(
        config, llm=MockLlm(_sim_fixtures()), detector=MockDetector(scenario.scene)
    )
    server.start()
    try:
        SimClient("127.0.0.1", server.listen_port, scenario).run()
        assert server.wait(120.0), "live session did not finish"
        assert server.error is None, f"live session failed: {server.error}"
        assert server.pipeline.session_dir is not None
        return server.pipeline.session_dir
    finally:
        server.close()


def _replay_with_mocks(session_dir: Path, out_root: Path, scene: SphereScene) -> Path:
    pipeline = SessionPipeline(
        store_root=out_root,
        library=load_bundled_library(),
        mode="library",
        llm=MockLlm(_sim_fixtures()),
        detector=MockDetector(scene),
        transcriber=None,
        geometry=GeometryConfig(),
    )
    new_dir, _ = run_replay(session_dir, pipeline)
    return new_dir


@pytest.fixture(scope="module")
def coffee_session(tmp_path_factory) -> Path:
    return _record_live("coffee", tmp_path_factory.mktemp("coffee-live"))


@pytest.fixture(scope="module")
def reference_session(tmp_path_factory) -> Path:
    return _record_live("reference", tmp_path_factory.mktemp("reference-live"))


# -- 1: protocol round-trip ------------------------------------------------------


def _random_rigid(rng: random.Random) -> Pose:
    eye = np.array([rng.uniform(-2, 2) for _ in range(3)])
    target = eye + np.array([rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.2, 2)])
    return Pose.look_at(eye, target)


def _random_payload(rng: random.Random):
    kind = rng.randrange(9)
    if kind == 0:
        w, h = 8, 6
        return CameraFramePayload(
            PixelEncoding.NV12, w, h, 50.0, 50.0, 4.0, 3.0,
            _random_rigid(rng).matrix, rng.randbytes(nv12_size(w, h)),
        )
    if kind == 1:
        w, h = 8, 6
        depth = np.array([rng.randrange(0, 5000) for _ in range(w * h)], dtype=np.uint16)
        return CameraFramePayload(
            PixelEncoding.DEPTH16, w, h, 50.0, 50.0, 4.0, 3.0,
            _random_rigid(rng).matrix, depth.tobytes(),
        )
    if kind == 2:
        pose = _random_rigid(rng)
        return GazePayload(pose.translation, pose.rotation[:, 2])
    if kind == 3:
        return PosePayload(_random_rigid(rng).matrix)
    if kind == 4:
        joints = np.tile(_random_rigid(rng).matrix, (26, 1, 1))
        left = joints if rng.random() < 0.7 else None
        right = np.tile(_random_rigid(rng).matrix, (26, 1, 1)) if rng.random() < 0.7 else None
        return HandsPayload(left, right)
    if kind == 5:
        samples = np.array([rng.uniform(-1, 1) for _ in range(rng.randrange(1, 64))], dtype=np.float32)
        return AudioPayload(16000, samples)
    if kind == 6:
        return TextInputPayload("".join(rng.choice("abcdef ") for _ in range(rng.randrange(1, 40))))
    if kind == 7:
        synthesis = None
        if rng.random() < 0.5:
            synthesis = SynthesisEvent(rng.randrange(1, 100), rng.choice(["started", "finished"]))
        pose = None
        if rng.random() < 0.5:
            pose = tuple(float(x) for x in _random_rigid(rng).matrix.ravel())
        return InterfaceStatePayload(rng.random() < 0.5, pose, synthesis)
    return None  # JSON payload, built inline


def test_criterion_01_protocol_round_trip():
    rng = random.Random(0xACCE01)
    started = time.monotonic()
    n = 10_000
    corrupted_checked = 0
    t = 0
    for i in range(n):
        payload_obj = _random_payload(rng)
        if payload_obj is None:
            payload = canonical_json_bytes({"type": "marker", "n": rng.randrange(1000)})
        else:
            payload = encode_payload(payload_obj)
        t += rng.randrange(1, 1000)
        env = SensorEnvelope(rng.randrange(0, 1000), t, payload)
        frame = encode_envelope(env)
        decoded, consumed = decode_envelope(frame)
        assert consumed == len(frame)
        assert decoded == env

        if i % 5 == 0:
            # Any flipped bit under CRC cover must surface as CrcMismatch:
            # everything except the magic, version, and length framing fields.
            corrupt = bytearray(frame)
            spots = [5, 6, *range(7, 15), *range(19, len(frame))]
            pos = rng.choice(spots)
            corrupt[pos] ^= 1 << rng.randrange(8)
            with pytest.raises(CrcMismatch):
                decode_envelope(bytes(corrupt))
            corrupted_checked += 1

    elapsed = time.monotonic() - started
    _report(
        1,
        "10k random envelopes round-trip; corrupted frames raise CrcMismatch; < 10 s",
        elapsed < 10.0,
        f"{n} envelopes, {corrupted_checked} corruptions, {elapsed:.2f}s",
    )


# -- 2: stream-rate fidelity -----------------------------------------------------


def test_criterion_02_stream_rates(reference_session):
    reader = SessionReader(reference_session)
    duration_s = 60.0
    failures = []
    checked = []
    for desc in reader.manifest.streams:
        if desc.nominal_rate_hz is None:
            continue
        count = reader.catalog.stats[desc.stream_id].count
        expected = desc.nominal_rate_hz * duration_s
        off = abs(count - expected) / expected
        checked.append(f"{desc.name}={count}")
        if off > 0.02:
            failures.append(f"{desc.name}: {count} vs {expected:.0f}")

    audio_id = next(d.stream_id for d in reader.manifest.streams if d.name == "audio")
    samples = sum(len(decode_audio(bytes(env.payload)).samples) for env in reader.iter_stream(audio_id))
    expected_samples = 16000 * duration_s
    if abs(samples - expected_samples) / expected_samples > 0.02:
        failures.append(f"audio samples: {samples} vs {expected_samples:.0f}")
    checked.append(f"audio_samples={samples}")

    _report(2, "60 s session stream counts within 2% of nominal rates", not failures,
            "; ".join(failures) or ", ".join(checked))


# -- 3: replay determinism ---------------------------------------------------------


def test_criterion_03_replay_determinism(coffee_session, tmp_path):
    scene = load_bundled_scenario("coffee").scene
    r1 = _replay_with_mocks(coffee_session, tmp_path / "r1", scene)
    r2 = _replay_with_mocks(coffee_session, tmp_path / "r2", scene)

    log = stream_log_name(200)
    live_bytes = (coffee_session / log).read_bytes()
    r1_bytes = (r1 / log).read_bytes()
    r2_bytes = (r2 / log).read_bytes()

    ok = r1_bytes == r2_bytes and live_bytes == r1_bytes
    _report(3, "replay x2 and live-vs-replay command logs byte-identical",
            ok, f"{len(live_bytes)} bytes")


# -- 4: back-projection oracle -----------------------------------------------------


def test_criterion_04_backprojection_oracle():
    rng = random.Random(0xACCE04)
    depth_model = CameraModel(width=160, height=120, fx=110.0, fy=110.0, cx=80.0, cy=60.0)
    rgb_model = CameraModel(width=200, height=150, fx=150.0, fy=150.0, cx=100.0, cy=75.0)
    max_range_mm = 4000
    started = time.monotonic()

    scenes = 0
    objects_checked = 0
    worst_err = 0.0
    for _ in range(100):
        spheres = tuple(
            SphereObject(f"obj{k}", np.array([rng.uniform(-0.7, 0.7), rng.uniform(0.7, 1.5), rng.uniform(1.3, 2.6)]), rng.uniform(0.06, 0.2))
            for k in range(rng.randrange(1, 4))
        )
        scene = SphereScene(spheres)
        eye = np.array([rng.uniform(-0.3, 0.3), rng.uniform(1.2, 1.7), rng.uniform(-0.3, 0.3)])
        depth_pose = Pose.look_at(eye, np.array([0.0, 1.1, 1.9]))
        rgb_pose = depth_pose.compose(Pose.from_rotation_translation(np.eye(3), np.array([0.02, 0.0, 0.0])))

        depth16 = to_depth16(render_depth_z(scene, depth_model, depth_pose))
        masks = render_label_masks(scene, rgb_model, rgb_pose, [s.label for s in spheres], max_range_mm)
        cloud = backproject_depth(depth16, depth_model, depth_pose, max_range_mm)
        scenes += 1

        depth_cam = {"width": depth_model.width, "height": depth_model.height,
                     "fx": depth_model.fx, "fy": depth_model.fy, "cx": depth_model.cx, "cy": depth_model.cy}
        rgb_cam = {"width": rgb_model.width, "height": rgb_model.height,
                   "fx": rgb_model.fx, "fy": rgb_model.fy, "cx": rgb_model.cx, "cy": rgb_model.cy}
        dp16 = [float(x) for x in depth_pose.matrix.ravel()]
        rp16 = [float(x) for x in rgb_pose.matrix.ravel()]

        for label, mask in masks.items():
            if not mask.any():
                continue
            idx = mask_subcloud(cloud, mask, rgb_model, rgb_pose)
            if len(idx) < 3:
                continue
            got_pixels = {(int(u), int(v)) for u, v in cloud.pixels[idx]}
            want_pixels = subcloud_pixel_set(depth16, depth_cam, dp16, mask, rgb_cam, rp16, max_range_mm)
            assert got_pixels == want_pixels, f"pixel sets differ for {label}"

            got_centroid = centroid_of(cloud, idx)
            pts = [backproject_pixel(u, v, float(depth16[v, u]), depth_model.fx, depth_model.fy,
                                     depth_model.cx, depth_model.cy, dp16) for u, v in sorted(want_pixels)]
            want_centroid = centroid(pts)
            err = float(np.linalg.norm(got_centroid - np.array(want_centroid)))
            worst_err = max(worst_err, err)
            assert err <= 0.01, f"{label}: centroid off by {err * 100:.2f} cm"
            objects_checked += 1

    elapsed = time.monotonic() - started
    _report(4, "100 scenes: centroids within 1 cm of per-pixel oracle, pixel sets exact, < 60 s",
            elapsed < 60.0 and objects_checked > 50,
            f"{scenes} scenes, {objects_checked} objects, worst {worst_err * 1000:.3f} mm, {elapsed:.1f}s")


# -- 5: projection inverse ----------------------------------------------------------


def test_criterion_05_projection_inverse():
    rng = random.Random(0xACCE05)
    worst = 0.0
    for _ in range(20):
        w = rng.randrange(32, 320)
        h = rng.randrange(32, 240)
        model = CameraModel(
            width=w, height=h,
            fx=rng.uniform(40, 800), fy=rng.uniform(40, 800),
            cx=w / 2 + rng.uniform(-2, 2), cy=h / 2 + rng.uniform(-2, 2),
        )
        pose = _random_rigid(rng)
        depth = np.array(
            [[rng.randrange(200, 4000) for _ in range(w)] for _ in range(h)], dtype=np.uint16
        )
        cloud = backproject_depth(depth, model, pose)
        assert len(cloud) == w * h  # every pixel valid by construction
        uv, valid = project_points(cloud.points_world, model, pose)
        assert valid.all()
        err = float(np.abs(uv - cloud.pixels).max())
        worst = max(worst, err)
    _report(5, "project(backproject) round-trip < 1e-4 px over 20 random cameras",
            worst < 1e-4, f"worst {worst:.2e} px")


# -- 6: golden transcript -------------------------------------------------------------


def test_criterion_06_golden_transcript(coffee_session):
    golden = json.loads((ROOT / "goldens" / "coffee_commands.json").read_text(encoding="utf-8"))
    reader = SessionReader(coffee_session)
    got = [json.loads(bytes(env.payload)) for env in reader.iter_stream(200)]
    ok = got == golden
    detail = f"{len(got)} commands"
    if not ok:
        for i, (g, w) in enumerate(zip(got, golden)):
            if g != w:
                detail = f"first diff at {i}: got {json.dumps(g)[:80]} want {json.dumps(w)[:80]}"
                break
        else:
            detail = f"length {len(got)} vs {len(golden)}"
    _report(6, "coffee scenario command transcript matches frozen golden", ok, detail)


# -- 7: prompt regression --------------------------------------------------------------


def test_criterion_07_prompt_regression():
    golden = json.loads((ROOT / "goldens" / "prompts.json").read_text(encoding="utf-8"))
    library = load_prompt_library()
    mismatches = []
    for case in golden["renders"]:
        text = render_prompt(library.get(case["template_id"]), case["bindings"])
        if text != case["expected"]:
            mismatches.append(case["template_id"])

    rejected = 0
    for case in golden["renders"]:
        template = library.get(case["template_id"])
        try:
            render_prompt(template, {**case["bindings"], "no_such_slot": "x"})
        except PromptError:
            rejected += 1
        try:
            render_prompt(template, {})
        except PromptError:
            rejected += 1

    ok = not mismatches and rejected == 2 * len(golden["renders"])
    _report(7, "all templates render golden strings; bad bindings rejected", ok,
            f"{len(golden['renders'])} templates" if ok else f"mismatches: {mismatches}")


# -- 8: tracking oracle ------------------------------------------------------------------


def test_criterion_08_tracking_oracle():
    rng = random.Random(0xACCE08)
    labels = ["mug", "kettle", "plate", "spoon"]
    anchors = {label: np.array([rng.uniform(-1, 1), 1.0, rng.uniform(1, 2)]) for label in labels}

    tracker = ObjectTracker(merge_radius_m=0.25, smoothing_alpha=0.5)
    observations = []
    got_events = []
    for i in range(500):
        label = rng.choice(labels)
        # Near an anchor half the time (revisits), anywhere otherwise (new tracks).
        if rng.random() < 0.5:
            pos = anchors[label] + np.array([rng.gauss(0, 0.08) for _ in range(3)])
        else:
            pos = np.array([rng.uniform(-2, 2), rng.uniform(0, 2), rng.uniform(0.5, 3)])
        pos_t = (float(pos[0]), float(pos[1]), float(pos[2]))
        observations.append((label, pos_t))
        got_events.extend(tracker.update([Detection3d(label, pos, 10)], time_ns=i))

    want_tracks, want_events = track_objects(observations, merge_radius=0.25, alpha=0.5)

    events_match = len(got_events) == len(want_events) and all(
        g.track_id == w[0] and g.label == w[1] and np.allclose(g.position, w[2], atol=1e-9)
        for g, w in zip(got_events, want_events)
    )
    tracks_match = len(tracker.tracks) == len(want_tracks) and all(
        np.allclose(tracker.tracks[t["track_id"]].centroid, t["centroid"], atol=1e-9)
        and tracker.tracks[t["track_id"]].label == t["label"]
        for t in want_tracks
    )
    _report(8, "500 detection events: assignments equal brute-force matcher",
            events_match and tracks_match,
            f"{len(got_events)} tracks created, {len(observations)} observations")


# -- 9: throughput ------------------------------------------------------------------------


def test_criterion_09_throughput(reference_session, tmp_path):
    scene = load_bundled_scenario("reference").scene
    started = time.monotonic()
    new_dir = _replay_with_mocks(reference_session, tmp_path / "replay", scene)
    elapsed = time.monotonic() - started
    assert check_session(new_dir).ok
    _report(9, "as-fast replay of the 60 s reference session within 12 s",
            elapsed <= 12.0, f"{elapsed:.2f}s ({60.0 / elapsed:.1f}x real time)")


# -- 10: crash consistency ----------------------------------------------------------------


def _run_sim_quietly(port: int, stop: threading.Event) -> threading.Thread:
    # No health probe: the server accepts a single client per run, so a probe
    # connection would consume the session slot. Retry until the port binds.
    def run():
        deadline = time.monotonic() + 20
        try:
            while True:
                try:
                    SimClient("127.0.0.1", port, load_bundled_scenario("coffee"), time_scale=0.08).run()
                    return
                except ConnectionRefusedError:
                    if time.monotonic() > deadline:
                        raise
                    time.sleep(0.05)
        except OSError:
            pass  # server killed under us: expected
        finally:
            stop.set()

    t = threading.Thread(target=run, daemon=True)
    t.start()
    return t


def test_criterion_10_crash_consistency(tmp_path):
    rng = random.Random(0xACCE10)
    runs = 20
    problems = []
    killed_mid_session = 0
    for i in range(runs):
        root = tmp_path / f"run{i}"
        port = free_port()
        proc = subprocess.Popen(
            [sys.executable, "-m", "taskguide.cli", "serve",
             "--port", str(port), "--ws-port", str(free_port()), "--store-root", str(root)],
            stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL,
        )
        try:
            done = threading.Event()
            sim = _run_sim_quietly(port, done)

            # Wait until the session exists on disk, then kill at a random point.
            deadline = time.monotonic() + 20
            while not list(root.glob("*/catalog.json")):
                assert time.monotonic() < deadline, "no session appeared"
                time.sleep(0.02)
            time.sleep(rng.uniform(0.05, 1.2))
            if proc.poll() is None:
                killed_mid_session += 1
            proc.send_signal(signal.SIGKILL)
            proc.wait(timeout=10)
            done.wait(timeout=15)
            sim.join(timeout=15)
        finally:
            if proc.poll() is None:
                proc.kill()
                proc.wait(timeout=10)

        session_dirs = [p.parent for p in root.glob("*/catalog.json")]
        assert len(session_dirs) == 1, f"run {i}: expected one session, saw {len(session_dirs)}"
        report = check_session(session_dirs[0])
        if not report.ok:
            problems.append(f"run {i}: {report.all_problems()[:2]}")

    _report(10, "20 randomly-timed SIGKILLs always leave a checkable store",
            not problems, "; ".join(problems) or f"{killed_mid_session}/{runs} killed mid-session")
