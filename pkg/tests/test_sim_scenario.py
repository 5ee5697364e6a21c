"""Scenario parsing and the simulator's manifest."""

from __future__ import annotations

import numpy as np
import pytest

from taskguide.sim import (
    ScenarioError,
    camera_pose_at,
    load_bundled_scenario,
    scenario_from_json_obj,
    sim_manifest,
)
from taskguide.wire import CLIENT_KINDS, decode_manifest_envelope, encode_manifest_envelope


def minimal_obj() -> dict:
    return {
        "schema": 1,
        "duration_s": 10.0,
        "scene": {"objects": [{"label": "mug", "center": [0.0, 1.0, 2.0], "radius_m": 0.1}]},
        "camera": {
            "keyframes": [
                {"at_s": 0.0, "position": [0.0, 1.5, 0.0], "look_at": [0.0, 1.0, 2.0]},
                {"at_s": 10.0, "position": [1.0, 1.5, 0.0], "look_at": [0.0, 1.0, 2.0]},
            ]
        },
        "events": [{"at_s": 3.0, "say": "hello"}],
    }


class TestScenarioParsing:
    def test_minimal_scenario_parses(self):
        sc = scenario_from_json_obj(minimal_obj(), name="unit")
        assert sc.name == "unit"
        assert sc.duration_s == 10.0
        assert len(sc.scene.objects) == 1
        assert len(sc.keyframes) == 2
        assert sc.events[0].say == "hello"
        assert sc.events[0].palm_open is None

    def test_palm_event(self):
        obj = minimal_obj()
        obj["events"] = [{"at_s": 1.0, "palm_open": True}]
        sc = scenario_from_json_obj(obj)
        assert sc.events[0].palm_open is True
        assert sc.events[0].say is None

    @pytest.mark.parametrize(
        "mutate,needle",
        [
            (lambda o: o.update(schema=2), "schema"),
            (lambda o: o.update(duration_s=0), "duration_s"),
            (lambda o: o["camera"].update(keyframes=[]), "keyframe"),
            (
                lambda o: o["camera"]["keyframes"].append(
                    {"at_s": 5.0, "position": [0, 0, 0], "look_at": [0, 0, 1]}
                ),
                "increasing",
            ),
            (lambda o: o["events"].append({"at_s": 99.0, "say": "late"}), "duration"),
            (lambda o: o["events"].insert(0, {"at_s": 9.0, "say": "x"}), "time order"),
            (lambda o: o["events"].append({"at_s": 4.0}), "say"),
            (lambda o: o["events"].append({"at_s": 4.0, "say": ""}), "say"),
            (lambda o: o["events"].append({"at_s": 4.0, "palm_open": "yes"}), "palm_open"),
            (lambda o: o["camera"]["keyframes"][0].update(position=[1, 2]), "position"),
        ],
    )
    def test_rejects_malformed(self, mutate, needle):
        obj = minimal_obj()
        mutate(obj)
        with pytest.raises(ScenarioError, match=needle):
            scenario_from_json_obj(obj)

    def test_bundled_scenarios_load(self):
        for name in ("coffee", "reference"):
            sc = load_bundled_scenario(name)
            assert sc.name == name
            assert sc.duration_s > 0
            assert sc.keyframes[0].at_s == 0.0

    def test_unknown_bundled_name(self):
        with pytest.raises(ScenarioError):
            load_bundled_scenario("nope")


class TestCameraPath:
    def test_interpolates_position(self):
        sc = scenario_from_json_obj(minimal_obj())
        mid = camera_pose_at(sc, 5.0)
        np.testing.assert_allclose(mid.translation, [0.5, 1.5, 0.0], atol=1e-9)

    def test_clamps_outside_range(self):
        sc = scenario_from_json_obj(minimal_obj())
        before = camera_pose_at(sc, -1.0)
        after = camera_pose_at(sc, 99.0)
        np.testing.assert_allclose(before.translation, [0.0, 1.5, 0.0])
        np.testing.assert_allclose(after.translation, [1.0, 1.5, 0.0])

    def test_pose_stays_orthonormal(self):
        sc = scenario_from_json_obj(minimal_obj())
        for t in np.linspace(0.0, 10.0, 21):
            rot = camera_pose_at(sc, float(t)).rotation
            np.testing.assert_allclose(rot @ rot.T, np.eye(3), atol=1e-9)
            assert np.linalg.det(rot) > 0.9

    def test_looks_at_target(self):
        # +z axis of the camera frame points from the camera to the target.
        sc = scenario_from_json_obj(minimal_obj())
        pose = camera_pose_at(sc, 0.0)
        forward = pose.rotation[:, 2]
        want = np.array([0.0, 1.0, 2.0]) - pose.translation
        want /= np.linalg.norm(want)
        np.testing.assert_allclose(forward, want, atol=1e-9)


class TestSimManifest:
    def test_covers_client_kinds(self):
        m = sim_manifest(session_id="a" * 32)
        assert m.session_id == "a" * 32
        assert {d.stream_id for d in m.streams} == set(range(1, 9))
        kinds = {d.kind for d in m.streams}
        assert kinds <= set(CLIENT_KINDS)
        # Everything but the optional preview camera is simulated.
        assert len(kinds) == len(CLIENT_KINDS) - 1

    def test_round_trips_on_the_wire(self):
        m = sim_manifest(session_id="b" * 32)
        env = encode_manifest_envelope(m)
        assert decode_manifest_envelope(env) == m

    def test_sensor_rates_declared(self):
        m = sim_manifest()
        by_name = {d.name: d for d in m.streams}
        assert by_name["depth_camera"].nominal_rate_hz == 5.0
        assert by_name["eye_gaze"].nominal_rate_hz == 30.0
        assert by_name["text_input"].nominal_rate_hz is None
