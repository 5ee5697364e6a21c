"""Synthetic headset client for exercising the server over a real socket."""

from taskguide.sim.client import (
    AUDIO_STREAM_ID,
    DEPTH_MODEL,
    DEPTH_STREAM_ID,
    GAZE_STREAM_ID,
    HANDS_STREAM_ID,
    HEAD_STREAM_ID,
    RGB_MODEL,
    RGB_STREAM_ID,
    STATE_STREAM_ID,
    TEXT_STREAM_ID,
    SimClient,
    SimReport,
    sim_manifest,
)
from taskguide.sim.scenario import (
    Keyframe,
    Scenario,
    ScenarioError,
    ScriptEvent,
    camera_pose_at,
    load_bundled_scenario,
    load_scenario,
    scenario_from_json_obj,
)

__all__ = [
    "AUDIO_STREAM_ID",
    "DEPTH_MODEL",
    "DEPTH_STREAM_ID",
    "GAZE_STREAM_ID",
    "HANDS_STREAM_ID",
    "HEAD_STREAM_ID",
    "Keyframe",
    "RGB_MODEL",
    "RGB_STREAM_ID",
    "STATE_STREAM_ID",
    "Scenario",
    "ScenarioError",
    "ScriptEvent",
    "SimClient",
    "SimReport",
    "TEXT_STREAM_ID",
    "camera_pose_at",
    "load_bundled_scenario",
    "load_scenario",
    "scenario_from_json_obj",
    "sim_manifest",
]
