"""Server configuration: a single JSON document validated by pydantic.

Backends are selected by name so a recorded session can be replayed with mock
services regardless of how it was originally served.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

from ..scene import SphereScene
from ..services import (
    HttpDetector,
    HttpLlm,
    HttpTranscriber,
    MockDetector,
    MockLlm,
    MockTranscriber,
    load_llm_fixtures,
)
from ..tasks import TaskLibrary, load_bundled_library, load_library


class ConfigError(ValueError):
    pass


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class LlmBackendConfig(_Model):
    backend: Literal["mock", "http"] = "mock"
    fixtures_path: Path | None = None  # mock: fixture_key -> completion text
    base_url: str | None = None  # http
    timeout_s: float = Field(default=30.0, gt=0)


class DetectorBackendConfig(_Model):
    backend: Literal["mock", "http", "off"] = "mock"
    scene_path: Path | None = None  # mock: scene the scripted detector "sees"
    base_url: str | None = None  # http
    timeout_s: float = Field(default=30.0, gt=0)


class AsrBackendConfig(_Model):
    backend: Literal["mock", "http"] = "mock"
    base_url: str | None = None
    timeout_s: float = Field(default=30.0, gt=0)


class GeometryConfig(_Model):
    sync_tolerance_ms: float = Field(default=20.0, gt=0)
    merge_radius_m: float = Field(default=0.25, gt=0)
    smoothing_alpha: float = Field(default=0.5, gt=0, le=1)
    min_points: int = Field(default=10, ge=1)
    max_range_mm: int = Field(default=4000, gt=0)


class ServerConfig(_Model):
    listen_host: str = "127.0.0.1"
    listen_port: int = Field(default=7600, ge=0, le=65535)
    ws_host: str = "127.0.0.1"
    ws_port: int = Field(default=7601, ge=0, le=65535)
    store_root: Path = Path("sessions")
    task_library_path: Path | None = None  # None: the small built-in library
    mode: Literal["library", "generated"] = "library"
    llm: LlmBackendConfig = LlmBackendConfig()
    detector: DetectorBackendConfig = DetectorBackendConfig()
    asr: AsrBackendConfig = AsrBackendConfig()
    geometry: GeometryConfig = GeometryConfig()


def load_config(path: Path) -> ServerConfig:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return ServerConfig.model_validate(obj)


def load_scene(path: Path) -> SphereScene:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read scene {path}: {exc}") from exc
    return SphereScene.from_json_obj(obj)


def build_llm(config: LlmBackendConfig):
    if config.backend == "mock":
        fixtures = load_llm_fixtures(config.fixtures_path) if config.fixtures_path else {}
        return MockLlm(fixtures)
    if config.base_url is None:
        raise ConfigError("llm.base_url is required for the http backend")
    return HttpLlm(config.base_url, timeout_s=config.timeout_s)


def build_detector(config: DetectorBackendConfig):
    if config.backend == "off":
        return None
    if config.backend == "mock":
        scene = load_scene(config.scene_path) if config.scene_path else SphereScene(())
        return MockDetector(scene)
    if config.base_url is None:
        raise ConfigError("detector.base_url is required for the http backend")
    return HttpDetector(config.base_url, timeout_s=config.timeout_s)


def build_transcriber(config: AsrBackendConfig):
    if config.backend == "mock":
        return MockTranscriber()
    if config.base_url is None:
        raise ConfigError("asr.base_url is required for the http backend")
    return HttpTranscriber(config.base_url, timeout_s=config.timeout_s)


def build_library(config: ServerConfig) -> TaskLibrary:
    if config.task_library_path is None:
        return load_bundled_library()
    return load_library(config.task_library_path)
