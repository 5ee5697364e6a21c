"""Re-derive a recorded session offline.

Replay feeds every input-kind stream of a recorded session back through a
fresh pipeline in (time, stream_id) order. With mock services the derived
streams come out byte-identical run after run; only the new session id (and
therefore the catalog) differs from the recording.
"""

from __future__ import annotations

from pathlib import Path

from ..store import AS_FAST, Pacing, SessionReader, paced
from ..wire import CLIENT_KINDS, StreamManifest, encode_manifest_envelope
from .pipeline import PipelineReport, SessionPipeline


class ReplayError(RuntimeError):
    pass


def input_stream_ids(manifest: StreamManifest) -> list[int]:
    return [s.stream_id for s in manifest.streams if s.kind in CLIENT_KINDS]


def run_replay(
    session_dir: Path,
    pipeline: SessionPipeline,
    pacing: Pacing = AS_FAST,
) -> tuple[Path, PipelineReport]:
    """Feed a recorded session through `pipeline`. Returns (new session dir, report)."""
    reader = SessionReader(Path(session_dir))
    ids = input_stream_ids(reader.manifest)
    if not ids:
        raise ReplayError(f"{session_dir}: no input streams to replay")
    input_manifest = StreamManifest(
        session_id=reader.manifest.session_id,
        epoch_utc_us=reader.manifest.epoch_utc_us,
        streams=tuple(s for s in reader.manifest.streams if s.stream_id in set(ids)),
    )
    # The manifest handshake is not persisted as a stream, so re-synthesize it;
    # process() treats it exactly like a live handshake (fresh session id).
    pipeline.process(encode_manifest_envelope(input_manifest))
    for env in paced(reader.iter_merged(stream_ids=ids), pacing):
        pipeline.process(env)
    report = pipeline.finish()
    assert pipeline.session_dir is not None
    return pipeline.session_dir, report
