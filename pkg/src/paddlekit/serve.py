"""Inference service: upload a five-file session, poll status, fetch the
analysis, graph payloads, and optional LLM feedback.

The model bundle (one trained model per phase plus the feature registry) is
immutable shared state; each uploaded session is processed in a worker
thread and stored under an opaque id.  LLM feedback degrades to a
deterministic offline template on any provider failure.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse
from starlette.datastructures import UploadFile

from .channels import Axis, ChannelId, Device, Sensor, parse_channel_name
from .errors import NoAcceptedStrokes, PaddlekitError
from .features import FeatureRegistry, StatKind, featurize_phase
from .ingest import (
    AlignedSession,
    SourceFormat,
    TrialLabel,
    TRIAL_ROLES,
    load_trial,
    trial_inputs_from_payloads,
)
from .models import TrainedModel, load_model, predict, save_model
from .segment import PHASES, Phase, SegmentationParams, StrokeRecord, segment_session, standardize

logger = logging.getLogger(__name__)

MAX_UPLOAD_BYTES = 64 * 1024 * 1024
MAX_DISPLAY_STROKES = 8
GRAPH_POINTS_PER_STROKE = 100

GRAPH_CHANNELS = (
    ChannelId(Device.LEFT_WATCH, Sensor.QUATERNION, Axis.X),
    ChannelId(Device.LEFT_WATCH, Sensor.QUATERNION, Axis.W),
    ChannelId(Device.LEFT_WATCH, Sensor.ACCELEROMETER, Axis.Y),
)

PROMPT_VERSION = 1
_PROMPT_TEMPLATE = """You are a paddling coach reviewing one training session.
Quantitative results: overall {overall:g}% of stroke phases look optimal.
Per phase: {per_phase}.
Below are downsampled sensor traces for the selected strokes and a reference
optimal stroke. Compare them and give short, actionable technique feedback.
{traces}
"""


class SessionStatus(Enum):
    PROCESSING = "processing"
    READY = "ready"
    FAILED = "failed"


# --- model bundle ----------------------------------------------------------

_BUNDLE_FILES = {ph: f"{ph.value}.strkmdl" for ph in PHASES}
_REGISTRY_FILE = "registry.json"


@dataclass(frozen=True)
class ModelBundle:
    models: dict[Phase, TrainedModel]
    registry: FeatureRegistry

    def __post_init__(self) -> None:
        digests = {m.registry_digest for m in self.models.values()}
        if digests != {self.registry.digest}:
            raise PaddlekitError("bundle models disagree on the feature registry")
        if set(self.models) != set(PHASES):
            raise PaddlekitError("bundle needs one model per phase")

    def save(self, directory: Path | str) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / _REGISTRY_FILE).write_text(
            json.dumps({"v": 1, "entries": self.registry.names}, indent=2),
            encoding="utf-8",
        )
        for phase, filename in _BUNDLE_FILES.items():
            (directory / filename).write_bytes(save_model(self.models[phase]))

    @classmethod
    def load(cls, directory: Path | str) -> "ModelBundle":
        directory = Path(directory)
        doc = json.loads((directory / _REGISTRY_FILE).read_text(encoding="utf-8"))
        entries = []
        for name in doc["entries"]:
            channel_name, _, stat = name.rpartition(".")
            entries.append((parse_channel_name(channel_name), StatKind(stat)))
        registry = FeatureRegistry(tuple(entries))
        models = {
            phase: load_model((directory / filename).read_bytes())
            for phase, filename in _BUNDLE_FILES.items()
        }
        return cls(models, registry)


# --- analysis --------------------------------------------------------------


@dataclass
class StrokePrediction:
    stroke_index: int
    phase: str
    label: str
    score: float


@dataclass
class AnalysisResult:
    per_phase_percent: dict[str, float]
    overall_percent: float
    predictions: list[StrokePrediction]
    display_strokes: list[int]
    rejected_strokes: int
    accepted_strokes: int
    feedback: str | None = None

    def as_dict(self) -> dict:
        return {
            "v": 1,
            "per_phase_percent": self.per_phase_percent,
            "overall_percent": self.overall_percent,
            "predictions": [
                {
                    "stroke": p.stroke_index,
                    "phase": p.phase,
                    "label": p.label,
                    "score": p.score,
                }
                for p in self.predictions
            ],
            "display_strokes": self.display_strokes,
            "rejected_strokes": self.rejected_strokes,
            "accepted_strokes": self.accepted_strokes,
            "feedback": self.feedback,
        }


def select_display_strokes(records: list[StrokeRecord]) -> list[int]:
    """Longest run of consecutive accepted strokes, first 8 if longer, ties
    broken by the earliest start."""
    best: list[int] = []
    current: list[int] = []
    for record in records:
        if record.accepted:
            current.append(record.index)
        else:
            if len(current) > len(best):
                best = current
            current = []
    if len(current) > len(best):
        best = current
    return best[:MAX_DISPLAY_STROKES]


def _downsample(values: np.ndarray, limit: int = GRAPH_POINTS_PER_STROKE) -> list[float]:
    if values.size <= limit:
        return [float(v) for v in values]
    idx = np.linspace(0, values.size - 1, num=limit).astype(int)
    return [float(v) for v in values[idx]]


def _load_reference_stroke() -> dict:
    raw = resources.files("paddlekit.data").joinpath("reference_stroke.json")
    return json.loads(raw.read_text(encoding="utf-8"))


def build_graphs_payload(
    session: AlignedSession, records: list[StrokeRecord], display: list[int]
) -> dict:
    """Per-channel downsampled traces for the display strokes plus the
    committed reference optimal stroke."""
    by_index = {r.index: r for r in records}
    strokes = []
    for idx in display:
        record = by_index[idx]
        traces = {}
        for channel in GRAPH_CHANNELS:
            row = session.row(channel)[record.start_frame : record.end_frame]
            traces[channel.name] = _downsample(row)
        strokes.append(
            {
                "stroke": idx,
                "frames": record.end_frame - record.start_frame,
                "traces": traces,
            }
        )
    return {"v": 1, "strokes": strokes, "reference": _load_reference_stroke()}


def analyze_session(
    payloads: dict[str, bytes],
    bundle: ModelBundle,
    params: SegmentationParams | None = None,
    fmt: SourceFormat = SourceFormat.CANONICAL,
    rate_hz: float = 50.0,
) -> tuple[AnalysisResult, AlignedSession, list[StrokeRecord]]:
    """Run the full training pipeline on uploaded files and score each
    accepted stroke's three phases against the bundle."""
    params = params or SegmentationParams()
    session = load_trial(
        trial_inputs_from_payloads(payloads, fmt), rate_hz=rate_hz, meta=TrialLabel.UNLABELED
    )
    records = segment_session(session, params)
    accepted = [r for r in records if r.accepted]
    if not accepted:
        raise NoAcceptedStrokes("every stroke was rejected during segmentation")

    predictions: list[StrokePrediction] = []
    optimal_by_phase = {ph.value: 0 for ph in PHASES}
    for record in accepted:
        matrices = standardize(session, record, params)
        for phase in PHASES:
            vector = featurize_phase(
                matrices[phase], session.registry, bundle.registry, record.index, phase
            )
            label, score = predict(bundle.models[phase], vector, bundle.registry)
            if label is TrialLabel.OPTIMAL:
                optimal_by_phase[phase.value] += 1
            predictions.append(
                StrokePrediction(record.index, phase.value, label.value, float(score))
            )

    n = len(accepted)
    per_phase = {ph: 100.0 * count / n for ph, count in optimal_by_phase.items()}
    overall = 100.0 * sum(optimal_by_phase.values()) / (3 * n)
    result = AnalysisResult(
        per_phase_percent=per_phase,
        overall_percent=overall,
        predictions=predictions,
        display_strokes=select_display_strokes(records),
        rejected_strokes=len(records) - n,
        accepted_strokes=n,
    )
    return result, session, records


# --- qualitative feedback ---------------------------------------------------


@dataclass(frozen=True)
class ProviderConfig:
    base_url: str | None = None
    api_key: str | None = None
    model: str = "deepseek-chat"
    timeout_s: float = 20.0
    offline: bool = False

    @classmethod
    def from_env(cls, env=os.environ) -> "ProviderConfig":
        return cls(
            base_url=env.get("PADDLEKIT_PROVIDER_URL") or None,
            api_key=env.get("PADDLEKIT_PROVIDER_KEY") or None,
            model=env.get("PADDLEKIT_PROVIDER_MODEL", "deepseek-chat"),
            offline=env.get("PADDLEKIT_OFFLINE", "").lower() in ("1", "true", "yes"),
        )


def offline_feedback(result: AnalysisResult) -> str:
    per_phase = "; ".join(
        f"{phase}: {pct:g}% optimal" for phase, pct in sorted(result.per_phase_percent.items())
    )
    return (
        f"Session summary: {result.overall_percent:g}% of analyzed stroke phases "
        f"look optimal ({per_phase}). "
        f"{result.accepted_strokes} strokes analyzed, {result.rejected_strokes} rejected. "
        "Focus on the phases with the lowest optimal share and compare your traces "
        "against the reference stroke."
    )


def build_prompt(result: AnalysisResult, graphs: dict) -> str:
    per_phase = "; ".join(
        f"{phase} {pct:g}%" for phase, pct in sorted(result.per_phase_percent.items())
    )
    trace_lines = []
    for stroke in graphs.get("strokes", []):
        for name, values in stroke["traces"].items():
            head = ", ".join(f"{v:.3f}" for v in values[:16])
            trace_lines.append(f"stroke {stroke['stroke']} {name}: {head}")
    reference = graphs.get("reference", {})
    for name, values in reference.get("traces", {}).items():
        head = ", ".join(f"{v:.3f}" for v in values[:16])
        trace_lines.append(f"reference {name}: {head}")
    return _PROMPT_TEMPLATE.format(
        overall=result.overall_percent, per_phase=per_phase, traces="\n".join(trace_lines)
    )


def qualitative_feedback(
    result: AnalysisResult, graphs: dict, config: ProviderConfig
) -> str:
    """One chat-completion call; network failure degrades to the offline
    template and never fails the analysis."""
    if config.offline or not config.base_url:
        return offline_feedback(result)
    try:
        import httpx

        headers = {"Content-Type": "application/json"}
        if config.api_key:
            headers["Authorization"] = f"Bearer {config.api_key}"
        response = httpx.post(
            config.base_url.rstrip("/") + "/chat/completions",
            json={
                "model": config.model,
                "messages": [
                    {"role": "user", "content": build_prompt(result, graphs)}
                ],
            },
            headers=headers,
            timeout=config.timeout_s,
        )
        response.raise_for_status()
        doc = response.json()
        return doc["choices"][0]["message"]["content"]
    except Exception:
        logger.warning("feedback provider unavailable; using offline template", exc_info=True)
        return offline_feedback(result)


# --- session store and HTTP API ---------------------------------------------


@dataclass
class SessionRecordView:
    session_id: str
    status: SessionStatus
    created_at: float
    file_digests: dict[str, str]
    error_stage: str | None = None
    error_message: str | None = None
    result: AnalysisResult | None = None
    graphs: dict | None = None

    def status_dict(self) -> dict:
        doc = {
            "v": 1,
            "id": self.session_id,
            "status": self.status.value,
            "created_at": self.created_at,
            "files": self.file_digests,
        }
        if self.status is SessionStatus.FAILED:
            doc["error"] = {"stage": self.error_stage, "message": self.error_message}
        return doc


class SessionStore:
    """In-memory session map with optional one-file-per-session persistence."""

    def __init__(self, persist_dir: Path | str | None = None) -> None:
        self._lock = threading.Lock()
        self._sessions: dict[str, SessionRecordView] = {}
        self._persist_dir = Path(persist_dir) if persist_dir else None
        if self._persist_dir:
            self._persist_dir.mkdir(parents=True, exist_ok=True)

    def create(self, file_digests: dict[str, str]) -> SessionRecordView:
        record = SessionRecordView(
            session_id=uuid.uuid4().hex,
            status=SessionStatus.PROCESSING,
            created_at=time.time(),
            file_digests=file_digests,
        )
        with self._lock:
            self._sessions[record.session_id] = record
        return record

    def get(self, session_id: str) -> SessionRecordView | None:
        with self._lock:
            return self._sessions.get(session_id)

    def update(self, record: SessionRecordView) -> None:
        with self._lock:
            self._sessions[record.session_id] = record
        if self._persist_dir:
            payload = {
                "record": record.status_dict(),
                "analysis": record.result.as_dict() if record.result else None,
            }
            path = self._persist_dir / f"{record.session_id}.json"
            path.write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")


def create_app(
    bundle: ModelBundle,
    provider: ProviderConfig | None = None,
    store: SessionStore | None = None,
    params: SegmentationParams | None = None,
    upload_format: SourceFormat = SourceFormat.CANONICAL,
    rate_hz: float = 50.0,
    max_workers: int = 2,
):
    """FastAPI application over an immutable model bundle."""
    provider = provider or ProviderConfig.from_env()
    store = store or SessionStore()
    executor = ThreadPoolExecutor(max_workers=max_workers)
    app = FastAPI(title="paddlekit", version="1")

    def _process(record: SessionRecordView, payloads: dict[str, bytes]) -> None:
        stage = "ingest"
        try:
            result, session, records = analyze_session(
                payloads, bundle, params, upload_format, rate_hz
            )
            stage = "graphs"
            record.graphs = build_graphs_payload(session, records, result.display_strokes)
            record.result = result
            record.status = SessionStatus.READY
        except PaddlekitError as exc:
            record.status = SessionStatus.FAILED
            record.error_stage = _stage_of(exc, stage)
            record.error_message = str(exc)
        except Exception as exc:  # pragma: no cover - defensive
            logger.exception("session %s failed", record.session_id)
            record.status = SessionStatus.FAILED
            record.error_stage = stage
            record.error_message = str(exc)
        store.update(record)

    def _get_or_404(session_id: str) -> SessionRecordView:
        record = store.get(session_id)
        if record is None:
            raise HTTPException(status_code=404, detail="unknown session id")
        return record

    @app.post("/api/v1/sessions")
    async def create_session(request: Request):
        form = await request.form()
        payloads = {}
        total = 0
        for role in TRIAL_ROLES:
            upload = form.get(role)
            if upload is None or not isinstance(upload, UploadFile):
                return JSONResponse(
                    status_code=400,
                    content={
                        "v": 1,
                        "error": {"stage": "upload", "message": f"missing file field {role!r}"},
                    },
                )
            data = await upload.read()
            total += len(data)
            if total > MAX_UPLOAD_BYTES:
                return JSONResponse(
                    status_code=413,
                    content={
                        "v": 1,
                        "error": {"stage": "upload", "message": "uploads exceed 64 MiB"},
                    },
                )
            payloads[role] = data
        digests = {
            role: hashlib.sha256(data).hexdigest() for role, data in payloads.items()
        }
        record = store.create(digests)
        store.update(record)
        executor.submit(_process, record, payloads)
        return {"v": 1, "id": record.session_id, "status": record.status.value}

    @app.get("/api/v1/sessions/{session_id}")
    def session_status(session_id: str):
        return _get_or_404(session_id).status_dict()

    @app.get("/api/v1/sessions/{session_id}/analysis")
    def session_analysis(session_id: str):
        record = _get_or_404(session_id)
        if record.status is not SessionStatus.READY or record.result is None:
            raise HTTPException(status_code=409, detail=f"session is {record.status.value}")
        return record.result.as_dict()

    @app.get("/api/v1/sessions/{session_id}/graphs")
    def session_graphs(session_id: str):
        record = _get_or_404(session_id)
        if record.status is not SessionStatus.READY or record.graphs is None:
            raise HTTPException(status_code=409, detail=f"session is {record.status.value}")
        return record.graphs

    @app.post("/api/v1/sessions/{session_id}/feedback")
    def session_feedback(session_id: str):
        record = _get_or_404(session_id)
        if record.status is not SessionStatus.READY or record.result is None:
            raise HTTPException(status_code=409, detail=f"session is {record.status.value}")
        text = qualitative_feedback(record.result, record.graphs or {}, provider)
        record.result.feedback = text
        store.update(record)
        return {"v": 1, "id": session_id, "feedback": text}

    return app


def _stage_of(exc: PaddlekitError, fallback: str) -> str:
    from . import errors

    stage_by_type = {
        errors.MissingTimeColumn: "parse",
        errors.EmptyFile: "parse",
        errors.NonMonotonicTime: "parse",
        errors.BadTrialInput: "upload",
        errors.NoTemporalOverlap: "align",
        errors.MissingRequiredChannel: "align",
        errors.NoAcceptedStrokes: "segment",
        errors.MissingChannel: "featurize",
        errors.RegistryMismatch: "predict",
    }
    return stage_by_type.get(type(exc), fallback)


def main() -> None:  # pragma: no cover - thin runtime wrapper
    import uvicorn

    bundle = ModelBundle.load(os.environ["PADDLEKIT_BUNDLE"])
    listen = os.environ.get("PADDLEKIT_LISTEN", "127.0.0.1:8000")
    host, _, port = listen.partition(":")
    store_dir = os.environ.get("PADDLEKIT_SESSION_DIR") or None
    app = create_app(bundle, store=SessionStore(store_dir))
    uvicorn.run(app, host=host, port=int(port or 8000))
