"""Stroke and phase segmentation over an aligned session.

Strokes come from thresholding the smoothed left-watch quaternion X
component (peaks mark inter-stroke gaps); phases come from the extrema of
the smoothed quaternion W within each stroke: the catch descends to a
minimum, the pull climbs to a maximum, the recovery falls away.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .channels import LEFT_QUAT_W, LEFT_QUAT_X
from .errors import EmptyPhase
from .ingest import AlignedSession

DEFAULT_STANDARD_FRAMES = 40


@dataclass(frozen=True)
class SegmentationParams:
    smooth_window_frames: int = 5
    gap_threshold_sigma: float = 0.5
    min_gap_frames: int = 10
    min_stroke_s: float = 0.5
    max_stroke_s: float = 5.0
    catch_search_fraction: float = 0.6
    min_phase_frames: int = 8
    standard_frames: int = DEFAULT_STANDARD_FRAMES

    def __post_init__(self) -> None:
        if self.smooth_window_frames < 1 or self.smooth_window_frames % 2 == 0:
            raise ValueError("smooth_window_frames must be odd and positive")
        if self.min_gap_frames < 1 or self.min_phase_frames < 1:
            raise ValueError("frame thresholds must be positive")
        if not (0 < self.min_stroke_s < self.max_stroke_s):
            raise ValueError("need 0 < min_stroke_s < max_stroke_s")
        if not (0 < self.catch_search_fraction <= 1):
            raise ValueError("catch_search_fraction must lie in (0, 1]")
        if self.standard_frames < self.min_phase_frames:
            raise ValueError("standard_frames must be >= min_phase_frames")


class Phase(Enum):
    CATCH = "catch"
    PULL = "pull"
    RECOVERY = "recovery"


PHASES = (Phase.CATCH, Phase.PULL, Phase.RECOVERY)


class RejectReason(Enum):
    TOO_SHORT = "too_short"
    PHASE_TOO_SHORT = "phase_too_short"
    PHASE_NOT_FOUND = "phase_not_found"
    NON_FINITE = "non_finite"


@dataclass(frozen=True)
class PhaseSpan:
    phase: Phase
    start_frame: int
    end_frame: int  # half-open

    def __post_init__(self) -> None:
        if not self.start_frame < self.end_frame:
            raise ValueError("phase span must be nonempty")

    def __len__(self) -> int:
        return self.end_frame - self.start_frame


@dataclass(frozen=True)
class StrokeRecord:
    index: int
    start_frame: int
    end_frame: int
    phases: tuple[PhaseSpan, PhaseSpan, PhaseSpan] | None = None
    accepted: bool = True
    reason: RejectReason | None = None

    def __post_init__(self) -> None:
        if self.accepted and self.reason is not None:
            raise ValueError("accepted stroke cannot carry a reject reason")
        if not self.accepted and self.reason is None:
            raise ValueError("rejected stroke needs exactly one reason")
        if self.phases is not None:
            spans = self.phases
            if len(spans) != 3 or tuple(s.phase for s in spans) != PHASES:
                raise ValueError("phases must be catch, pull, recovery in order")
            if spans[0].start_frame != self.start_frame or spans[2].end_frame != self.end_frame:
                raise ValueError("phases must tile the stroke span")
            for a, b in zip(spans, spans[1:]):
                if a.end_frame != b.start_frame:
                    raise ValueError("phases must be contiguous")

    def phase_span(self, phase: Phase) -> PhaseSpan:
        if self.phases is None:
            raise ValueError("stroke has no phases")
        return self.phases[PHASES.index(phase)]

    def __len__(self) -> int:
        return self.end_frame - self.start_frame


def moving_average(x: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average; the window shrinks at the edges, so there is
    no phase shift and no fabricated samples."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    if window <= 1 or n == 0:
        return x.copy()
    half = window // 2
    prefix = np.concatenate(([0.0], np.cumsum(x)))
    idx = np.arange(n)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half + 1, n)
    return (prefix[hi] - prefix[lo]) / (hi - lo)


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of True as half-open (start, end) pairs."""
    if mask.size == 0:
        return []
    padded = np.concatenate(([False], mask, [False]))
    edges = np.flatnonzero(padded[1:] != padded[:-1])
    return [(int(s), int(e)) for s, e in zip(edges[::2], edges[1::2])]


def segment_strokes(
    session: AlignedSession, params: SegmentationParams | None = None
) -> list[StrokeRecord]:
    """Split a session into strokes via the adaptive gap threshold.

    The threshold is mu + k*sigma of the smoothed signal with a strict ``>``
    comparison, so a constant signal yields a single gap-free run.  Runs
    whose duration falls outside the stroke bounds are kept as rejected
    records rather than deleted, so the selection report can show them.
    """
    p = params or SegmentationParams()
    qx = session.row(LEFT_QUAT_X)
    smoothed = moving_average(qx, p.smooth_window_frames)
    mu = float(smoothed.mean())
    sigma = float(smoothed.std())
    if sigma <= 1e-12 * max(1.0, float(np.max(np.abs(smoothed)))):
        # constant signal: nothing strictly exceeds its own mean
        gap = np.zeros(smoothed.size, dtype=bool)
    else:
        gap = smoothed > mu + p.gap_threshold_sigma * sigma

    for s, e in _runs(gap):
        if e - s < p.min_gap_frames:
            gap[s:e] = False

    records = []
    for s, e in _runs(~gap):
        duration_s = (e - s) / session.rate_hz
        ok = p.min_stroke_s <= duration_s <= p.max_stroke_s
        records.append(
            StrokeRecord(
                index=len(records),
                start_frame=s,
                end_frame=e,
                accepted=ok,
                reason=None if ok else RejectReason.TOO_SHORT,
            )
        )
    return records


def _reject(stroke: StrokeRecord, reason: RejectReason) -> StrokeRecord:
    return replace(stroke, accepted=False, reason=reason, phases=None)


def segment_phases(
    session: AlignedSession,
    stroke: StrokeRecord,
    params: SegmentationParams | None = None,
) -> StrokeRecord:
    """Locate catch/pull/recovery inside one stroke.

    catch end = argmin of the smoothed quaternion W over the first
    ``catch_search_fraction`` of the stroke; pull end = argmax over the
    frames after it.  Ties break to the earliest frame.
    """
    p = params or SegmentationParams()
    if stroke.phases is not None:
        raise ValueError("stroke already has phases")
    if not stroke.accepted:
        return stroke

    qw = session.row(LEFT_QUAT_W)[stroke.start_frame : stroke.end_frame]
    if not np.all(np.isfinite(qw)):
        return _reject(stroke, RejectReason.NON_FINITE)

    smoothed = moving_average(qw, p.smooth_window_frames)
    n = smoothed.size
    search = int(p.catch_search_fraction * n)
    if search < 1 or n < 3:
        return _reject(stroke, RejectReason.PHASE_NOT_FOUND)

    catch_end = int(np.argmin(smoothed[:search]))
    if catch_end == 0 or catch_end >= n - 1:
        # extremum on a span edge leaves an empty phase
        return _reject(stroke, RejectReason.PHASE_NOT_FOUND)
    pull_end = catch_end + 1 + int(np.argmax(smoothed[catch_end + 1 :]))

    lengths = (catch_end, pull_end - catch_end, n - pull_end)
    if any(length < p.min_phase_frames for length in lengths):
        return _reject(stroke, RejectReason.PHASE_TOO_SHORT)

    base = stroke.start_frame
    spans = (
        PhaseSpan(Phase.CATCH, base, base + catch_end),
        PhaseSpan(Phase.PULL, base + catch_end, base + pull_end),
        PhaseSpan(Phase.RECOVERY, base + pull_end, stroke.end_frame),
    )
    return replace(stroke, phases=spans)


def segment_session(
    session: AlignedSession, params: SegmentationParams | None = None
) -> list[StrokeRecord]:
    """Full segmentation: strokes, then phases for each accepted stroke."""
    p = params or SegmentationParams()
    return [segment_phases(session, s, p) for s in segment_strokes(session, p)]


def standardize(
    session: AlignedSession,
    stroke: StrokeRecord,
    params: SegmentationParams | None = None,
) -> dict[Phase, np.ndarray]:
    """Truncate each phase to its first ``standard_frames`` frames.

    Shorter phases pass through whole; nothing is padded on this path.
    """
    p = params or SegmentationParams()
    if not stroke.accepted or stroke.phases is None:
        raise ValueError("standardize requires an accepted, phase-segmented stroke")
    out = {}
    for span in stroke.phases:
        end = min(span.end_frame, span.start_frame + p.standard_frames)
        out[span.phase] = session.data[:, span.start_frame : end].copy()
    return out


def export_raw_tensor(phase_matrix: np.ndarray, standard_frames: int) -> np.ndarray:
    """Fixed-shape [channels x T] tensor; short phases repeat their final
    frame to the right."""
    m = np.asarray(phase_matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] == 0:
        raise EmptyPhase("cannot export an empty phase")
    t = int(standard_frames)
    if m.shape[1] >= t:
        return m[:, :t].copy()
    pad = np.repeat(m[:, -1:], t - m.shape[1], axis=1)
    return np.concatenate([m, pad], axis=1)


# --- structured record export (one row per stroke) ------------------------

_RECORD_FIELDS = (
    "index",
    "start_frame",
    "end_frame",
    "catch_end",
    "pull_end",
    "status",
    "reason",
)


def records_to_table(records: list[StrokeRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_RECORD_FIELDS)
    for r in records:
        catch_end = pull_end = ""
        if r.phases is not None:
            catch_end = r.phases[0].end_frame
            pull_end = r.phases[1].end_frame
        writer.writerow(
            [
                r.index,
                r.start_frame,
                r.end_frame,
                catch_end,
                pull_end,
                "accepted" if r.accepted else "rejected",
                r.reason.value if r.reason else "",
            ]
        )
    return buf.getvalue()


def records_from_table(text: str) -> list[StrokeRecord]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != list(_RECORD_FIELDS):
        raise ValueError("not a stroke record table")
    records = []
    for row in rows[1:]:
        index, start, end, catch_end, pull_end, status, reason = row
        phases = None
        if catch_end:
            s, e = int(start), int(end)
            phases = (
                PhaseSpan(Phase.CATCH, s, int(catch_end)),
                PhaseSpan(Phase.PULL, int(catch_end), int(pull_end)),
                PhaseSpan(Phase.RECOVERY, int(pull_end), e),
            )
        records.append(
            StrokeRecord(
                index=int(index),
                start_frame=int(start),
                end_frame=int(end),
                phases=phases,
                accepted=status == "accepted",
                reason=RejectReason(reason) if reason else None,
            )
        )
    return records
