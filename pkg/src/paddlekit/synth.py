"""Synthetic multi-device paddling trials with ground-truth boundaries.

The generator is the desk-scale oracle: it emits the five canonical trial
files with deliberately offset per-device timestamps, plus the exact frame
spans every stroke and phase should segment to.

Waveform design notes (all in frame units at the session rate):

* quaternion X: low plateau inside strokes, raised plateau in gaps.  Each
  boundary carries a 3-frame overshoot/undershoot pair, which makes the
  5-frame smoothed signal jump across the whole plausible adaptive-threshold
  band between two adjacent frames, so the detected boundary lands exactly
  on the annotated frame in the noiseless case.
* quaternion W inside a stroke: linear descent (catch) to a minimum at the
  annotated catch end, linear ascent (pull) to a maximum at the annotated
  pull end, then a gently curved descent (recovery).  Adjacent slopes stay
  within a 1.5x ratio of each other, which keeps the smoothed extremum on
  the vertex frame.
* remaining channels: per-channel sinusoid arcs inside strokes over a flat
  baseline; the suboptimal form shifts the designated signal channels by
  class_separation times the channel's optimal-form standard deviation.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .channels import (
    Axis,
    ChannelId,
    Device,
    Sensor,
    canonical_channels,
    device_channels,
    phone_channels,
)
from .errors import SingleClassData
from .features import FeatureRegistry, FeatureVector, featurize_trial
from .ingest import (
    SourceFormat,
    TrialLabel,
    canonical_column_name,
    load_trial,
    trial_inputs_from_payloads,
)
from .segment import PHASES, Phase, SegmentationParams, StrokeRecord, segment_session

EPOCH_NS = 1_700_000_000_000_000_000

# quaternion X segmentation waveform
_QX_STROKE = -0.3
_QX_GAP = 0.3
_QX_EDGE = 0.3  # overshoot/undershoot amplitude
_EDGE_FRAMES = 3

# quaternion W phase waveform
_QW_HIGH = 0.35
_QW_LOW = 0.10
_QW_PEAK = 0.50
_QW_CURVE = 0.0002

# Suboptimal form shows up across the body-motion and posture streams;
# quaternions stay clean so their unit norm and the segmentation waveforms
# are class-independent.
_DEFAULT_SIGNAL_CHANNELS = tuple(
    ch for ch in canonical_channels() if ch.sensor is not Sensor.QUATERNION
)

# Per-stroke technique "style" wobble: one multiplicative factor per stroke
# applied to every non-quaternion waveform, giving the normal class a real
# low-dimensional density structure in feature space.
_STYLE_SIGMA = 0.08

# per-file sampling offsets: (rate_hz, start_offset_s before the session grid,
# tail_s beyond it); the left watch sits exactly on the session grid so its
# samples pin the alignment intersection.
_FILE_SAMPLING = {
    "watch_left": (None, 0.0, 0.0),
    "watch_right": (64.0, 0.35, 0.25),
    "phone_accel": (97.0, 0.21, 0.15),
    "phone_gyro": (97.0, 0.27, 0.11),
    "phone_mag": (97.0, 0.33, 0.19),
}


@dataclass(frozen=True)
class SynthSpec:
    n_strokes: int = 10
    rate_hz: float = 50.0
    stroke_period_s: float = 1.8
    period_jitter: float = 0.05
    gap_s: float = 0.4
    form: TrialLabel = TrialLabel.OPTIMAL
    class_separation: float = 1.0
    noise_sigma: float = 0.05
    seed: int = 0
    signal_channels: tuple[ChannelId, ...] = _DEFAULT_SIGNAL_CHANNELS

    def __post_init__(self) -> None:
        if self.n_strokes < 1:
            raise ValueError("need at least one stroke")
        if min(self.rate_hz, self.stroke_period_s, self.gap_s) <= 0:
            raise ValueError("rates and durations must be positive")
        if self.period_jitter < 0 or self.class_separation < 0:
            raise ValueError("jitter and separation must be nonnegative")
        if not math.isfinite(self.noise_sigma) or self.noise_sigma < 0:
            raise ValueError("noise_sigma must be finite and nonnegative")


@dataclass(frozen=True)
class GroundTruth:
    stroke_spans: tuple[tuple[int, int], ...]  # session frames, half-open
    phase_bounds: tuple[tuple[int, int], ...]  # (catch_end, pull_end) per stroke
    form: TrialLabel
    signal_channels: tuple[ChannelId, ...]

    @property
    def n_strokes(self) -> int:
        return len(self.stroke_spans)


@dataclass(frozen=True)
class _Layout:
    n_frames: int
    spans: tuple[tuple[int, int], ...]
    phase_bounds: tuple[tuple[int, int], ...]
    styles: tuple[float, ...]


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _build_layout(spec: SynthSpec) -> _Layout:
    rng = np.random.default_rng([spec.seed, 0xB0])
    gap_f = _round_half_up(spec.gap_s * spec.rate_hz)
    spans = []
    bounds = []
    styles = []
    pos = gap_f
    for _ in range(spec.n_strokes):
        period = spec.stroke_period_s
        if spec.period_jitter > 0:
            period *= 1.0 + spec.period_jitter * float(rng.uniform(-1.0, 1.0))
        styles.append(1.0 + _STYLE_SIGMA * float(rng.standard_normal()))
        length = max(_round_half_up(period * spec.rate_hz), 3 * _EDGE_FRAMES)
        spans.append((pos, pos + length))
        catch = _round_half_up(0.25 * length)
        pull = _round_half_up(0.45 * length)
        bounds.append((pos + catch, pos + catch + pull))
        pos += length + gap_f
    return _Layout(pos, tuple(spans), tuple(bounds), tuple(styles))


def _quaternion_x(tau: np.ndarray, layout: _Layout) -> np.ndarray:
    values = np.full(tau.shape, _QX_GAP)
    for start, end in layout.spans:
        values[(tau >= start) & (tau < end)] = _QX_STROKE
    hi = _QX_GAP + _QX_EDGE
    lo = _QX_STROKE - _QX_EDGE
    for start, end in layout.spans:
        values[(tau >= start - _EDGE_FRAMES) & (tau < start)] = hi
        values[(tau >= start) & (tau < start + _EDGE_FRAMES)] = lo
        values[(tau >= end - _EDGE_FRAMES) & (tau < end)] = lo
        values[(tau >= end) & (tau < end + _EDGE_FRAMES)] = hi
    return values


def _quaternion_w(tau: np.ndarray, layout: _Layout) -> np.ndarray:
    values = np.full(tau.shape, _QW_HIGH)
    for (start, end), (catch_end, pull_end) in zip(layout.spans, layout.phase_bounds):
        inside = (tau >= start) & (tau < end)
        o = tau[inside] - start
        catch_len = catch_end - start
        pull_len = pull_end - catch_end
        pull_slope = (_QW_PEAK - _QW_LOW) / pull_len
        w = np.empty(o.shape)

        in_catch = o < catch_len
        w[in_catch] = _QW_HIGH - (_QW_HIGH - _QW_LOW) * (o[in_catch] / catch_len)
        in_pull = (o >= catch_len) & (o < catch_len + pull_len)
        w[in_pull] = _QW_LOW + pull_slope * (o[in_pull] - catch_len)
        in_rec = o >= catch_len + pull_len
        k = o[in_rec] - catch_len - pull_len
        w[in_rec] = _QW_PEAK - pull_slope * k - _QW_CURVE * k * k
        values[inside] = w
    return values


def _generic_channel(channel_idx: int, tau: np.ndarray, layout: _Layout) -> np.ndarray:
    base = ((channel_idx % 7) - 3) * 0.5
    amp = 0.6 + 0.05 * (channel_idx % 5)
    phase0 = 0.13 * channel_idx
    values = np.full(tau.shape, base)
    for (start, end), style in zip(layout.spans, layout.styles):
        inside = (tau >= start) & (tau < end)
        rel = (tau[inside] - start) / (end - start)
        values[inside] = base + amp * style * np.sin(2.0 * math.pi * (rel + phase0))
    return values


_CANONICAL = canonical_channels()
_CHANNEL_INDEX = {ch: i for i, ch in enumerate(_CANONICAL)}


def _channel_matrix(
    channels: list[ChannelId], tau: np.ndarray, layout: _Layout, shifts: dict[ChannelId, float]
) -> np.ndarray:
    """Noise-free values for ``channels`` at fractional frame positions.

    Watch quaternion rows are renormalized to unit length per frame, so the
    emitted quaternions are exactly unit-norm before noise injection.
    """
    rows = {}
    for ch in channels:
        if ch.sensor is Sensor.QUATERNION and ch.axis is Axis.X:
            rows[ch] = _quaternion_x(tau, layout)
        elif ch.sensor is Sensor.QUATERNION and ch.axis is Axis.W:
            rows[ch] = _quaternion_w(tau, layout)
        elif ch.sensor is Sensor.QUATERNION:
            rows[ch] = None  # filled from the norm budget below
        else:
            rows[ch] = _generic_channel(_CHANNEL_INDEX[ch], tau, layout)

    for device in (Device.LEFT_WATCH, Device.RIGHT_WATCH):
        qw = rows.get(ChannelId(device, Sensor.QUATERNION, Axis.W))
        qx = rows.get(ChannelId(device, Sensor.QUATERNION, Axis.X))
        if qw is None or qx is None:
            continue
        residual = np.maximum(1.0 - qx * qx - qw * qw, 0.0)
        fill = np.sqrt(residual / 2.0)
        for axis in (Axis.Y, Axis.Z):
            key = ChannelId(device, Sensor.QUATERNION, axis)
            if key in rows:
                rows[key] = fill

    out = np.empty((len(channels), tau.size))
    for i, ch in enumerate(channels):
        out[i] = rows[ch] + shifts.get(ch, 0.0)
    return out


def _class_shifts(spec: SynthSpec, layout: _Layout) -> dict[ChannelId, float]:
    """Mean shift per designated channel: separation x optimal-form std."""
    if spec.form is not TrialLabel.SUBOPTIMAL or spec.class_separation == 0:
        return {}
    grid = np.arange(layout.n_frames, dtype=np.float64)
    shifts = {}
    for ch in spec.signal_channels:
        base = _channel_matrix([ch], grid, layout, {})[0]
        shifts[ch] = spec.class_separation * float(base.std())
    return shifts


def _render_csv(
    channels: list[ChannelId], timestamps_ns: np.ndarray, values: np.ndarray
) -> bytes:
    buf = io.StringIO()
    buf.write("time_ns," + ",".join(canonical_column_name(ch) for ch in channels) + "\n")
    for row in range(timestamps_ns.size):
        cells = ",".join(repr(float(v)) for v in values[:, row])
        buf.write(f"{int(timestamps_ns[row])},{cells}\n")
    return buf.getvalue().encode("utf-8")


_FILE_CHANNELS = {
    "watch_left": device_channels(Device.LEFT_WATCH),
    "watch_right": device_channels(Device.RIGHT_WATCH),
    "phone_accel": [ch for ch in phone_channels() if ch.sensor is Sensor.ACCELEROMETER],
    "phone_gyro": [ch for ch in phone_channels() if ch.sensor is Sensor.GYROSCOPE],
    "phone_mag": [ch for ch in phone_channels() if ch.sensor is Sensor.MAGNETOMETER],
}


def generate_trial(spec: SynthSpec) -> tuple[dict[str, bytes], GroundTruth]:
    """Five canonical file payloads plus the exact expected segmentation."""
    layout = _build_layout(spec)
    shifts = _class_shifts(spec, layout)
    step_ns = round(1e9 / spec.rate_hz)
    session_end_ns = EPOCH_NS + (layout.n_frames - 1) * step_ns

    payloads = {}
    for file_idx, (role, (rate, lead_s, tail_s)) in enumerate(_FILE_SAMPLING.items()):
        channels = _FILE_CHANNELS[role]
        if rate is None:
            timestamps = EPOCH_NS + np.arange(layout.n_frames, dtype=np.int64) * step_ns
        else:
            start = EPOCH_NS - round(lead_s * 1e9)
            end = session_end_ns + round(tail_s * 1e9)
            count = int((end - start) * rate / 1e9) + 1
            rel = np.rint(np.arange(count) * 1e9 / rate).astype(np.int64)
            timestamps = start + rel
        tau = (timestamps - EPOCH_NS) * (spec.rate_hz / 1e9)
        values = _channel_matrix(channels, tau, layout, shifts)
        if spec.noise_sigma > 0:
            rng = np.random.default_rng([spec.seed, file_idx])
            values = values + rng.standard_normal(values.shape) * spec.noise_sigma
        payloads[role] = _render_csv(channels, timestamps, values)

    truth = GroundTruth(
        stroke_spans=layout.spans,
        phase_bounds=layout.phase_bounds,
        form=spec.form,
        signal_channels=spec.signal_channels,
    )
    return payloads, truth


@dataclass
class SynthDataset:
    datasets: dict[Phase, list[FeatureVector]]
    registry: FeatureRegistry
    truths: dict[TrialLabel, GroundTruth]
    records: dict[TrialLabel, list[StrokeRecord]] = field(default_factory=dict)


def generate_dataset(
    n_per_class: int,
    template: SynthSpec | None = None,
    seed: int | None = None,
    registry: FeatureRegistry | None = None,
    params: SegmentationParams | None = None,
) -> SynthDataset:
    """Run one optimal and one suboptimal trial through the full pipeline.

    Returns exactly ``n_per_class`` accepted strokes per class per phase
    (the earliest ones), so dataset sizes are reproducible.
    """
    template = template or SynthSpec()
    if seed is not None:
        template = replace(template, seed=seed)
    registry = registry or FeatureRegistry.default(canonical_channels())
    params = params or SegmentationParams()

    datasets: dict[Phase, list[FeatureVector]] = {ph: [] for ph in PHASES}
    truths: dict[TrialLabel, GroundTruth] = {}
    records: dict[TrialLabel, list[StrokeRecord]] = {}
    for class_idx, form in enumerate((TrialLabel.OPTIMAL, TrialLabel.SUBOPTIMAL)):
        spec = replace(
            template,
            form=form,
            seed=2 * template.seed + class_idx,
            n_strokes=n_per_class + 2,  # headroom for edge rejections
        )
        payloads, truth = generate_trial(spec)
        session = load_trial(
            trial_inputs_from_payloads(payloads, SourceFormat.CANONICAL),
            rate_hz=spec.rate_hz,
            meta=form,
        )
        strokes = segment_session(session, params)
        accepted = [s for s in strokes if s.accepted]
        if len(accepted) < n_per_class:
            raise SingleClassData(
                f"{form.value} trial yielded {len(accepted)} accepted strokes, "
                f"need {n_per_class}"
            )
        keep = {s.index for s in accepted[:n_per_class]}
        kept_records = [s for s in strokes if s.index in keep]
        vectors = featurize_trial(session, kept_records, registry, params)
        for ph in PHASES:
            datasets[ph].extend(vectors[ph])
        truths[form] = truth
        records[form] = strokes
    return SynthDataset(datasets, registry, truths, records)
