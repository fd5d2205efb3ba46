"""Sensor-file parsing and temporal alignment.

Five files make up one trial: phone accelerometer, gyroscope and
magnetometer exports plus one wide export per watch.  Parsing normalizes
every timestamp to integer nanoseconds; alignment linearly interpolates
all channels onto one uniform grid spanning the intersection of the five
time ranges.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

import numpy as np

from .channels import (
    Axis,
    ChannelId,
    Device,
    LEFT_QUAT_W,
    LEFT_QUAT_X,
    Sensor,
    sort_channels,
)
from .errors import (
    BadTrialInput,
    EmptyFile,
    MissingRequiredChannel,
    MissingTimeColumn,
    NonFiniteInput,
    NonMonotonicTime,
    NoTemporalOverlap,
)

logger = logging.getLogger(__name__)

DEFAULT_RATE_HZ = 50.0

# Time-unit inference: loggers emit ms or ns; the magnitude decides.
_MS_CEILING = 1e13
_US_CEILING = 1e16

# Canonical CSV column tokens, one per sensor.
_SENSOR_TOKENS = {
    "accel": Sensor.ACCELEROMETER,
    "rotation": Sensor.ROTATION_RATE,
    "orientation": Sensor.ORIENTATION,
    "gravity": Sensor.GRAVITY,
    "quat": Sensor.QUATERNION,
    "useraccel": Sensor.USER_ACCELERATION,
    "mag": Sensor.MAGNETOMETER,
    "gyro": Sensor.GYROSCOPE,
}
_TOKEN_BY_SENSOR = {s: t for t, s in _SENSOR_TOKENS.items()}

CANONICAL_TIME_COLUMN = "time_ns"


class SourceFormat(Enum):
    CANONICAL = "canonical"
    PHONE_LOGGER = "phone_logger"
    WATCH_LOGGER = "watch_logger"


class TrialLabel(Enum):
    OPTIMAL = "optimal"
    SUBOPTIMAL = "suboptimal"
    UNLABELED = "unlabeled"


def canonical_column_name(channel: ChannelId) -> str:
    return f"{_TOKEN_BY_SENSOR[channel.sensor]}_{channel.axis.value}"


def _parse_canonical_column(name: str, device: Device) -> ChannelId | None:
    token, _, axis = name.partition("_")
    if token not in _SENSOR_TOKENS or not axis:
        return None
    try:
        return ChannelId(device, _SENSOR_TOKENS[token], Axis(axis))
    except ValueError:
        return None


def _load_watch_column_map() -> tuple[str, dict[str, tuple[Sensor, Axis]]]:
    raw = resources.files("paddlekit.data").joinpath("watch_columns_v1.json")
    cfg = json.loads(raw.read_text(encoding="utf-8"))
    if cfg.get("version") != 1:
        raise ValueError("unsupported watch column map version")
    columns = {
        name: (Sensor(sensor), Axis(axis))
        for name, (sensor, axis) in cfg["columns"].items()
    }
    return cfg["time_column"], columns


_WATCH_TIME_COLUMN, _WATCH_COLUMNS = _load_watch_column_map()


@dataclass(frozen=True)
class SampleSeries:
    """One channel's raw samples, timestamps in ns since epoch."""

    channel: ChannelId
    timestamps_ns: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        ts = np.asarray(self.timestamps_ns, dtype=np.int64)
        vals = np.asarray(self.values, dtype=np.float64)
        if ts.shape != vals.shape or ts.ndim != 1:
            raise ValueError("timestamps and values must be parallel 1-D arrays")
        if ts.size == 0:
            raise EmptyFile(f"empty series for {self.channel.name}")
        if ts.size > 1 and not np.all(np.diff(ts) > 0):
            raise NonMonotonicTime(f"timestamps not strictly increasing for {self.channel.name}")
        if not np.all(np.isfinite(vals)):
            raise NonFiniteInput(f"non-finite sample in {self.channel.name}")
        object.__setattr__(self, "timestamps_ns", ts)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return int(self.timestamps_ns.size)


@dataclass
class ParseReport:
    """Row accounting per parsed file: counts only, no payload data."""

    rows_total: int = 0
    rows_dropped: int = 0
    duplicates_collapsed: int = 0

    def as_dict(self) -> dict[str, int]:
        return {
            "rows_total": self.rows_total,
            "rows_dropped": self.rows_dropped,
            "duplicates_collapsed": self.duplicates_collapsed,
        }


@dataclass
class ParsedFile:
    series: list[SampleSeries]
    report: ParseReport


@dataclass
class AlignedSession:
    """Uniform-rate multi-channel matrix built from asynchronous files."""

    rate_hz: float
    t0_ns: int
    t1_ns: int
    data: np.ndarray  # [channels x frames]
    registry: list[ChannelId]
    meta: TrialLabel = TrialLabel.UNLABELED
    parse_report: dict[str, dict[str, int]] | None = None

    @property
    def frames(self) -> int:
        return int(self.data.shape[1])

    def index_of(self, channel: ChannelId) -> int:
        try:
            return self.registry.index(channel)
        except ValueError:
            raise MissingRequiredChannel(f"channel {channel.name} not in session") from None

    def row(self, channel: ChannelId) -> np.ndarray:
        return self.data[self.index_of(channel)]

    def grid_ns(self) -> np.ndarray:
        """Timestamps of the uniform grid, ns since epoch."""
        k = np.arange(self.frames, dtype=np.float64)
        rel = np.rint(k * 1e9 / self.rate_hz).astype(np.int64)
        return self.t0_ns + rel

    def validate(self) -> None:
        expected = math.floor((self.t1_ns - self.t0_ns) * self.rate_hz / 1e9) + 1
        if self.frames != expected:
            raise ValueError(f"frame count {self.frames} != contract {expected}")
        if len(self.registry) != self.data.shape[0]:
            raise ValueError("registry/data row mismatch")
        if len(set(self.registry)) != len(self.registry):
            raise ValueError("duplicate registry channel")
        if not np.all(np.isfinite(self.data)):
            raise NonFiniteInput("non-finite cell in aligned session")
        for required in (LEFT_QUAT_X, LEFT_QUAT_W):
            if required not in self.registry:
                raise MissingRequiredChannel(f"session lacks {required.name}")


def _infer_to_ns(raw_times: np.ndarray) -> np.ndarray:
    """Normalize a raw time column to integer ns (ms/us/ns by magnitude)."""
    peak = float(np.max(np.abs(raw_times))) if raw_times.size else 0.0
    if peak < _MS_CEILING:
        scale = 1e6
    elif peak < _US_CEILING:
        scale = 1e3
    else:
        scale = 1.0
    return np.rint(raw_times * scale).astype(np.int64)


def _read_table(data: bytes) -> tuple[list[str], list[list[str]]]:
    text = data.decode("utf-8-sig")
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows:
        raise EmptyFile("no header row")
    header = [h.strip() for h in rows[0]]
    return header, rows[1:]


def _collect(
    header: list[str],
    rows: list[list[str]],
    time_idx: int,
    value_columns: dict[int, ChannelId],
) -> ParsedFile:
    """Shared row loop: drop rows with unparseable cells, sort, dedup."""
    report = ParseReport(rows_total=len(rows))
    times: list[float] = []
    columns: dict[int, list[float]] = {idx: [] for idx in value_columns}
    ncols = len(header)
    for row in rows:
        if len(row) != ncols:
            report.rows_dropped += 1
            continue
        try:
            t = float(row[time_idx])
            cells = {idx: float(row[idx]) for idx in value_columns}
        except ValueError:
            report.rows_dropped += 1
            continue
        if not math.isfinite(t) or not all(math.isfinite(v) for v in cells.values()):
            report.rows_dropped += 1
            continue
        times.append(t)
        for idx, v in cells.items():
            columns[idx].append(v)

    if not times:
        raise EmptyFile("no parseable data rows")

    ts = _infer_to_ns(np.asarray(times, dtype=np.float64))
    order = np.argsort(ts, kind="stable")
    ts = ts[order]
    # Duplicate timestamps: keep the last occurrence (loggers overwrite on flush).
    keep = np.ones(ts.size, dtype=bool)
    keep[:-1] = ts[1:] != ts[:-1]
    report.duplicates_collapsed = int(ts.size - keep.sum())

    series = []
    for idx, channel in value_columns.items():
        vals = np.asarray(columns[idx], dtype=np.float64)[order][keep]
        series.append(SampleSeries(channel, ts[keep], vals))
    return ParsedFile(series, report)


def parse_sensor_file(
    data: bytes,
    fmt: SourceFormat,
    device: Device,
    sensor: Sensor | None = None,
) -> ParsedFile:
    """Parse one delimited sensor file into per-(sensor, axis) series.

    ``sensor`` is required for ``PHONE_LOGGER`` files, which carry a single
    sensor across bare x/y/z columns.
    """
    header, rows = _read_table(data)

    if fmt is SourceFormat.CANONICAL:
        if CANONICAL_TIME_COLUMN not in header:
            raise MissingTimeColumn(f"canonical file lacks {CANONICAL_TIME_COLUMN!r}")
        time_idx = header.index(CANONICAL_TIME_COLUMN)
        value_columns = {}
        for idx, name in enumerate(header):
            if idx == time_idx:
                continue
            channel = _parse_canonical_column(name, device)
            if channel is None:
                logger.debug("ignoring unknown canonical column %r", name)
                continue
            value_columns[idx] = channel
    elif fmt is SourceFormat.PHONE_LOGGER:
        if sensor is None:
            raise ValueError("phone logger files need an explicit sensor")
        if "time" not in header:
            raise MissingTimeColumn("phone logger file lacks 'time'")
        time_idx = header.index("time")
        value_columns = {}
        for axis in (Axis.X, Axis.Y, Axis.Z):
            if axis.value not in header:
                raise ValueError(f"phone logger file lacks column {axis.value!r}")
            value_columns[header.index(axis.value)] = ChannelId(device, sensor, axis)
    elif fmt is SourceFormat.WATCH_LOGGER:
        if _WATCH_TIME_COLUMN not in header:
            raise MissingTimeColumn(f"watch export lacks {_WATCH_TIME_COLUMN!r}")
        time_idx = header.index(_WATCH_TIME_COLUMN)
        value_columns = {}
        for idx, name in enumerate(header):
            mapped = _WATCH_COLUMNS.get(name)
            if mapped is None:
                continue
            value_columns[idx] = ChannelId(device, mapped[0], mapped[1])
    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unknown format {fmt}")

    if not value_columns:
        raise EmptyFile("no recognizable channel columns")
    return _collect(header, rows, time_idx, value_columns)


_QUAT_AXES = (Axis.W, Axis.X, Axis.Y, Axis.Z)
_UNIT_NORM_SLACK = 1e-12


def _renormalize_quaternions(data: np.ndarray, registry: list[ChannelId]) -> None:
    """Restore per-frame unit norm after interpolation, in place.

    Skips frames already within 1e-12 of unit norm so re-aligning an aligned
    session is bit-stable.
    """
    for device in (Device.LEFT_WATCH, Device.RIGHT_WATCH):
        idx = []
        for axis in _QUAT_AXES:
            ch = ChannelId(device, Sensor.QUATERNION, axis)
            if ch not in registry:
                break
            idx.append(registry.index(ch))
        else:
            quad = data[idx, :]
            norm = np.sqrt(np.sum(quad * quad, axis=0))
            fix = (np.abs(norm - 1.0) > _UNIT_NORM_SLACK) & (norm > 0)
            if np.any(fix):
                data[np.ix_(idx, np.flatnonzero(fix))] /= norm[fix]


def align(
    series: list[SampleSeries],
    rate_hz: float = DEFAULT_RATE_HZ,
    meta: TrialLabel = TrialLabel.UNLABELED,
) -> AlignedSession:
    """Resample all series onto one uniform grid over their common span."""
    if rate_hz <= 0:
        raise ValueError("rate_hz must be positive")
    if not series:
        raise EmptyFile("no series to align")

    by_channel = {s.channel: s for s in series}
    if len(by_channel) != len(series):
        raise ValueError("duplicate channel among input series")
    for required in (LEFT_QUAT_X, LEFT_QUAT_W):
        if required not in by_channel:
            raise MissingRequiredChannel(f"alignment needs {required.name}")

    t0 = max(int(s.timestamps_ns[0]) for s in series)
    t1 = min(int(s.timestamps_ns[-1]) for s in series)
    if t1 <= t0:
        raise NoTemporalOverlap(f"empty intersection: [{t0}, {t1}]")

    frames = math.floor((t1 - t0) * rate_hz / 1e9) + 1
    k = np.arange(frames, dtype=np.float64)
    grid_rel = np.rint(k * 1e9 / rate_hz).astype(np.int64)
    grid_rel = np.minimum(grid_rel, t1 - t0)

    registry = sort_channels(by_channel)
    data = np.empty((len(registry), frames), dtype=np.float64)
    grid = grid_rel.astype(np.float64)
    for i, channel in enumerate(registry):
        s = by_channel[channel]
        # Relative-to-t0 timestamps keep float interpolation exact at 1 ns.
        ts_rel = (s.timestamps_ns - t0).astype(np.float64)
        data[i] = np.interp(grid, ts_rel, s.values)

    _renormalize_quaternions(data, registry)

    session = AlignedSession(
        rate_hz=float(rate_hz),
        t0_ns=t0,
        t1_ns=t1,
        data=data,
        registry=registry,
        meta=meta,
    )
    session.validate()
    return session


@dataclass(frozen=True)
class TrialInput:
    """One of the five per-trial files: raw payload plus parsing hints."""

    payload: bytes
    fmt: SourceFormat
    device: Device
    sensor: Sensor | None = None

    @classmethod
    def from_path(
        cls,
        path: str | Path,
        fmt: SourceFormat,
        device: Device,
        sensor: Sensor | None = None,
    ) -> "TrialInput":
        return cls(Path(path).read_bytes(), fmt, device, sensor)


TRIAL_ROLES = ("phone_accel", "phone_gyro", "phone_mag", "watch_left", "watch_right")

_ROLE_DEVICE = {
    "phone_accel": Device.PHONE,
    "phone_gyro": Device.PHONE,
    "phone_mag": Device.PHONE,
    "watch_left": Device.LEFT_WATCH,
    "watch_right": Device.RIGHT_WATCH,
}
_ROLE_SENSOR = {
    "phone_accel": Sensor.ACCELEROMETER,
    "phone_gyro": Sensor.GYROSCOPE,
    "phone_mag": Sensor.MAGNETOMETER,
}


def trial_inputs_from_payloads(
    payloads: dict[str, bytes],
    fmt: SourceFormat = SourceFormat.CANONICAL,
) -> dict[str, TrialInput]:
    """Build the role->input mapping assuming one shared source format."""
    return {
        role: TrialInput(data, fmt, _ROLE_DEVICE[role], _ROLE_SENSOR.get(role))
        for role, data in payloads.items()
    }


def load_trial(
    inputs: dict[str, TrialInput],
    rate_hz: float = DEFAULT_RATE_HZ,
    meta: TrialLabel = TrialLabel.UNLABELED,
) -> AlignedSession:
    """Parse the five trial files and align them; the offending file is named
    on any parse or alignment failure."""
    missing = [r for r in TRIAL_ROLES if r not in inputs]
    extra = [r for r in inputs if r not in TRIAL_ROLES]
    if missing or extra:
        raise BadTrialInput(
            f"expected exactly roles {TRIAL_ROLES}; missing={missing} unknown={extra}"
        )

    all_series: list[SampleSeries] = []
    report: dict[str, dict[str, int]] = {}
    for role in TRIAL_ROLES:
        spec = inputs[role]
        try:
            parsed = parse_sensor_file(spec.payload, spec.fmt, spec.device, spec.sensor)
        except Exception as exc:
            raise type(exc)(f"{role}: {exc}") from exc
        if parsed.report.rows_dropped:
            logger.info("%s: dropped %d malformed rows", role, parsed.report.rows_dropped)
        all_series.extend(parsed.series)
        report[role] = parsed.report.as_dict()

    session = align(all_series, rate_hz=rate_hz, meta=meta)
    session.parse_report = report
    return session
