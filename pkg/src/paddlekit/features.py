"""Summary-statistic feature vectors for standardized stroke phases.

Eight statistics per channel, in canonical order: mean, skewness, sample
standard deviation, min, max, range, Q1, Q3.  A feature registry fixes the
(channel, statistic) ordering and carries a content digest so models can
refuse mismatched inputs.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .channels import ChannelId, Device, parse_channel_name
from .errors import EmptyInput, MissingChannel, NonFiniteInput
from .ingest import AlignedSession, TrialLabel
from .segment import PHASES, Phase, SegmentationParams, StrokeRecord, standardize


class StatKind(Enum):
    MEAN = "mean"
    SKEWNESS = "skewness"
    STDDEV = "stddev"
    MIN = "min"
    MAX = "max"
    RANGE = "range"
    Q1 = "q1"
    Q3 = "q3"


STATS = tuple(StatKind)


def summarize_series(x: np.ndarray) -> np.ndarray:
    """The eight summary statistics of a series, in canonical order.

    Standard deviation uses the n-1 divisor (0 when n == 1); skewness is the
    adjusted Fisher-Pearson statistic g1 * sqrt(n(n-1))/(n-2) (0 when n < 3
    or the series is constant); quartiles interpolate linearly between order
    statistics at position (n-1)*q.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    n = x.size
    if n == 0:
        raise EmptyInput("cannot summarize an empty series")
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput("non-finite value in series")

    xs = np.sort(x)
    lo = float(xs[0])
    hi = float(xs[-1])

    def quantile(q: float) -> float:
        pos = (n - 1) * q
        below = int(pos)
        frac = pos - below
        if frac == 0.0:
            return float(xs[below])
        return float(xs[below] + frac * (xs[below + 1] - xs[below]))

    mean = float(x.mean())
    centered = x - mean
    m2 = float((centered * centered).mean())
    sd = math.sqrt(m2 * n / (n - 1)) if n > 1 else 0.0
    if n < 3 or m2 == 0.0:
        skew = 0.0
    else:
        m3 = float((centered * centered * centered).mean())
        g1 = m3 / m2 ** 1.5
        skew = g1 * math.sqrt(n * (n - 1)) / (n - 2)

    return np.array([mean, skew, sd, lo, hi, hi - lo, quantile(0.25), quantile(0.75)])


@dataclass(frozen=True)
class FeatureRegistry:
    """Ordered (channel, statistic) pairs defining feature-vector layout."""

    entries: tuple[tuple[ChannelId, StatKind], ...]

    def __post_init__(self) -> None:
        if len(set(self.entries)) != len(self.entries):
            raise ValueError("duplicate registry entry")

    @classmethod
    def default(cls, channels: list[ChannelId]) -> "FeatureRegistry":
        """All channels x all eight stats, channel-major."""
        return cls(tuple((ch, st) for ch in channels for st in STATS))

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def names(self) -> list[str]:
        return [f"{ch.name}.{st.value}" for ch, st in self.entries]

    @property
    def digest(self) -> str:
        payload = "registry-v1\n" + "\n".join(self.names)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    @property
    def channels(self) -> list[ChannelId]:
        seen: dict[ChannelId, None] = {}
        for ch, _ in self.entries:
            seen.setdefault(ch)
        return list(seen)

    def restricted_to_device(self, device: Device) -> "FeatureRegistry":
        kept = tuple(e for e in self.entries if e[0].device is device)
        if not kept:
            raise MissingChannel(f"registry has no {device.value} channels")
        return FeatureRegistry(kept)

    def indices_of(self, sub: "FeatureRegistry") -> np.ndarray:
        """Column positions of ``sub``'s entries within this registry."""
        pos = {e: i for i, e in enumerate(self.entries)}
        try:
            return np.array([pos[e] for e in sub.entries], dtype=np.intp)
        except KeyError as missing:
            raise MissingChannel(f"entry {missing} not in registry") from None


@dataclass(frozen=True)
class FeatureVector:
    stroke_index: int
    phase: Phase
    values: np.ndarray
    label: TrialLabel = TrialLabel.UNLABELED

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.float64)
        if not np.all(np.isfinite(vals)):
            raise NonFiniteInput("non-finite feature value")
        object.__setattr__(self, "values", vals)


def featurize_phase(
    phase_matrix: np.ndarray,
    channels: list[ChannelId],
    registry: FeatureRegistry,
    stroke_index: int = -1,
    phase: Phase = Phase.CATCH,
    label: TrialLabel = TrialLabel.UNLABELED,
) -> FeatureVector:
    """Summarize one phase matrix into a vector ordered by the registry.

    ``channels`` labels the matrix rows; storage order is irrelevant, the
    registry alone determines output order.
    """
    matrix = np.asarray(phase_matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] < 1:
        raise EmptyInput("phase matrix needs at least one frame")
    row_of = {ch: i for i, ch in enumerate(channels)}

    summaries: dict[ChannelId, np.ndarray] = {}
    values = np.empty(len(registry))
    for i, (ch, stat) in enumerate(registry.entries):
        if ch not in row_of:
            raise MissingChannel(f"phase matrix lacks {ch.name}")
        if ch not in summaries:
            summaries[ch] = summarize_series(matrix[row_of[ch]])
        values[i] = summaries[ch][STATS.index(stat)]
    return FeatureVector(stroke_index, phase, values, label)


def featurize_trial(
    session: AlignedSession,
    records: list[StrokeRecord],
    registry: FeatureRegistry,
    params: SegmentationParams | None = None,
) -> dict[Phase, list[FeatureVector]]:
    """Feature vectors for every accepted stroke, one dataset per phase."""
    label = TrialLabel(session.meta)
    out: dict[Phase, list[FeatureVector]] = {ph: [] for ph in PHASES}
    for stroke in records:
        if not stroke.accepted or stroke.phases is None:
            continue
        matrices = standardize(session, stroke, params)
        for ph, matrix in matrices.items():
            out[ph].append(
                featurize_phase(matrix, session.registry, registry, stroke.index, ph, label)
            )
    return out


# --- delimited table export / import --------------------------------------

_META_COLUMNS = ("stroke", "phase", "label")


def dataset_to_table(
    datasets: dict[Phase, list[FeatureVector]], registry: FeatureRegistry
) -> str:
    """Delimited table with full-precision floats (repr round-trips exactly)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(_META_COLUMNS) + registry.names)
    for phase in PHASES:
        for vec in datasets.get(phase, []):
            if vec.values.size != len(registry):
                raise ValueError("vector length does not match registry")
            writer.writerow(
                [vec.stroke_index, phase.value, vec.label.value]
                + [repr(float(v)) for v in vec.values]
            )
    return buf.getvalue()


def dataset_from_table(text: str) -> tuple[dict[Phase, list[FeatureVector]], FeatureRegistry]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][: len(_META_COLUMNS)] != list(_META_COLUMNS):
        raise ValueError("not a feature table")
    entries = []
    for name in rows[0][len(_META_COLUMNS) :]:
        channel_name, _, stat = name.rpartition(".")
        entries.append((parse_channel_name(channel_name), StatKind(stat)))
    registry = FeatureRegistry(tuple(entries))

    datasets: dict[Phase, list[FeatureVector]] = {ph: [] for ph in PHASES}
    for row in rows[1:]:
        stroke, phase, label = row[: len(_META_COLUMNS)]
        values = np.array([float(v) for v in row[len(_META_COLUMNS) :]])
        datasets[Phase(phase)].append(
            FeatureVector(int(stroke), Phase(phase), values, TrialLabel(label))
        )
    return datasets, registry


def restrict_dataset(
    dataset: list[FeatureVector],
    registry: FeatureRegistry,
    sub: FeatureRegistry,
) -> list[FeatureVector]:
    """Project vectors onto a sub-registry (column selection)."""
    cols = registry.indices_of(sub)
    return [
        FeatureVector(v.stroke_index, v.phase, v.values[cols], v.label) for v in dataset
    ]
