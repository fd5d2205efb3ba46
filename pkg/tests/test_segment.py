import numpy as np
import pytest

from paddlekit.channels import LEFT_QUAT_W, LEFT_QUAT_X, canonical_channels
from paddlekit.errors import EmptyPhase
from paddlekit.ingest import AlignedSession, TrialLabel
from paddlekit.segment import (
    PHASES,
    Phase,
    RejectReason,
    SegmentationParams,
    StrokeRecord,
    export_raw_tensor,
    moving_average,
    records_from_table,
    records_to_table,
    segment_phases,
    segment_session,
    segment_strokes,
    standardize,
)

EPOCH = 1_700_000_000_000_000_000


def _session(qx=None, qw=None, rate=50.0, frames=None):
    """Bare two-channel session; registry order is (w, x) by canonical sort."""
    if qx is None:
        qx = np.zeros(frames)
    if qw is None:
        qw = np.zeros(len(qx))
    qx = np.asarray(qx, dtype=np.float64)
    qw = np.asarray(qw, dtype=np.float64)
    data = np.stack([qw, qx])
    t1 = EPOCH + round((len(qx) - 1) * 1e9 / rate)
    return AlignedSession(
        rate_hz=rate,
        t0_ns=EPOCH,
        t1_ns=t1,
        data=data,
        registry=[LEFT_QUAT_W, LEFT_QUAT_X],
        meta=TrialLabel.UNLABELED,
    )


def _brute_force_strokes(qx, params, rate):
    """Independent enumeration of the thresholding rule, plain python."""
    smoothed = []
    half = params.smooth_window_frames // 2
    for i in range(len(qx)):
        window = qx[max(0, i - half) : min(len(qx), i + half + 1)]
        smoothed.append(sum(window) / len(window))
    mu = sum(smoothed) / len(smoothed)
    sigma = (sum((v - mu) ** 2 for v in smoothed) / len(smoothed)) ** 0.5
    gap = [v > mu + params.gap_threshold_sigma * sigma for v in smoothed]

    def runs(mask):
        out, start = [], None
        for i, m in enumerate(mask):
            if m and start is None:
                start = i
            if not m and start is not None:
                out.append((start, i))
                start = None
        if start is not None:
            out.append((start, len(mask)))
        return out

    for s, e in runs(gap):
        if e - s < params.min_gap_frames:
            for i in range(s, e):
                gap[i] = False
    return runs([not g for g in gap])


class TestSegmentStrokes:
    def test_square_wave_example(self):
        # gaps high at [100,120) and [220,240); window 1 keeps edges sharp
        qx = np.zeros(300)
        qx[100:120] = 1.0
        qx[220:240] = 1.0
        params = SegmentationParams(smooth_window_frames=1)
        session = _session(qx=qx)
        records = segment_strokes(session, params)
        spans = [(r.start_frame, r.end_frame) for r in records]
        assert spans == [(0, 100), (120, 220), (240, 300)]
        assert all(r.accepted for r in records)
        assert spans == _brute_force_strokes(qx.tolist(), params, 50.0)

    def test_constant_signal_yields_single_run(self):
        # sigma == 0 and the comparison is strict, so no frame is a gap
        session = _session(qx=np.full(200, 0.7))
        records = segment_strokes(session)
        assert [(r.start_frame, r.end_frame) for r in records] == [(0, 200)]
        assert records[0].accepted  # 4 s is inside [0.5, 5]

    def test_out_of_range_runs_are_rejected_not_deleted(self):
        session = _session(qx=np.full(400, 0.7))  # 8 s > max_stroke_s
        records = segment_strokes(session)
        assert len(records) == 1
        assert not records[0].accepted
        assert records[0].reason is RejectReason.TOO_SHORT

    def test_short_gap_runs_are_erased(self):
        qx = np.zeros(150)
        qx[70:75] = 1.0  # 5 < min_gap_frames
        params = SegmentationParams(smooth_window_frames=1)
        records = segment_strokes(_session(qx=qx), params)
        assert [(r.start_frame, r.end_frame) for r in records] == [(0, 150)]

    def test_affine_transform_keeps_boundaries(self, default_trial):
        _, _, _, session = default_trial
        base = segment_strokes(session)
        scaled = AlignedSession(
            rate_hz=session.rate_hz,
            t0_ns=session.t0_ns,
            t1_ns=session.t1_ns,
            data=session.data.copy(),
            registry=session.registry,
        )
        row = scaled.index_of(LEFT_QUAT_X)
        scaled.data[row] = 3.5 * scaled.data[row] + 11.0
        transformed = segment_strokes(scaled)
        assert [(r.start_frame, r.end_frame) for r in base] == [
            (r.start_frame, r.end_frame) for r in transformed
        ]

    def test_indices_dense_and_sorted(self, default_trial):
        _, _, _, session = default_trial
        records = segment_strokes(session)
        assert [r.index for r in records] == list(range(len(records)))
        starts = [r.start_frame for r in records]
        assert starts == sorted(starts)
        for a, b in zip(records, records[1:]):
            assert a.end_frame <= b.start_frame


def _phase_fixture():
    """100-frame stroke: descent to frame 15, ascent to 60, curved fall after.

    Slopes stay within a 1.5x ratio so the 5-frame smoothing keeps both
    extrema on their vertex frames.
    """
    qw = np.empty(100)
    qw[:16] = 0.5 - 0.2 * np.arange(16) / 15.0
    qw[16:61] = 0.3 + 0.5 * (np.arange(16, 61) - 15) / 45.0
    k = np.arange(61, 100) - 60
    qw[61:] = 0.8 - (0.5 / 45.0) * k - 0.0002 * k * k
    return qw


def _brute_force_extrema(qw, params):
    half = params.smooth_window_frames // 2
    smoothed = [
        sum(qw[max(0, i - half) : min(len(qw), i + half + 1)])
        / len(qw[max(0, i - half) : min(len(qw), i + half + 1)])
        for i in range(len(qw))
    ]
    search = int(params.catch_search_fraction * len(qw))
    catch_end = min(range(search), key=lambda i: smoothed[i])
    pull_end = min(
        range(catch_end + 1, len(qw)), key=lambda i: (-smoothed[i], i)
    )
    return catch_end, pull_end


class TestSegmentPhases:
    def test_piecewise_fixture_extrema(self):
        qw = _phase_fixture()
        params = SegmentationParams()
        assert _brute_force_extrema(qw.tolist(), params) == (15, 60)
        session = _session(qx=np.zeros(100), qw=qw)
        stroke = StrokeRecord(index=0, start_frame=0, end_frame=100)
        result = segment_phases(session, stroke, params)
        assert result.accepted
        spans = [(s.start_frame, s.end_frame) for s in result.phases]
        assert spans == [(0, 15), (15, 60), (60, 100)]

    def test_monotone_increasing_qw_has_no_catch(self):
        session = _session(qx=np.zeros(100), qw=np.linspace(0, 1, 100))
        stroke = StrokeRecord(index=0, start_frame=0, end_frame=100)
        result = segment_phases(session, stroke)
        assert not result.accepted
        assert result.reason is RejectReason.PHASE_NOT_FOUND

    def test_short_phase_rejected(self):
        # extrema at 4 and 60: catch has 4 frames < min_phase_frames
        qw = np.empty(100)
        qw[:5] = 0.5 - 0.05 * np.arange(5)
        qw[5:61] = 0.3 + 0.5 * (np.arange(5, 61) - 4) / 56.0
        k = np.arange(61, 100) - 60
        qw[61:] = 0.8 - 0.009 * k - 0.0002 * k * k
        session = _session(qx=np.zeros(100), qw=qw)
        stroke = StrokeRecord(index=0, start_frame=0, end_frame=100)
        result = segment_phases(session, stroke, SegmentationParams(smooth_window_frames=1))
        assert not result.accepted
        assert result.reason is RejectReason.PHASE_TOO_SHORT

    def test_phases_tile_the_stroke(self, default_trial):
        _, _, _, session = default_trial
        for record in segment_session(session):
            if not record.accepted:
                continue
            spans = record.phases
            assert spans[0].start_frame == record.start_frame
            assert spans[2].end_frame == record.end_frame
            assert spans[0].end_frame == spans[1].start_frame
            assert spans[1].end_frame == spans[2].start_frame
            assert all(len(s) >= SegmentationParams().min_phase_frames for s in spans)

    def test_deterministic(self, default_trial):
        _, _, _, session = default_trial
        assert segment_session(session) == segment_session(session)

    def test_rejected_strokes_carry_exactly_one_reason(self, default_trial):
        _, _, _, session = default_trial
        for record in segment_session(session):
            if record.accepted:
                assert record.reason is None
            else:
                assert isinstance(record.reason, RejectReason)


class TestStandardize:
    def _stroke_with_lengths(self, catch, pull, recovery):
        total = catch + pull + recovery
        spans = None
        record = StrokeRecord(index=0, start_frame=0, end_frame=total)
        from paddlekit.segment import PhaseSpan

        spans = (
            PhaseSpan(Phase.CATCH, 0, catch),
            PhaseSpan(Phase.PULL, catch, catch + pull),
            PhaseSpan(Phase.RECOVERY, catch + pull, total),
        )
        return StrokeRecord(index=0, start_frame=0, end_frame=total, phases=spans)

    def test_truncates_to_first_standard_frames(self):
        record = self._stroke_with_lengths(55, 55, 55)
        session = _session(qx=np.arange(165, dtype=float))
        out = standardize(session, record)
        catch = out[Phase.CATCH]
        assert catch.shape[1] == 40
        assert np.array_equal(catch, session.data[:, :40])

    def test_short_phase_passes_whole(self):
        record = self._stroke_with_lengths(12, 40, 41)
        session = _session(qx=np.arange(93, dtype=float))
        out = standardize(session, record)
        assert out[Phase.CATCH].shape[1] == 12
        assert out[Phase.PULL].shape[1] == 40
        assert out[Phase.RECOVERY].shape[1] == 40

    def test_exact_boundary_is_identity(self):
        record = self._stroke_with_lengths(40, 40, 40)
        session = _session(qx=np.arange(120, dtype=float))
        out = standardize(session, record)
        assert np.array_equal(out[Phase.PULL], session.data[:, 40:80])


class TestExportRawTensor:
    def test_exact_length_identity(self):
        m = np.arange(80, dtype=float).reshape(2, 40)
        assert np.array_equal(export_raw_tensor(m, 40), m)

    def test_short_phase_repeats_final_frame(self):
        m = np.arange(24, dtype=float).reshape(2, 12)
        out = export_raw_tensor(m, 40)
        assert out.shape == (2, 40)
        assert np.array_equal(out[:, :12], m)
        assert np.all(out[:, 12:] == m[:, -1:])

    def test_empty_phase_raises(self):
        with pytest.raises(EmptyPhase):
            export_raw_tensor(np.empty((3, 0)), 40)


class TestRecordTable:
    def test_round_trip(self, default_trial):
        _, _, _, session = default_trial
        records = segment_session(session)
        assert records_from_table(records_to_table(records)) == records


def test_moving_average_edges_shrink():
    x = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    out = moving_average(x, 5)
    assert out[0] == pytest.approx((1 + 2 + 3) / 3)
    assert out[2] == pytest.approx(3.0)
    assert out[4] == pytest.approx((3 + 4 + 5) / 3)
