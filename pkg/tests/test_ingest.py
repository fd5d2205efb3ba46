import numpy as np
import pytest

from paddlekit.channels import (
    Axis,
    ChannelId,
    Device,
    LEFT_QUAT_W,
    LEFT_QUAT_X,
    Sensor,
    canonical_channels,
)
from paddlekit.errors import (
    BadTrialInput,
    EmptyFile,
    MissingRequiredChannel,
    NonMonotonicTime,
    NoTemporalOverlap,
)
from paddlekit.ingest import (
    AlignedSession,
    SampleSeries,
    SourceFormat,
    align,
    load_trial,
    parse_sensor_file,
    trial_inputs_from_payloads,
)

EPOCH = 1_700_000_000_000_000_000


def _series(channel, start_s, end_s, rate=25.0, value_fn=None):
    n = int((end_s - start_s) * rate) + 1
    ts = EPOCH + (np.arange(n) * 1e9 / rate).astype(np.int64) + int(start_s * 1e9)
    values = np.ones(n) * 0.5 if value_fn is None else value_fn(np.arange(n))
    return SampleSeries(channel, ts, values)


def _quat_pair(start_s=0.0, end_s=10.0, rate=25.0):
    return [
        _series(LEFT_QUAT_X, start_s, end_s, rate),
        _series(LEFT_QUAT_W, start_s, end_s, rate),
    ]


class TestParseSensorFile:
    def test_canonical_three_columns(self):
        data = (
            f"time_ns,accel_x,accel_y,accel_z\n"
            f"{EPOCH},1.0,2.0,3.0\n{EPOCH + 10_000_000},1.5,2.5,3.5\n"
        ).encode()
        parsed = parse_sensor_file(data, SourceFormat.CANONICAL, Device.PHONE)
        assert len(parsed.series) == 3
        assert all(len(s) == 2 for s in parsed.series)
        axes = {s.channel.axis for s in parsed.series}
        assert axes == {Axis.X, Axis.Y, Axis.Z}

    def test_millisecond_time_column_scaled_to_ns(self):
        # oracle: hand conversion of a 3-row fixture (values < 1e13 => ms)
        ms = [1_700_000_000_000, 1_700_000_000_020, 1_700_000_000_040]
        rows = "\n".join(f"{t},{t/1e3},0.1,0.2,0.3" for t in ms)
        data = f"time,seconds_elapsed,x,y,z\n{rows}\n".encode()
        parsed = parse_sensor_file(
            data, SourceFormat.PHONE_LOGGER, Device.PHONE, Sensor.ACCELEROMETER
        )
        expected = [t * 1_000_000 for t in ms]
        for s in parsed.series:
            assert s.timestamps_ns.tolist() == expected

    def test_header_only_file_is_empty(self):
        with pytest.raises(EmptyFile):
            parse_sensor_file(b"time_ns,accel_x\n", SourceFormat.CANONICAL, Device.PHONE)

    def test_malformed_rows_dropped_and_counted(self):
        good = [f"{EPOCH + i * 10_000_000},{i / 10}" for i in range(8)]
        bad = ["oops,1.0", f"{EPOCH + 99_000_000},not-a-number"]
        data = ("time_ns,accel_x\n" + "\n".join(good + bad) + "\n").encode()
        parsed = parse_sensor_file(data, SourceFormat.CANONICAL, Device.PHONE)
        assert parsed.report.rows_total == 10
        assert parsed.report.rows_dropped == 2
        assert len(parsed.series[0]) == 8

    def test_duplicate_timestamps_keep_last(self):
        t = EPOCH
        data = f"time_ns,accel_x\n{t},1.0\n{t + 10_000_000},2.0\n{t},9.0\n".encode()
        parsed = parse_sensor_file(data, SourceFormat.CANONICAL, Device.PHONE)
        s = parsed.series[0]
        assert s.values.tolist() == [9.0, 2.0]
        assert parsed.report.duplicates_collapsed == 1

    def test_watch_logger_wide_file(self):
        header = "time,accelerationX,quaternionW,quaternionX,roll"
        rows = [f"{EPOCH + i * 20_000_000},0.1,0.9,0.1,0.3" for i in range(3)]
        data = ("\n".join([header] + rows) + "\n").encode()
        parsed = parse_sensor_file(data, SourceFormat.WATCH_LOGGER, Device.LEFT_WATCH)
        names = {s.channel.name for s in parsed.series}
        assert "left_watch.quaternion.w" in names
        assert "left_watch.orientation.roll" in names
        assert len(parsed.series) == 4

    def test_non_monotonic_rejected_at_series_level(self):
        with pytest.raises(NonMonotonicTime):
            SampleSeries(LEFT_QUAT_X, np.array([2, 1]), np.array([0.0, 1.0]))


class TestAlign:
    def test_intersection_span_and_frame_count(self):
        # oracle: brute-force enumeration of grid points inside [t0, t1]
        series = [
            _series(LEFT_QUAT_X, 0.0, 10.0),
            _series(LEFT_QUAT_W, 2.0, 12.0),
        ]
        session = align(series, rate_hz=50.0)
        t0 = EPOCH + 2_000_000_000
        t1 = EPOCH + 10_000_000_000
        assert (session.t0_ns, session.t1_ns) == (t0, t1)
        brute = sum(1 for k in range(100_000) if t0 + round(k * 1e9 / 50.0) <= t1)
        assert session.frames == brute == 401

    def test_on_grid_series_passes_through_exactly(self):
        rng = np.random.default_rng(0)
        values = rng.uniform(-1.0, 1.0, 501)
        ts = EPOCH + (np.arange(501) * 20_000_000).astype(np.int64)
        series = [
            SampleSeries(LEFT_QUAT_X, ts, values),
            SampleSeries(LEFT_QUAT_W, ts, np.linspace(0, 1, 501)),
        ]
        session = align(series, rate_hz=50.0)
        assert np.array_equal(session.row(LEFT_QUAT_X), values)

    def test_disjoint_spans_raise(self):
        series = [
            _series(LEFT_QUAT_X, 0.0, 1.0),
            _series(LEFT_QUAT_W, 5.0, 6.0),
        ]
        with pytest.raises(NoTemporalOverlap):
            align(series, rate_hz=50.0)

    def test_missing_left_quaternion_raises(self):
        series = [_series(LEFT_QUAT_X, 0.0, 1.0)]
        with pytest.raises(MissingRequiredChannel):
            align(series, rate_hz=50.0)

    def test_alignment_idempotent_bit_for_bit(self):
        rng = np.random.default_rng(1)
        extra = ChannelId(Device.PHONE, Sensor.ACCELEROMETER, Axis.X)
        series = [
            _series(LEFT_QUAT_X, 0.0, 8.0, 31.0, lambda i: rng.uniform(-1, 1, i.size)),
            _series(LEFT_QUAT_W, -0.5, 8.5, 47.0, lambda i: rng.uniform(-1, 1, i.size)),
            _series(extra, -1.0, 9.0, 103.0, lambda i: rng.uniform(-5, 5, i.size)),
        ]
        first = align(series, rate_hz=50.0)
        again = align(
            [
                SampleSeries(ch, first.grid_ns(), first.row(ch))
                for ch in first.registry
            ],
            rate_hz=50.0,
        )
        assert np.array_equal(first.data, again.data)

    def test_interpolation_never_extrapolates(self):
        rng = np.random.default_rng(2)
        series = [
            _series(LEFT_QUAT_X, 0.0, 5.0, 13.0, lambda i: rng.uniform(-2, 3, i.size)),
            _series(LEFT_QUAT_W, 0.0, 5.0, 17.0, lambda i: rng.uniform(0, 1, i.size)),
        ]
        session = align(series, rate_hz=50.0)
        for s in series:
            row = session.row(s.channel)
            assert row.min() >= s.values.min() - 1e-12
            assert row.max() <= s.values.max() + 1e-12

    def test_input_order_does_not_matter(self):
        rng = np.random.default_rng(3)
        extra = ChannelId(Device.PHONE, Sensor.GYROSCOPE, Axis.Z)
        series = [
            _series(LEFT_QUAT_X, 0.0, 6.0, 29.0, lambda i: rng.uniform(-1, 1, i.size)),
            _series(LEFT_QUAT_W, 0.0, 6.0, 41.0, lambda i: rng.uniform(-1, 1, i.size)),
            _series(extra, 0.0, 6.0, 59.0, lambda i: rng.uniform(-4, 4, i.size)),
        ]
        forward = align(series, rate_hz=50.0)
        backward = align(series[::-1], rate_hz=50.0)
        assert forward.registry == backward.registry
        assert np.array_equal(forward.data, backward.data)

    def test_half_rate_grid_matches_full_rate_at_shared_frames(self):
        rng = np.random.default_rng(4)
        series = [
            _series(LEFT_QUAT_X, 0.0, 6.0, 37.0, lambda i: rng.uniform(-1, 1, i.size)),
            _series(LEFT_QUAT_W, 0.0, 6.0, 53.0, lambda i: rng.uniform(-1, 1, i.size)),
        ]
        full = align(series, rate_hz=50.0)
        half = align(series, rate_hz=25.0)
        assert np.array_equal(half.data, full.data[:, ::2][:, : half.frames])


class TestLoadTrial:
    def test_full_trial_yields_45_channels(self, default_trial):
        _, _, _, session = default_trial
        assert len(session.registry) == 45
        assert session.registry == canonical_channels()
        assert session.parse_report is not None
        assert set(session.parse_report) == {
            "phone_accel", "phone_gyro", "phone_mag", "watch_left", "watch_right",
        }

    def test_four_inputs_is_an_arity_error(self, default_trial):
        _, payloads, _, _ = default_trial
        inputs = trial_inputs_from_payloads(payloads)
        inputs.pop("watch_right")
        with pytest.raises(BadTrialInput):
            load_trial(inputs)

    def test_corrupted_rows_reported_per_file(self, default_trial):
        spec, payloads, _, _ = default_trial
        lines = payloads["phone_accel"].decode().splitlines()
        n_rows = len(lines) - 1
        corrupt = max(1, n_rows // 10)
        for i in range(1, corrupt + 1):
            cells = lines[i].split(",")
            cells[1] = "garbage"
            lines[i] = ",".join(cells)
        damaged = dict(payloads)
        damaged["phone_accel"] = ("\n".join(lines) + "\n").encode()
        session = load_trial(trial_inputs_from_payloads(damaged), rate_hz=spec.rate_hz)
        assert session.parse_report["phone_accel"]["rows_dropped"] == corrupt
        assert session.parse_report["watch_left"]["rows_dropped"] == 0

    def test_parse_errors_name_the_offending_file(self, default_trial):
        _, payloads, _, _ = default_trial
        damaged = dict(payloads)
        damaged["phone_gyro"] = b"time_ns,gyro_x\n"
        with pytest.raises(EmptyFile, match="phone_gyro"):
            load_trial(trial_inputs_from_payloads(damaged))

    def test_quaternions_unit_norm_after_alignment(self, default_trial):
        _, _, _, session = default_trial
        quad = np.stack(
            [
                session.row(ChannelId(Device.LEFT_WATCH, Sensor.QUATERNION, axis))
                for axis in (Axis.W, Axis.X, Axis.Y, Axis.Z)
            ]
        )
        norms = np.sqrt((quad * quad).sum(axis=0))
        assert np.allclose(norms, 1.0, atol=1e-9)
