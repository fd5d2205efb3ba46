import hashlib
from pathlib import Path

import numpy as np
import pytest

from paddlekit.channels import Axis, ChannelId, Device, Sensor
from paddlekit.ingest import SourceFormat, TrialLabel, load_trial, trial_inputs_from_payloads
from paddlekit.segment import PHASES, Phase, segment_session
from paddlekit.synth import SynthSpec, generate_dataset, generate_trial


class TestGenerateTrial:
    def test_deterministic_under_seed(self):
        spec = SynthSpec(n_strokes=3, seed=42)
        first, truth_a = generate_trial(spec)
        second, truth_b = generate_trial(spec)
        assert truth_a == truth_b
        for role in first:
            assert first[role] == second[role]

    def test_different_seed_keeps_boundaries_when_jitter_zero(self):
        a = generate_trial(SynthSpec(n_strokes=4, seed=1, period_jitter=0.0))[1]
        b = generate_trial(SynthSpec(n_strokes=4, seed=2, period_jitter=0.0))[1]
        assert a.stroke_spans == b.stroke_spans
        assert a.phase_bounds == b.phase_bounds

    def test_quaternions_unit_norm_before_noise(self):
        spec = SynthSpec(n_strokes=2, noise_sigma=0.0, seed=3)
        payloads, _ = generate_trial(spec)
        session = load_trial(trial_inputs_from_payloads(payloads), rate_hz=spec.rate_hz)
        for device in (Device.LEFT_WATCH, Device.RIGHT_WATCH):
            quad = np.stack(
                [
                    session.row(ChannelId(device, Sensor.QUATERNION, axis))
                    for axis in (Axis.W, Axis.X, Axis.Y, Axis.Z)
                ]
            )
            assert np.allclose(np.sqrt((quad * quad).sum(axis=0)), 1.0, atol=1e-9)

    def test_noiseless_trial_segments_exactly(self, noiseless_trial):
        spec, _, truth, session = noiseless_trial
        records = [r for r in segment_session(session) if r.accepted]
        assert len(records) == truth.n_strokes
        for record, span, bounds in zip(records, truth.stroke_spans, truth.phase_bounds):
            assert (record.start_frame, record.end_frame) == span
            assert record.phases[0].end_frame == bounds[0]
            assert record.phases[1].end_frame == bounds[1]

    def test_default_noise_recovers_boundaries_within_five_frames(self, default_trial):
        _, _, truth, session = default_trial
        records = [r for r in segment_session(session) if r.accepted]
        assert len(records) == truth.n_strokes
        checked = 0
        for record in records:
            overlaps = [
                min(record.end_frame, e) - max(record.start_frame, s)
                for s, e in truth.stroke_spans
            ]
            k = int(np.argmax(overlaps))
            s, e = truth.stroke_spans[k]
            ce, pe = truth.phase_bounds[k]
            for got, want in [
                (record.start_frame, s),
                (record.end_frame, e),
                (record.phases[0].end_frame, ce),
                (record.phases[1].end_frame, pe),
            ]:
                assert abs(got - want) <= 5
                checked += 1
        assert checked == 4 * truth.n_strokes

    def test_null_separation_emits_identical_distributions(self):
        # separation 0 means the suboptimal trial applies no channel shift
        opt = generate_trial(SynthSpec(n_strokes=2, seed=9, class_separation=0.0))[0]
        sub = generate_trial(
            SynthSpec(
                n_strokes=2, seed=9, class_separation=0.0, form=TrialLabel.SUBOPTIMAL
            )
        )[0]
        assert opt == sub

    def test_golden_fixture_bytes_are_stable(self):
        spec = SynthSpec(n_strokes=2, rate_hz=20.0, seed=123)
        payloads, _ = generate_trial(spec)
        golden = Path(__file__).parent / "golden" / "watch_left_2stroke_20hz_seed123.csv"
        assert payloads["watch_left"] == golden.read_bytes()
        digests = {
            role: hashlib.sha256(data).hexdigest()[:16] for role, data in payloads.items()
        }
        assert digests == {
            "watch_left": "5721dc6508f4567f",
            "watch_right": "426468b8a3519bf1",
            "phone_accel": "e1a0508f3b089e13",
            "phone_gyro": "771d0f1f793f1c71",
            "phone_mag": "73122258dc093f16",
        }


class TestGenerateDataset:
    def test_exact_counts_and_labels(self, separable_dataset):
        sd = separable_dataset
        for phase in PHASES:
            vectors = sd.datasets[phase]
            assert len(vectors) == 22
            labels = [v.label for v in vectors]
            assert labels.count(TrialLabel.OPTIMAL) == 11
            assert labels.count(TrialLabel.SUBOPTIMAL) == 11

    def test_deterministic_datasets(self):
        spec = SynthSpec(class_separation=1.5)
        a = generate_dataset(4, spec, seed=3)
        b = generate_dataset(4, spec, seed=3)
        for phase in PHASES:
            for va, vb in zip(a.datasets[phase], b.datasets[phase]):
                assert np.array_equal(va.values, vb.values)

    def test_signal_channels_recorded_in_truth(self, separable_dataset):
        sd = separable_dataset
        truth = sd.truths[TrialLabel.SUBOPTIMAL]
        assert len(truth.signal_channels) > 0
        assert all(ch.sensor is not Sensor.QUATERNION for ch in truth.signal_channels)


def test_invalid_specs_rejected():
    with pytest.raises(ValueError):
        SynthSpec(n_strokes=0)
    with pytest.raises(ValueError):
        SynthSpec(gap_s=-1.0)
    with pytest.raises(ValueError):
        SynthSpec(noise_sigma=-0.1)
