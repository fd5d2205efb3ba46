"""Shared fixtures: expensive synth artifacts are built once per session."""

from __future__ import annotations

import pytest

from paddlekit.ingest import SourceFormat, TrialLabel, load_trial, trial_inputs_from_payloads
from paddlekit.models import HyperParams, ModelKind, train
from paddlekit.segment import PHASES, segment_session
from paddlekit.serve import ModelBundle
from paddlekit.synth import SynthSpec, generate_dataset, generate_trial


@pytest.fixture(scope="session")
def noiseless_trial():
    spec = SynthSpec(n_strokes=10, noise_sigma=0.0, period_jitter=0.0, seed=11)
    payloads, truth = generate_trial(spec)
    session = load_trial(
        trial_inputs_from_payloads(payloads, SourceFormat.CANONICAL), rate_hz=spec.rate_hz
    )
    return spec, payloads, truth, session


@pytest.fixture(scope="session")
def default_trial():
    spec = SynthSpec(n_strokes=10, seed=5)
    payloads, truth = generate_trial(spec)
    session = load_trial(
        trial_inputs_from_payloads(payloads, SourceFormat.CANONICAL), rate_hz=spec.rate_hz
    )
    return spec, payloads, truth, session


@pytest.fixture(scope="session")
def separable_dataset():
    """22 vectors per phase at class separation 2.0 (11 per class)."""
    return generate_dataset(11, SynthSpec(class_separation=2.0), seed=1)


@pytest.fixture(scope="session")
def small_dataset():
    """10 vectors per phase (5 per class), for round-trip style tests."""
    return generate_dataset(5, SynthSpec(class_separation=2.0), seed=2)


@pytest.fixture(scope="session")
def trained_bundle(separable_dataset):
    sd = separable_dataset
    hp = HyperParams(rng_seed=0)
    models = {
        phase: train(ModelKind.EXTRA_TREES, sd.datasets[phase], sd.registry, hp, phase.value)
        for phase in PHASES
    }
    return ModelBundle(models, sd.registry)
