"""Command-line front door for the whole pipeline.

One binary, subcommand style: synth, ingest, segment, featurize, train,
evaluate, importance, report, serve.  Every artifact a subcommand writes can
be reloaded by the matching module import routine, and ``--seed`` makes
every command deterministic.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .channels import canonical_channels
from .errors import PaddlekitError
from .evaluate import (
    DEVICE_LOCATIONS,
    evaluate_all_devices,
    evaluate_suite,
    permutation_importance,
)
from .features import (
    FeatureRegistry,
    dataset_from_table,
    dataset_to_table,
    featurize_trial,
)
from .ingest import SourceFormat, TrialLabel, load_trial, trial_inputs_from_payloads
from .models import (
    ANOMALY_KINDS,
    SUPERVISED_KINDS,
    HyperParams,
    ModelKind,
    load_model,
    train,
)
from .report import (
    importance_table_text,
    metrics_table_text,
    render_importance_figure,
    write_report,
)
from .segment import (
    PHASES,
    SegmentationParams,
    records_from_table,
    records_to_table,
    segment_session,
)
from .serve import ModelBundle, ProviderConfig, SessionStore, create_app
from .synth import SynthSpec, generate_dataset, generate_trial

TRIAL_FILES = ("phone_accel", "phone_gyro", "phone_mag", "watch_left", "watch_right")


def _segmentation_params(args) -> SegmentationParams:
    defaults = SegmentationParams()
    return SegmentationParams(
        smooth_window_frames=args.smooth_window or defaults.smooth_window_frames,
        gap_threshold_sigma=(
            args.gap_sigma if args.gap_sigma is not None else defaults.gap_threshold_sigma
        ),
        min_gap_frames=args.min_gap_frames or defaults.min_gap_frames,
        min_stroke_s=args.min_stroke_s or defaults.min_stroke_s,
        max_stroke_s=args.max_stroke_s or defaults.max_stroke_s,
        catch_search_fraction=args.catch_fraction or defaults.catch_search_fraction,
        min_phase_frames=args.min_phase_frames or defaults.min_phase_frames,
        standard_frames=args.standard_frames or defaults.standard_frames,
    )


def _add_segmentation_flags(parser: argparse.ArgumentParser) -> None:
    d = SegmentationParams()
    parser.add_argument("--smooth-window", type=int, default=None,
                        help=f"moving-average window frames (default {d.smooth_window_frames})")
    parser.add_argument("--gap-sigma", type=float, default=None,
                        help=f"gap threshold in sigmas (default {d.gap_threshold_sigma})")
    parser.add_argument("--min-gap-frames", type=int, default=None,
                        help=f"shortest kept gap run (default {d.min_gap_frames})")
    parser.add_argument("--min-stroke-s", type=float, default=None,
                        help=f"shortest stroke seconds (default {d.min_stroke_s})")
    parser.add_argument("--max-stroke-s", type=float, default=None,
                        help=f"longest stroke seconds (default {d.max_stroke_s})")
    parser.add_argument("--catch-fraction", type=float, default=None,
                        help=f"catch search fraction (default {d.catch_search_fraction})")
    parser.add_argument("--min-phase-frames", type=int, default=None,
                        help=f"shortest phase frames (default {d.min_phase_frames})")
    parser.add_argument("--standard-frames", type=int, default=None,
                        help=f"phase truncation length (default {d.standard_frames})")


def _add_trial_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("trial_dir", type=Path,
                        help="directory holding the five trial files "
                             "(phone_accel.csv, phone_gyro.csv, phone_mag.csv, "
                             "watch_left.csv, watch_right.csv)")
    parser.add_argument("--format", choices=[f.value for f in SourceFormat],
                        default=SourceFormat.CANONICAL.value,
                        help="source file format (default canonical)")
    parser.add_argument("--rate", type=float, default=50.0,
                        help="alignment grid rate in Hz (default 50)")
    parser.add_argument("--label", choices=[l.value for l in TrialLabel],
                        default=TrialLabel.UNLABELED.value,
                        help="trial label (default unlabeled)")


def _load_trial_from_dir(args):
    payloads = {}
    for role in TRIAL_FILES:
        path = args.trial_dir / f"{role}.csv"
        if not path.exists():
            raise PaddlekitError(f"trial file missing: {path}")
        payloads[role] = path.read_bytes()
    inputs = trial_inputs_from_payloads(payloads, SourceFormat(args.format))
    return load_trial(inputs, rate_hz=args.rate, meta=TrialLabel(args.label))


def _hyperparams(args) -> HyperParams:
    hp = HyperParams(rng_seed=args.seed)
    overrides = {}
    if getattr(args, "svc_c", None) is not None:
        overrides["svc_c"] = args.svc_c
    if getattr(args, "trees", None) is not None:
        overrides["rf_trees"] = args.trees
        overrides["gb_estimators"] = args.trees
        overrides["et_estimators"] = args.trees
        overrides["iso_trees"] = args.trees
    if getattr(args, "learning_rate", None) is not None:
        overrides["gb_learning_rate"] = args.learning_rate
    return replace(hp, **overrides) if overrides else hp


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    print(path)


# --- subcommands -------------------------------------------------------------


def cmd_synth(args) -> int:
    spec = SynthSpec(
        n_strokes=args.strokes,
        rate_hz=args.rate,
        form=TrialLabel(args.form),
        class_separation=args.separation,
        noise_sigma=args.noise if args.noise is not None else SynthSpec.noise_sigma,
        period_jitter=args.jitter if args.jitter is not None else SynthSpec.period_jitter,
        seed=args.seed,
    )
    payloads, truth = generate_trial(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for role, data in payloads.items():
        (out / f"{role}.csv").write_bytes(data)
        print(out / f"{role}.csv")
    truth_doc = {
        "v": 1,
        "form": truth.form.value,
        "stroke_spans": [list(span) for span in truth.stroke_spans],
        "phase_bounds": [list(pb) for pb in truth.phase_bounds],
        "signal_channels": [ch.name for ch in truth.signal_channels],
    }
    _write(out / "ground_truth.json", json.dumps(truth_doc, indent=2))
    return 0


def cmd_ingest(args) -> int:
    session = _load_trial_from_dir(args)
    doc = {
        "v": 1,
        "frames": session.frames,
        "rate_hz": session.rate_hz,
        "t0_ns": session.t0_ns,
        "t1_ns": session.t1_ns,
        "channels": [ch.name for ch in session.registry],
        "parse_report": session.parse_report,
    }
    text = json.dumps(doc, indent=2)
    if args.out:
        _write(Path(args.out), text)
    else:
        print(text)
    return 0


def cmd_segment(args) -> int:
    session = _load_trial_from_dir(args)
    records = segment_session(session, _segmentation_params(args))
    table = records_to_table(records)
    if args.out:
        _write(Path(args.out), table)
    else:
        print(table, end="")
    if args.report:
        accepted = sum(1 for r in records if r.accepted)
        print(f"strokes: {len(records)} total, {accepted} accepted, "
              f"{len(records) - accepted} rejected", file=sys.stderr)
    return 0


def cmd_featurize(args) -> int:
    session = _load_trial_from_dir(args)
    params = _segmentation_params(args)
    records = segment_session(session, params)
    registry = FeatureRegistry.default(session.registry)
    datasets = featurize_trial(session, records, registry, params)
    _write(Path(args.out), dataset_to_table(datasets, registry))
    return 0


def cmd_train(args) -> int:
    datasets, registry = dataset_from_table(Path(args.data).read_text(encoding="utf-8"))
    hp = _hyperparams(args)
    kind = ModelKind(args.kind)
    out = Path(args.out)
    if args.bundle:
        models = {
            phase: train(kind, datasets[phase], registry, hp, phase=phase.value)
            for phase in PHASES
        }
        ModelBundle(models, registry).save(out)
        print(out)
    else:
        phase = PHASES[0] if args.phase is None else next(
            ph for ph in PHASES if ph.value == args.phase
        )
        model = train(kind, datasets[phase], registry, hp, phase=phase.value)
        out.parent.mkdir(parents=True, exist_ok=True)
        from .models import save_model

        out.write_bytes(save_model(model))
        print(out)
    return 0


def cmd_evaluate(args) -> int:
    datasets, registry = dataset_from_table(Path(args.data).read_text(encoding="utf-8"))
    kinds = tuple(ModelKind(k) for k in args.models.split(",")) if args.models != "all" \
        else SUPERVISED_KINDS + ANOMALY_KINDS
    report = evaluate_suite(
        datasets, registry, kinds, _hyperparams(args), args.k, args.seed, jobs=args.jobs
    )
    if args.by_device:
        report.device_reports = evaluate_all_devices(
            datasets, registry, hp=_hyperparams(args), k=args.k, seed=args.seed
        )
    out = Path(args.out)
    written = write_report(report, out, figures=not args.no_figures)
    for name, path in written.items():
        print(f"{name}: {path}")
    print(f"report digest: {report.digest()}")
    return 0


def cmd_importance(args) -> int:
    datasets, registry = dataset_from_table(Path(args.data).read_text(encoding="utf-8"))
    phase = next(ph for ph in PHASES if ph.value == args.phase)
    hp = _hyperparams(args)
    model = train(ModelKind(args.kind), datasets[phase], registry, hp, phase=args.phase)
    importance = permutation_importance(
        model, datasets[phase], registry, repeats=args.repeats, seed=args.seed
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "importance.csv", importance.to_table())
    _write(out / "importance.txt", importance_table_text(importance))
    if not args.no_figures:
        print(render_importance_figure(importance, out))
    return 0


def cmd_report(args) -> int:
    datasets, registry = dataset_from_table(Path(args.data).read_text(encoding="utf-8"))
    report = evaluate_suite(
        datasets, registry, SUPERVISED_KINDS + ANOMALY_KINDS,
        _hyperparams(args), args.k, args.seed, jobs=args.jobs,
    )
    if args.by_device:
        report.device_reports = evaluate_all_devices(
            datasets, registry, hp=_hyperparams(args), k=args.k, seed=args.seed
        )
    if args.importance:
        phase = PHASES[0]
        model = train(ModelKind.EXTRA_TREES, datasets[phase], registry,
                      _hyperparams(args), phase=phase.value)
        report.importance = permutation_importance(
            model, datasets[phase], registry, repeats=10, seed=args.seed
        )
    out = Path(args.out)
    write_report(report, out, figures=not args.no_figures)
    print(metrics_table_text(report), end="")
    for name, sub in report.device_reports.items():
        print(metrics_table_text(sub, title=f"Device: {name}"), end="")
    print(f"report digest: {report.digest()}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    bundle = ModelBundle.load(args.bundle)
    store = SessionStore(args.session_dir)
    app = create_app(
        bundle,
        provider=ProviderConfig.from_env(),
        store=store,
        params=SegmentationParams(),
        upload_format=SourceFormat(args.format),
        rate_hz=args.rate,
    )
    host, _, port = args.listen.partition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paddlekit",
        description="Paddling-stroke quality pipeline: synthesis, ingestion, "
                    "segmentation, features, models, evaluation, and serving.",
    )
    parser.add_argument("--version", action="version", version=f"paddlekit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic five-file trial")
    p.add_argument("--strokes", type=int, default=10, help="stroke count (default 10)")
    p.add_argument("--rate", type=float, default=50.0, help="session rate Hz (default 50)")
    p.add_argument("--form", choices=["optimal", "suboptimal"], default="optimal",
                   help="paddling form (default optimal)")
    p.add_argument("--separation", type=float, default=1.0,
                   help="class separation in channel sigmas (default 1.0)")
    p.add_argument("--noise", type=float, default=None, help="noise sigma (default 0.05)")
    p.add_argument("--jitter", type=float, default=None,
                   help="stroke period jitter fraction (default 0.05)")
    p.add_argument("--seed", type=int, default=0, help="rng seed (default 0)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="parse and align a five-file trial")
    _add_trial_flags(p)
    p.add_argument("--out", default=None, help="write session summary JSON here")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("segment", help="segment a trial into strokes and phases")
    _add_trial_flags(p)
    _add_segmentation_flags(p)
    p.add_argument("--out", default=None, help="write the stroke record table here")
    p.add_argument("--report", action="store_true", help="print an acceptance summary")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("featurize", help="feature table for a trial")
    _add_trial_flags(p)
    _add_segmentation_flags(p)
    p.add_argument("--out", required=True, help="output feature table path")
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train", help="train a model (or a per-phase bundle)")
    p.add_argument("--data", required=True, help="feature table path")
    p.add_argument("--kind", choices=[k.value for k in ModelKind],
                   default=ModelKind.EXTRA_TREES.value,
                   help="model kind (default extra_trees)")
    p.add_argument("--phase", choices=[ph.value for ph in PHASES], default=None,
                   help="phase to train on (default catch)")
    p.add_argument("--bundle", action="store_true",
                   help="train all three phases into a bundle directory")
    p.add_argument("--trees", type=int, default=None, help="ensemble size override")
    p.add_argument("--svc-c", type=float, default=None, help="SVC C override")
    p.add_argument("--learning-rate", type=float, default=None,
                   help="gradient boosting learning rate override")
    p.add_argument("--seed", type=int, default=0, help="rng seed (default 0)")
    p.add_argument("--out", required=True, help="model file or bundle directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="cross-validated metric report")
    p.add_argument("--data", required=True, help="feature table path")
    p.add_argument("--models", default="all",
                   help="comma-separated kinds or 'all' (default all)")
    p.add_argument("--k", type=int, default=5, help="fold count (default 5)")
    p.add_argument("--seed", type=int, default=0, help="fold shuffle seed (default 0)")
    p.add_argument("--by-device", action="store_true", help="add per-device sub-reports")
    p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p.add_argument("--jobs", type=int, default=1,
                   help="worker thread cap for cell evaluation (default 1)")
    p.add_argument("--trees", type=int, default=None, help="ensemble size override")
    p.add_argument("--svc-c", type=float, default=None, help="SVC C override")
    p.add_argument("--learning-rate", type=float, default=None,
                   help="gradient boosting learning rate override")
    p.add_argument("--out", required=True, help="report output directory")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("importance", help="permutation feature importance")
    p.add_argument("--data", required=True, help="feature table path")
    p.add_argument("--kind", choices=[k.value for k in SUPERVISED_KINDS],
                   default=ModelKind.EXTRA_TREES.value,
                   help="model kind (default extra_trees)")
    p.add_argument("--phase", choices=[ph.value for ph in PHASES], default="catch",
                   help="phase dataset (default catch)")
    p.add_argument("--repeats", type=int, default=10, help="shuffles per feature (default 10)")
    p.add_argument("--seed", type=int, default=0, help="rng seed (default 0)")
    p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p.add_argument("--trees", type=int, default=None, help="ensemble size override")
    p.add_argument("--svc-c", type=float, default=None, help="SVC C override")
    p.add_argument("--learning-rate", type=float, default=None,
                   help="gradient boosting learning rate override")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_importance)

    p = sub.add_parser("report", help="full report: tables, figures, optional extras")
    p.add_argument("--data", required=True, help="feature table path")
    p.add_argument("--k", type=int, default=5, help="fold count (default 5)")
    p.add_argument("--seed", type=int, default=0, help="seed (default 0)")
    p.add_argument("--by-device", action="store_true", help="add per-device tables")
    p.add_argument("--importance", action="store_true", help="add permutation importance")
    p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p.add_argument("--jobs", type=int, default=1,
                   help="worker thread cap for cell evaluation (default 1)")
    p.add_argument("--trees", type=int, default=None, help="ensemble size override")
    p.add_argument("--svc-c", type=float, default=None, help="SVC C override")
    p.add_argument("--learning-rate", type=float, default=None,
                   help="gradient boosting learning rate override")
    p.add_argument("--out", required=True, help="report output directory")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="run the inference HTTP service")
    p.add_argument("--bundle", required=True, help="model bundle directory")
    p.add_argument("--listen", default="127.0.0.1:8000",
                   help="host:port (default 127.0.0.1:8000)")
    p.add_argument("--format", choices=[f.value for f in SourceFormat],
                   default=SourceFormat.CANONICAL.value,
                   help="expected upload format (default canonical)")
    p.add_argument("--rate", type=float, default=50.0, help="grid rate Hz (default 50)")
    p.add_argument("--session-dir", default=None,
                   help="persist session records into this directory")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except PaddlekitError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
