import json
import re
import subprocess
import sys
from pathlib import Path

import pytest

from paddlekit.cli import main
from paddlekit.features import dataset_from_table
from paddlekit.segment import PHASES, records_from_table
from paddlekit.serve import ModelBundle


@pytest.fixture(scope="module")
def trial_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("trial")
    code = main(["synth", "--strokes", "10", "--seed", "4", "--out", str(out)])
    assert code == 0
    return out


@pytest.fixture(scope="module")
def labeled_tables(tmp_path_factory):
    """Optimal + suboptimal trials concatenated into one labeled table."""
    base = tmp_path_factory.mktemp("data")
    tables = []
    for form, seed in (("optimal", 6), ("suboptimal", 7)):
        trial = base / form
        assert main([
            "synth", "--strokes", "6", "--seed", str(seed), "--form", form,
            "--separation", "2.0", "--out", str(trial),
        ]) == 0
        table = base / f"{form}.csv"
        assert main([
            "featurize", str(trial), "--label", form, "--out", str(table),
        ]) == 0
        tables.append(table.read_text())
    header, _, body_a = tables[0].partition("\n")
    _, _, body_b = tables[1].partition("\n")
    merged = base / "features.csv"
    merged.write_text(header + "\n" + body_a + body_b)
    return merged


class TestSynthAndSegment:
    def test_synth_writes_five_files_and_truth(self, trial_dir):
        for role in ("phone_accel", "phone_gyro", "phone_mag", "watch_left", "watch_right"):
            assert (trial_dir / f"{role}.csv").exists()
        truth = json.loads((trial_dir / "ground_truth.json").read_text())
        assert len(truth["stroke_spans"]) == 10

    def test_segment_report_lists_ten_accepted(self, trial_dir, tmp_path, capsys):
        out = tmp_path / "records.csv"
        code = main(["segment", str(trial_dir), "--out", str(out), "--report"])
        captured = capsys.readouterr()
        assert code == 0
        assert "10 accepted" in captured.err
        records = records_from_table(out.read_text())
        assert sum(1 for r in records if r.accepted) == 10

    def test_ingest_summary(self, trial_dir, capsys):
        assert main(["ingest", str(trial_dir)]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert len(doc["channels"]) == 45


class TestFeaturizeTrainEvaluate:
    def test_feature_table_round_trips(self, labeled_tables):
        datasets, registry = dataset_from_table(labeled_tables.read_text())
        assert len(registry) == 360
        for phase in PHASES:
            assert len(datasets[phase]) == 12

    def test_train_bundle_and_reload(self, labeled_tables, tmp_path):
        bundle_dir = tmp_path / "bundle"
        code = main([
            "train", "--data", str(labeled_tables), "--bundle",
            "--kind", "extra_trees", "--seed", "3", "--out", str(bundle_dir),
        ])
        assert code == 0
        bundle = ModelBundle.load(bundle_dir)
        assert set(bundle.models) == set(PHASES)

    def test_evaluate_is_deterministic(self, labeled_tables, tmp_path, capsys):
        digests = []
        for run in ("a", "b"):
            code = main([
                "evaluate", "--data", str(labeled_tables),
                "--models", "extra_trees,gradient_boost",
                "--k", "4", "--seed", "7", "--no-figures",
                "--out", str(tmp_path / run),
            ])
            assert code == 0
            out = capsys.readouterr().out
            digests.append(re.search(r"report digest: (\w+)", out).group(1))
        assert digests[0] == digests[1]
        report = json.loads((tmp_path / "a" / "report.json").read_text())
        assert len(report["cells"]) == 6

    def test_train_on_empty_data_exits_one(self, labeled_tables, tmp_path, capsys):
        header = labeled_tables.read_text().splitlines()[0]
        empty = tmp_path / "empty.csv"
        empty.write_text(header + "\n")
        code = main([
            "train", "--data", str(empty), "--kind", "extra_trees",
            "--out", str(tmp_path / "model.bin"),
        ])
        assert code == 1
        assert "TooFewSamples" in capsys.readouterr().err

    def test_importance_outputs(self, labeled_tables, tmp_path):
        code = main([
            "importance", "--data", str(labeled_tables), "--repeats", "2",
            "--seed", "1", "--no-figures", "--out", str(tmp_path / "imp"),
        ])
        assert code == 0
        table = (tmp_path / "imp" / "importance.csv").read_text()
        assert table.startswith("feature,importance")


class TestUsage:
    def test_unknown_subcommand_exits_two(self, capsys):
        assert main(["frobnicate"]) == 2

    @pytest.mark.parametrize(
        "name",
        ["synth", "ingest", "segment", "featurize", "train",
         "evaluate", "importance", "report", "serve"],
    )
    def test_help_lists_defaults(self, name, capsys):
        assert main([name, "--help"]) == 0
        assert "default" in capsys.readouterr().out

    def test_console_entry_point_runs(self):
        result = subprocess.run(
            [sys.executable, "-m", "paddlekit.cli", "--version"],
            capture_output=True, text=True,
        )
        assert result.returncode == 0
        assert "paddlekit" in result.stdout
