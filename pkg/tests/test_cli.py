from __future__ import annotations

import json

import pytest

from radsum.cli import build_parser, main
from radsum.corpus import load_dataset, save_dataset
from radsum.review import ReviewSession

from .conftest import extractive_dataset, full_dimensions, make_dataset

@pytest.fixture
def dataset_csv(tmp_path):
    path = tmp_path / "reports.csv"
    save_dataset(extractive_dataset(6, seed=3), path)
    return path


@pytest.fixture
def profile_path(tmp_path):
    profile = {
        "providers": {
            "embedding": {"type": "hash", "dimension": 32, "seed": 5},
            "nli": {"type": "overlap"},
        },
        "systems": [
            {
                "name": "echo-ref",
                "backend": {"type": "reference"},
                "style": {"tier": "base", "style": "brief"},
            },
            {
                "name": "head-1",
                "backend": {"type": "extractive-head", "k": 1},
                "style": {"tier": "base", "style": "brief"},
            },
        ],
        "metrics": {
            "rouge": {"orders": [1, 2], "beta": 1.0},
            "bleu": {"max_order": 4, "smoothing": "epsilon", "epsilon": 1e-9},
        },
        "tokenizer": {"lowercase": True, "strip_punctuation": True},
        "pipeline": {"include_clinical_information": True},
    }
    path = tmp_path / "profile.json"
    path.write_text(json.dumps(profile), encoding="utf-8")
    return path


class TestIngest:
    def test_prints_stats(self, dataset_csv, capsys):
        assert main(["ingest", "--dataset", str(dataset_csv)]) == 0
        out = capsys.readouterr().out
        assert "reports: 6" in out
        assert "mean findings/impression token ratio" in out

    def test_json_output(self, dataset_csv, capsys):
        assert main(["ingest", "--dataset", str(dataset_csv), "--json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["report_count"] == 6

    def test_missing_column_exits_one_and_names_it(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("clinical_information,impression,id\nc,i,a\n", encoding="utf-8")
        assert main(["ingest", "--dataset", str(bad)]) == 1
        assert "findings" in capsys.readouterr().err

    def test_missing_dataset_flag_is_domain_error(self, capsys):
        assert main(["ingest"]) == 1
        assert "--dataset" in capsys.readouterr().err

    def test_external_table_via_column_map(self, tmp_path, capsys):
        external = tmp_path / "chex.csv"
        external.write_text(
            "history,report_text,summary,record\n"
            "dyspnea,lungs hyperinflated today,hyperinflation noted,cx1\n"
            "cough,patchy basilar opacity seen,basilar opacity,cx2\n",
            encoding="utf-8",
        )
        mapping = tmp_path / "map.json"
        mapping.write_text(json.dumps({
            "clinical_information": "history",
            "findings": "report_text",
            "impression": "summary",
            "id": "record",
        }), encoding="utf-8")
        code = main([
            "ingest", "--dataset", str(external), "--column-map", str(mapping),
            "--source", "external", "--json",
        ])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["report_count"] == 2


class TestSplit:
    def test_exact_sizes_and_determinism(self, tmp_path, capsys):
        data = tmp_path / "data.csv"
        save_dataset(make_dataset(550, seed=13), data)
        out1 = tmp_path / "out1"
        out2 = tmp_path / "out2"
        for out in (out1, out2):
            code = main([
                "split", "--dataset", str(data), "--train", "500", "--test", "50",
                "--strata", "gender,age", "--seed", "3407", "--out-dir", str(out),
            ])
            assert code == 0
        train1 = (out1 / "train.csv").read_bytes()
        train2 = (out2 / "train.csv").read_bytes()
        assert train1 == train2
        assert (out1 / "test.csv").read_bytes() == (out2 / "test.csv").read_bytes()
        assert len(load_dataset(out1 / "train.csv")) == 500
        assert len(load_dataset(out1 / "test.csv")) == 50
        manifest = json.loads((out1 / "manifest.json").read_text())
        assert manifest["seed"] == 3407
        assert manifest["strata"] == ["gender", "age_bucket"]

    def test_oversient_request_fails(self, dataset_csv, tmp_path, capsys):
        code = main([
            "split", "--dataset", str(dataset_csv), "--train", "10", "--test", "10",
            "--out-dir", str(tmp_path / "x"),
        ])
        assert code == 1


class TestGenerate:
    def test_writes_jsonl(self, dataset_csv, profile_path, tmp_path, capsys):
        out = tmp_path / "gen"
        code = main([
            "generate", "--dataset", str(dataset_csv), "--profile", str(profile_path),
            "--system", "head-1", "--out-dir", str(out),
        ])
        assert code == 0
        lines = (out / "generated.jsonl").read_text().strip().split("\n")
        assert len(lines) == 6
        record = json.loads(lines[0])
        assert record["system"] == "head-1"
        assert record["final_text"]
        assert (out / "manifest.json").exists()

    def test_unknown_system_name(self, dataset_csv, profile_path, tmp_path):
        assert main([
            "generate", "--dataset", str(dataset_csv), "--profile", str(profile_path),
            "--system", "nonexistent", "--out-dir", str(tmp_path / "g"),
        ]) == 1


class TestEvaluate:
    def test_markdown_table_and_artifacts(self, dataset_csv, profile_path,
                                          tmp_path, capsys):
        out = tmp_path / "run"
        code = main([
            "evaluate", "--dataset", str(dataset_csv), "--systems", str(profile_path),
            "--table-format", "markdown", "--out-dir", str(out),
        ])
        assert code == 0
        stdout = capsys.readouterr().out
        assert "| echo-ref | 1.000 | 1.000 | 1.000 |" in stdout
        assert (out / "manifest.json").exists()
        assert (out / "scores.jsonl").exists()
        assert (out / "table.csv").exists()
        assert (out / "table.md").exists()
        assert (out / "figures" / "metrics.png").stat().st_size > 0

    def test_config_file_with_flag_override(self, dataset_csv, profile_path,
                                            tmp_path, capsys):
        config = tmp_path / "run.json"
        config.write_text(json.dumps({
            "dataset": str(dataset_csv),
            "profile": str(profile_path),
            "table_format": "markdown",
        }), encoding="utf-8")
        code = main(["evaluate", "--config", str(config),
                     "--table-format", "delimited"])
        assert code == 0
        stdout = capsys.readouterr().out
        assert stdout.startswith("system,rouge,bleu,bert,fc,excluded")


class TestPerturbCommand:
    def test_writes_noised_dataset(self, dataset_csv, tmp_path, capsys):
        out = tmp_path / "noisy.csv"
        code = main([
            "perturb", "--dataset", str(dataset_csv), "--rate", "0.2",
            "--seed", "7", "--out", str(out),
        ])
        assert code == 0
        noisy = load_dataset(out)
        clean = load_dataset(dataset_csv)
        assert [r.id for r in noisy] == [r.id for r in clean]
        assert any(a.findings != b.findings for a, b in zip(noisy, clean))
        assert all(a.impression == b.impression for a, b in zip(noisy, clean))

    def test_rate_zero_is_identity(self, dataset_csv, tmp_path):
        out = tmp_path / "same.csv"
        main(["perturb", "--dataset", str(dataset_csv), "--rate", "0",
              "--seed", "7", "--out", str(out)])
        assert out.read_bytes() == dataset_csv.read_bytes()


class TestStability:
    def test_reference_system_zero_delta(self, dataset_csv, profile_path,
                                         tmp_path, capsys):
        out = tmp_path / "stab"
        code = main([
            "stability", "--dataset", str(dataset_csv), "--profile", str(profile_path),
            "--system", "echo-ref", "--rate", "0.03", "--seed", "11",
            "--table-format", "delimited", "--out-dir", str(out),
        ])
        assert code == 0
        lines = capsys.readouterr().out.strip().split("\n")
        assert lines[1].startswith("clean,1.000,1.000,1.000")
        delta_cells = lines[3].split(",")
        assert delta_cells[0] == "delta"
        assert delta_cells[1:4] == ["0.000", "0.000", "0.000"]
        assert (out / "figures" / "stability.png").stat().st_size > 0


class TestReviewCli:
    def test_aggregate_from_log(self, tmp_path, capsys):
        log = tmp_path / "session.jsonl"
        session = ReviewSession.create(
            [("g1", "gen one"), ("g2", "gen two")],
            [("o1", "orig one")],
            ["r1", "r2"], seed=3, log_path=log,
        )
        for item in session.order:
            for rater in ("r1", "r2"):
                session.submit(item.item_id, rater, "positive", full_dimensions(4))
        out = tmp_path / "agg"
        code = main(["review", "aggregate", "--log", str(log),
                     "--out-dir", str(out)])
        assert code == 0
        stdout = capsys.readouterr().out
        assert "acceptable fraction: 1.0000" in stdout
        summary = json.loads((out / "summary.json").read_text())
        assert summary["counts"]["positive"] == 2
        assert (out / "figures" / "ratings.png").stat().st_size > 0
        assert (out / "summary.csv").exists()

    def test_aggregate_missing_log(self, tmp_path):
        assert main(["review", "aggregate", "--log",
                     str(tmp_path / "none.jsonl")]) == 1


class TestParser:
    def test_unknown_flag_is_usage_error(self, dataset_csv):
        with pytest.raises(SystemExit) as excinfo:
            main(["ingest", "--dataset", str(dataset_csv), "--frobnicate"])
        assert excinfo.value.code == 2

    def test_unknown_subcommand_is_usage_error(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["transmogrify"])
        assert excinfo.value.code == 2

    @pytest.mark.parametrize(
        "command",
        [
            ["ingest"], ["split"], ["generate"], ["evaluate"], ["perturb"],
            ["stability"], ["review", "serve"], ["review", "aggregate"],
        ],
    )
    def test_help_exists_for_every_subcommand(self, command, capsys):
        with pytest.raises(SystemExit) as excinfo:
            build_parser().parse_args([*command, "--help"])
        assert excinfo.value.code == 0
        assert "usage" in capsys.readouterr().out

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["--version"])
        assert excinfo.value.code == 0
