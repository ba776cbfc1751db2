"""CLI behaviour: exit codes, artifacts, determinism, config precedence."""

import json
from pathlib import Path

import pytest

from epgauge.cli import main, parse_selector
from epgauge.corpus import Corpus, FundingClass, PaperRecord, export_records
from epgauge.errors import ConfigError
from epgauge.synth import SynthSpec, gen_global, gen_local_with_ep, merge_cohort

SPEC = SynthSpec(
    n_global=60_000,
    mu_g=3.0,
    sigma_g=1.2,
    n_local=4_000,
    target_ep=0.2,
    seed=31337,
    year=2014,
    field_tag="TECH",
)


@pytest.fixture(scope="module")
def corpus_file(tmp_path_factory) -> Path:
    g = gen_global(SPEC)
    merged = merge_cohort(g, gen_local_with_ep(SPEC, g))
    path = tmp_path_factory.mktemp("data") / "corpus.csv"
    path.write_bytes(export_records(merged))
    return path


def tree_bytes(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


class TestIngest:
    def test_valid_file_exit_zero(self, corpus_file, tmp_path, capsys):
        code = main(["ingest", "--input", str(corpus_file), "--out", str(tmp_path)])
        assert code == 0
        out = capsys.readouterr().out
        assert "records: 60000" in out
        assert "rejects: 0" in out
        assert (tmp_path / "rejects.jsonl").exists()

    def test_rejects_report_written(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_bytes(
            b"id,year,citations,country_tags,field_tag,funding_text\n"
            b"a,2014,3,,TECH,\n"
            b"b,2014,-1,,TECH,\n"
        )
        out = tmp_path / "out"
        assert main(["ingest", "--input", str(bad), "--out", str(out)]) == 0
        rejects = [json.loads(ln) for ln in (out / "rejects.jsonl").read_text().splitlines()]
        assert rejects[0]["line"] == 3

    def test_duplicate_id_exit_two(self, tmp_path):
        bad = tmp_path / "dup.csv"
        bad.write_bytes(
            b"id,year,citations,country_tags,field_tag,funding_text\n"
            b"a,2014,3,,TECH,\n"
            b"a,2014,4,,TECH,\n"
        )
        assert main(["ingest", "--input", str(bad), "--out", str(tmp_path)]) == 2

    def test_bad_header_exit_two(self, tmp_path):
        bad = tmp_path / "hdr.csv"
        bad.write_bytes(b"id,year\na,2014\n")
        assert main(["ingest", "--input", str(bad), "--out", str(tmp_path)]) == 2

    def test_missing_input_exit_two(self, tmp_path):
        assert main(["ingest", "--out", str(tmp_path)]) == 2


class TestAssess:
    def test_full_corpus_self_uniformity(self, corpus_file, tmp_path, capsys):
        code = main(
            [
                "assess",
                "--input", str(corpus_file),
                "--cohort", "all=years:2014;field:TECH",
                "--grid", "1,3,7,10,15,20,25,35",
                "--out", str(tmp_path),
                "--seed", "5",
            ]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "seed: 5" in out
        data = json.loads((tmp_path / "assessments.json").read_text())
        assert data[0]["ep"]["chosen"] == pytest.approx(0.100, abs=0.001)
        assert (tmp_path / "assessments.csv").exists()
        assert (tmp_path / "assessments.md").exists()
        assert (tmp_path / "ep_series.csv").exists()
        assert (tmp_path / "ep_by_year.png").exists()

    def test_synthetic_cohort_recovers_target(self, corpus_file, tmp_path):
        code = main(
            [
                "assess",
                "--input", str(corpus_file),
                "--cohort", "syn=countries:SYN;years:2014;field:TECH",
                "--grid", "1,3,7,10,15,20,25,35",
                "--out", str(tmp_path),
            ]
        )
        assert code == 0
        data = json.loads((tmp_path / "assessments.json").read_text())
        assert data[0]["ep"]["chosen"] == pytest.approx(0.2, abs=0.015)

    def test_empty_cohort_exit_three(self, corpus_file, tmp_path, capsys):
        code = main(
            [
                "assess",
                "--input", str(corpus_file),
                "--cohort", "none=countries:XX;years:2014;field:TECH",
                "--out", str(tmp_path),
            ]
        )
        assert code == 3
        assert "error" in capsys.readouterr().err

    def test_byte_identical_across_runs_and_threads(self, corpus_file, tmp_path, monkeypatch):
        args = [
            "assess",
            "--input", str(corpus_file),
            "--cohort", "all=years:2014;field:TECH",
            "--cohort", "syn=countries:SYN;years:2014;field:TECH",
        ]
        out1, out2, out3 = tmp_path / "r1", tmp_path / "r2", tmp_path / "r3"
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        monkeypatch.setenv("EPGAUGE_THREADS", "4")
        assert main(args + ["--out", str(out3)]) == 0
        assert tree_bytes(out1) == tree_bytes(out2)
        assert tree_bytes(out1) == tree_bytes(out3)

    def test_unknown_config_key_exit_two(self, corpus_file, tmp_path):
        config = tmp_path / "run.json"
        config.write_text(json.dumps({"input": str(corpus_file), "bogus": 1}))
        assert main(["assess", "--config", str(config)]) == 2

    def test_config_drives_run_and_flags_win(self, corpus_file, tmp_path, capsys):
        config = tmp_path / "run.json"
        config.write_text(
            json.dumps(
                {
                    "input": str(corpus_file),
                    "seed": 1,
                    "report_formats": ["json"],
                    "cohorts": {"all": {"years": [2014, 2014], "field": "TECH"}},
                    "figures": False,
                }
            )
        )
        out = tmp_path / "out"
        code = main(["assess", "--config", str(config), "--out", str(out), "--seed", "2"])
        assert code == 0
        assert "seed: 2" in capsys.readouterr().out
        assert (out / "assessments.json").exists()
        assert not (out / "assessments.csv").exists()
        assert not (out / "ep_by_year.png").exists()

    def test_cohort_without_field_exit_two(self, corpus_file, tmp_path):
        code = main(
            ["assess", "--input", str(corpus_file), "--cohort", "a=years:2014", "--out", str(tmp_path)]
        )
        assert code == 2


class TestCompare:
    def test_reference_params_cells(self, tmp_path):
        out = tmp_path / "cmp"
        assert main(["compare", "--params", "reference", "--out", str(out)]) == 0
        rows = []
        for name in ("comparison_TECH.json", "comparison_BIO-MED.json"):
            rows.extend(json.loads((out / name).read_text()))
        assert len(rows) == 8
        printed = {
            (2011, "ERC-GFIS"): 0.00195, (2011, "MIT"): 0.00461,
            (2012, "ERC-GFIS"): 0.00086, (2012, "MIT"): 0.00257,
        }
        by_year = {r["year"]: r for r in rows[:4]}
        for (year, side), want in printed.items():
            got = by_year[year]["p_lognormal_a" if side == "ERC-GFIS" else "p_lognormal_b"]
            assert got == pytest.approx(want, rel=0.02)

    def test_cohort_self_comparison(self, corpus_file, tmp_path):
        out = tmp_path / "cmp"
        code = main(
            [
                "compare",
                "--input", str(corpus_file),
                "--cohort-a", "syn=countries:SYN;years:2014;field:TECH",
                "--cohort-b", "syn2=countries:SYN;years:2014;field:TECH",
                "--ca-preset", "table5",
                "--out", str(out),
            ]
        )
        assert code == 0
        rows = json.loads((out / "comparison.json").read_text())
        assert rows[0]["ratio_ep"] == pytest.approx(1.0, rel=1e-12)
        assert rows[0]["ratio_lognormal"] == pytest.approx(1.0, rel=1e-12)
        assert rows[0]["c_a"] == 500.0

    def test_degenerate_lognormal_exit_three(self, tmp_path):
        records = [
            PaperRecord(id=f"g{i}", year=2014, citations=i, field_tag="TECH") for i in range(250)
        ]
        records += [
            PaperRecord(
                id=f"c{i}", year=2014, citations=400, field_tag="TECH",
                country_tags=frozenset({"CC"}),
            )
            for i in range(50)
        ]
        path = tmp_path / "flat.csv"
        path.write_bytes(export_records(Corpus(records)))
        code = main(
            [
                "compare",
                "--input", str(path),
                "--cohort-a", "cc=countries:CC;years:2014;field:TECH",
                "--cohort-b", "cc2=countries:CC;years:2014;field:TECH",
                "--out", str(tmp_path / "out"),
            ]
        )
        assert code == 3

    def test_needs_params_or_cohorts(self, tmp_path):
        assert main(["compare", "--out", str(tmp_path)]) == 2

    def test_proportional_preset_needs_parameters(self, corpus_file, tmp_path):
        code = main(
            [
                "compare",
                "--input", str(corpus_file),
                "--cohort-a", "a=countries:SYN;years:2014;field:TECH",
                "--cohort-b", "b=countries:SYN;years:2014;field:TECH",
                "--ca-preset", "proportional",
                "--out", str(tmp_path),
            ]
        )
        assert code == 2

    def test_proportional_preset_works_with_parameters(self, corpus_file, tmp_path):
        out = tmp_path / "cmp"
        code = main(
            [
                "compare",
                "--input", str(corpus_file),
                "--cohort-a", "a=countries:SYN;years:2014;field:TECH",
                "--cohort-b", "b=countries:SYN;years:2014;field:TECH",
                "--ca-preset", "proportional",
                "--ca-base", "1000",
                "--ca-base-year", "2014",
                "--ca-horizon", "2019",
                "--out", str(out),
            ]
        )
        assert code == 0
        rows = json.loads((out / "comparison.json").read_text())
        assert rows[0]["c_a"] == 1000.0


class TestSynth:
    def test_fixed_seed_identical_files(self, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_bytes(
            SynthSpec(
                n_global=5_000, mu_g=3.0, sigma_g=1.2, n_local=400,
                target_ep=0.15, seed=77, year=2014, field_tag="TECH",
            ).to_json()
        )
        out1, out2 = tmp_path / "s1", tmp_path / "s2"
        assert main(["synth", "--spec", str(spec), "--out", str(out1)]) == 0
        assert main(["synth", "--spec", str(spec), "--out", str(out2)]) == 0
        assert tree_bytes(out1) == tree_bytes(out2)

    def test_round_trip_through_assess(self, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_bytes(
            SynthSpec(
                n_global=60_000, mu_g=3.0, sigma_g=1.2, n_local=4_000,
                target_ep=0.15, seed=99, year=2013, field_tag="BIOMED",
            ).to_json()
        )
        out = tmp_path / "synth"
        assert main(["synth", "--spec", str(spec), "--out", str(out)]) == 0
        assess_out = tmp_path / "assess"
        code = main(
            [
                "assess",
                "--input", str(out / "corpus.csv"),
                "--cohort", "syn=countries:SYN;years:2013;field:BIOMED",
                "--grid", "1,3,7,10,15,20,25,35",
                "--out", str(assess_out),
            ]
        )
        assert code == 0
        data = json.loads((assess_out / "assessments.json").read_text())
        assert data[0]["ep"]["chosen"] == pytest.approx(0.15, abs=0.015)

    def test_invalid_spec_exit_two(self, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text('{"n_global": -5}')
        assert main(["synth", "--spec", str(spec), "--out", str(tmp_path)]) == 2

    def test_seed_flag_overrides_spec(self, tmp_path, capsys):
        spec = tmp_path / "spec.json"
        spec.write_bytes(
            SynthSpec(
                n_global=1_000, mu_g=3.0, sigma_g=1.2, n_local=50,
                target_ep=0.15, seed=1, year=2014, field_tag="TECH",
            ).to_json()
        )
        assert main(["synth", "--spec", str(spec), "--seed", "42", "--out", str(tmp_path / "o")]) == 0
        assert "seed: 42" in capsys.readouterr().out
        manifest = json.loads((tmp_path / "o" / "synth_manifest.json").read_text())
        assert manifest["seed"] == 42


class TestExitCodes:
    def test_unexpected_failure_maps_to_four(self, corpus_file, tmp_path, monkeypatch, capsys):
        import epgauge.cli as cli

        def boom(*args, **kwargs):
            raise RuntimeError("wires crossed")

        monkeypatch.setattr(cli, "_assess_all", boom)
        code = main(
            [
                "assess",
                "--input", str(corpus_file),
                "--cohort", "all=years:2014;field:TECH",
                "--out", str(tmp_path),
            ]
        )
        assert code == 4
        assert "internal error" in capsys.readouterr().err


class TestSelectorSyntax:
    def test_full_selector(self):
        sel = parse_selector("countries:DE,FR;funding:ERC;years:2011-2014;field:TECH;exclude:US")
        assert sel.countries == frozenset({"DE", "FR"})
        assert sel.funding == frozenset({FundingClass.ERC})
        assert sel.years == (2011, 2014)
        assert sel.field == "TECH"
        assert sel.exclude_countries == frozenset({"US"})

    def test_single_year(self):
        assert parse_selector("years:2014").years == (2014, 2014)

    def test_bad_clause(self):
        with pytest.raises(ConfigError):
            parse_selector("countries=DE")
        with pytest.raises(ConfigError):
            parse_selector("bogus:1")
        with pytest.raises(ConfigError):
            parse_selector("funding:NOPE")
        with pytest.raises(ConfigError):
            parse_selector("years:twenty")
