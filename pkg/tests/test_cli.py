import json

import pytest

from stepglm.cli import main, parse_terms
from stepglm.db import Database
from stepglm.model import Categorical, Intercept, Interaction, Numeric
from stepglm.simbench import SimDesign, generate_table


@pytest.fixture
def simdb(tmp_path):
    path = str(tmp_path / "sim.db")
    with Database(path) as db:
        generate_table(
            db, SimDesign(N=4000, beta_true=[0.4, 0.3, -0.2], n_numeric=2, seed=1)
        )
    return path


def fit_args(simdb, *extra):
    return [
        "fit", "--db", simdb, "--table", "sim", "--response", "y",
        "--terms", "x1,x2", "--family", "binomial", "--link", "logit",
        "--seed", "3", *extra,
    ]


class TestTermParsing:
    def test_plain_numeric(self):
        assert parse_terms("age", intercept=False) == [Numeric("age")]

    def test_intercept_added_once(self):
        terms = parse_terms("1 + age")
        assert terms == [Intercept(), Numeric("age")]

    def test_categorical_with_reference(self):
        (term,) = parse_terms("C(colour, ref=BLUE)", intercept=False)
        assert term == Categorical("colour", reference="BLUE")

    def test_interaction(self):
        (term,) = parse_terms("a:b", intercept=False)
        assert term == Interaction((Numeric("a"), Numeric("b")))

    def test_comma_and_plus_separators(self):
        assert parse_terms("a+b", intercept=False) == parse_terms(
            "a, b", intercept=False
        )


class TestExitCodes:
    def test_usage_error_is_config(self, capsys):
        assert main(["fit", "--bogus-flag"]) == 1
        assert "error: config" in capsys.readouterr().err

    def test_missing_database_is_config(self, capsys, monkeypatch):
        monkeypatch.delenv("STEPGLM_DB", raising=False)
        code = main([
            "fit", "--table", "t", "--response", "y", "--terms", "x",
            "--family", "binomial", "--link", "logit",
        ])
        assert code == 1

    def test_missing_table_is_database(self, simdb, capsys):
        args = fit_args(simdb)
        args[args.index("sim")] = "nothere"
        assert main(args) == 2
        assert "error: database" in capsys.readouterr().err

    def test_too_few_rows_is_statistical(self, tmp_path, capsys):
        path = str(tmp_path / "tiny.db")
        with Database(path) as db:
            db.execute("CREATE TABLE t (y REAL, x REAL)", category="write")
            db.execute("INSERT INTO t VALUES (1.0, 0.5)", category="write")
            db.commit()
        code = main([
            "fit", "--db", path, "--table", "t", "--response", "y",
            "--terms", "x", "--family", "gaussian", "--link", "identity",
        ])
        assert code == 3
        assert "error: statistical" in capsys.readouterr().err

    def test_unsupported_pair_is_config(self, simdb):
        args = fit_args(simdb)
        args[args.index("logit")] = "log"
        assert main(args) == 1


class TestFit:
    def test_text_output(self, simdb, capsys):
        assert main(fit_args(simdb)) == 0
        out = capsys.readouterr().out
        assert "(Intercept)" in out and "x1" in out
        assert "N = 4000" in out

    def test_json_reproducible_without_timings(self, simdb, capsys):
        args = fit_args(simdb, "--format", "json", "--no-timings")
        assert main(args) == 0
        first = capsys.readouterr().out
        assert main(args) == 0
        assert capsys.readouterr().out == first
        doc = json.loads(first)
        assert "timings_ms" not in doc
        assert [c["label"] for c in doc["coefficients"]] == [
            "(Intercept)", "x1", "x2",
        ]

    def test_info_source_flag(self, simdb, capsys):
        main(fit_args(simdb, "--format", "json", "--info-source", "full"))
        doc = json.loads(capsys.readouterr().out)
        assert doc["info_source"] == "full_data"
        main(fit_args(simdb, "--format", "json"))
        doc = json.loads(capsys.readouterr().out)
        assert doc["info_source"] == "scaled_subsample"

    def test_exact_method_hits_target(self, simdb, capsys):
        main(fit_args(simdb, "--format", "json", "--method", "exact",
                      "--exponent", "0.7"))
        doc = json.loads(capsys.readouterr().out)
        assert doc["n"] == 340  # ceil(4000^0.7) rounded up to 10

    def test_config_file(self, simdb, tmp_path, capsys):
        cfg = tmp_path / "fit.yaml"
        cfg.write_text(
            "database: {db}\n"
            "model:\n"
            "  table: sim\n"
            "  response: y\n"
            "  terms: x1, x2\n"
            "  family: binomial\n"
            "  link: logit\n"
            "sample:\n"
            "  exponent: 0.7\n"
            "seed: 3\n"
            "format: json\n".format(db=simdb)
        )
        assert main(["fit", "--config", str(cfg), "--no-timings"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["N"] == 4000

    def test_unknown_config_key_rejected(self, simdb, tmp_path):
        cfg = tmp_path / "bad.yaml"
        cfg.write_text("database: x\nmodle: {}\n")
        assert main(["fit", "--config", str(cfg)]) == 1

    def test_flag_overrides_env(self, simdb, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("STEPGLM_DB", str(tmp_path / "does-not-exist.db"))
        assert main(fit_args(simdb)) == 0

    def test_env_fallback(self, simdb, capsys, monkeypatch):
        monkeypatch.setenv("STEPGLM_DB", simdb)
        args = fit_args(simdb)
        i = args.index("--db")
        del args[i:i + 2]
        assert main(args) == 0


class TestSimulate:
    def test_writes_requested_rows(self, tmp_path, capsys):
        path = str(tmp_path / "out.db")
        code = main([
            "simulate", "--db", path, "--n", "250", "--beta", "0.2,0.1",
            "--numeric", "1", "--seed", "5",
        ])
        assert code == 0
        assert "wrote 250 rows" in capsys.readouterr().out
        with Database(path) as db:
            n = db.execute("SELECT COUNT(*) FROM sim").fetchone()[0]
        assert n == 250

    def test_deterministic_under_seed(self, tmp_path):
        def dump(name):
            path = str(tmp_path / name)
            main(["simulate", "--db", path, "--n", "100", "--beta", "0.2,0.1",
                  "--numeric", "1", "--seed", "5"])
            with Database(path) as db:
                return db.execute("SELECT * FROM sim").fetchall()

        assert dump("a.db") == dump("b.db")

    def test_beta_length_mismatch(self, tmp_path):
        code = main([
            "simulate", "--db", str(tmp_path / "x.db"), "--n", "10",
            "--beta", "0.2", "--numeric", "3",
        ])
        assert code == 1


class TestBench:
    def test_single_replicate_outputs(self, tmp_path, capsys):
        outdir = tmp_path / "bench"
        code = main([
            "bench", "--n", "2000", "--replicates", "1", "--beta", "0.3,0.2",
            "--numeric", "1", "--exponents", "0.8", "--seed", "9",
            "--outdir", str(outdir),
        ])
        assert code == 0
        written = capsys.readouterr().out.splitlines()
        assert (outdir / "replicates.csv").exists()
        assert (outdir / "summary.json").exists()
        pngs = [w for w in written if w.endswith(".png")]
        assert len(pngs) == 3  # mse ratio, coverage, timings
        for p in pngs:
            assert (tmp_path / "bench" / p.split("/")[-1]).stat().st_size > 0

        header = (outdir / "replicates.csv").read_text().splitlines()[0]
        assert header.split(",") == [
            "replicate", "exponent", "estimator", "label", "estimate", "se",
            "error", "covered", "n", "N", "time_s",
        ]
        summary = json.loads((outdir / "summary.json").read_text())
        assert summary["replicates"] == 1
        entry = summary["coordinates"]["0.8|x1"]
        assert entry["mse_ratio_onestep_full"] > 0

    def test_no_figures(self, tmp_path, capsys):
        outdir = tmp_path / "bench2"
        main([
            "bench", "--n", "1500", "--replicates", "1", "--beta", "0.3,0.2",
            "--numeric", "1", "--exponents", "0.8", "--outdir", str(outdir),
            "--no-figures",
        ])
        assert not list(outdir.glob("*.png"))


class TestLoad:
    def test_roundtrip(self, tmp_path, capsys):
        csv_file = tmp_path / "cars.csv"
        csv_file.write_text(
            "power,colour,is_red\n120.5,RED,1\n88.0,BLUE,0\n,GREEN,0\n"
        )
        path = str(tmp_path / "cars.db")
        assert main(["load", "--db", path, "--table", "cars", str(csv_file)]) == 0
        assert "loaded 3 rows" in capsys.readouterr().out
        with Database(path) as db:
            rows = db.execute(
                "SELECT power, colour, is_red FROM cars ORDER BY colour"
            ).fetchall()
        assert rows == [(88.0, "BLUE", 0.0), (None, "GREEN", 0.0), (120.5, "RED", 1.0)]

    def test_missing_file(self, tmp_path):
        assert main(["load", "--db", str(tmp_path / "x.db"), "--table", "t",
                     str(tmp_path / "nope.csv")]) == 1
