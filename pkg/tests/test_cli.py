import json

import pytest

from volgrowth import io as vio
from volgrowth.cli import RunConfig, data_path, main


@pytest.fixture
def out(tmp_path):
    return tmp_path / "out"


def run(*args):
    return main(list(args))


class TestRunConfig:
    def test_round_trip(self):
        cfg = RunConfig(input="/x/v.csv", schedule=((3, 1), (9, 2)), schedule_mode="explicit", lam="3/2")
        assert RunConfig.from_json(cfg.to_json()) == cfg

    def test_shipped_default_matches_dataclass(self):
        data = json.loads(data_path("default_config.json").read_text())
        cfg = RunConfig.from_dict(data)
        assert (cfg.horizon, cfg.a_max, cfg.lam, cfg.mode) == (60, 64, "19/10", "connected-sum")

    def test_unknown_key(self):
        with pytest.raises(ValueError, match="unknown"):
            RunConfig.from_dict({"seed": 1})

    def test_resolved_paths_absolute(self):
        cfg = RunConfig(input="v.csv").resolved()
        assert cfg.input.startswith("/") and cfg.catalog.endswith("catalog.jsonl")


class TestCommands:
    def test_normalize_unit_linear(self, out):
        assert run("normalize", "--out", str(out)) == 0
        assert vio.read_record(out / "witness.txt")["A"] == "2"
        assert vio.read_growth_csv(out / "canonical.csv").values[:4] == (1, 3, 5, 7)

    def test_normalize_idempotent_bytes(self, out, tmp_path):
        assert run("normalize", "--out", str(out)) == 0
        again = tmp_path / "again"
        assert run("normalize", "--input", str(out / "canonical.csv"), "--out", str(again)) == 0
        assert (again / "canonical.csv").read_bytes() == (out / "canonical.csv").read_bytes()

    def test_normalize_exponential(self, out, tmp_path, capsys):
        p = tmp_path / "exp.csv"
        vio.write_growth_csv(p, [2**n for n in range(31)])
        assert run("normalize", "--input", str(p), "--out", str(out)) == 2
        assert "budget" in capsys.readouterr().err

    def test_certify_default(self, out):
        assert run("certify", "--out", str(out), "-q") == 0
        rec = vio.read_record(out / "certificate.txt")
        assert rec["status"] == "VALID"
        for name in ("tree.csv", "levelset.csv", "instances.csv", "placements.csv", "z.csv", "edges.csv", "w.csv"):
            assert (out / name).exists()

    def test_certify_lower_dim(self, out, caplog):
        caplog.set_level("INFO", logger="volgrowth")
        assert run("certify", "--mode", "lower-dim-spheres", "--out", str(out)) == 0
        assert any("torus" in r.getMessage() for r in caplog.records)

    def test_corrupted_catalog(self, out, tmp_path, capsys):
        lines = data_path("catalog.jsonl").read_text().splitlines()
        lines[1] = '{"record": "sphere", "kind": "Sphere1", "increments": [1, 1, 9, 1, 1]}'
        bad = tmp_path / "bad.jsonl"
        bad.write_text("\n".join(lines) + "\n")
        assert run("certify", "--catalog", str(bad), "--out", str(out)) == 3
        assert "item 6" in capsys.readouterr().err

    def test_schema_error_exit_4(self, out, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"record": "bounds"}\n')
        assert run("build", "--catalog", str(bad), "--out", str(out)) == 4
        assert run("build", "--input", str(tmp_path / "missing.csv"), "--out", str(out)) == 4

    def test_explicit_schedule(self, out):
        assert run("assemble", "--schedule", "8:1,16:1", "--out", str(out), "-q") == 0
        assert (out / "levelset.csv").read_text() == "j,n_j,t_j\n0,8,1\n1,16,1\n"

    def test_missing_block_exit_3(self, out):
        # a block spanning two levels needs block 0 of height 2; the shipped catalog has height 1
        assert run("assemble", "--schedule", "8:2", "--out", str(out), "-q") == 3

    def test_config_overrides_flags(self, out, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"horizon": 20, "out": str(out)}))
        assert run("normalize", "--horizon", "40", "--config", str(cfg), "--out", str(tmp_path / "ignored")) == 0
        assert vio.read_growth_csv(out / "canonical.csv").horizon == 20
        written = RunConfig.from_json((out / "config.json").read_text())
        assert written.horizon == 20 and written == written.resolved()

    def test_deterministic_outputs(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run("simulate", "--out", str(a), "-q") == 0
        assert run("simulate", "--out", str(b), "-q") == 0
        for name in ("z.csv", "w.csv", "edges.csv", "tree.csv", "sandwich.txt"):
            assert (a / name).read_bytes() == (b / name).read_bytes()


class TestPlot:
    def test_three_curves(self, out):
        assert run("simulate", "--out", str(out), "-q") == 0
        assert run("plot", "--out", str(out), "-q") == 0
        rows = vio.read_csv(out / "plot.csv", ("n", "length=n*l", "v(n)", "z(n*l)", "w(n*l)"))
        assert len(rows) == 61
        assert all(r[4] != "NA" for _, r in rows)
        assert rows[3][1][1] == "18"

    def test_missing_w(self, out):
        assert run("assemble", "--out", str(out), "-q") == 0
        assert run("plot", "--out", str(out), "-q") == 0
        rows = vio.read_csv(out / "plot.csv", ("n", "length=n*l", "v(n)", "z(n*l)", "w(n*l)"))
        assert {r[4] for _, r in rows} == {"NA"}
