"""Tests for the experiment harness: subcommands, config, exit codes."""

import json

from modsurf.cli import load_config, main


def run(args, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return main(args)


class TestConfig:
    def test_defaults(self):
        cfg = load_config(None)
        cfg.validate()
        assert cfg.T == 1.0

    def test_parse_file(self, tmp_path):
        p = tmp_path / "c.ini"
        p.write_text(
            "[experiment]\nbandwidth = 2.0 5.0\ndiscriminants = -7 -11\nseed = 3\n"
            "[haar]\nn_x = 20\nn_levels = 15\ny_max = 25\n"
            "[geodesic]\nsamples_per_unit_length = 100\n"
            "[tolerances]\nweyl = 5e-4\n"
        )
        cfg = load_config(str(p))
        assert cfg.bandwidths == (2.0, 5.0)
        assert cfg.discriminants == (-7, -11)
        assert cfg.seed == 3
        assert cfg.n_x == 20 and cfg.y_max == 25.0
        assert cfg.samples_per_unit_length == 100
        assert cfg.tol_weyl == 5e-4

    def test_bad_bandwidth_exit_two(self, tmp_path, monkeypatch):
        p = tmp_path / "bad.ini"
        p.write_text("[experiment]\nbandwidth = 0.5\n")
        assert run(["transform-check", "--config", str(p)], tmp_path, monkeypatch) == 2

    def test_bad_discriminant_exit_two(self, tmp_path, monkeypatch):
        p = tmp_path / "bad.ini"
        p.write_text("[experiment]\ndiscriminants = 9\n")
        assert run(["weyl-compare", "--config", str(p)], tmp_path, monkeypatch) == 2

    def test_missing_config_exit_two(self, tmp_path, monkeypatch):
        assert run(["transform-check", "--config", "nope.ini"], tmp_path, monkeypatch) == 2


class TestTransformCheck:
    def test_default_passes(self, tmp_path, monkeypatch):
        out = tmp_path / "t.csv"
        code = run(["transform-check", "--out", str(out)], tmp_path, monkeypatch)
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "T,check,value,pass"
        assert all(line.endswith("True") for line in lines[1:])


class TestClassNumber:
    def test_full_range(self, tmp_path, monkeypatch):
        out = tmp_path / "cn.csv"
        code = run(["class-number", "--out", str(out)], tmp_path, monkeypatch)
        assert code == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 63  # header + 62 fundamental discriminants in [-200, -3]

    def test_bitwise_reproducible(self, tmp_path, monkeypatch):
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        assert run(["class-number", "--out", str(out1)], tmp_path, monkeypatch) == 0
        assert run(["class-number", "--out", str(out2)], tmp_path, monkeypatch) == 0
        assert out1.read_bytes() == out2.read_bytes()


class TestWeylCompare:
    def test_default_grid(self, tmp_path, monkeypatch):
        out = tmp_path / "w.csv"
        code = run(["weyl-compare", "--out", str(out)], tmp_path, monkeypatch)
        assert code == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 1 + 7 * 3  # default 7 discriminants x 3 t-values

    def test_json_mirror(self, tmp_path, monkeypatch):
        cfgp = tmp_path / "c.ini"
        cfgp.write_text("[experiment]\ndiscriminants = -7\n")
        out = tmp_path / "w.json"
        code = run(["weyl-compare", "--config", str(cfgp), "--json", "--out", str(out)],
                   tmp_path, monkeypatch)
        assert code == 0
        rows = json.loads(out.read_text())
        assert len(rows) == 3
        assert abs(rows[0]["ratio"] - 1.0) < 1e-3


class TestMeasureCommands:
    def test_heegner_files(self, tmp_path, monkeypatch):
        cfgp = tmp_path / "c.ini"
        cfgp.write_text("[experiment]\ndiscriminants = -4 -23\n")
        code = run(["heegner", "--config", str(cfgp)], tmp_path, monkeypatch)
        assert code == 0
        from modsurf.arithmetic import load_measure

        m = load_measure(str(tmp_path / "heegner_23.txt"))
        assert len(m) == 3

    def test_geodesics_and_wasserstein(self, tmp_path, monkeypatch):
        cfgp = tmp_path / "c.ini"
        cfgp.write_text("[experiment]\ndiscriminants = 5\n[geodesic]\n"
                        "samples_per_unit_length = 50\n")
        assert run(["geodesics", "--config", str(cfgp)], tmp_path, monkeypatch) == 0
        cfg2 = tmp_path / "c2.ini"
        cfg2.write_text("[experiment]\ndiscriminants = -4\n")
        assert run(["heegner", "--config", str(cfg2)], tmp_path, monkeypatch) == 0
        out = tmp_path / "w.csv"
        plan = tmp_path / "plan.txt"
        code = run(["wasserstein", str(tmp_path / "geodesic_5.txt"),
                    str(tmp_path / "heegner_4.txt"), "--out", str(out),
                    "--plan-out", str(plan)], tmp_path, monkeypatch)
        assert code == 0
        assert plan.exists()
        header = out.read_text().splitlines()
        assert header[0] == "file1,file2,W1"
        value = float(header[1].rsplit(",", 1)[1])
        assert 0.0 < value < 3.0


class TestDuke:
    def test_two_discriminants(self, tmp_path, monkeypatch):
        cfgp = tmp_path / "c.ini"
        cfgp.write_text("[experiment]\ndiscriminants = -4 -8\nbandwidth = 1.0\n"
                        "[haar]\nn_x = 16\nn_levels = 12\ny_max = 10\n")
        out = tmp_path / "d.csv"
        code = run(["duke", "--config", str(cfgp), "--out", str(out)],
                   tmp_path, monkeypatch)
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("D,W1_estimate,dual_lower_bound")
        assert lines[-1].startswith("slope,")

    def test_maass_data_ingestion(self, tmp_path, monkeypatch):
        cfgp = tmp_path / "c.ini"
        cfgp.write_text("[experiment]\ndiscriminants = -4\n"
                        "[haar]\nn_x = 12\nn_levels = 10\ny_max = 10\n")
        maass = tmp_path / "m.txt"
        maass.write_text("# rows\n9.533 0.01\n12.17 0.004\n")
        out = tmp_path / "d.json"
        code = run(["duke", "--config", str(cfgp), "--maass-data", str(maass),
                    "--json", "--out", str(out)], tmp_path, monkeypatch)
        assert code == 0
        rows = json.loads(out.read_text())
        assert rows[0]["berry_esseen_total"] > 0
