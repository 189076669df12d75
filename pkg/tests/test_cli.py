import csv
import json
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from talbot_lab import cli
from talbot_lab.exponents import all_breakpoints, emit_curve


class TestConfig:
    def test_file_with_comments(self):
        config = cli.parse_config_text("""
            # a curve for n = 6
            n = 6
            step = 1/8   # coarse
            R = 2^10..2^12, 2^14
            format = csv
        """)
        assert config.n == 6 and config.step == F(1, 8)
        assert config.R == (2.0 ** 10, 2.0 ** 11, 2.0 ** 12, 2.0 ** 14)
        assert config.format == ("csv",)

    @pytest.mark.parametrize("text", ["bogus = 1", "n 6", "R = 1", "R = 2^3..10", "format = png",
                                      "step = x"])
    def test_rejects(self, text):
        with pytest.raises(cli.ConfigError):
            cli.parse_config_text(text)

    def test_sweep_params_follow_u2(self):
        config = cli.parse_config_text("m = 1\nu3 = 1/4\nsweep_u2 = 5/8, 3/4")
        us = [config.params(u2) for u2 in config.sweep_u2]
        assert [u.u2 for u in us] == [F(5, 8), F(3, 4)]
        assert us[0].u1 != us[1].u1

    def test_as_dict_is_json(self):
        json.dumps(cli.RunConfig(u2=F(3, 4)).as_dict())


class TestCurveFiles:
    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 20), st.sampled_from([F(1, 4), F(1, 10), F(1, 16)]))
    def test_csv_round_trip(self, n, step):
        rows = emit_curve(n, F(n, 2), n, step)
        text = cli.curve_csv(rows)
        assert "\r" not in text
        back = cli.read_curve_csv(text)
        assert back == [(r.alpha, r.s, r.branch, r.winning_m) for r in rows]

    def test_svg_marks_breakpoints(self):
        rows = emit_curve(15, F(15, 2), 15, F(1, 16))
        svg = cli.curve_svg(15, rows, all_breakpoints(15))
        assert svg.startswith("<svg") and svg.count("<circle") == len(all_breakpoints(15))

    def test_float_format_round_trips(self):
        for x in (0.1, 1 / 3, 2.0 ** -40, 123456.789):
            assert float(cli.fmt_float(x)) == x


class TestCommands:
    def test_exponents_writes_all_formats(self, tmp_path):
        rc = cli.main(["exponents", "--n", "15", "--out", str(tmp_path)])
        assert rc == 0
        text = (tmp_path / "curve_n15.csv").read_bytes()
        assert b"\r\n" not in text
        rows = list(csv.DictReader(text.decode().splitlines()))
        assert len(rows) >= 121
        assert (tmp_path / "curve_n15.svg").read_text().startswith("<svg")
        payload = json.loads((tmp_path / "curve_n15.json").read_text())
        assert payload["config"]["n"] == 15 and len(payload["rows"]) == len(rows)

    def test_config_file_and_flags(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("n = 8\nformat = csv\n")
        assert cli.main(["exponents", "--config", str(cfg), "--n", "6", "--out", str(tmp_path)]) == 0
        assert (tmp_path / "curve_n6.csv").exists() and not (tmp_path / "curve_n6.svg").exists()

    @pytest.mark.parametrize("argv", [["exponents", "--n", "1"], ["exponents", "--bogus", "1"],
                                      ["verify", "nothing"], ["sweep", "slope", "--m", "1"],
                                      ["exponents", "--config", "/no/such/file"],
                                      ["sweep", "slope", "--m", "1", "--u2", "3/4", "--u3", "1/4",
                                       "--R", "2^10,2^12"]])
    def test_config_errors_exit_2(self, argv, tmp_path):
        assert cli.main([*argv, "--out", str(tmp_path)]) == 2

    def test_cost_guard_exits_3(self, tmp_path):
        rc = cli.main(["sweep", "dimfit", "--n", "3", "--m", "1", "--u2", "5/6", "--u3", "1/4",
                       "--R", "2^27..2^30", "--out", str(tmp_path)])
        assert rc == 3

    def test_verify_writes_report(self, tmp_path):
        assert cli.main(["verify", "counting", "--out", str(tmp_path)]) == 0
        rep = json.loads((tmp_path / "verify_counting.json").read_text())
        assert rep["checks"] and all(c["status"] == "pass" for c in rep["checks"])
        assert "seed" in rep["config"]


class TestSweeps:
    ARGS = ["sweep", "slope", "--n", "2", "--m", "1", "--u3", "1/4", "--R", "2^10..2^13"]

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert cli.main([*self.ARGS, "--sweep-u2", "5/8,3/4", "--out", str(a)]) == 0
        assert cli.main([*self.ARGS, "--sweep-u2", "5/8,3/4", "--out", str(b)]) == 0
        assert (a / "sweep_slope.csv").read_bytes() == (b / "sweep_slope.csv").read_bytes()

    def test_resume_reuses_rows(self, tmp_path, capsys):
        cli.main([*self.ARGS, "--sweep-u2", "5/8", "--out", str(tmp_path)])
        capsys.readouterr()
        cli.main([*self.ARGS, "--sweep-u2", "5/8,3/4", "--out", str(tmp_path)])
        assert "(1 computed)" in capsys.readouterr().out
        rows = list(csv.DictReader((tmp_path / "sweep_slope.csv").read_text().splitlines()))
        assert [r["u2"] for r in rows] == ["5/8", "3/4"]
        assert len({r["input_hash"] for r in rows}) == 2

    def test_hash_tracks_inputs(self):
        base = {"component": "slope", "n": 2, "m": 1, "u": ["1/4", "5/8", "1/4"]}
        assert cli.input_hash(base) == cli.input_hash(dict(reversed(base.items())))
        assert cli.input_hash(base) != cli.input_hash({**base, "n": 3})

    def test_omega_rows(self, tmp_path):
        rc = cli.main(["sweep", "omega", "--n", "2", "--m", "1", "--u1", "1/2", "--u2", "3/4",
                       "--u3", "1/4", "--R", "2^10,2^12", "--out", str(tmp_path)])
        assert rc == 0
        rows = list(csv.DictReader((tmp_path / "sweep_omega.csv").read_text().splitlines()))
        assert [float(r["omega"]) for r in rows] == [1.0, 1.0]
