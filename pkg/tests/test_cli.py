"""Command-line surface: parsing, file layout, determinism, exit codes."""

import json
import math

import numpy as np
import pytest

from holopath import cli


class TestAngleGrammar:
    def test_pi_multiples(self):
        assert cli.parse_angle("0.25pi") == pytest.approx(0.25 * math.pi)
        assert cli.parse_angle("pi") == pytest.approx(math.pi)
        assert cli.parse_angle("-pi") == pytest.approx(-math.pi)
        assert cli.parse_angle("+pi") == pytest.approx(math.pi)
        assert cli.parse_angle("0.5*pi") == pytest.approx(0.5 * math.pi)

    def test_pi_fractions(self):
        assert cli.parse_angle("pi/3") == pytest.approx(math.pi / 3)
        assert cli.parse_angle("2pi/3") == pytest.approx(2 * math.pi / 3)
        assert cli.parse_angle("-pi/2") == pytest.approx(-math.pi / 2)

    def test_bare_radians(self):
        assert cli.parse_angle("1.5") == 1.5
        assert cli.parse_angle("0") == 0.0

    @pytest.mark.parametrize("bad", ["pie", "0.5pix", "", ".", "x"])
    def test_rejects_garbage(self, bad):
        with pytest.raises(ValueError):
            cli.parse_angle(bad)


class TestGateGrammar:
    def test_named_axis(self):
        g = cli.parse_gate("rx:0.5pi")
        assert g.gamma == pytest.approx(0.5 * math.pi)
        assert g.theta == pytest.approx(0.5 * math.pi)

    def test_controlled_phase_is_polar(self):
        g = cli.parse_gate("cp:0.25pi")
        assert (g.theta, g.phi) == (0.0, 0.0)
        assert g.gamma == pytest.approx(0.25 * math.pi)

    def test_missing_angle(self):
        with pytest.raises(ValueError):
            cli.parse_gate("rx")

    def test_unknown_name(self):
        with pytest.raises(ValueError):
            cli.parse_gate("rq:pi")


class TestSynth:
    def test_writes_schedule_and_samples(self, tmp_path):
        out = tmp_path / "synth"
        rc = cli.main(["synth", "--gate", "rx:0.5pi", "--chi", "0.25pi",
                       "--samples", "50", "--out", str(out)])
        assert rc == 0
        doc = json.loads((out / "schedule.json").read_text())
        # chi + |gamma| cot(chi/2) for gamma = chi = pi/2 twice over
        want = 0.25 * math.pi + 0.5 * math.pi / math.tan(0.125 * math.pi)
        assert doc["pulse_area"] == pytest.approx(want, abs=1e-12)
        assert doc["pulse_area"] == pytest.approx(4.5776, abs=1e-4)
        csv = (out / "pulse.csv").read_text().splitlines()
        assert len(csv) == 52
        assert csv[0].split(",")[0] == "t (time)"

    def test_zero_rotation_collapses_middle_segment(self, tmp_path):
        out = tmp_path / "rz0"
        assert cli.main(["synth", "--gate", "rz:0", "--chi", "0.3pi",
                         "--out", str(out)]) == 0
        doc = json.loads((out / "schedule.json").read_text())
        assert doc["tau1"] == doc["tau2"]

    def test_missing_chi_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["synth", "--gate", "rx:0.5pi"])
        assert exc.value.code == 2

    def test_bad_path_latitude_exits_2(self, tmp_path, capsys):
        rc = cli.main(["synth", "--gate", "rx:0.5pi", "--chi", "1.5pi",
                       "--out", str(tmp_path)])
        assert rc == 2
        assert "error:" in capsys.readouterr().err


class TestFigure:
    def test_area_map_layout(self, tmp_path):
        rc = cli.main(["figure", "2a", "--resolution", "6",
                       "--out", str(tmp_path)])
        assert rc == 0
        d = tmp_path / "2a"
        assert (d / "figure.png").stat().st_size > 0
        meta = json.loads((d / "meta.json").read_text())
        assert meta["figure"] == "2a"
        assert meta["runtime"] is None
        assert meta["masked_cells"] == []
        rows = (d / "data.csv").read_text().splitlines()
        assert rows[0] == ("chi (rad),gamma (rad),"
                           "area_over_pi (dimensionless),region")
        # full-loop row: area exactly pi whatever the rotation angle
        loop = [r for r in rows[1:]
                if float(r.split(",")[0]) == pytest.approx(math.pi)]
        assert loop and all(float(r.split(",")[2]) == 1.0 for r in loop)

    def test_population_figure_reruns_byte_identical(self, tmp_path):
        args = ["figure", "2b", "--resolution", "25", "--out", str(tmp_path)]
        assert cli.main(args) == 0
        first = {n: (tmp_path / "2b" / n).read_bytes()
                 for n in ("data.csv", "meta.json", "figure.png")}
        assert cli.main(args) == 0
        for name, blob in first.items():
            assert (tmp_path / "2b" / name).read_bytes() == blob, name

    def test_population_meta_carries_content_hash(self, tmp_path):
        assert cli.main(["figure", "2b", "--resolution", "10",
                         "--out", str(tmp_path)]) == 0
        meta = json.loads((tmp_path / "2b" / "meta.json").read_text())
        csv = (tmp_path / "2b" / "data.csv").read_text()
        assert meta["content_hash"] == cli._blob_hash(csv)

    def test_config_rejected_on_plain_figures(self, tmp_path, capsys):
        rc = cli.main(["figure", "2a", "--config", "cavity",
                       "--out", str(tmp_path)])
        assert rc == 2
        assert "takes no --config" in capsys.readouterr().err

    def test_unknown_figure_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["figure", "9z"])
        assert exc.value.code == 2


class TestVerify:
    def test_single_criterion_report(self, capsys, tmp_path):
        report = tmp_path / "report.json"
        rc = cli.main(["verify", "--only", "area-law",
                       "--report", str(report)])
        captured = capsys.readouterr()
        assert rc == 0
        doc = json.loads(captured.out)
        assert doc["passed"] is True
        assert [c["slug"] for c in doc["criteria"]] == ["area-law"]
        assert doc["criteria"][0]["measured"]["max_quadrature_gap"] < 1e-9
        assert captured.err.startswith("PASS area-law:")
        assert json.loads(report.read_text()) == doc

    def test_unknown_slug_exits_2(self, capsys):
        assert cli.main(["verify", "--only", "no-such"]) == 2
        assert "unknown criteria" in capsys.readouterr().err


def test_run_config_is_rng_free():
    cfg = cli.RunConfig(command="verify")
    assert cfg.rng_free is True
    with pytest.raises(AttributeError):
        cfg.rng_free = False
