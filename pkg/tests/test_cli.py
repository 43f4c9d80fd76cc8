import csv
import math
import os
import textwrap

import pytest

from keyhole import analytic, cli
from keyhole.channel import ChannelParams

BASE_CONFIG = """\
[experiment]
kind = sweep-h
name = demo

[domain]
height = 0.5
length = 5.0

[hole]
wall_position = 2.5
width = 0.0196982806714328
depth = 0.1

[channel]
K = 4
beta = 1
eta = 2
alpha = 0.5 1.0

[sweep]
start = 0.25
stop = 1.0
steps = 3
scale = linear

[sim]
trials = 8
seed = 7
C = 0 2
n_nodes = 50

[output]
path = demo.csv
"""


def write_config(tmp_path, text, name="cfg.ini"):
    p = tmp_path / name
    p.write_text(textwrap.dedent(text))
    return str(p)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestParseConfig:
    def test_base_config_parses(self, tmp_path):
        cfg = cli.parse_config(write_config(tmp_path, BASE_CONFIG))
        assert cfg.kind == "sweep-h"
        assert cfg.alphas == [0.5, 1.0]
        assert cfg.c_list == [0, 2]
        assert list(cfg.grid) == [0.25, 0.625, 1.0]
        assert cfg.n_nodes == 50
        assert cfg.output_path == "demo.csv"

    @pytest.mark.parametrize(
        "mangle,field",
        [
            (lambda t: t.replace("kind = sweep-h", "kind = sweep-x"), "experiment.kind"),
            (lambda t: t.replace("[sweep]\n", "[sweepx]\n"), "sweep"),
            (lambda t: t.replace("steps = 3", "steps = 0"), "sweep.steps"),
            (lambda t: t.replace("trials = 8", "trials = 0"), "sim.trials"),
            (lambda t: t.replace("K = 4", "K = four"), "channel.K"),
            (lambda t: t.replace("height = 0.5", "height = -1"), "domain"),
            (lambda t: t.replace("C = 0 2", "C = -1"), "sim.C"),
            (lambda t: t.replace("scale = linear", "scale = cubic"), "sweep.scale"),
        ],
    )
    def test_validation_errors(self, tmp_path, mangle, field):
        path = write_config(tmp_path, mangle(BASE_CONFIG))
        with pytest.raises(cli.ConfigError) as exc:
            cli.parse_config(path)
        assert exc.value.field_name.startswith(field)

    def test_missing_file(self, tmp_path):
        with pytest.raises(cli.ConfigError):
            cli.parse_config(str(tmp_path / "nope.ini"))

    def test_r0_accepted_instead_of_beta(self, tmp_path):
        text = BASE_CONFIG.replace("beta = 1", "r0 = 1")
        cfg = cli.parse_config(write_config(tmp_path, text))
        assert cfg.params_by_alpha[0.5].beta == pytest.approx(1.0)

    def test_beta_or_r0_required(self, tmp_path):
        text = BASE_CONFIG.replace("beta = 1\n", "")
        with pytest.raises(cli.ConfigError, match="beta"):
            cli.parse_config(write_config(tmp_path, text))


class TestValidateCommand:
    def test_ok_and_exit_codes(self, tmp_path, capsys):
        path = write_config(tmp_path, BASE_CONFIG)
        assert cli.main(["validate", path]) == 0
        assert "config OK" in capsys.readouterr().out
        bad = write_config(tmp_path, BASE_CONFIG.replace("steps = 3", "steps = 0"), "bad.ini")
        assert cli.main(["validate", bad]) == 2


class TestRunCommand:
    def test_height_sweep_csv(self, tmp_path):
        path = write_config(tmp_path, BASE_CONFIG)
        assert cli.main(["run", path, "--out", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "demo.csv")
        # 3 heights x 2 alphas x 2 C values
        assert len(rows) == 12
        assert list(rows[0]) == [
            "experiment", "h", "rho", "alpha", "C",
            "analytic_c0", "analytic_c1", "analytic_c2",
            "analytic_total", "mc_mean", "mc_stderr", "trials", "seconds",
        ]
        assert os.path.exists(tmp_path / "demo.csv.manifest.txt")

        params = ChannelParams(K=4, beta=1, eta=2, alpha=0.5)
        phi = math.pi / 16
        for row in rows:
            if row["C"] == "0" and row["alpha"] == "0.5":
                want = analytic.los_integral_2d(params, float(row["h"]), phi)
                assert float(row["analytic_c0"]) == pytest.approx(want, rel=1e-12)
                assert float(row["analytic_total"]) == pytest.approx(want, rel=1e-12)
                assert row["analytic_c1"] == "" and row["analytic_c2"] == ""

    def test_run_round_trip_determinism(self, tmp_path):
        path = write_config(tmp_path, BASE_CONFIG)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert cli.main(["run", path, "--out", str(out_a)]) == 0
        assert cli.main(["run", path, "--out", str(out_b)]) == 0
        report = cli.diff_results(str(out_a / "demo.csv"), str(out_b / "demo.csv"))
        assert report == []

    def test_seed_override_changes_mc_only(self, tmp_path):
        path = write_config(tmp_path, BASE_CONFIG)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert cli.main(["run", path, "--out", str(out_a)]) == 0
        assert cli.main(["run", path, "--out", str(out_b), "--seed", "8"]) == 0
        report = cli.diff_results(str(out_a / "demo.csv"), str(out_b / "demo.csv"))
        assert report  # MC columns differ
        for line in report:
            cols = line.split("columns differ: ")[1].split(", ")
            assert set(cols) <= {"mc_mean", "mc_stderr"}

    def test_threads_do_not_change_results(self, tmp_path):
        path = write_config(tmp_path, BASE_CONFIG)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert cli.main(["run", path, "--out", str(out_a), "--threads", "1"]) == 0
        assert cli.main(["run", path, "--out", str(out_b), "--threads", "4"]) == 0
        assert cli.diff_results(str(out_a / "demo.csv"), str(out_b / "demo.csv")) == []

    def test_threads_env_var(self, tmp_path, monkeypatch):
        path = write_config(tmp_path, BASE_CONFIG)
        out_a = tmp_path / "env"
        monkeypatch.setenv("KEYHOLE_THREADS", "2")
        assert cli.main(["run", path, "--out", str(out_a)]) == 0
        out_b = tmp_path / "one"
        monkeypatch.delenv("KEYHOLE_THREADS")
        assert cli.main(["run", path, "--out", str(out_b)]) == 0
        assert cli.diff_results(str(out_a / "demo.csv"), str(out_b / "demo.csv")) == []

    def test_density_sweep_monotone_to_one(self, tmp_path):
        text = (
            BASE_CONFIG
            .replace("kind = sweep-h", "kind = sweep-density")
            .replace("alpha = 0.5 1.0", "alpha = 0.5")
            .replace("C = 0 2", "C = 2")
            .replace("start = 0.25\nstop = 1.0\nsteps = 3", "start = 50\nstop = 2000\nsteps = 4")
            .replace("scale = linear", "scale = log")
            .replace("height = 0.5", "height = 0.3")
        )
        path = write_config(tmp_path, text)
        assert cli.main(["run", path, "--out", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "demo.csv")
        probs = [float(r["analytic_total"]) for r in rows]
        assert all(b >= a for a, b in zip(probs, probs[1:]))
        assert probs[-1] > 0.99
        assert all(0.0 <= float(r["mc_mean"]) <= 1.0 for r in rows)

    def test_measure_regions_smoke(self, tmp_path):
        text = (
            BASE_CONFIG
            .replace("kind = sweep-h", "kind = measure-regions")
            .replace("C = 0 2", "C = 0 1")
            .replace("steps = 3", "steps = 2")
        )
        path = write_config(tmp_path, text.replace("trials = 8", "trials = 8\nmc_samples = 50000"))
        assert cli.main(["run", path, "--out", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "demo.csv")
        assert len(rows) == 4
        for r in rows:
            ana, mc, se = (float(r[k]) for k in ("analytic_total", "mc_mean", "mc_stderr"))
            assert abs(ana - mc) <= 4 * se + 1e-4

    def test_sweep_3d_smoke(self, tmp_path):
        text = (
            BASE_CONFIG
            .replace("kind = sweep-h", "kind = sweep-3d")
            .replace("length = 5.0", "length = 1.0\nwidth_y = 1.0")
            .replace("wall_position = 2.5", "wall_position = 0.5 0.5")
            .replace("alpha = 0.5 1.0", "alpha = 0.5")
            .replace("steps = 3", "steps = 2")
        )
        path = write_config(tmp_path, text)
        assert cli.main(["run", path, "--out", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "demo.csv")
        assert len(rows) == 4
        assert all(float(r["analytic_total"]) > 0 for r in rows)

    def test_sweep_3d_requires_width_y(self, tmp_path):
        text = BASE_CONFIG.replace("kind = sweep-h", "kind = sweep-3d")
        assert cli.main(["validate", write_config(tmp_path, text)]) == 2


class TestDiffCommand:
    def _write(self, path, header, rows):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)

    def test_schema_mismatch(self, tmp_path, capsys):
        a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        self._write(a, ["x", "y"], [["1", "2"]])
        self._write(b, ["x", "z"], [["1", "2"]])
        assert cli.main(["diff", a, b]) == 2
        assert "schema mismatch" in capsys.readouterr().err

    def test_rel_tol(self, tmp_path):
        a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        self._write(a, ["x"], [["1.000"]])
        self._write(b, ["x"], [["1.0005"]])
        assert cli.main(["diff", a, b]) == 1
        assert cli.main(["diff", a, b, "--rel-tol", "1e-3"]) == 0

    def test_seconds_ignored(self, tmp_path):
        a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        self._write(a, ["x", "seconds"], [["1", "0.1"]])
        self._write(b, ["x", "seconds"], [["1", "9.9"]])
        assert cli.main(["diff", a, b]) == 0

    def test_row_count_mismatch(self, tmp_path, capsys):
        a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        self._write(a, ["x"], [["1"], ["2"]])
        self._write(b, ["x"], [["1"]])
        assert cli.main(["diff", a, b]) == 1
        assert "row count" in capsys.readouterr().out
