"""End-to-end tests for the command-line interface and its artifacts."""

from __future__ import annotations

import json

import pytest

from sonic_flow import cli


def write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def model(tau, b):
    return {"tau": tau, "doping": {"type": "constant", "value": b}}


# ---------------------------------------------------------------------------
# solve command


class TestSolve:
    def test_artifacts_and_boundaries(self, tmp_path):
        cfg = write_config(tmp_path, {
            "model": model(15.0, 1.5),
            "solver": {"kind": "subsonic"},
        })
        out = tmp_path / "out"
        assert cli.main(["solve", "--config", cfg, "--out", str(out)]) == 0

        lines = (out / "solution.csv").read_text().splitlines()
        assert lines[0] == "x,rho,e,regime"
        first = lines[1].split(",")
        last = lines[-1].split(",")
        assert abs(float(first[1]) - 1.0) <= 1e-6
        assert abs(float(last[1]) - 1.0) <= 1e-6
        assert {row.split(",")[3] for row in lines[1:]} <= {"sonic", "subsonic"}

        meta = json.loads((out / "solution.json").read_text())
        assert meta["kind"] == "subsonic"
        assert meta["model"]["tau"] == 15.0
        assert meta["residual_norm"] < 1e-6

        svg = (out / "profile.svg").read_text()
        assert svg.startswith("<svg")
        assert 'viewBox="0 0 800 600"' in svg

    def test_sonic_constant_columns(self, tmp_path):
        cfg = write_config(tmp_path, {
            "model": model(2.0, 1.0),
            "solver": {"kind": "sonic"},
        })
        out = tmp_path / "out"
        assert cli.main(["solve", "--config", cfg, "--out", str(out)]) == 0
        rows = (out / "solution.csv").read_text().splitlines()[1:]
        rhos = {row.split(",")[1] for row in rows}
        es = {row.split(",")[2] for row in rows}
        assert rhos == {"1.0"}
        assert es == {"0.5"}
        assert {row.split(",")[3] for row in rows} == {"sonic"}

    def test_byte_determinism(self, tmp_path):
        cfg = write_config(tmp_path, {
            "model": model(50.0, 1.5),
            "solver": {"kind": "transonic_shock", "rho_l": 0.9},
        })
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert cli.main(["solve", "--config", cfg, "--out", str(out1)]) == 0
        assert cli.main(["solve", "--config", cfg, "--out", str(out2)]) == 0
        for name in ("solution.csv", "solution.json", "profile.svg"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_shock_metadata(self, tmp_path):
        cfg = write_config(tmp_path, {
            "model": model(50.0, 1.5),
            "solver": {"kind": "transonic_shock", "rho_l": 0.9},
        })
        out = tmp_path / "out"
        assert cli.main(["solve", "--config", cfg, "--out", str(out)]) == 0
        meta = json.loads((out / "solution.json").read_text())
        shock = meta["shock"]
        assert shock["rho_l"] == pytest.approx(0.9, abs=1e-12)
        assert shock["rho_r"] == pytest.approx(1.0 / 0.9, abs=1e-12)
        assert 0.0 < shock["x0"] < 1.0

    def test_regime_rejection_exit_and_json(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {
            "model": model(15.0, 0.9),
            "solver": {"kind": "subsonic"},
        })
        rc = cli.main(["solve", "--config", cfg, "--out", str(tmp_path / "o")])
        assert rc == 2
        err = json.loads(capsys.readouterr().out)
        assert err["theoremRef"] == "Theorem 3.1"
        assert err["code"] == "PreconditionViolation"
        assert err["message"]

    def test_usage_errors(self, tmp_path, capsys):
        assert cli.main(["solve", "--config", "/does/not/exist.json"]) == 1
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert cli.main(["solve", "--config", str(bad)]) == 1
        cfg = write_config(tmp_path, {"model": model(15.0, 1.5),
                                      "solver": {"kind": "warp"}})
        assert cli.main(["solve", "--config", cfg]) == 1
        capsys.readouterr()

    def test_unknown_command_is_usage_error(self):
        assert cli.main(["transmogrify"]) == 1


# ---------------------------------------------------------------------------
# classify command


class TestClassify:
    def test_report_artifact(self, tmp_path):
        cfg = write_config(tmp_path, {"model": model(15.0, 0.4)})
        out = tmp_path / "out"
        assert cli.main(["classify", "--config", cfg, "--out", str(out)]) == 0
        rep = json.loads((out / "classify.json").read_text())
        assert rep["verdicts"]["supersonic"]["verdict"] == "not_exists"
        assert "0.7578" in rep["verdicts"]["supersonic"]["condition"]

    def test_deterministic(self, tmp_path):
        cfg = write_config(tmp_path, {"model": model(15.0, 1.5)})
        a, b = tmp_path / "a", tmp_path / "b"
        cli.main(["classify", "--config", cfg, "--out", str(a)])
        cli.main(["classify", "--config", cfg, "--out", str(b)])
        assert (a / "classify.json").read_bytes() == (b / "classify.json").read_bytes()


# ---------------------------------------------------------------------------
# portrait command


class TestPortrait:
    def _run(self, tmp_path, tau, b, mode="primal"):
        cfg = write_config(tmp_path, {
            "model": model(tau, b),
            "integrator": {"max_step": 2e-2},
            "portrait": {"mode": mode, "span": 2.0, "count": 6},
        })
        out = tmp_path / f"out_{tau}_{b}_{mode}"
        rc = cli.main(["portrait", "--config", cfg, "--out", str(out)])
        assert rc == 0
        return out

    def test_saddle_marked(self, tmp_path):
        out = self._run(tmp_path, 15.0, 1.5)
        svg = (out / "portrait.svg").read_text()
        assert "saddle" in svg
        assert "1.5000" in svg and "0.0444" in svg

    def test_weak_damping_saddle(self, tmp_path):
        out = self._run(tmp_path, 0.5, 1.5)
        svg = (out / "portrait.svg").read_text()
        assert "saddle" in svg
        assert "1.3333" in svg

    def test_focus_marked(self, tmp_path):
        out = self._run(tmp_path, 15.0, 0.5)
        svg = (out / "portrait.svg").read_text()
        assert "focus" in svg
        assert "0.5000" in svg and "0.1333" in svg

    def test_transformed_mode_overlays_xi(self, tmp_path):
        out = self._run(tmp_path, 0.5, 1.5, mode="transformed")
        svg = (out / "portrait.svg").read_text()
        assert "Xi" in svg

    def test_csv_shape(self, tmp_path):
        out = self._run(tmp_path, 15.0, 1.5)
        lines = (out / "portrait.csv").read_text().splitlines()
        assert lines[0] == "trajectory,x,rho,e"
        ids = {int(line.split(",")[0]) for line in lines[1:]}
        assert len(ids) > 1 and min(ids) == 0

    def test_variable_doping_rejected(self, tmp_path):
        cfg = write_config(tmp_path, {
            "model": {"tau": 15.0, "doping": {
                "type": "sine", "base": 1.5, "amplitude": 0.2, "frequency": 1.0
            }},
        })
        assert cli.main(["portrait", "--config", cfg,
                         "--out", str(tmp_path / "o")]) == 1


# ---------------------------------------------------------------------------
# sweep command


class TestSweep:
    def test_shock_family(self, tmp_path):
        cfg = write_config(tmp_path, {
            "model": model(50.0, 1.5),
            "solver": {"kind": "transonic_shock"},
            "sweep": {"variable": "rhoL", "values": [0.90, 0.92, 0.95]},
        })
        out = tmp_path / "out"
        assert cli.main(["sweep", "--config", cfg, "--out", str(out)]) == 0
        lines = (out / "sweep.csv").read_text().splitlines()
        rows = [line.split(",") for line in lines[1:]]
        successes = [r for r in rows if r[3] == "true"]
        assert len(successes) >= 2
        x0s = {r[5] for r in successes}
        assert len(x0s) == len(successes)

    def test_smooth_family_shares_slope(self, tmp_path):
        cfg = write_config(tmp_path, {
            "model": model(0.1, 1.5),
            "solver": {"kind": "c1_transonic"},
            "sweep": {"variable": "x0", "values": [0.25, 0.5, 0.75]},
        })
        out = tmp_path / "out"
        assert cli.main(["sweep", "--config", cfg, "--out", str(out)]) == 0
        lines = (out / "sweep.csv").read_text().splitlines()
        rows = [line.split(",") for line in lines[1:]]
        assert all(r[3] == "true" for r in rows)
        slopes = [float(r[9]) for r in rows]
        assert max(slopes) - min(slopes) <= 1e-3 * slopes[0]

    def test_rejections_recorded_not_fatal(self, tmp_path):
        cfg = write_config(tmp_path, {
            "model": model(1.0, 0.9),
            "solver": {"kind": "supersonic"},
            "sweep": {"variable": "tau", "values": [0.2, 0.3]},
        })
        out = tmp_path / "out"
        assert cli.main(["sweep", "--config", cfg, "--out", str(out)]) == 0
        lines = (out / "sweep.csv").read_text().splitlines()
        rows = [line.split(",") for line in lines[1:]]
        assert len(rows) == 2
        assert all(r[3] == "false" for r in rows)
        assert all("Theorem 3.3" in line for line in lines[1:])

    def test_missing_section_is_usage_error(self, tmp_path):
        cfg = write_config(tmp_path, {"model": model(15.0, 1.5)})
        assert cli.main(["sweep", "--config", cfg,
                         "--out", str(tmp_path / "o")]) == 1

    def test_value_grid_from_range(self, tmp_path):
        cfg = write_config(tmp_path, {
            "model": model(50.0, 1.5),
            "solver": {"kind": "transonic_shock"},
            "sweep": {"variable": "rhoL", "start": 0.9, "stop": 0.94,
                      "count": 2},
        })
        out = tmp_path / "out"
        assert cli.main(["sweep", "--config", cfg, "--out", str(out)]) == 0
        lines = (out / "sweep.csv").read_text().splitlines()
        assert len(lines) == 3


# ---------------------------------------------------------------------------
# verify command


class TestVerify:
    def _solve(self, tmp_path, payload):
        cfg = write_config(tmp_path, payload)
        out = tmp_path / "out"
        assert cli.main(["solve", "--config", cfg, "--out", str(out)]) == 0
        return out

    @pytest.mark.parametrize("payload", [
        {"model": model(15.0, 1.5), "solver": {"kind": "subsonic"}},
        {"model": model(50.0, 1.5),
         "solver": {"kind": "transonic_shock", "rho_l": 0.9}},
        {"model": model(0.1, 1.5), "solver": {"kind": "c1_transonic", "x0": 0.5}},
    ])
    def test_round_trip_residual(self, tmp_path, payload):
        out = self._solve(tmp_path, payload)
        assert cli.main(["verify", "--out", str(out)]) == 0
        report = json.loads((out / "verify.json").read_text())
        assert report["match"] is True
        assert report["residual_gap"] <= 1e-12

    def test_tampered_diagnostic_fails(self, tmp_path):
        out = self._solve(tmp_path, {
            "model": model(15.0, 1.5), "solver": {"kind": "subsonic"},
        })
        meta = json.loads((out / "solution.json").read_text())
        meta["residual_norm"] *= 2.0
        (out / "solution.json").write_text(json.dumps(meta, sort_keys=True))
        assert cli.main(["verify", "--out", str(out)]) == 3
        report = json.loads((out / "verify.json").read_text())
        assert report["match"] is False

    def test_missing_artifacts_usage_error(self, tmp_path, capsys):
        assert cli.main(["verify", "--out", str(tmp_path)]) == 1
        capsys.readouterr()
