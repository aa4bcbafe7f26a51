import json

import numpy as np
import pytest

from limflow import read_series_csv
from limflow.cli import EXIT_ALL_FAILED, EXIT_CONFIG, EXIT_OK, main

SIM_CONFIG = {
    "A": [[-0.5, 0.25], [-0.1, -0.4]],
    "Q": [[1.0, 0.1], [0.1, 0.8]],
    "tau": 0.0,
    "dt": 1.0,
    "steps": 3000,
    "seed": 42,
    "burn_in": 200,
}

FAST_FIT = {
    "fit": {
        "window_l": 4.0,
        "optimizer": {"max_iters": 1200, "restarts": 0},
        "init_lags": [1.0, 2.0],
    },
    "climatology_period": 0,
    "running_mean_width": 1,
}


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    sim_cfg = root / "sim.json"
    sim_cfg.write_text(json.dumps(SIM_CONFIG))
    fit_cfg = root / "fit.json"
    fit_cfg.write_text(json.dumps(FAST_FIT))
    data = root / "data.csv"
    assert main(["simulate", "--config", str(sim_cfg), "--out", str(data)]) == EXIT_OK
    return root, sim_cfg, fit_cfg, data


class TestSimulateCommand:
    def test_writes_standard_csv(self, workdir):
        _, _, _, data = workdir
        names, times, values = read_series_csv(data)
        assert names == ["var1", "var2"]
        assert values.shape == (2, 3000)
        assert np.allclose(np.diff(times), 1.0)

    def test_deterministic_and_flag_overrides(self, workdir, tmp_path):
        root, sim_cfg, _, data = workdir
        again = tmp_path / "again.csv"
        assert main(["simulate", "--config", str(sim_cfg), "--out", str(again)]) == EXIT_OK
        assert again.read_bytes() == data.read_bytes()
        short = tmp_path / "short.csv"
        assert (
            main(
                ["simulate", "--config", str(sim_cfg), "--steps", "100", "--out", str(short)]
            )
            == EXIT_OK
        )
        _, _, values = read_series_csv(short)
        assert values.shape == (2, 100)

    def test_bad_config_exits_1(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert (
            main(["simulate", "--config", str(bad), "--out", str(tmp_path / "x.csv")])
            == EXIT_CONFIG
        )
        assert "error" in capsys.readouterr().err


class TestFitCommands:
    def test_fit_white_json(self, workdir, tmp_path):
        root, _, fit_cfg, data = workdir
        out = tmp_path / "white.json"
        code = main(
            ["fit-white", "--data", str(data), "--config", str(fit_cfg), "--out", str(out)]
        )
        assert code == EXIT_OK
        payload = json.loads(out.read_text())
        assert payload["method"] == "white"
        A = np.asarray(payload["A"])
        assert A.shape == (2, 2)
        assert np.all(np.linalg.eigvals(A).real < 0)
        assert np.asarray(payload["infoflow"]).shape == (2, 2)
        assert payload["units"] == "nats/month"

    def test_fit_colored_json(self, workdir, tmp_path):
        root, _, fit_cfg, data = workdir
        out = tmp_path / "colored.json"
        code = main(
            ["fit-colored", "--data", str(data), "--config", str(fit_cfg), "--out", str(out)]
        )
        assert code == EXIT_OK
        payload = json.loads(out.read_text())
        assert payload["method"] == "colored"
        assert payload["tau"] > 0
        assert "white_limit" in payload
        assert np.asarray(payload["B"]).shape == (2, 2)

    def test_infoflow_liang_stdout(self, workdir, capsys):
        _, _, fit_cfg, data = workdir
        code = main(
            ["infoflow", "--data", str(data), "--config", str(fit_cfg), "--method", "liang"]
        )
        assert code == EXIT_OK
        payload = json.loads(capsys.readouterr().out)
        assert payload["method"] == "liang"
        assert np.asarray(payload["T"]).shape == (2, 2)
        assert np.asarray(payload["labels"]).shape == (2, 2)

    def test_flags_override_config_file(self, workdir, tmp_path):
        _, _, fit_cfg, data = workdir
        out = tmp_path / "w.json"
        code = main(
            [
                "fit-white", "--data", str(data), "--config", str(fit_cfg),
                "--window-l", "3.0", "--out", str(out),
            ]
        )
        assert code == EXIT_OK
        payload = json.loads(out.read_text())
        assert payload["config"]["fit"]["window_l"] == 3.0

    def test_missing_or_malformed_data_exits_1(self, workdir, tmp_path, capsys):
        _, _, fit_cfg, _ = workdir
        code = main(
            ["fit-white", "--data", str(tmp_path / "nope.csv"), "--config", str(fit_cfg)]
        )
        assert code == EXIT_CONFIG
        bad = tmp_path / "bad.csv"
        bad.write_text("time,x\n0,1\n1,zzz\n")
        assert (
            main(["fit-white", "--data", str(bad), "--config", str(fit_cfg)])
            == EXIT_CONFIG
        )


class TestGridScanCommand:
    @pytest.fixture(scope="class")
    def grid_files(self, workdir, tmp_path_factory):
        root, _, _, data = workdir
        names, times, values = read_series_csv(data)
        gdir = tmp_path_factory.mktemp("gridcli")
        index_csv = gdir / "index.csv"
        grid_csv = gdir / "grid.csv"
        with open(index_csv, "w") as fh:
            fh.write("time,idx\n")
            for t, v in zip(times, values[0]):
                fh.write(f"{t},{v}\n")
        rng = np.random.default_rng(0)
        other = rng.standard_normal(values.shape[1])
        with open(grid_csv, "w") as fh:
            fh.write("time,cell_a,cell_b\n")
            for k, t in enumerate(times):
                fh.write(f"{t},{values[1, k]},{other[k]}\n")
        return index_csv, grid_csv

    def test_scan_writes_results_and_config_echo(self, grid_files, workdir, tmp_path):
        _, _, fit_cfg, _ = workdir
        index_csv, grid_csv = grid_files
        out = tmp_path / "scan.csv"
        code = main(
            [
                "grid-scan", "--index", str(index_csv), "--grid", str(grid_csv),
                "--config", str(fit_cfg), "--out", str(out),
            ]
        )
        assert code == EXIT_OK
        header = out.read_text().splitlines()[0]
        assert header == (
            "cell_id,lon,lat,method,T_idx_to_cell,T_cell_to_idx,tau,residual,"
            "display_T_idx_to_cell,display_T_cell_to_idx,status"
        )
        echo = json.loads((tmp_path / "scan.csv.config.json").read_text())
        assert echo["mask"] == 0.02
        assert echo["units"] == "nats/month"

    def test_all_failed_exits_2(self, grid_files, workdir, tmp_path):
        _, _, fit_cfg, _ = workdir
        index_csv, _ = grid_files
        out = tmp_path / "scan.csv"
        code = main(
            [
                "grid-scan", "--index", str(index_csv), "--grid", str(index_csv.parent / "index.csv"),
                "--config", str(fit_cfg), "--out", str(out),
            ]
        )
        assert code == EXIT_ALL_FAILED

    def test_malformed_grid_exits_1(self, grid_files, workdir, tmp_path, capsys):
        _, _, fit_cfg, _ = workdir
        index_csv, _ = grid_files
        bad = tmp_path / "bad.csv"
        bad.write_text("time,c\n0,1\n1\n")
        code = main(
            [
                "grid-scan", "--index", str(index_csv), "--grid", str(bad),
                "--config", str(fit_cfg), "--out", str(tmp_path / "o.csv"),
            ]
        )
        assert code == EXIT_CONFIG


class TestPanelsCommand:
    def test_panels_csv(self, workdir, tmp_path):
        _, _, fit_cfg, data = workdir
        out = tmp_path / "panels.csv"
        code = main(
            ["panels", "--data", str(data), "--config", str(fit_cfg), "--out", str(out)]
        )
        assert code == EXIT_OK
        header = out.read_text().splitlines()[0]
        assert header == "curve,lag,row,col,value"


class TestPairCommand:
    def test_pair_json(self, workdir, tmp_path):
        _, _, fit_cfg, data = workdir
        out = tmp_path / "pair.json"
        code = main(
            ["pair", "--data", str(data), "--config", str(fit_cfg), "--out", str(out)]
        )
        assert code == EXIT_OK
        payload = json.loads(out.read_text())
        assert payload["status"] == "ok"
        methods = {r["method"] for r in payload["results"]}
        assert methods == {"white", "colored", "liang"}
