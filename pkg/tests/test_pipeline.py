import csv
import json

import pytest

from app.config import parse_config
from app.main import main, run
from app.models import TimeSeriesRecord
from app.storage import ResultStore, format_cell

REFERENCE = """N_total = 10
beta = 1
Delta = 10
gbar_before = 0.2
gbar_after = 0.1
"""


def write_config(tmp_path, extra: str = "") -> str:
    path = tmp_path / "run.cfg"
    path.write_text(REFERENCE + extra, encoding="utf-8")
    return str(path)


def read_csv(path) -> list[list[str]]:
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.reader(f))


class TestStorage:

    def test_seventeen_digits(self):
        assert format_cell(0.1) == "0.10000000000000001"
        assert format_cell(3) == "3"
        assert format_cell(None) == ""

    def test_discard_removes_written_files(self, tmp_path):
        store = ResultStore(tmp_path / "out")
        a = store.write_text("a.txt", "x")
        b = store.write_csv("b.csv", ["h"], [[1.0]])
        store.discard()
        assert not a.exists()
        assert not b.exists()

    def test_unix_newlines(self, tmp_path):
        store = ResultStore(tmp_path)
        path = store.write_csv("t.csv", ["a", "b"], [[1.5, 2]])
        assert path.read_bytes() == b"a,b\n1.5,2\n"


class TestScenarios:

    def test_init_eq(self, tmp_path):
        out = tmp_path / "out"
        assert main(["init-eq", "--config", write_config(tmp_path), "--output", str(out)]) == 0

        rows = read_csv(out / "equilibrium.csv")
        assert rows[0] == ["mode", "mu", "omega", "n", "abs_u_p1", "abs_u_0", "abs_u_m1"]
        assert [row[0] for row in rows[1:]] == ["g", "o", "e"]
        assert sum(float(row[3]) for row in rows[1:]) == pytest.approx(10.0, abs=1e-8)

        metadata = json.loads((out / "metadata.json").read_text())
        assert metadata["scenario"] == "init-eq"
        assert metadata["mu"] == pytest.approx(float(rows[1][1]))
        assert "equilibrium.csv" in metadata["files"]
        assert (out / "config.resolved").exists()

    def test_sweep(self, tmp_path):
        out = tmp_path / "out"
        config = write_config(tmp_path, "gbar_list = 0, 0.1, 0.2\n")
        assert main(["sweep-g", "--config", config, "--output", str(out), "--parallel"]) == 0

        rows = read_csv(out / "fig1.csv")
        values = [float(row[1]) for row in rows[1:]]
        assert len(values) == 3
        assert values[0] == pytest.approx(0.5, abs=1e-12)
        assert values == sorted(values, reverse=True)
        assert (out / "fig1.gp").exists()

    def test_short_quench(self, tmp_path):
        out = tmp_path / "out"
        config = write_config(tmp_path, "t_max = 2\noutput_stride = 10\n")
        assert main(["quench", "--config", config, "--output", str(out)]) == 0

        series = read_csv(out / "timeseries.csv")
        assert series[0] == TimeSeriesRecord.csv_header()
        assert all(len(row) == 29 for row in series)
        assert len(series) == 1 + 21

        fig2 = read_csv(out / "fig2.csv")
        assert all(0.498 <= float(v) <= 0.502 for row in fig2[1:] for v in row[1:])
        assert len(read_csv(out / "fig3b.csv")) == len(fig2) - 1
        for name in ("fig2.gp", "fig3a.gp", "fig3b.gp"):
            assert (out / name).exists()

        metadata = json.loads((out / "metadata.json").read_text())
        assert metadata["n_g_infinity_proxy"]

    def test_quench_is_deterministic(self, tmp_path):
        config = write_config(tmp_path, "t_max = 1\noutput_stride = 10\n")
        for name in ("a", "b"):
            assert main(["quench", "--config", config, "--output", str(tmp_path / name)]) == 0
        first = (tmp_path / "a" / "timeseries.csv").read_bytes()
        assert first == (tmp_path / "b" / "timeseries.csv").read_bytes()

    def test_memory_check(self, tmp_path):
        out = tmp_path / "out"
        assert main(["memory-check", "--config", write_config(tmp_path), "--output", str(out)]) == 0

        rows = read_csv(out / "memory_check.csv")
        labels = [row[0] for row in rows[1:]]
        assert labels == ["eps=0.01", "eps=0.005", "eps=0.0025", "extrapolated", "markovian"]
        metadata = json.loads((out / "metadata.json").read_text())
        assert metadata["memory_delta_omega_rel_error"] <= 0.02
        assert metadata["memory_n_dot_rel_error"] <= 0.02


class TestFailures:

    def test_run_returns_exit_status(self, tmp_path):
        cfg = parse_config(REFERENCE + f"scenario = init-eq\noutput_dir = {tmp_path / 'out'}\n")
        assert run(cfg) == 0
        assert (tmp_path / "out" / "equilibrium.csv").exists()

        dilute = cfg.model_copy(update={"n_total": 1e-4})
        assert run(dilute) == 4

    def test_config_error_exit_code(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("Delta = -1\n", encoding="utf-8")
        assert main(["init-eq", "--config", str(path), "--output", str(tmp_path / "out")]) == 2

    def test_missing_config_file(self, tmp_path):
        assert main(["init-eq", "--config", str(tmp_path / "nope.cfg")]) == 2

    def test_convergence_error_removes_partial_files(self, tmp_path):
        out = tmp_path / "out"
        config = write_config(tmp_path, "t_max = 1\nsc_max_iter = 1\n")
        assert main(["quench", "--config", config, "--output", str(out)]) == 3
        assert not (out / "metadata.json").exists()
        assert not (out / "timeseries.csv").exists()
        assert not (out / "config.resolved").exists()

    def test_initialization_error_exit_code(self, tmp_path):
        config = tmp_path / "dilute.cfg"
        config.write_text(REFERENCE.replace("N_total = 10", "N_total = 0.0001"), encoding="utf-8")
        assert main(["init-eq", "--config", str(config), "--output", str(tmp_path / "out")]) == 4


@pytest.mark.slow
class TestValidate:

    def test_every_check_passes(self, tmp_path):
        out = tmp_path / "out"
        assert main(["validate", "--config", write_config(tmp_path), "--output", str(out)]) == 0

        lines = (out / "validate.txt").read_text().splitlines()
        assert len(lines) == 14
        assert all(line.startswith("PASS ") for line in lines), lines
