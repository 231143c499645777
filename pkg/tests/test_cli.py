"""Configuration parsing, scans, output formats, exit codes."""

import csv
import json
import os

import numpy as np
import pytest

import ness
from ness import cli
from ness.errors import ConfigError


def write_config(tmp_path, text):
    path = tmp_path / "config.txt"
    path.write_text(text)
    return str(path)


def fast_keys(n_sites=2, **extra):
    base = dict(
        n_sites=n_sites, field_h="1.0", coupling_j="1.0", gamma="1.0",
        d_start="4", d_max="8", d_step="4", gamma_start_factor="1.0",
        phase1_sweeps="3", max_sweeps="30", residual_tol="1e-9",
    )
    base.update(extra)
    return base


def fast_config_text(n_sites=2, **extra):
    return "\n".join(f"{k} = {v}" for k, v in fast_keys(n_sites, **extra).items())


def read_csv(path):
    with open(path, newline="") as handle:
        return list(csv.reader(handle))


class TestParseConfig:
    def test_minimal_with_defaults(self, tmp_path):
        path = write_config(
            tmp_path, "n_sites = 3\nfield_h = 1\ncoupling_j = 1\ngamma = 1\n"
        )
        config = cli.parse_config(path)
        assert config.coupling_v == 0.0
        assert config.d_max == cli.CONFIG_KEYS["d_max"][1]
        assert config.observables == "auto"
        # auto observables: mid-chain Z plus mid-bond XX
        assert [t for t, _, _ in config.observable_list] == ["z@1", "xx@1,2"]

    def test_comments_and_blank_lines(self, tmp_path):
        path = write_config(tmp_path, "# header\n\nn_sites = 2  # trailing\n")
        assert cli.parse_config(path).n_sites == 2

    def test_scan_grid(self, tmp_path):
        path = write_config(
            tmp_path,
            "n_sites = 3\nscan_parameter = field_h\n"
            "scan_start = -4\nscan_stop = 4\nscan_steps = 33\n",
        )
        values = cli.parse_config(path).scan_values()
        assert len(values) == 33
        assert values[0] == -4 and values[-1] == 4

    def test_negative_sites_rejected(self, tmp_path):
        path = write_config(tmp_path, "n_sites = -3\n")
        with pytest.raises(ConfigError):
            cli.parse_config(path)

    def test_errors_aggregated(self, tmp_path):
        path = write_config(
            tmp_path,
            "n_sites = -3\nbogus_key = 1\ngamma = minus\nscan_steps = 0\n",
        )
        with pytest.raises(ConfigError) as err:
            cli.parse_config(path)
        message = str(err.value)
        assert "n_sites" in message
        assert "bogus_key" in message
        assert "gamma" in message
        assert "scan_steps" in message

    def test_flag_overrides_file(self, tmp_path):
        path = write_config(tmp_path, "n_sites = 3\nfield_h = 1.0\n")
        config = cli.parse_config(path, {"field_h": "-2.5"})
        assert config.field_h == -2.5

    def test_observable_tokens(self, tmp_path):
        path = write_config(
            tmp_path, "n_sites = 4\nobservables = z@0, xx@1,3, z@3\n"
        )
        parsed = cli.parse_config(path).observable_list
        assert [(t, k, s) for t, k, s in parsed] == [
            ("z@0", "z", [0]),
            ("xx@1,3", "xx", [1, 3]),
            ("z@3", "z", [3]),
        ]

    def test_bad_observable_site(self, tmp_path):
        path = write_config(tmp_path, "n_sites = 2\nobservables = z@5\n")
        with pytest.raises(ConfigError):
            cli.parse_config(path)


class TestRunScan:
    def test_single_point(self, tmp_path):
        config = cli.parse_config(
            write_config(tmp_path, fast_config_text()),
            {"out": str(tmp_path / "out")},
        )
        rows, failures = cli.run_scan(config)
        assert failures == 0
        assert len(rows) == 1
        assert rows[0]["status"] == "converged"
        table = read_csv(tmp_path / "out" / "results.csv")
        assert len(table) == 2  # header + one row

    def test_verify_columns_match_oracle(self, tmp_path):
        config = cli.parse_config(
            write_config(
                tmp_path,
                fast_config_text(n_sites=3, d_max="16")
                + "\nscan_parameter = field_h\nscan_start = -1\n"
                "scan_stop = 1\nscan_steps = 3\nverify = true\n",
            ),
            {"out": str(tmp_path / "out")},
        )
        rows, failures = cli.run_scan(config)
        assert failures == 0
        for row in rows:
            for token, _, _ in config.observable_list:
                assert abs(row[token] - row[f"verify_{token}"]) < 1e-6

    def test_rows_stream_incrementally(self, tmp_path):
        seen = []
        config = cli.parse_config(
            write_config(
                tmp_path,
                fast_config_text()
                + "\nscan_parameter = gamma\nscan_start = 0.5\n"
                "scan_stop = 1.5\nscan_steps = 2\n",
            ),
            {"out": str(tmp_path / "out")},
        )
        csv_path = tmp_path / "out" / "results.csv"

        def watch(index, row):
            seen.append(len(read_csv(csv_path)))

        cli.run_scan(config, progress=watch)
        assert seen == [2, 3]  # header plus one row per finished point

    def test_point_failure_recorded_and_scan_continues(self, tmp_path):
        config = cli.parse_config(
            write_config(
                tmp_path,
                fast_config_text()
                + "\nscan_parameter = gamma\nscan_start = -1\n"
                "scan_stop = 1\nscan_steps = 2\n",
            ),
            {"out": str(tmp_path / "out")},
        )
        rows, failures = cli.run_scan(config)
        assert failures == 1
        assert rows[0]["status"].startswith("error")
        assert rows[1]["status"] == "converged"

    def test_checkpoint_files_written(self, tmp_path):
        config = cli.parse_config(
            write_config(tmp_path, fast_config_text()),
            {"out": str(tmp_path / "out")},
        )
        cli.run_scan(config)
        assert (tmp_path / "out" / "point_0000.npz").exists()
        state = ness.load_mps(tmp_path / "out" / "point_0000.npz")
        assert state.n_sites == 2


class TestEmitResults:
    @pytest.fixture()
    def two_point_rows(self, tmp_path):
        config = cli.parse_config(
            write_config(
                tmp_path,
                fast_config_text(n_sites=3, d_max="16")
                + "\nscan_parameter = field_h\nscan_start = -1\n"
                "scan_stop = 1\nscan_steps = 2\n",
            ),
            {"out": str(tmp_path / "out")},
        )
        rows, _ = cli.run_scan(config)
        return config, rows, tmp_path

    def test_csv_shape(self, two_point_rows):
        config, rows, tmp_path = two_point_rows
        table = read_csv(tmp_path / "out" / "results.csv")
        assert len(table) == 3
        assert table[0][0] == "field_h"

    def test_json_roundtrip_bit_exact(self, two_point_rows):
        config, rows, tmp_path = two_point_rows
        payload = json.loads((tmp_path / "out" / "results.json").read_text())
        for row, entry in zip(rows, payload["rows"]):
            assert entry["field_h"] == row["scan_value"]
            assert entry["residual"] == row["residual"]
            for token, _, _ in config.observable_list:
                assert entry[token]["re"] == row[token].real
                assert entry[token]["im"] == row[token].imag

    def test_imaginary_parts_vanish_for_hermitian_observables(self, two_point_rows):
        config, rows, tmp_path = two_point_rows
        table = read_csv(tmp_path / "out" / "results.csv")
        header = table[0]
        for record in table[1:]:
            for name, cell in zip(header, record):
                if name.endswith("_im"):
                    assert abs(float(cell)) < 1e-8

    def test_empty_table_rejected(self, two_point_rows):
        config, rows, tmp_path = two_point_rows
        with pytest.raises(ValueError):
            cli.emit_results([], config, "csv", str(tmp_path / "x.csv"))


class TestDeterminismAndVerifyPurity:
    def _scan(self, tmp_path, out_name, verify):
        text = fast_config_text(n_sites=3, d_max="16") + (
            "\nscan_parameter = field_h\nscan_start = -0.5\n"
            "scan_stop = 0.5\nscan_steps = 2\nseed = 11\n"
        )
        if verify:
            text += "verify = true\n"
        config = cli.parse_config(
            write_config(tmp_path, text), {"out": str(tmp_path / out_name)}
        )
        cli.run_scan(config)
        return read_csv(tmp_path / out_name / "results.csv")

    @staticmethod
    def _drop_timing(table):
        header = table[0]
        keep = [i for i, name in enumerate(header) if name != "wall_time"]
        return [[record[i] for i in keep] for record in table]

    def test_same_config_same_seed_identical_output(self, tmp_path):
        first = self._scan(tmp_path, "a", verify=False)
        second = self._scan(tmp_path, "b", verify=False)
        assert self._drop_timing(first) == self._drop_timing(second)

    def test_verify_is_a_pure_addition(self, tmp_path):
        plain = self._drop_timing(self._scan(tmp_path, "plain", verify=False))
        verified = self._drop_timing(self._scan(tmp_path, "verified", verify=True))
        width = len(plain[0])
        trimmed = [record[:width] for record in verified]
        assert trimmed == plain


class TestMain:
    def test_run_exit_zero(self, tmp_path, capsys):
        path = write_config(tmp_path, fast_config_text())
        code = cli.main(["run", "--config", path, "--out", str(tmp_path / "out")])
        assert code == 0
        assert "converged" in capsys.readouterr().out

    def test_partial_failure_exit_two(self, tmp_path):
        path = write_config(
            tmp_path,
            fast_config_text()
            + "\nscan_parameter = gamma\nscan_start = -1\n"
            "scan_stop = 1\nscan_steps = 2\n",
        )
        code = cli.main(["scan", "--config", path, "--out", str(tmp_path / "out")])
        assert code == 2

    def test_usage_error_exit_one(self, tmp_path):
        path = write_config(tmp_path, "n_sites = -1\n")
        code = cli.main(["run", "--config", path, "--out", str(tmp_path / "out")])
        assert code == 1

    def test_bad_flag_exit_one(self):
        with pytest.raises(SystemExit) as err:
            cli.main(["run", "--no-such-flag"])
        assert err.value.code == 1

    def test_flag_override(self, tmp_path, capsys):
        path = write_config(tmp_path, fast_config_text())
        code = cli.main(
            ["run", "--config", path, "--out", str(tmp_path / "out"),
             "--field-h", "-1.0"]
        )
        assert code == 0
        payload = json.loads((tmp_path / "out" / "results.json").read_text())
        assert payload["config"]["field_h"] == -1.0


class TestWorkerPool:
    def test_parallel_scan_matches_serial(self, tmp_path):
        text = fast_config_text() + (
            "\nscan_parameter = field_h\nscan_start = -0.5\n"
            "scan_stop = 0.5\nscan_steps = 2\n"
        )
        serial_cfg = cli.parse_config(
            write_config(tmp_path, text), {"out": str(tmp_path / "serial")}
        )
        rows_serial, _ = cli.run_scan(serial_cfg)
        os.environ["NESS_WORKERS"] = "2"
        try:
            parallel_cfg = cli.parse_config(
                write_config(tmp_path, text), {"out": str(tmp_path / "parallel")}
            )
            rows_parallel, failures = cli.run_scan(parallel_cfg)
        finally:
            del os.environ["NESS_WORKERS"]
        assert failures == 0
        for a, b in zip(rows_serial, rows_parallel):
            assert a["scan_value"] == b["scan_value"]
            for token, _, _ in serial_cfg.observable_list:
                assert abs(a[token] - b[token]) < 1e-7
