"""Batch front-end: single runs and field scans with CSV/JSON output.

Configuration is a flat key-value text file (``key = value`` per line,
``#`` comments); every key is mirrored by a ``--key value`` command line
flag and flags override file values.  See :data:`CONFIG_KEYS` for the full
schema.  Observables are comma-separated tokens ``z@M`` (single-site
``<Z_M>``) or ``xx@M,L`` (two-site ``<X_M X_L>``); sites are zero-based.

Results go to ``<out>/results.csv`` (rows appended as points finish, 15
significant digits) and ``<out>/results.json`` (full per-point convergence
reports, full float precision).  Each scan point also leaves a state
checkpoint ``point_####.npz``.  Exit code 0 on success, 2 when individual
scan points failed, 1 on usage errors.  ``NESS_WORKERS`` > 1 runs scan
points on a process pool (disabling warm starts between points).
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import os
import sys
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, NessError
from .model import ModelSpec, pauli
from .mps import correlation, expectation, save_mps
from .oracle import MAX_DENSE_SITES, dense_liouvillian, dense_observable, ness_null_space
from .sweeper import SweepSchedule, run

__all__ = ["RunConfig", "parse_config", "run_scan", "emit_results", "main"]

# key -> (type, default, help)
CONFIG_KEYS = {
    "n_sites": (int, 3, "chain length"),
    "field_h": (float, 0.0, "on-site field h"),
    "coupling_j": (float, 0.0, "nearest-neighbour coupling J"),
    "coupling_v": (float, 0.0, "next-nearest coupling V"),
    "gamma": (float, 1.0, "decay rate"),
    "d_start": (int, 6, "phase-1 bond dimension"),
    "d_max": (int, 20, "maximal bond dimension"),
    "d_step": (int, 4, "bond growth per phase-2 sweep"),
    "gamma_start_factor": (float, 10.0, "annealing start multiple of gamma"),
    "gamma_decay": (float, 0.8, "annealing decay per sweep"),
    "phase1_arnoldi_iters": (int, 8, "per-site Arnoldi steps in phase 1"),
    "phase2_arnoldi_iters": (int, 240, "per-site Arnoldi steps in phase 2"),
    "phase1_sweeps": (int, 16, "phase-1 sweep budget"),
    "max_sweeps": (int, 60, "total sweep budget"),
    "residual_tol": (float, 1e-8, "convergence threshold on |L rho|/|rho|"),
    "observable_tol": (float, 1e-8, "stationarity threshold on observables"),
    "scan_parameter": (str, "", "one of field_h, coupling_j, coupling_v, gamma"),
    "scan_start": (float, 0.0, "first scan value"),
    "scan_stop": (float, 0.0, "last scan value"),
    "scan_steps": (int, 1, "number of scan points"),
    "observables": (str, "auto", "comma list of z@M / xx@M,L tokens"),
    "out": (str, ".", "output directory"),
    "seed": (int, 0, "random seed (pad noise)"),
    "verify": (bool, False, "append dense-oracle columns (n_sites <= 7)"),
}

_SCAN_PARAMETERS = ("field_h", "coupling_j", "coupling_v", "gamma")


@dataclass
class RunConfig:
    """Validated flat configuration; field names match :data:`CONFIG_KEYS`."""

    n_sites: int = 3
    field_h: float = 0.0
    coupling_j: float = 0.0
    coupling_v: float = 0.0
    gamma: float = 1.0
    d_start: int = 6
    d_max: int = 20
    d_step: int = 4
    gamma_start_factor: float = 10.0
    gamma_decay: float = 0.8
    phase1_arnoldi_iters: int = 8
    phase2_arnoldi_iters: int = 240
    phase1_sweeps: int = 16
    max_sweeps: int = 60
    residual_tol: float = 1e-8
    observable_tol: float = 1e-8
    scan_parameter: str = ""
    scan_start: float = 0.0
    scan_stop: float = 0.0
    scan_steps: int = 1
    observables: str = "auto"
    out: str = "."
    seed: int = 0
    verify: bool = False
    observable_list: list = field(default_factory=list)  # parsed tokens

    def model(self, scan_value: float | None = None) -> ModelSpec:
        values = {
            "n_sites": self.n_sites,
            "field_h": self.field_h,
            "coupling_j": self.coupling_j,
            "coupling_v": self.coupling_v,
            "gamma": self.gamma,
        }
        if scan_value is not None and self.scan_parameter:
            values[self.scan_parameter] = scan_value
        return ModelSpec(**values)

    def schedule(self) -> SweepSchedule:
        return SweepSchedule(
            d_start=self.d_start,
            d_max=self.d_max,
            d_step=self.d_step,
            gamma_start_factor=self.gamma_start_factor,
            gamma_decay=self.gamma_decay,
            phase1_arnoldi_iters=self.phase1_arnoldi_iters,
            phase2_arnoldi_iters=self.phase2_arnoldi_iters,
            phase1_sweeps=self.phase1_sweeps,
            max_sweeps=self.max_sweeps,
            residual_tol=self.residual_tol,
            observable_tol=self.observable_tol,
        )

    def scan_values(self) -> np.ndarray:
        if not self.scan_parameter:
            return np.array([None], dtype=object)
        if self.scan_steps == 1:
            return np.array([self.scan_start])
        return np.linspace(self.scan_start, self.scan_stop, self.scan_steps)


def _coerce(key: str, raw, errors: list[str]):
    kind = CONFIG_KEYS[key][0]
    if isinstance(raw, kind) and not (kind is int and isinstance(raw, bool)):
        return raw
    text = str(raw).strip()
    try:
        if kind is bool:
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        return kind(text)
    except ValueError:
        errors.append(f"key {key!r}: cannot parse {text!r} as {kind.__name__}")
        return CONFIG_KEYS[key][1]


def _read_config_file(path: str, errors: list[str]) -> dict:
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                text = line.split("#", 1)[0].strip()
                if not text:
                    continue
                if "=" not in text:
                    errors.append(f"{path}:{lineno}: expected 'key = value'")
                    continue
                key, raw = (part.strip() for part in text.split("=", 1))
                if key not in CONFIG_KEYS:
                    errors.append(f"{path}:{lineno}: unknown key {key!r}")
                    continue
                values[key] = raw
    except OSError as err:
        errors.append(f"cannot read config file {path}: {err}")
    return values


def parse_observables(text: str, n_sites: int, errors: list[str]) -> list[tuple]:
    """Parse observable tokens into ``(token, kind, sites)`` triples."""
    if text.strip() == "auto":
        mid = (n_sites - 1) // 2
        tokens = [f"z@{mid}"]
        if n_sites > 1:
            tokens.append(f"xx@{mid},{mid + 1}")
    else:
        tokens = _split_tokens(text)
    parsed = []
    for token in tokens:
        if "@" not in token:
            errors.append(f"observable {token!r}: expected kind@sites")
            continue
        kind, _, sites_text = token.partition("@")
        kind = kind.strip().lower()
        try:
            sites = [int(s) for s in sites_text.split(",") if s.strip() != ""]
        except ValueError:
            errors.append(f"observable {token!r}: bad site list")
            continue
        if kind == "z" and len(sites) == 1:
            pass
        elif kind == "xx" and len(sites) == 2 and sites[0] != sites[1]:
            pass
        else:
            errors.append(
                f"observable {token!r}: expected z@M or xx@M,L with distinct sites"
            )
            continue
        if not all(0 <= s < n_sites for s in sites):
            errors.append(f"observable {token!r}: site out of range for {n_sites} sites")
            continue
        parsed.append((token.replace(" ", ""), kind, sites))
    return parsed


def _split_tokens(text: str) -> list[str]:
    """Split ``z@0, xx@0,1, z@2`` into tokens; a comma starts a new token
    only when followed by a kind@ prefix."""
    parts = [p.strip() for p in text.split(",")]
    tokens: list[str] = []
    for part in parts:
        if not part:
            continue
        if "@" in part or not tokens:
            tokens.append(part)
        else:
            tokens[-1] += "," + part
    return tokens


def parse_config(path: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Load and validate a configuration; flags in ``overrides`` win.

    All problems are collected and reported in one :class:`ConfigError`.
    """
    errors: list[str] = []
    values: dict = {}
    if path is not None:
        values.update(_read_config_file(path, errors))
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key not in CONFIG_KEYS:
            errors.append(f"unknown option {key!r}")
            continue
        values[key] = val
    coerced = {key: _coerce(key, val, errors) for key, val in values.items()}
    config = RunConfig(**{k: v for k, v in coerced.items() if k in CONFIG_KEYS})

    if config.n_sites < 1:
        errors.append(f"n_sites must be >= 1, got {config.n_sites}")
    if config.gamma < 0:
        errors.append(f"gamma must be >= 0, got {config.gamma}")
    if config.scan_steps < 1:
        errors.append(f"scan_steps must be >= 1, got {config.scan_steps}")
    if config.scan_parameter and config.scan_parameter not in _SCAN_PARAMETERS:
        errors.append(
            f"scan_parameter must be one of {_SCAN_PARAMETERS}, got "
            f"{config.scan_parameter!r}"
        )
    if config.d_start > config.d_max:
        errors.append("d_start must not exceed d_max")
    if config.verify and config.n_sites > MAX_DENSE_SITES:
        errors.append(
            f"verify mode needs n_sites <= {MAX_DENSE_SITES} (dense oracle)"
        )
    if config.n_sites >= 1:
        config.observable_list = parse_observables(
            config.observables, config.n_sites, errors
        )
    if errors:
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(errors))
    return config


def _measure(state, kind: str, sites: list[int]) -> complex:
    if kind == "z":
        return expectation(state, pauli("Z"), sites[0])
    return correlation(state, pauli("X"), pauli("X"), sites[0], sites[1])


def _run_point(config: RunConfig, index: int, scan_value, initial_state=None) -> dict:
    """Solve one scan point and collect its row (never raises)."""
    row: dict = {"scan_value": np.nan if scan_value is None else float(scan_value)}
    started = time.perf_counter()
    try:
        spec = config.model(scan_value)
        state, report = run(
            spec,
            config.schedule(),
            initial_state=initial_state,
            seed=config.seed,
            checkpoint_path=os.path.join(config.out, f"checkpoint_{index:04d}.npz"),
        )
        for token, kind, sites in config.observable_list:
            row[token] = _measure(state, kind, sites)
        row.update(
            residual=report.final_residual,
            sweeps=report.n_sweeps,
            status=report.status,
            wall_time=time.perf_counter() - started,
        )
        if config.verify:
            rho = ness_null_space(dense_liouvillian(spec))
            for token, kind, sites in config.observable_list:
                op = pauli("Z") if kind == "z" else pauli("X")
                row[f"verify_{token}"] = dense_observable(rho, op, sites)
        row["_state"] = state
        row["_report"] = report
    except (NessError, ValueError, np.linalg.LinAlgError) as err:
        row.update(
            residual=np.nan, sweeps=0, status=f"error: {err}",
            wall_time=time.perf_counter() - started,
        )
        row["_state"] = None
        row["_report"] = None
    return row


def _columns(config: RunConfig) -> list[str]:
    scan_name = config.scan_parameter or "point"
    cols = [scan_name]
    for token, _, _ in config.observable_list:
        cols.extend([f"{token}_re", f"{token}_im"])
    cols.extend(["residual", "sweeps", "status", "wall_time"])
    if config.verify:
        for token, _, _ in config.observable_list:
            cols.extend([f"verify_{token}_re", f"verify_{token}_im"])
    return cols


def _row_values(config: RunConfig, row: dict) -> list:
    values: list = [row["scan_value"]]
    for token, _, _ in config.observable_list:
        val = row.get(token)
        values.extend([np.nan, np.nan] if val is None else [val.real, val.imag])
    values.extend([row["residual"], row["sweeps"], row["status"], row["wall_time"]])
    if config.verify:
        for token, _, _ in config.observable_list:
            val = row.get(f"verify_{token}")
            values.extend([np.nan, np.nan] if val is None else [val.real, val.imag])
    return values


def _format_cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.15g}"


def run_scan(config: RunConfig, progress=None) -> tuple[list[dict], int]:
    """Execute every scan point, streaming CSV rows as they finish.

    Points run sequentially with warm starts from the previous solution,
    or on a process pool (cold starts) when ``NESS_WORKERS`` > 1.  Returns
    the row dicts and the number of failed points.
    """
    os.makedirs(config.out, exist_ok=True)
    values = config.scan_values()
    csv_path = os.path.join(config.out, "results.csv")
    columns = _columns(config)
    rows: list[dict] = []
    failures = 0

    try:
        workers = int(os.environ.get("NESS_WORKERS", "1") or "1")
    except ValueError:
        workers = 1
    with open(csv_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        handle.flush()

        def finish(index, row):
            nonlocal failures
            state = row["_state"]
            if state is not None:
                save_mps(
                    state, os.path.join(config.out, f"point_{index:04d}.npz")
                )
            if row["status"].startswith("error"):
                failures += 1
            writer.writerow(
                [_format_cell(v) for v in _row_values(config, row)]
            )
            handle.flush()
            rows.append(row)
            if progress:
                progress(index, row)

        if workers > 1 and len(values) > 1:
            plain = replace(config)  # dataclass copy is picklable
            with concurrent.futures.ProcessPoolExecutor(workers) as pool:
                futures = [
                    pool.submit(_run_point, plain, i, v)
                    for i, v in enumerate(values)
                ]
                for i, fut in enumerate(futures):
                    finish(i, fut.result())
        else:
            previous_state = None
            for i, value in enumerate(values):
                if previous_state is None:
                    row = _run_point(config, i, value)
                else:
                    # adjacent points have nearby solutions: reuse the last
                    # state and skip the annealing ramp
                    warm = replace(config, gamma_start_factor=1.0, phase1_sweeps=2)
                    warm.observable_list = config.observable_list
                    row = _run_point(warm, i, value, initial_state=previous_state)
                if row["_state"] is not None:
                    previous_state = row["_state"]
                finish(i, row)

    emit_results(rows, config, "json", os.path.join(config.out, "results.json"))
    return rows, failures


def emit_results(rows: list[dict], config: RunConfig, fmt: str, path: str) -> None:
    """Write the result table as ``csv`` or ``json``.

    CSV carries 15 significant digits; JSON keeps full float precision
    (values round-trip bit-exactly) and embeds each point's convergence
    report.
    """
    if not rows:
        raise ValueError("result table is empty")
    if fmt == "csv":
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(_columns(config))
            for row in rows:
                writer.writerow([_format_cell(v) for v in _row_values(config, row)])
        return
    if fmt == "json":
        scan_name = config.scan_parameter or "point"
        payload = {
            "config": {
                k: getattr(config, k) for k in CONFIG_KEYS if hasattr(config, k)
            },
            "columns": _columns(config),
            "rows": [],
        }
        for row in rows:
            entry = {scan_name: row["scan_value"]}
            for token, _, _ in config.observable_list:
                val = row.get(token)
                if val is not None:
                    entry[token] = {"re": val.real, "im": val.imag}
                verify = row.get(f"verify_{token}")
                if verify is not None:
                    entry[f"verify_{token}"] = {"re": verify.real, "im": verify.imag}
            entry.update(
                residual=row["residual"], sweeps=row["sweeps"],
                status=row["status"], wall_time=row["wall_time"],
            )
            report = row.get("_report")
            entry["report"] = report.to_dict() if report is not None else None
            payload["rows"].append(entry)
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(payload, handle, indent=1)
        return
    raise ValueError(f"unknown output format {fmt!r}")


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad flags; the CLI contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="ness", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, desc in (
        ("run", "solve a single parameter point"),
        ("scan", "solve a sweep of parameter points"),
    ):
        p = sub.add_parser(name, help=desc)
        p.add_argument("--config", metavar="FILE", help="key = value config file")
        for key, (kind, _default, help_text) in CONFIG_KEYS.items():
            flag = "--" + key.replace("_", "-")
            if kind is bool:
                p.add_argument(flag, dest=key, action="store_true", default=None,
                               help=help_text)
            else:
                p.add_argument(flag, dest=key, type=str, default=None,
                               metavar=key.upper(), help=help_text)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    overrides = {key: getattr(args, key) for key in CONFIG_KEYS}
    try:
        config = parse_config(args.config, overrides)
        if args.command == "run":
            config = replace(config, scan_parameter="", scan_steps=1)
        rows, failures = run_scan(config)
    except ConfigError as err:
        print(str(err), file=sys.stderr)
        return 1
    for row in rows:
        print(
            f"point {_format_cell(row['scan_value'])}: {row['status']}, "
            f"residual {_format_cell(row['residual'])}, "
            f"{row['sweeps']} sweeps"
        )
    return 2 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
