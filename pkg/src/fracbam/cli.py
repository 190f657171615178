"""Command-line experiment runner.

``fracbam run <config>`` executes the pipelines listed in the config's
``[experiment] mode`` and writes CSVs, reports and a ``manifest.json``.
``fracbam sweep <config> --param <name> --values <v1,v2,...>`` repeats the
run for each value on separate worker processes and writes
``summary.csv``.

Exit status: 0 success, 2 invalid config, 3 numeric failure, 4 failed
certification gate under ``--require-certified``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .config import SWEEP_PARAMS, ExperimentConfig, load_config
from .errors import (
    AccuracyError,
    BlowUpError,
    ConfigError,
    DivergenceError,
    DomainError,
    EnvelopeViolationError,
    EquilibriumMissingError,
    MaxIterationError,
    MetadataError,
    NonContractionError,
    QuadratureError,
)
from .halanay import halanay_constants, halanay_validate
from .model import find_equilibrium
from .solver import simulate
from .stability import certify_bounded, certify_unbounded, check_envelope
from .sync import synchronize, sync_certificate

__all__ = ["main", "run", "sweep", "verify_manifest", "EXIT_OK", "EXIT_CONFIG", "EXIT_NUMERIC", "EXIT_GATE"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_GATE = 4

CONFIG_ERRORS = (ConfigError, DomainError, MetadataError, EquilibriumMissingError)
NUMERIC_ERRORS = (BlowUpError, NonContractionError, MaxIterationError, AccuracyError,
                  QuadratureError, DivergenceError, EnvelopeViolationError)

SUMMARY_COLUMNS = ("param", "value", "exit_code", "verdict", "G3", "omega_measured",
                   "flag_G3_lt_1", "C_fit", "max_ratio", "envelope_pass", "error")


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _kv(pairs) -> str:
    return "".join(f"{k}={_fmt(v)}\n" for k, v in pairs)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


# {{{ pipelines


def _run_simulate(cfg: ExperimentConfig, out: Path, summary: dict) -> list[str]:
    net = cfg.network
    traj = simulate(net, cfg.solver)
    traj.to_csv(out / "trajectory.csv")
    eq = find_equilibrium(net)
    _write_text(out / "equilibrium.txt", _kv(
        [(f"x_{i + 1}", float(v)) for i, v in enumerate(eq.x_star)]
        + [(f"y_{i + 1}", float(v)) for i, v in enumerate(eq.y_star)]
        + [("residual", float(eq.residual)), ("iterations", eq.iterations)]
    ))
    xi = float(min(net.a.min(), net.a_bar.min()))
    env = check_envelope(traj, eq, xi, net.delta)
    _write_text(out / "envelope.txt", _kv([
        ("C_fit", env.C_fit), ("xi_used", env.xi_used), ("max_ratio", env.max_ratio),
        ("trend", env.trend), ("pass", env.passed),
    ]))
    with open(out / "envelope.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("t,ratio\n")
        for t, r in zip(traj.times, env.ratios):
            fh.write(f"{t:.17g},{r:.17g}\n")
    summary.update(C_fit=env.C_fit, max_ratio=env.max_ratio, envelope_pass=env.passed)
    return [] if env.passed else ["envelope"]


def _run_certify(cfg: ExperimentConfig, out: Path, summary: dict) -> list[str]:
    failed = []
    net = cfg.network
    for mode in cfg.certify_modes:
        if mode == "bounded":
            cert = certify_bounded(net)
        else:
            cert = certify_unbounded(net, find_equilibrium(net))
        _write_text(out / f"certificate_{mode}.txt", cert.to_report())
        if "verdict" not in summary:
            summary.update(verdict=cert.verdict, G3=cert.G3, omega_measured=cert.omega_measured,
                           flag_G3_lt_1=cert.G3 < 1.0)
        if not cert.certified:
            failed.append(f"certificate_{mode}")
    return failed


def _run_sync(cfg: ExperimentConfig, out: Path, summary: dict) -> list[str]:
    net = cfg.network
    run_ = synchronize(net, None, cfg.response_history, cfg.gains, cfg.solver)
    run_.drive.to_csv(out / "sync_drive.csv")
    run_.response.to_csv(out / "sync_response.csv")
    run_.error.to_csv(out / "sync_error.csv")
    norms = run_.error_norm()
    bounded = all(a.bound is not None for a in net.activations)
    cert = sync_certificate(net, cfg.gains, mode="bounded" if bounded else "unbounded")
    _write_text(out / "sync_certificate.txt", cert.to_report())
    _write_text(out / "sync_summary.txt", _kv([
        ("beta", float(cfg.gains.beta)), ("beta_bar", float(cfg.gains.beta_bar)),
        ("error_max_initial", float(norms[0])), ("error_max_final", float(norms[-1])),
        ("decay_fraction", float(norms[-1] / norms[0]) if norms[0] > 0 else 0.0),
    ]))
    return [] if cert.certified else ["sync_certificate"]


def _run_halanay(cfg: ExperimentConfig, out: Path, summary: dict) -> list[str]:
    rep = halanay_constants(cfg.halanay)
    if rep.gate:
        rep = halanay_validate(cfg.halanay, cfg.halanay_solver, report=rep)
        rep.to_csv(out / "halanay.csv")
    _write_text(out / "halanay.txt", rep.to_report())
    return [] if rep.gate else ["halanay_gate"]


PIPELINES = {"simulate": _run_simulate, "certify": _run_certify, "sync": _run_sync,
             "halanay": _run_halanay}


# }}}


def _execute(cfg: ExperimentConfig, out: Path, require_certified: bool) -> tuple[int, dict, str]:
    """Run all pipelines; returns ``(exit_code, summary, error_message)``."""
    out.mkdir(parents=True, exist_ok=True)
    summary: dict = {}
    failed: list[str] = []
    t0 = time.perf_counter()
    try:
        for mode in cfg.modes:
            failed += PIPELINES[mode](cfg, out, summary)
    except CONFIG_ERRORS as exc:
        return EXIT_CONFIG, summary, f"{type(exc).__name__}: {exc}"
    except NUMERIC_ERRORS as exc:
        return EXIT_NUMERIC, summary, f"{type(exc).__name__}: {exc}"
    wall = time.perf_counter() - t0
    outputs = {p.name: _sha256(p) for p in sorted(out.iterdir())
               if p.is_file() and p.name != "manifest.json"}
    manifest = {
        "tool": "fracbam",
        "version": __version__,
        "modes": list(cfg.modes),
        "config": cfg.snapshot,
        "wall_clock_seconds": wall,
        "failed_gates": failed,
        "outputs": outputs,
    }
    _write_text(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    if failed and require_certified:
        return EXIT_GATE, summary, "failed gates: " + ", ".join(failed)
    return EXIT_OK, summary, ""


def verify_manifest(out_dir) -> bool:
    """True when every checksum in ``manifest.json`` matches its file."""
    out = Path(out_dir)
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    return all((out / name).is_file() and _sha256(out / name) == digest
               for name, digest in manifest["outputs"].items())


def _overrides(args) -> dict:
    ov = {}
    if getattr(args, "step", None) is not None:
        ov[("solver", "h")] = repr(args.step)
    if getattr(args, "t_end", None) is not None:
        ov[("solver", "t_end")] = repr(args.t_end)
    return ov


def run(config_path, out_dir=None, require_certified: bool = False,
        overrides: dict | None = None, stream=None) -> int:
    """Execute one config; returns the exit status."""
    stream = sys.stderr if stream is None else stream
    try:
        cfg = load_config(config_path, overrides=overrides)
    except CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=stream)
        return EXIT_CONFIG
    out = Path(out_dir) if out_dir is not None else cfg.output_dir
    code, _, msg = _execute(cfg, out, require_certified)
    if msg:
        print(f"error: {msg}" if code != EXIT_GATE else msg, file=stream)
    return code


def _sweep_worker(job) -> dict:
    config_path, param, value, out, require_certified, base_overrides = job
    row = {"param": param, "value": value}
    section, keys = SWEEP_PARAMS[param]
    ov = dict(base_overrides)
    for key in keys:
        ov[(section, key)] = value
    try:
        cfg = load_config(config_path, overrides=ov)
    except CONFIG_ERRORS as exc:
        row.update(exit_code=EXIT_CONFIG, error=f"{type(exc).__name__}: {exc}")
        return row
    code, summary, msg = _execute(cfg, Path(out), require_certified)
    row.update(summary)
    row.update(exit_code=code, error=msg)
    return row


def sweep(config_path, param: str, values: list[str], out_dir=None, require_certified: bool = False,
          overrides: dict | None = None, max_workers: int | None = None, stream=None) -> int:
    """One run per value on independent workers, summarized in ``summary.csv``."""
    stream = sys.stderr if stream is None else stream
    if param not in SWEEP_PARAMS:
        print(f"error: --param must be one of {sorted(SWEEP_PARAMS)}, got {param!r}", file=stream)
        return EXIT_CONFIG
    try:
        cfg = load_config(config_path, overrides=overrides)
    except CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=stream)
        return EXIT_CONFIG
    for v in values:
        try:
            float(v)
        except ValueError:
            print(f"error: --values entry {v!r} is not a number", file=stream)
            return EXIT_CONFIG
    out = Path(out_dir) if out_dir is not None else cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(str(config_path), param, v, str(out / f"{param}={v}"), require_certified, overrides or {})
            for v in values]
    rows: list[dict] = []
    if jobs:
        workers = max_workers or min(len(jobs), os.cpu_count() or 1)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_worker, jobs))
    with open(out / "summary.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for row in rows:
            w.writerow([_fmt(row.get(col, "")) for col in SUMMARY_COLUMNS])
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fracbam", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"fracbam {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("config", help="experiment config (INI)")
        sp.add_argument("--out", help="output directory (overrides [output] dir)")
        sp.add_argument("--require-certified", action="store_true",
                        help="exit 4 when any certification gate fails")
        sp.add_argument("--step", type=float, help="override [solver] h")
        sp.add_argument("--t-end", type=float, dest="t_end", help="override [solver] t_end")

    common(sub.add_parser("run", help="run one experiment"))
    sp = sub.add_parser("sweep", help="repeat an experiment over parameter values")
    common(sp)
    sp.add_argument("--param", required=True, help=f"one of {', '.join(sorted(SWEEP_PARAMS))}")
    sp.add_argument("--values", required=True, help="comma-separated values (may be empty)")
    sp.add_argument("--workers", type=int, help="worker processes (default: one per value up to the CPU count)")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    ov = _overrides(args)
    if args.command == "run":
        return run(args.config, args.out, args.require_certified, ov)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    return sweep(args.config, args.param, values, args.out, args.require_certified, ov, args.workers)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
