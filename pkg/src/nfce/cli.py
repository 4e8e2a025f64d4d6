"""Command-line entry point.

``nfce {sweep-pilot|sweep-snr|sparsity-map|validate} --config PATH --out DIR
[--threads K] [--force]``

Exit codes: 0 success, 1 runtime failure, 2 configuration or usage error.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import logging
import os
import subprocess
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
import tomli_w

from . import __version__
from .config import ConfigError, SystemConfig, config_from_dict, config_to_dict, load_config
from .experiments import ResultTable, sparsity_map, sweep_pilot, sweep_snr
from .plotting import plot_sparsity_map, plot_sweep
from .validation import run_validation

log = logging.getLogger("nfce")

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2
MANIFEST_NAME = "manifest.toml"
SWEEP_HEADER = ("kind", "axis", "axis_value", "method", "trial", "trial_seed",
                "nmse_linear", "nmse_db", "mean_of_db", "iters", "n_ok", "status")


def fmt(x) -> str:
    """Floats with 9 significant digits; ints and strings unchanged."""
    if isinstance(x, float):
        return format(x, ".9g")
    return str(x)


# ---------------------------------------------------------------- manifest


@dataclass
class RunManifest:
    command: str
    config: SystemConfig
    version: str
    started: str
    finished: str = ""
    outputs: list = field(default_factory=list)
    timing: dict = field(default_factory=dict)

    @property
    def base_seed(self) -> int:
        return self.config.base_seed

    def to_dict(self) -> dict:
        run = {"command": self.command, "version": self.version, "started": self.started,
               "finished": self.finished, "base_seed": self.base_seed, "outputs": list(self.outputs)}
        return {"run": run, "config": config_to_dict(self.config), "timing": dict(self.timing)}

    @classmethod
    def from_dict(cls, data: dict) -> "RunManifest":
        run = data["run"]
        return cls(run["command"], config_from_dict(data["config"]), run["version"], run["started"],
                   run["finished"], list(run["outputs"]), dict(data.get("timing", {})))

    def write(self, out_dir: Path) -> None:
        (out_dir / MANIFEST_NAME).write_text(tomli_w.dumps(self.to_dict()), encoding="utf-8")


def load_manifest(path) -> RunManifest:
    with Path(path).open("rb") as fh:
        return RunManifest.from_dict(tomllib.load(fh))


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


def version_string() -> str:
    """``git describe --always --dirty`` of the source tree, else the package version."""
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"], cwd=Path(__file__).parent,
                             capture_output=True, text=True, timeout=10)
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return f"v{__version__}"


# --------------------------------------------------------------------- CSV


def _trial_row(axis: str, r) -> list:
    return ["trial", axis, fmt(float(r.axis_value)), r.method, r.trial, r.trial_seed,
            fmt(r.nmse_linear), fmt(r.nmse_db), "", r.iters, "", r.status]


def _mean_rows(table: ResultTable) -> list:
    rows = []
    for s in table.summary():
        rows.append(["mean", table.axis, fmt(float(s.axis_value)), s.method, "", "",
                     fmt(s.nmse_linear), fmt(s.nmse_db), fmt(s.mean_db), "", s.n_ok,
                     "ok" if s.n_ok else "no valid trials"])
    return rows


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


# ---------------------------------------------------------------- commands


class UsageError(Exception):
    pass


def _prepare_out(out: str | None, force: bool) -> Path:
    if out is None:
        raise UsageError("--out is required for this command")
    path = Path(out)
    if path.exists():
        if not path.is_dir():
            raise UsageError(f"output path {path} exists and is not a directory")
        if any(path.iterdir()) and not force:
            raise UsageError(f"output directory {path} is not empty; pass --force to overwrite")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _run_sweep(cfg: SystemConfig, out: Path, manifest: RunManifest, threads: int, kind: str) -> int:
    if kind == "pilot":
        axis, values, runner, stem, xlabel = "T", cfg.T_values, sweep_pilot, "nmse_vs_pilot", "pilot length T"
    else:
        axis, values, runner, stem, xlabel = "snr_db", cfg.snr_values, sweep_snr, "nmse_vs_snr", "SNR (dB)"
    csv_path, svg_path = out / f"{stem}.csv", out / f"{stem}.svg"
    manifest.outputs = [csv_path.name, svg_path.name]
    manifest.write(out)
    rows = []
    with csv_path.open("w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(SWEEP_HEADER)
        try:
            for v in values:
                part = runner(cfg, [v], threads=threads)
                for r in part.rows:
                    w.writerow(_trial_row(axis, r))
                fh.flush()
                rows.extend(part.rows)
                means = ", ".join(f"{m} {d:.2f} dB" for m, d in ((m, part.mean_db(m)[0]) for m in cfg.methods))
                log.info("%s=%s: %s", axis, fmt(float(v)), means)
        except Exception as exc:  # hard failure: keep what is on disk
            log.error("sweep aborted at %s=%s: %s: %s", axis, v, type(exc).__name__, exc)
            manifest.finished = _now()
            manifest.write(out)
            return EXIT_RUNTIME
        table = ResultTable(axis, tuple(values), cfg.methods, rows)
        w.writerows(_mean_rows(table))
    plot_sweep(table, svg_path, xlabel)
    manifest.timing = {m: sum(r.wallclock_s for r in rows if r.method == m) for m in cfg.methods}
    manifest.finished = _now()
    manifest.write(out)
    return EXIT_OK


def _run_sparsity_map(cfg: SystemConfig, out: Path, manifest: RunManifest) -> int:
    names = ["sparsity_map.csv", "sparsity_map_drift.csv", "sparsity_map.svg"]
    manifest.outputs = names
    manifest.write(out)
    try:
        smap = sparsity_map(cfg)
    except ValueError as exc:
        log.error("sparsity map failed: %s", exc)
        return EXIT_RUNTIME
    N, P = smap.magnitude.shape
    with (out / names[0]).open("w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(("row", "column", "magnitude"))
        for n in range(N):
            for p in range(P):
                w.writerow((n, p, fmt(float(smap.magnitude[n, p]))))
    with (out / names[1]).open("w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(("path", "is_los", "angle", "distance", "column", "freq", "sin_virtual", "grid_index"))
        for l, path in enumerate(smap.paths):
            for p in range(P):
                w.writerow((l, int(path.is_los), fmt(float(path.angle)), fmt(float(path.distance)), p,
                            fmt(float(smap.freqs[p])), fmt(float(smap.drift_sin[l, p])),
                            fmt(float(smap.drift_index[l, p]))))
    plot_sparsity_map(smap, out / names[2])
    manifest.finished = _now()
    manifest.write(out)
    return EXIT_OK


def _run_validate(cfg: SystemConfig, out: Path | None, manifest: RunManifest) -> int:
    if out is not None:
        manifest.outputs = ["validation.csv"]
        manifest.write(out)
    results = run_validation(cfg)
    width = max(len(c.name) for c in results)
    for c in results:
        print(f"{c.status.upper():4}  {c.name:<{width}}  {c.detail}")
    failed = [c.name for c in results if c.status == "fail"]
    if out is not None:
        with (out / "validation.csv").open("w", encoding="utf-8", newline="") as fh:
            w = _writer(fh)
            w.writerow(("check", "status", "detail"))
            w.writerows((c.name, c.status, c.detail) for c in results)
        manifest.finished = _now()
        manifest.write(out)
    if failed:
        print("failed checks: " + "; ".join(failed))
        return EXIT_RUNTIME
    return EXIT_OK


# -------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nfce", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "sweep-pilot": "NMSE versus pilot length T",
        "sweep-snr": "NMSE versus SNR",
        "sparsity-map": "beamspace magnitude map of one wideband channel",
        "validate": "run the built-in invariant suite",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", help="TOML config file (defaults to the built-in desk-scale config)",
                       required=name != "validate")
        p.add_argument("--out", help="output directory", required=name != "validate")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (default: $NFCE_THREADS or 1)")
        p.add_argument("--force", action="store_true", help="allow writing into a non-empty output directory")
        p.add_argument("-q", "--quiet", action="store_true", help="only log warnings and errors")
    return parser


def _threads(arg: int | None) -> int:
    if arg is None:
        env = os.environ.get("NFCE_THREADS", "").strip()
        if not env:
            return 1
        try:
            arg = int(env)
        except ValueError:
            raise UsageError(f"NFCE_THREADS must be an integer, got {env!r}") from None
    if arg < 1:
        raise UsageError(f"thread count must be >= 1, got {arg}")
    return arg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    warnings.simplefilter("default")
    try:
        threads = _threads(args.threads)
        cfg = load_config(args.config) if args.config else SystemConfig()
        out = _prepare_out(args.out, args.force) if args.out or args.command != "validate" else None
    except ConfigError as exc:
        print(f"nfce: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"nfce: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UsageError as exc:
        print(f"nfce: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    manifest = RunManifest(args.command, cfg, version_string(), _now())
    if args.command == "sweep-pilot":
        return _run_sweep(cfg, out, manifest, threads, "pilot")
    if args.command == "sweep-snr":
        return _run_sweep(cfg, out, manifest, threads, "snr")
    if args.command == "sparsity-map":
        return _run_sparsity_map(cfg, out, manifest)
    return _run_validate(cfg, out, manifest)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
