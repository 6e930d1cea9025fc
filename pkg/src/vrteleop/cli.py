"""Command-line entry point: ``vrteleop {latency,accuracy,teleop}``.

Every config key is also a flag (``predict_horizon_ms`` -> ``--predict-horizon-ms``).
Outputs land in ``output_dir`` as ``traces/trial_NN.csv``, ``report.csv``,
``summary.txt`` and ``config.resolved``; they are staged in a temporary
directory and moved into place only when the command succeeds.

Exit codes: 0 success, 1 runtime failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import logging
import os
import shutil
import sys
import tempfile
from pathlib import Path

from . import experiments
from .config import KEYS, RunConfig, load_file, resolve
from .errors import ConfigError
from .sim import write_traces

log = logging.getLogger("vrteleop")

COMMANDS = ("latency", "accuracy", "teleop")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value config file")
    common.add_argument("--out", dest="output_dir", metavar="DIR", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")
    for key, spec in KEYS.items():
        if key == "output_dir":
            continue
        common.add_argument("--" + key.replace("_", "-"), dest=key, metavar="V",
                            help=f"{spec.help} (default {spec.default})")
    parser = argparse.ArgumentParser(prog="vrteleop", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("latency", parents=[common], help="phase-lag latency experiment")
    sub.add_parser("accuracy", parents=[common], help="static positional accuracy experiment")
    sub.add_parser("teleop", parents=[common], help="closed-loop teleoperation, predictor off vs on")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    file_values = load_file(args.config) if args.config else {}
    overrides = {k: getattr(args, k) for k in KEYS if getattr(args, k, None) is not None}
    return resolve(args.command, file_values, overrides)


@contextlib.contextmanager
def staged_output(out_dir: Path):
    """Yield a scratch directory; on success move its contents into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out_dir.name}-", dir=out_dir.parent))
    umask = os.umask(0)
    os.umask(umask)
    tmp.chmod(0o777 & ~umask)
    try:
        yield tmp
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    if not out_dir.exists():
        os.replace(tmp, out_dir)
        return
    for item in tmp.iterdir():
        dest = out_dir / item.name
        if dest.is_dir():
            shutil.rmtree(dest)
        os.replace(item, dest)
    tmp.rmdir()


def write_rows(path: Path, rows) -> None:
    with path.open("w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)


def cmd_latency(cfg: RunConfig, out: Path) -> str:
    run = experiments.run_latency(cfg)
    (out / "traces").mkdir()
    for k, traces in enumerate(run.trials):
        write_traces(out / "traces" / f"trial_{k:02d}.csv", traces)
    write_rows(out / "report.csv", run.report.rows())
    return run.report.summary()


def cmd_accuracy(cfg: RunConfig, out: Path) -> str:
    run = experiments.run_accuracy(cfg)
    (out / "traces").mkdir()
    write_traces(out / "traces" / "trial_00.csv", run.traces)
    write_rows(out / "report.csv", run.report.rows())
    return run.report.summary() + f"\nper-axis noise sigma: {run.sigma_m * 1e3:.4f} mm"


def cmd_teleop(cfg: RunConfig, out: Path) -> str:
    if cfg["mode"] == "udp":
        results = [experiments.run_teleop_udp(cfg)]
    else:
        results = experiments.run_teleop_sim(cfg)
    (out / "traces").mkdir()
    rows = [["run", "rms_error_m", "final_error_m", "ik_failures", "stale_drops"]]
    lines = []
    for k, r in enumerate(results):
        write_traces(out / "traces" / f"trial_{k:02d}.csv", r.traces)
        rows.append([r.label, repr(r.rms_error_m), repr(r.final_error_m), r.ik_failures,
                     r.stale_drops])
        lines.append(f"  {r.label}: rms tracking error {r.rms_error_m * 1e3:.3f} mm, "
                     f"final error {r.final_error_m:.3e} m, ik failures {r.ik_failures}")
    write_rows(out / "report.csv", rows)
    return "\n".join(["teleoperation tracking"] + lines)


HANDLERS = {"latency": cmd_latency, "accuracy": cmd_accuracy, "teleop": cmd_teleop}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"vrteleop: config error: {exc}", file=sys.stderr)
        return 2
    try:
        with staged_output(Path(cfg["output_dir"])) as out:
            summary = HANDLERS[args.command](cfg, out)
            (out / "summary.txt").write_text(summary + "\n")
            (out / "config.resolved").write_text(cfg.resolved_text())
    except ConfigError as exc:
        print(f"vrteleop: config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failures map to exit code 1
        log.debug("traceback", exc_info=True)
        print(f"vrteleop: {args.command} failed: {exc}", file=sys.stderr)
        return 1
    print(summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())
