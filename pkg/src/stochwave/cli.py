"""Command-line front end: ``stochwave KIND --config FILE [--out DIR]``.

Exit status is 0 when every check passes, 1 when a check fails and 2 for
configuration errors.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import __version__, config as cfgmod
from .container import write_atomic

log = logging.getLogger("stochwave")

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


@dataclass
class RunRecord:
    config_hash: str
    version: str
    wall_time: float
    checks: dict = field(default_factory=dict)
    paths: list = field(default_factory=list)
    error: str = ""

    @property
    def passed(self) -> bool:
        return not self.error and bool(self.checks) and all(self.checks.values())

    def to_text(self) -> str:
        lines = [f"config_hash = {self.config_hash}", f"version = {self.version}",
                 f"wall_time = {self.wall_time:.3f}", f"passed = {str(self.passed).lower()}"]
        lines += [f"check.{k} = {'pass' if v else 'fail'}" for k, v in self.checks.items()]
        lines += [f"output = {p}" for p in self.paths]
        if self.error:
            lines.append(f"error = {self.error}")
        return "\n".join(lines) + "\n"


def _write_result(res, out: str, multi: bool) -> list[str]:
    base = os.path.join(out, res.name) if multi else out
    os.makedirs(base, exist_ok=True)
    paths = []
    for fname, text in res.tables.items():
        paths.append(os.path.join(base, fname))
        write_atomic(paths[-1], text)
    for fname, blob in res.blobs.items():
        paths.append(os.path.join(base, fname))
        write_atomic(paths[-1], blob)
    paths.append(os.path.join(base, "report.txt"))
    write_atomic(paths[-1], "\n".join(res.lines) + "\n")
    return paths


def run(configs, out: str | None = None, threads: int = 1) -> RunRecord:
    """Execute every sub-run and collect one summary record.

    Sub-runs are independent and may execute concurrently; results are merged
    in file order so outputs do not depend on ``threads``.
    """
    from .experiments import run_experiment

    t0 = time.perf_counter()
    digest = cfgmod.combined_digest(configs)
    record = RunRecord(digest, __version__, 0.0)
    try:
        if threads > 1 and len(configs) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(run_experiment, configs))
        else:
            results = [run_experiment(c) for c in configs]
    except (ValueError, RuntimeError, ArithmeticError, OverflowError) as exc:
        record.error = f"{type(exc).__module__}.{type(exc).__name__}: {exc}"
        record.wall_time = time.perf_counter() - t0
        return record
    multi = len(results) > 1
    for res in results:
        for k, v in res.checks.items():
            record.checks[f"{res.name}.{k}" if multi else k] = v
        for line in res.lines:
            log.info("%s: %s", res.name, line)
        if out:
            record.paths += _write_result(res, out, multi)
    record.wall_time = time.perf_counter() - t0
    if out:
        path = os.path.join(out, "summary.txt")
        record.paths.append(path)
        write_atomic(path, record.to_text())
    return record


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stochwave", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in cfgmod.KINDS:
        p = sub.add_parser(kind)
        p.add_argument("--config", required=True, help="experiment config file")
        p.add_argument("--seed", type=int, default=None, help="override the noise seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=1, help="concurrent sub-runs")
        p.add_argument("--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        configs = cfgmod.load(args.config, seed=args.seed)
        wrong = [c.name for c in configs if c.kind != args.kind]
        if wrong:
            raise cfgmod.ConfigError([f"kind: sub-runs {wrong} are not {args.kind!r}"])
        if args.threads < 1:
            raise cfgmod.ConfigError(["--threads: must be >= 1"])
    except cfgmod.ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    record = run(configs, args.out, args.threads)
    print(record.to_text(), end="")
    if record.error:
        print(f"runtime error: {record.error}", file=sys.stderr)
    return EXIT_PASS if record.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
