"""Scenario runner.

Usage:
  twistgw verify    --config vacuum.cfg
  twistgw conserve  --config gw-standard.cfg --out out/gw
  twistgw all       --config my.cfg --seed 7

``--config`` takes a path or the name of a bundled config. Exit codes: 0 all
selected checks pass, 1 a check failed, 2 the config could not be parsed or
validated, 3 the twist gives a degenerate frame.

Artifacts in the output directory:
  report.json    deterministic run report (no timings)
  report.txt     the same for humans
  runtime.json   wall-clock timings and thread settings
  checks.csv     one row per check
  convergence.csv, emt_slice.csv   when the matching suite ran
  fields.bin / fields.json         field snapshot when ``output.snapshot`` is set

``TWISTGW_THREADS`` sets the BLAS/OpenMP thread count; it must be in the
environment before numpy is loaded, which this module takes care of when run
as the entry point.
"""
from __future__ import annotations

import os

THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS")


def apply_thread_env() -> str | None:
    n = os.environ.get("TWISTGW_THREADS")
    if n:
        for var in THREAD_VARS:
            os.environ[var] = n
    return n


apply_thread_env()

import argparse  # noqa: E402
import json  # noqa: E402
import sys  # noqa: E402
import time  # noqa: E402
from pathlib import Path  # noqa: E402

from . import __version__  # noqa: E402
from .geometry import DegenerateFrame  # noqa: E402
from .grid import GridError  # noqa: E402
from .scenario import ConfigError, Scenario, bundled_config, load_config  # noqa: E402
from .suites import SUITE_NAMES, SuiteContext, SuiteResult, conservation_summary, run_suite  # noqa: E402

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_FRAME = 0, 1, 2, 3
SUBCOMMANDS = SUITE_NAMES + ("all",)


def resolve_config(name: str) -> Path:
    p = Path(name)
    if p.exists():
        return p
    bundled = bundled_config(name if name.endswith(".cfg") else name + ".cfg")
    if bundled.exists():
        return bundled
    return p


def build_report(subcommand: str, scenario: Scenario, seed: int, results: list[SuiteResult], extras: dict) -> dict:
    cfg = scenario.config
    passed = all(r.passed for r in results)
    return {
        "tool": "twistgw",
        "version": __version__,
        "subcommand": subcommand,
        "seed": seed,
        "config": {"name": cfg.name, "fingerprint": cfg.fingerprint(), "schema_version": cfg.version},
        "passed": passed,
        "exit_code": EXIT_OK if passed else EXIT_FAIL,
        "suites": [r.to_dict() for r in results],
        **extras,
    }


def dump_json(obj: dict) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def report_text(report: dict) -> str:
    lines = [f"twistgw {report['version']}  {report['subcommand']}  config={report['config']['name']}"
             f"  fingerprint={report['config']['fingerprint'][:16]}  seed={report['seed']}"]
    for suite in report["suites"]:
        lines.append(f"[{'PASS' if suite['passed'] else 'FAIL'}] {suite['name']}")
        for c in suite["checks"]:
            if not c["applicable"]:
                lines.append(f"    n/a   {c['name']:<26} {c['details'].get('reason', '')}")
                continue
            op = "<=" if c["compare"] == "max" else ">="
            tol = "-" if c["tol"] is None else f"{c['tol']:.1e}"
            val = c["value"] if isinstance(c["value"], str) else f"{c['value']:.3e}"
            lines.append(f"    {'ok  ' if c['passed'] else 'FAIL'}  {c['name']:<26} {val} {op} {tol}")
    if "convergence_table" in report:
        lines.append("")
        lines.append(report["convergence_table"])
    lines.append(f"overall: {'PASS' if report['passed'] else 'FAIL'}")
    return "\n".join(lines) + "\n"


def _convergence_table(result: SuiteResult) -> tuple[str, list[list]]:
    rows = []
    text = [f"{'identity':<14}{'N':>3}  {'scale':>8}  {'defect':>12}  slope"]
    for c in result.checks:
        row = c.details.get("row")
        if row is None:
            continue
        slope = "exact" if row["exact"] else ("-" if row["slope"] is None else f"{row['slope']:.2f}")
        for s, d in zip(row["scales"], row["defects"]):
            rows.append([row["identity"], row["N"], float(s), float(d)])
            text.append(f"{row['identity']:<14}{row['N']:>3}  {s:>8g}  {d:>12.4e}  {slope}")
    return "\n".join(text), rows


def write_artifacts(out: Path, scenario: Scenario, ctx: SuiteContext, report: dict, results: list[SuiteResult],
                    conv_rows: list[list] | None) -> None:
    from .currents import emt
    from .io import tensor_slice_rows, write_csv, write_snapshot

    out.mkdir(parents=True, exist_ok=True)
    formats = scenario.config.output.formats
    (out / "report.json").write_text(dump_json(report))
    if "text" in formats:
        (out / "report.txt").write_text(report_text(report))
    if "csv" in formats:
        rows = []
        for r in results:
            for c in r.checks:
                rows.append([r.name, c.name, float(c.value), "" if c.tol is None else float(c.tol), c.compare,
                             int(c.passed), int(c.applicable)])
        write_csv(out / "checks.csv", ["suite", "check", "value", "tol", "compare", "passed", "applicable"], rows)
        if conv_rows:
            write_csv(out / "convergence.csv", ["identity", "N", "theta_scale", "defect"], conv_rows)
        if any(r.name in ("currents", "conserve") for r in results):
            header, rows = tensor_slice_rows(emt(ctx.cfg), axis=0)
            write_csv(out / "emt_slice.csv", header, rows)
    if scenario.config.output.snapshot:
        cfg = ctx.cfg
        fields = [cfg.phi] + list(cfg.vielbein.phi_a)
        names = ["phi"] + [f"phi^{a}" for a in range(len(cfg.vielbein.phi_a))]
        write_snapshot(out / "fields", fields, scenario.theta.entries, names)


def _diagnostic(kind: str, **info) -> str:
    return json.dumps({"error": kind, **info}, sort_keys=True)


def run(subcommand: str, config: str, out: str | None = None, seed: int = 0, quiet: bool = False) -> int:
    t0 = time.perf_counter()
    path = resolve_config(config)
    try:
        cfg = load_config(path)
        scenario = Scenario(cfg)
    except ConfigError as exc:
        print(_diagnostic("config", message=str(exc), line=exc.line, field=exc.field), file=sys.stderr)
        return EXIT_CONFIG
    except (GridError, ValueError) as exc:
        if isinstance(exc, DegenerateFrame):
            raise
        print(_diagnostic("config", message=f"{path}: {exc}", line=None, field=None), file=sys.stderr)
        return EXIT_CONFIG

    ctx = SuiteContext(scenario, seed)
    try:
        ctx.cfg  # build the frame up front so a singular twist is reported before any suite runs
    except DegenerateFrame as exc:
        print(_diagnostic("degenerate_frame", message=str(exc), point=exc.point, det=exc.det), file=sys.stderr)
        return EXIT_FRAME

    names = SUITE_NAMES if subcommand == "all" else (subcommand,)
    results: list[SuiteResult] = []
    timings = {}
    extras: dict = {}
    conv_rows = None
    for name in names:
        t = time.perf_counter()
        res = run_suite(name, ctx)
        timings[name] = time.perf_counter() - t
        results.append(res)
        if name == "converge":
            table, conv_rows = _convergence_table(res)
            extras["convergence_table"] = table
        if name == "conserve":
            extras["conservation"] = conservation_summary(ctx)
    report = build_report(subcommand, scenario, seed, results, extras)
    out_dir = Path(out) if out else Path(cfg.output.dir)
    write_artifacts(out_dir, scenario, ctx, report, results, conv_rows)
    timings["total"] = time.perf_counter() - t0
    runtime = {"runtime_s": timings, "threads": os.environ.get("TWISTGW_THREADS"),
               "config_fingerprint": cfg.fingerprint()}
    (out_dir / "runtime.json").write_text(json.dumps(runtime, indent=2, sort_keys=True) + "\n")
    if not quiet:
        sys.stdout.write(report_text(report))
    return report["exit_code"]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="twistgw", description="Twisted GW scalar model: identity, residual, "
                                 "current, conservation and convergence checks for one scenario config.")
    ap.add_argument("--version", action="version", version=f"twistgw {__version__}")
    sub = ap.add_subparsers(dest="subcommand", required=True)
    helps = {
        "verify": "star-product identities, trace, parity and oracle agreement",
        "residuals": "field-equation residuals and the on-shell decomposition",
        "currents": "EMT/AMT/DC forms, Noether assembly and J routes",
        "conserve": "Noether bookkeeping and the Omega-attributed divergence excess",
        "converge": "defect-vs-theta-scale tables with fitted slopes",
        "all": "every suite in order",
    }
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", required=True, help="config path or bundled name (vacuum, gw-standard)")
        p.add_argument("--out", default=None, help="output directory (default: output.dir from the config)")
        p.add_argument("--seed", type=int, default=0, help="seed for probe fields and sample points")
        p.add_argument("--quiet", action="store_true", help="do not print the text report")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return run(args.subcommand, args.config, args.out, args.seed, args.quiet)


if __name__ == "__main__":
    raise SystemExit(main())
