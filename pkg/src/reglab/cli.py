"""Command-line entry point: ``reglab <subcommand> ...``."""

import argparse
import json
import sys
from pathlib import Path

from . import experiments as ex
from .costs import DwellSpec, check_dwell, schedule_from_dict
from .dynamics import SystemModel
from .errors import ReglabError


def _finish(report):
    failed = report.get("failed_checks", [])
    if failed:
        print("failed checks: " + ", ".join(failed), file=sys.stderr)
    return 0 if not failed else 1


def _parse_values(text):
    text = text.strip()
    if not text:
        return []
    if text.startswith("["):
        return json.loads(text)
    return [json.loads(v) for v in text.split(",")]


def cmd_simulate(args):
    report, _ = ex.run_scenario(ex.ScenarioConfig.from_file(args.config), args.trace, args.report)
    print(ex.report_json(report), end="")
    return _finish(report)


def cmd_reproduce(args):
    bundle = ex.reproduce(args.name, args.outdir, T=args.T)
    print(json.dumps({"name": bundle["name"], "summary": bundle["summary"], "passed": bundle["passed"]}, indent=2))
    failed = [f"{r['name']}:{c}" for r in bundle["reports"] for c in r["failed_checks"]]
    if failed:
        print("failed checks: " + ", ".join(failed), file=sys.stderr)
    return 0 if bundle["passed"] else 1


def cmd_sweep(args):
    with open(args.config) as fh:
        base = json.load(fh)
    reports, rows = ex.sweep(base, args.axis, _parse_values(args.values), args.outdir)
    for row in rows:
        print(json.dumps(row))
    failed = [f"row{i}:{row['error'] or c}" for i, (row, rep) in enumerate(zip(rows, reports))
              for c in ((rep or {}).get("failed_checks") or ([] if rep else ["run"]))]
    if failed:
        print("failed checks: " + ", ".join(failed), file=sys.stderr)
    return 1 if failed else 0


def cmd_dwell_check(args):
    with open(args.schedule) as fh:
        data = json.load(fh)
    # only start times matter; a scalar placeholder system keeps parsing cheap
    starts = sorted({int(s.get("start", 0)) for s in data["segments"]})
    horizon = int(data.get("horizon", starts[-1]))
    segs = [{"start": t, "theta": [float(i % 2)], "eta": [0.0]} for i, t in enumerate(starts)]
    schedule = schedule_from_dict({"horizon": horizon, "segments": segs}, SystemModel.integrator(1))
    result = check_dwell(schedule, DwellSpec(args.n0, args.phi))
    print(json.dumps({"admissible": result.ok, "violation": result.interval}))
    if not result.ok:
        print(f"failed checks: dwell on interval {list(result.interval)}", file=sys.stderr)
    return 0 if result.ok else 1


def cmd_verify_bounds(args):
    cfg = ex.ScenarioConfig.from_file(args.config)
    cfg.analyses = {**cfg.analyses, "bounds": cfg.analyses.get("bounds") or True}
    report, _ = ex.run_scenario(cfg)
    b = report.get("bounds", {})
    print(json.dumps({"regret": report["regret"], "bound": b.get("total"), "error": b.get("error"),
                      "checks": report["checks"]}, indent=2))
    return _finish(report)


def build_parser():
    p = argparse.ArgumentParser(prog="reglab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run one scenario config")
    s.add_argument("config")
    s.add_argument("--trace")
    s.add_argument("--report")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("reproduce", help="run a built-in demonstration")
    s.add_argument("name", choices=["example1-baseline", "example1-improved", "example2"])
    s.add_argument("--outdir", type=Path)
    s.add_argument("--T", type=int, default=1000)
    s.set_defaults(func=cmd_reproduce)

    s = sub.add_parser("sweep", help="vary one config entry")
    s.add_argument("config")
    s.add_argument("--axis", required=True, help="dotted or JSON-pointer path")
    s.add_argument("--values", required=True, help="comma-separated or JSON list")
    s.add_argument("--outdir", type=Path)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("dwell-check", help="check a schedule's switch times against (n0, phi)")
    s.add_argument("schedule")
    s.add_argument("--n0", type=int, required=True)
    s.add_argument("--phi", type=float, required=True)
    s.set_defaults(func=cmd_dwell_check)

    s = sub.add_parser("verify-bounds", help="run a scenario and compare regret with its bound")
    s.add_argument("config")
    s.set_defaults(func=cmd_verify_bounds)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ReglabError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
