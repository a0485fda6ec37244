"""Command-line front end: one subcommand per experiment kind, plus a
report verifier that recomputes summaries from the stored records."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ExperimentSpec, SpecError
from .runner import read_records, run_experiment, summarize

# subcommand -> experiment kind
SUBCOMMANDS = {
    "certify": "certify",
    "attack": "attack-sweep",
    "probe-bs": "binary-search-dist",
    "slice": "slice",
    "profile": "direction-profile",
    "sorm": "sorm-check",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smoothlab",
        description="randomized-smoothing certification, decision-based "
                    "attacks and boundary probes on small synthetic tasks")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, kind in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=f"run a {kind} experiment")
        p.add_argument("--config", required=True,
                       help="TOML experiment spec")
        p.add_argument("--seed", type=int, default=None,
                       help="override the spec's master seed")
        p.add_argument("--out", default=None,
                       help="override the spec's output directory")
        p.add_argument("--jobs", type=int, default=1,
                       help="worker processes for per-point runs")
    rep = sub.add_parser(
        "report", help="recompute a result directory's summary from its "
                       "records and compare against the stored one")
    rep.add_argument("result_dir", help="directory written by a run")
    return parser


def _run(kind: str, args) -> int:
    spec = ExperimentSpec.from_toml(args.config, kind_override=kind,
                                    seed_override=args.seed,
                                    out_override=args.out)
    results = run_experiment(spec, jobs=args.jobs)
    out_dir = results.spec.out_dir or f"results/{kind}"
    out = results.write(out_dir)
    print(f"{kind}: {len(results.records)} records -> {out}")
    for err in results.summary["metadata"].get("errors", []):
        print(f"warning: {err['unit']}: {err['error']}", file=sys.stderr)
    return 0


def report(result_dir) -> int:
    """Exit 0 when the stored summary matches a fresh recomputation."""
    result_dir = Path(result_dir)
    spec = ExperimentSpec.from_toml(result_dir / "spec.resolved.toml")
    records = read_records(result_dir / "records.csv", spec.kind)
    with open(result_dir / "summary.json", encoding="utf-8") as fh:
        stored = json.load(fh)
    fresh = summarize(spec.kind, spec.resolved(), records)

    ok = True
    if stored.get("kind") == spec.kind:
        print("kind: OK")
    else:
        ok = False
        print(f"kind: MISMATCH (summary says {stored.get('kind')!r}, "
              f"spec says {spec.kind!r})")
    for section in ("counts", "stats"):
        if fresh[section] == stored.get(section):
            print(f"{section}: OK")
        else:
            ok = False
            print(f"{section}: MISMATCH")
            fresh_sec = fresh[section]
            stored_sec = stored.get(section) or {}
            for key in sorted(set(fresh_sec) | set(stored_sec)):
                if fresh_sec.get(key) != stored_sec.get(key):
                    print(f"  {section}.{key} differs")
    print("report: PASS" if ok else "report: FAIL")
    return 0 if ok else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "report":
            return report(args.result_dir)
        return _run(SUBCOMMANDS[args.command], args)
    except SpecError as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
