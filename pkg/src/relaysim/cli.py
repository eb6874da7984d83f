"""Command line front end for the experiment runners.

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, EXPERIMENT_KINDS, ScenarioConfig, load_config_file
from .experiments import ExperimentError, run_experiment, write_results

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH", help="scenario config file (defaults apply if omitted)")
    parser.add_argument("--seed", type=int, metavar="U64", help="master seed override")
    parser.add_argument("--trials", type=int, metavar="N", help="Monte Carlo trials per point override")
    parser.add_argument("--out", metavar="PATH", help="write results CSV here")
    parser.add_argument(
        "--closed-form",
        action="store_true",
        help="evaluate high-SNR closed forms instead of Monte Carlo where applicable",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relaysim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment kind")
    run.add_argument("kind", choices=EXPERIMENT_KINDS)
    _add_common(run)
    place = sub.add_parser("place", help="rate-maximizing relay locations")
    _add_common(place)
    div = sub.add_parser("diversity", help="outage decay measurement over an SNR grid")
    _add_common(div)
    return parser


def _load(args: argparse.Namespace) -> ScenarioConfig:
    if args.config:
        return load_config_file(args.config)
    return ScenarioConfig()


def _summarize(kind: str, rows: list[dict]) -> str:
    lines = [f"{kind}: {len(rows)} result rows"]
    for row in rows:
        bits = [f"{key}={row[key]}" for key in ("algorithm", "m", "snr_db", "k", "beta_relay", "pos_x", "pos_y") if row.get(key) is not None]
        value = row.get("rate_nats")
        if value is not None:
            bits.append(f"rate={value:.6g}")
        if row.get("p1") is not None:
            bits.append(f"p1={row['p1']:.6g}")
        if row.get("p2") is not None:
            bits.append(f"p2={row['p2']:.6g}")
        lines.append("  " + " ".join(bits))
    return "\n".join(lines)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    kind = {"place": "place", "diversity": "diversity"}.get(args.command, getattr(args, "kind", None))
    try:
        cfg = _load(args)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        rows = run_experiment(kind, cfg, trials=args.trials, seed=args.seed, closed_form=args.closed_form)
        if args.out:
            write_results(rows, args.out)
            print(f"wrote {args.out}")
        else:
            print(_summarize(kind, rows))
    except ExperimentError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - runtime failures map to exit code 3
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
