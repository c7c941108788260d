"""Command line interface: mine, run, rank, plot.

Exit codes: 0 on success, 1 on fatal errors (unreadable repository,
unwritable output), 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_config, parse_meta
from .learners import LearnerKind
from .mining import (DEFAULT_FIX_KEYWORDS, MiningError, assign_releases,
                     extract_releases, filter_project, label_commits,
                     mine_commits, summarize_project)
from .plots import plot_lifecycle
from .records import DEFECTIVE, read_commit_csv, write_commit_csv
from .rig import (RigError, emit_tables, rank_results, read_results_csv,
                  run_experiment, win_table_markdown, write_rank_csv,
                  comparison_slug)
from .sampling import Policy

log = logging.getLogger(__name__)


def _cmd_mine(args: argparse.Namespace) -> int:
    keywords = DEFAULT_FIX_KEYWORDS
    if args.keywords:
        keywords = frozenset(k.strip().lower()
                             for k in args.keywords.split(",") if k.strip())
        if not keywords:
            raise ConfigError("empty keyword list")
    records = mine_commits(args.repo, cutoff=args.cutoff)
    label_commits(args.repo, records, keywords)
    releases = extract_releases(args.repo)
    assign_releases(records, releases)
    out = write_commit_csv(records, args.out)
    defective = sum(1 for r in records if r.label == DEFECTIVE)
    print(f"mined {len(records)} commits ({defective} defective, "
          f"{len(releases)} releases) -> {out}")
    if args.meta:
        stars, has_license = parse_meta(args.meta)
        verdict = filter_project(summarize_project(
            records, releases, star_count=stars, has_license=has_license))
        if verdict.accepted:
            print("curation: accept")
        else:
            print(f"curation: reject ({', '.join(verdict.reasons)})")
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    results = run_experiment(config)
    written = emit_tables(results, config)
    applicable = sum(1 for c in results if c.applicable)
    print(f"{len(results)} cells ({applicable} scored, "
          f"{len(results) - applicable} skipped)")
    for path in written:
        print(f"wrote {path}")
    return 0


def _parse_policy_list(text: str) -> list[Policy]:
    try:
        return [Policy(tok.strip().upper())
                for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad policy list {text!r}: {exc}") from None


def _parse_learner_list(text: str) -> list[LearnerKind]:
    try:
        return [LearnerKind(tok.strip().upper())
                for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad learner list {text!r}: {exc}") from None


def _cmd_rank(args: argparse.Namespace) -> int:
    results = read_results_csv(args.results)
    if not results:
        raise RigError(f"no result rows in {args.results}")
    policies = _parse_policy_list(args.policies) if args.policies else \
        sorted({c.policy for c in results}, key=lambda p: p.value)
    learners = _parse_learner_list(args.learners) if args.learners else \
        sorted({c.learner for c in results}, key=lambda l: l.value)
    outcome = rank_results(results, policies, learners, alpha=args.alpha,
                           bootstrap_iters=args.iters,
                           a12_threshold=args.a12, seed=args.seed)
    table = win_table_markdown(outcome)
    print(table, end="")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    slug = comparison_slug(policies)
    (out_dir / f"wins_{slug}.md").write_text(table, encoding="utf-8")
    write_rank_csv(outcome, out_dir / f"ranks_{slug}.csv")
    return 0


def _cmd_plot(args: argparse.Namespace) -> int:
    records = read_commit_csv(args.commits)
    if not records:
        raise RigError(f"no commits in {args.commits}")
    out = plot_lifecycle(records, args.out, marker_commit=args.marker)
    print(f"wrote {out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jitdp",
        description="Just-in-time defect prediction lab: mine commits, "
                    "compare training-window policies, rank the results.")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="enable debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    mine = sub.add_parser("mine", help="mine a git clone into a commit CSV")
    mine.add_argument("repo", help="path to a local git repository")
    mine.add_argument("--meta", help="project metadata file (stars, license)")
    mine.add_argument("--out", default="commits.csv",
                      help="output CSV path (default: commits.csv)")
    mine.add_argument("--keywords",
                      help="comma-separated fix keywords overriding the "
                           "default set")
    mine.add_argument("--cutoff", type=int,
                      help="ignore commits after this unix timestamp")
    mine.set_defaults(func=_cmd_mine)

    run = sub.add_parser("run", help="run the configured experiment")
    run.add_argument("--config", required=True,
                     help="flat key=value experiment config file")
    run.set_defaults(func=_cmd_run)

    rank = sub.add_parser("rank", help="rank treatments from a results CSV")
    rank.add_argument("--results", required=True, help="results CSV path")
    rank.add_argument("--policies", help="comma-separated policies to compare")
    rank.add_argument("--learners", help="comma-separated learners to include")
    rank.add_argument("--alpha", type=float, default=0.05)
    rank.add_argument("--iters", type=int, default=1000)
    rank.add_argument("--a12", type=float, default=0.6)
    rank.add_argument("--seed", type=int, default=0)
    rank.add_argument("--out-dir", default=".")
    rank.set_defaults(func=_cmd_rank)

    plot = sub.add_parser("plot", help="render the life-cycle figure")
    plot.add_argument("--commits", required=True, help="commit CSV path")
    plot.add_argument("--out", default="lifecycle.svg")
    plot.add_argument("--marker", type=int, default=150,
                      help="commit count for the vertical marker")
    plot.set_defaults(func=_cmd_plot)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (MiningError, RigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
