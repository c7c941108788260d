"""Experiment orchestration: run every policy x learner over every applicable
release, collect the seven measures per cell, rank treatments on identical
release sets, and write the delimited and figure outputs."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .config import ExperimentConfig, parse_meta
from .features import cfs_select, engineer_features, smote_balance
from .learners import (LearnerKind, SingleClassError, predict_proba, train)
from .metrics import (FLAG_NO_NEGATIVES, FLAG_NO_POSITIVES, METRIC_POLARITY,
                      RESULT_METRICS, WIN_TABLE_METRICS, MetricReport,
                      PredictionSet, evaluate)
from .mining import filter_project, summarize_project
from .plots import plot_lifecycle
from .ranking import RankTable, TreatmentGroup, count_wins, scott_knott
from .records import CommitRecord, ReleaseInfo, read_commit_csv
from .sampling import Policy, build_train_set
from .seeds import derive_seed

log = logging.getLogger(__name__)

RESULTS_HEADER = ["project", "release", "policy", "learner",
                  "recall", "pf", "auc", "gm", "d2h", "brier", "ifa", "flags"]

_MEASURE_TITLES = {"d2h": "D2H", "auc": "AUC", "ifa": "IFA", "brier": "Brier",
                   "recall": "Recall", "pf": "PF", "gm": "GM"}

SKIP_PREFIX = "skip:"


class RigError(RuntimeError):
    """Fatal orchestration failure (including leakage-audit violations)."""


@dataclass(frozen=True)
class CellResult:
    """One (project, release, policy, learner) evaluation or recorded skip."""

    project: str
    release_index: int
    policy: Policy
    learner: LearnerKind
    report: Optional[MetricReport]
    flags: tuple[str, ...] = ()

    @property
    def applicable(self) -> bool:
        return self.report is not None

    def sort_key(self) -> tuple:
        return (self.project, self.release_index, self.policy.value,
                self.learner.value)


def releases_from_records(records: Sequence[CommitRecord]) -> list[ReleaseInfo]:
    """Reconstruct release windows from the release column of mined records."""
    first: dict[int, int] = {}
    last: dict[int, int] = {}
    for r in records:
        if r.release_index is None:
            continue
        i = r.release_index
        first[i] = min(first.get(i, r.timestamp), r.timestamp)
        last[i] = max(last.get(i, r.timestamp), r.timestamp)
    return [ReleaseInfo(index=i, tag_name="", tag_time=last[i],
                        first_commit_time=first[i], last_commit_time=last[i])
            for i in sorted(first)]


def _audit_leakage(train_records: Sequence[CommitRecord],
                   test_records: Sequence[CommitRecord],
                   project: str, release_index: int, policy: Policy) -> None:
    """Refuse to score any cell whose training window touches the test set."""
    max_train = max(r.timestamp for r in train_records)
    min_test = min(r.timestamp for r in test_records)
    if max_train >= min_test:
        raise RigError(
            f"leakage in {project} release {release_index} policy "
            f"{policy.value}: train timestamp {max_train} >= test {min_test}")
    overlap = {r.hash for r in train_records} & {r.hash for r in test_records}
    if overlap:
        raise RigError(
            f"leakage in {project} release {release_index} policy "
            f"{policy.value}: shared commits {sorted(overlap)[:3]}")


def run_project(records: Sequence[CommitRecord], name: str,
                config: ExperimentConfig) -> list[CellResult]:
    """All policy x learner cells for one project's releases (index >= 1)."""
    releases = releases_from_records(records)
    project_seed = derive_seed(config.seed, name)
    cells: list[CellResult] = []

    by_release: dict[int, list[CommitRecord]] = {}
    for r in records:
        if r.release_index is not None:
            by_release.setdefault(r.release_index, []).append(r)

    debug_fh = None
    if config.debug_dir is not None:
        config.debug_dir.mkdir(parents=True, exist_ok=True)
        debug_fh = (config.debug_dir / f"{name}_cfs.jsonl").open(
            "w", encoding="utf-8")

    try:
        for release in releases:
            if release.index < 1:
                continue
            test_records = by_release[release.index]
            if config.skip_degenerate_releases:
                labels = {r.label for r in test_records}
                if len(labels) < 2:
                    continue
            test_full = engineer_features(test_records)

            for policy in config.policies:
                selection = build_train_set(policy, records, release,
                                            seed=project_seed,
                                            params=config.policy_params)
                if not selection.applicable:
                    skip_flags = (f"{SKIP_PREFIX}{selection.reason}",)
                    for learner in config.learners:
                        cells.append(CellResult(name, release.index, policy,
                                                learner, None, skip_flags))
                    continue

                _audit_leakage(selection.records, test_records, name,
                               release.index, policy)

                train_ds = selection.dataset
                test_ds = test_full
                notes = (selection.note,) if selection.note else ()
                if config.cfs:
                    chosen = cfs_select(train_ds)
                    train_ds = train_ds.select_features(chosen.selected)
                    test_ds = test_full.select_features(chosen.selected)
                    if debug_fh is not None:
                        debug_fh.write(json.dumps({
                            "release": release.index, "policy": policy.value,
                            "selected": list(chosen.selected),
                            "merit": chosen.merit}) + "\n")
                if policy in config.smote_policies:
                    train_ds = smote_balance(
                        train_ds, k=config.smote_k,
                        seed=derive_seed(project_seed, release.index,
                                         policy.value, "smote"))

                for learner in config.learners:
                    try:
                        model = train(learner, train_ds,
                                      seed=derive_seed(project_seed,
                                                       release.index,
                                                       policy.value,
                                                       learner.value),
                                      params=config.learner_params)
                    except SingleClassError as exc:
                        log.warning("%s r%d %s %s: %s", name, release.index,
                                    policy.value, learner.value, exc)
                        cells.append(CellResult(
                            name, release.index, policy, learner, None,
                            (f"{SKIP_PREFIX}train-error",)))
                        continue
                    probs = predict_proba(model, test_ds)
                    report = evaluate(PredictionSet(
                        probs=probs, labels=test_ds.y, hashes=test_ds.hashes))
                    cells.append(CellResult(
                        name, release.index, policy, learner, report,
                        report.flags + notes))
    finally:
        if debug_fh is not None:
            debug_fh.close()

    cells.sort(key=CellResult.sort_key)
    return cells


def run_experiment(config: ExperimentConfig) -> list[CellResult]:
    """Run the full experiment over every configured project."""
    if not config.projects:
        raise RigError("experiment has no projects")
    results: list[CellResult] = []
    for project in config.projects:
        records = read_commit_csv(project.csv_path)
        if config.curation:
            releases = releases_from_records(records)
            if project.meta_path is not None:
                stars, has_license = parse_meta(project.meta_path)
            else:
                # Without metadata the star and license screens cannot be
                # evaluated; they pass so CSV-only fixtures stay usable.
                stars, has_license = 1000, True
            verdict = filter_project(summarize_project(
                records, releases, star_count=stars,
                has_license=has_license))
            if not verdict.accepted:
                log.warning("project %s rejected by curation: %s",
                            project.name, ", ".join(verdict.reasons))
                continue
        results.extend(run_project(records, project.name, config))
    results.sort(key=CellResult.sort_key)
    return results


def write_results_csv(results: Sequence[CellResult], path: Path | str) -> Path:
    """Results CSV, one row per cell; skipped cells keep empty measures."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULTS_HEADER)
        for cell in sorted(results, key=CellResult.sort_key):
            if cell.report is None:
                measures = [""] * len(RESULT_METRICS)
            else:
                measures = [f"{cell.report.value(m):.6f}"
                            if m != "ifa" else str(cell.report.ifa)
                            for m in RESULT_METRICS]
            writer.writerow([cell.project, cell.release_index,
                             cell.policy.value, cell.learner.value,
                             *measures, ";".join(cell.flags)])
    return path


def read_results_csv(path: Path | str) -> list[CellResult]:
    cells: list[CellResult] = []
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(RESULTS_HEADER) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"results CSV missing columns: {sorted(missing)}")
        for row in reader:
            flags = tuple(f for f in row["flags"].split(";") if f)
            if row["recall"] == "":
                report = None
            else:
                report = MetricReport(
                    recall=float(row["recall"]), pf=float(row["pf"]),
                    auc=float(row["auc"]), gm=float(row["gm"]),
                    d2h=float(row["d2h"]), brier=float(row["brier"]),
                    ifa=int(row["ifa"]),
                    flags=tuple(f for f in flags
                                if f in (FLAG_NO_POSITIVES, FLAG_NO_NEGATIVES)))
            cells.append(CellResult(
                project=row["project"], release_index=int(row["release"]),
                policy=Policy(row["policy"]),
                learner=LearnerKind(row["learner"]),
                report=report, flags=flags))
    return cells


@dataclass
class RankOutcome:
    """Ranking of policy x learner treatments over one comparison set."""

    policies: tuple[Policy, ...]
    learners: tuple[LearnerKind, ...]
    tables: dict[str, RankTable]
    wins: dict[str, int]
    medians: dict[tuple[str, str], float]
    releases_used: int

    @property
    def empty(self) -> bool:
        return self.releases_used == 0


def treatment_name(policy: Policy, learner: LearnerKind) -> str:
    return f"{policy.value}+{learner.value}"


def rank_results(results: Sequence[CellResult], policies: Sequence[Policy],
                 learners: Sequence[LearnerKind], *, alpha: float = 0.05,
                 bootstrap_iters: int = 1000, a12_threshold: float = 0.6,
                 seed: int = 0) -> RankOutcome:
    """Rank policy x learner treatments over the releases where every
    compared treatment is applicable.

    Restricting to the intersection keeps every treatment scored on the same
    set of releases. Cells whose test release had a single class are excluded
    from the AUC measure only (the flag is uniform across treatments for a
    given release, so the AUC groups stay paired).
    """
    policies = tuple(Policy(p) for p in policies)
    learners = tuple(LearnerKind(l) for l in learners)
    wanted = {(p, l) for p in policies for l in learners}

    by_key: dict[tuple[str, int], dict[tuple[Policy, LearnerKind], CellResult]] = {}
    for cell in results:
        if (cell.policy, cell.learner) in wanted:
            by_key.setdefault((cell.project, cell.release_index), {})[
                (cell.policy, cell.learner)] = cell

    eligible = sorted(
        key for key, cells in by_key.items()
        if len(cells) == len(wanted) and all(c.applicable
                                             for c in cells.values()))

    tables: dict[str, RankTable] = {}
    medians: dict[tuple[str, str], float] = {}
    if eligible:
        for measure in WIN_TABLE_METRICS:
            groups = []
            for p in policies:
                for l in learners:
                    values = []
                    for key in eligible:
                        cell = by_key[key][(p, l)]
                        if measure == "auc" and (
                                FLAG_NO_POSITIVES in cell.flags or
                                FLAG_NO_NEGATIVES in cell.flags):
                            continue
                        values.append(cell.report.value(measure))
                    if not values:
                        break
                    groups.append(TreatmentGroup(
                        name=treatment_name(p, l), values=tuple(values),
                        polarity=METRIC_POLARITY[measure]))
            if len(groups) != len(wanted):
                log.warning("measure %s skipped: some treatment has no "
                            "usable values", measure)
                continue
            tables[measure] = scott_knott(
                groups, significance=alpha, bootstrap_iters=bootstrap_iters,
                seed=derive_seed(seed, "rank", measure),
                a12_threshold=a12_threshold)
            for g in groups:
                medians[(g.name, measure)] = float(np.median(g.values))

    wins = count_wins(tables) if tables else {}
    return RankOutcome(policies=policies, learners=learners, tables=tables,
                       wins=wins, medians=medians,
                       releases_used=len(eligible))


def win_table_markdown(outcome: RankOutcome) -> str:
    """Markdown win table: one row per treatment, sorted by wins descending,
    rank-1 cells in bold."""
    header = ["Policy", "Classifier", "Wins"]
    for m in WIN_TABLE_METRICS:
        sign = "+" if METRIC_POLARITY[m] == "maximize" else "-"
        header.append(f"{_MEASURE_TITLES[m]}{sign}")
    lines = []
    if outcome.empty or not outcome.tables:
        lines.append("> **Warning:** no releases where all compared policies"
                     " apply; no ranks computed.")
        lines.append("")
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "---|" * len(header))
    ordered = list(outcome.wins)
    if not ordered:
        ordered = [treatment_name(p, l) for p in outcome.policies
                   for l in outcome.learners]
    for name in ordered:
        policy, _, learner = name.partition("+")
        row = [policy, learner, str(outcome.wins.get(name, 0))]
        for m in WIN_TABLE_METRICS:
            median = outcome.medians.get((name, m))
            if median is None:
                row.append("-")
                continue
            text = f"{median:.2f}"
            if m in outcome.tables and outcome.tables[m].ranks[name] == 1:
                text = f"**{text}**"
            row.append(text)
        lines.append("| " + " | ".join(row) + " |")
    lines.append("")
    lines.append(f"Releases compared: {outcome.releases_used}")
    return "\n".join(lines) + "\n"


def write_rank_csv(outcome: RankOutcome, path: Path | str) -> Path:
    path = Path(path)
    header = ["policy", "learner", "wins"]
    for m in WIN_TABLE_METRICS:
        header.extend([f"{m}_median", f"{m}_rank"])
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        ordered = list(outcome.wins) or [
            treatment_name(p, l) for p in outcome.policies
            for l in outcome.learners]
        for name in ordered:
            policy, _, learner = name.partition("+")
            row = [policy, learner, outcome.wins.get(name, 0)]
            for m in WIN_TABLE_METRICS:
                median = outcome.medians.get((name, m))
                rank = outcome.tables[m].ranks[name] if m in outcome.tables \
                    else ""
                row.extend(["" if median is None else f"{median:.6f}", rank])
            writer.writerow(row)
    return path


def comparison_slug(policies: Iterable[Policy]) -> str:
    return "_".join(p.value for p in policies)


def emit_tables(results: Sequence[CellResult], config: ExperimentConfig,
                ) -> list[Path]:
    """Write the results CSV, one win table per configured comparison, and a
    life-cycle figure per project. Returns the written paths."""
    out_dir = Path(config.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise RigError(f"cannot create output directory {out_dir}: {exc}")
    written = [write_results_csv(results, out_dir / "results.csv")]

    for comparison in config.comparisons:
        outcome = rank_results(
            results, comparison, config.learners, alpha=config.alpha,
            bootstrap_iters=config.bootstrap_iters,
            a12_threshold=config.a12_threshold, seed=config.seed)
        slug = comparison_slug(comparison)
        md_path = out_dir / f"wins_{slug}.md"
        md_path.write_text(win_table_markdown(outcome), encoding="utf-8")
        written.append(md_path)
        written.append(write_rank_csv(outcome, out_dir / f"ranks_{slug}.csv"))

    for project in config.projects:
        try:
            records = read_commit_csv(project.csv_path)
        except (OSError, ValueError):
            continue
        if not records:
            continue
        written.append(plot_lifecycle(
            records, out_dir / f"lifecycle_{project.name}.svg",
            month_days=config.policy_params.month_days,
            marker_commit=config.policy_params.early_pool_size,
            title=project.name))
    return written
