"""Training-window policies that select historical commits for a release
under test. No window ever includes a commit at or after the release's first
commit, so training can never see test-time information."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .features import Dataset, engineer_features
from .records import DEFECTIVE, CommitRecord, ReleaseInfo
from .seeds import derive_seed

DAY_SECONDS = 86400


class Policy(str, Enum):
    ALL = "ALL"   # every commit before the release
    M6 = "M6"     # the 6 months before the release
    M3 = "M3"     # the 3 months before the release
    RR = "RR"     # the previous release only
    E = "E"       # balanced sample from the project's earliest commits


@dataclass(frozen=True)
class PolicyParams:
    """Window parameters; a month is a fixed 30-day span."""

    month_days: int = 30
    early_pool_size: int = 150
    early_per_class: int = 25
    early_resample_per_release: bool = True


SKIP_EMPTY_WINDOW = "empty-window"
SKIP_SINGLE_CLASS = "single-class-window"
SKIP_NO_PREVIOUS_RELEASE = "no-previous-release"
SKIP_POOL_MISSING_LABEL = "early-pool-missing-label"


@dataclass
class TrainSelection:
    """Outcome of materializing one policy window for one release."""

    policy: Policy
    records: list[CommitRecord]
    dataset: Optional[Dataset]
    reason: Optional[str] = None
    note: Optional[str] = None

    @property
    def applicable(self) -> bool:
        return self.reason is None


def _skip(policy: Policy, reason: str) -> TrainSelection:
    return TrainSelection(policy=policy, records=[], dataset=None,
                          reason=reason)


def _finish(policy: Policy, window: list[CommitRecord],
            note: Optional[str] = None) -> TrainSelection:
    if not window:
        return _skip(policy, SKIP_EMPTY_WINDOW)
    if len({r.label for r in window}) < 2:
        return _skip(policy, SKIP_SINGLE_CLASS)
    return TrainSelection(policy=policy, records=window,
                          dataset=engineer_features(window), note=note)


def build_train_set(policy: Policy, history: Sequence[CommitRecord],
                    release: ReleaseInfo, seed: int = 0,
                    params: Optional[PolicyParams] = None) -> TrainSelection:
    """Select one policy's training commits for the given release.

    ``history`` is the full labeled, release-assigned commit stream in
    chronological order. Empty and single-class windows come back as
    not-applicable with a reason instead of raising, so the rig can record
    the skip and move on.
    """
    params = params or PolicyParams()
    cut = release.first_commit_time
    if cut is None:
        raise ValueError("release under test has no first_commit_time")

    policy = Policy(policy)
    if policy is Policy.ALL:
        window = [r for r in history if r.timestamp < cut]
    elif policy in (Policy.M6, Policy.M3):
        months = 6 if policy is Policy.M6 else 3
        low = cut - months * params.month_days * DAY_SECONDS
        window = [r for r in history if low <= r.timestamp < cut]
    elif policy is Policy.RR:
        if release.index < 1:
            return _skip(policy, SKIP_NO_PREVIOUS_RELEASE)
        window = [r for r in history
                  if r.release_index == release.index - 1
                  and r.timestamp < cut]
    elif policy is Policy.E:
        return _early_sample(history, cut, release, seed, params)
    else:  # pragma: no cover - enum is exhaustive
        raise ValueError(f"unknown policy {policy!r}")
    return _finish(policy, window)


def _early_sample(history: Sequence[CommitRecord], cut: int,
                  release: ReleaseInfo, seed: int,
                  params: PolicyParams) -> TrainSelection:
    """Balanced draw from the project's earliest commits.

    The pool is the first ``early_pool_size`` commits, restricted to those
    strictly before the release under test. When the pool holds at least
    ``early_per_class`` commits of each label, the draw is exactly balanced;
    when one label is scarcer, all of it is taken and the remainder is filled
    from the other label (noted on the selection); when a label is absent the
    cell is not applicable.
    """
    pool = [r for r in history[:params.early_pool_size] if r.timestamp < cut]
    if not pool:
        return _skip(Policy.E, SKIP_EMPTY_WINDOW)
    defect = [r for r in pool if r.label == DEFECTIVE]
    clean = [r for r in pool if r.label != DEFECTIVE]
    if not defect or not clean:
        return _skip(Policy.E, SKIP_POOL_MISSING_LABEL)

    if params.early_resample_per_release:
        rng = np.random.default_rng(derive_seed(seed, "early", release.index))
    else:
        rng = np.random.default_rng(derive_seed(seed, "early"))

    target = params.early_per_class
    take_d = min(target, len(defect))
    take_c = min(target, len(clean))
    note = None
    if take_d < target:
        take_c = min(len(clean), 2 * target - take_d)
        note = f"early-fallback:{take_d}d/{take_c}c"
    elif take_c < target:
        take_d = min(len(defect), 2 * target - take_c)
        note = f"early-fallback:{take_d}d/{take_c}c"

    chosen = _draw(rng, defect, take_d) + _draw(rng, clean, take_c)
    chosen.sort(key=lambda r: (r.timestamp, r.hash))
    return _finish(Policy.E, chosen, note=note)


def _draw(rng: np.random.Generator, rows: list[CommitRecord],
          count: int) -> list[CommitRecord]:
    picks = rng.choice(len(rows), size=count, replace=False)
    return [rows[i] for i in sorted(int(i) for i in picks)]
