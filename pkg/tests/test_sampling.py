"""Training-window policies: membership, fallbacks, and the no-leakage rule."""

from __future__ import annotations

import pytest

from jitdp.records import CLEAN, DEFECTIVE, CommitRecord, ReleaseInfo
from jitdp.sampling import (Policy, PolicyParams, SKIP_EMPTY_WINDOW,
                            SKIP_NO_PREVIOUS_RELEASE, SKIP_POOL_MISSING_LABEL,
                            SKIP_SINGLE_CLASS, build_train_set)

from synthproject import make_synthetic_project

MONTH = 30 * 86400


def _rec(i, ts, label, release=None):
    return CommitRecord(hash=f"c{i:04d}", author_id="dev", timestamp=ts,
                        ns=1, nd=1, nf=1, la=i % 7, ld=i % 3, lt=10.0,
                        label=label, release_index=release)


def _monthly_history():
    """One commit per month 1..12, alternating labels, releases of 3."""
    records = []
    for m in range(1, 13):
        label = DEFECTIVE if m % 2 else CLEAN
        records.append(_rec(m, m * MONTH, label, release=(m - 1) // 3))
    return records


def _release(history, index):
    times = [r.timestamp for r in history if r.release_index == index]
    return ReleaseInfo(index=index, tag_name=f"r{index}", tag_time=max(times),
                       first_commit_time=min(times),
                       last_commit_time=max(times))


def test_first_release_has_no_history():
    history = _monthly_history()
    release = _release(history, 0)
    selection = build_train_set(Policy.ALL, history, release, seed=0)
    assert not selection.applicable
    assert selection.reason == SKIP_EMPTY_WINDOW


def test_m3_window_covers_three_prior_months():
    history = _monthly_history()
    release = _release(history, 3)  # starts at month 10
    selection = build_train_set(Policy.M3, history, release, seed=0)
    got = sorted(r.timestamp // MONTH for r in selection.records)
    assert got == [7, 8, 9]


def test_m6_window_covers_six_prior_months():
    history = _monthly_history()
    release = _release(history, 3)
    selection = build_train_set(Policy.M6, history, release, seed=0)
    got = sorted(r.timestamp // MONTH for r in selection.records)
    assert got == [4, 5, 6, 7, 8, 9]


def test_window_nesting_all_m6_m3():
    history = _monthly_history()
    release = _release(history, 3)
    all_set = {r.hash for r in
               build_train_set(Policy.ALL, history, release, seed=0).records}
    m6 = {r.hash for r in
          build_train_set(Policy.M6, history, release, seed=0).records}
    m3 = {r.hash for r in
          build_train_set(Policy.M3, history, release, seed=0).records}
    assert m3 <= m6 <= all_set


def test_rr_takes_previous_release_only():
    history = _monthly_history()
    release = _release(history, 2)
    selection = build_train_set(Policy.RR, history, release, seed=0)
    assert {r.release_index for r in selection.records} == {1}
    assert len(selection.records) == 3


def test_rr_without_previous_release_not_applicable():
    history = _monthly_history()
    release = _release(history, 0)
    selection = build_train_set(Policy.RR, history, release, seed=0)
    assert selection.reason == SKIP_NO_PREVIOUS_RELEASE


def test_single_class_window_not_applicable():
    records = [_rec(i, i * MONTH, CLEAN, release=0) for i in range(1, 4)]
    records += [_rec(9, 9 * MONTH, DEFECTIVE, release=1)]
    release = _release(records, 1)
    selection = build_train_set(Policy.ALL, records, release, seed=0)
    assert selection.reason == SKIP_SINGLE_CLASS


def _early_history(n_def=60, n_clean=140):
    """Interleaved labels early, then a clean tail and a final release."""
    records = []
    i = 0
    for _ in range(n_def):
        records.append(_rec(i, 1000 + i, DEFECTIVE, release=0))
        i += 1
        records.append(_rec(i, 1000 + i, CLEAN, release=0))
        i += 1
    while i < n_def * 2 + n_clean:
        records.append(_rec(i, 1000 + i, CLEAN, release=0))
        i += 1
    records.append(_rec(i, 10_000_000, DEFECTIVE, release=1))
    records.append(_rec(i + 1, 10_000_001, CLEAN, release=1))
    return records


def test_early_policy_draws_exact_balance():
    history = _early_history()
    release = _release(history, 1)
    selection = build_train_set(Policy.E, history, release, seed=9)
    labels = [r.label for r in selection.records]
    assert len(labels) == 50
    assert labels.count(DEFECTIVE) == 25
    assert labels.count(CLEAN) == 25
    assert selection.note is None
    pool_hashes = {r.hash for r in history[:150]}
    assert {r.hash for r in selection.records} <= pool_hashes


def test_early_policy_deterministic_per_seed():
    history = _early_history()
    release = _release(history, 1)
    first = build_train_set(Policy.E, history, release, seed=9)
    second = build_train_set(Policy.E, history, release, seed=9)
    other = build_train_set(Policy.E, history, release, seed=10)
    assert [r.hash for r in first.records] == [r.hash for r in second.records]
    assert [r.hash for r in first.records] != [r.hash for r in other.records]


def test_early_policy_forced_scarce_side():
    # Exactly 25 defective in the pool: the defective side is forced.
    records = []
    for i in range(150):
        label = DEFECTIVE if i < 25 else CLEAN
        records.append(_rec(i, 1000 + i, label, release=0))
    records.append(_rec(200, 10_000_000, DEFECTIVE, release=1))
    records.append(_rec(201, 10_000_001, CLEAN, release=1))
    release = _release(records, 1)
    selection = build_train_set(Policy.E, records, release, seed=3)
    chosen_def = [r for r in selection.records if r.label == DEFECTIVE]
    assert len(chosen_def) == 25
    assert {r.hash for r in chosen_def} == {f"c{i:04d}" for i in range(25)}
    assert selection.note is None


def test_early_policy_fallback_fills_from_other_label():
    records = []
    for i in range(150):
        label = DEFECTIVE if i < 10 else CLEAN
        records.append(_rec(i, 1000 + i, label, release=0))
    records.append(_rec(200, 10_000_000, DEFECTIVE, release=1))
    records.append(_rec(201, 10_000_001, CLEAN, release=1))
    release = _release(records, 1)
    selection = build_train_set(Policy.E, records, release, seed=3)
    labels = [r.label for r in selection.records]
    assert labels.count(DEFECTIVE) == 10
    assert labels.count(CLEAN) == 40
    assert selection.note == "early-fallback:10d/40c"


def test_early_policy_missing_label_not_applicable():
    records = [_rec(i, 1000 + i, CLEAN, release=0) for i in range(150)]
    records.append(_rec(200, 10_000_000, DEFECTIVE, release=1))
    records.append(_rec(201, 10_000_001, CLEAN, release=1))
    release = _release(records, 1)
    selection = build_train_set(Policy.E, records, release, seed=3)
    assert selection.reason == SKIP_POOL_MISSING_LABEL


def test_early_pool_truncated_before_release():
    # Release 1 starts inside the first 150 commits; the pool must only use
    # commits before it.
    records = []
    for i in range(100):
        label = DEFECTIVE if i % 2 else CLEAN
        records.append(_rec(i, 1000 + i, label, release=0))
    for i in range(100, 160):
        label = DEFECTIVE if i % 2 else CLEAN
        records.append(_rec(i, 1000 + i, label, release=1))
    release = _release(records, 1)
    selection = build_train_set(Policy.E, records, release, seed=1)
    cut = release.first_commit_time
    assert all(r.timestamp < cut for r in selection.records)


def test_early_resample_toggle():
    # Two releases that both see the full early pool.
    history = _early_history()
    history.append(_rec(900, 20_000_000, DEFECTIVE, release=2))
    history.append(_rec(901, 20_000_001, CLEAN, release=2))
    r1 = _release(history, 1)
    r2 = _release(history, 2)
    params_once = PolicyParams(early_resample_per_release=False)
    once_r1 = build_train_set(Policy.E, history, r1, seed=4, params=params_once)
    once_r2 = build_train_set(Policy.E, history, r2, seed=4, params=params_once)
    assert [r.hash for r in once_r1.records] == \
        [r.hash for r in once_r2.records]
    fresh_r1 = build_train_set(Policy.E, history, r1, seed=4)
    fresh_r2 = build_train_set(Policy.E, history, r2, seed=4)
    assert [r.hash for r in fresh_r1.records] != \
        [r.hash for r in fresh_r2.records]


@pytest.mark.parametrize("policy", list(Policy))
def test_no_leakage_on_synthetic_projects(policy):
    history = make_synthetic_project(seed=77, n_commits=400, n_releases=5)
    for index in range(1, 5):
        release = _release(history, index)
        selection = build_train_set(policy, history, release, seed=5)
        if not selection.applicable:
            continue
        max_train = max(r.timestamp for r in selection.records)
        assert max_train < release.first_commit_time
        test_hashes = {r.hash for r in history if r.release_index == index}
        assert not test_hashes & {r.hash for r in selection.records}


def test_dataset_matches_selected_records():
    history = _monthly_history()
    release = _release(history, 3)
    selection = build_train_set(Policy.ALL, history, release, seed=0)
    assert selection.dataset is not None
    assert len(selection.dataset) == len(selection.records)
    assert selection.dataset.hashes == tuple(r.hash for r in selection.records)
