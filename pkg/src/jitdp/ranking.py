"""Treatment ranking: recursive bi-clustering with a bootstrap significance
guard and the Vargha-Delaney effect size, plus win counting across measures."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .metrics import MAXIMIZE, MINIMIZE
from .seeds import derive_seed


@dataclass(frozen=True)
class TreatmentGroup:
    """One policy-and-learner treatment with its per-release scores."""

    name: str
    values: tuple[float, ...]
    polarity: str = MAXIMIZE

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.values:
            raise ValueError(f"treatment {self.name!r} has no values")
        if not np.isfinite(self.values).all():
            raise ValueError(f"treatment {self.name!r} has non-finite values")
        if self.polarity not in (MAXIMIZE, MINIMIZE):
            raise ValueError(f"unknown polarity {self.polarity!r}")


@dataclass(frozen=True)
class RankTable:
    """Treatment name -> rank, 1 being best; ranks are contiguous from 1."""

    ranks: Mapping[str, int]

    def at_rank(self, rank: int) -> tuple[str, ...]:
        return tuple(sorted(n for n, r in self.ranks.items() if r == rank))


def a12(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Vargha-Delaney effect size: P(x > y) + 0.5 * P(x == y)."""
    xs = np.asarray(xs, dtype=float)
    ys_sorted = np.sort(np.asarray(ys, dtype=float))
    if len(xs) == 0 or len(ys_sorted) == 0:
        raise ValueError("a12 requires two nonempty samples")
    below = np.searchsorted(ys_sorted, xs, side="left").sum()
    upto = np.searchsorted(ys_sorted, xs, side="right").sum()
    ties = upto - below
    return float((below + 0.5 * ties) / (len(xs) * len(ys_sorted)))


def bootstrap_significance(xs: Sequence[float], ys: Sequence[float],
                           iters: int = 1000, seed: int = 0,
                           alpha: float = 0.05) -> bool:
    """Two-sided bootstrap test for a difference in means.

    Resamples the pooled values under the no-difference null; significant
    when the observed |mean difference| strictly exceeds the (1 - alpha)
    quantile of the null distribution. Identical samples and single-element
    samples are never significant.
    """
    if iters < 1:
        raise ValueError("bootstrap iterations must be >= 1")
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(xs) == 0 or len(ys) == 0:
        raise ValueError("bootstrap requires two nonempty samples")
    observed = abs(float(xs.mean()) - float(ys.mean()))
    pool = np.concatenate([xs, ys])
    rng = np.random.default_rng(seed)
    xi = rng.integers(0, len(pool), size=(iters, len(xs)))
    yi = rng.integers(0, len(pool), size=(iters, len(ys)))
    null = np.abs(pool[xi].mean(axis=1) - pool[yi].mean(axis=1))
    return bool(observed > np.quantile(null, 1.0 - alpha))


def _split_energy(counts: list[int], totals: list[float], split: int) -> float:
    """E(delta) of dividing the group list before index `split`:
    ms/ls*(mean_m - mean_l)^2 + ns/ls*(mean_n - mean_l)^2 over pooled values."""
    ms = sum(counts[:split])
    ns = sum(counts[split:])
    ls = ms + ns
    mean_m = sum(totals[:split]) / ms
    mean_n = sum(totals[split:]) / ns
    mean_l = sum(totals) / ls
    return (ms / ls) * abs(mean_m - mean_l) ** 2 + \
           (ns / ls) * abs(mean_n - mean_l) ** 2


def scott_knott(groups: Sequence[TreatmentGroup], significance: float = 0.05,
                bootstrap_iters: int = 1000, seed: int = 0,
                a12_threshold: float = 0.6) -> RankTable:
    """Cluster treatments into statistically distinct ranks (1 = best).

    Groups are ordered best-first by median (minimize polarities are negated
    internally, so higher oriented values are better; median ties order by
    name). Each sorted sublist is divided at the split maximizing E(delta)
    over the pooled values, but a division is kept only when the two halves
    differ significantly under ``bootstrap_significance`` AND the effect is
    non-trivial (a12(better half, worse half) >= a12_threshold). Otherwise
    the whole sublist shares one rank.

    Reproducibility contract, relied on by the exhaustive oracle: the
    bootstrap for the sublist spanning sorted positions [lo, hi) is seeded
    with derive_seed(seed, lo, hi), and the halves are pooled in sorted-group
    order; ties in E(delta) resolve to the earliest split point.
    """
    if not groups:
        raise ValueError("at least one treatment group required")
    if bootstrap_iters < 1:
        raise ValueError("bootstrap iterations must be >= 1")
    polarities = {g.polarity for g in groups}
    if len(polarities) > 1:
        raise ValueError("all groups in one ranking must share a polarity")
    names = [g.name for g in groups]
    if len(set(names)) != len(names):
        raise ValueError("group names must be unique")

    sign = -1.0 if polarities.pop() == MINIMIZE else 1.0
    oriented = [(g.name, sign * np.asarray(g.values, dtype=float))
                for g in groups]
    oriented.sort(key=lambda item: (-float(np.median(item[1])), item[0]))

    counts = [len(v) for _, v in oriented]
    totals = [float(v.sum()) for _, v in oriented]

    ranks: dict[str, int] = {}

    def assign(lo: int, hi: int, rank: int) -> int:
        if hi - lo == 1:
            ranks[oriented[lo][0]] = rank
            return rank + 1
        best_split = lo + 1
        best_energy = -1.0
        for split in range(lo + 1, hi):
            energy = _split_energy(counts[lo:hi], totals[lo:hi], split - lo)
            if energy > best_energy + 1e-15:
                best_energy = energy
                best_split = split
        top = np.concatenate([oriented[i][1] for i in range(lo, best_split)])
        bottom = np.concatenate([oriented[i][1] for i in range(best_split, hi)])
        significant = bootstrap_significance(
            top, bottom, iters=bootstrap_iters,
            seed=derive_seed(seed, lo, hi), alpha=significance)
        substantial = a12(top, bottom) >= a12_threshold
        if significant and substantial:
            rank = assign(lo, best_split, rank)
            return assign(best_split, hi, rank)
        for i in range(lo, hi):
            ranks[oriented[i][0]] = rank
        return rank + 1

    assign(0, len(oriented), 1)
    return RankTable(ranks=ranks)


def count_wins(rank_tables: Mapping[str, RankTable]) -> dict[str, int]:
    """Number of measures in which each treatment holds rank 1, sorted by
    wins descending then by treatment name."""
    if not rank_tables:
        raise ValueError("at least one rank table required")
    tables = list(rank_tables.values())
    treatments = set(tables[0].ranks)
    for table in tables[1:]:
        if set(table.ranks) != treatments:
            raise ValueError("rank tables cover different treatment sets")
    wins = {t: sum(1 for table in tables if table.ranks[t] == 1)
            for t in treatments}
    return dict(sorted(wins.items(), key=lambda kv: (-kv[1], kv[0])))
