"""Seeded synthetic commit histories for rig-level and acceptance tests.

Projects mimic the long-running pattern the miner produces: defect density
starts high and decays over the life cycle, while the feature-label
relationship stays stationary so every training window sees the same signal.
"""

from __future__ import annotations

import math

import numpy as np

from jitdp.records import CLEAN, DEFECTIVE, CommitRecord

START_TS = 1_577_836_800  # 2020-01-01


def make_synthetic_project(seed: int, n_commits: int = 1000,
                           n_releases: int = 10, density_floor: float = 0.05,
                           density_scale: float = 0.5,
                           density_decay: float = 200.0) -> list[CommitRecord]:
    rng = np.random.default_rng(seed)
    gaps = rng.integers(20_000, 90_000, size=n_commits)
    times = START_TS + np.cumsum(gaps)

    idx = np.arange(n_commits)
    p_defective = density_floor + density_scale * np.exp(-idx / density_decay)
    defective = rng.random(n_commits) < p_defective

    block = n_commits // n_releases
    records: list[CommitRecord] = []
    for i in range(n_commits):
        is_def = bool(defective[i])
        nf = 1 + int(rng.poisson(3.0 if is_def else 1.5))
        nd = max(1, int(math.ceil(nf * 0.7)))
        ns = max(1, int(math.ceil(nd * 0.6)))
        max_h = math.log2(nf) if nf > 1 else 0.0
        entropy = float(max_h * rng.beta(3.0, 1.5)) if is_def \
            else float(max_h * rng.beta(1.5, 3.0))
        la = int(rng.lognormal(4.0 if is_def else 3.0, 0.8)) + 1
        ld = int(rng.lognormal(2.5 if is_def else 2.0, 0.8))
        exp = int(rng.poisson(50))
        records.append(CommitRecord(
            hash=f"s{seed}-{i:05d}",
            author_id=f"dev{int(rng.integers(0, 8))}@example.com",
            timestamp=int(times[i]),
            ns=ns, nd=nd, nf=nf,
            entropy=entropy,
            la=la, ld=ld,
            lt=float(rng.lognormal(5.0, 1.0)),
            fix=bool(rng.random() < (0.45 if is_def else 0.2)),
            ndev=1 + int(rng.poisson(2.0 if is_def else 1.0)),
            age=float(rng.exponential(30.0)),
            nuc=int(rng.poisson(5.0 if is_def else 3.0)),
            exp=exp,
            rexp=exp * 0.5,
            sexp=int(rng.binomial(exp, 0.3)),
            label=DEFECTIVE if is_def else CLEAN,
            release_index=min(i // block, n_releases - 1),
        ))
    return records
