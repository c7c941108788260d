"""Commit-level record types and the delimited format they travel in."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

DEFECTIVE = "defective"
CLEAN = "clean"

COMMIT_CSV_HEADER = [
    "hash", "author", "timestamp", "ns", "nd", "nf", "entropy", "la", "ld",
    "lt", "fix", "ndev", "age", "nuc", "exp", "rexp", "sexp", "label",
    "release",
]


@dataclass
class CommitRecord:
    """One mined commit with its 14 raw change features.

    Mutated in place while the mining pipeline fills in fix flags, labels and
    release indices; treated as immutable afterwards.
    """

    hash: str
    author_id: str
    timestamp: int
    ns: int = 0
    nd: int = 0
    nf: int = 0
    entropy: float = 0.0
    la: int = 0
    ld: int = 0
    lt: float = 0.0
    fix: bool = False
    ndev: int = 0
    age: float = 0.0
    nuc: int = 0
    exp: int = 0
    rexp: float = 0.0
    sexp: int = 0
    label: str = CLEAN
    release_index: Optional[int] = None


@dataclass
class ReleaseInfo:
    """One tagged release window.

    A commit belongs to release i when previous_tag_time < timestamp <=
    tag_time. first/last_commit_time are filled once commits are assigned.
    """

    index: int
    tag_name: str
    tag_time: int
    first_commit_time: Optional[int] = None
    last_commit_time: Optional[int] = None


def write_commit_csv(records: Iterable[CommitRecord], path: Path | str) -> Path:
    """Write records as UTF-8 CSV with LF line endings and 6-decimal floats."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COMMIT_CSV_HEADER)
        for r in records:
            writer.writerow([
                r.hash,
                r.author_id,
                r.timestamp,
                r.ns,
                r.nd,
                r.nf,
                f"{r.entropy:.6f}",
                r.la,
                r.ld,
                f"{r.lt:.6f}",
                int(r.fix),
                r.ndev,
                f"{r.age:.6f}",
                r.nuc,
                r.exp,
                f"{r.rexp:.6f}",
                r.sexp,
                r.label,
                "" if r.release_index is None else r.release_index,
            ])
    return path


def read_commit_csv(path: Path | str) -> list[CommitRecord]:
    records: list[CommitRecord] = []
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(COMMIT_CSV_HEADER) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"commit CSV missing columns: {sorted(missing)}")
        for row in reader:
            records.append(CommitRecord(
                hash=row["hash"],
                author_id=row["author"],
                timestamp=int(row["timestamp"]),
                ns=int(row["ns"]),
                nd=int(row["nd"]),
                nf=int(row["nf"]),
                entropy=float(row["entropy"]),
                la=int(row["la"]),
                ld=int(row["ld"]),
                lt=float(row["lt"]),
                fix=row["fix"] == "1",
                ndev=int(row["ndev"]),
                age=float(row["age"]),
                nuc=int(row["nuc"]),
                exp=int(row["exp"]),
                rexp=float(row["rexp"]),
                sexp=int(row["sexp"]),
                label=row["label"],
                release_index=int(row["release"]) if row["release"] != "" else None,
            ))
    return records
