"""Git repository mining: per-commit change features, fix-keyword labeling
with blame tracing, release extraction, and project curation filters.

All git access goes through the system git binary. Within one repository the
extraction is sequential because the history features (developer experience,
file age, prior changes) fold over the commit stream in chronological order;
distinct repositories can be mined in parallel.
"""

from __future__ import annotations

import bisect
import logging
import math
import re
import subprocess
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .records import CLEAN, DEFECTIVE, CommitRecord, ReleaseInfo

log = logging.getLogger(__name__)

DEFAULT_FIX_KEYWORDS = frozenset({
    "bug", "fix", "fixes", "fixed", "defect", "patch",
    "error", "crash", "fail", "wrong",
})

SECONDS_PER_DAY = 86400.0
SECONDS_PER_YEAR = 365.25 * SECONDS_PER_DAY
MONTH_SECONDS = 30 * 86400

# Curation thresholds for "serious" projects.
MIN_STARS = 1000
MIN_DEFECT_RATIO = 0.01
MIN_RELEASES = 2
MIN_LIFESPAN_MONTHS = 12.0
MIN_CLASS_COMMITS = 5

# Files at the repository root share one synthetic bucket so the directory
# count can never drop below the subsystem count.
ROOT_COMPONENT = "root"

_RECORD_SEP = "\x1e"
_FIELD_SEP = "\x1f"
_HUNK = re.compile(r"^@@ -(\d+)(?:,(\d+))? ")
_BLAME_SHA = re.compile(r"^([0-9a-f]{40}) \d+ \d+")
_BRACE_RENAME = re.compile(r"\{([^{}]*) => ([^{}]*)\}")


class MiningError(RuntimeError):
    """Raised when a repository cannot be read or parsed."""


def _git(repo_path: Path | str, *args: str) -> str:
    try:
        # quotepath off keeps non-ASCII paths readable so blame targets match.
        proc = subprocess.run(
            ["git", "-C", str(repo_path), "-c", "core.quotepath=false", *args],
            capture_output=True, text=True, encoding="utf-8", errors="replace",
        )
    except OSError as exc:
        raise MiningError(f"cannot invoke git: {exc}") from exc
    if proc.returncode != 0:
        raise MiningError(
            f"git {args[0]} failed in {repo_path}: {proc.stderr.strip()}")
    return proc.stdout


def _split_path(path: str) -> tuple[str, str]:
    """Return (subsystem, directory): first path component and parent path."""
    if "/" in path:
        parts = path.split("/")
        return parts[0], "/".join(parts[:-1])
    return ROOT_COMPONENT, ROOT_COMPONENT


def _squash_slashes(path: str) -> str:
    return re.sub("//+", "/", path).strip("/")


def _resolve_rename(path: str) -> tuple[Optional[str], str]:
    """Split a numstat path into (old, new); old is None without a rename."""
    if "=>" not in path:
        return None, path
    if "{" in path:
        old = _BRACE_RENAME.sub(lambda m: m.group(1), path)
        new = _BRACE_RENAME.sub(lambda m: m.group(2), path)
        return _squash_slashes(old), _squash_slashes(new)
    old, _, new = path.partition(" => ")
    return old.strip(), new.strip()


def _entropy(line_counts: Sequence[int]) -> float:
    """Shannon entropy (base 2) of the modified-lines distribution."""
    total = sum(line_counts)
    if total <= 0:
        return 0.0
    h = 0.0
    for c in line_counts:
        if c > 0:
            p = c / total
            h -= p * math.log2(p)
    # Guard float noise against the [0, log2(nf)] bound.
    return min(max(h, 0.0), math.log2(max(len(line_counts), 2)))


@dataclass
class _FileState:
    size: int = 0
    last_change: Optional[int] = None
    authors: set[str] = field(default_factory=set)
    changes: set[str] = field(default_factory=set)


def mine_commits(repo_path: Path | str,
                 cutoff: Optional[int] = None) -> list[CommitRecord]:
    """Extract one record per non-merge commit, oldest first.

    Features come from a single chronological pass so that the experience and
    history attributes only ever see information available at commit time.
    Merge commits are excluded (no self-authored diff); commits with zero file
    changes are skipped with a warning. ``cutoff`` drops commits younger than
    the given unix timestamp.
    """
    repo_path = Path(repo_path)
    if not repo_path.exists():
        raise MiningError(f"repository path does not exist: {repo_path}")

    fmt = f"{_RECORD_SEP}%H{_FIELD_SEP}%ae{_FIELD_SEP}%an{_FIELD_SEP}%ct"
    out = _git(repo_path, "log", "--no-merges", "--topo-order", "--reverse",
               "--numstat", "--find-renames", f"--format={fmt}")
    merge_count = int(_git(repo_path, "rev-list", "--count", "--merges",
                           "HEAD").strip() or 0)
    if merge_count:
        log.info("%s: excluded %d merge commits", repo_path.name, merge_count)

    files: dict[str, _FileState] = {}
    author_times: dict[str, list[int]] = {}
    author_subsystems: dict[tuple[str, str], set[str]] = {}

    records: list[CommitRecord] = []
    for chunk in out.split(_RECORD_SEP)[1:]:
        header, _, body = chunk.partition("\n")
        sha, email, name, when = header.split(_FIELD_SEP)
        ts = int(when)
        if cutoff is not None and ts > cutoff:
            continue
        author = email.strip() or name.strip()

        touched: list[tuple[str, int, int]] = []  # (new_path, added, deleted)
        renames: dict[str, str] = {}
        for line in body.splitlines():
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) < 3:
                continue
            added = 0 if parts[0] == "-" else int(parts[0])
            deleted = 0 if parts[1] == "-" else int(parts[1])
            raw_path = "\t".join(parts[2:]).strip().strip('"')
            old, new = _resolve_rename(raw_path)
            if old is not None:
                renames[new] = old
            touched.append((new, added, deleted))

        if not touched:
            log.warning("%s: commit %s has no file changes, skipped",
                        repo_path.name, sha[:12])
            continue

        # Carry per-file state across renames before reading it.
        for new, old in renames.items():
            if old in files and new not in files:
                files[new] = files.pop(old)

        subsystems: set[str] = set()
        directories: set[str] = set()
        sizes: list[int] = []
        ages: list[float] = []
        prior_authors: set[str] = set()
        prior_changes: set[str] = set()
        line_counts: list[int] = []
        la = ld = 0
        for path, added, deleted in touched:
            sub, dirpath = _split_path(path)
            subsystems.add(sub)
            directories.add(dirpath)
            la += added
            ld += deleted
            line_counts.append(added + deleted)
            state = files.get(path)
            if state is not None:
                sizes.append(state.size)
                prior_authors |= state.authors
                prior_changes |= state.changes
                if state.last_change is not None:
                    ages.append(max(0, ts - state.last_change) / SECONDS_PER_DAY)
            else:
                sizes.append(0)

        nf = len(touched)
        prior_times = author_times.get(author, [])
        rexp = sum(1.0 / (1.0 + max(0, ts - t) / SECONDS_PER_YEAR)
                   for t in prior_times)
        sexp_set: set[str] = set()
        for sub in subsystems:
            sexp_set |= author_subsystems.get((author, sub), set())

        records.append(CommitRecord(
            hash=sha,
            author_id=author,
            timestamp=ts,
            ns=len(subsystems),
            nd=len(directories),
            nf=nf,
            entropy=_entropy(line_counts) if nf > 1 else 0.0,
            la=la,
            ld=ld,
            lt=sum(sizes) / nf,
            ndev=len(prior_authors),
            age=sum(ages) / len(ages) if ages else 0.0,
            nuc=len(prior_changes),
            exp=len(prior_times),
            rexp=rexp,
            sexp=len(sexp_set),
        ))

        # Fold this commit into the running history state.
        for path, added, deleted in touched:
            state = files.setdefault(path, _FileState())
            state.size = max(0, state.size + added - deleted)
            state.last_change = ts
            state.authors.add(author)
            state.changes.add(sha)
        author_times.setdefault(author, []).append(ts)
        for sub in subsystems:
            author_subsystems.setdefault((author, sub), set()).add(sha)

    return records


def label_commits(repo_path: Path | str,
                  commits: list[CommitRecord],
                  keywords: Iterable[str] = DEFAULT_FIX_KEYWORDS,
                  ) -> list[CommitRecord]:
    """Set fix flags from message keywords and mark blamed origins defective.

    A commit is a fix when its message contains any keyword as a whole word,
    case-insensitively. Each line a fix deletes or modifies is traced with
    ``git blame`` on the fix's parent; the commits that last introduced those
    lines become defective, everything else stays clean. Traces landing
    outside the mined history are dropped with a debug log.
    """
    if not commits:
        return commits
    words = sorted(set(keywords))
    if not words:
        raise ValueError("at least one fix keyword is required")
    pattern = re.compile(
        r"\b(?:" + "|".join(re.escape(w) for w in words) + r")\b",
        re.IGNORECASE)

    messages = _commit_messages(repo_path)
    known = {c.hash for c in commits}
    for c in commits:
        c.fix = bool(pattern.search(messages.get(c.hash, "")))

    defective: set[str] = set()
    for c in commits:
        if not c.fix:
            continue
        for origin in _blame_origins(repo_path, c.hash):
            if origin in known:
                defective.add(origin)
            else:
                log.debug("blame origin %s outside mined history, dropped",
                          origin[:12])
    for c in commits:
        c.label = DEFECTIVE if c.hash in defective else CLEAN
    return commits


def _commit_messages(repo_path: Path | str) -> dict[str, str]:
    out = _git(repo_path, "log", "--no-merges",
               f"--format={_RECORD_SEP}%H{_FIELD_SEP}%B")
    messages: dict[str, str] = {}
    for chunk in out.split(_RECORD_SEP)[1:]:
        sha, _, body = chunk.partition(_FIELD_SEP)
        messages[sha.strip()] = body
    return messages


def _blame_origins(repo_path: Path | str, fix_sha: str) -> set[str]:
    """Commits that last touched the lines a fix commit deletes or modifies."""
    probe = subprocess.run(
        ["git", "-C", str(repo_path), "rev-parse", "--verify", "--quiet",
         f"{fix_sha}^"],
        capture_output=True, text=True)
    if probe.returncode != 0:
        log.debug("fix %s has no parent, trace skipped", fix_sha[:12])
        return set()

    diff = _git(repo_path, "diff", "--find-renames", "--unified=0",
                f"{fix_sha}^", fix_sha)
    spans: dict[str, list[tuple[int, int]]] = {}
    current: Optional[str] = None
    for line in diff.splitlines():
        if line.startswith("--- "):
            target = line[4:].strip().strip('"')
            if target == "/dev/null":
                current = None
            else:
                current = target[2:] if target.startswith("a/") else target
        elif line.startswith("@@"):
            m = _HUNK.match(line)
            if m is None or current is None:
                continue
            start = int(m.group(1))
            count = 1 if m.group(2) is None else int(m.group(2))
            if count > 0:
                spans.setdefault(current, []).append((start, start + count - 1))

    origins: set[str] = set()
    for path, ranges in spans.items():
        for lo, hi in ranges:
            try:
                out = _git(repo_path, "blame", "--porcelain",
                           "-L", f"{lo},{hi}", f"{fix_sha}^", "--", path)
            except MiningError as exc:
                log.warning("blame trace dropped for %s at %s: %s",
                            path, fix_sha[:12], exc)
                continue
            for line in out.splitlines():
                m = _BLAME_SHA.match(line)
                if m:
                    origins.add(m.group(1))
    return origins


def extract_releases(repo_path: Path | str) -> list[ReleaseInfo]:
    """List the repository tags as time-ordered release boundaries."""
    out = _git(repo_path, "for-each-ref", "refs/tags",
               f"--format=%(refname:short){_FIELD_SEP}%(creatordate:unix)")
    tags: list[tuple[int, str]] = []
    for line in out.splitlines():
        if not line.strip():
            continue
        name, _, when = line.partition(_FIELD_SEP)
        tags.append((int(when), name))
    tags.sort()
    return [ReleaseInfo(index=i, tag_name=name, tag_time=when)
            for i, (when, name) in enumerate(tags)]


def assign_releases(commits: list[CommitRecord],
                    releases: list[ReleaseInfo]) -> list[CommitRecord]:
    """Assign each commit to the release interval its timestamp falls in.

    A commit at or before a tag's date and after the previous tag's date gets
    that tag's 0-based index; commits after the last tag carry no index.
    """
    boundaries = [r.tag_time for r in releases]
    first: dict[int, int] = {}
    last: dict[int, int] = {}
    for c in commits:
        idx = bisect.bisect_left(boundaries, c.timestamp)
        c.release_index = idx if idx < len(releases) else None
        if c.release_index is not None:
            i = c.release_index
            first[i] = min(first.get(i, c.timestamp), c.timestamp)
            last[i] = max(last.get(i, c.timestamp), c.timestamp)
    for r in releases:
        r.first_commit_time = first.get(r.index)
        r.last_commit_time = last.get(r.index)
    return commits


@dataclass
class ProjectSummary:
    commit_count: int
    defective_count: int
    clean_count: int
    release_count: int
    lifespan_months: float
    has_license: bool
    star_count: int

    @property
    def defective_ratio(self) -> float:
        return self.defective_count / self.commit_count if self.commit_count else 0.0


@dataclass(frozen=True)
class CurationResult:
    accepted: bool
    reasons: tuple[str, ...]


def summarize_project(records: Sequence[CommitRecord],
                      releases: Sequence[ReleaseInfo],
                      star_count: int,
                      has_license: bool) -> ProjectSummary:
    defective = sum(1 for r in records if r.label == DEFECTIVE)
    if records:
        span = max(r.timestamp for r in records) - min(r.timestamp for r in records)
    else:
        span = 0
    return ProjectSummary(
        commit_count=len(records),
        defective_count=defective,
        clean_count=len(records) - defective,
        release_count=len(releases),
        lifespan_months=span / MONTH_SECONDS,
        has_license=has_license,
        star_count=star_count,
    )


def filter_project(summary: ProjectSummary) -> CurationResult:
    """Apply the curation filters; every violated reason is reported."""
    reasons: list[str] = []
    if summary.star_count < MIN_STARS:
        reasons.append(f"stars<{MIN_STARS}")
    if summary.defective_ratio < MIN_DEFECT_RATIO:
        reasons.append("defective-ratio<1%")
    if summary.release_count < MIN_RELEASES:
        reasons.append(f"releases<{MIN_RELEASES}")
    if summary.lifespan_months < MIN_LIFESPAN_MONTHS:
        reasons.append(f"lifespan<{int(MIN_LIFESPAN_MONTHS)}mo")
    if not summary.has_license:
        reasons.append("no-license")
    if summary.defective_count < MIN_CLASS_COMMITS:
        reasons.append(f"defective<{MIN_CLASS_COMMITS}")
    if summary.clean_count < MIN_CLASS_COMMITS:
        reasons.append(f"clean<{MIN_CLASS_COMMITS}")
    return CurationResult(accepted=not reasons, reasons=tuple(reasons))
