"""Shared fixtures: scripted git repositories with fixed dates and authors."""

from __future__ import annotations

import subprocess
from pathlib import Path

import pytest

BASE_TS = 1_600_000_000
AUTHOR = ("Dev One", "dev@example.com")


def run_git(repo: Path, *args: str, env: dict | None = None) -> str:
    proc = subprocess.run(["git", "-C", str(repo), *args],
                          capture_output=True, text=True, env=env)
    assert proc.returncode == 0, f"git {args}: {proc.stderr}"
    return proc.stdout


def init_repo(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    subprocess.run(["git", "init", "-q", "-b", "main", str(path)], check=True)
    run_git(path, "config", "user.name", AUTHOR[0])
    run_git(path, "config", "user.email", AUTHOR[1])
    run_git(path, "config", "commit.gpgsign", "false")
    return path


def commit_files(repo: Path, files: dict[str, str | None], message: str,
                 ts: int, author: tuple[str, str] = AUTHOR,
                 tag: str | None = None) -> str:
    """Write/delete the given files and commit them at a fixed timestamp."""
    import os

    for rel, content in files.items():
        target = repo / rel
        if content is None:
            target.unlink()
        else:
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(content, encoding="utf-8")
    run_git(repo, "add", "-A")
    env = dict(os.environ,
               GIT_AUTHOR_NAME=author[0], GIT_AUTHOR_EMAIL=author[1],
               GIT_COMMITTER_NAME=author[0], GIT_COMMITTER_EMAIL=author[1],
               GIT_AUTHOR_DATE=f"{ts} +0000", GIT_COMMITTER_DATE=f"{ts} +0000")
    run_git(repo, "commit", "-q", "--allow-empty", "-m", message, env=env)
    if tag:
        run_git(repo, "tag", tag, env=env)
    return run_git(repo, "rev-parse", "HEAD").strip()


ALPHA_V1 = (
    "def parse(text):\n"
    "    return text.split(',')\n"
    "\n"
    "def helper():\n"
    "    return 1\n"
)
ALPHA_V2 = (
    "def parse(text):\n"
    "    return [p.strip() for p in text.split(',')]\n"
    "\n"
    "def helper():\n"
    "    return 1\n"
)
BETA_V1 = (
    "def total(xs):\n"
    "    s = 0\n"
    "    for x in xs:\n"
    "        s += x\n"
    "    return s - 1\n"
)
BETA_V2 = BETA_V1 + (
    "\n"
    "def scale(xs, factor):\n"
    "    return [x * factor + 1 for x in xs]\n"
)
BETA_V3 = BETA_V2.replace("    return s - 1\n", "    return s\n")
BETA_V4 = BETA_V3.replace("    return [x * factor + 1 for x in xs]\n",
                          "    return [x * factor for x in xs]\n")
GAMMA_V1 = "def gamma_one():\n    return 'one'\n"
GAMMA_V2 = "def gamma_one():\n    return \"one\"\n"
GAMMA_V3 = GAMMA_V2 + "# gamma helpers\n"


@pytest.fixture(scope="session")
def szz_repo(tmp_path_factory) -> dict:
    """Twelve commits, three fixes, three known bug-inducing commits.

    The fixes are commits 5, 8 and 9; their deleted lines blame back to
    commits 1, 2 and 4 respectively. Tags v0.1/v0.2/v0.3 sit at commits
    4, 8 and 12, giving three releases of four commits each.
    """
    repo = init_repo(tmp_path_factory.mktemp("fixture") / "szz")
    ts = lambda i: BASE_TS + i * 1000
    shas = {}
    shas[1] = commit_files(repo, {"alpha.py": ALPHA_V1}, "add parser core", ts(1))
    shas[2] = commit_files(repo, {"beta.py": BETA_V1}, "add beta module", ts(2))
    shas[3] = commit_files(repo, {"docs/readme.md": "project notes\n"},
                           "add readme", ts(3))
    shas[4] = commit_files(repo, {"beta.py": BETA_V2},
                           "extend beta with scaling", ts(4), tag="v0.1")
    shas[5] = commit_files(repo, {"alpha.py": ALPHA_V2},
                           "fix crash in parser", ts(5))
    shas[6] = commit_files(repo, {"gamma.py": GAMMA_V1},
                           "add gamma utilities", ts(6))
    shas[7] = commit_files(repo, {"gamma.py": GAMMA_V2},
                           "refactor gamma naming", ts(7))
    shas[8] = commit_files(repo, {"beta.py": BETA_V3},
                           "fixes overflow bug in totals", ts(8), tag="v0.2")
    shas[9] = commit_files(repo, {"beta.py": BETA_V4},
                           "patch wrong scaling constant", ts(9))
    shas[10] = commit_files(repo, {"delta.txt": "notes\n"},
                            "add delta notes", ts(10))
    shas[11] = commit_files(repo, {"gamma.py": GAMMA_V3},
                            "add gamma docs note", ts(11))
    shas[12] = commit_files(repo, {"docs/readme.md": "project notes\nmore\n"},
                            "update README", ts(12), tag="v0.3")
    return {"path": repo, "shas": shas,
            "inducing": {shas[1], shas[2], shas[4]},
            "fixes": {shas[5], shas[8], shas[9]}}


@pytest.fixture(scope="session")
def three_commit_repo(tmp_path_factory) -> dict:
    """Commit 3 fixes a line introduced by commit 1; commit 2 is unrelated."""
    repo = init_repo(tmp_path_factory.mktemp("fixture") / "three")
    c1 = commit_files(repo, {"alpha.py": ALPHA_V1}, "add parser", BASE_TS + 1000)
    c2 = commit_files(repo, {"notes.txt": "hello\n"}, "add notes", BASE_TS + 2000)
    c3 = commit_files(repo, {"alpha.py": ALPHA_V2}, "fix crash in parser",
                      BASE_TS + 3000)
    return {"path": repo, "shas": [c1, c2, c3]}


@pytest.fixture(scope="session")
def spread_repo(tmp_path_factory) -> Path:
    """One commit touching a/x.c and b/y.c with equal modified lines."""
    repo = init_repo(tmp_path_factory.mktemp("fixture") / "spread")
    commit_files(repo, {"a/x.c": "int a;\nint b;\nint c;\n",
                        "b/y.c": "int d;\nint e;\nint f;\n"},
                 "add modules", BASE_TS + 1000)
    return repo


@pytest.fixture(scope="session")
def merge_repo(tmp_path_factory) -> Path:
    """Main line plus a merged side branch (one merge commit)."""
    import os

    repo = init_repo(tmp_path_factory.mktemp("fixture") / "merge")
    commit_files(repo, {"base.txt": "base\n"}, "add base", BASE_TS + 1000)
    run_git(repo, "checkout", "-q", "-b", "side")
    commit_files(repo, {"side.txt": "side\n"}, "add side", BASE_TS + 2000)
    run_git(repo, "checkout", "-q", "main")
    commit_files(repo, {"main.txt": "main\n"}, "add main work", BASE_TS + 3000)
    env = dict(os.environ,
               GIT_AUTHOR_NAME=AUTHOR[0], GIT_AUTHOR_EMAIL=AUTHOR[1],
               GIT_COMMITTER_NAME=AUTHOR[0], GIT_COMMITTER_EMAIL=AUTHOR[1],
               GIT_AUTHOR_DATE=f"{BASE_TS + 4000} +0000",
               GIT_COMMITTER_DATE=f"{BASE_TS + 4000} +0000")
    run_git(repo, "merge", "-q", "--no-ff", "-m", "merge side", "side", env=env)
    return repo


@pytest.fixture(scope="session")
def rename_repo(tmp_path_factory) -> Path:
    """A file renamed and modified in its second commit."""
    repo = init_repo(tmp_path_factory.mktemp("fixture") / "rename")
    commit_files(repo, {"old.txt": "one\ntwo\nthree\n"}, "add file",
                 BASE_TS + 1000)
    run_git(repo, "mv", "old.txt", "new.txt")
    commit_files(repo, {"new.txt": "one\ntwo\nthree\nfour\n"},
                 "rename and extend", BASE_TS + 2000)
    return repo
