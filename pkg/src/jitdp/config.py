"""Experiment configuration: flat key=value files plus project metadata."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .learners import LearnerKind, LearnerParams
from .sampling import Policy, PolicyParams


class ConfigError(ValueError):
    """Bad experiment configuration."""


DEFAULT_SMOTE_POLICIES = (Policy.ALL, Policy.M6, Policy.M3, Policy.RR)


@dataclass(frozen=True)
class ProjectInput:
    csv_path: Path
    meta_path: Optional[Path]
    name: str


@dataclass
class ExperimentConfig:
    projects: list[ProjectInput]
    policies: list[Policy] = field(default_factory=lambda: list(Policy))
    learners: list[LearnerKind] = field(default_factory=lambda: list(LearnerKind))
    seed: int = 0
    out_dir: Path = Path("out")
    cfs: bool = True
    # SMOTE applies to these policies only: the early balanced sampler
    # already guarantees equal classes, so it is excluded by default.
    smote_policies: tuple[Policy, ...] = DEFAULT_SMOTE_POLICIES
    smote_k: int = 5
    comparisons: list[tuple[Policy, ...]] = field(default_factory=list)
    alpha: float = 0.05
    bootstrap_iters: int = 1000
    a12_threshold: float = 0.6
    curation: bool = True
    skip_degenerate_releases: bool = False
    learner_params: LearnerParams = field(default_factory=LearnerParams)
    policy_params: PolicyParams = field(default_factory=PolicyParams)
    debug_dir: Optional[Path] = None

    def __post_init__(self) -> None:
        if not self.policies:
            raise ConfigError("at least one policy is required")
        if not self.learners:
            raise ConfigError("at least one learner is required")
        if not self.comparisons:
            self.comparisons = [tuple(self.policies)]


_BOOL_WORDS = {"on": True, "true": True, "yes": True, "1": True,
               "off": False, "false": False, "no": False, "0": False}


def _parse_bool(key: str, value: str) -> bool:
    try:
        return _BOOL_WORDS[value.strip().lower()]
    except KeyError:
        raise ConfigError(f"{key}: expected on/off, got {value!r}") from None


def _parse_int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {value!r}") from None


def _parse_float(key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {value!r}") from None


def _parse_policies(key: str, value: str) -> list[Policy]:
    out = []
    for token in value.split(","):
        token = token.strip().upper()
        if not token:
            continue
        try:
            out.append(Policy(token))
        except ValueError:
            raise ConfigError(f"{key}: unknown policy {token!r}") from None
    if not out:
        raise ConfigError(f"{key}: no policies given")
    return out


def _parse_learners(key: str, value: str) -> list[LearnerKind]:
    out = []
    for token in value.split(","):
        token = token.strip().upper()
        if not token:
            continue
        try:
            out.append(LearnerKind(token))
        except ValueError:
            raise ConfigError(f"{key}: unknown learner {token!r}") from None
    if not out:
        raise ConfigError(f"{key}: no learners given")
    return out


def _parse_project(value: str, base: Path) -> ProjectInput:
    parts = [p.strip() for p in value.split(",")]
    if not parts or not parts[0]:
        raise ConfigError("project: missing CSV path")
    csv_path = (base / parts[0]).resolve() if not Path(parts[0]).is_absolute() \
        else Path(parts[0])
    meta_path = None
    if len(parts) > 1 and parts[1]:
        meta_path = (base / parts[1]).resolve() \
            if not Path(parts[1]).is_absolute() else Path(parts[1])
    return ProjectInput(csv_path=csv_path, meta_path=meta_path,
                        name=csv_path.stem)


def load_config(path: Path | str) -> ExperimentConfig:
    """Parse a flat key=value experiment config.

    Lines starting with '#' are comments. 'project' and 'compare' may repeat;
    every other key takes its last occurrence. Unknown keys are errors.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    base = path.parent

    values: dict[str, str] = {}
    projects: list[ProjectInput] = []
    comparisons: list[tuple[Policy, ...]] = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if key == "project":
            projects.append(_parse_project(value, base))
        elif key == "compare":
            comparisons.append(tuple(_parse_policies(key, value)))
        else:
            values[key] = value

    known = {
        "policies", "learners", "seed", "out_dir", "cfs", "smote_policies",
        "smote_k", "alpha", "bootstrap_iters", "a12_threshold", "curation",
        "skip_degenerate_releases", "early_pool", "early_per_class",
        "early_resample_per_release", "month_days", "knn_k", "rf_trees",
        "dt_max_depth", "svm_c", "lr_rate", "lr_iters", "debug_dir",
    }
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    policies = _parse_policies("policies", values["policies"]) \
        if "policies" in values else list(Policy)
    learners = _parse_learners("learners", values["learners"]) \
        if "learners" in values else list(LearnerKind)

    smote_policies = tuple(_parse_policies("smote_policies",
                                           values["smote_policies"])) \
        if "smote_policies" in values else DEFAULT_SMOTE_POLICIES

    dt_depth_raw = values.get("dt_max_depth", "none").strip().lower()
    dt_max_depth = None if dt_depth_raw in ("", "none") \
        else _parse_int("dt_max_depth", dt_depth_raw)

    learner_params = LearnerParams(
        knn_k=_parse_int("knn_k", values["knn_k"]) if "knn_k" in values else 5,
        rf_trees=_parse_int("rf_trees", values["rf_trees"])
        if "rf_trees" in values else 100,
        dt_max_depth=dt_max_depth,
        svm_c=_parse_float("svm_c", values["svm_c"])
        if "svm_c" in values else 1.0,
        lr_rate=_parse_float("lr_rate", values["lr_rate"])
        if "lr_rate" in values else 0.1,
        lr_iters=_parse_int("lr_iters", values["lr_iters"])
        if "lr_iters" in values else 1000,
    )
    policy_params = PolicyParams(
        month_days=_parse_int("month_days", values["month_days"])
        if "month_days" in values else 30,
        early_pool_size=_parse_int("early_pool", values["early_pool"])
        if "early_pool" in values else 150,
        early_per_class=_parse_int("early_per_class",
                                   values["early_per_class"])
        if "early_per_class" in values else 25,
        early_resample_per_release=_parse_bool(
            "early_resample_per_release",
            values["early_resample_per_release"])
        if "early_resample_per_release" in values else True,
    )

    out_dir_raw = values.get("out_dir", "out")
    out_dir = (base / out_dir_raw) if not Path(out_dir_raw).is_absolute() \
        else Path(out_dir_raw)
    debug_dir = None
    if values.get("debug_dir"):
        raw = values["debug_dir"]
        debug_dir = (base / raw) if not Path(raw).is_absolute() else Path(raw)

    iters = _parse_int("bootstrap_iters", values["bootstrap_iters"]) \
        if "bootstrap_iters" in values else 1000
    if iters < 1:
        raise ConfigError("bootstrap_iters must be >= 1")
    if not projects:
        raise ConfigError("at least one project is required")

    return ExperimentConfig(
        projects=projects,
        policies=policies,
        learners=learners,
        seed=_parse_int("seed", values["seed"]) if "seed" in values else 0,
        out_dir=out_dir,
        cfs=_parse_bool("cfs", values["cfs"]) if "cfs" in values else True,
        smote_policies=smote_policies,
        smote_k=_parse_int("smote_k", values["smote_k"])
        if "smote_k" in values else 5,
        comparisons=comparisons,
        alpha=_parse_float("alpha", values["alpha"])
        if "alpha" in values else 0.05,
        bootstrap_iters=iters,
        a12_threshold=_parse_float("a12_threshold", values["a12_threshold"])
        if "a12_threshold" in values else 0.6,
        curation=_parse_bool("curation", values["curation"])
        if "curation" in values else True,
        skip_degenerate_releases=_parse_bool(
            "skip_degenerate_releases", values["skip_degenerate_releases"])
        if "skip_degenerate_releases" in values else False,
        learner_params=learner_params,
        policy_params=policy_params,
        debug_dir=debug_dir,
    )


def parse_meta(path: Path | str) -> tuple[int, bool]:
    """Read a flat key:value project metadata file.

    Returns (star_count, has_license). Stars default to 0 and the license to
    absent when the keys are missing, so an empty file fails curation rather
    than silently passing it.
    """
    stars = 0
    has_license = False
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition(":")
        key = key.strip().lower()
        value = value.strip()
        if key == "stars":
            try:
                stars = int(value)
            except ValueError:
                raise ConfigError(f"meta {path}: bad stars value {value!r}") \
                    from None
        elif key == "license":
            has_license = value.lower() not in ("", "none", "no", "false")
    return stars, has_license
