"""
Utility functions for fairweigh: run configuration, JSON I/O and formatting.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from .data import SplitSpec
from .errors import ConfigError
from .grouping import GROUP_KINDS, GroupingSpec
from .metrics import BUILTIN_METRICS
from .tuning import TunerConfig

_LOG = logging.getLogger("fairweigh.utils")

DEFAULT_CONFIG: Dict[str, Any] = {
    "data.positive_label": "1",
    "data.feature_columns": None,
    "split.train": 0.6,
    "split.validation": 0.2,
    "split.test": 0.2,
    "grouping.kind": "by_attribute",
    "grouping.attributes": [],
    "learner.kind": "logreg",
    "tuner.tau": 1e-4,
    "tuner.delta": 1e-3,
    "tuner.lambda_cap": 2.0 ** 20,
    "tuner.warm_start": None,
    "tuner.max_linear_steps": 10000,
    "tuner.stall_steps": 200,
    "grid.step": 0.01,
    "grid.max": 1.0,
    "grid.symmetric": False,
    "output.dir": "results",
    "output.dump_weights": False,
    "seed": 0,
    "jobs": 1,
    "constraints": [],
}

_KNOWN_PREFIXES = ("data.", "split.", "grouping.", "learner.", "tuner.", "grid.", "output.", "metric.")
_KNOWN_KEYS = {"name", "description", "seed", "jobs", "constraints"}


@dataclass(frozen=True)
class ConstraintEntry:
    ##! One configured constraint; pairs_all expands to every group pair once groups are known
    metric: str
    epsilon: float
    g1: Optional[str] = None
    g2: Optional[str] = None
    pairs_all: bool = False


@dataclass
class RunConfig:
    data_path: str
    label_column: str
    positive_label: str = "1"
    feature_columns: Optional[Tuple[str, ...]] = None
    split: SplitSpec = field(default_factory=SplitSpec)
    grouping: GroupingSpec = field(default_factory=GroupingSpec)
    constraints: List[ConstraintEntry] = field(default_factory=list)
    learner_kind: str = "logreg"
    learner_params: Dict[str, Any] = field(default_factory=dict)
    tuner: TunerConfig = field(default_factory=TunerConfig)
    grid_step: float = 0.01
    grid_max: float = 1.0
    grid_symmetric: bool = False
    output_dir: str = "results"
    dump_weights: bool = False
    seed: int = 0
    jobs: int = 1
    aec_costs: Optional[Tuple[float, float]] = None


def load_config(config_path: str) -> Dict[str, Any]:
    """
    Load configuration from JSON file.

    Args:
        config_path: Path to config file

    Returns:
        Dict with configuration
    """
    path = Path(config_path)
    if not path.exists():
        raise FileNotFoundError(f"Config file not found: {config_path}")

    try:
        cfg = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"Invalid JSON in {config_path}: {e}")
    if not isinstance(cfg, dict):
        raise ConfigError(f"{config_path} must contain a JSON object")
    _LOG.debug("Loaded config from %s", config_path)
    return cfg


def merge_configs(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """
    Merge two configuration dictionaries.

    Args:
        base: Base configuration
        override: Values to override (None values are skipped)

    Returns:
        Merged configuration
    """
    merged = base.copy()
    merged.update({k: v for k, v in override.items() if v is not None})
    return merged


def _number(cfg: Dict[str, Any], key: str, kind=float):
    value = cfg[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    if kind is int:
        if int(value) != value:
            raise ConfigError(f"{key} must be an integer, got {value!r}")
        return int(value)
    return float(value)


def _constraint_entries(raw: Any) -> List[ConstraintEntry]:
    if not isinstance(raw, list):
        raise ConfigError("constraints must be a list of objects")
    entries = []
    for k, item in enumerate(raw):
        if not isinstance(item, dict):
            raise ConfigError(f"constraints[{k}] must be an object")
        missing = [name for name in ("metric", "epsilon") if name not in item]
        if missing:
            raise ConfigError(f"constraints[{k}] is missing {missing}")
        metric = str(item["metric"]).upper()
        if metric not in BUILTIN_METRICS:
            raise ConfigError(f"constraints[{k}]: unknown metric '{item['metric']}'")
        eps = item["epsilon"]
        if isinstance(eps, bool) or not isinstance(eps, (int, float)) or eps < 0:
            raise ConfigError(f"constraints[{k}]: epsilon must be a nonnegative number")
        if item.get("pairs") == "all":
            entries.append(ConstraintEntry(metric=metric, epsilon=float(eps), pairs_all=True))
            continue
        if "g1" not in item or "g2" not in item:
            raise ConfigError(f"constraints[{k}] needs g1 and g2, or \"pairs\": \"all\"")
        entries.append(ConstraintEntry(metric=metric, epsilon=float(eps),
                                       g1=str(item["g1"]), g2=str(item["g2"])))
    return entries


def validate_config(cfg: Dict[str, Any], require_constraints: bool = False) -> RunConfig:
    """
    Validate a merged configuration and turn it into a RunConfig.

    Args:
        cfg: Configuration (already merged over DEFAULT_CONFIG)
        require_constraints: Fail when no constraint is configured

    Returns:
        RunConfig

    Raises:
        ConfigError: If configuration is invalid
    """
    required_fields = ["data.path", "data.label_column"]
    missing = [f for f in required_fields if not cfg.get(f)]
    if missing:
        raise ConfigError(f"Missing required fields: {missing}")

    unknown = [k for k in cfg if k not in _KNOWN_KEYS and not k.startswith(_KNOWN_PREFIXES)]
    if unknown:
        _LOG.warning("Ignoring unknown config keys: %s", unknown)

    seed = _number(cfg, "seed", int)
    jobs = _number(cfg, "jobs", int)
    if jobs < 1:
        raise ConfigError("jobs must be at least 1")

    features = cfg.get("data.feature_columns")
    if features is not None and not (isinstance(features, list) and features):
        raise ConfigError("data.feature_columns must be a nonempty list or null")

    split = SplitSpec(
        train_fraction=_number(cfg, "split.train"),
        validation_fraction=_number(cfg, "split.validation"),
        test_fraction=_number(cfg, "split.test"),
        seed=seed,
    )

    kind = cfg["grouping.kind"]
    if kind not in GROUP_KINDS:
        raise ConfigError(f"grouping.kind must be one of {GROUP_KINDS}, got '{kind}'")
    attributes = cfg.get("grouping.attributes") or []
    if isinstance(attributes, str):
        attributes = [attributes]
    grouping = GroupingSpec(kind=kind, attribute_names=tuple(attributes),
                            predicate_id=cfg.get("grouping.predicate"))

    constraints = _constraint_entries(cfg["constraints"])
    if require_constraints and not constraints:
        raise ConfigError("At least one entry in 'constraints' is required for this command")

    aec_costs = None
    if "metric.c_fp" in cfg or "metric.c_fn" in cfg:
        aec_costs = (float(cfg.get("metric.c_fp", 1.0)), float(cfg.get("metric.c_fn", 1.0)))
    if any(c.metric == "AEC" for c in constraints) and aec_costs is None:
        raise ConfigError("AEC constraints need metric.c_fp and metric.c_fn")

    warm = cfg.get("tuner.warm_start")
    if warm is not None and not isinstance(warm, bool):
        raise ConfigError("tuner.warm_start must be true, false or null")
    tuner = TunerConfig(tau=_number(cfg, "tuner.tau"), delta=_number(cfg, "tuner.delta"),
                        lambda_cap=_number(cfg, "tuner.lambda_cap"), seed=seed, warm_start=warm,
                        max_linear_steps=_number(cfg, "tuner.max_linear_steps", int),
                        stall_steps=_number(cfg, "tuner.stall_steps", int))

    learner_params = {k[len("learner."):]: v for k, v in cfg.items()
                      if k.startswith("learner.") and k != "learner.kind"}

    run = RunConfig(
        data_path=str(cfg["data.path"]),
        label_column=str(cfg["data.label_column"]),
        positive_label=str(cfg["data.positive_label"]),
        feature_columns=tuple(features) if features else None,
        split=split,
        grouping=grouping,
        constraints=constraints,
        learner_kind=str(cfg["learner.kind"]),
        learner_params=learner_params,
        tuner=tuner,
        grid_step=_number(cfg, "grid.step"),
        grid_max=_number(cfg, "grid.max"),
        grid_symmetric=bool(cfg["grid.symmetric"]),
        output_dir=str(cfg["output.dir"]),
        dump_weights=bool(cfg["output.dump_weights"]),
        seed=seed,
        jobs=jobs,
        aec_costs=aec_costs,
    )
    _LOG.debug("Configuration validated successfully")
    return run


def list_available_learners() -> List[str]:
    """Learner plug-ins found under learners/ (nested or flat layout)."""
    learners_dir = Path(__file__).parent.parent / "learners"
    if not learners_dir.exists():
        return []
    found = [f.stem for f in learners_dir.glob("*.py") if not f.stem.startswith("_")]
    for sub in learners_dir.iterdir():
        if sub.is_dir() and not sub.name.startswith("_") and (sub / f"{sub.name}.py").exists():
            found.append(sub.name)
    return sorted(found)


def format_duration(seconds: float) -> str:
    """Format duration into human-readable string."""
    if seconds < 60:
        return f"{seconds:.1f}s"
    minutes = int(seconds // 60)
    seconds = seconds % 60
    if minutes < 60:
        return f"{minutes}m {seconds:.0f}s"
    return f"{minutes // 60}h {minutes % 60}m"


def format_bytes(num_bytes: float) -> str:
    """Format bytes into human-readable string."""
    for unit in ["B", "KB", "MB", "GB", "TB"]:
        if num_bytes < 1024.0:
            return f"{num_bytes:.1f} {unit}"
        num_bytes /= 1024.0
    return f"{num_bytes:.1f} PB"


def save_json(data: Dict[str, Any], filepath: str) -> None:
    """
    Save dictionary as JSON file.

    Args:
        data: Data to save
        filepath: Output file path
    """
    Path(filepath).parent.mkdir(parents=True, exist_ok=True)
    with open(filepath, "w") as f:
        json.dump(data, f, indent=2)
    _LOG.debug("Saved JSON to %s", filepath)


def load_json(filepath: str) -> Dict[str, Any]:
    """
    Load JSON file.

    Args:
        filepath: Path to JSON file

    Returns:
        Loaded data
    """
    with open(filepath, "r") as f:
        return json.load(f)
