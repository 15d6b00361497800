"""
Grouping functions: map a dataset to named, possibly overlapping groups of
example indices.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, Mapping, Optional, Tuple

import numpy as np

from .data import Dataset, as_index_set
from .errors import (
    ConfigError,
    EmptyGroup,
    FewerThanTwoGroups,
    GroupingError,
    UnknownAttribute,
    UnknownGroup,
)

_LOG = logging.getLogger("fairweigh.grouping")

GROUP_KINDS = ("by_attribute", "by_attribute_intersection", "custom_predicate")
INTERSECTION_SEP = "|"

# predicate_id -> fn(dataset) -> {group_id: iterable of indices}
_PREDICATES: Dict[str, Callable[[Dataset], Mapping[str, Iterable[int]]]] = {}


def register_grouping(name: str, fn: Callable[[Dataset], Mapping[str, Iterable[int]]]) -> None:
    """Register a programmatic grouping function under a registry key."""
    _PREDICATES[name] = fn
    _LOG.debug("Registered grouping predicate '%s'", name)


@dataclass(frozen=True, eq=False)
class GroupAssignment:
    ##! @struct GroupAssignment
    ##! @brief group-id -> sorted index array; overlap allowed, cover not required
    groups: Mapping[str, np.ndarray]

    def __post_init__(self):
        groups = {str(k): as_index_set(v) for k, v in dict(self.groups).items()}
        if len(groups) < 2:
            raise FewerThanTwoGroups(f"Need at least 2 groups, got {sorted(groups)}")
        for gid, idx in groups.items():
            if len(idx) == 0:
                raise EmptyGroup(f"Group '{gid}' is empty")
        object.__setattr__(self, "groups", groups)

    def __getitem__(self, group_id: str) -> np.ndarray:
        try:
            return self.groups[group_id]
        except KeyError:
            raise UnknownGroup(group_id)

    def __contains__(self, group_id: str) -> bool:
        return group_id in self.groups

    def ids(self) -> Tuple[str, ...]:
        return tuple(self.groups.keys())

    def restrict(self, group_id: str, subset: Optional[np.ndarray]) -> np.ndarray:
        """Members of a group that also lie in subset (all members when subset is None)."""
        idx = self[group_id]
        if subset is None:
            return idx
        return np.intersect1d(idx, subset, assume_unique=True)

    def pairs(self) -> Tuple[Tuple[str, str], ...]:
        """Every unordered pair of group ids in insertion order."""
        ids = self.ids()
        return tuple((ids[a], ids[b]) for a in range(len(ids)) for b in range(a + 1, len(ids)))


@dataclass(frozen=True)
class GroupingSpec:
    ##! @struct GroupingSpec
    ##! @brief Declarative description of a grouping function
    kind: str = "by_attribute"
    attribute_names: Tuple[str, ...] = ()
    predicate_id: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "attribute_names", tuple(self.attribute_names))
        if self.kind not in GROUP_KINDS:
            raise ConfigError(f"Unknown grouping kind '{self.kind}'. Available: {', '.join(GROUP_KINDS)}")
        if self.kind == "by_attribute" and len(self.attribute_names) != 1:
            raise ConfigError("by_attribute grouping needs exactly one attribute")
        if self.kind == "by_attribute_intersection" and len(self.attribute_names) < 2:
            raise ConfigError("Intersection grouping needs at least two attributes")
        if self.kind == "custom_predicate" and not self.predicate_id:
            raise ConfigError("custom_predicate grouping needs a predicate_id")


def _attribute_column(dataset: Dataset, name: str) -> Tuple[str, ...]:
    if name in dataset.raw:
        return dataset.raw[name]
    if name in dataset.feature_names:
        j = dataset.feature_names.index(name)
        return tuple(repr(float(v)) for v in dataset.X[:, j])
    raise UnknownAttribute(name)


def assign_groups(dataset: Dataset, spec: GroupingSpec) -> GroupAssignment:
    """
    Evaluate a grouping spec on a dataset.

    Group ids are attribute values; intersections join the values with "|".
    Groups appear in order of first occurrence in the data.
    """
    if spec.kind == "custom_predicate":
        if spec.predicate_id not in _PREDICATES:
            raise ConfigError(f"No grouping predicate registered as '{spec.predicate_id}'")
        raw_groups = _PREDICATES[spec.predicate_id](dataset)
        groups = {}
        for gid, members in raw_groups.items():
            idx = as_index_set(members)
            if len(idx) and (idx[0] < 0 or idx[-1] >= dataset.n):
                raise GroupingError(f"Group '{gid}' has indices outside 0..{dataset.n - 1}")
            groups[str(gid)] = idx
        assignment = GroupAssignment(groups)
    else:
        columns = [_attribute_column(dataset, a) for a in spec.attribute_names]
        buckets: Dict[str, list] = {}
        for i in range(dataset.n):
            key = INTERSECTION_SEP.join(col[i] for col in columns)
            buckets.setdefault(key, []).append(i)
        if len(buckets) < 2:
            raise FewerThanTwoGroups(
                f"Attributes {list(spec.attribute_names)} take fewer than two distinct values"
            )
        assignment = GroupAssignment(buckets)

    _LOG.info("Grouping %s%s -> %s", spec.kind, list(spec.attribute_names),
              {gid: len(idx) for gid, idx in assignment.groups.items()})
    return assignment
