##! @file synthetic.py
##! @brief Planted-bias dataset generator with analytically known fairness gaps
##!
##! @details
##! Two variants, both with one informative feature x and a text column
##! "group" (A, B, C, ...):
##! - sp: group g draws x ~ N(mu_g, 1) and the label is 1[x + noise > 0].
##!   mu_g is chosen so the classifier 1[x > 0] predicts positive at rate
##!   0.5 + gap/2 for the first group, 0.5 - gap/2 for the last, linearly in
##!   between. Indicator columns is_B, is_C, ... let a linear model shift its
##!   threshold per group.
##! - fdr: every group draws x ~ N(0, 1); the first group is labelled
##!   1[x + noise > 0], the others 1[x + noise > shift]. No group indicators,
##!   so a shared threshold set by the majority over-predicts positives for
##!   the minority and its false discovery rate is high.
##!
##! Everything is drawn from one numpy Generator seeded by SyntheticSpec.seed.

import logging
import string
from dataclasses import dataclass
from statistics import NormalDist
from typing import Dict, List

import numpy as np

from .data import Dataset
from .errors import ConfigError

_LOG = logging.getLogger("fairweigh.synthetic")

VARIANTS = ("sp", "fdr")
_NORMAL = NormalDist()


@dataclass(frozen=True)
class SyntheticSpec:
    ##! @struct SyntheticSpec
    ##! @brief Generator parameters
    n: int = 2000
    groups: int = 2
    variant: str = "sp"
    gap: float = 0.2              ##! sp: planted positive-rate gap between first and last group
    noise: float = 0.5            ##! Std of the label noise added to x
    shift: float = 0.5            ##! fdr: label boundary of the non-first groups
    minority_share: float = 0.3   ##! fdr: share of rows outside the first group
    seed: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"Unknown synthetic variant '{self.variant}', expected one of {VARIANTS}")
        if not 2 <= self.groups <= len(string.ascii_uppercase):
            raise ConfigError(f"groups must be between 2 and 26, got {self.groups}")
        if self.n < 3 * self.groups:
            raise ConfigError(f"n={self.n} is too small for {self.groups} groups")
        if not 0 <= self.gap < 1:
            raise ConfigError(f"gap must lie in [0, 1), got {self.gap}")
        if self.noise < 0:
            raise ConfigError(f"noise must be nonnegative, got {self.noise}")
        if not 0 < self.minority_share < 1:
            raise ConfigError(f"minority_share must lie in (0, 1), got {self.minority_share}")

    @property
    def group_names(self) -> List[str]:
        return list(string.ascii_uppercase[:self.groups])


def planted_rates(spec: SyntheticSpec) -> Dict[str, float]:
    """Positive-prediction rate of 1[x > 0] per group."""
    names = spec.group_names
    if spec.variant == "fdr":
        return {g: 0.5 for g in names}
    return {g: float(r) for g, r in zip(names, np.linspace(0.5 + spec.gap / 2, 0.5 - spec.gap / 2, spec.groups))}


def planted_sp_gap(spec: SyntheticSpec) -> float:
    rates = planted_rates(spec)
    names = spec.group_names
    return rates[names[0]] - rates[names[-1]]


def planted_fdr(spec: SyntheticSpec, points: int = 4001) -> Dict[str, float]:
    """
    False discovery rate of 1[x > 0] per group, by numerical integration.

    Pr(y = 0 | x > 0) with y = 1[x + noise > b] is
    int_0^inf phi(x - mu) Phi((b - x) / noise) dx / Pr(x > 0).
    """
    xs = np.linspace(0.0, 10.0, points)
    cdf = np.vectorize(_NORMAL.cdf)
    out = {}
    for g, mu, boundary in _group_params(spec):
        density = np.exp(-0.5 * (xs - mu) ** 2) / np.sqrt(2 * np.pi)
        if spec.noise > 0:
            wrong = cdf((boundary - xs) / spec.noise)
        else:
            wrong = (xs <= boundary).astype(float)
        f = density * wrong
        integral = (xs[1] - xs[0]) * (f.sum() - 0.5 * (f[0] + f[-1]))
        out[g] = float(integral / (1.0 - _NORMAL.cdf(-mu)))
    return out


def _group_params(spec: SyntheticSpec):
    rates = planted_rates(spec)
    for k, g in enumerate(spec.group_names):
        mu = _NORMAL.inv_cdf(rates[g]) if spec.variant == "sp" else 0.0
        boundary = spec.shift if (spec.variant == "fdr" and k > 0) else 0.0
        yield g, mu, boundary


def _group_sizes(spec: SyntheticSpec) -> List[int]:
    if spec.variant == "fdr":
        first = int(round(spec.n * (1 - spec.minority_share)))
        rest = spec.n - first
        others = [rest // (spec.groups - 1)] * (spec.groups - 1)
        others[0] += rest - sum(others)
        return [first] + others
    sizes = [spec.n // spec.groups] * spec.groups
    sizes[0] += spec.n - sum(sizes)
    return sizes


def generate(spec: SyntheticSpec) -> Dataset:
    """
    Draw a planted-bias dataset.

    Returns:
        Dataset with features x (plus is_B, is_C, ... for the sp variant),
        raw text column "group" and labels in {0, 1}
    """
    rng = np.random.default_rng(spec.seed)
    names = spec.group_names
    sizes = _group_sizes(spec)
    group = np.repeat(np.arange(spec.groups), sizes)
    rng.shuffle(group)

    mus = np.zeros(spec.groups)
    bounds = np.zeros(spec.groups)
    for k, (_, mu, boundary) in enumerate(_group_params(spec)):
        mus[k] = mu
        bounds[k] = boundary

    x = rng.normal(size=spec.n) + mus[group]
    y = (x + spec.noise * rng.normal(size=spec.n) > bounds[group]).astype(np.int64)

    columns = [x]
    feature_names = ["x"]
    if spec.variant == "sp":
        for k in range(1, spec.groups):
            columns.append((group == k).astype(float))
            feature_names.append(f"is_{names[k]}")
    X = np.column_stack(columns)
    dataset = Dataset(X=X, y=y, feature_names=tuple(feature_names), label_name="label",
                      raw={"group": tuple(names[k] for k in group)})
    _LOG.info("Generated %s data: N=%d, groups=%s, planted rates=%s",
              spec.variant, spec.n, dict(zip(names, sizes)), planted_rates(spec))
    return dataset


def write_csv(spec: SyntheticSpec, path) -> Dataset:
    """Generate and write to CSV; returns the dataset."""
    dataset = generate(spec)
    dataset.to_csv(path)
    _LOG.info("Synthetic dataset written to %s", path)
    return dataset
