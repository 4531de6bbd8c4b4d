"""Density-based seeding of cluster centers (subtractive clustering).

Every data point is a candidate center. Its density is a sum of Gaussian
kernels over all points,

    D_i = sum_j exp(-||x_i - x_j||^2 / (r_a/2)^2),

so D_i in [1, n] (the self term contributes exactly 1). The highest-density
point becomes a center, after which densities are suppressed around it,

    D_i <- D_i - D_c * exp(-||x_i - x_c||^2 / (r_b/2)^2),

and selection repeats until a stop rule fires. The suppression radius r_b
defaults to 1.5 * r_a. Revised densities may go negative; they are kept as
is, since clamping would change later argmax picks.

Selection is fully deterministic: argmax ties break toward the lowest point
index and previously chosen rows are excluded from later picks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.spatial.distance import cdist

from .core import ContractViolation, Dataset, DegenerateInput


@dataclass(frozen=True)
class FixedK:
    """Stop after exactly k centers."""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ContractViolation("fixed_k needs k >= 1")


@dataclass(frozen=True)
class DensityRatio:
    """Stop before accepting a center whose density falls below
    epsilon times the first peak's density."""

    epsilon: float = 0.15

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ContractViolation("density_ratio needs 0 < epsilon < 1")


StopRule = Union[FixedK, DensityRatio]


@dataclass(frozen=True)
class SubtractiveConfig:
    """Radii, stop rule, and safety cap for center selection.

    The r_a default of 0.5 assumes min-max normalized data (unit hypercube);
    r_b defaults to 1.5 * r_a.
    """

    r_a: float = 0.5
    r_b: float | None = None
    stop_rule: StopRule = field(default_factory=DensityRatio)
    max_centers: int = 64

    def __post_init__(self):
        if self.r_a <= 0:
            raise ContractViolation("r_a must be positive")
        if self.r_b is not None and self.r_b <= 0:
            raise ContractViolation("r_b must be positive")
        if self.max_centers < 1:
            raise ContractViolation("max_centers must be >= 1")

    @property
    def effective_r_b(self) -> float:
        return self.r_b if self.r_b is not None else 1.5 * self.r_a


@dataclass(frozen=True)
class SeedingResult:
    """Selected centers (rows of the input dataset) in selection order."""

    centers: np.ndarray
    k: int
    first_peak_density: float
    densities_at_selection: np.ndarray
    indices: np.ndarray

    def __post_init__(self):
        dens = np.asarray(self.densities_at_selection, dtype=np.float64)
        if np.any(np.diff(dens) > 0):
            raise ContractViolation("selection densities must be non-increasing")


def density_initial(dataset: Dataset, r_a: float, return_eval_count: bool = False):
    """Initial density of every point: N^2 kernel evaluations, independent of
    dimensionality in term count.

    With ``return_eval_count`` the exact number of kernel terms evaluated is
    returned alongside the densities.
    """
    if r_a <= 0:
        raise ContractViolation("r_a must be positive")
    x = dataset.points
    sq = cdist(x, x, "sqeuclidean")
    kernels = np.exp(-sq / (r_a / 2.0) ** 2)
    densities = kernels.sum(axis=1)
    if return_eval_count:
        return densities, kernels.size
    return densities


def density_revise(
    densities: np.ndarray,
    center_index: int,
    center_density: float,
    dataset: Dataset,
    r_b: float,
) -> np.ndarray:
    """Suppress density around a freshly chosen center.

    The revised density at the center itself is exactly zero. Values may go
    negative and are not clamped.
    """
    if r_b <= 0:
        raise ContractViolation("r_b must be positive")
    if not 0 <= center_index < dataset.n:
        raise ContractViolation(f"center_index {center_index} out of range")
    if densities[center_index] != center_density:
        raise ContractViolation("center_density must equal densities[center_index]")
    diff = dataset.points - dataset.points[center_index]
    sq = np.einsum("ij,ij->i", diff, diff)
    return densities - center_density * np.exp(-sq / (r_b / 2.0) ** 2)


def select_centers(dataset: Dataset, config: SubtractiveConfig) -> SeedingResult:
    """Greedy density-peak selection: argmax, record, suppress, repeat.

    Under ``FixedK(k)`` exactly k centers come back (k > N is a degenerate
    input). Under ``DensityRatio(eps)`` selection stops before accepting a
    candidate whose pre-selection density is below eps times the first
    peak's density. ``max_centers`` caps either rule.
    """
    rule = config.stop_rule
    if isinstance(rule, FixedK) and rule.k > dataset.n:
        raise DegenerateInput(
            f"cannot select {rule.k} centers from {dataset.n} points"
        )
    densities = density_initial(dataset, config.r_a)
    if not np.any(densities > 0):
        raise AssertionError("densities must be positive initially (self term)")

    target = min(rule.k, config.max_centers) if isinstance(rule, FixedK) else config.max_centers
    target = min(target, dataset.n)
    chosen: list[int] = []
    selected_density: list[float] = []
    first_peak = None
    available = np.ones(dataset.n, dtype=bool)

    while len(chosen) < target:
        masked = np.where(available, densities, -np.inf)
        candidate = int(np.argmax(masked))
        cand_density = float(densities[candidate])
        if first_peak is None:
            first_peak = cand_density
        elif isinstance(rule, DensityRatio) and cand_density < rule.epsilon * first_peak:
            break
        chosen.append(candidate)
        selected_density.append(cand_density)
        available[candidate] = False
        densities = density_revise(
            densities, candidate, cand_density, dataset, config.effective_r_b
        )

    indices = np.array(chosen, dtype=np.int64)
    return SeedingResult(
        centers=dataset.points[indices].copy(),
        k=len(chosen),
        first_peak_density=float(first_peak),
        densities_at_selection=np.array(selected_density, dtype=np.float64),
        indices=indices,
    )
