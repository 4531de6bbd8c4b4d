"""The six benchmark clustering algorithms behind one uniform interface.

Every ``run_*`` function returns a :class:`ClusteringOutcome` whose
``sicd_trace`` is the per-iteration best cost (non-increasing for the swarm
family, and per-iteration cost for Lloyd's algorithm).

Frozen baseline defaults (version 1) so ablations vary only the documented
dimensions:

    algorithm    seeding       boundary    inertia                  gbest refine
    kmeans       random rows   -           -                        -
    pso          random        none        linear 0.9 -> 0.4        no
    kmeans_pso   k-means       none        linear 0.9 -> 0.4        no
    sub_pso      subtractive   none        linear 0.9 -> 0.4        no
    brapso       random        restricted  exponential (normalized) yes
    sc_br_apso   subtractive   restricted  exponential (normalized) yes

"gbest refine" is the adaptive family's per-iteration nearest-assignment /
center-recalculation pass: the swarm's best centroid set is refined by one
Lloyd step and written back only when that strictly improves fitness (the
refined point also becomes the owning particle's pbest, preserving the
gbest = min pbest bookkeeping).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.spatial.distance import cdist

from .core import (
    Assignment,
    ContractViolation,
    Dataset,
    DegenerateInput,
    Rng,
)
from .metrics import sicd
from .subtractive import SubtractiveConfig, select_centers
from .swarm import (
    PsoConfig,
    decode,
    encode,
    exponential_normalized,
    init_swarm,
    linear,
    step,
)

DEFAULTS_VERSION = 1

PLAIN_PSO = PsoConfig(inertia=linear(0.9, 0.4), boundary="none")
ADAPTIVE_PSO = PsoConfig(inertia=exponential_normalized(0.9), boundary="restricted")

ALGORITHM_IDS = ("kmeans", "pso", "kmeans_pso", "sub_pso", "brapso", "sc_br_apso")


@dataclass(frozen=True)
class ClusteringOutcome:
    centroids: np.ndarray
    assignment: Assignment
    sicd: float
    iterations_used: int
    sicd_trace: np.ndarray
    seed: int


def assign_nearest(dataset: Dataset, centroids: np.ndarray) -> Assignment:
    """Map every point to its closest centroid; ties go to the lower index."""
    c = np.asarray(centroids, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] < 1:
        raise ContractViolation("centroids must be a nonempty k x d matrix")
    dists = cdist(dataset.points, c, "sqeuclidean")
    return Assignment(np.argmin(dists, axis=1), k=c.shape[0])


def recompute_centroids(dataset: Dataset, assignment: Assignment) -> np.ndarray:
    """Arithmetic mean of each cluster's members.

    An empty cluster is repaired by relocating its centroid to the point
    farthest from that point's own nearest centroid (ties to the lower point
    index); the point is then treated as reassigned so later repairs pick
    different points.
    """
    k = assignment.k
    x = dataset.points
    cluster_of = assignment.cluster_of.copy()
    counts = np.bincount(cluster_of, minlength=k).astype(np.float64)
    centroids = np.zeros((k, dataset.d))
    np.add.at(centroids, cluster_of, x)
    nonempty = counts > 0
    centroids[nonempty] /= counts[nonempty, None]

    for i in np.flatnonzero(~nonempty):
        diffs = x - centroids[cluster_of]
        dist_to_own = np.sqrt(np.einsum("ij,ij->i", diffs, diffs))
        farthest = int(np.argmax(dist_to_own))
        centroids[i] = x[farthest]
        cluster_of[farthest] = i
    return centroids


def _fitness_for(dataset: Dataset, k: int):
    x = dataset.points
    d = dataset.d

    def fitness(position: np.ndarray) -> float:
        c = position.reshape(k, d)
        dists = cdist(x, c)
        return float(dists.min(axis=1).sum())

    return fitness


def _stalled(prev: float, cur: float, rel_tol: float) -> bool:
    den = abs(prev)
    rel = (prev - cur) / den if den > 0 else (prev - cur)
    return rel < rel_tol


def _run_swarm_pipeline(
    dataset: Dataset,
    k: int,
    seed_centers: Optional[np.ndarray],
    config: PsoConfig,
    rng: Rng,
    refine_gbest: bool,
) -> ClusteringOutcome:
    fitness = _fitness_for(dataset, k)
    swarm = init_swarm(seed_centers, k, dataset, config, rng, fitness)
    trace = [swarm.gbest_fitness]
    stall_streak = 0
    iterations = 0

    for _ in range(config.max_iter):
        step(swarm, fitness, config, rng)
        if refine_gbest:
            centroids = decode(swarm.gbest_position, k, dataset.d)
            refined = recompute_centroids(dataset, assign_nearest(dataset, centroids))
            refined_pos = encode(refined)
            refined_fit = float(fitness(refined_pos))
            if refined_fit < swarm.gbest_fitness:
                owner = min(
                    range(len(swarm.particles)),
                    key=lambda i: swarm.particles[i].pbest_fitness,
                )
                swarm.particles[owner].pbest_position = refined_pos.copy()
                swarm.particles[owner].pbest_fitness = refined_fit
                swarm.gbest_position = refined_pos
                swarm.gbest_fitness = refined_fit
        iterations += 1
        trace.append(swarm.gbest_fitness)
        stall_streak = stall_streak + 1 if _stalled(trace[-2], trace[-1], config.rel_tol) else 0
        if stall_streak >= config.stall_iters:
            break

    centroids = decode(swarm.gbest_position, k, dataset.d)
    assignment = assign_nearest(dataset, centroids)
    return ClusteringOutcome(
        centroids=centroids,
        assignment=assignment,
        sicd=swarm.gbest_fitness,
        iterations_used=iterations,
        sicd_trace=np.asarray(trace),
        seed=rng.seed,
    )


def run_kmeans(
    dataset: Dataset,
    k: int,
    init: Union[str, np.ndarray] = "random_points",
    rng: Optional[Rng] = None,
    max_iter: int = 100,
) -> ClusteringOutcome:
    """Lloyd's algorithm: assign to nearest centers, recompute means, repeat
    until the assignment stabilizes or ``max_iter`` passes."""
    if not 1 <= k <= dataset.n:
        raise DegenerateInput(f"k={k} outside [1, {dataset.n}]")
    if isinstance(init, str):
        if init != "random_points":
            raise ContractViolation(f"unknown init mode {init!r}")
        if rng is None:
            raise ContractViolation("random_points init needs an rng")
        centroids = dataset.points[rng.choice_without_replacement(dataset.n, k)].copy()
    else:
        centroids = np.asarray(init, dtype=np.float64).copy()
        if centroids.shape != (k, dataset.d):
            raise ContractViolation(
                f"given centers shape {centroids.shape} != ({k}, {dataset.d})"
            )

    trace = []
    prev_assign = None
    assignment = assign_nearest(dataset, centroids)
    iterations = 0
    for _ in range(max_iter):
        iterations += 1
        trace.append(sicd(centroids, assignment, dataset))
        if prev_assign is not None and np.array_equal(
            prev_assign.cluster_of, assignment.cluster_of
        ):
            break
        centroids = recompute_centroids(dataset, assignment)
        prev_assign = assignment
        assignment = assign_nearest(dataset, centroids)

    final = sicd(centroids, assignment, dataset)
    if not trace or trace[-1] != final:
        trace.append(final)
    return ClusteringOutcome(
        centroids=centroids,
        assignment=assignment,
        sicd=final,
        iterations_used=iterations,
        sicd_trace=np.asarray(trace),
        seed=rng.seed if rng is not None else 0,
    )


def run_pso(
    dataset: Dataset,
    k: int,
    config: Optional[PsoConfig] = None,
    rng: Optional[Rng] = None,
) -> ClusteringOutcome:
    """Plain PSO over centroid sets, random initialization."""
    if not 1 <= k <= dataset.n:
        raise DegenerateInput(f"k={k} outside [1, {dataset.n}]")
    return _run_swarm_pipeline(
        dataset, k, None, config or PLAIN_PSO, rng, refine_gbest=False
    )


def run_kmeans_pso(
    dataset: Dataset,
    k: int,
    config: Optional[PsoConfig] = None,
    rng: Optional[Rng] = None,
    kmeans_max_iter: int = 100,
) -> ClusteringOutcome:
    """Sequential hybrid: k-means first, its centroids seed one particle of a
    plain PSO which refines them."""
    km = run_kmeans(dataset, k, "random_points", rng, kmeans_max_iter)
    return _run_swarm_pipeline(
        dataset, k, km.centroids, config or PLAIN_PSO, rng, refine_gbest=False
    )


def run_subtractive_pso(
    dataset: Dataset,
    sub_config: Optional[SubtractiveConfig] = None,
    pso_config: Optional[PsoConfig] = None,
    rng: Optional[Rng] = None,
) -> ClusteringOutcome:
    """Subtractive seeding determines k and the seeds; plain PSO refines."""
    seeding = select_centers(dataset, sub_config or SubtractiveConfig())
    return _run_swarm_pipeline(
        dataset,
        seeding.k,
        seeding.centers,
        pso_config or PLAIN_PSO,
        rng,
        refine_gbest=False,
    )


def run_brapso(
    dataset: Dataset,
    k: int,
    config: Optional[PsoConfig] = None,
    rng: Optional[Rng] = None,
) -> ClusteringOutcome:
    """Boundary-restricted adaptive PSO: random initialization, exponential
    inertia, boundary restriction, per-iteration gbest refinement."""
    if not 1 <= k <= dataset.n:
        raise DegenerateInput(f"k={k} outside [1, {dataset.n}]")
    return _run_swarm_pipeline(
        dataset, k, None, config or ADAPTIVE_PSO, rng, refine_gbest=True
    )


def run_sc_br_apso(
    dataset: Dataset,
    sub_config: Optional[SubtractiveConfig] = None,
    pso_config: Optional[PsoConfig] = None,
    rng: Optional[Rng] = None,
) -> ClusteringOutcome:
    """The full pipeline: subtractive seeding supplies k and the initial
    centers, then boundary-restricted adaptive PSO with per-iteration center
    recalculation refines them until convergence."""
    seeding = select_centers(dataset, sub_config or SubtractiveConfig())
    return _run_swarm_pipeline(
        dataset,
        seeding.k,
        seeding.centers,
        pso_config or ADAPTIVE_PSO,
        rng,
        refine_gbest=True,
    )
