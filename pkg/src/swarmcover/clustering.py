"""Ground-user deployment, K-means clustering and hovering-point selection."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigurationError
from .seeding import derive

SeedLike = int | np.random.SeedSequence | np.random.Generator | None


@dataclass(frozen=True)
class GroundUserSet:
    positions: np.ndarray = field(repr=False)
    extent_m: tuple[float, float]

    def __post_init__(self) -> None:
        pos = np.array(self.positions, dtype=float, copy=True).reshape(-1, 2)
        lx, ly = self.extent_m
        if pos.size and (
            np.any(pos < 0) or np.any(pos[:, 0] > lx) or np.any(pos[:, 1] > ly)
        ):
            raise ConfigurationError("ground users must lie inside the horizontal extent")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "extent_m", (float(lx), float(ly)))

    @property
    def count(self) -> int:
        return int(self.positions.shape[0])

    def __len__(self) -> int:
        return self.count


def generate_users(
    seed: SeedLike,
    extent_m: Sequence[float],
    count: int | None = None,
    intensity: float | None = None,
) -> GroundUserSet:
    """Uniform users in ``[0, L_x] x [0, L_y]``.

    Pass ``count`` for exactly M users or ``intensity`` (users per square metre)
    for a homogeneous Poisson point process.
    """
    lx, ly = float(extent_m[0]), float(extent_m[1])
    if not (lx > 0 and ly > 0):
        raise ConfigurationError(f"user extent must have positive area, got {tuple(extent_m)}")
    if (count is None) == (intensity is None):
        raise ConfigurationError("give exactly one of count or intensity")
    rng = np.random.default_rng(seed)
    if count is not None:
        if count < 1:
            raise ConfigurationError(f"user count must be >= 1, got {count}")
        m = int(count)
    else:
        if not intensity > 0:
            raise ConfigurationError(f"intensity must be positive, got {intensity}")
        m = int(rng.poisson(intensity * lx * ly))
    pos = rng.uniform(0.0, 1.0, size=(m, 2)) * np.array([lx, ly])
    return GroundUserSet(pos, (lx, ly))


def load_users(path: str | Path, extent_m: Sequence[float]) -> GroundUserSet:
    data = json.loads(Path(path).read_text())
    if "positions" not in data:
        raise ConfigurationError(f"user file {path} has no 'positions' array")
    return GroundUserSet(np.asarray(data["positions"], dtype=float), tuple(extent_m[:2]))


def save_users(path: str | Path, users: GroundUserSet) -> None:
    Path(path).write_text(json.dumps({"positions": users.positions.tolist()}))


@dataclass
class KMeansResult:
    centroids: np.ndarray
    labels: np.ndarray
    inertia_history: list[float]
    iterations: int
    converged: bool

    @property
    def inertia(self) -> float:
        return self.inertia_history[-1]


def _assign(points: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    # argmin keeps the lowest cluster index on ties
    labels = d2.argmin(axis=1)
    return labels, d2[np.arange(points.shape[0]), labels]


def kmeans(
    users: GroundUserSet | np.ndarray,
    n_clusters: int,
    max_iters: int = 100,
    seed: SeedLike = None,
) -> KMeansResult:
    """Plain Lloyd iteration from ``n_clusters`` randomly drawn users.

    An emptied cluster is re-seeded on the user currently farthest from its
    own centroid, so the number of clusters never shrinks.
    """
    points = users.positions if isinstance(users, GroundUserSet) else np.asarray(users, float)
    m = points.shape[0]
    if not 1 <= n_clusters <= m:
        raise ConfigurationError(f"need 1 <= N <= M, got N={n_clusters}, M={m}")
    rng = np.random.default_rng(seed)
    centroids = points[rng.choice(m, size=n_clusters, replace=False)].copy()

    labels, d2 = _assign(points, centroids)
    history = [float(d2.sum())]
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        for n in range(n_clusters):
            members = labels == n
            if members.any():
                centroids[n] = points[members].mean(axis=0)
        new_labels, d2 = _assign(points, centroids)
        sizes = np.bincount(new_labels, minlength=n_clusters)
        for n in np.flatnonzero(sizes == 0):
            # donors must keep at least one member
            far = int(np.where(sizes[new_labels] > 1, d2, -1.0).argmax())
            sizes[new_labels[far]] -= 1
            sizes[n] = 1
            centroids[n] = points[far]
            new_labels[far] = n
            d2[far] = 0.0
        history.append(float(d2.sum()))
        if np.array_equal(new_labels, labels):
            converged = True
            break
        labels = new_labels
    return KMeansResult(centroids, labels, history, it, converged)


@dataclass(frozen=True)
class HoveringPoint:
    position_m: tuple[float, float]
    covered_count: int
    member_indices: tuple[int, ...]


@dataclass(frozen=True)
class HoveringPlan:
    points: tuple[HoveringPoint, ...]
    coverage_rate: float
    swarm_radius_m: float
    n_users: int
    below_threshold: bool = False

    @property
    def n_points(self) -> int:
        return len(self.points)

    @property
    def positions(self) -> np.ndarray:
        return np.array([p.position_m for p in self.points], dtype=float).reshape(-1, 2)


def evaluate_coverage(
    centroids: np.ndarray,
    users: GroundUserSet | np.ndarray,
    r_s: float,
    labels: np.ndarray | None = None,
) -> HoveringPlan:
    """Count, per cluster, the members within ``r_s`` of their own centroid.

    A user only counts for the cluster it is assigned to, so the coverage rate
    never exceeds one. ``labels`` default to nearest-centroid assignment.
    """
    points = users.positions if isinstance(users, GroundUserSet) else np.asarray(users, float)
    centroids = np.asarray(centroids, dtype=float).reshape(-1, 2)
    if centroids.shape[0] == 0:
        raise ConfigurationError("at least one centroid is required")
    if not r_s > 0:
        raise ConfigurationError(f"swarm radius must be positive, got {r_s}")
    if labels is None:
        labels = _assign(points, centroids)[0]
    dist = np.hypot(*(points - centroids[labels]).T)
    hps = []
    for n in range(centroids.shape[0]):
        members = np.flatnonzero(labels == n)
        covered = int(np.count_nonzero(dist[members] <= r_s))
        hps.append(
            HoveringPoint(
                (float(centroids[n, 0]), float(centroids[n, 1])),
                covered,
                tuple(int(i) for i in members),
            )
        )
    m = points.shape[0]
    rate = sum(p.covered_count for p in hps) / m if m else 0.0
    return HoveringPlan(tuple(hps), rate, float(r_s), m)


def best_of_restarts(
    users: GroundUserSet,
    n_clusters: int,
    r_s: float,
    restarts: int = 10,
    seed: int | np.random.SeedSequence | None = None,
    max_iters: int = 100,
) -> HoveringPlan:
    """Run ``restarts`` independent K-means fits and keep the highest coverage.

    Ties go to the earliest restart.
    """
    seeds = [derive(seed, i) for i in range(restarts)]
    best: HoveringPlan | None = None
    for s in seeds:
        fit = kmeans(users, n_clusters, max_iters=max_iters, seed=s)
        plan = evaluate_coverage(fit.centroids, users, r_s, fit.labels)
        if best is None or plan.coverage_rate > best.coverage_rate:
            best = plan
    assert best is not None
    return best


def select_hovering_plan(
    users: GroundUserSet,
    r_s: float,
    candidate_ns: Sequence[int],
    coverage_threshold: float,
    seeds_per_n: int = 10,
    seed: int | np.random.SeedSequence | None = None,
    max_iters: int = 100,
) -> HoveringPlan:
    """Smallest candidate N whose best restart reaches ``coverage_threshold``.

    If no candidate qualifies, the best plan overall is returned with
    ``below_threshold`` set.
    """
    if not candidate_ns:
        raise ConfigurationError("candidate_ns must not be empty")
    if not 0 < coverage_threshold <= 1:
        raise ConfigurationError(f"coverage threshold must be in (0, 1], got {coverage_threshold}")
    ns = sorted({int(n) for n in candidate_ns if 1 <= int(n) <= users.count})
    if not ns:
        raise ConfigurationError(f"no candidate N is within [1, M={users.count}]")
    overall: HoveringPlan | None = None
    for n in ns:
        plan = best_of_restarts(users, n, r_s, seeds_per_n, derive(seed, n), max_iters)
        if plan.coverage_rate >= coverage_threshold:
            return plan
        if overall is None or plan.coverage_rate > overall.coverage_rate:
            overall = plan
    assert overall is not None
    return HoveringPlan(
        overall.points, overall.coverage_rate, overall.swarm_radius_m, overall.n_users, True
    )
