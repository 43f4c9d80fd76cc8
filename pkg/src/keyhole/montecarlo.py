"""Stochastic validation engine.

Random uniform node placement, external-node degree and connection
statistics, and interior-mesh cluster connectivity.  Every trial draws
from its own generator spawned from the master seed, so results are
bit-identical no matter how trials are scheduled; accumulation is an
ordered reduction over trial indices.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import ChannelParams, connection_prob
from .geometry import KeyholeDomain, KeyholeSpec, classify_points, sample_points


@dataclass(frozen=True)
class SimConfig:
    """Declarative Monte Carlo settings.

    Exactly one of ``n_nodes`` or ``density`` must be set; the other is
    derived from the domain volume at run time (rho = N/V).
    """

    trials: int
    seed: int
    n_nodes: int | None = None
    density: float | None = None
    link_mode: str = "approx"
    C: int = 2
    estimator: str = "semi-analytic"
    n_cap: int = 2000

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if (self.n_nodes is None) == (self.density is None):
            raise ValueError("exactly one of n_nodes or density is required")
        if self.n_nodes is not None and self.n_nodes < 0:
            raise ValueError("n_nodes must be >= 0")
        if self.density is not None and self.density < 0:
            raise ValueError("density must be >= 0")
        if self.link_mode not in ("exact", "approx"):
            raise ValueError(f"unknown link_mode {self.link_mode!r}")
        if self.estimator not in ("semi-analytic", "bernoulli"):
            raise ValueError(f"unknown estimator {self.estimator!r}")
        if self.C < 0:
            raise ValueError("C must be >= 0")

    def resolve_n(self, domain: KeyholeDomain) -> tuple[int, float]:
        """(N, rho) for the given domain."""
        if self.n_nodes is not None:
            n = self.n_nodes
        else:
            n = int(round(self.density * domain.volume))
        return n, n / domain.volume


@dataclass(frozen=True)
class EstimateWithCI:
    """Monte Carlo estimate with normal-approximation standard error."""

    mean: float
    std_error: float
    trials: int
    ci95: tuple[float, float]


def _normal_estimate(samples: np.ndarray) -> EstimateWithCI:
    n = len(samples)
    mean = float(samples.mean())
    se = float(samples.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return EstimateWithCI(mean, se, n, (mean - 1.96 * se, mean + 1.96 * se))


def _bernoulli_estimate(successes: int, trials: int) -> EstimateWithCI:
    p = successes / trials
    se = math.sqrt(p * (1.0 - p) / trials)
    # Wilson interval near the boundaries, where the normal CI misbehaves.
    if p < 5.0 * se or 1.0 - p < 5.0 * se:
        z = 1.96
        denom = 1.0 + z * z / trials
        centre = (p + z * z / (2.0 * trials)) / denom
        half = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials ** 2)) / denom
        ci = (centre - half, centre + half)
    else:
        ci = (p - 1.96 * se, p + 1.96 * se)
    return EstimateWithCI(p, se, trials, ci)


def trial_rngs(seed: int, trials: int) -> list[np.random.Generator]:
    """One independent generator per trial, spawned from the master seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(trials)]


def _map_trials(fn, trials: int, threads: int = 1) -> np.ndarray:
    """Evaluate fn(trial_index) for every trial, ordered by index."""
    if threads <= 1:
        return np.array([fn(t) for t in range(trials)])
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return np.array(list(pool.map(fn, range(trials))))


def place_nodes(domain: KeyholeDomain, n: int, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. uniform node positions inside the domain."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return sample_points(domain, n, rng)


def _link_probs(pts, domain, hole, params, sim) -> np.ndarray:
    """Per-node probability of a link to the hole's external node."""
    cls, r = classify_points(pts, domain, hole, sim.C)
    h_prob = np.zeros(len(pts))
    for c in range(sim.C + 1):
        mask = cls == c
        if mask.any():
            h_prob[mask] = connection_prob(r[mask], c, params, mode=sim.link_mode)
    return h_prob


def external_mean_degree(
    domain: KeyholeDomain,
    hole: KeyholeSpec,
    params: ChannelParams,
    sim: SimConfig,
    threads: int = 1,
) -> EstimateWithCI:
    """Mean degree of the external node divided by the density, mu_k / rho.

    The reported mean is directly comparable with the analytic
    unnormalized total V<H_ki>.
    """
    n, rho = sim.resolve_n(domain)
    rngs = trial_rngs(sim.seed, sim.trials)

    def one_trial(t):
        rng = rngs[t]
        pts = place_nodes(domain, n, rng)
        h_prob = _link_probs(pts, domain, hole, params, sim)
        if sim.estimator == "bernoulli":
            links = float(np.count_nonzero(rng.random(n) < h_prob))
        else:
            links = float(h_prob.sum())
        return links / rho

    return _normal_estimate(_map_trials(one_trial, sim.trials, threads))


def all_externals_connected_prob(
    domain: KeyholeDomain,
    params: ChannelParams,
    sim: SimConfig,
    threads: int = 1,
) -> EstimateWithCI:
    """P(every external node has at least one link to the interior mesh)."""
    if not domain.holes:
        raise ValueError("at least one hole is required")
    n, _ = sim.resolve_n(domain)
    rngs = trial_rngs(sim.seed, sim.trials)

    def one_trial(t):
        rng = rngs[t]
        pts = place_nodes(domain, n, rng)
        if sim.estimator == "bernoulli":
            ok = True
            for hole in domain.holes:
                h_prob = _link_probs(pts, domain, hole, params, sim)
                if not (rng.random(n) < h_prob).any():
                    ok = False  # keep drawing so the stream layout is fixed
            return 1.0 if ok else 0.0
        p = 1.0
        for hole in domain.holes:
            h_prob = _link_probs(pts, domain, hole, params, sim)
            p *= 1.0 - float(np.prod(1.0 - h_prob))
        return p

    samples = _map_trials(one_trial, sim.trials, threads)
    if sim.estimator == "bernoulli":
        return _bernoulli_estimate(int(samples.sum()), sim.trials)
    return _normal_estimate(samples)


class DisjointSet:
    """Union-find with path compression and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n
        self.components = n

    def find(self, i: int) -> int:
        root = i
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[i] != root:
            self.parent[i], i = root, self.parent[i]
        return root

    def union(self, i: int, j: int):
        ri, rj = self.find(i), self.find(j)
        if ri == rj:
            return
        if self.size[ri] < self.size[rj]:
            ri, rj = rj, ri
        self.parent[rj] = ri
        self.size[ri] += self.size[rj]
        self.components -= 1


def interior_mesh_connectivity(
    domain: KeyholeDomain,
    params: ChannelParams,
    sim: SimConfig,
    threads: int = 1,
) -> EstimateWithCI:
    """P(the interior nodes form one connected cluster), by pair sampling.

    Interior-interior links are always direct LOS (c = 0): the rectangle
    is convex and the holes are negligible perturbations.
    """
    n, _ = sim.resolve_n(domain)
    if n > sim.n_cap:
        raise ValueError(f"N = {n} exceeds the pair-loop cap {sim.n_cap}")
    rngs = trial_rngs(sim.seed, sim.trials)

    def one_trial(t):
        rng = rngs[t]
        pts = place_nodes(domain, n, rng)
        if n <= 1:
            return 1.0
        iu, ju = np.triu_indices(n, k=1)
        dist = np.linalg.norm(pts[iu] - pts[ju], axis=1)
        h_prob = connection_prob(dist, 0, params, mode=sim.link_mode)
        linked = rng.random(len(dist)) < h_prob
        dsu = DisjointSet(n)
        for i, j in zip(iu[linked], ju[linked]):
            dsu.union(int(i), int(j))
        return 1.0 if dsu.components == 1 else 0.0

    samples = _map_trials(one_trial, sim.trials, threads)
    return _bernoulli_estimate(int(samples.sum()), sim.trials)
