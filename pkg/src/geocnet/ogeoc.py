"""Forward discovery and backward pruning of causal parents.

For each node ``i`` the forward pass grows a conditioning set ``K`` greedily:
it scores GeoC_{j -> i | K} for every candidate ``j``, runs a permutation test
on the best one only, and admits it if its value beats the surrogate order
statistic. The backward pass keeps ``j`` only if GeoC_{j -> i | K - {j}}
exceeds a fixed threshold.

Surrogates for the test on ``(i, j, K)`` come from random streams keyed by
``(seed, i, j, K, permutation index)``. Identical tests therefore see identical
surrogates no matter the thread count, node order or significance level,
which makes serial and parallel runs bit-identical and keeps ROC sweeps
monotone in ``theta``.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .corrdim import CorrDimConfig
from .dynamics import format_edge_list
from .errors import EstimationError, ValidationError
from .geoc import DEFAULT_CONFIG, as_panel, geoc, node_set, surrogate_geoc

DEFAULT_EPS_BACKWARD = 0.01


def threshold_index(n_permutations: int, theta: float) -> int:
    """floor(N_p * (1 - theta)), guarded against binary rounding just below an integer."""
    return int(math.floor(n_permutations * (1.0 - theta) + 1e-9))


@dataclass(frozen=True)
class ShuffleConfig:
    n_permutations: int = 100
    theta: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.n_permutations < 1:
            raise ValidationError(f"n_permutations must be >= 1, got {self.n_permutations}")
        if not 0 < self.theta < 1:
            raise ValidationError(f"theta must lie in (0, 1), got {self.theta}")
        if self.array_index >= self.n_permutations:
            raise ValidationError(
                f"theta={self.theta} is too small for {self.n_permutations} permutations"
            )

    @property
    def array_index(self) -> int:
        return threshold_index(self.n_permutations, self.theta)

    def with_theta(self, theta: float) -> "ShuffleConfig":
        return ShuffleConfig(self.n_permutations, theta, self.seed)

    def to_dict(self) -> dict:
        return {"n_permutations": self.n_permutations, "theta": self.theta, "seed": self.seed}


def threshold_from_surrogates(values, theta: float) -> float:
    """The floor(N_p (1 - theta))-th smallest surrogate value."""
    values = np.sort(np.asarray(values, dtype=float))
    idx = threshold_index(values.size, theta)
    if not 0 <= idx < values.size:
        raise ValidationError(f"theta={theta} gives index {idx} outside {values.size} surrogates")
    return float(values[idx])


def permutation_for(seed: int, i: int, j: int, cond: Sequence[int], p: int, length: int):
    key = (int(i), int(j), len(cond), *map(int, cond), int(p))
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=key)
    return np.random.default_rng(ss).permutation(length)


def surrogate_values(panel, i: int, j: int, cond=(), config: CorrDimConfig = DEFAULT_CONFIG,
                     cfg: ShuffleConfig = ShuffleConfig(), threads: int = 1) -> np.ndarray:
    """GeoC of ``N_p`` time-shuffled copies of node ``j`` (in permutation order)."""
    panel = as_panel(panel)
    K = node_set(cond, panel.n_nodes)
    if j in K:
        raise ValidationError(f"node {j} is already in the conditioning set {K}")
    key = ("surrogates", int(i), int(j), K, cfg.seed, cfg.n_permutations, config)
    hit = panel._cache.get(key)
    if hit is not None:
        return hit
    length = panel.n_steps - 1

    def one(p):
        perm = permutation_for(cfg.seed, i, j, K, p, length)
        return surrogate_geoc(panel, j, (i,), K, perm, config)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            vals = list(pool.map(one, range(cfg.n_permutations)))
    else:
        vals = [one(p) for p in range(cfg.n_permutations)]
    out = np.asarray(vals, dtype=float)
    out.flags.writeable = False
    panel._cache[key] = out
    return out


def shuffle_threshold(panel, i: int, j: int, cond=(), config: CorrDimConfig = DEFAULT_CONFIG,
                      cfg: ShuffleConfig = ShuffleConfig(), threads: int = 1,
                      surrogates=None) -> float:
    """Data-driven zero for GeoC_{j -> i | cond}: an order statistic of shuffled surrogates.

    ``surrogates`` injects precomputed surrogate values (there must be
    ``cfg.n_permutations`` of them) instead of drawing permutations.
    """
    if surrogates is None:
        vals = surrogate_values(panel, i, j, cond, config, cfg, threads)
    else:
        vals = np.asarray(surrogates, dtype=float).ravel()
        if vals.size != cfg.n_permutations:
            raise ValidationError(
                f"expected {cfg.n_permutations} surrogate values, got {vals.size}"
            )
    return threshold_from_surrogates(vals, cfg.theta)


@dataclass
class IterationRecord:
    conditioning: tuple
    scores: dict
    best: int | None
    max_geoc: float
    threshold: float | None
    accepted: bool

    def to_dict(self) -> dict:
        return {
            "K": list(self.conditioning),
            "scores": {str(k): v for k, v in self.scores.items()},
            "best": self.best,
            "max_geoc": self.max_geoc,
            "threshold": self.threshold,
            "accepted": self.accepted,
        }


@dataclass
class ForwardTrace:
    node: int
    iterations: list = field(default_factory=list)

    def to_list(self) -> list:
        return [it.to_dict() for it in self.iterations]


def forward_geoc(panel, i: int, config: CorrDimConfig = DEFAULT_CONFIG,
                 cfg: ShuffleConfig = ShuffleConfig(), include_self: bool = True,
                 threads: int = 1):
    """Greedy parent discovery for node ``i``; returns ``(candidates, trace)``.

    Ties in the maximum go to the lowest node index.
    """
    panel = as_panel(panel)
    (i,) = node_set(i, panel.n_nodes)
    K: list[int] = []
    trace = ForwardTrace(i)
    iteration = 0
    while True:
        pool = [j for j in range(panel.n_nodes) if j not in K and (include_self or j != i)]
        if not pool:
            break
        try:
            scores = {j: geoc(panel, (j,), (i,), K, config).value for j in pool}
            best = max(pool, key=lambda j: (scores[j], -j))
            eps = shuffle_threshold(panel, i, best, K, config, cfg, threads)
        except EstimationError as exc:
            raise EstimationError(f"node {i}, iteration {iteration}: {exc}") from exc
        accepted = scores[best] > eps
        trace.iterations.append(
            IterationRecord(tuple(K), scores, best, scores[best], eps, accepted)
        )
        if not accepted:
            break
        K.append(best)
        iteration += 1
    return tuple(K), trace


def backward_node(panel, i: int, candidates: Sequence[int],
                  config: CorrDimConfig = DEFAULT_CONFIG,
                  eps_backward: float = DEFAULT_EPS_BACKWARD) -> list[dict]:
    """Re-test every non-self candidate against the rest of the candidate set."""
    K = tuple(candidates)
    records = []
    for j in K:
        if j == i:
            continue
        rest = [k for k in K if k != j]
        value = geoc(panel, (j,), (i,), rest, config).value
        records.append({"j": int(j), "value": value, "kept": bool(value > eps_backward)})
    return records


def _as_candidate_list(candidates, n: int) -> list:
    if isinstance(candidates, Mapping):
        return [tuple(candidates.get(i, ())) for i in range(n)]
    out = [tuple(c) for c in candidates]
    if len(out) != n:
        raise ValidationError(f"expected candidate sets for {n} nodes, got {len(out)}")
    return out


def backward_geoc(panel, candidates, config: CorrDimConfig = DEFAULT_CONFIG,
                  eps_backward: float = DEFAULT_EPS_BACKWARD) -> np.ndarray:
    """Prune indirect candidates; returns the estimated adjacency (a_ij: j drives i)."""
    panel = as_panel(panel)
    cands = _as_candidate_list(candidates, panel.n_nodes)
    a_hat = np.zeros((panel.n_nodes, panel.n_nodes), np.int8)
    for i, K in enumerate(cands):
        for rec in backward_node(panel, i, K, config, eps_backward):
            if rec["kept"]:
                a_hat[i, rec["j"]] = 1
    return a_hat


@dataclass
class InferenceResult:
    parents: list
    candidates: list
    adjacency_estimate: np.ndarray
    traces: list
    backward: list
    epsilon_backward: float
    failures: dict = field(default_factory=dict)
    settings: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "settings": self.settings,
            "epsilon_backward": self.epsilon_backward,
            "candidates": [list(c) for c in self.candidates],
            "parents": [list(p) for p in self.parents],
            "adjacency": self.adjacency_estimate.astype(int).tolist(),
            "traces": [t.to_list() if t is not None else None for t in self.traces],
            "backward": self.backward,
            "failures": {str(k): v for k, v in sorted(self.failures.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=False)

    def edge_list_text(self) -> str:
        return format_edge_list(self.adjacency_estimate, "inferred edges: j i means j drives i")


def infer_network(panel, config: CorrDimConfig = DEFAULT_CONFIG,
                  cfg: ShuffleConfig = ShuffleConfig(),
                  eps_backward: float = DEFAULT_EPS_BACKWARD,
                  include_self: bool = True, threads: int = 1,
                  nodes: Sequence[int] | None = None) -> InferenceResult:
    """Forward then backward pass for every node; nodes run concurrently.

    A node whose estimation fails contributes no edges and is listed in
    ``failures``; the other nodes are unaffected.
    """
    panel = as_panel(panel)
    n = panel.n_nodes
    targets = list(range(n)) if nodes is None else list(node_set(nodes, n))

    def run(i):
        try:
            K, trace = forward_geoc(panel, i, config, cfg, include_self)
            back = backward_node(panel, i, K, config, eps_backward)
            return i, K, trace, back, None
        except EstimationError as exc:
            return i, (), None, [], str(exc)

    if threads > 1 and len(targets) > 1:
        with ThreadPoolExecutor(min(threads, len(targets))) as pool:
            outcomes = list(pool.map(run, targets))
    else:
        outcomes = [run(i) for i in targets]

    candidates = [()] * n
    parents = [()] * n
    traces = [None] * n
    backward = [[] for _ in range(n)]
    failures = {}
    a_hat = np.zeros((n, n), np.int8)
    for i, K, trace, back, err in outcomes:
        candidates[i] = K
        traces[i] = trace
        backward[i] = back
        if err is not None:
            failures[i] = err
            continue
        kept = tuple(rec["j"] for rec in back if rec["kept"])
        parents[i] = kept
        a_hat[i, list(kept)] = 1
    settings = {
        "estimator": config.to_dict(),
        "shuffle": cfg.to_dict(),
        "eps_backward": eps_backward,
        "include_self": include_self,
        "n_nodes": n,
        "n_steps": panel.n_steps,
        "nodes": targets,
    }
    return InferenceResult(parents, candidates, a_hat, traces, backward, eps_backward,
                           failures, settings)
