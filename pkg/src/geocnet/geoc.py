"""Conditional geometric information flow from correlation dimensions.

``Geo(X'_I | X_K) = D2(X'_I, X_K) - D2(X_K)`` and

    GeoC_{J -> I | K} = Geo(X'_I | X_K) - Geo(X'_I | X_J, X_K)

where ``X'`` is the series advanced by one step. Every D2 term is cached on
the panel, keyed by the (sorted) future and past node sets plus the estimator
configuration, so the forward and backward passes never refit a cloud twice.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .corrdim import CorrDimConfig
from .dynamics import TimeSeriesPanel
from .errors import EstimationError, ValidationError

DEFAULT_CONFIG = CorrDimConfig()


def node_set(nodes: Iterable[int] | int | None, n_nodes: int) -> tuple[int, ...]:
    """Normalise a node collection to a sorted tuple of unique, valid ids."""
    if nodes is None:
        return ()
    if isinstance(nodes, (int, np.integer)):
        nodes = (nodes,)
    out = sorted({int(v) for v in nodes})
    for v in out:
        if not 0 <= v < n_nodes:
            raise ValidationError(f"node {v} out of range for a {n_nodes}-node panel")
    return tuple(out)


def as_panel(panel) -> TimeSeriesPanel:
    if isinstance(panel, TimeSeriesPanel):
        return panel
    return TimeSeriesPanel(np.asarray(panel))


def build_embedding(panel, target: Sequence[int], conditioners: Sequence[int]) -> np.ndarray:
    """Time-aligned cloud of ``T - 1`` points.

    Point ``n`` holds ``x_{n+1}`` of every target node followed by ``x_n`` of
    every conditioner, in the order given.
    """
    panel = as_panel(panel)
    target, conditioners = list(target), list(conditioners)
    if not target and not conditioners:
        raise ValidationError("embedding needs at least one target or conditioner")
    for v in target + conditioners:
        if not 0 <= v < panel.n_nodes:
            raise ValidationError(f"node {v} out of range for a {panel.n_nodes}-node panel")
    v = panel.values
    blocks = [v[i, 1:] for i in target] + [v[k, :-1] for k in conditioners]
    return np.concatenate(blocks, axis=1)


def _shuffled_embedding(panel, target, conditioners, shuffled_node, perm) -> np.ndarray:
    cloud = build_embedding(panel, target, conditioners)
    d = panel.state_dim
    col = len(target) * d + conditioners.index(shuffled_node) * d
    cloud[:, col:col + d] = cloud[perm, col:col + d]
    return cloud


def cached_d2(panel: TimeSeriesPanel, future: tuple, past: tuple,
              config: CorrDimConfig = DEFAULT_CONFIG) -> float:
    """D2 of the cloud (future targets, past conditioners), memoised on the panel."""
    key = ("d2", future, past, config)
    hit = panel._cache.get(key)
    if hit is not None:
        return hit
    value = config.estimate(build_embedding(panel, future, past)).d2
    panel._cache[key] = value
    return value


def geo_conditional(panel, target, conditioners,
                    config: CorrDimConfig = DEFAULT_CONFIG) -> float:
    """``D2(X'_target, X_cond) - D2(X_cond)``; the second term is 0 for no conditioners."""
    panel = as_panel(panel)
    target = node_set(target, panel.n_nodes)
    conditioners = node_set(conditioners, panel.n_nodes)
    if not target:
        raise ValidationError("target set must be non-empty")
    joint = cached_d2(panel, target, conditioners, config)
    base = cached_d2(panel, (), conditioners, config) if conditioners else 0.0
    return joint - base


@dataclass(frozen=True)
class GeoCValue:
    value: float
    d2_target_given_k: float
    d2_k: float
    d2_target_given_jk: float
    d2_jk: float
    source: tuple = ()
    target: tuple = ()
    cond: tuple = ()

    def expansion(self) -> float:
        return (self.d2_target_given_k - self.d2_k) - (self.d2_target_given_jk - self.d2_jk)

    def to_record(self, config: CorrDimConfig | None = None, n_steps: int | None = None) -> dict:
        rec = {
            "J": list(self.source), "I": list(self.target), "K": list(self.cond),
            "value": self.value,
            "d2": {
                "target_given_k": self.d2_target_given_k,
                "k": self.d2_k,
                "target_given_jk": self.d2_target_given_jk,
                "jk": self.d2_jk,
            },
        }
        if config is not None:
            rec["estimator"] = config.to_dict()
        if n_steps is not None:
            rec["T"] = n_steps
        return rec


def geoc(panel, source, target, cond=(), config: CorrDimConfig = DEFAULT_CONFIG) -> GeoCValue:
    """GeoC_{source -> target | cond} with its four D2 constituents.

    If ``source`` is contained in ``cond`` both conditioning clouds coincide
    and the value is exactly 0.
    """
    panel = as_panel(panel)
    J = node_set(source, panel.n_nodes)
    I = node_set(target, panel.n_nodes)
    K = node_set(cond, panel.n_nodes)
    if not J:
        raise ValidationError("source set must be non-empty")
    if not I:
        raise ValidationError("target set must be non-empty")
    JK = tuple(sorted(set(J) | set(K)))
    if set(J) <= set(K):
        try:
            a = cached_d2(panel, I, K, config)
            b = cached_d2(panel, (), K, config) if K else 0.0
        except EstimationError:
            a = b = float("nan")
        return GeoCValue(0.0, a, b, a, b, J, I, K)
    a = cached_d2(panel, I, K, config)
    b = cached_d2(panel, (), K, config) if K else 0.0
    c = cached_d2(panel, I, JK, config)
    d = cached_d2(panel, (), JK, config)
    return GeoCValue((a - b) - (c - d), a, b, c, d, J, I, K)


def surrogate_geoc(panel, source: int, target, cond, perm: np.ndarray,
                   config: CorrDimConfig = DEFAULT_CONFIG) -> float:
    """GeoC_{j* -> I | K} where node j's past is reordered by ``perm``.

    Only the two clouds that contain the shuffled node are refitted. A cloud
    made of the shuffled node alone is a row permutation of the original and
    has identical pair counts (absent a Theiler window), so it is reused.
    """
    panel = as_panel(panel)
    I = node_set(target, panel.n_nodes)
    K = node_set(cond, panel.n_nodes)
    j = node_set(source, panel.n_nodes)
    if len(j) != 1:
        raise ValidationError("surrogates are drawn for a single source node")
    j = j[0]
    if j in K:
        raise ValidationError(f"source node {j} is already in the conditioning set")
    perm = np.asarray(perm)
    if perm.shape != (panel.n_steps - 1,):
        raise ValidationError(f"permutation must have length {panel.n_steps - 1}")
    a = cached_d2(panel, I, K, config)
    b = cached_d2(panel, (), K, config) if K else 0.0
    JK = tuple(sorted(K + (j,)))
    c = config.estimate(_shuffled_embedding(panel, list(I), list(JK), j, perm)).d2
    if not K and config.theiler == 0:
        d = cached_d2(panel, (), (j,), config)
    else:
        d = config.estimate(_shuffled_embedding(panel, [], list(JK), j, perm)).d2
    return (a - b) - (c - d)
