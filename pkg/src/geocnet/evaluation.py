"""Scoring inferred networks and running multi-trial experiments."""
from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corrdim import CorrDimConfig
from .dynamics import (
    DEFAULT_TRANSIENT,
    NetworkSpec,
    as_adjacency,
    generate_er_graph,
    load_bundled_graph,
    parse_edge_list,
    simulate,
)
from .errors import GeocError, InputOutputError, ValidationError
from .geoc import as_panel
from .ogeoc import DEFAULT_EPS_BACKWARD, ShuffleConfig, infer_network


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def tpr(self) -> float | None:
        pos = self.tp + self.fn
        return self.tp / pos if pos else None

    @property
    def fpr(self) -> float | None:
        neg = self.fp + self.tn
        return self.fp / neg if neg else None

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn,
                "tpr": self.tpr, "fpr": self.fpr}


def confusion(estimate, truth) -> ConfusionCounts:
    """Compare two adjacency matrices over ordered off-diagonal pairs."""
    est = np.asarray(estimate)
    tru = np.asarray(truth)
    if est.ndim != 2 or est.shape[0] != est.shape[1]:
        raise ValidationError(f"estimate must be square, got {est.shape}")
    if est.shape != tru.shape:
        raise ValidationError(f"size mismatch: estimate {est.shape} vs truth {tru.shape}")
    off = ~np.eye(est.shape[0], dtype=bool)
    e = est[off] != 0
    t = tru[off] != 0
    return ConfusionCounts(int(np.sum(e & t)), int(np.sum(e & ~t)),
                           int(np.sum(~e & ~t)), int(np.sum(~e & t)))


@dataclass(frozen=True)
class RocPoint:
    theta: float
    tpr: float | None
    fpr: float | None
    error: str | None = None


def roc_sweep(panel, truth, thetas, config: CorrDimConfig | None = None,
              cfg_base: ShuffleConfig | None = None,
              eps_backward: float = DEFAULT_EPS_BACKWARD,
              include_self: bool = True, threads: int = 1) -> list[RocPoint]:
    """One inference per ``theta`` on a single panel.

    Surrogate draws depend only on the seed, so every ``theta`` reuses the
    same surrogates (cached on the panel) and only the order statistic moves.
    """
    panel = as_panel(panel)
    config = config or CorrDimConfig()
    cfg_base = cfg_base or ShuffleConfig()
    truth = as_adjacency(truth)
    points = []
    for theta in thetas:
        try:
            cfg = cfg_base.with_theta(float(theta))
            res = infer_network(panel, config, cfg, eps_backward, include_self, threads)
            cc = confusion(res.adjacency_estimate, truth)
            err = None
            if res.failures:
                err = "; ".join(f"node {k}: {v}" for k, v in sorted(res.failures.items()))
            points.append(RocPoint(float(theta), cc.tpr, cc.fpr, err))
        except GeocError as exc:
            points.append(RocPoint(float(theta), None, None, str(exc)))
    return points


def roc_csv(points) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["theta", "tpr", "fpr"])
    for p in points:
        w.writerow([repr(p.theta), _fmt(p.tpr), _fmt(p.fpr)])
    return out.getvalue()


def _fmt(v):
    return "" if v is None else repr(float(v))


@dataclass(frozen=True)
class TrialSummary:
    sample_size: int
    n_completed: int
    n_failed: int
    mean_tpr: float | None
    min_tpr: float | None
    max_tpr: float | None
    mean_fpr: float | None
    min_fpr: float | None
    max_fpr: float | None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def summarize(sample_size: int, tprs, fprs, n_failed: int = 0) -> TrialSummary:
    """Mean/min/max over the defined values; missing values are skipped."""
    t = [v for v in tprs if v is not None]
    f = [v for v in fprs if v is not None]

    def stats(vals):
        if not vals:
            return None, None, None
        # sorted before summing so the mean does not depend on trial order
        return float(np.sum(sorted(vals)) / len(vals)), float(min(vals)), float(max(vals))

    return TrialSummary(sample_size, len(tprs), n_failed, *stats(t), *stats(f))


def summary_csv(summaries) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["T", "mean_tpr", "min_tpr", "max_tpr", "mean_fpr", "min_fpr", "max_fpr"])
    for s in summaries:
        w.writerow([s.sample_size, _fmt(s.mean_tpr), _fmt(s.min_tpr), _fmt(s.max_tpr),
                    _fmt(s.mean_fpr), _fmt(s.min_fpr), _fmt(s.max_fpr)])
    return out.getvalue()


@dataclass
class ExperimentConfig:
    """Declarative description of a batch of inference trials.

    ``graph`` is one of ``{"kind": "er", "n": .., "p": ..}``,
    ``{"kind": "bundled", "name": ..}`` or ``{"kind": "file", "path": ..}``.
    ER graphs are redrawn per trial; fixed graphs get fresh trajectories.
    """

    graph: dict = field(default_factory=lambda: {"kind": "er", "n": 20, "p": 0.1})
    sigma: float = 0.1
    map_param: float = 4.0
    sample_sizes: list = field(default_factory=lambda: [10000])
    n_trials: int = 10
    n_permutations: int = 100
    theta: float = 0.01
    thetas: list | None = None
    eps_backward: float = DEFAULT_EPS_BACKWARD
    include_self: bool = True
    transient: int = DEFAULT_TRANSIENT
    seed: int = 0
    estimator: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValidationError("n_trials must be >= 1")
        if not self.sample_sizes or min(self.sample_sizes) < 2:
            raise ValidationError("sample_sizes must be a non-empty list of T >= 2")
        kind = self.graph.get("kind")
        if kind not in ("er", "bundled", "file"):
            raise ValidationError(f"graph kind must be er, bundled or file, got {kind!r}")
        self.sample_sizes = [int(t) for t in self.sample_sizes]
        self.corrdim_config()
        self.shuffle_config()

    def corrdim_config(self) -> CorrDimConfig:
        return CorrDimConfig.from_dict(self.estimator)

    def shuffle_config(self, theta: float | None = None) -> ShuffleConfig:
        return ShuffleConfig(self.n_permutations, self.theta if theta is None else theta,
                             self.seed)

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["estimator"] = self.corrdim_config().to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ValidationError(f"unknown experiment keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise InputOutputError(f"cannot read config {path}: {exc}") from exc
        if path.suffix.lower() in (".yaml", ".yml"):
            import yaml

            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
        if not isinstance(data, dict):
            raise ValidationError(f"config {path} must hold a mapping")
        return cls.from_dict(data)


def trial_seeds(seed: int, trial: int) -> tuple[int, int]:
    """(graph seed, trajectory seed) for one trial, independent of other trials."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(trial),))
    g, s = ss.generate_state(2)
    return int(g), int(s)


def trial_graph(exp: ExperimentConfig, trial: int) -> np.ndarray:
    g = exp.graph
    kind = g["kind"]
    if kind == "er":
        return generate_er_graph(int(g["n"]), float(g["p"]), trial_seeds(exp.seed, trial)[0])
    if kind == "bundled":
        return load_bundled_graph(g["name"])
    try:
        text = Path(g["path"]).read_text()
    except OSError as exc:
        raise InputOutputError(f"cannot read edge list {g['path']}: {exc}") from exc
    return parse_edge_list(text, g.get("n"))


def run_trial(exp: ExperimentConfig, trial: int, threads: int = 1) -> list[dict]:
    """Every sample size for one trial; shorter runs are prefixes of the longest."""
    truth = trial_graph(exp, trial)
    spec = NetworkSpec(truth, sigma=exp.sigma, map_param=exp.map_param)
    sim_seed = trial_seeds(exp.seed, trial)[1]
    records = []
    try:
        full = simulate(spec, t_transient=exp.transient, t_keep=max(exp.sample_sizes),
                        seed=sim_seed)
    except GeocError as exc:
        return [{"trial": trial, "T": t, "error": str(exc)} for t in exp.sample_sizes]
    config = exp.corrdim_config()
    for t in exp.sample_sizes:
        rec = {"trial": trial, "T": t, "graph_edges": int(truth.sum()), "sim_seed": sim_seed}
        try:
            res = infer_network(full.head(t), config, exp.shuffle_config(), exp.eps_backward,
                                exp.include_self, threads)
            cc = confusion(res.adjacency_estimate, truth)
            rec.update(cc.to_dict())
            rec["failures"] = {str(k): v for k, v in res.failures.items()}
            rec["adjacency"] = res.adjacency_estimate.astype(int).tolist()
        except GeocError as exc:
            rec["error"] = str(exc)
        records.append(rec)
    return records


def run_trials(exp: ExperimentConfig, threads: int = 1):
    """Run every trial and aggregate per sample size.

    Returns ``(summaries, records)``. Trials that fail are excluded from the
    statistics and counted in ``n_failed``.
    """
    if threads > 1 and exp.n_trials > 1:
        with ThreadPoolExecutor(min(threads, exp.n_trials)) as pool:
            per_trial = list(pool.map(lambda k: run_trial(exp, k), range(exp.n_trials)))
    else:
        per_trial = [run_trial(exp, k, threads) for k in range(exp.n_trials)]
    records = [r for recs in per_trial for r in recs]
    summaries = []
    for t in exp.sample_sizes:
        done = [r for r in records if r["T"] == t and "error" not in r]
        failed = sum(1 for r in records if r["T"] == t and "error" in r)
        summaries.append(summarize(t, [r["tpr"] for r in done], [r["fpr"] for r in done],
                                   failed))
    return summaries, records


def run_roc(exp: ExperimentConfig, trial: int = 0, threads: int = 1) -> dict:
    """ROC sweep on one network for every sample size; returns {T: [RocPoint]}."""
    if not exp.thetas:
        raise ValidationError("an ROC experiment needs a non-empty 'thetas' list")
    truth = trial_graph(exp, trial)
    spec = NetworkSpec(truth, sigma=exp.sigma, map_param=exp.map_param)
    full = simulate(spec, t_transient=exp.transient, t_keep=max(exp.sample_sizes),
                    seed=trial_seeds(exp.seed, trial)[1])
    out = {}
    for t in exp.sample_sizes:
        out[t] = roc_sweep(full.head(t), truth, exp.thetas, exp.corrdim_config(),
                           exp.shuffle_config(), exp.eps_backward, exp.include_self, threads)
    return out


__all__ = [
    "ConfusionCounts", "ExperimentConfig", "RocPoint", "TrialSummary",
    "confusion", "roc_csv", "roc_sweep", "run_roc", "run_trials", "summarize", "summary_csv",
]
