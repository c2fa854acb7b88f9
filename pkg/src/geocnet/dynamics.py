"""Networks of coupled logistic maps and benchmark graphs.

Node ``i`` evolves as

    x'_i = f(x_i) + sigma * kappa @ sum_{j != i} a_ij * g(x_i, x_j)

with ``f`` the logistic map and ``g(x_i, x_j) = f(x_j) - f(x_i)`` by default.
``a_ij = 1`` means node ``j`` drives node ``i``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import _kernels
from .errors import DomainError, TrajectoryEscapeError, ValidationError

COUPLING_KINDS = {"f-diff": 0, "x-diff": 1}
DEFAULT_TRANSIENT = 1000
DOMAIN_TOL = 1e-12

BUNDLED_GRAPHS = {
    "directed7": "directed7.edges",
    "bidirected7": "bidirected7.edges",
    "chain3": "chain3.edges",
}


def as_adjacency(adjacency) -> np.ndarray:
    """Validate and return a square 0/1 adjacency matrix with zero diagonal."""
    a = np.asarray(adjacency)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"adjacency must be square, got shape {a.shape}")
    if not np.all((a == 0) | (a == 1)):
        raise ValidationError("adjacency entries must be 0 or 1")
    if np.any(np.diag(a) != 0):
        raise ValidationError("adjacency must have a zero diagonal (no self-loops)")
    return a.astype(np.int8)


@dataclass(frozen=True, eq=False)
class NetworkSpec:
    adjacency: np.ndarray
    sigma: float = 0.1
    map_param: float = 4.0
    kappa: np.ndarray | float = 1.0
    coupling_kind: str = "f-diff"

    def __post_init__(self):
        object.__setattr__(self, "adjacency", as_adjacency(self.adjacency))
        kappa = np.atleast_2d(np.asarray(self.kappa, dtype=float))
        if kappa.shape[0] != kappa.shape[1]:
            raise ValidationError("kappa must be a square d x d matrix")
        object.__setattr__(self, "kappa", kappa)
        if not self.sigma >= 0:
            raise ValidationError(f"sigma must be >= 0, got {self.sigma}")
        if not 0 < self.map_param <= 4:
            raise DomainError(f"logistic parameter must lie in (0, 4], got {self.map_param}")
        if self.coupling_kind not in COUPLING_KINDS:
            raise ValidationError(
                f"unknown coupling kind {self.coupling_kind!r}; "
                f"expected one of {sorted(COUPLING_KINDS)}"
            )

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def state_dim(self) -> int:
        return self.kappa.shape[0]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "edges": edge_list(self.adjacency),
            "sigma": self.sigma,
            "map_param": self.map_param,
            "kappa": self.kappa.tolist(),
            "coupling_kind": self.coupling_kind,
        }

    def _parents_csr(self):
        ptr = np.zeros(self.n + 1, np.int64)
        idx = []
        for i in range(self.n):
            parents = np.flatnonzero(self.adjacency[i])
            idx.extend(parents.tolist())
            ptr[i + 1] = len(idx)
        return ptr, np.asarray(idx, np.int64)


@dataclass(eq=False)
class TimeSeriesPanel:
    """Observed trajectories indexed ``values[node, time, dim]``."""

    values: np.ndarray
    metadata: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim == 2:
            v = v[:, :, None]
        if v.ndim != 3:
            raise ValidationError(f"panel values must be (nodes, time, dim), got {v.shape}")
        if v.shape[0] < 1:
            raise ValidationError("panel needs at least one node")
        if v.shape[1] < 2:
            raise ValidationError("panel needs at least two time steps")
        if not np.all(np.isfinite(v)):
            raise ValidationError("panel contains NaN or Inf")
        self.values = np.ascontiguousarray(v)

    @property
    def n_nodes(self) -> int:
        return self.values.shape[0]

    @property
    def n_steps(self) -> int:
        return self.values.shape[1]

    @property
    def state_dim(self) -> int:
        return self.values.shape[2]

    def head(self, n_steps: int) -> "TimeSeriesPanel":
        """First ``n_steps`` time steps as a new panel (fresh cache)."""
        meta = dict(self.metadata, n_steps=n_steps)
        return TimeSeriesPanel(self.values[:, :n_steps], meta)


def logistic_step(x: float, a: float) -> float:
    if not 0 < a <= 4:
        raise DomainError(f"logistic parameter must lie in (0, 4], got {a}")
    if not 0 <= x <= 1:
        raise DomainError(f"logistic state must lie in [0, 1], got {x}")
    return a * x * (1.0 - x)


def step_network(state, spec: NetworkSpec) -> np.ndarray:
    """One synchronous update of every node."""
    x = np.asarray(state, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape != (spec.n, spec.state_dim):
        raise ValidationError(
            f"state shape {x.shape} does not match network ({spec.n}, {spec.state_dim})"
        )
    ptr, idx = spec._parents_csr()
    orbit, _ = _kernels.logistic_orbit(
        x, ptr, idx, float(spec.sigma), spec.kappa, float(spec.map_param),
        COUPLING_KINDS[spec.coupling_kind], 2, np.inf,
    )
    return orbit[1]


def random_initial_state(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    x = rng.uniform(0.0, 1.0, size=(n, d))
    bad = (x <= 0.0) | (x >= 1.0)
    while bad.any():
        x[bad] = rng.uniform(0.0, 1.0, size=int(bad.sum()))
        bad = (x <= 0.0) | (x >= 1.0)
    return x


def simulate(spec: NetworkSpec, x0=None, t_transient: int = DEFAULT_TRANSIENT,
             t_keep: int = 10000, seed: int | None = None) -> TimeSeriesPanel:
    """Iterate from ``x0`` and keep states ``t_transient .. t_transient + t_keep - 1``.

    State 0 is ``x0`` itself. Without ``x0`` the initial condition is drawn
    uniformly from the open unit interval using ``seed``. Raises
    :class:`TrajectoryEscapeError` if any state leaves [0, 1].
    """
    if t_keep < 2:
        raise ValidationError(f"t_keep must be >= 2, got {t_keep}")
    if t_transient < 0:
        raise ValidationError(f"t_transient must be >= 0, got {t_transient}")
    n, d = spec.n, spec.state_dim
    if x0 is None:
        x0 = random_initial_state(n, d, np.random.default_rng(seed))
    x0 = np.asarray(x0, dtype=np.float64).reshape(n, d)
    if np.any(x0 < 0) or np.any(x0 > 1):
        raise DomainError("initial state must lie in [0, 1]")
    ptr, idx = spec._parents_csr()
    orbit, escaped = _kernels.logistic_orbit(
        x0, ptr, idx, float(spec.sigma), spec.kappa, float(spec.map_param),
        COUPLING_KINDS[spec.coupling_kind], t_transient + t_keep, DOMAIN_TOL,
    )
    if escaped >= 0:
        offset = np.abs(orbit[escaped] - 0.5)
        node, dim = np.unravel_index(int(np.argmax(offset)), offset.shape)
        raise TrajectoryEscapeError(int(escaped), int(node), float(orbit[escaped, node, dim]))
    values = np.ascontiguousarray(orbit[t_transient:].transpose(1, 0, 2))
    meta = {
        "seed": seed,
        "transient": t_transient,
        "n_steps": t_keep,
        "spec": spec.to_dict(),
        "x0": x0.tolist(),
    }
    return TimeSeriesPanel(values, meta)


def generate_er_graph(n: int, p: float, seed: int | None = None) -> np.ndarray:
    """Directed Erdos-Renyi graph: every ordered pair i != j gets an edge w.p. ``p``."""
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    if not 0 <= p <= 1:
        raise ValidationError(f"p must lie in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    a = (rng.random((n, n)) < p).astype(np.int8)
    np.fill_diagonal(a, 0)
    return a


def edge_list(adjacency) -> list[tuple[int, int]]:
    """Edges as ``(source, target)`` pairs, i.e. ``(j, i)`` for every a_ij = 1."""
    a = np.asarray(adjacency)
    return [(int(j), int(i)) for i, j in zip(*np.nonzero(a))]


def parse_edge_list(text: str, n: int | None = None) -> np.ndarray:
    """Parse ``j i`` lines (j drives i, 0-based); ``#`` starts a comment.

    A ``# nodes: N`` header fixes the node count; otherwise ``n`` or the
    largest index seen is used.
    """
    pairs = []
    declared = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line, _, comment = raw.partition("#")
        if comment.strip().lower().startswith("nodes:"):
            declared = int(comment.split(":", 1)[1])
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValidationError(f"edge list line {lineno}: expected 'j i', got {raw!r}")
        try:
            j, i = int(parts[0]), int(parts[1])
        except ValueError:
            raise ValidationError(f"edge list line {lineno}: non-integer node in {raw!r}") from None
        if i < 0 or j < 0:
            raise ValidationError(f"edge list line {lineno}: negative node index")
        if i == j:
            raise ValidationError(f"edge list line {lineno}: self-loop {j} -> {i}")
        pairs.append((j, i))
    size = n or declared or (max(max(p) for p in pairs) + 1 if pairs else 0)
    if pairs and max(max(p) for p in pairs) >= size:
        raise ValidationError(f"edge list references a node >= {size}")
    a = np.zeros((size, size), np.int8)
    for j, i in pairs:
        a[i, j] = 1
    return a


def format_edge_list(adjacency, header: str | None = None) -> str:
    a = np.asarray(adjacency)
    lines = []
    if header:
        lines.extend(f"# {h}" for h in header.splitlines())
    lines.append(f"# nodes: {a.shape[0]}")
    lines.extend(f"{j} {i}" for j, i in edge_list(a))
    return "\n".join(lines) + "\n"


def load_bundled_graph(name: str) -> np.ndarray:
    try:
        fname = BUNDLED_GRAPHS[name]
    except KeyError:
        raise ValidationError(
            f"unknown bundled graph {name!r}; choose from {sorted(BUNDLED_GRAPHS)}"
        ) from None
    text = resources.files("geocnet.data").joinpath(fname).read_text()
    return parse_edge_list(text)
