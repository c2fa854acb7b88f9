"""Grassberger-Procaccia correlation sums and correlation-dimension fits.

Pair counts are exact. The default spatial index sorts the cloud on its first
coordinate and sweeps a window of width ``eps`` (every pair outside the window
is farther apart than ``eps`` in that coordinate alone, hence in any norm).
One sweep histograms all pair distances below the largest radius, so a whole
curve costs a single pass. A scipy kd-tree backend is available for
single-radius queries.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import (
    DegenerateAbscissaError,
    EmptyCurveError,
    EstimationError,
    ValidationError,
)

NORMS = {"max": _kernels.NORM_MAX, "euclidean": _kernels.NORM_EUCLID}


@dataclass(frozen=True)
class RadiusGrid:
    eps_min: float = 0.0562
    eps_max: float = 0.630
    n_steps: int = 50
    spacing: str = "linear"

    def __post_init__(self):
        if not self.eps_min > 0:
            raise ValidationError(f"eps_min must be > 0, got {self.eps_min}")
        if not self.eps_max > self.eps_min:
            raise ValidationError(
                f"eps_max ({self.eps_max}) must exceed eps_min ({self.eps_min})"
            )
        if self.n_steps < 2:
            raise ValidationError(f"n_steps must be >= 2, got {self.n_steps}")
        if self.spacing not in ("linear", "log"):
            raise ValidationError(f"spacing must be 'linear' or 'log', got {self.spacing!r}")

    @property
    def radii(self) -> np.ndarray:
        # n_steps radii starting at eps_min; eps_max itself is excluded
        k = np.arange(self.n_steps)
        if self.spacing == "linear":
            step = (self.eps_max - self.eps_min) / self.n_steps
            return self.eps_min + k * step
        lo, hi = np.log(self.eps_min), np.log(self.eps_max)
        return np.exp(lo + k * (hi - lo) / self.n_steps)

    def to_dict(self) -> dict:
        return {"eps_min": self.eps_min, "eps_max": self.eps_max,
                "n_steps": self.n_steps, "spacing": self.spacing}


DEFAULT_GRID = RadiusGrid()


@dataclass(frozen=True)
class CorrSumCurve:
    ln_eps: np.ndarray
    ln_c: np.ndarray
    n_dropped: int = 0
    radii: np.ndarray = field(default=None, repr=False, compare=False)
    counts: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.ln_eps.tolist(), self.ln_c.tolist()))

    def to_csv(self) -> str:
        rows = ["ln_eps,ln_c"]
        rows += [f"{x!r},{y!r}" for x, y in zip(self.ln_eps.tolist(), self.ln_c.tolist())]
        return "\n".join(rows) + "\n"


@dataclass(frozen=True)
class DimEstimate:
    d2: float
    intercept: float
    residual_sum: float
    n_points_used: int
    first_index: int = 0

    def to_dict(self) -> dict:
        return {"d2": self.d2, "intercept": self.intercept,
                "residual_sum": self.residual_sum,
                "n_points_used": self.n_points_used,
                "first_index": self.first_index}


def as_cloud(cloud) -> np.ndarray:
    x = np.asarray(cloud, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValidationError(f"point cloud must be 2-d (points, coords), got {x.shape}")
    if x.shape[0] < 2:
        raise ValidationError("point cloud needs at least two points")
    if x.shape[1] < 1:
        raise ValidationError("point cloud needs at least one coordinate")
    if not np.all(np.isfinite(x)):
        raise ValidationError("point cloud contains NaN or Inf")
    return x


def _check_norm(norm: str) -> int:
    try:
        return NORMS[norm]
    except KeyError:
        raise ValidationError(f"unknown norm {norm!r}; expected 'max' or 'euclidean'") from None


def pair_counts(cloud, radii, norm: str = "max", theiler: int = 0) -> np.ndarray:
    """Number of unordered pairs closer than each radius (strict ``<``).

    With ``theiler = w`` pairs whose time indices differ by at most ``w`` are
    skipped.
    """
    x = as_cloud(cloud)
    r = np.ascontiguousarray(radii, dtype=np.float64).ravel()
    code = _check_norm(norm)
    if r.size == 0:
        return np.zeros(0, np.int64)
    if np.any(np.diff(r) <= 0):
        raise ValidationError("radii must be strictly increasing")
    if theiler < 0:
        raise ValidationError("theiler window must be >= 0")
    order = np.argsort(x[:, 0], kind="stable")
    if x.shape[1] == 1 and theiler == 0:
        return _kernels.sorted_line_counts(np.ascontiguousarray(x[order, 0]), r)
    cols = np.ascontiguousarray(x[order].T)
    steps = np.diff(r)
    linear = r.size > 1 and np.allclose(steps, steps[0], rtol=1e-9, atol=0)
    return _kernels.sweep_counts(cols, order.astype(np.int64), r, linear, code, int(theiler))


def count_pairs_within(cloud, eps: float, norm: str = "max", theiler: int = 0,
                       backend: str = "sweep") -> int:
    """Exact count of pairs ``i < j`` with ``dist(x_i, x_j) < eps``."""
    if not eps > 0:
        raise ValidationError(f"eps must be > 0, got {eps}")
    if backend == "sweep":
        return int(pair_counts(cloud, [eps], norm, theiler)[0])
    if backend == "kdtree":
        from scipy.spatial import cKDTree

        if theiler:
            raise ValidationError("the kd-tree backend does not support a Theiler window")
        x = as_cloud(cloud)
        p = np.inf if _check_norm(norm) == _kernels.NORM_MAX else 2
        tree = cKDTree(x)
        # cKDTree counts ordered pairs (self-pairs included) with d <= r
        r = np.nextafter(float(eps), 0.0)
        ordered = int(tree.count_neighbors(tree, r, p=p))
        return (ordered - x.shape[0]) // 2
    raise ValidationError(f"unknown backend {backend!r}")


def n_eligible_pairs(n_points: int, theiler: int = 0) -> int:
    # pairs with |i - j| > theiler
    m = n_points - theiler - 1
    return m * (m + 1) // 2 if m > 0 else 0


def correlation_sum(cloud, eps: float, norm: str = "max", theiler: int = 0) -> float:
    x = as_cloud(cloud)
    total = n_eligible_pairs(x.shape[0], theiler)
    if total == 0:
        raise ValidationError("Theiler window excludes every pair")
    return count_pairs_within(x, eps, norm, theiler) / total


def correlation_curve(cloud, grid: RadiusGrid = DEFAULT_GRID, norm: str = "max",
                      theiler: int = 0) -> CorrSumCurve:
    """``(ln r, ln C(r))`` over the grid; radii with no pairs are dropped."""
    x = as_cloud(cloud)
    radii = grid.radii
    counts = pair_counts(x, radii, norm, theiler)
    total = n_eligible_pairs(x.shape[0], theiler)
    keep = counts > 0
    if total == 0 or not keep.any():
        raise EmptyCurveError(
            f"no pair closer than any radius in [{grid.eps_min}, {grid.eps_max}) "
            f"for a cloud of {x.shape[0]} points in {x.shape[1]} dimensions"
        )
    ln_c = np.log(counts[keep] / total)
    return CorrSumCurve(np.log(radii[keep]), ln_c, int((~keep).sum()), radii[keep], counts[keep])


def _ols(x: np.ndarray, y: np.ndarray):
    xm, ym = x.mean(), y.mean()
    dx = x - xm
    sxx = float(dx @ dx)
    if sxx <= 0.0:
        raise DegenerateAbscissaError("all ln(eps) values are identical; slope undefined")
    slope = float(dx @ (y - ym)) / sxx
    intercept = float(ym - slope * xm)
    resid = y - (intercept + slope * x)
    return slope, intercept, float(resid @ resid)


def select_linear_region(curve: CorrSumCurve, min_points: int = 6) -> tuple[int, int]:
    """Index range ``[a, b)`` of the straightest stretch of the curve.

    Every window with at least ``min_points`` points is scored by its RMS fit
    residual divided by the squared ln-eps span, a scale-free curvature
    measure; the lowest score wins and ties go to the longer window.
    """
    x, y = curve.ln_eps, curve.ln_c
    n = x.size
    if n <= min_points:
        return 0, n
    best = None
    for a in range(n - min_points + 1):
        for b in range(a + min_points, n + 1):
            xs, ys = x[a:b], y[a:b]
            span = xs[-1] - xs[0]
            if span <= 0:
                continue
            _, _, rss = _ols(xs, ys)
            score = np.sqrt(rss / (b - a)) / span**2
            key = (score, -(b - a), a)
            if best is None or key < best[0]:
                best = (key, a, b)
    if best is None:
        return 0, n
    return best[1], best[2]


def estimate_d2(curve: CorrSumCurve, region: str = "full", min_points: int = 6) -> DimEstimate:
    """Least-squares slope of ``ln C`` against ``ln eps``.

    ``region="full"`` regresses over every retained point; ``region="auto"``
    restricts the fit to :func:`select_linear_region`.
    """
    n = curve.ln_eps.size
    if n < 2:
        raise EstimationError(f"need at least 2 curve points to fit a slope, got {n}")
    if region == "full":
        a, b = 0, n
    elif region == "auto":
        a, b = select_linear_region(curve, min_points)
    else:
        raise ValidationError(f"region must be 'full' or 'auto', got {region!r}")
    slope, intercept, rss = _ols(curve.ln_eps[a:b], curve.ln_c[a:b])
    return DimEstimate(max(slope, 0.0), intercept, rss, b - a, a)


@dataclass(frozen=True)
class CorrDimConfig:
    """Everything that determines a D2 estimate apart from the data."""

    grid: RadiusGrid = DEFAULT_GRID
    norm: str = "max"
    theiler: int = 0
    region: str = "full"
    min_region_points: int = 6

    def __post_init__(self):
        _check_norm(self.norm)
        if self.theiler < 0:
            raise ValidationError("theiler window must be >= 0")
        if self.region not in ("full", "auto"):
            raise ValidationError(f"region must be 'full' or 'auto', got {self.region!r}")

    def curve(self, cloud) -> CorrSumCurve:
        return correlation_curve(cloud, self.grid, self.norm, self.theiler)

    def estimate(self, cloud) -> DimEstimate:
        return estimate_d2(self.curve(cloud), self.region, self.min_region_points)

    def to_dict(self) -> dict:
        return {"grid": self.grid.to_dict(), "norm": self.norm, "theiler": self.theiler,
                "region": self.region, "min_region_points": self.min_region_points}

    @classmethod
    def from_dict(cls, d: dict) -> "CorrDimConfig":
        d = dict(d)
        grid = d.pop("grid", None)
        return cls(grid=RadiusGrid(**grid) if grid else DEFAULT_GRID, **d)


def correlation_dimension(cloud, config: CorrDimConfig | None = None) -> float:
    return (config or CorrDimConfig()).estimate(cloud).d2
