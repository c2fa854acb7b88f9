"""CSV and JSON exchange formats for panels, clouds and results."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .dynamics import TimeSeriesPanel
from .errors import InputOutputError, ValidationError


def panel_to_csv(panel: TimeSeriesPanel) -> str:
    """``time,node_0_d0,...`` with one row per time step."""
    n, t, d = panel.values.shape
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["time"] + [f"node_{i}_d{q}" for i in range(n) for q in range(d)])
    flat = panel.values.transpose(1, 0, 2).reshape(t, n * d)
    for k in range(t):
        w.writerow([k] + [repr(float(v)) for v in flat[k]])
    return out.getvalue()


def panel_from_csv(text: str) -> TimeSeriesPanel:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ValidationError("panel CSV is empty")
    header = rows[0]
    if not header or header[0] != "time":
        raise ValidationError("panel CSV must start with a 'time' column")
    cols = []
    for name in header[1:]:
        try:
            node, dim = name.removeprefix("node_").split("_d")
            cols.append((int(node), int(dim)))
        except ValueError:
            raise ValidationError(f"bad panel column name {name!r}") from None
    if not cols:
        raise ValidationError("panel CSV has no node columns")
    n = max(c[0] for c in cols) + 1
    d = max(c[1] for c in cols) + 1
    if sorted(cols) != [(i, q) for i in range(n) for q in range(d)]:
        raise ValidationError("panel CSV columns must cover node_i_dq for every node and dim")
    try:
        data = np.array([[float(v) for v in r[1:]] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise ValidationError(f"non-numeric panel value: {exc}") from None
    if data.ndim != 2 or data.shape[1] != len(cols):
        raise ValidationError("ragged panel CSV")
    values = np.empty((n, data.shape[0], d))
    for c, (i, q) in enumerate(cols):
        values[i, :, q] = data[:, c]
    return TimeSeriesPanel(values)


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".json")


def write_text(path, text: str) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise InputOutputError(f"cannot write {path}: {exc}") from exc


def read_text(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputOutputError(f"cannot read {path}: {exc}") from exc


def write_json(path, obj) -> None:
    write_text(path, json.dumps(obj, indent=1) + "\n")


def save_panel(panel: TimeSeriesPanel, path, extra: dict | None = None) -> Path:
    """Write the panel CSV plus a JSON sidecar holding its metadata."""
    write_text(path, panel_to_csv(panel))
    meta = dict(panel.metadata)
    if extra:
        meta.update(extra)
    side = sidecar_path(path)
    write_json(side, meta)
    return side


def load_panel(path) -> TimeSeriesPanel:
    panel = panel_from_csv(read_text(path))
    side = sidecar_path(path)
    if side.exists():
        try:
            panel.metadata = json.loads(side.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputOutputError(f"cannot read metadata {side}: {exc}") from exc
    return panel


def load_cloud(path) -> np.ndarray:
    """A point cloud CSV: one point per row, optional non-numeric header row."""
    rows = [r for r in csv.reader(io.StringIO(read_text(path))) if r]
    if rows:
        try:
            [float(v) for v in rows[0]]
        except ValueError:
            rows = rows[1:]
    try:
        x = np.array([[float(v) for v in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise ValidationError(f"non-numeric cloud value: {exc}") from None
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValidationError("point cloud CSV needs at least two rows of equal length")
    return x
