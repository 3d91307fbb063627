"""Model configuration files and plot-ready output files.

A model file is a JSON object::

    {"model": "leaky", "params": {"S": 2, "gamma": 1, "epsilon": 0.2},
     "initial_state": [0, 0.1], "integrator": {"rel_tol": 1e-10}}

Only catalog models are expressible (callables do not serialize).  Unknown
keys are rejected with the offending field named.  All numbers written by
this module use 12 significant digits.
"""
from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .flow import DEFAULT_CONFIG, IntegratorConfig
from .model import EnsembleModel, ModelError, make_catalog_model

__all__ = [
    "ConfigError",
    "ModelConfig",
    "load_model_config",
    "parse_model_config",
    "dump_model_config",
    "fmt",
    "write_json",
    "write_map_csv",
    "write_cobweb_csv",
    "write_log_csv",
    "read_log_csv",
    "write_snapshot_csv",
    "write_regions_csv",
]

_COMMON = {"epsilon", "eps_i", "n"}
_LEAKY = {"S", "gamma", "kappa"}
ALLOWED_PARAMS = {
    "quadratic": _COMMON | {"c"},
    "leaky": _COMMON | _LEAKY,
    "peskin": _COMMON | _LEAKY,
    "piecewise_linear": _COMMON,
    "example4": _COMMON,
    "cross_coupled": _COMMON | _LEAKY | {"beta"},
    "mean_field": _COMMON | _LEAKY | {"beta"},
    "perturbed_leaky": _COMMON | _LEAKY | {"a", "b", "xi"},
    "random_leaky_ensemble": _COMMON | {"seed"},
}
_TOP_KEYS = {"model", "params", "initial_state", "integrator"}
_INTEGRATOR_KEYS = {"rel_tol", "abs_tol", "max_step", "event_tol", "simultaneity_window", "horizon"}


class ConfigError(ValueError):
    """Malformed model file; the message names the line or field."""


@dataclass(frozen=True)
class ModelConfig:
    kind: str
    params: dict[str, Any]
    initial_state: tuple[float, ...] | None = None
    integrator: dict[str, float] = field(default_factory=dict)

    def build(self) -> EnsembleModel:
        try:
            return make_catalog_model(self.kind, **self.params)
        except (ModelError, TypeError, ValueError) as exc:
            raise ConfigError(f"params: {exc}") from exc

    def integrator_config(self, base: IntegratorConfig = DEFAULT_CONFIG) -> IntegratorConfig:
        return base.replace(**self.integrator) if self.integrator else base

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"model": self.kind, "params": self.params}
        if self.initial_state is not None:
            out["initial_state"] = list(self.initial_state)
        if self.integrator:
            out["integrator"] = dict(self.integrator)
        return out

    @property
    def hash(self) -> str:
        """SHA-256 of the canonical JSON form of model kind and parameters."""
        blob = json.dumps({"model": self.kind, "params": self.params}, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _number(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    return value


def parse_model_config(obj: Any) -> ModelConfig:
    if not isinstance(obj, dict):
        raise ConfigError("top level: expected a JSON object")
    unknown = set(obj) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown field(s) {sorted(unknown)}; allowed: {sorted(_TOP_KEYS)}")
    kind = obj.get("model")
    if kind not in ALLOWED_PARAMS:
        raise ConfigError(f"model: unknown kind {kind!r}; choose from {sorted(ALLOWED_PARAMS)}")
    params = obj.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("params: expected a JSON object")
    bad = set(params) - ALLOWED_PARAMS[kind]
    if bad:
        raise ConfigError(f"params: unknown field(s) {sorted(bad)} for model {kind!r}; "
                          f"allowed: {sorted(ALLOWED_PARAMS[kind])}")
    for key, value in params.items():
        if isinstance(value, list):
            for j, item in enumerate(value):
                _number(item, f"params.{key}[{j}]")
        else:
            _number(value, f"params.{key}")
    x0 = obj.get("initial_state")
    if x0 is not None:
        if not isinstance(x0, list):
            raise ConfigError("initial_state: expected a list of numbers")
        x0 = tuple(float(_number(v, f"initial_state[{j}]")) for j, v in enumerate(x0))
    integ = obj.get("integrator", {})
    if not isinstance(integ, dict):
        raise ConfigError("integrator: expected a JSON object")
    bad = set(integ) - _INTEGRATOR_KEYS
    if bad:
        raise ConfigError(f"integrator: unknown field(s) {sorted(bad)}")
    for key, value in integ.items():
        _number(value, f"integrator.{key}")
    cfg = ModelConfig(kind, dict(params), x0, dict(integ))
    try:
        cfg.integrator_config()
    except ValueError as exc:
        raise ConfigError(f"integrator: {exc}") from exc
    return cfg


def load_model_config(path: str | Path) -> ModelConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    try:
        return parse_model_config(obj)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def dump_model_config(cfg: ModelConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")


# ----------------------------------------------------------------------------
# output files
# ----------------------------------------------------------------------------

def fmt(x) -> str:
    """Number at 12 significant digits; integers and strings pass through."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    return str(x)


def _round(obj):
    if isinstance(obj, dict):
        return {str(k): _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_round(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        # JSON has no infinities; spell them out
        return float(f"{x:.12g}") if np.isfinite(x) else str(x)
    return obj


def write_json(obj: Any, path: str | Path) -> None:
    Path(path).write_text(json.dumps(_round(obj), indent=2, sort_keys=True) + "\n")


def _write_rows(path, header: Sequence[str], rows: Iterable[Sequence], preamble: str | None = None):
    with open(path, "w", newline="") as fh:
        if preamble is not None:
            fh.write(preamble + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])


def write_map_csv(L, path, grid: int = 1001) -> None:
    """Columns v, L(v), L^2(v), L^3(v) on a uniform grid of [0, 1]."""
    v = np.linspace(0.0, 1.0, grid)
    rows = []
    for x in v:
        y1 = L(x)
        y2 = L(y1)
        rows.append((x, y1, y2, L(y2)))
    _write_rows(path, ("v", "L", "L2", "L3"), rows)


def write_cobweb_csv(L, path, v0: float, steps: int = 50) -> None:
    """Vertices of the cobweb path (v0, 0), (v0, L v0), (L v0, L v0), ..."""
    rows = [(0, v0, 0.0)]
    x = v0
    for k in range(steps):
        y = L(x)
        rows.append((2 * k + 1, x, y))
        rows.append((2 * k + 2, y, y))
        x = y
    _write_rows(path, ("vertex", "x", "y"), rows)


def write_log_csv(log, path, header: dict | None = None) -> None:
    """One row per event with the post-firing state; the first line is a
    ``#``-prefixed JSON header."""
    head = dict(header or {})
    head.setdefault("n", log.model.n)
    head.setdefault("events", len(log))
    head.setdefault("config", {k: getattr(log.config, k) for k in sorted(_INTEGRATOR_KEYS)})
    n = log.model.n
    rows = [(e.index, e.t, ";".join(str(i) for i in e.firers), *e.post_state) for e in log]
    _write_rows(path, ("event_index", "t", "firers", *[f"x_{i}" for i in range(n)]), rows,
                preamble="# " + json.dumps(_round(head), sort_keys=True))


def read_log_csv(path) -> tuple[dict, list[dict]]:
    """Inverse of :func:`write_log_csv` (header, rows as dicts)."""
    with open(path) as fh:
        first = fh.readline()
        header = json.loads(first[2:]) if first.startswith("# ") else {}
        rows = []
        for r in csv.DictReader(fh):
            firers = tuple(int(i) for i in r.pop("firers").split(";") if i)
            rec = {"event_index": int(r.pop("event_index")), "t": float(r.pop("t")), "firers": firers}
            rec["x"] = np.array([float(r[k]) for k in sorted(r, key=lambda s: int(s[2:]))])
            rows.append(rec)
    return header, rows


def write_snapshot_csv(x: np.ndarray, path) -> None:
    """Sorted coordinates: rank, oscillator index, value."""
    order = np.argsort(x, kind="stable")
    _write_rows(path, ("rank", "oscillator_index", "x"), [(r, int(i), x[i]) for r, i in enumerate(order)])


def write_regions_csv(partition, path) -> None:
    rows = [(k, iv.lo, iv.hi, iv.lo_closed, iv.hi_closed) for k, iv in partition.regions]
    rows.append(("core", partition.core.lo, partition.core.hi, False, False))
    _write_rows(path, ("k", "lo", "hi", "lo_closed", "hi_closed"), rows)
