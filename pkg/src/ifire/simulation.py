"""Event-driven simulation of the full hybrid system.

The flow runs until the first oscillator reaches its threshold; the firing
oscillators reset, everyone else receives one pulse (with absorption), and
the cycle repeats.  The result is a :class:`FiringLog`, from which cluster
structure, synchronization time and theorem audits are derived.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import flow as _flow
from .firing_map import FiringMap, MapError, classify, perturbation_bound, sync_window
from .flow import DEFAULT_CONFIG, IntegrationError, IntegratorConfig, exact_propagator, next_threshold_hit
from .model import (
    DOMAIN_TOL,
    DomainError,
    EnsembleModel,
    State,
    apply_firing,
    make_catalog_model,
    random_initial_state,
    validate,
)

__all__ = [
    "FiringEvent",
    "FiringLog",
    "ClusterPartition",
    "SimulationError",
    "run",
    "detect_clusters",
    "sync_index",
    "sync_time",
    "EnsembleReport",
    "replicate_ensemble_experiment",
    "StepAudit",
    "AuditReport",
    "audit_theorem",
    "detect_period",
    "worker_count",
    "parallel_map",
]

DEFAULT_SNAPSHOTS = (1, 21, 42, 63)


class SimulationError(RuntimeError):
    """A flow-engine failure, tagged with the event index where it happened."""

    def __init__(self, index: int, cause: Exception):
        super().__init__(f"event {index}: {cause}")
        self.index = index
        self.cause = cause


@dataclass(frozen=True)
class FiringEvent:
    """One system firing.

    ``firers`` lists initiators first and absorbed oscillators after, each
    group ascending.  ``pre_state`` is the state just before the jump.
    """

    index: int
    t: float
    firers: tuple[int, ...]
    initiators: tuple[int, ...]
    pre_state: np.ndarray = field(repr=False)
    post_state: np.ndarray = field(repr=False)


@dataclass
class FiringLog:
    events: list[FiringEvent]
    model: EnsembleModel
    initial_state: State
    config: IntegratorConfig
    stop_reason: str = ""

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def __getitem__(self, k):
        return self.events[k]

    @property
    def times(self) -> np.ndarray:
        return np.array([e.t for e in self.events])

    def all_fire(self, k: int) -> bool:
        return len(self.events[k].firers) == self.model.n

    def co_fired(self) -> bool:
        """True when some event had more than one firer."""
        return any(len(e.firers) > 1 for e in self.events)


@dataclass(frozen=True)
class ClusterPartition:
    blocks: tuple[tuple[int, ...], ...]
    as_of: float

    @property
    def count(self) -> int:
        return len(self.blocks)


# ----------------------------------------------------------------------------
# run
# ----------------------------------------------------------------------------

def _default_horizon(model: EnsembleModel, config: IntegratorConfig) -> float:
    try:
        return 50.0 * _flow.natural_period(model.flow, config)
    except IntegrationError:
        return math.inf


def run(model: EnsembleModel, x0: Sequence[float], t_max: float | None = None,
        max_firings: int | None = None, config: IntegratorConfig = DEFAULT_CONFIG,
        method: str = "auto", t0: float = 0.0,
        until: Callable[[list[FiringEvent]], bool] | None = None) -> FiringLog:
    """Simulate from ``x0`` until ``t_max``, ``max_firings`` events or ``until(events)``.

    Coordinates of ``x0`` equal to 0 are taken to have fired at ``t0``: the
    run opens with that firing (their pulse is delivered at ``t0``) so that
    ``x0 = (0, v)`` reproduces the pair setting of the firing map.  Without
    explicit limits the run stops after 200 events or ``50 T``.

    ``method`` selects ``"rk"`` (adaptive integration), ``"exact"`` (closed
    form flow, separable models only) or ``"auto"`` (exact when possible).
    """
    if t_max is None and max_firings is None:
        max_firings, t_max = 200, t0 + _default_horizon(model, config)
    t_max = math.inf if t_max is None else t_max
    max_firings = math.inf if max_firings is None else max_firings

    x = np.array(x0, dtype=float)
    if x.shape != (model.n,):
        raise ValueError(f"x0 has shape {x.shape}, model has n={model.n}")
    if not model.in_domain(x):
        raise DomainError(f"x0 outside domain: {x}")
    if method not in ("auto", "rk", "exact"):
        raise ValueError(f"unknown method {method!r}")
    prop = None if method == "rk" else exact_propagator(model)
    if method == "exact" and prop is None:
        raise ValueError("exact propagation needs a separable model")

    speed = float(np.max(np.abs(model.rhs(np.ones(model.n)))))
    tol = DOMAIN_TOL + 2.0 * config.simultaneity_window * max(speed, model.flow.upper_bound)
    initial = State(t0, x)
    events: list[FiringEvent] = []

    def fire(st: State, hitters):
        post, fired = apply_firing(model, st, hitters, tol)
        initiators = tuple(sorted(int(h) for h in hitters))
        events.append(FiringEvent(len(events), st.t, fired, initiators, st.x, post.x))
        return post

    state = initial
    zeros = np.flatnonzero(x == 0.0)
    if zeros.size and max_firings > 0:
        pre = x.copy()
        pre[zeros] = model.threshold(x)[zeros]
        state = fire(State(t0, pre), zeros)

    reason = "max_firings"
    while len(events) < max_firings:
        if until is not None and until(events):
            reason = "until"
            break
        try:
            hit = prop.next_hit(state, config) if prop is not None else next_threshold_hit(model, state, config)
        except (IntegrationError, DomainError) as exc:
            raise SimulationError(len(events), exc) from exc
        if hit.t > t_max:
            reason = "t_max"
            break
        state = fire(State(hit.t, hit.x), hit.hitters)
    return FiringLog(events, model, initial, config, reason)


# ----------------------------------------------------------------------------
# clusters and synchrony
# ----------------------------------------------------------------------------

def detect_clusters(log: FiringLog, window: int = 2, upto: int | None = None) -> ClusterPartition:
    """Group oscillators that fired together over the last ``window`` events.

    Only the first ``upto`` events are considered (all by default).  Each
    oscillator's signature is the set of events in the window in which it
    fired; one that was silent throughout falls back to its most recent
    firing.  Oscillators share a block iff their signatures coincide, so a
    block is a group that co-fires at every event in which any member fires.
    Oscillators that never fired are singletons.
    """
    if window < 1:
        raise ValueError("window must be positive")
    events = log.events[: len(log.events) if upto is None else upto]
    n = log.model.n
    start = max(0, len(events) - window)
    sig: dict[int, tuple] = {}
    last: dict[int, int] = {}
    for e in events:
        for i in e.firers:
            last[i] = e.index
    for i in range(n):
        in_window = tuple(e.index for e in events[start:] if i in e.firers)
        if in_window:
            sig[i] = in_window
        elif i in last:
            sig[i] = (last[i],)
        else:
            sig[i] = ("never", i)
    groups: dict[tuple, list[int]] = {}
    for i in range(n):
        groups.setdefault(sig[i], []).append(i)
    blocks = tuple(sorted(tuple(g) for g in groups.values()))
    as_of = events[-1].t if events else log.initial_state.t
    return ClusterPartition(blocks, as_of)


def sync_index(log: FiringLog, persistence: int = 3) -> int | None:
    """Index of the first event that starts ``persistence`` consecutive all-fire events."""
    if persistence < 1:
        raise ValueError("persistence must be positive")
    run_len = 0
    for k in range(len(log.events)):
        run_len = run_len + 1 if log.all_fire(k) else 0
        if run_len == persistence:
            return k - persistence + 1
    return None


def sync_time(log: FiringLog, persistence: int = 3) -> float | None:
    """Time of the first all-fire event that persists ``persistence`` events; None if never."""
    k = sync_index(log, persistence)
    return None if k is None else log.events[k].t


def detect_period(log: FiringLog, max_period: int = 4, tol: float = 1e-8, tail: int = 10) -> int | None:
    """Smallest ``p <= max_period`` such that, over the last ``tail`` events,
    post-firing states and firer sets repeat with period ``p``."""
    ev = log.events
    for p in range(1, max_period + 1):
        if len(ev) < tail + p:
            break
        if all(ev[k].firers == ev[k - p].firers and np.max(np.abs(ev[k].post_state - ev[k - p].post_state)) <= tol
               for k in range(len(ev) - tail, len(ev))):
            return p
    return None


# ----------------------------------------------------------------------------
# worker pool
# ----------------------------------------------------------------------------

def worker_count() -> int:
    """Pool size: ``IFIRE_THREADS`` if set, else the CPU count."""
    cap = os.environ.get("IFIRE_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap))) if int(cap) > 0 else 1
        except ValueError:
            pass
    return n


def parallel_map(fn: Callable, items: Iterable, workers: int | None = None) -> list:
    """Ordered map over independent tasks; sequential with one worker."""
    items = list(items)
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ----------------------------------------------------------------------------
# the 100-oscillator experiment
# ----------------------------------------------------------------------------

@dataclass
class EnsembleReport:
    seed: int
    n: int
    epsilon: float
    snapshots: dict[int, np.ndarray]
    cluster_counts: dict[int, int]
    missing_snapshots: list[int]
    sync_index: int | None
    sync_time: float | None
    events: int
    persisted: bool
    checked_after_sync: int
    log: FiringLog = field(repr=False)

    @property
    def synchronized(self) -> bool:
        return self.sync_index is not None

    @property
    def counts_nonincreasing(self) -> bool:
        c = [self.cluster_counts[k] for k in sorted(self.cluster_counts)]
        return all(b <= a for a, b in zip(c, c[1:]))

    def to_dict(self) -> dict:
        return {
            "seed": self.seed, "n": self.n, "epsilon": self.epsilon,
            "snapshots": sorted(self.snapshots), "missing_snapshots": self.missing_snapshots,
            "cluster_counts": {str(k): v for k, v in sorted(self.cluster_counts.items())},
            "counts_nonincreasing": self.counts_nonincreasing,
            "sync_index": self.sync_index, "sync_event": None if self.sync_index is None else self.sync_index + 1,
            "sync_time": self.sync_time, "events": self.events,
            "persisted": self.persisted, "checked_after_sync": self.checked_after_sync,
        }


def replicate_ensemble_experiment(seed: int, n: int = 100, epsilon: float = 0.08,
                                  snapshots: Sequence[int] = DEFAULT_SNAPSHOTS, max_firings: int = 200,
                                  persistence: int = 3, extra: int = 50, window: int = 2,
                                  config: IntegratorConfig = DEFAULT_CONFIG,
                                  model: EnsembleModel | None = None) -> EnsembleReport:
    """Random leaky ensemble from uniform start values.

    Runs until ``persistence + extra`` trailing all-fire events (synchrony
    followed by ``extra`` further events to check it persists) or until
    ``max_firings`` events pass without synchrony.  Snapshot ``k`` is the
    state just before the ``k``-th system firing, with the cluster count
    over the events preceding it.
    """
    if model is None:
        model = make_catalog_model("random_leaky_ensemble", n=n, epsilon=epsilon, seed=seed)
    report = validate(model)
    if not report.ok:
        raise DomainError(f"model fails validation:\n{report}")
    x0 = random_initial_state(model.n, seed)
    need = persistence + extra

    def until(events):
        k = len(events)
        if k >= need and all(len(e.firers) == model.n for e in events[-need:]):
            return True
        # give up when no synchrony has started by the firing budget
        if k >= max_firings:
            tail = 0
            for e in reversed(events):
                if len(e.firers) != model.n:
                    break
                tail += 1
            return tail == 0 or k >= max_firings + need
        return False

    log = run(model, x0, max_firings=max_firings + need, config=config, until=until)
    snaps, counts, missing = {}, {}, []
    for k in snapshots:
        if 1 <= k <= len(log):
            snaps[k] = np.array(log[k - 1].pre_state)
            counts[k] = detect_clusters(log, window, upto=k - 1).count
        else:
            missing.append(k)
    k_sync = sync_index(log, persistence)
    if k_sync is not None and k_sync >= max_firings:
        k_sync = None
    after = [] if k_sync is None else list(range(k_sync, len(log)))
    persisted = k_sync is not None and all(log.all_fire(k) for k in after)
    return EnsembleReport(
        seed=int(seed), n=model.n, epsilon=model.epsilon, snapshots=snaps, cluster_counts=counts,
        missing_snapshots=missing, sync_index=k_sync,
        sync_time=None if k_sync is None else log[k_sync].t,
        events=len(log), persisted=persisted,
        checked_after_sync=max(0, len(after) - persistence), log=log,
    )


# ----------------------------------------------------------------------------
# theorem audit
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class StepAudit:
    """One step ``u_i -> u_{i+1}`` of the alternating pair sequence.

    ``ok`` allows ``tol`` of numerical slack on top of the bound (the
    bound vanishes for an identical pair, the simulation does not).
    """

    index: int
    u: float
    u_next: float
    predicted: float
    deviation: float
    bound: float
    tol: float = 0.0

    @property
    def strict(self) -> bool:
        return self.deviation <= self.bound

    @property
    def ok(self) -> bool:
        return self.deviation <= self.bound + self.tol


@dataclass
class AuditReport:
    regions: list[int | None]
    max_k: int | None
    window: tuple[float, float] | None
    sync_time: float | None
    in_window: bool | None
    steps: list[StepAudit]
    unclassified: list[int]
    log: FiringLog = field(repr=False)

    @property
    def bound_ok(self) -> bool:
        return all(s.ok for s in self.steps)

    @property
    def max_deviation(self) -> float:
        return max((s.deviation for s in self.steps), default=0.0)

    def to_dict(self) -> dict:
        return {
            "regions": self.regions, "max_k": self.max_k,
            "window": None if self.window is None else list(self.window),
            "sync_time": self.sync_time, "in_window": self.in_window,
            "unclassified": self.unclassified, "bound_ok": self.bound_ok,
            "max_deviation": self.max_deviation,
            "steps": [
                {"index": s.index, "u": s.u, "u_next": s.u_next, "L_u": s.predicted,
                 "deviation": s.deviation, "phi": s.bound}
                for s in self.steps
            ],
        }


def _pair_constants(model: EnsembleModel):
    mu_i = np.asarray(model.coupling.bounds, dtype=float)
    xi = np.asarray(model.thresholds.bounds, dtype=float)
    eps_i = np.abs(np.asarray(model.jump.eps_i, dtype=float))
    return mu_i, xi, eps_i


def audit_theorem(model: EnsembleModel, x0: Sequence[float], L: FiringMap, T: float, T_tilde: float,
                  persistence: int = 3, config: IntegratorConfig = DEFAULT_CONFIG,
                  method: str = "auto", max_firings: int = 200, slack: float | None = None) -> AuditReport:
    """Compare a simulation against the region/timing predictions and, for
    pairs, the per-step perturbation bound.

    ``x0`` must contain at least one zero (a firing at ``t0``).  The other
    coordinates are classified into regions ``S_k``; the predicted window is
    the pair window for ``n = 2`` and the ensemble window otherwise.  For a
    pair, every step between consecutive single-oscillator firings is
    checked against ``|u_{i+1} - L(u_i)| <= Phi``.  The run stops once
    ``persistence`` consecutive all-fire events have occurred.
    """
    x0 = np.asarray(x0, dtype=float)
    if not np.any(x0 == 0.0):
        raise ValueError("x0 must contain a zero coordinate (a firing at t0)")
    slack = config.event_tol if slack is None else slack
    regions, unclassified = [], []
    for i, v in enumerate(x0):
        if v == 0.0:
            regions.append(0)
            continue
        k = classify(L, float(min(v, 1.0)))
        regions.append(k)
        if k is None:
            unclassified.append(i)

    def settled(events):
        return len(events) >= persistence and all(len(e.firers) == model.n for e in events[-persistence:])

    log = run(model, x0, max_firings=max_firings, config=config, method=method, until=settled)
    t_sync = sync_time(log, persistence)
    max_k = window = in_window = None
    if not unclassified:
        max_k = max(regions)
        window = sync_window(max_k, T, T_tilde, ensemble=model.n > 2)
        t0 = log.initial_state.t
        if t_sync is not None:
            in_window = window[0] - slack <= t_sync - t0 <= window[1] + slack
        else:
            in_window = False

    steps = _pair_steps(model, L, log) if model.n == 2 else []
    return AuditReport(regions, max_k, window, t_sync, in_window, steps, unclassified, log)


def _pair_steps(model: EnsembleModel, L: FiringMap, log: FiringLog) -> list[StepAudit]:
    flow, eps = model.flow, model.epsilon
    mu_i, xi, eps_i = _pair_constants(model)
    mu, M, ell = flow.lower_bound, flow.upper_bound, flow.lipschitz
    out = []
    for a, b in zip(log.events, log.events[1:]):
        if len(a.firers) != 1 or len(b.firers) != 1 or a.firers == b.firers:
            break
        l_ = a.firers[0]
        r = 1 - l_
        u, u_next = float(a.pre_state[r]), float(b.pre_state[l_])
        if u + eps >= 1.0:
            break
        t_bar = a.t + _flow.free_hit_time(flow, u + eps, log.config)
        phi = perturbation_bound(eps, mu_i[r], mu_i[l_], xi[r], ell, mu, M, a.t, [], max(t_bar, b.t),
                                 jump_offset=eps_i[r])
        pred = float(L(u))
        out.append(StepAudit(a.index, u, u_next, pred, abs(u_next - pred), phi.phi, log.config.event_tol))
    return out
