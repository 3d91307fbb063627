"""The firing map ``L`` of a pair of identical oscillators and its analysis.

``L(v)`` takes the pre-pulse coordinate ``v`` of the non-firing oscillator
at one firing to the pre-pulse coordinate of the other oscillator at the
next firing.  On ``(0, 1 - eps)`` it is the core map; it is extended to
``[0, 1]`` by ``L(0) = eta`` and ``L = 0`` on ``[1 - eps, 1]``.

Besides construction (closed form for the catalog flows, or by integration
for any flow or two-oscillator model) this module provides the fixed point,
the 2-cycle bounding the non-synchronizing core, the backward sequence
``a_k`` and the synchronization regions ``S_k`` it delimits, timing windows,
the perturbation bound for non-identical pairs, and the reduction of
cooperative (type-K) ensembles to a two-oscillator system.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.stats import qmc

from . import flow as _flow
from .flow import DEFAULT_CONFIG, IntegratorConfig
from .model import CouplingSpec, EnsembleModel, FreeFlow, JumpSpec, ModelError, ThresholdSpec

__all__ = [
    "FiringMap",
    "MapError",
    "ConditionReport",
    "Period2",
    "ASequence",
    "Interval",
    "SyncPartition",
    "MapAnalysis",
    "PhiBound",
    "KamkeReport",
    "build_map_numeric",
    "build_map_closed",
    "map_for",
    "iterate",
    "check_conditions",
    "fixed_point",
    "period2_points",
    "a_sequence",
    "periodic_points",
    "sync_partition",
    "classify",
    "analyze",
    "sync_window",
    "perturbation_bound",
    "kamke_reduce",
    "kamke_check",
    "kamke_model",
    "reduced_pair_model",
    "reduced_pair_rhs",
]

_EPS = 4 * np.finfo(float).eps


class MapError(RuntimeError):
    """The map violates a condition an analysis step relies on."""


@dataclass(frozen=True, eq=False)
class FiringMap:
    """Firing map ``L`` on ``[0, 1]``.

    ``core`` evaluates the map on ``(0, 1 - epsilon)``; ``eta`` is its limit
    at ``0+``.  Calling the object evaluates the extended map and accepts
    scalars or arrays.
    """

    epsilon: float
    core: Callable[[float], float] = field(repr=False)
    eta: float
    provenance: str
    params: dict = field(default_factory=dict)

    def __call__(self, v):
        if np.ndim(v) == 0:
            return self._scalar(float(v))
        return np.array([self._scalar(float(x)) for x in np.ravel(v)]).reshape(np.shape(v))

    def _scalar(self, v: float) -> float:
        if v <= 0.0:
            return self.eta
        if v >= 1.0 - self.epsilon:
            return 0.0
        return self.core(v)

    def inverse(self, a: float) -> float:
        """The ``v`` in ``[0, 1 - epsilon]`` with ``L(v) = a``, for ``0 <= a <= eta``."""
        if not 0.0 <= a <= self.eta:
            raise MapError(f"{a} is outside the range [0, {self.eta}] of L")
        if a == self.eta:
            return 0.0
        if a == 0.0:
            return 1.0 - self.epsilon
        return brentq(lambda v: self._scalar(v) - a, 0.0, 1.0 - self.epsilon, xtol=1e-15, rtol=_EPS)

    @cached_property
    def fixed_point(self) -> float:
        return fixed_point(self)

    @cached_property
    def period2(self) -> "Period2":
        return period2_points(self)


# ----------------------------------------------------------------------------
# construction
# ----------------------------------------------------------------------------

def build_map_numeric(source: FreeFlow | EnsembleModel | Callable, epsilon: float,
                      config: IntegratorConfig = DEFAULT_CONFIG) -> FiringMap:
    """Firing map by direct integration.

    ``source`` is either a free flow ``f`` (two identical uncoupled
    oscillators), a two-oscillator :class:`EnsembleModel` whose flow may
    couple the pair, or a bare right-hand side ``y -> y'`` of a pair with
    unit thresholds.  Each evaluation starts the fired oscillator at 0 and
    its companion at ``v + epsilon``, integrates until the companion reaches
    its threshold, and returns the fired oscillator's coordinate there.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if isinstance(source, FreeFlow):
        fun, breakpoints = source, source.breakpoints

        def event(y):
            return y[1:] - 1.0
        label = f"numeric:{source.kind}"
    elif not isinstance(source, EnsembleModel):
        fun, breakpoints = source, ()

        def event(y):
            return y[1:] - 1.0
        label = "numeric:pair"
    else:
        if source.n != 2:
            raise ValueError("a model source must have exactly two oscillators")
        fun, breakpoints = source.rhs, source.flow.breakpoints

        def event(y):
            return y[1:] - source.threshold(y)[1:]
        label = f"numeric:{source.name}"

    def core(v: float) -> float:
        hit = _flow._first_crossing(fun, event, 0.0, np.array([0.0, v + epsilon]), config, breakpoints)
        return float(hit.x[0])

    lo, hi = core(1e-8), core(1e-7)
    if abs(lo - hi) > 1e-6:
        raise MapError(f"eta estimate not settled: L(1e-8)={lo}, L(1e-7)={hi}")
    # linear extrapolation from the two one-sided samples
    eta = lo - (hi - lo) / 9.0
    return FiringMap(float(epsilon), core, float(eta), label, {"config": config})


def _cross_coupled_core(S, gamma, beta, epsilon):
    lam1, lam2 = -gamma + beta, -gamma - beta
    kappa1 = -S / lam1
    period = math.log(S / (S - gamma)) / gamma
    s_hi = 5 * period

    def core(v):
        w = v + epsilon

        def miss(s):
            return 0.5 * (math.exp(lam1 * s) + math.exp(lam2 * s)) * w + kappa1 * (1 - math.exp(lam1 * s)) - 1.0

        if miss(s_hi) < 0:
            raise MapError(f"threshold time not bracketed in (0, {s_hi}) for v={v}")
        s = brentq(miss, 0.0, s_hi, xtol=1e-15, rtol=_EPS)
        return 1.0 - w * math.exp(lam2 * s)

    return core


def build_map_closed(kind: str, **params) -> FiringMap:
    """Closed-form firing map for the catalog models.

    ``quadratic``      (c, epsilon):               c (1 - w) / (c + w)
    ``leaky``          (kappa or S, gamma; epsilon): kappa (1 - w) / (kappa - w)
    ``piecewise_linear`` (epsilon):                three branches
    ``cross_coupled``  (S, gamma, beta, epsilon):  1 - w exp(lambda2 s), s implicit

    with ``w = v + epsilon``.  ``peskin`` and ``example4`` are aliases.
    """
    kind = {"peskin": "leaky", "example4": "piecewise_linear"}.get(kind, kind)
    eps = float(params["epsilon"])
    if not 0 < eps < 1:
        raise ModelError("epsilon must lie in (0, 1)")

    if kind == "quadratic":
        c = float(params["c"])
        if c <= 0:
            raise ModelError("c must be positive")

        def core(v):
            w = v + eps
            return c * (1 - w) / (c + w)
        info = {"c": c}
    elif kind == "leaky":
        kappa = float(params["kappa"]) if "kappa" in params else float(params["S"]) / float(params["gamma"])
        if kappa <= 1:
            raise ModelError("kappa must exceed 1")

        def core(v):
            w = v + eps
            return kappa * (1 - w) / (kappa - w)
        info = {"kappa": kappa}
    elif kind == "piecewise_linear":
        def core(v):
            w = v + eps
            if v <= 1 / 3 - eps:
                return 2 * (2 - 3 * w) / (4 - 3 * w)
            if v <= 2 / 3 - eps:
                return 1 - w
            return 4 / 3 * (1 - w) / (2 - w)
        info = {}
    elif kind == "cross_coupled":
        S, gamma, beta = float(params["S"]), float(params["gamma"]), float(params.get("beta", 0.0))
        if beta < 0 or beta >= gamma:
            raise ModelError("need 0 <= beta < gamma")
        if S / (gamma - beta) <= 1:
            raise ModelError("need kappa1 = S / (gamma - beta) > 1")
        core = _cross_coupled_core(S, gamma, beta, eps)
        info = {"S": S, "gamma": gamma, "beta": beta}
    else:
        raise ModelError(f"no closed-form map for {kind!r}")

    # every catalog formula extends continuously to v = 0
    return FiringMap(eps, core, float(core(0.0)), f"closed_form:{kind}", info)


def map_for(model: EnsembleModel, method: str = "auto", config: IntegratorConfig = DEFAULT_CONFIG) -> FiringMap:
    """Firing map of the identical pair underlying ``model``.

    ``"closed"`` uses a closed form (uncoupled catalog flows, or the
    two-oscillator mean-field model), ``"numeric"`` integrates, ``"auto"``
    prefers the closed form.  Per-oscillator (affine) perturbations and
    threshold offsets are ignored: the map is that of the identical core.
    A two-oscillator model with interaction coupling is integrated as is.
    """
    eps = model.epsilon
    closed = None
    if model.coupling.kind in ("none", "affine") and model.thresholds.is_constant and model.flow.has_closed_form:
        closed = dict(model.flow.params, kind=model.flow.kind, epsilon=eps)
    elif model.n == 2 and model.coupling.kind == "mean_field" and model.thresholds.kind == "none" \
            and model.flow.kind == "leaky":
        closed = dict(model.flow.params, beta=model.coupling.params["beta"], kind="cross_coupled", epsilon=eps)
    if method == "closed" or (method == "auto" and closed is not None):
        if closed is None:
            raise MapError(f"no closed-form map for model {model.name!r}")
        return build_map_closed(**closed)
    if method not in ("auto", "numeric"):
        raise ValueError(f"unknown method {method!r}")
    source = model if model.n == 2 and model.coupling.kind in ("mean_field", "custom") else model.flow
    return build_map_numeric(source, eps, config)


# ----------------------------------------------------------------------------
# analysis
# ----------------------------------------------------------------------------

def iterate(L: FiringMap, v: float, k: int) -> float:
    """``L^k(v)``; ``k = 0`` is the identity."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    for _ in range(k):
        v = L(v)
    return v


@dataclass(frozen=True)
class ConditionReport:
    A1: bool
    A2: bool
    A3: bool
    eta: float
    terminal: float

    @property
    def all(self) -> bool:
        return self.A1 and self.A2 and self.A3


def check_conditions(L: FiringMap, grid: int = 10_000) -> ConditionReport:
    """Strict decrease on a grid of the open interval, ``eta > 1 - eps``,
    and ``L -> 0`` at ``1 - eps`` (value at ``1 - eps - 1e-9`` below 1e-6)."""
    v = np.linspace(0.0, 1.0 - L.epsilon, grid + 2)[1:-1]
    vals = np.array([L.core(x) for x in v])
    terminal = L.core(1.0 - L.epsilon - 1e-9)
    return ConditionReport(
        A1=bool(np.all(np.diff(vals) < 0)),
        A2=bool(L.eta > 1.0 - L.epsilon),
        A3=bool(abs(terminal) <= 1e-6),
        eta=L.eta,
        terminal=float(terminal),
    )


def fixed_point(L: FiringMap, xtol: float = 1e-14) -> float:
    """Unique root of ``L(v) - v`` in ``(0, 1 - eps)``."""
    lo, hi = 0.0, 1.0 - L.epsilon
    if not (L(lo) - lo > 0 and L(hi) - hi < 0):
        raise MapError("L(v) - v does not change sign on [0, 1 - eps]")
    return brentq(lambda v: L(v) - v, lo, hi, xtol=xtol, rtol=_EPS)


@dataclass(frozen=True)
class ASequence:
    """Backward orbit ``a_0 = 0, a_1 = 1 - eps, a_{k+1} = L^{-1}(a_k)``.

    ``converged`` tells whether both parity subsequences settled to within
    the requested tolerance; ``stop_index`` is the first index that could
    not be computed (its predecessor lies outside the range of ``L``).
    """

    values: tuple[float, ...]
    converged: bool
    stop_index: int | None = None

    def __getitem__(self, k):
        return self.values[k]

    def __len__(self):
        return len(self.values)

    @property
    def even(self) -> np.ndarray:
        return np.array(self.values[0::2])

    @property
    def odd(self) -> np.ndarray:
        return np.array(self.values[1::2])


def a_sequence(L: FiringMap, K: int = 100_000, tol: float = 1e-12) -> ASequence:
    """Compute up to ``K`` terms of the backward orbit, stopping early once
    consecutive terms of equal parity differ by less than ``tol``."""
    a = [0.0, 1.0 - L.epsilon]
    while len(a) < K:
        prev = a[-1]
        if not 0.0 < prev < L.eta:
            return ASequence(tuple(a), False, len(a))
        a.append(L.inverse(prev))
        if len(a) >= 4 and abs(a[-1] - a[-3]) < tol and abs(a[-2] - a[-4]) < tol:
            return ASequence(tuple(a), True)
    return ASequence(tuple(a), False)


@dataclass(frozen=True)
class Period2:
    """Limits ``v**`` (even terms) and ``v_hat`` (odd terms) of the
    ``a``-sequence; ``degenerate`` when they collapse onto ``v*``."""

    v_star2: float
    v_hat: float
    v_star: float
    degenerate: bool
    residual: float


def period2_points(L: FiringMap, K: int = 100_000, tol: float = 1e-12) -> Period2:
    seq = a_sequence(L, K, tol)
    if seq.stop_index is not None:
        raise MapError(f"a-sequence left the range of L at index {seq.stop_index}")
    v_star = L.fixed_point
    v2, vh = float(seq.even[-1]), float(seq.odd[-1])
    residual = max(abs(L(L(v2)) - v2), abs(L(v2) - vh), abs(L(vh) - v2))
    degenerate = abs(v2 - v_star) < 1e-8
    if degenerate:
        v2 = vh = v_star
    return Period2(v2, vh, v_star, degenerate, float(residual))


def _edge(h, tol, outside, inside, iters=60):
    # bisect the boundary of {|h| <= tol} between an outside and an inside point
    for _ in range(iters):
        mid = 0.5 * (outside + inside)
        if abs(h(mid)) <= tol:
            inside = mid
        else:
            outside = mid
    return float(inside)


def periodic_points(L: FiringMap, grid: int = 20001, tol: float = 1e-10) -> list[tuple[float, float]]:
    """Points of period one or two in ``(0, 1 - eps)``, as closed intervals.

    Runs of grid points where ``|L^2(v) - v| <= tol`` become bands with
    edges refined by bisection; sign changes between grid points are refined
    by root finding into degenerate intervals ``(v, v)``.
    """
    v = np.linspace(0.0, 1.0 - L.epsilon, grid)[1:-1]

    def h(x):
        return L(L(x)) - x

    r = np.array([h(x) for x in v])
    flat = np.abs(r) <= tol
    out: list[tuple[float, float]] = []
    k = 0
    while k < len(v):
        if flat[k]:
            j = k
            while j + 1 < len(v) and flat[j + 1]:
                j += 1
            lo = _edge(h, tol, v[k - 1], v[k]) if k > 0 else float(v[k])
            hi = _edge(h, tol, v[j + 1], v[j]) if j + 1 < len(v) else float(v[j])
            out.append((lo, hi))
            k = j + 1
            continue
        if k + 1 < len(v) and not flat[k + 1] and r[k] * r[k + 1] < 0:
            root = brentq(h, v[k], v[k + 1], xtol=1e-15, rtol=_EPS)
            out.append((root, root))
        k += 1
    return out


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    lo_closed: bool = True
    hi_closed: bool = True

    def __contains__(self, v: float) -> bool:
        above = v >= self.lo if self.lo_closed else v > self.lo
        below = v <= self.hi if self.hi_closed else v < self.hi
        return above and below

    def __str__(self):
        return f"{'[' if self.lo_closed else '('}{self.lo:.12g}, {self.hi:.12g}{']' if self.hi_closed else ')'}"


@dataclass(frozen=True)
class SyncPartition:
    """Regions ``S_k`` of initial values synchronizing after exactly ``k``
    iterations, and the open core between the 2-cycle points."""

    regions: tuple[tuple[int, Interval], ...]
    core: Interval

    def region_of(self, v: float) -> int | None:
        for k, interval in self.regions:
            if v in interval:
                return k
        return None


def sync_partition(L: FiringMap, seq: ASequence | None = None) -> SyncPartition:
    """Build ``S_0 = [1-eps, 1]``, ``S_1 = [a_0, a_2]``, and for ``k >= 2``
    ``S_k = (a_{k-1}, a_{k+1}]`` (odd) or ``[a_{k+1}, a_{k-1})`` (even)."""
    seq = a_sequence(L) if seq is None else seq
    a = seq.values
    regions = [(0, Interval(1.0 - L.epsilon, 1.0))]
    if len(a) >= 3:
        regions.append((1, Interval(a[0], a[2])))
    for k in range(2, len(a) - 1):
        if k % 2:
            iv = Interval(a[k - 1], a[k + 1], lo_closed=False)
        else:
            iv = Interval(a[k + 1], a[k - 1], hi_closed=False)
        if iv.hi > iv.lo:
            regions.append((k, iv))
    try:
        p2 = L.period2
        core = Interval(p2.v_star2, p2.v_hat, False, False)
    except MapError:
        core = Interval(float(seq.even[-1]), float(seq.odd[-1]), False, False)
    return SyncPartition(tuple(regions), core)


def classify(L: FiringMap, v: float, k_max: int = 500, trap: float = 1e-9) -> int | None:
    """Smallest ``k <= k_max`` with ``L^k(v)`` in ``[1 - eps, 1]``.

    Returns ``None`` (no synchronization) when the budget runs out or the
    orbit comes within ``trap`` of the fixed point or the 2-cycle.
    """
    if not 0.0 <= v <= 1.0:
        raise ValueError("v must lie in [0, 1]")
    lower = 1.0 - L.epsilon
    traps = [L.fixed_point]
    try:
        p2 = L.period2
        traps += [p2.v_star2, p2.v_hat]
    except MapError:
        pass
    w = v
    for k in range(k_max + 1):
        if lower <= w <= 1.0:
            return k
        if any(abs(w - c) < trap for c in traps):
            return None
        w = L(w)
    return None


@dataclass(frozen=True)
class MapAnalysis:
    A1: bool
    A2: bool
    A3: bool
    eta: float
    v_star: float
    v_star2: float | None
    v_hat: float | None
    degenerate: bool | None
    a_seq: tuple[float, ...]
    partition: SyncPartition | None
    periodic: list[tuple[float, float]] | None = None

    def to_dict(self) -> dict:
        regions = [] if self.partition is None else [
            {"k": k, "lo": iv.lo, "hi": iv.hi, "lo_closed": iv.lo_closed, "hi_closed": iv.hi_closed}
            for k, iv in self.partition.regions
        ]
        return {
            "A1": self.A1, "A2": self.A2, "A3": self.A3, "eta": self.eta,
            "v_star": self.v_star, "v_star2": self.v_star2, "v_hat": self.v_hat,
            "degenerate": self.degenerate, "a_seq": list(self.a_seq), "regions": regions,
            "periodic_points": None if self.periodic is None else [list(p) for p in self.periodic],
        }


def analyze(L: FiringMap, grid: int = 10_000, K: int = 100_000, periodic_grid: int | None = None) -> MapAnalysis:
    """Full report: conditions, fixed point, 2-cycle, a-sequence, regions.

    The 2-cycle, the a-sequence and the regions are only meaningful under
    (A1)-(A3); with (A2) violated they are reported as ``None``/empty.
    The scan for period-2 points runs on ``periodic_grid`` points (by
    default 20001 for closed-form maps, skipped for numeric ones).
    """
    cond = check_conditions(L, grid)
    v_star = L.fixed_point
    if periodic_grid is None:
        periodic_grid = 20001 if L.provenance.startswith("closed_form") else 0
    periodic = periodic_points(L, periodic_grid) if periodic_grid else None
    if not (cond.A1 and cond.A2):
        return MapAnalysis(cond.A1, cond.A2, cond.A3, cond.eta, v_star, None, None, None, (), None, periodic)
    seq = a_sequence(L, K)
    p2 = L.period2
    return MapAnalysis(cond.A1, cond.A2, cond.A3, cond.eta, v_star, p2.v_star2, p2.v_hat, p2.degenerate,
                       seq.values, sync_partition(L, seq), periodic)


def sync_window(m: int, T: float, T_tilde: float, ensemble: bool = False) -> tuple[float, float]:
    """Offsets from the reference firing within which synchronization occurs.

    Pair of identical oscillators starting in ``S_m``: ``(m/2 T~, m T)``.
    Ensemble whose largest region index is ``m``: ``((m-1)/2 T~, (m+1) T)``,
    and ``(0, T)`` when ``m = 0``.
    """
    if m < 0:
        raise ValueError("m must be nonnegative")
    if not 0 < T_tilde <= T:
        raise ValueError("need 0 < T_tilde <= T")
    if not ensemble:
        return 0.5 * m * T_tilde, m * T
    if m == 0:
        return 0.0, T
    return 0.5 * (m - 1) * T_tilde, (m + 1) * T


# ----------------------------------------------------------------------------
# perturbation bound for non-identical pairs
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class PhiBound:
    phi1_r: float
    phi1_l: float
    phi2: float
    phi: float


def _phi1(epsilon, mu_i, lipschitz, t_i, thetas, t_bar, jump_offset):
    pts = [t_i, *thetas]
    drift = 0.0
    for j, start in enumerate(pts):
        end = pts[j + 1] if j + 1 < len(pts) else t_bar
        drift += (end - start) * math.exp(lipschitz * (t_bar - start))
    pulses = sum(math.exp(lipschitz * (t_bar - th)) for th in thetas)
    return mu_i * drift + epsilon * pulses + jump_offset * math.exp(lipschitz * (t_bar - t_i))


def perturbation_bound(epsilon: float, mu_r: float, mu_l: float, xi_r: float,
                       lipschitz: float, mu: float, M: float,
                       t_i: float, thetas: Sequence[float], t_bar: float,
                       jump_offset: float = 0.0) -> PhiBound:
    """Bound on ``|u_{i+1} - L(u_i)|`` for one step of a non-identical pair.

    ``t_i`` is the firing of the reference oscillator, ``thetas`` the
    firings of other oscillators before the pair's next firing and ``t_bar``
    the unperturbed threshold time.  ``mu_r, mu_l`` bound the couplings of the
    two oscillators, ``xi_r`` the threshold perturbation of the one that
    fires next, and ``mu <= f <= M`` with Lipschitz constant ``lipschitz``.

    ``jump_offset`` (``|eps_r|``) accounts for the companion's own pulse
    perturbation at ``t_i``; it is propagated like the other discrepancies.
    The timing error is converted to a coordinate error with the speed bound
    ``M + max(mu_r, mu_l)`` of the oscillator that fired at ``t_i``.
    """
    if mu_r >= mu:
        raise ValueError("bound is vacuous: mu_r >= mu")
    thetas = list(thetas)
    if any(b < a for a, b in zip([t_i, *thetas], [*thetas, t_bar])):
        raise ValueError("event times must be ordered t_i <= thetas <= t_bar")
    phi1_r = _phi1(epsilon, mu_r, lipschitz, t_i, thetas, t_bar, jump_offset)
    phi1_l = _phi1(epsilon, mu_l, lipschitz, t_i, thetas, t_bar, 0.0)
    phi2 = (phi1_r + xi_r) / (mu - mu_r)
    return PhiBound(phi1_r, phi1_l, phi2, phi1_l + phi2 * (M + max(mu_r, mu_l)))


# ----------------------------------------------------------------------------
# cooperative (type-K) ensembles
# ----------------------------------------------------------------------------

def kamke_reduce(g: Callable[[np.ndarray], float], n: int) -> Callable[[float, float], float]:
    """``G(y, z) = g(y, z, ..., z)`` for an ``n``-argument ``g``."""
    if n < 2:
        raise ValueError("n must be at least 2")

    def G(y, z):
        return g(np.array([y] + [z] * (n - 1), dtype=float))

    return G


@dataclass(frozen=True)
class KamkeReport:
    is_type_k: bool
    eta_bound: float
    min_partial: float
    witness: np.ndarray | None


def kamke_check(g: Callable[[np.ndarray], float], n: int, samples: int = 256,
                step: float = 1e-6, seed: int = 0) -> KamkeReport:
    """Sample the off-diagonal partials ``dg/dy_i`` (``i >= 1``) by central
    differences at scrambled Sobol points of ``[0, 1]^n``.

    Type K when every sampled partial is at least ``-1e-8``; ``eta_bound`` is
    the largest partial seen.
    """
    pts = qmc.Sobol(d=n, scramble=True, seed=seed).random(samples)
    lo, hi, witness = math.inf, -math.inf, None
    for y in pts:
        for i in range(1, n):
            e = np.zeros(n)
            e[i] = step
            d = (g(y + e) - g(y - e)) / (2 * step)
            if d < lo:
                lo, witness = d, y.copy()
            hi = max(hi, d)
    return KamkeReport(bool(lo >= -1e-8), float(hi), float(lo), witness if lo < -1e-8 else None)


def _cyclic_rhs(g, n):
    idx = np.array([np.roll(np.arange(n), -i) for i in range(n)])

    def rhs(x):
        return np.array([g(x[row]) for row in idx])

    return rhs


def kamke_model(g: Callable[[np.ndarray], float], n: int, epsilon: float, samples: int = 512,
                seed: int = 0, name: str = "kamke") -> EnsembleModel:
    """Ensemble ``x_i' = g(x_i, x_{i+1}, ..., x_{i-1})`` with unit thresholds.

    The free flow is ``f(s) = g(s, 0, ..., 0)`` and the remainder is carried
    as a coupling; bounds are estimated by sampling ``[0, 1]``.
    """
    rhs = _cyclic_rhs(g, n)

    def f(s):
        s = np.asarray(s, dtype=float)
        out = [g(np.r_[si, np.zeros(n - 1)]) for si in np.ravel(s)]
        return np.array(out).reshape(s.shape)

    s = np.linspace(0.0, 1.0, samples)
    fs = f(s)
    lip = float(np.max(np.abs(np.diff(fs)) / np.diff(s)))
    flow = FreeFlow.custom(f, float(fs.min()), float(fs.max()), lip)

    def phi(x):
        return rhs(x) - f(x)

    pts = np.random.default_rng(seed).random((samples, n))
    bounds = np.max(np.abs([phi(x) for x in pts]), axis=0) * 1.05
    coupling = CouplingSpec.custom(phi, bounds)
    return EnsembleModel(n, flow, coupling, ThresholdSpec.none(n), JumpSpec.make(n, epsilon), name=name)


def reduced_pair_model(g: Callable[[np.ndarray], float], n: int, epsilon: float) -> EnsembleModel:
    """Two-oscillator system ``y' = G(y, z)``, ``z' = G(z, y)`` with
    ``G(y, z) = g(y, z, ..., z)``."""
    G = kamke_reduce(g, n)
    return kamke_model(lambda y: G(y[0], y[1]), 2, epsilon, name="kamke_pair")


def reduced_pair_rhs(g: Callable[[np.ndarray], float], n: int) -> Callable[[np.ndarray], np.ndarray]:
    """Right-hand side of the reduced pair, for :func:`build_map_numeric`."""
    G = kamke_reduce(g, n)

    def rhs(y):
        return np.array([G(y[0], y[1]), G(y[1], y[0])])

    return rhs
