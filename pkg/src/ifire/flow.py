"""Continuous flow between firings and threshold-crossing detection.

The integrator is the Dormand-Prince 5(4) embedded pair with its
fourth-order continuous extension.  Steps are clipped so that no step
straddles a breakpoint of a piecewise-smooth flow, and threshold crossings
are located by bracketing on the dense output and then polishing with
single re-steps from the start of the bracketing step.

Models whose oscillators evolve independently by a catalog flow (see
:attr:`ifire.model.EnsembleModel.is_separable`) can also be advanced with
the exact solution operator, see :func:`exact_propagator`.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .model import DOMAIN_TOL, EnsembleModel, FreeFlow, State, CouplingSpec, ThresholdSpec, JumpSpec

__all__ = [
    "IntegratorConfig",
    "DEFAULT_CONFIG",
    "IntegrationError",
    "StepSizeUnderflow",
    "NoThresholdCrossing",
    "Trajectory",
    "ThresholdHit",
    "integrate",
    "integrate_flow",
    "next_threshold_hit",
    "free_hit_time",
    "natural_period",
    "tilde_period",
    "exact_propagator",
    "ExactPropagator",
]


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances for the adaptive integrator and event location.

    ``event_tol`` bounds the residual of the threshold equation at a located
    firing; ``simultaneity_window`` merges crossings closer than that in time
    into one firing event; ``horizon`` caps how long the search for the next
    crossing may run.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf
    event_tol: float = 1e-10
    simultaneity_window: float = 1e-8
    horizon: float = 1e3

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "max_step", "event_tol", "simultaneity_window", "horizon"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    def replace(self, **changes) -> "IntegratorConfig":
        return replace(self, **changes)


DEFAULT_CONFIG = IntegratorConfig()


class IntegrationError(RuntimeError):
    pass


class StepSizeUnderflow(IntegrationError):
    pass


class NoThresholdCrossing(IntegrationError):
    pass


# ----------------------------------------------------------------------------
# Dormand-Prince 5(4)
# ----------------------------------------------------------------------------

_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
_B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([-71 / 57600, 0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
# continuous extension: y(t0 + s h) = y0 + h * (K^T P) @ [s, s^2, s^3, s^4]
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_SAFETY, _MIN_FACTOR, _MAX_FACTOR = 0.9, 0.2, 10.0


def _rk_step(fun, y, f0, h):
    """One DP5 step. Returns (y_new, f_new, error estimate, stage matrix)."""
    K = np.empty((7, y.size))
    K[0] = f0
    for s in range(1, 6):
        K[s] = fun(y + h * (_A[s] @ K[:s]))
    y_new = y + h * (_B @ K[:6])
    K[6] = fun(y_new)
    return y_new, K[6].copy(), h * (_E @ K), K


class _Stepper:
    """Adaptive DP5 stepping for an autonomous system ``y' = fun(y)``."""

    def __init__(self, fun, t0, y0, cfg: IntegratorConfig, breakpoints: Sequence[float] = ()):
        self.fun, self.cfg = fun, cfg
        self.breakpoints = tuple(breakpoints)
        self.t = float(t0)
        self.y = np.array(y0, dtype=float)
        self.f = fun(self.y)
        self.h = self._initial_step()
        # last accepted step
        self.t_old = self.t
        self.y_old = self.y
        self.f_old = self.f
        self.h_last = 0.0
        self.Q = None

    def _initial_step(self):
        cfg = self.cfg
        scale = cfg.abs_tol + np.abs(self.y) * cfg.rel_tol
        d0 = np.sqrt(np.mean((self.y / scale) ** 2))
        d1 = np.sqrt(np.mean((self.f / scale) ** 2))
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        h0 = min(h0, cfg.max_step)
        y1 = self.y + h0 * self.f
        d2 = np.sqrt(np.mean(((self.fun(y1) - self.f) / scale) ** 2)) / h0
        if d1 <= 1e-15 and d2 <= 1e-15:
            h1 = max(1e-6, h0 * 1e-3)
        else:
            h1 = (0.01 / max(d1, d2)) ** (1 / 5)
        return min(100 * h0, h1, cfg.max_step)

    def _error_norm(self, err, y_new):
        scale = self.cfg.abs_tol + np.maximum(np.abs(self.y), np.abs(y_new)) * self.cfg.rel_tol
        return float(np.sqrt(np.mean((err / scale) ** 2)))

    def step(self, t_bound: float = math.inf) -> None:
        """Take one accepted step, never beyond ``t_bound`` nor across a breakpoint."""
        cfg = self.cfg
        h = min(self.h, cfg.max_step)
        min_step = 10 * abs(np.nextafter(self.t, math.inf) - self.t)
        while True:
            if h < min_step:
                raise StepSizeUnderflow(f"step size underflow at t={self.t}, y={self.y}")
            last = self.t + h >= t_bound
            if last:
                h = t_bound - self.t
            y_new, f_new, err, K = _rk_step(self.fun, self.y, self.f, h)
            clipped = self._clip(y_new, h) if self.breakpoints else None
            if clipped is not None:
                h_trial = h
                h, i, b, (y_new, f_new, err, K) = clipped
                last = False
            norm = self._error_norm(err, y_new)
            if norm <= 1.0:
                break
            h = (h_trial if clipped is not None else h) * max(_MIN_FACTOR, _SAFETY * norm ** -0.2)

        factor = _MAX_FACTOR if norm == 0 else min(_MAX_FACTOR, _SAFETY * norm ** -0.2)
        self.h = (h_trial if clipped is not None else h) * (factor if clipped is None else 1.0)
        self.t_old, self.y_old, self.f_old, self.h_last = self.t, self.y, self.f, h
        self.Q = K.T @ _P
        if clipped is not None:
            # park the coordinate just past the breakpoint so the next step
            # evaluates a single smooth branch
            y_new = y_new.copy()
            y_new[i] = np.nextafter(b, math.inf if self.f_old[i] > 0 else -math.inf)
            f_new = self.fun(y_new)
        self.t = t_bound if last else self.t + h
        self.y, self.f = y_new, f_new

    def _clip(self, y_new, h):
        """If a coordinate crosses a breakpoint within the trial step, shorten
        the step so that it lands on the breakpoint."""
        best = None
        for b in self.breakpoints:
            d0, d1 = self.y - b, y_new - b
            for i in np.flatnonzero(d0 * d1 < 0):
                frac = d0[i] / (d0[i] - d1[i])
                if best is None or frac < best[0]:
                    best = (frac, int(i), b)
        if best is None:
            return None
        _, i, b = best

        def miss(hh):
            return _rk_step(self.fun, self.y, self.f, hh)[0][i] - b

        hc = brentq(miss, 0.0, h, xtol=4 * np.finfo(float).eps * max(h, 1e-300), rtol=4 * np.finfo(float).eps)
        return hc, i, b, _rk_step(self.fun, self.y, self.f, hc)

    def dense(self, t):
        s = (t - self.t_old) / self.h_last
        p = np.array([s, s * s, s ** 3, s ** 4])
        return self.y_old + self.h_last * (self.Q @ p)

    def restep(self, t):
        """Fifth-order value at ``t`` from a single step off the last step start."""
        if t == self.t_old:
            return self.y_old.copy()
        return _rk_step(self.fun, self.y_old, self.f_old, t - self.t_old)[0]


# ----------------------------------------------------------------------------
# trajectory
# ----------------------------------------------------------------------------

class Trajectory:
    """Accepted-step knots with dense evaluation in between.

    ``traj(t)`` returns the state vector at any ``t`` in ``[t[0], t[-1]]``;
    at a knot it returns the knot value exactly.  Between knots it takes a
    single fifth-order step from the preceding knot, which is as accurate
    as the knots themselves; ``traj.interpolate(t)`` evaluates the cheaper
    quartic continuous extension instead.
    """

    def __init__(self, t0: float, y0: np.ndarray, fun=None):
        self._t = [float(t0)]
        self._y = [np.array(y0, dtype=float)]
        self._fun = fun
        self._pieces: list[tuple[float, float, np.ndarray, np.ndarray, np.ndarray]] = []

    def _append(self, stepper: _Stepper):
        self._pieces.append((stepper.t_old, stepper.h_last, stepper.y_old, stepper.f_old, stepper.Q))
        self._t.append(stepper.t)
        self._y.append(stepper.y.copy())

    @property
    def t(self) -> np.ndarray:
        return np.array(self._t)

    @property
    def y(self) -> np.ndarray:
        return np.array(self._y)

    @property
    def knots(self) -> list[tuple[float, np.ndarray]]:
        return list(zip(self._t, self._y))

    @property
    def final(self) -> State:
        return State(self._t[-1], self._y[-1])

    def __len__(self):
        return len(self._t)

    def _piece(self, t: float):
        if not self._t[0] <= t <= self._t[-1]:
            raise ValueError(f"t={t} outside [{self._t[0]}, {self._t[-1]}]")
        k = bisect.bisect_left(self._t, t)
        if k < len(self._t) and self._t[k] == t:
            return None, self._y[k].copy()
        return self._pieces[k - 1], None

    def __call__(self, t: float) -> np.ndarray:
        piece, y = self._piece(t)
        if piece is None:
            return y
        t0, _, y0, f0, _ = piece
        return _rk_step(self._fun, y0, f0, t - t0)[0]

    def interpolate(self, t: float) -> np.ndarray:
        piece, y = self._piece(t)
        if piece is None:
            return y
        t0, h, y0, _, Q = piece
        s = (t - t0) / h
        return y0 + h * (Q @ np.array([s, s * s, s ** 3, s ** 4]))


# ----------------------------------------------------------------------------
# public operations
# ----------------------------------------------------------------------------

def _flow_model(flow: FreeFlow) -> EnsembleModel:
    return EnsembleModel(1, flow, CouplingSpec.none(1), ThresholdSpec.none(1), JumpSpec.make(1, 1.0))


def _integrate(fun, t0, y0, t_end, cfg, breakpoints, check=None) -> Trajectory:
    traj = Trajectory(t0, y0, fun)
    if t_end == t0:
        return traj
    if t_end < t0:
        raise ValueError("backward integration is not supported")
    st = _Stepper(fun, t0, y0, cfg, breakpoints)
    while st.t < t_end:
        st.step(t_end)
        if check is not None:
            check(st)
        traj._append(st)
    return traj


def integrate(model: EnsembleModel, state: State, t_end: float, config: IntegratorConfig = DEFAULT_CONFIG) -> Trajectory:
    """Integrate the flow of ``model`` from ``state`` up to ``t_end``.

    The caller is responsible for stopping at threshold crossings (use
    :func:`next_threshold_hit`); leaving the domain by more than the domain
    tolerance raises :class:`IntegrationError`.
    """
    x0 = np.asarray(state.x, dtype=float)

    def check(st):
        if not model.in_domain(st.y, DOMAIN_TOL):
            raise IntegrationError(f"left the domain at t={st.t}: x={st.y}")

    return _integrate(model.rhs, state.t, x0, t_end, config, model.flow.breakpoints, check)


def integrate_flow(flow: FreeFlow, x0: float, t_end: float, config: IntegratorConfig = DEFAULT_CONFIG) -> Trajectory:
    """Integrate the scalar free equation ``u' = f(u)`` from ``u(0) = x0``."""
    return _integrate(flow, 0.0, np.array([float(x0)]), t_end, config, flow.breakpoints)


@dataclass(frozen=True)
class ThresholdHit:
    """Earliest threshold crossing: time, oscillators crossing within the
    simultaneity window, and the state vector at ``t``."""

    t: float
    hitters: tuple[int, ...]
    x: np.ndarray


def _first_crossing(fun, event, t0, y0, cfg: IntegratorConfig, breakpoints, horizon=None) -> ThresholdHit:
    """Locate the first zero of ``max(event(y(t)))``, which must start negative.

    ``event(y)`` returns one residual per watched coordinate; residuals are
    increasing through their zero for positive flows.
    """
    horizon = cfg.horizon if horizon is None else horizon
    y0 = np.asarray(y0, dtype=float)
    e0 = event(y0)
    if np.any(e0 >= -cfg.event_tol):
        return ThresholdHit(float(t0), tuple(int(i) for i in np.flatnonzero(e0 >= -cfg.event_tol)), y0.copy())

    st = _Stepper(fun, t0, y0, cfg, breakpoints)
    t_limit = t0 + horizon
    while True:
        st.step()
        e1 = event(st.y)
        if np.max(e1) >= 0:
            break
        if st.t > t_limit:
            raise NoThresholdCrossing(f"no threshold crossing within horizon {horizon} from t={t0}")

    t_a, t_b = st.t_old, st.t
    speed = max(float(np.max(np.abs(st.f_old))), float(np.max(np.abs(st.f))), 1e-300)
    xtol = max(0.5 * cfg.event_tol / speed, 4 * np.finfo(float).eps * abs(t_b))
    eps = 4 * np.finfo(float).eps

    cache: dict[float, np.ndarray] = {t_b: st.y}

    def y_at(t):
        if t not in cache:
            cache[t] = st.restep(t)
        return cache[t]

    def g(t):
        return float(np.max(event(y_at(t))))

    if np.max(e1) < 0 or t_b == t_a:
        t_hit = t_b
    else:
        # bracket on the cheap dense output, then polish on exact re-steps
        t_d = brentq(lambda t: float(np.max(event(st.dense(t)))), t_a, t_b, xtol=1e-14, rtol=eps) \
            if np.max(event(st.dense(t_b))) >= 0 else t_b
        lo, hi = t_a, t_b
        w = max(1e-8 * (t_b - t_a), 10 * xtol)
        if t_a < t_d - w and g(t_d - w) < 0:
            lo = t_d - w
        if t_d + w < t_b and g(t_d + w) >= 0:
            hi = t_d + w
        t_hit = brentq(g, lo, hi, xtol=xtol, rtol=eps)
    y_hit = y_at(t_hit).copy()
    e_hit = event(y_hit)
    first = int(np.argmax(e_hit))
    # simultaneity probe on the dense output (accurate far below the window)
    t_w = t_hit + cfg.simultaneity_window
    e_win = event(st.dense(t_w) if t_w <= t_b else y_at(t_w))
    hitters = {first} | set(int(i) for i in np.flatnonzero(e_win >= 0)) \
        | set(int(i) for i in np.flatnonzero(e_hit >= -cfg.event_tol))
    return ThresholdHit(float(t_hit), tuple(sorted(hitters)), y_hit)


def next_threshold_hit(model: EnsembleModel, state: State, config: IntegratorConfig = DEFAULT_CONFIG) -> ThresholdHit:
    """Earliest time some oscillator reaches ``1 + zeta_j(x)``.

    The residual of the earliest crosser is at most ``config.event_tol``;
    every oscillator whose crossing falls within ``simultaneity_window`` of
    it is reported among the hitters.
    """
    def event(y):
        return y - model.threshold(y)

    return _first_crossing(model.rhs, event, state.t, state.x, config, model.flow.breakpoints)


def free_hit_time(flow: FreeFlow, x0: float, config: IntegratorConfig = DEFAULT_CONFIG, method: str = "auto") -> float:
    """Time for ``u' = f(u)``, ``u(0) = x0`` to reach 1.

    ``method`` is ``"exact"`` (closed form, catalog flows only), ``"numeric"``
    (event machinery) or ``"auto"`` (closed form when available).
    """
    if x0 >= 1.0:
        return 0.0
    if x0 < 0:
        raise ValueError("x0 must be nonnegative")
    if method == "exact" or (method == "auto" and flow.has_closed_form):
        return flow.time_to(x0, 1.0)
    hit = _first_crossing(flow, lambda y: y - 1.0, 0.0, np.array([float(x0)]), config, flow.breakpoints)
    return hit.t


def natural_period(flow: FreeFlow, config: IntegratorConfig = DEFAULT_CONFIG, method: str = "auto") -> float:
    """Uncoupled period: time from 0 to threshold."""
    return free_hit_time(flow, 0.0, config, method)


def tilde_period(flow: FreeFlow, v_star: float, config: IntegratorConfig = DEFAULT_CONFIG, method: str = "auto") -> float:
    """Time from the fixed point ``v_star`` of the firing map up to threshold."""
    if not 0 <= v_star <= 1:
        raise ValueError("v_star must lie in [0, 1]")
    return free_hit_time(flow, v_star, config, method)


# ----------------------------------------------------------------------------
# exact propagation for separable models
# ----------------------------------------------------------------------------

class ExactPropagator:
    """Closed-form flow map for a model whose oscillators do not interact
    between firings and whose thresholds are constant."""

    def __init__(self, model: EnsembleModel):
        if not model.is_separable:
            raise ValueError("model is not separable")
        self.model = model
        self.theta = model.threshold(np.zeros(model.n))
        flow = model.flow
        self._affine = flow.kind == "leaky"
        if self._affine:
            S, g = flow.params["S"], flow.params["gamma"]
            if model.coupling.kind == "affine":
                a = np.asarray(model.coupling.params["a"])
                b = np.asarray(model.coupling.params["b"])
            else:
                a = b = np.zeros(model.n)
            self.rate = g - b
            self.kappa = (S + a) / self.rate

    def hit_times(self, x: np.ndarray) -> np.ndarray:
        """Time for each oscillator to reach its threshold (inf if never)."""
        if self._affine:
            with np.errstate(divide="ignore", invalid="ignore"):
                t = np.log((self.kappa - x) / (self.kappa - self.theta)) / self.rate
            t = np.where(self.theta >= self.kappa, np.inf, t)
            return np.where(x >= self.theta, 0.0, t)
        flow = self.model.flow
        return np.array([flow.time_to(xi, th) for xi, th in zip(x, self.theta)])

    def advance(self, x: np.ndarray, t: float) -> np.ndarray:
        if self._affine:
            return self.kappa + (x - self.kappa) * np.exp(-self.rate * t)
        flow = self.model.flow
        return np.array([flow.solution(xi, t) for xi in x])

    def next_hit(self, state: State, config: IntegratorConfig = DEFAULT_CONFIG) -> ThresholdHit:
        x = np.asarray(state.x, dtype=float)
        tau = self.hit_times(x)
        t_min = float(tau.min())
        if not math.isfinite(t_min) or t_min > config.horizon:
            raise NoThresholdCrossing(f"no threshold crossing within horizon from t={state.t}")
        hitters = tuple(int(i) for i in np.flatnonzero(tau <= t_min + config.simultaneity_window))
        y = self.advance(x, t_min)
        y[hitters[0]] = max(y[hitters[0]], self.theta[hitters[0]]) if tau[hitters[0]] == t_min else y[hitters[0]]
        return ThresholdHit(state.t + t_min, hitters, y)


def exact_propagator(model: EnsembleModel) -> ExactPropagator | None:
    return ExactPropagator(model) if model.is_separable else None
