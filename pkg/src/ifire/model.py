"""Oscillator-ensemble data model, model catalog and firing jump rules.

An ensemble of ``n`` integrate-and-fire oscillators evolves between firings as

    x_i' = f(x_i) + phi_i(x)

inside the domain ``0 <= x_i <= 1 + zeta_i(x)``.  When oscillator ``j`` meets
its threshold it resets to zero and every other oscillator receives a single
pulse; an oscillator pushed to its own threshold by the pulse fires as well.

Oscillator indices are 0-based throughout the package.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "DOMAIN_TOL",
    "ModelError",
    "DomainError",
    "FreeFlow",
    "CouplingSpec",
    "ThresholdSpec",
    "JumpSpec",
    "EnsembleModel",
    "State",
    "Check",
    "ValidationReport",
    "make_catalog_model",
    "random_initial_state",
    "flow_rhs",
    "threshold_value",
    "apply_firing",
    "validate",
]

#: absolute slack for domain membership and threshold tests
DOMAIN_TOL = 1e-9


class ModelError(ValueError):
    """Invalid model parameters."""


class DomainError(ValueError):
    """A state lies outside the moving-threshold domain."""


def _frozen_array(values, n=None, name="array") -> np.ndarray:
    arr = np.array(values, dtype=float)
    if n is not None and arr.shape != (n,):
        raise ModelError(f"{name} must have shape ({n},), got {arr.shape}")
    arr.setflags(write=False)
    return arr


# ----------------------------------------------------------------------------
# free flow
# ----------------------------------------------------------------------------

_PW_BREAKS = (1.0 / 3.0, 2.0 / 3.0)


@dataclass(frozen=True, eq=False)
class FreeFlow:
    """The common free-running vector field ``f`` of the oscillators.

    Use the constructors :meth:`quadratic`, :meth:`leaky`,
    :meth:`piecewise_linear` and :meth:`custom` rather than the raw
    initializer.  ``lower_bound``, ``upper_bound`` and ``lipschitz`` are the
    constants ``mu <= f(s) <= M`` and ``|f(a) - f(b)| <= l |a - b|`` on
    ``[0, 1 + xi_max]``.
    """

    kind: str
    params: Mapping[str, float]
    lower_bound: float
    upper_bound: float
    lipschitz: float
    xi_max: float = 0.0
    func: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)

    # -- constructors -------------------------------------------------------
    @classmethod
    def quadratic(cls, c: float, xi_max: float = 0.0) -> "FreeFlow":
        """``f(s) = s**2 + c``."""
        if not c > 0:
            raise ModelError(f"quadratic flow needs c > 0, got {c}")
        top = 1.0 + xi_max
        return cls("quadratic", {"c": float(c)}, float(c), top * top + c, 2.0 * top, xi_max)

    @classmethod
    def leaky(cls, S: float, gamma: float, xi_max: float = 0.0) -> "FreeFlow":
        """``f(s) = S - gamma * s``; synchronizing models need ``S / gamma > 1``.

        A ratio ``kappa <= 1`` is accepted here so that :func:`validate` can
        report it; :func:`make_catalog_model` rejects it outright.
        """
        if not S > 0 or not gamma > 0:
            raise ModelError(f"leaky flow needs S > 0 and gamma > 0, got S={S}, gamma={gamma}")
        return cls(
            "leaky",
            {"S": float(S), "gamma": float(gamma)},
            S - gamma * (1.0 + xi_max),
            float(S),
            float(gamma),
            xi_max,
        )

    @classmethod
    def piecewise_linear(cls, xi_max: float = 0.0) -> "FreeFlow":
        """Three-branch flow: ``4 - 3s`` on ``[0, 1/3]``, ``3`` on ``(1/3, 2/3]``,
        ``6 - 3s`` above ``2/3`` (discontinuous at ``2/3``)."""
        return cls("piecewise_linear", {}, min(3.0, 3.0 - 3.0 * xi_max), 4.0, 3.0, xi_max)

    @classmethod
    def custom(
        cls,
        func: Callable[[np.ndarray], np.ndarray],
        lower_bound: float,
        upper_bound: float,
        lipschitz: float,
        xi_max: float = 0.0,
    ) -> "FreeFlow":
        """Arbitrary positive flow; the bounds are the caller's responsibility."""
        return cls("custom", {}, float(lower_bound), float(upper_bound), float(lipschitz), xi_max, func)

    # -- evaluation ---------------------------------------------------------
    @property
    def kappa(self) -> float:
        if self.kind != "leaky":
            raise AttributeError("kappa is defined for leaky flows only")
        return self.params["S"] / self.params["gamma"]

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """Points where ``f`` is not smooth; integrators clip steps there."""
        return _PW_BREAKS if self.kind == "piecewise_linear" else ()

    @property
    def has_closed_form(self) -> bool:
        return self.kind in ("quadratic", "leaky", "piecewise_linear")

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "quadratic":
            return s * s + self.params["c"]
        if self.kind == "leaky":
            return self.params["S"] - self.params["gamma"] * s
        if self.kind == "piecewise_linear":
            return np.where(s <= _PW_BREAKS[0], 4.0 - 3.0 * s, np.where(s <= _PW_BREAKS[1], 3.0, 6.0 - 3.0 * s))
        return np.asarray(self.func(s), dtype=float)

    # -- closed-form solution operator -----------------------------------
    def solution(self, x0: float, t: float) -> float:
        """Exact ``u(t, 0, x0)`` of ``u' = f(u)`` for catalog flows."""
        if self.kind == "leaky":
            k = self.kappa
            return k + (x0 - k) * math.exp(-self.params["gamma"] * t)
        if self.kind == "quadratic":
            r = math.sqrt(self.params["c"])
            phase = r * t + math.atan(x0 / r)
            if phase >= math.pi / 2:
                raise ModelError("quadratic solution blows up before t")
            return r * math.tan(phase)
        if self.kind == "piecewise_linear":
            return _pw_solution(x0, t)
        raise NotImplementedError(f"no closed form for {self.kind} flow")

    def time_to(self, x0: float, target: float = 1.0) -> float:
        """Exact time for ``u' = f(u)`` to travel from ``x0`` up to ``target``."""
        if target <= x0:
            return 0.0
        if self.kind == "leaky":
            k = self.kappa
            if target >= k:
                return math.inf
            return math.log((k - x0) / (k - target)) / self.params["gamma"]
        if self.kind == "quadratic":
            r = math.sqrt(self.params["c"])
            return (math.atan(target / r) - math.atan(x0 / r)) / r
        if self.kind == "piecewise_linear":
            return _pw_time(x0, target)
        raise NotImplementedError(f"no closed form for {self.kind} flow")


# Each branch of the piecewise flow is affine: u' = g*(k - u) (or constant 3).
_PW_BRANCHES = (
    (0.0, _PW_BREAKS[0], 3.0, 4.0 / 3.0),
    (_PW_BREAKS[0], _PW_BREAKS[1], 0.0, 3.0),
    (_PW_BREAKS[1], math.inf, 3.0, 2.0),
)


def _pw_branch(s: float) -> int:
    if s <= _PW_BREAKS[0]:
        return 0
    if s <= _PW_BREAKS[1]:
        return 1
    return 2


def _pw_branch_time(b: int, a: float, z: float) -> float:
    g, k = _PW_BRANCHES[b][2], _PW_BRANCHES[b][3]
    if g == 0.0:
        return (z - a) / k
    if z >= k:
        return math.inf
    return math.log((k - a) / (k - z)) / g


def _pw_time(x0: float, target: float) -> float:
    t, s = 0.0, x0
    b = _pw_branch(s)
    while True:
        hi = _PW_BRANCHES[b][1]
        if target <= hi:
            return t + _pw_branch_time(b, s, target)
        t += _pw_branch_time(b, s, hi)
        s, b = hi, b + 1


def _pw_solution(x0: float, t: float) -> float:
    s, b = x0, _pw_branch(x0)
    while True:
        lo, hi, g, k = _PW_BRANCHES[b]
        dt = _pw_branch_time(b, s, hi)
        if t <= dt:
            return s + k * t if g == 0.0 else k + (s - k) * math.exp(-g * t)
        t -= dt
        s, b = hi, b + 1


# ----------------------------------------------------------------------------
# coupling, thresholds, jumps
# ----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CouplingSpec:
    """Continuous coupling terms ``phi_i(x)`` with bounds ``|phi_i| <= mu_i``.

    kinds
        ``none``        phi = 0
        ``affine``      phi_i = a_i + b_i * x_i (per-oscillator drift of ``f``)
        ``mean_field``  phi_i = beta / (n - 1) * sum_{j != i} x_j
        ``custom``      phi = func(x), vector valued
    """

    kind: str
    bounds: np.ndarray
    params: Mapping[str, object] = field(default_factory=dict)
    func: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)

    @classmethod
    def none(cls, n: int) -> "CouplingSpec":
        return cls("none", _frozen_array(np.zeros(n)))

    @classmethod
    def affine(cls, a: Sequence[float], b: Sequence[float], xi_max: float = 0.0) -> "CouplingSpec":
        a = _frozen_array(a, name="a")
        b = _frozen_array(b, a.size, name="b")
        top = 1.0 + xi_max
        bounds = np.maximum(np.abs(a), np.abs(a + b * top))
        return cls("affine", _frozen_array(bounds), {"a": a, "b": b})

    @classmethod
    def mean_field(cls, n: int, beta: float, xi_max: float = 0.0) -> "CouplingSpec":
        if beta < 0:
            raise ModelError("mean-field coupling needs beta >= 0")
        if n < 2:
            raise ModelError("mean-field coupling needs n >= 2")
        return cls("mean_field", _frozen_array(np.full(n, beta * (1.0 + xi_max))), {"beta": float(beta)})

    @classmethod
    def custom(cls, func: Callable[[np.ndarray], np.ndarray], bounds: Sequence[float]) -> "CouplingSpec":
        return cls("custom", _frozen_array(bounds), {}, func)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "none":
            return np.zeros_like(x)
        if self.kind == "affine":
            return self.params["a"] + self.params["b"] * x
        if self.kind == "mean_field":
            n = x.size
            return self.params["beta"] / (n - 1) * (x.sum() - x)
        return np.asarray(self.func(x), dtype=float)


@dataclass(frozen=True, eq=False)
class ThresholdSpec:
    """Threshold perturbations ``zeta_i(x)``; oscillator ``i`` fires at ``1 + zeta_i(x)``.

    kinds: ``none``, ``constant`` (offsets), ``linear`` (``zeta = C @ x``),
    ``custom`` (``zeta = func(x)``).
    """

    kind: str
    bounds: np.ndarray
    params: Mapping[str, object] = field(default_factory=dict)
    func: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)

    @classmethod
    def none(cls, n: int) -> "ThresholdSpec":
        return cls("none", _frozen_array(np.zeros(n)))

    @classmethod
    def constant(cls, offsets: Sequence[float]) -> "ThresholdSpec":
        off = _frozen_array(offsets, name="offsets")
        return cls("constant", _frozen_array(np.abs(off)), {"offsets": off})

    @classmethod
    def linear(cls, matrix) -> "ThresholdSpec":
        C = np.array(matrix, dtype=float)
        if C.ndim != 2 or C.shape[0] != C.shape[1]:
            raise ModelError("linear threshold matrix must be square")
        C.setflags(write=False)
        # |C x| over the box [0, 1 + xi]^n, solved as a fixed point in xi
        row = np.abs(C).sum(axis=1)
        if row.max(initial=0.0) >= 1.0:
            raise ModelError("linear threshold perturbation too large (row sums must be < 1)")
        xi_max = row.max(initial=0.0) / (1.0 - row.max(initial=0.0))
        return cls("linear", _frozen_array(row * (1.0 + xi_max)), {"matrix": C})

    @classmethod
    def custom(cls, func: Callable[[np.ndarray], np.ndarray], bounds: Sequence[float]) -> "ThresholdSpec":
        return cls("custom", _frozen_array(bounds), {}, func)

    @property
    def is_constant(self) -> bool:
        return self.kind in ("none", "constant")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "none":
            return np.zeros_like(x)
        if self.kind == "constant":
            return np.array(self.params["offsets"])
        if self.kind == "linear":
            return self.params["matrix"] @ x
        return np.asarray(self.func(x), dtype=float)


@dataclass(frozen=True, eq=False)
class JumpSpec:
    """Pulse received by non-firing oscillators.

    ``standard``     increment and reset test both use ``epsilon + eps_i``
    ``bar_epsilon``  reset test uses ``epsilon + eps_i``, increment ``bar_epsilon + eps_i``
    ``pairwise``     increment ``epsilon + sum_{s fired} pairwise[i, s]``
    """

    epsilon: float
    eps_i: np.ndarray
    variant: str = "standard"
    bar_epsilon: float | None = None
    pairwise: np.ndarray | None = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ModelError(f"epsilon must be positive, got {self.epsilon}")
        if self.variant not in ("standard", "bar_epsilon", "pairwise"):
            raise ModelError(f"unknown jump variant {self.variant!r}")
        if self.variant == "bar_epsilon" and self.bar_epsilon is None:
            raise ModelError("bar_epsilon variant needs bar_epsilon")
        if self.variant == "pairwise":
            if self.pairwise is None:
                raise ModelError("pairwise variant needs the pairwise matrix")
            n = self.eps_i.size
            if np.shape(self.pairwise) != (n, n):
                raise ModelError(f"pairwise matrix must be {n}x{n}")

    @classmethod
    def make(cls, n: int, epsilon: float, eps_i=None, variant="standard", bar_epsilon=None, pairwise=None):
        eps_i = _frozen_array(np.zeros(n) if eps_i is None else eps_i, n, "eps_i")
        if pairwise is not None:
            pairwise = np.array(pairwise, dtype=float)
            pairwise.setflags(write=False)
        return cls(float(epsilon), eps_i, variant, None if bar_epsilon is None else float(bar_epsilon), pairwise)


@dataclass(frozen=True, eq=False)
class EnsembleModel:
    """Complete description of ``n`` pulse-coupled oscillators. Immutable."""

    n: int
    flow: FreeFlow
    coupling: CouplingSpec
    thresholds: ThresholdSpec
    jump: JumpSpec
    name: str = "custom"
    seed: int | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ModelError("n must be positive")
        for part, arr in (("coupling", self.coupling.bounds), ("thresholds", self.thresholds.bounds),
                          ("jump", self.jump.eps_i)):
            if np.shape(arr) != (self.n,):
                raise ModelError(f"{part} is sized for {np.shape(arr)} oscillators, model has n={self.n}")

    @property
    def epsilon(self) -> float:
        return self.jump.epsilon

    @property
    def xi_max(self) -> float:
        return float(self.thresholds.bounds.max(initial=0.0))

    def rhs(self, x: np.ndarray) -> np.ndarray:
        return self.flow(x) + self.coupling(x)

    def threshold(self, x: np.ndarray) -> np.ndarray:
        """Vector of firing thresholds ``1 + zeta_i(x)``."""
        return 1.0 + self.thresholds(x)

    def in_domain(self, x: np.ndarray, tol: float = DOMAIN_TOL) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= -tol) and np.all(x <= self.threshold(x) + tol))

    @property
    def is_separable(self) -> bool:
        """True when each oscillator evolves by its own scalar closed-form flow."""
        if not self.thresholds.is_constant:
            return False
        if self.coupling.kind == "none":
            return self.flow.has_closed_form
        return self.coupling.kind == "affine" and self.flow.kind == "leaky"


@dataclass(frozen=True)
class State:
    t: float
    x: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        x.setflags(write=False)
        object.__setattr__(self, "x", x)


# ----------------------------------------------------------------------------
# catalog
# ----------------------------------------------------------------------------

def _positive(params, *names):
    for name in names:
        if name not in params:
            raise ModelError(f"missing parameter {name!r}")
        if not params[name] > 0:
            raise ModelError(f"{name} must be positive, got {params[name]}")


def make_catalog_model(kind: str, **params) -> EnsembleModel:
    """Build one of the standard models.

    ``quadratic``              x' = x^2 + c                     (c, epsilon, n=2)
    ``leaky``                  x' = S - gamma x                 (S, gamma, epsilon, n=2)
    ``piecewise_linear``       three-branch flow                (epsilon, n=2)
    ``cross_coupled``          x_i' = S - gamma x_i + beta x_j  (S, gamma, beta, epsilon)
    ``mean_field``             n-oscillator version of the above (S, gamma, beta, epsilon, n)
    ``perturbed_leaky``        x_i' = S - gamma x_i + a_i + b_i x_i, thresholds 1 + xi_i
                               (S, gamma, epsilon, a, b, xi, eps_i; n = len(a))
    ``random_leaky_ensemble``  x_i' = (3 + .01 m_i) - (2 + .01 z_i) x_i,
                               thresholds 1 + .005 r_i          (n=100, epsilon=0.08, seed)

    ``peskin`` and ``example4`` are accepted aliases for ``leaky`` and
    ``piecewise_linear``.  Optional ``eps_i`` applies to every kind.
    """
    kind = {"peskin": "leaky", "example4": "piecewise_linear"}.get(kind, kind)
    params = dict(params)
    _positive(params, "epsilon")
    eps = float(params["epsilon"])
    eps_i = params.get("eps_i")

    if kind in ("leaky", "cross_coupled", "mean_field", "perturbed_leaky"):
        if "kappa" in params and "S" not in params:
            params.setdefault("gamma", 1.0)
            params["S"] = params["kappa"] * params["gamma"]
        _positive(params, "S", "gamma")
        if params["S"] / params["gamma"] <= 1:
            raise ModelError(f"kappa = S/gamma must exceed 1, got {params['S'] / params['gamma']}")

    if kind == "quadratic":
        _positive(params, "c")
        n = int(params.get("n", 2))
        flow = FreeFlow.quadratic(params["c"])
        coupling = CouplingSpec.none(n)
    elif kind == "leaky":
        n = int(params.get("n", 2))
        flow = FreeFlow.leaky(params["S"], params["gamma"])
        coupling = CouplingSpec.none(n)
    elif kind == "piecewise_linear":
        n = int(params.get("n", 2))
        flow = FreeFlow.piecewise_linear()
        coupling = CouplingSpec.none(n)
    elif kind in ("cross_coupled", "mean_field"):
        n = int(params.get("n", 2))
        if kind == "cross_coupled" and n != 2:
            raise ModelError("cross_coupled is a two-oscillator model; use mean_field for n > 2")
        beta = float(params.get("beta", 0.0))
        if beta < 0:
            raise ModelError("beta must be nonnegative")
        if beta >= params["gamma"]:
            raise ModelError("beta must be smaller than gamma (negative eigenvalues)")
        flow = FreeFlow.leaky(params["S"], params["gamma"])
        coupling = CouplingSpec.mean_field(n, beta)
    elif kind == "perturbed_leaky":
        a = np.asarray(params.get("a", np.zeros(int(params.get("n", 2)))), dtype=float)
        n = a.size
        b = np.asarray(params.get("b", np.zeros(n)), dtype=float)
        xi = np.asarray(params.get("xi", np.zeros(n)), dtype=float)
        if b.shape != (n,) or xi.shape != (n,):
            raise ModelError("a, b and xi must have the same length")
        xi_max = float(max(xi.max(), 0.0))
        flow = FreeFlow.leaky(params["S"], params["gamma"], xi_max)
        coupling = CouplingSpec.affine(a, b, xi_max)
        return EnsembleModel(n, flow, coupling, ThresholdSpec.constant(xi), JumpSpec.make(n, eps, eps_i), name=kind)
    elif kind == "random_leaky_ensemble":
        if "seed" not in params:
            raise ModelError("random_leaky_ensemble needs a seed")
        n = int(params.get("n", 100))
        seed = int(params["seed"])
        rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(2)[0])
        mu_bar, zeta_bar, xi_bar = rng.random(n), rng.random(n), rng.random(n)
        offsets = 0.005 * xi_bar
        thresholds = ThresholdSpec.constant(offsets)
        xi_max = float(offsets.max())
        flow = FreeFlow.leaky(3.0, 2.0, xi_max)
        coupling = CouplingSpec.affine(0.01 * mu_bar, -0.01 * zeta_bar, xi_max)
        jump = JumpSpec.make(n, eps, eps_i)
        return EnsembleModel(n, flow, coupling, thresholds, jump, name=kind, seed=seed)
    else:
        raise ModelError(f"unknown catalog model {kind!r}")

    return EnsembleModel(n, flow, coupling, ThresholdSpec.none(n), JumpSpec.make(n, eps, eps_i), name=kind)


def random_initial_state(n: int, seed: int) -> np.ndarray:
    """Start values uniform on [0, 1), drawn from a stream independent of the
    one used for the random ensemble's parameters."""
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)).spawn(2)[1])
    return rng.random(n)


# ----------------------------------------------------------------------------
# operations
# ----------------------------------------------------------------------------

def flow_rhs(model: EnsembleModel, x) -> np.ndarray:
    return model.rhs(np.asarray(x, dtype=float))


def threshold_value(model: EnsembleModel, i: int, x) -> float:
    return float(model.threshold(np.asarray(x, dtype=float))[i])


def apply_firing(
    model: EnsembleModel,
    state: State,
    firing_set: Iterable[int],
    tol: float = DOMAIN_TOL,
) -> tuple[State, tuple[int, ...]]:
    """Fire the oscillators in ``firing_set`` and deliver one pulse to the rest.

    Every non-firing oscillator gets exactly one increment, however many
    oscillators fire; oscillators pushed to threshold are absorbed (reset to
    zero) but do not send a pulse of their own.

    Returns the post-firing state and the full set of oscillators that fired,
    initiators first and absorbed ones after, each group in ascending order.

    Raises
    ------
    ValueError
        If ``firing_set`` is empty or names an oscillator below threshold.
    DomainError
        If ``state`` lies outside the domain.
    """
    initiators = sorted(set(int(j) for j in firing_set))
    if not initiators:
        raise ValueError("firing_set is empty")
    x = state.x
    theta = model.threshold(x)
    if not model.in_domain(x, tol):
        raise DomainError(f"state outside domain at t={state.t}: x={x}, thresholds={theta}")
    for j in initiators:
        if not 0 <= j < model.n:
            raise ValueError(f"oscillator index {j} out of range")
        if x[j] < theta[j] - tol:
            raise ValueError(f"oscillator {j} is below threshold ({x[j]} < {theta[j]})")

    jump = model.jump
    fired = np.zeros(model.n, dtype=bool)
    fired[initiators] = True
    if jump.variant == "pairwise":
        inc = jump.epsilon + jump.pairwise[:, initiators].sum(axis=1)
        test = inc
    else:
        test = jump.epsilon + jump.eps_i
        inc = (jump.bar_epsilon + jump.eps_i) if jump.variant == "bar_epsilon" else test

    new = x + inc
    absorbed = ~fired & (x + test >= theta)
    new[fired | absorbed] = 0.0
    order = tuple(initiators) + tuple(int(i) for i in np.flatnonzero(absorbed))
    return State(state.t, new), order


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""
    witness: object = None
    severity: str = "error"


@dataclass
class ValidationReport:
    checks: list[Check]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks if c.severity == "error")

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def __str__(self):
        lines = []
        for c in self.checks:
            mark = "ok  " if c.passed else ("WARN" if c.severity == "warning" else "FAIL")
            lines.append(f"[{mark}] {c.name}" + (f": {c.detail}" if c.detail else ""))
        return "\n".join(lines)


def validate(model: EnsembleModel, samples: int = 2000, seed: int = 0) -> ValidationReport:
    """Check the standing assumptions of the model by evaluation and sampling."""
    checks: list[Check] = []
    flow, jump = model.flow, model.jump
    top = 1.0 + model.xi_max

    checks.append(Check("epsilon > 0", jump.epsilon > 0, f"epsilon={jump.epsilon}"))

    if jump.variant == "pairwise":
        # the most negative subset sum is the sum of the negative entries
        P = np.array(jump.pairwise, dtype=float)
        np.fill_diagonal(P, np.nan)
        neg = np.nansum(np.where(P < 0, P, 0.0), axis=1)
        smallest = np.nanmin(P, axis=1) if model.n > 1 else np.zeros(model.n)
        worst = jump.epsilon + np.where(neg < 0, neg, np.minimum(smallest, 0.0))
        i = int(np.argmin(worst))
        checks.append(Check("epsilon + sum eps_ps > 0", bool(worst.min() > 0),
                            f"min over subsets {worst.min():.6g}", i))
    else:
        base = jump.bar_epsilon if jump.variant == "bar_epsilon" else jump.epsilon
        total = base + jump.eps_i
        i = int(np.argmin(total))
        label = "bar_epsilon + eps_i > 0" if jump.variant == "bar_epsilon" else "epsilon + eps_i > 0"
        checks.append(Check(label, bool(total.min() > 0), f"min {total.min():.6g}", i))
        if jump.variant == "bar_epsilon":
            total = jump.epsilon + jump.eps_i
            checks.append(Check("epsilon + eps_i > 0", bool(total.min() > 0), f"min {total.min():.6g}"))

    neg_eps = np.flatnonzero(jump.eps_i < 0)
    checks.append(Check(
        "no inhibitory-leaning perturbation", neg_eps.size == 0,
        "" if neg_eps.size == 0 else f"eps_i < 0 for oscillators {neg_eps.tolist()}",
        neg_eps.tolist() or None, severity="warning"))

    if flow.kind == "leaky":
        checks.append(Check("kappa > 1", flow.kappa > 1, f"kappa={flow.kappa:.6g}"))
    if flow.kind == "quadratic":
        checks.append(Check("c > 0", flow.params["c"] > 0))

    s = np.linspace(0.0, top, samples)
    fs = flow(s)
    k = int(np.argmin(fs))
    checks.append(Check("f positive", bool(fs.min() > 0), f"min f={fs.min():.6g}", float(s[k])))
    tol = 1e-12 * max(1.0, abs(flow.upper_bound))
    lo_bad = np.flatnonzero(fs < flow.lower_bound - tol)
    hi_bad = np.flatnonzero(fs > flow.upper_bound + tol)
    checks.append(Check("mu <= f <= M", lo_bad.size == 0 and hi_bad.size == 0,
                        f"mu={flow.lower_bound:.6g}, M={flow.upper_bound:.6g}",
                        None if lo_bad.size + hi_bad.size == 0 else float(s[np.r_[lo_bad, hi_bad][0]])))
    checks.append(Check("mu > 0", flow.lower_bound > 0, f"mu={flow.lower_bound:.6g}"))
    # difference quotients, skipping pairs that straddle a breakpoint
    dq = np.abs(np.diff(fs)) / np.diff(s)
    straddle = np.zeros(dq.size, dtype=bool)
    for b in flow.breakpoints:
        straddle |= (s[:-1] < b) & (s[1:] > b) | np.isclose(s[:-1], b) | np.isclose(s[1:], b)
    dq = np.where(straddle, 0.0, dq)
    k = int(np.argmax(dq))
    checks.append(Check("lipschitz bound", bool(dq[k] <= flow.lipschitz * (1 + 1e-6) + 1e-12),
                        f"max slope {dq[k]:.6g}, l={flow.lipschitz:.6g}", float(s[k])))

    rng = np.random.default_rng(seed)
    pts = rng.random((max(samples // 10, 50), model.n)) * top
    phi_bad = None
    zeta_bad = None
    for x in pts:
        if phi_bad is None and np.any(np.abs(model.coupling(x)) > model.coupling.bounds + 1e-12):
            phi_bad = x
        if zeta_bad is None and np.any(np.abs(model.thresholds(x)) > model.thresholds.bounds + 1e-12):
            zeta_bad = x
    checks.append(Check("|phi_i| <= mu_i", phi_bad is None, "", phi_bad))
    checks.append(Check("|zeta_i| <= xi_i", zeta_bad is None, "", zeta_bad))
    mu_max = float(model.coupling.bounds.max(initial=0.0))
    checks.append(Check("max mu_i < mu", mu_max < flow.lower_bound,
                        f"max mu_i={mu_max:.6g}, mu={flow.lower_bound:.6g}"))
    return ValidationReport(checks)
