import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from ifire.flow import (
    DEFAULT_CONFIG,
    ExactPropagator,
    IntegratorConfig,
    NoThresholdCrossing,
    free_hit_time,
    integrate,
    integrate_flow,
    natural_period,
    next_threshold_hit,
    tilde_period,
)
from ifire.model import CouplingSpec, EnsembleModel, FreeFlow, JumpSpec, State, ThresholdSpec, make_catalog_model


def _mixed(cfg, y):
    return 10 * (cfg.abs_tol + cfg.rel_tol * np.abs(y))


@pytest.mark.parametrize("flow, exact, t_end", [
    (FreeFlow.quadratic(1.0), lambda t: np.tan(t), 0.78),
    (FreeFlow.leaky(2.0, 1.0), lambda t: 2 - 2 * np.exp(-t), 0.69),
])
def test_trajectory_agrees_with_closed_form(flow, exact, t_end):
    traj = integrate_flow(flow, 0.0, t_end)
    ts = np.linspace(0, t_end, 157)
    y = np.array([traj(t)[0] for t in ts])
    assert np.all(np.abs(y - exact(ts)) <= _mixed(DEFAULT_CONFIG, exact(ts)))
    # at the knots the plain absolute reading holds with room to spare
    assert np.all(np.abs(traj.y[:, 0] - exact(traj.t)) <= _mixed(DEFAULT_CONFIG, exact(traj.t)))


def test_tight_relative_tolerance_meets_absolute_reading():
    cfg = DEFAULT_CONFIG.replace(rel_tol=1e-12)
    traj = integrate_flow(FreeFlow.quadratic(1.0), 0.0, 0.78, cfg)
    ts = np.linspace(0, 0.78, 101)
    err = max(abs(traj(t)[0] - math.tan(t)) for t in ts)
    assert err <= 10 * cfg.abs_tol


def test_interpolant_is_close_to_resteps():
    traj = integrate_flow(FreeFlow.quadratic(1.0), 0.0, 0.78)
    for t in np.linspace(0.01, 0.77, 23):
        assert traj.interpolate(t)[0] == pytest.approx(math.tan(t), abs=1e-8)


def test_refinement_reduces_error():
    errs = []
    for rtol in (1e-6, 1e-8, 1e-10):
        cfg = DEFAULT_CONFIG.replace(rel_tol=rtol, abs_tol=rtol * 1e-2)
        traj = integrate_flow(FreeFlow.quadratic(1.0), 0.0, 0.78, cfg)
        errs.append(abs(traj.y[-1, 0] - math.tan(0.78)))
    assert errs[0] > errs[1] > errs[2]


def test_piecewise_flow_matches_solve_ivp_across_breakpoints():
    flow = FreeFlow.piecewise_linear()
    traj = integrate_flow(flow, 0.0, 0.4)
    ref = solve_ivp(lambda _, y: flow(y), (0, 0.4), [0.0], method="DOP853", rtol=1e-13, atol=1e-14,
                    dense_output=True)
    for t in np.linspace(0, 0.4, 41):
        assert traj(t)[0] == pytest.approx(ref.sol(t)[0], abs=1e-9)
        assert traj(t)[0] == pytest.approx(flow.solution(0.0, t), abs=1e-9)


@pytest.mark.parametrize("flow, T", [
    (FreeFlow.leaky(2, 1), math.log(2)),
    (FreeFlow.quadratic(1), math.pi / 4),
    (FreeFlow.piecewise_linear(), 2 / 3 * math.log(4 / 3) + 1 / 9),
])
def test_numeric_hit_time_matches_closed_form(flow, T):
    assert free_hit_time(flow, 0.0, method="numeric") == pytest.approx(T, abs=1e-9)
    assert natural_period(flow) == pytest.approx(T, abs=1e-14)


def test_tilde_period():
    flow = FreeFlow.leaky(2, 1)
    assert tilde_period(flow, 0.5) == pytest.approx(math.log(1.5 / 1.0))
    with pytest.raises(ValueError):
        tilde_period(flow, 1.5)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 0.99))
def test_hit_residual_within_event_tol(x0):
    m = make_catalog_model("quadratic", c=1.0, epsilon=0.1)
    hit = next_threshold_hit(m, State(0.0, [x0, 0.0]))
    assert hit.hitters[0] == 0
    assert abs(hit.x[0] - 1.0) <= DEFAULT_CONFIG.event_tol
    assert hit.t == pytest.approx(math.atan(1.0) - math.atan(x0), abs=1e-9)


def test_symmetric_pair_reports_both_hitters():
    m = make_catalog_model("leaky", S=2, gamma=1, epsilon=0.2)
    hit = next_threshold_hit(m, State(0.0, [0.3, 0.3]))
    assert hit.hitters == (0, 1)
    assert hit.t == pytest.approx(math.log(1.7))


def test_window_merges_near_simultaneous_crossings():
    m = make_catalog_model("leaky", S=2, gamma=1, epsilon=0.2)
    gap = 1e-10
    hit = next_threshold_hit(m, State(0.0, [0.3, 0.3 - gap]))
    assert hit.hitters == (0, 1)
    hit = next_threshold_hit(m, State(0.0, [0.3, 0.3 - 1e-5]))
    assert hit.hitters == (0,)


def test_coarse_event_tol_degrades_hit_time():
    m = make_catalog_model("leaky", S=2, gamma=1, epsilon=0.2)
    fine = next_threshold_hit(m, State(0.0, [0.0, 0.1]))
    coarse = next_threshold_hit(m, State(0.0, [0.0, 0.1]), DEFAULT_CONFIG.replace(event_tol=1e-3))
    assert fine.t == pytest.approx(math.log(1.9), abs=1e-10)
    assert abs(coarse.x[1] - 1.0) <= 1e-3
    assert abs(coarse.t - math.log(1.9)) > 1e-8


def test_no_crossing_raises():
    flow = FreeFlow.leaky(0.9, 1.0)
    m = EnsembleModel(2, flow, CouplingSpec.none(2), ThresholdSpec.none(2), JumpSpec.make(2, 0.2))
    with pytest.raises(NoThresholdCrossing):
        next_threshold_hit(m, State(0.0, [0.1, 0.2]), DEFAULT_CONFIG.replace(horizon=20.0))


def test_integrate_model_mean_field_against_solve_ivp():
    m = make_catalog_model("mean_field", S=2, gamma=1, beta=0.3, epsilon=0.1, n=3)
    x0 = np.array([0.1, 0.25, 0.4])
    traj = integrate(m, State(0.0, x0), 0.3)
    ref = solve_ivp(lambda _, y: m.rhs(y), (0, 0.3), x0, method="DOP853", rtol=1e-13, atol=1e-14)
    assert np.allclose(traj.final.x, ref.y[:, -1], atol=1e-9)


def test_trajectory_rejects_out_of_range_and_backwards():
    traj = integrate_flow(FreeFlow.leaky(2, 1), 0.0, 0.5)
    with pytest.raises(ValueError):
        traj(0.6)
    with pytest.raises(ValueError):
        integrate_flow(FreeFlow.leaky(2, 1), 0.0, -1.0)


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(rel_tol=0)
    with pytest.raises(ValueError):
        DEFAULT_CONFIG.replace(simultaneity_window=-1)


@pytest.mark.parametrize("kind, params", [
    ("leaky", dict(S=2, gamma=1, epsilon=0.2)),
    ("quadratic", dict(c=1, epsilon=0.1)),
    ("piecewise_linear", dict(epsilon=0.1)),
])
def test_exact_propagator_agrees_with_integrator(kind, params):
    m = make_catalog_model(kind, **params)
    prop = ExactPropagator(m)
    for x in ([0.0, 0.1], [0.45, 0.2], [0.9, 0.95]):
        s = State(0.0, x)
        a = prop.next_hit(s)
        b = next_threshold_hit(m, s)
        assert a.t == pytest.approx(b.t, abs=1e-9)
        assert a.hitters == b.hitters
        assert np.allclose(a.x, b.x, atol=1e-9)


def test_exact_propagator_refuses_coupled_models():
    with pytest.raises(ValueError):
        ExactPropagator(make_catalog_model("cross_coupled", S=2, gamma=1, beta=0.1, epsilon=0.2))
