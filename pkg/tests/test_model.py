import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad, solve_ivp

from ifire.model import (
    CouplingSpec,
    DomainError,
    EnsembleModel,
    FreeFlow,
    JumpSpec,
    ModelError,
    State,
    ThresholdSpec,
    apply_firing,
    make_catalog_model,
    random_initial_state,
    validate,
)


def pair(eps=0.2, eps_i=None, **jump):
    flow = FreeFlow.leaky(2.0, 1.0)
    return EnsembleModel(2, flow, CouplingSpec.none(2), ThresholdSpec.none(2), JumpSpec.make(2, eps, eps_i, **jump))


def trio(eps=0.2, eps_i=None, **jump):
    flow = FreeFlow.leaky(2.0, 1.0)
    return EnsembleModel(3, flow, CouplingSpec.none(3), ThresholdSpec.none(3), JumpSpec.make(3, eps, eps_i, **jump))


# -- firing rule ---------------------------------------------------------------

def test_single_pulse_increments_and_resets():
    post, fired = apply_firing(pair(), State(1.0, [1.0, 0.3]), [0])
    assert fired == (0,)
    assert post.x.tolist() == pytest.approx([0.0, 0.5])
    assert post.t == 1.0


def test_pulses_are_not_additive():
    # two oscillators fire together; the third still receives one epsilon
    post, fired = apply_firing(trio(), State(0.0, [1.0, 1.0, 0.1]), [0, 1])
    assert fired == (0, 1)
    assert post.x[2] == pytest.approx(0.3)


def test_absorbed_oscillator_resets_and_sends_nothing():
    # x1 reaches threshold from the pulse; x2 must not get a second pulse
    post, fired = apply_firing(trio(), State(0.0, [1.0, 0.85, 0.1]), [0])
    assert fired == (0, 1)
    assert post.x.tolist() == pytest.approx([0.0, 0.0, 0.3])


def test_firer_ordering_initiators_then_absorbed():
    m = EnsembleModel(4, FreeFlow.leaky(2, 1), CouplingSpec.none(4), ThresholdSpec.none(4), JumpSpec.make(4, 0.2))
    _, fired = apply_firing(m, State(0.0, [0.9, 1.0, 0.1, 1.0]), [3, 1])
    assert fired == (1, 3, 0)


def test_per_oscillator_jump_offsets():
    post, _ = apply_firing(pair(eps_i=[0.0, -0.05]), State(0.0, [1.0, 0.3]), [0])
    assert post.x[1] == pytest.approx(0.45)


def test_bar_epsilon_variant_separates_test_and_increment():
    m = trio(variant="bar_epsilon", bar_epsilon=0.1)
    post, fired = apply_firing(m, State(0.0, [1.0, 0.85, 0.5]), [0])
    # reset test with eps = 0.2 absorbs x1; x2 moves by bar_epsilon
    assert fired == (0, 1)
    assert post.x[2] == pytest.approx(0.6)


def test_pairwise_variant_sums_over_initiators():
    P = np.array([[0, 0.01, 0.02], [0.03, 0, 0.04], [0.05, 0.06, 0]])
    m = trio(variant="pairwise", pairwise=P)
    post, _ = apply_firing(m, State(0.0, [1.0, 1.0, 0.1]), [0, 1])
    assert post.x[2] == pytest.approx(0.1 + 0.2 + 0.05 + 0.06)


@pytest.mark.parametrize("x, fire, err", [
    ([0.5, 0.3], [0], ValueError),
    ([1.0, 0.3], [], ValueError),
    ([1.0, 0.3], [2], ValueError),
    ([1.5, 0.3], [0], DomainError),
    ([1.0, -0.1], [0], DomainError),
])
def test_firing_errors(x, fire, err):
    with pytest.raises(err):
        apply_firing(pair(), State(0.0, x), fire)


@given(st.lists(st.floats(0, 1), min_size=3, max_size=3), st.sets(st.integers(0, 2), min_size=1))
def test_firing_postconditions(x, fire):
    x = np.array(x)
    x[list(fire)] = 1.0
    post, fired = apply_firing(trio(), State(0.0, x), fire)
    assert set(fire) <= set(fired)
    assert np.all(post.x[list(fired)] == 0)
    rest = [i for i in range(3) if i not in fired]
    assert np.allclose(post.x[rest], x[rest] + 0.2)
    assert np.all(post.x[rest] < 1.0)


# -- flows ---------------------------------------------------------------------

def _ivp(flow, x0, t):
    sol = solve_ivp(lambda _, y: flow(y), (0, t), [x0], method="DOP853", rtol=1e-13, atol=1e-14)
    return sol.y[0, -1]


@pytest.mark.parametrize("flow", [FreeFlow.leaky(2, 1), FreeFlow.leaky(1.5, 0.7), FreeFlow.quadratic(1.0),
                                  FreeFlow.quadratic(0.5), FreeFlow.piecewise_linear()])
@pytest.mark.parametrize("x0, t", [(0.0, 0.1), (0.2, 0.15), (0.5, 0.05)])
def test_closed_form_solution_matches_reference_ode_solver(flow, x0, t):
    assert flow.solution(x0, t) == pytest.approx(_ivp(flow, x0, t), abs=1e-9)


@pytest.mark.parametrize("flow", [FreeFlow.leaky(2, 1), FreeFlow.quadratic(1.0), FreeFlow.quadratic(3.0),
                                  FreeFlow.piecewise_linear()])
@pytest.mark.parametrize("x0", [0.0, 0.25, 0.6, 0.9])
def test_time_to_threshold_matches_quadrature(flow, x0):
    ref, _ = quad(lambda s: 1.0 / flow(s), x0, 1.0, points=[1 / 3, 2 / 3], epsabs=1e-13)
    assert flow.time_to(x0, 1.0) == pytest.approx(ref, abs=1e-11)


def test_catalog_periods():
    assert FreeFlow.leaky(2, 1).time_to(0.0) == pytest.approx(math.log(2))
    assert FreeFlow.quadratic(1).time_to(0.0) == pytest.approx(math.pi / 4)
    assert FreeFlow.piecewise_linear().time_to(0.0) == pytest.approx(2 / 3 * math.log(4 / 3) + 1 / 9)


def test_quadratic_solution_scales_with_sqrt_c():
    c = 0.25
    t = 0.7
    assert FreeFlow.quadratic(c).solution(0.0, t) == pytest.approx(math.sqrt(c) * math.tan(math.sqrt(c) * t))


@settings(max_examples=50)
@given(st.floats(0.0, 0.95), st.floats(0.0, 1.0))
def test_time_to_inverts_solution(x0, frac):
    for flow in (FreeFlow.leaky(2, 1), FreeFlow.quadratic(1), FreeFlow.piecewise_linear()):
        t = frac * flow.time_to(x0)
        assert flow.time_to(x0, flow.solution(x0, t)) == pytest.approx(t, abs=1e-10)


def test_flow_bounds():
    f = FreeFlow.piecewise_linear()
    s = np.linspace(0, 1, 3001)
    assert f.lower_bound <= f(s).min() and f(s).max() <= f.upper_bound
    q = FreeFlow.quadratic(0.5)
    assert q.lower_bound == 0.5 and q.upper_bound == 1.5 and q.lipschitz == 2.0


# -- catalog and validation ----------------------------------------------------

@pytest.mark.parametrize("kind, params", [
    ("leaky", {"S": 1.0, "gamma": 1.0, "epsilon": 0.2}),
    ("leaky", {"kappa": 0.9, "epsilon": 0.2}),
    ("quadratic", {"c": 0.0, "epsilon": 0.1}),
    ("quadratic", {"c": 1.0, "epsilon": 0.0}),
    ("cross_coupled", {"S": 2.0, "gamma": 1.0, "beta": 1.0, "epsilon": 0.2}),
    ("cross_coupled", {"S": 2.0, "gamma": 1.0, "beta": 0.1, "epsilon": 0.2, "n": 3}),
    ("random_leaky_ensemble", {"epsilon": 0.08}),
    ("no_such_model", {"epsilon": 0.1}),
])
def test_catalog_rejects_bad_parameters(kind, params):
    with pytest.raises(ModelError):
        make_catalog_model(kind, **params)


def test_catalog_aliases():
    a = make_catalog_model("peskin", kappa=2.0, epsilon=0.2)
    b = make_catalog_model("leaky", S=2.0, gamma=1.0, epsilon=0.2)
    x = np.array([0.1, 0.7])
    assert np.array_equal(a.rhs(x), b.rhs(x))


def test_mean_field_coupling():
    m = make_catalog_model("mean_field", S=2.0, gamma=1.0, beta=0.3, epsilon=0.1, n=4)
    x = np.array([0.1, 0.2, 0.3, 0.4])
    expected = 2.0 - x + 0.3 / 3 * (x.sum() - x)
    assert np.allclose(m.rhs(x), expected)


def test_random_ensemble_is_seeded_and_in_range():
    a = make_catalog_model("random_leaky_ensemble", seed=5, epsilon=0.08)
    b = make_catalog_model("random_leaky_ensemble", seed=5, epsilon=0.08)
    c = make_catalog_model("random_leaky_ensemble", seed=6, epsilon=0.08)
    x = np.linspace(0, 1, 100)
    assert np.array_equal(a.rhs(x), b.rhs(x))
    assert not np.array_equal(a.rhs(x), c.rhs(x))
    # f_i(s) = (3 + .01 m) - (2 + .01 z) s, m, z in [0, 1)
    assert np.all(a.rhs(np.zeros(100)) >= 3.0) and np.all(a.rhs(np.zeros(100)) < 3.01)
    theta = a.threshold(x)
    assert np.all(theta >= 1.0) and np.all(theta < 1.005)
    assert validate(a).ok


def test_initial_state_stream_is_reproducible():
    assert np.array_equal(random_initial_state(10, 3), random_initial_state(10, 3))
    assert not np.array_equal(random_initial_state(10, 3), random_initial_state(10, 4))
    x = random_initial_state(1000, 0)
    assert x.min() >= 0 and x.max() < 1


def test_validate_flags_inhibitory_totals():
    report = validate(pair(eps_i=[0.0, -0.25]))
    assert not report.ok
    assert not report["epsilon + eps_i > 0"].passed


def test_validate_catalog_models_pass():
    for kind, params in [("leaky", dict(S=2, gamma=1, epsilon=0.2)), ("quadratic", dict(c=1, epsilon=0.1)),
                         ("piecewise_linear", dict(epsilon=0.1)),
                         ("cross_coupled", dict(S=2, gamma=1, beta=0.05, epsilon=0.2))]:
        report = validate(make_catalog_model(kind, **params))
        assert report.ok, str(report)


def test_validate_reports_kappa():
    m = EnsembleModel(2, FreeFlow.leaky(0.8, 1.0), CouplingSpec.none(2), ThresholdSpec.none(2), JumpSpec.make(2, 0.2))
    report = validate(m)
    assert not report["kappa > 1"].passed


def test_jump_spec_rejects_nonpositive_epsilon():
    with pytest.raises(ModelError):
        JumpSpec.make(2, 0.0)


def test_state_is_read_only():
    s = State(0.0, [0.1, 0.2])
    with pytest.raises(ValueError):
        s.x[0] = 1.0


def test_increment_does_not_depend_on_firing_set_size():
    m = EnsembleModel(5, FreeFlow.leaky(2, 1), CouplingSpec.none(5), ThresholdSpec.none(5),
                      JumpSpec.make(5, 0.1, [0.0, 0.0, 0.0, 0.0, 0.02]))
    x = np.array([1.0, 1.0, 1.0, 0.2, 0.3])
    for fire in ([0], [0, 1], [0, 1, 2]):
        x_ = x.copy()
        x_[[i for i in range(3) if i not in fire]] = 0.5
        post, _ = apply_firing(m, State(0.0, x_), fire)
        assert post.x[3] == pytest.approx(0.3) and post.x[4] == pytest.approx(0.42)


def test_catalog_right_hand_sides_match_formulas():
    s = np.random.default_rng(0).random(1000)
    assert np.allclose(make_catalog_model("quadratic", c=0.7, epsilon=0.1).flow(s), s ** 2 + 0.7, rtol=1e-15)
    assert np.allclose(make_catalog_model("leaky", S=2.5, gamma=1.5, epsilon=0.1).flow(s), 2.5 - 1.5 * s,
                       rtol=1e-15)
    f = make_catalog_model("piecewise_linear", epsilon=0.1).flow(s)
    ref = np.where(s <= 1 / 3, 4 - 3 * s, np.where(s <= 2 / 3, 3.0, 4 - 3 * (s - 2 / 3)))
    assert np.allclose(f, ref, rtol=1e-15)
    m = make_catalog_model("cross_coupled", S=2, gamma=1, beta=0.3, epsilon=0.1)
    for x in s.reshape(-1, 2)[:50]:
        assert np.allclose(m.rhs(x), [2 - x[0] + 0.3 * x[1], 2 - x[1] + 0.3 * x[0]], rtol=1e-15)
