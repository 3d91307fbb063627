"""Pulse-coupled integrate-and-fire oscillators.

Hybrid simulation (flow plus firing jumps), the two-oscillator firing map
and its synchronization regions, timing and perturbation bounds, and the
reduction of cooperative ensembles to a pair.
"""
from .model import (
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
from .flow import (
    DEFAULT_CONFIG,
    IntegratorConfig,
    free_hit_time,
    integrate,
    integrate_flow,
    natural_period,
    next_threshold_hit,
    tilde_period,
)
from .firing_map import (
    FiringMap,
    a_sequence,
    analyze,
    build_map_closed,
    build_map_numeric,
    check_conditions,
    classify,
    fixed_point,
    iterate,
    kamke_check,
    kamke_reduce,
    map_for,
    period2_points,
    periodic_points,
    perturbation_bound,
    sync_partition,
    sync_window,
)
from .simulation import (
    FiringLog,
    audit_theorem,
    detect_clusters,
    detect_period,
    replicate_ensemble_experiment,
    run,
    sync_index,
    sync_time,
)

__version__ = "0.1.0"
