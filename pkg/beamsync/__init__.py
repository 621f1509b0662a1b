"""Beamsync - one-bit feedback phase synchronisation for distributed beamforming."""
from beamsync.errors import ArgumentError, BeamsyncError, ConfigError, DegenerateInputError, DomainError
from beamsync.phasor import SensorEnsemble, g_opt, mag, rotate_to_zero_phase
from beamsync.perturbation import PerturbationDist, Moments, feasibility_check, make_dist, moments
from beamsync.protocol import ProtocolState, TraceRecord, init_state, protocol_step, run_protocol, simulate
from beamsync.analytic import model_step, run_model
from beamsync.optimizer import optimize_step_params, run_optimized_model
from beamsync.scalability import check_theorem2, k_lower_bound, scaling_sweep, time_to_fraction
from beamsync.models import ExperimentConfig
from beamsync.main import Experiments
from beamsync.experiments import get_experiment_class, register_experiment
from beamsync.writers import get_writer, register_writer

__all__ = [
    # Errors
    'BeamsyncError',
    'ArgumentError',
    'DegenerateInputError',
    'DomainError',
    'ConfigError',
    # Core
    'SensorEnsemble',
    'mag',
    'g_opt',
    'rotate_to_zero_phase',
    'PerturbationDist',
    'Moments',
    'make_dist',
    'moments',
    'feasibility_check',
    'ProtocolState',
    'TraceRecord',
    'init_state',
    'protocol_step',
    'run_protocol',
    'simulate',
    'model_step',
    'run_model',
    'optimize_step_params',
    'run_optimized_model',
    'check_theorem2',
    'k_lower_bound',
    'scaling_sweep',
    'time_to_fraction',
    # Harness
    'ExperimentConfig',
    'Experiments',
    'get_experiment_class',
    'register_experiment',
    'get_writer',
    'register_writer',
]

__version__ = '0.1.0'
