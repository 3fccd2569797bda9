"""Consistency probability of soft-state sensor data distribution systems."""
from .chains import (MACRO_STATES, Generator, ModelKind, StateSpace, aggregate,
                     build_generator, build_state_space)
from .params import (CASE_1, CASE_2, SddsParams, TransitionRates, erlang_mgf,
                     erlang_no_event_prob, preset, rate_erroneous_removal,
                     rate_refresh_success, rate_refresh_success_reliable,
                     rate_update_loss, rate_update_success, simplified_no_event_prob)
from .reference import EmbeddedChain, embedded_chain, reference_steady_state
from .simulation import (SimConfig, SimReport, SimulationError, simulate,
                         simulate_packet_level, simulate_state_level)
from .solvers import (ConvergedValue, SolverError, SweepResult, converged_steady_state,
                      macro_steady_state, steady_state, sweep_k, transient)

__version__ = "0.1.0"
