"""Time-slotted simulator and optimization library for token-aware LLM task
offloading across heterogeneous edge and cloud servers."""

from .core import (Assignment, ConfigError, ExperimentConfig, LinkState,
                   SamplingRanges, Server, SystemConfig, Task, Tier,
                   default_config, load_config, save_config, validate_config)
from .delays import comm_delay, comp_delay
from .lyapunov import (SlotObjective, VirtualQueueBank, diagnostics,
                       drift_plus_penalty, excess, lyapunov_function,
                       slot_cost_zeta, update_queues)
from .policies import POLICY_NAMES, Policy, SlotState, make_policy
from .simulator import (Environment, RunReport, SlotRecord, run,
                        sample_environment, step)
from .solver import SolverParams, solve
from .workload import (Predictor, TablePredictor, Trace, WorkloadModel,
                       generate_trace, load_predictions, load_trace,
                       make_predictor, save_predictions, save_trace,
                       workload_units)

__version__ = "0.1.0"
