"""fedsim: a desk-scale federated-learning simulator built around
multi-objective (minimum-norm) server aggregation, with classic
baselines, loss-inflation attacks, and per-user fairness metrics."""

from .aggregators import (AggregatorConfig, ServerState, StepSchedule,
                          aggregate, step_size)
from .clients import (AttackSpec, ClientReturn, UserTask, apply_attack,
                      client_update, normalize_update)
from .config import (ClientConfig, DataConfig, ExperimentConfig, build_config,
                     load_config)
from .core import axpy, dot, l2_norm, make_rng
from .data import (Dataset, FederatedSplit, UserSplit, gen_synthetic,
                   iid_partition, load_csv, shard_partition)
from .errors import (ArgumentError, DimensionError, FedsimError, FormatError,
                     InfeasibleError, NonFiniteError, UnsupportedError)
from .metrics import (RoundReport, pct_improved, stationarity_residual,
                      user_accuracy_stats)
from .models import Batch, ModelSpec, accuracy, grad, init_params, loss
from .qp import (QpProblem, QpSolution, is_pareto_stationary,
                 project_box_simplex, solve_min_norm, uniform_weights)
from .runner import RunResult, run, sample_participants, write_report_csv

__version__ = "0.1.0"
