"""Straggler-mitigation schemes for distributed gradient descent.

Coded (gradient coding, Lagrange) and uncoded multi-message schemes, their
completion-time analytics under a shifted-exponential worker model, and a
deterministic-given-seed cluster simulator.
"""

from .errors import CodedGdError, ConfigError, DecodingError, NotEnoughMessages
from .gradient import (Dataset, Partition, full_gradient, gd_step, load_csv,
                       mean_loss_scale, pad_rows, partial_gradient,
                       synthetic_dataset)
from .assignment import (ClusterLayout, MaskMatrix, cluster_split, cyclic_mask,
                         virtual_expand)
from .gc import (CodedMessage, CorrelatedPlan, GcCode, UncorrelatedPlan,
                 gc_decode, gc_decode_coeffs, gc_encode, hybrid_decode,
                 mmc_correlated_plan, mmc_uncorrelated_plan)
from .lcc import LccMessage, LccPlan, lcc_build, lcc_compute, lcc_decode, lcc_gradient
from .uncoded import RecoveryState, UncodedPlan, uc_complete, uc_ingest, uc_schedule
from .timing import (ShiftedExp, cdf_count_threshold, cdf_worker_threshold,
                     expected_completion, mc_completion_times, prob_completes_by,
                     prob_exact_count)
from .schemes import make_scheme
from .sim import (ConstantSource, DelayScenario, IterationRecord, ShiftedExpSource,
                  TraceSource, communication_load, simulate_iteration, simulate_run,
                  synthetic_trace)

__version__ = "0.1.0"
