"""
Multi-cell MIMO coordination by maximizing a difference-of-log-and-trace
(DLT) lower bound on the sum-rate.

The bound decouples the sum-rate problem into independent per-user
subproblems, each solved by non-homogeneous waterfilling. Benchmarks
(max-SINR, MMSE, WMMSE, uncoordinated eigen-beamforming), pilot-overhead
formulas and a Monte-Carlo harness are included.
"""

from .benchmarks import (eigen_beamforming, max_sinr_step, mmse_receiver, mmse_step,
                         run_benchmark, wmmse_step)
from .dlt import (DltValue, dlt_form_offset, dlt_gap_estimate, dlt_network_bound,
                  dlt_user_bound, run_forward_backward, run_max_dlt, update_receive_filters,
                  update_transmit_filters)
from .errors import (ConfigurationError, InfeasibleRootError, NumericalError,
                     SingularMatrixError, TrialError)
from .harness import (ExperimentSpec, ResultRow, Sweep, aggregate, emit_results, load_spec,
                      parse_spec, preset_names, read_results, run_experiment)
from .network import (ChannelSet, CovariancePair, FilterBank, NetworkConfig,
                      backward_covariances, calibrate_noise, forward_covariances,
                      generate_channels, network_sum_rate, random_filters, user_rate,
                      user_rates)
from .overhead import (AlgorithmId, OverheadReport, flop_estimate, overhead_ccp_wmmse,
                       overhead_for, overhead_prop, overhead_report, overhead_wmmse)
from .trace import IterationRecord, RunTrace
from .waterfill import (WaterfillProblem, WaterfillSolution, nonhomogeneous_waterfill,
                        solve_mu, whiten)

__version__ = "0.1.0"
