"""Dynamic-regret analysis of feedback controllers under switching costs."""

from .errors import (ConfigError, DimensionError, DwellTooShortError, InputBoundViolation,
                     NotSchurStableError, NotSummableError, ReglabError, RolloutError, ScheduleError)
from .dynamics import (SteadyStatePair, SystemModel, solve_steady_input, steady_pair, step,
                       validate_steady_state)
from .costs import (CostSchedule, CostSegment, DwellSpec, check_dwell, dwell_count, eval_cost,
                    generate_admissible_schedule, lipschitz_constant, path_length, switch_times)
from .controllers import (Controller, Example1Baseline, Example1Improved, LinearFeedback,
                          make_controller, register_controller, spectral_envelope)
from .closedloop import Trajectory, rollout
from .metrics import (RateCertificate, certify_rate, classify_summability, dynamic_regret,
                      fit_input_bound, lyapunov_tail, lyapunov_tails, phi_envelope, tracking_sums)
from .bounds import (BoundReport, brute_force_sum_product, delta_bar, lemma2_P, min_dwell,
                     min_dwell_exponential, sigma_sum, theorem2_bound)

__version__ = "0.1.0"
