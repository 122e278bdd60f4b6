"""
Vector perturbation precoding: sphere encoding, exact and bounded sum
rates, rate allocation and greedy user scheduling.
"""

from .allocation import AllocationResult, allocate, allocated_sum_rate, \
    waterfill_once
from .errors import (BoxTooSmall, ConfigError, DegenerateBasis, DomainError,
                     RankDeficient, SingularGenerator, TooManyUsers, VPError)
from .experiments import ExperimentConfig, ResultTable, gen_channel, run
from .lattice import brute_force_closest, closest_point, modulo_cube
from .linalg import dvq_decompose, gram_det, pseudoinverse
from .precoding import (Mode, PrecoderConfig, encode, ese_lower_bound,
                        estimate_ese)
from .rates import (mi_exact, mi_piecewise, omega, r_vp_pw, sum_rate_exact,
                    sum_rate_lower, sum_rate_ra, sum_rate_upper)
from .scheduling import (ChannelSet, SelectionTrace, exhaustive_select,
                         greedy_zf_select, grm_select, sus_select)

__version__ = '0.1.0'
