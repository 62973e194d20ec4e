"""Rate region, capacity bounds and coding simulation for the diamond channel
with one noisy and one noiseless relay."""

__version__ = "0.1.0"

from .channel import Dmc, binary_entropy_inverse, build_paper_example, dmc_from_matrix
from .coding import SimConfig, SimOutcome, generate_codebooks, run_trials, strongly_typical
from .errors import InvalidArgument, InvalidChannel, InvalidDistribution, ResourceLimitError
from .optimize import OptimizationResult, OptimizerConfig, maximize_rate, penalized_objective
from .prob import ConditionalKernel, JointPmf, Pmf, csiszar_sum_check, entropy, mutual_information
from .region import (DiamondDistribution, RateTriple, RegionEval, check_triple, corner_points,
                     cut_set_bound, dual_bounds, evaluate_bounds, joint_from_factors)
