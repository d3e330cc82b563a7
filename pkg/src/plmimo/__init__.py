"""Link-level MIMO simulation toolkit built around a perturbed linear
soft-output demapper with optional lattice reduction, LDPC-coded
evaluation, and Bayesian-optimization parameter tuning."""

__version__ = "0.1.0"

from .constellation import (
    Constellation,
    bits_to_symbols,
    build_constellation,
    quantize_to_constellation,
    symbols_to_bits,
)
from .channel import ChannelInstance, sample_channel, transmit
from .linfilter import mmse_filter, soft_linear_llrs, zf_filter
from .lattice import (
    ReducedBasis,
    log_orthogonality_defect,
    quantize_reduced,
    reduce_lattice,
    remap_to_constellation,
)
from .plm import (
    CandidateSet,
    DemapperParams,
    PerturbationSpec,
    generate_candidates,
    max_log_llrs,
    plm_demap,
    sample_perturbations,
)
from .oracle import exact_lse_llrs, exact_max_log_llrs, ml_detect
from .ldpc import LdpcCode, decode, encode, load_code
from .tuner import expected_improvement, gp_fit, optimize, tune_demapper
from .harness import SimConfig, flops_estimate, run_ber_sweep, run_oracle_check
