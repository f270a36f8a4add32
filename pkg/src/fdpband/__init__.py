"""Competition-based false discovery proportion control.

Target-decoy (or knockoff) competition assigns each hypothesis a winning
score and a target/decoy-win label; under the fair-coin behavior of true
nulls, the decoy wins carry enough information to control or bound the false
discovery proportion among the reported target wins.  This package provides
the stepdown FDP procedure and its randomized refinement, three upper
prediction bands with the FDP-controlling and TDC-bounding procedures built
on them, the Monte-Carlo quantile tables the bands need, seeded data
generators with ground truth, and a replicate evaluation harness.
"""

from ._util import DEFAULT_SEED, ConfigurationError, DomainError
from .bands import (BandSpec, bound_tdc_fdp, compute_d_infty, compute_d_max_tdc,
                    kr_constant, run_fdp_band, run_tdc)
from .core import (CompetitionSequence, DiscoveryReport, LabeledHypothesis,
                   ScorePair, SimulationTruth, build_sequence, compete, true_fdp)
from .distributions import binom_cdf_half, nb_cdf_half, nb_quantile, nb_upper_tail
from .harness import (BOUND_METHODS, PROCEDURES, EvaluationSummary, GeneratorSpec,
                      TableSet, clopper_pearson, relative_power_loss, run_evaluation)
from .mc_quantiles import (StandardizedQuantileTable, UniformQuantileTable,
                           build_tables, draw_u_gamma, load_table, save_table,
                           z_quantile)
from .simgen import (SpectrumIdParams, default_location_scale_pool,
                     gen_generic_null, gen_spectrum_id, load_pool)
from .stepdown import (DeltaTable, compute_delta_table, compute_i0, run_fdp_sd,
                       run_fdp_sd_randomized)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_SEED", "ConfigurationError", "DomainError",
    "ScorePair", "LabeledHypothesis", "CompetitionSequence", "DiscoveryReport",
    "SimulationTruth", "compete", "build_sequence", "true_fdp",
    "binom_cdf_half", "nb_cdf_half", "nb_upper_tail", "nb_quantile",
    "DeltaTable", "compute_i0", "compute_delta_table", "run_fdp_sd",
    "run_fdp_sd_randomized",
    "BandSpec", "run_tdc", "kr_constant", "compute_d_max_tdc", "compute_d_infty",
    "run_fdp_band", "bound_tdc_fdp",
    "UniformQuantileTable", "StandardizedQuantileTable", "build_tables",
    "draw_u_gamma", "z_quantile", "save_table", "load_table",
    "SpectrumIdParams", "gen_spectrum_id", "gen_generic_null",
    "default_location_scale_pool", "load_pool",
    "GeneratorSpec", "TableSet", "EvaluationSummary", "run_evaluation",
    "clopper_pearson", "relative_power_loss", "PROCEDURES", "BOUND_METHODS",
]
