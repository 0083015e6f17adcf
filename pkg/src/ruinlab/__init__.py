"""ruinlab: ruin probabilities under mixed Poisson claim arrivals.

Exact ladder-height Monte Carlo and tilted importance sampling for classical
and modified ruin, together with the asymptotic constants and predictions of
the heavy-tail, fixed-intensity, endpoint-atom and endpoint-density regimes.
"""

from .asymptotics import (AsymptoticConstants, EndpointRegularity,
                          adjustment_coefficient, atom_prediction, constants,
                          cramer_constant, endpoint_regularity,
                          gamma_function, heavy_prediction, heavy_prefactor,
                          limiting_ratio_constant, lundberg_residual,
                          overshoot_limit_tail, sharp_prediction)
from .distributions import (ClaimDistribution, EndpointExpansion, Exponential,
                            Gamma, MixingDensity, MixingDistribution, Mixture,
                            Pareto, TailClass, atom_mixing,
                            endpoint_power_mixing, point_mass, uniform_mixing)
from .errors import (AcceptanceRateError, ConfigError, DegenerateDenominator,
                     DerivativeUnstable, DomainError, HypothesisViolation,
                     NetProfitViolation, NoRoot, QuadratureFailure,
                     RuinLabError, StratificationError)
from .harness import (ExperimentConfig, load_config, parse_config,
                      quadrature_exact_mixed, run, select_regime,
                      severity_weight_mean_exponential, trend_statistic)
from .ladder import (Estimate, PairedEstimate, PathOutcome, RiskModel,
                     RuinSample, estimate_classical, estimate_modified,
                     estimate_paired, ruined_deficits, sample_ruin_ladder,
                     simulate_path)
from .rare_event import (StratifiedEstimate, TiltedStepSampler,
                         is_deficit_sample, is_estimate, is_estimate_mixed,
                         is_estimate_paired, is_sample, tilted_sampler)
from .rules import (Classical, DeficitThreshold, ExponentialAbsorption,
                    HypothesisReport, Regime, Rule, Tabulated,
                    check_hypotheses)
from .streams import BLOCK_SIZE, block_plan, make_stream, stream_index

__version__ = "0.1.0"
