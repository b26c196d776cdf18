"""Simulation and diagnostics for randomly perturbed self-similar measures on the line."""

from .ifs import (InvalidSystemError, SelfSimilarIFS, cylinder_ratio, deterministic_project,
                  similarity_dimension, typical_dimensions)
from .measure import (BernoulliMeasure, cylinder_mass, local_dimension_exponent, lq_dimension,
                      sample_word, satisfies_local_bound)
from .perturbation import (PerturbationDistribution, admissible_for, decay_exponent_estimate,
                           fourier_transform, sample_value)
from .realization import (AtomicApproximation, BudgetExceededError, Cover, atomic_approximation,
                          attractor_cover, node_perturbation, trial_seed)
from .spectral import (SpectralProfile, empirical_characteristic, mean_characteristic,
                       pair_characteristic, truncated_inverse_density)
from .regularity import (DensityEstimate, ball_density, hoelder_exponent_estimate,
                         interior_candidate, lebesgue_upper_bound, moment_scaling,
                         smoothed_density)

__version__ = "0.1.0"
