"""Generalized Orlicz norms and their large-exponent supremal limits.

The package computes Musielak-Orlicz modulars and Luxemburg norms on box
grids, minimizes the associated energies under Dirichlet data, builds scalar
convex envelopes and the rooted-power limit density, and runs the
convergence experiments that tie the finite-exponent energies to their
supremal limits.
"""

from .domain import (Grid, GridFunction, GradientField, gradient, integrate,
                     sup_cellwise)
from .envelope import (SampledDensity, convex_envelope, q_infinity,
                       level_convexity_check, monotone_ladder_check)
from .errors import BracketError, ConfigError, HypothesisError
from .norms import (luxemburg_norm, modular, lp_norm, unit_ball_check,
                    embedding_check, holder_check, sandwich_check,
                    embedding_constant, norm_convergence_experiment)
from .phi import (Coefficient, ConstantPower, DoublePhase, ExponentSequence,
                  InfinityIndicator, OrliczFunction, SamplePlan,
                  VariableDoublePhase, VariableExponent, check_a0, check_aInc,
                  check_anchor, constant_power_ladder, evaluate, orlicz_preset,
                  variable_exponent_ladder)
from .reports import Assertion, ConvergenceReport
from .supremal import (DirichletProblem, EnergyFunctional, Integrand,
                       MinimizeOptions, energy, log_modular_energy,
                       gamma_experiment_modular, gamma_experiment_norm,
                       growth_check, make_boundary, make_integrand, minimize)

__version__ = "0.1.0"
