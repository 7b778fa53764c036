"""Simulation and numerical-verification lab for directed polymers on
disordered binary trees."""

from .cascade import (PartitionSample, TreeSpec, enumerate_partition,
                      energy_window_mass, gibbs_sample_path,
                      gibbs_window_mass, log_partition, min_energy_stats)
from .environment import (CriticalPoint, EnvironmentModel,
                          annealed_perturbed_moment, cgf, cgf_d1, cgf_d2,
                          free_energy, solve_beta_c)
from .errors import BudgetExceeded, NoFiniteCriticalPoint, QuadratureError
from .estimators import (ExponentFit, MomentEstimate, fit_exponent,
                         fractional_moment, growth_rate_check,
                         perturbation_inequality_check)
from .noise import NodeId, derive_key, node_variate
from .rwfunctional import (FunctionalSpec, bm_functional_quadrature,
                           bm_joint_density, mc_functional, scaling_params)
from .spine import (SpineIncrementDist, SpineWalk, many_to_one,
                    sample_spine_increment, sample_spine_walk)

__version__ = "1.0.0"

__all__ = [
    "BudgetExceeded", "CriticalPoint", "EnvironmentModel", "ExponentFit",
    "FunctionalSpec", "MomentEstimate", "NoFiniteCriticalPoint", "NodeId",
    "PartitionSample", "QuadratureError", "SpineIncrementDist", "SpineWalk",
    "TreeSpec", "annealed_perturbed_moment", "bm_functional_quadrature",
    "bm_joint_density", "cgf", "cgf_d1", "cgf_d2", "derive_key",
    "energy_window_mass", "enumerate_partition", "fit_exponent",
    "fractional_moment", "free_energy", "gibbs_sample_path",
    "gibbs_window_mass", "growth_rate_check", "log_partition",
    "many_to_one", "mc_functional", "min_energy_stats", "node_variate",
    "perturbation_inequality_check", "sample_spine_increment",
    "sample_spine_walk", "scaling_params", "solve_beta_c",
]
