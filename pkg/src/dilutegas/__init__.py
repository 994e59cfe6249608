"""Finite-discretization toolkit for the low-density limit of a test
particle coupled to a dilute Bose gas: spectral kernels, one-particle
scattering, finite-fugacity Wick correlators and their causal limits, and
the reduced collision dynamics."""

from .model import (EnergyMesh, ModelError, ReservoirModel, SpectralDensity,
                    SystemModel, build_mesh, free_phase, inner,
                    spectral_density, weighted_inner)
from .kernels import (GammaTable, gamma_pv, gamma_resolvent, pair_gamma_pv,
                      pair_gamma_resolvent)
from .scattering import (ScatteringData, ScatteringError, SMatrix,
                         assemble_s_matrix, assemble_t_operator, build_r,
                         build_t0_t1, lippmann_schwinger_oracle,
                         oracle_comparison, refinement_study,
                         unitarity_report)
from .wick import (CorrelatorSpec, PairingDiagram, ResourceError,
                   diagram_scaling_report, enumerate_pairings,
                   finite_xi_correlator, simplex_exp_integral)
from .limits import (convergence_study, factorization_check, limit_correlator,
                     limit_correlator_recursive)
from .dynamics import (CalibrationError, GeneratorData, TrajectoryConfig,
                       assemble_generator, collision_monte_carlo, drift,
                       evolve_semigroup, exp_drift, series_expectation,
                       series_generator_derivative)
from .io import ConfigError, load_model, parse_model

__version__ = "0.1.0"
