"""Sampling exponential densities on unitary orbits through Gelfand-Tsetlin polytopes."""

from .estimators import DPLowRankApproximation, HCIZSampler
from .exceptions import DomainError, InconsistentTriangleError, StructureError
from .fiber import extend_submatrix, reduced_spectrum, sample_fiber, sample_fiber_batch, sphere_radii
from .linalg import (SpectralDecomposition, check_hermitian, check_unitary, hermitian_eigendecompose,
                     sample_complex_sphere, sample_haar_unitary)
from .mcmc import SamplerConfig, grid_walk_sample, hit_and_run_sample, run_diagnostics
from .orbit import OrbitProblem, expected_inner_product, log_partition, sample_orbit
from .polytope import (ExponentSpec, GTPolytope, RayleighTriangle, build_polytope, inner_ball,
                       log_density, membership, outer_radius, rayleigh_map, reduce_exponent,
                       type_vector, uniform_gt_sample)
from .privacy import (DPConfig, ProjectionSample, covering_bound, dp_rank_k_projection,
                      sensitivity_check, utility_threshold)

__version__ = "0.1.0"

__all__ = [
    "DPConfig", "DPLowRankApproximation", "DomainError", "ExponentSpec", "GTPolytope",
    "HCIZSampler", "InconsistentTriangleError", "OrbitProblem", "ProjectionSample",
    "RayleighTriangle", "SamplerConfig", "SpectralDecomposition", "StructureError",
    "build_polytope", "check_hermitian", "check_unitary", "covering_bound",
    "dp_rank_k_projection", "expected_inner_product", "extend_submatrix", "grid_walk_sample",
    "hermitian_eigendecompose", "hit_and_run_sample", "inner_ball", "log_density",
    "log_partition", "membership", "outer_radius", "rayleigh_map", "reduce_exponent",
    "reduced_spectrum", "run_diagnostics", "sample_complex_sphere", "sample_fiber",
    "sample_fiber_batch", "sample_haar_unitary", "sample_orbit", "sensitivity_check",
    "sphere_radii", "type_vector", "uniform_gt_sample", "utility_threshold",
]
