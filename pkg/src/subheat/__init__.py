"""Fractional heat semigroups of discretized Schrodinger operators.

Kernels of e^{-t L^alpha} for L = -Delta + V with reverse-Holder potentials,
stable-subordinator densities, time-fractional derivatives, pointwise-estimate
certificates, and the Campanato/Carleson function-space machinery.
"""

from .grid import Ball, Grid, GridFunction, build_grid, grid_integrate, ball_points
from .potentials import (PotentialSpec, compute_rho, constant, eval_potential,
                         power, reverse_holder_constant, well, zero)
from .spectral import (DiscreteOperator, KernelSlice, SpectralDecomposition,
                       apply_kernel, assemble, eigendecompose,
                       fractional_heat_kernel, heat_kernel, multiplier_kernel,
                       poisson_kernel)
from .subordinator import (SubordinatorDensity, SubQuadrature, density,
                           density_selftest, laplace_transform, make_density,
                           subordinate_kernel)
from .fracderiv import (FracDerivSpec, GradientField, d_operator,
                        frac_time_derivative, nabla_alpha, spatial_gradient)
from .estimates import (BoundCertificate, EstimateParams, build_backend, certify,
                        decay_exponent_fit, refinement_study)
from .spaces import (Atom, BmoParams, SpaceTimeField, area_function, bmo_norm,
                     carleson_norm, duality_pairing_check, equivalence_experiment,
                     g_function, lipschitz_norm, make_atom, reproducing_check)
from .cli import RunConfig, parse_config, run

__version__ = "0.1.0"
