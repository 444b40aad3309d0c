"""Numerical laboratory for one-phase free boundary problems.

Builds and stress-tests the objects attached to minimizers of
int F(|grad u|^2) + lambda^2 |{u > 0}|: the double-cone homogeneous solution
from the spherical profile equation, the second-variation stability
functional, the Gauss-Bonnet flatness criterion, discrete-varifold
monotonicity diagnostics, and a 2-d grid minimizer of the energy itself.
"""

from .energy import (
    BernoulliConstants,
    EnergyModel,
    StructuralReport,
    check_structural,
    lambda_star,
    model_from_descriptor,
    normalized_lambda_sq,
    register_custom_model,
)
from .profile import (
    ProfileSolution,
    ProfileState,
    RiccatiState,
    find_theta0,
    integrate,
    legendre_rhs,
    riccati_rhs,
    solve_symmetric_profile,
)
from .cone import (
    ConeGeometry,
    DoubleConeSolution,
    build_double_cone,
    p_harmonic_residual,
)
from .stability import (
    ExpansionCoefficients,
    FlatnessCriterion,
    RadialTestFunction,
    StabilityReport,
    bernstein_flatness_criterion,
    bernstein_ratio,
    diffusion_tensor,
    expansion_coeffs,
    log_test_2d,
    second_variation_cone,
)
from .varifold import (
    DiscreteVarifold,
    FlatnessReport,
    MonotonicityProfile,
    density_classify,
    first_variation,
    flatness,
    hausdorff_distance,
    mean_curvature_measure,
    monotonicity_profile,
    variational_curvature_check,
)
from .solver2d import (
    FreeBoundaryPolyline,
    Grid2DState,
    Schedule,
    bernoulli_residual,
    energy,
    extract_fb,
    minimize,
)

__version__ = "0.1.0"
