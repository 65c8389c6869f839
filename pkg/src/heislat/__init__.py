"""Lattice point counting in shells of Heisenberg gauge spheres, exact rank
verification for the associated Monge-Ampere matrices, and energy-integral
estimation for smoothed lattice measures."""

from .core import (
    GaugeParams,
    HPoint,
    dilate,
    group_inv,
    group_mul,
    norm_alpha,
    phi_alpha,
    phi_power,
    phi_power_scaled,
    symplectic_form,
)
from .counting import (
    LatticeSpec,
    Sampling,
    ShellCount,
    ShellQuery,
    averaged_shell_count,
    ball_lattice_count,
    counting_lemma_bound,
    fast_shell_count,
    fit_scaling_exponent,
    fixed_center_error_term,
    naive_shell_count,
    theorem_bound,
    unit_ball_volume,
)
from .energy import (
    EnergyEstimate,
    SmoothedMeasure,
    ThickLattice,
    build_smoothed_measure,
    build_thick_lattice,
    energy_all_pairs,
    energy_integral_mc,
    mu_density,
)
from .mongeampere import (
    MAMatrix,
    RankReport,
    StructuredMatrixParams,
    grad_Phi,
    matrix_rank,
    monge_ampere_matrix,
    n_psi_matrix,
    n_psi_submatrix,
    structured_inverse,
    structured_inverse_apply_w,
    theta,
    verify_rank_proposition,
    x_functional,
)

__version__ = "0.1.0"
