//! Linear moment closures for the one-dimensional velocity-jump equation
//!
//! ```text
//! d_t f + v d_x f = q(v) sum_j alpha_j int v*^j f dv* - lambda f,   v in I.
//! ```
//!
//! The moment hierarchy is truncated at order `N` with a linear closure whose
//! wave speeds are the Chebyshev nodes. The crate builds the closure algebra,
//! the weighted Maxwellian projection and BGK model, exact-in-time spectral
//! solvers for the moment, kinetic and BGK systems, and the convergence,
//! stability and relaxation-limit studies driven by the `momclose` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod closure;
pub mod error;
pub mod experiments;
pub mod expm;
pub mod fourier;
pub mod maxwellian;
pub mod profile;
pub mod quadrature;
pub mod spectral;
pub mod system;

pub use closure::{
    build_vandermonde, chebyshev_nodes, closure_from_roots, gram_matrix, invert_vandermonde, t_tilde_basis,
    vandermonde_tolerance, ClosureSpec, RMatrix, SpectralDecomp, TTildeBasis,
};
pub use error::{Error, Result};
pub use fourier::{CMatrix, PeriodicGrid};
pub use maxwellian::{apply_maxwellian, build_maxwellian, MaxwellianOperator};
pub use profile::VelocityProfile;
pub use quadrature::{
    gauss_chebyshev_rule, gauss_legendre_rule, inverse_weight_quadrature, kernel_moments, weighted_velocity_norm,
    ChebyshevWeight, VelocityRule, WeightedNorms,
};
pub use spectral::{
    evolve_bgk, evolve_kinetic, evolve_moments, upwind_reference_step, ModeGenerator, PropagatorCache,
    SpectralPropagator,
};
pub use system::{
    build_collision_matrix, build_transport_matrix, hierarchy_residual, moments_from_kinetic, KernelSpec, KineticState,
    MomentState, SystemMatrices,
};
