//! Initial data, error norms and the numerical studies.

pub mod data;
pub mod studies;

pub use data::{
    derivative_norm, fourier_truncate, sobolev_sum, synth_initial_data, synth_profile, InitialDataSpec, Regularity,
};
pub use studies::{
    bgk_limit_study, convergence_study, fit_loglog_slope, stability_study, sup_t_l2_error, SlopeFit, StudyConfig,
    StudyReport,
};
