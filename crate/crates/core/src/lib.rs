//! Quantum-noise spectra of counter-propagating Stokes/anti-Stokes fields
//! generated by four-wave mixing in a double-Λ medium.
//!
//! * [`params`]: parameter set, coupling matrices, diffusion table
//! * [`greens`]: Green's-function kernels and analytic spectra
//! * [`threshold`]: oscillation threshold, operating points, sweeps
//! * [`langevin`]: Monte-Carlo Langevin sampling of the same spectra
//!
//! Units: rates in units of the upper-level decay `gamma_a`, `c = 1`,
//! positions in units of the medium length.
//!
//! ```
//! use fwm_core::{find_threshold, make_params, optimal_squeezing, tune_to_m_sq, FreeVariable};
//!
//! let p = make_params(1e-3, 1.0, 22.36068, 1.0)?;
//! let th = find_threshold(&p, FreeVariable::KappaL)?;
//! assert!((th.value_at_threshold - 35.376).abs() < 1e-3);
//! let near = tune_to_m_sq(&p, 0.01)?;
//! let (_theta, s_opt) = optimal_squeezing(&near, 0.0)?;
//! assert!(s_opt < 0.25);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod error;
pub mod greens;
pub mod langevin;
pub mod params;
pub mod quadrature;
pub mod threshold;

pub use error::{GreensError, McError, ParamError, SweepError, ThresholdError};
pub use greens::{
    asymptotic_s_plus, bandwidth_model, ideal_floor, kernels, m_function, optimal_squeezing, optimal_theta,
    optimal_theta_numeric, output_spectrum, pair_moments, spectrum_point, squeezing_spectrum, GreensOptions,
    IdealFloor, KernelRow, PairMoments, SpectrumPoint,
};
pub use langevin::{
    mc_spectrum, sample_noise, solve_bvp_sample, McEstimate, McOptions, McQuantity, McSpectrum, NoiseRealization,
};
pub use params::{
    coupling_matrix, coupling_matrix_generic, derived_scales, diffusion_table, kappa_from_density, make_params,
    CouplingMatrix, DerivedScales, DiffusionTable, MediumParams, NoiseChannel,
};
pub use threshold::{
    find_threshold, optimal_detuning, oscillation_possible, pre_threshold_saturation_point, sweep, tune_to_m_sq,
    FreeVariable, SpectrumTable, SweepAxis, SweepQuantity, SweepRow, SweepSpec, ThresholdResult,
};
