//! Green's-function kernels of the split boundary-value problem and the
//! analytic output and squeezing spectra built from them.
//!
//! Field equations (normalized, `z ∈ [0, 1]`):
//!
//! ```text
//! d/dz (E1*, E2)ᵀ = i·A·(E1*, E2)ᵀ + i·(F1*, F2)ᵀ,   E1*(0) = 0,  E2(1) = 0
//! ```
//!
//! The outputs are `X = E1*(1, ω)` and `Y = E2(0, ω)`, the anti-Stokes and
//! Stokes members of one correlated sideband pair.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::GreensError;
use crate::params::{coupling_matrix, diffusion_table, CouplingMatrix, DiffusionTable, MediumParams};
use crate::quadrature::{integrate_adaptive, AdaptiveOptions};

/// `|ηz|` below which cos/sin are replaced by their Taylor series.
pub const TAYLOR_SWITCH: f64 = 1e-4;

/// Default floor on `|M(L, ω)|`.
pub const DEFAULT_THRESHOLD_FLOOR: f64 = 1e-12;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreensOptions {
    /// Below this `|M(L, ω)|` the linear theory is reported as diverged.
    pub threshold_floor: f64,
    pub quadrature: AdaptiveOptions,
}

impl Default for GreensOptions {
    fn default() -> Self {
        Self { threshold_floor: DEFAULT_THRESHOLD_FLOOR, quadrature: AdaptiveOptions::default() }
    }
}

/// `(cos(ηz), sin(ηz)/η)` as entire functions of `η²`.
fn cos_sinc(eta_sq: Complex64, z: f64) -> (Complex64, Complex64) {
    let x2 = eta_sq * (z * z);
    if x2.norm() < TAYLOR_SWITCH * TAYLOR_SWITCH {
        let c = 1.0 - x2 / 2.0 + x2 * x2 / 24.0;
        let s = (1.0 - x2 / 6.0 + x2 * x2 / 120.0) * z;
        (c, s)
    } else {
        let eta = eta_sq.sqrt();
        ((eta * z).cos(), (eta * z).sin() / eta)
    }
}

fn cos_sinc_on_branch(eta: Complex64, z: f64) -> (Complex64, Complex64) {
    ((eta * z).cos(), (eta * z).sin() / eta)
}

/// `M(z, ω) = cos(ηz) + i(a/η)·sin(ηz)`.
pub fn m_function(cm: &CouplingMatrix, z: f64) -> Complex64 {
    let (c, s) = cos_sinc(cm.eta_sq(), z);
    c + I * cm.half_difference() * s
}

/// `M` evaluated with an explicitly supplied square root `eta` of `η²`, without
/// the small-argument fallback. Used to check invariance under `η → −η`.
pub fn m_function_on_branch(cm: &CouplingMatrix, z: f64, eta: Complex64) -> Complex64 {
    let (c, s) = cos_sinc_on_branch(eta, z);
    c + I * cm.half_difference() * s
}

/// Kernel values at one source position.
///
/// `E1*(1) = ∫ [k1_f1s·F1*(z′) + k1_f2·F2(z′)] dz′`,
/// `E2(0) = ∫ [k2_f1s·F1*(z′) + k2_f2·F2(z′)] dz′`.
/// The `1/(2ε0)` prefactor is dropped (see [`crate::params::DIFFUSION_PREFACTOR`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelRow {
    pub k1_f1s: Complex64,
    pub k1_f2: Complex64,
    pub k2_f1s: Complex64,
    pub k2_f2: Complex64,
}

impl KernelRow {
    fn scale(self, f: Complex64) -> Self {
        Self { k1_f1s: self.k1_f1s * f, k1_f2: self.k1_f2 * f, k2_f1s: self.k2_f1s * f, k2_f2: self.k2_f2 * f }
    }
}

/// Per-matrix constants reused across source positions.
#[derive(Debug, Clone, Copy)]
struct Prepared {
    a12: Complex64,
    a21: Complex64,
    mean: Complex64,
    half_diff: Complex64,
    eta_sq: Complex64,
    eta: Option<Complex64>,
    m_l: Complex64,
}

impl Prepared {
    fn new(cm: &CouplingMatrix, eta: Option<Complex64>) -> Self {
        let mut p = Self {
            a12: cm.a12,
            a21: cm.a21,
            mean: cm.mean_diagonal(),
            half_diff: cm.half_difference(),
            eta_sq: cm.eta_sq(),
            eta,
            m_l: Complex64::new(0.0, 0.0),
        };
        p.m_l = p.m(1.0);
        p
    }

    fn trig(&self, z: f64) -> (Complex64, Complex64) {
        match self.eta {
            Some(eta) => cos_sinc_on_branch(eta, z),
            None => cos_sinc(self.eta_sq, z),
        }
    }

    fn m(&self, z: f64) -> Complex64 {
        let (c, s) = self.trig(z);
        c + I * self.half_diff * s
    }

    /// Kernels multiplied by `M(1)`.
    fn scaled_kernels(&self, z: f64) -> KernelRow {
        let u = 1.0 - z;
        let (cz, sz) = self.trig(z);
        let (cu, su) = self.trig(u);
        let mz = cz + I * self.half_diff * sz;
        let mu = cu + I * self.half_diff * su;
        let ph1 = (-I * self.mean * (z - 1.0)).exp();
        let ph2 = (-I * self.mean * z).exp();
        KernelRow {
            k1_f1s: I * mz * ph1,
            k1_f2: self.a12 * sz * ph1,
            k2_f1s: self.a21 * su * ph2,
            k2_f2: -I * mu * ph2,
        }
    }

    fn check(&self, floor: f64) -> Result<(), GreensError> {
        let m_abs = self.m_l.norm();
        if m_abs < floor || !m_abs.is_finite() {
            Err(GreensError::AtThreshold { m_abs, floor })
        } else {
            Ok(())
        }
    }
}

fn check_z(z: f64) -> Result<(), GreensError> {
    if (0.0..=1.0).contains(&z) {
        Ok(())
    } else {
        Err(GreensError::OutOfRange { z })
    }
}

pub fn kernels(cm: &CouplingMatrix, z_src: f64) -> Result<KernelRow, GreensError> {
    kernels_with(cm, z_src, &GreensOptions::default())
}

pub fn kernels_with(cm: &CouplingMatrix, z_src: f64, opts: &GreensOptions) -> Result<KernelRow, GreensError> {
    check_z(z_src)?;
    let p = Prepared::new(cm, None);
    p.check(opts.threshold_floor)?;
    Ok(p.scaled_kernels(z_src).scale(1.0 / p.m_l))
}

/// Kernels evaluated with an explicit square-root branch `eta` of `η²`.
pub fn kernels_on_branch(cm: &CouplingMatrix, z_src: f64, eta: Complex64) -> Result<KernelRow, GreensError> {
    check_z(z_src)?;
    let p = Prepared::new(cm, Some(eta));
    p.check(DEFAULT_THRESHOLD_FLOOR)?;
    Ok(p.scaled_kernels(z_src).scale(1.0 / p.m_l))
}

/// Second moments of one sideband pair, including the `κL` factor.
///
/// * `n1 = ⟨X X⁺⟩`, `n2 = ⟨Y Y⁺⟩` (photon-flux spectral densities)
/// * `c  = ⟨X⁺ Y⟩` (pair correlation)
///
/// where `⁺` marks the conjugate amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMoments {
    pub n1: f64,
    pub n2: f64,
    pub c: Complex64,
    /// `|M(L, ω)|²`
    pub m_sq: f64,
}

impl PairMoments {
    /// `S_θ = 1/4 + (n1 + n2)/4 − Re(e^{2iθ}·c)/2`.
    pub fn s_theta(&self, theta: f64) -> f64 {
        0.25 + (self.n1 + self.n2) / 4.0 - (Complex64::from_polar(1.0, 2.0 * theta) * self.c).re / 2.0
    }

    /// Phase minimizing `S_θ`, in `(−π/2, π/2]`.
    pub fn optimal_theta(&self) -> f64 {
        if self.c.norm() == 0.0 {
            return FRAC_PI_4;
        }
        -self.c.arg() / 2.0
    }

    /// `min_θ S_θ = 1/4 + (n1 + n2)/4 − |c|/2`.
    pub fn s_opt(&self) -> f64 {
        0.25 + (self.n1 + self.n2) / 4.0 - self.c.norm() / 2.0
    }
}

/// Pair moments for an arbitrary coupling matrix and diffusion table.
pub fn pair_moments(
    cm: &CouplingMatrix,
    table: &DiffusionTable,
    kappa_l: f64,
    opts: &GreensOptions,
) -> Result<PairMoments, GreensError> {
    let p = Prepared::new(cm, None);
    p.check(opts.threshold_floor)?;
    let m_sq = p.m_l.norm_sqr();
    if table.is_zero() {
        return Ok(PairMoments { n1: 0.0, n2: 0.0, c: Complex64::new(0.0, 0.0), m_sq });
    }
    let d11 = table.d11;
    let d22 = table.d22;
    let d12 = table.d12;
    let d12c = d12.conj();
    let res = integrate_adaptive(
        |z| {
            let k = p.scaled_kernels(z);
            let n1 = k.k1_f1s.norm_sqr() * d11 + 2.0 * (k.k1_f1s * k.k1_f2.conj() * d12c).re + k.k1_f2.norm_sqr() * d22;
            let n2 = k.k2_f1s.norm_sqr() * d11 + 2.0 * (k.k2_f1s * k.k2_f2.conj() * d12c).re + k.k2_f2.norm_sqr() * d22;
            let c = k.k1_f1s.conj() * k.k2_f1s * d11
                + k.k1_f1s.conj() * k.k2_f2 * d12
                + k.k1_f2.conj() * k.k2_f1s * d12c
                + k.k1_f2.conj() * k.k2_f2 * d22;
            [Complex64::new(n1, 0.0), Complex64::new(n2, 0.0), c]
        },
        0.0,
        1.0,
        &opts.quadrature,
    );
    if !res.converged {
        log::warn!("kernel quadrature did not converge (error estimate {:e})", res.error);
    }
    let f = kappa_l / m_sq;
    Ok(PairMoments { n1: res.value[0].re * f, n2: res.value[1].re * f, c: res.value[2] * f, m_sq })
}

/// Pair moments for a medium at Fourier frequency `omega`.
pub fn medium_moments(params: &MediumParams, omega: f64, opts: &GreensOptions) -> Result<PairMoments, GreensError> {
    pair_moments(&coupling_matrix(params, omega), &diffusion_table(params), params.kappa_l(), opts)
}

/// Output photon spectra `(n1, n2)` of the anti-Stokes and Stokes fields.
pub fn output_spectrum(params: &MediumParams, omega: f64) -> Result<(f64, f64), GreensError> {
    let m = medium_moments(params, omega, &GreensOptions::default())?;
    Ok((m.n1, m.n2))
}

/// Quadrature fluctuation spectrum of the combined mode; `1/4` is the vacuum level.
pub fn squeezing_spectrum(params: &MediumParams, omega: f64, theta: f64) -> Result<f64, GreensError> {
    Ok(medium_moments(params, omega, &GreensOptions::default())?.s_theta(theta))
}

/// `(θ*, S_θ*)` with `θ*` minimizing the quadrature spectrum at `omega`.
pub fn optimal_squeezing(params: &MediumParams, omega: f64) -> Result<(f64, f64), GreensError> {
    let m = medium_moments(params, omega, &GreensOptions::default())?;
    Ok((m.optimal_theta(), m.s_opt()))
}

/// Numerically optimal quadrature phase at `omega`.
pub fn optimal_theta_numeric(params: &MediumParams, omega: f64) -> Result<f64, GreensError> {
    Ok(medium_moments(params, omega, &GreensOptions::default())?.optimal_theta())
}

/// Linear-in-ω model of the optimal phase, `π/4 − κL·ω/(2Ω²)`.
pub fn optimal_theta(params: &MediumParams, omega: f64) -> f64 {
    FRAC_PI_4 - params.kappa_l() * omega / (2.0 * params.omega_sq())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPoint {
    pub omega: f64,
    pub n1: f64,
    pub n2: f64,
    pub s_theta: f64,
    pub theta: f64,
    pub m_sq: f64,
}

/// How the quadrature phase is chosen at each frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaMode {
    Fixed(f64),
    /// Minimizes `S_θ` at each frequency.
    Optimal,
    /// [`optimal_theta`].
    Linear,
}

pub fn spectrum_point(params: &MediumParams, omega: f64, theta: ThetaMode) -> Result<SpectrumPoint, GreensError> {
    spectrum_point_with(params, omega, theta, &GreensOptions::default())
}

pub fn spectrum_point_with(
    params: &MediumParams,
    omega: f64,
    theta: ThetaMode,
    opts: &GreensOptions,
) -> Result<SpectrumPoint, GreensError> {
    let m = medium_moments(params, omega, opts)?;
    let theta = match theta {
        ThetaMode::Fixed(t) => t,
        ThetaMode::Optimal => m.optimal_theta(),
        ThetaMode::Linear => optimal_theta(params, omega),
    };
    Ok(SpectrumPoint { omega, n1: m.n1, n2: m.n2, s_theta: m.s_theta(theta), theta, m_sq: m.m_sq })
}

/// Evaluates a frequency grid in parallel; output order follows `omegas`.
pub fn spectrum_grid(
    params: &MediumParams,
    omegas: &[f64],
    theta: ThetaMode,
    opts: &GreensOptions,
) -> Vec<Result<SpectrumPoint, GreensError>> {
    omegas.par_iter().map(|&w| spectrum_point_with(params, w, theta, opts)).collect()
}

/// `|M|²/4 + (π/4)(2γ0|Δ|/Ω² + γa/|Δ|)`: near-threshold closed form of the
/// optimal-phase spectrum at ω = 0.
pub fn asymptotic_s_plus(params: &MediumParams, m_sq: f64) -> f64 {
    let d = params.delta().abs();
    m_sq / 4.0 + FRAC_PI_4 * (2.0 * params.gamma_0() * d / params.omega_sq() + params.gamma_a() / d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdealFloor {
    pub value: f64,
    /// False when `gamma_0 = 0`; `value` is then 0.
    pub defined: bool,
}

/// Best attainable `S(0)` at the optimal detuning: `π·sqrt(γ0·γa/(2Ω²))`.
pub fn ideal_floor(params: &MediumParams) -> IdealFloor {
    if params.gamma_0() == 0.0 {
        return IdealFloor { value: 0.0, defined: false };
    }
    let v = std::f64::consts::PI * (params.gamma_0() * params.gamma_a() / (2.0 * params.omega_sq())).sqrt();
    IdealFloor { value: v, defined: true }
}

/// Approximate frequency dependence of the optimal-phase spectrum near
/// threshold, with the unspecified slowly varying factor of the floor term set to 1:
///
/// `(m²/2 + sqrt(1 + x²) − 1)² / (m² + x²) + (π/4)(2γ0|Δ|/Ω² + γa/|Δ|)`, `x = ω/δω0`.
///
/// A model for qualitative bandwidth checks only.
pub fn bandwidth_model(params: &MediumParams, omega: f64, m_sq: f64) -> f64 {
    let dw0 = (params.omega_sq() / params.delta()).abs();
    let x2 = (omega / dw0).powi(2);
    let floor = asymptotic_s_plus(params, 0.0);
    let denom = m_sq + x2;
    if denom == 0.0 {
        return floor;
    }
    let num = m_sq / 2.0 + (1.0 + x2).sqrt() - 1.0;
    num * num / denom + floor
}
