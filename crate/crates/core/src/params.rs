//! Physical parameters, coupling matrices and the Langevin diffusion table.
//!
//! Everything is expressed in a normalized unit system: the upper-level decay
//! rate `gamma_a` is the unit rate, `c = 1`, and positions are measured in
//! units of the medium length `L`, so `z ∈ [0, 1]`. Coupling-matrix entries
//! are the dimensionless products `A_ij = a_ij · L`.

use num_complex::Complex64;

use crate::error::ParamError;

/// Ratio `|ω/Ω|` above which the near-resonant coupling coefficients are
/// reported as outside their small-frequency validity range.
pub const SMALL_OMEGA_LIMIT: f64 = 0.3;

/// Default factor used for the "much greater than" regime flags.
pub const DEFAULT_REGIME_FACTOR: f64 = 10.0;

/// The common noise prefactor that is divided out of every [`DiffusionTable`]
/// entry. The `1/(2ε0)` kernel prefactors cancel `4ε0²`, leaving `κL/c`,
/// which the spectrum formulas multiply back in as `kappa_l`.
pub const DIFFUSION_PREFACTOR: &str = "4·ε0²·κL/c";

/// Medium and drive parameters in units of `gamma_a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumParams {
    gamma_a: f64,
    gamma_0: f64,
    omega_rabi: f64,
    delta: f64,
    kappa_l: f64,
}

fn check_finite(name: &'static str, value: f64) -> Result<(), ParamError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(ParamError::NonFinite { name, value })
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<(), ParamError> {
    check_finite(name, value)?;
    if value > 0.0 {
        Ok(())
    } else {
        Err(ParamError::NonPositive { name, value })
    }
}

/// Validates and builds a normalized parameter set (`gamma_a = 1`, `c = 1`, `L = 1`).
pub fn make_params(gamma_0: f64, omega_rabi: f64, delta: f64, kappa_l: f64) -> Result<MediumParams, ParamError> {
    MediumParams::new(gamma_0, omega_rabi, delta, kappa_l)
}

impl MediumParams {
    pub fn new(gamma_0: f64, omega_rabi: f64, delta: f64, kappa_l: f64) -> Result<Self, ParamError> {
        check_finite("gamma_0", gamma_0)?;
        if gamma_0 < 0.0 {
            return Err(ParamError::Negative { name: "gamma_0", value: gamma_0 });
        }
        check_positive("omega_rabi", omega_rabi)?;
        check_finite("delta", delta)?;
        if delta == 0.0 {
            return Err(ParamError::ZeroDetuning);
        }
        check_positive("kappa_l", kappa_l)?;
        Ok(Self { gamma_a: 1.0, gamma_0, omega_rabi, delta, kappa_l })
    }

    /// Collects every violated invariant instead of stopping at the first.
    pub fn validate_all(gamma_0: f64, omega_rabi: f64, delta: f64, kappa_l: f64) -> Vec<ParamError> {
        let mut errors = Vec::new();
        if !gamma_0.is_finite() {
            errors.push(ParamError::NonFinite { name: "gamma_0", value: gamma_0 });
        } else if gamma_0 < 0.0 {
            errors.push(ParamError::Negative { name: "gamma_0", value: gamma_0 });
        }
        if let Err(e) = check_positive("omega_rabi", omega_rabi) {
            errors.push(e);
        }
        if !delta.is_finite() {
            errors.push(ParamError::NonFinite { name: "delta", value: delta });
        } else if delta == 0.0 {
            errors.push(ParamError::ZeroDetuning);
        }
        if let Err(e) = check_positive("kappa_l", kappa_l) {
            errors.push(e);
        }
        errors
    }

    pub fn gamma_a(&self) -> f64 {
        self.gamma_a
    }
    pub fn gamma_0(&self) -> f64 {
        self.gamma_0
    }
    pub fn omega_rabi(&self) -> f64 {
        self.omega_rabi
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn kappa_l(&self) -> f64 {
        self.kappa_l
    }
    /// Medium length; positions are measured in units of it.
    pub fn length(&self) -> f64 {
        1.0
    }

    pub fn with_gamma_0(&self, gamma_0: f64) -> Result<Self, ParamError> {
        Self::new(gamma_0, self.omega_rabi, self.delta, self.kappa_l)
    }
    pub fn with_omega_rabi(&self, omega_rabi: f64) -> Result<Self, ParamError> {
        Self::new(self.gamma_0, omega_rabi, self.delta, self.kappa_l)
    }
    pub fn with_delta(&self, delta: f64) -> Result<Self, ParamError> {
        Self::new(self.gamma_0, self.omega_rabi, delta, self.kappa_l)
    }
    pub fn with_kappa_l(&self, kappa_l: f64) -> Result<Self, ParamError> {
        Self::new(self.gamma_0, self.omega_rabi, self.delta, kappa_l)
    }

    /// `|Ω|²`.
    pub fn omega_sq(&self) -> f64 {
        self.omega_rabi * self.omega_rabi
    }
}

/// Coupling constant `κ = 3/(8π) · N · λ² · γ_a`.
pub fn kappa_from_density(number_density: f64, wavelength: f64, gamma_a: f64) -> Result<f64, ParamError> {
    check_positive("number_density", number_density)?;
    check_positive("wavelength", wavelength)?;
    check_positive("gamma_a", gamma_a)?;
    Ok(3.0 / (8.0 * std::f64::consts::PI) * number_density * wavelength * wavelength * gamma_a)
}

/// The 2×2 propagation matrix for `(E1*, E2)` at one Fourier frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingMatrix {
    pub a11: Complex64,
    pub a12: Complex64,
    pub a21: Complex64,
    pub a22: Complex64,
    pub omega: f64,
    /// Set when `|ω/Ω|` exceeds [`SMALL_OMEGA_LIMIT`] for the near-resonant constructor.
    pub beyond_small_omega: bool,
}

impl CouplingMatrix {
    pub fn new(a11: Complex64, a12: Complex64, a21: Complex64, a22: Complex64, omega: f64) -> Self {
        Self { a11, a12, a21, a22, omega, beyond_small_omega: false }
    }

    /// `ã = (a11 + a22)/2`.
    pub fn mean_diagonal(&self) -> Complex64 {
        (self.a11 + self.a22) * 0.5
    }

    /// `a = (a22 − a11)/2`.
    pub fn half_difference(&self) -> Complex64 {
        (self.a22 - self.a11) * 0.5
    }

    /// `η² = a² + a12·a21`.
    pub fn eta_sq(&self) -> Complex64 {
        let a = self.half_difference();
        a * a + self.a12 * self.a21
    }

    /// Principal branch of `η`.
    pub fn eta(&self) -> Complex64 {
        self.eta_sq().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        [self.a11, self.a12, self.a21, self.a22].iter().all(|a| a.is_finite())
    }
}

/// Near-resonant coupling matrix for the double-Λ medium with equal Rabi frequencies.
///
/// `A11 = κL(−ω + iγ0)/Ω² − ω`, `A12 = A21 = κL/Δ`, `A22 = ω`.
pub fn coupling_matrix(params: &MediumParams, omega: f64) -> CouplingMatrix {
    let kl = params.kappa_l;
    let a11 = Complex64::new(-omega, params.gamma_0) * (kl / params.omega_sq()) - omega;
    let cross = Complex64::new(kl / params.delta, 0.0);
    let mut cm = CouplingMatrix::new(a11, cross, cross, Complex64::new(omega, 0.0), omega);
    if (omega / params.omega_rabi).abs() > SMALL_OMEGA_LIMIT {
        log::warn!(
            "|omega/Omega| = {:.3} exceeds {SMALL_OMEGA_LIMIT}: near-resonant coefficients are outside their validity range",
            (omega / params.omega_rabi).abs()
        );
        cm.beyond_small_omega = true;
    }
    cm
}

/// Coupling matrix from arbitrary susceptibilities.
///
/// `a1j = −k1·χ*_1j/2 − δ_j1·ω`, `a2j = −k2·χ_2j/2 + δ_j2·ω` (normalized, `c = 1`).
/// Wavenumbers are in units of `1/L`.
pub fn coupling_matrix_generic(
    chi: [[Complex64; 2]; 2],
    k1: f64,
    k2: f64,
    omega: f64,
) -> Result<CouplingMatrix, ParamError> {
    for (name, v) in [("k1", k1), ("k2", k2), ("omega", omega)] {
        check_finite(name, v)?;
    }
    for row in &chi {
        for x in row {
            if !x.is_finite() {
                return Err(ParamError::NonFinite { name: "chi", value: f64::NAN });
            }
        }
    }
    let h1 = -k1 / 2.0;
    let h2 = -k2 / 2.0;
    Ok(CouplingMatrix::new(
        chi[0][0].conj() * h1 - omega,
        chi[0][1].conj() * h1,
        chi[1][0] * h2,
        chi[1][1] * h2 + omega,
        omega,
    ))
}

/// Labels for the four noise amplitudes `{f1, f1*, f2, f2*}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseChannel {
    F1,
    F1Conj,
    F2,
    F2Conj,
}

impl NoiseChannel {
    pub const ALL: [NoiseChannel; 4] = [Self::F1, Self::F1Conj, Self::F2, Self::F2Conj];

    fn is_conj(self) -> bool {
        matches!(self, Self::F1Conj | Self::F2Conj)
    }

    fn mode(self) -> u8 {
        match self {
            Self::F1 | Self::F1Conj => 1,
            Self::F2 | Self::F2Conj => 2,
        }
    }
}

/// Normalized Langevin correlation strengths, with [`DIFFUSION_PREFACTOR`]
/// divided out:
///
/// * `⟨f1 f1*⟩ = d11 = γ0/Ω²`
/// * `⟨f1 f2⟩  = d12 = i/Δ`
/// * `⟨f2 f2*⟩ = d22 = γa/Δ²`
///
/// every correlator being `∝ δ(z−z′) δ(ω+ω′)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionTable {
    pub d11: f64,
    pub d12: Complex64,
    pub d22: f64,
}

impl DiffusionTable {
    pub const ZERO: DiffusionTable = DiffusionTable { d11: 0.0, d12: Complex64::new(0.0, 0.0), d22: 0.0 };

    pub fn new(d11: f64, d12: Complex64, d22: f64) -> Self {
        Self { d11, d12, d22 }
    }

    pub fn is_zero(&self) -> bool {
        self.d11 == 0.0 && self.d12 == Complex64::new(0.0, 0.0) && self.d22 == 0.0
    }

    /// Second moment `⟨a b⟩` over `{f1, f1*, f2, f2*}`.
    ///
    /// Same-mode pairs need exactly one conjugate (`d11`, `d22`); the cross-mode
    /// pair is `d12` without conjugates and `conj(d12)` with both. Everything
    /// else vanishes.
    pub fn correlator(&self, a: NoiseChannel, b: NoiseChannel) -> Complex64 {
        let zero = Complex64::new(0.0, 0.0);
        if a.mode() == b.mode() {
            if a.is_conj() == b.is_conj() {
                return zero;
            }
            return Complex64::new(if a.mode() == 1 { self.d11 } else { self.d22 }, 0.0);
        }
        match (a.is_conj(), b.is_conj()) {
            (false, false) => self.d12,
            (true, true) => self.d12.conj(),
            _ => zero,
        }
    }
}

/// Diffusion table implied by the medium parameters.
pub fn diffusion_table(params: &MediumParams) -> DiffusionTable {
    DiffusionTable {
        d11: params.gamma_0 / params.omega_sq(),
        d12: Complex64::new(0.0, 1.0 / params.delta),
        d22: params.gamma_a / (params.delta * params.delta),
    }
}

/// Characteristic scales and regime diagnostics of a parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedScales {
    /// Dispersion-limited bandwidth `δω0 = Ω²/Δ` (signed with Δ).
    pub delta_omega0: f64,
    /// `Δ_opt = sqrt(γa·Ω²/(2γ0))`; `None` when `γ0 = 0`.
    pub delta_opt: Option<f64>,
    /// `Ω² ≫ γ0·γa`.
    pub strong_drive: bool,
    /// `|Δ| ≫ γa, Ω`.
    pub far_detuned: bool,
}

impl DerivedScales {
    /// Both conditions for near-ideal Stokes/anti-Stokes correlations hold.
    pub fn ideal_regime(&self) -> bool {
        self.strong_drive && self.far_detuned
    }
}

pub fn derived_scales(params: &MediumParams) -> DerivedScales {
    derived_scales_with_factor(params, DEFAULT_REGIME_FACTOR)
}

/// As [`derived_scales`] with `factor` standing in for "≫".
pub fn derived_scales_with_factor(params: &MediumParams, factor: f64) -> DerivedScales {
    let om2 = params.omega_sq();
    let delta_opt = (params.gamma_0 > 0.0).then(|| (params.gamma_a * om2 / (2.0 * params.gamma_0)).sqrt());
    DerivedScales {
        delta_omega0: om2 / params.delta,
        delta_opt,
        strong_drive: om2 >= factor * params.gamma_0 * params.gamma_a,
        far_detuned: params.delta.abs() >= factor * params.gamma_a.max(params.omega_rabi),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn p0() -> MediumParams {
        make_params(1e-3, 1.0, 22.360680, 35.3762).unwrap()
    }

    #[test]
    fn make_params_accepts_baseline_and_lossless_limit() {
        let p = p0();
        assert_eq!(p.gamma_a(), 1.0);
        assert_eq!(p.length(), 1.0);
        assert!(make_params(0.0, 1.0, 10.0, 1.0).is_ok());
    }

    #[test]
    fn make_params_rejects_bad_inputs() {
        assert_eq!(make_params(1e-3, 1.0, 0.0, 1.0), Err(ParamError::ZeroDetuning));
        assert!(matches!(make_params(-1e-3, 1.0, 1.0, 1.0), Err(ParamError::Negative { name: "gamma_0", .. })));
        assert!(matches!(make_params(1e-3, 0.0, 1.0, 1.0), Err(ParamError::NonPositive { name: "omega_rabi", .. })));
        assert!(matches!(make_params(1e-3, 1.0, 1.0, -2.0), Err(ParamError::NonPositive { name: "kappa_l", .. })));
        assert!(matches!(make_params(f64::NAN, 1.0, 1.0, 1.0), Err(ParamError::NonFinite { .. })));
        assert_eq!(MediumParams::validate_all(-1.0, 0.0, 0.0, 0.0).len(), 4);
    }

    #[test]
    fn kappa_from_density_formula() {
        let unit_n = 8.0 * PI / 3.0;
        assert_relative_eq!(kappa_from_density(unit_n, 1.0, 1.0).unwrap(), 1.0, max_relative = 1e-15);
        let one = kappa_from_density(3.0, 2.0, 0.5).unwrap();
        let two = kappa_from_density(6.0, 2.0, 0.5).unwrap();
        assert_relative_eq!(two, 2.0 * one, max_relative = 1e-15);
        let k = kappa_from_density(1e18, 7.95e-7, 1.0).unwrap();
        assert_relative_eq!(k, 1e18 * 7.95e-7 * 7.95e-7 * 3.0 / (8.0 * PI), max_relative = 1e-14);
        assert_relative_eq!(k, 7.545e4, max_relative = 1e-3);
        assert!(kappa_from_density(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn coupling_matrix_baseline_values() {
        let cm = coupling_matrix(&p0(), 0.0);
        assert_eq!(cm.a11.re, 0.0);
        assert_relative_eq!(cm.a11.im, 0.0353762, max_relative = 1e-12);
        assert_relative_eq!(cm.a12.re, 1.582072, max_relative = 1e-6);
        assert_eq!(cm.a12, cm.a21);
        assert_eq!(cm.a22, Complex64::new(0.0, 0.0));
        assert!((cm.eta().re - 1.58195).abs() < 1e-4);
        assert!(!cm.beyond_small_omega);
        let lossless = make_params(0.0, 1.0, 10.0, 1.0).unwrap();
        assert_eq!(coupling_matrix(&lossless, 0.0).a11, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn eta_matches_closed_form() {
        let p = p0();
        let cm = coupling_matrix(&p, 0.0);
        let closed =
            p.kappa_l() * (1.0 / (p.delta() * p.delta()) - p.gamma_0().powi(2) / (4.0 * p.omega_sq().powi(2))).sqrt();
        assert_relative_eq!(cm.eta().re, closed, max_relative = 1e-13);
        assert!(cm.eta().im.abs() < 1e-15);
    }

    #[test]
    fn coupling_matrix_flags_large_omega() {
        assert!(coupling_matrix(&p0(), 0.31).beyond_small_omega);
        assert!(!coupling_matrix(&p0(), -0.29).beyond_small_omega);
    }

    #[test]
    fn generic_constructor_reproduces_near_resonant_bit_for_bit() {
        let p = p0();
        for &omega in &[0.0, 0.013, -0.2] {
            let target = coupling_matrix(&p, omega);
            // k = 2 makes the −k/2 factor exactly −1.
            let x = Complex64::new(-omega, p.gamma_0()) * (p.kappa_l() / p.omega_sq());
            let chi = [
                [(-x).conj(), Complex64::new(-(p.kappa_l() / p.delta()), 0.0)],
                [Complex64::new(-(p.kappa_l() / p.delta()), 0.0), Complex64::new(0.0, 0.0)],
            ];
            let generic = coupling_matrix_generic(chi, 2.0, 2.0, omega).unwrap();
            assert_eq!(generic.a11, target.a11);
            assert_eq!(generic.a12, target.a12);
            assert_eq!(generic.a21, target.a21);
            assert_eq!(generic.a22, target.a22);
        }
    }

    #[test]
    fn generic_constructor_edge_cases() {
        let zero = [[Complex64::new(0.0, 0.0); 2]; 2];
        let cm = coupling_matrix_generic(zero, 3.0, 4.0, 0.0).unwrap();
        assert!([cm.a11, cm.a12, cm.a21, cm.a22].iter().all(|a| *a == Complex64::new(0.0, 0.0)));
        // purely absorptive self-susceptibility on mode 1
        let mut chi = zero;
        chi[0][0] = Complex64::new(0.0, 2.0 * 0.3);
        let cm = coupling_matrix_generic(chi, 5.0, 5.0, 0.0).unwrap();
        assert_eq!(cm.a11.re, 0.0);
        assert!(cm.a11.im > 0.0);
        chi[1][1] = Complex64::new(f64::INFINITY, 0.0);
        assert!(coupling_matrix_generic(chi, 5.0, 5.0, 0.0).is_err());
    }

    #[test]
    fn diffusion_table_baseline_and_limits() {
        let t = diffusion_table(&p0());
        assert_relative_eq!(t.d11, 1e-3, max_relative = 1e-15);
        assert_eq!(t.d12.re, 0.0);
        assert_relative_eq!(t.d12.im, 0.0447214, max_relative = 1e-6);
        assert_relative_eq!(t.d22, 0.002, max_relative = 1e-6);
        let lossless = make_params(0.0, 1.0, 10.0, 1.0).unwrap();
        assert_eq!(diffusion_table(&lossless).d11, 0.0);
        let far = make_params(1e-3, 1.0, 1e12, 1.0).unwrap();
        let t = diffusion_table(&far);
        assert!(t.d12.norm() < 1e-11 && t.d22 < 1e-23);
        assert_eq!(t.d11, 1e-3);
    }

    #[test]
    fn diffusion_table_scales_linearly() {
        let p = p0();
        let base = diffusion_table(&p);
        let g = diffusion_table(&p.with_gamma_0(3e-3).unwrap());
        assert_relative_eq!(g.d11, 3.0 * base.d11, max_relative = 1e-15);
        let d = diffusion_table(&p.with_delta(2.0 * p.delta()).unwrap());
        assert_relative_eq!(d.d12.im, base.d12.im / 2.0, max_relative = 1e-15);
        assert_relative_eq!(d.d22, base.d22 / 4.0, max_relative = 1e-15);
    }

    #[test]
    fn correlator_extension_rule() {
        use NoiseChannel::*;
        let t = diffusion_table(&p0());
        assert_eq!(t.correlator(F1, F1Conj).re, t.d11);
        assert_eq!(t.correlator(F1Conj, F1).re, t.d11);
        assert_eq!(t.correlator(F2Conj, F2).re, t.d22);
        assert_eq!(t.correlator(F1, F2), t.d12);
        assert_eq!(t.correlator(F2, F1), t.d12);
        assert_eq!(t.correlator(F1Conj, F2Conj), t.d12.conj());
        for (a, b) in [(F1, F1), (F1, F2Conj), (F1Conj, F2), (F2, F2), (F2Conj, F2Conj)] {
            assert_eq!(t.correlator(a, b), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn derived_scales_values() {
        let s = derived_scales(&p0());
        assert_relative_eq!(s.delta_omega0, 0.0447214, max_relative = 1e-6);
        assert_relative_eq!(s.delta_opt.unwrap(), 22.360680, max_relative = 1e-7);
        let half = make_params(0.5, 1.0, 3.0, 1.0).unwrap();
        assert_relative_eq!(derived_scales(&half).delta_opt.unwrap(), 1.0, max_relative = 1e-15);
        let flagged = make_params(0.01, 1.0, 100.0, 1.0).unwrap();
        let s = derived_scales(&flagged);
        assert!(s.strong_drive && s.far_detuned && s.ideal_regime());
        let lossless = make_params(0.0, 1.0, 3.0, 1.0).unwrap();
        assert_eq!(derived_scales(&lossless).delta_opt, None);
        assert!(!derived_scales(&lossless).far_detuned);
    }
}
