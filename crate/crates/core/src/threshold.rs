//! Mirrorless-oscillation threshold, operating points and 1-D parameter sweeps.
//!
//! At ω = 0 the boundary function is real:
//! `M(L, 0) = cos x + (r/ρ)·sin x` with `r = γ0/(2Ω²)`, `ρ = sqrt(1/Δ² − r²)`
//! and `x = ηL = κL·ρ`. All searches run over `x`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{ParamError, SweepError, ThresholdError};
use crate::greens::{m_function, medium_moments, GreensOptions};
use crate::params::{coupling_matrix, MediumParams};

/// Points of the bracketing scan per period of `ηL`.
pub const DEFAULT_SCAN_POINTS: usize = 256;
/// Required `|M(L, 0)|` at a reported root.
pub const ROOT_RESIDUAL: f64 = 1e-10;

/// `Ω² > γ0·|Δ|/2`.
pub fn oscillation_possible(params: &MediumParams) -> bool {
    params.omega_sq() > params.gamma_0() * params.delta().abs() / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FreeVariable {
    KappaL,
    OmegaRabi,
    /// Medium length, in units of the current length.
    Length,
}

impl FreeVariable {
    pub fn name(self) -> &'static str {
        match self {
            Self::KappaL => "kappa_l",
            Self::OmegaRabi => "omega_rabi",
            Self::Length => "length",
        }
    }
}

impl std::str::FromStr for FreeVariable {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "kappa_l" => Ok(Self::KappaL),
            "omega_rabi" => Ok(Self::OmegaRabi),
            "length" => Ok(Self::Length),
            other => Err(format!("unknown free variable '{other}' (expected kappa_l, omega_rabi or length)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdOptions {
    pub scan_points: usize,
    /// 0 selects the first root; higher roots lie beyond the undepleted-pump regime.
    pub root_index: usize,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        Self { scan_points: DEFAULT_SCAN_POINTS, root_index: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdResult {
    pub free_variable: FreeVariable,
    pub value_at_threshold: f64,
    pub eta_l_root: f64,
    /// `|M(L, 0)|` at the solution.
    pub residual: f64,
    /// The full parameter set at threshold.
    pub params: MediumParams,
}

fn r_coeff(p: &MediumParams) -> f64 {
    p.gamma_0() / (2.0 * p.omega_sq())
}

fn m_at_zero(p: &MediumParams) -> f64 {
    m_function(&coupling_matrix(p, 0.0), 1.0).re
}

/// Parameter set whose `ηL` equals `x`, or `None` if `x` is unreachable.
fn params_at(base: &MediumParams, free: FreeVariable, x: f64) -> Option<MediumParams> {
    let inv_d2 = 1.0 / (base.delta() * base.delta());
    match free {
        FreeVariable::KappaL | FreeVariable::Length => {
            let r = r_coeff(base);
            let rho = (inv_d2 - r * r).sqrt();
            base.with_kappa_l(x / rho).ok()
        }
        FreeVariable::OmegaRabi => {
            let rho = x / base.kappa_l();
            let r2 = inv_d2 - rho * rho;
            if r2 <= 0.0 {
                return None;
            }
            let omega = (base.gamma_0() / (2.0 * r2.sqrt())).sqrt();
            base.with_omega_rabi(omega).ok()
        }
    }
}

/// Brent's method on a bracketing interval.
pub fn brent<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, xtol: f64, max_iter: usize) -> Option<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Some(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol * m.signum() };
        fb = f(b);
    }
    Some(b)
}

/// Smallest `|M(L, 0)|` over a `κL` scan; used as the no-oscillation certificate.
fn infimum_scan(params: &MediumParams, n: usize) -> f64 {
    let top = (params.kappa_l()).max(std::f64::consts::PI * params.delta().abs()) * 2.0;
    (1..=n)
        .filter_map(|i| params.with_kappa_l(top * i as f64 / n as f64).ok())
        .map(|p| m_function(&coupling_matrix(&p, 0.0), 1.0).norm())
        .fold(f64::INFINITY, f64::min)
}

pub fn find_threshold(params: &MediumParams, free: FreeVariable) -> Result<ThresholdResult, ThresholdError> {
    find_threshold_with(params, free, &ThresholdOptions::default())
}

/// Value of `free` at which `M(L, 0)` first vanishes.
pub fn find_threshold_with(
    params: &MediumParams,
    free: FreeVariable,
    opts: &ThresholdOptions,
) -> Result<ThresholdResult, ThresholdError> {
    let pi = std::f64::consts::PI;
    let x_max = match free {
        FreeVariable::KappaL | FreeVariable::Length => {
            if !oscillation_possible(params) {
                return Err(ThresholdError::NoThreshold { infimum: infimum_scan(params, opts.scan_points) });
            }
            (opts.root_index + 1) as f64 * pi
        }
        FreeVariable::OmegaRabi => {
            if params.gamma_0() == 0.0 {
                return Err(ThresholdError::UndefinedForLosslessCoherence { what: "omega_rabi threshold" });
            }
            // M(L,0) > 0 for ηL ≤ π/2, and ηL < κL/|Δ| for every Ω
            let reach = params.kappa_l() / params.delta().abs();
            if reach <= 0.5 * pi {
                return Err(ThresholdError::NoThreshold { infimum: reach.cos() });
            }
            ((opts.root_index + 1) as f64 * pi).min(reach)
        }
    };
    let n = opts.scan_points.max(2) * (opts.root_index + 1);
    let eval = |x: f64| params_at(params, free, x).map(|p| m_at_zero(&p));

    let mut prev: Option<(f64, f64)> = None;
    let mut found = 0usize;
    let mut bracket = None;
    for i in 1..=n {
        // the closed end is approached but not reached: Ω diverges there
        let x = if i == n { x_max * (1.0 - 1e-12) } else { x_max * i as f64 / n as f64 };
        let Some(v) = eval(x) else { continue };
        if let Some((xp, vp)) = prev {
            if vp.signum() != v.signum() || v == 0.0 {
                if found == opts.root_index {
                    bracket = Some((xp, x));
                    break;
                }
                found += 1;
            }
        }
        prev = Some((x, v));
    }
    let (lo, hi) = bracket.ok_or(ThresholdError::BracketFailure { scanned: n })?;
    let x = brent(|x| eval(x).unwrap_or(f64::NAN), lo, hi, 1e-15, 200)
        .ok_or(ThresholdError::BracketFailure { scanned: n })?;
    let p = params_at(params, free, x).ok_or(ThresholdError::BracketFailure { scanned: n })?;
    let cm = coupling_matrix(&p, 0.0);
    let residual = m_function(&cm, 1.0).norm();
    if residual >= ROOT_RESIDUAL {
        log::warn!("threshold residual {residual:e} above {ROOT_RESIDUAL:e}");
    }
    let value = match free {
        FreeVariable::KappaL => p.kappa_l(),
        FreeVariable::OmegaRabi => p.omega_rabi(),
        FreeVariable::Length => p.kappa_l() / params.kappa_l() * params.length(),
    };
    Ok(ThresholdResult { free_variable: free, value_at_threshold: value, eta_l_root: cm.eta().re, residual, params: p })
}

/// `Δ_opt = sqrt(γa·Ω²/(2γ0))`.
pub fn optimal_detuning(params: &MediumParams) -> Result<f64, ThresholdError> {
    if params.gamma_0() == 0.0 {
        return Err(ThresholdError::UndefinedForLosslessCoherence { what: "optimal detuning" });
    }
    Ok((params.gamma_a() * params.omega_sq() / (2.0 * params.gamma_0())).sqrt())
}

/// `|M|² = sqrt(γ0·|Δ|/Ω²)` below which the floor term dominates the near-threshold squeezing.
pub fn pre_threshold_saturation_point(params: &MediumParams) -> f64 {
    (params.gamma_0() * params.delta().abs() / params.omega_sq()).sqrt()
}

/// Adjusts `κL` below threshold so that `|M(L, 0)|² = m_sq`.
pub fn tune_to_m_sq(params: &MediumParams, m_sq: f64) -> Result<MediumParams, ThresholdError> {
    if !(m_sq > 0.0 && m_sq < 1.0) {
        return Err(ThresholdError::BadTarget { target: m_sq });
    }
    let th = find_threshold(params, FreeVariable::KappaL)?;
    let r = r_coeff(params);
    let inv_d2 = 1.0 / (params.delta() * params.delta());
    let rho = (inv_d2 - r * r).sqrt();
    // M(x) = R cos(x − φ) decreases monotonically from R ≥ 1 to 0 on (φ, x_th)
    let phi = (r / rho).atan();
    let target = m_sq.sqrt();
    let f = |x: f64| params_at(params, FreeVariable::KappaL, x).map(|p| m_at_zero(&p) - target).unwrap_or(f64::NAN);
    let x = brent(f, phi, th.eta_l_root, 1e-15, 200).ok_or(ThresholdError::BadTarget { target: m_sq })?;
    params_at(params, FreeVariable::KappaL, x)
        .ok_or(ThresholdError::Params(ParamError::NonFinite { name: "kappa_l", value: f64::NAN }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    Gamma0,
    OmegaRabi,
    Delta,
    KappaL,
    /// Fourier frequency, other parameters fixed.
    Omega,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            Self::Gamma0 => "gamma_0",
            Self::OmegaRabi => "omega_rabi",
            Self::Delta => "delta",
            Self::KappaL => "kappa_l",
            Self::Omega => "omega",
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gamma_0" => Ok(Self::Gamma0),
            "omega_rabi" => Ok(Self::OmegaRabi),
            "delta" => Ok(Self::Delta),
            "kappa_l" => Ok(Self::KappaL),
            "omega" => Ok(Self::Omega),
            other => Err(format!("unknown sweep axis '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepQuantity {
    N1,
    N2,
    STheta,
    MAbs,
    /// `1 − κL/κL_th`: fraction of gain still missing to reach threshold.
    ThresholdMargin,
}

impl SweepQuantity {
    pub fn name(self) -> &'static str {
        match self {
            Self::N1 => "n1",
            Self::N2 => "n2",
            Self::STheta => "s_theta",
            Self::MAbs => "m_abs",
            Self::ThresholdMargin => "threshold_margin",
        }
    }
}

impl std::str::FromStr for SweepQuantity {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "n1" => Ok(Self::N1),
            "n2" => Ok(Self::N2),
            "s_theta" => Ok(Self::STheta),
            "m_abs" => Ok(Self::MAbs),
            "threshold_margin" => Ok(Self::ThresholdMargin),
            other => Err(format!("unknown sweep quantity '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub quantities: Vec<SweepQuantity>,
    /// Fourier frequency for parameter axes.
    pub omega: f64,
    /// Fixed quadrature phase; `None` picks the optimal phase at each point.
    pub theta: Option<f64>,
    /// Re-tune `κL` at every point so that `|M(L, 0)|²` equals this value.
    pub hold_m_sq: Option<f64>,
}

impl SweepSpec {
    pub fn new(axis: SweepAxis, values: Vec<f64>, quantities: Vec<SweepQuantity>) -> Self {
        Self { axis, values, quantities, omega: 0.0, theta: None, hold_m_sq: None }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if self.values.is_empty() {
            return Err(SweepError::EmptyGrid);
        }
        if self.quantities.is_empty() {
            return Err(SweepError::NoQuantities);
        }
        let up = self.values.len() < 2 || self.values[1] > self.values[0];
        for (i, w) in self.values.windows(2).enumerate() {
            let ok = if up { w[1] > w[0] } else { w[1] < w[0] };
            if !ok || !w[1].is_finite() {
                return Err(SweepError::NotMonotone { index: i + 1 });
            }
        }
        if !self.values[0].is_finite() {
            return Err(SweepError::NotMonotone { index: 0 });
        }
        Ok(())
    }

    fn wants(&self, q: SweepQuantity) -> bool {
        self.quantities.contains(&q)
    }
}

/// One grid point of a sweep. Unrequested or unavailable quantities are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub n1: Option<f64>,
    pub n2: Option<f64>,
    pub s_theta: Option<f64>,
    pub theta: Option<f64>,
    pub m_abs: Option<f64>,
    pub threshold_margin: Option<f64>,
    /// `|M(L, ω)|` fell below the threshold floor.
    pub diverged: bool,
    pub error: Option<String>,
}

impl SweepRow {
    fn empty(value: f64) -> Self {
        Self {
            value,
            n1: None,
            n2: None,
            s_theta: None,
            theta: None,
            m_abs: None,
            threshold_margin: None,
            diverged: false,
            error: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTable {
    pub axis: SweepAxis,
    pub quantities: Vec<SweepQuantity>,
    pub rows: Vec<SweepRow>,
}

fn point_params(base: &MediumParams, spec: &SweepSpec, v: f64) -> Result<(MediumParams, f64), ThresholdError> {
    let (p, omega) = match spec.axis {
        SweepAxis::Gamma0 => (base.with_gamma_0(v)?, spec.omega),
        SweepAxis::OmegaRabi => (base.with_omega_rabi(v)?, spec.omega),
        SweepAxis::Delta => (base.with_delta(v)?, spec.omega),
        SweepAxis::KappaL => (base.with_kappa_l(v)?, spec.omega),
        SweepAxis::Omega => (*base, v),
    };
    let p = match spec.hold_m_sq {
        Some(m2) => tune_to_m_sq(&p, m2)?,
        None => p,
    };
    Ok((p, omega))
}

fn sweep_point(base: &MediumParams, spec: &SweepSpec, v: f64, opts: &GreensOptions) -> SweepRow {
    let mut row = SweepRow::empty(v);
    let (p, omega) = match point_params(base, spec, v) {
        Ok(x) => x,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    let cm = coupling_matrix(&p, omega);
    let m_abs = m_function(&cm, 1.0).norm();
    if spec.wants(SweepQuantity::MAbs) {
        row.m_abs = Some(m_abs);
    }
    if spec.wants(SweepQuantity::ThresholdMargin) {
        match find_threshold(&p, FreeVariable::KappaL) {
            Ok(t) => row.threshold_margin = Some(1.0 - p.kappa_l() / t.value_at_threshold),
            Err(ThresholdError::NoThreshold { .. }) => row.threshold_margin = None,
            Err(e) => row.error = Some(e.to_string()),
        }
    }
    let spectral = [SweepQuantity::N1, SweepQuantity::N2, SweepQuantity::STheta];
    if spectral.iter().any(|q| spec.wants(*q)) {
        if m_abs < opts.threshold_floor {
            row.diverged = true;
            return row;
        }
        match medium_moments(&p, omega, opts) {
            Ok(m) => {
                if spec.wants(SweepQuantity::N1) {
                    row.n1 = Some(m.n1);
                }
                if spec.wants(SweepQuantity::N2) {
                    row.n2 = Some(m.n2);
                }
                if spec.wants(SweepQuantity::STheta) {
                    let th = spec.theta.unwrap_or_else(|| m.optimal_theta());
                    row.theta = Some(th);
                    row.s_theta = Some(m.s_theta(th));
                }
            }
            Err(crate::error::GreensError::AtThreshold { .. }) => row.diverged = true,
            Err(e) => row.error = Some(e.to_string()),
        }
    }
    row
}

/// Evaluates the requested quantities over a 1-D grid; per-point failures are recorded in the rows.
pub fn sweep(base: &MediumParams, spec: &SweepSpec) -> Result<SpectrumTable, SweepError> {
    sweep_with(base, spec, &GreensOptions::default())
}

pub fn sweep_with(base: &MediumParams, spec: &SweepSpec, opts: &GreensOptions) -> Result<SpectrumTable, SweepError> {
    spec.validate()?;
    let rows = spec.values.par_iter().map(|&v| sweep_point(base, spec, v, opts)).collect();
    Ok(SpectrumTable { axis: spec.axis, quantities: spec.quantities.clone(), rows })
}

/// `M(L, 0)` as a complex number, for diagnostics.
pub fn m_at_threshold_plane(params: &MediumParams) -> Complex64 {
    m_function(&coupling_matrix(params, 0.0), 1.0)
}
