//! Monte-Carlo estimates of the pair spectra from sampled Langevin noise.
//!
//! The normally ordered correlators `⟨f1 f1*⟩ = d11`, `⟨f2 f2*⟩ = d22`,
//! `⟨f1 f2⟩ = d12` are not a classical covariance whenever `d11·d22 < |d12|²`,
//! which is the regime of interest. Each amplitude and its conjugate partner
//! are therefore sampled as independent complex variables (doubled phase
//! space) whose complex-symmetric second moments reproduce the table exactly:
//! a pair `(u, v)` with `⟨u v⟩ = g` and `⟨u u⟩ = ⟨v v⟩ = 0` is
//! `u = w(ξ + iζ)`, `v = w(ξ − iζ)` with `w = sqrt(g/2)` and real standard
//! normals `ξ, ζ`.
//!
//! Sample `k` of seed `s` uses `ChaCha8Rng::seed_from_u64(s)` on stream `k`,
//! so results do not depend on the number of worker threads.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::McError;
use crate::greens::DEFAULT_THRESHOLD_FLOOR;
use crate::params::{coupling_matrix, diffusion_table, CouplingMatrix, DiffusionTable, MediumParams};
use crate::quadrature::gl8;

pub const MIN_CELLS: usize = 16;
pub const MIN_SAMPLES: usize = 100;
/// Largest tolerated fraction of threshold-flagged samples.
pub const MAX_FLAGGED_FRACTION: f64 = 0.01;
/// Generator identity recorded in run metadata.
pub const RNG_NAME: &str = "ChaCha8Rng::seed_from_u64(seed), stream = sample index";

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Cell-constant noise on a uniform grid of `n_z` cells over `[0, 1]`.
///
/// `f1c[k]`, `f2[k]` drive the field equations; `f1[k]`, `f2c[k]` are their
/// conjugate partners. Per-cell second moments are `D/Δz`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRealization {
    pub f1c: Vec<Complex64>,
    pub f2: Vec<Complex64>,
    pub f1: Vec<Complex64>,
    pub f2c: Vec<Complex64>,
    pub seed: u64,
    pub stream: u64,
}

impl NoiseRealization {
    pub fn zeros(n_z: usize) -> Self {
        Self {
            f1c: vec![ZERO; n_z],
            f2: vec![ZERO; n_z],
            f1: vec![ZERO; n_z],
            f2c: vec![ZERO; n_z],
            seed: 0,
            stream: 0,
        }
    }

    pub fn n_z(&self) -> usize {
        self.f1c.len()
    }

    pub fn dz(&self) -> f64 {
        1.0 / self.n_z() as f64
    }

    /// Cell midpoints.
    pub fn grid(&self) -> Vec<f64> {
        let dz = self.dz();
        (0..self.n_z()).map(|k| (k as f64 + 0.5) * dz).collect()
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        for v in [&mut self.f1c, &mut self.f2, &mut self.f1, &mut self.f2c] {
            v.iter_mut().for_each(|x| *x *= factor);
        }
        self
    }
}

fn check_table(table: &DiffusionTable) -> Result<(), McError> {
    for (channel, v) in [("d11", table.d11), ("d22", table.d22)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(McError::NotRealizable { channel, value: v });
        }
    }
    if !table.d12.is_finite() {
        return Err(McError::NotRealizable { channel: "d12", value: f64::NAN });
    }
    Ok(())
}

/// Noise for the medium's diffusion table, stream 0.
pub fn sample_noise(params: &MediumParams, n_z: usize, seed: u64) -> Result<NoiseRealization, McError> {
    sample_noise_table(&diffusion_table(params), n_z, seed, 0)
}

pub fn sample_noise_table(
    table: &DiffusionTable,
    n_z: usize,
    seed: u64,
    stream: u64,
) -> Result<NoiseRealization, McError> {
    if n_z < MIN_CELLS {
        return Err(McError::TooFewCells { n_z, min: MIN_CELLS });
    }
    check_table(table)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut out = NoiseRealization::zeros(n_z);
    out.seed = seed;
    out.stream = stream;
    let inv2dz = n_z as f64 / 2.0;
    let w11 = Complex64::new(table.d11 * inv2dz, 0.0).sqrt();
    let w22 = Complex64::new(table.d22 * inv2dz, 0.0).sqrt();
    let w12 = (table.d12 * inv2dz).sqrt();
    let w12c = (table.d12.conj() * inv2dz).sqrt();
    let mut draw = |w: Complex64| {
        let xi: f64 = StandardNormal.sample(&mut rng);
        let zeta: f64 = StandardNormal.sample(&mut rng);
        (w * Complex64::new(xi, zeta), w * Complex64::new(xi, -zeta))
    };
    for k in 0..n_z {
        let (a, b) = draw(w11);
        out.f1c[k] += a;
        out.f1[k] += b;
        let (a, b) = draw(w22);
        out.f2[k] += a;
        out.f2c[k] += b;
        let (a, b) = draw(w12);
        out.f1[k] += a;
        out.f2[k] += b;
        let (a, b) = draw(w12c);
        out.f1c[k] += a;
        out.f2c[k] += b;
    }
    Ok(out)
}

type Mat2 = [[Complex64; 2]; 2];

fn mat_vec(m: &Mat2, v: [Complex64; 2]) -> [Complex64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut r = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    r
}

/// `exp(i·A·u) = e^{iãu}[cos(ηu)·1 + i·(sin(ηu)/η)·N]`, `N = A − ã·1`.
fn propagator(cm: &CouplingMatrix, u: f64) -> Mat2 {
    let mean = cm.mean_diagonal();
    let a = cm.half_difference();
    let eta = cm.eta();
    let x = eta * u;
    let (c, s) =
        if x.norm() < 1e-8 { (Complex64::new(1.0, 0.0), Complex64::new(u, 0.0)) } else { (x.cos(), x.sin() / eta) };
    let ph = (I * mean * u).exp();
    let is = I * s;
    [[ph * (c - is * a), ph * is * cm.a12], [ph * is * cm.a21, ph * (c + is * a)]]
}

/// Per-cell transfer data for a uniform grid.
#[derive(Debug, Clone, Copy)]
pub struct CellPropagator {
    /// `exp(i·A·Δz)`
    step: Mat2,
    /// `∫_0^Δz exp(i·A·u) du`
    forcing: Mat2,
    /// `exp(i·A)`
    full: Mat2,
}

impl CellPropagator {
    pub fn new(cm: &CouplingMatrix, n_z: usize) -> Self {
        let h = 1.0 / n_z as f64;
        let rule = gl8();
        let mut forcing = [[ZERO; 2]; 2];
        for (x, w) in rule.nodes().iter().zip(rule.weights()) {
            let p = propagator(cm, 0.5 * h * (1.0 + x));
            for i in 0..2 {
                for j in 0..2 {
                    forcing[i][j] += p[i][j] * (0.5 * h * w);
                }
            }
        }
        let step = propagator(cm, h);
        // full propagator as the product of the cell steps, consistent with the particular solution
        let mut full = [[Complex64::new(1.0, 0.0), ZERO], [ZERO, Complex64::new(1.0, 0.0)]];
        let mut pow = step;
        let mut k = n_z;
        while k > 0 {
            if k & 1 == 1 {
                full = mat_mul(&full, &pow);
            }
            pow = mat_mul(&pow, &pow);
            k >>= 1;
        }
        Self { step, forcing, full }
    }

    /// Solves `y′ = iAy + i·s` with `y1(0) = 0`, `y2(1) = 0` for cell-constant
    /// sources; returns `(y1(1), y2(0))`, or `None` at the threshold singularity.
    pub fn solve(&self, s1: &[Complex64], s2: &[Complex64], floor: f64) -> Option<(Complex64, Complex64)> {
        let mut p = [ZERO; 2];
        for (a, b) in s1.iter().zip(s2) {
            let f = mat_vec(&self.forcing, [I * a, I * b]);
            let q = mat_vec(&self.step, p);
            p = [q[0] + f[0], q[1] + f[1]];
        }
        // y(1) = Φ·(0, β) + p(1), with E2(1) = 0
        let phi22 = self.full[1][1];
        if phi22.norm() < floor {
            return None;
        }
        let beta = -p[1] / phi22;
        Some((self.full[0][1] * beta + p[0], beta))
    }
}

/// `(E1*(L, ω), E2(0, ω))` driven by `noise.f1c`, `noise.f2`.
pub fn solve_bvp_sample(
    params: &MediumParams,
    omega: f64,
    noise: &NoiseRealization,
) -> Result<(Complex64, Complex64), McError> {
    let cp = CellPropagator::new(&coupling_matrix(params, omega), noise.n_z());
    cp.solve(&noise.f1c, &noise.f2, DEFAULT_THRESHOLD_FLOOR).ok_or(McError::TooManyFlagged { flagged: 1, total: 1 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum McQuantity {
    N1,
    N2,
    STheta,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    /// `sample_std / sqrt(n_samples)`
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub quantity: McQuantity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSpectrum {
    pub n1: McEstimate,
    pub n2: McEstimate,
    pub s_theta: McEstimate,
    pub theta: f64,
    pub flagged: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McOptions {
    pub n_samples: usize,
    pub n_z: usize,
    pub seed: u64,
    /// Multiplies every noise sample.
    pub noise_scale: f64,
    pub threshold_floor: f64,
}

impl Default for McOptions {
    fn default() -> Self {
        Self { n_samples: 10_000, n_z: 256, seed: 0, noise_scale: 1.0, threshold_floor: DEFAULT_THRESHOLD_FLOOR }
    }
}

fn estimate(values: &[f64], seed: u64, quantity: McQuantity) -> McEstimate {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
    McEstimate { mean, std_error: (var / n as f64).sqrt(), n_samples: n, seed, quantity }
}

/// Monte-Carlo estimates of `n1`, `n2` and `S_θ` at `omega`.
pub fn mc_spectrum(params: &MediumParams, omega: f64, theta: f64, opts: &McOptions) -> Result<McSpectrum, McError> {
    mc_spectrum_table(&coupling_matrix(params, omega), &diffusion_table(params), params.kappa_l(), theta, opts)
}

/// As [`mc_spectrum`] for an arbitrary coupling matrix and diffusion table.
pub fn mc_spectrum_table(
    cm: &CouplingMatrix,
    table: &DiffusionTable,
    kappa_l: f64,
    theta: f64,
    opts: &McOptions,
) -> Result<McSpectrum, McError> {
    if opts.n_samples < MIN_SAMPLES {
        return Err(McError::TooFewSamples { n_samples: opts.n_samples, min: MIN_SAMPLES });
    }
    if opts.n_z < MIN_CELLS {
        return Err(McError::TooFewCells { n_z: opts.n_z, min: MIN_CELLS });
    }
    check_table(table)?;
    let cp = CellPropagator::new(cm, opts.n_z);
    let rot = Complex64::from_polar(1.0, 2.0 * theta);
    let conj_all = |v: &[Complex64]| v.iter().map(|x| x.conj()).collect::<Vec<_>>();

    let per_sample: Vec<Option<[f64; 3]>> = (0..opts.n_samples as u64)
        .into_par_iter()
        .map(|k| {
            let noise = sample_noise_table(table, opts.n_z, opts.seed, k).ok()?.scaled(opts.noise_scale);
            let (x, y) = cp.solve(&noise.f1c, &noise.f2, opts.threshold_floor)?;
            let (xc, yc) = cp.solve(&conj_all(&noise.f1), &conj_all(&noise.f2c), opts.threshold_floor)?;
            let (xp, yp) = (xc.conj(), yc.conj());
            let n1 = kappa_l * (x * xp).re;
            let n2 = kappa_l * (y * yp).re;
            let cross = kappa_l * (rot * xp * y + rot.conj() * x * yp).re;
            Some([n1, n2, 0.25 + (n1 + n2) / 4.0 - cross / 4.0])
        })
        .collect();

    let good: Vec<[f64; 3]> = per_sample.iter().flatten().copied().collect();
    let flagged = per_sample.len() - good.len();
    if flagged as f64 > MAX_FLAGGED_FRACTION * opts.n_samples as f64 || good.len() < 2 {
        return Err(McError::TooManyFlagged { flagged, total: opts.n_samples });
    }
    if flagged > 0 {
        log::warn!("{flagged} of {} samples excluded at the threshold singularity", opts.n_samples);
    }
    let col = |i: usize| good.iter().map(|v| v[i]).collect::<Vec<_>>();
    Ok(McSpectrum {
        n1: estimate(&col(0), opts.seed, McQuantity::N1),
        n2: estimate(&col(1), opts.seed, McQuantity::N2),
        s_theta: estimate(&col(2), opts.seed, McQuantity::STheta),
        theta,
        flagged,
    })
}
