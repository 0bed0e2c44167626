//! Acceptance suite: one line per criterion, `[PASS]` or `[FAIL]`.
//!
//! Criterion 2 is a known red: the full numerics settle at roughly a quarter
//! of the near-threshold closed form (see README). It is reported as FAIL and
//! tracked as an expected failure; an unexpected pass or any other failure
//! makes the target exit non-zero.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::time::Instant;

use fwm_core::greens::{
    asymptotic_s_plus, kernels, kernels_on_branch, m_function, m_function_on_branch, medium_moments, pair_moments,
    GreensOptions,
};
use fwm_core::langevin::{mc_spectrum, McOptions};
use fwm_core::params::{coupling_matrix, make_params, DiffusionTable, MediumParams};
use fwm_core::threshold::{find_threshold, optimal_detuning, oscillation_possible, tune_to_m_sq, FreeVariable};
use fwm_core::{derived_scales, ThresholdError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXPECTED_RED: &[u32] = &[2];

struct Outcome {
    pass: bool,
    detail: String,
}

fn p0() -> MediumParams {
    make_params(1e-3, 1.0, 22.360680, 35.3762).unwrap()
}

fn opts() -> GreensOptions {
    GreensOptions::default()
}

/// Bisection on `tan x = −ρ/r` for `x ∈ (π/2, π)`, written as `ρ·cos x + r·sin x = 0`.
fn oracle_eta_l(g0: f64, om: f64, d: f64) -> f64 {
    let r = g0 / (2.0 * om * om);
    let rho = (1.0 / (d * d) - r * r).sqrt();
    let g = |x: f64| rho * x.cos() + r * x.sin();
    let (mut lo, mut hi) = (FRAC_PI_2, PI);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(lo) * g(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn oracle_kappa_l(g0: f64, om: f64, d: f64) -> f64 {
    let r = g0 / (2.0 * om * om);
    oracle_eta_l(g0, om, d) / (1.0 / (d * d) - r * r).sqrt()
}

fn criterion_1() -> Outcome {
    let t = find_threshold(&p0(), FreeVariable::KappaL).unwrap();
    let mut ok = (t.value_at_threshold - 35.3762).abs() < 1e-4 && (t.eta_l_root - 1.581976).abs() < 1e-6;
    let mut worst: f64 = 0.0;
    for &g0 in &[1e-3f64, 5e-4, 2e-3, 1e-4] {
        for &om in &[1.0, 0.7, 1.5] {
            for &dscale in &[1.0, 0.5, 2.0] {
                let d = (om * om / (2.0 * g0)).sqrt() * dscale;
                let p = make_params(g0, om, d, 10.0).unwrap();
                let t = find_threshold(&p, FreeVariable::KappaL).unwrap();
                let ex = oracle_eta_l(g0, om, d);
                let ek = oracle_kappa_l(g0, om, d);
                worst = worst.max(((t.eta_l_root - ex) / ex).abs()).max(((t.value_at_threshold - ek) / ek).abs());
                ok &= t.residual < 1e-10;
            }
        }
    }
    ok &= worst < 1e-8;
    Outcome {
        pass: ok,
        detail: format!(
            "kappaL = {:.6}, etaL = {:.7}; max relative deviation from tan-root oracle {:.1e} over 36 sets",
            t.value_at_threshold, t.eta_l_root, worst
        ),
    }
}

fn criterion_2() -> Outcome {
    let mut ratios = Vec::new();
    for &g0 in &[1e-3, 3e-4, 1e-4, 1e-5] {
        for &om in &[1.0, 2.0] {
            let base = make_params(g0, om, 1.0, 1.0).unwrap();
            let base = base.with_delta(optimal_detuning(&base).unwrap()).unwrap();
            for &m2 in &[1e-3, 3e-3, 1e-2] {
                let p = tune_to_m_sq(&base, m2).unwrap();
                assert!(derived_scales(&p).ideal_regime());
                let s = medium_moments(&p, 0.0, &opts()).unwrap().s_theta(FRAC_PI_4);
                ratios.push(s / asymptotic_s_plus(&p, m2));
            }
        }
    }
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    let pass = ratios.iter().all(|r| (r - 1.0).abs() < 0.15);
    Outcome {
        pass,
        detail: format!("{} sets; numeric/closed-form ratio in [{lo:.3}, {hi:.3}] (required 0.85..1.15)", ratios.len()),
    }
}

/// `min_{κL < κL_th} S_opt(0)` at `Δ = Δ_opt`, searched over `ln|M|²`.
fn floor_value(g0: f64, om: f64) -> f64 {
    let base = make_params(g0, om, 1.0, 1.0).unwrap();
    let base = base.with_delta(optimal_detuning(&base).unwrap()).unwrap();
    let s = |lm: f64| {
        let p = tune_to_m_sq(&base, lm.exp()).unwrap();
        medium_moments(&p, 0.0, &opts()).unwrap().s_opt()
    };
    let (a, b) = ((1e-6f64).ln(), (0.5f64).ln());
    let n = 40;
    let grid: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&x| s(x)).collect();
    let k = (0..=n).min_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap();
    let (mut lo, mut hi) = (grid[k.saturating_sub(1)], grid[(k + 1).min(n)]);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (s(x1), s(x2));
    for _ in 0..60 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = s(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = s(x2);
        }
    }
    f1.min(f2).min(vals[k])
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn criterion_3() -> Outcome {
    let omegas: Vec<f64> = (0..6).map(|i| 10f64.powf(i as f64 / 5.0)).collect();
    let mut om_slopes = Vec::new();
    for &g0 in &[1e-6, 1e-5, 1e-4] {
        let ys: Vec<f64> = omegas.iter().map(|&om| floor_value(g0, om).ln()).collect();
        let xs: Vec<f64> = omegas.iter().map(|o| o.ln()).collect();
        om_slopes.push(slope(&xs, &ys));
    }
    let gammas: Vec<f64> = (0..7).map(|i| 1e-6 * 10f64.powf(i as f64 / 3.0)).collect();
    let ys: Vec<f64> = gammas.iter().map(|&g| floor_value(g, 1.0).ln()).collect();
    let xs: Vec<f64> = gammas.iter().map(|g| g.ln()).collect();
    let g_slope = slope(&xs, &ys);
    let pass = om_slopes.iter().all(|s| (s + 1.0).abs() <= 0.10) && (g_slope - 0.5).abs() <= 0.05;
    Outcome {
        pass,
        detail: format!(
            "slope vs Omega {:?} (target -1.00 +- 0.10), slope vs gamma_0 {g_slope:.3} (target 0.50 +- 0.05)",
            om_slopes.iter().map(|s| format!("{s:.3}")).collect::<Vec<_>>()
        ),
    }
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let ratio = 10f64.powf(rng.random_range(-8.0..-5.7));
        let om = 10f64.powf(rng.random_range(-0.3..0.3));
        let base = make_params(ratio * om * om, om, 1.0, 1.0).unwrap();
        let d_opt = optimal_detuning(&base).unwrap();
        // 200 points, log-uniform over one decade either side
        let step = 2.0 * 10f64.ln() / 199.0;
        let grid: Vec<f64> = (0..200).map(|i| d_opt / 10.0 * (step * i as f64).exp()).collect();
        let vals: Vec<f64> = grid
            .iter()
            .map(|&d| {
                let p = tune_to_m_sq(&base.with_delta(d).unwrap(), 0.01).unwrap();
                medium_moments(&p, 0.0, &opts()).unwrap().s_theta(FRAC_PI_4)
            })
            .collect();
        let k = (0..200).min_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap();
        worst = worst.max((grid[k] / d_opt).ln().abs() / step);
    }
    Outcome {
        pass: worst <= 1.0,
        detail: format!(
            "10 random sets (gamma_0/Omega^2 in [1e-8, 2e-6], |M|^2 = 0.01, log grid [D/10, 10D]); worst argmin offset {worst:.2} grid steps"
        ),
    }
}

fn criterion_5() -> Outcome {
    let vals: Vec<f64> = (0..9)
        .map(|i| {
            let m2 = 1e-4 * 10f64.powf(i as f64 / 4.0);
            let p = tune_to_m_sq(&p0(), m2).unwrap();
            let m = medium_moments(&p, 0.0, &opts()).unwrap();
            m.n1 * m.m_sq
        })
        .collect();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let dev = vals.iter().map(|v| (v / mean - 1.0).abs()).fold(0.0, f64::max);
    Outcome {
        pass: dev < 0.01,
        detail: format!("n1(0)*|M|^2 = {mean:.5} with max deviation {:.2}% over |M|^2 in [1e-4, 1e-2]", dev * 100.0),
    }
}

fn criterion_6() -> Outcome {
    let points: Vec<(MediumParams, f64)> = {
        let a = tune_to_m_sq(&p0(), 0.01).unwrap();
        let b = tune_to_m_sq(&p0(), 0.05).unwrap();
        let c = make_params(1e-4, 1.0, 1.0, 1.0).unwrap();
        let c = tune_to_m_sq(&c.with_delta(optimal_detuning(&c).unwrap()).unwrap(), 0.02).unwrap();
        let d = tune_to_m_sq(&make_params(1e-3, 1.5, 15.0, 1.0).unwrap(), 0.1).unwrap();
        let dw0 = a.omega_sq() / a.delta();
        vec![(a, 0.0), (b, 0.0), (c, 0.0), (d, 0.0), (a, 0.3 * dw0)]
    };
    let mut worst: f64 = 0.0;
    let mut fails = 0;
    for (p, w) in &points {
        let m = medium_moments(p, *w, &opts()).unwrap();
        let exact = [m.n1, m.n2, m.s_theta(FRAC_PI_4)];
        for seed in 1..=5u64 {
            let o = McOptions { n_samples: 10_000, n_z: 256, seed, ..Default::default() };
            let r = mc_spectrum(p, *w, FRAC_PI_4, &o).unwrap();
            for (est, ex) in [r.n1, r.n2, r.s_theta].iter().zip(exact) {
                let z = (est.mean - ex).abs() / est.std_error;
                worst = worst.max(z);
                if z >= 3.0 {
                    fails += 1;
                }
            }
        }
    }
    Outcome {
        pass: fails == 0,
        detail: format!(
            "5 points x 5 seeds x (n1, n2, S_pi/4), n = 1e4, n_z = 256; worst |mc - analytic| = {worst:.2} std errors"
        ),
    }
}

fn random_subthreshold(rng: &mut ChaCha8Rng) -> (MediumParams, f64) {
    loop {
        let g0 = 10f64.powf(rng.random_range(-6.0..-2.0));
        let om = 10f64.powf(rng.random_range(-0.5..0.5));
        let d = 10f64.powf(rng.random_range(0.7..2.7)) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let Ok(p) = make_params(g0, om, d, 1.0) else { continue };
        let Ok(t) = find_threshold(&p, FreeVariable::KappaL) else { continue };
        let p = p.with_kappa_l(t.value_at_threshold * rng.random_range(0.05..0.999)).unwrap();
        let w_max = (0.3 * om).min(2.0 * om * om / d.abs());
        return (p, rng.random_range(-w_max..w_max));
    }
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 1000;
    let mut failures: Vec<String> = Vec::new();
    let mut min_product = f64::INFINITY;
    let note = |name: &str, ok: bool, f: &mut Vec<String>| {
        if !ok && !f.iter().any(|s| s == name) {
            f.push(name.to_string());
        }
    };
    for _ in 0..n {
        let (p, w) = random_subthreshold(&mut rng);
        let cm = coupling_matrix(&p, w);
        let theta = rng.random_range(-PI..PI);
        let z = rng.random_range(0.0..1.0);

        let vac = pair_moments(&cm, &DiffusionTable::ZERO, p.kappa_l(), &opts()).unwrap();
        note("vacuum", vac.n1 == 0.0 && vac.n2 == 0.0 && (vac.s_theta(theta) - 0.25).abs() <= 1e-12, &mut failures);

        note("M(0)=1", m_function(&cm, 0.0) == num_complex::Complex64::new(1.0, 0.0), &mut failures);

        let eta = cm.eta();
        let ma = m_function_on_branch(&cm, z, eta);
        let mb = m_function_on_branch(&cm, z, -eta);
        let ka = kernels_on_branch(&cm, z, eta).unwrap();
        let kb = kernels_on_branch(&cm, z, -eta).unwrap();
        let kp = kernels(&cm, z).unwrap();
        let close = |x: num_complex::Complex64, y: num_complex::Complex64| (x - y).norm() <= 1e-9 * x.norm().max(1.0);
        note(
            "branch",
            close(ma, mb)
                && close(ka.k1_f1s, kb.k1_f1s)
                && close(ka.k1_f2, kb.k1_f2)
                && close(ka.k2_f1s, kb.k2_f1s)
                && close(ka.k2_f2, kb.k2_f2)
                && close(ka.k1_f1s, kp.k1_f1s),
            &mut failures,
        );

        let m = medium_moments(&p, w, &opts()).unwrap();
        let s = m.s_theta(theta);
        note("periodicity", (s - m.s_theta(theta + PI)).abs() <= 1e-12 * s.max(1.0), &mut failures);
        let prod = s * m.s_theta(theta + FRAC_PI_2);
        min_product = min_product.min(prod - 1.0 / 16.0);
        note("uncertainty", prod >= 1.0 / 16.0 - 1e-9, &mut failures);

        // feasibility over a wider range, including drives too weak to oscillate
        let g0 = 10f64.powf(rng.random_range(-4.0..0.0));
        let om = 10f64.powf(rng.random_range(-1.5..0.5));
        let d = 10f64.powf(rng.random_range(0.0..3.0)) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let q = make_params(g0, om, d, 10.0).unwrap();
        let exists = match find_threshold(&q, FreeVariable::KappaL) {
            Ok(t) => t.residual < 1e-10,
            Err(ThresholdError::NoThreshold { infimum }) => infimum.is_nan() || infimum <= 0.0,
            Err(_) => false,
        };
        note("feasibility", exists == oscillation_possible(&q), &mut failures);
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!(
            "{n} random cases: vacuum, M(0)=1, branch, periodicity, uncertainty (min margin {min_product:.2e}), feasibility{}",
            if failures.is_empty() { String::new() } else { format!("; failing: {}", failures.join(", ")) }
        ),
    }
}

fn criterion_8() -> Outcome {
    let mut detail = Vec::new();
    let mut pass = true;
    for &g0 in &[1e-8, 1e-7, 1e-6] {
        for &m2 in &[0.01, 0.03] {
            let base = make_params(g0, 1.0, 1.0, 1.0).unwrap();
            let p = tune_to_m_sq(&base.with_delta(optimal_detuning(&base).unwrap()).unwrap(), m2).unwrap();
            let dw0 = p.omega_sq() / p.delta();
            for sign in [1.0, -1.0] {
                let s: Vec<f64> = (0..=20)
                    .map(|k| medium_moments(&p, sign * dw0 * k as f64 / 20.0, &opts()).unwrap().s_opt())
                    .collect();
                let mono = s.windows(2).all(|w| w[1] > w[0]);
                let squeezed = s[..=2].iter().all(|v| *v < 0.25);
                pass &= mono && squeezed;
                if !(mono && squeezed) {
                    detail.push(format!("g0={g0:e} m2={m2} sign={sign}: mono={mono} squeezed={squeezed}"));
                }
            }
        }
    }
    Outcome {
        pass,
        detail: if detail.is_empty() {
            "S_opt(omega) < 1/4 for |omega| <= 0.1 dw0 and strictly increasing on 21 points of [0, dw0] (6 operating points, both signs)".into()
        } else {
            detail.join("; ")
        },
    }
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        (1, "threshold closed-form agreement", criterion_1),
        (2, "near-threshold closed-form regression (15%)", criterion_2),
        (3, "floor scaling law", criterion_3),
        (4, "optimal-detuning argmin", criterion_4),
        (5, "divergence scaling n1*|M|^2", criterion_5),
        (6, "Monte-Carlo vs analytic", criterion_6),
        (7, "property suites", criterion_7),
        (8, "squeezing bandwidth", criterion_8),
    ];
    let only: Option<u32> = std::env::args().nth(1).and_then(|a| a.parse().ok());
    let mut unexpected = 0;
    for (id, name, f) in criteria {
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let t0 = Instant::now();
        let out = f();
        let tag = if out.pass { "PASS" } else { "FAIL" };
        let red = EXPECTED_RED.contains(&id);
        let note = match (out.pass, red) {
            (false, true) => " (expected: known red, see README)",
            (true, true) => " (unexpected pass of a known red)",
            _ => "",
        };
        println!("[{tag}] criterion {id} {name}: {}{note} [{:.1}s]", out.detail, t0.elapsed().as_secs_f64());
        if out.pass == red {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        eprintln!("{unexpected} criterion result(s) differ from expectation");
        std::process::exit(1);
    }
}
