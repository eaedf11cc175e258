//! The acceptance checks, shared by the `qbt verify` subcommand and the
//! integration tests.

use std::f64::consts::PI;
use std::fmt;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::damping::{DrudeParams, ModelSpec, PhysicalConstants};
use crate::discrete_bath::{self, normal_modes, seeded_random_bath};
use crate::error::{Error, Result};
use crate::oracle;
use crate::quad::{breakpoints, integrate_half_line, QuadConfig};
use crate::response::{drude_poles, min_relative_separation, partial_fractions};
use crate::specfun::{aux_laplace, ci, digamma, si_lower, SeriesControl, EULER_GAMMA};
use crate::thermo::{
    classical_free_osc_free_energy, drude_coupling_free_energy, drude_coupling_free_energy_delta,
    drude_coupling_free_energy_zero_t, drude_energy, drude_energy_zero_t, evaluate_point, ohmic_coupling_free_energy,
    ohmic_coupling_free_energy_delta, ohmic_velocity_variance, second_law_gap_drude, system_entropy_spectral,
    system_free_energy, PointOptions,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

/// Reference values the checks compare against. Overridable so that a
/// corrupted value can be shown to fail the suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct References {
    /// c_e, checked as −ψ(1).
    pub euler_gamma: f64,
    /// E_g/(ℏ𝐰₀) in the large-Ω limit K_d(0) → E_g γ/(π𝐰₀).
    pub ground_energy_factor: f64,
    /// (Ω, γ) for the four curves, bottom to top, with 𝐰₀ = 1.
    pub fig1_sets: [(f64, f64); 4],
    /// Seed for random baths and random sample points.
    pub seed: u64,
}

impl Default for References {
    fn default() -> Self {
        Self {
            euler_gamma: EULER_GAMMA,
            ground_energy_factor: 0.5,
            fig1_sets: [(1.0, 1.5), (1.0, 4.0), (5.0, 1.5), (5.0, 4.0)],
            seed: 42,
        }
    }
}

impl References {
    /// Overrides a scalar reference by name.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        match name {
            "euler_gamma" => self.euler_gamma = value,
            "ground_energy_factor" => self.ground_energy_factor = value,
            "seed" => self.seed = value as u64,
            _ => return Err(Error::Domain(format!("unknown reference `{name}`"))),
        }
        Ok(())
    }

    fn fig1(&self) -> Result<Vec<DrudeParams>> {
        self.fig1_sets
            .iter()
            .map(|&(om, g)| DrudeParams::new(1.0, om, g))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    /// Worst measured deviation.
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{:>2}] {}: measured {:.3e} vs tolerance {:.1e} ({:.2} s) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.measured,
            self.tolerance,
            self.seconds,
            self.detail
        )
    }
}

pub type Check = fn(&References) -> Result<Outcome>;

/// What a check measured.
pub struct Outcome {
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Outcome {
    fn below(measured: f64, tolerance: f64, detail: String) -> Self {
        Self {
            passed: measured < tolerance,
            measured,
            tolerance,
            detail,
        }
    }
}

pub const CHECKS: [(u32, &str, Check, Level); 10] = [
    (1, "figure 1 gap curves", fig1_curves, Level::Full),
    (2, "large-cutoff zero-temperature gap", large_cutoff_gap, Level::Full),
    (3, "energy vs quadrature", energy_oracle, Level::Full),
    (4, "coupling free energy vs quadrature", free_energy_oracle, Level::Full),
    (5, "zero-temperature consistency", zero_t_consistency, Level::Full),
    (6, "discrete bath suite", discrete_suite, Level::Full),
    (7, "classical limits", classical_limits, Level::Full),
    (8, "ohmic divergence structure", ohmic_structure, Level::Full),
    (9, "special functions and sum rules", special_functions, Level::Quick),
    (
        10,
        "system free energy and entropy",
        thermodynamic_identity,
        Level::Full,
    ),
];

pub fn run_check(id: u32, refs: &References) -> CheckResult {
    let (id, name, check, _) = CHECKS.into_iter().find(|c| c.0 == id).expect("known check id");
    let start = Instant::now();
    let outcome = check(refs);
    let seconds = start.elapsed().as_secs_f64();
    match outcome {
        Ok(o) => CheckResult {
            id,
            name,
            passed: o.passed,
            measured: o.measured,
            tolerance: o.tolerance,
            detail: o.detail,
            seconds,
        },
        Err(e) => CheckResult {
            id,
            name,
            passed: false,
            measured: f64::INFINITY,
            tolerance: 0.0,
            detail: format!("error: {e}"),
            seconds,
        },
    }
}

/// Runs every check at or below `level`.
pub fn run(level: Level, refs: &References) -> Vec<CheckResult> {
    CHECKS
        .iter()
        .filter(|c| level == Level::Full || c.3 == Level::Quick)
        .map(|c| run_check(c.0, refs))
        .collect()
}

fn unit() -> PhysicalConstants {
    PhysicalConstants::default()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

pub fn log_grid(min: f64, max: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![min];
    }
    (0..points)
        .map(|k| min * (max / min).powf(k as f64 / (points - 1) as f64))
        .collect()
}

fn fig1_curves(refs: &References) -> Result<Outcome> {
    let c = unit();
    let grid = log_grid(0.01, 50.0, 200);
    let mut min_k = f64::INFINITY;
    let mut at_01 = Vec::new();
    let mut at_50 = Vec::new();
    let mut tail_monotone = true;
    for p in refs.fig1()? {
        let mut prev: Option<f64> = None;
        for &t in &grid {
            let k = second_law_gap_drude(&p, t, &c)?;
            min_k = min_k.min(k);
            if t >= 5.0 {
                if let Some(q) = prev {
                    tail_monotone &= k <= q && k > 0.0;
                }
                prev = Some(k);
            }
        }
        at_01.push(second_law_gap_drude(&p, 0.1, &c)?);
        at_50.push(second_law_gap_drude(&p, 50.0, &c)?);
    }
    let ordered = at_01.windows(2).all(|w| w[0] < w[1]);
    let max_50 = at_50.iter().cloned().fold(0.0, f64::max);
    let passed = min_k >= -1e-8 && ordered && max_50 < 0.01 && tail_monotone;
    Ok(Outcome {
        passed,
        measured: (-min_k).max(0.0),
        tolerance: 1e-8,
        detail: format!(
            "min K {min_k:.3e}; K(0.1) = {at_01:.5?} ordered {ordered}; max K(50) {max_50:.3e}; monotone for T >= 5 {tail_monotone}"
        ),
    })
}

fn large_cutoff_gap(refs: &References) -> Result<Outcome> {
    let c = unit();
    let gamma = 1.5;
    let target = refs.ground_energy_factor * gamma / PI;
    let mut devs = Vec::new();
    for om in [50.0, 100.0, 200.0] {
        let p = DrudeParams::new(1.0, om, gamma)?;
        devs.push(rel(second_law_gap_drude(&p, 0.0, &c)?, target));
    }
    let shrinking = devs.windows(2).all(|w| w[1] < w[0]);
    let last = devs[2];
    Ok(Outcome {
        passed: shrinking && last < 0.05,
        measured: last,
        tolerance: 0.05,
        detail: format!("target {target:.5}; relative deviations at Omega = 50/100/200: {devs:.4?}"),
    })
}

const ORACLE_TEMPERATURES: [f64; 5] = [0.05, 0.2, 1.0, 5.0, 20.0];

fn energy_oracle(refs: &References) -> Result<Outcome> {
    let c = unit();
    let cfg = QuadConfig::with_rel_tol(1e-11);
    let mut worst: f64 = 0.0;
    for p in refs.fig1()? {
        for t in ORACLE_TEMPERATURES {
            let a = drude_energy(&p, t, &c)?;
            let b = oracle::energy(&p.model(), p.omega_0(), t, &c, &cfg)?;
            worst = worst.max(rel(a, b));
        }
    }
    Ok(Outcome::below(
        worst,
        1e-6,
        "max relative error over 4 sets x 5 temperatures".into(),
    ))
}

fn free_energy_oracle(refs: &References) -> Result<Outcome> {
    let c = unit();
    let cfg = QuadConfig::with_rel_tol(1e-11);
    let ctrl = SeriesControl::default();
    let mut worst: f64 = 0.0;
    for p in refs.fig1()? {
        for t in ORACLE_TEMPERATURES {
            let a = drude_coupling_free_energy(&p, t, &c, &ctrl)?;
            let b = oracle::coupling_free_energy(&p.model(), p.omega_0(), t, &c, &cfg)?;
            worst = worst.max(rel(a, b));
        }
    }
    Ok(Outcome::below(
        worst,
        1e-6,
        "max relative error over 4 sets x 5 temperatures".into(),
    ))
}

fn zero_t_consistency(refs: &References) -> Result<Outcome> {
    let c = unit();
    let ctrl = SeriesControl::default();
    let mut worst_e: f64 = 0.0;
    let mut worst_f: f64 = 0.0;
    for p in refs.fig1()? {
        worst_e = worst_e.max((drude_energy(&p, 1e-4, &c)? - drude_energy_zero_t(&p, &c)?).abs());
        worst_f = worst_f
            .max((drude_coupling_free_energy(&p, 1e-4, &c, &ctrl)? - drude_coupling_free_energy_zero_t(&p, &c)?).abs());
    }
    Ok(Outcome::below(
        worst_e.max(worst_f),
        1e-3,
        format!("max |E_s(1e-4) - E_s(0)| {worst_e:.3e}; max |F_cal(1e-4) - F_cal(0)| {worst_f:.3e}"),
    ))
}

fn discrete_suite(refs: &References) -> Result<Outcome> {
    let c = unit();
    let mut interlace = true;
    let mut worst_rel: f64 = 0.0;
    let mut min_k = f64::INFINITY;
    let mut order_ok = true;
    let mut fallbacks = 0;
    for b in 0..100u64 {
        let n = 1 + (b % 6) as usize;
        let bath = seeded_random_bath(refs.seed.wrapping_add(b), n, 1.0, 1.0)?;
        interlace &= normal_modes(&bath)?.interlaces(&bath);
        for t in [0.0, 0.1, 1.0, 10.0] {
            let pt = discrete_bath::evaluate(&bath, t, &c)?;
            if pt.oracle_fallback {
                fallbacks += 1;
            }
            worst_rel = worst_rel.max((pt.energy_delta / pt.energy_oracle).abs());
            min_k = min_k.min(pt.gap);
            let margin = pt.coupling_energy - pt.coupling_free_energy;
            order_ok &= if t == 0.0 {
                margin.abs() <= 1e-12
            } else {
                margin > 1e-12
            };
        }
    }
    let passed = interlace && worst_rel < 1e-9 && min_k >= -1e-9 && order_ok;
    Ok(Outcome {
        passed,
        measured: worst_rel,
        tolerance: 1e-9,
        detail: format!(
            "interlacing {interlace}; min K {min_k:.3e}; E_cal >= F_cal (equal only at T = 0) {order_ok}; oracle fallbacks {fallbacks}"
        ),
    })
}

fn classical_limits(refs: &References) -> Result<Outcome> {
    let c = unit();
    let ctrl = SeriesControl::default();
    let mut worst_e: f64 = 0.0;
    let mut worst_f: f64 = 0.0;
    let mut classical_k: f64 = 0.0;
    let opts = PointOptions {
        classical: true,
        ..Default::default()
    };
    for p in refs.fig1()? {
        // βℏ𝐰₀ = 10⁻³
        let t = 1e3 * p.w0();
        let beta = 1.0 / t;
        worst_e = worst_e.max((beta * drude_energy(&p, t, &c)? - 1.0).abs());
        let f = drude_coupling_free_energy(&p, t, &c, &ctrl)?;
        worst_f = worst_f.max(beta * (f - classical_free_osc_free_energy(p.omega_0(), t, &c)?).abs());
        for tt in log_grid(0.01, 50.0, 20) {
            classical_k = classical_k.max(evaluate_point(&ModelSpec::Drude(p), tt, &c, &opts)?.gap.abs());
        }
    }
    Ok(Outcome {
        passed: worst_e < 1e-2 && worst_f < 1e-2 && classical_k == 0.0,
        measured: worst_e.max(worst_f),
        tolerance: 1e-2,
        detail: format!(
            "|beta E_s - 1| {worst_e:.3e}; beta |F_cal - f_cl| {worst_f:.3e}; max |classical K| {classical_k:e}"
        ),
    })
}

fn ohmic_structure(_refs: &References) -> Result<Outcome> {
    let c = unit();
    let ctrl = SeriesControl::default();
    let (w0, g, t) = (1.0, 1.5, 1.0);
    // least-squares slope of the partial sums against ln N
    let ns = [1e3, 1e4, 1e5, 1e6];
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for n in ns {
        xs.push(f64::ln(n));
        ys.push(ohmic_velocity_variance(w0, g, t, &c, n as u64)?.value);
    }
    let mx = xs.iter().sum::<f64>() / 4.0;
    let my = ys.iter().sum::<f64>() / 4.0;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let expect = c.hbar * g / (PI * c.mass);
    let slope_err = rel(slope, expect);

    // Drude Δ-series with growing cutoff against the Ohmic Δ-series
    let ohmic_delta = ohmic_coupling_free_energy_delta(w0, g, t, &c, &ctrl)?;
    let omega_d = 1e5;
    let p = DrudeParams::from_physical(w0, omega_d, g)?[0];
    let drude_delta = drude_coupling_free_energy_delta(&p, t, &c, &ctrl)?;
    let delta_gap = (drude_delta - ohmic_delta).abs();

    // totals: finite Drude values growing with ω_d, Ohmic growing with Λ
    let mut drude_zero = Vec::new();
    for wd in [1e3, 1e4, 1e5] {
        let p = DrudeParams::from_physical(w0, wd, g)?[0];
        drude_zero.push(drude_coupling_free_energy_zero_t(&p, &c)?);
    }
    let ohmic_lo = ohmic_coupling_free_energy(w0, g, t, &c, &ctrl, 1_000)?.value;
    let ohmic_hi = ohmic_coupling_free_energy(w0, g, t, &c, &ctrl, 1_000_000)?.value;
    let drude_finite = drude_zero.iter().all(|v| v.is_finite());
    let ohmic_grows = ohmic_hi - ohmic_lo > 0.5 * c.hbar * g / (2.0 * PI) * 1e3f64.ln();
    let passed = slope_err < 0.02 && delta_gap < 1e-4 && drude_finite && ohmic_grows;
    Ok(Outcome {
        passed,
        measured: slope_err,
        tolerance: 0.02,
        detail: format!(
            "slope {slope:.6} vs {expect:.6}; |Delta_drude - Delta_ohmic| {delta_gap:.2e} at omega_d = 1e5; \
             F_cal_drude(0) at omega_d = 1e3/1e4/1e5: {drude_zero:.5?}; F_cal_ohmic at cutoff 1e3 -> 1e6: {ohmic_lo:.5} -> {ohmic_hi:.5}"
        ),
    })
}

/// ψ(z) = −c_e − 1/z + Σ_{n≥1} z/(n(n+z)), summed to N = 2000 with an
/// Euler–Maclaurin tail.
fn digamma_direct_series(z: Complex64, euler_gamma: f64) -> Complex64 {
    const N: usize = 2000;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut carry = Complex64::new(0.0, 0.0);
    for n in (1..=N).rev() {
        let nf = n as f64;
        let y = z / (nf * (nf + z)) - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    // Σ_{n>N} g(n), g(x) = 1/x − 1/(x+z)
    let nf = N as f64;
    let g = |k: i32| -> Complex64 {
        // k-th derivative of g at N divided by k!
        let s = if k % 2 == 0 { 1.0 } else { -1.0 };
        (Complex64::new(nf.powi(-(k + 1)), 0.0) - (z + nf).powi(-(k + 1))) * s
    };
    let integral = ((z + nf) / nf).ln();
    // EM: ∫_N^∞ g − g(N)/2 − Σ B_{2j}/(2j)! g^{(2j−1)}(N)
    let b = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0];
    let mut tail = integral - g(0) * 0.5;
    for (j, bj) in b.iter().enumerate() {
        let k = 2 * j as i32 + 1;
        // g^{(k)}(N) = k!·g(k); B_{2j}/(2j)!·k! = B_{2j}/(2j) since k = 2j − 1
        tail -= g(k) * (bj / (2 * (j + 1)) as f64);
    }
    Complex64::new(-euler_gamma, 0.0) - z.inv() + sum + tail
}

fn special_functions(refs: &References) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(refs.seed);
    // ψ(1) = −c_e
    let psi1 = digamma(Complex64::new(1.0, 0.0))?;
    let euler_err = (psi1.re + refs.euler_gamma).abs();

    let mut worst_psi: f64 = 0.0;
    let mut sampled = 0;
    while sampled < 10_000 {
        let r = 10f64.powf(rng.gen_range(-3.0..3.0));
        let th = rng.gen_range(-0.75 * PI..0.75 * PI);
        let z = Complex64::from_polar(r, th);
        let pole_dist = (z - z.re.round().min(0.0)).norm();
        if z.re < 0.0 && pole_dist < 0.1 {
            continue;
        }
        sampled += 1;
        let a = digamma(z)?;
        let b = digamma_direct_series(z, EULER_GAMMA);
        worst_psi = worst_psi.max((a - b).norm() / b.norm());
    }

    let cfg = QuadConfig::with_rel_tol(1e-13);
    let mut worst_laplace: f64 = 0.0;
    let real_points: [f64; 5] = [0.1, 1.0, 2.0, 10.0, 100.0];
    for a in real_points {
        let closed = a.sin() * ci(a)? - a.cos() * si_lower(a)?;
        let fast = aux_laplace(Complex64::new(a, 0.0), 1e-13)?.re;
        let brk = breakpoints(&[1.0 / a, 10.0 / a, 1.0], 40.0 / a + 2.0);
        let quad = integrate_half_line(|y: f64| (-a * y).exp() / (1.0 + y * y), &brk, &cfg)?.value;
        worst_laplace = worst_laplace.max(rel(closed, quad)).max(rel(fast, quad));
    }
    for a in [
        Complex64::new(0.3, 2.0),
        Complex64::new(5.0, -4.0),
        Complex64::new(40.0, 25.0),
    ] {
        let v = aux_laplace(a, 1e-13)?;
        let brk = breakpoints(&[1.0 / a.re, 1.0 / a.norm(), 1.0, 10.0 / a.re], 40.0 / a.re + 2.0);
        let quad = integrate_half_line(
            |y: f64| (-a * y).exp() / (1.0 + y * y),
            &brk,
            &QuadConfig {
                max_intervals: 20_000,
                ..cfg
            },
        )?
        .value;
        worst_laplace = worst_laplace.max((v - quad).norm() / quad.norm());
    }

    let mut worst_sum: f64 = 0.0;
    let mut sets = 0;
    while sets < 10_000 {
        let w0 = 10f64.powf(rng.gen_range(-1.0..1.0));
        let om = 10f64.powf(rng.gen_range(-1.0..1.0));
        let g = 10f64.powf(rng.gen_range(-1.0..1.0));
        let p = DrudeParams::new(w0, om, g)?;
        let poles = drude_poles(&p);
        if min_relative_separation(&poles) < 1e-4 {
            continue;
        }
        sets += 1;
        let pf = partial_fractions(&poles, p.omega_d())?;
        let mut s = [Complex64::new(0.0, 0.0); 4];
        let mut scale = [0.0; 4];
        for (l, a) in pf.lambda.iter().zip(&pf.rates) {
            let terms = [*l, l * a, l * a * a, l / a];
            for k in 0..4 {
                s[k] += terms[k];
                scale[k] += terms[k].norm();
            }
        }
        let expect = [0.0, 1.0, 0.0, -1.0 / p.omega_0_sq()];
        for k in 0..4 {
            worst_sum = worst_sum.max((s[k] - expect[k]).norm() / scale[k]);
        }
    }

    let measured = euler_err.max(worst_psi).max(worst_sum);
    let passed = euler_err < 1e-12 && worst_psi < 1e-12 && worst_laplace < 1e-10 && worst_sum < 1e-10;
    Ok(Outcome {
        passed,
        measured,
        tolerance: 1e-12,
        detail: format!(
            "psi(1) + c_e {euler_err:.2e}; digamma vs direct series {worst_psi:.2e} (1e-12, 1e4 points); \
             aux_laplace vs quadrature {worst_laplace:.2e} (1e-10); sum rules {worst_sum:.2e} (1e-10, 1e4 sets)"
        ),
    })
}

fn thermodynamic_identity(refs: &References) -> Result<Outcome> {
    let c = unit();
    let mut worst_identity: f64 = 0.0;
    let mut max_low_s: f64 = 0.0;
    for p in refs.fig1()? {
        for t in [1e-3, 0.05, 0.2, 1.0, 5.0] {
            let e = drude_energy(&p, t, &c)?;
            let f = system_free_energy(&p, t, &c, 1e-12)?.free_energy;
            let s = system_entropy_spectral(&p, t, &c, 1e-12)?;
            worst_identity = worst_identity.max((e - f - t * s).abs());
            if t == 1e-3 {
                max_low_s = max_low_s.max(s);
            }
        }
    }
    let passed = worst_identity < 1e-8 && max_low_s < 1e-4;
    Ok(Outcome {
        passed,
        measured: worst_identity.max(max_low_s),
        tolerance: 1e-4,
        detail: format!(
            "max |E_s - F_s - T S_s| {worst_identity:.2e} (1e-8); max S_s(T = 1e-3) {max_low_s:.3e} (1e-4)"
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_series_oracle_is_sound() {
        for z in [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.5, 3.2),
            Complex64::new(-2.5, 0.7),
        ] {
            let a = digamma_direct_series(z, EULER_GAMMA);
            let b = digamma(z).unwrap();
            assert!((a - b).norm() < 1e-12 * b.norm().max(1.0), "{z}: {a} vs {b}");
        }
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(0.01, 50.0, 200);
        assert_eq!(g.len(), 200);
        assert!((g[0] - 0.01).abs() < 1e-18 && (g[199] - 50.0).abs() < 1e-12);
    }

    #[test]
    fn corrupted_reference_fails() {
        let mut r = References::default();
        r.set("euler_gamma", 0.5772).unwrap();
        let res = run(Level::Quick, &r);
        assert!(res.iter().any(|c| !c.passed));
        assert!(r.clone().set("nope", 1.0).is_err());
    }
}
