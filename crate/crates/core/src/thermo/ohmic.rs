//! Ohmic model: convergent position variance, regularized velocity
//! variance and energy, and the finite thermal part of the coupling free
//! energy.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::drude::{CONFLUENT_WINDOW, LAPLACE_QUAD_TOL};
use super::{digamma_bracket, ensure_real, real_sum, richardson, RegularizedValue};
use crate::damping::PhysicalConstants;
use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::specfun::{digamma_real, matsubara_laplace_sum, SeriesControl, EULER_GAMMA};

const GAMMA_DELTA: f64 = 1e-4;
const EXPLICIT_HARMONIC_LIMIT: u64 = 10_000_000;

/// ω₁ = γ_o/2 − 𝐰̄, ω₂ = γ_o/2 + 𝐰̄ with 𝐰̄ = √((γ_o/2)² − ω₀²) on the
/// principal branch; a conjugate pair when underdamped.
pub fn ohmic_roots(omega_0: f64, gamma_o: f64) -> Result<(Complex64, Complex64)> {
    ensure_positive("omega_0", omega_0)?;
    ensure_positive("gamma_o", gamma_o)?;
    let h = 0.5 * gamma_o;
    let wb = Complex64::new((h - omega_0) * (h + omega_0), 0.0).sqrt();
    Ok((h - wb, h + wb))
}

/// H_N = Σ_{n≤N} 1/n.
pub(crate) fn harmonic(n: u64) -> f64 {
    if n > EXPLICIT_HARMONIC_LIMIT {
        return digamma_real(n as f64 + 1.0).unwrap_or(f64::NAN) + EULER_GAMMA;
    }
    let mut sum = 0.0;
    let mut carry = 0.0;
    for k in (1..=n).rev() {
        let y = 1.0 / k as f64 - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Runs `f(γ_o, [ω₁, ω₂], [λ₁, λ₂])` with λ = (−1, +1)/(2𝐰̄), or its
/// Richardson limit in γ_o near critical damping.
fn with_roots<F>(omega_0: f64, gamma_o: f64, f: F) -> Result<f64>
where
    F: Fn(f64, [Complex64; 2], [Complex64; 2]) -> Result<f64>,
{
    let eval = |g: f64| -> Result<f64> {
        let (w1, w2) = ohmic_roots(omega_0, g)?;
        let wb = 0.5 * (w2 - w1);
        let lam = [-0.5 / wb, 0.5 / wb];
        f(g, [w1, w2], lam)
    };
    let (w1, w2) = ohmic_roots(omega_0, gamma_o)?;
    if (w2 - w1).norm() / w1.norm().max(w2.norm()) >= CONFLUENT_WINDOW {
        eval(gamma_o)
    } else {
        richardson(GAMMA_DELTA, |s| eval(gamma_o * s))
    }
}

fn check_cutoff(cutoff_terms: u64) -> Result<()> {
    if cutoff_terms < 10 {
        return Err(Error::Domain(format!(
            "cutoff_terms must be at least 10, got {cutoff_terms}"
        )));
    }
    Ok(())
}

/// ⟨q̂²⟩ = (1/2𝐰̄M) Σ_j λ_o^(j){1/(βω_j) + (ℏ/π)ψ(βℏω_j/2π)}.
pub fn ohmic_position_variance(
    omega_0: f64,
    gamma_o: f64,
    temperature: f64,
    consts: &PhysicalConstants,
) -> Result<f64> {
    ensure_non_negative("T", temperature)?;
    let bh = if temperature == 0.0 {
        None
    } else {
        Some(consts.beta_hbar(temperature)?)
    };
    with_roots(omega_0, gamma_o, |_, w, lam| {
        let mut terms = Vec::with_capacity(2);
        for j in 0..2 {
            let b = match bh {
                Some(bh) => digamma_bracket(w[j], bh, consts.hbar)?,
                None => w[j].ln() * (consts.hbar / PI),
            };
            terms.push(lam[j] * b / consts.mass);
        }
        real_sum(terms)
    })
}

/// Partial sum of ⟨q̇̂²⟩ with the Matsubara series cut at N terms; grows as
/// (ℏγ_o/πM) ln N.
pub fn ohmic_velocity_variance(
    omega_0: f64,
    gamma_o: f64,
    temperature: f64,
    consts: &PhysicalConstants,
    cutoff_terms: u64,
) -> Result<RegularizedValue> {
    check_cutoff(cutoff_terms)?;
    let bh = consts.beta_hbar(temperature)?;
    let reg = consts.hbar / PI * (EULER_GAMMA - harmonic(cutoff_terms));
    let value = with_roots(omega_0, gamma_o, |_, w, lam| {
        let mut terms = Vec::with_capacity(2);
        for j in 0..2 {
            let b = digamma_bracket(w[j], bh, consts.hbar)? + reg;
            terms.push(-lam[j] * w[j] * w[j] * b / consts.mass);
        }
        real_sum(terms)
    })?;
    Ok(RegularizedValue {
        value,
        divergent: true,
        cutoff_terms,
        log_slope: Some(consts.hbar * gamma_o / (PI * consts.mass)),
    })
}

/// Partial sum of E_s^(o)(T) = M⟨q̇̂²⟩/2 + Mω₀²⟨q̂²⟩/2 at N Matsubara terms;
/// grows as (ℏγ_o/2π) ln N.
pub fn ohmic_energy(
    omega_0: f64,
    gamma_o: f64,
    temperature: f64,
    consts: &PhysicalConstants,
    cutoff_terms: u64,
) -> Result<RegularizedValue> {
    check_cutoff(cutoff_terms)?;
    let bh = consts.beta_hbar(temperature)?;
    let reg = consts.hbar / PI * (EULER_GAMMA - harmonic(cutoff_terms));
    let w2 = omega_0 * omega_0;
    let value = with_roots(omega_0, gamma_o, |_, w, lam| {
        let mut terms = Vec::with_capacity(2);
        for j in 0..2 {
            let a2 = w[j] * w[j];
            let b = digamma_bracket(w[j], bh, consts.hbar)?;
            terms.push(lam[j] * ((w2 - a2) * b - a2 * reg) * 0.5);
        }
        real_sum(terms)
    })?;
    Ok(RegularizedValue {
        value,
        divergent: true,
        cutoff_terms,
        log_slope: Some(consts.hbar * gamma_o / (2.0 * PI)),
    })
}

/// Δ𝓕_s^(o)(T) = −(1/πβ) Σ_n (1/n) Σ_j L(nβℏω_j).
pub fn ohmic_coupling_free_energy_delta(
    omega_0: f64,
    gamma_o: f64,
    temperature: f64,
    consts: &PhysicalConstants,
    ctrl: &SeriesControl,
) -> Result<f64> {
    ensure_non_negative("T", temperature)?;
    let (w1, w2) = ohmic_roots(omega_0, gamma_o)?;
    if temperature == 0.0 {
        return Ok(0.0);
    }
    let beta = consts.beta(temperature)?;
    let bh = consts.beta_hbar(temperature)?;
    let minus = Complex64::new(-1.0, 0.0);
    let s = matsubara_laplace_sum(&[w1, w2], &[minus, minus], bh, ctrl, LAPLACE_QUAD_TOL)?;
    Ok(ensure_real(s.value, s.value.norm())? / (PI * beta))
}

/// 𝓕_s^(o)(T) with the zero-temperature part cut off at Λ = N·ω₀:
/// (ℏ/2π) Σ_j ω_j ½ ln(1 + Λ²/ω_j²) + Δ𝓕_s^(o)(T). Grows as (ℏγ_o/2π) ln N.
pub fn ohmic_coupling_free_energy(
    omega_0: f64,
    gamma_o: f64,
    temperature: f64,
    consts: &PhysicalConstants,
    ctrl: &SeriesControl,
    cutoff_terms: u64,
) -> Result<RegularizedValue> {
    check_cutoff(cutoff_terms)?;
    let (w1, w2) = ohmic_roots(omega_0, gamma_o)?;
    let lambda = cutoff_terms as f64 * omega_0;
    let terms = [w1, w2].map(|w| w * (1.0 + lambda * lambda / (w * w)).ln() * 0.5);
    let zero = consts.hbar / (2.0 * PI) * real_sum(terms)?;
    let delta = ohmic_coupling_free_energy_delta(omega_0, gamma_o, temperature, consts, ctrl)?;
    Ok(RegularizedValue {
        value: zero + delta,
        divergent: true,
        cutoff_terms,
        log_slope: Some(consts.hbar * gamma_o / (2.0 * PI)),
    })
}
