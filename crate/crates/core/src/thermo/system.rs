//! Free energy and entropy of the coupled oscillator itself.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::drude::{confluent, drude_energy, drude_energy_zero_t, LAPLACE_QUAD_TOL};
use super::{ensure_real, ln_one_minus_exp};
use crate::damping::{DrudeParams, PhysicalConstants};
use crate::error::{ensure_positive, Result};
use crate::oracle::{integrate_spectrum, spectral_weight, system_entropy};
use crate::quad::{integrate_breaks, QuadConfig};
use crate::specfun::{matsubara_laplace_sum, SeriesControl};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemFreeEnergy {
    pub free_energy: f64,
    pub entropy: f64,
}

/// F_s(T) from β F_s(β) = β₀F_s(β₀) + ∫_{β₀}^{β} E_s dβ′, with the
/// reference temperature T₀ = ℏω₀/k_B; S_s = k_Bβ(E_s − F_s).
pub fn system_free_energy(
    p: &DrudeParams,
    temperature: f64,
    consts: &PhysicalConstants,
    quad_tol: f64,
) -> Result<SystemFreeEnergy> {
    let t_ref = consts.hbar * p.omega_0() / consts.k_b;
    system_free_energy_with_reference(p, temperature, t_ref, consts, quad_tol)
}

/// As [`system_free_energy`] with an explicit reference temperature.
pub fn system_free_energy_with_reference(
    p: &DrudeParams,
    temperature: f64,
    t_ref: f64,
    consts: &PhysicalConstants,
    quad_tol: f64,
) -> Result<SystemFreeEnergy> {
    ensure_positive("T", temperature)?;
    ensure_positive("T_ref", t_ref)?;
    let cfg = QuadConfig::with_rel_tol(quad_tol);
    let beta = consts.beta(temperature)?;
    let beta0 = consts.beta(t_ref)?;
    let b0h = beta0 * consts.hbar;

    // β₀F(β₀) = ∫ρ(ω) ln(2 sinh(β₀ℏω/2)) dω
    let model = p.model();
    let w0 = p.omega_0();
    let reference = integrate_spectrum(&model, w0, t_ref, consts, &cfg, |w| {
        let x = b0h * w;
        Ok(spectral_weight(&model, w0, w, consts)? * (0.5 * x + ln_one_minus_exp(x)))
    })?;

    // ∫ E dβ′ over s = ln β′
    let (s0, s1) = (beta0.ln(), beta.ln());
    let (lo, hi, sign) = if s1 >= s0 { (s0, s1, 1.0) } else { (s1, s0, -1.0) };
    let pieces = ((hi - lo).ceil() as usize).max(1);
    let breaks: Vec<f64> = (0..=pieces)
        .map(|k| lo + (hi - lo) * k as f64 / pieces as f64)
        .collect();
    let integral = if hi > lo {
        integrate_breaks(
            |s: f64| {
                let b = s.exp();
                drude_energy(p, 1.0 / (consts.k_b * b), consts)
                    .map(|e| e * b)
                    .unwrap_or(f64::NAN)
            },
            &breaks,
            &cfg,
        )?
        .value
    } else {
        0.0
    };

    let free_energy = (reference + sign * integral) / beta;
    let e = drude_energy(p, temperature, consts)?;
    Ok(SystemFreeEnergy {
        free_energy,
        entropy: consts.k_b * beta * (e - free_energy),
    })
}

/// F_s(T) = E_s(0) + (1/πβ) Σ_n (1/n) Σ_l λ_l (ω₀² − ω̲_l²)/ω̲_l L(nβℏω̲_l).
pub fn system_free_energy_series(
    p: &DrudeParams,
    temperature: f64,
    consts: &PhysicalConstants,
    ctrl: &SeriesControl,
) -> Result<f64> {
    let beta = consts.beta(temperature)?;
    let bh = consts.beta_hbar(temperature)?;
    let thermal = confluent(p, |q, pf| {
        let w2 = q.omega_0_sq();
        let weights: Vec<Complex64> = pf
            .lambda
            .iter()
            .zip(&pf.rates)
            .map(|(l, a)| l * (w2 - a * a) / a)
            .collect();
        let s = matsubara_laplace_sum(&pf.rates, &weights, bh, ctrl, LAPLACE_QUAD_TOL)?;
        let scale: f64 = weights.iter().map(|w| w.norm()).sum();
        ensure_real(s.value, scale)
    })?;
    Ok(drude_energy_zero_t(p, consts)? + thermal / (PI * beta))
}

/// S_s = ∫ ρ(ω) s(ω,T) dω, independent of the temperature integral.
pub fn system_entropy_spectral(
    p: &DrudeParams,
    temperature: f64,
    consts: &PhysicalConstants,
    quad_tol: f64,
) -> Result<f64> {
    system_entropy(
        &p.model(),
        p.omega_0(),
        temperature,
        consts,
        &QuadConfig::with_rel_tol(quad_tol),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::{free_osc_entropy, free_osc_free_energy};

    fn unit() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    #[test]
    fn reference_independence() {
        let p = DrudeParams::new(1.0, 5.0, 1.5).unwrap();
        let c = unit();
        let a = system_free_energy_with_reference(&p, 0.3, 1.0, &c, 1e-12).unwrap();
        let b = system_free_energy_with_reference(&p, 0.3, 4.0, &c, 1e-12).unwrap();
        assert!((a.free_energy - b.free_energy).abs() < 1e-8);
    }

    #[test]
    fn series_agrees_with_temperature_integral() {
        let c = unit();
        for p in [
            DrudeParams::new(1.0, 1.0, 1.5).unwrap(),
            DrudeParams::new(1.0, 5.0, 4.0).unwrap(),
        ] {
            for t in [0.05, 0.7, 6.0] {
                let a = system_free_energy(&p, t, &c, 1e-12).unwrap().free_energy;
                let b = system_free_energy_series(&p, t, &c, &SeriesControl::default()).unwrap();
                assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()), "T={t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn identity_with_spectral_entropy() {
        let c = unit();
        let p = DrudeParams::new(1.0, 1.0, 4.0).unwrap();
        for t in [0.01, 0.5, 3.0] {
            let r = system_free_energy(&p, t, &c, 1e-12).unwrap();
            let s = system_entropy_spectral(&p, t, &c, 1e-12).unwrap();
            assert!((r.entropy - s).abs() < 1e-8, "T={t}: {} vs {s}", r.entropy);
            assert!(s > 0.0);
        }
    }

    #[test]
    fn weak_coupling_limit() {
        let c = unit();
        let p = DrudeParams::new(1.0, 3.0, 1e-5).unwrap();
        let t = 0.8;
        let r = system_free_energy(&p, t, &c, 1e-12).unwrap();
        let w = p.omega_0();
        assert!((r.free_energy - free_osc_free_energy(w, t, &c).unwrap()).abs() < 1e-4);
        assert!((r.entropy - free_osc_entropy(w, t, &c).unwrap()).abs() < 1e-4);
    }
}
