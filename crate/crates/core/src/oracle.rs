//! Direct quadrature of the frequency-domain formulas; used as independent
//! oracles and for quantities without a closed form.

use std::f64::consts::PI;

use crate::damping::{DampingModel, PhysicalConstants};
use crate::error::{ensure_non_negative, ensure_positive, Result};
use crate::quad::{breakpoints, integrate_half_line, QuadConfig};
use crate::response::{im_chi, im_log_derivative};
use crate::thermo::{free_osc_energy, free_osc_entropy, free_osc_free_energy};

/// Breakpoints on [0, ω_max] with ω_max = max(50ω_d, 50/βℏ, 50ω₀, 50γ_o).
fn spectral_breaks(model: &DampingModel, omega_0: f64, temperature: f64, consts: &PhysicalConstants) -> Vec<f64> {
    let g = model.gamma_o();
    let mut scales = vec![omega_0, g, 0.1 * omega_0, 0.5 * omega_0, 2.0 * omega_0, 10.0 * omega_0];
    if omega_0 > 0.5 * g {
        scales.push(omega_0 - 0.5 * g);
        scales.push(omega_0 + 0.5 * g);
    }
    let mut max = 50.0 * omega_0.max(g);
    if let DampingModel::Drude { omega_d, .. } = model {
        scales.push(*omega_d);
        max = max.max(50.0 * omega_d);
    }
    if temperature > 0.0 {
        let thermal = consts.k_b * temperature / consts.hbar;
        scales.push(thermal);
        scales.push(2.0 * PI * thermal);
        max = max.max(50.0 * thermal);
    }
    breakpoints(&scales, max)
}

fn coth_half(omega: f64, temperature: f64, consts: &PhysicalConstants) -> Result<f64> {
    Ok(2.0 * free_osc_energy(omega, temperature, consts)? / (consts.hbar * omega))
}

/// Spectral weight ρ(ω) = (M/πω)(ω₀² + ω²) Im χ̃(ω), normalized to 1.
pub fn spectral_weight(model: &DampingModel, omega_0: f64, omega: f64, consts: &PhysicalConstants) -> Result<f64> {
    Ok(consts.mass / (PI * omega) * (omega_0 * omega_0 + omega * omega) * im_chi(model, omega_0, omega, consts)?)
}

pub(crate) fn integrate_spectrum<F>(
    model: &DampingModel,
    omega_0: f64,
    temperature: f64,
    consts: &PhysicalConstants,
    cfg: &QuadConfig,
    f: F,
) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    ensure_positive("omega_0", omega_0)?;
    ensure_non_negative("T", temperature)?;
    let breaks = spectral_breaks(model, omega_0, temperature, consts);
    // errors inside the integrand surface as NaN and then as QuadratureFailure
    let r = integrate_half_line(|w: f64| f(w).unwrap_or(f64::NAN), &breaks, cfg)?;
    Ok(r.value)
}

/// E_s = ∫ ρ(ω) e(ω,T) dω, the fluctuation-dissipation form of
/// M⟨q̇̂²⟩/2 + Mω₀²⟨q̂²⟩/2.
pub fn energy(
    model: &DampingModel,
    omega_0: f64,
    temperature: f64,
    consts: &PhysicalConstants,
    cfg: &QuadConfig,
) -> Result<f64> {
    integrate_spectrum(model, omega_0, temperature, consts, cfg, |w| {
        Ok(spectral_weight(model, omega_0, w, consts)? * free_osc_energy(w, temperature, consts)?)
    })
}

/// ⟨q̂²⟩ = (ℏ/π)∫ Im χ̃(ω) coth(βℏω/2) dω.
pub fn position_variance(
    model: &DampingModel,
    omega_0: f64,
    temperature: f64,
    consts: &PhysicalConstants,
    cfg: &QuadConfig,
) -> Result<f64> {
    position_correlation(model, omega_0, 0.0, temperature, consts, cfg)
}

/// ⟨q̇̂²⟩ = (ℏ/π)∫ ω² Im χ̃(ω) coth(βℏω/2) dω (finite for Drude only).
pub fn velocity_variance(
    model: &DampingModel,
    omega_0: f64,
    temperature: f64,
    consts: &PhysicalConstants,
    cfg: &QuadConfig,
) -> Result<f64> {
    integrate_spectrum(model, omega_0, temperature, consts, cfg, |w| {
        Ok(consts.hbar / PI * w * w * im_chi(model, omega_0, w, consts)? * coth_half(w, temperature, consts)?)
    })
}

/// Symmetrized correlation (ℏ/π)∫ Im χ̃(ω) coth(βℏω/2) cos(ωt) dω.
pub fn position_correlation(
    model: &DampingModel,
    omega_0: f64,
    t: f64,
    temperature: f64,
    consts: &PhysicalConstants,
    cfg: &QuadConfig,
) -> Result<f64> {
    integrate_spectrum(model, omega_0, temperature, consts, cfg, |w| {
        Ok(consts.hbar / PI * im_chi(model, omega_0, w, consts)? * coth_half(w, temperature, consts)? * (w * t).cos())
    })
}

/// 𝓕_s = (1/π)∫ f(ω,T) Im d ln χ̃(ω)/dω dω.
pub fn coupling_free_energy(
    model: &DampingModel,
    omega_0: f64,
    temperature: f64,
    consts: &PhysicalConstants,
    cfg: &QuadConfig,
) -> Result<f64> {
    integrate_spectrum(model, omega_0, temperature, consts, cfg, |w| {
        Ok(free_osc_free_energy(w, temperature, consts)? * im_log_derivative(model, omega_0, w)? / PI)
    })
}

/// ℰ_s = (1/π)∫ e(ω,T) Im d ln χ̃(ω)/dω dω.
pub fn coupling_energy(
    model: &DampingModel,
    omega_0: f64,
    temperature: f64,
    consts: &PhysicalConstants,
    cfg: &QuadConfig,
) -> Result<f64> {
    integrate_spectrum(model, omega_0, temperature, consts, cfg, |w| {
        Ok(free_osc_energy(w, temperature, consts)? * im_log_derivative(model, omega_0, w)? / PI)
    })
}

/// F_s = ∫ ρ(ω) f(ω,T) dω.
pub fn system_free_energy(
    model: &DampingModel,
    omega_0: f64,
    temperature: f64,
    consts: &PhysicalConstants,
    cfg: &QuadConfig,
) -> Result<f64> {
    integrate_spectrum(model, omega_0, temperature, consts, cfg, |w| {
        Ok(spectral_weight(model, omega_0, w, consts)? * free_osc_free_energy(w, temperature, consts)?)
    })
}

/// S_s = ∫ ρ(ω) s(ω,T) dω.
pub fn system_entropy(
    model: &DampingModel,
    omega_0: f64,
    temperature: f64,
    consts: &PhysicalConstants,
    cfg: &QuadConfig,
) -> Result<f64> {
    integrate_spectrum(model, omega_0, temperature, consts, cfg, |w| {
        Ok(spectral_weight(model, omega_0, w, consts)? * free_osc_entropy(w, temperature, consts)?)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_weight_is_normalized() {
        let c = PhysicalConstants::default();
        let cfg = QuadConfig::with_rel_tol(1e-11);
        for model in [
            DampingModel::drude(1.5, 3.0).unwrap(),
            DampingModel::ohmic(0.7).unwrap(),
        ] {
            let breaks = spectral_breaks(&model, 1.2, 0.0, &c);
            let r = integrate_half_line(|w: f64| spectral_weight(&model, 1.2, w, &c).unwrap(), &breaks, &cfg).unwrap();
            assert!((r.value - 1.0).abs() < 1e-9, "{}", r.value);
        }
    }

    #[test]
    fn log_derivative_counts_one_mode() {
        // (1/π)∫ Im d ln χ̃/dω dω = 1
        let c = PhysicalConstants::default();
        let model = DampingModel::drude(0.8, 4.0).unwrap();
        let cfg = QuadConfig::with_rel_tol(1e-11);
        let breaks = spectral_breaks(&model, 1.0, 0.0, &c);
        let r = integrate_half_line(|w: f64| im_log_derivative(&model, 1.0, w).unwrap() / PI, &breaks, &cfg).unwrap();
        assert!((r.value - 1.0).abs() < 1e-8, "{}", r.value);
    }
}
