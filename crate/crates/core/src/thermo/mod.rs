//! Continuum-model thermodynamics of the damped oscillator.

use num_complex::Complex64;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::damping::PhysicalConstants;
use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::quad::QuadValue;
use crate::specfun::digamma;

pub mod drude;
pub mod ohmic;
pub mod point;
pub mod system;

pub use drude::{
    drude_coupling_energy, drude_coupling_free_energy, drude_coupling_free_energy_delta,
    drude_coupling_free_energy_zero_t, drude_energy, drude_energy_zero_t, drude_position_correlation, drude_variances,
    second_law_gap_drude,
};
pub use ohmic::{
    ohmic_coupling_free_energy, ohmic_coupling_free_energy_delta, ohmic_energy, ohmic_position_variance, ohmic_roots,
    ohmic_velocity_variance,
};
pub use point::{evaluate_point, evaluate_quantity, FieldValue, PointOptions, Quantity, ThermoPoint};
pub use system::{system_entropy_spectral, system_free_energy, system_free_energy_series, SystemFreeEnergy};

/// Relative imaginary residue tolerated after summing conjugate pairs.
pub const REALITY_TOL: f64 = 1e-10;

/// A partial sum of a divergent quantity together with its regulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizedValue {
    pub value: f64,
    pub divergent: bool,
    pub cutoff_terms: u64,
    /// Coefficient of ln N in the growth of `value`.
    pub log_slope: Option<f64>,
}

impl RegularizedValue {
    pub fn finite(value: f64) -> Self {
        Self {
            value,
            divergent: false,
            cutoff_terms: 0,
            log_slope: None,
        }
    }
}

impl Serialize for RegularizedValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.divergent {
            return s.serialize_f64(self.value);
        }
        let mut m = s.serialize_map(Some(3))?;
        m.serialize_entry("divergent", &true)?;
        m.serialize_entry("cutoff_terms", &self.cutoff_terms)?;
        m.serialize_entry("value_at_cutoff", &self.value)?;
        m.end()
    }
}

/// e(ω, T) = (ℏω/2) coth(βℏω/2).
pub fn free_osc_energy(omega: f64, temperature: f64, consts: &PhysicalConstants) -> Result<f64> {
    ensure_positive("omega", omega)?;
    ensure_non_negative("T", temperature)?;
    let hw = consts.hbar * omega;
    if temperature == 0.0 {
        return Ok(0.5 * hw);
    }
    let x = consts.beta_hbar(temperature)? * omega;
    Ok(hw * (0.5 + 1.0 / x.exp_m1()))
}

/// f(ω, T) = ℏω/2 + (1/β) ln(1 − e^{−βℏω}).
pub fn free_osc_free_energy(omega: f64, temperature: f64, consts: &PhysicalConstants) -> Result<f64> {
    ensure_positive("omega", omega)?;
    ensure_non_negative("T", temperature)?;
    let hw = consts.hbar * omega;
    if temperature == 0.0 {
        return Ok(0.5 * hw);
    }
    let beta = consts.beta(temperature)?;
    let x = beta * hw;
    Ok(0.5 * hw + ln_one_minus_exp(x) / beta)
}

/// s(ω, T) = (e − f)/T.
pub fn free_osc_entropy(omega: f64, temperature: f64, consts: &PhysicalConstants) -> Result<f64> {
    ensure_positive("omega", omega)?;
    ensure_non_negative("T", temperature)?;
    if temperature == 0.0 {
        return Ok(0.0);
    }
    let x = consts.beta_hbar(temperature)? * omega;
    // x/(e^x − 1) − ln(1 − e^{−x})
    Ok(consts.k_b * (x / x.exp_m1() - ln_one_minus_exp(x)))
}

/// e_cl = k_B T.
pub fn classical_free_osc_energy(temperature: f64, consts: &PhysicalConstants) -> Result<f64> {
    ensure_positive("T", temperature)?;
    Ok(consts.k_b * temperature)
}

/// f_cl = ln(βℏω)/β.
pub fn classical_free_osc_free_energy(omega: f64, temperature: f64, consts: &PhysicalConstants) -> Result<f64> {
    ensure_positive("omega", omega)?;
    let beta = consts.beta(temperature)?;
    Ok((beta * consts.hbar * omega).ln() / beta)
}

/// ln(1 − e^{−x}) for x > 0.
pub(crate) fn ln_one_minus_exp(x: f64) -> f64 {
    if x > std::f64::consts::LN_2 {
        (-(-x).exp()).ln_1p()
    } else {
        (-(-x).exp_m1()).ln()
    }
}

/// 1/(βa) + (ℏ/π)ψ(βℏa/2π), written as (ℏ/π)[ψ(y) + 1/(2y)].
pub(crate) fn digamma_bracket(a: Complex64, beta_hbar: f64, hbar: f64) -> Result<Complex64> {
    let y = a * beta_hbar / (2.0 * std::f64::consts::PI);
    Ok((digamma(y)? + 0.5 / y) * (hbar / std::f64::consts::PI))
}

/// Real part of Σ terms, rejecting an imaginary residue above
/// [`REALITY_TOL`] relative to Σ|term|.
pub(crate) fn real_sum<I: IntoIterator<Item = Complex64>>(terms: I) -> Result<f64> {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut mag = 0.0;
    for t in terms {
        sum += t;
        mag += t.norm();
    }
    ensure_real(sum, mag)
}

pub(crate) fn ensure_real(z: Complex64, scale: f64) -> Result<f64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("non-finite result {z}")));
    }
    if z.im.abs() > REALITY_TOL * scale.max(z.re.abs()).max(f64::MIN_POSITIVE) {
        return Err(Error::ImaginaryResidue { re: z.re, im: z.im });
    }
    Ok(z.re)
}

/// Symmetric-perturbation Richardson limit: with g(δ) the mean of `f` at
/// x(1 ± δ), returns (4g(δ) − g(2δ))/3, exact to O(δ⁴).
pub(crate) fn richardson<V, F>(delta: f64, f: F) -> Result<V>
where
    V: QuadValue,
    F: Fn(f64) -> Result<V>,
{
    let g = |d: f64| -> Result<V> { Ok((f(1.0 + d)? + f(1.0 - d)?) * 0.5) };
    Ok((g(delta)? * 4.0 - g(2.0 * delta)?) * (1.0 / 3.0))
}
