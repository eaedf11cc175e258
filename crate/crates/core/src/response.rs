//! Dynamic susceptibility χ̃(ω) = (1/M)/(ω₀² − ω² − iωγ̃(ω)), the Drude
//! pole factorization and its partial-fraction coefficients.

use num_complex::Complex64;
use serde::Serialize;

use crate::damping::{gamma_tilde, gamma_tilde_derivative, DampingModel, DrudeParams, PhysicalConstants};
use crate::error::{ensure_positive, Error, Result};

/// Minimum relative separation of two pole rates for the partial-fraction
/// decomposition.
pub const POLE_SEPARATION_TOL: f64 = 1e-10;

/// Decay rates of the three Drude susceptibility poles ω = −iΩ, −iz₁, −iz₂.
/// Overdamped: z₁ = γ/2 + 𝐰̄₁, z₂ = γ/2 − 𝐰̄₁ (both real);
/// underdamped: z₁ = γ/2 + i𝐰₁, z₂ = z̄₁.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DrudePoles {
    pub big_omega: f64,
    pub z1: Complex64,
    pub z2: Complex64,
}

impl DrudePoles {
    /// (Ω, z₁, z₂) in the fixed order used by the coefficients.
    pub fn rates(&self) -> [Complex64; 3] {
        [Complex64::new(self.big_omega, 0.0), self.z1, self.z2]
    }

    /// −(1/M)(ω + iω_d)/((ω + iΩ)(ω + iz₁)(ω + iz₂)).
    pub fn chi_rational(&self, omega: Complex64, omega_d: f64, mass: f64) -> Complex64 {
        let i = Complex64::i();
        let num = omega + i * omega_d;
        let den = (omega + i * self.big_omega) * (omega + i * self.z1) * (omega + i * self.z2);
        -num / (den * mass)
    }
}

pub fn drude_poles(p: &DrudeParams) -> DrudePoles {
    let half = Complex64::new(0.5 * p.gamma(), 0.0);
    let w = p.w1_bar_complex();
    DrudePoles {
        big_omega: p.big_omega(),
        z1: half + w,
        z2: half - w,
    }
}

/// χ̃_d(ω) = −(1/M) Σ_l iλ_l/(ω + iω̲_l) with ω̲ = (Ω, z₁, z₂).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartialFractionCoeffs {
    pub lambda: [Complex64; 3],
    pub rates: [Complex64; 3],
    pub omega_d: f64,
}

/// Signs τ for the rates (ω_d, Ω, z₁, z₂) in the coupling free energy.
pub const TAU: [f64; 4] = [1.0, -1.0, -1.0, -1.0];

impl PartialFractionCoeffs {
    /// Σ_l λ_l and Σ_l λ_l ω̲_l², both zero.
    pub fn sum_rules(&self) -> (Complex64, Complex64) {
        let s0 = self.lambda.iter().sum();
        let s2 = self.lambda.iter().zip(&self.rates).map(|(l, a)| l * a * a).sum();
        (s0, s2)
    }

    /// Im χ̃(ω + i0⁺) = −(1/M) Σ_l λ_l ω/(ω² + ω̲_l²).
    pub fn im_chi(&self, omega: f64, mass: f64) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (l, a) in self.lambda.iter().zip(&self.rates) {
            acc += l * omega / (omega * omega + a * a);
        }
        -acc.re / mass
    }

    /// (ω_d, Ω, z₁, z₂), matching [`TAU`].
    pub fn signed_rates(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.omega_d, 0.0),
            self.rates[0],
            self.rates[1],
            self.rates[2],
        ]
    }
}

/// Smallest pairwise relative separation among the three rates.
pub fn min_relative_separation(poles: &DrudePoles) -> f64 {
    let r = poles.rates();
    let mut min = f64::INFINITY;
    for i in 0..3 {
        for j in i + 1..3 {
            let scale = r[i].norm().max(r[j].norm());
            min = min.min((r[i] - r[j]).norm() / scale);
        }
    }
    min
}

pub fn partial_fractions(poles: &DrudePoles, omega_d: f64) -> Result<PartialFractionCoeffs> {
    let sep = min_relative_separation(poles);
    if sep < POLE_SEPARATION_TOL {
        return Err(Error::DegeneratePoles(format!(
            "rates {:?} have relative separation {sep:e}",
            poles.rates()
        )));
    }
    let rates = poles.rates();
    let mut lambda = [Complex64::new(0.0, 0.0); 3];
    for l in 0..3 {
        let mut den = Complex64::new(1.0, 0.0);
        for m in 0..3 {
            if m != l {
                den *= rates[l] - rates[m];
            }
        }
        lambda[l] = -(omega_d - rates[l]) / den;
    }
    Ok(PartialFractionCoeffs { lambda, rates, omega_d })
}

fn denominator(model: &DampingModel, omega_0: f64, omega: Complex64) -> Result<Complex64> {
    let g = gamma_tilde(model, omega)?;
    Ok(omega_0 * omega_0 - omega * omega - Complex64::i() * omega * g)
}

/// χ̃(ω) = (1/M)/(ω₀² − ω² − iωγ̃(ω)).
pub fn chi_tilde(
    model: &DampingModel,
    omega_0: f64,
    omega: Complex64,
    consts: &PhysicalConstants,
) -> Result<Complex64> {
    ensure_positive("omega_0", omega_0)?;
    let d = denominator(model, omega_0, omega)?;
    let scale = (omega_0 * omega_0).max(omega.norm_sqr());
    if d.norm() < 1e-14 * scale {
        return Err(Error::PoleArgument(format!("chi_tilde at ω = {omega}")));
    }
    Ok(d.inv() / consts.mass)
}

/// Im χ̃(ω + i0⁺) for ω > 0 from the real and imaginary parts of γ̃ on the
/// real axis.
pub fn im_chi(model: &DampingModel, omega_0: f64, omega: f64, consts: &PhysicalConstants) -> Result<f64> {
    ensure_positive("omega_0", omega_0)?;
    ensure_positive("omega", omega)?;
    let (g_re, g_im) = match *model {
        DampingModel::Ohmic { gamma_o } => (gamma_o, 0.0),
        DampingModel::Drude { gamma_o, omega_d } => {
            let den = omega * omega + omega_d * omega_d;
            (gamma_o * omega_d * omega_d / den, gamma_o * omega_d * omega / den)
        }
    };
    let d_re = (omega_0 - omega) * (omega_0 + omega) + omega * g_im;
    let d_im = -omega * g_re;
    Ok(omega * g_re / (consts.mass * (d_re * d_re + d_im * d_im)))
}

/// Im d ln χ̃(ω + i0⁺)/dω on the real axis.
pub fn im_log_derivative(model: &DampingModel, omega_0: f64, omega: f64) -> Result<f64> {
    let w = Complex64::new(omega, 0.0);
    let d = denominator(model, omega_0, w)?;
    let g = gamma_tilde(model, w)?;
    let dg = gamma_tilde_derivative(model, w);
    let i = Complex64::i();
    let dd = -2.0 * w - i * g - i * w * dg;
    Ok((-dd / d).im)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    #[test]
    fn pole_locations() {
        let p = DrudeParams::new(1.0, 3.0, 4.0).unwrap();
        let poles = drude_poles(&p);
        assert!((poles.z1 - Complex64::new(2.0 + 3f64.sqrt(), 0.0)).norm() < 1e-15);
        assert!((poles.z2 - Complex64::new(2.0 - 3f64.sqrt(), 0.0)).norm() < 1e-15);
        let u = DrudeParams::new(1.0, 1.0, 1.5).unwrap();
        let pu = drude_poles(&u);
        assert!((pu.z1 - Complex64::new(0.75, (1.0f64 - 0.5625).sqrt())).norm() < 1e-15);
        assert_eq!(pu.z2, pu.z1.conj());
    }

    #[test]
    fn vieta_relations() {
        for (w0, om, g) in [(1.0, 1.0, 1.5), (1.0, 5.0, 4.0), (2.0, 0.3, 0.1)] {
            let p = DrudeParams::new(w0, om, g).unwrap();
            let r = drude_poles(&p).rates();
            let s1: Complex64 = r.iter().sum();
            let s2 = r[0] * r[1] + r[0] * r[2] + r[1] * r[2];
            let s3 = r[0] * r[1] * r[2];
            let wd = p.omega_d();
            assert!((s1 - wd).norm() < 1e-12 * wd);
            let c1 = p.omega_0_sq() + p.gamma_o() * wd;
            assert!((s2 - c1).norm() < 1e-12 * c1);
            assert!((s3 - p.omega_0_sq() * wd).norm() < 1e-12 * s3.norm());
        }
    }

    #[test]
    fn sum_rules_and_moments() {
        let p = DrudeParams::new(1.0, 5.0, 1.5).unwrap();
        let c = partial_fractions(&drude_poles(&p), p.omega_d()).unwrap();
        let (s0, s2) = c.sum_rules();
        assert!(s0.norm() < 1e-14 && s2.norm() < 1e-13);
        let s1: Complex64 = c.lambda.iter().zip(&c.rates).map(|(l, a)| l * a).sum();
        assert!((s1 - 1.0).norm() < 1e-14);
        let sm1: Complex64 = c.lambda.iter().zip(&c.rates).map(|(l, a)| l / a).sum();
        assert!((sm1 + 1.0 / p.omega_0_sq()).norm() < 1e-13);
        assert!((c.lambda[2] - c.lambda[1].conj()).norm() < 1e-15);
    }

    #[test]
    fn labeling_swap_leaves_im_chi_unchanged() {
        let p = DrudeParams::new(1.0, 5.0, 4.0).unwrap();
        let poles = drude_poles(&p);
        let swapped = DrudePoles {
            z1: poles.z2,
            z2: poles.z1,
            ..poles
        };
        let a = partial_fractions(&poles, p.omega_d()).unwrap();
        let b = partial_fractions(&swapped, p.omega_d()).unwrap();
        for w in [0.1, 1.3, 20.0] {
            assert!((a.im_chi(w, 1.0) - b.im_chi(w, 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_poles_rejected() {
        let p = DrudeParams::new(1.0, 3.0, 2.0).unwrap();
        assert!(matches!(
            partial_fractions(&drude_poles(&p), p.omega_d()),
            Err(Error::DegeneratePoles(_))
        ));
        // Ω = z₂: w0² − Ωγ + Ω² = 0 with w0 = 1, γ = 2.5 → Ω = 0.5
        let q = DrudeParams::new(1.0, 0.5, 2.5).unwrap();
        assert!(partial_fractions(&drude_poles(&q), q.omega_d()).is_err());
    }

    #[test]
    fn chi_forms_agree() {
        let p = DrudeParams::new(1.0, 5.0, 1.5).unwrap();
        let poles = drude_poles(&p);
        let m = p.model();
        for (re, im) in [(0.3, 0.2), (-2.0, 1.0), (7.0, -0.1), (0.0, 0.0)] {
            let w = Complex64::new(re, im);
            let a = chi_tilde(&m, p.omega_0(), w, &unit()).unwrap();
            let b = poles.chi_rational(w, p.omega_d(), 1.0);
            assert!((a - b).norm() < 1e-13 * a.norm());
        }
        let zero = chi_tilde(&m, p.omega_0(), Complex64::new(0.0, 0.0), &unit()).unwrap();
        assert!((zero.re - p.omega_d() / (p.w0() * p.w0() * p.big_omega())).abs() < 1e-14);
    }

    #[test]
    fn chi_pole_rejected() {
        let p = DrudeParams::new(1.0, 5.0, 1.5).unwrap();
        let pole = -Complex64::i() * drude_poles(&p).z1;
        assert!(matches!(
            chi_tilde(&p.model(), p.omega_0(), pole, &unit()),
            Err(Error::PoleArgument(_))
        ));
    }

    #[test]
    fn im_chi_matches_partial_fractions() {
        let p = DrudeParams::new(1.0, 1.0, 4.0).unwrap();
        let c = partial_fractions(&drude_poles(&p), p.omega_d()).unwrap();
        for w in [1e-3, 0.5, 1.3, 40.0] {
            let a = im_chi(&p.model(), p.omega_0(), w, &unit()).unwrap();
            let b = c.im_chi(w, 1.0);
            let eps = chi_tilde(&p.model(), p.omega_0(), Complex64::new(w, 1e-12), &unit())
                .unwrap()
                .im;
            assert!((a - b).abs() < 1e-10 * a.abs(), "{w}: {a} {b} {eps}");
            assert!((a - eps).abs() < 1e-9 * a.abs());
        }
    }

    #[test]
    fn ohmic_im_chi_closed_form() {
        let m = DampingModel::ohmic(0.4).unwrap();
        let w: f64 = 0.9;
        let expect = 0.4 * w / ((1.0 - w * w).powi(2) + 0.16 * w * w);
        assert!((im_chi(&m, 1.0, w, &unit()).unwrap() - expect).abs() < 1e-15);
        assert!(im_chi(&m, 1.0, 0.0, &unit()).is_err());
    }

    #[test]
    fn log_derivative_matches_finite_difference() {
        let p = DrudeParams::new(1.0, 5.0, 4.0).unwrap();
        let m = p.model();
        let w = 0.8;
        let h = 1e-6;
        let arg = |x: f64| {
            chi_tilde(&m, p.omega_0(), Complex64::new(x, 0.0), &unit())
                .unwrap()
                .arg()
        };
        let fd = (arg(w + h) - arg(w - h)) / (2.0 * h);
        assert!((im_log_derivative(&m, p.omega_0(), w).unwrap() - fd).abs() < 1e-7);
    }
}
