//! Drude-model energy, variances, correlation and coupling free energy.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{digamma_bracket, ensure_real, free_osc_energy, free_osc_free_energy, real_sum, richardson};
use crate::damping::{DrudeParams, PhysicalConstants};
use crate::error::{ensure_non_negative, Result};
use crate::quad::QuadConfig;
use crate::response::{drude_poles, min_relative_separation, partial_fractions, PartialFractionCoeffs, TAU};
use crate::specfun::{cot, matsubara_laplace_sum, sum_series, SeriesControl};

/// Pole separation below which the confluent fallback is used.
pub const CONFLUENT_WINDOW: f64 = 1e-4;
const W0_DELTA: f64 = 1e-4;
const OMEGA_DELTA: f64 = 3e-3;
/// Tolerance handed to the complex Laplace-integral quadrature.
pub const LAPLACE_QUAD_TOL: f64 = 1e-13;

fn relative_gap(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm())
}

/// Evaluates `f` with the partial-fraction coefficients of `p`. Near
/// coinciding poles, takes the Richardson limit over symmetric
/// perturbations of w0 (z₁ ≈ z₂) or Ω (Ω ≈ z).
pub(crate) fn confluent<F>(p: &DrudeParams, f: F) -> Result<f64>
where
    F: Fn(&DrudeParams, &PartialFractionCoeffs) -> Result<f64>,
{
    let poles = drude_poles(p);
    let eval = |q: &DrudeParams| -> Result<f64> {
        let pf = partial_fractions(&drude_poles(q), q.omega_d())?;
        f(q, &pf)
    };
    if min_relative_separation(&poles) >= CONFLUENT_WINDOW {
        return eval(p);
    }
    if relative_gap(poles.z1, poles.z2) < CONFLUENT_WINDOW {
        richardson(W0_DELTA, |s| eval(&p.scaled(s, 1.0)?))
    } else {
        richardson(OMEGA_DELTA, |s| eval(&p.scaled(1.0, s)?))
    }
}

fn lambda_rates(pf: &PartialFractionCoeffs) -> impl Iterator<Item = (Complex64, Complex64)> + '_ {
    pf.lambda.iter().copied().zip(pf.rates.iter().copied())
}

/// E_s(T) = ½ Σ_l λ_l (ω₀² − ω̲_l²){1/(βω̲_l) + (ℏ/π)ψ(βℏω̲_l/2π)}.
pub fn drude_energy(p: &DrudeParams, temperature: f64, consts: &PhysicalConstants) -> Result<f64> {
    ensure_non_negative("T", temperature)?;
    if temperature == 0.0 {
        return drude_energy_zero_t(p, consts);
    }
    let bh = consts.beta_hbar(temperature)?;
    confluent(p, |q, pf| {
        let w2 = q.omega_0_sq();
        let mut terms = Vec::with_capacity(3);
        for (l, a) in lambda_rates(pf) {
            terms.push(l * (w2 - a * a) * digamma_bracket(a, bh, consts.hbar)? * 0.5);
        }
        real_sum(terms)
    })
}

/// E_s(0) = (ℏ/2π)(A + B) in the (w0, Ω, γ) parametrization; the
/// underdamped branch enters through 𝐰̄₁ = i𝐰₁ and principal logarithms.
pub fn drude_energy_zero_t(p: &DrudeParams, consts: &PhysicalConstants) -> Result<f64> {
    confluent(p, |q, _| Ok(consts.hbar / (2.0 * PI) * appendix_a_plus_b(q)?))
}

fn appendix_a_plus_b(q: &DrudeParams) -> Result<f64> {
    let (w0, om, g) = (q.w0(), q.big_omega(), q.gamma());
    let w02 = w0 * w0;
    let wb = q.w1_bar_complex();
    let half = 0.5 * g;
    let d = w02 - om * g + om * om;
    let log = ((half - wb) / (half + wb)).ln();
    let num = (w02 + om * om) * (om * g * g / 4.0 - om * w02 - w02 * g / 2.0) + om * om * g * g * g / 4.0;
    let a = log * num / (wb * (om + g) * d);
    let b = om * g * (om * om + om * g - w02) / ((om + g) * d) * (om / w0).ln();
    ensure_real(a + b, a.norm() + b.abs())
}

/// (⟨q̂²⟩, ⟨q̇̂²⟩). At T = 0 the digamma bracket reduces to (ℏ/π) ln ω̲_l.
pub fn drude_variances(p: &DrudeParams, temperature: f64, consts: &PhysicalConstants) -> Result<(f64, f64)> {
    ensure_non_negative("T", temperature)?;
    let bh = if temperature == 0.0 {
        None
    } else {
        Some(consts.beta_hbar(temperature)?)
    };
    let bracket = |a: Complex64| -> Result<Complex64> {
        match bh {
            Some(bh) => digamma_bracket(a, bh, consts.hbar),
            None => Ok(a.ln() * (consts.hbar / PI)),
        }
    };
    let m = consts.mass;
    let position = confluent(p, |_, pf| {
        let mut terms = Vec::with_capacity(3);
        for (l, a) in lambda_rates(pf) {
            terms.push(l * bracket(a)? / m);
        }
        real_sum(terms)
    })?;
    let velocity = confluent(p, |_, pf| {
        let mut terms = Vec::with_capacity(3);
        for (l, a) in lambda_rates(pf) {
            terms.push(-l * a * a * bracket(a)? / m);
        }
        real_sum(terms)
    })?;
    Ok((position, velocity))
}

/// Symmetrized ⟨q̂(0)q̂(t) + q̂(t)q̂(0)⟩/2 as the pole sum plus the
/// Matsubara sum over ν_n = 2πn/βℏ.
pub fn drude_position_correlation(
    p: &DrudeParams,
    t: f64,
    temperature: f64,
    consts: &PhysicalConstants,
) -> Result<f64> {
    ensure_non_negative("t", t)?;
    let bh = consts.beta_hbar(temperature)?;
    let beta = consts.beta(temperature)?;
    let m = consts.mass;
    let ctrl = SeriesControl::default();
    confluent(p, |_, pf| {
        let mut poles = Complex64::new(0.0, 0.0);
        let mut mag = 0.0;
        for (l, a) in lambda_rates(pf) {
            let v = -l * (-a * t).exp() * cot(a * (0.5 * bh)) * (0.5 * consts.hbar / m);
            poles += v;
            mag += v.norm();
        }
        // Σλ/(ν² − a²) = Σλa⁴/(ν⁴(ν² − a²)) by the two vanishing sum rules
        let series = sum_series(
            &ctrl,
            1,
            |n| {
                let nu = 2.0 * PI * n as f64 / bh;
                let nu2 = nu * nu;
                let mut s = Complex64::new(0.0, 0.0);
                for (l, a) in lambda_rates(pf) {
                    let a2 = a * a;
                    s += l * a2 * a2 / (nu2 - a2);
                }
                s * (nu * (-nu * t).exp() / (nu2 * nu2))
            },
            |n, mag| mag * n as f64 / 4.0,
        )?;
        let matsubara = -series.value * (2.0 / (beta * m));
        ensure_real(poles + matsubara, mag + matsubara.norm())
    })
}

/// 𝓕_s(0) = (ℏ/2π){(Ω+γ) ln((Ω+γ)/Ω) + γ ln(Ω/w0) + 𝐰̄₁ ln((γ/2 − 𝐰̄₁)/(γ/2 + 𝐰̄₁))}.
pub fn drude_coupling_free_energy_zero_t(p: &DrudeParams, consts: &PhysicalConstants) -> Result<f64> {
    let (w0, om, g) = (p.w0(), p.big_omega(), p.gamma());
    let wb = p.w1_bar_complex();
    let half = 0.5 * g;
    let pair = if wb.norm() == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        wb * ((half - wb) / (half + wb)).ln()
    };
    let real = (om + g) * ((om + g) / om).ln() + g * (om / w0).ln();
    let v = ensure_real(pair + real, pair.norm() + real.abs())?;
    Ok(consts.hbar / (2.0 * PI) * v)
}

/// 𝓕_s(T) − 𝓕_s(0) = (1/πβ) Σ_n (1/n) Σ_μ τ_μ L(nβℏω̲_μ) over the rates
/// (ω_d, Ω, z₁, z₂).
pub fn drude_coupling_free_energy_delta(
    p: &DrudeParams,
    temperature: f64,
    consts: &PhysicalConstants,
    ctrl: &SeriesControl,
) -> Result<f64> {
    ensure_non_negative("T", temperature)?;
    if temperature == 0.0 {
        return Ok(0.0);
    }
    let beta = consts.beta(temperature)?;
    let bh = consts.beta_hbar(temperature)?;
    let poles = drude_poles(p);
    let rates = [
        Complex64::new(p.omega_d(), 0.0),
        Complex64::new(poles.big_omega, 0.0),
        poles.z1,
        poles.z2,
    ];
    let weights = TAU.map(|w| Complex64::new(w, 0.0));
    let s = matsubara_laplace_sum(&rates, &weights, bh, ctrl, LAPLACE_QUAD_TOL)?;
    let v = ensure_real(s.value, s.value.norm())?;
    Ok(v / (PI * beta))
}

pub fn drude_coupling_free_energy(
    p: &DrudeParams,
    temperature: f64,
    consts: &PhysicalConstants,
    ctrl: &SeriesControl,
) -> Result<f64> {
    Ok(drude_coupling_free_energy_zero_t(p, consts)? + drude_coupling_free_energy_delta(p, temperature, consts, ctrl)?)
}

/// ℰ_s(T) = (1/π)∫ e(ω,T) Im d ln χ̃/dω dω, by quadrature.
pub fn drude_coupling_energy(
    p: &DrudeParams,
    temperature: f64,
    consts: &PhysicalConstants,
    quad_tol: f64,
) -> Result<f64> {
    crate::oracle::coupling_energy(
        &p.model(),
        p.omega_0(),
        temperature,
        consts,
        &QuadConfig::with_rel_tol(quad_tol),
    )
}

/// K_d(T) = 𝓕_s(T) − f(ω₀,T) − E_s(T) + e(ω₀,T).
pub fn second_law_gap_drude(p: &DrudeParams, temperature: f64, consts: &PhysicalConstants) -> Result<f64> {
    let w = p.omega_0();
    let fc = drude_coupling_free_energy(p, temperature, consts, &SeriesControl::default())?;
    let e = drude_energy(p, temperature, consts)?;
    Ok(fc - free_osc_free_energy(w, temperature, consts)? - e + free_osc_energy(w, temperature, consts)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::digamma_real;

    fn unit() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    fn fig1() -> [DrudeParams; 4] {
        [
            DrudeParams::new(1.0, 1.0, 1.5).unwrap(),
            DrudeParams::new(1.0, 1.0, 4.0).unwrap(),
            DrudeParams::new(1.0, 5.0, 1.5).unwrap(),
            DrudeParams::new(1.0, 5.0, 4.0).unwrap(),
        ]
    }

    fn zero_t_partial_fractions(p: &DrudeParams) -> f64 {
        let pf = partial_fractions(&drude_poles(p), p.omega_d()).unwrap();
        let w2 = p.omega_0_sq();
        let s: Complex64 = lambda_rates(&pf).map(|(l, a)| l * (w2 - a * a) * a.ln()).sum();
        s.re / (2.0 * PI)
    }

    #[test]
    fn zero_t_closed_form_matches_pole_sum() {
        for p in fig1() {
            let ab = drude_energy_zero_t(&p, &unit()).unwrap();
            let pf = zero_t_partial_fractions(&p);
            assert!((ab - pf).abs() < 1e-12, "{ab} vs {pf}");
            assert!(ab > 0.5 * p.omega_0());
        }
    }

    #[test]
    fn zero_t_weak_coupling() {
        let p = DrudeParams::new(1.0, 3.0, 1e-6).unwrap();
        let e = drude_energy_zero_t(&p, &unit()).unwrap();
        assert!((e - 0.5).abs() < 1e-5);
    }

    #[test]
    fn low_temperature_continuity() {
        let p = DrudeParams::new(1.0, 5.0, 4.0).unwrap();
        let e0 = drude_energy_zero_t(&p, &unit()).unwrap();
        let e = drude_energy(&p, 1e-4, &unit()).unwrap();
        assert!((e - e0).abs() < 1e-3);
        let f0 = drude_coupling_free_energy_zero_t(&p, &unit()).unwrap();
        let f = drude_coupling_free_energy(&p, 1e-4, &unit(), &SeriesControl::default()).unwrap();
        assert!((f - f0).abs() < 1e-3);
    }

    #[test]
    fn high_temperature_equipartition() {
        for p in fig1() {
            let t = 1e3;
            let e = drude_energy(&p, t, &unit()).unwrap();
            assert!((e / t - 1.0).abs() < 1e-2);
        }
    }

    #[test]
    fn variances_reassemble_energy() {
        let c = PhysicalConstants::new(1.0, 1.0, 2.5).unwrap();
        let p = DrudeParams::new(1.0, 5.0, 1.5).unwrap();
        for t in [0.0, 0.5, 3.0] {
            let (q2, v2) = drude_variances(&p, t, &c).unwrap();
            let e = drude_energy(&p, t, &c).unwrap();
            let r = 0.5 * c.mass * v2 + 0.5 * c.mass * p.omega_0_sq() * q2;
            assert!((r - e).abs() < 1e-10 * e.abs(), "T={t}: {r} vs {e}");
            assert!(c.mass * c.mass * q2 * v2 >= 0.25);
        }
    }

    #[test]
    fn position_variance_equipartition() {
        let p = DrudeParams::new(1.0, 2.0, 1e-5).unwrap();
        let t = 2e3;
        let (q2, _) = drude_variances(&p, t, &unit()).unwrap();
        assert!((q2 * p.omega_0_sq() / t - 1.0).abs() < 1e-3);
    }

    #[test]
    fn correlation_at_zero_time_is_variance() {
        for p in fig1() {
            for t in [0.3, 1.0, 7.0] {
                let (q2, _) = drude_variances(&p, t, &unit()).unwrap();
                let c0 = drude_position_correlation(&p, 0.0, t, &unit()).unwrap();
                assert!((c0 - q2).abs() < 1e-11 * q2, "{c0} vs {q2}");
            }
        }
    }

    #[test]
    fn correlation_decays() {
        let p = DrudeParams::new(1.0, 5.0, 1.5).unwrap();
        let c = drude_position_correlation(&p, 60.0, 1.0, &unit()).unwrap();
        assert!(c.abs() < 1e-10);
    }

    #[test]
    fn classical_correlation() {
        // ℏ → 0: C(t) → −(1/βM) Σ λ e^{−at}/a
        let c = PhysicalConstants::new(1e-6, 1.0, 1.0).unwrap();
        let p = DrudeParams::new(1.0, 1.0, 4.0).unwrap();
        let pf = partial_fractions(&drude_poles(&p), p.omega_d()).unwrap();
        let t = 0.8;
        let temp = 2.0;
        let cl: Complex64 = lambda_rates(&pf).map(|(l, a)| -l * (-a * t).exp() / a * temp).sum();
        let q = drude_position_correlation(&p, t, temp, &c).unwrap();
        assert!((q - cl.re).abs() < 1e-6 * cl.re.abs());
    }

    #[test]
    fn critical_branch_is_smooth() {
        // γ = 2w0 exactly, and a hair on either side
        let c = unit();
        let crit = DrudeParams::new(1.0, 3.0, 2.0).unwrap();
        let lo = DrudeParams::new(1.0, 3.0, 2.0 - 2e-3).unwrap();
        let hi = DrudeParams::new(1.0, 3.0, 2.0 + 2e-3).unwrap();
        for t in [0.0, 0.4] {
            let ec = drude_energy(&crit, t, &c).unwrap();
            let el = drude_energy(&lo, t, &c).unwrap();
            let eh = drude_energy(&hi, t, &c).unwrap();
            assert!((ec - 0.5 * (el + eh)).abs() < 1e-5, "{ec} {el} {eh}");
        }
        let f = drude_coupling_free_energy(&crit, 0.4, &c, &SeriesControl::default()).unwrap();
        assert!(f.is_finite());
    }

    #[test]
    fn omega_collision_is_smooth() {
        // overdamped z = γ/2 ± √(γ²/4 − w0²); γ = 2.5, w0 = 1 gives z = 2, 0.5
        let c = unit();
        for om in [2.0, 0.5] {
            let hit = DrudeParams::new(1.0, om, 2.5).unwrap();
            let lo = DrudeParams::new(1.0, om * (1.0 - 1e-3), 2.5).unwrap();
            let hi = DrudeParams::new(1.0, om * (1.0 + 1e-3), 2.5).unwrap();
            for t in [0.0, 0.7] {
                let e = drude_energy(&hit, t, &c).unwrap();
                let mid = 0.5 * (drude_energy(&lo, t, &c).unwrap() + drude_energy(&hi, t, &c).unwrap());
                assert!((e - mid).abs() < 1e-6, "{e} vs {mid}");
            }
        }
    }

    #[test]
    fn coupling_free_energy_weak_coupling() {
        let c = unit();
        let p = DrudeParams::new(1.0, 2.0, 1e-7).unwrap();
        for t in [0.0, 0.3, 2.0] {
            let f = drude_coupling_free_energy(&p, t, &c, &SeriesControl::default()).unwrap();
            let free = free_osc_free_energy(p.omega_0(), t, &c).unwrap();
            assert!((f - free).abs() < 1e-5, "T={t}: {f} vs {free}");
        }
    }

    #[test]
    fn gap_at_zero_temperature_is_positive() {
        for p in fig1() {
            let k = second_law_gap_drude(&p, 0.0, &unit()).unwrap();
            assert!(k > 0.0);
        }
    }

    #[test]
    fn figure_one_ordering_at_low_temperature() {
        let k: Vec<f64> = fig1()
            .iter()
            .map(|p| second_law_gap_drude(p, 0.1, &unit()).unwrap())
            .collect();
        let expected = [0.06964, 0.08128, 0.12832, 0.23770];
        for (a, b) in k.iter().zip(expected) {
            assert!((a - b).abs() < 1e-4, "{k:?}");
        }
        assert!(k.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn digamma_bracket_limits() {
        // large y: bracket ≈ (ℏ/π) ln y
        let a = Complex64::new(3.0, 0.0);
        let b = super::super::digamma_bracket(a, 1e4, 1.0).unwrap();
        let y = 3e4 / (2.0 * PI);
        assert!((b.re - (digamma_real(y).unwrap() + 0.5 / y) / PI).abs() < 1e-14);
    }
}
