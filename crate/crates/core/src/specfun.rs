//! Special functions and series kernels: complex digamma, the sine and
//! cosine integrals, the auxiliary Laplace integral
//! L(a) = ∫₀^∞ e^{−ay}/(1+y²) dy, the Matsubara form of coth and the
//! summation of thermal series built from L.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{ensure_positive, Error, Result};
use crate::quad::{integrate_breaks, QuadConfig, QuadValue};

/// Euler–Mascheroni constant c_e.
#[allow(clippy::excessive_precision)]
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;

/// B_2, B_4, ..., B_24.
#[allow(clippy::excessive_precision)]
const BERNOULLI_EVEN: [f64; 12] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
];

const DIGAMMA_SHIFT_RADIUS: f64 = 8.0;
const POLE_TOL: f64 = 1e-12;

/// Truncation control for infinite series.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SeriesControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            max_terms: 1_000_000,
        }
    }
}

impl SeriesControl {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("rel_tol", self.rel_tol)?;
        ensure_positive("abs_tol", self.abs_tol)?;
        if self.max_terms == 0 {
            return Err(Error::Domain("max_terms must be at least 1".into()));
        }
        Ok(())
    }

    fn target(&self, partial: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * partial)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSum<V> {
    pub value: V,
    pub terms: usize,
    pub remainder_bound: f64,
}

/// Compensated accumulator.
#[derive(Clone, Copy)]
struct Kahan<V> {
    sum: V,
    carry: V,
}

impl<V: QuadValue> Kahan<V> {
    fn new() -> Self {
        Self {
            sum: V::zero(),
            carry: V::zero(),
        }
    }
    fn add(&mut self, x: V) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Sums `term(n)` for n = start, start+1, ... Stops once three consecutive
/// terms fall below rel_tol·|partial sum| and `tail_bound(n, |term_n|)`
/// drops below abs_tol.
pub fn sum_series<V, T, B>(ctrl: &SeriesControl, start: usize, mut term: T, tail_bound: B) -> Result<SeriesSum<V>>
where
    V: QuadValue,
    T: FnMut(usize) -> V,
    B: Fn(usize, f64) -> f64,
{
    ctrl.validate()?;
    let mut acc = Kahan::new();
    let mut small = 0usize;
    let mut last_bound = f64::INFINITY;
    for k in 0..ctrl.max_terms {
        let n = start + k;
        let t = term(n);
        if !t.is_finite_value() {
            return Err(Error::Domain(format!("series term {n} is not finite")));
        }
        acc.add(t);
        let mag = t.magnitude();
        if mag <= ctrl.rel_tol * acc.sum.magnitude() || mag <= ctrl.abs_tol {
            small += 1;
        } else {
            small = 0;
        }
        last_bound = tail_bound(n, mag);
        if small >= 3 && last_bound < ctrl.abs_tol {
            return Ok(SeriesSum {
                value: acc.sum,
                terms: k + 1,
                remainder_bound: last_bound,
            });
        }
    }
    Err(Error::SeriesNotConverged {
        terms: ctrl.max_terms,
        remainder: last_bound,
    })
}

fn finite_complex(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// cot(w), stable for large |Im w|.
pub(crate) fn cot(w: Complex64) -> Complex64 {
    let i = Complex64::i();
    if w.im.abs() < 20.0 {
        w.cos() / w.sin()
    } else if w.im >= 0.0 {
        let e = (2.0 * i * w).exp();
        i * (e + 1.0) / (e - 1.0)
    } else {
        let e = (-2.0 * i * w).exp();
        i * (1.0 + e) / (1.0 - e)
    }
}

/// Complex digamma ψ(z) = d ln Γ(z)/dz.
pub fn digamma(z: Complex64) -> Result<Complex64> {
    if !finite_complex(z) {
        return Err(Error::Domain(format!("digamma argument {z} is not finite")));
    }
    let nearest = z.re.round();
    if nearest <= 0.0 && (z - Complex64::new(nearest, 0.0)).norm() < POLE_TOL {
        return Err(Error::PoleArgument(format!("digamma({z})")));
    }
    if z.re < 0.0 {
        // ψ(z) = ψ(1 − z) − π cot(πz)
        let reflected = digamma_shifted(Complex64::new(1.0, 0.0) - z);
        return Ok(reflected - PI * cot(PI * z));
    }
    Ok(digamma_shifted(z))
}

/// Real-argument convenience wrapper.
pub fn digamma_real(x: f64) -> Result<f64> {
    digamma(Complex64::new(x, 0.0)).map(|v| v.re)
}

fn digamma_shifted(mut z: Complex64) -> Complex64 {
    let mut shift = Complex64::new(0.0, 0.0);
    while z.norm() < DIGAMMA_SHIFT_RADIUS {
        shift += z.inv();
        z += 1.0;
    }
    digamma_series(z, BERNOULLI_EVEN.len()) - shift
}

fn digamma_series(z: Complex64, n_bernoulli: usize) -> Complex64 {
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut pow = inv2;
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, b) in BERNOULLI_EVEN.iter().take(n_bernoulli).enumerate() {
        acc += pow * (b / (2.0 * (k as f64 + 1.0)));
        pow *= inv2;
    }
    z.ln() - 0.5 * inv - acc
}

/// Truncated asymptotic expansion ln y − 1/(2y) − Σ_{n≤N} B_{2n}/(2n y^{2n}).
pub fn digamma_asymptotic(y: f64, n_bernoulli: usize) -> Result<f64> {
    ensure_positive("y", y)?;
    if n_bernoulli > 10 {
        return Err(Error::Domain(format!(
            "n_bernoulli must be at most 10, got {n_bernoulli}"
        )));
    }
    Ok(digamma_series(Complex64::new(y, 0.0), n_bernoulli).re)
}

/// Continued fraction for e^{ix}E₁(ix), x > 0 (modified Lentz).
fn e1_imag_scaled(x: f64) -> Complex64 {
    const TINY: f64 = 1e-300;
    let mut b = Complex64::new(1.0, x);
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = b.inv();
    let mut h = d;
    for i in 2..10_000 {
        let a = -((i - 1) as f64).powi(2);
        b += 2.0;
        d = (d * a + b).inv();
        c = b + c.inv() * a;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    h
}

/// (Ci(x), si(x)) for x > 0.
fn ci_si(x: f64) -> (f64, f64) {
    if x <= 4.0 {
        ci_si_series(x)
    } else {
        ci_si_fraction(x)
    }
}

fn ci_si_series(x: f64) -> (f64, f64) {
    {
        let x2 = x * x;
        // Si(x) = Σ (−1)^k x^{2k+1}/((2k+1)(2k+1)!)
        // Cin(x) = Σ_{k≥1} (−1)^{k+1} x^{2k}/(2k (2k)!)
        let mut si_sum = 0.0;
        let mut cin = 0.0;
        let mut odd = x; // x^{2k+1}/(2k+1)!
        let mut even = 1.0; // x^{2k}/(2k)!
        for k in 0..40 {
            let kf = k as f64;
            let s_term = odd / (2.0 * kf + 1.0);
            si_sum += if k % 2 == 0 { s_term } else { -s_term };
            if k > 0 {
                let c_term = even / (2.0 * kf);
                cin += if k % 2 == 1 { c_term } else { -c_term };
            }
            if s_term < 1e-18 * si_sum.abs() && k > 2 {
                break;
            }
            odd *= x2 / ((2.0 * kf + 2.0) * (2.0 * kf + 3.0));
            even *= x2 / ((2.0 * kf + 1.0) * (2.0 * kf + 2.0));
        }
        (EULER_GAMMA + x.ln() - cin, si_sum - FRAC_PI_2)
    }
}

fn ci_si_fraction(x: f64) -> (f64, f64) {
    let h = e1_imag_scaled(x) * Complex64::new(x.cos(), -x.sin());
    (-h.re, h.im)
}

/// Cosine integral Ci(x) = c_e + ln x + ∫₀^x (cos z − 1)/z dz.
pub fn ci(x: f64) -> Result<f64> {
    ensure_positive("x", x)?;
    Ok(ci_si(x).0)
}

/// si(x) = Si(x) − π/2 = −∫_x^∞ sin z/z dz.
pub fn si_lower(x: f64) -> Result<f64> {
    ensure_positive("x", x)?;
    Ok(ci_si(x).1)
}

/// L(x) = sin(x)Ci(x) − cos(x)si(x) for real x > 0.
fn aux_laplace_real(x: f64) -> f64 {
    if x <= 4.0 {
        let (c, s) = ci_si(x);
        x.sin() * c - x.cos() * s
    } else {
        // sin·Ci − cos·si = −Im(e^{ix}E₁(ix)), avoiding the phase round trip
        -e1_imag_scaled(x).im
    }
}

/// L(a) = ∫₀^∞ e^{−ay}/(y² + 1) dy for Re a > 0.
///
/// Real arguments use the Ci/si closed form. Complex arguments are
/// integrated along the ray arg y = −arg a, where e^{−ay} decays
/// monotonically; the ray is split at |y| = 1 and the outer half mapped
/// onto (0, 1] by y = 1/u.
pub fn aux_laplace(a: Complex64, quad_tol: f64) -> Result<Complex64> {
    if !finite_complex(a) || a.re <= 0.0 {
        return Err(Error::Domain(format!("aux_laplace needs Re(a) > 0, got {a}")));
    }
    if a.im == 0.0 {
        return Ok(Complex64::new(aux_laplace_real(a.re), 0.0));
    }
    ensure_positive("quad_tol", quad_tol)?;
    let r = a.norm();
    let phase = Complex64::from_polar(1.0, -a.arg());
    let phase2 = phase * phase;
    let cfg = QuadConfig {
        abs_tol: 0.25 * quad_tol / (1.0 + r),
        rel_tol: quad_tol,
        max_intervals: 2000,
    };
    let mut breaks = vec![0.0];
    for k in [1.0, 8.0, 40.0] {
        let t = k / r;
        if t < 1.0 {
            breaks.push(t);
        }
    }
    breaks.push(1.0);
    let inner = integrate_breaks(|t: f64| (1.0 + phase2 * (t * t)).inv() * (-r * t).exp(), &breaks, &cfg)?;
    let outer = if r > 740.0 {
        Complex64::new(0.0, 0.0)
    } else {
        integrate_breaks(
            |u: f64| {
                if u <= 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    (phase2 + u * u).inv() * (-r / u).exp()
                }
            },
            &[0.0, 0.5, 1.0],
            &cfg,
        )?
        .value
    };
    Ok(phase * (inner.value + outer))
}

/// Partial sum (2/x)(1 + 2Σ_{n≤N} ω²/(ν_n² + ω²)), x = βℏω, ν_n = 2πn/βℏ.
pub fn matsubara_coth(omega: f64, beta_hbar: f64, n_terms: usize) -> Result<f64> {
    ensure_positive("omega", omega)?;
    ensure_positive("beta_hbar", beta_hbar)?;
    let x = beta_hbar * omega;
    let mut acc = Kahan::new();
    // ω²/(ν_n²+ω²) = 1/(1 + (2πn/x)²); sum small terms first
    for n in (1..=n_terms).rev() {
        let r = 2.0 * PI * n as f64 / x;
        acc.add(1.0 / (1.0 + r * r));
    }
    Ok(2.0 / x * (1.0 + 2.0 * acc.sum))
}

/// q^{s−1} ζ(s, q) for integer s ≥ 2 and q ≥ 1 (Euler–Maclaurin).
pub(crate) fn hurwitz_zeta_scaled(s: u32, q: f64) -> f64 {
    debug_assert!(s >= 2 && q >= 1.0);
    let sf = s as f64;
    let shift = (sf + 20.0 - q).ceil().max(0.0) as usize;
    let mut head = 0.0;
    for j in (0..shift).rev() {
        let x = q + j as f64;
        head += (q / x).powi(s as i32 - 1) / x;
    }
    let x = q + shift as f64;
    let inv2 = 1.0 / (x * x);
    let mut tail = 1.0 / (sf - 1.0) + 0.5 / x;
    // B_{2i}/(2i)! · s(s+1)…(s+2i−2) · x^{−2i}
    let mut rising = sf; // s(s+1)…(s+2i−2)
    let mut fact = 2.0; // (2i)!
    let mut pow = inv2;
    for (i, b) in BERNOULLI_EVEN.iter().enumerate() {
        let term = b / fact * rising * pow;
        tail += term;
        if term.abs() < 1e-18 * tail.abs() {
            break;
        }
        let k = 2.0 * (i as f64 + 1.0);
        rising *= (sf + k - 1.0) * (sf + k);
        fact *= (k + 1.0) * (k + 2.0);
        pow *= inv2;
    }
    head + (q / x).powi(s as i32 - 1) * tail
}

/// Threshold on |nβℏa| beyond which L(nβℏa) is taken from its asymptotic
/// expansion L(x) ~ Σ_k (−1)^k (2k)!/x^{2k+1}.
const ASYMPTOTIC_ONSET: f64 = 45.0;
const MAX_ASYMPTOTIC_ORDER: usize = 24;

/// Σ_{n≥1} (1/n) Σ_μ w_μ L(n·βℏ·a_μ) for rates with Re a_μ > 0.
///
/// Terms below n = q are summed explicitly, where q is the first index at
/// which every |n βℏ a_μ| clears the asymptotic onset. The remaining
/// infinite tail is summed in closed form: each asymptotic order
/// contributes Σ_{n≥q} n^{−(2k+2)} = ζ(2k+2, q).
pub fn matsubara_laplace_sum(
    rates: &[Complex64],
    weights: &[Complex64],
    beta_hbar: f64,
    ctrl: &SeriesControl,
    quad_tol: f64,
) -> Result<SeriesSum<Complex64>> {
    ctrl.validate()?;
    ensure_positive("beta_hbar", beta_hbar)?;
    assert_eq!(rates.len(), weights.len(), "one weight per rate");
    let mut q = 1usize;
    let mut inv_cos = Vec::with_capacity(rates.len());
    for a in rates {
        if !finite_complex(*a) || a.re <= 0.0 {
            return Err(Error::Domain(format!("rate {a} must have positive real part")));
        }
        let ic = a.norm() / a.re;
        inv_cos.push(ic);
        let onset = ASYMPTOTIC_ONSET + ic.ln();
        let n = (onset / (beta_hbar * a.norm())).ceil();
        if n > (ctrl.max_terms + 1) as f64 {
            return Err(Error::SeriesNotConverged {
                terms: ctrl.max_terms,
                remainder: f64::INFINITY,
            });
        }
        q = q.max(n as usize);
    }

    // conjugate partners reuse the mirrored value
    let partner: Vec<Option<usize>> = rates
        .iter()
        .enumerate()
        .map(|(i, a)| (0..i).find(|&j| rates[j] == a.conj() && a.im != 0.0))
        .collect();

    let mut acc = Kahan::new();
    let mut values = vec![Complex64::new(0.0, 0.0); rates.len()];
    for n in (1..q).rev() {
        let nf = n as f64;
        for (i, a) in rates.iter().enumerate() {
            values[i] = match partner[i] {
                Some(j) => values[j].conj(),
                None => aux_laplace(*a * (nf * beta_hbar), quad_tol)?,
            };
        }
        let mut inner = Complex64::new(0.0, 0.0);
        for (w, l) in weights.iter().zip(&values) {
            inner += w * l;
        }
        acc.add(inner / nf);
    }

    let qf = q as f64;
    let scaled: Vec<Complex64> = rates.iter().map(|a| (*a * (qf * beta_hbar)).inv()).collect();
    let mut powers = scaled.clone();
    let scaled2: Vec<Complex64> = scaled.iter().map(|x| x * x).collect();
    let mut tail = Complex64::new(0.0, 0.0);
    let mut factorial = 1.0; // (2k)!
    let mut bound = f64::INFINITY;
    let mut order = 0;
    while order <= MAX_ASYMPTOTIC_ORDER {
        let h = hurwitz_zeta_scaled(2 * order as u32 + 2, qf);
        let mut term = Complex64::new(0.0, 0.0);
        let mut mag = 0.0;
        for i in 0..rates.len() {
            term += weights[i] * powers[i];
            mag += weights[i].norm() * powers[i].norm() * inv_cos[i];
        }
        let this_bound = factorial * mag * h;
        let target = ctrl.target((acc.sum + tail).norm());
        if this_bound <= target {
            bound = this_bound;
            break;
        }
        if this_bound > bound {
            break;
        }
        bound = this_bound;
        let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
        tail += term * (sign * factorial * h);
        for i in 0..rates.len() {
            powers[i] *= scaled2[i];
        }
        let k = 2.0 * order as f64;
        factorial *= (k + 1.0) * (k + 2.0);
        order += 1;
    }
    let total = acc.sum + tail;
    if bound > ctrl.target(total.norm()) {
        return Err(Error::SeriesNotConverged {
            terms: q - 1 + order,
            remainder: bound,
        });
    }
    Ok(SeriesSum {
        value: total,
        terms: q - 1 + order,
        remainder_bound: bound,
    })
}
