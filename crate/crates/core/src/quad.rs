//! Globally adaptive Gauss–Kronrod (G10/K21) quadrature for real- and
//! complex-valued integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Values that can be integrated: a vector space over the reals with a norm.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
    fn is_finite_value(&self) -> bool;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn is_finite_value(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-14,
            rel_tol: 1e-12,
            max_intervals: 4000,
        }
    }
}

impl QuadConfig {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult<V> {
    pub value: V,
    pub error: f64,
    pub intervals: usize,
}

struct Segment<V> {
    a: f64,
    b: f64,
    value: V,
    error: f64,
}

impl<V> PartialEq for Segment<V> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<V> Eq for Segment<V> {}
impl<V> PartialOrd for Segment<V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for Segment<V> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod21<V: QuadValue, F: Fn(f64) -> V>(f: &F, a: f64, b: f64) -> (V, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resg = V::zero();
    let mut resk = fc * WGK[10];
    let mut resabs = fc.magnitude() * WGK[10];
    let mut fv1 = [V::zero(); 10];
    let mut fv2 = [V::zero(); 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk = resk + (f1 + f2) * WGK[j];
        resabs += WGK[j] * (f1.magnitude() + f2.magnitude());
        if j % 2 == 1 {
            resg = resg + (f1 + f2) * WG[j / 2];
        }
    }
    let mean = resk * 0.5;
    let mut resasc = WGK[10] * (fc - mean).magnitude();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).magnitude() + (fv2[j] - mean).magnitude());
    }
    let hl = half.abs();
    let value = resk * half;
    resabs *= hl;
    resasc *= hl;
    let mut err = ((resk - resg) * half).magnitude();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (value, err)
}

/// Integrates `f` over the piecewise interval given by `breaks` (at least
/// two ascending points). Breakpoints seed the initial partition.
pub fn integrate_breaks<V, F>(f: F, breaks: &[f64], cfg: &QuadConfig) -> Result<QuadResult<V>>
where
    V: QuadValue,
    F: Fn(f64) -> V,
{
    assert!(breaks.len() >= 2, "need at least one interval");
    let mut heap = BinaryHeap::new();
    let mut total = V::zero();
    let mut total_err = 0.0;
    let mut frozen_err = 0.0;
    for w in breaks.windows(2) {
        let (value, error) = kronrod21(&f, w[0], w[1]);
        total = total + value;
        total_err += error;
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }
    let mut intervals = heap.len();
    loop {
        if !total.is_finite_value() || !total_err.is_finite() {
            return Err(Error::QuadratureFailure {
                estimate: total.magnitude(),
                error: total_err,
                intervals,
            });
        }
        let target = cfg.abs_tol.max(cfg.rel_tol * total.magnitude());
        if total_err + frozen_err <= target {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        let width = (worst.b - worst.a).abs();
        let scale = worst.a.abs().max(worst.b.abs()).max(f64::MIN_POSITIVE);
        if width <= 1e3 * f64::EPSILON * scale {
            // Cannot bisect further: keep its contribution, retire its error.
            total_err -= worst.error;
            frozen_err += worst.error;
            if heap.is_empty() {
                break;
            }
            heap.push(Segment { error: 0.0, ..worst });
            continue;
        }
        if intervals >= cfg.max_intervals {
            return Err(Error::QuadratureFailure {
                estimate: total.magnitude(),
                error: total_err + frozen_err,
                intervals,
            });
        }
        let (v1, e1) = kronrod21(&f, worst.a, mid);
        let (v2, e2) = kronrod21(&f, mid, worst.b);
        total = total - worst.value + v1 + v2;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
        intervals += 1;
        if intervals % 64 == 0 {
            // Refresh the running sums to stop cancellation drift.
            total = heap.iter().fold(V::zero(), |acc, s| acc + s.value);
            total_err = heap.iter().map(|s| s.error).sum();
        }
    }
    let value = heap.iter().fold(V::zero(), |acc, s| acc + s.value);
    let error = heap.iter().map(|s| s.error).sum::<f64>() + frozen_err;
    Ok(QuadResult {
        value,
        error,
        intervals,
    })
}

pub fn integrate<V, F>(f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<QuadResult<V>>
where
    V: QuadValue,
    F: Fn(f64) -> V,
{
    integrate_breaks(f, &[a, b], cfg)
}

/// ∫_c^∞ f(x) dx for c > 0, via x = c/u on (0, 1].
pub fn integrate_tail<V, F>(f: F, c: f64, cfg: &QuadConfig) -> Result<QuadResult<V>>
where
    V: QuadValue,
    F: Fn(f64) -> V,
{
    assert!(c > 0.0, "tail start must be positive");
    integrate(
        |u: f64| {
            if u <= 0.0 {
                V::zero()
            } else {
                f(c / u) * (c / (u * u))
            }
        },
        0.0,
        1.0,
        cfg,
    )
}

/// ∫₀^∞ f over the partition given by ascending `breaks` (first entry 0,
/// last entry positive) plus the tail beyond the last break.
pub fn integrate_half_line<V, F>(f: F, breaks: &[f64], cfg: &QuadConfig) -> Result<QuadResult<V>>
where
    V: QuadValue,
    F: Fn(f64) -> V,
{
    let last = *breaks.last().expect("non-empty breaks");
    let head = integrate_breaks(&f, breaks, cfg)?;
    let tail = integrate_tail(&f, last, cfg)?;
    Ok(QuadResult {
        value: head.value + tail.value,
        error: head.error + tail.error,
        intervals: head.intervals + tail.intervals,
    })
}

/// Sorted, de-duplicated breakpoints 0 < ... ≤ max drawn from `scales`.
pub fn breakpoints(scales: &[f64], max: f64) -> Vec<f64> {
    let mut b: Vec<f64> = scales
        .iter()
        .copied()
        .filter(|x| x.is_finite() && *x > 0.0 && *x < max)
        .collect();
    b.push(0.0);
    b.push(max);
    b.sort_by(f64::total_cmp);
    b.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs().max(1e-300));
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x: f64| x.powi(7) - 3.0 * x * x, 0.0, 2.0, &QuadConfig::default()).unwrap();
        assert!((r.value - (256.0 / 8.0 - 8.0)).abs() < 1e-13);
    }

    #[test]
    fn peaked_integrand() {
        // ∫ 1/(x² + ε²) over [-1, 1] = 2 atan(1/ε)/ε
        let eps = 1e-3;
        let r = integrate(|x: f64| 1.0 / (x * x + eps * eps), -1.0, 1.0, &QuadConfig::default()).unwrap();
        let exact = 2.0 * (1.0 / eps).atan() / eps;
        assert!((r.value - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn half_line_lorentzian() {
        let b = breakpoints(&[0.5, 3.0, -1.0, 3.0], 10.0);
        assert_eq!(b, vec![0.0, 0.5, 3.0, 10.0]);
        let r = integrate_half_line(|x: f64| 1.0 / (1.0 + x * x), &b, &QuadConfig::default()).unwrap();
        assert!((r.value - std::f64::consts::FRAC_PI_2).abs() < 1e-13);
    }

    #[test]
    fn tail_of_lorentzian() {
        let r = integrate_tail(|x: f64| 1.0 / (1.0 + x * x), 1.0, &QuadConfig::default()).unwrap();
        assert!((r.value - std::f64::consts::FRAC_PI_4).abs() < 1e-13);
    }

    #[test]
    fn complex_oscillatory() {
        let r = integrate(
            |x: f64| Complex64::new(0.0, 5.0 * x).exp(),
            0.0,
            std::f64::consts::PI,
            &QuadConfig::default(),
        )
        .unwrap();
        let exact = (Complex64::new(0.0, 5.0 * std::f64::consts::PI).exp() - 1.0) / Complex64::new(0.0, 5.0);
        assert!((r.value - exact).norm() < 1e-13);
    }

    #[test]
    fn interval_budget_exhaustion_is_reported() {
        let cfg = QuadConfig {
            max_intervals: 3,
            ..QuadConfig::default()
        };
        let r = integrate(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, &cfg);
        assert!(matches!(r, Err(Error::QuadratureFailure { .. })));
    }
}
