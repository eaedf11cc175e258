//! Bath descriptions: spectral densities, damping kernels and the Drude
//! (w0, Ω, γ) parametrization.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};

/// ℏ, k_B and the system mass M.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalConstants {
    pub hbar: f64,
    #[serde(rename = "k_B")]
    pub k_b: f64,
    #[serde(rename = "M")]
    pub mass: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            k_b: 1.0,
            mass: 1.0,
        }
    }
}

impl PhysicalConstants {
    pub fn new(hbar: f64, k_b: f64, mass: f64) -> Result<Self> {
        let c = Self { hbar, k_b, mass };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("hbar", self.hbar)?;
        ensure_positive("k_B", self.k_b)?;
        ensure_positive("M", self.mass)
    }

    /// 1/(k_B T); T must be positive.
    pub fn beta(&self, temperature: f64) -> Result<f64> {
        ensure_positive("T", temperature)?;
        Ok(1.0 / (self.k_b * temperature))
    }

    pub fn beta_hbar(&self, temperature: f64) -> Result<f64> {
        Ok(self.beta(temperature)? * self.hbar)
    }
}

/// Continuum bath description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DampingModel {
    Drude { gamma_o: f64, omega_d: f64 },
    Ohmic { gamma_o: f64 },
}

impl DampingModel {
    pub fn drude(gamma_o: f64, omega_d: f64) -> Result<Self> {
        ensure_positive("gamma_o", gamma_o)?;
        ensure_positive("omega_d", omega_d)?;
        Ok(Self::Drude { gamma_o, omega_d })
    }

    pub fn ohmic(gamma_o: f64) -> Result<Self> {
        ensure_positive("gamma_o", gamma_o)?;
        Ok(Self::Ohmic { gamma_o })
    }

    pub fn gamma_o(&self) -> f64 {
        match *self {
            Self::Drude { gamma_o, .. } | Self::Ohmic { gamma_o } => gamma_o,
        }
    }
}

/// J(ω): Mγ_oω (Ohmic), Mγ_oωω_d²/(ω²+ω_d²) (Drude).
pub fn spectral_density(model: &DampingModel, omega: f64, consts: &PhysicalConstants) -> Result<f64> {
    ensure_non_negative("omega", omega)?;
    Ok(match *model {
        DampingModel::Ohmic { gamma_o } => consts.mass * gamma_o * omega,
        DampingModel::Drude { gamma_o, omega_d } => {
            consts.mass * gamma_o * omega * omega_d * omega_d / (omega * omega + omega_d * omega_d)
        }
    })
}

/// Fourier–Laplace transform γ̃(ω) of the damping kernel.
pub fn gamma_tilde(model: &DampingModel, omega: Complex64) -> Result<Complex64> {
    match *model {
        DampingModel::Ohmic { gamma_o } => Ok(Complex64::new(gamma_o, 0.0)),
        DampingModel::Drude { gamma_o, omega_d } => {
            let den = Complex64::new(omega_d, 0.0) - Complex64::i() * omega;
            if den.norm() <= 1e-14 * omega_d {
                return Err(Error::PoleArgument(format!("gamma_tilde at ω = {omega}")));
            }
            Ok(gamma_o * omega_d / den)
        }
    }
}

/// dγ̃/dω.
pub(crate) fn gamma_tilde_derivative(model: &DampingModel, omega: Complex64) -> Complex64 {
    match *model {
        DampingModel::Ohmic { .. } => Complex64::new(0.0, 0.0),
        DampingModel::Drude { gamma_o, omega_d } => {
            let den = Complex64::new(omega_d, 0.0) - Complex64::i() * omega;
            Complex64::i() * gamma_o * omega_d / (den * den)
        }
    }
}

/// Value of the time-domain kernel γ(t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelValue {
    Value(f64),
    /// weight·δ(t); not representable as a number.
    DeltaDistribution {
        weight: f64,
    },
}

pub fn gamma_kernel(model: &DampingModel, t: f64) -> Result<KernelValue> {
    ensure_non_negative("t", t)?;
    Ok(match *model {
        DampingModel::Drude { gamma_o, omega_d } => KernelValue::Value(gamma_o * omega_d * (-omega_d * t).exp()),
        DampingModel::Ohmic { gamma_o } => KernelValue::DeltaDistribution { weight: 2.0 * gamma_o },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Overdamped,
    Underdamped,
    Critical,
}

/// Relative window |γ/2 − w0| ≤ CRITICAL_TOL·w0 classified as critical.
pub const CRITICAL_TOL: f64 = 1e-10;

/// Drude model in the (w0, Ω, γ) parametrization, in which the
/// susceptibility poles are −iΩ, −iz₁, −iz₂ with z₁ + z₂ = γ, z₁z₂ = w0².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrudeParams {
    w0: f64,
    big_omega: f64,
    gamma: f64,
    omega_0_sq: f64,
    omega_d: f64,
    gamma_o: f64,
    w1: f64,
    branch: Branch,
}

impl DrudeParams {
    pub fn new(w0: f64, big_omega: f64, gamma: f64) -> Result<Self> {
        ensure_positive("w0", w0)?;
        ensure_positive("Omega", big_omega)?;
        ensure_positive("gamma", gamma)?;
        let omega_d = big_omega + gamma;
        let omega_0_sq = w0 * w0 * big_omega / omega_d;
        let gamma_o = gamma * (big_omega * omega_d + w0 * w0) / (omega_d * omega_d);
        let half = 0.5 * gamma;
        let branch = if (half - w0).abs() <= CRITICAL_TOL * w0 {
            Branch::Critical
        } else if half > w0 {
            Branch::Overdamped
        } else {
            Branch::Underdamped
        };
        // (γ/2)² − w0² factored to avoid cancellation
        let w1 = match branch {
            Branch::Critical => 0.0,
            _ => ((half - w0) * (half + w0)).abs().sqrt(),
        };
        Ok(Self {
            w0,
            big_omega,
            gamma,
            omega_0_sq,
            omega_d,
            gamma_o,
            w1,
            branch,
        })
    }

    /// Every (w0, Ω, γ) reproducing the physical triple (ω₀, ω_d, γ_o).
    ///
    /// Ω is a real root of x³ − ω_d x² + (ω₀² + γ_oω_d)x − ω₀²ω_d in
    /// (0, ω_d). In the overdamped regime all three roots qualify; the
    /// candidates are ordered by decreasing Ω.
    pub fn from_physical(omega_0: f64, omega_d: f64, gamma_o: f64) -> Result<Vec<Self>> {
        ensure_positive("omega_0", omega_0)?;
        ensure_positive("omega_d", omega_d)?;
        ensure_positive("gamma_o", gamma_o)?;
        let w2 = omega_0 * omega_0;
        let c1 = w2 + gamma_o * omega_d;
        let c0 = w2 * omega_d;
        let p = |x: f64| ((x - omega_d) * x + c1) * x - c0;
        let dp = |x: f64| (3.0 * x - 2.0 * omega_d) * x + c1;
        let polish = |mut x: f64| {
            for _ in 0..8 {
                let d = dp(x);
                if d == 0.0 {
                    break;
                }
                let step = p(x) / d;
                let next = x - step;
                if !(next > 0.0 && next < omega_d) {
                    break;
                }
                x = next;
                if step.abs() <= 1e-16 * x {
                    break;
                }
            }
            x
        };
        // p(0) < 0 < p(ω_d) brackets a root
        let (mut lo, mut hi) = (0.0, omega_d);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if p(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        let r1 = polish(0.5 * (lo + hi));
        // remaining quadratic x² + (r1 − ω_d)x + c0/r1
        let b = r1 - omega_d;
        let c = c0 / r1;
        let disc = b * b - 4.0 * c;
        let mut roots = vec![r1];
        if disc >= 0.0 {
            let s = disc.sqrt();
            let big = if b < 0.0 { 0.5 * (-b + s) } else { 0.5 * (-b - s) };
            for r in [big, c / big] {
                if r > 0.0 && r < omega_d {
                    roots.push(polish(r));
                }
            }
        }
        roots.sort_by(|a, b| b.total_cmp(a));
        roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * *b);
        let mut out = Vec::new();
        for big_omega in roots {
            let gamma = omega_d - big_omega;
            if gamma <= 0.0 {
                continue;
            }
            let w0 = (w2 * omega_d / big_omega).sqrt();
            out.push(Self::new(w0, big_omega, gamma)?);
        }
        if out.is_empty() {
            return Err(Error::Domain(format!(
                "no Drude parametrization for omega_0 = {omega_0}, omega_d = {omega_d}, gamma_o = {gamma_o}"
            )));
        }
        Ok(out)
    }

    pub fn w0(&self) -> f64 {
        self.w0
    }
    pub fn big_omega(&self) -> f64 {
        self.big_omega
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn omega_0(&self) -> f64 {
        self.omega_0_sq.sqrt()
    }
    pub fn omega_0_sq(&self) -> f64 {
        self.omega_0_sq
    }
    pub fn omega_d(&self) -> f64 {
        self.omega_d
    }
    pub fn gamma_o(&self) -> f64 {
        self.gamma_o
    }
    /// 𝐰₁ (underdamped) or 𝐰̄₁ (overdamped); zero when critical.
    pub fn w1(&self) -> f64 {
        self.w1
    }
    pub fn branch(&self) -> Branch {
        self.branch
    }

    /// √((γ/2)² − w0²) on the principal branch: 𝐰̄₁ overdamped, i𝐰₁ underdamped.
    pub fn w1_bar_complex(&self) -> Complex64 {
        match self.branch {
            Branch::Overdamped => Complex64::new(self.w1, 0.0),
            Branch::Underdamped => Complex64::new(0.0, self.w1),
            Branch::Critical => Complex64::new(0.0, 0.0),
        }
    }

    pub fn model(&self) -> DampingModel {
        DampingModel::Drude {
            gamma_o: self.gamma_o,
            omega_d: self.omega_d,
        }
    }

    /// Same parameters with w0 and Ω scaled; used by confluent-limit
    /// evaluation.
    pub(crate) fn scaled(&self, w0_factor: f64, omega_factor: f64) -> Result<Self> {
        Self::new(self.w0 * w0_factor, self.big_omega * omega_factor, self.gamma)
    }
}

/// A continuum model together with its bare oscillator frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModelSpec", into = "RawModelSpec")]
pub enum ModelSpec {
    Physical { model: DampingModel, omega_0: f64 },
    Drude(DrudeParams),
}

impl ModelSpec {
    pub fn omega_0(&self) -> f64 {
        match self {
            Self::Physical { omega_0, .. } => *omega_0,
            Self::Drude(p) => p.omega_0(),
        }
    }

    pub fn damping_model(&self) -> DampingModel {
        match self {
            Self::Physical { model, .. } => *model,
            Self::Drude(p) => p.model(),
        }
    }

    /// Drude parameters if the model is Drude (first candidate of the
    /// inverse map for the physical form).
    pub fn drude_params(&self) -> Result<Option<DrudeParams>> {
        match self {
            Self::Drude(p) => Ok(Some(*p)),
            Self::Physical {
                model: DampingModel::Drude { gamma_o, omega_d },
                omega_0,
            } => Ok(DrudeParams::from_physical(*omega_0, *omega_d, *gamma_o)?
                .into_iter()
                .next()),
            Self::Physical { .. } => Ok(None),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModelSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    parametrization: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma_o: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_d: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    w0: Option<f64>,
    #[serde(rename = "Omega", skip_serializing_if = "Option::is_none")]
    big_omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
}

fn field(name: &str, value: Option<f64>) -> Result<f64> {
    let v = value.ok_or_else(|| Error::Domain(format!("field `{name}`: missing")))?;
    ensure_positive(name, v)
        .map_err(|_| Error::Domain(format!("field `{name}`: must be positive and finite, got {v}")))?;
    Ok(v)
}

fn forbid(name: &str, value: Option<f64>, context: &str) -> Result<()> {
    match value {
        Some(_) => Err(Error::Domain(format!("field `{name}`: not allowed for {context}"))),
        None => Ok(()),
    }
}

impl TryFrom<RawModelSpec> for ModelSpec {
    type Error = Error;

    fn try_from(raw: RawModelSpec) -> Result<Self> {
        match (raw.model.as_deref(), raw.parametrization.as_deref()) {
            (Some(_), Some(_)) => Err(Error::Domain(
                "fields `model` and `parametrization` are mutually exclusive".into(),
            )),
            (None, Some("w0-Omega-gamma")) => {
                for (n, v) in [
                    ("omega_0", raw.omega_0),
                    ("gamma_o", raw.gamma_o),
                    ("omega_d", raw.omega_d),
                ] {
                    forbid(n, v, "the w0-Omega-gamma parametrization")?;
                }
                Ok(Self::Drude(DrudeParams::new(
                    field("w0", raw.w0)?,
                    field("Omega", raw.big_omega)?,
                    field("gamma", raw.gamma)?,
                )?))
            }
            (None, Some(other)) => Err(Error::Domain(format!(
                "field `parametrization`: unknown value `{other}` (expected `w0-Omega-gamma`)"
            ))),
            (Some(kind), None) => {
                for (n, v) in [("w0", raw.w0), ("Omega", raw.big_omega), ("gamma", raw.gamma)] {
                    forbid(n, v, "a physical model")?;
                }
                let omega_0 = field("omega_0", raw.omega_0)?;
                let gamma_o = field("gamma_o", raw.gamma_o)?;
                let model = match kind {
                    "drude" => DampingModel::drude(gamma_o, field("omega_d", raw.omega_d)?)?,
                    "ohmic" => {
                        forbid("omega_d", raw.omega_d, "the ohmic model")?;
                        DampingModel::ohmic(gamma_o)?
                    }
                    other => {
                        return Err(Error::Domain(format!(
                            "field `model`: unknown value `{other}` (expected `drude` or `ohmic`)"
                        )))
                    }
                };
                Ok(Self::Physical { model, omega_0 })
            }
            (None, None) => Err(Error::Domain(
                "one of the fields `model` or `parametrization` is required".into(),
            )),
        }
    }
}

impl From<ModelSpec> for RawModelSpec {
    fn from(spec: ModelSpec) -> Self {
        match spec {
            ModelSpec::Drude(p) => Self {
                parametrization: Some("w0-Omega-gamma".into()),
                w0: Some(p.w0),
                big_omega: Some(p.big_omega),
                gamma: Some(p.gamma),
                ..Self::default()
            },
            ModelSpec::Physical { model, omega_0 } => match model {
                DampingModel::Drude { gamma_o, omega_d } => Self {
                    model: Some("drude".into()),
                    omega_0: Some(omega_0),
                    gamma_o: Some(gamma_o),
                    omega_d: Some(omega_d),
                    ..Self::default()
                },
                DampingModel::Ohmic { gamma_o } => Self {
                    model: Some("ohmic".into()),
                    omega_0: Some(omega_0),
                    gamma_o: Some(gamma_o),
                    ..Self::default()
                },
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drude_map_reference_values() {
        let p = DrudeParams::new(1.0, 1.0, 1.5).unwrap();
        assert!((p.omega_d() - 2.5).abs() < 1e-15);
        assert!((p.omega_0_sq() - 0.4).abs() < 1e-15);
        assert!((p.gamma_o() - 0.84).abs() < 1e-15);
        assert_eq!(p.branch(), Branch::Underdamped);

        let q = DrudeParams::new(1.0, 5.0, 4.0).unwrap();
        assert_eq!(q.omega_d(), 9.0);
        assert!((q.omega_0_sq() - 5.0 / 9.0).abs() < 1e-15);
        assert!((q.gamma_o() - 4.0 * 46.0 / 81.0).abs() < 1e-15);
        assert_eq!(q.branch(), Branch::Overdamped);
        assert!((q.w1() - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn uncoupled_limit() {
        let p = DrudeParams::new(1.3, 2.0, 1e-12).unwrap();
        assert!((p.omega_0() - 1.3).abs() < 1e-11);
        assert!((p.omega_d() - 2.0).abs() < 1e-11);
        assert!(p.gamma_o() < 1e-11);
    }

    #[test]
    fn critical_branch() {
        let p = DrudeParams::new(1.0, 3.0, 2.0).unwrap();
        assert_eq!(p.branch(), Branch::Critical);
        assert_eq!(p.w1(), 0.0);
        let q = DrudeParams::new(1.0, 3.0, 2.0 + 1e-6).unwrap();
        assert_eq!(q.branch(), Branch::Overdamped);
    }

    #[test]
    fn inverse_map_recovers_both_branches() {
        for (w0, om, g) in [(1.0, 1.0, 1.5), (1.0, 5.0, 4.0), (0.3, 40.0, 0.01), (2.0, 0.5, 9.0)] {
            let p = DrudeParams::new(w0, om, g).unwrap();
            let cands = DrudeParams::from_physical(p.omega_0(), p.omega_d(), p.gamma_o()).unwrap();
            let hit = cands.iter().any(|c| {
                (c.w0() - w0).abs() < 1e-12 * w0
                    && (c.big_omega() - om).abs() < 1e-12 * om
                    && (c.gamma() - g).abs() < 1e-12 * g
            });
            assert!(hit, "{cands:?}");
            for c in &cands {
                assert!((c.omega_0() - p.omega_0()).abs() < 1e-12 * p.omega_0());
                assert!((c.gamma_o() - p.gamma_o()).abs() < 1e-12 * p.gamma_o());
            }
        }
    }

    #[test]
    fn spectral_density_values() {
        let c = PhysicalConstants::default();
        let m = DampingModel::drude(0.7, 3.0).unwrap();
        assert_eq!(spectral_density(&m, 0.0, &c).unwrap(), 0.0);
        assert!((spectral_density(&m, 3.0, &c).unwrap() - 0.7 * 3.0 / 2.0).abs() < 1e-15);
        let small = spectral_density(&m, 1e-4, &c).unwrap();
        assert!((small / (0.7 * 1e-4) - 1.0).abs() < 1e-8);
        assert!(spectral_density(&m, -1.0, &c).is_err());
    }

    #[test]
    fn gamma_tilde_values() {
        let m = DampingModel::drude(0.7, 3.0).unwrap();
        assert!((gamma_tilde(&m, Complex64::new(0.0, 0.0)).unwrap() - 0.7).norm() < 1e-15);
        assert!(gamma_tilde(&m, Complex64::new(1e9, 0.0)).unwrap().norm() < 1e-8);
        assert!(matches!(
            gamma_tilde(&m, Complex64::new(0.0, -3.0)),
            Err(Error::PoleArgument(_))
        ));
        let o = DampingModel::ohmic(0.7).unwrap();
        assert_eq!(
            gamma_tilde(&o, Complex64::new(5.0, 1.0)).unwrap(),
            Complex64::new(0.7, 0.0)
        );
        // real axis: Re γ̃ = J/(Mω), Im γ̃ = γ_oω_dω/(ω²+ω_d²)
        let c = PhysicalConstants::default();
        for w in [0.1, 1.0, 7.0] {
            let g = gamma_tilde(&m, Complex64::new(w, 0.0)).unwrap();
            assert!((g.re - spectral_density(&m, w, &c).unwrap() / w).abs() < 1e-14);
            assert!((g.im - 0.7 * 3.0 * w / (w * w + 9.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn kernel_values() {
        let m = DampingModel::drude(0.7, 3.0).unwrap();
        assert!(matches!(gamma_kernel(&m, 0.0).unwrap(), KernelValue::Value(v) if (v - 2.1).abs() < 1e-15));
        assert_eq!(
            gamma_kernel(&DampingModel::ohmic(0.7).unwrap(), 1.0).unwrap(),
            KernelValue::DeltaDistribution { weight: 1.4 }
        );
        assert!(gamma_kernel(&m, -1.0).is_err());
    }

    #[test]
    fn model_spec_json_round_trip() {
        let drude: ModelSpec =
            serde_json::from_str(r#"{"parametrization":"w0-Omega-gamma","w0":1,"Omega":5,"gamma":4}"#).unwrap();
        let back = serde_json::to_string(&drude).unwrap();
        assert_eq!(serde_json::from_str::<ModelSpec>(&back).unwrap(), drude);
        let ohmic: ModelSpec = serde_json::from_str(r#"{"model":"ohmic","gamma_o":0.5,"omega_0":1}"#).unwrap();
        assert_eq!(ohmic.damping_model(), DampingModel::Ohmic { gamma_o: 0.5 });
        assert!(ohmic.drude_params().unwrap().is_none());
        let phys: ModelSpec =
            serde_json::from_str(r#"{"model":"drude","gamma_o":0.84,"omega_d":2.5,"omega_0":0.6324555320336759}"#)
                .unwrap();
        let p = phys.drude_params().unwrap().unwrap();
        assert!((p.gamma_o() - 0.84).abs() < 1e-12);
    }

    #[test]
    fn model_spec_field_errors() {
        let err = serde_json::from_str::<ModelSpec>(r#"{"model":"drude","gamma_o":-1,"omega_d":2,"omega_0":1}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("gamma_o"), "{err}");
        let err = serde_json::from_str::<ModelSpec>(r#"{"model":"drude","gamma_o":1,"omega_0":1}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("omega_d") && err.contains("missing"), "{err}");
        let err = serde_json::from_str::<ModelSpec>(r#"{"model":"lorentz","gamma_o":1,"omega_0":1}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("lorentz"), "{err}");
        assert!(serde_json::from_str::<ModelSpec>(r#"{"model":"ohmic","gamma_o":1,"omega_0":1,"w0":3}"#).is_err());
    }

    #[test]
    fn constants_validation() {
        assert!(PhysicalConstants::new(1.0, 0.0, 1.0).is_err());
        let c: PhysicalConstants = serde_json::from_str(r#"{"hbar":2}"#).unwrap();
        assert_eq!(c, PhysicalConstants::new(2.0, 1.0, 1.0).unwrap());
        assert!((c.beta_hbar(4.0).unwrap() - 0.5).abs() < 1e-16);
    }
}
