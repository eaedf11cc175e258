//! Aggregation of the thermodynamic quantities at a single temperature.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};

use super::drude::{
    drude_coupling_energy, drude_coupling_free_energy, drude_coupling_free_energy_delta, drude_energy, drude_variances,
};
use super::ohmic::{
    ohmic_coupling_free_energy, ohmic_coupling_free_energy_delta, ohmic_energy, ohmic_position_variance,
    ohmic_velocity_variance,
};
use super::system::system_free_energy;
use super::{
    classical_free_osc_energy, classical_free_osc_free_energy, free_osc_energy, free_osc_free_energy, RegularizedValue,
};
use crate::damping::{DampingModel, DrudeParams, ModelSpec, PhysicalConstants};
use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::specfun::SeriesControl;

/// Thermodynamic members of the second-law inequality at one temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermoPoint {
    #[serde(rename = "T")]
    pub temperature: f64,
    pub e_free: f64,
    pub f_free: f64,
    #[serde(rename = "E_s")]
    pub energy: f64,
    #[serde(rename = "F_cal")]
    pub coupling_free_energy: f64,
    #[serde(rename = "E_cal", skip_serializing_if = "Option::is_none")]
    pub coupling_energy: Option<f64>,
    #[serde(rename = "F_s", skip_serializing_if = "Option::is_none")]
    pub system_free_energy: Option<f64>,
    #[serde(rename = "S_s", skip_serializing_if = "Option::is_none")]
    pub system_entropy: Option<f64>,
    #[serde(rename = "K")]
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PointOptions {
    /// Use the ℏ → 0 formulas.
    pub classical: bool,
    /// Fill ℰ_s.
    pub coupling_energy: bool,
    /// Fill F_s and S_s.
    pub system_free_energy: bool,
    pub series: SeriesControl,
    pub quad_tol: f64,
    /// Matsubara terms (and Λ/ω₀) for divergent Ohmic quantities.
    pub cutoff_terms: u64,
}

impl Default for PointOptions {
    fn default() -> Self {
        Self {
            classical: false,
            coupling_energy: false,
            system_free_energy: false,
            series: SeriesControl::default(),
            quad_tol: 1e-10,
            cutoff_terms: 1_000_000,
        }
    }
}

impl PointOptions {
    pub fn validate(&self) -> Result<()> {
        self.series.validate()?;
        ensure_positive("quad_tol", self.quad_tol)?;
        if self.cutoff_terms < 10 {
            return Err(Error::Domain("cutoff_terms must be at least 10".into()));
        }
        Ok(())
    }
}

fn drude_of(spec: &ModelSpec) -> Result<DrudeParams> {
    spec.drude_params()?.ok_or_else(|| {
        Error::Domain("K and the system free energy are defined for the Drude model only; the Ohmic K diverges".into())
    })
}

/// Fills a [`ThermoPoint`]; K is assembled from the other members.
pub fn evaluate_point(
    spec: &ModelSpec,
    temperature: f64,
    consts: &PhysicalConstants,
    opts: &PointOptions,
) -> Result<ThermoPoint> {
    opts.validate()?;
    ensure_non_negative("T", temperature)?;
    let w = spec.omega_0();
    if opts.classical {
        let e = classical_free_osc_energy(temperature, consts)?;
        let f = classical_free_osc_free_energy(w, temperature, consts)?;
        return Ok(assemble(
            temperature,
            [e, f, e, f],
            opts.coupling_energy.then_some(e),
            opts.system_free_energy.then_some(f),
            None,
        ));
    }
    let p = drude_of(spec)?;
    let e = free_osc_energy(w, temperature, consts)?;
    let f = free_osc_free_energy(w, temperature, consts)?;
    let energy = drude_energy(&p, temperature, consts)?;
    let fc = drude_coupling_free_energy(&p, temperature, consts, &opts.series)?;
    let ec = if opts.coupling_energy {
        Some(drude_coupling_energy(&p, temperature, consts, opts.quad_tol)?)
    } else {
        None
    };
    let (fs, ss) = if opts.system_free_energy {
        if temperature == 0.0 {
            (Some(energy), Some(0.0))
        } else {
            let r = system_free_energy(&p, temperature, consts, opts.quad_tol)?;
            (Some(r.free_energy), Some(r.entropy))
        }
    } else {
        (None, None)
    };
    Ok(assemble(temperature, [e, f, energy, fc], ec, fs, ss))
}

fn assemble(t: f64, [e, f, energy, fc]: [f64; 4], ec: Option<f64>, fs: Option<f64>, ss: Option<f64>) -> ThermoPoint {
    ThermoPoint {
        temperature: t,
        e_free: e,
        f_free: f,
        energy,
        coupling_free_energy: fc,
        coupling_energy: ec,
        system_free_energy: fs,
        system_entropy: ss,
        gap: fc - f - energy + e,
    }
}

/// A field that can be requested in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    EFree,
    FFree,
    Energy,
    CouplingFreeEnergy,
    CouplingEnergy,
    SystemFreeEnergy,
    SystemEntropy,
    Gap,
    PositionVariance,
    VelocityVariance,
    CouplingFreeEnergyDelta,
}

impl Quantity {
    pub const ALL: [Quantity; 11] = [
        Self::EFree,
        Self::FFree,
        Self::Energy,
        Self::CouplingFreeEnergy,
        Self::CouplingEnergy,
        Self::SystemFreeEnergy,
        Self::SystemEntropy,
        Self::Gap,
        Self::PositionVariance,
        Self::VelocityVariance,
        Self::CouplingFreeEnergyDelta,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::EFree => "e_free",
            Self::FFree => "f_free",
            Self::Energy => "E_s",
            Self::CouplingFreeEnergy => "F_cal",
            Self::CouplingEnergy => "E_cal",
            Self::SystemFreeEnergy => "F_s",
            Self::SystemEntropy => "S_s",
            Self::Gap => "K",
            Self::PositionVariance => "q2",
            Self::VelocityVariance => "v2",
            Self::CouplingFreeEnergyDelta => "dF_cal",
        }
    }

    /// Rejects combinations that have no finite or regularized value.
    pub fn check_supported(&self, model: &DampingModel, classical: bool) -> Result<()> {
        if classical || matches!(model, DampingModel::Drude { .. }) {
            return Ok(());
        }
        let why = match self {
            Self::Gap => "K diverges for the Ohmic model",
            Self::CouplingEnergy => "E_cal diverges for the Ohmic model",
            Self::SystemFreeEnergy | Self::SystemEntropy => "F_s and S_s are available for the Drude model only",
            _ => return Ok(()),
        };
        Err(Error::Domain(format!("field `{}`: {why}", self.name())))
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Quantity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|q| q.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown field `{s}`")))
    }
}

impl Serialize for Quantity {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Quantity {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Value of a requested field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldValue {
    Number(f64),
    Regularized(RegularizedValue),
    /// No value in this mode (the classical entropy).
    Absent,
}

impl FieldValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Self::Number(v) => Some(*v),
            Self::Regularized(r) => Some(r.value),
            Self::Absent => None,
        }
    }
}

impl Serialize for FieldValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Number(v) => s.serialize_f64(*v),
            Self::Regularized(r) => r.serialize(s),
            Self::Absent => s.serialize_none(),
        }
    }
}

/// Evaluates one field for any continuum model. Ohmic divergent fields come
/// back as [`FieldValue::Regularized`].
pub fn evaluate_quantity(
    spec: &ModelSpec,
    q: Quantity,
    temperature: f64,
    consts: &PhysicalConstants,
    opts: &PointOptions,
) -> Result<FieldValue> {
    opts.validate()?;
    ensure_non_negative("T", temperature)?;
    let model = spec.damping_model();
    q.check_supported(&model, opts.classical)?;
    let w = spec.omega_0();
    use FieldValue::{Number, Regularized};
    if opts.classical {
        let e = classical_free_osc_energy(temperature, consts)?;
        let f = classical_free_osc_free_energy(w, temperature, consts)?;
        return Ok(match q {
            Quantity::EFree | Quantity::Energy | Quantity::CouplingEnergy => Number(e),
            Quantity::FFree | Quantity::CouplingFreeEnergy | Quantity::SystemFreeEnergy => Number(f),
            Quantity::CouplingFreeEnergyDelta => Number(f),
            Quantity::SystemEntropy => FieldValue::Absent,
            // coupled and free members coincide classically
            Quantity::Gap => Number(0.0),
            Quantity::PositionVariance => Number(e / (consts.mass * w * w)),
            Quantity::VelocityVariance => Number(e / consts.mass),
        });
    }
    match q {
        Quantity::EFree => return Ok(Number(free_osc_energy(w, temperature, consts)?)),
        Quantity::FFree => return Ok(Number(free_osc_free_energy(w, temperature, consts)?)),
        _ => {}
    }
    match model {
        DampingModel::Drude { .. } => {
            let p = drude_of(spec)?;
            let v = match q {
                Quantity::Energy => drude_energy(&p, temperature, consts)?,
                Quantity::CouplingFreeEnergy => drude_coupling_free_energy(&p, temperature, consts, &opts.series)?,
                Quantity::CouplingFreeEnergyDelta => {
                    drude_coupling_free_energy_delta(&p, temperature, consts, &opts.series)?
                }
                Quantity::CouplingEnergy => drude_coupling_energy(&p, temperature, consts, opts.quad_tol)?,
                Quantity::PositionVariance => drude_variances(&p, temperature, consts)?.0,
                Quantity::VelocityVariance => drude_variances(&p, temperature, consts)?.1,
                Quantity::Gap => evaluate_point(spec, temperature, consts, opts)?.gap,
                Quantity::SystemFreeEnergy | Quantity::SystemEntropy => {
                    let pt = evaluate_point(
                        spec,
                        temperature,
                        consts,
                        &PointOptions {
                            system_free_energy: true,
                            ..*opts
                        },
                    )?;
                    if q == Quantity::SystemFreeEnergy {
                        pt.system_free_energy.unwrap_or(f64::NAN)
                    } else {
                        pt.system_entropy.unwrap_or(f64::NAN)
                    }
                }
                Quantity::EFree | Quantity::FFree => unreachable!(),
            };
            Ok(Number(v))
        }
        DampingModel::Ohmic { gamma_o } => {
            let n = opts.cutoff_terms;
            let needs_positive_t = matches!(q, Quantity::Energy | Quantity::VelocityVariance);
            if needs_positive_t && temperature == 0.0 {
                return Err(Error::Domain(format!(
                    "field `{}`: the Ohmic Matsubara regularization needs T > 0",
                    q.name()
                )));
            }
            Ok(match q {
                Quantity::Energy => Regularized(ohmic_energy(w, gamma_o, temperature, consts, n)?),
                Quantity::VelocityVariance => Regularized(ohmic_velocity_variance(w, gamma_o, temperature, consts, n)?),
                Quantity::CouplingFreeEnergy => Regularized(ohmic_coupling_free_energy(
                    w,
                    gamma_o,
                    temperature,
                    consts,
                    &opts.series,
                    n,
                )?),
                Quantity::CouplingFreeEnergyDelta => Number(ohmic_coupling_free_energy_delta(
                    w,
                    gamma_o,
                    temperature,
                    consts,
                    &opts.series,
                )?),
                Quantity::PositionVariance => Number(ohmic_position_variance(w, gamma_o, temperature, consts)?),
                _ => unreachable!("rejected by check_supported"),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn drude(w0: f64, om: f64, g: f64) -> ModelSpec {
        ModelSpec::Drude(DrudeParams::new(w0, om, g).unwrap())
    }

    #[test]
    fn gap_is_assembled_exactly() {
        let c = PhysicalConstants::default();
        let pt = evaluate_point(&drude(1.0, 1.0, 1.5), 1.0, &c, &PointOptions::default()).unwrap();
        assert_eq!(pt.gap, pt.coupling_free_energy - pt.f_free - pt.energy + pt.e_free);
        assert!(pt.gap > 0.0);
    }

    #[test]
    fn zero_temperature_references() {
        let c = PhysicalConstants::default();
        let spec = drude(1.0, 5.0, 4.0);
        let pt = evaluate_point(&spec, 0.0, &c, &PointOptions::default()).unwrap();
        assert_eq!(pt.e_free, pt.f_free);
        assert!((pt.e_free - 0.5 * spec.omega_0()).abs() < 1e-15);
    }

    #[test]
    fn weak_coupling_has_no_gap() {
        let c = PhysicalConstants::default();
        let pt = evaluate_point(&drude(1.0, 2.0, 1e-8), 0.5, &c, &PointOptions::default()).unwrap();
        assert!(pt.gap.abs() < 1e-7);
        assert!((pt.energy - pt.e_free).abs() < 1e-7);
    }

    #[test]
    fn classical_gap_vanishes() {
        let c = PhysicalConstants::default();
        let opts = PointOptions {
            classical: true,
            coupling_energy: true,
            system_free_energy: true,
            ..Default::default()
        };
        for t in [0.01, 1.0, 37.0] {
            let pt = evaluate_point(&drude(1.0, 5.0, 4.0), t, &c, &opts).unwrap();
            assert_eq!(pt.gap, 0.0);
            assert_eq!(pt.system_entropy, None);
        }
    }

    #[test]
    fn ohmic_point_is_rejected() {
        let spec = ModelSpec::Physical {
            model: DampingModel::ohmic(1.0).unwrap(),
            omega_0: 1.0,
        };
        let c = PhysicalConstants::default();
        assert!(evaluate_point(&spec, 1.0, &c, &PointOptions::default()).is_err());
        let err = evaluate_quantity(&spec, Quantity::Gap, 1.0, &c, &PointOptions::default()).unwrap_err();
        assert!(err.to_string().contains("field `K`"));
        let v = evaluate_quantity(&spec, Quantity::VelocityVariance, 1.0, &c, &PointOptions::default()).unwrap();
        assert!(matches!(v, FieldValue::Regularized(r) if r.divergent));
    }

    #[test]
    fn quantity_names_round_trip() {
        for q in Quantity::ALL {
            assert_eq!(q.name().parse::<Quantity>().unwrap(), q);
        }
        assert!("bogus".parse::<Quantity>().is_err());
    }

    #[test]
    fn serialized_field_order() {
        let c = PhysicalConstants::default();
        let opts = PointOptions {
            system_free_energy: true,
            ..Default::default()
        };
        let pt = evaluate_point(&drude(1.0, 1.0, 4.0), 0.4, &c, &opts).unwrap();
        let s = serde_json::to_string(&pt).unwrap();
        let keys: Vec<&str> = [
            "\"T\"",
            "\"e_free\"",
            "\"f_free\"",
            "\"E_s\"",
            "\"F_cal\"",
            "\"F_s\"",
            "\"S_s\"",
            "\"K\"",
        ]
        .to_vec();
        let pos: Vec<usize> = keys.iter().map(|k| s.find(k).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]), "{s}");
    }
}
