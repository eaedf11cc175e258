//! Sweep configuration files.

use std::fs;
use std::path::Path;

use qbt_core::damping::{ModelSpec, PhysicalConstants};
use qbt_core::specfun::SeriesControl;
use qbt_core::thermo::{PointOptions, Quantity};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub scale: Scale,
}

impl TGrid {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: String| Err(CliError::Invalid(format!("field `T_grid.{field}`: {why}")));
        if !self.min.is_finite() || self.min < 0.0 {
            return bad("min", format!("must be finite and >= 0, got {}", self.min));
        }
        if !self.max.is_finite() || self.max < self.min {
            return bad("max", format!("must be finite and >= min, got {}", self.max));
        }
        if self.points == 0 {
            return bad("points", "must be at least 1".into());
        }
        if self.scale == Scale::Log && self.min == 0.0 {
            return bad("min", "must be positive for a log grid".into());
        }
        Ok(())
    }

    pub fn temperatures(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let last = (self.points - 1) as f64;
        let mut ts: Vec<f64> = (0..self.points)
            .map(|k| {
                let x = k as f64 / last;
                match self.scale {
                    Scale::Linear => self.min + (self.max - self.min) * x,
                    Scale::Log => self.min * (self.max / self.min).powf(x),
                }
            })
            .collect();
        // pin the endpoints against rounding in powf
        ts[self.points - 1] = self.max;
        ts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub series: SeriesControl,
    pub quad_tol: f64,
    pub cutoff_terms: u64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let p = PointOptions::default();
        Self {
            series: p.series,
            quad_tol: p.quad_tol,
            cutoff_terms: p.cutoff_terms,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub model: ModelSpec,
    #[serde(rename = "T_grid")]
    pub t_grid: TGrid,
    pub outputs: Vec<Quantity>,
    #[serde(default)]
    pub constants: PhysicalConstants,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub classical: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

impl SweepConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.into(),
            source,
        })?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Invalid(message) => CliError::Config {
                path: path.into(),
                message,
            },
            other => other,
        })
    }

    /// Parses and validates; errors name the offending field.
    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                CliError::Invalid(inner.to_string())
            } else {
                CliError::Invalid(format!("field `{path}`: {inner}"))
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.t_grid.validate()?;
        if self.outputs.is_empty() {
            return Err(CliError::Invalid(
                "field `outputs`: at least one field is required".into(),
            ));
        }
        for (k, q) in self.outputs.iter().enumerate() {
            if self.outputs[..k].contains(q) {
                return Err(CliError::Invalid(format!("field `outputs`: `{q}` listed twice")));
            }
            q.check_supported(&self.model.damping_model(), self.classical)
                .map_err(|e| CliError::Invalid(format!("outputs: {}", strip_domain(&e))))?;
        }
        self.constants
            .validate()
            .map_err(|e| CliError::Invalid(format!("field `constants`: {}", strip_domain(&e))))?;
        self.point_options()
            .validate()
            .map_err(|e| CliError::Invalid(format!("field `tolerances`: {}", strip_domain(&e))))?;
        Ok(())
    }

    pub fn point_options(&self) -> PointOptions {
        PointOptions {
            classical: self.classical,
            series: self.tolerances.series,
            quad_tol: self.tolerances.quad_tol,
            cutoff_terms: self.tolerances.cutoff_terms,
            ..PointOptions::default()
        }
    }
}

fn strip_domain(e: &qbt_core::Error) -> String {
    match e {
        qbt_core::Error::Domain(m) => m.clone(),
        other => other.to_string(),
    }
}
