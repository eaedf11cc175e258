//! Subcommand implementations. Each returns the bytes to emit so that
//! output is assembled in input order regardless of scheduling.

use std::path::Path;

use log::{debug, info};
use qbt_core::damping::{DrudeParams, PhysicalConstants};
use qbt_core::discrete_bath::{self, BathPoint, DiscreteBath, NormalModes};
use qbt_core::thermo::{evaluate_quantity, second_law_gap_drude, FieldValue};
use qbt_core::verify::{self, CheckResult, Level, References};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::{Format, SweepConfig};
use crate::error::{CliError, Result};
use crate::output::{csv_bytes, ensure_finite, fmt_f64, json_bytes};

pub const FIGURE1_POINTS: usize = 200;
pub const FIGURE1_RANGE: (f64, f64) = (0.01, 50.0);

/// K/(ℏ𝐰₀) for the four reference curves on a log grid, in units
/// ℏ = k_B = 𝐰₀ = M = 1.
pub fn figure1(refs: &References) -> Result<Vec<u8>> {
    let c = PhysicalConstants::default();
    let sets = refs
        .fig1_sets
        .iter()
        .map(|&(om, g)| DrudeParams::new(1.0, om, g))
        .collect::<qbt_core::Result<Vec<_>>>()?;
    let grid = verify::log_grid(FIGURE1_RANGE.0, FIGURE1_RANGE.1, FIGURE1_POINTS);
    let rows = grid
        .par_iter()
        .map(|&t| {
            let mut row = vec![fmt_f64(t)];
            for p in &sets {
                let k = second_law_gap_drude(p, t, &c).map_err(|source| CliError::Point { temperature: t, source })?;
                row.push(fmt_f64(ensure_finite("K", k / (c.hbar * p.w0()))?));
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut header = vec!["T".to_string()];
    header.extend((1..=sets.len()).map(|k| format!("K_over_hw0_set{k}")));
    csv_bytes(&header, &rows)
}

/// One row per temperature; fields in the order requested.
pub fn sweep(cfg: &SweepConfig, format: Format) -> Result<Vec<u8>> {
    let opts = cfg.point_options();
    let temps = cfg.t_grid.temperatures();
    info!("sweep over {} temperatures, {} fields", temps.len(), cfg.outputs.len());
    let records: Vec<Vec<FieldValue>> = temps
        .par_iter()
        .map(|&t| {
            debug!("evaluating T = {t}");
            cfg.outputs
                .iter()
                .map(|&q| {
                    let v = evaluate_quantity(&cfg.model, q, t, &cfg.constants, &opts)
                        .map_err(|source| CliError::Point { temperature: t, source })?;
                    if let Some(x) = v.as_f64() {
                        ensure_finite(q.name(), x)?;
                    }
                    Ok(v)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    match format {
        Format::Csv => sweep_csv(cfg, &temps, &records),
        Format::Json => sweep_json(cfg, &temps, &records),
    }
}

fn sweep_csv(cfg: &SweepConfig, temps: &[f64], records: &[Vec<FieldValue>]) -> Result<Vec<u8>> {
    // Divergent fields carry their cutoff in a companion column.
    let divergent: Vec<bool> = (0..cfg.outputs.len())
        .map(|k| {
            records
                .iter()
                .any(|r| matches!(r[k], FieldValue::Regularized(v) if v.divergent))
        })
        .collect();
    let mut header = vec!["T".to_string()];
    for (q, &d) in cfg.outputs.iter().zip(&divergent) {
        header.push(q.name().to_string());
        if d {
            header.push(format!("{}_cutoff_terms", q.name()));
        }
    }
    let rows: Vec<Vec<String>> = temps
        .iter()
        .zip(records)
        .map(|(&t, r)| {
            let mut row = vec![fmt_f64(t)];
            for (v, &d) in r.iter().zip(&divergent) {
                row.push(v.as_f64().map(fmt_f64).unwrap_or_default());
                if d {
                    row.push(match v {
                        FieldValue::Regularized(v) => v.cutoff_terms.to_string(),
                        _ => String::new(),
                    });
                }
            }
            row
        })
        .collect();
    csv_bytes(&header, &rows)
}

fn sweep_json(cfg: &SweepConfig, temps: &[f64], records: &[Vec<FieldValue>]) -> Result<Vec<u8>> {
    let rows: Vec<Value> = temps
        .iter()
        .zip(records)
        .map(|(&t, r)| {
            let mut m = Map::new();
            m.insert("T".into(), t.into());
            for (q, v) in cfg.outputs.iter().zip(r) {
                m.insert(q.name().into(), serde_json::to_value(v)?);
            }
            Ok(Value::Object(m))
        })
        .collect::<Result<_>>()?;
    #[derive(Serialize)]
    struct Report<'a> {
        config: &'a SweepConfig,
        records: Vec<Value>,
    }
    json_bytes(&Report {
        config: cfg,
        records: rows,
    })
}

#[derive(Debug, Serialize)]
pub struct DiscreteReport {
    pub bath: DiscreteBath,
    pub normal_modes: ModesReport,
    pub interlacing: bool,
    pub points: Vec<BathPoint>,
}

#[derive(Debug, Serialize)]
pub struct ModesReport {
    pub omega_bar: Vec<f64>,
    pub system_weight: Vec<f64>,
    /// Index and relative separation of the first near-coincident pair.
    pub near_degenerate: Option<(usize, f64)>,
}

impl From<&NormalModes> for ModesReport {
    fn from(m: &NormalModes) -> Self {
        Self {
            omega_bar: m.omega_bar.clone(),
            system_weight: m.system_weight().to_vec(),
            near_degenerate: m.degeneracy(),
        }
    }
}

pub fn discrete(bath: DiscreteBath, temps: &[f64], consts: &PhysicalConstants) -> Result<DiscreteReport> {
    let modes = discrete_bath::normal_modes(&bath)?;
    let points = temps
        .par_iter()
        .map(|&t| {
            let p = discrete_bath::evaluate(&bath, t, consts)
                .map_err(|source| CliError::Point { temperature: t, source })?;
            for (name, x) in [
                ("E_s", p.energy),
                ("E_s_oracle", p.energy_oracle),
                ("F_cal", p.coupling_free_energy),
                ("E_cal", p.coupling_energy),
                ("K", p.gap),
            ] {
                ensure_finite(name, x)?;
            }
            Ok(p)
        })
        .collect::<Result<_>>()?;
    Ok(DiscreteReport {
        interlacing: modes.interlaces(&bath),
        normal_modes: (&modes).into(),
        bath,
        points,
    })
}

pub fn load_bath(path: &Path) -> Result<DiscreteBath> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.into(),
        source,
    })?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| CliError::Config {
        path: path.into(),
        message: match e.path().to_string().as_str() {
            "." => e.into_inner().to_string(),
            p => format!("field `{p}`: {}", e.into_inner()),
        },
    })
}

pub fn verify(level: Level, refs: &References) -> (Vec<CheckResult>, String) {
    let results = verify::run(level, refs);
    let mut report = String::new();
    for r in &results {
        report.push_str(&format!("{r}\n"));
    }
    let passed = results.iter().filter(|r| r.passed).count();
    report.push_str(&format!("{passed} of {} checks passed\n", results.len()));
    (results, report)
}
