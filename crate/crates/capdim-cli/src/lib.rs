//! Batch front end: JSON job configs in, machine-readable reports out.
//!
//! A job is one command plus its parameters; defaults are resolved at parse
//! time so the echoed config in every report is complete and reproducible
//! on its own. Reports serialize as JSON or as plot-ready CSV tables.

use capdim::bergman_p1::{dimension_report, verify_witness_bounds, witness_psi_star};
use capdim::bergman_p2::{dim_global_sections_p2, omega_k_dimension, omega_k_monomial_basis};
use capdim::cauchy::wiegerinck_sequence_with;
use capdim::geometry::CompactSetSpec;
use capdim::potential::{classify_polarity_with, equilibrium_solve, Polarity, POLARITY_SCHEDULE};
use capdim::verdict::ConvergenceStatus;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn default_n() -> usize {
    capdim::potential::DEFAULT_N
}
fn default_tol() -> f64 {
    capdim::potential::DEFAULT_TOL
}
fn default_seed() -> u64 {
    capdim::potential::DEFAULT_SEED
}
fn default_threshold() -> f64 {
    capdim::potential::DEFAULT_THRESHOLD
}
fn default_witness_probes() -> usize {
    200
}

/// One batch job. The `command` tag selects the variant; every numeric
/// parameter either appears in the config or is filled with its default
/// during parsing, so serializing the config back always shows the values
/// actually used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case", deny_unknown_fields)]
pub enum JobConfig {
    Capacity {
        set: CompactSetSpec,
        #[serde(default = "default_n")]
        n: usize,
        #[serde(default = "default_tol")]
        tol: f64,
        #[serde(default = "default_seed")]
        seed: u64,
    },
    Equilibrium {
        set: CompactSetSpec,
        #[serde(default = "default_n")]
        n: usize,
        #[serde(default = "default_tol")]
        tol: f64,
        #[serde(default = "default_seed")]
        seed: u64,
    },
    Polarity {
        set: CompactSetSpec,
        #[serde(default = "default_threshold")]
        threshold: f64,
        #[serde(default = "default_tol")]
        tol: f64,
        #[serde(default = "default_seed")]
        seed: u64,
    },
    Wiegerinck {
        set1: CompactSetSpec,
        set2: CompactSetSpec,
        count: usize,
        k: i32,
        #[serde(default = "default_n")]
        n: usize,
        #[serde(default = "default_tol")]
        tol: f64,
        #[serde(default = "default_seed")]
        seed: u64,
    },
    DimP1 {
        set: CompactSetSpec,
        k: i32,
    },
    DimP2 {
        k: i32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p_max: Option<u32>,
    },
    Witness {
        set: CompactSetSpec,
        eps: f64,
        #[serde(default = "default_n")]
        n: usize,
        #[serde(default = "default_seed")]
        seed: u64,
        #[serde(default = "default_witness_probes")]
        probes: usize,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("computation failed: {0}")]
    Numerical(String),
}

impl CliError {
    /// Process exit code: 2 for config problems, 3 for numerical failures.
    /// (0 is success; 4 marks an inconclusive classification, which is a
    /// report outcome, not an error.)
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

pub fn parse_config(text: &str) -> Result<JobConfig, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

/// Solver counters, residuals, and wall-clock timings. Timings are the only
/// run-to-run varying part of a report; comparisons for determinism should
/// drop them.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub counters: BTreeMap<String, f64>,
    pub timings_ms: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub config: JobConfig,
    pub results: serde_json::Value,
    pub diagnostics: Diagnostics,
    pub version: String,
}

pub struct RunOutput {
    pub report: Report,
    /// The classification came back inconclusive (exit code 4).
    pub inconclusive: bool,
}

fn numerical<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Numerical(e.to_string())
}

pub fn run(config: JobConfig) -> Result<RunOutput, CliError> {
    let start = std::time::Instant::now();
    let mut diagnostics = Diagnostics::default();
    let mut inconclusive = false;

    let results = match &config {
        JobConfig::Capacity { set, n, tol, seed } => {
            let value = capdim::potential::capacity(set, *n, *tol, *seed).map_err(numerical)?;
            if capdim::geometry::is_finite_set(set) {
                serde_json::json!({ "capacity": value, "error_estimate": 0.0 })
            } else {
                let sol = equilibrium_solve(set, *n, *tol, *seed).map_err(numerical)?;
                diagnostics
                    .counters
                    .insert("active_set_rounds".into(), sol.active_set_rounds as f64);
                diagnostics
                    .counters
                    .insert("polish_iterations".into(), sol.polish_iterations as f64);
                diagnostics.counters.insert("gap".into(), sol.gap);
                serde_json::json!({
                    "capacity": value,
                    // First-order sensitivity of exp(energy) to the solver gap.
                    "error_estimate": value * sol.gap,
                    "smoothed_energy": sol.smoothed_energy,
                    "support_residual": sol.support_residual,
                })
            }
        }
        JobConfig::Equilibrium { set, n, tol, seed } => {
            let sol = equilibrium_solve(set, *n, *tol, *seed).map_err(numerical)?;
            diagnostics
                .counters
                .insert("active_set_rounds".into(), sol.active_set_rounds as f64);
            diagnostics
                .counters
                .insert("polish_iterations".into(), sol.polish_iterations as f64);
            diagnostics.counters.insert("gap".into(), sol.gap);
            serde_json::to_value(&sol).map_err(numerical)?
        }
        JobConfig::Polarity {
            set,
            threshold,
            tol,
            seed,
        } => {
            let verdict = classify_polarity_with(set, *threshold, &POLARITY_SCHEDULE, *tol, *seed)
                .map_err(numerical)?;
            inconclusive = verdict.classification == Polarity::Inconclusive;
            serde_json::to_value(&verdict).map_err(numerical)?
        }
        JobConfig::Wiegerinck {
            set1,
            set2,
            count,
            k,
            n,
            tol,
            seed,
        } => {
            let seq = wiegerinck_sequence_with(set1, set2, *count, *k, *seed, *n, *tol)
                .map_err(numerical)?;
            diagnostics
                .counters
                .insert("functions_built".into(), seq.len() as f64);
            serde_json::json!({
                "functions": serde_json::to_value(&seq).map_err(numerical)?,
                "summary": seq
                    .iter()
                    .enumerate()
                    .map(|(i, f)| {
                        serde_json::json!({
                            "index": i,
                            "start_order": f.tail.start_order,
                            "membership": f.membership,
                        })
                    })
                    .collect::<Vec<_>>(),
            })
        }
        JobConfig::DimP1 { set, k } => {
            let report = dimension_report(*k, set, None).map_err(numerical)?;
            inconclusive = report.method == "inconclusive";
            serde_json::to_value(&report).map_err(numerical)?
        }
        JobConfig::DimP2 { k, p_max } => {
            let basis = omega_k_monomial_basis(*k, *p_max);
            serde_json::json!({
                "k": k,
                "omega_dimension": omega_k_dimension(*k),
                "global_sections_dimension": dim_global_sections_p2(*k),
                "basis": basis,
            })
        }
        JobConfig::Witness {
            set,
            eps,
            n,
            seed,
            probes,
        } => {
            let field = witness_psi_star(set, *eps, *n, *seed).map_err(numerical)?;
            let cert = verify_witness_bounds(&field, *probes, seed.wrapping_add(1));
            serde_json::to_value(&cert).map_err(numerical)?
        }
    };

    diagnostics
        .timings_ms
        .insert("total".into(), start.elapsed().as_secs_f64() * 1e3);
    Ok(RunOutput {
        report: Report {
            config,
            results,
            diagnostics,
            version: VERSION.to_string(),
        },
        inconclusive,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    CsvTables,
}

pub fn emit(report: &Report, format: Format) -> String {
    match format {
        Format::Json => {
            let mut text =
                serde_json::to_string_pretty(report).expect("report serialization cannot fail");
            text.push('\n');
            text
        }
        Format::CsvTables => csv_tables(report),
    }
}

/// Flattens a report into named CSV tables (blank-line separated, each
/// headed by `# table: <name>`): a `summary` of scalar results plus
/// command-specific row tables for plotting.
fn csv_tables(report: &Report) -> String {
    let mut out = String::new();
    let r = &report.results;

    writeln!(out, "# table: summary").unwrap();
    writeln!(out, "key,value").unwrap();
    writeln!(out, "version,{}", report.version).unwrap();
    flatten_scalars(r, "", &mut out);
    for (k, v) in &report.diagnostics.counters {
        writeln!(out, "diagnostics.{k},{v}").unwrap();
    }

    match &report.config {
        JobConfig::Equilibrium { .. } => {
            // One row per support point.
            writeln!(out, "\n# table: support").unwrap();
            writeln!(out, "index,re,im,weight").unwrap();
            let support = r["measure"]["support"].as_array();
            let weights = r["measure"]["weights"].as_array();
            if let (Some(support), Some(weights)) = (support, weights) {
                for (i, (z, w)) in support.iter().zip(weights).enumerate() {
                    writeln!(
                        out,
                        "{i},{},{},{}",
                        json_num(&z[0]),
                        json_num(&z[1]),
                        json_num(w)
                    )
                    .unwrap();
                }
            }
        }
        JobConfig::Polarity { .. } => {
            writeln!(out, "\n# table: capacity_sequence").unwrap();
            writeln!(out, "refinement,capacity").unwrap();
            if let Some(seq) = r["sequence"].as_array() {
                for (i, v) in seq.iter().enumerate() {
                    writeln!(out, "{},{}", POLARITY_SCHEDULE[i], json_num(v)).unwrap();
                }
            }
        }
        JobConfig::Wiegerinck { .. } => {
            writeln!(out, "\n# table: sequence").unwrap();
            writeln!(
                out,
                "index,start_order,norm_status,norm_value,norm_exponent"
            )
            .unwrap();
            if let Some(rows) = r["summary"].as_array() {
                for row in rows {
                    let membership: Option<capdim::verdict::ConvergenceVerdict> =
                        serde_json::from_value(row["membership"].clone()).ok();
                    let (status, value, exponent) = match membership.map(|m| m.status) {
                        Some(ConvergenceStatus::Finite { value, .. }) => {
                            ("finite", format!("{value}"), String::new())
                        }
                        Some(ConvergenceStatus::Divergent { exponent }) => {
                            ("divergent", String::new(), format!("{exponent}"))
                        }
                        None => ("unknown", String::new(), String::new()),
                    };
                    writeln!(
                        out,
                        "{},{},{status},{value},{exponent}",
                        json_num(&row["index"]),
                        json_num(&row["start_order"]),
                    )
                    .unwrap();
                }
            }
        }
        JobConfig::DimP2 { .. } => {
            writeln!(out, "\n# table: basis").unwrap();
            writeln!(out, "p,q").unwrap();
            if let Some(rows) = r["basis"].as_array() {
                for row in rows {
                    writeln!(out, "{},{}", json_num(&row[0]), json_num(&row[1])).unwrap();
                }
            }
        }
        _ => {}
    }
    out
}

fn json_num(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::Number(n) => n.to_string(),
        other => other.to_string(),
    }
}

/// Writes every scalar leaf of `value` (numbers, booleans, short strings)
/// as a `path,value` row. Arrays of scalars and nested tables are left to
/// the per-command tables.
fn flatten_scalars(value: &serde_json::Value, prefix: &str, out: &mut String) {
    match value {
        serde_json::Value::Object(map) => {
            for (k, v) in map {
                let path = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten_scalars(v, &path, out);
            }
        }
        serde_json::Value::Number(n) => writeln!(out, "{prefix},{n}").unwrap(),
        serde_json::Value::Bool(b) => writeln!(out, "{prefix},{b}").unwrap(),
        serde_json::Value::String(s) if s.len() <= 40 => writeln!(out, "{prefix},{s}").unwrap(),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_fills_defaults_and_echoes_them() {
        let cfg = parse_config(
            r#"{"command":"capacity","set":{"type":"disc","center":[0.0,0.0],"radius":1.0}}"#,
        )
        .unwrap();
        let JobConfig::Capacity { n, tol, seed, .. } = &cfg else {
            panic!("wrong variant");
        };
        assert_eq!((*n, *tol, *seed), (256, 1e-8, 1));
        // The echo carries the resolved defaults.
        let echoed = serde_json::to_value(&cfg).unwrap();
        assert_eq!(echoed["n"], 256);
        assert_eq!(echoed["seed"], 1);
    }

    #[test]
    fn parse_rejects_unknown_commands_and_missing_fields() {
        let err = parse_config(r#"{"command":"fly"}"#).unwrap_err();
        assert!(err.to_string().contains("fly"), "{err}");
        assert_eq!(err.exit_code(), 2);

        let err = parse_config(r#"{"command":"capacity","n":16}"#).unwrap_err();
        assert!(err.to_string().contains("set"), "{err}");

        let err = parse_config(r#"{"command":"dim-p2","k":0,"extra":1}"#).unwrap_err();
        assert!(err.to_string().contains("extra"), "{err}");
    }

    #[test]
    fn dim_p2_report_matches_the_dimension_table() {
        let out = run(parse_config(r#"{"command":"dim-p2","k":0}"#).unwrap()).unwrap();
        assert!(!out.inconclusive);
        assert_eq!(out.report.results["omega_dimension"], 6);
        assert_eq!(out.report.results["global_sections_dimension"], 1);
        assert_eq!(out.report.results["basis"].as_array().unwrap().len(), 6);
    }

    #[test]
    fn dim_p1_point_set_report_is_finite() {
        let cfg = parse_config(
            r#"{"command":"dim-p1","set":{"type":"point_set","points":[[0.0,0.0],[1.0,0.0]]},"k":2}"#,
        )
        .unwrap();
        let out = run(cfg).unwrap();
        assert_eq!(out.report.results["dimension"]["kind"], "finite");
        assert_eq!(out.report.results["dimension"]["dimension"], 3);
        assert_eq!(out.report.results["method"], "polar-formula");
    }

    #[test]
    fn witness_eval_errors_map_to_exit_codes() {
        let err = CliError::Numerical("x".into());
        assert_eq!(err.exit_code(), 3);
        let err = CliError::Config("y".into());
        assert_eq!(err.exit_code(), 2);
    }
}
