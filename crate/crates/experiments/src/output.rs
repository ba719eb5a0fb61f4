//! Running a spec end to end and writing its CSV tables and manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::attack::{attack_experiment, AttackResult};
use crate::capacity::{capacity_validation, CapacityResult};
use crate::sensitivity::{sensitivity_experiment, SensitivityResult};
use crate::spec::{ExperimentSpec, Family};
use crate::structural::{structural_experiment, StructuralResult};
use crate::sweep::{load_sweep, SweepResult};
use crate::ExperimentError;

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentOutput {
    Structural(StructuralResult),
    Capacity(CapacityResult),
    Sweep(SweepResult),
    Attack(AttackResult),
    Sensitivity(SensitivityResult),
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput, ExperimentError> {
    Ok(match spec.family {
        Family::Structural => ExperimentOutput::Structural(structural_experiment(spec)?),
        Family::CapacityValidation => ExperimentOutput::Capacity(capacity_validation(spec)?),
        Family::LoadSweep => ExperimentOutput::Sweep(load_sweep(spec)?),
        Family::Attack => ExperimentOutput::Attack(attack_experiment(spec)?),
        Family::Sensitivity => ExperimentOutput::Sensitivity(sensitivity_experiment(spec)?),
    })
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool_version: &'static str,
    family: Family,
    spec: &'a ExperimentSpec,
    outputs: &'a [String],
}

impl ExperimentOutput {
    /// Writes every table into `dir` and returns the file names.
    pub fn write_tables(&self, dir: &Path) -> Result<Vec<String>, ExperimentError> {
        let mut files = Vec::new();
        let mut put = |name: &str, write: &dyn Fn(&Path) -> Result<(), ExperimentError>| {
            write(&dir.join(name))?;
            files.push(name.to_string());
            Ok::<_, ExperimentError>(())
        };
        match self {
            ExperimentOutput::Structural(r) => {
                put("structural.csv", &|p| write_csv(p, &r.rows))?;
                put("structural_trials.csv", &|p| write_csv(p, &r.trials))?;
            }
            ExperimentOutput::Capacity(r) => {
                put("capacity_samples.csv", &|p| write_csv(p, &r.samples))?;
                put("capacity_skipped.csv", &|p| write_csv(p, &r.skipped))?;
                put("capacity_fit.csv", &|p| write_csv(p, &[r.fit()]))?;
            }
            ExperimentOutput::Sweep(r) => {
                put("sweep.csv", &|p| write_csv(p, &r.cells))?;
                put("sweep_runs.csv", &|p| write_csv(p, &r.runs))?;
                put("sweep_knees.csv", &|p| write_csv(p, &r.knees))?;
            }
            ExperimentOutput::Attack(r) => {
                put("attack.csv", &|p| write_csv(p, &r.rows))?;
                put("attack_runs.csv", &|p| write_csv(p, &r.runs))?;
            }
            ExperimentOutput::Sensitivity(r) => {
                put("sensitivity.csv", &|p| write_csv(p, &r.rows))?;
                put("sensitivity_runs.csv", &|p| write_csv(p, &r.runs))?;
            }
        }
        Ok(files)
    }
}

/// Runs `spec` and writes its tables plus `manifest.json` into `dir`.
pub fn run_to_dir(spec: &ExperimentSpec, dir: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
    let output = run_experiment(spec)?;
    fs::create_dir_all(dir)?;
    let mut files = output.write_tables(dir)?;
    files.push("manifest.json".to_string());
    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION"),
        family: spec.family,
        spec,
        outputs: &files,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(dir.join("manifest.json"), text)?;
    Ok(files.iter().map(|f| dir.join(f)).collect())
}
