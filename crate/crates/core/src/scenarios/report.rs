use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::audit::AuditRow;
use super::config::{AnalysisMode, PredicateSpec, ScenarioConfig, SystemConfig};
use super::run::{FormulaStep, MeasuredRun, ScenarioReport, StepReport, VolumeRow};
use super::svg::render_step;
use super::ScenarioError;
use crate::constrain::Representation;
use crate::setalg::{SetJson, VolumeMethod};

/// Run settings recorded next to the sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub name: String,
    pub seed: u64,
    pub mode: AnalysisMode,
    /// Only meaningful in open-loop mode.
    pub feedback: bool,
    pub dt: f64,
    pub horizon: usize,
    pub dataset_points: usize,
    pub lipschitz: f64,
    pub covering_radius: f64,
    pub representation: Representation,
    pub volume_method: VolumeMethod,
    pub audit_samples: usize,
    pub assume_f_at_deadline: bool,
    pub formulas: BTreeMap<String, String>,
}

impl ReportMetadata {
    pub fn new(cfg: &ScenarioConfig, dataset_points: usize, lipschitz: f64, covering_radius: f64) -> Self {
        Self {
            name: cfg.name.clone(),
            seed: cfg.seed,
            mode: cfg.reach.mode,
            feedback: cfg.reach.feedback,
            dt: cfg.system.dt,
            horizon: cfg.run.horizon,
            dataset_points,
            lipschitz,
            covering_radius,
            representation: cfg.output.representation,
            volume_method: cfg.output.volume,
            audit_samples: cfg.output.audit_samples,
            assume_f_at_deadline: cfg.output.assume_f_at_deadline,
            formulas: cfg.formula.clone(),
        }
    }
}

/// Layout of `sets.json`: enough to rerun the audit without the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetsJson {
    pub metadata: ReportMetadata,
    pub system: SystemConfig,
    pub run: RunJson,
    pub steps: Vec<StepJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunJson {
    pub states: Vec<[f64; 2]>,
    pub inputs: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepJson {
    pub step: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<SetJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<SetJson>,
    pub unconstrained: SetJson,
    pub formulas: Vec<FormulaJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulaJson {
    pub name: String,
    pub active: Vec<String>,
    pub predicates: Vec<PredicateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zonotope: Option<SetJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constrained: Option<SetJson>,
}

impl SetsJson {
    pub fn from_report(r: &ScenarioReport) -> Self {
        Self {
            metadata: r.metadata.clone(),
            system: SystemConfig::from_system(&r.system),
            run: RunJson {
                states: r.run.states.clone(),
                inputs: r.run.inputs.clone(),
            },
            steps: r.steps.iter().map(step_json).collect(),
        }
    }

    /// Report with the sets restored; volumes and audit rows are left empty.
    pub fn to_report(&self) -> Result<ScenarioReport, ScenarioError> {
        let steps = self
            .steps
            .iter()
            .map(|s| {
                let formulas = s
                    .formulas
                    .iter()
                    .map(|f| {
                        Ok(FormulaStep {
                            name: f.name.clone(),
                            active: f.active.clone(),
                            predicates: f
                                .predicates
                                .iter()
                                .map(|p| p.to_predicate(2))
                                .collect::<Result<_, ScenarioError>>()?,
                            zonotope: f.zonotope.as_ref().map(SetJson::to_zonotope).transpose()?,
                            constrained: f.constrained.as_ref().map(SetJson::to_constrained).transpose()?,
                        })
                    })
                    .collect::<Result<Vec<_>, ScenarioError>>()?;
                Ok(StepReport {
                    step: s.step,
                    initial: s.initial.as_ref().map(SetJson::to_zonotope).transpose()?,
                    input: s.input.as_ref().map(SetJson::to_zonotope).transpose()?,
                    unconstrained: s.unconstrained.to_zonotope()?,
                    formulas,
                })
            })
            .collect::<Result<Vec<_>, ScenarioError>>()?;
        Ok(ScenarioReport {
            metadata: self.metadata.clone(),
            system: self.system.to_system()?,
            run: MeasuredRun {
                states: self.run.states.clone(),
                inputs: self.run.inputs.clone(),
            },
            steps,
            volumes: Vec::new(),
            audit: Vec::new(),
        })
    }
}

fn step_json(s: &StepReport) -> StepJson {
    StepJson {
        step: s.step,
        initial: s.initial.as_ref().map(SetJson::from_zonotope),
        input: s.input.as_ref().map(SetJson::from_zonotope),
        unconstrained: SetJson::from_zonotope(&s.unconstrained),
        formulas: s
            .formulas
            .iter()
            .map(|f| FormulaJson {
                name: f.name.clone(),
                active: f.active.clone(),
                predicates: f.predicates.iter().map(PredicateSpec::from_predicate).collect(),
                zonotope: f.zonotope.as_ref().map(SetJson::from_zonotope),
                constrained: f.constrained.as_ref().map(SetJson::from_constrained),
            })
            .collect(),
    }
}

fn csv_error(path: &Path, e: csv::Error) -> ScenarioError {
    ScenarioError::io(path, std::io::Error::other(e.to_string()))
}

fn write_csv<F>(path: &Path, header: &[&str], rows: F) -> Result<(), ScenarioError>
where
    F: FnOnce(&mut csv::Writer<std::fs::File>) -> Result<(), csv::Error>,
{
    let file = std::fs::File::create(path).map_err(|e| ScenarioError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    rows(&mut w).map_err(|e| csv_error(path, e))?;
    w.flush().map_err(|e| ScenarioError::io(path, e))
}

pub(crate) fn write_volumes(path: &Path, rows: &[VolumeRow]) -> Result<(), ScenarioError> {
    write_csv(path, &["step", "representation", "constrained_by", "volume"], |w| {
        for r in rows {
            w.write_record([
                r.step.to_string(),
                r.representation.clone(),
                r.constrained_by.clone(),
                r.volume.to_string(),
            ])?;
        }
        Ok(())
    })
}

pub fn write_audit(path: &Path, rows: &[AuditRow]) -> Result<(), ScenarioError> {
    write_csv(
        path,
        &[
            "step",
            "constrained_by",
            "representation",
            "samples",
            "attempts",
            "violations",
        ],
        |w| {
            for r in rows {
                w.write_record([
                    r.step.to_string(),
                    r.constrained_by.clone(),
                    r.representation.clone(),
                    r.samples.to_string(),
                    r.attempts.to_string(),
                    r.violations.to_string(),
                ])?;
            }
            Ok(())
        },
    )
}

/// Writes `sets.json`, `volumes.csv`, `averages.csv`, `audit.csv` and, if
/// `svg` is set, `step_NNN.svg` for every step into `dir`. Returns the
/// paths written.
pub fn write_report(report: &ScenarioReport, dir: &Path, svg: bool) -> Result<Vec<PathBuf>, ScenarioError> {
    std::fs::create_dir_all(dir).map_err(|e| ScenarioError::io(dir, e))?;
    let mut written = Vec::new();
    let sets = dir.join("sets.json");
    let text = serde_json::to_string_pretty(&SetsJson::from_report(report))?;
    std::fs::write(&sets, text + "\n").map_err(|e| ScenarioError::io(&sets, e))?;
    written.push(sets);

    let volumes = dir.join("volumes.csv");
    write_volumes(&volumes, &report.volumes)?;
    written.push(volumes);

    let averages = dir.join("averages.csv");
    write_csv(
        &averages,
        &["representation", "constrained_by", "average_volume"],
        |w| {
            for ((rep, by), v) in report.averages() {
                w.write_record([rep, by, v.to_string()])?;
            }
            Ok(())
        },
    )?;
    written.push(averages);

    let audit = dir.join("audit.csv");
    write_audit(&audit, &report.audit)?;
    written.push(audit);

    if svg {
        for step in &report.steps {
            let path = dir.join(format!("step_{:03}.svg", step.step));
            std::fs::write(&path, render_step(step)?).map_err(|e| ScenarioError::io(&path, e))?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Reads `sets.json` from a report directory (or the file itself).
pub fn load_report(path: &Path) -> Result<ScenarioReport, ScenarioError> {
    let file = if path.is_dir() {
        path.join("sets.json")
    } else {
        path.to_path_buf()
    };
    let text = std::fs::read_to_string(&file).map_err(|e| ScenarioError::io(&file, e))?;
    let sets: SetsJson = serde_json::from_str(&text)?;
    sets.to_report()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::testutil::quick_roundabout;
    use crate::scenarios::{audit, run_scenario};

    #[test]
    fn written_report_loads_back() {
        let r = run_scenario(&quick_roundabout()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = write_report(&r, dir.path(), true).unwrap();
        assert_eq!(files.len(), 4 + r.steps.len());
        let back = load_report(dir.path()).unwrap();
        assert_eq!(SetsJson::from_report(&back), SetsJson::from_report(&r));
        assert_eq!(back.metadata, r.metadata);
        let seed = r.metadata.seed + 2;
        assert_eq!(audit(&back, 600, seed).unwrap(), r.audit);
    }

    #[test]
    fn volume_csv_layout() {
        let r = run_scenario(&quick_roundabout()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_report(&r, dir.path(), false).unwrap();
        let text = std::fs::read_to_string(dir.path().join("volumes.csv")).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("step,representation,constrained_by,volume"));
        assert_eq!(lines.count(), r.volumes.len());
        assert_eq!(r.volumes.len(), 3 * r.steps.len());
        let audit_text = std::fs::read_to_string(dir.path().join("audit.csv")).unwrap();
        assert!(audit_text.starts_with("step,constrained_by,representation,samples,attempts,violations"));
        assert!(!dir.path().join("step_001.svg").exists());
    }

    #[test]
    fn missing_report_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_report(dir.path()), Err(ScenarioError::Io { .. })));
    }
}
