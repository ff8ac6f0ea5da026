//! Desk-scale analogs of the parking-lot and roundabout experiments: a
//! seeded unicycle simulator for historical data and measured runs, the
//! side-information predicates, end-to-end scenario runs and the Monte
//! Carlo inclusion audit.

mod audit;
mod builders;
mod config;
mod report;
mod run;
mod svg;
mod system;

use std::path::Path;

use thiserror::Error;

use crate::constrain::ConstrainError;
use crate::expr::ExprError;
use crate::reach::ReachError;
use crate::setalg::SetError;
use crate::stl::StlError;

pub use audit::{audit, total_violations, AuditRow};
pub use builders::{
    build_heading_region, build_heading_region_named, build_parking_predicates, build_roundabout_predicates,
    build_roundabout_smooth_predicates, heading_rectangle,
};
pub use config::{
    AnalysisMode, DatasetSource, HeadingSpec, OutputSection, PredicateSpec, ReachSection, RegionSpec, RunSection,
    ScenarioConfig, SystemConfig, Waypoint,
};
pub use report::{load_report, write_report, ReportMetadata, SetsJson};
pub use run::{
    analyze, load_dataset, run_scenario, simulate_run, FormulaStep, MeasuredRun, Scenario, ScenarioReport, StepReport,
    VolumeRow,
};
pub use svg::render_step;
pub use system::{generate_dataset, sample_zonotope, SyntheticSystem};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("config JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("heading rectangle edge {edge} is parallel to the x2 axis; rotate the corners")]
    VerticalEdge { edge: &'static str },
    #[error("predicate `{name}`: {source}")]
    PredicateExpr { name: String, source: ExprError },
    #[error("measured run: the start state violates the side information at step 0")]
    RunStart,
    #[error("measured run: no noise draw satisfied the side information at step {step} within {attempts} attempts")]
    RunGeneration { step: usize, attempts: usize },
    #[error("formula `{formula}`, step {step}: {source}")]
    Constrain {
        formula: String,
        step: usize,
        source: ConstrainError,
    },
    #[error(transparent)]
    Reach(#[from] ReachError),
    #[error(transparent)]
    Stl(#[from] StlError),
    #[error(transparent)]
    Set(#[from] SetError),
    #[error("report: {0}")]
    Report(String),
}

impl ScenarioError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::ScenarioConfig;

    /// The roundabout analog with a light audit, for fast end-to-end tests.
    pub fn quick_roundabout() -> ScenarioConfig {
        let mut cfg = ScenarioConfig::roundabout();
        cfg.output.audit_samples = 600;
        cfg
    }
}
