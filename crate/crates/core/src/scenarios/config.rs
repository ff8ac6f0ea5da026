use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{ScenarioError, SyntheticSystem};
use crate::constrain::Representation;
use crate::expr::parse_expr;
use crate::reach::Estimate;
use crate::setalg::{SetJson, VolumeMethod, DEFAULT_MAX_ORDER};
use crate::stl::{Instantiations, Predicate, PredicateKind, PredicateTable};

/// Everything one scenario run needs, as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Base seed: the dataset uses `seed`, the measured run `seed + 1`, the
    /// audit `seed + 2` onwards.
    #[serde(default)]
    pub seed: u64,
    pub system: SystemConfig,
    pub dataset: DatasetSource,
    pub reach: ReachSection,
    pub run: RunSection,
    pub predicates: Vec<PredicateSpec>,
    #[serde(default)]
    pub atoms: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub regions: Vec<RegionSpec>,
    #[serde(default)]
    pub heading: Option<HeadingSpec>,
    /// Formula name to STL text.
    pub formula: BTreeMap<String, String>,
    /// Formula name to `F`/`U` witness windows.
    #[serde(default)]
    pub instantiations: BTreeMap<String, Instantiations>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub dt: f64,
    /// `[v_min, v_max]`.
    pub speed: [f64; 2],
    #[serde(default = "full_turn")]
    pub heading: [f64; 2],
    pub noise: SetJson,
    #[serde(default = "default_segment")]
    pub segment_length: usize,
    #[serde(default = "default_start_box")]
    pub start_box: [[f64; 2]; 2],
}

fn full_turn() -> [f64; 2] {
    [-std::f64::consts::PI, std::f64::consts::PI]
}

fn default_segment() -> usize {
    50
}

fn default_start_box() -> [[f64; 2]; 2] {
    [[-3.0, 3.0], [-3.0, 3.0]]
}

impl SystemConfig {
    pub fn to_system(&self) -> Result<SyntheticSystem, ScenarioError> {
        let sys = SyntheticSystem {
            dt: self.dt,
            speed: self.speed,
            heading: self.heading,
            noise: self.noise.to_zonotope()?,
            segment_length: self.segment_length,
            start_box: self.start_box,
        };
        sys.validate()?;
        Ok(sys)
    }

    pub fn from_system(sys: &SyntheticSystem) -> Self {
        Self {
            dt: sys.dt,
            speed: sys.speed,
            heading: sys.heading,
            noise: SetJson::from_zonotope(&sys.noise),
            segment_length: sys.segment_length,
            start_box: sys.start_box,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    Generate {
        #[serde(default = "default_points")]
        points: usize,
    },
    /// Trajectory CSV; relative paths are resolved against the config file.
    Csv { path: PathBuf },
}

fn default_points() -> usize {
    1000
}

/// How reachable sets are chained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalysisMode {
    /// Step `k` starts from a small box around the measured state `k − 1`.
    #[default]
    SingleStep,
    /// `N` chained steps from the initial box.
    OpenLoop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReachSection {
    pub lipschitz: Estimate,
    pub covering_radius: Estimate,
    #[serde(default = "default_order")]
    pub max_order: f64,
    /// Half-widths of the box around the measured state.
    pub initial_radius: [f64; 2],
    /// Half-widths of the box around the measured input `(v, θ)`.
    pub input_radius: [f64; 2],
    #[serde(default)]
    pub mode: AnalysisMode,
    /// Open-loop only: constrained sets seed the next step.
    #[serde(default = "yes")]
    pub feedback: bool,
}

fn default_order() -> f64 {
    DEFAULT_MAX_ORDER
}

fn yes() -> bool {
    true
}

/// The measured run: a reference path the simulated vehicle tracks, with
/// process noise redrawn until every formula's predicates hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub start: [f64; 2],
    #[serde(default)]
    pub initial_heading: f64,
    pub horizon: usize,
    pub waypoints: Vec<Waypoint>,
    #[serde(default = "default_attempts")]
    pub max_attempts: usize,
}

fn default_attempts() -> usize {
    100_000
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub step: usize,
    pub at: [f64; 2],
}

impl RunSection {
    /// Reference position at step `k`, linear between waypoints.
    pub fn reference(&self, k: usize) -> [f64; 2] {
        let Some(first) = self.waypoints.first() else {
            return self.start;
        };
        if k <= first.step {
            return first.at;
        }
        for pair in self.waypoints.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if k <= b.step {
                let s = (k - a.step) as f64 / (b.step - a.step) as f64;
                return [a.at[0] + s * (b.at[0] - a.at[0]), a.at[1] + s * (b.at[1] - a.at[1])];
            }
        }
        self.waypoints.last().map_or(self.start, |w| w.at)
    }
}

/// One predicate: `{"name", "H", "y", "r"}` for a linear strip or
/// `{"name", "h", "r"}` with expression texts for a nonlinear one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredicateSpec {
    pub name: String,
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    pub h_matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
    #[serde(rename = "h", default, skip_serializing_if = "Option::is_none")]
    pub h_exprs: Option<Vec<String>>,
    pub r: Vec<f64>,
}

impl PredicateSpec {
    pub fn to_predicate(&self, dim: usize) -> Result<Predicate, ScenarioError> {
        let bad = |msg: &str| ScenarioError::Config(format!("predicate `{}`: {msg}", self.name));
        let r = DVector::from_column_slice(&self.r);
        match (&self.h_matrix, &self.h_exprs) {
            (Some(rows), None) => {
                let y = self.y.as_ref().ok_or_else(|| bad("linear predicate needs `y`"))?;
                if rows.iter().any(|row| row.len() != dim) {
                    return Err(bad(&format!("every row of H needs {dim} entries")));
                }
                let h = DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]);
                Ok(Predicate::linear(&self.name, h, DVector::from_column_slice(y), r)?)
            }
            (None, Some(texts)) => {
                if self.y.is_some() {
                    return Err(bad("`y` only applies to linear predicates"));
                }
                let exprs = texts
                    .iter()
                    .map(|t| {
                        parse_expr(t, dim).map_err(|source| ScenarioError::PredicateExpr {
                            name: self.name.clone(),
                            source,
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Predicate::nonlinear(&self.name, exprs, r)?)
            }
            _ => Err(bad("give exactly one of `H` (linear) or `h` (nonlinear)")),
        }
    }

    pub fn from_predicate(p: &Predicate) -> Self {
        match p.kind() {
            PredicateKind::Linear { h, y, r } => Self {
                name: p.name().to_string(),
                h_matrix: Some(h.row_iter().map(|row| row.iter().copied().collect()).collect()),
                y: Some(y.iter().copied().collect()),
                h_exprs: None,
                r: r.iter().copied().collect(),
            },
            PredicateKind::Nonlinear { h, r } => Self {
                name: p.name().to_string(),
                h_matrix: None,
                y: None,
                h_exprs: Some(h.iter().map(ToString::to_string).collect()),
                r: r.iter().copied().collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub atoms: Vec<String>,
    pub predicates: Vec<String>,
}

/// State-dependent heading rectangle: at step `k ≥ 1` the atom stands for
/// the rectangle anchored at the measured state `k − 1`, aligned with the
/// previous heading, reaching `forward + margin` ahead, `margin` behind and
/// `forward·sin(theta_c) + margin` to each side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeadingSpec {
    #[serde(default = "default_heading_atom")]
    pub atom: String,
    #[serde(default = "default_heading_names")]
    pub predicates: [String; 2],
    pub theta_c: f64,
    pub margin: f64,
    /// Defaults to `v_max · dt`.
    #[serde(default)]
    pub forward: Option<f64>,
}

fn default_heading_atom() -> String {
    "T".into()
}

fn default_heading_names() -> [String; 2] {
    ["h6".into(), "h7".into()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub representation: Representation,
    #[serde(default = "default_volume")]
    pub volume: VolumeMethod,
    #[serde(default = "default_audit")]
    pub audit_samples: usize,
    #[serde(default = "yes")]
    pub svg: bool,
    #[serde(default)]
    pub assume_f_at_deadline: bool,
}

fn default_volume() -> VolumeMethod {
    VolumeMethod::Exact2d
}

fn default_audit() -> usize {
    10_000
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: None,
            representation: Representation::Both,
            volume: default_volume(),
            audit_samples: default_audit(),
            svg: true,
            assume_f_at_deadline: false,
        }
    }
}

const PARKING_JSON: &str = include_str!("../../configs/parking.json");
const ROUNDABOUT_JSON: &str = include_str!("../../configs/roundabout.json");

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; a relative dataset CSV path is taken relative to
    /// the file's directory.
    pub fn from_path(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        if let DatasetSource::Csv { path: csv } = &mut cfg.dataset {
            if csv.is_relative() {
                if let Some(dir) = path.parent() {
                    *csv = dir.join(&*csv);
                }
            }
        }
        Ok(cfg)
    }

    /// Parking-lot analog with `phi_p` and the heading-augmented `phi_theta`.
    pub fn parking() -> Self {
        Self::from_json(PARKING_JSON).expect("bundled parking config is valid")
    }

    /// Roundabout analog with `phi_r`.
    pub fn roundabout() -> Self {
        Self::from_json(ROUNDABOUT_JSON).expect("bundled roundabout config is valid")
    }

    /// Checks ranges and that every name resolves.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.system.to_system()?;
        if let DatasetSource::Generate { points } = self.dataset {
            if points < 2 {
                return Err(ScenarioError::Config(format!(
                    "dataset needs at least 2 points, found {points}"
                )));
            }
        }
        let r = &self.reach;
        if !r
            .initial_radius
            .iter()
            .chain(r.input_radius.iter())
            .all(|v| *v >= 0.0 && v.is_finite())
        {
            return Err(ScenarioError::Config(
                "initial_radius and input_radius must be finite and ≥ 0".into(),
            ));
        }
        if !(r.max_order >= 1.0) {
            return Err(ScenarioError::Config(format!(
                "max_order must be at least 1, found {}",
                r.max_order
            )));
        }
        if self.run.horizon == 0 {
            return Err(ScenarioError::Config("run horizon must be at least 1".into()));
        }
        if self.run.waypoints.windows(2).any(|w| w[0].step >= w[1].step) {
            return Err(ScenarioError::Config(
                "waypoint steps must be strictly increasing".into(),
            ));
        }
        if let Some(h) = &self.heading {
            if !(h.theta_c > 0.0 && h.theta_c < std::f64::consts::FRAC_PI_2) || !(h.margin >= 0.0) {
                return Err(ScenarioError::Config(
                    "heading needs 0 < theta_c < π/2 and margin ≥ 0".into(),
                ));
            }
            if h.forward.is_some_and(|f| !(f > 0.0)) {
                return Err(ScenarioError::Config("heading forward reach must be positive".into()));
            }
        }
        if self.output.audit_samples == 0 {
            return Err(ScenarioError::Config("audit_samples must be at least 1".into()));
        }
        if let VolumeMethod::MonteCarlo { samples: 0, .. } = self.output.volume {
            return Err(ScenarioError::Config(
                "monte carlo volume needs at least 1 sample".into(),
            ));
        }
        if self.formula.is_empty() {
            return Err(ScenarioError::Config("at least one formula is required".into()));
        }
        for name in self.instantiations.keys() {
            if !self.formula.contains_key(name) {
                return Err(ScenarioError::Config(format!(
                    "instantiations given for unknown formula `{name}`"
                )));
            }
        }
        self.predicate_table()?;
        Ok(())
    }

    /// Predicates in declaration order, heading placeholders last, plus
    /// atoms and regions.
    pub fn predicate_table(&self) -> Result<PredicateTable, ScenarioError> {
        let mut table = PredicateTable::new();
        for spec in &self.predicates {
            if table.get(&spec.name).is_ok() {
                return Err(ScenarioError::Config(format!(
                    "predicate `{}` declared twice",
                    spec.name
                )));
            }
            table.insert(spec.to_predicate(2)?);
        }
        if let Some(h) = &self.heading {
            for name in &h.predicates {
                if table.get(name).is_ok() {
                    return Err(ScenarioError::Config(format!(
                        "heading predicate `{name}` clashes with a declared predicate"
                    )));
                }
                // Replaced by the anchored rectangle at every step k ≥ 1.
                table.insert(Predicate::linear_row(name, &[0.0, 1.0], 0.0, f64::MAX)?);
            }
            let names: Vec<&str> = h.predicates.iter().map(String::as_str).collect();
            table.define_atom(&h.atom, &names)?;
        }
        for (atom, preds) in &self.atoms {
            let names: Vec<&str> = preds.iter().map(String::as_str).collect();
            table.define_atom(atom, &names)?;
        }
        for region in &self.regions {
            let atoms: Vec<&str> = region.atoms.iter().map(String::as_str).collect();
            let preds: Vec<&str> = region.predicates.iter().map(String::as_str).collect();
            table.define_region(&atoms, &preds)?;
        }
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_configs_parse() {
        let p = ScenarioConfig::parking();
        assert_eq!(p.formula.len(), 2);
        assert_eq!(p.system.noise.generators, vec![vec![0.9, 0.0], vec![0.0, 0.9]]);
        let r = ScenarioConfig::roundabout();
        assert!(r.predicate_table().unwrap().get("h2").is_ok());
    }

    #[test]
    fn predicate_spec_round_trip() {
        let t = ScenarioConfig::roundabout().predicate_table().unwrap();
        for p in t.predicates() {
            let back = PredicateSpec::from_predicate(p).to_predicate(2).unwrap();
            assert_eq!(&back, p);
        }
    }

    #[test]
    fn unknown_field_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(PARKING_JSON).unwrap();
        v["reach"]["bogus"] = serde_json::json!(1);
        assert!(matches!(
            ScenarioConfig::from_json(&v.to_string()),
            Err(ScenarioError::Json(_))
        ));
    }

    #[test]
    fn dangling_atom_rejected() {
        let mut cfg = ScenarioConfig::parking();
        cfg.atoms.insert("Q".into(), vec!["nope".into()]);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn reference_interpolates() {
        let run = RunSection {
            start: [0.0, 0.0],
            initial_heading: 0.0,
            horizon: 4,
            waypoints: vec![
                Waypoint {
                    step: 0,
                    at: [0.0, 0.0],
                },
                Waypoint {
                    step: 4,
                    at: [4.0, -2.0],
                },
            ],
            max_attempts: 1,
        };
        assert_eq!(run.reference(1), [1.0, -0.5]);
        assert_eq!(run.reference(9), [4.0, -2.0]);
    }
}
