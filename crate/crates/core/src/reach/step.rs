use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::model::{
    build_noise_matrix_zonotope, estimate_lipschitz_and_radius, fit_model, lipschitz_zonotope, residual_zonotope,
};
use super::{LeastSquaresModel, ReachError, TrajectoryDataset};
use crate::setalg::{ConstrainedZonotope, MatrixZonotope, Zonotope, DEFAULT_MAX_ORDER};
use crate::Scalar;

/// A parameter given explicitly or estimated from the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Estimate {
    Value(f64),
    #[serde(with = "estimate_keyword")]
    Estimate,
}

mod estimate_keyword {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("estimate")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let s = String::deserialize(d)?;
        if s == "estimate" {
            Ok(())
        } else {
            Err(serde::de::Error::custom(format!(
                "expected a number or \"estimate\", found \"{s}\""
            )))
        }
    }
}

/// Where the affine model is centered.
#[derive(Debug, Clone, PartialEq)]
pub enum Linearization<T: Scalar = f64> {
    /// `x*` = center of the previous set, `u*` = center of the input set,
    /// refitted every step.
    PerStep,
    /// One global point for all steps.
    Fixed { x_star: DVector<T>, u_star: DVector<T> },
}

#[derive(Debug, Clone)]
pub struct ReachConfig<T: Scalar = f64> {
    pub noise: Zonotope<T>,
    pub lipschitz: Estimate,
    pub covering_radius: Estimate,
    /// `U_1..U_N`; a single entry is reused for every step.
    pub inputs: Vec<Zonotope<T>>,
    pub initial: Zonotope<T>,
    pub horizon: usize,
    pub linearization: Linearization<T>,
    pub max_order: f64,
}

impl<T: Scalar> ReachConfig<T> {
    pub fn new(noise: Zonotope<T>, inputs: Vec<Zonotope<T>>, initial: Zonotope<T>, horizon: usize) -> Self {
        Self {
            noise,
            lipschitz: Estimate::Estimate,
            covering_radius: Estimate::Estimate,
            inputs,
            initial,
            horizon,
            linearization: Linearization::PerStep,
            max_order: DEFAULT_MAX_ORDER,
        }
    }

    /// Input set used to produce `Ẑ_k` (`k ≥ 1`).
    pub fn input_at(&self, k: usize) -> Option<&Zonotope<T>> {
        if self.inputs.len() == 1 {
            self.inputs.first()
        } else {
            self.inputs.get(k.checked_sub(1)?)
        }
    }
}

/// One step of the recursion:
/// `M̃ (⟨1⟩ × (Ẑ − x*) × (U − u*)) + Z_L + Z_ε + Z_w`, then order reduction.
pub fn reach_step<T: Scalar>(
    prev: &Zonotope<T>,
    input: &Zonotope<T>,
    model: &LeastSquaresModel<T>,
    zl: &Zonotope<T>,
    zeps: &Zonotope<T>,
    zw: &Zonotope<T>,
    max_order: f64,
) -> Result<Zonotope<T>, ReachError> {
    let one = Zonotope::point(DVector::from_element(1, T::one()));
    let x = prev.translate(&-&model.x_star)?;
    let u = input.translate(&-&model.u_star)?;
    let lifted = one.cartesian_product(&x).cartesian_product(&u);
    let next = lifted
        .linear_map(&model.m)?
        .minkowski_sum(zl)?
        .minkowski_sum(zeps)?
        .minkowski_sum(zw)?;
    Ok(next.reduce_order(max_order)?)
}

/// [`reach_step`] for a constrained previous set. The constraints carry
/// over unchanged; no order reduction is applied, so generator and
/// constraint counts grow linearly with the number of steps.
pub fn reach_step_cz<T: Scalar>(
    prev: &ConstrainedZonotope<T>,
    input: &Zonotope<T>,
    model: &LeastSquaresModel<T>,
    zl: &Zonotope<T>,
    zeps: &Zonotope<T>,
    zw: &Zonotope<T>,
) -> Result<ConstrainedZonotope<T>, ReachError> {
    let one = Zonotope::point(DVector::from_element(1, T::one()));
    let x = prev.translate(&-&model.x_star)?;
    let u = input.translate(&-&model.u_star)?;
    let lifted = x.cartesian_product_zonotope_front(&one).cartesian_product_zonotope(&u);
    Ok(lifted
        .linear_map(&model.m)?
        .minkowski_sum_zonotope(zl)?
        .minkowski_sum_zonotope(zeps)?
        .minkowski_sum_zonotope(zw)?)
}

/// Data-dependent pieces of the recursion, prepared once.
#[derive(Debug, Clone)]
pub struct Reacher<T: Scalar = f64> {
    dataset: TrajectoryDataset<T>,
    noise: Zonotope<T>,
    noise_matrix: MatrixZonotope<T>,
    lipschitz: f64,
    covering_radius: f64,
    zeps: Zonotope<T>,
    max_order: f64,
    linearization: Linearization<T>,
}

impl<T: Scalar> Reacher<T> {
    pub fn new(
        dataset: TrajectoryDataset<T>,
        noise: Zonotope<T>,
        lipschitz: Estimate,
        covering_radius: Estimate,
        max_order: f64,
        linearization: Linearization<T>,
    ) -> Result<Self, ReachError> {
        let n = dataset.state_dim();
        if noise.dim() != n {
            return Err(ReachError::InvalidConfig(format!(
                "noise zonotope has dimension {}, states have {n}",
                noise.dim()
            )));
        }
        if let Linearization::Fixed { x_star, u_star } = &linearization {
            if x_star.len() != n || u_star.len() != dataset.input_dim() {
                return Err(ReachError::InvalidConfig(
                    "fixed linearization point has the wrong dimension".into(),
                ));
            }
        }
        let estimated = match (lipschitz, covering_radius) {
            (Estimate::Value(l), Estimate::Value(d)) => (l, d),
            _ => estimate_lipschitz_and_radius(&dataset)?,
        };
        let l = match lipschitz {
            Estimate::Value(v) => v,
            Estimate::Estimate => estimated.0,
        };
        let d = match covering_radius {
            Estimate::Value(v) => v,
            Estimate::Estimate => estimated.1,
        };
        let zeps = lipschitz_zonotope(T::lit(l), T::lit(d), n)?;
        let noise_matrix = build_noise_matrix_zonotope(&noise, dataset.num_points());
        Ok(Self {
            dataset,
            noise,
            noise_matrix,
            lipschitz: l,
            covering_radius: d,
            zeps,
            max_order,
            linearization,
        })
    }

    pub fn from_config(config: &ReachConfig<T>, dataset: TrajectoryDataset<T>) -> Result<Self, ReachError> {
        Self::new(
            dataset,
            config.noise.clone(),
            config.lipschitz,
            config.covering_radius,
            config.max_order,
            config.linearization.clone(),
        )
    }

    pub fn dataset(&self) -> &TrajectoryDataset<T> {
        &self.dataset
    }

    pub fn noise(&self) -> &Zonotope<T> {
        &self.noise
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn covering_radius(&self) -> f64 {
        self.covering_radius
    }

    pub fn lipschitz_zonotope(&self) -> &Zonotope<T> {
        &self.zeps
    }

    pub fn model_at(&self, x_star: &DVector<T>, u_star: &DVector<T>) -> Result<LeastSquaresModel<T>, ReachError> {
        fit_model(&self.dataset, x_star, u_star, &self.noise_matrix)
    }

    pub fn residual(&self, model: &LeastSquaresModel<T>) -> Result<Zonotope<T>, ReachError> {
        residual_zonotope(&self.dataset, model, &self.noise)
    }

    /// The model used to step from `prev` under `input`.
    pub fn model_for(&self, prev: &Zonotope<T>, input: &Zonotope<T>) -> Result<LeastSquaresModel<T>, ReachError> {
        match &self.linearization {
            Linearization::PerStep => self.model_at(prev.center(), input.center()),
            Linearization::Fixed { x_star, u_star } => self.model_at(x_star, u_star),
        }
    }

    pub fn step(&self, prev: &Zonotope<T>, input: &Zonotope<T>) -> Result<Zonotope<T>, ReachError> {
        if prev.dim() != self.dataset.state_dim() || input.dim() != self.dataset.input_dim() {
            return Err(ReachError::InvalidConfig(format!(
                "step expects a {}-dimensional state set and {}-dimensional input set, found {} and {}",
                self.dataset.state_dim(),
                self.dataset.input_dim(),
                prev.dim(),
                input.dim()
            )));
        }
        let model = self.model_for(prev, input)?;
        let zl = self.residual(&model)?;
        reach_step(prev, input, &model, &zl, &self.zeps, &self.noise, self.max_order)
    }

    /// Step from a constrained set; the model is centered at its center.
    pub fn step_cz(
        &self,
        prev: &ConstrainedZonotope<T>,
        input: &Zonotope<T>,
    ) -> Result<ConstrainedZonotope<T>, ReachError> {
        if prev.dim() != self.dataset.state_dim() || input.dim() != self.dataset.input_dim() {
            return Err(ReachError::InvalidConfig(
                "step_cz dimensions do not match the dataset".into(),
            ));
        }
        let model = match &self.linearization {
            Linearization::PerStep => self.model_at(prev.center(), input.center())?,
            Linearization::Fixed { x_star, u_star } => self.model_at(x_star, u_star)?,
        };
        let zl = self.residual(&model)?;
        reach_step_cz(prev, input, &model, &zl, &self.zeps, &self.noise)
    }
}

/// `Ẑ_0 = X₀, Ẑ_k = step(Ẑ_{k−1}, U_k)` for `k = 1..N`.
pub fn reach_sequence<T: Scalar>(
    config: &ReachConfig<T>,
    dataset: &TrajectoryDataset<T>,
) -> Result<Vec<Zonotope<T>>, ReachError> {
    let mut sets = vec![config.initial.clone()];
    if config.horizon == 0 {
        return Ok(sets);
    }
    let reacher = Reacher::from_config(config, dataset.clone())?;
    for k in 1..=config.horizon {
        let input = config
            .input_at(k)
            .ok_or_else(|| ReachError::InvalidConfig(format!("no input set for step {k}")))?;
        let next = reacher.step(sets.last().expect("nonempty"), input)?;
        sets.push(next);
    }
    Ok(sets)
}

#[cfg(test)]
mod tests {
    use super::super::Trajectory;
    use super::*;
    use nalgebra::{dmatrix, dvector, DMatrix};

    fn identity_dataset() -> TrajectoryDataset {
        let mut trajs = Vec::new();
        for i in 0..6 {
            let x = dvector![i as f64 * 0.3 - 0.7, (i * i) as f64 * 0.1 - 0.4];
            trajs.push(Trajectory {
                states: vec![x.clone(), x],
                inputs: vec![dvector![(i as f64).sin()]],
            });
        }
        TrajectoryDataset::new(trajs).unwrap()
    }

    #[test]
    fn identity_model_keeps_unit_box() {
        let model = LeastSquaresModel {
            m: dmatrix![0.0, 1.0, 0.0, 0.0; 0.0, 0.0, 1.0, 0.0],
            x_star: dvector![0.0, 0.0],
            u_star: dvector![0.0],
        };
        let x0 = Zonotope::new(dvector![0.0, 0.0], DMatrix::identity(2, 2)).unwrap();
        let u = Zonotope::new(dvector![0.5], dmatrix![0.2]).unwrap();
        let origin = Zonotope::point(dvector![0.0, 0.0]);
        let z1 = reach_step(&x0, &u, &model, &origin, &origin, &origin, 10.0).unwrap();
        assert_eq!(z1, x0);
    }

    #[test]
    fn noise_enlarges_hull_by_its_radius() {
        let model = LeastSquaresModel {
            m: dmatrix![0.0, 1.0, 0.0, 0.0; 0.0, 0.0, 1.0, 0.0],
            x_star: dvector![0.0, 0.0],
            u_star: dvector![0.0],
        };
        let x0: Zonotope = Zonotope::new(dvector![0.0, 0.0], DMatrix::identity(2, 2)).unwrap();
        let u = Zonotope::point(dvector![0.0]);
        let origin = Zonotope::point(dvector![0.0, 0.0]);
        let zw = Zonotope::new(dvector![0.0, 0.0], dmatrix![0.9, 0.0; 0.0, 0.9]).unwrap();
        let z1 = reach_step(&x0, &u, &model, &origin, &origin, &zw, 10.0).unwrap();
        let h = z1.interval_hull();
        assert!((h.upper()[0] - 1.9).abs() < 1e-12 && (h.lower()[1] + 1.9).abs() < 1e-12);
    }

    #[test]
    fn identity_dynamics_sequence_is_constant() {
        let d = identity_dataset();
        let x0 = Zonotope::new(dvector![0.1, -0.2], dmatrix![0.5, 0.1; 0.0, 0.3]).unwrap();
        let mut cfg = ReachConfig::new(
            Zonotope::point(dvector![0.0, 0.0]),
            vec![Zonotope::new(dvector![0.0], dmatrix![0.5]).unwrap()],
            x0.clone(),
            5,
        );
        cfg.lipschitz = Estimate::Value(0.0);
        cfg.covering_radius = Estimate::Value(0.0);
        let sets = reach_sequence(&cfg, &d).unwrap();
        assert_eq!(sets.len(), 6);
        for s in &sets {
            assert!((s.center() - x0.center()).amax() < 1e-9);
            assert!(
                (s.volume(crate::setalg::VolumeMethod::Exact2d).unwrap()
                    - x0.volume(crate::setalg::VolumeMethod::Exact2d).unwrap())
                .abs()
                    < 1e-8
            );
        }
        cfg.horizon = 0;
        assert_eq!(reach_sequence(&cfg, &d).unwrap(), vec![x0]);
    }

    #[test]
    fn estimate_keyword_parses() {
        let v: Estimate = serde_json::from_str("\"estimate\"").unwrap();
        assert_eq!(v, Estimate::Estimate);
        let v: Estimate = serde_json::from_str("1.5").unwrap();
        assert_eq!(v, Estimate::Value(1.5));
        assert!(serde_json::from_str::<Estimate>("\"guess\"").is_err());
        assert_eq!(serde_json::to_string(&Estimate::Estimate).unwrap(), "\"estimate\"");
    }
}
