use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ScenarioError;
use crate::reach::{Trajectory, TrajectoryDataset};
use crate::setalg::Zonotope;

/// Planar kinematic unicycle `x⁺ = x + dt·v·(cos θ, sin θ) + w` with inputs
/// `u = (v, θ)` and bounded process noise `w ∈ Z_w`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSystem {
    pub dt: f64,
    pub speed: [f64; 2],
    pub heading: [f64; 2],
    pub noise: Zonotope,
    /// Transitions per recorded trajectory in generated datasets.
    pub segment_length: usize,
    /// Start positions of generated trajectories are uniform in this box
    /// (`[[x1_lo, x1_hi], [x2_lo, x2_hi]]`).
    pub start_box: [[f64; 2]; 2],
}

impl SyntheticSystem {
    pub fn unicycle(dt: f64, max_speed: f64, noise: Zonotope) -> Self {
        Self {
            dt,
            speed: [0.0, max_speed],
            heading: [-std::f64::consts::PI, std::f64::consts::PI],
            noise,
            segment_length: 50,
            start_box: [[-3.0, 3.0], [-3.0, 3.0]],
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let ok_range = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] <= r[1];
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(ScenarioError::Config(format!(
                "system dt must be positive, found {}",
                self.dt
            )));
        }
        if !ok_range(self.speed) || !ok_range(self.heading) || !self.start_box.iter().all(|r| ok_range(*r)) {
            return Err(ScenarioError::Config(
                "system ranges must be finite with lower ≤ upper".into(),
            ));
        }
        if self.noise.dim() != 2 {
            return Err(ScenarioError::Config(format!(
                "process noise must be 2-dimensional, found {}",
                self.noise.dim()
            )));
        }
        if self.segment_length == 0 {
            return Err(ScenarioError::Config("segment_length must be at least 1".into()));
        }
        Ok(())
    }

    /// Noise-free successor.
    pub fn f(&self, x: [f64; 2], u: [f64; 2]) -> [f64; 2] {
        let (v, th) = (u[0], u[1]);
        [x[0] + self.dt * v * th.cos(), x[1] + self.dt * v * th.sin()]
    }

    pub fn step(&self, x: [f64; 2], u: [f64; 2], w: [f64; 2]) -> [f64; 2] {
        let y = self.f(x, u);
        [y[0] + w[0], y[1] + w[1]]
    }

    pub fn sample_noise<R: Rng>(&self, rng: &mut R) -> [f64; 2] {
        let w = sample_zonotope(&self.noise, rng);
        [w[0], w[1]]
    }

    pub fn sample_input<R: Rng>(&self, rng: &mut R) -> [f64; 2] {
        [uniform(rng, self.speed), uniform(rng, self.heading)]
    }
}

fn uniform<R: Rng>(rng: &mut R, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.gen_range(r[0]..=r[1])
    }
}

/// `c + Gβ` with `β` uniform in the unit box; uniform over the set when the
/// generators are axis-aligned.
pub fn sample_zonotope<R: Rng>(z: &Zonotope, rng: &mut R) -> DVector<f64> {
    let beta = DVector::from_fn(z.num_generators(), |_, _| rng.gen_range(-1.0..=1.0));
    z.point_at(&beta)
}

/// Random-input trajectories of `sys` with `points` transitions in total,
/// split into segments of `sys.segment_length` (the last may be shorter).
/// The output depends only on `sys`, `points` and `seed`.
pub fn generate_dataset(sys: &SyntheticSystem, points: usize, seed: u64) -> Result<TrajectoryDataset, ScenarioError> {
    sys.validate()?;
    if points < 2 {
        return Err(ScenarioError::Config(format!(
            "dataset needs at least 2 points, found {points}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trajectories = Vec::new();
    let mut left = points;
    while left > 0 {
        let len = left.min(sys.segment_length);
        left -= len;
        let mut x = [uniform(&mut rng, sys.start_box[0]), uniform(&mut rng, sys.start_box[1])];
        let mut states = vec![DVector::from_column_slice(&x)];
        let mut inputs = Vec::with_capacity(len);
        for _ in 0..len {
            let u = sys.sample_input(&mut rng);
            let w = sys.sample_noise(&mut rng);
            x = sys.step(x, u, w);
            inputs.push(DVector::from_column_slice(&u));
            states.push(DVector::from_column_slice(&x));
        }
        trajectories.push(Trajectory { states, inputs });
    }
    Ok(TrajectoryDataset::new(trajectories)?)
}
