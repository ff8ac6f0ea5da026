use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};

use super::ReachError;
use crate::Scalar;

/// One recorded run: `states[k+1]` follows `states[k]` under `inputs[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T: Scalar = f64> {
    pub states: Vec<DVector<T>>,
    pub inputs: Vec<DVector<T>>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn transitions(&self) -> usize {
        self.inputs.len()
    }
}

/// Collection of trajectories with consistent state/input dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryDataset<T: Scalar = f64> {
    trajectories: Vec<Trajectory<T>>,
    state_dim: usize,
    input_dim: usize,
}

impl<T: Scalar> TrajectoryDataset<T> {
    pub fn new(trajectories: Vec<Trajectory<T>>) -> Result<Self, ReachError> {
        let first = trajectories
            .iter()
            .find(|t| !t.inputs.is_empty())
            .ok_or(ReachError::EmptyDataset)?;
        let (n, m) = (first.states[0].len(), first.inputs[0].len());
        for (j, t) in trajectories.iter().enumerate() {
            if t.states.len() != t.inputs.len() + 1 {
                return Err(ReachError::InvalidDataset(format!(
                    "trajectory {j} has {} states and {} inputs; expected exactly one more state",
                    t.states.len(),
                    t.inputs.len()
                )));
            }
            if t.states.iter().any(|x| x.len() != n) || t.inputs.iter().any(|u| u.len() != m) {
                return Err(ReachError::InvalidDataset(format!(
                    "trajectory {j} mixes dimensions (expected n = {n}, m = {m})"
                )));
            }
            if t.states
                .iter()
                .chain(&t.inputs)
                .flat_map(|v| v.iter())
                .any(|v| !v.is_finite_value())
            {
                return Err(ReachError::InvalidDataset(format!(
                    "trajectory {j} has non-finite values"
                )));
            }
        }
        Ok(Self {
            trajectories,
            state_dim: n,
            input_dim: m,
        })
    }

    pub fn trajectories(&self) -> &[Trajectory<T>] {
        &self.trajectories
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Total number of transitions `T`.
    pub fn num_points(&self) -> usize {
        self.trajectories.iter().map(Trajectory::transitions).sum()
    }

    /// `(X₋, X₊, U₋)`, one column per transition.
    pub fn matrices(&self) -> (DMatrix<T>, DMatrix<T>, DMatrix<T>) {
        let t = self.num_points();
        let mut xm = DMatrix::zeros(self.state_dim, t);
        let mut xp = DMatrix::zeros(self.state_dim, t);
        let mut um = DMatrix::zeros(self.input_dim, t);
        let mut col = 0;
        for tr in &self.trajectories {
            for k in 0..tr.transitions() {
                xm.set_column(col, &tr.states[k]);
                xp.set_column(col, &tr.states[k + 1]);
                um.set_column(col, &tr.inputs[k]);
                col += 1;
            }
        }
        (xm, xp, um)
    }

    /// Writes `traj,k,x1..xn,u1..um`; input cells are empty on each
    /// trajectory's final row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ReachError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["traj".to_string(), "k".to_string()];
        header.extend((1..=self.state_dim).map(|i| format!("x{i}")));
        header.extend((1..=self.input_dim).map(|i| format!("u{i}")));
        w.write_record(&header)?;
        for (j, tr) in self.trajectories.iter().enumerate() {
            for (k, x) in tr.states.iter().enumerate() {
                let mut row = vec![j.to_string(), k.to_string()];
                row.extend(x.iter().map(|v| v.to_string()));
                match tr.inputs.get(k) {
                    Some(u) => row.extend(u.iter().map(|v| v.to_string())),
                    None => row.extend(std::iter::repeat_n(String::new(), self.input_dim)),
                }
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, ReachError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let header = rdr.headers()?.clone();
        let cols: Vec<&str> = header.iter().collect();
        if cols.len() < 3 || cols[0] != "traj" || cols[1] != "k" {
            return Err(ReachError::Csv("header must start with `traj,k`".into()));
        }
        let n = cols[2..].iter().take_while(|c| c.starts_with('x')).count();
        let m = cols.len() - 2 - n;
        let names_ok = cols[2..2 + n]
            .iter()
            .enumerate()
            .all(|(i, c)| *c == format!("x{}", i + 1))
            && cols[2 + n..]
                .iter()
                .enumerate()
                .all(|(i, c)| *c == format!("u{}", i + 1));
        if n == 0 || !names_ok {
            return Err(ReachError::Csv("header must be traj,k,x1..xn,u1..um".into()));
        }
        let parse = |s: &str, line: u64| -> Result<T, ReachError> {
            s.parse::<f64>()
                .map(T::lit)
                .map_err(|_| ReachError::Csv(format!("line {line}: `{s}` is not a number")))
        };
        let mut trajectories: Vec<Trajectory<T>> = Vec::new();
        let mut current: Option<(String, Trajectory<T>, bool)> = None;
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            let traj = rec[0].to_string();
            let k: usize = rec[1]
                .parse()
                .map_err(|_| ReachError::Csv(format!("line {line}: bad step index `{}`", &rec[1])))?;
            let x = (0..n)
                .map(|i| parse(&rec[2 + i], line))
                .collect::<Result<Vec<T>, _>>()?;
            let u_cells: Vec<&str> = (0..m).map(|i| &rec[2 + n + i]).collect();
            let u_empty = u_cells.iter().all(|c| c.is_empty());
            if !u_empty && u_cells.iter().any(|c| c.is_empty()) {
                return Err(ReachError::Csv(format!("line {line}: partially empty input cells")));
            }
            let same = current.as_ref().is_some_and(|(id, _, _)| *id == traj);
            if !same {
                if let Some((id, tr, closed)) = current.take() {
                    if !closed {
                        return Err(ReachError::Csv(format!(
                            "trajectory {id} must end with a row whose inputs are empty"
                        )));
                    }
                    trajectories.push(tr);
                }
                if k != 0 {
                    return Err(ReachError::Csv(format!(
                        "line {line}: trajectory {traj} must start at k = 0"
                    )));
                }
                current = Some((
                    traj.clone(),
                    Trajectory {
                        states: Vec::new(),
                        inputs: Vec::new(),
                    },
                    false,
                ));
            }
            let (_, tr, closed) = current.as_mut().expect("current trajectory");
            if *closed {
                return Err(ReachError::Csv(format!(
                    "line {line}: trajectory {traj} continues after its final (input-free) row"
                )));
            }
            if k != tr.states.len() {
                return Err(ReachError::Csv(format!(
                    "line {line}: expected step {} in trajectory {traj}, found {k}",
                    tr.states.len()
                )));
            }
            tr.states.push(DVector::from_vec(x));
            if u_empty {
                *closed = true;
            } else {
                let u = u_cells.iter().map(|c| parse(c, line)).collect::<Result<Vec<T>, _>>()?;
                tr.inputs.push(DVector::from_vec(u));
            }
        }
        if let Some((id, tr, closed)) = current {
            if !closed {
                return Err(ReachError::Csv(format!(
                    "trajectory {id} must end with a row whose inputs are empty"
                )));
            }
            trajectories.push(tr);
        }
        Self::new(trajectories)
    }
}
