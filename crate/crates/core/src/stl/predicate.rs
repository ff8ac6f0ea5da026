use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};

use super::StlError;
use crate::expr::Expr;

/// How the strip is described.
#[derive(Debug, Clone, PartialEq)]
pub enum PredicateKind {
    /// `𝔥(x) = r - |H x - y|`, one row per component.
    Linear {
        h: DMatrix<f64>,
        y: DVector<f64>,
        r: DVector<f64>,
    },
    /// `𝔥(x) = r - |h(x)|`.
    Nonlinear { h: Vec<Expr>, r: DVector<f64> },
}

/// A named (possibly multi-row) strip `{ x : 𝔥(x) ≥ 0 }`.
#[derive(Debug, Clone, PartialEq)]
pub struct Predicate {
    name: String,
    kind: PredicateKind,
}

fn invalid(name: &str, message: impl Into<String>) -> StlError {
    StlError::InvalidPredicate {
        name: name.to_string(),
        message: message.into(),
    }
}

fn check_radii(name: &str, r: &DVector<f64>) -> Result<(), StlError> {
    match r.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        Some(v) => Err(invalid(
            name,
            format!("strip radius {v} must be finite and nonnegative"),
        )),
        None => Ok(()),
    }
}

impl Predicate {
    pub fn linear(name: &str, h: DMatrix<f64>, y: DVector<f64>, r: DVector<f64>) -> Result<Self, StlError> {
        if h.nrows() != y.len() || h.nrows() != r.len() || h.nrows() == 0 {
            return Err(invalid(name, "H, y and r need the same positive row count"));
        }
        check_radii(name, &r)?;
        Ok(Self {
            name: name.to_string(),
            kind: PredicateKind::Linear { h, y, r },
        })
    }

    /// Single-row linear strip `r - |row·x - y|`.
    pub fn linear_row(name: &str, row: &[f64], y: f64, r: f64) -> Result<Self, StlError> {
        Self::linear(
            name,
            DMatrix::from_row_slice(1, row.len(), row),
            DVector::from_element(1, y),
            DVector::from_element(1, r),
        )
    }

    pub fn nonlinear(name: &str, h: Vec<Expr>, r: DVector<f64>) -> Result<Self, StlError> {
        if h.len() != r.len() || h.is_empty() {
            return Err(invalid(name, "h and r need the same positive length"));
        }
        if h.iter().any(|e| e.dim() != h[0].dim()) {
            return Err(invalid(name, "all components of h must share a dimension"));
        }
        check_radii(name, &r)?;
        Ok(Self {
            name: name.to_string(),
            kind: PredicateKind::Nonlinear { h, r },
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &PredicateKind {
        &self.kind
    }

    pub fn rows(&self) -> usize {
        match &self.kind {
            PredicateKind::Linear { r, .. } | PredicateKind::Nonlinear { r, .. } => r.len(),
        }
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            PredicateKind::Linear { h, .. } => h.ncols(),
            PredicateKind::Nonlinear { h, .. } => h[0].dim(),
        }
    }

    pub fn radii(&self) -> &DVector<f64> {
        match &self.kind {
            PredicateKind::Linear { r, .. } | PredicateKind::Nonlinear { r, .. } => r,
        }
    }

    /// Same strip expressed through expressions (an affine `h`), so linear
    /// predicates can be routed through the nonlinear algorithms.
    pub fn as_nonlinear(&self) -> Result<Self, StlError> {
        match &self.kind {
            PredicateKind::Nonlinear { .. } => Ok(self.clone()),
            PredicateKind::Linear { h, y, r } => {
                let exprs = (0..h.nrows())
                    .map(|i| {
                        let row: Vec<f64> = h.row(i).iter().copied().collect();
                        Expr::affine(&row, -y[i]).map_err(|source| StlError::Expr {
                            name: self.name.clone(),
                            source,
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Self::nonlinear(&self.name, exprs, r.clone())
            }
        }
    }

    /// Componentwise `𝔥(x)`.
    pub fn values(&self, x: &[f64]) -> Result<Vec<f64>, StlError> {
        if x.len() != self.dim() {
            return Err(invalid(
                &self.name,
                format!("evaluated at a {}-dimensional point, expects {}", x.len(), self.dim()),
            ));
        }
        match &self.kind {
            PredicateKind::Linear { h, y, r } => Ok((0..h.nrows())
                .map(|i| {
                    let hx: f64 = h.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
                    r[i] - (hx - y[i]).abs()
                })
                .collect()),
            PredicateKind::Nonlinear { h, r } => h
                .iter()
                .zip(r.iter())
                .map(|(e, ri)| {
                    e.eval(x).map(|v: f64| ri - v.abs()).map_err(|source| StlError::Expr {
                        name: self.name.clone(),
                        source,
                    })
                })
                .collect(),
        }
    }

    /// Robustness-style margin `min_i 𝔥_i(x)`; the predicate holds iff it
    /// is nonnegative.
    pub fn margin(&self, x: &[f64]) -> Result<f64, StlError> {
        Ok(self.values(x)?.into_iter().fold(f64::INFINITY, f64::min))
    }

    pub fn holds(&self, x: &[f64]) -> Result<bool, StlError> {
        Ok(self.margin(x)? >= 0.0)
    }
}

/// Predicates plus the atoms formulas refer to.
///
/// An atom names a list of predicates that must all hold. A *region* entry
/// attaches extra predicates to a conjunction of atoms: whenever all atoms
/// of the set hold at once, the region's predicates are known to hold as
/// well, and a conjunction of exactly those atoms is compiled to the region
/// predicates alone. Names without an atom entry resolve to the predicate of
/// the same name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PredicateTable {
    predicates: Vec<Predicate>,
    atoms: BTreeMap<String, Vec<String>>,
    regions: Vec<(BTreeSet<String>, Vec<String>)>,
}

impl PredicateTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds or replaces a predicate. Declaration order is kept and decides
    /// folding order when several predicates are active at one step.
    pub fn insert(&mut self, p: Predicate) {
        if let Some(slot) = self.predicates.iter_mut().find(|q| q.name == p.name) {
            *slot = p;
        } else {
            self.predicates.push(p);
        }
    }

    pub fn with(mut self, p: Predicate) -> Self {
        self.insert(p);
        self
    }

    pub fn define_atom(&mut self, atom: &str, predicates: &[&str]) -> Result<(), StlError> {
        for p in predicates {
            self.get(p)?;
        }
        self.atoms
            .insert(atom.to_string(), predicates.iter().map(|s| s.to_string()).collect());
        Ok(())
    }

    /// Declares that the conjunction of `atoms` implies `predicates`.
    pub fn define_region(&mut self, atoms: &[&str], predicates: &[&str]) -> Result<(), StlError> {
        for a in atoms {
            self.resolve_atom(a)?;
        }
        for p in predicates {
            self.get(p)?;
        }
        let key: BTreeSet<String> = atoms.iter().map(|s| s.to_string()).collect();
        let preds = predicates.iter().map(|s| s.to_string()).collect();
        self.regions.retain(|(k, _)| *k != key);
        self.regions.push((key, preds));
        Ok(())
    }

    pub fn predicates(&self) -> &[Predicate] {
        &self.predicates
    }

    pub fn get(&self, name: &str) -> Result<&Predicate, StlError> {
        self.predicates
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| StlError::UnknownPredicate(name.to_string()))
    }

    pub fn contains_atom(&self, atom: &str) -> bool {
        self.resolve_atom(atom).is_ok()
    }

    /// Predicate names an atom stands for.
    pub fn resolve_atom(&self, atom: &str) -> Result<Vec<String>, StlError> {
        match self.atoms.get(atom) {
            Some(list) => Ok(list.clone()),
            None => self.get(atom).map(|p| vec![p.name.clone()]),
        }
    }

    /// Region predicates implied by a conjunction of exactly `atoms`.
    pub fn region(&self, atoms: &BTreeSet<String>) -> Option<&[String]> {
        self.regions.iter().find(|(k, _)| k == atoms).map(|(_, v)| v.as_slice())
    }

    /// Declaration index, used to order activations.
    pub fn position(&self, name: &str) -> usize {
        self.predicates
            .iter()
            .position(|p| p.name == name)
            .unwrap_or(usize::MAX)
    }

    pub fn atom_holds(&self, atom: &str, x: &[f64]) -> Result<bool, StlError> {
        for p in self.resolve_atom(atom)? {
            if !self.get(&p)?.holds(x)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}
