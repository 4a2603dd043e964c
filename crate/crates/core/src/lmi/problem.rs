use alloc::vec::Vec;
use core::fmt;
use nalgebra::{DMatrix, SymmetricEigen};

use super::vars::{DecisionVariables, VariableLayout};
use crate::error::{dim_mismatch, Result};

/// Required sign of a block: `≺ 0` or `≻ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    NegativeDefinite,
    PositiveDefinite,
}

/// Which condition a block encodes. Interval indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockLabel {
    Cond1,
    Cond2 { interval: usize },
    Cond3 { interval: usize },
    Cond4 { interval: usize },
    Cond5 { interval: usize },
    /// Positivity of a symmetric variable declared positive definite.
    VariableBound(super::vars::VarName),
}

impl BlockLabel {
    pub fn is_condition(&self) -> bool {
        !matches!(self, BlockLabel::VariableBound(_))
    }
}

impl fmt::Display for BlockLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlockLabel::Cond1 => write!(f, "cond1"),
            BlockLabel::Cond2 { interval } => write!(f, "cond2[{interval}]"),
            BlockLabel::Cond3 { interval } => write!(f, "cond3[{interval}]"),
            BlockLabel::Cond4 { interval } => write!(f, "cond4[{interval}]"),
            BlockLabel::Cond5 { interval } => write!(f, "cond5[{interval}]"),
            BlockLabel::VariableBound(v) => write!(f, "{v}>0"),
        }
    }
}

/// Upper-triangular entry `(row <= col)` of a symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triplet {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// `C + Σ_k v_k C_k` with every matrix stored as upper triplets.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineBlock {
    pub dim: usize,
    pub constant: Vec<Triplet>,
    /// `(scalar index, C_k)`, sorted by index.
    pub coefficients: Vec<(usize, Vec<Triplet>)>,
}

impl AffineBlock {
    pub fn evaluate(&self, values: &[f64]) -> Result<DMatrix<f64>> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        accumulate(&mut m, &self.constant, 1.0);
        for (k, trips) in &self.coefficients {
            let v = *values
                .get(*k)
                .ok_or_else(|| dim_mismatch("decision vector", alloc::format!("> {k}"), values.len()))?;
            accumulate(&mut m, trips, v);
        }
        Ok(m)
    }

    /// Largest absolute entry across the constant and all coefficient matrices.
    pub fn max_abs_coefficient(&self) -> f64 {
        self.constant
            .iter()
            .chain(self.coefficients.iter().flat_map(|(_, t)| t.iter()))
            .fold(0.0, |acc, t| acc.max(t.value.abs()))
    }
}

fn accumulate(m: &mut DMatrix<f64>, trips: &[Triplet], scale: f64) {
    for t in trips {
        m[(t.row, t.col)] += scale * t.value;
        if t.row != t.col {
            m[(t.col, t.row)] += scale * t.value;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintBlock {
    pub label: BlockLabel,
    pub sense: Sense,
    pub block: AffineBlock,
}

/// A set of strict LMIs over one decision vector.
///
/// Each block must satisfy `≺ -margin I` or `≻ margin I` in the solver;
/// re-verification accepts `margin / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiProblem {
    pub layout: VariableLayout,
    pub blocks: Vec<ConstraintBlock>,
    pub margin: f64,
}

impl LmiProblem {
    /// `ε = 1e-9 (1 + max |coefficient|)`.
    pub fn default_margin(blocks: &[ConstraintBlock]) -> f64 {
        let max = blocks
            .iter()
            .map(|b| b.block.max_abs_coefficient())
            .fold(0.0, f64::max);
        1e-9 * (1.0 + max)
    }

    pub fn condition_blocks(&self) -> impl Iterator<Item = &ConstraintBlock> {
        self.blocks.iter().filter(|b| b.label.is_condition())
    }

    /// Extreme eigenvalue of every block at `vars`.
    pub fn residuals(&self, vars: &DecisionVariables) -> Result<ResidualReport> {
        if vars.layout() != &self.layout {
            return Err(dim_mismatch("decision layout", self.layout.len(), vars.layout().len()));
        }
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            let m = b.block.evaluate(vars.values())?;
            let eig = SymmetricEigen::new(m).eigenvalues;
            let (lo, hi) = eig
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| (lo.min(e), hi.max(e)));
            // signed distance into the cone: positive means satisfied
            let margin = match b.sense {
                Sense::NegativeDefinite => -hi,
                Sense::PositiveDefinite => lo,
            };
            blocks.push(BlockResidual {
                label: b.label,
                sense: b.sense,
                min_eigenvalue: lo,
                max_eigenvalue: hi,
                margin: if margin.is_nan() { f64::NEG_INFINITY } else { margin },
            });
        }
        Ok(ResidualReport {
            threshold: self.margin / 2.0,
            blocks,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockResidual {
    pub label: BlockLabel,
    pub sense: Sense,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// `-λmax` for `≺ 0` blocks, `λmin` for `≻ 0` blocks.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    /// Minimum accepted margin, `ε / 2`.
    pub threshold: f64,
    pub blocks: Vec<BlockResidual>,
}

impl ResidualReport {
    pub fn passes(&self) -> bool {
        self.blocks.iter().all(|b| b.margin >= self.threshold)
    }

    pub fn worst(&self) -> Option<&BlockResidual> {
        self.blocks
            .iter()
            .min_by(|a, b| a.margin.partial_cmp(&b.margin).unwrap_or(core::cmp::Ordering::Less))
    }

    pub fn violations(&self) -> impl Iterator<Item = &BlockResidual> {
        self.blocks.iter().filter(move |b| b.margin < self.threshold)
    }
}
