use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use super::problem::{AffineBlock, Triplet};
use super::vars::{DecisionVariables, Structure, VarName, VariableLayout};
use crate::error::{dim_mismatch, invalid, Result};

/// `scale * L V R`, plus its transpose when `hermitian` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct CongruenceTerm {
    pub var: VarName,
    pub left: DMatrix<f64>,
    pub right: DMatrix<f64>,
    pub scale: f64,
    pub hermitian: bool,
}

/// Symmetric matrix expression `C + Σ terms`, affine in the decision variables.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricExpr {
    dim: usize,
    constant: DMatrix<f64>,
    terms: Vec<CongruenceTerm>,
}

impl SymmetricExpr {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            constant: DMatrix::zeros(dim, dim),
            terms: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[CongruenceTerm] {
        &self.terms
    }

    pub fn constant(&self) -> &DMatrix<f64> {
        &self.constant
    }

    pub fn add_constant(&mut self, c: &DMatrix<f64>) -> Result<&mut Self> {
        if c.shape() != (self.dim, self.dim) {
            return Err(dim_mismatch("constant term", self.dim, c.nrows()));
        }
        self.constant += c;
        Ok(self)
    }

    /// Adds `scale * L V Lᵀ` for a symmetric variable.
    pub fn congruence(&mut self, var: VarName, left: &DMatrix<f64>, scale: f64) -> Result<&mut Self> {
        self.push(CongruenceTerm {
            var,
            left: left.clone(),
            right: left.transpose(),
            scale,
            hermitian: false,
        })
    }

    /// Adds `scale * He(L V R)`.
    pub fn he(&mut self, var: VarName, left: &DMatrix<f64>, right: &DMatrix<f64>, scale: f64) -> Result<&mut Self> {
        self.push(CongruenceTerm {
            var,
            left: left.clone(),
            right: right.clone(),
            scale,
            hermitian: true,
        })
    }

    pub fn push(&mut self, term: CongruenceTerm) -> Result<&mut Self> {
        if term.left.nrows() != self.dim || term.right.ncols() != self.dim {
            return Err(dim_mismatch(
                "congruence term",
                alloc::format!("{0} rows / {0} cols", self.dim),
                alloc::format!("{} rows / {} cols", term.left.nrows(), term.right.ncols()),
            ));
        }
        if !term.hermitian && term.left != term.right.transpose() {
            return Err(invalid(
                "congruence term",
                "non-hermitian terms must have right = leftᵀ",
            ));
        }
        if term.scale != 0.0 {
            self.terms.push(term);
        }
        Ok(self)
    }

    pub fn scale(mut self, s: f64) -> Self {
        self.constant *= s;
        for t in &mut self.terms {
            t.scale *= s;
        }
        self.terms.retain(|t| t.scale != 0.0);
        self
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(mut self, other: &SymmetricExpr) -> Result<Self> {
        if other.dim != self.dim {
            return Err(dim_mismatch("expression sum", self.dim, other.dim));
        }
        self.constant += &other.constant;
        self.terms.extend(other.terms.iter().cloned());
        Ok(self)
    }

    /// Places this expression at rows/columns `offset..offset+dim` of a
    /// `dim`-sized zero expression.
    pub fn embed(&self, dim: usize, offset: usize) -> Result<Self> {
        if offset + self.dim > dim {
            return Err(dim_mismatch("embedding", alloc::format!("<= {dim}"), offset + self.dim));
        }
        let mut out = SymmetricExpr::zeros(dim);
        out.constant
            .view_mut((offset, offset), (self.dim, self.dim))
            .copy_from(&self.constant);
        for t in &self.terms {
            let mut left = DMatrix::zeros(dim, t.left.ncols());
            left.view_mut((offset, 0), t.left.shape()).copy_from(&t.left);
            let mut right = DMatrix::zeros(t.right.nrows(), dim);
            right.view_mut((0, offset), t.right.shape()).copy_from(&t.right);
            out.terms.push(CongruenceTerm {
                var: t.var,
                left,
                right,
                scale: t.scale,
                hermitian: t.hermitian,
            });
        }
        Ok(out)
    }

    /// Dense value at `vars`, computed from whole-matrix products.
    pub fn evaluate(&self, vars: &DecisionVariables) -> Result<DMatrix<f64>> {
        let mut out = self.constant.clone();
        for t in &self.terms {
            let v = vars
                .matrix(t.var)
                .ok_or_else(|| invalid("variable", alloc::format!("{} is not in the layout", t.var)))?;
            let prod = (&t.left * v * &t.right) * t.scale;
            if t.hermitian {
                out += &prod + prod.transpose();
            } else {
                out += prod;
            }
        }
        Ok(out)
    }

    /// Expands every term over the scalar basis of `layout`.
    ///
    /// Coefficients are stored upper-triangular and exact zeros are dropped.
    pub fn compile(&self, layout: &VariableLayout) -> Result<AffineBlock> {
        let d = self.dim;
        let mut dense: BTreeMap<usize, DMatrix<f64>> = BTreeMap::new();
        for t in &self.terms {
            let b = layout
                .block(t.var)
                .ok_or_else(|| invalid("variable", alloc::format!("{} is not in the layout", t.var)))?;
            if t.left.ncols() != b.rows || t.right.nrows() != b.cols {
                return Err(dim_mismatch(
                    "term/variable shape",
                    alloc::format!("{}x{}", b.rows, b.cols),
                    alloc::format!("{}x{}", t.left.ncols(), t.right.nrows()),
                ));
            }
            for k in 0..b.len() {
                let (r, c) = b.entry_of(k);
                let mut m = t.left.column(r) * t.right.row(c);
                if b.structure == Structure::Symmetric && r != c {
                    m += t.left.column(c) * t.right.row(r);
                }
                if t.hermitian {
                    m = &m + m.transpose();
                }
                m *= t.scale;
                let acc = dense
                    .entry(b.offset + k)
                    .or_insert_with(|| DMatrix::zeros(d, d));
                *acc += m;
            }
        }
        let coefficients = dense
            .into_iter()
            .filter_map(|(k, m)| {
                let trips = upper_triplets(&m);
                (!trips.is_empty()).then_some((k, trips))
            })
            .collect();
        Ok(AffineBlock {
            dim: d,
            constant: upper_triplets(&self.constant),
            coefficients,
        })
    }
}

fn upper_triplets(m: &DMatrix<f64>) -> Vec<Triplet> {
    let mut out = Vec::new();
    for c in 0..m.ncols() {
        for r in 0..=c {
            let value = m[(r, c)];
            if value != 0.0 {
                out.push(Triplet { row: r, col: c, value });
            }
        }
    }
    out
}
