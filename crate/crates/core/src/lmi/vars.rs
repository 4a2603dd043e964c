use alloc::vec::Vec;
use core::fmt;
use nalgebra::DMatrix;

use crate::error::{dim_mismatch, invalid, Result};

/// Matrix-valued decision variables. Interval-indexed variables carry the
/// 1-based partition index `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarName {
    P,
    S,
    R,
    Q(usize),
    X(usize),
    U(usize),
    Z(usize),
    Y(usize),
}

impl fmt::Display for VarName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarName::P => write!(f, "P"),
            VarName::S => write!(f, "S"),
            VarName::R => write!(f, "R"),
            VarName::Q(i) => write!(f, "Q{i}"),
            VarName::X(i) => write!(f, "X{i}"),
            VarName::U(i) => write!(f, "U{i}"),
            VarName::Z(i) => write!(f, "Z{i}"),
            VarName::Y(i) => write!(f, "Y{i}"),
        }
    }
}

impl core::str::FromStr for VarName {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || invalid("variable name", alloc::format!("unknown variable `{s}`"));
        let mut chars = s.chars();
        let head = chars.next().ok_or_else(bad)?;
        let rest = chars.as_str();
        let index = || rest.parse::<usize>().map_err(|_| bad());
        Ok(match head {
            'P' if rest.is_empty() => VarName::P,
            'S' if rest.is_empty() => VarName::S,
            'R' if rest.is_empty() => VarName::R,
            'Q' => VarName::Q(index()?),
            'X' => VarName::X(index()?),
            'U' => VarName::U(index()?),
            'Z' => VarName::Z(index()?),
            'Y' => VarName::Y(index()?),
            _ => return Err(bad()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    Symmetric,
    General,
}

/// Placement of one matrix variable inside the flat scalar vector.
///
/// Symmetric blocks store their upper triangle row by row; general blocks
/// store every entry row by row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarBlock {
    pub name: VarName,
    pub rows: usize,
    pub cols: usize,
    pub structure: Structure,
    pub offset: usize,
}

impl VarBlock {
    pub fn len(&self) -> usize {
        match self.structure {
            Structure::Symmetric => self.rows * (self.rows + 1) / 2,
            Structure::General => self.rows * self.cols,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Local scalar index of entry `(r, c)`.
    pub fn local_index(&self, r: usize, c: usize) -> usize {
        match self.structure {
            Structure::Symmetric => {
                let (r, c) = if r <= c { (r, c) } else { (c, r) };
                sym_row_offset(self.rows, r) + (c - r)
            }
            Structure::General => r * self.cols + c,
        }
    }

    /// Entry positions `(r, c)` touched by local scalar `k`; symmetric
    /// off-diagonal scalars touch both `(r, c)` and `(c, r)`.
    pub fn entry_of(&self, k: usize) -> (usize, usize) {
        match self.structure {
            Structure::Symmetric => {
                let mut r = 0;
                let mut start = 0;
                while start + (self.rows - r) <= k {
                    start += self.rows - r;
                    r += 1;
                }
                (r, r + (k - start))
            }
            Structure::General => (k / self.cols, k % self.cols),
        }
    }
}

fn sym_row_offset(n: usize, r: usize) -> usize {
    // Σ_{j<r} (n - j)
    r * n - r * r.saturating_sub(1) / 2
}

/// Ordered set of matrix variables defining the flat decision vector.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VariableLayout {
    blocks: Vec<VarBlock>,
    len: usize,
}

impl VariableLayout {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: VarName, rows: usize, cols: usize, structure: Structure) -> Result<()> {
        if self.blocks.iter().any(|b| b.name == name) {
            return Err(invalid("variable layout", alloc::format!("duplicate variable {name}")));
        }
        if structure == Structure::Symmetric && rows != cols {
            return Err(dim_mismatch("symmetric variable", "square", alloc::format!("{rows}x{cols}")));
        }
        let block = VarBlock {
            name,
            rows,
            cols,
            structure,
            offset: self.len,
        };
        self.len += block.len();
        self.blocks.push(block);
        Ok(())
    }

    /// Layout of the stability conditions: `P_N`, `S`, `R` and, for every
    /// interval `i`, `Q_i`, `X_i`, `U_i` (symmetric), `Z_i` (`n x n`) and
    /// `Y_i` (`(N+3)n x n`).
    pub fn for_conditions(n: usize, order: usize, intervals: usize) -> Self {
        let mut layout = Self::new();
        let sym = Structure::Symmetric;
        let gen = Structure::General;
        let p = (order + 1) * n;
        layout.push(VarName::P, p, p, sym).unwrap();
        layout.push(VarName::S, n, n, sym).unwrap();
        layout.push(VarName::R, n, n, sym).unwrap();
        for i in 1..=intervals {
            layout.push(VarName::Q(i), n, n, sym).unwrap();
            layout.push(VarName::X(i), n, n, sym).unwrap();
            layout.push(VarName::U(i), n, n, sym).unwrap();
            layout.push(VarName::Z(i), n, n, gen).unwrap();
            layout.push(VarName::Y(i), (order + 3) * n, n, gen).unwrap();
        }
        layout
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn blocks(&self) -> &[VarBlock] {
        &self.blocks
    }

    pub fn block(&self, name: VarName) -> Option<&VarBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }
}

/// A point in decision-variable space.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionVariables {
    layout: VariableLayout,
    values: Vec<f64>,
}

impl DecisionVariables {
    pub fn zeros(layout: &VariableLayout) -> Self {
        Self {
            layout: layout.clone(),
            values: alloc::vec![0.0; layout.len()],
        }
    }

    pub fn from_values(layout: &VariableLayout, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.len() {
            return Err(dim_mismatch("decision vector", layout.len(), values.len()));
        }
        Ok(Self {
            layout: layout.clone(),
            values,
        })
    }

    pub fn layout(&self) -> &VariableLayout {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn matrix(&self, name: VarName) -> Option<DMatrix<f64>> {
        let b = self.layout.block(name)?;
        let mut m = DMatrix::zeros(b.rows, b.cols);
        for k in 0..b.len() {
            let (r, c) = b.entry_of(k);
            let v = self.values[b.offset + k];
            m[(r, c)] = v;
            if b.structure == Structure::Symmetric {
                m[(c, r)] = v;
            }
        }
        Some(m)
    }

    /// Writes `value` into variable `name`. Symmetric variables read the
    /// upper triangle only.
    pub fn set_matrix(&mut self, name: VarName, value: &DMatrix<f64>) -> Result<()> {
        let b = self
            .layout
            .block(name)
            .ok_or_else(|| invalid("variable", alloc::format!("{name} is not in the layout")))?
            .clone();
        if value.shape() != (b.rows, b.cols) {
            return Err(dim_mismatch(
                "variable value",
                alloc::format!("{}x{}", b.rows, b.cols),
                alloc::format!("{}x{}", value.nrows(), value.ncols()),
            ));
        }
        for k in 0..b.len() {
            let (r, c) = b.entry_of(k);
            self.values[b.offset + k] = value[(r, c)];
        }
        Ok(())
    }
}
