use alloc::vec::Vec;
use nalgebra::DVector;

use crate::error::{dim_mismatch, invalid, Result};

/// History `φ` on `[-h, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Constant(DVector<f64>),
    /// Linear interpolation through `(times[j], values[j])`; times increasing.
    PiecewiseLinear {
        times: Vec<f64>,
        values: Vec<DVector<f64>>,
    },
    /// `φ(s) = Σ_j coeffs[j] s^j`.
    Polynomial { coeffs: Vec<DVector<f64>> },
}

impl InitialCondition {
    pub fn constant(values: &[f64]) -> Self {
        InitialCondition::Constant(DVector::from_column_slice(values))
    }

    pub fn dim(&self) -> usize {
        match self {
            InitialCondition::Constant(v) => v.len(),
            InitialCondition::PiecewiseLinear { values, .. } => values.first().map_or(0, |v| v.len()),
            InitialCondition::Polynomial { coeffs } => coeffs.first().map_or(0, |v| v.len()),
        }
    }

    /// Checks dimensions and that the table covers `[-h, 0]`.
    pub fn validate(&self, n: usize, delay: f64) -> Result<()> {
        if self.dim() != n {
            return Err(dim_mismatch("initial condition", n, self.dim()));
        }
        match self {
            InitialCondition::Constant(v) => finite(v.iter()),
            InitialCondition::PiecewiseLinear { times, values } => {
                if times.len() != values.len() || times.len() < 2 {
                    return Err(invalid("initial condition", "need at least two (time, value) pairs of equal count"));
                }
                if values.iter().any(|v| v.len() != n) {
                    return Err(dim_mismatch("initial condition value", n, "ragged"));
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(invalid("initial condition", "times must be strictly increasing"));
                }
                let tol = 1e-12 * delay.max(1.0);
                if times[0] > -delay + tol || *times.last().unwrap() < -tol {
                    return Err(invalid("initial condition", "table must cover [-h, 0]"));
                }
                finite(times.iter().chain(values.iter().flat_map(|v| v.iter())))
            }
            InitialCondition::Polynomial { coeffs } => {
                if coeffs.iter().any(|v| v.len() != n) {
                    return Err(dim_mismatch("initial condition coefficient", n, "ragged"));
                }
                finite(coeffs.iter().flat_map(|v| v.iter()))
            }
        }
    }

    pub fn eval(&self, s: f64) -> DVector<f64> {
        match self {
            InitialCondition::Constant(v) => v.clone(),
            InitialCondition::PiecewiseLinear { times, values } => {
                let j = times.partition_point(|&t| t <= s);
                if j == 0 {
                    return values[0].clone();
                }
                if j == times.len() {
                    return values[j - 1].clone();
                }
                let (t0, t1) = (times[j - 1], times[j]);
                let w = (s - t0) / (t1 - t0);
                &values[j - 1] * (1.0 - w) + &values[j] * w
            }
            InitialCondition::Polynomial { coeffs } => {
                let mut acc = DVector::zeros(self.dim());
                for c in coeffs.iter().rev() {
                    acc = acc * s + c;
                }
                acc
            }
        }
    }

    /// Linear functional usable for the W-norm sup part: max over a uniform grid.
    pub fn sup_norm(&self, delay: f64, samples: usize) -> f64 {
        let samples = samples.max(1);
        (0..=samples)
            .map(|j| self.eval(-delay + delay * j as f64 / samples as f64).norm())
            .fold(0.0, f64::max)
    }
}

fn finite<'a>(mut it: impl Iterator<Item = &'a f64>) -> Result<()> {
    if it.all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(invalid("initial condition", "values must be finite"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn piecewise_linear_interpolates() {
        let phi = InitialCondition::PiecewiseLinear {
            times: alloc::vec![-1.0, -0.5, 0.0],
            values: alloc::vec![
                DVector::from_vec(alloc::vec![0.0]),
                DVector::from_vec(alloc::vec![1.0]),
                DVector::from_vec(alloc::vec![3.0]),
            ],
        };
        phi.validate(1, 1.0).unwrap();
        assert_eq!(phi.eval(-0.75)[0], 0.5);
        assert_eq!(phi.eval(-0.25)[0], 2.0);
        assert_eq!(phi.eval(0.0)[0], 3.0);
        assert!(phi.validate(1, 2.0).is_err());
    }

    #[test]
    fn polynomial_horner() {
        let phi = InitialCondition::Polynomial {
            coeffs: alloc::vec![DVector::from_vec(alloc::vec![1.0]), DVector::from_vec(alloc::vec![2.0])],
        };
        assert_eq!(phi.eval(-0.5)[0], 0.0);
        assert!(phi.validate(2, 1.0).is_err());
    }
}
