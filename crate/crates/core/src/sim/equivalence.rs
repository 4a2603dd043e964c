use alloc::vec::Vec;

use crate::error::{invalid, Result};

/// Scalar signal, polynomial on each `[breaks[j], breaks[j+1])` in the local
/// variable `t - breaks[j]`. Constant extension beyond the last break uses
/// the last piece.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePolynomial {
    breaks: Vec<f64>,
    coeffs: Vec<Vec<f64>>,
}

impl PiecewisePolynomial {
    pub fn new(breaks: Vec<f64>, coeffs: Vec<Vec<f64>>) -> Result<Self> {
        if breaks.is_empty() || coeffs.len() != breaks.len() {
            return Err(invalid("piecewise polynomial", "need one coefficient list per break"));
        }
        if breaks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("piecewise polynomial", "breaks must be strictly increasing"));
        }
        if breaks
            .iter()
            .chain(coeffs.iter().flatten())
            .any(|v| !v.is_finite())
        {
            return Err(invalid("piecewise polynomial", "values must be finite"));
        }
        Ok(Self { breaks, coeffs })
    }

    pub fn constant(value: f64) -> Self {
        Self {
            breaks: alloc::vec![0.0],
            coeffs: alloc::vec![alloc::vec![value]],
        }
    }

    /// Continuous piecewise-linear interpolant of `(times, values)`.
    pub fn linear(times: &[f64], values: &[f64]) -> Result<Self> {
        if times.len() != values.len() || times.len() < 2 {
            return Err(invalid("piecewise polynomial", "need matching knots, at least two"));
        }
        let mut coeffs: Vec<Vec<f64>> = times
            .windows(2)
            .zip(values.windows(2))
            .map(|(t, v)| alloc::vec![v[0], (v[1] - v[0]) / (t[1] - t[0])])
            .collect();
        coeffs.push(alloc::vec![*values.last().unwrap()]);
        Self::new(times.to_vec(), coeffs)
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    fn piece(&self, j: usize, t: f64) -> f64 {
        let s = t - self.breaks[j];
        self.coeffs[j].iter().rev().fold(0.0, |acc, c| acc * s + c)
    }

    /// Right-continuous value; `left` selects the left limit at breaks.
    pub fn eval(&self, t: f64, left: bool) -> f64 {
        let j = if left {
            self.breaks.partition_point(|&b| b < t)
        } else {
            self.breaks.partition_point(|&b| b <= t)
        };
        self.piece(j.saturating_sub(1), t)
    }
}

/// Runs the reset integrator `x' = u, x(t_k+) = 0, y = x` and its sampled
/// form `x_s' = u, y = x_s - x_s(t_k)` on a common grid and returns the
/// largest output gap. Both start from `x0`.
pub fn equivalence_oracle_ci(
    input: &PiecewisePolynomial,
    resets: &[f64],
    x0: f64,
    horizon: f64,
    step: f64,
) -> Result<f64> {
    if !(horizon > 0.0 && step > 0.0) {
        return Err(invalid("horizon/step", "must be positive"));
    }
    if resets.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("resets", "must be strictly increasing"));
    }
    let eps = step * 1e-9;
    let mut grid: Vec<f64> = (1..)
        .map(|k| k as f64 * step)
        .take_while(|&t| t < horizon)
        .chain(input.breaks().iter().copied().chain(resets.iter().copied()))
        .filter(|&t| t > eps && t < horizon - eps)
        .chain([horizon])
        .collect();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup_by(|a, b| (*a - *b).abs() <= eps);

    let mut ri = x0;
    let mut s = x0;
    let mut held = 0.0;
    let mut next_reset = resets.partition_point(|&r| r <= eps);
    let mut t: f64 = 0.0;
    let mut worst: f64 = 0.0;
    for &t1 in &grid {
        let dt = t1 - t;
        let mid = 0.5 * (t + t1);
        // Simpson, one-sided at the step ends
        let inc = dt / 6.0 * (input.eval(t, false) + 4.0 * input.eval(mid, false) + input.eval(t1, true));
        ri += inc;
        s += inc;
        worst = worst.max((ri - (s - held)).abs());
        if resets.get(next_reset).is_some_and(|&r| (r - t1).abs() <= eps) {
            next_reset += 1;
            ri = 0.0;
            held = s;
            worst = worst.max((ri - (s - held)).abs());
        }
        t = t1;
    }
    Ok(worst)
}
