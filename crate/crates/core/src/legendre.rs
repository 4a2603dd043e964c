//! Shifted Legendre polynomials on `[-h, 0]` and the projection matrices
//! built from them.
//!
//! The augmented vector used by the stability conditions is
//!
//! ```text
//! xi = [ x(t), x(t-h), (1/h)∫L_0 x, ..., (1/h)∫L_{N-1} x, x(t_k) ]
//! ```
//!
//! with `N + 3` blocks of size `n`. All matrices here act on that vector.

use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::model::{check_delay, SampledDataModel};

/// Largest degree evaluated with the explicit binomial sum.
pub const MAX_DEGREE: usize = 10;

/// Legendre polynomials `L_0..=L_N` on `[-h, 0]` with `L_k(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegendreBasis {
    delay: f64,
    max_degree: usize,
}

impl LegendreBasis {
    pub fn new(delay: f64, max_degree: usize) -> Result<Self> {
        check_delay(delay)?;
        if max_degree > MAX_DEGREE {
            return Err(invalid(
                "max_degree",
                alloc::format!("{max_degree} exceeds the supported maximum {MAX_DEGREE}"),
            ));
        }
        Ok(Self { delay, max_degree })
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// `L_k(u) = (-1)^k Σ_l (-1)^l C(k,l) C(k+l,l) ((u+h)/h)^l`.
    pub fn eval(&self, k: usize, u: f64) -> Result<f64> {
        if k > self.max_degree {
            return Err(invalid(
                "degree",
                alloc::format!("{k} exceeds the basis degree {}", self.max_degree),
            ));
        }
        let h = self.delay;
        if !(-h..=0.0).contains(&u) {
            return Err(Error::Domain {
                value: u,
                lower: -h,
                upper: 0.0,
            });
        }
        let z = (u + h) / h;
        let mut sum = 0.0;
        let mut zl = 1.0;
        for l in 0..=k {
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * binomial(k, l) * binomial(k + l, l) * zl;
            zl *= z;
        }
        Ok(if k.is_multiple_of(2) { sum } else { -sum })
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    libm::round(acc)
}

/// Coefficient `γ_k^i = -(2i+1)(1 - (-1)^{k+i})` for `i <= k`, zero beyond.
///
/// `h L_k' = -Σ_i γ_k^i L_i`, so these weights express the derivative of the
/// degree-`k` projection in terms of lower-degree projections.
pub fn gamma_coeff(k: usize, i: usize) -> f64 {
    if i > k {
        return 0.0;
    }
    let parity = if (k + i).is_multiple_of(2) { 1.0 } else { -1.0 };
    -((2 * i + 1) as f64) * (1.0 - parity)
}

/// Constant matrices entering the stability conditions for a given model,
/// Legendre order `N` and decay rate `α`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrices {
    pub n: usize,
    pub order: usize,
    pub delay: f64,
    pub decay_rate: f64,
    /// `[[I, 0, 0, 0], [0, 0, h I_{nN}, 0]]`, maps `xi` to the augmented state.
    pub g: DMatrix<f64>,
    /// `[Λ, Λ_d, 0, ΛK]`, maps `xi` to `x'(t)`.
    pub f: DMatrix<f64>,
    /// `[F; Γ(0); ...; Γ(N-1)]`, derivative of the augmented state.
    pub h: DMatrix<f64>,
    /// `[Γ(0); ...; Γ(N)]`.
    pub gamma_n: DMatrix<f64>,
    pub n1: DMatrix<f64>,
    pub n2: DMatrix<f64>,
    pub n12: DMatrix<f64>,
    /// Selector of the delayed block `x(t-h)`.
    pub nd: DMatrix<f64>,
    /// `e^{-2αh}`.
    pub delay_weight: f64,
}

impl ProjectionMatrices {
    pub fn build(model: &SampledDataModel, order: usize, decay_rate: f64) -> Result<Self> {
        if order == 0 {
            return Err(invalid("order", "Legendre order N must be at least 1"));
        }
        if order > MAX_DEGREE {
            return Err(invalid(
                "order",
                alloc::format!("N = {order} exceeds {MAX_DEGREE}"),
            ));
        }
        if !decay_rate.is_finite() {
            return Err(invalid("decay_rate", "must be finite"));
        }
        let n = model.dim();
        let h = model.delay;
        let blocks = order + 3;
        let width = blocks * n;
        let eye = DMatrix::<f64>::identity(n, n);

        let mut g = DMatrix::zeros((order + 1) * n, width);
        g.view_mut((0, 0), (n, n)).copy_from(&eye);
        for j in 0..order * n {
            g[(n + j, 2 * n + j)] = h;
        }

        let mut f = DMatrix::zeros(n, width);
        f.view_mut((0, 0), (n, n)).copy_from(&model.lambda);
        f.view_mut((0, n), (n, n)).copy_from(&model.lambda_d);
        f.view_mut((0, (blocks - 1) * n), (n, n))
            .copy_from(&(&model.lambda * &model.k));

        let gammas: Vec<DMatrix<f64>> = (0..=order).map(|k| gamma_row(n, order, k)).collect();

        let mut hm = DMatrix::zeros((order + 1) * n, width);
        hm.view_mut((0, 0), (n, width)).copy_from(&f);
        for (k, row) in gammas.iter().take(order).enumerate() {
            hm.view_mut(((k + 1) * n, 0), (n, width)).copy_from(row);
        }

        let mut gamma_n = DMatrix::zeros((order + 1) * n, width);
        for (k, row) in gammas.iter().enumerate() {
            gamma_n.view_mut((k * n, 0), (n, width)).copy_from(row);
        }

        let n1 = block_selector(n, blocks, 0);
        let nd = block_selector(n, blocks, 1);
        let n2 = block_selector(n, blocks, blocks - 1);
        let n12 = &n1 - &n2;

        Ok(Self {
            n,
            order,
            delay: h,
            decay_rate,
            g,
            f,
            h: hm,
            gamma_n,
            n1,
            n2,
            n12,
            nd,
            delay_weight: libm::exp(-2.0 * decay_rate * h),
        })
    }

    /// Width `(N+3) n` of the augmented vector.
    pub fn augmented_dim(&self) -> usize {
        (self.order + 3) * self.n
    }

    /// `Γ(k) = [I, (-1)^{k+1} I, γ_k^0 I, ..., γ_k^{N-1} I, 0]`.
    pub fn gamma(&self, k: usize) -> DMatrix<f64> {
        gamma_row(self.n, self.order, k)
    }

    /// Weights `e^{-2αh}(2j+1)` of the block-diagonal `R_N = diag(R, 3R, ...)`.
    pub fn rn_weights(&self) -> Vec<f64> {
        (0..=self.order)
            .map(|j| self.delay_weight * (2 * j + 1) as f64)
            .collect()
    }
}

fn gamma_row(n: usize, order: usize, k: usize) -> DMatrix<f64> {
    let blocks = order + 3;
    let mut row = DMatrix::zeros(n, blocks * n);
    let delayed = if k.is_multiple_of(2) { -1.0 } else { 1.0 };
    for d in 0..n {
        row[(d, d)] = 1.0;
        row[(d, n + d)] = delayed;
        for i in 0..order {
            row[(d, (2 + i) * n + d)] = gamma_coeff(k, i);
        }
    }
    row
}

/// `n x blocks*n` matrix selecting block `index`.
pub(crate) fn block_selector(n: usize, blocks: usize, index: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(n, blocks * n);
    for d in 0..n {
        s[(d, index * n + d)] = 1.0;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_sampled_data, presets};
    use approx::assert_abs_diff_eq;

    /// Shifted-Legendre three-term recurrence on z = 2(u+h)/h - 1.
    fn recurrence(k: usize, u: f64, h: f64) -> f64 {
        let z = 2.0 * (u + h) / h - 1.0;
        let (mut p0, mut p1) = (1.0, z);
        if k == 0 {
            return p0;
        }
        for m in 1..k {
            let p2 = ((2 * m + 1) as f64 * z * p1 - m as f64 * p0) / (m + 1) as f64;
            p0 = p1;
            p1 = p2;
        }
        p1
    }

    #[test]
    fn low_degree_values() {
        let b = LegendreBasis::new(1.0, 5).unwrap();
        for &u in &[-1.0, -0.3, 0.0] {
            assert_eq!(b.eval(0, u).unwrap(), 1.0);
        }
        assert_eq!(b.eval(1, 0.0).unwrap(), 1.0);
        assert_eq!(b.eval(1, -1.0).unwrap(), -1.0);
    }

    #[test]
    fn binomial_sum_matches_recurrence() {
        let b = LegendreBasis::new(2.0, 10).unwrap();
        assert_abs_diff_eq!(b.eval(3, -0.7).unwrap(), recurrence(3, -0.7, 2.0), epsilon = 1e-13);
        for k in 0..=10 {
            for i in 0..=20 {
                let u = -2.0 * i as f64 / 20.0;
                assert_abs_diff_eq!(b.eval(k, u).unwrap(), recurrence(k, u, 2.0), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn derivative_weights_match_finite_differences() {
        // h L_k'(u) = -Σ γ_k^i L_i(u)
        let h = 1.3;
        let b = LegendreBasis::new(h, 6).unwrap();
        let du = 1e-5;
        for k in 0..=6 {
            for &u in &[-1.1, -0.65, -0.2] {
                let fd = (b.eval(k, u + du).unwrap() - b.eval(k, u - du).unwrap()) / (2.0 * du);
                let series: f64 = (0..=k).map(|i| -gamma_coeff(k, i) * b.eval(i, u).unwrap()).sum();
                assert_abs_diff_eq!(h * fd, series, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn rejects_out_of_domain() {
        let b = LegendreBasis::new(1.0, 3).unwrap();
        assert!(matches!(b.eval(2, 0.1), Err(Error::Domain { .. })));
        assert!(matches!(b.eval(2, -1.01), Err(Error::Domain { .. })));
        assert!(b.eval(4, -0.5).is_err());
        assert!(LegendreBasis::new(0.0, 3).is_err());
        assert!(LegendreBasis::new(1.0, 11).is_err());
    }

    #[test]
    fn gamma_values() {
        assert_eq!(gamma_coeff(0, 0), 0.0);
        assert_eq!(gamma_coeff(1, 0), -2.0);
        assert_eq!(gamma_coeff(2, 3), 0.0);
        assert_eq!(gamma_coeff(2, 0), 0.0);
        assert_eq!(gamma_coeff(2, 1), -6.0);
        assert_eq!(gamma_coeff(3, 2), -10.0);
    }

    fn sampled() -> SampledDataModel {
        let (plant, ctrl, h) = presets::integrator_loop();
        build_sampled_data(&plant, &ctrl, h).unwrap()
    }

    #[test]
    fn gamma_rows_for_small_orders() {
        let m = sampled();
        let p1 = ProjectionMatrices::build(&m, 1, 1e-6).unwrap();
        let i2 = DMatrix::<f64>::identity(2, 2);
        let mut expected = DMatrix::zeros(2, 8);
        expected.view_mut((0, 0), (2, 2)).copy_from(&i2);
        expected.view_mut((0, 2), (2, 2)).copy_from(&-&i2);
        assert_eq!(p1.gamma(0), expected);
        assert_eq!(p1.h.shape(), (4, 8));

        let p2 = ProjectionMatrices::build(&m, 2, 1e-6).unwrap();
        let mut expected = DMatrix::zeros(2, 10);
        expected.view_mut((0, 0), (2, 2)).copy_from(&i2);
        expected.view_mut((0, 2), (2, 2)).copy_from(&-&i2);
        expected.view_mut((0, 6), (2, 2)).copy_from(&(&i2 * -6.0));
        assert_eq!(p2.gamma(2), expected);
    }

    #[test]
    fn dimensions_and_selectors() {
        let m = sampled();
        for order in 1..=5 {
            let p = ProjectionMatrices::build(&m, order, 0.1).unwrap();
            let n = 2;
            let w = (order + 3) * n;
            assert_eq!(p.augmented_dim(), w);
            assert_eq!(p.g.shape(), ((order + 1) * n, w));
            assert_eq!(p.f.shape(), (n, w));
            assert_eq!(p.h.shape(), ((order + 1) * n, w));
            assert_eq!(p.gamma_n.shape(), ((order + 1) * n, w));
            for s in [&p.n1, &p.n2, &p.n12, &p.nd] {
                assert_eq!(s.shape(), (n, w));
            }
            assert_eq!(p.n1.view((0, 0), (n, n)), DMatrix::<f64>::identity(n, n));
            assert_eq!(p.n2.view((0, w - n), (n, n)), DMatrix::<f64>::identity(n, n));
            assert_eq!(&p.n1 - &p.n2, p.n12);
            assert_eq!(p.rn_weights().len(), order + 1);
        }
        assert!(ProjectionMatrices::build(&m, 0, 0.1).is_err());
    }

    #[test]
    fn f_block_layout() {
        let m = sampled();
        let p = ProjectionMatrices::build(&m, 2, 0.1).unwrap();
        assert_eq!(p.f.view((0, 0), (2, 2)), m.lambda);
        assert_eq!(p.f.view((0, 2), (2, 2)), m.lambda_d);
        assert!(p.f.view((0, 4), (2, 4)).iter().all(|v| *v == 0.0));
        assert_eq!(p.f.view((0, 8), (2, 2)), &m.lambda * &m.k);
        assert_abs_diff_eq!(p.delay_weight, (-0.2f64).exp(), epsilon = 1e-15);
    }
}
