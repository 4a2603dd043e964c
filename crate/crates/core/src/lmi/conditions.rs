use alloc::vec::Vec;
use nalgebra::DMatrix;

use super::expr::SymmetricExpr;
use super::problem::{BlockLabel, ConstraintBlock, LmiProblem, Sense};
use super::vars::{VarName, VariableLayout};
use crate::error::{invalid, Result};
use crate::legendre::{block_selector, ProjectionMatrices};
use crate::model::{ResetBounds, SampledDataModel};

/// Largest Legendre order accepted in a query.
pub const MAX_ORDER: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HValues {
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
    pub h4: f64,
}

/// Scalar weights of the conditions at `(τ, T)`; requires `α > 0`.
pub fn h_functions(alpha: f64, tau: f64, t: f64) -> HValues {
    let e2at = libm::exp(2.0 * alpha * t);
    let e2atau = libm::exp(2.0 * alpha * tau);
    let e = core::f64::consts::E;
    HValues {
        h1: e2atau,
        h2: e2atau * libm::expm1(2.0 * alpha * (t - tau)) / (2.0 * alpha),
        h3: e2at * libm::expm1(2.0 * alpha * tau) / (2.0 * alpha),
        h4: ((e * e - 4.0) * libm::exp(alpha * t) + 1.0) * e2atau + 2.0 * e2at,
    }
}

/// Decay rate, reset-interval bounds, Legendre order `N` and partition count `M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisQuery {
    decay_rate: f64,
    bounds: ResetBounds,
    order: usize,
    intervals: usize,
}

impl AnalysisQuery {
    pub fn new(decay_rate: f64, bounds: ResetBounds, order: usize, intervals: usize) -> Result<Self> {
        if !(decay_rate.is_finite() && decay_rate > 0.0) {
            return Err(invalid("decay_rate", alloc::format!("{decay_rate} must be positive")));
        }
        if !(1..=MAX_ORDER).contains(&order) {
            return Err(invalid("order", alloc::format!("N = {order} outside 1..={MAX_ORDER}")));
        }
        if intervals == 0 {
            return Err(invalid("intervals", "M must be at least 1"));
        }
        Ok(Self {
            decay_rate,
            bounds,
            order,
            intervals,
        })
    }

    pub fn decay_rate(&self) -> f64 {
        self.decay_rate
    }

    pub fn bounds(&self) -> ResetBounds {
        self.bounds
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    /// Uniform partition `T_i = T_m + i (T_M - T_m) / M`, `i = 0..=M`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let (lo, hi) = (self.bounds.min(), self.bounds.max());
        let m = self.intervals;
        (0..=m)
            .map(|i| if i == m { hi } else { lo + i as f64 * (hi - lo) / m as f64 })
            .collect()
    }
}

/// Left factor of the `Z_i` coupling inside `Π_1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZCoupling {
    /// `-He(N12ᵀ Z N2)`, the form that pairs with `He(Fᵀ Z N2)` in `Π_2`.
    #[default]
    Increment,
    /// `-He(N2ᵀ Z N2)`.
    AsPrinted,
}

/// Variants of the `Π_1` expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formulation {
    pub z_coupling: ZCoupling,
    /// Adds `2α GᵀPG` to `Π_1`.
    pub decay_term_on_p: bool,
}

impl Default for Formulation {
    fn default() -> Self {
        Self {
            z_coupling: ZCoupling::Increment,
            decay_term_on_p: true,
        }
    }
}

impl Formulation {
    pub fn as_printed() -> Self {
        Self {
            z_coupling: ZCoupling::AsPrinted,
            decay_term_on_p: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiBlocks {
    pub pi1: SymmetricExpr,
    pub pi2: SymmetricExpr,
}

/// `Π_{1,i}` and `Π_{2,i}` for interval `i` (1-based).
pub fn assemble_pi_blocks(proj: &ProjectionMatrices, interval: usize, formulation: &Formulation) -> Result<PiBlocks> {
    if interval == 0 {
        return Err(invalid("interval", "intervals are numbered from 1"));
    }
    let w = proj.augmented_dim();
    let h = proj.delay;
    let e = proj.delay_weight;
    let gt = proj.g.transpose();
    let ft = proj.f.transpose();
    let n12t = proj.n12.transpose();
    let (q, z, y) = (VarName::Q(interval), VarName::Z(interval), VarName::Y(interval));

    let mut pi1 = SymmetricExpr::zeros(w);
    pi1.he(VarName::P, &gt, &proj.h, 1.0)?;
    if formulation.decay_term_on_p {
        pi1.congruence(VarName::P, &gt, 2.0 * proj.decay_rate)?;
    }
    pi1.congruence(VarName::S, &proj.n1.transpose(), 1.0)?;
    pi1.congruence(VarName::S, &proj.nd.transpose(), -e)?;
    pi1.congruence(VarName::R, &ft, h * h)?;
    for (j, weight) in proj.rn_weights().into_iter().enumerate() {
        pi1.congruence(VarName::R, &proj.gamma(j).transpose(), -weight)?;
    }
    pi1.congruence(q, &n12t, -1.0)?;
    let z_left = match formulation.z_coupling {
        ZCoupling::Increment => n12t.clone(),
        ZCoupling::AsPrinted => proj.n2.transpose(),
    };
    pi1.he(z, &z_left, &proj.n2, -1.0)?;
    pi1.he(y, &DMatrix::identity(w, w), &proj.n12, 1.0)?;

    let mut pi2 = SymmetricExpr::zeros(w);
    pi2.congruence(VarName::U(interval), &ft, 1.0)?;
    pi2.he(q, &ft, &proj.n12, 1.0)?;
    pi2.he(z, &ft, &proj.n2, 1.0)?;

    Ok(PiBlocks { pi1, pi2 })
}

/// A condition before compilation, kept for inspection and testing.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionExpr {
    pub label: BlockLabel,
    pub sense: Sense,
    pub expr: SymmetricExpr,
}

/// All condition blocks, in emission order:
/// `Cond1`, then `Cond2..Cond5` for each interval, then variable bounds.
pub fn condition_exprs(
    model: &SampledDataModel,
    query: &AnalysisQuery,
    formulation: &Formulation,
) -> Result<(VariableLayout, Vec<ConditionExpr>)> {
    let n = model.dim();
    let order = query.order();
    let m = query.intervals();
    let alpha = query.decay_rate();
    let proj = ProjectionMatrices::build(model, order, alpha)?;
    let layout = VariableLayout::for_conditions(n, order, m);
    let w = proj.augmented_dim();
    let bp = query.breakpoints();
    let mut out = Vec::with_capacity(1 + 4 * m + 2 + 3 * m);

    // P + (e^{-2αh}/h) diag(0, S, 3S, ..., (2N-1)S)
    let pd = (order + 1) * n;
    let mut c1 = SymmetricExpr::zeros(pd);
    c1.congruence(VarName::P, &DMatrix::identity(pd, pd), 1.0)?;
    for j in 1..=order {
        let sel = block_selector(n, order + 1, j).transpose();
        c1.congruence(VarName::S, &sel, proj.delay_weight / proj.delay * (2 * j - 1) as f64)?;
    }
    out.push(ConditionExpr {
        label: BlockLabel::Cond1,
        sense: Sense::PositiveDefinite,
        expr: c1,
    });

    let n2t = proj.n2.transpose();
    let mut top_left = DMatrix::zeros(w + n, w);
    top_left.view_mut((0, 0), (w, w)).fill_with_identity();
    let mut bottom_right = DMatrix::zeros(n, w + n);
    bottom_right.view_mut((0, w), (n, n)).fill_with_identity();

    for i in 1..=m {
        let PiBlocks { pi1, pi2 } = assemble_pi_blocks(&proj, i, formulation)?;
        let (t_prev, t_i) = (bp[i - 1], bp[i]);
        let x_term = |coef: f64| -> Result<SymmetricExpr> {
            let mut x = SymmetricExpr::zeros(w);
            x.congruence(VarName::X(i), &n2t, coef)?;
            Ok(x)
        };

        let h4_0 = h_functions(alpha, 0.0, t_i).h4;
        for (label, t) in [(BlockLabel::Cond2 { interval: i }, t_prev), (BlockLabel::Cond3 { interval: i }, t_i)] {
            let h2 = h_functions(alpha, 0.0, t).h2;
            let expr = pi1.clone().add(&pi2.clone().scale(h2))?.add(&x_term(h4_0)?)?;
            out.push(ConditionExpr {
                label,
                sense: Sense::NegativeDefinite,
                expr,
            });
        }

        for (label, tau) in [(BlockLabel::Cond4 { interval: i }, t_prev), (BlockLabel::Cond5 { interval: i }, t_i)] {
            let hv = h_functions(alpha, tau, t_i);
            let top = pi1.clone().scale(hv.h1).add(&x_term(hv.h4)?)?;
            let mut expr = top.embed(w + n, 0)?;
            expr.he(VarName::Y(i), &top_left, &bottom_right, hv.h3)?;
            expr.congruence(VarName::U(i), &bottom_right.transpose(), -hv.h3)?;
            out.push(ConditionExpr {
                label,
                sense: Sense::NegativeDefinite,
                expr,
            });
        }
    }

    let mut bounded = alloc::vec![VarName::S, VarName::R];
    for i in 1..=m {
        bounded.extend([VarName::Q(i), VarName::X(i), VarName::U(i)]);
    }
    let eye = DMatrix::identity(n, n);
    for v in bounded {
        let mut expr = SymmetricExpr::zeros(n);
        expr.congruence(v, &eye, 1.0)?;
        out.push(ConditionExpr {
            label: BlockLabel::VariableBound(v),
            sense: Sense::PositiveDefinite,
            expr,
        });
    }
    Ok((layout, out))
}

/// Compiles every condition into an [`LmiProblem`] with the default margin.
pub fn assemble_conditions(
    model: &SampledDataModel,
    query: &AnalysisQuery,
    formulation: &Formulation,
) -> Result<LmiProblem> {
    let (layout, exprs) = condition_exprs(model, query, formulation)?;
    let blocks = exprs
        .iter()
        .map(|c| {
            Ok(ConstraintBlock {
                label: c.label,
                sense: c.sense,
                block: c.expr.compile(&layout)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let margin = LmiProblem::default_margin(&blocks);
    Ok(LmiProblem { layout, blocks, margin })
}
