//! Independent dense construction of every constant matrix and condition
//! block, shared by the assembly tests and the acceptance suite.

#![allow(dead_code, clippy::needless_range_loop)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resetcert_core::legendre::ProjectionMatrices;
use resetcert_core::lmi::*;
use resetcert_core::model::{build_sampled_data, presets, ResetBounds, SampledDataModel};

pub fn example1() -> SampledDataModel {
    let (p, c, h) = presets::integrator_loop();
    build_sampled_data(&p, &c, h).unwrap()
}

pub fn example2(h: f64) -> SampledDataModel {
    let (p, c) = presets::unstable_base_loop();
    build_sampled_data(&p, &c, h).unwrap()
}

pub fn random_point(layout: &VariableLayout, rng: &mut ChaCha8Rng) -> DecisionVariables {
    let values = (0..layout.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    DecisionVariables::from_values(layout, values).unwrap()
}

fn he(m: &DMatrix<f64>) -> DMatrix<f64> {
    m + m.transpose()
}

/// Independent construction of every constant matrix and every condition.
pub struct Oracle {
    n: usize,
    order: usize,
    h: f64,
    alpha: f64,
    g: DMatrix<f64>,
    f: DMatrix<f64>,
    hm: DMatrix<f64>,
    gammas: Vec<DMatrix<f64>>,
    n1: DMatrix<f64>,
    n2: DMatrix<f64>,
    nd: DMatrix<f64>,
}

impl Oracle {
    pub fn new(m: &SampledDataModel, order: usize, alpha: f64) -> Self {
        let n = m.dim();
        let w = (order + 3) * n;
        let h = m.delay;
        let eye = DMatrix::<f64>::identity(n, n);
        let place = |dst: &mut DMatrix<f64>, r: usize, blk: usize, src: &DMatrix<f64>| {
            dst.view_mut((r, blk * n), (src.nrows(), src.ncols())).copy_from(src);
        };
        let mut g = DMatrix::zeros((order + 1) * n, w);
        place(&mut g, 0, 0, &eye);
        for j in 0..order {
            place(&mut g, (j + 1) * n, j + 2, &(&eye * h));
        }
        let mut f = DMatrix::zeros(n, w);
        place(&mut f, 0, 0, &m.lambda);
        place(&mut f, 0, 1, &m.lambda_d);
        place(&mut f, 0, order + 2, &(&m.lambda * &m.k));
        let gamma = |k: usize| {
            let mut row = DMatrix::zeros(n, w);
            place(&mut row, 0, 0, &eye);
            place(&mut row, 0, 1, &(&eye * (-1f64).powi(k as i32 + 1)));
            for i in 0..order {
                let gki = if i <= k { -((2 * i + 1) as f64) * (1.0 - (-1f64).powi((k + i) as i32)) } else { 0.0 };
                place(&mut row, 0, i + 2, &(&eye * gki));
            }
            row
        };
        let gammas: Vec<_> = (0..=order).map(gamma).collect();
        let mut hm = DMatrix::zeros((order + 1) * n, w);
        hm.view_mut((0, 0), (n, w)).copy_from(&f);
        for k in 0..order {
            hm.view_mut(((k + 1) * n, 0), (n, w)).copy_from(&gammas[k]);
        }
        let sel = |b: usize| {
            let mut s = DMatrix::zeros(n, w);
            place(&mut s, 0, b, &eye);
            s
        };
        Oracle {
            n,
            order,
            h,
            alpha,
            g,
            f,
            hm,
            gammas,
            n1: sel(0),
            n2: sel(order + 2),
            nd: sel(1),
        }
    }

    pub fn pi(&self, v: &DecisionVariables, i: usize, form: &Formulation) -> (DMatrix<f64>, DMatrix<f64>) {
        let get = |name| v.matrix(name).unwrap();
        let (p, s, r) = (get(VarName::P), get(VarName::S), get(VarName::R));
        let (q, z, y, u) = (get(VarName::Q(i)), get(VarName::Z(i)), get(VarName::Y(i)), get(VarName::U(i)));
        let e = (-2.0 * self.alpha * self.h).exp();
        let n12 = &self.n1 - &self.n2;

        let mut gamma_n = DMatrix::zeros((self.order + 1) * self.n, self.g.ncols());
        let mut rn = DMatrix::zeros((self.order + 1) * self.n, (self.order + 1) * self.n);
        for j in 0..=self.order {
            gamma_n.view_mut((j * self.n, 0), (self.n, self.g.ncols())).copy_from(&self.gammas[j]);
            rn.view_mut((j * self.n, j * self.n), (self.n, self.n)).copy_from(&(&r * (e * (2 * j + 1) as f64)));
        }
        let sigma = self.n1.transpose() * &s * &self.n1 - self.nd.transpose() * &s * &self.nd * e;

        let t1 = he(&(self.g.transpose() * &p * &self.hm));
        let t2 = sigma;
        let t3 = self.f.transpose() * &r * &self.f * (self.h * self.h);
        let t4 = -(gamma_n.transpose() * rn * &gamma_n);
        let t5 = -(n12.transpose() * &q * &n12);
        let z_left = match form.z_coupling {
            ZCoupling::Increment => n12.clone(),
            ZCoupling::AsPrinted => self.n2.clone(),
        };
        let t6 = -he(&(z_left.transpose() * &z * &self.n2));
        let t7 = he(&(&y * &n12));
        let mut pi1 = t1 + t2 + t3 + t4 + t5 + t6 + t7;
        if form.decay_term_on_p {
            pi1 += self.g.transpose() * &p * &self.g * (2.0 * self.alpha);
        }
        let pi2 = self.f.transpose() * &u * &self.f
            + he(&(self.f.transpose() * &q * &n12))
            + he(&(self.f.transpose() * &z * &self.n2));
        (pi1, pi2)
    }

    pub fn conditions(&self, v: &DecisionVariables, bp: &[f64], form: &Formulation) -> Vec<DMatrix<f64>> {
        let a = self.alpha;
        let h1 = |t: f64| (2.0 * a * t).exp();
        // e^{2aT} - e^{2at} = e^{2at} (e^{2a(T-t)} - 1), differences taken by series
        let h2 = |t: f64, tt: f64| (2.0 * a * t).exp() * expm1_series(2.0 * a * (tt - t)) / (2.0 * a);
        let h3 = |t: f64, tt: f64| (2.0 * a * tt).exp() * expm1_series(2.0 * a * t) / (2.0 * a);
        let e1 = std::f64::consts::E;
        let h4 = |t: f64, tt: f64| ((e1 * e1 - 4.0) * (a * tt).exp() + 1.0) * (2.0 * a * t).exp() + 2.0 * (2.0 * a * tt).exp();

        let n = self.n;
        let pd = (self.order + 1) * n;
        let mut diag = DMatrix::zeros(pd, pd);
        let s = v.matrix(VarName::S).unwrap();
        for j in 1..=self.order {
            diag.view_mut((j * n, j * n), (n, n)).copy_from(&(&s * (2 * j - 1) as f64));
        }
        let e = (-2.0 * a * self.h).exp();
        let mut out = vec![v.matrix(VarName::P).unwrap() + diag * (e / self.h)];
        let w = self.g.ncols();
        for i in 1..bp.len() {
            let (pi1, pi2) = self.pi(v, i, form);
            let xt = self.n2.transpose() * v.matrix(VarName::X(i)).unwrap() * &self.n2;
            let (tp, ti) = (bp[i - 1], bp[i]);
            out.push(&pi1 + &pi2 * h2(0.0, tp) + &xt * h4(0.0, ti));
            out.push(&pi1 + &pi2 * h2(0.0, ti) + &xt * h4(0.0, ti));
            for tau in [tp, ti] {
                let mut big = DMatrix::zeros(w + n, w + n);
                big.view_mut((0, 0), (w, w)).copy_from(&(&pi1 * h1(tau) + &xt * h4(tau, ti)));
                let c = h3(tau, ti);
                let y = v.matrix(VarName::Y(i)).unwrap() * c;
                big.view_mut((0, w), (w, n)).copy_from(&y);
                big.view_mut((w, 0), (n, w)).copy_from(&y.transpose());
                big.view_mut((w, w), (n, n)).copy_from(&(v.matrix(VarName::U(i)).unwrap() * -c));
                out.push(big);
            }
        }
        out
    }
}

fn expm1_series(x: f64) -> f64 {
    if x.abs() > 0.5 {
        return x.exp() - 1.0;
    }
    let (mut term, mut sum) = (x, x);
    for k in 2..30 {
        term *= x / k as f64;
        sum += term;
    }
    sum
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    (a - b).amax()
}

/// Largest deviation, relative to `1 + max|entry|`, between the library's
/// assembled blocks (Pi blocks, compiled blocks, direct expressions) and
/// the oracle at a few random points.
pub fn oracle_error(
    model: &SampledDataModel,
    order: usize,
    intervals: usize,
    bounds: ResetBounds,
    alpha: f64,
    form: Formulation,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = AnalysisQuery::new(alpha, bounds, order, intervals).unwrap();
    let problem = assemble_conditions(model, &q, &form).unwrap();
    let (layout, exprs) = condition_exprs(model, &q, &form).unwrap();
    let oracle = Oracle::new(model, order, alpha);
    let proj = ProjectionMatrices::build(model, order, alpha).unwrap();
    let rel = |a: &DMatrix<f64>, want: &DMatrix<f64>| max_abs_diff(a, want) / (1.0 + want.amax());
    let mut worst = 0.0_f64;
    for _ in 0..5 {
        let v = random_point(&layout, &mut rng);
        for i in 1..=intervals {
            let pis = assemble_pi_blocks(&proj, i, &form).unwrap();
            let (o1, o2) = oracle.pi(&v, i, &form);
            worst = worst.max(rel(&pis.pi1.evaluate(&v).unwrap(), &o1));
            worst = worst.max(rel(&pis.pi2.evaluate(&v).unwrap(), &o2));
        }
        let expected = oracle.conditions(&v, &q.breakpoints(), &form);
        let conds: Vec<_> = problem.condition_blocks().collect();
        assert_eq!(conds.len(), expected.len(), "condition count");
        for ((block, expr), want) in conds.iter().zip(exprs.iter()).zip(&expected) {
            worst = worst.max(rel(&block.block.evaluate(v.values()).unwrap(), want));
            worst = worst.max(rel(&expr.expr.evaluate(&v).unwrap(), want));
        }
    }
    worst
}

/// Every oracle case exercised by the test suites: both examples, orders
/// 1 and 2, one and several intervals, both formulations.
pub fn oracle_cases() -> Vec<(String, f64)> {
    let mut out = Vec::new();
    let b1 = ResetBounds::new(0.5, 1.0).unwrap();
    for order in 1..=2 {
        for form in [Formulation::default(), Formulation::as_printed()] {
            let tag = if form == Formulation::default() { "increment" } else { "as-printed" };
            out.push((
                format!("ex1 N={order} M=1 {tag}"),
                oracle_error(&example1(), order, 1, b1, 1e-6, form, order as u64),
            ));
            out.push((
                format!("ex1 N={order} M=3 {tag}"),
                oracle_error(&example1(), order, 3, b1, 0.3, form, 10 + order as u64),
            ));
        }
        let b2 = ResetBounds::new(0.2, 0.6).unwrap();
        out.push((
            format!("ex2 N={order} M=2"),
            oracle_error(&example2(0.1), order, 2, b2, 0.5, Formulation::default(), 20 + order as u64),
        ));
    }
    out
}
