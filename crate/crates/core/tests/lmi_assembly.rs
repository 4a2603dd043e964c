//! Term-by-term dense re-evaluation of the assembled conditions.

#[path = "support/lmi_oracle.rs"]
mod lmi_oracle;

use lmi_oracle::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use resetcert_core::legendre::ProjectionMatrices;
use resetcert_core::lmi::*;
use resetcert_core::model::{PiRiController, Plant, ResetBounds};

#[test]
fn assembly_matches_term_by_term() {
    for (case, err) in oracle_cases() {
        assert!(err < 1e-12, "{case}: {err:e}");
    }
}

#[test]
fn zero_point_gives_zero_blocks() {
    let q = AnalysisQuery::new(0.1, ResetBounds::new(0.5, 1.0).unwrap(), 2, 2).unwrap();
    let p = assemble_conditions(&example1(), &q, &Formulation::default()).unwrap();
    let zero = DecisionVariables::zeros(&p.layout);
    for b in &p.blocks {
        assert!(b.block.constant.is_empty());
        assert_eq!(b.block.evaluate(zero.values()).unwrap().amax(), 0.0);
    }
    let proj = ProjectionMatrices::build(&example1(), 2, 0.1).unwrap();
    let pis = assemble_pi_blocks(&proj, 1, &Formulation::default()).unwrap();
    assert_eq!(pis.pi1.evaluate(&zero).unwrap().amax(), 0.0);
    assert_eq!(pis.pi2.evaluate(&zero).unwrap().amax(), 0.0);
}

#[test]
fn block_inventory_for_each_order() {
    for (model, n) in [(example1(), 2usize), (example2(0.1), 3)] {
        for order in 1..=3 {
            let q = AnalysisQuery::new(1e-3, ResetBounds::new(0.1, 0.4).unwrap(), order, 2).unwrap();
            let p = assemble_conditions(&model, &q, &Formulation::default()).unwrap();
            let dims: Vec<usize> = p.condition_blocks().map(|b| b.block.dim).collect();
            let (c1, c2, c4) = ((order + 1) * n, (order + 3) * n, (order + 4) * n);
            assert_eq!(dims, vec![c1, c2, c2, c4, c4, c2, c2, c4, c4]);
            assert!(p.margin >= 1e-9);
        }
    }
}

#[test]
fn as_printed_and_default_differ_only_in_pi1() {
    let proj = ProjectionMatrices::build(&example1(), 2, 0.2).unwrap();
    let layout = VariableLayout::for_conditions(2, 2, 1);
    let v = random_point(&layout, &mut ChaCha8Rng::seed_from_u64(5));
    let a = assemble_pi_blocks(&proj, 1, &Formulation::default()).unwrap();
    let b = assemble_pi_blocks(&proj, 1, &Formulation::as_printed()).unwrap();
    assert_eq!(a.pi2, b.pi2);
    assert!(max_abs_diff(&a.pi1.evaluate(&v).unwrap(), &b.pi1.evaluate(&v).unwrap()) > 1e-6);
}

#[test]
fn rejects_multi_output_plants() {
    let p = Plant::new(DMatrix::zeros(2, 2), DMatrix::zeros(2, 1), DMatrix::zeros(2, 2));
    assert!(p.is_err());
    assert!(PiRiController::new(1.0, 1.0, 1.5).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn blocks_are_affine(lambda in -2.0f64..2.0, s1 in any::<u64>(), s2 in any::<u64>()) {
        let q = AnalysisQuery::new(0.05, ResetBounds::new(0.3, 0.9).unwrap(), 2, 2).unwrap();
        let p = assemble_conditions(&example1(), &q, &Formulation::default()).unwrap();
        let v1 = random_point(&p.layout, &mut ChaCha8Rng::seed_from_u64(s1));
        let v2 = random_point(&p.layout, &mut ChaCha8Rng::seed_from_u64(s2));
        let mix: Vec<f64> = v1.values().iter().zip(v2.values()).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
        for b in &p.blocks {
            let lhs = b.block.evaluate(&mix).unwrap();
            let rhs = b.block.evaluate(v1.values()).unwrap() * lambda + b.block.evaluate(v2.values()).unwrap() * (1.0 - lambda);
            prop_assert!(max_abs_diff(&lhs, &rhs) < 1e-10 * (1.0 + rhs.amax()));
        }
    }

    #[test]
    fn blocks_are_symmetric(seed in any::<u64>(), order in 1usize..=2) {
        let q = AnalysisQuery::new(0.2, ResetBounds::new(0.1, 0.5).unwrap(), order, 2).unwrap();
        let form = Formulation::default();
        let (layout, exprs) = condition_exprs(&example2(0.2), &q, &form).unwrap();
        let v = random_point(&layout, &mut ChaCha8Rng::seed_from_u64(seed));
        for c in &exprs {
            let m = c.expr.evaluate(&v).unwrap();
            prop_assert!(max_abs_diff(&m, &m.transpose()) <= 1e-14 * (1.0 + m.amax()));
            let compiled = c.expr.compile(&layout).unwrap().evaluate(v.values()).unwrap();
            prop_assert_eq!(compiled.clone(), compiled.transpose());
        }
    }
}
