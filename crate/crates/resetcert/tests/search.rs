use resetcert::sdp::{ClarabelBackend, SolverOptions, Verdict};
use resetcert::search::*;
use resetcert_core::lmi::{AnalysisQuery, Formulation};
use resetcert_core::model::{build_sampled_data, presets, ResetBounds, SampledDataModel};

static OPTIONS: std::sync::OnceLock<SolverOptions> = std::sync::OnceLock::new();

fn ctx() -> SearchContext<'static> {
    SearchContext::new(&ClarabelBackend, OPTIONS.get_or_init(SolverOptions::default))
}

fn example2(reset_ratio: f64, h: f64) -> SampledDataModel {
    let (p, c) = presets::unstable_base_loop();
    build_sampled_data(&p, &c.with_reset_ratio(reset_ratio).unwrap(), h).unwrap()
}

#[test]
fn allowable_period_shrinks_as_delay_grows() {
    let (p, c) = presets::unstable_base_loop();
    let range = PeriodRange {
        min: 0.1,
        max: 1.5,
        points: 8,
    };
    let cells = period_vs_delay_sweep(&p, &c, &[0.5], &[0.05, 0.1, 0.2], 1, 1, ALPHA_FLOOR, range, 0.05, 2, &ctx()).unwrap();
    let t: Vec<f64> = cells.iter().map(|c| c.max_period.unwrap_or(0.0)).collect();
    assert!(t[0] > 0.0, "{cells:?}");
    assert!(t.windows(2).all(|w| w[0] >= w[1]), "{t:?}");
    for cell in &cells {
        if let Some(ok) = cell.bracket_ok {
            assert!(ok, "{cell:?}");
        }
    }
}

#[test]
fn periodic_result_is_bracketed() {
    let m = example2(0.5, 0.05);
    let range = PeriodRange {
        min: 0.2,
        max: 3.0,
        points: 6,
    };
    let r = max_periodic_period(&m, 1, 1, ALPHA_FLOOR, range, 0.02, &ctx()).unwrap();
    let t = r.value.unwrap();
    assert!(r.bracket.unwrap().holds(), "{r:?}");
    let at = |t: f64| {
        let q = AnalysisQuery::new(ALPHA_FLOOR, ResetBounds::periodic(t).unwrap(), 1, 1).unwrap();
        certify(&m, &q, &ctx()).unwrap().verdict
    };
    assert_eq!(at(t), Verdict::Feasible);
    assert_ne!(at(t + 0.02), Verdict::Feasible);
}

#[test]
fn decay_rate_search_is_bracketed() {
    let m = example2(0.5, 0.05);
    let r = max_decay_rate(&m, 1, 1, ResetBounds::periodic(0.5).unwrap(), 1.0, 0.005, &ctx()).unwrap();
    let a = r.value.unwrap();
    assert!(a > ALPHA_FLOOR && a < 1.0, "{a}");
    assert!(r.bracket.unwrap().holds(), "{r:?}");
    assert!(r.iterations() > 0 && r.runtime_seconds() > 0.0);
}

#[test]
fn plain_pi_loop_is_uncertifiable() {
    // without resets the base loop is unstable for every delay
    let m = example2(0.0, 0.05);
    let r = max_decay_rate(&m, 1, 1, ResetBounds::periodic(0.5).unwrap(), 1.0, 0.01, &ctx()).unwrap();
    assert!(r.value.is_none());
    assert!(r.note.contains("uncertifiable"));
    assert_eq!(r.probes.len(), 1);
}

#[test]
fn min_tm_search_is_bracketed() {
    let (p, c, h) = presets::integrator_loop();
    let m = build_sampled_data(&p, &c, h).unwrap();
    let loose = SearchContext {
        formulation: Formulation::as_printed(),
        ..ctx()
    };
    let r = min_feasible_tm(&m, 1, 1, ALPHA_FLOOR, 1.0, 0.02, &loose).unwrap();
    let v = r.value.unwrap();
    assert!((0.0..=1.0).contains(&v));
    if let Some(b) = r.bracket {
        assert!(b.holds(), "{r:?}");
    }
}

#[test]
fn table_flags_uncertifiable_rows() {
    let (p, c, h) = presets::integrator_loop();
    let m = build_sampled_data(&p, &c, h).unwrap();
    let rows = partition_table(&m, 1, &[1, 2], ALPHA_FLOOR, 1.0, 0.05, 2, &ctx()).unwrap();
    assert_eq!(rows.iter().map(|r| r.intervals).collect::<Vec<_>>(), [1, 2]);
    for r in rows {
        assert!(r.min_tm.is_none());
        assert!(r.note.contains("T_m = T_M"), "{}", r.note);
    }
}

#[test]
fn nonpositive_tolerance_is_rejected() {
    let m = example2(0.5, 0.05);
    assert!(min_feasible_tm(&m, 1, 1, ALPHA_FLOOR, 1.0, 0.0, &ctx()).is_err());
    assert!(max_decay_rate(&m, 1, 1, ResetBounds::periodic(0.5).unwrap(), 1.0, -1.0, &ctx()).is_err());
}
