//! Feasibility bisection over reset-interval bounds, decay rate and period.
//!
//! Every predicate is "the assembled conditions solve to `Feasible`";
//! `Inconclusive` counts as infeasible.

use rayon::prelude::*;
use resetcert_core::lmi::{assemble_conditions, AnalysisQuery, Formulation};
use resetcert_core::model::{build_sampled_data, PiRiController, Plant, ResetBounds, SampledDataModel};

use crate::error::{Error, Result};
use crate::sdp::{solve, Certificate, ClarabelBackend, ConicBackend, SolverOptions, Verdict};

/// Decay rate standing in for `α → 0⁺`.
pub const ALPHA_FLOOR: f64 = 1e-6;
pub const DEFAULT_T_TOL: f64 = 0.01;
pub const DEFAULT_ALPHA_TOL: f64 = 1e-3;

/// Backend, solver options and condition variant shared by every probe.
#[derive(Clone, Copy)]
pub struct SearchContext<'a> {
    pub backend: &'a dyn ConicBackend,
    pub options: &'a SolverOptions,
    pub formulation: Formulation,
}

impl<'a> SearchContext<'a> {
    pub fn new(backend: &'a dyn ConicBackend, options: &'a SolverOptions) -> Self {
        Self {
            backend,
            options,
            formulation: Formulation::default(),
        }
    }
}

pub static DEFAULT_BACKEND: ClarabelBackend = ClarabelBackend;

pub fn certify(model: &SampledDataModel, query: &AnalysisQuery, ctx: &SearchContext) -> Result<Certificate> {
    let problem = assemble_conditions(model, query, &ctx.formulation)?;
    Ok(solve(&problem, ctx.backend, ctx.options))
}

/// One solve made during a search.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Probe {
    pub value: f64,
    pub verdict: Verdict,
    pub iterations: u32,
    pub runtime_seconds: f64,
}

/// Post-hoc re-check of a bisection result `v`: `Feasible` at the feasible
/// side `v ± tol` and not at the other side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct BracketCheck {
    pub feasible_side: bool,
    pub infeasible_side: bool,
}

impl BracketCheck {
    pub fn holds(&self) -> bool {
        self.feasible_side && self.infeasible_side
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SearchResult {
    /// Certified extreme value, `None` if no feasible point was found.
    pub value: Option<f64>,
    pub bracket: Option<BracketCheck>,
    pub probes: Vec<Probe>,
    pub note: String,
}

impl SearchResult {
    fn none(probes: Vec<Probe>, note: impl Into<String>) -> Self {
        Self {
            value: None,
            bracket: None,
            probes,
            note: note.into(),
        }
    }

    pub fn iterations(&self) -> u32 {
        self.probes.iter().map(|p| p.iterations).sum()
    }

    pub fn runtime_seconds(&self) -> f64 {
        self.probes.iter().map(|p| p.runtime_seconds).sum()
    }
}

/// Caches predicate outcomes so repeated probes at the same value are free.
struct Oracle<F: Fn(f64) -> Result<Certificate>> {
    eval: F,
    probes: Vec<Probe>,
}

impl<F: Fn(f64) -> Result<Certificate>> Oracle<F> {
    fn new(eval: F) -> Self {
        Self { eval, probes: Vec::new() }
    }

    fn feasible(&mut self, value: f64) -> Result<bool> {
        if let Some(p) = self.probes.iter().find(|p| p.value == value) {
            return Ok(p.verdict == Verdict::Feasible);
        }
        let cert = (self.eval)(value)?;
        self.probes.push(Probe {
            value,
            verdict: cert.verdict,
            iterations: cert.stats.iterations,
            runtime_seconds: cert.stats.runtime_seconds,
        });
        Ok(cert.verdict == Verdict::Feasible)
    }
}

/// Bisects between an infeasible `bad` and a feasible `good` endpoint until
/// they are within `tol`; returns the feasible end and the post-hoc check.
fn bisect<F: Fn(f64) -> Result<Certificate>>(
    oracle: &mut Oracle<F>,
    mut bad: f64,
    mut good: f64,
    tol: f64,
    clamp: (f64, f64),
) -> Result<(f64, BracketCheck)> {
    while (good - bad).abs() > tol {
        let mid = 0.5 * (good + bad);
        if oracle.feasible(mid)? {
            good = mid;
        } else {
            bad = mid;
        }
    }
    let dir = (good - bad).signum();
    let (lo, hi) = clamp;
    let inside = (good + dir * tol).clamp(lo, hi);
    let outside = (good - dir * tol).clamp(lo, hi);
    let check = BracketCheck {
        feasible_side: oracle.feasible(inside)?,
        infeasible_side: outside == good || !oracle.feasible(outside)?,
    };
    Ok((good, check))
}

fn check_tol(tol: f64) -> Result<()> {
    if tol.is_finite() && tol > 0.0 {
        Ok(())
    } else {
        Err(Error::Search(format!("tolerance {tol} must be positive")))
    }
}

/// Smallest `T_m ∈ [0, T_M]` (within `tol`) certified at `(α, T_M, N, M)`.
pub fn min_feasible_tm(
    model: &SampledDataModel,
    order: usize,
    intervals: usize,
    alpha: f64,
    t_max: f64,
    tol: f64,
    ctx: &SearchContext,
) -> Result<SearchResult> {
    check_tol(tol)?;
    let eval = |tm: f64| {
        let q = AnalysisQuery::new(alpha, ResetBounds::new(tm, t_max)?, order, intervals)?;
        certify(model, &q, ctx)
    };
    let mut oracle = Oracle::new(eval);
    if !oracle.feasible(t_max)? {
        return Ok(SearchResult::none(oracle.probes, "infeasible at T_m = T_M"));
    }
    if oracle.feasible(0.0)? {
        return Ok(SearchResult {
            value: Some(0.0),
            bracket: None,
            probes: oracle.probes,
            note: "feasible for every T_m".into(),
        });
    }
    let (v, check) = bisect(&mut oracle, 0.0, t_max, tol, (0.0, t_max))?;
    Ok(SearchResult {
        value: Some(v),
        bracket: Some(check),
        probes: oracle.probes,
        note: String::new(),
    })
}

/// Largest certified `α` for fixed bounds, by bisection on `α`.
///
/// `alpha_upper` is doubled (up to 8 times) until it is infeasible.
pub fn max_decay_rate(
    model: &SampledDataModel,
    order: usize,
    intervals: usize,
    bounds: ResetBounds,
    alpha_upper: f64,
    tol: f64,
    ctx: &SearchContext,
) -> Result<SearchResult> {
    check_tol(tol)?;
    let eval = |a: f64| {
        let q = AnalysisQuery::new(a, bounds, order, intervals)?;
        certify(model, &q, ctx)
    };
    let mut oracle = Oracle::new(eval);
    if !oracle.feasible(ALPHA_FLOOR)? {
        return Ok(SearchResult::none(oracle.probes, "unstable-uncertifiable: infeasible at alpha = 1e-6"));
    }
    let mut upper = alpha_upper.max(2.0 * ALPHA_FLOOR);
    let mut doublings = 0;
    while oracle.feasible(upper)? {
        doublings += 1;
        if doublings > 8 {
            return Ok(SearchResult {
                value: Some(upper),
                bracket: None,
                probes: oracle.probes,
                note: "no infeasible upper bound found; value is a lower bound".into(),
            });
        }
        upper *= 2.0;
    }
    let (v, check) = bisect(&mut oracle, upper, ALPHA_FLOOR, tol, (ALPHA_FLOOR, upper))?;
    Ok(SearchResult {
        value: Some(v),
        bracket: Some(check),
        probes: oracle.probes,
        note: String::new(),
    })
}

/// Scan grid for the largest certified periodic reset period.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeriodRange {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for PeriodRange {
    fn default() -> Self {
        Self {
            min: 0.05,
            max: 2.0,
            points: 40,
        }
    }
}

impl PeriodRange {
    pub fn grid(&self) -> Vec<f64> {
        let k = self.points.max(2);
        (0..k)
            .map(|j| self.min + (self.max - self.min) * j as f64 / (k - 1) as f64)
            .collect()
    }
}

/// Largest periodic `T` (`T_m = T_M = T`) certified at `α`: coarse scan of
/// `range`, then bisection above the largest feasible grid point.
pub fn max_periodic_period(
    model: &SampledDataModel,
    order: usize,
    intervals: usize,
    alpha: f64,
    range: PeriodRange,
    tol: f64,
    ctx: &SearchContext,
) -> Result<SearchResult> {
    check_tol(tol)?;
    if !(range.min > 0.0 && range.max > range.min) {
        return Err(Error::Search(format!("bad period range [{}, {}]", range.min, range.max)));
    }
    let eval = |t: f64| {
        let q = AnalysisQuery::new(alpha, ResetBounds::periodic(t)?, order, intervals)?;
        certify(model, &q, ctx)
    };
    let mut oracle = Oracle::new(eval);
    let grid = range.grid();
    let mut best = None;
    for (j, &t) in grid.iter().enumerate().rev() {
        if oracle.feasible(t)? {
            best = Some(j);
            break;
        }
    }
    let Some(j) = best else {
        return Ok(SearchResult::none(oracle.probes, "no certified period on the scan grid"));
    };
    if j + 1 == grid.len() {
        return Ok(SearchResult {
            value: Some(grid[j]),
            bracket: None,
            probes: oracle.probes,
            note: "feasible at the top of the scan range; value is a lower bound".into(),
        });
    }
    let (v, check) = bisect(&mut oracle, grid[j + 1], grid[j], tol, (range.min, range.max))?;
    Ok(SearchResult {
        value: Some(v),
        bracket: Some(check),
        probes: oracle.probes,
        note: String::new(),
    })
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Search(format!("thread pool: {e}")))
}

/// One `(p_r, h)` cell of the period/delay sweep.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PeriodDelayCell {
    pub reset_ratio: f64,
    pub delay: f64,
    pub max_period: Option<f64>,
    pub bracket_ok: Option<bool>,
    pub solves: usize,
    pub iterations: u32,
    pub runtime_seconds: f64,
    pub note: String,
}

#[allow(clippy::too_many_arguments)]
pub fn period_vs_delay_sweep(
    plant: &Plant,
    controller: &PiRiController,
    reset_ratios: &[f64],
    delays: &[f64],
    order: usize,
    intervals: usize,
    alpha: f64,
    range: PeriodRange,
    tol: f64,
    jobs: usize,
    ctx: &SearchContext,
) -> Result<Vec<PeriodDelayCell>> {
    if reset_ratios.is_empty() || delays.is_empty() {
        return Err(Error::Search("sweep grids must be non-empty".into()));
    }
    let cells: Vec<(f64, f64)> = reset_ratios
        .iter()
        .flat_map(|&p| delays.iter().map(move |&h| (p, h)))
        .collect();
    let run = |&(pr, h): &(f64, f64)| -> PeriodDelayCell {
        let outcome = controller
            .with_reset_ratio(pr)
            .and_then(|c| build_sampled_data(plant, &c, h))
            .map_err(Error::from)
            .and_then(|m| max_periodic_period(&m, order, intervals, alpha, range, tol, ctx));
        match outcome {
            Ok(r) => PeriodDelayCell {
                reset_ratio: pr,
                delay: h,
                max_period: r.value,
                bracket_ok: r.bracket.map(|b| b.holds()),
                solves: r.probes.len(),
                iterations: r.iterations(),
                runtime_seconds: r.runtime_seconds(),
                note: r.note,
            },
            Err(e) => PeriodDelayCell {
                reset_ratio: pr,
                delay: h,
                max_period: None,
                bracket_ok: None,
                solves: 0,
                iterations: 0,
                runtime_seconds: 0.0,
                note: format!("error: {e}"),
            },
        }
    };
    Ok(pool(jobs)?.install(|| cells.par_iter().map(run).collect()))
}

/// One reset-period point of a decay-rate sweep.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DecayCell {
    pub t_min: f64,
    pub t_max: f64,
    pub max_alpha: Option<f64>,
    pub bracket_ok: Option<bool>,
    pub solves: usize,
    pub iterations: u32,
    pub runtime_seconds: f64,
    pub note: String,
}

/// Largest certified `α` per reset period. Synchronous resets use
/// `T_m = T_M = T`; asynchronous ones use `T_m = min_ratio * T`.
#[allow(clippy::too_many_arguments)]
pub fn decay_vs_period_sweep(
    model: &SampledDataModel,
    order: usize,
    intervals: usize,
    periods: &[f64],
    min_ratio: Option<f64>,
    alpha_upper: f64,
    tol: f64,
    jobs: usize,
    ctx: &SearchContext,
) -> Result<Vec<DecayCell>> {
    if periods.is_empty() {
        return Err(Error::Search("period grid must be non-empty".into()));
    }
    let run = |&t: &f64| -> DecayCell {
        let t_min = min_ratio.map_or(t, |r| r * t);
        let outcome = ResetBounds::new(t_min, t)
            .map_err(Error::from)
            .and_then(|b| max_decay_rate(model, order, intervals, b, alpha_upper, tol, ctx));
        match outcome {
            Ok(r) => DecayCell {
                t_min,
                t_max: t,
                max_alpha: r.value,
                bracket_ok: r.bracket.map(|b| b.holds()),
                solves: r.probes.len(),
                iterations: r.iterations(),
                runtime_seconds: r.runtime_seconds(),
                note: r.note,
            },
            Err(e) => DecayCell {
                t_min,
                t_max: t,
                max_alpha: None,
                bracket_ok: None,
                solves: 0,
                iterations: 0,
                runtime_seconds: 0.0,
                note: format!("error: {e}"),
            },
        }
    };
    Ok(pool(jobs)?.install(|| periods.par_iter().map(run).collect()))
}

/// `T_m` search for each `M`, as in the partition-count table.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TableRow {
    pub intervals: usize,
    pub min_tm: Option<f64>,
    pub bracket_ok: Option<bool>,
    pub solves: usize,
    pub runtime_seconds: f64,
    pub note: String,
}

#[allow(clippy::too_many_arguments)]
pub fn partition_table(
    model: &SampledDataModel,
    order: usize,
    partitions: &[usize],
    alpha: f64,
    t_max: f64,
    tol: f64,
    jobs: usize,
    ctx: &SearchContext,
) -> Result<Vec<TableRow>> {
    let run = |&m: &usize| -> TableRow {
        match min_feasible_tm(model, order, m, alpha, t_max, tol, ctx) {
            Ok(r) => TableRow {
                intervals: m,
                min_tm: r.value,
                bracket_ok: r.bracket.map(|b| b.holds()),
                solves: r.probes.len(),
                runtime_seconds: r.runtime_seconds(),
                note: r.note,
            },
            Err(e) => TableRow {
                intervals: m,
                min_tm: None,
                bracket_ok: None,
                solves: 0,
                runtime_seconds: 0.0,
                note: format!("error: {e}"),
            },
        }
    };
    Ok(pool(jobs)?.install(|| partitions.par_iter().map(run).collect()))
}
