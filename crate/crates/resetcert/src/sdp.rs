//! Feasibility oracle for [`LmiProblem`]s.
//!
//! A backend maximizes a common margin `t` such that every `≺ 0` block
//! satisfies `B(v) ⪯ -t I` and every `≻ 0` block `B(v) ⪰ t I`, with the
//! decision vector boxed to `|v_k| <= 1` and `t <= 1`. Since all emitted
//! blocks are homogeneous, the box only fixes the scale.
//!
//! Whatever the backend reports, a `Feasible` verdict is only issued after
//! the returned point passes [`verify_certificate`].

use std::time::Instant;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, PSDTriangleConeT, SolverStatus, SupportedConeT,
};
use resetcert_core::lmi::{DecisionVariables, LmiProblem, ResidualReport, Sense};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Feasible,
    Infeasible,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Feasible => "feasible",
            Verdict::Infeasible => "infeasible",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub max_iterations: u32,
    /// Primal/dual feasibility tolerance handed to the backend.
    pub feasibility_tolerance: f64,
    /// Duality-gap tolerance (absolute and relative).
    pub gap_tolerance: f64,
    /// Seconds; `None` means unlimited.
    pub time_limit: Option<f64>,
    /// Overrides the problem's strictness margin `ε`.
    pub margin: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            feasibility_tolerance: 1e-8,
            gap_tolerance: 1e-8,
            time_limit: None,
            margin: None,
        }
    }
}

/// Terminal state reported by a backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendStatus {
    Converged,
    ReducedAccuracy,
    Stalled,
    Failed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendOutcome {
    pub status: BackendStatus,
    /// Decision vector followed by the margin `t`, when the backend produced one.
    pub point: Option<Vec<f64>>,
    pub iterations: u32,
    pub detail: String,
}

/// Any conic solver with semidefinite cones. Implementations must tolerate
/// concurrent calls.
pub trait ConicBackend: Send + Sync {
    fn name(&self) -> &'static str;
    fn maximize_margin(&self, problem: &LmiProblem, options: &SolverOptions) -> Result<BackendOutcome>;
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolverStats {
    pub backend: String,
    pub status: String,
    pub iterations: u32,
    pub runtime_seconds: f64,
    /// Margin `t*` returned by the backend (not re-verified).
    pub solver_margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub verdict: Verdict,
    /// Present iff `verdict == Feasible`.
    pub variables: Option<DecisionVariables>,
    /// Residuals at the backend's point, when one was returned.
    pub residuals: Option<ResidualReport>,
    pub stats: SolverStats,
}

/// Interior-point backend built on Clarabel.
#[derive(Debug, Clone, Copy, Default)]
pub struct ClarabelBackend;

const SQRT_2: f64 = std::f64::consts::SQRT_2;

impl ConicBackend for ClarabelBackend {
    fn name(&self) -> &'static str {
        "clarabel"
    }

    fn maximize_margin(&self, problem: &LmiProblem, options: &SolverOptions) -> Result<BackendOutcome> {
        let nv = problem.layout.len();
        let t_col = nv;
        let ncols = nv + 1;
        let (mut rows, mut cols, mut vals) = (Vec::new(), Vec::new(), Vec::new());
        let mut b = Vec::new();
        let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
        let mut row = 0usize;

        // box: v_k <= 1, -v_k <= 1, t <= 1
        for k in 0..nv {
            for sign in [1.0, -1.0] {
                rows.push(row);
                cols.push(k);
                vals.push(sign);
                b.push(1.0);
                row += 1;
            }
        }
        rows.push(row);
        cols.push(t_col);
        vals.push(1.0);
        b.push(1.0);
        row += 1;
        cones.push(NonnegativeConeT(2 * nv + 1));

        for blk in &problem.blocks {
            let d = blk.block.dim;
            let base = row;
            let len = d * (d + 1) / 2;
            let svec = |r: usize, c: usize| -> (usize, f64) {
                let (r, c) = if r <= c { (r, c) } else { (c, r) };
                (base + c * (c + 1) / 2 + r, if r == c { 1.0 } else { SQRT_2 })
            };
            // slack = sign * B(v) - t I, i.e. b = sign * C0, A = -sign * C_k (and +I for t)
            let sign = match blk.sense {
                Sense::NegativeDefinite => -1.0,
                Sense::PositiveDefinite => 1.0,
            };
            let mut bb = vec![0.0; len];
            for t in &blk.block.constant {
                let (i, s) = svec(t.row, t.col);
                bb[i - base] += sign * s * t.value;
            }
            b.extend(bb);
            for (k, trips) in &blk.block.coefficients {
                for t in trips {
                    let (i, s) = svec(t.row, t.col);
                    rows.push(i);
                    cols.push(*k);
                    vals.push(-sign * s * t.value);
                }
            }
            for j in 0..d {
                rows.push(svec(j, j).0);
                cols.push(t_col);
                vals.push(1.0);
            }
            cones.push(PSDTriangleConeT(d));
            row += len;
        }

        let a = CscMatrix::new_from_triplets(row, ncols, rows, cols, vals);
        let p = CscMatrix::zeros((ncols, ncols));
        let mut q = vec![0.0; ncols];
        q[t_col] = -1.0;

        let mut builder = DefaultSettingsBuilder::default();
        builder
            .verbose(false)
            .max_iter(options.max_iterations)
            .tol_feas(options.feasibility_tolerance)
            .tol_gap_abs(options.gap_tolerance)
            .tol_gap_rel(options.gap_tolerance)
            .presolve_enable(false)
            .chordal_decomposition_enable(false);
        if let Some(limit) = options.time_limit {
            builder.time_limit(limit);
        }
        let settings = builder.build().map_err(|e| Error::Backend(format!("settings: {e}")))?;
        let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings)
            .map_err(|e| Error::Backend(format!("setup: {e:?}")))?;
        solver.solve();
        let sol = &solver.solution;
        let status = match sol.status {
            SolverStatus::Solved => BackendStatus::Converged,
            SolverStatus::AlmostSolved => BackendStatus::ReducedAccuracy,
            SolverStatus::MaxIterations | SolverStatus::MaxTime | SolverStatus::InsufficientProgress => {
                BackendStatus::Stalled
            }
            _ => BackendStatus::Failed,
        };
        let point = (sol.x.len() == ncols && sol.x.iter().all(|v| v.is_finite())).then(|| sol.x.clone());
        Ok(BackendOutcome {
            status,
            point,
            iterations: sol.iterations,
            detail: format!("{:?}", sol.status),
        })
    }
}

/// Per-block extreme eigenvalues at `vars`, by dense symmetric eigensolver.
pub fn verify_certificate(problem: &LmiProblem, vars: &DecisionVariables) -> Result<ResidualReport> {
    Ok(problem.residuals(vars)?)
}

fn passes_at(problem: &LmiProblem, outcome: &BackendOutcome) -> bool {
    let nv = problem.layout.len();
    outcome
        .point
        .as_ref()
        .and_then(|x| DecisionVariables::from_values(&problem.layout, x[..nv].to_vec()).ok())
        .and_then(|v| problem.residuals(&v).ok())
        .is_some_and(|r| r.passes())
}

/// Solves `problem` with `backend` and classifies the outcome.
///
/// * `Feasible`: the backend's point passes [`verify_certificate`].
/// * `Infeasible`: the backend converged, its optimal margin is `<= ε`,
///   and the point fails verification.
/// * `Inconclusive`: everything else, including backend errors.
///
/// A reduced-accuracy stop is retried once at 10x looser tolerances.
pub fn solve(problem: &LmiProblem, backend: &dyn ConicBackend, options: &SolverOptions) -> Certificate {
    let mut problem_ref = std::borrow::Cow::Borrowed(problem);
    if let Some(m) = options.margin {
        problem_ref.to_mut().margin = m;
    }
    let problem = problem_ref.as_ref();
    let start = Instant::now();
    let mut outcome = backend.maximize_margin(problem, options);
    // one retry at 10x looser tolerances when the backend stops short;
    // verification below is unaffected by the tolerances used
    if matches!(&outcome, Ok(o) if o.status == BackendStatus::ReducedAccuracy) {
        let relaxed = SolverOptions {
            feasibility_tolerance: 10.0 * options.feasibility_tolerance,
            gap_tolerance: 10.0 * options.gap_tolerance,
            ..options.clone()
        };
        if let Ok(retry) = backend.maximize_margin(problem, &relaxed) {
            let keep_first = outcome.as_ref().is_ok_and(|o| passes_at(problem, o)) && !passes_at(problem, &retry);
            if !keep_first {
                outcome = Ok(retry);
            }
        }
    }
    let runtime_seconds = start.elapsed().as_secs_f64();

    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            return Certificate {
                verdict: Verdict::Inconclusive,
                variables: None,
                residuals: None,
                stats: SolverStats {
                    backend: backend.name().to_string(),
                    status: format!("error: {e}"),
                    iterations: 0,
                    runtime_seconds,
                    solver_margin: None,
                },
            }
        }
    };
    let nv = problem.layout.len();
    let mut stats = SolverStats {
        backend: backend.name().to_string(),
        status: outcome.detail.clone(),
        iterations: outcome.iterations,
        runtime_seconds,
        solver_margin: outcome.point.as_ref().map(|x| x[nv]),
    };
    let Some(point) = outcome.point else {
        return Certificate {
            verdict: Verdict::Inconclusive,
            variables: None,
            residuals: None,
            stats,
        };
    };
    let vars = match DecisionVariables::from_values(&problem.layout, point[..nv].to_vec()) {
        Ok(v) => v,
        Err(e) => {
            stats.status = format!("{}; {e}", stats.status);
            return Certificate {
                verdict: Verdict::Inconclusive,
                variables: None,
                residuals: None,
                stats,
            };
        }
    };
    let residuals = verify_certificate(problem, &vars).ok();
    let passes = residuals.as_ref().is_some_and(|r| r.passes());
    let t_star = point[nv];
    let verdict = if passes {
        Verdict::Feasible
    } else if outcome.status == BackendStatus::Converged && t_star <= problem.margin {
        Verdict::Infeasible
    } else {
        Verdict::Inconclusive
    };
    Certificate {
        verdict,
        variables: passes.then_some(vars),
        residuals,
        stats,
    }
}
