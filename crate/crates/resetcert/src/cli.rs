//! Command-line front end. [`run`] returns the process exit status:
//! 0 feasible or success, 1 infeasible (or an uncertifiable table row),
//! 2 inconclusive, 3 usage, configuration or IO error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use resetcert_core::lmi::assemble_conditions;
use resetcert_core::sim::{estimate_decay_rate, simulate_reset_system};

use crate::config::{ProblemConfig, SweepConfig};
use crate::error::{io_error, Error, Result};
use crate::format::{opt_cell, trajectory_rows, write_csv_file, write_json, CertificateFile, ProblemFile, QueryRecord};
use crate::sdp::{solve, verify_certificate, Verdict};
use crate::search::{decay_vs_period_sweep, partition_table, period_vs_delay_sweep, SearchContext, DEFAULT_BACKEND};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "resetcert", version, about = "Stability certificates for delayed PI+RI reset loops")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Problem definition (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads for searches and sweeps.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Bisection tolerance, replacing the configured one.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Seed for the bounded-random resetting law.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the conditions for the configured query; writes certificate.json.
    Certify,
    /// Re-check a certificate file against the configured query.
    Verify {
        #[arg(long)]
        certificate: PathBuf,
    },
    /// Smallest certified T_m per partition count M; writes table1.csv.
    Table1 {
        /// Comma-separated M values, replacing the configured list.
        #[arg(long, value_delimiter = ',')]
        partitions: Option<Vec<usize>>,
    },
    /// Simulate the reset loop under the configured law; writes trajectory.csv.
    Simulate,
    /// Run the configured sweep; writes sweep.csv.
    Sweep,
    /// Write the assembled conditions to problem.json.
    DumpProblem,
}

struct Session {
    config: ProblemConfig,
    out: PathBuf,
    jobs: usize,
    seed: Option<u64>,
}

impl Session {
    fn new(global: &GlobalArgs) -> Result<Self> {
        let path = global
            .config
            .as_ref()
            .ok_or_else(|| Error::Config("--config PATH is required".into()))?;
        let mut config = ProblemConfig::load(path)?;
        if let Some(tol) = global.tol {
            config.search.tolerance = tol;
            config.search.alpha_tolerance = tol;
        }
        config.validate()?;
        if global.jobs == Some(0) {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        let jobs = global
            .jobs
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        std::fs::create_dir_all(&global.out).map_err(io_error(&global.out))?;
        Ok(Self {
            config,
            out: global.out.clone(),
            jobs,
            seed: global.seed,
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn query_record(&self) -> Result<QueryRecord> {
        Ok(QueryRecord::new(&self.config.query()?, self.config.analysis.formulation))
    }
}

fn verdict_code(v: Verdict) -> i32 {
    match v {
        Verdict::Feasible => EXIT_OK,
        Verdict::Infeasible => EXIT_INFEASIBLE,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

/// Parses `args` and runs the command, writing the report to `stdout` and
/// diagnostics to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                return EXIT_USAGE;
            }
            let _ = write!(stdout, "{e}");
            return EXIT_OK;
        }
    };
    match dispatch(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    let session = Session::new(&cli.global)?;
    let report = |out: &mut dyn Write, line: String| -> Result<()> {
        writeln!(out, "{line}").map_err(io_error("<stdout>"))
    };
    match &cli.command {
        Command::Certify => certify(&session, out, &report),
        Command::Verify { certificate } => verify(&session, certificate, out, &report),
        Command::Table1 { partitions } => table1(&session, partitions.as_deref(), out, &report),
        Command::Simulate => simulate(&session, out, &report),
        Command::Sweep => sweep(&session, out, &report),
        Command::DumpProblem => {
            let problem = assemble_conditions(&session.config.sampled()?, &session.config.query()?, &session.config.formulation())?;
            let path = session.path("problem.json");
            write_json(&path, &ProblemFile::new(&problem, session.query_record()?))?;
            report(
                out,
                format!(
                    "problem: {} scalars, {} blocks -> {}",
                    problem.layout.len(),
                    problem.blocks.len(),
                    path.display()
                ),
            )?;
            Ok(EXIT_OK)
        }
    }
}

type Report<'a> = dyn Fn(&mut dyn Write, String) -> Result<()> + 'a;

fn certify(s: &Session, out: &mut dyn Write, report: &Report) -> Result<i32> {
    let cfg = &s.config;
    let problem = assemble_conditions(&cfg.sampled()?, &cfg.query()?, &cfg.formulation())?;
    let cert = solve(&problem, &DEFAULT_BACKEND, &cfg.solver);
    report(out, format!("verdict: {}", cert.verdict))?;
    if let Some(res) = &cert.residuals {
        if let Some(w) = res.worst() {
            report(
                out,
                format!(
                    "worst block: {} margin {:.3e} (threshold {:.3e})",
                    w.label, w.margin, res.threshold
                ),
            )?;
        }
    }
    let st = &cert.stats;
    report(
        out,
        format!(
            "solver: {} status {} iterations {} time {:.3}s t* {}",
            st.backend,
            st.status,
            st.iterations,
            st.runtime_seconds,
            opt_cell(st.solver_margin.map(|m| format!("{m:.3e}")))
        ),
    )?;
    let path = s.path("certificate.json");
    CertificateFile::new(&cert, &problem, s.query_record()?).save(&path)?;
    report(out, format!("certificate: {}", path.display()))?;
    Ok(verdict_code(cert.verdict))
}

fn verify(s: &Session, file: &Path, out: &mut dyn Write, report: &Report) -> Result<i32> {
    let cfg = &s.config;
    let problem = assemble_conditions(&cfg.sampled()?, &cfg.query()?, &cfg.formulation())?;
    let cert = CertificateFile::load(file)?;
    let recorded = QueryRecord::new(&cfg.query()?, cfg.analysis.formulation);
    if cert.query != recorded {
        return Err(Error::Config("certificate was issued for a different query".into()));
    }
    let vars = cert.decision_variables(&problem)?;
    let res = verify_certificate(&problem, &vars)?;
    for v in res.violations() {
        report(out, format!("violated: {} margin {:.3e}", v.label, v.margin))?;
    }
    let passes = res.passes();
    report(out, format!("verification: {}", if passes { "pass" } else { "fail" }))?;
    Ok(if passes { EXIT_OK } else { EXIT_INFEASIBLE })
}

fn table1(s: &Session, partitions: Option<&[usize]>, out: &mut dyn Write, report: &Report) -> Result<i32> {
    let mut cfg = s.config.clone();
    if let Some(p) = partitions {
        cfg.search.partitions = p.to_vec();
        cfg.validate()?;
    }
    let ctx = SearchContext {
        formulation: cfg.formulation(),
        ..SearchContext::new(&DEFAULT_BACKEND, &cfg.solver)
    };
    let a = &cfg.analysis;
    let rows = partition_table(
        &cfg.sampled()?,
        a.order,
        &cfg.search.partitions,
        a.decay_rate,
        a.t_max,
        cfg.search.tolerance,
        s.jobs,
        &ctx,
    )?;
    let header = ["M", "T_m", "bracket_ok", "solves", "runtime_s", "note"].map(String::from);
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.intervals.to_string(),
                opt_cell(r.min_tm),
                opt_cell(r.bracket_ok),
                r.solves.to_string(),
                format!("{:.3}", r.runtime_seconds),
                r.note.clone(),
            ]
        })
        .collect();
    let path = s.path("table1.csv");
    write_csv_file(&path, &cfg.to_json(), &header, &cells)?;
    let mut flagged = false;
    for r in &rows {
        let tm = r.min_tm.map_or_else(|| "uncertified".to_string(), |v| format!("{v:.4}"));
        flagged |= r.min_tm.is_none();
        report(out, format!("M = {:>3}: T_m = {tm}  ({} solves)", r.intervals, r.solves))?;
    }
    report(out, format!("table: {}", path.display()))?;
    Ok(if flagged { EXIT_INFEASIBLE } else { EXIT_OK })
}

fn simulate(s: &Session, out: &mut dyn Write, report: &Report) -> Result<i32> {
    let cfg = &s.config;
    let sim = cfg.simulation()?;
    let law = cfg.law(s.seed)?;
    let phi = cfg.initial_condition()?;
    let traj = simulate_reset_system(&cfg.closed_loop()?, &law, &phi, sim.horizon, cfg.step()?)?;
    let (header, rows) = trajectory_rows(&traj);
    let mut resolved = cfg.clone();
    if let Some(seed) = s.seed {
        if let Some(crate::config::LawConfig::BoundedRandom { seed: ref mut sd, .. }) = resolved.law {
            *sd = seed;
        }
    }
    let path = s.path("trajectory.csv");
    write_csv_file(&path, &resolved.to_json(), &header, &rows)?;
    let initial = phi.sup_norm(cfg.delay, 200);
    let peak = traj.norms().into_iter().fold(0.0_f64, f64::max);
    let summary = if traj.diverged {
        "divergent (guard exceeded)".to_string()
    } else {
        match estimate_decay_rate(&traj, sim.tail_fraction) {
            Ok(rate) if rate > 0.0 => format!("convergent, estimated decay {rate:.4e}"),
            Ok(rate) => format!("divergent, estimated decay {rate:.4e}"),
            Err(e) => format!("undetermined ({e})"),
        }
    };
    report(
        out,
        format!(
            "summary: {summary}; resets {}; peak/initial norm {:.3e}; final time {}",
            traj.resets.len(),
            peak / initial.max(f64::MIN_POSITIVE),
            traj.final_time()
        ),
    )?;
    report(out, format!("trajectory: {}", path.display()))?;
    Ok(EXIT_OK)
}

fn sweep(s: &Session, out: &mut dyn Write, report: &Report) -> Result<i32> {
    let cfg = &s.config;
    let sweep_cfg = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("missing `sweep` section".into()))?;
    let ctx = SearchContext {
        formulation: cfg.formulation(),
        ..SearchContext::new(&DEFAULT_BACKEND, &cfg.solver)
    };
    let a = &cfg.analysis;
    let (header, rows): (Vec<String>, Vec<Vec<String>>) = match sweep_cfg {
        SweepConfig::PeriodVsDelay {
            reset_ratios,
            delays,
            period_range,
        } => {
            let cells = period_vs_delay_sweep(
                &cfg.plant()?,
                &cfg.controller()?,
                reset_ratios,
                delays,
                a.order,
                a.intervals,
                a.decay_rate,
                *period_range,
                cfg.search.tolerance,
                s.jobs,
                &ctx,
            )?;
            let header = ["p_r", "h", "T_max", "bracket_ok", "solves", "iterations", "runtime_s", "note"];
            let rows = cells
                .iter()
                .map(|c| {
                    vec![
                        c.reset_ratio.to_string(),
                        c.delay.to_string(),
                        opt_cell(c.max_period),
                        opt_cell(c.bracket_ok),
                        c.solves.to_string(),
                        c.iterations.to_string(),
                        format!("{:.3}", c.runtime_seconds),
                        c.note.clone(),
                    ]
                })
                .collect();
            (header.map(String::from).to_vec(), rows)
        }
        SweepConfig::DecayVsPeriod { periods, min_ratio } => {
            let cells = decay_vs_period_sweep(
                &cfg.sampled()?,
                a.order,
                a.intervals,
                periods,
                *min_ratio,
                cfg.search.alpha_upper,
                cfg.search.alpha_tolerance,
                s.jobs,
                &ctx,
            )?;
            let header = ["T_m", "T_M", "alpha_max", "bracket_ok", "solves", "iterations", "runtime_s", "note"];
            let rows = cells
                .iter()
                .map(|c| {
                    vec![
                        c.t_min.to_string(),
                        c.t_max.to_string(),
                        opt_cell(c.max_alpha),
                        opt_cell(c.bracket_ok),
                        c.solves.to_string(),
                        c.iterations.to_string(),
                        format!("{:.3}", c.runtime_seconds),
                        c.note.clone(),
                    ]
                })
                .collect();
            (header.map(String::from).to_vec(), rows)
        }
    };
    let path = s.path("sweep.csv");
    write_csv_file(&path, &cfg.to_json(), &header, &rows)?;
    report(out, format!("sweep: {} cells -> {}", rows.len(), path.display()))?;
    Ok(EXIT_OK)
}
