//! Certificate and problem JSON, and CSV outputs.
//!
//! CSV files start with one `# config: {json}` line recording the full
//! configuration that produced them, followed by a header row.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use resetcert_core::lmi::{
    AnalysisQuery, BlockResidual, DecisionVariables, LmiProblem, ResidualReport, Sense, Structure, Triplet, VarName,
};
use resetcert_core::sim::Trajectory;
use serde::{Deserialize, Serialize};

use crate::config::{FormulationName, Rows};
use crate::error::{io_error, Error, Result};
use crate::sdp::{Certificate, SolverStats, Verdict};

pub const CERTIFICATE_SCHEMA: &str = "resetcert/certificate";
pub const PROBLEM_SCHEMA: &str = "resetcert/lmi-problem";
pub const SCHEMA_VERSION: u32 = 1;

fn sense_name(s: Sense) -> &'static str {
    match s {
        Sense::NegativeDefinite => "negative_definite",
        Sense::PositiveDefinite => "positive_definite",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub decay_rate: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub order: usize,
    pub intervals: usize,
    pub formulation: FormulationName,
}

impl QueryRecord {
    pub fn new(query: &AnalysisQuery, formulation: FormulationName) -> Self {
        Self {
            decay_rate: query.decay_rate(),
            t_min: query.bounds().min(),
            t_max: query.bounds().max(),
            order: query.order(),
            intervals: query.intervals(),
            formulation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualRecord {
    pub label: String,
    pub sense: String,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub margin: f64,
}

impl From<&BlockResidual> for ResidualRecord {
    fn from(r: &BlockResidual) -> Self {
        Self {
            label: r.label.to_string(),
            sense: sense_name(r.sense).into(),
            min_eigenvalue: r.min_eigenvalue,
            max_eigenvalue: r.max_eigenvalue,
            margin: r.margin,
        }
    }
}

/// Serialized certificate. `variables` holds dense row-major matrices keyed
/// by name (`P`, `S`, `R`, `Q1`, `Z1`, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateFile {
    pub schema: String,
    pub schema_version: u32,
    pub verdict: Verdict,
    pub query: QueryRecord,
    /// Strictness margin `ε`; blocks must clear `ε / 2` on re-check.
    pub margin: f64,
    pub threshold: Option<f64>,
    pub passes: Option<bool>,
    pub variables: Option<BTreeMap<String, Rows>>,
    pub residuals: Vec<ResidualRecord>,
    pub stats: SolverStats,
}

fn rows_of(m: &DMatrix<f64>) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl CertificateFile {
    pub fn new(cert: &Certificate, problem: &LmiProblem, query: QueryRecord) -> Self {
        let variables = cert.variables.as_ref().map(|vars| {
            problem
                .layout
                .blocks()
                .iter()
                .map(|b| {
                    let m = vars.matrix(b.name).expect("block of its own layout");
                    (b.name.to_string(), rows_of(&m))
                })
                .collect()
        });
        Self {
            schema: CERTIFICATE_SCHEMA.into(),
            schema_version: SCHEMA_VERSION,
            verdict: cert.verdict,
            query,
            margin: problem.margin,
            threshold: cert.residuals.as_ref().map(|r| r.threshold),
            passes: cert.residuals.as_ref().map(ResidualReport::passes),
            variables,
            residuals: cert
                .residuals
                .as_ref()
                .map(|r| r.blocks.iter().map(ResidualRecord::from).collect())
                .unwrap_or_default(),
            stats: cert.stats.clone(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text)?;
        if file.schema != CERTIFICATE_SCHEMA || file.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported certificate schema {} v{}",
                file.schema, file.schema_version
            )));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path).map_err(io_error(path))?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    /// Decision variables on `problem`'s layout. Every layout block must be
    /// present with matching dimensions; unknown names are rejected.
    /// Symmetric blocks are read from their upper triangle.
    pub fn decision_variables(&self, problem: &LmiProblem) -> Result<DecisionVariables> {
        let vars = self
            .variables
            .as_ref()
            .ok_or_else(|| Error::Config("certificate carries no variables".into()))?;
        let mut out = DecisionVariables::zeros(&problem.layout);
        for (key, rows) in vars {
            let name: VarName = key
                .parse()
                .map_err(|_| Error::Config(format!("unknown variable `{key}`")))?;
            let block = problem
                .layout
                .block(name)
                .ok_or_else(|| Error::Config(format!("variable `{key}` is not part of this problem")))?;
            if rows.len() != block.rows || rows.iter().any(|r| r.len() != block.cols) {
                return Err(Error::Config(format!(
                    "variable `{key}` must be {}x{}",
                    block.rows, block.cols
                )));
            }
            let m = DMatrix::from_row_iterator(block.rows, block.cols, rows.iter().flatten().copied());
            out.set_matrix(name, &m)?;
        }
        for b in problem.layout.blocks() {
            if !vars.contains_key(&b.name.to_string()) {
                return Err(Error::Config(format!("variable `{}` is missing", b.name)));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableRecord {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub symmetric: bool,
    /// First scalar index in the decision vector.
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRecord {
    pub index: usize,
    /// Upper-triangular `[row, col, value]`.
    pub entries: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub label: String,
    pub sense: String,
    pub dim: usize,
    pub constant: Vec<(usize, usize, f64)>,
    pub coefficients: Vec<CoefficientRecord>,
}

/// Full dump of an assembled [`LmiProblem`], for inspection or for feeding
/// another SDP solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub schema: String,
    pub schema_version: u32,
    pub query: QueryRecord,
    pub margin: f64,
    pub num_scalars: usize,
    pub variables: Vec<VariableRecord>,
    pub blocks: Vec<BlockRecord>,
}

fn triples(t: &[Triplet]) -> Vec<(usize, usize, f64)> {
    t.iter().map(|t| (t.row, t.col, t.value)).collect()
}

impl ProblemFile {
    pub fn new(problem: &LmiProblem, query: QueryRecord) -> Self {
        Self {
            schema: PROBLEM_SCHEMA.into(),
            schema_version: SCHEMA_VERSION,
            query,
            margin: problem.margin,
            num_scalars: problem.layout.len(),
            variables: problem
                .layout
                .blocks()
                .iter()
                .map(|b| VariableRecord {
                    name: b.name.to_string(),
                    rows: b.rows,
                    cols: b.cols,
                    symmetric: b.structure == Structure::Symmetric,
                    offset: b.offset,
                    len: b.len(),
                })
                .collect(),
            blocks: problem
                .blocks
                .iter()
                .map(|b| BlockRecord {
                    label: b.label.to_string(),
                    sense: sense_name(b.sense).into(),
                    dim: b.block.dim,
                    constant: triples(&b.block.constant),
                    coefficients: b
                        .block
                        .coefficients
                        .iter()
                        .map(|(k, t)| CoefficientRecord {
                            index: *k,
                            entries: triples(t),
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(io_error(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(io_error(path))?;
    w.flush().map_err(io_error(path))
}

/// Writes `# config: {config_json}`, then `header`, then `rows`.
pub fn write_csv<W: Write>(mut out: W, config_json: &str, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    writeln!(out, "# config: {config_json}").map_err(io_error("<csv>"))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(io_error("<csv>"))
}

pub fn write_csv_file(path: &Path, config_json: &str, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let file = File::create(path).map_err(io_error(path))?;
    write_csv(BufWriter::new(file), config_json, header, rows).map_err(|e| match e {
        Error::Io { source, .. } => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

/// Empty string for `None`.
pub fn opt_cell<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Columns `t, x1..xn, reset`. At a reset instant two rows are written:
/// the pre-reset state (`reset = 0`) and the post-reset state (`reset = 1`).
pub fn trajectory_rows(traj: &Trajectory) -> (Vec<String>, Vec<Vec<String>>) {
    let n = traj.states.first().map_or(0, |s| s.len());
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.push("reset".into());
    let row = |t: f64, x: &nalgebra::DVector<f64>, flag: u8| {
        let mut r = vec![t.to_string()];
        r.extend(x.iter().map(|v| v.to_string()));
        r.push(flag.to_string());
        r
    };
    let mut rows = Vec::with_capacity(traj.times.len() + traj.resets.len());
    let mut next_reset = traj.resets.iter().peekable();
    for (&t, x) in traj.times.iter().zip(&traj.states) {
        match next_reset.peek() {
            Some(ev) if ev.time == t => {
                rows.push(row(t, &ev.before, 0));
                rows.push(row(t, &ev.after, 1));
                next_reset.next();
            }
            _ => rows.push(row(t, x, 0)),
        }
    }
    (header, rows)
}
