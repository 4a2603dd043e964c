//! JSON problem definitions.
//!
//! Units: times (`delay`, reset bounds, periods, horizon, step, dwell) are
//! in the plant's time unit; `decay_rate` is in 1/time.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use resetcert_core::lmi::{AnalysisQuery, Formulation, ZCoupling};
use resetcert_core::model::{
    build_closed_loop, build_sampled_data, presets, ClosedLoopModel, PiRiController, Plant, ResetBounds,
    SampledDataModel,
};
use resetcert_core::sim::{InitialCondition, ResettingLaw};
use serde::{Deserialize, Serialize};

use crate::error::{io_error, Error, Result};
use crate::sdp::SolverOptions;
use crate::search::{PeriodRange, DEFAULT_ALPHA_TOL, DEFAULT_T_TOL};

/// Row-major matrix.
pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    pub a: Rows,
    pub b: Rows,
    pub c: Rows,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    pub kp: f64,
    pub ki: f64,
    pub reset_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FormulationName {
    #[default]
    Increment,
    AsPrinted,
}

impl FormulationName {
    pub fn formulation(self) -> Formulation {
        match self {
            FormulationName::Increment => Formulation::default(),
            FormulationName::AsPrinted => Formulation::as_printed(),
        }
    }
}

impl From<Formulation> for FormulationName {
    fn from(f: Formulation) -> Self {
        if f.z_coupling == ZCoupling::AsPrinted {
            FormulationName::AsPrinted
        } else {
            FormulationName::Increment
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub decay_rate: f64,
    pub t_min: f64,
    pub t_max: f64,
    /// Legendre order `N`.
    pub order: usize,
    /// Partition count `M`.
    pub intervals: usize,
    #[serde(default)]
    pub formulation: FormulationName,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LawConfig {
    Periodic { period: f64 },
    BoundedRandom { min: f64, max: f64, seed: u64 },
    ZeroCrossing {
        /// Defaults to `1e-3 h`.
        min_dwell: Option<f64>,
    },
    Never,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    Constant(Vec<f64>),
    PiecewiseLinear { times: Vec<f64>, values: Rows },
    Polynomial { coeffs: Rows },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub horizon: f64,
    /// Defaults to `h / 100`.
    #[serde(default)]
    pub step: Option<f64>,
    /// History of the reset-system state `(x_p, x_i, x_ri)` on `[-h, 0]`.
    pub initial: InitialConfig,
    #[serde(default = "default_tail")]
    pub tail_fraction: f64,
}

fn default_tail() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Bisection tolerance for reset-time searches.
    pub tolerance: f64,
    /// Bisection tolerance for decay-rate searches.
    pub alpha_tolerance: f64,
    /// Initial infeasible guess for decay-rate searches.
    pub alpha_upper: f64,
    /// Partition counts `M` of the `T_m` table.
    pub partitions: Vec<usize>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_T_TOL,
            alpha_tolerance: DEFAULT_ALPHA_TOL,
            alpha_upper: 2.0,
            partitions: vec![1, 3, 5, 10, 50],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepConfig {
    /// Largest certified periodic `T` per `(p_r, h)`, at the analysis `α`.
    PeriodVsDelay {
        reset_ratios: Vec<f64>,
        delays: Vec<f64>,
        #[serde(default)]
        period_range: PeriodRange,
    },
    /// Largest certified `α` per period `T`; `min_ratio` set means
    /// asynchronous resets with `T_m = min_ratio * T`.
    DecayVsPeriod {
        periods: Vec<f64>,
        #[serde(default)]
        min_ratio: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub plant: PlantConfig,
    pub controller: ControllerConfig,
    pub delay: f64,
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub law: Option<LawConfig>,
    #[serde(default)]
    pub simulation: Option<SimulationConfig>,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

fn matrix(name: &str, rows: &Rows) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(Error::Config(format!("{name}: expected a non-empty rectangular matrix")));
    }
    Ok(DMatrix::from_row_iterator(r, c, rows.iter().flatten().copied()))
}

impl ProblemConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_error(path))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Checks every field that the commands rely on.
    pub fn validate(&self) -> Result<()> {
        self.plant()?;
        self.controller()?;
        self.closed_loop()?;
        self.query()?;
        if let Some(law) = self.law {
            self.law_for(law)?.validate()?;
        }
        if let Some(sim) = &self.simulation {
            if !(sim.horizon.is_finite() && sim.horizon > 0.0) {
                return Err(Error::Config(format!("simulation.horizon = {} must be positive", sim.horizon)));
            }
            let step = self.step()?;
            if step > self.delay / 10.0 {
                return Err(Error::Config(format!("simulation.step = {step} exceeds h/10")));
            }
            if !(sim.tail_fraction > 0.0 && sim.tail_fraction <= 1.0) {
                return Err(Error::Config("simulation.tail_fraction must lie in (0, 1]".into()));
            }
            self.initial_condition()?
                .validate(self.plant()?.order() + 2, self.delay)?;
        }
        let s = &self.search;
        if !(s.tolerance > 0.0 && s.alpha_tolerance > 0.0 && s.alpha_upper > 0.0) {
            return Err(Error::Config("search tolerances and alpha_upper must be positive".into()));
        }
        if s.partitions.is_empty() || s.partitions.contains(&0) {
            return Err(Error::Config("search.partitions must be non-empty and positive".into()));
        }
        match &self.sweep {
            Some(SweepConfig::PeriodVsDelay { reset_ratios, delays, period_range }) => {
                if reset_ratios.is_empty() || delays.is_empty() {
                    return Err(Error::Config("sweep grids must be non-empty".into()));
                }
                if reset_ratios.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err(Error::Config("sweep reset ratios must lie in [0, 1]".into()));
                }
                if delays.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
                    return Err(Error::Config("sweep delays must be positive".into()));
                }
                if !(period_range.min > 0.0 && period_range.max > period_range.min && period_range.points >= 2) {
                    return Err(Error::Config("period_range needs 0 < min < max and points >= 2".into()));
                }
            }
            Some(SweepConfig::DecayVsPeriod { periods, min_ratio }) => {
                if periods.is_empty() || periods.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
                    return Err(Error::Config("sweep periods must be non-empty and positive".into()));
                }
                if min_ratio.is_some_and(|r| !(0.0..=1.0).contains(&r)) {
                    return Err(Error::Config("min_ratio must lie in [0, 1]".into()));
                }
            }
            None => {}
        }
        Ok(())
    }

    pub fn plant(&self) -> Result<Plant> {
        Ok(Plant::new(
            matrix("plant.a", &self.plant.a)?,
            matrix("plant.b", &self.plant.b)?,
            matrix("plant.c", &self.plant.c)?,
        )?)
    }

    pub fn controller(&self) -> Result<PiRiController> {
        let c = self.controller;
        Ok(PiRiController::new(c.kp, c.ki, c.reset_ratio)?)
    }

    pub fn closed_loop(&self) -> Result<ClosedLoopModel> {
        Ok(build_closed_loop(&self.plant()?, &self.controller()?, self.delay)?)
    }

    pub fn sampled(&self) -> Result<SampledDataModel> {
        Ok(build_sampled_data(&self.plant()?, &self.controller()?, self.delay)?)
    }

    pub fn bounds(&self) -> Result<ResetBounds> {
        Ok(ResetBounds::new(self.analysis.t_min, self.analysis.t_max)?)
    }

    pub fn query(&self) -> Result<AnalysisQuery> {
        let a = &self.analysis;
        Ok(AnalysisQuery::new(a.decay_rate, self.bounds()?, a.order, a.intervals)?)
    }

    pub fn formulation(&self) -> Formulation {
        self.analysis.formulation.formulation()
    }

    fn law_for(&self, law: LawConfig) -> Result<ResettingLaw> {
        Ok(match law {
            LawConfig::Periodic { period } => ResettingLaw::Periodic { period },
            LawConfig::BoundedRandom { min, max, seed } => ResettingLaw::BoundedRandom { min, max, seed },
            LawConfig::ZeroCrossing { min_dwell } => ResettingLaw::ZeroCrossing {
                min_dwell: min_dwell.unwrap_or(1e-3 * self.delay),
            },
            LawConfig::Never => ResettingLaw::Never,
        })
    }

    /// Resetting law, with `seed` replacing the configured random seed.
    pub fn law(&self, seed: Option<u64>) -> Result<ResettingLaw> {
        let law = self
            .law
            .ok_or_else(|| Error::Config("missing `law` section".into()))?;
        let law = match (law, seed) {
            (LawConfig::BoundedRandom { min, max, .. }, Some(seed)) => LawConfig::BoundedRandom { min, max, seed },
            (l, _) => l,
        };
        self.law_for(law)
    }

    pub fn simulation(&self) -> Result<&SimulationConfig> {
        self.simulation
            .as_ref()
            .ok_or_else(|| Error::Config("missing `simulation` section".into()))
    }

    pub fn step(&self) -> Result<f64> {
        let step = self.simulation()?.step.unwrap_or(self.delay / 100.0);
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::Config(format!("simulation.step = {step} must be positive")));
        }
        Ok(step)
    }

    pub fn initial_condition(&self) -> Result<InitialCondition> {
        let vec = |v: &Vec<f64>| DVector::from_column_slice(v);
        Ok(match &self.simulation()?.initial {
            InitialConfig::Constant(v) => InitialCondition::Constant(vec(v)),
            InitialConfig::PiecewiseLinear { times, values } => InitialCondition::PiecewiseLinear {
                times: times.clone(),
                values: values.iter().map(vec).collect(),
            },
            InitialConfig::Polynomial { coeffs } => InitialCondition::Polynomial {
                coeffs: coeffs.iter().map(vec).collect(),
            },
        })
    }

    /// Integrator loop `1/s`, `k_p = 1.4`, `k_i = 0.3`, `p_r = 0.5`, `h = 1`,
    /// with the zero-crossing law and the history `(1, 0, 0)`.
    pub fn integrator_example() -> Self {
        let (_, c, h) = presets::integrator_loop();
        Self {
            plant: PlantConfig {
                a: vec![vec![0.0]],
                b: vec![vec![1.0]],
                c: vec![vec![1.0]],
            },
            controller: ControllerConfig {
                kp: c.kp,
                ki: c.ki,
                reset_ratio: c.reset_ratio,
            },
            delay: h,
            analysis: AnalysisConfig {
                decay_rate: 1e-6,
                t_min: 0.94,
                t_max: 1.0,
                order: 2,
                intervals: 1,
                formulation: FormulationName::Increment,
            },
            law: Some(LawConfig::ZeroCrossing { min_dwell: None }),
            simulation: Some(SimulationConfig {
                horizon: 100.0,
                step: None,
                initial: InitialConfig::Constant(vec![1.0, 0.0, 0.0]),
                tail_fraction: 0.5,
            }),
            solver: SolverOptions::default(),
            search: SearchConfig::default(),
            sweep: None,
        }
    }

    /// Second-order plant whose PI loop is unstable for every delay,
    /// `k_p = k_i = 1`, `p_r = 0.5`, with periodic resets.
    pub fn unstable_base_example(delay: f64, period: f64) -> Self {
        Self {
            plant: PlantConfig {
                a: vec![vec![0.0, 0.0], vec![1.0, 0.5]],
                b: vec![vec![1.0], vec![1.0]],
                c: vec![vec![0.0, 1.0]],
            },
            controller: ControllerConfig {
                kp: 1.0,
                ki: 1.0,
                reset_ratio: 0.5,
            },
            delay,
            analysis: AnalysisConfig {
                decay_rate: 1e-6,
                t_min: period,
                t_max: period,
                order: 2,
                intervals: 1,
                formulation: FormulationName::Increment,
            },
            law: Some(LawConfig::Periodic { period }),
            simulation: Some(SimulationConfig {
                horizon: 60.0,
                step: None,
                initial: InitialConfig::Constant(vec![1.0, 0.0, 0.0, 0.0]),
                tail_fraction: 0.5,
            }),
            solver: SolverOptions::default(),
            search: SearchConfig::default(),
            sweep: None,
        }
    }
}
