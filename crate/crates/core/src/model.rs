//! Plant, controller and closed-loop matrix models.
//!
//! The loop is a SISO plant `x_p' = A_p x_p + B_p u_p`, `y_p = C_p x_p`
//! driven by a PI controller in parallel with a reset integrator. The two
//! controller states are the ordinary integral `x_i` and the resettable
//! integral `x_ri`; a share `p_r` of the integral action goes through the
//! resettable one. The plant output reaches the controller after a delay `h`:
//! `u_r(t) = -y_p(t - h)`.
//!
//! Two state-space descriptions are produced:
//!
//! * [`ClosedLoopModel`]: state `(x_p, x_i, x_ri)` with impulsive resets
//!   `x(t+) = A_R x(t)`.
//! * [`SampledDataModel`]: state `(x_p, x_s)` where the reset integrator is
//!   replaced by a sample-and-hold of the plain integral, `u(t) = K X(t_k)`.

use alloc::format;
use nalgebra::DMatrix;

use crate::error::{dim_mismatch, invalid, Error, Result};

/// Minimal state-space description of the delay-free plant (no feedthrough).
#[derive(Debug, Clone, PartialEq)]
pub struct Plant {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
}

impl Plant {
    /// `a` is `n_p x n_p`, `b` is `n_p x 1` and `c` is `1 x n_p`.
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 {
            return Err(invalid("plant.a", "plant must have at least one state"));
        }
        if a.ncols() != n {
            return Err(dim_mismatch(
                "plant.a",
                format!("{n}x{n}"),
                format!("{}x{}", a.nrows(), a.ncols()),
            ));
        }
        if b.nrows() != n {
            return Err(dim_mismatch("plant.b rows", n, b.nrows()));
        }
        if c.ncols() != n {
            return Err(dim_mismatch("plant.c columns", n, c.ncols()));
        }
        if b.ncols() != 1 || c.nrows() != 1 {
            return Err(Error::NotSiso {
                inputs: b.ncols(),
                outputs: c.nrows(),
            });
        }
        if a.iter().chain(b.iter()).chain(c.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("plant", "matrix entries must be finite"));
        }
        Ok(Self { a, b, c })
    }

    /// `P(s) = 1/s`.
    pub fn integrator() -> Self {
        Self {
            a: DMatrix::zeros(1, 1),
            b: DMatrix::from_element(1, 1, 1.0),
            c: DMatrix::from_element(1, 1, 1.0),
        }
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
}

/// Gains of the PI+RI compensator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiRiController {
    pub kp: f64,
    pub ki: f64,
    /// Share of the integral action that is reset, in `[0, 1]`.
    pub reset_ratio: f64,
}

impl PiRiController {
    pub fn new(kp: f64, ki: f64, reset_ratio: f64) -> Result<Self> {
        if !kp.is_finite() || !ki.is_finite() {
            return Err(invalid("controller", "gains must be finite"));
        }
        if !(0.0..=1.0).contains(&reset_ratio) {
            return Err(invalid(
                "controller.reset_ratio",
                format!("{reset_ratio} is outside [0, 1]"),
            ));
        }
        Ok(Self { kp, ki, reset_ratio })
    }

    pub fn with_reset_ratio(self, reset_ratio: f64) -> Result<Self> {
        Self::new(self.kp, self.ki, reset_ratio)
    }
}

/// Closed loop `x' = A x + A_d x(t-h)`, `x(t+) = A_R x(t)` with state
/// `(x_p, x_i, x_ri)`, `n = n_p + 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopModel {
    pub a: DMatrix<f64>,
    pub a_d: DMatrix<f64>,
    pub a_r: DMatrix<f64>,
    /// Row selecting the plant output `y_p = output * x` (`1 x n`).
    pub output: DMatrix<f64>,
    pub delay: f64,
    pub plant_order: usize,
}

impl ClosedLoopModel {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
}

/// Sampled-data form `X' = L X + L_d X(t-h) + L u`, `u = K X(t_k)` with state
/// `(x_p, x_s)`, `n = n_p + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledDataModel {
    pub lambda: DMatrix<f64>,
    pub lambda_d: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub delay: f64,
    pub plant_order: usize,
}

impl SampledDataModel {
    pub fn dim(&self) -> usize {
        self.lambda.nrows()
    }

    pub fn reset_ratio(&self) -> f64 {
        let n = self.dim();
        -self.k[(n - 1, n - 1)]
    }
}

/// Admissible reset intervals `T_k = t_{k+1} - t_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResetBounds {
    min: f64,
    max: f64,
}

impl ResetBounds {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) {
            return Err(invalid("reset bounds", "bounds must be finite"));
        }
        if max <= 0.0 {
            return Err(invalid("reset bounds", format!("T_M = {max} must be positive")));
        }
        if min < 0.0 || min > max {
            return Err(invalid(
                "reset bounds",
                format!("need 0 <= T_m <= T_M, got T_m = {min}, T_M = {max}"),
            ));
        }
        Ok(Self { min, max })
    }

    /// Periodic resets, `T_m = T_M = period`.
    pub fn periodic(period: f64) -> Result<Self> {
        Self::new(period, period)
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }
}

pub(crate) fn check_delay(delay: f64) -> Result<()> {
    if delay.is_finite() && delay > 0.0 {
        Ok(())
    } else {
        Err(invalid("delay", format!("h = {delay} must be positive")))
    }
}

/// Builds `A`, `A_d`, `A_R` of the impulsive closed loop.
pub fn build_closed_loop(
    plant: &Plant,
    ctrl: &PiRiController,
    delay: f64,
) -> Result<ClosedLoopModel> {
    check_delay(delay)?;
    let np = plant.order();
    let n = np + 2;
    let b_p = plant.b();
    let c_p = plant.c();

    // B_r = k_i [1; 1], C_r = [1 - p_r, p_r]
    let c_r = [1.0 - ctrl.reset_ratio, ctrl.reset_ratio];

    let mut a = DMatrix::zeros(n, n);
    a.view_mut((0, 0), (np, np)).copy_from(plant.a());
    for r in 0..np {
        for (j, cr) in c_r.iter().enumerate() {
            a[(r, np + j)] = b_p[(r, 0)] * cr;
        }
    }

    let mut a_d = DMatrix::zeros(n, n);
    let bc = b_p * c_p;
    a_d.view_mut((0, 0), (np, np)).copy_from(&(bc * -ctrl.kp));
    for j in 0..np {
        a_d[(np, j)] = -ctrl.ki * c_p[(0, j)];
        a_d[(np + 1, j)] = -ctrl.ki * c_p[(0, j)];
    }

    let mut a_r = DMatrix::identity(n, n);
    a_r[(n - 1, n - 1)] = 0.0;

    let mut output = DMatrix::zeros(1, n);
    output.view_mut((0, 0), (1, np)).copy_from(c_p);

    Ok(ClosedLoopModel {
        a,
        a_d,
        a_r,
        output,
        delay,
        plant_order: np,
    })
}

/// Builds `Lambda`, `Lambda_d`, `K` of the minimal sampled-data realization.
pub fn build_sampled_data(
    plant: &Plant,
    ctrl: &PiRiController,
    delay: f64,
) -> Result<SampledDataModel> {
    check_delay(delay)?;
    let np = plant.order();
    let n = np + 1;

    let mut lambda = DMatrix::zeros(n, n);
    lambda.view_mut((0, 0), (np, np)).copy_from(plant.a());
    lambda.view_mut((0, np), (np, 1)).copy_from(plant.b());

    let mut lambda_d = DMatrix::zeros(n, n);
    let bc = plant.b() * plant.c();
    lambda_d.view_mut((0, 0), (np, np)).copy_from(&(bc * -ctrl.kp));
    for j in 0..np {
        lambda_d[(np, j)] = -ctrl.ki * plant.c()[(0, j)];
    }

    let mut k = DMatrix::zeros(n, n);
    k[(n - 1, n - 1)] = -ctrl.reset_ratio;

    Ok(SampledDataModel {
        lambda,
        lambda_d,
        k,
        delay,
        plant_order: np,
    })
}

/// Reference loops used throughout the tests and the CLI presets.
pub mod presets {
    use super::*;

    /// Integrator plant with `k_p = 1.4`, `k_i = 0.3`, `p_r = 0.5`, `h = 1`.
    /// The base loop is stable but zero-crossing resets destabilize it.
    pub fn integrator_loop() -> (Plant, PiRiController, f64) {
        let ctrl = PiRiController::new(1.4, 0.3, 0.5).expect("valid preset");
        (Plant::integrator(), ctrl, 1.0)
    }

    /// Second-order plant whose base loop is unstable for every delay;
    /// `k_p = k_i = 1`, `p_r = 0.5`. The delay is left to the caller.
    pub fn unstable_base_loop() -> (Plant, PiRiController) {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.5]);
        let b = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        let c = DMatrix::from_row_slice(1, 2, &[0.0, 1.0]);
        let plant = Plant::new(a, b, c).expect("valid preset");
        let ctrl = PiRiController::new(1.0, 1.0, 0.5).expect("valid preset");
        (plant, ctrl)
    }
}
