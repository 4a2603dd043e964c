use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use super::initial::InitialCondition;
use super::law::ResettingLaw;
use crate::error::{dim_mismatch, invalid, Result};
use crate::model::{ClosedLoopModel, SampledDataModel};

/// Norm above which a run is declared divergent.
pub const DIVERGENCE_GUARD: f64 = 1e12;

/// One fixed step stored for cubic Hermite interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub t0: f64,
    pub t1: f64,
    pub x0: DVector<f64>,
    pub x1: DVector<f64>,
    pub f0: DVector<f64>,
    pub f1: DVector<f64>,
}

impl Segment {
    pub fn eval(&self, t: f64) -> DVector<f64> {
        let dt = self.t1 - self.t0;
        let s = ((t - self.t0) / dt).clamp(0.0, 1.0);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        &self.x0 * h00 + &self.f0 * (h10 * dt) + &self.x1 * h01 + &self.f1 * (h11 * dt)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResetEvent {
    pub time: f64,
    pub before: DVector<f64>,
    pub after: DVector<f64>,
}

/// Which one-sided limit to take at a segment boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Simulated run. `states[j]` is the state at `times[j]`, right-continuous
/// at reset instants (the post-reset value).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub resets: Vec<ResetEvent>,
    pub diverged: bool,
    pub segments: Vec<Segment>,
    pub delay: f64,
    pub initial: InitialCondition,
}

impl Trajectory {
    /// Dense output on `[-h, t_end]`.
    pub fn state_at(&self, t: f64, side: Side) -> DVector<f64> {
        if t <= 0.0 || self.segments.is_empty() {
            return self.initial.eval(t.max(-self.delay).min(0.0));
        }
        let idx = match side {
            Side::Left => self.segments.partition_point(|s| s.t0 < t),
            Side::Right => self.segments.partition_point(|s| s.t0 <= t),
        };
        self.segments[idx.saturating_sub(1)].eval(t)
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    pub fn norms(&self) -> Vec<f64> {
        self.states.iter().map(|x| x.norm()).collect()
    }

    /// Reset instants, excluding `t_0 = 0`.
    pub fn reset_times(&self) -> Vec<f64> {
        self.resets.iter().map(|r| r.time).collect()
    }
}

struct Engine<'a> {
    a: &'a DMatrix<f64>,
    a_d: &'a DMatrix<f64>,
    delay: f64,
    traj: Trajectory,
}

impl<'a> Engine<'a> {
    fn new(a: &'a DMatrix<f64>, a_d: &'a DMatrix<f64>, delay: f64, phi: &InitialCondition) -> Self {
        let x0 = phi.eval(0.0);
        Self {
            a,
            a_d,
            delay,
            traj: Trajectory {
                times: alloc::vec![0.0],
                states: alloc::vec![x0],
                resets: Vec::new(),
                diverged: false,
                segments: Vec::new(),
                delay,
                initial: phi.clone(),
            },
        }
    }

    fn rhs(&self, t: f64, x: &DVector<f64>, drift: &DVector<f64>, side: Side) -> DVector<f64> {
        let delayed = self.traj.state_at(t - self.delay, side);
        self.a * x + self.a_d * delayed + drift
    }

    /// Classical RK4 step; returns the step's Hermite segment without storing it.
    fn step(&self, t: f64, x: &DVector<f64>, dt: f64, drift: &DVector<f64>) -> Segment {
        let half = 0.5 * dt;
        let k1 = self.rhs(t, x, drift, Side::Right);
        let k2 = self.rhs(t + half, &(x + &k1 * half), drift, Side::Right);
        let k3 = self.rhs(t + half, &(x + &k2 * half), drift, Side::Right);
        let k4 = self.rhs(t + dt, &(x + &k3 * dt), drift, Side::Left);
        let x1 = x + (&k1 + &k2 * 2.0 + &k3 * 2.0 + &k4) * (dt / 6.0);
        let f1 = self.rhs(t + dt, &x1, drift, Side::Left);
        Segment {
            t0: t,
            t1: t + dt,
            x0: x.clone(),
            x1,
            f0: k1,
            f1,
        }
    }

    fn commit(&mut self, seg: Segment) -> DVector<f64> {
        let x = seg.x1.clone();
        self.traj.times.push(seg.t1);
        self.traj.states.push(x.clone());
        self.traj.segments.push(seg);
        if !x.iter().all(|v| v.is_finite()) || x.norm() > DIVERGENCE_GUARD {
            self.traj.diverged = true;
        }
        x
    }

    fn set_current(&mut self, x: DVector<f64>) {
        *self.traj.states.last_mut().unwrap() = x;
    }
}

fn check_run(n: usize, delay: f64, phi: &InitialCondition, horizon: f64, step: f64) -> Result<()> {
    phi.validate(n, delay)?;
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(invalid("horizon", alloc::format!("{horizon} must be positive")));
    }
    if !(step > 0.0 && step <= delay / 10.0 * (1.0 + 1e-12)) {
        return Err(invalid("step", alloc::format!("need 0 < step <= h/10, got {step} with h = {delay}")));
    }
    Ok(())
}

/// Sorted, deduplicated breakpoints in `(0, horizon]`.
fn breakpoints(points: impl IntoIterator<Item = f64>, horizon: f64, eps: f64) -> Vec<f64> {
    let mut v: Vec<f64> = points.into_iter().filter(|&t| t > eps && t <= horizon + eps).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.dedup_by(|a, b| (*a - *b).abs() <= eps);
    v
}

fn next_target(t: f64, step: f64, horizon: f64, bps: &[f64], eps: f64) -> f64 {
    let j = bps.partition_point(|&b| b <= t + eps);
    let mut target = (t + step).min(horizon);
    if let Some(&b) = bps.get(j) {
        // absorb slivers so steps never shrink below a tiny fraction
        if b <= target + step * 1e-6 {
            target = b;
        }
    }
    if horizon - target <= eps {
        target = horizon;
    }
    target
}

/// Integrates the reset system `x' = A x + A_d x(t-h)`, `x(t+) = A_R x(t)`.
///
/// No reset is applied at `t_0 = 0`; the reset-integrator state starts from
/// `φ(0)` as given.
pub fn simulate_reset_system(
    model: &ClosedLoopModel,
    law: &ResettingLaw,
    phi: &InitialCondition,
    horizon: f64,
    step: f64,
) -> Result<Trajectory> {
    let n = model.dim();
    let h = model.delay;
    check_run(n, h, phi, horizon, step)?;
    law.validate()?;
    let eps = step * 1e-9;
    let seq = law.sequence(horizon)?;
    let timed: Vec<f64> = seq.clone().map(|s| s[1..].to_vec()).unwrap_or_default();
    let mut bps = breakpoints(timed.iter().copied().chain(timed.iter().map(|r| r + h)).chain([h]), horizon, eps);

    let drift = DVector::zeros(n);
    let mut eng = Engine::new(&model.a, &model.a_d, h, phi);
    let mut x = phi.eval(0.0);
    let mut t = 0.0;
    let mut next_reset = 0usize;
    let mut last_reset = 0.0;
    let crossing = match *law {
        ResettingLaw::ZeroCrossing { min_dwell } => Some(min_dwell),
        _ => None,
    };
    // g(s) = y_p(s - h); resets fire on its sign changes
    let out_row = model.output.row(0).clone_owned();
    let g = |eng: &Engine, s: f64| -> f64 { (&out_row * eng.traj.state_at(s - h, Side::Left))[0] };

    while t < horizon - eps && !eng.traj.diverged {
        let target = next_target(t, step, horizon, &bps, eps);
        let mut seg = eng.step(t, &x, target - t, &drift);
        let mut fire = false;

        if let Some(min_dwell) = crossing {
            let (ga, gb) = (g(&eng, t), g(&eng, target));
            if (ga * gb < 0.0 || (gb == 0.0 && ga != 0.0)) && ga != 0.0 {
                let (mut lo, mut hi) = (t, target);
                while hi - lo > step / 100.0 {
                    let mid = 0.5 * (lo + hi);
                    if g(&eng, mid) * ga > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                if hi - last_reset >= min_dwell {
                    if hi < target - eps {
                        seg = eng.step(t, &x, hi - t, &drift);
                    }
                    fire = true;
                }
            }
        } else if timed.get(next_reset).is_some_and(|&r| (r - seg.t1).abs() <= eps) {
            next_reset += 1;
            fire = true;
        }

        t = seg.t1;
        x = eng.commit(seg);
        if fire {
            let after = &model.a_r * &x;
            eng.traj.resets.push(ResetEvent {
                time: t,
                before: x.clone(),
                after: after.clone(),
            });
            eng.set_current(after.clone());
            x = after;
            last_reset = t;
            if crossing.is_some() {
                let rh = t + h;
                let j = bps.partition_point(|&b| b < rh);
                if rh <= horizon && bps.get(j).is_none_or(|&b| (b - rh).abs() > eps) {
                    bps.insert(j, rh);
                }
            }
        }
    }
    Ok(eng.traj)
}

/// Sampled-data run: the trajectory plus the held value in force on each
/// inter-reset interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledTrajectory {
    pub trajectory: Trajectory,
    /// `(t_k, X held on (t_k, t_{k+1}])`; the first entry is the initial hold.
    pub holds: Vec<(f64, DVector<f64>)>,
}

impl SampledTrajectory {
    /// Held vector in force at `t` (right-continuous at reset instants).
    pub fn hold_at(&self, t: f64) -> &DVector<f64> {
        let j = self.holds.partition_point(|(tk, _)| *tk <= t);
        &self.holds[j.saturating_sub(1)].1
    }
}

/// Integrates `X' = Λ X + Λ_d X(t-h) + Λ u`, `u = K X(t_k)` for the given
/// reset instants (`t_0 = 0` optional).
///
/// On `[0, t_1]` the held vector is `initial_hold`; its last entry plays the
/// role of `x_i(0) - x_ri(0)`.
pub fn simulate_sampled_system(
    model: &SampledDataModel,
    resets: &[f64],
    phi: &InitialCondition,
    initial_hold: &DVector<f64>,
    horizon: f64,
    step: f64,
) -> Result<SampledTrajectory> {
    let n = model.dim();
    let h = model.delay;
    check_run(n, h, phi, horizon, step)?;
    if initial_hold.len() != n {
        return Err(dim_mismatch("initial hold", n, initial_hold.len()));
    }
    if resets.windows(2).any(|w| w[1] <= w[0]) || resets.iter().any(|r| *r < 0.0) {
        return Err(invalid("resets", "reset instants must be nonnegative and strictly increasing"));
    }
    let eps = step * 1e-9;
    let timed: Vec<f64> = resets.iter().copied().filter(|&r| r > eps && r <= horizon + eps).collect();
    // same grid as the reset system, so the two runs can be compared pointwise
    let bps = breakpoints(timed.iter().copied().chain(timed.iter().map(|r| r + h)).chain([h]), horizon, eps);

    let lk = &model.lambda * &model.k;
    let mut hold = initial_hold.clone();
    let mut drift = &lk * &hold;
    let mut holds = alloc::vec![(0.0, hold.clone())];
    let mut eng = Engine::new(&model.lambda, &model.lambda_d, h, phi);
    let mut x = phi.eval(0.0);
    let mut t = 0.0;
    let mut next_reset = 0usize;

    while t < horizon - eps && !eng.traj.diverged {
        let target = next_target(t, step, horizon, &bps, eps);
        let seg = eng.step(t, &x, target - t, &drift);
        t = seg.t1;
        x = eng.commit(seg);
        if timed.get(next_reset).is_some_and(|&r| (r - t).abs() <= eps) {
            next_reset += 1;
            hold = x.clone();
            drift = &lk * &hold;
            holds.push((t, hold.clone()));
            eng.traj.resets.push(ResetEvent {
                time: t,
                before: x.clone(),
                after: x.clone(),
            });
        }
    }
    Ok(SampledTrajectory {
        trajectory: eng.traj,
        holds,
    })
}

/// Sampled-data initial data matching a reset-system history: `X = (x_p, x_i)`
/// and the initial hold carrying `x_i(0) - x_ri(0)` in its last entry.
pub fn sampled_initial_data(
    model: &ClosedLoopModel,
    phi: &InitialCondition,
) -> Result<(InitialCondition, DVector<f64>)> {
    let n = model.dim();
    phi.validate(n, model.delay)?;
    let keep = n - 1;
    let restrict = |v: &DVector<f64>| v.rows(0, keep).clone_owned();
    let phi_x = match phi {
        InitialCondition::Constant(v) => InitialCondition::Constant(restrict(v)),
        InitialCondition::PiecewiseLinear { times, values } => InitialCondition::PiecewiseLinear {
            times: times.clone(),
            values: values.iter().map(restrict).collect(),
        },
        InitialCondition::Polynomial { coeffs } => InitialCondition::Polynomial {
            coeffs: coeffs.iter().map(restrict).collect(),
        },
    };
    let x0 = phi.eval(0.0);
    let mut hold = DVector::zeros(keep);
    hold[keep - 1] = x0[n - 2] - x0[n - 1];
    Ok((phi_x, hold))
}

/// Reset-system states `(x_p, x_i, x_ri)` from a sampled run:
/// `x_i = x_s` and `x_ri = x_s - held`, at every grid time.
pub fn reconstruct_reset_state(run: &SampledTrajectory) -> Vec<DVector<f64>> {
    let traj = &run.trajectory;
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(&t, x)| {
            let m = x.len();
            let held = run.hold_at(t)[m - 1];
            let mut full = DVector::zeros(m + 1);
            full.rows_mut(0, m).copy_from(x);
            full[m] = x[m - 1] - held;
            full
        })
        .collect()
}
