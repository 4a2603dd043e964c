//! Fixed-step simulation of the delayed reset loop and its sampled-data form.
//!
//! Both simulators use classical RK4 with a cubic Hermite history for the
//! delayed argument. Steps are aligned with reset instants, with reset
//! instants shifted by `h`, and with `h` itself, so that every step sees a
//! smooth right-hand side.

mod decay;
mod equivalence;
mod initial;
mod integrate;
mod law;

pub use decay::estimate_decay_rate;
pub use equivalence::{equivalence_oracle_ci, PiecewisePolynomial};
pub use initial::InitialCondition;
pub use integrate::{
    reconstruct_reset_state, sampled_initial_data, simulate_reset_system, simulate_sampled_system, ResetEvent,
    SampledTrajectory, Segment, Side, Trajectory, DIVERGENCE_GUARD,
};
pub use law::ResettingLaw;
