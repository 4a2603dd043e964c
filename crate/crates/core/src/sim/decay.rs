use alloc::vec::Vec;

use super::integrate::Trajectory;
use crate::error::{Error, Result};

/// Empirical decay rate: `-slope` of a least-squares line through
/// `log ‖x(t)‖` at the local maxima of `‖x‖` in the last `tail_fraction`
/// of the run.
///
/// A tail with no interior maxima and a strictly decreasing norm is fitted
/// on all its samples instead.
pub fn estimate_decay_rate(traj: &Trajectory, tail_fraction: f64) -> Result<f64> {
    if traj.diverged {
        return Err(Error::Estimation("trajectory diverged".into()));
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::Estimation(alloc::format!("tail fraction {tail_fraction} outside (0, 1]")));
    }
    let t_end = traj.final_time();
    let start = t_end * (1.0 - tail_fraction);
    let window: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(traj.states.iter())
        .filter(|(t, _)| **t >= start)
        .map(|(t, x)| (*t, x.norm()))
        .collect();
    if window.len() < 3 {
        return Err(Error::Estimation("tail window has fewer than 3 samples".into()));
    }
    let peaks: Vec<(f64, f64)> = window
        .windows(3)
        .filter(|w| w[1].1 > w[0].1 && w[1].1 >= w[2].1)
        .map(|w| w[1])
        .collect();

    let points = if peaks.len() >= 3 {
        peaks
    } else if peaks.is_empty() && window.windows(2).all(|w| w[1].1 < w[0].1) {
        window
    } else {
        return Err(Error::Estimation(alloc::format!(
            "{} peaks in the tail window, need at least 3",
            peaks.len()
        )));
    };
    let logs: Vec<(f64, f64)> = points
        .into_iter()
        .filter(|(_, v)| *v > 0.0)
        .map(|(t, v)| (t, libm::log(v)))
        .collect();
    if logs.len() < 3 {
        return Err(Error::Estimation("norm vanished in the tail window".into()));
    }
    Ok(-least_squares_slope(&logs))
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mt = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, y) in points {
        sxy += (t - mt) * (y - my);
        sxx += (t - mt) * (t - mt);
    }
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_line() {
        let pts: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 3.0 - 0.5 * i as f64)).collect();
        assert!((least_squares_slope(&pts) + 0.5).abs() < 1e-14);
    }
}
