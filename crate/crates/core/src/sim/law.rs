use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};

/// Rule generating reset instants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResettingLaw {
    Periodic { period: f64 },
    /// Gaps drawn uniformly from `[min, max]`.
    BoundedRandom { min: f64, max: f64, seed: u64 },
    /// Reset when the reset-integrator input `-y_p(t-h)` changes sign,
    /// at least `min_dwell` after the previous reset.
    ZeroCrossing { min_dwell: f64 },
    /// Base system: no resets.
    Never,
}

impl ResettingLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ResettingLaw::Periodic { period } if !(period.is_finite() && period > 0.0) => {
                Err(invalid("period", alloc::format!("{period} must be positive")))
            }
            ResettingLaw::BoundedRandom { min, max, .. } if !(min > 0.0 && max >= min && max.is_finite()) => Err(
                invalid("reset bounds", alloc::format!("need 0 < min <= max, got [{min}, {max}]")),
            ),
            ResettingLaw::ZeroCrossing { min_dwell } if !(min_dwell.is_finite() && min_dwell > 0.0) => {
                Err(invalid("min_dwell", alloc::format!("{min_dwell} must be positive")))
            }
            _ => Ok(()),
        }
    }

    /// `t_0 = 0, t_1, ...` up to `horizon` for the time-driven laws; `None`
    /// for the event-driven zero-crossing law.
    pub fn sequence(&self, horizon: f64) -> Result<Option<Vec<f64>>> {
        self.validate()?;
        let mut out = alloc::vec![0.0];
        match *self {
            ResettingLaw::Periodic { period } => {
                let mut k = 1u32;
                loop {
                    let t = k as f64 * period;
                    if t > horizon {
                        break;
                    }
                    out.push(t);
                    k += 1;
                }
            }
            ResettingLaw::BoundedRandom { min, max, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut t = 0.0;
                loop {
                    let gap = if max > min { rng.gen_range(min..=max) } else { min };
                    t += gap;
                    if t > horizon {
                        break;
                    }
                    out.push(t);
                }
            }
            ResettingLaw::ZeroCrossing { .. } => return Ok(None),
            ResettingLaw::Never => {}
        }
        Ok(Some(out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_sequence() {
        let s = ResettingLaw::Periodic { period: 0.25 }.sequence(1.0).unwrap().unwrap();
        assert_eq!(s, alloc::vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(ResettingLaw::Never.sequence(5.0).unwrap().unwrap(), alloc::vec![0.0]);
        assert!(ResettingLaw::ZeroCrossing { min_dwell: 0.01 }.sequence(5.0).unwrap().is_none());
    }

    #[test]
    fn random_sequence_is_reproducible() {
        let law = ResettingLaw::BoundedRandom { min: 0.2, max: 1.5, seed: 11 };
        let a = law.sequence(50.0).unwrap().unwrap();
        assert_eq!(a, law.sequence(50.0).unwrap().unwrap());
        assert_eq!(a[0], 0.0);
        assert!(a.windows(2).all(|w| (0.2..=1.5).contains(&(w[1] - w[0]))));
    }

    #[test]
    fn invalid_laws() {
        assert!(ResettingLaw::Periodic { period: 0.0 }.validate().is_err());
        assert!(ResettingLaw::BoundedRandom { min: 0.0, max: 1.0, seed: 0 }.validate().is_err());
        assert!(ResettingLaw::BoundedRandom { min: 2.0, max: 1.0, seed: 0 }.validate().is_err());
        assert!(ResettingLaw::ZeroCrossing { min_dwell: -1.0 }.validate().is_err());
    }
}
