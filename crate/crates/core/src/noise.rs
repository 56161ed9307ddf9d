//! Cosine time basis and truncated spectral Brownian paths.
//!
//! A path is `W(t) = sum_i xi_i int_0^t m_i(s) ds` with
//! `m_1 = 1/sqrt(T)` and `m_i = sqrt(2/T) cos((i-1) pi t / T)`.
//! Every quantity derived from a path (values, time integrals, increments) is
//! evaluated in closed form from the same `xi`, so the chaos solver and the
//! reference solvers see one realization.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack when checking `t <= T` and `T / dt` divisibility.
const TIME_TOL: f64 = 1e-9;

/// Orthonormal cosine basis of `L^2[0, T]` with `count` members.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeBasis {
    pub horizon: f64,
    pub count: usize,
}

impl TimeBasis {
    pub fn new(horizon: f64, count: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "time horizon must be positive, got {horizon}"
            )));
        }
        Ok(Self { horizon, count })
    }

    fn frequency(&self, mode: usize) -> f64 {
        (mode - 1) as f64 * PI / self.horizon
    }

    /// `m_mode(t)`, 1-based.
    pub fn eval(&self, mode: usize, t: f64) -> f64 {
        debug_assert!(mode >= 1);
        if mode == 1 {
            1.0 / self.horizon.sqrt()
        } else {
            (2.0 / self.horizon).sqrt() * (self.frequency(mode) * t).cos()
        }
    }

    /// `int_0^t m_mode(s) ds`.
    pub fn integral(&self, mode: usize, t: f64) -> f64 {
        if mode == 1 {
            t / self.horizon.sqrt()
        } else {
            let w = self.frequency(mode);
            (2.0 / self.horizon).sqrt() * (w * t).sin() / w
        }
    }

    /// `int_0^t int_0^s m_mode(r) dr ds`.
    pub fn double_integral(&self, mode: usize, t: f64) -> f64 {
        if mode == 1 {
            t * t / (2.0 * self.horizon.sqrt())
        } else {
            let w = self.frequency(mode);
            (2.0 / self.horizon).sqrt() * (1.0 - (w * t).cos()) / (w * w)
        }
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t < 0.0 || t > self.horizon * (1.0 + TIME_TOL) || !t.is_finite() {
            return Err(Error::TimeRange {
                t,
                horizon: self.horizon,
            });
        }
        Ok(())
    }

    /// Number of steps `N = T / dt`, rejecting non-divisors.
    pub fn steps_for(&self, dt: f64) -> Result<usize> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "time step must be positive, got {dt}"
            )));
        }
        let ratio = self.horizon / dt;
        let steps = ratio.round();
        if steps < 1.0 || (ratio - steps).abs() > TIME_TOL * ratio.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "time step {dt} does not divide the horizon {}",
                self.horizon
            )));
        }
        Ok(steps as usize)
    }
}

/// One truncated Brownian realization.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianDriver {
    basis: TimeBasis,
    xi: Vec<f64>,
    seed: u64,
}

/// Serialized replay record of a driver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriverRecord {
    pub seed: u64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "I")]
    pub count: usize,
    pub xi: Vec<f64>,
}

/// Draws `basis.count` i.i.d. standard normals with ChaCha20 seeded by
/// `seed_from_u64(seed)` and the ziggurat `StandardNormal` sampler from
/// `rand_distr`. The same `(seed, basis)` always yields the same driver.
pub fn sample_driver(seed: u64, basis: TimeBasis) -> BrownianDriver {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let xi = (0..basis.count)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    BrownianDriver { basis, xi, seed }
}

impl BrownianDriver {
    pub fn from_xi(basis: TimeBasis, xi: Vec<f64>, seed: u64) -> Result<Self> {
        if xi.len() != basis.count {
            return Err(Error::InvalidArgument(format!(
                "driver needs {} Gaussian values, got {}",
                basis.count,
                xi.len()
            )));
        }
        Ok(Self { basis, xi, seed })
    }

    pub fn from_record(record: DriverRecord) -> Result<Self> {
        let basis = TimeBasis::new(record.horizon, record.count)?;
        Self::from_xi(basis, record.xi, record.seed)
    }

    pub fn record(&self) -> DriverRecord {
        DriverRecord {
            seed: self.seed,
            horizon: self.basis.horizon,
            count: self.basis.count,
            xi: self.xi.clone(),
        }
    }

    pub fn basis(&self) -> &TimeBasis {
        &self.basis
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The same realization restricted to its first `count` modes.
    pub fn truncated(&self, count: usize) -> Self {
        let count = count.min(self.basis.count);
        Self {
            basis: TimeBasis {
                horizon: self.basis.horizon,
                count,
            },
            xi: self.xi[..count].to_vec(),
            seed: self.seed,
        }
    }

    fn modes(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.xi.iter().enumerate().map(|(i, &x)| (i + 1, x))
    }

    /// Partial-sum path value `W(t)`.
    pub fn brownian_at(&self, t: f64) -> Result<f64> {
        self.basis.check_time(t)?;
        Ok(self
            .modes()
            .map(|(mode, x)| x * self.basis.integral(mode, t))
            .sum())
    }

    /// `int_0^t W(s) ds`, termwise exact for the truncated path.
    pub fn integrated_brownian(&self, t: f64) -> Result<f64> {
        self.basis.check_time(t)?;
        Ok(self
            .modes()
            .map(|(mode, x)| x * self.basis.double_integral(mode, t))
            .sum())
    }

    /// `W(t_n)` for `n = 0..=N` on the grid `t_n = n dt`.
    pub fn path(&self, dt: f64) -> Result<Vec<f64>> {
        let steps = self.basis.steps_for(dt)?;
        (0..=steps)
            .map(|n| self.brownian_at(grid_time(n, steps, dt, self.basis.horizon)))
            .collect()
    }

    /// Path differences `W(t_{n+1}) - W(t_n)`.
    pub fn increments(&self, dt: f64) -> Result<Vec<f64>> {
        let path = self.path(dt)?;
        Ok(path.windows(2).map(|w| w[1] - w[0]).collect())
    }
}

/// `n dt`, pinned to `T` at the last step so evaluation never leaves `[0, T]`.
pub fn grid_time(n: usize, steps: usize, dt: f64, horizon: f64) -> f64 {
    if n == steps {
        horizon
    } else {
        n as f64 * dt
    }
}
