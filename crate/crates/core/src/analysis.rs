//! Post-processing: path reconstruction, moments and error metrics.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chaos::{wick_eval, TruncationScheme};
use crate::error::{Error, Result};
use crate::noise::{sample_driver, TimeBasis};
use crate::oracle::{langevin_semianalytic, LangevinParams};
use crate::problem::ProblemSpec;
use crate::propagator::{solve, ChaosField, Snapshots};
use crate::scalar::Scalar;

/// `u(x_k; xi) = sum_alpha u_alpha(x_k) T_alpha(xi)`.
pub fn reconstruct<S: Scalar>(field: &ChaosField<S>, xi: &[f64]) -> Result<Vec<S>> {
    let mut out = vec![S::ZERO; field.nodes()];
    for (alpha, coeff) in field.indices().iter().zip(field.coefficients()) {
        let w = wick_eval(alpha, xi)?;
        if w == 0.0 {
            continue;
        }
        for (o, &c) in out.iter_mut().zip(coeff) {
            *o += c * w;
        }
    }
    Ok(out)
}

/// Mean `u_0` and variance `sum_{alpha != 0} |u_alpha|^2` at every node.
pub fn moments<S: Scalar>(field: &ChaosField<S>) -> (Vec<S>, Vec<f64>) {
    let coeffs = field.coefficients();
    let mean = coeffs.first().cloned().unwrap_or_default();
    let mut var = vec![0.0; field.nodes()];
    for c in coeffs.iter().skip(1) {
        for (v, x) in var.iter_mut().zip(c) {
            *v += x.modulus().powi(2);
        }
    }
    (mean, var)
}

/// Values on the spatial grid at a sequence of times, indexed `[n][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub values: Vec<Vec<S>>,
}

impl<S: Scalar> Trajectory<S> {
    pub fn new(times: Vec<f64>, values: Vec<Vec<S>>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::GridMismatch(format!(
                "{} times for {} time levels",
                times.len(),
                values.len()
            )));
        }
        if let Some(first) = values.first() {
            if values.iter().any(|v| v.len() != first.len()) {
                return Err(Error::GridMismatch("ragged trajectory".into()));
            }
        }
        Ok(Self { times, values })
    }

    pub fn nodes(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }
}

/// Least-squares fit `y = slope * t` and its centered coefficient of
/// determination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub r_squared: f64,
}

/// Fits `y = c t` through the origin over the samples with `t >= from`.
/// Returns `None` with fewer than two usable samples.
pub fn fit_through_origin(times: &[f64], values: &[f64], from: f64) -> Option<LinearFit> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, y)| **t >= from && y.is_finite())
        .map(|(&t, &y)| (t, y))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let stt: f64 = pts.iter().map(|(t, _)| t * t).sum();
    let sty: f64 = pts.iter().map(|(t, y)| t * y).sum();
    if stt == 0.0 {
        return None;
    }
    let slope = sty / stt;
    let mean = pts.iter().map(|(_, y)| y).sum::<f64>() / pts.len() as f64;
    let ss_res: f64 = pts.iter().map(|(t, y)| (y - slope * t).powi(2)).sum();
    let ss_tot: f64 = pts.iter().map(|(_, y)| (y - mean).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    };
    Some(LinearFit { slope, r_squared })
}

/// Error between a numerical and a reference trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSeries {
    pub times: Vec<f64>,
    /// `(1/K) sum_k |u - u_ref|`.
    pub abs_diff: Vec<f64>,
    /// `sum_k |u - u_ref| / sum_k |u_ref|`, `None` where the reference
    /// vanishes identically.
    pub rel_diff: Vec<Option<f64>>,
    /// Fit of `abs_diff` through the origin over `t >= 0.1 T`.
    pub slope_fit: Option<LinearFit>,
    /// Some relative error was undefined.
    pub flagged: bool,
}

/// Compact summary written next to an error series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub max_rel: Option<f64>,
    pub terminal_abs: f64,
    pub slope: Option<f64>,
    pub r_squared: Option<f64>,
    pub flagged: bool,
}

impl ErrorSeries {
    pub fn max_rel(&self) -> Option<f64> {
        self.rel_diff
            .iter()
            .flatten()
            .copied()
            .fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
    }

    pub fn terminal_abs(&self) -> f64 {
        self.abs_diff.last().copied().unwrap_or(0.0)
    }

    pub fn summary(&self) -> ErrorSummary {
        ErrorSummary {
            max_rel: self.max_rel(),
            terminal_abs: self.terminal_abs(),
            slope: self.slope_fit.map(|f| f.slope),
            r_squared: self.slope_fit.map(|f| f.r_squared),
            flagged: self.flagged,
        }
    }

    /// Fit of `abs_diff` through the origin over `t >= from`.
    pub fn fit_from(&self, from: f64) -> Option<LinearFit> {
        fit_through_origin(&self.times, &self.abs_diff, from)
    }

    /// CSV with columns `t,abs,rel`; an undefined relative error is written
    /// as `nan`. `header` lines are emitted first, each prefixed by `# `.
    pub fn to_csv(&self, header: &[String]) -> String {
        let mut s = String::new();
        for h in header {
            let _ = writeln!(s, "# {h}");
        }
        s.push_str("t,abs,rel\n");
        for ((t, a), r) in self.times.iter().zip(&self.abs_diff).zip(&self.rel_diff) {
            let rel = r.map_or_else(|| "nan".to_string(), |r| format!("{r:.12e}"));
            let _ = writeln!(s, "{t:.6},{a:.12e},{rel}");
        }
        s
    }
}

/// Per-time error metrics. Both trajectories must share time levels and
/// node count.
pub fn error_series<S: Scalar>(
    numeric: &Trajectory<S>,
    reference: &Trajectory<S>,
) -> Result<ErrorSeries> {
    if numeric.times.len() != reference.times.len() {
        return Err(Error::GridMismatch(format!(
            "{} vs {} time levels",
            numeric.times.len(),
            reference.times.len()
        )));
    }
    if numeric
        .times
        .iter()
        .zip(&reference.times)
        .any(|(a, b)| (a - b).abs() > 1e-9 * (1.0 + b.abs()))
    {
        return Err(Error::GridMismatch("time levels differ".into()));
    }
    if numeric.nodes() != reference.nodes() {
        return Err(Error::GridMismatch(format!(
            "{} vs {} nodes",
            numeric.nodes(),
            reference.nodes()
        )));
    }
    let k = numeric.nodes().saturating_sub(1).max(1) as f64;
    let mut abs_diff = Vec::with_capacity(numeric.times.len());
    let mut rel_diff = Vec::with_capacity(numeric.times.len());
    let mut flagged = false;
    for (u, r) in numeric.values.iter().zip(&reference.values) {
        let diff: f64 = u.iter().zip(r).map(|(&a, &b)| (a - b).modulus()).sum();
        let norm: f64 = r.iter().map(|b| b.modulus()).sum();
        abs_diff.push(diff / k);
        if norm == 0.0 {
            flagged = true;
            rel_diff.push(None);
        } else {
            rel_diff.push(Some(diff / norm));
        }
    }
    let horizon = numeric.times.last().copied().unwrap_or(0.0);
    let slope_fit = fit_through_origin(&numeric.times, &abs_diff, 0.1 * horizon);
    Ok(ErrorSeries {
        times: numeric.times.clone(),
        abs_diff,
        rel_diff,
        slope_fit,
        flagged,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).map(|(a, b)| (a.ln(), b.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = pts.iter().map(|(a, _)| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Median of a non-empty slice; NaN entries sort last.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Terminal absolute error of the linear plane-wave problem for each number
/// of Gaussian modes in `orders`, one row per seed. The reference is the
/// semi-analytical solution driven by `max(orders)` modes of the same path;
/// the chaos solution with `I` modes uses that path's first `I` Gaussians.
pub fn truncation_decay(spec: &ProblemSpec, orders: &[u32], seeds: &[u64]) -> Result<Vec<Vec<f64>>> {
    let &full = orders
        .iter()
        .max()
        .ok_or_else(|| Error::InvalidArgument("no truncation orders given".into()))?;
    let params = LangevinParams::from_spec(spec)?;
    let horizon = spec.grid.horizon;
    let dt = spec.grid.dt;
    let steps = spec.grid.steps()?;
    let nodes = spec.grid.nodes()?;
    let k = f64::from(params.k);
    let wave: Vec<Complex64> = nodes
        .iter()
        .map(|&x| Complex64::new(0.0, k * x).exp())
        .collect();

    let terminal: Vec<ChaosField<Complex64>> = orders
        .iter()
        .map(|&i| {
            let scheme = TruncationScheme::gaussian(i);
            let basis = TimeBasis::new(horizon, i as usize)?;
            let mut f = solve::<Complex64>(spec, &scheme, basis, None, &Snapshots::Steps(vec![steps]))?;
            f.pop().ok_or_else(|| Error::InvalidArgument("no terminal level".into()))
        })
        .collect::<Result<_>>()?;

    let full_basis = TimeBasis::new(horizon, full as usize)?;
    seeds
        .iter()
        .map(|&seed| {
            let driver = sample_driver(seed, full_basis);
            let v = *langevin_semianalytic(&params, &driver, dt)?
                .last()
                .expect("at least the initial level");
            let reference: Vec<Complex64> = wave.iter().map(|w| v * w).collect();
            terminal
                .iter()
                .map(|field| {
                    let u = reconstruct(field, driver.xi())?;
                    let diff: f64 = u.iter().zip(&reference).map(|(a, b)| (a - b).norm()).sum();
                    Ok(diff / (nodes.len() - 1) as f64)
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::IndexSet;
    use crate::propagator::initial_field;
    use crate::problem::{builtin_problem, Builtin};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn traj(values: Vec<Vec<f64>>) -> Trajectory<f64> {
        let times = (0..values.len()).map(|n| n as f64 * 0.1).collect();
        Trajectory::new(times, values).unwrap()
    }

    #[test]
    fn identical_trajectories_have_zero_error() {
        let a = traj(vec![vec![1.0, -2.0, 3.0]; 5]);
        let e = error_series(&a, &a).unwrap();
        assert!(e.abs_diff.iter().all(|&v| v == 0.0));
        assert!(e.rel_diff.iter().all(|v| *v == Some(0.0)));
        assert!(!e.flagged);
    }

    #[test]
    fn constant_offset_example() {
        let r = traj(vec![vec![1.0; 11]; 3]);
        let u = traj(vec![vec![1.1; 11]; 3]);
        let e = error_series(&u, &r).unwrap();
        // K = 10 intervals, 11 nodes
        assert!((e.abs_diff[0] - 0.11).abs() < 1e-12);
        assert!((e.rel_diff[0].unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn zero_reference_is_flagged() {
        let r = traj(vec![vec![0.0; 4]; 2]);
        let u = traj(vec![vec![1.0; 4]; 2]);
        let e = error_series(&u, &r).unwrap();
        assert!(e.flagged);
        assert_eq!(e.rel_diff, vec![None, None]);
        assert!(e.to_csv(&[]).contains("nan"));
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = traj(vec![vec![0.0; 4]; 2]);
        let b = traj(vec![vec![0.0; 5]; 2]);
        let c = traj(vec![vec![0.0; 4]; 3]);
        assert!(matches!(error_series(&a, &b), Err(Error::GridMismatch(_))));
        assert!(matches!(error_series(&a, &c), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn linear_growth_gives_exact_slope() {
        let times: Vec<f64> = (0..=30).map(|n| n as f64 * 0.1).collect();
        let y: Vec<f64> = times.iter().map(|t| 0.004 * t).collect();
        let fit = fit_through_origin(&times, &y, 0.3).unwrap();
        assert!((fit.slope - 0.004).abs() < 1e-15);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn loglog_slope_of_power_law() {
        let x = [0.1, 0.05, 0.025];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powi(3)).collect();
        assert!((loglog_slope(&x, &y) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn moments_of_initial_field() {
        let spec = builtin_problem(Builtin::Tp1);
        let f = initial_field::<f64>(&spec, &TruncationScheme::gaussian(3)).unwrap();
        let (mean, var) = moments(&f);
        assert_eq!(mean, f.coefficients()[0]);
        assert!(var.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn reconstruction_requires_enough_gaussians() {
        let spec = builtin_problem(Builtin::Tp1);
        let f = initial_field::<f64>(&spec, &TruncationScheme::gaussian(3)).unwrap();
        assert!(reconstruct(&f, &[0.0, 1.0]).is_err());
        assert_eq!(reconstruct(&f, &[0.0, 1.0, 2.0]).unwrap(), f.coefficients()[0]);
    }

    #[test]
    fn sample_moments_match_chaos_moments() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let scheme = TruncationScheme::new(2, 3, 2).unwrap();
        let set = Arc::new(IndexSet::from_scheme(&scheme));
        let coeffs: Vec<Vec<f64>> = (0..set.len()).map(|i| vec![0.3 + 0.2 * i as f64, -0.1 * i as f64]).collect();
        let field = ChaosField::new(set, coeffs, 0.0).unwrap();
        let (mean, var) = moments(&field);
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(11);
        let n = 100_000;
        let mut s1 = [0.0; 2];
        let mut s2 = [0.0; 2];
        for _ in 0..n {
            let xi: Vec<f64> = (0..3).map(|_| StandardNormal.sample(&mut rng)).collect();
            let u = reconstruct(&field, &xi).unwrap();
            for k in 0..2 {
                s1[k] += u[k];
                s2[k] += u[k] * u[k];
            }
        }
        for k in 0..2 {
            let m = s1[k] / n as f64;
            let v = s2[k] / n as f64 - m * m;
            let sd = var[k].sqrt();
            assert!((m - mean[k]).abs() < 5.0 * sd / (n as f64).sqrt(), "mean {m} vs {}", mean[k]);
            assert!((v / var[k] - 1.0).abs() < 0.03, "var {v} vs {}", var[k]);
        }
    }

    proptest! {
        #[test]
        fn relative_error_is_scale_invariant(
            vals in proptest::collection::vec(-5.0f64..5.0, 6),
            noise in proptest::collection::vec(-1.0f64..1.0, 6),
            c in 0.01f64..100.0,
        ) {
            prop_assume!(vals.iter().any(|v| v.abs() > 1e-3));
            let r = traj(vec![vals.clone()]);
            let u = traj(vec![vals.iter().zip(&noise).map(|(a, b)| a + b).collect()]);
            let rs = traj(vec![vals.iter().map(|a| a * c).collect()]);
            let us = traj(vec![u.values[0].iter().map(|a| a * c).collect()]);
            let e1 = error_series(&u, &r).unwrap().rel_diff[0].unwrap();
            let e2 = error_series(&us, &rs).unwrap().rel_diff[0].unwrap();
            prop_assert!((e1 - e2).abs() <= 1e-12 * (1.0 + e1));
        }

        #[test]
        fn absolute_error_is_symmetric(
            a in proptest::collection::vec(-5.0f64..5.0, 5),
            b in proptest::collection::vec(-5.0f64..5.0, 5),
        ) {
            let (ta, tb) = (traj(vec![a]), traj(vec![b]));
            let e1 = error_series(&ta, &tb).unwrap().abs_diff[0];
            let e2 = error_series(&tb, &ta).unwrap().abs_diff[0];
            prop_assert_eq!(e1, e2);
        }
    }
}
