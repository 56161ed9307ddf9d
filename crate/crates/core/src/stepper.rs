//! Central finite-difference stencils and the predictor-corrector march.
//!
//! Arrays hold the `K + 1` grid values `v_0..v_K`. Stencil references beyond
//! either end are resolved by a [`GhostPolicy`]; higher derivatives are
//! compositions of the three-point stencils (`diff3 = diff1(diff2)`,
//! `diff4 = diff2(diff2)`).
//!
//! Time integration: an Euler-predicted trapezoidal start, then an AB2
//! predictor with one AM3 correction per step, re-evaluating the right-hand
//! side on the corrected level (PECE). Constraints (boundary values) are
//! reapplied after every stage.

use crate::error::{Error, Result};
use crate::problem::GhostPolicy;
use crate::scalar::Scalar;

#[inline]
fn left_ghost(n: usize, ghost: GhostPolicy) -> usize {
    match ghost {
        GhostPolicy::Periodic => n - 2,
        GhostPolicy::Reflect => 1,
    }
}

#[inline]
fn right_ghost(n: usize, ghost: GhostPolicy) -> usize {
    match ghost {
        GhostPolicy::Periodic => 1,
        GhostPolicy::Reflect => n - 2,
    }
}

fn check_len(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "stencils need at least 3 grid values, got {n}"
        )));
    }
    Ok(())
}

/// `(v_{k+1} - v_{k-1}) / (2 dx)` written into `out`.
pub fn diff1_into<S: Scalar>(v: &[S], dx: f64, ghost: GhostPolicy, out: &mut [S]) {
    let n = v.len();
    debug_assert!(n >= 3 && out.len() == n);
    let s = 0.5 / dx;
    out[0] = (v[1] - v[left_ghost(n, ghost)]) * s;
    for k in 1..n - 1 {
        out[k] = (v[k + 1] - v[k - 1]) * s;
    }
    out[n - 1] = (v[right_ghost(n, ghost)] - v[n - 2]) * s;
}

/// `(v_{k+1} - 2 v_k + v_{k-1}) / dx^2` written into `out`.
pub fn diff2_into<S: Scalar>(v: &[S], dx: f64, ghost: GhostPolicy, out: &mut [S]) {
    let n = v.len();
    debug_assert!(n >= 3 && out.len() == n);
    let s = 1.0 / (dx * dx);
    out[0] = (v[1] - v[0] * 2.0 + v[left_ghost(n, ghost)]) * s;
    for k in 1..n - 1 {
        out[k] = (v[k + 1] - v[k] * 2.0 + v[k - 1]) * s;
    }
    out[n - 1] = (v[right_ghost(n, ghost)] - v[n - 1] * 2.0 + v[n - 2]) * s;
}

pub fn diff1<S: Scalar>(v: &[S], dx: f64, ghost: GhostPolicy) -> Result<Vec<S>> {
    check_len(v.len())?;
    let mut out = vec![S::ZERO; v.len()];
    diff1_into(v, dx, ghost, &mut out);
    Ok(out)
}

pub fn diff2<S: Scalar>(v: &[S], dx: f64, ghost: GhostPolicy) -> Result<Vec<S>> {
    check_len(v.len())?;
    let mut out = vec![S::ZERO; v.len()];
    diff2_into(v, dx, ghost, &mut out);
    Ok(out)
}

pub fn diff3<S: Scalar>(v: &[S], dx: f64, ghost: GhostPolicy) -> Result<Vec<S>> {
    diff1(&diff2(v, dx, ghost)?, dx, ghost)
}

pub fn diff4<S: Scalar>(v: &[S], dx: f64, ghost: GhostPolicy) -> Result<Vec<S>> {
    diff2(&diff2(v, dx, ghost)?, dx, ghost)
}

/// Scratch space for the linear part `-kappa U - eta U_x - nu U_xx` with
/// `U = diff2(u)`. `second_diff` is rebuilt from the current field on every
/// call.
#[derive(Debug, Clone)]
pub struct StencilWorkspace<S> {
    pub second_diff: Vec<S>,
    pub ghost: GhostPolicy,
    scratch: Vec<S>,
}

impl<S: Scalar> StencilWorkspace<S> {
    pub fn new(len: usize, ghost: GhostPolicy) -> Result<Self> {
        check_len(len)?;
        Ok(Self {
            second_diff: vec![S::ZERO; len],
            ghost,
            scratch: vec![S::ZERO; len],
        })
    }

    /// Overwrites `out` with `-kappa u_xx - eta u_xxx - nu u_xxxx` discretized
    /// through `U`. The diffusion term is `-kappa U` itself, since `U` already
    /// approximates the second derivative.
    pub fn linear_operator(
        &mut self,
        u: &[S],
        dx: f64,
        kappa: f64,
        eta: f64,
        nu: f64,
        out: &mut [S],
    ) {
        diff2_into(u, dx, self.ghost, &mut self.second_diff);
        let n = u.len();
        let ghost = self.ghost;
        let big_u = &self.second_diff;
        if eta != 0.0 {
            diff1_into(big_u, dx, ghost, &mut self.scratch);
            for k in 0..n {
                out[k] = -(big_u[k] * kappa) - self.scratch[k] * eta;
            }
        } else {
            for k in 0..n {
                out[k] = -(big_u[k] * kappa);
            }
        }
        diff2_into(big_u, dx, ghost, &mut self.scratch);
        for k in 0..n {
            out[k] = out[k] - self.scratch[k] * nu;
        }
    }
}

/// A semi-discrete system `d/dt y = h(t, y)` on a set of arrays, with
/// algebraic constraints (boundary values) applied after every stage.
pub trait System {
    type Scalar: Scalar;

    fn rhs(&mut self, t: f64, state: &[Vec<Self::Scalar>], out: &mut [Vec<Self::Scalar>]);

    fn constrain(&mut self, _t: f64, _state: &mut [Vec<Self::Scalar>]) {}

    /// Human-readable name of component `i` for divergence reports.
    fn component_label(&self, i: usize) -> String {
        i.to_string()
    }
}

/// How the first step is taken, before two history levels exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Startup {
    /// Euler predictor followed by a trapezoidal (AM2) correction.
    #[default]
    EulerTrapezoid,
    /// Plain forward Euler.
    Euler,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarchOptions {
    pub t0: f64,
    pub dt: f64,
    pub steps: usize,
    pub startup: Startup,
}

impl MarchOptions {
    pub fn new(dt: f64, steps: usize) -> Self {
        Self {
            t0: 0.0,
            dt,
            steps,
            startup: Startup::default(),
        }
    }
}

fn zeros_like<S: Scalar>(state: &[Vec<S>]) -> Vec<Vec<S>> {
    state.iter().map(|c| vec![S::ZERO; c.len()]).collect()
}

/// `out = base + dt * sum_j w_j h_j`
fn combine<S: Scalar>(out: &mut [Vec<S>], base: &[Vec<S>], dt: f64, terms: &[(f64, &[Vec<S>])]) {
    for (c, row) in out.iter_mut().enumerate() {
        for (k, slot) in row.iter_mut().enumerate() {
            let mut acc = S::ZERO;
            for (w, h) in terms {
                acc += h[c][k] * *w;
            }
            *slot = base[c][k] + acc * dt;
        }
    }
}

fn check_finite<Sys: System>(
    system: &Sys,
    state: &[Vec<Sys::Scalar>],
    step: usize,
    time: f64,
) -> Result<()> {
    for (c, row) in state.iter().enumerate() {
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                step,
                time,
                component: system.component_label(c),
            });
        }
    }
    Ok(())
}

/// Marches `state` through `options.steps` steps, calling `observe(n, t_n,
/// state)` at every level including the initial one. Returns the final state.
pub fn march<Sys, F>(
    system: &mut Sys,
    mut state: Vec<Vec<Sys::Scalar>>,
    options: MarchOptions,
    mut observe: F,
) -> Result<Vec<Vec<Sys::Scalar>>>
where
    Sys: System,
    F: FnMut(usize, f64, &[Vec<Sys::Scalar>]),
{
    let MarchOptions {
        t0,
        dt,
        steps,
        startup,
    } = options;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "time step must be positive, got {dt}"
        )));
    }
    let time = |n: usize| t0 + n as f64 * dt;

    system.constrain(t0, &mut state);
    check_finite(system, &state, 0, t0)?;
    observe(0, t0, &state);
    if steps == 0 {
        return Ok(state);
    }

    let mut h_old = zeros_like(&state);
    let mut h_cur = zeros_like(&state);
    let mut h_pred = zeros_like(&state);
    let mut pred = zeros_like(&state);
    let mut next = zeros_like(&state);

    system.rhs(t0, &state, &mut h_cur);

    // first step
    let t1 = time(1);
    combine(&mut pred, &state, dt, &[(1.0, &h_cur)]);
    system.constrain(t1, &mut pred);
    match startup {
        Startup::Euler => std::mem::swap(&mut next, &mut pred),
        Startup::EulerTrapezoid => {
            system.rhs(t1, &pred, &mut h_pred);
            combine(&mut next, &state, dt, &[(0.5, &h_cur), (0.5, &h_pred)]);
            system.constrain(t1, &mut next);
        }
    }
    std::mem::swap(&mut state, &mut next);
    check_finite(system, &state, 1, t1)?;
    observe(1, t1, &state);
    std::mem::swap(&mut h_old, &mut h_cur);

    for n in 2..=steps {
        let tn = time(n);
        system.rhs(time(n - 1), &state, &mut h_cur);
        combine(&mut pred, &state, dt, &[(1.5, &h_cur), (-0.5, &h_old)]);
        system.constrain(tn, &mut pred);
        system.rhs(tn, &pred, &mut h_pred);
        combine(
            &mut next,
            &state,
            dt,
            &[(5.0 / 12.0, &h_pred), (2.0 / 3.0, &h_cur), (-1.0 / 12.0, &h_old)],
        );
        system.constrain(tn, &mut next);
        std::mem::swap(&mut state, &mut next);
        check_finite(system, &state, n, tn)?;
        observe(n, tn, &state);
        std::mem::swap(&mut h_old, &mut h_cur);
    }
    Ok(state)
}

/// Marches and keeps copies of the state at the requested step numbers.
pub fn march_snapshots<Sys: System>(
    system: &mut Sys,
    state: Vec<Vec<Sys::Scalar>>,
    options: MarchOptions,
    at_steps: &[usize],
) -> Result<Vec<(usize, f64, Vec<Vec<Sys::Scalar>>)>> {
    let mut out = Vec::new();
    march(system, state, options, |n, t, s| {
        if at_steps.contains(&n) {
            out.push((n, t, s.to_vec()));
        }
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn periodic_grid(k: usize) -> (Vec<f64>, f64) {
        let dx = 2.0 * PI / k as f64;
        ((0..=k).map(|i| i as f64 * dx).collect(), dx)
    }

    #[test]
    fn stencils_reject_short_arrays() {
        assert!(diff1(&[1.0, 2.0], 0.1, GhostPolicy::Periodic).is_err());
        assert!(diff2::<f64>(&[], 0.1, GhostPolicy::Periodic).is_err());
        assert!(StencilWorkspace::<f64>::new(2, GhostPolicy::Periodic).is_err());
    }

    #[test]
    fn constants_have_zero_derivatives() {
        let v = vec![3.5; 11];
        for d in [
            diff1(&v, 0.2, GhostPolicy::Periodic).unwrap(),
            diff2(&v, 0.2, GhostPolicy::Periodic).unwrap(),
            diff3(&v, 0.2, GhostPolicy::Reflect).unwrap(),
            diff4(&v, 0.2, GhostPolicy::Periodic).unwrap(),
        ] {
            assert!(d.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn polynomial_exactness_in_interior() {
        let dx = 0.25;
        let xs: Vec<f64> = (0..13).map(|k| -1.0 + k as f64 * dx).collect();
        let lin: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let quad: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let cubic: Vec<f64> = xs.iter().map(|x| x * x * x).collect();
        let g = GhostPolicy::Periodic;
        let d1 = diff1(&lin, dx, g).unwrap();
        let d2l = diff2(&lin, dx, g).unwrap();
        let d2q = diff2(&quad, dx, g).unwrap();
        let d3 = diff3(&cubic, dx, g).unwrap();
        let d4 = diff4(&quad, dx, g).unwrap();
        for k in 1..12 {
            assert!((d1[k] - 2.0).abs() < 1e-12);
            assert!(d2l[k].abs() < 1e-12);
            assert!((d2q[k] - 2.0).abs() < 1e-12);
        }
        for k in 2..11 {
            assert!((d3[k] - 6.0).abs() < 1e-9, "k={k} {}", d3[k]);
            assert!(d4[k].abs() < 1e-9);
        }
    }

    #[test]
    fn discrete_symbols_on_periodic_sine() {
        let (xs, dx) = periodic_grid(24);
        let v: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        let g = GhostPolicy::Periodic;
        let d1 = diff1(&v, dx, g).unwrap();
        let d4 = diff4(&v, dx, g).unwrap();
        let s1 = dx.sin() / dx;
        let s4 = (2.0 - 2.0 * dx.cos()).powi(2) / dx.powi(4);
        for (k, x) in xs.iter().enumerate() {
            assert!((d1[k] - x.cos() * s1).abs() < 1e-12);
            assert!((d4[k] - x.sin() * s4).abs() < 1e-11);
        }
    }

    #[test]
    fn reflect_ghost_mirrors_ends() {
        let v = [1.0, 2.0, 4.0, 8.0];
        let d2 = diff2(&v, 1.0, GhostPolicy::Reflect).unwrap();
        assert_eq!(d2[0], 2.0 * (2.0 - 1.0));
        assert_eq!(d2[3], 2.0 * (4.0 - 8.0));
        let d1 = diff1(&v, 1.0, GhostPolicy::Reflect).unwrap();
        assert_eq!(d1[0], 0.0);
        assert_eq!(d1[3], 0.0);
    }

    struct Linear(f64);

    impl System for Linear {
        type Scalar = f64;
        fn rhs(&mut self, _t: f64, s: &[Vec<f64>], out: &mut [Vec<f64>]) {
            out[0][0] = self.0 * s[0][0];
        }
    }

    struct ConstantRate;

    impl System for ConstantRate {
        type Scalar = f64;
        fn rhs(&mut self, _t: f64, _s: &[Vec<f64>], out: &mut [Vec<f64>]) {
            out[0][0] = 1.0;
        }
    }

    struct Frozen;

    impl System for Frozen {
        type Scalar = f64;
        fn rhs(&mut self, _t: f64, _s: &[Vec<f64>], out: &mut [Vec<f64>]) {
            out[0].iter_mut().for_each(|v| *v = 0.0);
        }
    }

    struct Blowup;

    impl System for Blowup {
        type Scalar = f64;
        fn rhs(&mut self, _t: f64, s: &[Vec<f64>], out: &mut [Vec<f64>]) {
            out[0][0] = s[0][0] * s[0][0] * 1e200;
        }
        fn component_label(&self, _i: usize) -> String {
            "u_0".into()
        }
    }

    #[test]
    fn zero_rhs_keeps_state() {
        let init = vec![vec![1.0, -2.0, 3.0]];
        let out = march(&mut Frozen, init.clone(), MarchOptions::new(0.1, 50), |_, _, _| {}).unwrap();
        assert_eq!(out, init);
    }

    #[test]
    fn constant_rate_is_integrated_exactly() {
        let mut seen = Vec::new();
        march(
            &mut ConstantRate,
            vec![vec![0.0]],
            MarchOptions::new(0.01, 300),
            |n, _, s| seen.push((n, s[0][0])),
        )
        .unwrap();
        for (n, v) in seen {
            assert!((v - n as f64 * 0.01).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn exponential_decay_example() {
        let out = march(
            &mut Linear(-1.0),
            vec![vec![1.0]],
            MarchOptions::new(0.01, 100),
            |_, _, _| {},
        )
        .unwrap();
        assert!((out[0][0] - (-1.0f64).exp()).abs() < 1e-5);
    }

    fn terminal_error(dt: f64, startup: Startup) -> f64 {
        let steps = (1.0 / dt).round() as usize;
        let mut opts = MarchOptions::new(dt, steps);
        opts.startup = startup;
        let out = march(&mut Linear(-1.0), vec![vec![1.0]], opts, |_, _, _| {}).unwrap();
        (out[0][0] - (-1.0f64).exp()).abs()
    }

    #[test]
    fn temporal_order_is_three() {
        let dts = [0.02, 0.01, 0.005, 0.0025];
        let errs: Vec<f64> = dts
            .iter()
            .map(|&dt| terminal_error(dt, Startup::EulerTrapezoid))
            .collect();
        let slope = crate::analysis::loglog_slope(&dts, &errs);
        assert!((2.5..=3.5).contains(&slope), "slope {slope} errs {errs:?}");
    }

    #[test]
    fn plain_euler_start_limits_order_to_two() {
        let dts = [0.02, 0.01, 0.005, 0.0025];
        let errs: Vec<f64> = dts
            .iter()
            .map(|&dt| terminal_error(dt, Startup::Euler))
            .collect();
        let slope = crate::analysis::loglog_slope(&dts, &errs);
        assert!((1.8..=2.2).contains(&slope), "slope {slope}");
    }

    #[test]
    fn divergence_names_step_and_component() {
        let err = march(
            &mut Blowup,
            vec![vec![1e100]],
            MarchOptions::new(0.1, 10),
            |_, _, _| {},
        )
        .unwrap_err();
        match err {
            Error::Divergence { step, component, .. } => {
                assert_eq!(step, 1);
                assert_eq!(component, "u_0");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn snapshots_are_collected() {
        let snaps = march_snapshots(
            &mut ConstantRate,
            vec![vec![0.0]],
            MarchOptions::new(0.5, 4),
            &[0, 2, 4],
        )
        .unwrap();
        let steps: Vec<usize> = snaps.iter().map(|s| s.0).collect();
        assert_eq!(steps, vec![0, 2, 4]);
        assert!((snaps[2].2[0][0] - 2.0).abs() < 1e-14);
    }
}
