//! Reference solutions.
//!
//! * Linear plane-wave problem: `u = V(t) exp(ikx)` where `V` solves the
//!   Langevin equation `dV = lambda V dt + s dW`, with
//!   `lambda = kappa k^2 + i eta k^3 - nu k^4`. [`langevin_semianalytic`]
//!   evaluates the exact solution with a stepwise trapezoidal stochastic
//!   integral; [`langevin_wce`] solves the chaos coefficient ODEs.
//! * Nonlinear problem with constant `sigma`: with `S(t) = sigma int_0^t W`,
//!   `u(x, t) = v(x - S(t), t) + sigma W(t)` where `v` solves the
//!   deterministic equation on the moving interval `[a - S(t), b - S(t)]`.
//!   [`transform_solve`] marches `v` on a fixed grid wide enough for the
//!   realized excursion of `S`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{grid_time, BrownianDriver, TimeBasis};
use crate::problem::{BoundaryData, FieldKind, ProblemSpec, Profile, RobinBC, Side};
use crate::propagator::{project_boundary, SideRule};
use crate::chaos::MultiIndex;
use crate::stepper::{diff1_into, march, MarchOptions, StencilWorkspace, System};

/// Plane-wave Langevin problem data. `lambda` is always derived from the
/// operator coefficients and the wavenumber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LangevinParams {
    pub kappa: f64,
    pub eta: f64,
    pub nu: f64,
    pub k: i32,
    pub v0: Complex64,
    /// Noise amplitude `s` in `sigma(x) = s exp(ikx)`.
    pub forcing: f64,
}

impl LangevinParams {
    pub fn new(kappa: f64, eta: f64, nu: f64, k: i32, v0: Complex64) -> Self {
        Self {
            kappa,
            eta,
            nu,
            k,
            v0,
            forcing: 1.0,
        }
    }

    /// Reads the plane-wave data of a linear problem.
    pub fn from_spec(spec: &ProblemSpec) -> Result<Self> {
        match (&spec.sigma, &spec.initial) {
            (
                Profile::PlaneWave {
                    amplitude: s,
                    wavenumber: k1,
                },
                Profile::PlaneWave {
                    amplitude: v0,
                    wavenumber: k2,
                },
            ) if k1 == k2 && k1.fract() == 0.0 => Ok(Self {
                kappa: spec.kappa,
                eta: spec.eta,
                nu: spec.nu,
                k: *k1 as i32,
                v0: Complex64::new(*v0, 0.0),
                forcing: *s,
            }),
            _ => Err(Error::InvalidArgument(
                "analytic oracle needs plane-wave sigma and initial data with one integer wavenumber"
                    .into(),
            )),
        }
    }

    pub fn lambda(&self) -> Complex64 {
        let k = f64::from(self.k);
        Complex64::new(
            self.kappa * k * k - self.nu * k.powi(4),
            self.eta * k.powi(3),
        )
    }
}

/// `V(t_n)` for `n = 0..=N`, with the stochastic integral
/// `int_0^t exp(-lambda tau) dW` accumulated one interval at a time by the
/// trapezoidal rule against the path increments.
pub fn langevin_semianalytic(
    params: &LangevinParams,
    driver: &BrownianDriver,
    dt: f64,
) -> Result<Vec<Complex64>> {
    let lambda = params.lambda();
    let horizon = driver.basis().horizon;
    let increments = driver.increments(dt)?;
    let steps = increments.len();
    let t = |n: usize| grid_time(n, steps, dt, horizon);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(params.v0);
    let mut integral = Complex64::new(0.0, 0.0);
    for (n, dw) in increments.iter().enumerate() {
        let (t0, t1) = (t(n), t(n + 1));
        let weight = ((-lambda * t0).exp() + (-lambda * t1).exp()) * 0.5;
        integral += weight * (dw * params.forcing);
        out.push((lambda * t1).exp() * (params.v0 + integral));
    }
    Ok(out)
}

/// Chaos coefficients of the Langevin solution: `mean[n] = V_0(t_n)` and
/// `modes[i-1][n] = V_i(t_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LangevinWce {
    pub times: Vec<f64>,
    pub mean: Vec<Complex64>,
    pub modes: Vec<Vec<Complex64>>,
}

impl LangevinWce {
    /// `V_0 + sum_i V_i xi_i` over the available modes.
    pub fn reconstruct(&self, xi: &[f64]) -> Result<Vec<Complex64>> {
        if xi.len() < self.modes.len() {
            return Err(Error::OutOfRange(format!(
                "{} modes need as many Gaussian values, got {}",
                self.modes.len(),
                xi.len()
            )));
        }
        Ok((0..self.times.len())
            .map(|n| {
                self.modes
                    .iter()
                    .zip(xi)
                    .fold(self.mean[n], |acc, (v, &x)| acc + v[n] * x)
            })
            .collect())
    }

    /// `sum_i |V_i(t_n)|^2`.
    pub fn variance(&self, n: usize) -> f64 {
        self.modes.iter().map(|v| v[n].norm_sqr()).sum()
    }
}

struct LangevinOdes {
    lambda: Complex64,
    forcing: f64,
    basis: TimeBasis,
}

impl System for LangevinOdes {
    type Scalar = Complex64;

    fn rhs(&mut self, t: f64, state: &[Vec<Complex64>], out: &mut [Vec<Complex64>]) {
        out[0][0] = self.lambda * state[0][0];
        for i in 1..state.len() {
            out[i][0] = self.lambda * state[i][0] + self.basis.eval(i, t) * self.forcing;
        }
    }

    fn component_label(&self, i: usize) -> String {
        format!("V_{i}")
    }
}

/// Solves `dV_i/dt = lambda V_i + s m_i(t)`, `V_i(0) = 0`, and
/// `dV_0/dt = lambda V_0`, `V_0(0) = V0`, with the predictor-corrector march.
pub fn langevin_wce(params: &LangevinParams, basis: TimeBasis, dt: f64) -> Result<LangevinWce> {
    let steps = basis.steps_for(dt)?;
    let mut system = LangevinOdes {
        lambda: params.lambda(),
        forcing: params.forcing,
        basis,
    };
    let mut init = vec![vec![Complex64::new(0.0, 0.0)]; basis.count + 1];
    init[0][0] = params.v0;
    let mut times = Vec::with_capacity(steps + 1);
    let mut mean = Vec::with_capacity(steps + 1);
    let mut modes = vec![Vec::with_capacity(steps + 1); basis.count];
    march(&mut system, init, MarchOptions::new(dt, steps), |_, t, s| {
        times.push(t);
        mean.push(s[0][0]);
        for (m, v) in modes.iter_mut().zip(&s[1..]) {
            m.push(v[0]);
        }
    })?;
    Ok(LangevinWce { times, mean, modes })
}

/// How the moving Dirichlet condition of the transformed problem is imposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MovingBoundary {
    /// Set the grid node nearest to the moving endpoint.
    #[default]
    Clamp,
    /// Set the node nearest to the endpoint so that the linear interpolant
    /// through it and its interior neighbour takes the boundary value at the
    /// endpoint.
    Interp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Margin {
    /// `ceil(1.5 max|S| / dx)` cells per side from the realized path.
    Auto,
    Cells(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformOptions {
    pub margin: Margin,
    pub boundary: MovingBoundary,
}

impl Default for TransformOptions {
    fn default() -> Self {
        Self {
            margin: Margin::Auto,
            boundary: MovingBoundary::Clamp,
        }
    }
}

/// Result of the change-of-variables solve.
#[derive(Debug, Clone)]
pub struct TransformSolution {
    pub times: Vec<f64>,
    /// `u(x_k, t_n)` on the original grid, indexed `[n][k]`.
    pub u: Vec<Vec<f64>>,
    /// Extended `chi` grid nodes.
    pub chi: Vec<f64>,
    /// `v(chi_j, t_n)`, indexed `[n][j]`.
    pub v: Vec<Vec<f64>>,
    /// `S(t_n) = sigma int_0^{t_n} W`.
    pub shift: Vec<f64>,
    /// `sigma W(t_n)`.
    pub lift: Vec<f64>,
    pub margin_cells: usize,
}

/// Moving Dirichlet endpoint of the transformed problem.
#[derive(Debug, Clone, Copy)]
struct MovingEnd {
    side: Side,
    /// Original endpoint `a` or `b`.
    x: f64,
    u_weight: f64,
    data: BoundaryData,
}

enum GksBoundary {
    /// Conditions at the grid ends with their deterministic data.
    Fixed(Vec<SideRule>, Vec<Vec<f64>>),
    Moving {
        ends: Vec<MovingEnd>,
        driver: BrownianDriver,
        sigma: f64,
        chi0: f64,
        mode: MovingBoundary,
    },
}

/// Deterministic generalized KS equation `v_t = -v v_x - kappa v_xx -
/// eta v_xxx - nu v_xxxx` on a real grid.
struct GksSystem {
    kappa: f64,
    eta: f64,
    nu: f64,
    dx: f64,
    workspace: StencilWorkspace<f64>,
    deriv: Vec<f64>,
    boundary: GksBoundary,
}

impl GksSystem {
    fn new(spec: &ProblemSpec, nodes: usize, boundary: GksBoundary) -> Result<Self> {
        Ok(Self {
            kappa: spec.kappa,
            eta: spec.eta,
            nu: spec.nu,
            dx: spec.grid.dx,
            workspace: StencilWorkspace::new(nodes, spec.ghost)?,
            deriv: vec![0.0; nodes],
            boundary,
        })
    }
}

impl System for GksSystem {
    type Scalar = f64;

    fn rhs(&mut self, _t: f64, state: &[Vec<f64>], out: &mut [Vec<f64>]) {
        let (v, h) = (&state[0], &mut out[0]);
        self.workspace
            .linear_operator(v, self.dx, self.kappa, self.eta, self.nu, h);
        diff1_into(v, self.dx, self.workspace.ghost, &mut self.deriv);
        for k in 0..h.len() {
            h[k] = h[k] - v[k] * self.deriv[k];
        }
    }

    fn constrain(&mut self, t: f64, state: &mut [Vec<f64>]) {
        let v = &mut state[0];
        match &self.boundary {
            GksBoundary::Fixed(rules, data) => {
                for (rule, d) in rules.iter().zip(data) {
                    rule.apply(v, self.dx, d);
                }
            }
            GksBoundary::Moving {
                ends,
                driver,
                sigma,
                chi0,
                mode,
            } => {
                let t = t.min(driver.basis().horizon);
                let w = driver.brownian_at(t).unwrap_or(0.0);
                let shift = sigma * driver.integrated_brownian(t).unwrap_or(0.0);
                let last = v.len() - 1;
                for end in ends {
                    let g = match end.data {
                        BoundaryData::Constant { value } => value,
                        BoundaryData::Brownian { scale } => scale * w,
                    };
                    let value = g / end.u_weight - sigma * w;
                    let pos = end.x - shift;
                    let p = (pos - chi0) / self.dx;
                    let node = (p.round().max(0.0) as usize).min(last);
                    match mode {
                        MovingBoundary::Clamp => v[node] = value,
                        MovingBoundary::Interp => {
                            let inner = match end.side {
                                Side::Left => (node + 1).min(last),
                                Side::Right => node.saturating_sub(1),
                            };
                            let chi_node = chi0 + node as f64 * self.dx;
                            let chi_inner = chi0 + inner as f64 * self.dx;
                            let denom = pos - chi_inner;
                            v[node] = if denom.abs() < 1e-12 * self.dx {
                                value
                            } else {
                                v[inner] + (value - v[inner]) * (chi_node - chi_inner) / denom
                            };
                        }
                    }
                }
            }
        }
    }

    fn component_label(&self, _i: usize) -> String {
        "v".into()
    }
}

fn interpolate(chi0: f64, dx: f64, values: &[f64], at: f64) -> f64 {
    let last = values.len() - 1;
    let p = (at - chi0) / dx;
    let j = (p.floor().max(0.0) as usize).min(last - 1);
    let frac = p - j as f64;
    values[j] * (1.0 - frac) + values[j + 1] * frac
}

/// Deterministic solve of the mean-boundary problem on the original grid:
/// the noise-free equation with each Robin condition's data replaced by its
/// expectation. Returns `u(x_k, t_n)` indexed `[n][k]`.
pub fn deterministic_solve(spec: &ProblemSpec) -> Result<Vec<Vec<f64>>> {
    let nodes = spec.grid.nodes()?;
    let basis = TimeBasis::new(spec.grid.horizon, 0)?;
    let rules = SideRule::from_spec(spec);
    let data = rules
        .iter()
        .map(|r| {
            r.conditions()
                .iter()
                .map(|c| project_boundary(&c.data, &MultiIndex::zero(), &basis, 0.0))
                .collect()
        })
        .collect();
    let mut system = GksSystem::new(spec, nodes.len(), GksBoundary::Fixed(rules, data))?;
    let init = vec![nodes.iter().map(|&x| spec.initial.eval_real(x)).collect()];
    let mut out = Vec::new();
    march(
        &mut system,
        init,
        MarchOptions::new(spec.grid.dt, spec.grid.steps()?),
        |_, _, s| out.push(s[0].clone()),
    )?;
    Ok(out)
}

/// Semi-analytical solution of the constant-`sigma` problem with Dirichlet
/// data, through `u(x, t) = v(x - S(t), t) + sigma W(t)`.
pub fn transform_solve(
    spec: &ProblemSpec,
    driver: &BrownianDriver,
    options: TransformOptions,
) -> Result<TransformSolution> {
    let sigma = spec.sigma.constant_value().ok_or_else(|| {
        Error::InvalidArgument("the change-of-variables oracle requires a constant sigma".into())
    })?;
    if spec.field_kind != FieldKind::Real {
        return Err(Error::InvalidArgument(
            "the change-of-variables oracle needs a real field".into(),
        ));
    }
    let grid = spec.grid;
    let steps = grid.steps()?;
    let intervals = grid.intervals()?;
    let horizon = driver.basis().horizon;
    if (horizon - grid.horizon).abs() > 1e-12 * grid.horizon {
        return Err(Error::GridMismatch(format!(
            "driver horizon {horizon} differs from grid horizon {}",
            grid.horizon
        )));
    }
    let mut ends = Vec::new();
    for bc in spec.bcs.iter().filter_map(|bc| bc.robin()) {
        let RobinBC {
            u_weight,
            ux_weight,
            side,
            data,
        } = *bc;
        if ux_weight != 0.0 || u_weight == 0.0 {
            return Err(Error::InvalidArgument(
                "the change-of-variables oracle supports Dirichlet data only".into(),
            ));
        }
        let x = match side {
            Side::Left => grid.a,
            Side::Right => grid.b,
        };
        ends.push(MovingEnd {
            side,
            x,
            u_weight,
            data,
        });
    }

    let times: Vec<f64> = (0..=steps)
        .map(|n| grid_time(n, steps, grid.dt, horizon))
        .collect();
    let lift = times
        .iter()
        .map(|&t| driver.brownian_at(t).map(|w| sigma * w))
        .collect::<Result<Vec<_>>>()?;
    let shift = times
        .iter()
        .map(|&t| driver.integrated_brownian(t).map(|s| sigma * s))
        .collect::<Result<Vec<_>>>()?;
    let max_shift = shift.iter().fold(0.0_f64, |m, s| m.max(s.abs()));
    let margin_cells = match options.margin {
        Margin::Auto => (1.5 * max_shift / grid.dx).ceil() as usize,
        Margin::Cells(c) => {
            if max_shift > c as f64 * grid.dx {
                return Err(Error::DomainExhausted {
                    max_shift,
                    margin: c as f64 * grid.dx,
                });
            }
            c
        }
    };
    let chi0 = grid.a - margin_cells as f64 * grid.dx;
    let chi: Vec<f64> = (0..=intervals + 2 * margin_cells)
        .map(|j| chi0 + j as f64 * grid.dx)
        .collect();

    let boundary = GksBoundary::Moving {
        ends,
        driver: driver.clone(),
        sigma,
        chi0,
        mode: options.boundary,
    };
    let mut system = GksSystem::new(spec, chi.len(), boundary)?;
    let init = vec![chi.iter().map(|&c| spec.initial.eval_real(c)).collect()];
    let mut v = Vec::with_capacity(steps + 1);
    march(
        &mut system,
        init,
        MarchOptions::new(grid.dt, steps),
        |_, _, s| v.push(s[0].clone()),
    )?;

    let u = v
        .iter()
        .enumerate()
        .map(|(n, vn)| {
            (0..=intervals)
                .map(|k| interpolate(chi0, grid.dx, vn, grid.x(k) - shift[n]) + lift[n])
                .collect()
        })
        .collect();
    Ok(TransformSolution {
        times,
        u,
        chi,
        v,
        shift,
        lift,
        margin_cells,
    })
}
