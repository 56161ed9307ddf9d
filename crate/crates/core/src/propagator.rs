//! The propagator: the deterministic coupled system satisfied by the chaos
//! coefficients `u_alpha`.
//!
//! For every enumerated index `alpha`,
//!
//! ```text
//! d/dt u_alpha = - sum C(alpha, beta, p) u_{alpha-beta+p} d/dx u_{beta+p}
//!                - kappa U - eta d/dx U - nu d2/dx2 U
//!                + sigma(x) m_i(t) [alpha = delta_i]
//! ```
//!
//! with `U = d2/dx2 u_alpha`. Only pairs whose both factors belong to the
//! truncation contribute. Boundary data is the projection `E[g(t) T_alpha]`
//! of each Robin condition.

use std::sync::Arc;

use crate::chaos::{convolution_terms_in, IndexSet, MultiIndex, TruncationScheme};
use crate::error::{Error, Result};
use crate::noise::TimeBasis;
use crate::problem::{side_sign, BoundaryData, ProblemSpec, RobinBC, Side};
use crate::scalar::Scalar;
use crate::stepper::{
    diff1_into, march, march_snapshots, MarchOptions, StencilWorkspace, System,
};

/// Chaos coefficients `u_alpha(x_k)` at one time level, stored in the
/// truncation's enumeration order.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosField<S> {
    indices: Arc<IndexSet>,
    coefficients: Vec<Vec<S>>,
    pub time: f64,
}

impl<S: Scalar> ChaosField<S> {
    pub fn new(indices: Arc<IndexSet>, coefficients: Vec<Vec<S>>, time: f64) -> Result<Self> {
        if coefficients.len() != indices.len() {
            return Err(Error::Structure(format!(
                "{} coefficient arrays for {} indices",
                coefficients.len(),
                indices.len()
            )));
        }
        if let Some(first) = coefficients.first() {
            if coefficients.iter().any(|c| c.len() != first.len()) {
                return Err(Error::Structure(
                    "coefficient arrays have different lengths".into(),
                ));
            }
        }
        Ok(Self {
            indices,
            coefficients,
            time,
        })
    }

    pub fn zeros(indices: Arc<IndexSet>, nodes: usize, time: f64) -> Self {
        let coefficients = vec![vec![S::ZERO; nodes]; indices.len()];
        Self {
            indices,
            coefficients,
            time,
        }
    }

    pub fn indices(&self) -> &[MultiIndex] {
        self.indices.indices()
    }

    pub fn index_set(&self) -> &Arc<IndexSet> {
        &self.indices
    }

    pub fn coefficients(&self) -> &[Vec<S>] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [Vec<S>] {
        &mut self.coefficients
    }

    pub fn into_coefficients(self) -> Vec<Vec<S>> {
        self.coefficients
    }

    pub fn get(&self, index: &MultiIndex) -> Option<&[S]> {
        self.indices
            .position(index)
            .map(|i| self.coefficients[i].as_slice())
    }

    pub fn get_mut(&mut self, index: &MultiIndex) -> Option<&mut Vec<S>> {
        let i = self.indices.position(index)?;
        Some(&mut self.coefficients[i])
    }

    /// Number of spatial nodes `K + 1`.
    pub fn nodes(&self) -> usize {
        self.coefficients.first().map_or(0, Vec::len)
    }
}

/// `u_0 = f`, every other coefficient zero.
pub fn initial_field<S: Scalar>(spec: &ProblemSpec, scheme: &TruncationScheme) -> Result<ChaosField<S>> {
    let set = Arc::new(IndexSet::from_scheme(scheme));
    let nodes = spec.grid.nodes()?;
    let mut field = ChaosField::zeros(set, nodes.len(), 0.0);
    field.coefficients[0] = nodes
        .iter()
        .map(|&x| S::from_complex(spec.initial.eval(x)))
        .collect();
    Ok(field)
}

pub(crate) fn project_boundary(data: &BoundaryData, index: &MultiIndex, basis: &TimeBasis, t: f64) -> f64 {
    match *data {
        BoundaryData::Constant { value } => {
            if index.is_zero() {
                value
            } else {
                0.0
            }
        }
        BoundaryData::Brownian { scale } => match index.as_unit() {
            Some(mode) if (mode as usize) <= basis.count => scale * basis.integral(mode as usize, t),
            _ => 0.0,
        },
    }
}

/// Projected boundary data `E[g_j(t) T_alpha]`: one row per enumerated index,
/// one entry per Robin condition in `spec.bcs` order (periodic entries are
/// skipped).
pub fn boundary_data(
    spec: &ProblemSpec,
    scheme: &TruncationScheme,
    basis: &TimeBasis,
    t: f64,
) -> Vec<Vec<f64>> {
    let robin: Vec<&RobinBC> = spec.bcs.iter().filter_map(|bc| bc.robin()).collect();
    scheme
        .enumerate()
        .iter()
        .map(|alpha| {
            robin
                .iter()
                .map(|bc| project_boundary(&bc.data, alpha, basis, t))
                .collect()
        })
        .collect()
}

/// Boundary conditions on one side, resolved for enforcement.
#[derive(Debug, Clone)]
pub(crate) struct SideRule {
    side: Side,
    conditions: Vec<RobinBC>,
}

impl SideRule {
    pub(crate) fn conditions(&self) -> &[RobinBC] {
        &self.conditions
    }

    pub(crate) fn from_spec(spec: &ProblemSpec) -> Vec<SideRule> {
        [Side::Left, Side::Right]
            .into_iter()
            .filter_map(|side| {
                let conditions: Vec<RobinBC> = spec
                    .bcs
                    .iter()
                    .filter_map(|bc| bc.robin())
                    .filter(|r| r.side == side)
                    .copied()
                    .collect();
                (!conditions.is_empty()).then_some(SideRule { side, conditions })
            })
            .collect()
    }

    /// Imposes the conditions on `u` given each condition's data value. The
    /// `u_x` term uses the second-order one-sided difference.
    pub(crate) fn apply<S: Scalar>(&self, u: &mut [S], dx: f64, data: &[S]) {
        let n = u.len();
        // (node at boundary, first interior, second interior)
        let (b0, b1, b2) = match self.side {
            Side::Left => (0, 1, 2),
            Side::Right => (n - 1, n - 2, n - 3),
        };
        let sgn = side_sign(self.side);
        match self.conditions.as_slice() {
            [c] => {
                if c.ux_weight == 0.0 {
                    u[b0] = data[0] * (1.0 / c.u_weight);
                } else {
                    // sgn * u_x ~ (-3 u_b0 + 4 u_b1 - u_b2) / (2 dx)
                    let w = c.ux_weight * sgn / (2.0 * dx);
                    let diag = c.u_weight - 3.0 * w;
                    u[b0] = (data[0] - (u[b1] * 4.0 - u[b2]) * w) * (1.0 / diag);
                }
            }
            [c1, c2] => {
                // unknowns (u_b0, u_b1), known u_b2
                let row = |c: &RobinBC| {
                    let w = c.ux_weight * sgn / (2.0 * dx);
                    (c.u_weight - 3.0 * w, 4.0 * w, w)
                };
                let (m11, m12, w1) = row(c1);
                let (m21, m22, w2) = row(c2);
                let r1 = data[0] + u[b2] * w1;
                let r2 = data[1] + u[b2] * w2;
                let det = m11 * m22 - m12 * m21;
                u[b0] = (r1 * m22 - r2 * m12) * (1.0 / det);
                u[b1] = (r2 * m11 - r1 * m21) * (1.0 / det);
            }
            _ => {}
        }
    }
}

/// The discretized propagator as a [`System`] for the time stepper.
pub struct WceSystem<S: Scalar> {
    set: Arc<IndexSet>,
    /// `(left position, right position, coefficient)` per index.
    terms: Vec<Vec<(usize, usize, f64)>>,
    /// `Some(i)` when the index is `delta_i` and receives forcing `m_i`.
    forced_mode: Vec<Option<usize>>,
    sigma: Vec<S>,
    basis: TimeBasis,
    kappa: f64,
    eta: f64,
    nu: f64,
    dx: f64,
    nonlinear: bool,
    sides: Vec<SideRule>,
    workspace: StencilWorkspace<S>,
    derivs: Vec<Vec<S>>,
    data_buf: Vec<S>,
}

impl<S: Scalar> WceSystem<S> {
    pub fn new(spec: &ProblemSpec, scheme: &TruncationScheme, basis: TimeBasis) -> Result<Self> {
        let set = Arc::new(IndexSet::from_scheme(scheme));
        let nodes = spec.grid.nodes()?;
        let terms = set
            .indices()
            .iter()
            .map(|alpha| {
                Ok(convolution_terms_in(alpha, &set)?
                    .into_iter()
                    .map(|t| {
                        let l = set.position(&t.left).expect("left factor in truncation");
                        let r = set.position(&t.right).expect("right factor in truncation");
                        (l, r, t.coeff)
                    })
                    .collect())
            })
            .collect::<Result<Vec<_>>>()?;
        let forced_mode = set
            .indices()
            .iter()
            .map(|a| a.as_unit().map(|m| m as usize).filter(|&m| m <= basis.count))
            .collect();
        let sigma = nodes
            .iter()
            .map(|&x| S::from_complex(spec.sigma.eval(x)))
            .collect();
        let n = nodes.len();
        Ok(Self {
            derivs: vec![vec![S::ZERO; n]; set.len()],
            set,
            terms,
            forced_mode,
            sigma,
            basis,
            kappa: spec.kappa,
            eta: spec.eta,
            nu: spec.nu,
            dx: spec.grid.dx,
            nonlinear: spec.nonlinear,
            sides: SideRule::from_spec(spec),
            workspace: StencilWorkspace::new(n, spec.ghost)?,
            data_buf: Vec::with_capacity(2),
        })
    }

    pub fn index_set(&self) -> &Arc<IndexSet> {
        &self.set
    }

    fn side_data(&self, rule: &SideRule, index: &MultiIndex, t: f64, out: &mut Vec<S>) {
        out.clear();
        for c in &rule.conditions {
            out.push(S::from_real(project_boundary(&c.data, index, &self.basis, t)));
        }
    }

    /// Evaluates the right-hand side for all indices.
    pub fn evaluate(&mut self, t: f64, state: &[Vec<S>], out: &mut [Vec<S>]) {
        let ghost = self.workspace.ghost;
        if self.nonlinear {
            for (u, d) in state.iter().zip(self.derivs.iter_mut()) {
                diff1_into(u, self.dx, ghost, d);
            }
        }
        for (a, h) in out.iter_mut().enumerate() {
            self.workspace
                .linear_operator(&state[a], self.dx, self.kappa, self.eta, self.nu, h);
            if self.nonlinear {
                for &(l, r, c) in &self.terms[a] {
                    let (ul, dr) = (&state[l], &self.derivs[r]);
                    for k in 0..h.len() {
                        h[k] = h[k] - ul[k] * dr[k] * c;
                    }
                }
            }
            if let Some(mode) = self.forced_mode[a] {
                let m = self.basis.eval(mode, t);
                for (hk, &s) in h.iter_mut().zip(&self.sigma) {
                    *hk += s * m;
                }
            }
        }
    }
}

impl<S: Scalar> System for WceSystem<S> {
    type Scalar = S;

    fn rhs(&mut self, t: f64, state: &[Vec<S>], out: &mut [Vec<S>]) {
        self.evaluate(t, state, out);
    }

    fn constrain(&mut self, t: f64, state: &mut [Vec<S>]) {
        let mut buf = std::mem::take(&mut self.data_buf);
        for rule in &self.sides {
            for (a, u) in state.iter_mut().enumerate() {
                self.side_data(rule, &self.set.indices()[a], t, &mut buf);
                rule.apply(u, self.dx, &buf);
            }
        }
        self.data_buf = buf;
    }

    fn component_label(&self, i: usize) -> String {
        format!("u_{}", self.set.indices()[i])
    }
}

/// Right-hand side of the propagator for `field` at time `t`.
pub fn rhs<S: Scalar>(
    field: &ChaosField<S>,
    spec: &ProblemSpec,
    scheme: &TruncationScheme,
    basis: &TimeBasis,
    t: f64,
) -> Result<ChaosField<S>> {
    let expected = scheme.enumerate();
    if field.indices() != expected.as_slice() {
        return Err(Error::Structure(
            "field indices do not match the truncation".into(),
        ));
    }
    let nodes = spec.grid.intervals()? + 1;
    if field.nodes() != nodes {
        return Err(Error::Structure(format!(
            "field has {} nodes, grid has {nodes}",
            field.nodes()
        )));
    }
    let mut system = WceSystem::<S>::new(spec, scheme, *basis)?;
    let mut out = ChaosField::zeros(field.indices.clone(), nodes, t);
    system.evaluate(t, &field.coefficients, &mut out.coefficients);
    Ok(out)
}

/// Time grid for a solve: every level or a subset of step numbers.
#[derive(Debug, Clone)]
pub enum Snapshots {
    All,
    Steps(Vec<usize>),
}

/// Marches the propagator from the initial field. `steps = None` runs to the
/// grid horizon.
pub fn solve<S: Scalar>(
    spec: &ProblemSpec,
    scheme: &TruncationScheme,
    basis: TimeBasis,
    steps: Option<usize>,
    snapshots: &Snapshots,
) -> Result<Vec<ChaosField<S>>> {
    let steps = match steps {
        Some(s) => s,
        None => spec.grid.steps()?,
    };
    let init = initial_field::<S>(spec, scheme)?;
    let set = init.indices.clone();
    let mut system = WceSystem::<S>::new(spec, scheme, basis)?;
    let options = MarchOptions::new(spec.grid.dt, steps);
    let state = init.into_coefficients();
    let wrap = |t: f64, c: Vec<Vec<S>>| ChaosField {
        indices: set.clone(),
        coefficients: c,
        time: t,
    };
    match snapshots {
        Snapshots::All => {
            let mut out = Vec::with_capacity(steps + 1);
            march(&mut system, state, options, |_, t, s| out.push(wrap(t, s.to_vec())))?;
            Ok(out)
        }
        Snapshots::Steps(at) => Ok(march_snapshots(&mut system, state, options, at)?
            .into_iter()
            .map(|(_, t, c)| wrap(t, c))
            .collect()),
    }
}

/// Marches the propagator and hands each level to `observe` without keeping
/// the trajectory.
pub fn solve_with<S: Scalar, F>(
    spec: &ProblemSpec,
    scheme: &TruncationScheme,
    basis: TimeBasis,
    mut observe: F,
) -> Result<()>
where
    F: FnMut(usize, f64, &[Vec<S>]),
{
    let init = initial_field::<S>(spec, scheme)?;
    let mut system = WceSystem::<S>::new(spec, scheme, basis)?;
    let options = MarchOptions::new(spec.grid.dt, spec.grid.steps()?);
    march(&mut system, init.into_coefficients(), options, |n, t, s| {
        observe(n, t, s)
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use crate::problem::{builtin_problem, Builtin, Profile};
    use crate::problem::GhostPolicy;
    use crate::stepper::diff1;

    fn tp1() -> ProblemSpec {
        builtin_problem(Builtin::Tp1)
    }

    #[test]
    fn initial_field_examples() {
        let scheme = TruncationScheme::gaussian(4);
        let f = initial_field::<f64>(&tp1(), &scheme).unwrap();
        assert_eq!(f.indices().len(), 5);
        assert_eq!(f.nodes(), 101);
        assert!((f.get(&MultiIndex::zero()).unwrap()[50] - 1.0 / 3.5).abs() < 1e-15);
        for a in &f.indices()[1..] {
            assert!(f.get(a).unwrap().iter().all(|&v| v == 0.0));
        }
        let lin = initial_field::<Complex64>(&builtin_problem(Builtin::LinearTest), &scheme).unwrap();
        for v in &lin.coefficients()[0] {
            assert!((v.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn boundary_data_examples() {
        let spec = tp1();
        let basis = TimeBasis::new(3.0, 60).unwrap();
        let scheme = TruncationScheme::new(40, 60, 3).unwrap();
        let t = 1.3;
        let data = boundary_data(&spec, &scheme, &basis, t);
        let idx = scheme.enumerate();
        assert_eq!(data[0], vec![0.0, 0.0]);
        assert!((data[1][0] - t / 3f64.sqrt()).abs() < 1e-15);
        // modes above the Gaussian block carry order 3 here, never forced
        assert_eq!(idx[45], MultiIndex::single(45, 3));
        assert_eq!(data[45], vec![0.0, 0.0]);
    }

    #[test]
    fn boundary_data_reconstructs_sigma_w() {
        let spec = tp1();
        let basis = TimeBasis::new(3.0, 60).unwrap();
        let scheme = TruncationScheme::new(40, 60, 1).unwrap();
        let driver = crate::noise::sample_driver(17, basis);
        for &t in &[0.0, 0.4, 1.7, 3.0] {
            let data = boundary_data(&spec, &scheme, &basis, t);
            let sum: f64 = scheme
                .enumerate()
                .iter()
                .zip(&data)
                .map(|(a, d)| d[0] * crate::chaos::wick_eval(a, driver.xi()).unwrap())
                .sum();
            assert!((sum - driver.brownian_at(t).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_free_rhs_reduces_to_deterministic() {
        let mut spec = tp1();
        spec.sigma = Profile::Constant { value: 0.0 };
        let scheme = TruncationScheme::gaussian(3);
        let basis = TimeBasis::new(3.0, 3).unwrap();
        let field = initial_field::<f64>(&spec, &scheme).unwrap();
        let h = rhs(&field, &spec, &scheme, &basis, 0.7).unwrap();
        for a in &h.indices()[1..] {
            assert!(h.get(a).unwrap().iter().all(|&v| v == 0.0));
        }
        let u = &field.coefficients()[0];
        let g = GhostPolicy::Periodic;
        let dx = spec.grid.dx;
        let u1 = diff1(u, dx, g).unwrap();
        let u2 = crate::stepper::diff2(u, dx, g).unwrap();
        let u4 = crate::stepper::diff4(u, dx, g).unwrap();
        for k in 0..u.len() {
            let expect = -u[k] * u1[k] - spec.kappa * u2[k] - spec.nu * u4[k];
            assert!((h.coefficients()[0][k] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn forcing_feeds_first_order_indices() {
        let mut spec = tp1();
        spec.initial = Profile::Constant { value: 0.0 };
        let scheme = TruncationScheme::gaussian(3);
        let basis = TimeBasis::new(3.0, 3).unwrap();
        let field = initial_field::<f64>(&spec, &scheme).unwrap();
        let t = 0.9;
        let h = rhs(&field, &spec, &scheme, &basis, t).unwrap();
        let m2 = (2.0 / 3.0f64).sqrt() * (std::f64::consts::PI * t / 3.0).cos();
        assert!(h.get(&MultiIndex::unit(2)).unwrap().iter().all(|&v| v == m2));
        assert!(h.get(&MultiIndex::zero()).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_linear_field_has_zero_increment() {
        let mut spec = builtin_problem(Builtin::LinearTest);
        spec.kappa = 0.0;
        spec.eta = 0.0;
        spec.sigma = Profile::Constant { value: 0.0 };
        spec.initial = Profile::Constant { value: 2.5 };
        let scheme = TruncationScheme::gaussian(2);
        let basis = TimeBasis::new(3.0, 2).unwrap();
        let mut field = initial_field::<Complex64>(&spec, &scheme).unwrap();
        for c in field.coefficients_mut() {
            c.iter_mut().for_each(|v| *v = Complex64::new(1.5, -0.5));
        }
        let h = rhs(&field, &spec, &scheme, &basis, 1.0).unwrap();
        assert!(h.coefficients().iter().flatten().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn rhs_rejects_mismatched_fields() {
        let spec = tp1();
        let basis = TimeBasis::new(3.0, 4).unwrap();
        let field = initial_field::<f64>(&spec, &TruncationScheme::gaussian(3)).unwrap();
        assert!(matches!(
            rhs(&field, &spec, &TruncationScheme::gaussian(4), &basis, 0.0),
            Err(Error::Structure(_))
        ));
    }

    #[test]
    fn robin_rule_satisfies_condition() {
        let rule = SideRule {
            side: Side::Right,
            conditions: vec![RobinBC {
                u_weight: 2.0,
                ux_weight: 0.5,
                side: Side::Right,
                data: BoundaryData::Constant { value: 1.0 },
            }],
        };
        let dx = 0.1;
        let mut u = vec![0.3, 0.1, 0.7, 0.2, 0.9];
        rule.apply(&mut u, dx, &[1.25]);
        let ux = (3.0 * u[4] - 4.0 * u[3] + u[2]) / (2.0 * dx);
        assert!((2.0 * u[4] + 0.5 * ux - 1.25).abs() < 1e-12);

        let two = SideRule {
            side: Side::Left,
            conditions: vec![
                RobinBC {
                    u_weight: 1.0,
                    ux_weight: 0.0,
                    side: Side::Left,
                    data: BoundaryData::Constant { value: 0.0 },
                },
                RobinBC {
                    u_weight: 0.0,
                    ux_weight: 1.0,
                    side: Side::Left,
                    data: BoundaryData::Constant { value: 0.0 },
                },
            ],
        };
        let mut u = vec![0.3, 0.1, 0.7, 0.2, 0.9];
        two.apply(&mut u, dx, &[0.4, -2.0]);
        let ux = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * dx);
        assert!((u[0] - 0.4).abs() < 1e-12);
        assert!((ux + 2.0).abs() < 1e-12);
    }
}
