//! Declarative experiment descriptions: operator coefficients, forcing
//! profile, initial condition, boundary conditions and the space-time grid.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const GRID_TOL: f64 = 1e-9;

/// Largest `nu dt / dx^4` for which the AB2/AM3 march stays stable on the
/// highest grid mode (amplification reaches 1 at `dt * lambda = -2.4`).
pub const STABILITY_LIMIT: f64 = 0.15;

/// Uniform space-time grid: `x_k = a + k dx`, `t_n = n dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub a: f64,
    pub b: f64,
    pub dx: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub dt: f64,
}

fn integer_ratio(num: f64, den: f64) -> Option<usize> {
    if !(num > 0.0 && den > 0.0) || !num.is_finite() || !den.is_finite() {
        return None;
    }
    let r = num / den;
    let n = r.round();
    if n >= 1.0 && (r - n).abs() <= GRID_TOL * r.max(1.0) {
        Some(n as usize)
    } else {
        None
    }
}

impl GridSpec {
    /// `K = (b - a) / dx`.
    pub fn intervals(&self) -> Result<usize> {
        integer_ratio(self.b - self.a, self.dx).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "dx = {} does not divide [{}, {}]",
                self.dx, self.a, self.b
            ))
        })
    }

    /// `N = T / dt`.
    pub fn steps(&self) -> Result<usize> {
        integer_ratio(self.horizon, self.dt).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "dt = {} does not divide the horizon {}",
                self.dt, self.horizon
            ))
        })
    }

    pub fn x(&self, k: usize) -> f64 {
        self.a + k as f64 * self.dx
    }

    pub fn nodes(&self) -> Result<Vec<f64>> {
        Ok((0..=self.intervals()?).map(|k| self.x(k)).collect())
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    /// `nu dt / dx^4`, the explicit fourth-order stability ratio.
    pub fn stability_ratio(&self, nu: f64) -> f64 {
        nu * self.dt / self.dx.powi(4)
    }
}

/// Spatial profile used for the forcing amplitude and the initial condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Constant { value: f64 },
    Linear { slope: f64, offset: f64 },
    /// `amplitude * exp(i k x)`
    PlaneWave { amplitude: f64, wavenumber: f64 },
    /// `amplitude * sin(k x)`
    Sine { amplitude: f64, wavenumber: f64 },
    /// `cos(pi x / 20) / (3.5 + sin(pi x / 20))`
    Tp1Bump,
    /// `(sin(pi x / 20) - sin(pi x / 10)) / (7.5 - cos(pi x / 20) + 0.5 cos(pi x / 10))`
    Tp2Bump,
}

impl Profile {
    pub fn eval(&self, x: f64) -> Complex64 {
        match *self {
            Profile::Constant { value } => value.into(),
            Profile::Linear { slope, offset } => (slope * x + offset).into(),
            Profile::PlaneWave {
                amplitude,
                wavenumber,
            } => Complex64::from_polar(amplitude, wavenumber * x),
            Profile::Sine {
                amplitude,
                wavenumber,
            } => (amplitude * (wavenumber * x).sin()).into(),
            Profile::Tp1Bump => {
                let s = PI * x / 20.0;
                (s.cos() / (3.5 + s.sin())).into()
            }
            Profile::Tp2Bump => {
                let s = PI * x / 20.0;
                let num = s.sin() - (2.0 * s).sin();
                let den = 7.5 - s.cos() + 0.5 * (2.0 * s).cos();
                (num / den).into()
            }
        }
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.eval(x).re
    }

    pub fn is_real(&self) -> bool {
        !matches!(self, Profile::PlaneWave { .. })
    }

    /// Constant value if the profile does not depend on `x`.
    pub fn constant_value(&self) -> Option<f64> {
        match *self {
            Profile::Constant { value } => Some(value),
            Profile::Linear { slope, offset } if slope == 0.0 => Some(offset),
            Profile::PlaneWave { amplitude, .. } | Profile::Sine { amplitude, .. }
                if amplitude == 0.0 =>
            {
                Some(0.0)
            }
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.constant_value() == Some(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// Right-hand side `g(t)` of a Robin condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryData {
    Constant { value: f64 },
    /// `scale * W(t)` for the driving Brownian motion.
    Brownian { scale: f64 },
}

/// `u_weight * u + ux_weight * u_x = data` on one side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobinBC {
    pub u_weight: f64,
    pub ux_weight: f64,
    pub side: Side,
    pub data: BoundaryData,
}

impl RobinBC {
    pub fn dirichlet(side: Side, data: BoundaryData) -> Self {
        Self {
            u_weight: 1.0,
            ux_weight: 0.0,
            side,
            data,
        }
    }

    pub fn is_dirichlet(&self) -> bool {
        self.ux_weight == 0.0 && self.u_weight != 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BoundaryCondition {
    Robin(RobinBC),
    /// Closure supplied by periodic wraparound of the stencil.
    Periodic { side: Side },
}

impl BoundaryCondition {
    pub fn side(&self) -> Side {
        match self {
            BoundaryCondition::Robin(r) => r.side,
            BoundaryCondition::Periodic { side } => *side,
        }
    }

    pub fn robin(&self) -> Option<&RobinBC> {
        match self {
            BoundaryCondition::Robin(r) => Some(r),
            BoundaryCondition::Periodic { .. } => None,
        }
    }
}

/// Ghost-point rule for stencil references beyond the grid ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GhostPolicy {
    /// Nodes `0` and `K` are the same physical point; `v_{-j} = v_{K-j}`.
    #[default]
    Periodic,
    /// Even reflection about each end, `v_{-j} = v_j`.
    Reflect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Real,
    Complex,
}

/// Which reference solution a run compares against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    /// Closed-form Langevin solution of the linear plane-wave problem.
    Analytic,
    /// Change of variables `chi = x - sigma int W` onto a deterministic solve.
    #[serde(rename = "theorem3", alias = "transform")]
    Transform,
    None,
}

impl FromStr for OracleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "analytic" => Ok(Self::Analytic),
            "theorem3" | "transform" => Ok(Self::Transform),
            "none" => Ok(Self::None),
            other => Err(Error::Config(format!(
                "unknown oracle '{other}'; expected analytic, theorem3 or none"
            ))),
        }
    }
}

impl fmt::Display for OracleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Analytic => "analytic",
            Self::Transform => "theorem3",
            Self::None => "none",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub name: String,
    pub kappa: f64,
    pub eta: f64,
    pub nu: f64,
    pub sigma: Profile,
    pub initial: Profile,
    pub bcs: [BoundaryCondition; 4],
    pub grid: GridSpec,
    pub field_kind: FieldKind,
    /// Whether the convective `u u_x` term is present.
    pub nonlinear: bool,
    #[serde(default)]
    pub ghost: GhostPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builtin {
    LinearTest,
    Tp1,
    Tp2,
    Tp3,
    Tp4,
}

impl Builtin {
    pub const ALL: [Builtin; 5] = [
        Builtin::LinearTest,
        Builtin::Tp1,
        Builtin::Tp2,
        Builtin::Tp3,
        Builtin::Tp4,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Builtin::LinearTest => "linear_test",
            Builtin::Tp1 => "tp1",
            Builtin::Tp2 => "tp2",
            Builtin::Tp3 => "tp3",
            Builtin::Tp4 => "tp4",
        }
    }

    /// Default reference solution for the experiment.
    pub fn default_oracle(&self) -> OracleKind {
        match self {
            Builtin::LinearTest => OracleKind::Analytic,
            _ => OracleKind::Transform,
        }
    }
}

impl FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Builtin::ALL
            .into_iter()
            .find(|b| b.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown problem '{s}'; expected one of linear_test, tp1, tp2, tp3, tp4"
                ))
            })
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn brownian_dirichlet_pair(sigma: f64) -> [BoundaryCondition; 4] {
    let data = BoundaryData::Brownian { scale: sigma };
    [
        BoundaryCondition::Robin(RobinBC::dirichlet(Side::Left, data)),
        BoundaryCondition::Periodic { side: Side::Left },
        BoundaryCondition::Robin(RobinBC::dirichlet(Side::Right, data)),
        BoundaryCondition::Periodic { side: Side::Right },
    ]
}

pub fn all_periodic() -> [BoundaryCondition; 4] {
    [
        BoundaryCondition::Periodic { side: Side::Left },
        BoundaryCondition::Periodic { side: Side::Left },
        BoundaryCondition::Periodic { side: Side::Right },
        BoundaryCondition::Periodic { side: Side::Right },
    ]
}

/// The canonical experiment configurations.
pub fn builtin_problem(which: Builtin) -> ProblemSpec {
    let ks = |name: &str, eta: f64, initial: Profile, a: f64, b: f64| ProblemSpec {
        name: name.to_string(),
        kappa: 0.1,
        eta,
        nu: 0.02,
        sigma: Profile::Constant { value: 1.0 },
        initial,
        bcs: brownian_dirichlet_pair(1.0),
        grid: GridSpec {
            a,
            b,
            dx: 0.2,
            horizon: 3.0,
            dt: 0.005,
        },
        field_kind: FieldKind::Real,
        nonlinear: true,
        ghost: GhostPolicy::Periodic,
    };
    match which {
        Builtin::LinearTest => {
            let wave = Profile::PlaneWave {
                amplitude: 1.0,
                wavenumber: 1.0,
            };
            ProblemSpec {
                name: "linear_test".to_string(),
                kappa: 0.002,
                eta: 0.002,
                nu: 0.005,
                sigma: wave.clone(),
                initial: wave,
                bcs: all_periodic(),
                grid: GridSpec {
                    a: 0.0,
                    b: 2.0 * PI,
                    dx: 2.0 * PI / 32.0,
                    horizon: 3.0,
                    dt: 0.005,
                },
                field_kind: FieldKind::Complex,
                nonlinear: false,
                ghost: GhostPolicy::Periodic,
            }
        }
        Builtin::Tp1 => ks("tp1", 0.0, Profile::Tp1Bump, -10.0, 10.0),
        Builtin::Tp2 => ks("tp2", 0.0, Profile::Tp2Bump, 0.0, 20.0),
        Builtin::Tp3 => ks("tp3", 0.05, Profile::Tp1Bump, -10.0, 10.0),
        Builtin::Tp4 => ks("tp4", 0.05, Profile::Tp2Bump, 0.0, 20.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    fn error(message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            message: message.into(),
        }
    }

    fn warning(message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

/// Returns every violation found; an empty list means the problem is runnable
/// with the requested oracle.
pub fn validate(spec: &ProblemSpec, oracle: OracleKind) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let g = &spec.grid;
    if !(g.b > g.a) {
        out.push(Diagnostic::error(format!(
            "right endpoint {} must exceed left endpoint {}",
            g.b, g.a
        )));
    }
    if !(g.dx > 0.0) || !(g.dt > 0.0) || !(g.horizon > 0.0) {
        out.push(Diagnostic::error("dx, dt and T must be positive"));
    } else {
        if let Err(e) = g.intervals() {
            out.push(Diagnostic::error(format!("grid divisibility: {e}")));
        } else if g.intervals().unwrap_or(0) < 4 {
            out.push(Diagnostic::error("grid needs at least 4 intervals"));
        }
        if let Err(e) = g.steps() {
            out.push(Diagnostic::error(format!("grid divisibility: {e}")));
        }
        if spec.nu > 0.0 && g.stability_ratio(spec.nu) > STABILITY_LIMIT {
            out.push(Diagnostic::warning(format!(
                "nu*dt/dx^4 = {:.4} exceeds the explicit stability limit {STABILITY_LIMIT}",
                g.stability_ratio(spec.nu)
            )));
        }
    }
    if !(spec.nu > 0.0) {
        out.push(Diagnostic::error("dissipation coefficient must be positive"));
    }
    for side in [Side::Left, Side::Right] {
        let count = spec.bcs.iter().filter(|bc| bc.side() == side).count();
        if count != 2 {
            out.push(Diagnostic::error(format!(
                "expected exactly two boundary conditions on the {side:?} side, found {count}"
            )));
        }
        let robin: Vec<&RobinBC> = spec
            .bcs
            .iter()
            .filter(|bc| bc.side() == side)
            .filter_map(BoundaryCondition::robin)
            .collect();
        if robin.len() == 2 {
            let (r1, r2) = (robin[0], robin[1]);
            let det = r1.u_weight * r2.ux_weight - r1.ux_weight * r2.u_weight;
            if det == 0.0 {
                out.push(Diagnostic::error(format!(
                    "the two {side:?} Robin conditions are linearly dependent"
                )));
            }
        }
    }
    for bc in spec.bcs.iter().filter_map(BoundaryCondition::robin) {
        if bc.u_weight == 0.0 && bc.ux_weight == 0.0 {
            out.push(Diagnostic::error(format!(
                "degenerate Robin weights on the {:?} side",
                bc.side
            )));
        } else if g.dx > 0.0 && bc.u_weight - 1.5 * bc.ux_weight / g.dx * side_sign(bc.side) == 0.0 {
            out.push(Diagnostic::error(format!(
                "Robin weights on the {:?} side are singular for the one-sided difference at dx = {}",
                bc.side, g.dx
            )));
        }
    }
    if spec.field_kind == FieldKind::Real && !(spec.sigma.is_real() && spec.initial.is_real()) {
        out.push(Diagnostic::error(
            "real field requested with complex-valued profiles",
        ));
    }
    match oracle {
        OracleKind::Transform => {
            if spec.sigma.constant_value().is_none() {
                out.push(Diagnostic::error(
                    "the change-of-variables oracle requires a constant sigma",
                ));
            }
            if spec.field_kind != FieldKind::Real {
                out.push(Diagnostic::error(
                    "the change-of-variables oracle needs a real field",
                ));
            }
            for bc in spec.bcs.iter().filter_map(BoundaryCondition::robin) {
                if !bc.is_dirichlet() {
                    out.push(Diagnostic::error(
                        "the change-of-variables oracle supports Dirichlet data only",
                    ));
                }
            }
        }
        OracleKind::Analytic => {
            let ok = match (&spec.sigma, &spec.initial) {
                (
                    Profile::PlaneWave { wavenumber: k1, .. },
                    Profile::PlaneWave { wavenumber: k2, .. },
                ) => k1 == k2 && k1.fract() == 0.0,
                _ => false,
            };
            if !ok {
                out.push(Diagnostic::error(
                    "the analytic oracle needs plane-wave sigma and initial data with one integer wavenumber",
                ));
            }
            if spec.nonlinear {
                out.push(Diagnostic::error(
                    "the analytic oracle applies to the linear problem only",
                ));
            }
            if spec.bcs.iter().any(|bc| bc.robin().is_some()) {
                out.push(Diagnostic::error(
                    "the analytic oracle needs fully periodic boundaries",
                ));
            }
            let period = (g.b - g.a) / (2.0 * PI);
            if (period - period.round()).abs() > GRID_TOL || period.round() < 1.0 {
                out.push(Diagnostic::error(
                    "the analytic oracle needs a domain length that is a multiple of 2 pi",
                ));
            }
        }
        OracleKind::None => {}
    }
    out
}

/// Outward orientation used by the one-sided boundary difference.
pub(crate) fn side_sign(side: Side) -> f64 {
    match side {
        Side::Left => 1.0,
        Side::Right => -1.0,
    }
}

/// TOML problem description. Every field is optional and overrides the
/// selected `base` builtin (default `tp1`).
///
/// ```toml
/// base = "tp1"
/// nu = 0.03
/// sigma = { kind = "constant", value = 0.5 }
/// boundary = "brownian_dirichlet"
/// [grid]
/// dx = 0.1
/// ```
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub base: Option<String>,
    pub name: Option<String>,
    pub kappa: Option<f64>,
    pub eta: Option<f64>,
    pub nu: Option<f64>,
    pub sigma: Option<ProfileValue>,
    pub initial: Option<ProfileValue>,
    pub field_kind: Option<FieldKind>,
    pub nonlinear: Option<bool>,
    pub ghost: Option<GhostPolicy>,
    /// Shortcut: `periodic`, `brownian_dirichlet` or `zero_dirichlet`.
    pub boundary: Option<String>,
    /// Explicit list of four conditions; overrides `boundary`.
    pub bcs: Option<Vec<BoundaryCondition>>,
    pub grid: Option<GridOverrides>,
}

/// A profile given either as a number (constant) or a tagged table.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ProfileValue {
    Number(f64),
    Profile(Profile),
}

impl From<ProfileValue> for Profile {
    fn from(v: ProfileValue) -> Self {
        match v {
            ProfileValue::Number(value) => Profile::Constant { value },
            ProfileValue::Profile(p) => p,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridOverrides {
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub dx: Option<f64>,
    #[serde(rename = "T")]
    pub horizon: Option<f64>,
    pub dt: Option<f64>,
}

impl ProblemConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn into_spec(self) -> Result<ProblemSpec> {
        let base: Builtin = self.base.as_deref().unwrap_or("tp1").parse()?;
        let mut spec = builtin_problem(base);
        if let Some(name) = self.name {
            spec.name = name;
        }
        if let Some(v) = self.kappa {
            spec.kappa = v;
        }
        if let Some(v) = self.eta {
            spec.eta = v;
        }
        if let Some(v) = self.nu {
            spec.nu = v;
        }
        if let Some(v) = self.sigma {
            spec.sigma = v.into();
        }
        if let Some(v) = self.initial {
            spec.initial = v.into();
        }
        if let Some(v) = self.field_kind {
            spec.field_kind = v;
        }
        if let Some(v) = self.nonlinear {
            spec.nonlinear = v;
        }
        if let Some(v) = self.ghost {
            spec.ghost = v;
        }
        if let Some(shortcut) = self.boundary {
            spec.bcs = match shortcut.as_str() {
                "periodic" => all_periodic(),
                "brownian_dirichlet" => {
                    let scale = spec.sigma.constant_value().ok_or_else(|| {
                        Error::Config(
                            "brownian_dirichlet needs a constant sigma; list bcs explicitly"
                                .to_string(),
                        )
                    })?;
                    brownian_dirichlet_pair(scale)
                }
                "zero_dirichlet" => {
                    let data = BoundaryData::Constant { value: 0.0 };
                    [
                        BoundaryCondition::Robin(RobinBC::dirichlet(Side::Left, data)),
                        BoundaryCondition::Periodic { side: Side::Left },
                        BoundaryCondition::Robin(RobinBC::dirichlet(Side::Right, data)),
                        BoundaryCondition::Periodic { side: Side::Right },
                    ]
                }
                other => {
                    return Err(Error::Config(format!(
                        "unknown boundary shortcut '{other}'"
                    )))
                }
            };
        }
        if let Some(list) = self.bcs {
            spec.bcs = list.try_into().map_err(|l: Vec<BoundaryCondition>| {
                Error::Config(format!("expected 4 boundary conditions, got {}", l.len()))
            })?;
        }
        if let Some(g) = self.grid {
            let grid = &mut spec.grid;
            grid.a = g.a.unwrap_or(grid.a);
            grid.b = g.b.unwrap_or(grid.b);
            grid.dx = g.dx.unwrap_or(grid.dx);
            grid.horizon = g.horizon.unwrap_or(grid.horizon);
            grid.dt = g.dt.unwrap_or(grid.dt);
        }
        Ok(spec)
    }
}

impl ProblemSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        ProblemConfig::parse(text)?.into_spec()
    }

    /// Sets a constant forcing amplitude and rescales Brownian boundary data
    /// to match, keeping `u = sigma W` at the boundary.
    pub fn set_constant_sigma(&mut self, value: f64) {
        self.sigma = Profile::Constant { value };
        for bc in &mut self.bcs {
            if let BoundaryCondition::Robin(RobinBC {
                data: BoundaryData::Brownian { scale },
                ..
            }) = bc
            {
                *scale = value;
            }
        }
    }

    pub fn is_periodic(&self) -> bool {
        self.bcs.iter().all(|bc| bc.robin().is_none())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tp1_grid_matches_reported_sizes() {
        let tp1 = builtin_problem(Builtin::Tp1);
        assert_eq!(tp1.grid.intervals().unwrap(), 100);
        assert_eq!(tp1.grid.steps().unwrap(), 600);
        assert_eq!(tp1.grid.dx, 0.2);
        assert_eq!(tp1.grid.dt, 0.005);
        assert!((tp1.grid.x(100) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn linear_test_is_complex() {
        let p = builtin_problem(Builtin::LinearTest);
        assert_eq!(p.field_kind, FieldKind::Complex);
        assert_eq!((p.kappa, p.eta, p.nu), (0.002, 0.002, 0.005));
        assert!(!p.nonlinear);
        assert!(p.is_periodic());
    }

    #[test]
    fn tp3_differs_from_tp1_only_in_eta() {
        let mut tp3 = builtin_problem(Builtin::Tp3);
        assert_eq!(tp3.eta, 0.05);
        tp3.eta = 0.0;
        tp3.name = "tp1".into();
        assert_eq!(tp3, builtin_problem(Builtin::Tp1));
        let mut tp4 = builtin_problem(Builtin::Tp4);
        tp4.eta = 0.0;
        tp4.name = "tp2".into();
        assert_eq!(tp4, builtin_problem(Builtin::Tp2));
    }

    #[test]
    fn builtins_are_stable_and_valid() {
        for b in Builtin::ALL {
            assert_eq!(builtin_problem(b), builtin_problem(b));
            let d = validate(&builtin_problem(b), b.default_oracle());
            assert!(d.is_empty(), "{b}: {d:?}");
            assert!(validate(&builtin_problem(b), OracleKind::None).is_empty());
        }
    }

    #[test]
    fn initial_profiles_vanish_at_dirichlet_ends() {
        assert!(Profile::Tp1Bump.eval_real(-10.0).abs() < 1e-15);
        assert!(Profile::Tp1Bump.eval_real(10.0).abs() < 1e-15);
        assert!((Profile::Tp1Bump.eval_real(0.0) - 1.0 / 3.5).abs() < 1e-15);
        assert!(Profile::Tp2Bump.eval_real(0.0).abs() < 1e-15);
        assert!(Profile::Tp2Bump.eval_real(20.0).abs() < 1e-15);
    }

    #[test]
    fn validate_reports_violations() {
        let mut p = builtin_problem(Builtin::Tp1);
        p.nu = 0.0;
        let d = validate(&p, OracleKind::Transform);
        assert!(d
            .iter()
            .any(|d| d.message == "dissipation coefficient must be positive"));

        let mut p = builtin_problem(Builtin::Tp1);
        p.sigma = Profile::Linear {
            slope: 1.0,
            offset: 0.0,
        };
        let d = validate(&p, OracleKind::Transform);
        assert!(d.iter().any(|d| d.message.contains("constant sigma")));
        assert!(validate(&p, OracleKind::None).is_empty());

        let mut p = builtin_problem(Builtin::Tp1);
        p.grid.dx = 0.3;
        assert!(validate(&p, OracleKind::None)
            .iter()
            .any(|d| d.message.contains("divisibility")));

        let mut p = builtin_problem(Builtin::Tp1);
        p.bcs[0] = BoundaryCondition::Robin(RobinBC {
            u_weight: 0.0,
            ux_weight: 0.0,
            side: Side::Left,
            data: BoundaryData::Constant { value: 0.0 },
        });
        assert!(validate(&p, OracleKind::None)
            .iter()
            .any(|d| d.message.contains("degenerate")));

        let mut p = builtin_problem(Builtin::Tp1);
        p.bcs[1] = BoundaryCondition::Periodic { side: Side::Right };
        assert!(validate(&p, OracleKind::None)
            .iter()
            .any(|d| d.message.contains("exactly two")));

        let mut p = builtin_problem(Builtin::Tp1);
        p.grid.dt = 0.02;
        p.grid.dx = 0.2;
        let d = validate(&p, OracleKind::None);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].severity, Severity::Warning);
    }

    #[test]
    fn config_overrides_builtin() {
        let text = r#"
            base = "tp2"
            nu = 0.03
            sigma = 0.5
            boundary = "brownian_dirichlet"
            [grid]
            dx = 0.1
        "#;
        let spec = ProblemSpec::from_toml(text).unwrap();
        assert_eq!(spec.nu, 0.03);
        assert_eq!(spec.sigma, Profile::Constant { value: 0.5 });
        assert_eq!(spec.initial, Profile::Tp2Bump);
        assert_eq!(spec.grid.dx, 0.1);
        assert_eq!(
            spec.bcs[0].robin().unwrap().data,
            BoundaryData::Brownian { scale: 0.5 }
        );

        let text = r#"
            base = "linear_test"
            initial = { kind = "sine", amplitude = 2.0, wavenumber = 3.0 }
        "#;
        let spec = ProblemSpec::from_toml(text).unwrap();
        assert_eq!(
            spec.initial,
            Profile::Sine {
                amplitude: 2.0,
                wavenumber: 3.0
            }
        );
        assert!(ProblemSpec::from_toml("bogus = 1").is_err());
        assert!(ProblemSpec::from_toml("base = \"tp9\"").is_err());
    }

    #[test]
    fn config_explicit_bcs() {
        let text = r#"
            [[bcs]]
            type = "robin"
            u_weight = 1.0
            ux_weight = 0.5
            side = "left"
            data = { kind = "constant", value = 0.0 }
            [[bcs]]
            type = "periodic"
            side = "left"
            [[bcs]]
            type = "robin"
            u_weight = 1.0
            ux_weight = 0.0
            side = "right"
            data = { kind = "brownian", scale = 1.0 }
            [[bcs]]
            type = "periodic"
            side = "right"
        "#;
        let spec = ProblemSpec::from_toml(text).unwrap();
        assert_eq!(spec.bcs[0].robin().unwrap().ux_weight, 0.5);
        assert!(validate(&spec, OracleKind::None).is_empty());
        assert!(!validate(&spec, OracleKind::Transform).is_empty());
    }
}
