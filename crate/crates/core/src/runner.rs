//! Experiment orchestration: a [`RunManifest`] fully determines a run, and
//! every artifact it writes starts with the manifest as a comment header.
//!
//! Layout of `run` output, per seed under `<out>/seed_<seed>/`:
//!
//! | file             | content                                              |
//! |------------------|------------------------------------------------------|
//! | `solution.csv`   | chaos solution at the snapshot times                 |
//! | `oracle.csv`     | reference solution at the snapshot times             |
//! | `timeseries.csv` | both solutions at one probe node for every step      |
//! | `errors.csv`     | `t,abs,rel`                                          |
//! | `summary.json`   | error summary and status                             |
//! | `manifest.json`  | the manifest echo with the resolved grid             |

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::{error_series, reconstruct, ErrorSeries, ErrorSummary, Trajectory};
use crate::chaos::TruncationScheme;
use crate::error::{Error, Result};
use crate::noise::{sample_driver, BrownianDriver, TimeBasis};
use crate::oracle::{langevin_semianalytic, transform_solve, LangevinParams, TransformOptions};
use crate::problem::{
    builtin_problem, validate, Builtin, FieldKind, OracleKind, ProblemConfig, ProblemSpec,
    Severity, STABILITY_LIMIT,
};
use crate::propagator::{solve_with, ChaosField};
use crate::scalar::Scalar;

/// Version of the artifact layout, written into every CSV header.
pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable naming the default output root.
pub const OUT_ROOT_ENV: &str = "SGKS_OUT_ROOT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Builtin problem name, or the base of `config`.
    pub problem: String,
    /// Optional TOML problem file; overrides `problem`.
    pub config: Option<PathBuf>,
    pub seeds: Vec<u64>,
    pub gaussian_count: u32,
    pub total_count: u32,
    pub higher_order_cap: u32,
    pub dt: Option<f64>,
    pub dx: Option<f64>,
    pub out: PathBuf,
    pub snapshots: Vec<f64>,
    /// `None` picks the problem's natural reference.
    pub oracle: Option<OracleKind>,
    pub force: bool,
}

impl RunManifest {
    /// Defaults of the nonlinear experiments.
    pub fn new(problem: impl Into<String>, out: impl Into<PathBuf>) -> Self {
        Self {
            problem: problem.into(),
            config: None,
            seeds: vec![0],
            gaussian_count: 40,
            total_count: 60,
            higher_order_cap: 1,
            dt: None,
            dx: None,
            out: out.into(),
            snapshots: vec![1.0, 2.0, 3.0],
            oracle: None,
            force: false,
        }
    }

    /// Problem after applying the config file and grid overrides.
    pub fn resolve_problem(&self) -> Result<ProblemSpec> {
        let mut spec = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    Error::Config(format!("cannot read {}: {e}", path.display()))
                })?;
                ProblemConfig::parse(&text)?.into_spec()?
            }
            None => builtin_problem(self.problem.parse::<Builtin>()?),
        };
        if let Some(dt) = self.dt {
            spec.grid.dt = dt;
        }
        if let Some(dx) = self.dx {
            spec.grid.dx = dx;
        }
        Ok(spec)
    }

    pub fn scheme(&self) -> Result<TruncationScheme> {
        TruncationScheme::new(
            self.gaussian_count.min(self.total_count),
            self.total_count,
            self.higher_order_cap,
        )
    }

    /// Natural reference for `spec` when none was requested.
    pub fn resolve_oracle(&self, spec: &ProblemSpec) -> OracleKind {
        if let Some(o) = self.oracle {
            return o;
        }
        if let Ok(b) = self.problem.parse::<Builtin>() {
            if self.config.is_none() {
                return b.default_oracle();
            }
        }
        [OracleKind::Analytic, OracleKind::Transform]
            .into_iter()
            .find(|&o| {
                validate(spec, o)
                    .iter()
                    .all(|d| d.severity != Severity::Error)
            })
            .unwrap_or(OracleKind::None)
    }

    /// Resolves and validates the problem, refusing unstable grids unless
    /// `force` is set.
    pub fn prepare(&self) -> Result<(ProblemSpec, OracleKind)> {
        if self.seeds.is_empty() {
            return Err(Error::Config("no seeds given".into()));
        }
        let spec = self.resolve_problem()?;
        let oracle = self.resolve_oracle(&spec);
        let errors: Vec<String> = validate(&spec, oracle)
            .into_iter()
            .filter(|d| d.severity == Severity::Error)
            .map(|d| d.message)
            .collect();
        if !errors.is_empty() {
            return Err(Error::Config(errors.join("; ")));
        }
        let ratio = spec.grid.stability_ratio(spec.nu);
        if ratio > STABILITY_LIMIT && !self.force {
            return Err(Error::Config(format!(
                "nu*dt/dx^4 = {ratio:.4} exceeds the stability limit {STABILITY_LIMIT}; pass --force to run anyway"
            )));
        }
        self.scheme()?;
        Ok((spec, oracle))
    }

    fn header(&self) -> Result<String> {
        Ok(format!(
            "# schema={SCHEMA_VERSION} manifest={}\n",
            serde_json::to_string(self)?
        ))
    }
}

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Divergence { .. } => 3,
        Error::DomainExhausted { .. } => 4,
        Error::Io(_) => 1,
        _ => 2,
    }
}

/// Solutions of one realization, stored as complex values; real problems
/// have zero imaginary parts.
#[derive(Debug, Clone)]
pub struct Realization {
    pub seed: u64,
    pub nodes: Vec<f64>,
    pub numeric: Trajectory<Complex64>,
    pub reference: Option<Trajectory<Complex64>>,
    pub errors: Option<ErrorSeries>,
}

fn chaos_path<S: Scalar>(
    spec: &ProblemSpec,
    scheme: &TruncationScheme,
    driver: &BrownianDriver,
) -> Result<Trajectory<Complex64>> {
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut failure = None;
    let set = std::sync::Arc::new(crate::chaos::IndexSet::from_scheme(scheme));
    solve_with::<S, _>(spec, scheme, *driver.basis(), |_, t, state| {
        if failure.is_some() {
            return;
        }
        let field = ChaosField::new(set.clone(), state.to_vec(), t)
            .and_then(|f| reconstruct(&f, driver.xi()));
        match field {
            Ok(u) => {
                times.push(t);
                values.push(u.into_iter().map(Scalar::to_complex).collect());
            }
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Trajectory::new(times, values)
}

/// Reference trajectory from `oracle`, on the same grid and time levels.
pub fn oracle_path(
    spec: &ProblemSpec,
    oracle: OracleKind,
    driver: &BrownianDriver,
) -> Result<Option<Trajectory<Complex64>>> {
    let nodes = spec.grid.nodes()?;
    let steps = spec.grid.steps()?;
    let times: Vec<f64> = (0..=steps)
        .map(|n| crate::noise::grid_time(n, steps, spec.grid.dt, spec.grid.horizon))
        .collect();
    match oracle {
        OracleKind::None => Ok(None),
        OracleKind::Analytic => {
            let params = LangevinParams::from_spec(spec)?;
            let k = f64::from(params.k);
            let v = langevin_semianalytic(&params, driver, spec.grid.dt)?;
            let values = v
                .iter()
                .map(|vn| {
                    nodes
                        .iter()
                        .map(|&x| vn * Complex64::new(0.0, k * x).exp())
                        .collect()
                })
                .collect();
            Trajectory::new(times, values).map(Some)
        }
        OracleKind::Transform => {
            let sol = transform_solve(spec, driver, TransformOptions::default())?;
            let values = sol
                .u
                .into_iter()
                .map(|row| row.into_iter().map(|u| Complex64::new(u, 0.0)).collect())
                .collect();
            Trajectory::new(sol.times, values).map(Some)
        }
    }
}

/// Solves one realization and compares it with the reference.
pub fn realize(
    spec: &ProblemSpec,
    scheme: &TruncationScheme,
    oracle: OracleKind,
    seed: u64,
) -> Result<Realization> {
    realize_with_path(spec, scheme, oracle, seed, scheme.mode_count())
}

/// As [`realize`], with the reference driven by `path_modes` Gaussians of
/// the seed's path while the chaos solution keeps the truncation's first
/// modes.
pub fn realize_with_path(
    spec: &ProblemSpec,
    scheme: &TruncationScheme,
    oracle: OracleKind,
    seed: u64,
    path_modes: usize,
) -> Result<Realization> {
    let modes = scheme.mode_count();
    let full = sample_driver(seed, TimeBasis::new(spec.grid.horizon, path_modes.max(modes))?);
    let driver = full.truncated(modes);
    let numeric = match spec.field_kind {
        FieldKind::Real => chaos_path::<f64>(spec, scheme, &driver)?,
        FieldKind::Complex => chaos_path::<Complex64>(spec, scheme, &driver)?,
    };
    let reference = oracle_path(spec, oracle, &full)?;
    let errors = reference
        .as_ref()
        .map(|r| error_series(&numeric, r))
        .transpose()?;
    Ok(Realization {
        seed,
        nodes: spec.grid.nodes()?,
        numeric,
        reference,
        errors,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub problem: String,
    pub oracle: OracleKind,
    pub dt: f64,
    pub dx: f64,
    pub errors: Option<ErrorSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub out: PathBuf,
    pub seeds: Vec<SeedSummary>,
}

fn fmt_value(s: &mut String, v: Complex64, real: bool) {
    if real {
        let _ = write!(s, "{:.12e}", v.re);
    } else {
        let _ = write!(s, "{:.12e},{:.12e}", v.re, v.im);
    }
}

fn value_columns(name: &str, real: bool) -> String {
    if real {
        name.to_string()
    } else {
        format!("{name}_re,{name}_im")
    }
}

fn snapshot_steps(spec: &ProblemSpec, times: &[f64]) -> Result<Vec<usize>> {
    let steps = spec.grid.steps()?;
    times
        .iter()
        .map(|&t| {
            let n = (t / spec.grid.dt).round();
            if !(t >= 0.0) || n as usize > steps || (n * spec.grid.dt - t).abs() > 1e-9 {
                Err(Error::Config(format!(
                    "snapshot time {t} is not a time level in [0, {}]",
                    spec.grid.horizon
                )))
            } else {
                Ok(n as usize)
            }
        })
        .collect()
}

fn snapshot_csv(header: &str, traj: &Trajectory<Complex64>, nodes: &[f64], at: &[usize], real: bool) -> String {
    let mut s = String::from(header);
    let _ = writeln!(s, "t,x,{}", value_columns("u", real));
    for &n in at {
        for (k, &x) in nodes.iter().enumerate() {
            let _ = write!(s, "{:.6},{x:.6},", traj.times[n]);
            fmt_value(&mut s, traj.values[n][k], real);
            s.push('\n');
        }
    }
    s
}

/// Node nearest to the middle of the domain.
pub fn probe_node(spec: &ProblemSpec) -> usize {
    let g = &spec.grid;
    (((g.a + g.b) * 0.5 - g.a) / g.dx).round() as usize
}

fn timeseries_csv(header: &str, r: &Realization, probe: usize, real: bool) -> String {
    let mut s = String::from(header);
    let _ = writeln!(s, "# x={:.6}", r.nodes[probe]);
    let _ = write!(s, "t,{}", value_columns("u_wce", real));
    if r.reference.is_some() {
        let _ = write!(s, ",{}", value_columns("u_oracle", real));
    }
    s.push('\n');
    for (n, t) in r.numeric.times.iter().enumerate() {
        let _ = write!(s, "{t:.6},");
        fmt_value(&mut s, r.numeric.values[n][probe], real);
        if let Some(reference) = &r.reference {
            s.push(',');
            fmt_value(&mut s, reference.values[n][probe], real);
        }
        s.push('\n');
    }
    s
}

fn write_realization(
    dir: &Path,
    manifest: &RunManifest,
    spec: &ProblemSpec,
    oracle: OracleKind,
    r: &Realization,
) -> Result<SeedSummary> {
    fs::create_dir_all(dir)?;
    let header = manifest.header()?;
    let real = spec.field_kind == FieldKind::Real;
    let at = snapshot_steps(spec, &manifest.snapshots)?;
    fs::write(
        dir.join("solution.csv"),
        snapshot_csv(&header, &r.numeric, &r.nodes, &at, real),
    )?;
    if let Some(reference) = &r.reference {
        fs::write(
            dir.join("oracle.csv"),
            snapshot_csv(&header, reference, &r.nodes, &at, real),
        )?;
    }
    fs::write(
        dir.join("timeseries.csv"),
        timeseries_csv(&header, r, probe_node(spec), real),
    )?;
    if let Some(errors) = &r.errors {
        let mut csv = header.clone();
        csv.push_str(&errors.to_csv(&[]));
        fs::write(dir.join("errors.csv"), csv)?;
    }
    let summary = SeedSummary {
        seed: r.seed,
        problem: spec.name.clone(),
        oracle,
        dt: spec.grid.dt,
        dx: spec.grid.dx,
        errors: r.errors.as_ref().map(ErrorSeries::summary),
    };
    fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    let echo = serde_json::json!({
        "schema": SCHEMA_VERSION,
        "manifest": manifest,
        "seed": r.seed,
        "problem": spec,
        "oracle": oracle,
    });
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&echo)? + "\n",
    )?;
    Ok(summary)
}

/// Runs every seed of the manifest and writes its artifacts.
pub fn run(manifest: &RunManifest) -> Result<RunReport> {
    let (spec, oracle) = manifest.prepare()?;
    let scheme = manifest.scheme()?;
    fs::create_dir_all(&manifest.out)?;
    let mut seeds = Vec::with_capacity(manifest.seeds.len());
    for &seed in &manifest.seeds {
        let r = realize(&spec, &scheme, oracle, seed)?;
        let dir = manifest.out.join(format!("seed_{seed}"));
        seeds.push(write_realization(&dir, manifest, &spec, oracle, &r)?);
    }
    let report = RunReport {
        out: manifest.out.clone(),
        seeds,
    };
    fs::write(
        manifest.out.join("summary.json"),
        serde_json::to_string_pretty(&report.seeds)? + "\n",
    )?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Dt,
    Dx,
    #[serde(rename = "I")]
    TotalCount,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dt" => Ok(Self::Dt),
            "dx" => Ok(Self::Dx),
            "I" | "i" => Ok(Self::TotalCount),
            other => Err(Error::Config(format!(
                "unknown sweep axis '{other}'; expected dt, dx or I"
            ))),
        }
    }
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Dt => "dt",
            Self::Dx => "dx",
            Self::TotalCount => "I",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub seed: u64,
    pub terminal_abs: Option<f64>,
    pub max_rel: Option<f64>,
    pub slope: Option<f64>,
    pub status: String,
}

fn apply_axis(base: &RunManifest, axis: SweepAxis, value: f64) -> Result<RunManifest> {
    let mut m = base.clone();
    match axis {
        SweepAxis::Dt => m.dt = Some(value),
        SweepAxis::Dx => m.dx = Some(value),
        SweepAxis::TotalCount => {
            if value < 1.0 || value.fract() != 0.0 {
                return Err(Error::Config(format!(
                    "I must be a positive integer, got {value}"
                )));
            }
            m.total_count = value as u32;
        }
    }
    Ok(m)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".into(), |v| format!("{v:.12e}"))
}

/// Runs the base manifest once per value on `axis` (and per seed) and writes
/// `sweep.csv` into the output directory. Every configuration is validated
/// before anything runs; a diverged run is recorded in its row.
pub fn sweep(base: &RunManifest, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let prepared = values
        .iter()
        .map(|&v| {
            let m = apply_axis(base, axis, v)?;
            let (spec, oracle) = m.prepare()?;
            let scheme = m.scheme()?;
            Ok((v, spec, oracle, scheme))
        })
        .collect::<Result<Vec<_>>>()?;
    let path_modes = prepared
        .iter()
        .map(|p| p.3.mode_count())
        .max()
        .unwrap_or(0);
    let mut rows = Vec::new();
    for (value, spec, oracle, scheme) in &prepared {
        for &seed in &base.seeds {
            let row = match realize_with_path(spec, scheme, *oracle, seed, path_modes) {
                Ok(r) => {
                    let e = r.errors.as_ref();
                    SweepRow {
                        value: *value,
                        seed,
                        terminal_abs: e.map(|e| e.terminal_abs()),
                        max_rel: e.and_then(|e| e.max_rel()),
                        slope: e.and_then(|e| e.slope_fit.map(|f| f.slope)),
                        status: "ok".into(),
                    }
                }
                Err(Error::Divergence { .. }) => SweepRow {
                    value: *value,
                    seed,
                    terminal_abs: None,
                    max_rel: None,
                    slope: None,
                    status: "diverged".into(),
                },
                Err(e) => return Err(e),
            };
            rows.push(row);
        }
    }
    fs::create_dir_all(&base.out)?;
    let mut csv = base.header()?;
    let _ = writeln!(csv, "# axis={axis}");
    csv.push_str("value,seed,terminal_abs,max_rel,slope,status\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.value,
            r.seed,
            opt(r.terminal_abs),
            opt(r.max_rel),
            opt(r.slope),
            r.status
        );
    }
    fs::write(base.out.join("sweep.csv"), csv)?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_nonlinear_experiments() {
        let m = RunManifest::new("tp1", "out");
        let (spec, oracle) = m.prepare().unwrap();
        assert_eq!(oracle, OracleKind::Transform);
        assert_eq!(spec.grid.dt, 0.005);
        assert_eq!(spec.grid.dx, 0.2);
        let s = m.scheme().unwrap();
        assert_eq!((s.gaussian_count, s.total_count), (40, 60));
    }

    #[test]
    fn unknown_problem_is_a_config_error() {
        let err = RunManifest::new("tp9", "out").prepare().unwrap_err();
        assert_eq!(exit_code(&err), 2);
    }

    #[test]
    fn unstable_grid_needs_force() {
        let mut m = RunManifest::new("tp1", "out");
        m.dt = Some(0.02);
        assert!(matches!(m.prepare(), Err(Error::Config(_))));
        m.force = true;
        assert!(m.prepare().is_ok());
    }

    #[test]
    fn snapshot_times_must_be_levels() {
        let spec = builtin_problem(Builtin::Tp1);
        assert_eq!(snapshot_steps(&spec, &[1.0, 3.0]).unwrap(), vec![200, 600]);
        assert!(snapshot_steps(&spec, &[3.5]).is_err());
        assert!(snapshot_steps(&spec, &[0.0012]).is_err());
    }

    #[test]
    fn probe_nodes() {
        assert_eq!(probe_node(&builtin_problem(Builtin::Tp1)), 50);
        let tp2 = builtin_problem(Builtin::Tp2);
        assert!((tp2.grid.x(probe_node(&tp2)) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn exit_codes() {
        let d = Error::Divergence {
            step: 1,
            time: 0.1,
            component: "u_0".into(),
        };
        assert_eq!(exit_code(&d), 3);
        let e = Error::DomainExhausted {
            max_shift: 1.0,
            margin: 0.5,
        };
        assert_eq!(exit_code(&e), 4);
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
    }

    #[test]
    fn empty_sweep_is_rejected() {
        let m = RunManifest::new("linear_test", "out");
        assert!(matches!(sweep(&m, SweepAxis::Dt, &[]), Err(Error::Config(_))));
    }
}
