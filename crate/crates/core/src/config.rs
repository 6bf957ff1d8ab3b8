//! Experiment files.
//!
//! An experiment is a JSON object with a schema tag, the model, optional
//! solver settings and exactly one experiment section:
//!
//! ```json
//! {
//!   "schema": "cmclab/1",
//!   "seed": 7,
//!   "model": { "tau": "0", "h0": "0.5" },
//!   "solver": { "newton_tol": "1e-10" },
//!   "experiment": { "solve": { ... } }
//! }
//! ```
//!
//! Every real parameter is written as a decimal string so that files read the
//! same everywhere; unknown fields are rejected.

use std::fmt;
use std::path::PathBuf;

use serde::de::{self, Deserializer, Visitor};
use serde::Deserialize;

use crate::barrier::BarrierSpec;
use crate::error::{Error, Result};
use crate::foliation::{Bump, Competitor};
use crate::geometry::ModelParams;
use crate::graph::SmoothSection;
use crate::grid::AnnularGrid;
use crate::solver::continuation::RadiiSchedule;
use crate::solver::{radial_ode_oracle, RadialProfile, SectionProvider, SolverConfig};

pub const SCHEMA: &str = "cmclab/1";

/// Parses `[+-]digits[.digits][(e|E)[+-]digits]`, with digits on at least one
/// side of the point. Words such as `inf` or `NaN` and hexadecimal forms are
/// rejected, as are results that overflow.
pub fn parse_decimal(s: &str) -> Result<f64> {
    let bytes = s.as_bytes();
    let mut i = 0;
    let digits = |i: &mut usize| {
        let start = *i;
        while *i < bytes.len() && bytes[*i].is_ascii_digit() {
            *i += 1;
        }
        *i - start
    };
    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
        i += 1;
    }
    let mut mantissa = digits(&mut i);
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        mantissa += digits(&mut i);
    }
    let mut ok = mantissa > 0;
    if ok && i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        i += 1;
        if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
            i += 1;
        }
        ok = digits(&mut i) > 0;
    }
    if !ok || i != bytes.len() {
        return Err(Error::Config(format!("`{s}` is not a decimal number")));
    }
    let v: f64 = s
        .parse()
        .map_err(|_| Error::Config(format!("`{s}` is not a decimal number")))?;
    if !v.is_finite() {
        return Err(Error::Config(format!("`{s}` is out of range")));
    }
    Ok(v)
}

/// A real number written as a decimal string.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decimal(pub f64);

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Decimal;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a decimal number as a string")
            }
            fn visit_str<E: de::Error>(self, s: &str) -> std::result::Result<Decimal, E> {
                parse_decimal(s).map(Decimal).map_err(E::custom)
            }
        }
        d.deserialize_str(V)
    }
}

fn reals(v: &[Decimal]) -> Vec<f64> {
    v.iter().map(|d| d.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Solve,
    Barrier,
    Foliate,
    Derivative,
    Sister,
    Audit,
    Halfspace,
    Convergence,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Barrier => "barrier",
            Command::Foliate => "foliate",
            Command::Derivative => "derivative",
            Command::Sister => "sister",
            Command::Audit => "audit",
            Command::Halfspace => "halfspace",
            Command::Convergence => "convergence",
        }
    }
}

impl std::str::FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.into()))
            .map_err(|_| Error::Config(format!("unknown command `{s}`")))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default)]
    pub kappa: Option<Decimal>,
    pub tau: Decimal,
    #[serde(default)]
    pub h0: Option<Decimal>,
}

impl ModelSpec {
    pub fn params(&self) -> Result<ModelParams> {
        let kappa = self.kappa.map_or(-1.0, |d| d.0);
        let h0 = self.h0.map_or(0.5, |d| d.0);
        if kappa != -1.0 {
            return Err(Error::Config("experiments run in the κ = −1 model".into()));
        }
        ModelParams::new(kappa, self.tau.0, h0).map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub newton_tol: Option<Decimal>,
    pub max_newton: Option<usize>,
    pub min_damping: Option<Decimal>,
    pub continuation_steps: Option<usize>,
    pub fd_epsilon: Option<Decimal>,
    pub ellipticity_floor: Option<Decimal>,
}

impl SolverSpec {
    pub fn config(&self) -> Result<SolverConfig> {
        let d = SolverConfig::default();
        let c = SolverConfig {
            newton_tol: self.newton_tol.map_or(d.newton_tol, |v| v.0),
            max_newton: self.max_newton.unwrap_or(d.max_newton),
            min_damping: self.min_damping.map_or(d.min_damping, |v| v.0),
            continuation_steps: self.continuation_steps.unwrap_or(d.continuation_steps),
            fd_epsilon: self.fd_epsilon.map_or(d.fd_epsilon, |v| v.0),
            ellipticity_floor: self.ellipticity_floor.map_or(d.ellipticity_floor, |v| v.0),
        };
        c.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub rho_min: Decimal,
    pub rho_max: Decimal,
    pub n_rho: usize,
    pub n_theta: usize,
}

impl GridSpec {
    pub fn grid(&self) -> Result<AnnularGrid> {
        AnnularGrid::new(self.rho_min.0, self.rho_max.0, self.n_rho, self.n_theta)
            .map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiiSpec {
    pub inner: Decimal,
    pub outer: Vec<Decimal>,
    pub d_rho: Decimal,
    pub n_theta: usize,
}

impl RadiiSpec {
    pub fn schedule(&self) -> Result<RadiiSchedule> {
        RadiiSchedule::new(self.inner.0, reals(&self.outer), self.d_rho.0, self.n_theta)
            .map_err(|e| Error::Config(e.to_string()))
    }
}

/// Perturbation `a ρ cos(mθ)` added to a radial profile.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TiltSpec {
    pub amplitude: Decimal,
    pub mode: u32,
}

/// The data `σ`: a radial profile from the first integral, optionally tilted
/// (the tilted section is not a solution and only provides boundary values or
/// a manufactured right-hand side).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaSpec {
    /// Constant of the first integral; `0` gives the entire graph.
    #[serde(default)]
    pub c: Option<Decimal>,
    /// Largest radius the profile must reach.
    pub rho_max: Decimal,
    /// Profile start for `c ≠ 0`; the entire graph starts at the origin.
    #[serde(default)]
    pub rho_min: Option<Decimal>,
    /// Height added to the profile, which vanishes at its start.
    #[serde(default)]
    pub offset: Option<Decimal>,
    #[serde(default)]
    pub tilt: Option<TiltSpec>,
}

/// A section given in closed form up to quadrature.
#[derive(Debug, Clone, Copy)]
pub struct Sigma {
    pub profile: RadialProfile,
    pub offset: f64,
    pub tilt: Option<(f64, u32)>,
}

impl Sigma {
    /// The radial profile is an exact solution when untilted.
    pub fn is_exact(&self) -> bool {
        self.tilt.is_none()
    }
}

impl SigmaSpec {
    pub fn build(&self, params: &ModelParams) -> Result<Sigma> {
        let c = self.c.map_or(0.0, |d| d.0);
        let entire = c == 0.0 && self.rho_min.is_none();
        let lo = self.rho_min.map_or(0.0, |d| d.0);
        let profile = radial_ode_oracle(params, (lo, self.rho_max.0), entire, c)?;
        Ok(Sigma {
            profile,
            offset: self.offset.map_or(0.0, |d| d.0),
            tilt: self.tilt.as_ref().map(|t| (t.amplitude.0, t.mode)),
        })
    }
}

impl SectionProvider for Sigma {
    fn value(&self, rho: f64, theta: f64) -> Result<f64> {
        let tilt = self.tilt.map_or(0.0, |(a, m)| a * rho * (m as f64 * theta).cos());
        Ok(self.profile.eval(rho)? + self.offset + tilt)
    }

    fn is_radial(&self) -> bool {
        self.tilt.is_none_or(|(a, m)| a == 0.0 || m == 0)
    }
}

impl SmoothSection for Sigma {
    fn value(&self, rho: f64, theta: f64) -> f64 {
        SectionProvider::value(self, rho, theta).unwrap_or(f64::NAN)
    }

    fn derivatives(&self, rho: f64, theta: f64) -> (f64, f64) {
        let (dr, _) = self.profile.derivatives(rho, theta);
        match self.tilt {
            Some((a, m)) => {
                let mt = m as f64 * theta;
                (dr + a * mt.cos(), -a * rho * m as f64 * mt.sin())
            }
            None => (dr, 0.0),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSpec {
    pub grid: GridSpec,
    pub sigma: SigmaSpec,
}

/// Boundary data `f` and the other barrier inputs, reals as decimal strings.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineBarrierSpec {
    pub rho0: Decimal,
    pub rho1: Decimal,
    #[serde(rename = "M")]
    pub m: Decimal,
    pub tau: Decimal,
    pub f: Vec<Decimal>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierRun {
    /// Inline data; exclusive with `spec_file`.
    #[serde(default)]
    pub spec: Option<InlineBarrierSpec>,
    /// Path of a plain barrier file `{rho0, rho1, M, tau, f}` with JSON
    /// numbers, relative to the experiment file.
    #[serde(default)]
    pub spec_file: Option<PathBuf>,
    pub n_rho: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FoliateSpec {
    pub sigma: SigmaSpec,
    pub radii: RadiiSpec,
    pub delta: Decimal,
    pub t_count: usize,
    pub a1_outer: Decimal,
    /// Bisection steps for the probe that bounds `δ`; no probe when absent.
    #[serde(default)]
    pub probe_bisections: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DerivativeSpec {
    pub sigma: SigmaSpec,
    pub radii: RadiiSpec,
    pub t_bar: Decimal,
    pub eps: Vec<Decimal>,
    pub a1_outer: Decimal,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SisterSpec {
    pub grid: GridSpec,
    pub sigma: SigmaSpec,
    /// Random nodes for the potential identity sweep.
    pub samples: usize,
    /// Refinement levels (radial cells, `n_theta = 2n`) for the convergence
    /// of the ν-Jacobi residual and the flat-chart curvature.
    #[serde(default)]
    pub levels: Vec<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    pub points: usize,
    /// `(κ, τ)` pairs.
    pub params: Vec<[Decimal; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSpec {
    #[serde(default)]
    pub geometry: Option<GeometrySpec>,
    pub grid: GridSpec,
    pub sigma: SigmaSpec,
    pub alphas: Vec<Decimal>,
    pub nu0s: Vec<Decimal>,
    pub center: [usize; 2],
    pub radius: Decimal,
    pub ks: Vec<Decimal>,
    pub nu1s: Vec<Decimal>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompetitorSpec {
    pub offset: Decimal,
    #[serde(default)]
    pub bump: Option<BumpSpec>,
    #[serde(default)]
    pub well_oriented: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub amplitude: Decimal,
    pub rho: Decimal,
    pub theta: Decimal,
    pub width: Decimal,
}

impl CompetitorSpec {
    pub fn competitor(&self) -> Competitor {
        Competitor {
            offset: self.offset.0,
            bump: self.bump.as_ref().map(|b| Bump {
                amplitude: b.amplitude.0,
                rho: b.rho.0,
                theta: b.theta.0,
                width: b.width.0,
            }),
            well_oriented: self.well_oriented.unwrap_or(true),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfspaceSpec {
    pub sigma: SigmaSpec,
    pub radii: RadiiSpec,
    pub delta: Decimal,
    pub t_count: usize,
    pub a1_outer: Decimal,
    pub competitor: CompetitorSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSpec {
    pub sigma: SigmaSpec,
    pub rho_min: Decimal,
    pub rho_max: Decimal,
    /// Radial cell counts, one per level.
    pub levels: Vec<usize>,
    /// `n_theta = theta_ratio · n` at each level.
    #[serde(default)]
    pub theta_ratio: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Experiment {
    Solve(SolveSpec),
    Barrier(BarrierRun),
    Foliate(FoliateSpec),
    Derivative(DerivativeSpec),
    Sister(SisterSpec),
    Audit(AuditSpec),
    Halfspace(HalfspaceSpec),
    Convergence(ConvergenceSpec),
}

impl Experiment {
    pub fn command(&self) -> Command {
        match self {
            Experiment::Solve(_) => Command::Solve,
            Experiment::Barrier(_) => Command::Barrier,
            Experiment::Foliate(_) => Command::Foliate,
            Experiment::Derivative(_) => Command::Derivative,
            Experiment::Sister(_) => Command::Sister,
            Experiment::Audit(_) => Command::Audit,
            Experiment::Halfspace(_) => Command::Halfspace,
            Experiment::Convergence(_) => Command::Convergence,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: String,
    #[serde(default)]
    pub seed: Option<u64>,
    pub model: ModelSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    pub experiment: Experiment,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if c.schema != SCHEMA {
            return Err(Error::Config(format!(
                "schema `{}` is not supported, expected `{SCHEMA}`",
                c.schema
            )));
        }
        c.model.params()?;
        c.solver.config()?;
        Ok(c)
    }

    pub fn command(&self) -> Command {
        self.experiment.command()
    }
}

/// Reads a plain barrier file, `{rho0, rho1, M, tau, f}` with JSON numbers.
pub fn parse_barrier_file(text: &str) -> Result<BarrierSpec> {
    let spec: BarrierSpec = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    spec.validate().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(spec)
}

impl InlineBarrierSpec {
    pub fn spec(&self) -> Result<BarrierSpec> {
        let spec = BarrierSpec {
            rho0: self.rho0.0,
            rho1: self.rho1.0,
            m: self.m.0,
            tau: self.tau.0,
            f: reals(&self.f),
        };
        spec.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(spec)
    }
}
