//! Explicit barriers `f(θ) + α(ρ₀ − ρ)` on `{ρ₁ ≤ ρ ≤ ρ₀}`.
//!
//! A large positive slope gives an upper barrier `h` with `Div(Gh/W) ≤ 1`,
//! a large negative one a lower barrier `k` with `Div(Gk/W) ≥ 1`. The slope
//! is found by doubling from the height constraint and every candidate is
//! certified node by node on the working grid and on its refinement.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ModelParams;
use crate::graph::mean_curvature;
use crate::grid::{AnnularGrid, GridSection};
use crate::scheme::twist;

pub const MAX_DOUBLINGS: usize = 60;

/// Barrier request; `f` holds samples of the outer trace at `θ_j = 2πj/n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierSpec {
    pub rho0: f64,
    pub rho1: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub tau: f64,
    pub f: Vec<f64>,
}

impl BarrierSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho1 > 0.0 && self.rho0 > self.rho1 && self.rho0.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "barrier radii need 0 < rho1 < rho0, got rho1 = {}, rho0 = {}",
                self.rho1, self.rho0
            )));
        }
        if !(self.m.is_finite() && self.tau.is_finite()) {
            return Err(Error::InvalidInput("non-finite barrier parameters".into()));
        }
        if self.f.len() < 8 || self.f.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "boundary data needs at least 8 finite samples".into(),
            ));
        }
        Ok(())
    }

    pub fn grid(&self, n_rho: usize) -> Result<AnnularGrid> {
        AnnularGrid::new(self.rho1, self.rho0, n_rho, self.f.len())
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::hyperbolic(self.tau, 0.5)
    }

    fn min_f(&self) -> f64 {
        self.f.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn max_f(&self) -> f64 {
        self.f.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Upper barrier: `2H ≤ 1`.
    Above,
    /// Lower barrier: `2H ≥ 1`.
    Below,
}

impl Direction {
    fn name(self) -> &'static str {
        match self {
            Direction::Above => "upper",
            Direction::Below => "lower",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierReport {
    pub direction: Direction,
    pub min_excess: f64,
    pub max_excess: f64,
    /// Largest violation of the inequality (non-positive when it holds).
    pub max_violation: f64,
    /// `max |s − f|` on the outer circle, when the data is known.
    pub trace_error: f64,
    pub pass: bool,
}

/// Evaluates `2H − 1` of a section against the requested inequality.
pub fn verify_barrier(s: &GridSection, direction: Direction) -> BarrierReport {
    let h = mean_curvature(s);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in &h {
        let e = 2.0 * v - 1.0;
        lo = lo.min(e);
        hi = hi.max(e);
    }
    let max_violation = match direction {
        Direction::Above => hi,
        Direction::Below => -lo,
    };
    BarrierReport {
        direction,
        min_excess: lo,
        max_excess: hi,
        max_violation,
        trace_error: 0.0,
        pass: max_violation <= 0.0,
    }
}

/// Certified barrier.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Barrier {
    pub alpha: f64,
    pub doublings: usize,
    #[serde(skip)]
    pub section: GridSection,
    pub working: BarrierReport,
    pub refined: BarrierReport,
    /// Margin of the inner height constraint, `h(ρ₁) − M` or `M − k(ρ₁)`.
    pub height_margin: f64,
    /// The certificate re-run at slope `2α`.
    pub holds_at_double: bool,
}

/// Values of the trigonometric interpolant of periodic samples at `n` equally
/// spaced angles.
pub fn resample_periodic(samples: &[f64], n: usize) -> Vec<f64> {
    let m = samples.len();
    let half = m / 2;
    let mut a = vec![0.0; half + 1];
    let mut b = vec![0.0; half + 1];
    for k in 0..=half {
        for (j, v) in samples.iter().enumerate() {
            let phase = 2.0 * PI * (k * j) as f64 / m as f64;
            a[k] += v * phase.cos();
            b[k] += v * phase.sin();
        }
        let scale = if k == 0 || (m % 2 == 0 && k == half) { 1.0 } else { 2.0 };
        a[k] *= scale / m as f64;
        b[k] *= scale / m as f64;
    }
    (0..n)
        .map(|j| {
            let theta = 2.0 * PI * j as f64 / n as f64;
            (0..=half)
                .map(|k| a[k] * (k as f64 * theta).cos() + b[k] * (k as f64 * theta).sin())
                .sum()
        })
        .collect()
}

/// `f(θ) + α(ρ₀ − ρ)` on `grid` (outer circle at `ρ₀`).
pub fn barrier_section(f: &[f64], alpha: f64, grid: AnnularGrid, params: ModelParams) -> Result<GridSection> {
    if f.len() != grid.n_theta {
        return Err(Error::InvalidInput("boundary data does not match the grid".into()));
    }
    let rho0 = grid.rho_max;
    let mut values = Vec::with_capacity(grid.len());
    for i in 0..grid.n_rho {
        let lift = alpha * (rho0 - grid.rho(i));
        values.extend(f.iter().map(|v| v + lift));
    }
    GridSection::new(grid, params, values)
}

fn certify(
    spec: &BarrierSpec,
    alpha: f64,
    grid: AnnularGrid,
    refined_f: &[f64],
    direction: Direction,
) -> Result<(GridSection, BarrierReport, BarrierReport)> {
    let params = spec.params()?;
    let s = barrier_section(&spec.f, alpha, grid, params)?;
    let mut working = verify_barrier(&s, direction);
    let outer = s.row(grid.n_rho - 1);
    working.trace_error = outer
        .iter()
        .zip(&spec.f)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let fine = barrier_section(refined_f, alpha, grid.refined(), params)?;
    let refined = verify_barrier(&fine, direction);
    Ok((s, working, refined))
}

fn build(spec: &BarrierSpec, n_rho: usize, direction: Direction) -> Result<Barrier> {
    spec.validate()?;
    let grid = spec.grid(n_rho)?;
    let refined_f = resample_periodic(&spec.f, 2 * spec.f.len());
    let width = spec.rho0 - spec.rho1;
    let (sign, start) = match direction {
        Direction::Above => (1.0, ((spec.m - spec.min_f()) / width).max(1.0)),
        Direction::Below => (-1.0, ((spec.m - spec.max_f()) / width).min(-1.0)),
    };
    let mut alpha = start;
    let inner_margin = |alpha: f64| -> f64 {
        let lift = alpha * (spec.rho0 - grid.rho(0));
        match direction {
            Direction::Above => spec.min_f() + lift - spec.m,
            Direction::Below => spec.m - (spec.max_f() + lift),
        }
    };
    // the quotient can round to a slope that misses the height target by an ulp
    while inner_margin(alpha) < 0.0 {
        alpha += sign * alpha.abs() * f64::EPSILON;
    }
    let mut worst = f64::INFINITY;
    for doublings in 0..=MAX_DOUBLINGS {
        let (section, working, refined) = certify(spec, alpha, grid, &refined_f, direction)?;
        if working.pass && refined.pass {
            let (_, w2, r2) = certify(spec, 2.0 * alpha, grid, &refined_f, direction)?;
            return Ok(Barrier {
                alpha,
                doublings,
                section,
                height_margin: inner_margin(alpha),
                holds_at_double: w2.pass && r2.pass,
                working,
                refined,
            });
        }
        worst = working.max_violation.max(refined.max_violation);
        if doublings < MAX_DOUBLINGS {
            alpha *= 2.0;
        }
    }
    Err(Error::BarrierSearch {
        direction: direction.name(),
        doublings: MAX_DOUBLINGS,
        max_violation: worst,
    })
}

/// Upper barrier `h` with `h = f` on `{ρ = ρ₀}`, `h ≥ M` on `{ρ = ρ₁}` and
/// `2H[h] ≤ 1` at every node.
pub fn build_upper_barrier(spec: &BarrierSpec, n_rho: usize) -> Result<Barrier> {
    build(spec, n_rho, Direction::Above)
}

/// Lower barrier `k` with `k = f` on `{ρ = ρ₀}`, `k ≤ M` on `{ρ = ρ₁}` and
/// `2H[k] ≥ 1` at every node.
pub fn build_lower_barrier(spec: &BarrierSpec, n_rho: usize) -> Result<Barrier> {
    build(spec, n_rho, Direction::Below)
}

/// Closed-form `Div(Gh/W)` of `f(θ) + α(ρ₀ − ρ)` from `f′` and `f″`.
pub fn closed_form_divergence(tau: f64, alpha: f64, rho: f64, df: f64, d2f: f64) -> f64 {
    let sh = rho.sinh();
    let b = df / sh - twist(tau, rho);
    let w = (1.0 + alpha * alpha + b * b).sqrt();
    let w3 = w * w * w;
    // ∂ρ b = −f′ cosh ρ / sinh² ρ − τ / cosh²(ρ/2)
    let c = (0.5 * rho).cosh();
    let db_drho = -df * rho.cosh() / (sh * sh) - tau / (c * c);
    let db_dtheta = d2f / sh;
    -alpha * rho.cosh() / sh / w + alpha * b * db_drho / w3 + (db_dtheta / w - b * b * db_dtheta / w3) / sh
}

/// JSON-facing summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierSummary {
    pub alpha: f64,
    pub max_violation: f64,
    pub pass: bool,
}

impl From<&Barrier> for BarrierSummary {
    fn from(b: &Barrier) -> Self {
        Self {
            alpha: b.alpha,
            max_violation: b.working.max_violation.max(b.refined.max_violation),
            pass: b.working.pass && b.refined.pass,
        }
    }
}
