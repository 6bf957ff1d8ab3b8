//! Continuation in the boundary lift `t`: `u = σ + t` on the inner circle,
//! `u = σ` on the outer one.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::ModelParams;
use crate::grid::{AnnularGrid, GridSection};
use crate::solver::{newton_solve_dirichlet, sample, BoundaryTraces, SectionProvider, SolveReport, SolverConfig};

/// Maximum number of step halvings before continuation gives up.
pub const MAX_BISECTION_DEPTH: u32 = 8;

/// Nested annuli `{r₀ ≤ ρ ≤ r_n}` sharing the radial spacing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiiSchedule {
    pub inner: f64,
    pub outer: Vec<f64>,
    pub d_rho: f64,
    pub n_theta: usize,
}

impl RadiiSchedule {
    pub fn new(inner: f64, outer: Vec<f64>, d_rho: f64, n_theta: usize) -> Result<Self> {
        if outer.is_empty() || outer.windows(2).any(|w| w[1] <= w[0]) || outer[0] <= inner {
            return Err(Error::InvalidInput(
                "outer radii must increase and exceed the inner radius".into(),
            ));
        }
        let s = Self {
            inner,
            outer,
            d_rho,
            n_theta,
        };
        for n in 0..s.outer.len() {
            s.grid(n)?;
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.outer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outer.is_empty()
    }

    /// Grid of the `n`-th annulus.
    pub fn grid(&self, n: usize) -> Result<AnnularGrid> {
        let r = self.outer[n];
        let cells = (r - self.inner) / self.d_rho;
        let rounded = cells.round();
        if (cells - rounded).abs() > 1e-9 * cells.max(1.0) {
            return Err(Error::InvalidInput(format!(
                "radius {r} is not a whole number of steps {} from {}",
                self.d_rho, self.inner
            )));
        }
        AnnularGrid::new(self.inner, r, rounded as usize + 1, self.n_theta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuationReport {
    pub t: f64,
    /// Lifts at which a solve was accepted, in order.
    pub accepted: Vec<f64>,
    pub bisections: usize,
    pub solves: Vec<SolveReport>,
}

/// Spacing of the lattice the traces of `σ` are rounded to. Lifts and
/// difference steps that are multiples of it are then added without rounding,
/// so difference quotients see their boundary values exactly.
pub const TRACE_QUANTUM: f64 = 1.0 / 4_294_967_296.0;

fn quantize(v: f64) -> f64 {
    (v / TRACE_QUANTUM).round() * TRACE_QUANTUM
}

/// Boundary traces of `σ` on the grid's two circles, rounded to multiples of
/// [`TRACE_QUANTUM`].
pub fn sigma_traces(sigma: &dyn SectionProvider, grid: &AnnularGrid) -> Result<BoundaryTraces> {
    let mut traces = BoundaryTraces::from_provider(sigma, grid)?;
    for v in traces.inner.iter_mut().chain(traces.outer.iter_mut()) {
        *v = quantize(*v);
    }
    Ok(traces)
}

fn lifted(base: &BoundaryTraces, t: f64) -> BoundaryTraces {
    BoundaryTraces {
        inner: base.inner.iter().map(|v| v + t).collect(),
        outer: base.outer.clone(),
    }
}

fn recoverable(e: &Error) -> bool {
    matches!(
        e,
        Error::NonConvergence { .. } | Error::EllipticityLost { .. } | Error::LinearSolve(_)
    )
}

struct Stepper<'a> {
    base: &'a BoundaryTraces,
    config: &'a SolverConfig,
    report: ContinuationReport,
}

impl Stepper<'_> {
    fn advance(&mut self, from: (f64, GridSection), to: f64, depth: u32) -> Result<GridSection> {
        match newton_solve_dirichlet(&from.1, &lifted(self.base, to), self.config) {
            Ok((s, rep)) => {
                self.report.accepted.push(to);
                self.report.solves.push(rep);
                Ok(s)
            }
            Err(e) if recoverable(&e) => {
                if depth >= MAX_BISECTION_DEPTH {
                    return Err(Error::ContinuationExhausted { t: from.0 });
                }
                self.report.bisections += 1;
                let mid = 0.5 * (from.0 + to);
                let s_mid = self.advance(from, mid, depth + 1)?;
                self.advance((mid, s_mid), to, depth + 1)
            }
            Err(e) => Err(e),
        }
    }
}

/// The discrete solution `σ_n` with the traces of `σ` (lift 0), started from
/// the sampled section.
pub fn base_solution(
    sigma: &dyn SectionProvider,
    grid: AnnularGrid,
    params: ModelParams,
    config: &SolverConfig,
) -> Result<(GridSection, SolveReport)> {
    let init = sample(sigma, grid, params)?;
    let traces = sigma_traces(sigma, &grid)?;
    newton_solve_dirichlet(&init, &traces, config)
}

/// Solutions for every lift in `lifts` (non-decreasing, non-negative),
/// each reached from the previous one in `continuation_steps` increments.
pub fn continuation_path(
    sigma: &dyn SectionProvider,
    lifts: &[f64],
    grid: AnnularGrid,
    params: ModelParams,
    config: &SolverConfig,
) -> Result<Vec<(GridSection, ContinuationReport)>> {
    if lifts.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || lifts.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput(
            "lifts must be finite, non-negative and sorted".into(),
        ));
    }
    config.validate()?;
    let base = sigma_traces(sigma, &grid)?;
    let (mut current, base_report) = base_solution(sigma, grid, params, config)?;
    let mut t_now = 0.0;
    let mut out = Vec::with_capacity(lifts.len());
    let mut first = Some(base_report);
    for &t in lifts {
        let mut stepper = Stepper {
            base: &base,
            config,
            report: ContinuationReport {
                t,
                accepted: Vec::new(),
                bisections: 0,
                solves: first.take().into_iter().collect(),
            },
        };
        if t > t_now {
            let m = config.continuation_steps;
            for k in 1..=m {
                let target = if k == m {
                    t
                } else {
                    t_now + (t - t_now) * k as f64 / m as f64
                };
                let prev = stepper.report.accepted.last().copied().unwrap_or(t_now);
                current = stepper.advance((prev, current), target, 0)?;
            }
        } else {
            stepper.report.accepted.push(t);
        }
        t_now = t;
        out.push((current.clone(), stepper.report));
    }
    Ok(out)
}

/// `u_{t,n}` on `grid`.
pub fn continuation_solve(
    sigma: &dyn SectionProvider,
    t: f64,
    grid: AnnularGrid,
    params: ModelParams,
    config: &SolverConfig,
) -> Result<(GridSection, ContinuationReport)> {
    let mut path = continuation_path(sigma, &[t], grid, params, config)?;
    Ok(path.pop().expect("one lift requested"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    /// Largest lift for which continuation succeeded.
    pub certified: f64,
    pub attempts: Vec<(f64, bool)>,
}

/// Bisects `[0, t_max]` for the largest lift reachable by continuation.
pub fn probe_delta(
    sigma: &dyn SectionProvider,
    t_max: f64,
    bisections: usize,
    grid: AnnularGrid,
    params: ModelParams,
    config: &SolverConfig,
) -> Result<ProbeReport> {
    let mut attempts = Vec::new();
    let mut try_lift = |t: f64| -> Result<bool> {
        let ok = match continuation_solve(sigma, t, grid, params, config) {
            Ok(_) => true,
            Err(Error::ContinuationExhausted { .. }) => false,
            Err(e) if recoverable(&e) => false,
            Err(e) => return Err(e),
        };
        attempts.push((t, ok));
        Ok(ok)
    };
    if try_lift(t_max)? {
        return Ok(ProbeReport {
            certified: t_max,
            attempts,
        });
    }
    let (mut lo, mut hi) = (0.0, t_max);
    for _ in 0..bisections {
        let mid = 0.5 * (lo + hi);
        if try_lift(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ProbeReport {
        certified: lo,
        attempts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::radial::radial_ode_oracle;

    #[test]
    fn schedule_validation() {
        assert!(RadiiSchedule::new(0.5, vec![1.5, 2.5], 0.25, 16).is_ok());
        assert!(RadiiSchedule::new(0.5, vec![1.5, 1.0], 0.25, 16).is_err());
        assert!(RadiiSchedule::new(0.5, vec![1.6], 0.25, 16).is_err());
        let s = RadiiSchedule::new(0.5, vec![1.5, 2.5], 0.25, 16).unwrap();
        assert_eq!(s.grid(1).unwrap().n_rho, 9);
    }

    #[test]
    fn zero_lift_reproduces_base() {
        let params = ModelParams::hyperbolic(0.0, 0.5).unwrap();
        let sigma = radial_ode_oracle(&params, (0.0, 3.0), true, 0.0).unwrap();
        let grid = AnnularGrid::new(0.5, 1.5, 11, 16).unwrap();
        let cfg = SolverConfig::default();
        let (base, _) = base_solution(&sigma, grid, params, &cfg).unwrap();
        let (u0, _) = continuation_solve(&sigma, 0.0, grid, params, &cfg).unwrap();
        assert_eq!(u0.values, base.values);
        let (u, rep) = continuation_solve(&sigma, 0.25, grid, params, &cfg).unwrap();
        assert_eq!(rep.accepted.last(), Some(&0.25));
        for j in 0..16 {
            assert_eq!(u.at(0, j), base.at(0, j) + 0.25);
            assert_eq!(u.at(10, j), base.at(10, j));
        }
    }

    struct Shifted<'a>(&'a dyn SectionProvider, f64);

    impl SectionProvider for Shifted<'_> {
        fn value(&self, rho: f64, theta: f64) -> Result<f64> {
            Ok(self.0.value(rho, theta)? + self.1)
        }
    }

    #[test]
    fn traces_lie_on_the_lattice() {
        let params = ModelParams::hyperbolic(0.3, 0.5).unwrap();
        let sigma = radial_ode_oracle(&params, (0.0, 3.0), true, 0.0).unwrap();
        let grid = AnnularGrid::new(0.5, 1.5, 11, 16).unwrap();
        let tr = sigma_traces(&sigma, &grid).unwrap();
        let exact = sigma.value(0.5, 0.0).unwrap();
        for v in tr.inner.iter().chain(&tr.outer) {
            assert_eq!((v / TRACE_QUANTUM).fract(), 0.0);
        }
        assert!((tr.inner[0] - exact).abs() <= 0.5 * TRACE_QUANTUM);
        let lift = 0.375;
        assert_eq!(tr.inner[0] + lift - tr.inner[0], lift);
    }

    #[test]
    fn vertical_translation_commutes_with_solving() {
        let params = ModelParams::hyperbolic(0.2, 0.5).unwrap();
        let sigma = radial_ode_oracle(&params, (0.0, 3.0), true, 0.0).unwrap();
        let grid = AnnularGrid::new(0.5, 1.5, 11, 16).unwrap();
        let cfg = SolverConfig::default();
        let (base, _) = base_solution(&sigma, grid, params, &cfg).unwrap();
        let (up, _) = base_solution(&Shifted(&sigma, 0.75), grid, params, &cfg).unwrap();
        for (a, b) in base.values.iter().zip(&up.values) {
            assert!((b - a - 0.75).abs() < 1e-11);
        }
    }

    #[test]
    fn lifted_solution_is_sandwiched() {
        let params = ModelParams::hyperbolic(0.0, 0.5).unwrap();
        let sigma = radial_ode_oracle(&params, (0.0, 3.0), true, 0.0).unwrap();
        let grid = AnnularGrid::new(0.5, 2.0, 16, 24).unwrap();
        let cfg = SolverConfig::default();
        let path = continuation_path(&sigma, &[0.0, 0.125, 0.25], grid, params, &cfg).unwrap();
        let tol = 10.0 * cfg.newton_tol;
        for w in path.windows(2) {
            let (lo, hi) = (&w[0].0, &w[1].0);
            let dt = w[1].1.t - w[0].1.t;
            for (a, b) in lo.values.iter().zip(&hi.values) {
                assert!(b - a >= -tol && b - a <= dt + tol);
            }
        }
    }
}
