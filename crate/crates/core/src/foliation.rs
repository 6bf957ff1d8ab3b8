//! The monotone family `u_t` obtained by lifting the inner boundary values of
//! an entire solution `σ`, its derivative in `t`, and the half-space sweep.
//!
//! Everything here runs on nested annuli `A_n = {r₀ ≤ ρ ≤ r_n}`. The limits
//! `n → ∞` of the continuous argument become finite schedules and the
//! reports record what the finite data show: maximum-principle orderings,
//! the gap `‖u_{δ,n} − (σ_n + δ)‖` on the fixed annulus
//! `A₁ = {r₀ ≤ ρ ≤ a₁}`, and difference quotients in `t`. Throughout, `σ_n`
//! is the discrete solution with the traces of `σ` on `A_n`.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::ModelParams;
use crate::graph::{jacobi_residual, mean_curvature};
use crate::grid::{AnnularGrid, GridSection};
use crate::solver::continuation::{continuation_path, ContinuationReport, RadiiSchedule};
use crate::solver::{sample, SectionProvider, SolverConfig};

/// Orderings are checked up to this multiple of the Newton tolerance.
pub const ORDER_SLACK: f64 = 10.0;

/// Rows of `grid` inside `A₁`.
fn a1_rows(grid: &AnnularGrid, a1_outer: f64) -> usize {
    (0..grid.n_rho).take_while(|&i| grid.rho(i) <= a1_outer + 1e-12).count()
}

/// `max |u − v|` over the rows inside `A₁`.
fn a1_max_abs(grid: &AnnularGrid, a1_outer: f64, f: impl Fn(usize) -> f64) -> f64 {
    let rows = a1_rows(grid, a1_outer);
    (0..rows * grid.n_theta).fold(0.0, |m, k| m.max(f(k).abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SandwichAudit {
    pub n: usize,
    pub t: f64,
    pub t_prime: f64,
    /// `max (u_t − u_{t′})`, non-positive when the family is monotone.
    pub below: f64,
    /// `max (u_{t′} − u_t − (t′ − t))`, non-positive for the Lipschitz bound.
    pub above: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapEntry {
    pub n: usize,
    pub outer_radius: f64,
    /// `‖u_{δ,n} − (σ_n + δ)‖_{L∞(A₁)}`.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuationFamily {
    pub delta: f64,
    pub lifts: Vec<f64>,
    pub schedule: RadiiSchedule,
    pub a1_outer: f64,
    pub tolerance: f64,
    /// `solutions[n][j]` is `u_{t_j, n}`; `t_0 = 0` so `solutions[n][0]` is `σ_n`.
    #[serde(skip)]
    pub solutions: Vec<Vec<GridSection>>,
    pub reports: Vec<Vec<ContinuationReport>>,
    pub audits: Vec<SandwichAudit>,
    pub sandwich_pass: bool,
    pub gaps: Vec<GapEntry>,
    /// Observed, not implied: the full sequence is used rather than a
    /// subsequence.
    pub gap_non_increasing: bool,
}

impl ContinuationFamily {
    pub fn base(&self, n: usize) -> &GridSection {
        &self.solutions[n][0]
    }

    pub fn top(&self, n: usize) -> &GridSection {
        self.solutions[n].last().expect("at least three lifts")
    }
}

fn sandwich(n: usize, lo: (f64, &GridSection), hi: (f64, &GridSection), tol: f64) -> SandwichAudit {
    let dt = hi.0 - lo.0;
    let (mut below, mut above) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (a, b) in lo.1.values.iter().zip(&hi.1.values) {
        below = below.max(a - b);
        above = above.max(b - a - dt);
    }
    SandwichAudit {
        n,
        t: lo.0,
        t_prime: hi.0,
        below,
        above,
        pass: below <= tol && above <= tol,
    }
}

fn check_family_inputs(delta: f64, t_count: usize, a1_outer: f64, schedule: &RadiiSchedule) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidInput("δ must be positive".into()));
    }
    if t_count < 3 {
        return Err(Error::InvalidInput("a family needs at least three lifts".into()));
    }
    if !(a1_outer > schedule.inner && a1_outer <= schedule.outer[0]) {
        return Err(Error::InvalidInput(
            "A₁ must lie inside the smallest annulus of the schedule".into(),
        ));
    }
    Ok(())
}

/// Solves `u_{t_j, n}` for `t_j = δ j/(t_count − 1)` on every annulus of the
/// schedule and audits all ordered pairs.
pub fn build_foliation(
    sigma: &dyn SectionProvider,
    delta: f64,
    schedule: &RadiiSchedule,
    t_count: usize,
    a1_outer: f64,
    params: ModelParams,
    config: &SolverConfig,
) -> Result<ContinuationFamily> {
    check_family_inputs(delta, t_count, a1_outer, schedule)?;
    let last = (t_count - 1) as f64;
    let lifts: Vec<f64> = (0..t_count).map(|j| delta * j as f64 / last).collect();
    let tol = ORDER_SLACK * config.newton_tol;
    let mut solutions = Vec::with_capacity(schedule.len());
    let mut reports = Vec::with_capacity(schedule.len());
    let mut audits = Vec::new();
    let mut gaps = Vec::with_capacity(schedule.len());
    for n in 0..schedule.len() {
        let grid = schedule.grid(n)?;
        let path = continuation_path(sigma, &lifts, grid, params, config)?;
        let (secs, reps): (Vec<GridSection>, Vec<ContinuationReport>) = path.into_iter().unzip();
        for a in 0..t_count {
            for b in a + 1..t_count {
                audits.push(sandwich(n, (lifts[a], &secs[a]), (lifts[b], &secs[b]), tol));
            }
        }
        let (base, top) = (&secs[0], &secs[t_count - 1]);
        gaps.push(GapEntry {
            n,
            outer_radius: schedule.outer[n],
            gap: a1_max_abs(&grid, a1_outer, |k| top.values[k] - base.values[k] - delta),
        });
        solutions.push(secs);
        reports.push(reps);
    }
    Ok(ContinuationFamily {
        delta,
        lifts,
        schedule: schedule.clone(),
        a1_outer,
        tolerance: tol,
        sandwich_pass: audits.iter().all(|a| a.pass),
        gap_non_increasing: gaps.windows(2).all(|w| w[1].gap <= w[0].gap),
        solutions,
        reports,
        audits,
        gaps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeEntry {
    pub eps: f64,
    /// Max-norm of the discrete Jacobi operator of `u_{t̄}` applied to `v_ε`.
    pub jacobi_residual: f64,
    /// `max |v_ε − 1|` on `A₁`.
    pub deviation: f64,
    pub min_v: f64,
    pub max_v: f64,
    /// `max |v_ε − 1|` on the inner circle.
    pub inner_trace_error: f64,
    /// Size of the residual explained by the two Newton residuals alone.
    pub noise: f64,
    /// Set when `noise` exceeds a tenth of the residual; such steps are left
    /// out of the extrapolation.
    pub below_noise_floor: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeField {
    pub t_bar: f64,
    pub outer_radius: f64,
    pub entries: Vec<DerivativeEntry>,
    /// `max |2 r(ε/2) − r(ε)|` from the last two usable steps, nodewise.
    pub richardson_limit: Option<f64>,
    /// `max |2H[σ] − 2H₀|` for `σ` sampled on the grid.
    pub truncation_estimate: f64,
    pub residual_decreasing: bool,
    pub limit_consistent: bool,
    pub bracketed: bool,
    /// `v_ε` for the smallest usable step.
    #[serde(skip)]
    pub field: Option<GridSection>,
}

/// Difference quotients `v_ε = (u_{t̄+ε} − u_{t̄})/ε` on `grid` for a
/// decreasing schedule of steps.
#[allow(clippy::too_many_arguments)]
pub fn numeric_derivative(
    sigma: &dyn SectionProvider,
    t_bar: f64,
    eps_schedule: &[f64],
    grid: AnnularGrid,
    a1_outer: f64,
    params: ModelParams,
    config: &SolverConfig,
) -> Result<DerivativeField> {
    if eps_schedule.is_empty()
        || eps_schedule.iter().any(|e| !(*e > 0.0))
        || eps_schedule.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::InvalidInput("steps must be positive and decreasing".into()));
    }
    if !(t_bar >= 0.0) {
        return Err(Error::InvalidInput("t̄ must be non-negative".into()));
    }
    let mut lifts = vec![t_bar];
    lifts.extend(eps_schedule.iter().rev().map(|e| t_bar + e));
    let path = continuation_path(sigma, &lifts, grid, params, config)?;
    let final_residual = |r: &ContinuationReport| r.solves.last().map_or(0.0, |s| s.final_residual);
    let (u_bar, rep_bar) = &path[0];
    let tol = ORDER_SLACK * config.newton_tol;
    let nt = grid.n_theta;
    let mut entries = Vec::with_capacity(eps_schedule.len());
    let mut residual_fields = Vec::with_capacity(eps_schedule.len());
    let mut field = None;
    for (m, &eps) in eps_schedule.iter().enumerate() {
        let (u, rep) = &path[eps_schedule.len() - m];
        let v: Vec<f64> = u.values.iter().zip(&u_bar.values).map(|(a, b)| (a - b) / eps).collect();
        let r = jacobi_residual(u_bar, &v);
        let jr = r.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let noise = (final_residual(rep) + final_residual(rep_bar)) / eps;
        let (min_v, max_v) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
            (lo.min(*x), hi.max(*x))
        });
        let entry = DerivativeEntry {
            eps,
            jacobi_residual: jr,
            deviation: a1_max_abs(&grid, a1_outer, |k| v[k] - 1.0),
            min_v,
            max_v,
            inner_trace_error: v[..nt].iter().fold(0.0f64, |a, x| a.max((x - 1.0).abs())),
            noise,
            below_noise_floor: noise > 0.1 * jr,
        };
        if !entry.below_noise_floor {
            field = Some(u.with_values(v)?);
        }
        entries.push(entry);
        residual_fields.push(r);
    }
    let usable: Vec<usize> = (0..entries.len()).filter(|&m| !entries[m].below_noise_floor).collect();
    let richardson_limit = match usable[..] {
        [.., a, b] => {
            let ratio = entries[a].eps / entries[b].eps;
            let lim = residual_fields[a]
                .iter()
                .zip(&residual_fields[b])
                .fold(0.0f64, |m, (ra, rb)| m.max(((ratio * rb - ra) / (ratio - 1.0)).abs()));
            Some(lim)
        }
        _ => None,
    };
    let sampled = sample(sigma, grid, params)?;
    let h = mean_curvature(&sampled);
    let truncation_estimate =
        (grid.n_theta..grid.len() - grid.n_theta).fold(0.0f64, |m, k| m.max((2.0 * (h[k] - params.h0)).abs()));
    let residual_decreasing = usable
        .windows(2)
        .all(|w| entries[w[1]].jacobi_residual < entries[w[0]].jacobi_residual);
    Ok(DerivativeField {
        t_bar,
        outer_radius: grid.rho_max,
        limit_consistent: richardson_limit.is_some_and(|l| l <= 10.0 * truncation_estimate),
        bracketed: entries
            .iter()
            .all(|e| e.min_v >= -tol / e.eps && e.max_v <= 1.0 + tol / e.eps),
        residual_decreasing,
        richardson_limit,
        truncation_estimate,
        entries,
        field,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationEntry {
    pub outer_radius: f64,
    pub eps: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeStudy {
    pub fields: Vec<DerivativeField>,
    /// Deviation on `A₁` at the smallest usable step of each annulus.
    pub deviations: Vec<DeviationEntry>,
    pub deviation_decreasing: bool,
}

/// [`numeric_derivative`] on every annulus of the schedule.
#[allow(clippy::too_many_arguments)]
pub fn derivative_study(
    sigma: &dyn SectionProvider,
    t_bar: f64,
    eps_schedule: &[f64],
    schedule: &RadiiSchedule,
    a1_outer: f64,
    params: ModelParams,
    config: &SolverConfig,
) -> Result<DerivativeStudy> {
    let mut fields = Vec::with_capacity(schedule.len());
    let mut deviations = Vec::with_capacity(schedule.len());
    for n in 0..schedule.len() {
        let f = numeric_derivative(sigma, t_bar, eps_schedule, schedule.grid(n)?, a1_outer, params, config)?;
        if let Some(e) = f.entries.iter().rev().find(|e| !e.below_noise_floor) {
            deviations.push(DeviationEntry {
                outer_radius: f.outer_radius,
                eps: e.eps,
                deviation: e.deviation,
            });
        }
        fields.push(f);
    }
    Ok(DerivativeStudy {
        deviation_decreasing: deviations.len() == fields.len()
            && deviations.windows(2).all(|w| w[1].deviation < w[0].deviation),
        fields,
        deviations,
    })
}

/// Smooth compactly supported bump `a (1 − (d/w)²)³` around `(ρ_c, θ_c)`,
/// with `d` the chart distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub amplitude: f64,
    pub rho: f64,
    pub theta: f64,
    pub width: f64,
}

impl Bump {
    pub fn value(&self, rho: f64, theta: f64) -> f64 {
        let dth = (theta - self.theta + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI;
        let d2 = ((rho - self.rho).powi(2) + (self.rho.sinh() * dth).powi(2)) / (self.width * self.width);
        if d2 >= 1.0 {
            0.0
        } else {
            self.amplitude * (1.0 - d2).powi(3)
        }
    }
}

/// A surface weakly above `σ`: the translate `σ_n + offset`, possibly
/// deformed by a bump (which makes it test data rather than a solution).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Competitor {
    pub offset: f64,
    #[serde(default)]
    pub bump: Option<Bump>,
    /// Declared by the user: the mean curvature vector of the competitor
    /// points away from `σ`.
    #[serde(default = "yes")]
    pub well_oriented: bool,
}

fn yes() -> bool {
    true
}

impl Competitor {
    pub fn on(&self, base: &GridSection) -> Result<GridSection> {
        let g = &base.grid;
        let values = (0..g.len())
            .map(|k| {
                let (i, j) = g.ij(k);
                base.values[k] + self.offset + self.bump.map_or(0.0, |b| b.value(g.rho(i), g.theta(j)))
            })
            .collect();
        base.with_values(values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Ordered,
    Contact,
    Violation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainCheck {
    pub n: usize,
    pub t: f64,
    /// `max (u_{t,n} − t − σ_n)`: the lowered solution stays below `σ_n`.
    pub lowered_above_sigma: f64,
    /// `min (c − σ_n)`.
    pub competitor_gap: f64,
    /// `min (c − u_{t,n})` over the two circles, the worst position of the
    /// downward sweep `u_{t,n} − s`, `s ≥ 0`.
    pub boundary_gap: f64,
    /// `min (c − u_{t,n})` over all nodes.
    pub gap: f64,
    /// Node of the smallest gap.
    pub at: (usize, usize),
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalfSpaceReport {
    pub competitor: Competitor,
    /// `max |2H[c] − 2H₀|` at interior nodes of each annulus.
    pub competitor_residual: Vec<f64>,
    pub non_cmc: bool,
    pub checks: Vec<ChainCheck>,
    pub chain_pass: bool,
    pub gaps: Vec<GapEntry>,
    pub gap_non_increasing: bool,
}

fn chain_check(n: usize, t: f64, base: &GridSection, u: &GridSection, c: &GridSection, tol: f64) -> ChainCheck {
    let g = &base.grid;
    let mut lowered = f64::NEG_INFINITY;
    let mut competitor_gap = f64::INFINITY;
    let mut boundary_gap = f64::INFINITY;
    let (mut gap, mut at) = (f64::INFINITY, 0);
    for k in 0..g.len() {
        lowered = lowered.max(u.values[k] - t - base.values[k]);
        competitor_gap = competitor_gap.min(c.values[k] - base.values[k]);
        let d = c.values[k] - u.values[k];
        if g.is_boundary_row(g.ij(k).0) {
            boundary_gap = boundary_gap.min(d);
        }
        if d < gap {
            gap = d;
            at = k;
        }
    }
    let verdict = if lowered > tol || competitor_gap < -tol || gap < -tol {
        Verdict::Violation
    } else if gap <= tol {
        Verdict::Contact
    } else {
        Verdict::Ordered
    };
    ChainCheck {
        n,
        t,
        lowered_above_sigma: lowered,
        competitor_gap,
        boundary_gap,
        gap,
        at: g.ij(at),
        verdict,
    }
}

/// Evaluates the ordering chain `u_{t,n} − t ≤ σ_n ≤ c` and `u_{t,n} ≤ c` for
/// every lift and annulus of `family`.
pub fn halfspace_experiment(family: &ContinuationFamily, competitor: &Competitor) -> Result<HalfSpaceReport> {
    if !(competitor.offset >= 0.0) || competitor.bump.is_some_and(|b| !(b.amplitude >= 0.0 && b.width > 0.0)) {
        return Err(Error::InvalidInput("the competitor must lie weakly above σ".into()));
    }
    let tol = family.tolerance;
    let mut checks = Vec::new();
    let mut residuals = Vec::with_capacity(family.solutions.len());
    for (n, secs) in family.solutions.iter().enumerate() {
        let base = &secs[0];
        let c = competitor.on(base)?;
        let h = mean_curvature(&c);
        let g = &c.grid;
        residuals.push((g.n_theta..g.len() - g.n_theta).fold(0.0f64, |m, k| m.max((2.0 * (h[k] - c.params.h0)).abs())));
        for (t, u) in family.lifts.iter().zip(secs) {
            checks.push(chain_check(n, *t, base, u, &c, tol));
        }
    }
    Ok(HalfSpaceReport {
        competitor: *competitor,
        non_cmc: residuals.iter().any(|r| *r > tol),
        competitor_residual: residuals,
        chain_pass: checks.iter().all(|c| c.verdict != Verdict::Violation),
        checks,
        gaps: family.gaps.clone(),
        gap_non_increasing: family.gap_non_increasing,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExteriorGapEntry {
    pub outer_radius: f64,
    /// `inf (v + t₀ − u)`.
    pub gap: f64,
    /// `sup |u − v|`.
    pub sup_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExteriorGapReport {
    pub t0: f64,
    pub entries: Vec<ExteriorGapEntry>,
    /// Whether every infimum stays positive. Evidence only.
    pub bounded_away: bool,
}

/// Tracks `inf (v + t₀ − u)` over pairs of solutions on growing annuli that
/// agree on the inner circle and differ by at most `t₀` on the outer one.
pub fn exterior_uniqueness_evidence(pairs: &[(GridSection, GridSection)], t0: f64) -> Result<ExteriorGapReport> {
    if !(t0 > 0.0) {
        return Err(Error::InvalidInput("t₀ must be positive".into()));
    }
    let mut entries = Vec::with_capacity(pairs.len());
    for (u, v) in pairs {
        if u.grid != v.grid {
            return Err(Error::InvalidInput("pair lives on different grids".into()));
        }
        let g = &u.grid;
        let nt = g.n_theta;
        if u.values[..nt] != v.values[..nt] {
            return Err(Error::InvalidInput("pair differs on the inner circle".into()));
        }
        let last = g.len() - nt;
        let outer = u.values[last..]
            .iter()
            .zip(&v.values[last..])
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if outer > t0 {
            return Err(Error::InvalidInput(format!(
                "pair differs by {outer} on the outer circle, more than t₀ = {t0}"
            )));
        }
        let (mut gap, mut sup_diff) = (f64::INFINITY, 0.0f64);
        for (a, b) in u.values.iter().zip(&v.values) {
            gap = gap.min(b + t0 - a);
            sup_diff = sup_diff.max((a - b).abs());
        }
        entries.push(ExteriorGapEntry {
            outer_radius: g.rho_max,
            gap,
            sup_diff,
        });
    }
    Ok(ExteriorGapReport {
        t0,
        bounded_away: entries.iter().all(|e| e.gap > 0.0),
        entries,
    })
}

/// Pairs `(σ_n, u_{δ,n} − δ)` from a family.
pub fn lowered_pairs(family: &ContinuationFamily) -> Result<Vec<(GridSection, GridSection)>> {
    (0..family.solutions.len())
        .map(|n| Ok((family.base(n).clone(), family.top(n).shifted(-family.delta))))
        .collect()
}

/// Two-column TSV with a header line.
pub fn write_series_tsv<W: Write>(header: (&str, &str), rows: &[(f64, f64)], mut out: W) -> Result<()> {
    writeln!(out, "{}\t{}", header.0, header.1)?;
    for (a, b) in rows {
        writeln!(out, "{a}\t{b}")?;
    }
    Ok(())
}

pub fn gap_series(gaps: &[GapEntry]) -> Vec<(f64, f64)> {
    gaps.iter().map(|g| (g.n as f64, g.gap)).collect()
}

pub fn residual_series(field: &DerivativeField) -> Vec<(f64, f64)> {
    field.entries.iter().map(|e| (e.eps, e.jacobi_residual)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::continuation::TRACE_QUANTUM;
    use crate::solver::radial_ode_oracle;
    use crate::solver::RadialProfile;

    fn entire(tau: f64) -> (ModelParams, RadialProfile) {
        let params = ModelParams::hyperbolic(tau, 0.5).unwrap();
        let sigma = radial_ode_oracle(&params, (0.0, 6.0), true, 0.0).unwrap();
        (params, sigma)
    }

    fn small_schedule() -> RadiiSchedule {
        RadiiSchedule::new(0.5, vec![1.5, 2.0, 2.5], 0.125, 24).unwrap()
    }

    #[test]
    fn family_is_monotone_and_starts_at_the_base() {
        let (params, sigma) = entire(0.0);
        let cfg = SolverConfig::default();
        let fam = build_foliation(&sigma, 0.25, &small_schedule(), 5, 1.0, params, &cfg).unwrap();
        assert!(fam.sandwich_pass, "{:?}", fam.audits);
        assert_eq!(fam.audits.len(), 3 * 10);
        assert_eq!(fam.lifts, vec![0.0, 0.0625, 0.125, 0.1875, 0.25]);
        for n in 0..3 {
            let grid = small_schedule().grid(n).unwrap();
            let (b, _) = crate::solver::continuation::base_solution(&sigma, grid, params, &cfg).unwrap();
            assert_eq!(fam.base(n).values, b.values);
            let top = fam.top(n);
            for j in 0..grid.n_theta {
                assert_eq!(top.at(0, j), b.at(0, j) + 0.25);
                assert_eq!(top.at(grid.n_rho - 1, j), b.at(grid.n_rho - 1, j));
            }
        }
        assert!(fam.gap_non_increasing, "{:?}", fam.gaps);
    }

    #[test]
    fn family_input_checks() {
        let (params, sigma) = entire(0.0);
        let cfg = SolverConfig::default();
        let s = small_schedule();
        assert!(build_foliation(&sigma, 0.25, &s, 2, 1.0, params, &cfg).is_err());
        assert!(build_foliation(&sigma, 0.0, &s, 3, 1.0, params, &cfg).is_err());
        assert!(build_foliation(&sigma, 0.25, &s, 3, 1.75, params, &cfg).is_err());
    }

    #[test]
    fn constants_are_in_the_jacobi_kernel() {
        let (params, sigma) = entire(0.3);
        let grid = AnnularGrid::new(0.5, 2.0, 13, 16).unwrap();
        let s = sample(&sigma, grid, params).unwrap();
        let r = jacobi_residual(&s, &vec![1.0; grid.len()]);
        assert!(r.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn derivative_has_exact_inner_trace_and_shrinking_residual() {
        let (params, sigma) = entire(0.0);
        let grid = AnnularGrid::new(0.5, 2.5, 17, 24).unwrap();
        let eps = [0.125, 0.0625, 0.03125, 0.015625];
        let cfg = SolverConfig::default();
        let d = numeric_derivative(&sigma, 0.125, &eps, grid, 1.0, params, &cfg).unwrap();
        for e in &d.entries {
            assert_eq!(e.inner_trace_error, 0.0);
            assert!(e.min_v >= 0.0 && e.max_v <= 1.0 + 1e-9, "{e:?}");
        }
        assert!(d.residual_decreasing, "{:?}", d.entries);
        assert!(d.limit_consistent, "{d:?}");
        assert!(d.bracketed);
        let v = d.field.as_ref().unwrap();
        for j in 0..grid.n_theta {
            assert_eq!(v.at(0, j), 1.0);
            assert_eq!(v.at(grid.n_rho - 1, j), 0.0);
        }
        // first order in ε: successive ratios approach the step ratio 2
        let r: Vec<f64> = d.entries.iter().map(|e| e.jacobi_residual).collect();
        let ratios: Vec<f64> = r.windows(2).map(|w| w[0] / w[1]).collect();
        assert!(
            ratios.windows(2).all(|w| (w[1] - 2.0).abs() < (w[0] - 2.0).abs()),
            "{ratios:?}"
        );
        assert!((ratios[2] - 2.0).abs() < 0.15, "{ratios:?}");
    }

    #[test]
    fn translation_gives_constant_derivative() {
        // Dirichlet data lifted on both circles: u_t = u₀ + t exactly
        let (params, sigma) = entire(0.2);
        let grid = AnnularGrid::new(0.5, 1.5, 9, 16).unwrap();
        let cfg = SolverConfig::default();
        let traces = crate::solver::continuation::sigma_traces(&sigma, &grid).unwrap();
        let init = sample(&sigma, grid, params).unwrap();
        let (u0, _) = crate::solver::newton_solve_dirichlet(&init, &traces, &cfg).unwrap();
        let eps = 0.0625;
        let up = crate::solver::BoundaryTraces {
            inner: traces.inner.iter().map(|v| v + eps).collect(),
            outer: traces.outer.iter().map(|v| v + eps).collect(),
        };
        let (u1, _) = crate::solver::newton_solve_dirichlet(&u0.shifted(eps), &up, &cfg).unwrap();
        for (a, b) in u0.values.iter().zip(&u1.values) {
            assert!(((b - a) / eps - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn noise_floor_is_flagged() {
        let (params, sigma) = entire(0.0);
        let grid = AnnularGrid::new(0.5, 1.5, 9, 16).unwrap();
        let cfg = SolverConfig {
            newton_tol: 1e-6,
            ..SolverConfig::default()
        };
        let eps = [0.25, 64.0 * TRACE_QUANTUM];
        let d = numeric_derivative(&sigma, 0.0, &eps, grid, 1.0, params, &cfg).unwrap();
        assert_eq!(d.entries[0].inner_trace_error, 0.0);
        let tiny = &d.entries[1];
        assert_eq!(tiny.noise > 0.1 * tiny.jacobi_residual, tiny.below_noise_floor);
    }

    #[test]
    fn halfspace_verdicts() {
        let (params, sigma) = entire(0.0);
        let cfg = SolverConfig::default();
        let fam = build_foliation(&sigma, 0.125, &small_schedule(), 3, 1.0, params, &cfg).unwrap();
        let above = Competitor {
            offset: 0.2,
            bump: None,
            well_oriented: true,
        };
        let rep = halfspace_experiment(&fam, &above).unwrap();
        assert!(rep.chain_pass && !rep.non_cmc);
        assert!(rep.checks.iter().all(|c| c.verdict == Verdict::Ordered));
        assert!(rep.checks.iter().all(|c| c.boundary_gap >= 0.2 - c.t - 1e-12));

        let touching = Competitor { offset: 0.0, ..above };
        let rep = halfspace_experiment(&fam, &touching).unwrap();
        assert_eq!(rep.checks[0].verdict, Verdict::Contact);
        assert!(rep.checks.iter().any(|c| c.verdict == Verdict::Violation));

        let bumped = Competitor {
            bump: Some(Bump {
                amplitude: 0.1,
                rho: 1.0,
                theta: 0.5,
                width: 0.3,
            }),
            ..above
        };
        let rep = halfspace_experiment(&fam, &bumped).unwrap();
        assert!(rep.non_cmc && rep.chain_pass);

        let below = Competitor { offset: -0.1, ..above };
        assert!(halfspace_experiment(&fam, &below).is_err());
    }

    #[test]
    fn exterior_gap_evidence() {
        let (params, sigma) = entire(0.0);
        let cfg = SolverConfig::default();
        let fam = build_foliation(&sigma, 0.125, &small_schedule(), 3, 1.0, params, &cfg).unwrap();
        let same: Vec<_> = (0..3).map(|n| (fam.base(n).clone(), fam.base(n).clone())).collect();
        let rep = exterior_uniqueness_evidence(&same, 0.3).unwrap();
        assert!(rep
            .entries
            .iter()
            .all(|e| (e.gap - 0.3).abs() < 1e-14 && e.sup_diff == 0.0));

        // u_δ − δ + t₀ − σ is smallest on the outer circle, where u_δ = σ
        let rep = exterior_uniqueness_evidence(&lowered_pairs(&fam).unwrap(), 0.25).unwrap();
        assert!(rep.bounded_away);
        for e in &rep.entries {
            assert!((e.gap - 0.125).abs() < 1e-12, "{e:?}");
            assert!(e.sup_diff <= 0.125 + 1e-12);
        }

        let grid = small_schedule().grid(0).unwrap();
        let a = radial_ode_oracle(&params, (0.5, 1.5), false, 0.1).unwrap();
        let b = radial_ode_oracle(&params, (0.5, 1.5), false, -0.3).unwrap();
        let pair = (sample(&a, grid, params).unwrap(), sample(&b, grid, params).unwrap());
        assert!(exterior_uniqueness_evidence(&[pair], 0.05).is_err());
    }

    #[test]
    fn tsv_output() {
        let mut out = Vec::new();
        write_series_tsv(("n", "gap"), &[(0.0, 0.5), (1.0, 0.25)], &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "n\tgap\n0\t0.5\n1\t0.25\n");
    }
}
