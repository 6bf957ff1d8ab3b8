//! Dirichlet problem `Div(Gσ/W) = 2H₀` on annuli.
//!
//! Newton's method uses the exact linearization of the discrete operator,
//! `v ↦ Div((∇v − χ(∇v, χ))/W)`, which is symmetric and positive definite
//! on the interior nodes and is factored by sparse Cholesky.

pub mod continuation;
pub mod radial;

use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{gradient_field_polar, interior_max_abs};
use crate::grid::{AnnularGrid, GridSection};
use crate::linalg::{CholeskySolver, SymmetricMatrix};
use crate::scheme;

pub use continuation::{continuation_path, continuation_solve, probe_delta, ContinuationReport};
pub use radial::{radial_ode_oracle, RadialProfile};

/// A height function defined on (a neighbourhood of) the annuli in use.
pub trait SectionProvider {
    fn value(&self, rho: f64, theta: f64) -> Result<f64>;

    /// Whether the value ignores `theta`, allowing one evaluation per row.
    fn is_radial(&self) -> bool {
        false
    }
}

/// Samples a provider at every node of `grid`.
pub fn sample(
    provider: &dyn SectionProvider,
    grid: AnnularGrid,
    params: crate::geometry::ModelParams,
) -> Result<GridSection> {
    let mut values = Vec::with_capacity(grid.len());
    for i in 0..grid.n_rho {
        let rho = grid.rho(i);
        if provider.is_radial() {
            let v = provider.value(rho, 0.0)?;
            values.extend(std::iter::repeat_n(v, grid.n_theta));
        } else {
            for j in 0..grid.n_theta {
                values.push(provider.value(rho, grid.theta(j))?);
            }
        }
    }
    GridSection::new(grid, params, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Max-norm tolerance on `2H − 2H₀` at interior nodes.
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Smallest damping factor tried before a step is taken regardless.
    pub min_damping: f64,
    pub continuation_steps: usize,
    /// Step of the finite-difference audits.
    pub fd_epsilon: f64,
    /// Solves stop with an ellipticity error when `min ν³` drops below this.
    pub ellipticity_floor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            newton_tol: 1e-10,
            max_newton: 50,
            min_damping: 1.0 / 64.0,
            continuation_steps: 4,
            fd_epsilon: 1e-6,
            ellipticity_floor: 1e-12,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !(positive(self.newton_tol)
            && positive(self.min_damping)
            && self.min_damping <= 1.0
            && positive(self.fd_epsilon)
            && self.ellipticity_floor >= 0.0)
        {
            return Err(Error::InvalidInput("solver tolerances must be positive".into()));
        }
        if self.max_newton == 0 || self.continuation_steps == 0 {
            return Err(Error::InvalidInput(
                "iteration and continuation counts must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Dirichlet data on the two boundary circles, one value per angle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryTraces {
    pub inner: Vec<f64>,
    pub outer: Vec<f64>,
}

impl BoundaryTraces {
    pub fn of(s: &GridSection) -> Self {
        Self {
            inner: s.row(0).to_vec(),
            outer: s.row(s.grid.n_rho - 1).to_vec(),
        }
    }

    pub fn from_provider(provider: &dyn SectionProvider, grid: &AnnularGrid) -> Result<Self> {
        let row =
            |rho: f64| -> Result<Vec<f64>> { (0..grid.n_theta).map(|j| provider.value(rho, grid.theta(j))).collect() };
        Ok(Self {
            inner: row(grid.rho_min)?,
            outer: row(grid.rho_max)?,
        })
    }

    /// Section interpolating the traces linearly in ρ along each ray.
    pub fn interpolant(&self, grid: AnnularGrid, params: crate::geometry::ModelParams) -> Result<GridSection> {
        self.check(&grid)?;
        let mut values = Vec::with_capacity(grid.len());
        let last = (grid.n_rho - 1) as f64;
        for i in 0..grid.n_rho {
            let s = i as f64 / last;
            for j in 0..grid.n_theta {
                values.push((1.0 - s) * self.inner[j] + s * self.outer[j]);
            }
        }
        GridSection::new(grid, params, values)
    }

    fn check(&self, grid: &AnnularGrid) -> Result<()> {
        if self.inner.len() != grid.n_theta || self.outer.len() != grid.n_theta {
            return Err(Error::InvalidInput("boundary traces do not match the grid".into()));
        }
        if self.inner.iter().chain(&self.outer).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite boundary trace".into()));
        }
        Ok(())
    }

    fn impose(&self, s: &mut GridSection) {
        let n = s.grid.n_theta;
        let last = s.grid.len() - n;
        s.values[..n].copy_from_slice(&self.inner);
        s.values[last..].copy_from_slice(&self.outer);
    }
}

/// The linearized operator at a section, restricted to interior nodes.
#[derive(Debug, Clone)]
pub struct LinearizedOperator {
    pub grid: AnnularGrid,
    /// `K` with `Div(P∇v) = −K v / A` on interior nodes.
    pub matrix: SymmetricMatrix,
    /// Nodal `min (1 − ‖χ‖²)/W`.
    pub ellipticity: f64,
    /// Same quantity at the quadrature points of the scheme.
    pub corner_ellipticity: f64,
}

impl LinearizedOperator {
    /// `Div(P∇v)` at interior nodes for interior values `v` (zero Dirichlet data).
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let kv = self.matrix.mul(v);
        kv.iter()
            .enumerate()
            .map(|(m, x)| -x / self.grid.node_area(m / self.grid.n_theta + 1))
            .collect()
    }
}

/// `min (1 − ‖χ‖²)/W` over nodes.
pub fn ellipticity_certificate(s: &GridSection) -> f64 {
    let gf = gradient_field_polar(s);
    gf.chi
        .iter()
        .zip(&gf.w)
        .map(|(c, w)| (1.0 - c[0] * c[0] - c[1] * c[1]) / w)
        .fold(f64::INFINITY, f64::min)
}

pub fn assemble_linearization(s: &GridSection) -> Result<LinearizedOperator> {
    assemble_with_floor(s, 0.0)
}

fn assemble_with_floor(s: &GridSection, floor: f64) -> Result<LinearizedOperator> {
    let corner = scheme::corner_ellipticity(s);
    let gf = gradient_field_polar(s);
    let (node, ellipticity) = gf
        .chi
        .iter()
        .zip(&gf.w)
        .map(|(c, w)| (1.0 - c[0] * c[0] - c[1] * c[1]) / w)
        .enumerate()
        .fold(
            (0, f64::INFINITY),
            |(bk, bv), (k, v)| if v < bv { (k, v) } else { (bk, bv) },
        );
    let worst = ellipticity.min(corner);
    if !(worst > floor) {
        return Err(Error::EllipticityLost {
            certificate: worst,
            node,
        });
    }
    let entries = scheme::assemble_interior_hessian(s);
    let matrix = SymmetricMatrix::from_lower_entries(s.grid.n_interior(), &entries)?;
    Ok(LinearizedOperator {
        grid: s.grid,
        matrix,
        ellipticity,
        corner_ellipticity: corner,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_residual: f64,
    pub residual_history: Vec<f64>,
    pub damping_history: Vec<f64>,
    pub ellipticity_floor: f64,
    pub min_w: f64,
    pub max_w: f64,
    /// Measured size of the solution, `max |σ|`.
    pub max_abs_height: f64,
    #[serde(skip)]
    pub wall_time_s: f64,
}

/// Interior values of `2H[σ] − target`.
fn residual(s: &GridSection, target: &[f64]) -> Vec<f64> {
    let grid = &s.grid;
    let grad = scheme::energy_gradient(s);
    let nt = grid.n_theta;
    let mut out = Vec::with_capacity(grid.n_interior());
    for i in 1..grid.n_rho - 1 {
        let area = grid.node_area(i);
        for j in 0..nt {
            let k = grid.idx(i, j);
            out.push(-grad[k] / area - target[k - nt]);
        }
    }
    out
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter()
        .fold(0.0, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

/// Solves `2H[σ] = 2H₀` with `H₀ = initial.params.h0`.
pub fn newton_solve_dirichlet(
    initial: &GridSection,
    boundary: &BoundaryTraces,
    config: &SolverConfig,
) -> Result<(GridSection, SolveReport)> {
    let target = vec![2.0 * initial.params.h0; initial.grid.n_interior()];
    newton_solve_prescribed(initial, boundary, &target, config)
}

/// Solves `2H[σ] = f` for a prescribed right-hand side at interior nodes,
/// given in the interior numbering.
pub fn newton_solve_prescribed(
    initial: &GridSection,
    boundary: &BoundaryTraces,
    target: &[f64],
    config: &SolverConfig,
) -> Result<(GridSection, SolveReport)> {
    let start = Instant::now();
    config.validate()?;
    let grid = initial.grid;
    boundary.check(&grid)?;
    if target.len() != grid.n_interior() {
        return Err(Error::InvalidInput("right-hand side does not match the grid".into()));
    }
    let mut s = initial.clone();
    boundary.impose(&mut s);

    let mut linear = CholeskySolver::new();
    let mut f = residual(&s, target);
    let mut res = max_abs(&f);
    let mut history = vec![res];
    let mut damping = Vec::new();
    let mut iterations = 0;
    while !(res <= config.newton_tol) {
        if iterations == config.max_newton || !res.is_finite() {
            return Err(Error::NonConvergence {
                iterations,
                residual: res,
                history,
            });
        }
        iterations += 1;
        let op = assemble_with_floor(&s, config.ellipticity_floor)?;
        let rhs: Vec<f64> = f
            .iter()
            .enumerate()
            .map(|(m, x)| grid.node_area(m / grid.n_theta + 1) * x)
            .collect();
        let delta = linear.solve(&op.matrix, &rhs)?;

        let offset = grid.n_theta;
        let mut lambda = 1.0;
        loop {
            let mut trial = s.clone();
            for (m, d) in delta.iter().enumerate() {
                trial.values[m + offset] += lambda * d;
            }
            let f_trial = residual(&trial, target);
            let r_trial = max_abs(&f_trial);
            if r_trial <= res || lambda <= config.min_damping {
                s = trial;
                f = f_trial;
                res = r_trial;
                break;
            }
            lambda *= 0.5;
        }
        damping.push(lambda);
        history.push(res);
    }
    let gf = gradient_field_polar(&s);
    let report = SolveReport {
        iterations,
        final_residual: res,
        residual_history: history,
        damping_history: damping,
        ellipticity_floor: ellipticity_certificate(&s).min(scheme::corner_ellipticity(&s)),
        min_w: gf.min_w(),
        max_w: gf.max_w(),
        max_abs_height: s.values.iter().fold(0.0, |m, v| m.max(v.abs())),
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok((s, report))
}

/// `max |2H[σ] − 2H₀|` over interior nodes.
pub fn equation_residual(s: &GridSection) -> f64 {
    let h = crate::graph::mean_curvature(s);
    interior_max_abs(&s.grid, h.iter().map(|v| 2.0 * (v - s.params.h0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ModelParams;

    fn grid(n: usize) -> AnnularGrid {
        AnnularGrid::new(0.5, 2.0, n + 1, n).unwrap()
    }

    #[test]
    fn perturbed_constant_data_converges_quadratically() {
        let p = ModelParams::hyperbolic(0.0, 0.0).unwrap();
        let g = grid(16);
        let init = GridSection::from_fn(g, p, |r, t| 3.0 + 0.1 * (r - 0.5) * (2.0 - r) * t.cos()).unwrap();
        let traces = BoundaryTraces {
            inner: vec![3.0; 16],
            outer: vec![3.0; 16],
        };
        let (s, rep) = newton_solve_dirichlet(&init, &traces, &SolverConfig::default()).unwrap();
        assert!(rep.iterations <= 4, "{rep:?}");
        for w in rep.residual_history.windows(2) {
            assert!(w[1] <= w[0] * w[0], "{rep:?}");
        }
        assert!(s.values.iter().all(|v| (v - 3.0).abs() < 1e-12));
    }

    #[test]
    fn operator_of_flat_section_is_laplacian() {
        let p = ModelParams::hyperbolic(0.0, 0.5).unwrap();
        let s = GridSection::constant(grid(16), p, 1.0).unwrap();
        let op = assemble_linearization(&s).unwrap();
        assert_eq!(op.ellipticity, 1.0);
        // v = ρ² on the interior
        let g = s.grid;
        let v: Vec<f64> = (0..g.n_interior()).map(|m| g.rho(m / g.n_theta + 1).powi(2)).collect();
        let lv = op.apply(&v);
        let full: Vec<f64> = (0..g.len())
            .map(|k| {
                let (i, _) = g.ij(k);
                if g.is_boundary_row(i) {
                    0.0
                } else {
                    g.rho(i).powi(2)
                }
            })
            .collect();
        let jr = crate::graph::jacobi_residual(&s, &full);
        for m in 0..g.n_interior() {
            assert!((lv[m] - jr[m + g.n_theta]).abs() < 1e-10);
        }
    }

    #[test]
    fn ellipticity_formula() {
        let p = ModelParams::hyperbolic(0.0, 0.5).unwrap();
        let s = GridSection::constant(grid(16), p, 0.0).unwrap();
        assert_eq!(ellipticity_certificate(&s), 1.0);
        let w = 2f64.sqrt();
        assert!(((1.0 - 0.5) / w - 0.353_553_390_593_273_8).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        let bad = SolverConfig {
            newton_tol: 0.0,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            max_newton: 0,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
