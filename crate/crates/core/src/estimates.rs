//! Audits of the gradient estimates on solved graphs.
//!
//! The estimates rest on the operator
//! `L u = Δ_Σ u − 2ν(∇_Σ(1/ν), ∇_Σ u)`, which on graphs is `W·Div(P∇u)` with
//! `P = (I − χχᵀ)/W`, the linearization of the mean curvature operator. The
//! constants of the continuous argument exist but are not explicit, so the
//! audits sweep the free parameters, check the sign of `L` on the auxiliary
//! functions and the location of their maxima, and report the bound that a
//! certified pair implies next to the measured value.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{grad_z, hyperbolic_distance, metric_eval, norm_sq, PolarPoint};
use crate::graph::{divergence_g_with, gradient_field_polar, jacobi_residual, nodal_derivatives, GradientField};
use crate::grid::{AnnularGrid, GridSection};
use crate::sister::{extract_surface_data, interior_rows, jacobi_potential, max_abs_on_rows, sister, upward_normal};

/// Base gradient `(∂ρ u, ∂θ u / sinh ρ)` at every node.
fn base_gradient(grid: &AnnularGrid, u: &[f64]) -> Vec<[f64; 2]> {
    let (dr, dt) = nodal_derivatives(grid, u);
    (0..grid.len())
        .map(|k| [dr[k], dt[k] / grid.rho(grid.ij(k).0).sinh()])
        .collect()
}

/// `∇u − (χ, ∇u)χ`, the base field whose lift is `∇_Σ u`.
fn tangential_gradient(gf: &GradientField, grad: &[[f64; 2]]) -> Vec<[f64; 2]> {
    grad.iter()
        .zip(&gf.chi)
        .map(|(d, c)| {
            let p = d[0] * c[0] + d[1] * c[1];
            [d[0] - p * c[0], d[1] - p * c[1]]
        })
        .collect()
}

/// `Δ_Σ u` from nodal differences.
pub fn surface_laplacian(s: &GridSection, u: &[f64]) -> Vec<f64> {
    let gf = gradient_field_polar(s);
    let x = tangential_gradient(&gf, &base_gradient(&s.grid, u));
    divergence_g_with(&s.grid, &gf, &x)
}

/// `L u = W·Div(P∇u)` at interior nodes, zero on the two circles.
pub fn stability_operator(s: &GridSection, u: &[f64]) -> Vec<f64> {
    let gf = gradient_field_polar(s);
    jacobi_residual(s, u).iter().zip(&gf.w).map(|(r, w)| r * w).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NuJacobiReport {
    /// `max |Δ_Σ ν + (Ric(N,N) + ‖S‖²)ν|` on the interior audit rows.
    pub max_residual: f64,
    /// Same with the potential of the sister data, when `H₀ = ½`.
    pub max_sister_residual: Option<f64>,
    #[serde(skip)]
    pub residual: Vec<f64>,
    #[serde(skip)]
    pub sister_residual: Option<Vec<f64>>,
}

/// `Δ_Σ ν + (Ric(N,N) + ‖S‖²)ν` with `Ric(N,N) = −(1 + 2τ²) + ν²(1 + 4τ²)`.
pub fn jacobi_check_nu(s: &GridSection) -> Result<NuJacobiReport> {
    let grid = &s.grid;
    let gf = gradient_field_polar(s);
    let lap = surface_laplacian(s, &gf.nu);
    let data = extract_surface_data(s)?;
    let tau = s.params.tau;
    let with_potential = |pot: &[f64]| -> Vec<f64> { (0..grid.len()).map(|k| lap[k] + pot[k] * gf.nu[k]).collect() };
    let residual = with_potential(&jacobi_potential(&data.nodes, tau, false));
    let rows = interior_rows(grid);
    let sister_residual = if s.params.h0 == 0.5 {
        let sis = sister(&data, &s.params)?;
        Some(with_potential(&jacobi_potential(&sis.nodes, tau, true)))
    } else {
        None
    };
    Ok(NuJacobiReport {
        max_residual: max_abs_on_rows(grid, &residual, rows.clone()),
        max_sister_residual: sister_residual.as_ref().map(|r| max_abs_on_rows(grid, r, rows)),
        residual,
        sister_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryParams {
    pub alpha: f64,
    pub nu0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryMeasured {
    /// Interior nodes with `ν ≤ ν₀`.
    pub low_nu_nodes: usize,
    /// `min L(η/ν)/(η/ν)` over those nodes, `+∞` when there are none.
    pub min_relative_l: f64,
    /// Node where `η/ν` is largest.
    pub argmax: (usize, usize),
    pub max_on_boundary_or_high_nu: bool,
    pub sup_w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryCandidate {
    pub certified: bool,
    pub params: BoundaryParams,
    pub measured: BoundaryMeasured,
    /// `max(sup_∂ η/ν, sup η/ν₀) / inf η`.
    pub bound: f64,
    /// `measured.sup_w ≤ bound`, required of certified candidates.
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryGradientReport {
    pub certified: bool,
    pub candidates: Vec<BoundaryCandidate>,
    /// Smallest bound among certified candidates.
    pub best: Option<BoundaryCandidate>,
    pub measured_sup_w: f64,
    pub pass: bool,
}

fn check_sweep(name: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() || values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "{name} sweep must be non-empty and positive"
        )));
    }
    Ok(())
}

/// Sweeps `(α, ν₀)` for the auxiliary function `η/ν`, `η = e^{αh}`.
pub fn boundary_gradient_audit(s: &GridSection, alphas: &[f64], nu0s: &[f64]) -> Result<BoundaryGradientReport> {
    check_sweep("α", alphas)?;
    check_sweep("ν₀", nu0s)?;
    if nu0s.iter().any(|v| *v > 1.0) {
        return Err(Error::InvalidInput("ν₀ must not exceed 1".into()));
    }
    let grid = &s.grid;
    let gf = gradient_field_polar(s);
    let sup_w = gf.max_w();
    let mut candidates = Vec::with_capacity(alphas.len() * nu0s.len());
    for &alpha in alphas {
        let eta: Vec<f64> = s.values.iter().map(|h| (alpha * h).exp()).collect();
        let q: Vec<f64> = eta.iter().zip(&gf.w).map(|(e, w)| e * w).collect();
        let lq = stability_operator(s, &q);
        let inf_eta = eta.iter().copied().fold(f64::INFINITY, f64::min);
        let sup_eta = eta.iter().copied().fold(0.0, f64::max);
        let mut sup_boundary = 0.0f64;
        let mut argmax = 0;
        for k in 0..grid.len() {
            if grid.is_boundary_row(grid.ij(k).0) {
                sup_boundary = sup_boundary.max(q[k]);
            }
            if q[k] > q[argmax] {
                argmax = k;
            }
        }
        for &nu0 in nu0s {
            let (mut low, mut min_rel) = (0, f64::INFINITY);
            for k in grid.n_theta..grid.len() - grid.n_theta {
                if gf.nu[k] <= nu0 {
                    low += 1;
                    min_rel = min_rel.min(lq[k] / q[k]);
                }
            }
            let localized = grid.is_boundary_row(grid.ij(argmax).0) || gf.nu[argmax] >= nu0;
            let bound = sup_boundary.max(sup_eta / nu0) / inf_eta;
            candidates.push(BoundaryCandidate {
                certified: min_rel >= 0.0 && localized,
                params: BoundaryParams { alpha, nu0 },
                measured: BoundaryMeasured {
                    low_nu_nodes: low,
                    min_relative_l: min_rel,
                    argmax: grid.ij(argmax),
                    max_on_boundary_or_high_nu: localized,
                    sup_w,
                },
                bound,
                holds: sup_w <= bound,
            });
        }
    }
    let best = candidates
        .iter()
        .filter(|c| c.certified)
        .min_by(|a, b| a.bound.total_cmp(&b.bound))
        .copied();
    Ok(BoundaryGradientReport {
        certified: best.is_some(),
        pass: candidates.iter().all(|c| !c.certified || c.holds),
        best,
        measured_sup_w: sup_w,
        candidates,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InteriorParams {
    pub k: f64,
    pub nu1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InteriorMeasured {
    /// Nodes with `ν ≤ ν₁` whose whole stencil lies where `φ > 0`.
    pub checked_nodes: usize,
    /// `min L u / u` over those nodes, `+∞` when there are none.
    pub min_relative_l: f64,
    pub argmax: (usize, usize),
    pub max_at_high_nu: bool,
    pub w_center: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InteriorCandidate {
    pub certified: bool,
    pub params: InteriorParams,
    pub measured: InteriorMeasured,
    /// `(1/ν₁)(e^{3K/4} − 1)/(e^{K/4} − 1)`.
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteriorGradientReport {
    pub center: (usize, usize),
    pub radius: f64,
    /// Height at the center, the `h₀` of the cutoff.
    pub h_center: f64,
    pub certified: bool,
    pub candidates: Vec<InteriorCandidate>,
    pub best: Option<InteriorCandidate>,
    pub measured_w_center: f64,
    pub pass: bool,
}

/// `(1/ν₁)(e^{3K/4} − 1)/(e^{K/4} − 1)`, written as the sum it factors into.
pub fn interior_bound(k: f64, nu1: f64) -> f64 {
    ((0.5 * k).exp() + (0.25 * k).exp() + 1.0) / nu1
}

/// The cutoff `φ = max(0, −h/(2h₀) + 3/4 − (d/R)²)` at every node.
pub fn cutoff(s: &GridSection, center: (usize, usize), radius: f64) -> Vec<f64> {
    let grid = &s.grid;
    let c = PolarPoint::new(grid.rho(center.0), grid.theta(center.1));
    let h0 = s.at(center.0, center.1);
    (0..grid.len())
        .map(|k| {
            let (i, j) = grid.ij(k);
            let d = hyperbolic_distance(&PolarPoint::new(grid.rho(i), grid.theta(j)), &c);
            (-s.values[k] / (2.0 * h0) + 0.75 - (d / radius).powi(2)).max(0.0)
        })
        .collect()
}

/// Sweeps `(K, ν₁)` for `u = (e^{Kφ} − 1)/ν` on the geodesic disk of radius
/// `R` about a grid node.
pub fn interior_gradient_audit(
    s: &GridSection,
    center: (usize, usize),
    radius: f64,
    ks: &[f64],
    nu1s: &[f64],
) -> Result<InteriorGradientReport> {
    check_sweep("K", ks)?;
    check_sweep("ν₁", nu1s)?;
    let grid = &s.grid;
    if center.0 >= grid.n_rho || center.1 >= grid.n_theta || grid.is_boundary_row(center.0) {
        return Err(Error::InvalidInput("the center must be an interior node".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidInput("R must be positive".into()));
    }
    if let Some(v) = s.values.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "the graph must be positive, found height {v}"
        )));
    }
    let phi = cutoff(s, center, radius);
    let boundary = (0..grid.n_theta).flat_map(|j| [grid.idx(0, j), grid.idx(grid.n_rho - 1, j)]);
    if boundary.into_iter().any(|k| phi[k] > 0.0) {
        return Err(Error::InvalidInput(
            "the cutoff must vanish on the boundary circles".into(),
        ));
    }
    let gf = gradient_field_polar(s);
    let kc = grid.idx(center.0, center.1);
    let w_center = gf.w[kc];
    let inside: Vec<bool> = (0..grid.len())
        .map(|k| {
            let (i, j) = grid.ij(k);
            !grid.is_boundary_row(i)
                && (i - 1..=i + 1).all(|ii| {
                    [grid.jm(j), j, grid.jp(j)]
                        .iter()
                        .all(|&jj| phi[grid.idx(ii, jj)] > 0.0)
                })
        })
        .collect();
    let mut candidates = Vec::with_capacity(ks.len() * nu1s.len());
    for &k in ks {
        let u: Vec<f64> = phi.iter().zip(&gf.w).map(|(p, w)| (k * p).exp_m1() * w).collect();
        let lu = stability_operator(s, &u);
        let argmax = (0..grid.len()).fold(0, |a, m| if u[m] > u[a] { m } else { a });
        for &nu1 in nu1s {
            let (mut checked, mut min_rel) = (0, f64::INFINITY);
            for m in 0..grid.len() {
                if inside[m] && gf.nu[m] <= nu1 {
                    checked += 1;
                    min_rel = min_rel.min(lu[m] / u[m]);
                }
            }
            let localized = gf.nu[argmax] >= nu1;
            let bound = interior_bound(k, nu1);
            candidates.push(InteriorCandidate {
                certified: min_rel >= 0.0 && localized,
                params: InteriorParams { k, nu1 },
                measured: InteriorMeasured {
                    checked_nodes: checked,
                    min_relative_l: min_rel,
                    argmax: grid.ij(argmax),
                    max_at_high_nu: localized,
                    w_center,
                },
                bound,
                holds: w_center <= bound,
            });
        }
    }
    let best = candidates
        .iter()
        .filter(|c| c.certified)
        .min_by(|a, b| a.bound.total_cmp(&b.bound))
        .copied();
    Ok(InteriorGradientReport {
        center,
        radius,
        h_center: s.values[kc],
        certified: best.is_some(),
        pass: candidates.iter().all(|c| !c.certified || c.holds),
        best,
        measured_w_center: w_center,
        candidates,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeightGradientReport {
    /// `max |(|∇σ|² − (χ,∇σ)²) − (‖ζ‖² − (ζ,N)²)|`, the two sides computed
    /// from the graph and from the ambient geometry.
    pub identity_residual: f64,
    /// `max |‖ζ‖² − 1 − 4τ²(x² + y²)|`.
    pub zeta_norm_residual: f64,
    /// `max (1 − ν² − ‖ζ^⊤‖²)/ν`, measured in place of `c₁`.
    pub c1: f64,
    /// `max |Δ_Σ h|` on the interior audit rows.
    pub c2: f64,
    /// `max |Δ_Σ d²|` on the interior audit rows.
    pub c3: f64,
    /// `max ‖∇_Σ d²‖/(2d)` over interior nodes away from the center.
    pub d2_gradient_ratio: f64,
    /// `max(0, d2_gradient_ratio − 1)`.
    pub horizontal_defect: f64,
    /// `‖∇_Σ d²‖` at the center node.
    pub center_gradient: f64,
    pub identity_pass: bool,
}

/// Squared `g`-norm of the lift of a base field `x` orthogonal to `χ`.
fn tangential_norm_sq(x: [f64; 2], chi: [f64; 2]) -> f64 {
    let p = x[0] * chi[0] + x[1] * chi[1];
    x[0] * x[0] + x[1] * x[1] - p * p
}

/// Measures the quantities entering the height and distance estimates;
/// `d` is the distance to the node `center`.
pub fn height_gradient_estimates(s: &GridSection, center: (usize, usize)) -> Result<HeightGradientReport> {
    let grid = &s.grid;
    let params = &s.params;
    if center.0 >= grid.n_rho || center.1 >= grid.n_theta {
        return Err(Error::InvalidInput("center outside the grid".into()));
    }
    let gf = gradient_field_polar(s);
    let grad_h = base_gradient(grid, &s.values);
    let (mut identity, mut zeta_norm, mut c1) = (0.0f64, 0.0f64, f64::NEG_INFINITY);
    for k in 0..grid.len() {
        let (i, j) = grid.ij(k);
        let (rho, theta) = (grid.rho(i), grid.theta(j));
        let lhs = tangential_norm_sq(grad_h[k], gf.chi[k]);
        let (p, n) = upward_normal(params, rho, theta, s.values[k], gf.g[k])?;
        let zeta = grad_z(params, &p)?;
        let zz = norm_sq(params, &p, &zeta)?;
        let zn = metric_eval(params, &p, &zeta, &n)?;
        let rhs = zz - zn * zn;
        identity = identity.max((lhs - rhs).abs());
        let r2 = p.x * p.x + p.y * p.y;
        zeta_norm = zeta_norm.max((zz - 1.0 - 4.0 * params.tau * params.tau * r2).abs());
        let nu = gf.nu[k];
        c1 = c1.max((1.0 - nu * nu - lhs) / nu);
    }
    let c = PolarPoint::new(grid.rho(center.0), grid.theta(center.1));
    let dist: Vec<f64> = (0..grid.len())
        .map(|k| {
            let (i, j) = grid.ij(k);
            hyperbolic_distance(&PolarPoint::new(grid.rho(i), grid.theta(j)), &c)
        })
        .collect();
    let d2: Vec<f64> = dist.iter().map(|d| d * d).collect();
    let grad_d2 = base_gradient(grid, &d2);
    let mut ratio = 0.0f64;
    for k in grid.n_theta..grid.len() - grid.n_theta {
        if dist[k] > 0.0 {
            let g = tangential_norm_sq(grad_d2[k], gf.chi[k]).sqrt();
            ratio = ratio.max(g / (2.0 * dist[k]));
        }
    }
    let kc = grid.idx(center.0, center.1);
    let rows = interior_rows(grid);
    let lap_h = surface_laplacian(s, &s.values);
    let lap_d2 = surface_laplacian(s, &d2);
    Ok(HeightGradientReport {
        identity_residual: identity,
        zeta_norm_residual: zeta_norm,
        c1,
        c2: max_abs_on_rows(grid, &lap_h, rows.clone()),
        c3: max_abs_on_rows(grid, &lap_d2, rows),
        d2_gradient_ratio: ratio,
        horizontal_defect: (ratio - 1.0).max(0.0),
        center_gradient: tangential_norm_sq(grad_d2[kc], gf.chi[kc]).sqrt(),
        identity_pass: identity < 1e-10,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ModelParams;
    use crate::solver::continuation::base_solution;
    use crate::solver::{radial_ode_oracle, SolverConfig};

    fn radial_graph(tau: f64, n: usize) -> GridSection {
        let params = ModelParams::hyperbolic(tau, 0.5).unwrap();
        let sigma = radial_ode_oracle(&params, (0.0, 3.0), true, 0.0).unwrap();
        let grid = AnnularGrid::new(0.5, 2.5, n + 1, 2 * n).unwrap();
        base_solution(&sigma, grid, params, &SolverConfig::default()).unwrap().0
    }

    #[test]
    fn constant_section_is_trivially_jacobi() {
        let params = ModelParams::hyperbolic(0.0, 0.5).unwrap();
        let grid = AnnularGrid::new(0.5, 2.0, 13, 24).unwrap();
        let s = GridSection::constant(grid, params, 1.0).unwrap();
        let rep = jacobi_check_nu(&s).unwrap();
        assert_eq!(rep.max_residual, 0.0);
    }

    #[test]
    fn nu_jacobi_residual_is_second_order() {
        for tau in [0.0, 0.3] {
            let r: Vec<f64> = [32, 64, 128]
                .iter()
                .map(|n| jacobi_check_nu(&radial_graph(tau, *n)).unwrap().max_residual)
                .collect();
            for w in r.windows(2) {
                assert!(w[0] / w[1] > 3.5, "τ = {tau}: {r:?}");
            }
        }
    }

    #[test]
    fn sister_path_differs_by_the_trace_defect() {
        // the potentials differ by 1 − tr S, which vanishes only in the limit
        let mut maxima = Vec::new();
        for n in [32, 64, 128] {
            let s = radial_graph(0.3, n);
            let rep = jacobi_check_nu(&s).unwrap();
            let data = extract_surface_data(&s).unwrap();
            let sis = rep.sister_residual.as_ref().unwrap();
            for (k, node) in data.nodes.iter().enumerate() {
                let expected = (1.0 - node.trace_s()) * node.nu;
                assert!((sis[k] - rep.residual[k] - expected).abs() < 1e-12);
            }
            maxima.push(rep.max_sister_residual.unwrap());
        }
        let ratios: Vec<f64> = maxima.windows(2).map(|w| w[0] / w[1]).collect();
        assert!(ratios.iter().all(|r| *r > 3.0) && ratios[1] > ratios[0], "{maxima:?}");
    }

    #[test]
    fn stability_operator_of_constants_vanishes() {
        let s = radial_graph(0.3, 16);
        assert!(stability_operator(&s, &vec![2.0; s.grid.len()])
            .iter()
            .all(|v| *v == 0.0));
    }

    #[test]
    fn boundary_audit_on_the_radial_graph() {
        let s = radial_graph(0.0, 64);
        let alphas = [0.5, 1.0, 2.0, 4.0];
        let nu0s = [0.2, 0.4, 0.6, 0.8];
        let rep = boundary_gradient_audit(&s, &alphas, &nu0s).unwrap();
        assert!(rep.certified && rep.pass, "{rep:?}");
        let w_max = (2.5f64 / 2.0).cosh();
        assert!((rep.measured_sup_w - w_max).abs() < 1e-3);
        // below the smallest ν of the graph the sign condition is vacuous
        let vacuous = rep.candidates.iter().find(|c| c.params.nu0 == 0.2).unwrap();
        assert_eq!(vacuous.measured.low_nu_nodes, 0);
        assert!(vacuous.certified);
        assert!(boundary_gradient_audit(&s, &[], &nu0s).is_err());
        assert!(boundary_gradient_audit(&s, &alphas, &[1.5]).is_err());
    }

    #[test]
    fn interior_audit_on_the_radial_graph() {
        let s = radial_graph(0.0, 64);
        let center = (32, 5);
        let ks = [1.0, 2.0, 4.0, 8.0];
        let nu1s = [0.3, 0.5, 0.7, 0.8];
        let rep = interior_gradient_audit(&s, center, 1.0, &ks, &nu1s).unwrap();
        assert!(rep.certified && rep.pass, "{rep:?}");
        // the center sits at ρ = 1.5, where W = cosh(ρ/2)
        assert!((rep.measured_w_center - 0.75f64.cosh()).abs() < 1e-3);
        let phi = cutoff(&s, center, 1.0);
        assert_eq!(phi[s.grid.idx(center.0, center.1)], 0.25);
    }

    #[test]
    fn interior_audit_preconditions() {
        let s = radial_graph(0.0, 32);
        assert!(interior_gradient_audit(&s, (0, 0), 1.0, &[1.0], &[0.5]).is_err());
        assert!(interior_gradient_audit(&s, (16, 0), 3.0, &[1.0], &[0.5]).is_err());
        let negative = s.shifted(-10.0);
        assert!(interior_gradient_audit(&negative, (16, 0), 1.0, &[1.0], &[0.5]).is_err());
    }

    #[test]
    fn flat_section_has_unit_center_gradient() {
        let params = ModelParams::hyperbolic(0.0, 0.5).unwrap();
        let grid = AnnularGrid::new(0.5, 2.5, 33, 64).unwrap();
        let s = GridSection::constant(grid, params, 2.0).unwrap();
        let rep = interior_gradient_audit(&s, (16, 0), 1.0, &[1.0, 4.0], &[0.5, 1.0]).unwrap();
        assert_eq!(rep.measured_w_center, 1.0);
        for c in &rep.candidates {
            // with ν₁ = 1 the peak of the cutoff enters the sign condition,
            // where L u = Δφ-like terms are negative
            assert_eq!(c.certified, c.params.nu1 == 0.5, "{c:?}");
            assert!(c.holds);
        }
    }

    #[test]
    fn interior_bound_increases_with_k() {
        let b: Vec<f64> = [0.5, 1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|k| interior_bound(*k, 0.5))
            .collect();
        assert!(b.windows(2).all(|w| w[1] > w[0]));
        let k = 2.0f64;
        let direct = ((0.75 * k).exp() - 1.0) / ((0.25 * k).exp() - 1.0) / 0.5;
        assert!((interior_bound(k, 0.5) - direct).abs() < 1e-12 * direct);
    }

    #[test]
    fn height_identity_and_measured_constants() {
        for tau in [0.0, 0.3] {
            let s = radial_graph(tau, 32);
            let rep = height_gradient_estimates(&s, (16, 3)).unwrap();
            assert!(rep.identity_pass, "{rep:?}");
            assert!(rep.zeta_norm_residual < 1e-12);
            if tau == 0.0 {
                assert!(rep.c1.abs() < 1e-12, "{rep:?}");
            }
            assert!(rep.center_gradient < 1e-2);
            assert!(rep.horizontal_defect < 1e-2, "{rep:?}");
            assert!(rep.c2.is_finite() && rep.c3.is_finite());
        }
    }
}
