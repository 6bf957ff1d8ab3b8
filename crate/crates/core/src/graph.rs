//! Graph quantities of a section: `Gσ`, `W`, `χ`, `ν`, mean curvature,
//! induced metric and the divergence-form operators built from them.
//!
//! Vectors on the base are stored in the orthonormal polar basis
//! `e₁ = ∂ρ`, `e₂ = (1/sinh ρ) ∂θ`.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::geometry::ModelParams;
use crate::grid::{write_records, AnnularGrid, GridRecord, GridSection};
use crate::scheme::{self, twist, visit_corners};

/// Per-node `Gσ` with the derived `W`, `χ` and `ν`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientField {
    pub g: Vec<[f64; 2]>,
    pub w: Vec<f64>,
    pub chi: Vec<[f64; 2]>,
    pub nu: Vec<f64>,
}

impl GradientField {
    pub fn from_components(g: Vec<[f64; 2]>) -> Self {
        let mut w = Vec::with_capacity(g.len());
        let mut chi = Vec::with_capacity(g.len());
        let mut nu = Vec::with_capacity(g.len());
        for v in &g {
            let wk = (1.0 + v[0] * v[0] + v[1] * v[1]).sqrt();
            w.push(wk);
            chi.push([v[0] / wk, v[1] / wk]);
            nu.push(1.0 / wk);
        }
        Self { g, w, chi, nu }
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    pub fn min_nu(&self) -> f64 {
        self.nu.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn min_w(&self) -> f64 {
        self.w.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_w(&self) -> f64 {
        self.w.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Nodal `(∂ρ σ, ∂θ σ)`: central differences, second-order one-sided on the
/// two boundary circles, periodic in θ.
pub fn nodal_derivatives(grid: &AnnularGrid, v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = grid.len();
    let (nr, nt) = (grid.n_rho, grid.n_theta);
    let hr = grid.d_rho();
    let ht = grid.d_theta();
    let mut dr = vec![0.0; n];
    let mut dt = vec![0.0; n];
    for i in 0..nr {
        for j in 0..nt {
            let k = grid.idx(i, j);
            let at = |ii: usize| v[grid.idx(ii, j)];
            dr[k] = if i == 0 {
                (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * hr)
            } else if i + 1 == nr {
                (3.0 * at(i) - 4.0 * at(i - 1) + at(i - 2)) / (2.0 * hr)
            } else {
                (at(i + 1) - at(i - 1)) / (2.0 * hr)
            };
            dt[k] = (v[grid.idx(i, grid.jp(j))] - v[grid.idx(i, grid.jm(j))]) / (2.0 * ht);
        }
    }
    (dr, dt)
}

/// `Gσ = σ_ρ e₁ + (σ_θ / sinh ρ − 2τ tanh(ρ/2)) e₂` at every node.
pub fn gradient_field_polar(s: &GridSection) -> GradientField {
    let grid = &s.grid;
    let (dr, dt) = nodal_derivatives(grid, &s.values);
    let mut g = Vec::with_capacity(grid.len());
    for i in 0..grid.n_rho {
        let rho = grid.rho(i);
        let sh = rho.sinh();
        let tw = twist(s.params.tau, rho);
        for j in 0..grid.n_theta {
            let k = grid.idx(i, j);
            g.push([dr[k], dt[k] / sh - tw]);
        }
    }
    GradientField::from_components(g)
}

/// Conservative divergence of a nodal field given in the orthonormal basis.
///
/// Radial fluxes `sinh ρ X^ρ` are averaged onto the faces between rows; the
/// boundary rows use second-order one-sided differences of the flux.
pub fn divergence(grid: &AnnularGrid, x: &[[f64; 2]]) -> Vec<f64> {
    let (nr, nt) = (grid.n_rho, grid.n_theta);
    let hr = grid.d_rho();
    let ht = grid.d_theta();
    let sh: Vec<f64> = (0..nr).map(|i| grid.rho(i).sinh()).collect();
    let flux = |i: usize, j: usize| sh[i] * x[grid.idx(i, j)][0];
    let mut out = vec![0.0; grid.len()];
    for i in 0..nr {
        for j in 0..nt {
            let radial = if i == 0 {
                (-3.0 * flux(0, j) + 4.0 * flux(1, j) - flux(2, j)) / (2.0 * hr)
            } else if i + 1 == nr {
                (3.0 * flux(i, j) - 4.0 * flux(i - 1, j) + flux(i - 2, j)) / (2.0 * hr)
            } else {
                let up = 0.5 * (flux(i, j) + flux(i + 1, j));
                let down = 0.5 * (flux(i - 1, j) + flux(i, j));
                (up - down) / hr
            };
            let angular = (x[grid.idx(i, grid.jp(j))][1] - x[grid.idx(i, grid.jm(j))][1]) / (2.0 * ht);
            out[grid.idx(i, j)] = (radial + angular) / sh[i];
        }
    }
    out
}

/// Mean curvature `H = ½ Div(Gσ/W)` at every node.
///
/// Interior rows use the corner-quadrature scheme of [`crate::scheme`]; the
/// two Dirichlet circles fall back on the nodal flux divergence.
pub fn mean_curvature(s: &GridSection) -> Vec<f64> {
    let grid = &s.grid;
    let grad = scheme::energy_gradient(s);
    let mut h = vec![0.0; grid.len()];
    for i in 1..grid.n_rho - 1 {
        let area = grid.node_area(i);
        for j in 0..grid.n_theta {
            let k = grid.idx(i, j);
            h[k] = -0.5 * grad[k] / area;
        }
    }
    let gf = gradient_field_polar(s);
    let nodal = divergence(grid, &gf.chi);
    for i in [0, grid.n_rho - 1] {
        for j in 0..grid.n_theta {
            let k = grid.idx(i, j);
            h[k] = 0.5 * nodal[k];
        }
    }
    h
}

/// `max |2H − 2h0|` over interior nodes.
pub fn mean_curvature_residual(s: &GridSection, h0: f64) -> f64 {
    let h = mean_curvature(s);
    interior_max_abs(&s.grid, h.iter().map(|v| 2.0 * v - 2.0 * h0))
}

pub(crate) fn interior_max_abs(grid: &AnnularGrid, vals: impl Iterator<Item = f64>) -> f64 {
    vals.enumerate()
        .filter(|(k, _)| !grid.is_boundary_row(grid.ij(*k).0))
        .fold(0.0, |m, (_, v)| m.max(v.abs()))
}

/// Induced metric `g = I + Gσ Gσᵀ` in the orthonormal polar basis.
pub fn induced_metric(gf: &GradientField) -> Vec<[[f64; 2]; 2]> {
    gf.g.iter()
        .map(|v| [[1.0 + v[0] * v[0], v[0] * v[1]], [v[0] * v[1], 1.0 + v[1] * v[1]]])
        .collect()
}

/// Discrete `Div(P ∇v)` with `P = (I − χχᵀ)/W` taken from `base`.
///
/// This is the exact linearization of `2H` at `base`. Boundary rows carry no
/// equation and are returned as zero.
pub fn jacobi_residual(base: &GridSection, v: &[f64]) -> Vec<f64> {
    let grid = &base.grid;
    let kv = scheme::apply_hessian(base, v);
    let mut out = vec![0.0; grid.len()];
    for i in 1..grid.n_rho - 1 {
        let area = grid.node_area(i);
        for j in 0..grid.n_theta {
            let k = grid.idx(i, j);
            out[k] = -kv[k] / area;
        }
    }
    out
}

/// Intrinsic divergence on the graph, `Div_g X = (1/W) Div(W X)`.
pub fn divergence_g(s: &GridSection, x: &[[f64; 2]]) -> Vec<f64> {
    let gf = gradient_field_polar(s);
    divergence_g_with(&s.grid, &gf, x)
}

pub(crate) fn divergence_g_with(grid: &AnnularGrid, gf: &GradientField, x: &[[f64; 2]]) -> Vec<f64> {
    let wx: Vec<[f64; 2]> = x.iter().zip(&gf.w).map(|(v, w)| [w * v[0], w * v[1]]).collect();
    divergence(grid, &wx)
        .into_iter()
        .zip(&gf.w)
        .map(|(d, w)| d / w)
        .collect()
}

/// Terms of the discrete Green identity for [`divergence_g`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StokesAudit {
    /// `Σ Div_g(X) φ W dA` over interior nodes.
    pub divergence_term: f64,
    /// `Σ (X, ∇φ) W dA` with face gradients in ρ and central gradients in θ.
    pub gradient_term: f64,
    /// Net flux of `W X` weighted by `φ` through the faces next to the circles.
    pub boundary_flux: f64,
    /// `divergence_term + gradient_term − boundary_flux`.
    pub residual: f64,
}

pub fn stokes_audit(s: &GridSection, x: &[[f64; 2]], phi: &[f64]) -> StokesAudit {
    let grid = &s.grid;
    let gf = gradient_field_polar(s);
    let div = divergence_g_with(grid, &gf, x);
    let (nr, nt) = (grid.n_rho, grid.n_theta);
    let (hr, ht) = (grid.d_rho(), grid.d_theta());
    let sh: Vec<f64> = (0..nr).map(|i| grid.rho(i).sinh()).collect();
    let flux = |i: usize, j: usize| {
        let k = grid.idx(i, j);
        sh[i] * gf.w[k] * x[k][0]
    };
    let face = |i: usize, j: usize| 0.5 * (flux(i, j) + flux(i + 1, j));

    let mut divergence_term = 0.0;
    for i in 1..nr - 1 {
        for j in 0..nt {
            let k = grid.idx(i, j);
            divergence_term += grid.node_area(i) * div[k] * gf.w[k] * phi[k];
        }
    }
    let mut gradient_term = 0.0;
    for i in 1..nr - 2 {
        for j in 0..nt {
            let dphi = phi[grid.idx(i + 1, j)] - phi[grid.idx(i, j)];
            gradient_term += ht * face(i, j) * dphi;
        }
    }
    for i in 1..nr - 1 {
        for j in 0..nt {
            let k = grid.idx(i, j);
            let dphi = phi[grid.idx(i, grid.jp(j))] - phi[grid.idx(i, grid.jm(j))];
            gradient_term += hr * gf.w[k] * x[k][1] * 0.5 * dphi;
        }
    }
    let mut boundary_flux = 0.0;
    for j in 0..nt {
        boundary_flux += ht * (phi[grid.idx(nr - 2, j)] * face(nr - 2, j) - phi[grid.idx(1, j)] * face(0, j));
    }
    StokesAudit {
        divergence_term,
        gradient_term,
        boundary_flux,
        residual: divergence_term + gradient_term - boundary_flux,
    }
}

/// Both sides of `Σ_k A_k H_k φ_k = −½ Σ_corners w (χ, ∇φ)` for `φ` vanishing
/// on the boundary circles.
pub fn conservation_audit(s: &GridSection, phi: &[f64]) -> (f64, f64) {
    let grid = &s.grid;
    let h = mean_curvature(s);
    let mut lhs = 0.0;
    for i in 1..grid.n_rho - 1 {
        let area = grid.node_area(i);
        for j in 0..grid.n_theta {
            let k = grid.idx(i, j);
            lhs += area * h[k] * phi[k];
        }
    }
    let mut rhs = 0.0;
    visit_corners(grid, s.params.tau, |c| {
        let g = c.gradient(&s.values);
        let w = (1.0 + g[0] * g[0] + g[1] * g[1]).sqrt();
        let d = c.linear_gradient(phi);
        rhs += c.w * (g[0] * d[0] + g[1] * d[1]) / w;
    });
    (lhs, -0.5 * rhs)
}

/// Tangential part `T = ξ − νN` of the vertical field, in the chart basis
/// `X_a = ẽ_a + G_a ξ` of the graph. Equals `Gσ / W²`.
pub fn tangential_killing(gf: &GradientField) -> Vec<[f64; 2]> {
    gf.g.iter()
        .zip(&gf.w)
        .map(|(v, w)| [v[0] / (w * w), v[1] / (w * w)])
        .collect()
}

/// `max |‖T‖²_g + ν² − 1|` over nodes.
pub fn normal_split_defect(gf: &GradientField) -> f64 {
    let metric = induced_metric(gf);
    tangential_killing(gf)
        .iter()
        .zip(&metric)
        .zip(&gf.nu)
        .map(|((t, g), nu)| {
            let tt = g[0][0] * t[0] * t[0] + 2.0 * g[0][1] * t[0] * t[1] + g[1][1] * t[1] * t[1];
            (tt + nu * nu - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// Rows of the grid dump for a section.
pub fn section_records(s: &GridSection) -> Vec<GridRecord> {
    let grid = &s.grid;
    let gf = gradient_field_polar(s);
    let h = mean_curvature(s);
    (0..grid.len())
        .map(|k| {
            let (i, j) = grid.ij(k);
            GridRecord {
                rho: grid.rho(i),
                theta: grid.theta(j),
                sigma: s.values[k],
                g_rho: gf.g[k][0],
                g_theta: gf.g[k][1],
                w: gf.w[k],
                nu: gf.nu[k],
                h: h[k],
            }
        })
        .collect()
}

pub fn write_section_csv<W: Write>(s: &GridSection, out: W) -> Result<()> {
    write_records(&section_records(s), out)
}

/// A section known in closed form, with its first derivatives.
pub trait SmoothSection {
    fn value(&self, rho: f64, theta: f64) -> f64;
    /// `(∂ρ σ, ∂θ σ)`.
    fn derivatives(&self, rho: f64, theta: f64) -> (f64, f64);
}

/// Mean curvature of a smooth section at a point, from fourth-order central
/// differences of the exact flux `Gσ/W`.
pub fn pointwise_mean_curvature(params: &ModelParams, s: &dyn SmoothSection, rho: f64, theta: f64) -> f64 {
    let flux = |r: f64, t: f64| {
        let (dr, dt) = s.derivatives(r, t);
        let sh = r.sinh();
        let g = [dr, dt / sh - twist(params.tau, r)];
        let w = (1.0 + g[0] * g[0] + g[1] * g[1]).sqrt();
        (sh * g[0] / w, g[1] / w)
    };
    let h = 1e-3;
    let d4 =
        |f: &dyn Fn(f64) -> f64, x: f64| (8.0 * (f(x + h) - f(x - h)) - (f(x + 2.0 * h) - f(x - 2.0 * h))) / (12.0 * h);
    let radial = d4(&|r| flux(r, theta).0, rho);
    let angular = d4(&|t| flux(rho, t).1, theta);
    0.5 * (radial + angular) / rho.sinh()
}

/// Cubic Lagrange interpolation of a nodal field at `(ρ, θ)`; periodic in θ,
/// stencil clamped to the grid in ρ.
pub fn interpolate(grid: &AnnularGrid, field: &[f64], rho: f64, theta: f64) -> f64 {
    let x = (rho - grid.rho_min) / grid.d_rho();
    let i0 = (x.floor() as isize - 1).clamp(0, grid.n_rho as isize - 4) as usize;
    let tau = theta.rem_euclid(2.0 * std::f64::consts::PI) / grid.d_theta();
    let j0 = tau.floor() as isize - 1;
    let wr = lagrange4(x - i0 as f64);
    let wt = lagrange4(tau - j0 as f64);
    let nt = grid.n_theta as isize;
    let mut acc = 0.0;
    for (a, wa) in wr.iter().enumerate() {
        for (b, wb) in wt.iter().enumerate() {
            let j = (j0 + b as isize).rem_euclid(nt) as usize;
            acc += wa * wb * field[grid.idx(i0 + a, j)];
        }
    }
    acc
}

/// Weights of the cubic through nodes 0, 1, 2, 3 evaluated at `t`.
fn lagrange4(t: f64) -> [f64; 4] {
    [
        -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0,
        t * (t - 2.0) * (t - 3.0) / 2.0,
        -t * (t - 1.0) * (t - 3.0) / 2.0,
        t * (t - 1.0) * (t - 2.0) / 6.0,
    ]
}
