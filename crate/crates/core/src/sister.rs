//! Daniel's sister correspondence on discrete surface data.
//!
//! A solved graph gives, at every node, the quadruple `(g, S, ν, T)` in the
//! chart basis `X₁ = ẽ₁ + G₁ξ`, `X₂ = ẽ₂ + G₂ξ` (the images of the orthonormal
//! polar basis of the base). The sister data of a cmc ½ surface in
//! `E(−1, τ)` is `(g, e^{θJ}(S − ½I), ν, e^{θJ}T)`, which describes a minimal
//! surface in `E(0, τ′)`; its projection to the plane pulls back the flat
//! metric `g₀ = g − (gT′)(gT′)ᵀ`.

use std::io::Write;

use nalgebra::Matrix2;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{horizontal_lift, Connection, ModelParams, ModelPoint, TangentVector};
use crate::graph::{gradient_field_polar, nodal_derivatives};
use crate::grid::{AnnularGrid, GridSection};

pub type Mat2 = [[f64; 2]; 2];

fn to_na(m: &Mat2) -> Matrix2<f64> {
    Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1])
}

fn from_na(m: &Matrix2<f64>) -> Mat2 {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

/// Surface data at one node. `s[a][b]` is the mixed tensor `S^a_b`, acting on
/// column vectors of chart components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeData {
    pub g: Mat2,
    pub s: Mat2,
    pub nu: f64,
    pub t: [f64; 2],
}

/// Upper-triangular `U` with `g = UᵀU`; `U v` are the components of `v` in a
/// `g`-orthonormal frame whose first vector is parallel to `X₁`.
fn orthonormal_coords(g: &Mat2) -> Matrix2<f64> {
    let l11 = g[0][0].sqrt();
    let l21 = g[0][1] / l11;
    let l22 = (g[1][1] - l21 * l21).sqrt();
    Matrix2::new(l11, l21, 0.0, l22)
}

impl NodeData {
    /// `S` in the `g`-orthonormal frame.
    pub fn s_orthonormal(&self) -> Matrix2<f64> {
        let u = orthonormal_coords(&self.g);
        let u_inv = u.try_inverse().expect("positive definite metric");
        u * to_na(&self.s) * u_inv
    }

    /// `‖S‖²`, the squared Frobenius norm in a `g`-orthonormal frame.
    pub fn s_norm_sq(&self) -> f64 {
        self.s_orthonormal().norm_squared()
    }

    pub fn trace_s(&self) -> f64 {
        self.s[0][0] + self.s[1][1]
    }

    /// `‖T‖²_g`.
    pub fn t_norm_sq(&self) -> f64 {
        let (g, t) = (&self.g, &self.t);
        g[0][0] * t[0] * t[0] + 2.0 * g[0][1] * t[0] * t[1] + g[1][1] * t[1] * t[1]
    }

    /// `e^{θJ}` in chart components. `J = N × ·` for the orientation in
    /// which the fibration has bundle curvature `+τ`; with the sign of the
    /// twist term in the model metric this turns `X₂` towards `X₁`, against
    /// the orientation of the polar chart.
    pub fn rotation(&self, theta: f64) -> Matrix2<f64> {
        let u = orthonormal_coords(&self.g);
        let u_inv = u.try_inverse().expect("positive definite metric");
        let (s, c) = theta.sin_cos();
        u_inv * Matrix2::new(c, s, -s, c) * u
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceData {
    #[serde(skip)]
    pub grid: AnnularGrid,
    pub tau: f64,
    pub nodes: Vec<NodeData>,
}

/// Node positions `(x, y)` and the coordinate tangents `∂ρ(x, y)`, `∂θ(x, y)`.
fn chart_geometry(rho: f64, theta: f64) -> ([f64; 2], [f64; 2], [f64; 2]) {
    let r = (0.5 * rho).tanh();
    let (s, c) = theta.sin_cos();
    let dr = 0.5 / (0.5 * rho).cosh().powi(2);
    ([r * c, r * s], [dr * c, dr * s], [-r * s, r * c])
}

/// Point of the graph over `(ρ, θ)` at height `z` and its upward unit normal
/// `N = (−G̃ + ξ)/W`, both in model coordinates. `g` is `Gσ` in the
/// orthonormal polar basis.
pub fn upward_normal(
    params: &ModelParams,
    rho: f64,
    theta: f64,
    z: f64,
    g: [f64; 2],
) -> Result<(ModelPoint, TangentVector)> {
    let (pos, d_rho, d_theta) = chart_geometry(rho, theta);
    let sh = rho.sinh();
    let base = [
        g[0] * d_rho[0] + g[1] * d_theta[0] / sh,
        g[0] * d_rho[1] + g[1] * d_theta[1] / sh,
    ];
    let p = ModelPoint::new(pos[0], pos[1], z);
    let lift = horizontal_lift(params, &p, base[0], base[1])?;
    let w = (1.0 + g[0] * g[0] + g[1] * g[1]).sqrt();
    Ok((p, TangentVector::new(-lift.vx / w, -lift.vy / w, (1.0 - lift.vz) / w)))
}

/// Extracts `(g, S, ν, T)` at every node.
///
/// `S X = −∇̄_X N` is computed in model coordinates: the components of the
/// upward normal are differenced along the grid and corrected by the
/// Christoffel symbols of the model.
pub fn extract_surface_data(s: &GridSection) -> Result<SurfaceData> {
    let grid = s.grid;
    let params = s.params;
    let gf = gradient_field_polar(s);
    if let Some(k) = gf.nu.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::NonGraphical { node: k, nu: gf.nu[k] });
    }
    let (sr, st) = nodal_derivatives(&grid, &s.values);
    let n = grid.len();
    let mut normal = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut points = Vec::with_capacity(n);
    for k in 0..n {
        let (i, j) = grid.ij(k);
        let (rho, theta) = (grid.rho(i), grid.theta(j));
        let (p, nk) = upward_normal(&params, rho, theta, s.values[k], gf.g[k])?;
        normal[0][k] = nk.vx;
        normal[1][k] = nk.vy;
        normal[2][k] = nk.vz;
        let (_, d_rho, d_theta) = chart_geometry(rho, theta);
        points.push((p, d_rho, d_theta));
    }
    let derivs: Vec<(Vec<f64>, Vec<f64>)> = normal.iter().map(|c| nodal_derivatives(&grid, c)).collect();
    let connection = Connection::with_default_step(params);
    let metric = crate::graph::induced_metric(&gf);
    let mut nodes = Vec::with_capacity(n);
    for k in 0..n {
        let (i, _) = grid.ij(k);
        let sh = grid.rho(i).sinh();
        let (p, d_rho, d_theta) = &points[k];
        let x_rho = TangentVector::new(d_rho[0], d_rho[1], sr[k]);
        let x_theta = TangentVector::new(d_theta[0], d_theta[1], st[k]);
        let nk = TangentVector::new(normal[0][k], normal[1][k], normal[2][k]);
        let gamma = connection.christoffel(p)?;
        let along = |a: usize, x: &TangentVector| {
            let d = if a == 0 {
                TangentVector::new(derivs[0].0[k], derivs[1].0[k], derivs[2].0[k])
            } else {
                TangentVector::new(derivs[0].1[k], derivs[1].1[k], derivs[2].1[k])
            };
            d + gamma.contract(x, &nk)
        };
        let dn = [along(0, &x_rho), along(1, &x_theta)];
        let tangents = [x_rho, x_theta];
        let scale = [1.0, 1.0 / sh];
        let mut h = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                let v = crate::geometry::metric_eval(&params, p, &dn[a], &tangents[b])?;
                h[a][b] = -v * scale[a] * scale[b];
            }
        }
        let sym = 0.5 * (h[0][1] + h[1][0]);
        let h = Matrix2::new(h[0][0], sym, sym, h[1][1]);
        let g = metric[k];
        let shape = to_na(&g).try_inverse().expect("positive definite metric") * h;
        let w2 = gf.w[k] * gf.w[k];
        nodes.push(NodeData {
            g,
            s: from_na(&shape),
            nu: gf.nu[k],
            t: [gf.g[k][0] / w2, gf.g[k][1] / w2],
        });
    }
    Ok(SurfaceData {
        grid,
        tau: params.tau,
        nodes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SisterData {
    #[serde(skip)]
    pub grid: AnnularGrid,
    pub theta: f64,
    pub tau_prime: f64,
    pub nodes: Vec<NodeData>,
}

/// Rotation applied to a single node.
pub fn sister_node(node: &NodeData, theta: f64) -> NodeData {
    let r = node.rotation(theta);
    let shifted = to_na(&node.s) - Matrix2::identity() * 0.5;
    let t = r * nalgebra::Vector2::new(node.t[0], node.t[1]);
    NodeData {
        g: node.g,
        s: from_na(&(r * shifted)),
        nu: node.nu,
        t: [t[0], t[1]],
    }
}

/// Sister data of a cmc ½ surface.
pub fn sister(data: &SurfaceData, params: &ModelParams) -> Result<SisterData> {
    if params.h0 != 0.5 {
        return Err(Error::SisterNeedsHalf(params.h0));
    }
    Ok(SisterData {
        grid: data.grid,
        theta: params.theta,
        tau_prime: params.tau_prime,
        nodes: data.nodes.iter().map(|n| sister_node(n, params.theta)).collect(),
    })
}

/// Potential of the Jacobi operator `Δ + Ric(N, N) + ‖S‖²` at one node.
/// With `is_sister` the node is read as data in `E(0, τ′)`, `τ′ = √(τ² + ¼)`.
pub fn jacobi_potential_node(node: &NodeData, tau: f64, is_sister: bool) -> f64 {
    let nu2 = node.nu * node.nu;
    if is_sister {
        let tp2 = tau * tau + 0.25;
        -2.0 * tp2 + 4.0 * tp2 * nu2 + node.s_norm_sq()
    } else {
        let t2 = tau * tau;
        -(1.0 + 2.0 * t2) + (1.0 + 4.0 * t2) * nu2 + node.s_norm_sq()
    }
}

pub fn jacobi_potential(nodes: &[NodeData], tau: f64, is_sister: bool) -> Vec<f64> {
    nodes.iter().map(|n| jacobi_potential_node(n, tau, is_sister)).collect()
}

/// Largest gap between the sister and original potentials over random nodes
/// with `tr S = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotentialSweep {
    pub samples: usize,
    pub max_residual: f64,
}

/// Draws a positive definite `g`, a `g`-symmetric `S` with trace 1 (built as
/// a symmetric trace-one matrix in a `g`-orthonormal frame), `ν ∈ (0, 1)` and
/// `τ ∈ [−2, 2]`, and compares the two potentials.
pub fn potential_identity_sweep<R: rand::Rng>(samples: usize, rng: &mut R) -> PotentialSweep {
    let mut max_residual = 0.0f64;
    for _ in 0..samples {
        let (a, b, c) = (
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        );
        let g = [[a * a + c * c + 0.1, c * b], [c * b, b * b + 0.1]];
        let u = orthonormal_coords(&g);
        let u_inv = u.try_inverse().expect("positive definite metric");
        let (p, q) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let s = u_inv * Matrix2::new(p, q, q, 1.0 - p) * u;
        let node = NodeData {
            g,
            s: from_na(&s),
            nu: rng.gen_range(f64::EPSILON..1.0),
            t: [0.0, 0.0],
        };
        let tau = rng.gen_range(-2.0..2.0);
        let theta = ModelParams::hyperbolic(tau, 0.5).expect("valid twist").theta;
        let gap =
            jacobi_potential_node(&sister_node(&node, theta), tau, true) - jacobi_potential_node(&node, tau, false);
        max_residual = max_residual.max(gap.abs());
    }
    PotentialSweep { samples, max_residual }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlatNode {
    /// Pull-back of the Euclidean metric, chart components.
    pub g0: Mat2,
    /// The field `G` with `g₀(G, ·) = g(T′, ·)`.
    pub field: [f64; 2],
    pub chi: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatChart {
    #[serde(skip)]
    pub grid: AnnularGrid,
    pub nodes: Vec<FlatNode>,
}

pub fn flat_node(node: &NodeData) -> Result<FlatNode> {
    if !(node.nu > 0.0) {
        return Err(Error::InvalidInput(format!("flat chart needs ν′ > 0, got {}", node.nu)));
    }
    let g = to_na(&node.g);
    let gt = g * nalgebra::Vector2::new(node.t[0], node.t[1]);
    let g0 = g - gt * gt.transpose();
    let field = g0
        .try_inverse()
        .ok_or_else(|| Error::InvalidInput("degenerate flat metric".into()))?
        * gt;
    let norm2 = (field.transpose() * g0 * field)[(0, 0)];
    let w = (1.0 + norm2).sqrt();
    Ok(FlatNode {
        g0: from_na(&g0),
        field: [field[0], field[1]],
        chi: [field[0] / w, field[1] / w],
    })
}

pub fn flat_chart(data: &SisterData) -> Result<FlatChart> {
    Ok(FlatChart {
        grid: data.grid,
        nodes: data.nodes.iter().map(flat_node).collect::<Result<_>>()?,
    })
}

/// Gauss curvature of a metric given in chart components at every node,
/// from the Brioschi formula in the coordinates `(ρ, θ)`.
pub fn gauss_curvature(grid: &AnnularGrid, metric: &[Mat2]) -> Vec<f64> {
    let n = grid.len();
    let mut e = vec![0.0; n];
    let mut f = vec![0.0; n];
    let mut gg = vec![0.0; n];
    for k in 0..n {
        let sh = grid.rho(grid.ij(k).0).sinh();
        e[k] = metric[k][0][0];
        f[k] = metric[k][0][1] * sh;
        gg[k] = metric[k][1][1] * sh * sh;
    }
    let (e_u, e_v) = nodal_derivatives(grid, &e);
    let (f_u, f_v) = nodal_derivatives(grid, &f);
    let (g_u, g_v) = nodal_derivatives(grid, &gg);
    let (_, e_vv) = nodal_derivatives(grid, &e_v);
    let (g_uu, _) = nodal_derivatives(grid, &g_u);
    let (_, f_uv) = nodal_derivatives(grid, &f_u);
    (0..n)
        .map(|k| {
            let m1 = nalgebra::Matrix3::new(
                -0.5 * e_vv[k] + f_uv[k] - 0.5 * g_uu[k],
                0.5 * e_u[k],
                f_u[k] - 0.5 * e_v[k],
                f_v[k] - 0.5 * g_u[k],
                e[k],
                f[k],
                0.5 * g_v[k],
                f[k],
                gg[k],
            );
            let m2 = nalgebra::Matrix3::new(
                0.0,
                0.5 * e_v[k],
                0.5 * g_u[k],
                0.5 * e_v[k],
                e[k],
                f[k],
                0.5 * g_u[k],
                f[k],
                gg[k],
            );
            let det = e[k] * gg[k] - f[k] * f[k];
            (m1.determinant() - m2.determinant()) / (det * det)
        })
        .collect()
}

/// Rows `margin..n_rho − margin`, where every stencil of the curvature and
/// Laplacian audits is central.
pub fn audit_rows(grid: &AnnularGrid, margin: usize) -> std::ops::Range<usize> {
    margin..grid.n_rho.saturating_sub(margin)
}

/// Rows of the fixed subannulus `[ρ_min + inset, ρ_max − inset]`, never
/// closer than `margin` rows to a circle. Convergence of nested differences is
/// measured here, on a region that does not move with the grid.
pub fn compact_rows(grid: &AnnularGrid, inset: f64, margin: usize) -> std::ops::Range<usize> {
    let lo = ((inset / grid.d_rho()) - 1e-9).ceil().max(0.0) as usize;
    audit_rows(grid, margin.max(lo))
}

/// Fraction of the annulus width left out at each side by [`interior_rows`].
pub const AUDIT_INSET: f64 = 0.125;

/// [`compact_rows`] with an inset of [`AUDIT_INSET`] times the width and a
/// margin of three rows.
pub fn interior_rows(grid: &AnnularGrid) -> std::ops::Range<usize> {
    compact_rows(grid, AUDIT_INSET * (grid.rho_max - grid.rho_min), 3)
}

pub fn max_abs_on_rows(grid: &AnnularGrid, field: &[f64], rows: std::ops::Range<usize>) -> f64 {
    rows.flat_map(|i| (0..grid.n_theta).map(move |j| (i, j)))
        .map(|(i, j)| field[grid.idx(i, j)].abs())
        .fold(0.0, f64::max)
}

/// Both sides of `ℓ(γ, g₀) ≥ ∫ ν dℓ_{H²}` along a path of neighbouring nodes,
/// by the trapezoid rule on each step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LengthBound {
    pub flat_length: f64,
    pub weighted_base_length: f64,
}

pub fn length_bound(
    grid: &AnnularGrid,
    data: &SisterData,
    chart: &FlatChart,
    path: &[(usize, usize)],
) -> Result<LengthBound> {
    let mut flat_length = 0.0;
    let mut weighted = 0.0;
    for w in path.windows(2) {
        let (a, b) = (w[0], w[1]);
        let di = b.0 as isize - a.0 as isize;
        let mut dj = b.1 as isize - a.1 as isize;
        let nt = grid.n_theta as isize;
        if dj > nt / 2 {
            dj -= nt;
        } else if dj < -nt / 2 {
            dj += nt;
        }
        if di.abs() > 1 || dj.abs() > 1 {
            return Err(Error::InvalidInput("path steps must join neighbouring nodes".into()));
        }
        let d_rho = di as f64 * grid.d_rho();
        let d_theta = dj as f64 * grid.d_theta();
        for end in [a, b] {
            let k = grid.idx(end.0, end.1);
            let v = [d_rho, grid.rho(end.0).sinh() * d_theta];
            let g0 = &chart.nodes[k].g0;
            let q = g0[0][0] * v[0] * v[0] + 2.0 * g0[0][1] * v[0] * v[1] + g0[1][1] * v[1] * v[1];
            flat_length += 0.5 * q.sqrt();
            weighted += 0.5 * data.nodes[k].nu * v[0].hypot(v[1]);
        }
    }
    Ok(LengthBound {
        flat_length,
        weighted_base_length: weighted,
    })
}

/// Per-node dump with the sister columns suffixed `_p`.
pub fn write_surface_csv<W: Write>(data: &SurfaceData, sister: Option<&SisterData>, out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = vec![
        "rho", "theta", "g11", "g12", "g22", "S11", "S12", "S21", "S22", "nu", "T1", "T2",
    ];
    if sister.is_some() {
        header.extend([
            "g11_p", "g12_p", "g22_p", "S11_p", "S12_p", "S21_p", "S22_p", "nu_p", "T1_p", "T2_p",
        ]);
    }
    wtr.write_record(&header)?;
    let cells = |n: &NodeData| {
        vec![
            n.g[0][0], n.g[0][1], n.g[1][1], n.s[0][0], n.s[0][1], n.s[1][0], n.s[1][1], n.nu, n.t[0], n.t[1],
        ]
    };
    for (k, node) in data.nodes.iter().enumerate() {
        let (i, j) = data.grid.ij(k);
        let mut row = vec![data.grid.rho(i), data.grid.theta(j)];
        row.extend(cells(node));
        if let Some(sd) = sister {
            row.extend(cells(&sd.nodes[k]));
        }
        wtr.write_record(row.iter().map(|v| format!("{}", v + 0.0)))?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::radial::radial_ode_oracle;
    use std::f64::consts::PI;

    fn grid(n: usize) -> AnnularGrid {
        AnnularGrid::new(0.5, 2.0, n + 1, 2 * n).unwrap()
    }

    #[test]
    fn totally_geodesic_slice() {
        let p = ModelParams::hyperbolic(0.0, 0.5).unwrap();
        let s = GridSection::constant(grid(16), p, 1.0).unwrap();
        let d = extract_surface_data(&s).unwrap();
        for n in &d.nodes {
            assert_eq!(n.g, [[1.0, 0.0], [0.0, 1.0]]);
            assert_eq!(n.nu, 1.0);
            assert_eq!(n.t, [0.0, 0.0]);
            assert!(n.s.iter().flatten().all(|v| v.abs() < 1e-9), "{:?}", n.s);
        }
    }

    #[test]
    fn constant_section_with_twist() {
        let tau = 0.3;
        let p = ModelParams::hyperbolic(tau, 0.5).unwrap();
        let g = grid(16);
        let s = GridSection::constant(g, p, 0.0).unwrap();
        let d = extract_surface_data(&s).unwrap();
        for (k, n) in d.nodes.iter().enumerate() {
            let b = 2.0 * tau * (0.5 * g.rho(g.ij(k).0)).tanh();
            assert!((n.nu - 1.0 / (1.0 + b * b).sqrt()).abs() < 1e-15);
            assert!((n.t_norm_sq() + n.nu * n.nu - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn radial_trace_converges_to_one() {
        let p = ModelParams::hyperbolic(0.0, 0.5).unwrap();
        let prof = radial_ode_oracle(&p, (0.0, 3.0), true, 0.0).unwrap();
        let err = |n: usize| {
            let g = grid(n);
            let s = GridSection::from_fn(g, p, |r, _| prof.eval(r).unwrap()).unwrap();
            let d = extract_surface_data(&s).unwrap();
            let tr: Vec<f64> = d.nodes.iter().map(|n| n.trace_s() - 1.0).collect();
            max_abs_on_rows(&g, &tr, audit_rows(&g, 2))
        };
        let (a, b) = (err(16), err(32));
        assert!(a < 1e-2 && a / b > 3.5, "{a} {b}");
    }

    #[test]
    fn sister_angles() {
        let p = ModelParams::hyperbolic(0.0, 0.5).unwrap();
        assert!((p.theta - PI / 2.0).abs() < 1e-15);
        assert_eq!(p.tau_prime, 0.5);
        let p = ModelParams::hyperbolic(0.5, 0.5).unwrap();
        assert!((p.theta - PI / 4.0).abs() < 1e-15);
        assert!((p.tau_prime - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn sister_needs_half() {
        let p = ModelParams::hyperbolic(0.0, 0.25).unwrap();
        let s = GridSection::constant(grid(8), p, 0.0).unwrap();
        let d = extract_surface_data(&s).unwrap();
        assert!(matches!(sister(&d, &p), Err(Error::SisterNeedsHalf(_))));
    }

    fn node(g: Mat2, s_on: Matrix2<f64>, nu: f64, t_dir: f64) -> NodeData {
        let u = orthonormal_coords(&g);
        let u_inv = u.try_inverse().unwrap();
        let s = u_inv * s_on * u;
        let t_len = (1.0 - nu * nu).sqrt();
        let t = u_inv * nalgebra::Vector2::new(t_len * t_dir.cos(), t_len * t_dir.sin());
        NodeData {
            g,
            s: from_na(&s),
            nu,
            t: [t[0], t[1]],
        }
    }

    #[test]
    fn trace_free_rotation_is_minimal() {
        let g = [[1.3, 0.2], [0.2, 0.9]];
        let n = node(g, Matrix2::new(0.8, 0.3, 0.3, 0.2), 0.6, 1.0);
        for tau in [0.0, 0.5, 1.7] {
            let p = ModelParams::hyperbolic(tau, 0.5).unwrap();
            let sn = sister_node(&n, p.theta);
            assert!(sn.trace_s().abs() < 1e-14);
            assert!((sn.s_norm_sq() - (n.s_norm_sq() - 0.5)).abs() < 1e-14);
            assert!((sn.t_norm_sq() - n.t_norm_sq()).abs() < 1e-14);
            assert_eq!(sn.g, n.g);
            let gap = jacobi_potential_node(&sn, tau, true) - jacobi_potential_node(&n, tau, false);
            assert!(gap.abs() < 1e-14);
        }
    }

    #[test]
    fn umbilic_half_identity() {
        // S = ½I, ν = 1, τ = 0: ‖S′‖² = 0 and both potentials equal ½
        let n = node([[1.0, 0.0], [0.0, 1.0]], Matrix2::identity() * 0.5, 1.0, 0.0);
        let sn = sister_node(&n, PI / 2.0);
        assert_eq!(sn.s_norm_sq(), 0.0);
        assert_eq!(jacobi_potential_node(&n, 0.0, false), 0.5);
        assert_eq!(jacobi_potential_node(&sn, 0.0, true), 0.5);
    }

    #[test]
    fn flat_chart_rejects_vertical_data() {
        let n = node([[1.0, 0.0], [0.0, 1.0]], Matrix2::zeros(), 0.0, 0.0);
        assert!(flat_node(&n).is_err());
    }

    #[test]
    fn flat_chart_field_norm() {
        let n = node([[2.0, 0.4], [0.4, 1.1]], Matrix2::new(0.5, 0.1, 0.1, 0.5), 0.4, 0.7);
        let f = flat_node(&sister_node(&n, 1.1)).unwrap();
        let g0 = to_na(&f.g0);
        let v = nalgebra::Vector2::new(f.field[0], f.field[1]);
        let norm2 = (v.transpose() * g0 * v)[(0, 0)];
        assert!((norm2 - (1.0 / (0.4f64 * 0.4) - 1.0)).abs() < 1e-12);
        assert!((g0.determinant() - to_na(&n.g).determinant() * 0.16).abs() < 1e-12);
    }

    #[test]
    fn brioschi_recovers_hyperbolic_curvature() {
        let err = |n: usize| {
            let g = grid(n);
            let metric = vec![[[1.0, 0.0], [0.0, 1.0]]; g.len()];
            let dev: Vec<f64> = gauss_curvature(&g, &metric).iter().map(|v| v + 1.0).collect();
            max_abs_on_rows(&g, &dev, audit_rows(&g, 3))
        };
        let (a, b) = (err(32), err(64));
        assert!(b < 1e-3 && a / b > 3.5, "{a} {b}");
    }

    struct Tilted(crate::solver::RadialProfile);

    impl crate::solver::SectionProvider for Tilted {
        fn value(&self, rho: f64, theta: f64) -> Result<f64> {
            Ok(self.0.value(rho, theta)? + 0.1 * rho * theta.cos())
        }
    }

    #[test]
    fn flat_chart_of_solved_graphs_converges_to_flat() {
        use crate::solver::continuation::base_solution;
        use crate::solver::SolverConfig;
        for tau in [0.0, 0.3] {
            let p = ModelParams::hyperbolic(tau, 0.5).unwrap();
            let sigma = radial_ode_oracle(&p, (0.0, 3.0), true, 0.0).unwrap();
            let mut k_max = Vec::new();
            for n in [32, 64, 128] {
                let g = AnnularGrid::new(0.5, 2.5, n + 1, 2 * n).unwrap();
                let (s, _) = base_solution(&Tilted(sigma), g, p, &SolverConfig::default()).unwrap();
                let data = extract_surface_data(&s).unwrap();
                let chart = flat_chart(&sister(&data, &p).unwrap()).unwrap();
                let g0: Vec<Mat2> = chart.nodes.iter().map(|f| f.g0).collect();
                let k = gauss_curvature(&g, &g0);
                k_max.push(max_abs_on_rows(&g, &k, interior_rows(&g)));
            }
            let ratios: Vec<f64> = k_max.windows(2).map(|w| w[0] / w[1]).collect();
            assert!(ratios.iter().all(|r| *r >= 3.5), "τ = {tau}: {k_max:?}");
        }
    }

    #[test]
    fn random_potential_sweep() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let sweep = potential_identity_sweep(20_000, &mut rng);
        assert!(sweep.max_residual < 1e-12, "{sweep:?}");
    }
}
