//! Corner-quadrature discretization of the area-type functional
//! `J[σ] = ∫ √(1 + ‖Gσ‖²) dA` on an annular grid.
//!
//! Each grid cell carries four quadrature points, one per corner. At a corner
//! the ρ-derivative is the difference along the cell edge in ρ through that
//! corner and the θ-derivative is the difference along the edge in θ. The
//! discrete mean curvature is `2H_k = −(∂J/∂σ_k) / A_k` with nodal area
//! `A_k = sinh ρ_k Δρ Δθ`, so the operator is in exact divergence form, its
//! linearization is the Hessian of `J` (symmetric, positive definite on
//! interior nodes) and constants lie in the kernel of the linearization.
//! For `Gσ` small the stencil reduces to the usual five-point Laplacian.

use crate::grid::{AnnularGrid, GridSection};

/// Radial twist `2τ tanh(ρ/2)` subtracted from the angular slope.
pub fn twist(tau: f64, rho: f64) -> f64 {
    2.0 * tau * (0.5 * rho).tanh()
}

/// One quadrature point.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Corner {
    pub w: f64,
    /// `(lo, hi)` node indices of the ρ-edge.
    pub rho_edge: (usize, usize),
    /// `(lo, hi)` node indices of the θ-edge.
    pub theta_edge: (usize, usize),
    pub inv_drho: f64,
    /// `1 / (Δθ sinh ρ)` on the corner's row.
    pub c_theta: f64,
    pub shift: f64,
}

impl Corner {
    /// Discrete `Gσ` at the corner.
    #[inline]
    pub fn gradient(&self, v: &[f64]) -> [f64; 2] {
        let l = self.linear_gradient(v);
        [l[0], l[1] - self.shift]
    }

    /// Discrete `(∂ρ v, ∂θ v / sinh ρ)` without the twist.
    #[inline]
    pub fn linear_gradient(&self, v: &[f64]) -> [f64; 2] {
        [
            (v[self.rho_edge.1] - v[self.rho_edge.0]) * self.inv_drho,
            (v[self.theta_edge.1] - v[self.theta_edge.0]) * self.c_theta,
        ]
    }

    /// Adds `w Bᵀ q` where `B` is the map `v ↦ linear_gradient(v)`.
    #[inline]
    pub fn scatter(&self, q: [f64; 2], out: &mut [f64]) {
        let r = self.w * q[0] * self.inv_drho;
        out[self.rho_edge.1] += r;
        out[self.rho_edge.0] -= r;
        let t = self.w * q[1] * self.c_theta;
        out[self.theta_edge.1] += t;
        out[self.theta_edge.0] -= t;
    }

    /// The four stencil entries `(node, (∂Gρ/∂σ, ∂Gθ/∂σ))`.
    pub fn stencil(&self) -> [(usize, [f64; 2]); 4] {
        [
            (self.rho_edge.0, [-self.inv_drho, 0.0]),
            (self.rho_edge.1, [self.inv_drho, 0.0]),
            (self.theta_edge.0, [0.0, -self.c_theta]),
            (self.theta_edge.1, [0.0, self.c_theta]),
        ]
    }
}

/// Calls `f` on every quadrature point, in a fixed order.
pub(crate) fn visit_corners(grid: &AnnularGrid, tau: f64, mut f: impl FnMut(&Corner)) {
    let d_rho = grid.d_rho();
    let d_theta = grid.d_theta();
    let inv_drho = 1.0 / d_rho;
    let rows: Vec<(f64, f64, f64)> = (0..grid.n_rho)
        .map(|i| {
            let rho = grid.rho(i);
            let s = rho.sinh();
            (0.25 * s * d_rho * d_theta, 1.0 / (d_theta * s), twist(tau, rho))
        })
        .collect();
    for i in 0..grid.n_rho - 1 {
        for j in 0..grid.n_theta {
            let jn = grid.jp(j);
            for a in 0..2 {
                let row = i + a;
                let (w, c_theta, shift) = rows[row];
                let theta_edge = (grid.idx(row, j), grid.idx(row, jn));
                for col in [j, jn] {
                    f(&Corner {
                        w,
                        rho_edge: (grid.idx(i, col), grid.idx(i + 1, col)),
                        theta_edge,
                        inv_drho,
                        c_theta,
                        shift,
                    });
                }
            }
        }
    }
}

/// Discrete area-type functional `Σ w W(G)`.
pub fn energy(s: &GridSection) -> f64 {
    let mut total = 0.0;
    visit_corners(&s.grid, s.params.tau, |c| {
        let g = c.gradient(&s.values);
        total += c.w * (1.0 + g[0] * g[0] + g[1] * g[1]).sqrt();
    });
    total
}

/// `∂J/∂σ_k` at every node.
pub fn energy_gradient(s: &GridSection) -> Vec<f64> {
    let mut out = vec![0.0; s.grid.len()];
    visit_corners(&s.grid, s.params.tau, |c| {
        let g = c.gradient(&s.values);
        let w = (1.0 + g[0] * g[0] + g[1] * g[1]).sqrt();
        c.scatter([g[0] / w, g[1] / w], &mut out);
    });
    out
}

/// Hessian-vector product `K v` of the discrete functional at `base`.
pub fn apply_hessian(base: &GridSection, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; base.grid.len()];
    visit_corners(&base.grid, base.params.tau, |c| {
        let q = coefficient_action(&c.gradient(&base.values), c.linear_gradient(v));
        c.scatter(q, &mut out);
    });
    out
}

/// `P(G) d = (d − χ (χ·d)) / W` with `χ = G / W`.
#[inline]
pub fn coefficient_action(g: &[f64; 2], d: [f64; 2]) -> [f64; 2] {
    let w = (1.0 + g[0] * g[0] + g[1] * g[1]).sqrt();
    let chi = [g[0] / w, g[1] / w];
    let dot = chi[0] * d[0] + chi[1] * d[1];
    [(d[0] - chi[0] * dot) / w, (d[1] - chi[1] * dot) / w]
}

/// Smallest `ν³ = (1 − ‖χ‖²)/W` over all quadrature points.
pub fn corner_ellipticity(s: &GridSection) -> f64 {
    let mut m = f64::INFINITY;
    visit_corners(&s.grid, s.params.tau, |c| {
        let g = c.gradient(&s.values);
        let w2 = 1.0 + g[0] * g[0] + g[1] * g[1];
        m = m.min(1.0 / (w2 * w2.sqrt()));
    });
    m
}

/// Entries of the Hessian restricted to interior nodes, lower triangle, in
/// the interior numbering of [`AnnularGrid::interior_index`].
pub(crate) fn assemble_interior_hessian(base: &GridSection) -> Vec<(usize, usize, f64)> {
    let grid = &base.grid;
    // 3×3 neighbourhood per interior node, slot = 3 (di + 1) + (dj + 1).
    let mut local = vec![[0.0f64; 9]; grid.n_interior()];
    let slot = |a: usize, b: usize| -> usize {
        let (ia, ja) = grid.ij(a);
        let (ib, jb) = grid.ij(b);
        let di = ib + 1 - ia;
        let dj = if jb == ja {
            1
        } else if jb == grid.jp(ja) {
            2
        } else {
            0
        };
        3 * di + dj
    };
    visit_corners(grid, base.params.tau, |c| {
        let g = c.gradient(&base.values);
        let st = c.stencil();
        for &(a, ba) in &st {
            let (ia, ja) = grid.ij(a);
            let Some(ka) = grid.interior_index(ia, ja) else {
                continue;
            };
            let pa = coefficient_action(&g, ba);
            for &(b, bb) in &st {
                if grid.is_boundary_row(grid.ij(b).0) {
                    continue;
                }
                local[ka][slot(a, b)] += c.w * (pa[0] * bb[0] + pa[1] * bb[1]);
            }
        }
    });
    let mut entries = Vec::with_capacity(5 * grid.n_interior());
    for i in 1..grid.n_rho - 1 {
        for j in 0..grid.n_theta {
            let ka = grid.interior_index(i, j).expect("interior row");
            let mut col: Vec<(usize, f64)> = Vec::with_capacity(9);
            for di in 0..3usize {
                let ib = i + di - 1;
                if grid.is_boundary_row(ib) {
                    continue;
                }
                for (dj, jb) in [(0usize, grid.jm(j)), (1, j), (2, grid.jp(j))] {
                    let kb = grid.interior_index(ib, jb).expect("interior row");
                    let v = local[ka][3 * di + dj];
                    if kb >= ka {
                        col.push((kb, v));
                    }
                }
            }
            col.sort_by_key(|e| e.0);
            entries.extend(col.into_iter().map(|(kb, v)| (kb, ka, v)));
        }
    }
    entries
}
