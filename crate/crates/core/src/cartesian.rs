//! Sections over square patches of the disk model, used to cross-check the
//! polar discretization in a second chart.
//!
//! In the coordinates of the model,
//! `Gσ = λ⁻²(σ_x + 2τλy) ∂x + λ⁻²(σ_y − 2τλx) ∂y` and
//! `Div X = λ⁻² (∂x(λ² Xˣ) + ∂y(λ² Xʸ))`, so `2H = λ⁻² Div_eucl(F)` with the
//! flux `F = (σ_x + 2τλy, σ_y − 2τλx) / W`.

use crate::error::{Error, Result};
use crate::geometry::{conformal_factor, ModelParams};
use crate::graph::GradientField;

/// Square patch `[cx − a, cx + a] × [cy − a, cy + a]` with `n` cells a side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianPatch {
    pub cx: f64,
    pub cy: f64,
    pub half_width: f64,
    pub n: usize,
}

impl CartesianPatch {
    pub fn new(cx: f64, cy: f64, half_width: f64, n: usize) -> Result<Self> {
        if !(half_width > 0.0) || n < 4 {
            return Err(Error::InvalidInput("patch needs a positive width and n ≥ 4".into()));
        }
        let far = (cx.abs() + half_width).hypot(cy.abs() + half_width);
        if !(far < 1.0) {
            return Err(Error::Domain {
                x: cx.abs() + half_width,
                y: cy.abs() + half_width,
                kappa: -1.0,
            });
        }
        Ok(Self { cx, cy, half_width, n })
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn side(&self) -> usize {
        self.n + 1
    }

    pub fn x(&self, i: usize) -> f64 {
        self.cx - self.half_width + i as f64 * self.h()
    }

    pub fn y(&self, j: usize) -> f64 {
        self.cy - self.half_width + j as f64 * self.h()
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.side() + j
    }

    /// Interior nodes `(i, j)` in storage order.
    pub fn interior(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (1..self.n).flat_map(move |i| (1..self.n).map(move |j| (i, j)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CartesianSection {
    pub patch: CartesianPatch,
    pub params: ModelParams,
    pub values: Vec<f64>,
}

impl CartesianSection {
    pub fn from_fn(patch: CartesianPatch, params: ModelParams, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if params.kappa != -1.0 {
            return Err(Error::InvalidInput("patches live in the κ = −1 model".into()));
        }
        let mut values = Vec::with_capacity(patch.side() * patch.side());
        for i in 0..patch.side() {
            for j in 0..patch.side() {
                let v = f(patch.x(i), patch.y(j));
                if !v.is_finite() {
                    return Err(Error::InvalidInput("non-finite section value".into()));
                }
                values.push(v);
            }
        }
        Ok(Self { patch, params, values })
    }

    fn lambda(&self, x: f64, y: f64) -> f64 {
        conformal_factor(&self.params, x, y).expect("patch inside the disk")
    }
}

/// `Gσ` at interior nodes in the orthonormal frame `(λ⁻¹∂x, λ⁻¹∂y)`, so that
/// its Euclidean length is the hyperbolic norm. Central differences.
pub fn gradient_field_cartesian(s: &CartesianSection) -> GradientField {
    let p = &s.patch;
    let h = p.h();
    let tau = s.params.tau;
    let g = p
        .interior()
        .map(|(i, j)| {
            let (x, y) = (p.x(i), p.y(j));
            let lam = s.lambda(x, y);
            let sx = (s.values[p.idx(i + 1, j)] - s.values[p.idx(i - 1, j)]) / (2.0 * h);
            let sy = (s.values[p.idx(i, j + 1)] - s.values[p.idx(i, j - 1)]) / (2.0 * h);
            [(sx + 2.0 * tau * lam * y) / lam, (sy - 2.0 * tau * lam * x) / lam]
        })
        .collect();
    GradientField::from_components(g)
}

/// `H` at interior nodes from conservative fluxes on the cell faces.
pub fn mean_curvature_cartesian(s: &CartesianSection) -> Vec<f64> {
    let p = &s.patch;
    let h = p.h();
    let tau = s.params.tau;
    let v = |i: usize, j: usize| s.values[p.idx(i, j)];
    // flux through the face between (i, j) and (i + 1, j)
    let fx = |i: usize, j: usize| {
        let x = p.x(i) + 0.5 * h;
        let y = p.y(j);
        let lam = s.lambda(x, y);
        let sx = (v(i + 1, j) - v(i, j)) / h;
        let sy = (v(i, j + 1) - v(i, j - 1) + v(i + 1, j + 1) - v(i + 1, j - 1)) / (4.0 * h);
        let a = sx + 2.0 * tau * lam * y;
        let b = sy - 2.0 * tau * lam * x;
        a / (1.0 + (a * a + b * b) / (lam * lam)).sqrt()
    };
    let fy = |i: usize, j: usize| {
        let x = p.x(i);
        let y = p.y(j) + 0.5 * h;
        let lam = s.lambda(x, y);
        let sy = (v(i, j + 1) - v(i, j)) / h;
        let sx = (v(i + 1, j) - v(i - 1, j) + v(i + 1, j + 1) - v(i - 1, j + 1)) / (4.0 * h);
        let a = sx + 2.0 * tau * lam * y;
        let b = sy - 2.0 * tau * lam * x;
        b / (1.0 + (a * a + b * b) / (lam * lam)).sqrt()
    };
    p.interior()
        .map(|(i, j)| {
            let lam = s.lambda(p.x(i), p.y(j));
            let div = (fx(i, j) - fx(i - 1, j) + fy(i, j) - fy(i, j - 1)) / h;
            0.5 * div / (lam * lam)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{cartesian_to_polar, polar_to_cartesian, PolarPoint};
    use crate::graph::{gradient_field_polar, interpolate, mean_curvature};
    use crate::grid::{AnnularGrid, GridSection};

    fn params(tau: f64) -> ModelParams {
        ModelParams::hyperbolic(tau, 0.5).unwrap()
    }

    fn sigma(x: f64, y: f64) -> f64 {
        0.3 * x * x - 0.2 * x * y + 0.5 * y + 0.1 * (3.0 * x).sin()
    }

    #[test]
    fn patch_validation() {
        assert!(CartesianPatch::new(0.0, 0.0, 0.5, 8).is_ok());
        assert!(CartesianPatch::new(0.6, 0.6, 0.2, 8).is_err());
        assert!(CartesianPatch::new(0.0, 0.0, 0.5, 2).is_err());
    }

    #[test]
    fn constant_section() {
        let patch = CartesianPatch::new(0.1, -0.2, 0.3, 16).unwrap();
        let s = CartesianSection::from_fn(patch, params(0.0), |_, _| 2.0).unwrap();
        assert!(gradient_field_cartesian(&s).g.iter().all(|g| g == &[0.0, 0.0]));
        assert!(mean_curvature_cartesian(&s).iter().all(|h| *h == 0.0));
    }

    #[test]
    fn x_only_section_without_twist() {
        // Gσ = (σ_x / λ²) ∂x, i.e. σ_x / λ in the orthonormal frame
        let patch = CartesianPatch::new(0.0, 0.0, 0.4, 16).unwrap();
        let s = CartesianSection::from_fn(patch, params(0.0), |x, _| 3.0 * x).unwrap();
        let gf = gradient_field_cartesian(&s);
        for (k, (i, j)) in patch.interior().enumerate() {
            let lam = 2.0 / (1.0 - patch.x(i).powi(2) - patch.y(j).powi(2));
            assert!((gf.g[k][0] - 3.0 / lam).abs() < 1e-12);
            assert_eq!(gf.g[k][1], 0.0);
        }
    }

    fn chart_gap(m: usize, tau: f64) -> (f64, f64) {
        let prm = params(tau);
        let grid = AnnularGrid::new(0.2, 1.6, 2 * m + 1, 8 * m).unwrap();
        let polar = GridSection::from_fn(grid, prm, |r, t| {
            let (x, y) = polar_to_cartesian(&PolarPoint::new(r, t));
            sigma(x, y)
        })
        .unwrap();
        let hp = mean_curvature(&polar);
        let wp: Vec<f64> = gradient_field_polar(&polar).w;
        let patch = CartesianPatch::new(0.3, 0.2, 0.12, m).unwrap();
        let cart = CartesianSection::from_fn(patch, prm, sigma).unwrap();
        let hc = mean_curvature_cartesian(&cart);
        let wc = gradient_field_cartesian(&cart).w;
        let (mut dh, mut dw) = (0.0f64, 0.0f64);
        for (k, (i, j)) in patch.interior().enumerate() {
            let q = cartesian_to_polar(patch.x(i), patch.y(j)).unwrap();
            dh = dh.max((interpolate(&grid, &hp, q.rho, q.theta_ang) - hc[k]).abs());
            dw = dw.max((interpolate(&grid, &wp, q.rho, q.theta_ang) - wc[k]).abs());
        }
        (dh, dw)
    }

    #[test]
    fn charts_agree_to_second_order() {
        for tau in [0.0, 0.4] {
            let gaps: Vec<(f64, f64)> = [16, 32, 64].iter().map(|m| chart_gap(*m, tau)).collect();
            for w in gaps.windows(2) {
                let order_h = (w[0].0 / w[1].0).log2();
                let order_w = (w[0].1 / w[1].1).log2();
                assert!(order_h >= 1.9, "τ = {tau}: H order {order_h} from {gaps:?}");
                assert!(order_w >= 1.9, "τ = {tau}: W order {order_w} from {gaps:?}");
            }
        }
    }
}
