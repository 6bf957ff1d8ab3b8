use cmclab_core::config::parse_decimal;
use cmclab_core::estimates::interior_bound;
use cmclab_core::geometry::{grad_z, metric_eval, norm_sq, orthonormal_frame, ModelParams, ModelPoint};
use cmclab_core::graph::mean_curvature;
use cmclab_core::grid::{AnnularGrid, GridSection};
use cmclab_core::sister::{jacobi_potential_node, sister_node, NodeData};
use proptest::prelude::*;

fn point_in_disk(kappa: f64) -> impl Strategy<Value = ModelPoint> {
    let r_max = if kappa < 0.0 { 0.95 / (-kappa).sqrt() } else { 3.0 };
    (0.0..r_max, 0.0..std::f64::consts::TAU, -5.0..5.0f64)
        .prop_map(|(r, a, z): (f64, f64, f64)| ModelPoint::new(r * a.cos(), r * a.sin(), z))
}

fn params() -> impl Strategy<Value = ModelParams> {
    (prop_oneof![Just(-1.0), Just(0.0)], -2.0..2.0f64).prop_map(|(k, t)| ModelParams::new(k, t, 0.5).unwrap())
}

/// A metric, a `g`-symmetric `S` and a tangent `T`, from symmetric matrices
/// written in a `g`-orthonormal frame.
fn node() -> impl Strategy<Value = NodeData> {
    (
        (0.2..3.0f64, -1.0..1.0f64, 0.2..3.0f64),
        (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64),
        (0.01..1.0f64, -2.0..2.0f64, -2.0..2.0f64),
    )
        .prop_map(|((l11, l21, l22), (a, b, c), (nu, t1, t2))| {
            // g = UᵀU with U upper triangular; S = U⁻¹ M U for symmetric M
            let u = [[l11, l21], [0.0, l22]];
            let g = [[l11 * l11, l11 * l21], [l11 * l21, l21 * l21 + l22 * l22]];
            let m = [[a, b], [b, c]];
            let det = l11 * l22;
            let ui = [[l22 / det, -l21 / det], [0.0, l11 / det]];
            let mut mu = [[0.0; 2]; 2];
            let mut s = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    mu[i][j] = (0..2).map(|k| m[i][k] * u[k][j]).sum();
                }
            }
            for i in 0..2 {
                for j in 0..2 {
                    s[i][j] = (0..2).map(|k| ui[i][k] * mu[k][j]).sum();
                }
            }
            NodeData { g, s, nu, t: [t1, t2] }
        })
}

proptest! {
    #[test]
    fn frame_is_orthonormal((p, q) in params().prop_flat_map(|p| (Just(p), point_in_disk(p.kappa)))) {
        let f = orthonormal_frame(&p, &q).unwrap().vectors();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                let got = metric_eval(&p, &q, &f[i], &f[j]).unwrap();
                prop_assert!((got - want).abs() < 1e-12, "({i}, {j}) = {got}");
            }
        }
        // ‖ζ‖² = 1 + 4τ²(x² + y²)
        let zeta = norm_sq(&p, &q, &grad_z(&p, &q).unwrap()).unwrap();
        let want = 1.0 + 4.0 * p.tau * p.tau * (q.x * q.x + q.y * q.y);
        prop_assert!((zeta - want).abs() < 1e-12 * want);
    }

    #[test]
    fn sister_rotation_preserves_norms(n in node(), tau in -2.0..2.0f64) {
        let p = ModelParams::hyperbolic(tau, 0.5).unwrap();
        let s = sister_node(&n, p.theta);
        // ‖S − ½I‖² = ‖S‖² − tr S + ½ and ‖T‖ are kept by the rotation
        let want = n.s_norm_sq() - n.trace_s() + 0.5;
        prop_assert!((s.s_norm_sq() - want).abs() < 1e-10 * (1.0 + want));
        prop_assert!((s.t_norm_sq() - n.t_norm_sq()).abs() < 1e-10 * (1.0 + n.t_norm_sq()));
        prop_assert!((p.tau_prime * p.tau_prime - tau * tau - 0.25).abs() < 1e-12 * (1.0 + tau * tau));
    }

    #[test]
    fn potentials_differ_by_one_minus_trace(n in node(), tau in -2.0..2.0f64) {
        let p = ModelParams::hyperbolic(tau, 0.5).unwrap();
        let gap = jacobi_potential_node(&sister_node(&n, p.theta), tau, true) - jacobi_potential_node(&n, tau, false);
        let scale = 1.0 + n.s_norm_sq() + tau * tau;
        prop_assert!((gap - (1.0 - n.trace_s())).abs() < 1e-11 * scale, "gap {gap}, tr S {}", n.trace_s());
    }

    #[test]
    fn mean_curvature_is_invariant_under_the_isometries(
        tau in -1.0..1.0f64,
        lift in -3.0..3.0f64,
        a in -0.3..0.3f64,
        b in -0.3..0.3f64,
        roll in 1usize..16,
    ) {
        let p = ModelParams::hyperbolic(tau, 0.5).unwrap();
        let grid = AnnularGrid::new(0.5, 1.5, 9, 16).unwrap();
        let s = GridSection::from_fn(grid, p, |r, t| (r / 2.0).cosh() * 2.0 + a * r * t.cos() + b * (2.0 * t).sin()).unwrap();
        let h = mean_curvature(&s);
        // vertical translations
        let up = mean_curvature(&s.shifted(lift));
        for (x, y) in h.iter().zip(&up) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        // rotations about the axis, by whole grid steps
        let rolled: Vec<f64> = (0..grid.len())
            .map(|k| {
                let (i, j) = grid.ij(k);
                s.at(i, (j + roll) % grid.n_theta)
            })
            .collect();
        let hr = mean_curvature(&s.with_values(rolled).unwrap());
        for (k, v) in hr.iter().enumerate() {
            let (i, j) = grid.ij(k);
            if grid.is_boundary_row(i) {
                continue;
            }
            prop_assert!((v - h[grid.idx(i, (j + roll) % grid.n_theta)]).abs() < 1e-12);
        }
    }

    #[test]
    fn decimals_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(parse_decimal(&format!("{x:?}")).unwrap(), x);
        prop_assert_eq!(parse_decimal(&format!("{x:e}")).unwrap(), x);
    }

    #[test]
    fn interior_bound_is_monotone(k in 0.1..20.0f64, nu in 0.05..1.0f64, dk in 0.0..5.0f64, dn in 0.0..0.5f64) {
        prop_assert!(interior_bound(k + dk, nu) >= interior_bound(k, nu));
        prop_assert!(interior_bound(k, nu + dn) <= interior_bound(k, nu));
        prop_assert!(interior_bound(k, nu) >= 3.0 / nu);
    }
}
