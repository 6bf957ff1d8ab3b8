//! Explicit model of the homogeneous spaces E(κ, τ), κ ≤ 0.
//!
//! The space is realised as `D_κ × ℝ` with coordinates `(x, y, z)` and metric
//!
//! ```text
//! λ²(dx² + dy²) + (2τλ(y dx − x dy) + dz)²,   λ = 2 / (1 + κ(x² + y²)).
//! ```
//!
//! Inner products always go through the closed-form metric. The Levi-Civita
//! connection is obtained from Christoffel symbols that are central-differenced
//! from the same metric, so the kernel never needs a symbolic connection.

use std::f64::consts::PI;
use std::io::Write;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};

/// Default central-difference step for connection data.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Parameters of the ambient space together with the target mean curvature.
///
/// `theta` and `tau_prime` describe the sister correspondence and are derived
/// from `tau` on construction: `τ + i/2 = τ′ e^{iθ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    pub kappa: f64,
    pub tau: f64,
    pub h0: f64,
    pub theta: f64,
    pub tau_prime: f64,
}

impl ModelParams {
    pub fn new(kappa: f64, tau: f64, h0: f64) -> Result<Self> {
        if !(kappa.is_finite() && tau.is_finite() && h0.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite model parameters (kappa={kappa}, tau={tau}, h0={h0})"
            )));
        }
        if kappa > 0.0 {
            return Err(Error::InvalidInput(format!("kappa must be <= 0, got {kappa}")));
        }
        let tau_prime = (tau * tau + 0.25).sqrt();
        // arg(τ + i/2); the imaginary part is positive so θ ∈ (0, π).
        let theta = 0.5f64.atan2(tau);
        Ok(Self {
            kappa,
            tau,
            h0,
            theta,
            tau_prime,
        })
    }

    /// E(−1, τ) with target mean curvature `h0`.
    pub fn hyperbolic(tau: f64, h0: f64) -> Result<Self> {
        Self::new(-1.0, tau, h0)
    }

    /// The space E(0, τ′) hosting the sister minimal surfaces.
    pub fn sister_space(&self) -> Self {
        Self::new(0.0, self.tau_prime, 0.0).expect("tau_prime is finite")
    }

    fn in_domain(&self, x: f64, y: f64) -> Result<f64> {
        let denom = 1.0 + self.kappa * (x * x + y * y);
        if denom > 0.0 && x.is_finite() && y.is_finite() {
            Ok(denom)
        } else {
            Err(Error::Domain {
                x,
                y,
                kappa: self.kappa,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl ModelPoint {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub const fn origin() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    fn coord(&self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    fn shifted(&self, axis: usize, h: f64) -> Self {
        let mut q = *self;
        match axis {
            0 => q.x += h,
            1 => q.y += h,
            _ => q.z += h,
        }
        q
    }
}

/// Tangent vector in the coordinate basis `∂x, ∂y, ∂z`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct TangentVector {
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
}

impl TangentVector {
    pub const fn new(vx: f64, vy: f64, vz: f64) -> Self {
        Self { vx, vy, vz }
    }

    pub const fn d_x() -> Self {
        Self::new(1.0, 0.0, 0.0)
    }

    pub const fn d_y() -> Self {
        Self::new(0.0, 1.0, 0.0)
    }

    pub const fn d_z() -> Self {
        Self::new(0.0, 0.0, 1.0)
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.vx, self.vy, self.vz)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn is_finite(&self) -> bool {
        self.vx.is_finite() && self.vy.is_finite() && self.vz.is_finite()
    }

    fn component(&self, axis: usize) -> f64 {
        match axis {
            0 => self.vx,
            1 => self.vy,
            _ => self.vz,
        }
    }
}

impl Add for TangentVector {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.vx + o.vx, self.vy + o.vy, self.vz + o.vz)
    }
}

impl Sub for TangentVector {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.vx - o.vx, self.vy - o.vy, self.vz - o.vz)
    }
}

impl Neg for TangentVector {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.vx, -self.vy, -self.vz)
    }
}

impl Mul<TangentVector> for f64 {
    type Output = TangentVector;
    fn mul(self, v: TangentVector) -> TangentVector {
        TangentVector::new(self * v.vx, self * v.vy, self * v.vz)
    }
}

/// Values of the orthonormal frame `F₁, F₂, ξ` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub f1: TangentVector,
    pub f2: TangentVector,
    pub xi: TangentVector,
}

impl Frame {
    pub fn vectors(&self) -> [TangentVector; 3] {
        [self.f1, self.f2, self.xi]
    }
}

/// Hyperbolic polar coordinates on `D₋₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolarPoint {
    pub rho: f64,
    pub theta_ang: f64,
}

impl PolarPoint {
    pub const fn new(rho: f64, theta_ang: f64) -> Self {
        Self { rho, theta_ang }
    }
}

pub fn conformal_factor(params: &ModelParams, x: f64, y: f64) -> Result<f64> {
    Ok(2.0 / params.in_domain(x, y)?)
}

/// Coefficients `(a, b)` of the connection one-form `a dx + b dy + dz`.
fn vertical_form(params: &ModelParams, p: &ModelPoint) -> Result<(f64, f64, f64)> {
    let lambda = conformal_factor(params, p.x, p.y)?;
    let s = 2.0 * params.tau * lambda;
    Ok((lambda, s * p.y, -s * p.x))
}

/// Gram matrix of the metric in the coordinate basis.
pub fn metric_matrix(params: &ModelParams, p: &ModelPoint) -> Result<Matrix3<f64>> {
    let (lambda, a, b) = vertical_form(params, p)?;
    let l2 = lambda * lambda;
    Ok(Matrix3::new(l2 + a * a, a * b, a, a * b, l2 + b * b, b, a, b, 1.0))
}

pub fn metric_eval(params: &ModelParams, p: &ModelPoint, u: &TangentVector, v: &TangentVector) -> Result<f64> {
    let (lambda, a, b) = vertical_form(params, p)?;
    let wu = a * u.vx + b * u.vy + u.vz;
    let wv = a * v.vx + b * v.vy + v.vz;
    Ok(lambda * lambda * (u.vx * v.vx + u.vy * v.vy) + wu * wv)
}

pub fn norm_sq(params: &ModelParams, p: &ModelPoint, v: &TangentVector) -> Result<f64> {
    metric_eval(params, p, v, v)
}

pub fn orthonormal_frame(params: &ModelParams, p: &ModelPoint) -> Result<Frame> {
    let lambda = conformal_factor(params, p.x, p.y)?;
    let two_tau = 2.0 * params.tau;
    Ok(Frame {
        f1: TangentVector::new(1.0 / lambda, 0.0, -two_tau * p.y),
        f2: TangentVector::new(0.0, 1.0 / lambda, two_tau * p.x),
        xi: TangentVector::d_z(),
    })
}

/// Gradient `ζ` of the height coordinate `z`.
pub fn grad_z(params: &ModelParams, p: &ModelPoint) -> Result<TangentVector> {
    let frame = orthonormal_frame(params, p)?;
    let two_tau = 2.0 * params.tau;
    Ok((-two_tau * p.y) * frame.f1 + (two_tau * p.x) * frame.f2 + frame.xi)
}

/// Horizontal lift of the base vector `a ∂x + b ∂y` at `p`.
pub fn horizontal_lift(params: &ModelParams, p: &ModelPoint, a: f64, b: f64) -> Result<TangentVector> {
    let (_, fa, fb) = vertical_form(params, p)?;
    Ok(TangentVector::new(a, b, -(fa * a + fb * b)))
}

/// The homothety `h_μ(p) = μp`, returning the image point and the parameters
/// of the target space `E(κ/μ², τ/μ)`. Mean curvature scales like `1/μ`, so
/// the target `h0` becomes `h0/μ`.
pub fn scaling_map(mu: f64, p: &ModelPoint, params: &ModelParams) -> Result<(ModelPoint, ModelParams)> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "scaling factor must be positive, got {mu}"
        )));
    }
    let target = ModelParams::new(params.kappa / (mu * mu), params.tau / mu, params.h0 / mu)?;
    let q = ModelPoint::new(mu * p.x, mu * p.y, mu * p.z);
    target.in_domain(q.x, q.y)?;
    Ok((q, target))
}

/// Flow of the Killing field `ξ = ∂z`.
pub fn vertical_translate(p: &ModelPoint, t: f64) -> ModelPoint {
    ModelPoint::new(p.x, p.y, p.z + t)
}

/// Christoffel symbols `Γ[k][i][j]` of the coordinate basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Christoffel(pub [[[f64; 3]; 3]; 3]);

impl Christoffel {
    /// `Γ(u, v)^k = Γ^k_ij u^i v^j`.
    pub fn contract(&self, u: &TangentVector, v: &TangentVector) -> TangentVector {
        let mut out = [0.0; 3];
        for (k, slot) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    acc += self.0[k][i][j] * u.component(i) * v.component(j);
                }
            }
            *slot = acc;
        }
        TangentVector::new(out[0], out[1], out[2])
    }
}

/// Levi-Civita connection of the model, central-differenced from the metric.
#[derive(Debug, Clone, Copy)]
pub struct Connection {
    params: ModelParams,
    step: f64,
}

impl Connection {
    pub fn new(params: ModelParams, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::StepUnderflow { step, at: 0.0 });
        }
        Ok(Self { params, step })
    }

    pub fn with_default_step(params: ModelParams) -> Self {
        Self {
            params,
            step: DEFAULT_FD_STEP,
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    fn check_step(&self, p: &ModelPoint) -> Result<()> {
        for axis in 0..3 {
            let c = p.coord(axis);
            if c + self.step == c || c - self.step == c {
                return Err(Error::StepUnderflow { step: self.step, at: c });
            }
        }
        Ok(())
    }

    pub fn christoffel(&self, p: &ModelPoint) -> Result<Christoffel> {
        self.check_step(p)?;
        let h = self.step;
        let mut dg = [Matrix3::zeros(); 3];
        for (axis, slot) in dg.iter_mut().enumerate() {
            let plus = metric_matrix(&self.params, &p.shifted(axis, h))?;
            let minus = metric_matrix(&self.params, &p.shifted(axis, -h))?;
            *slot = (plus - minus) / (2.0 * h);
        }
        let g_inv = metric_matrix(&self.params, p)?
            .try_inverse()
            .ok_or_else(|| Error::InvalidInput("degenerate metric".into()))?;
        let mut gamma = [[[0.0; 3]; 3]; 3];
        for (k, gk) in gamma.iter_mut().enumerate() {
            for (i, gki) in gk.iter_mut().enumerate() {
                for (j, slot) in gki.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for l in 0..3 {
                        acc += g_inv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                    }
                    *slot = 0.5 * acc;
                }
            }
        }
        Ok(Christoffel(gamma))
    }

    /// `∇̄_X Y` at `p` for vector fields given as samplers.
    pub fn covariant_derivative<X, Y>(&self, x: X, y: Y, p: &ModelPoint) -> Result<TangentVector>
    where
        X: Fn(&ModelPoint) -> Result<TangentVector>,
        Y: Fn(&ModelPoint) -> Result<TangentVector>,
    {
        let gamma = self.christoffel(p)?;
        let xp = x(p)?;
        let yp = y(p)?;
        let h = self.step;
        let mut directional = TangentVector::default();
        for axis in 0..3 {
            let weight = xp.component(axis);
            if weight == 0.0 {
                continue;
            }
            let dy = (y(&p.shifted(axis, h))? - y(&p.shifted(axis, -h))?).to_vector() / (2.0 * h);
            directional = directional + weight * TangentVector::from_vector(&dy);
        }
        Ok(directional + gamma.contract(&xp, &yp))
    }
}

/// Free-function form of [`Connection::covariant_derivative`].
pub fn covariant_derivative<X, Y>(params: &ModelParams, x: X, y: Y, p: &ModelPoint, step: f64) -> Result<TangentVector>
where
    X: Fn(&ModelPoint) -> Result<TangentVector>,
    Y: Fn(&ModelPoint) -> Result<TangentVector>,
{
    Connection::new(*params, step)?.covariant_derivative(x, y, p)
}

pub fn polar_to_cartesian(q: &PolarPoint) -> (f64, f64) {
    let r = (0.5 * q.rho).tanh();
    (r * q.theta_ang.cos(), r * q.theta_ang.sin())
}

/// Inverse of [`polar_to_cartesian`]; the origin maps to `ρ = 0, θ = 0`.
pub fn cartesian_to_polar(x: f64, y: f64) -> Result<PolarPoint> {
    let r = x.hypot(y);
    if !(r < 1.0) {
        return Err(Error::Domain { x, y, kappa: -1.0 });
    }
    if r == 0.0 {
        return Ok(PolarPoint::new(0.0, 0.0));
    }
    let mut theta = y.atan2(x);
    if theta < 0.0 {
        theta += 2.0 * PI;
    }
    if theta >= 2.0 * PI {
        theta = 0.0;
    }
    Ok(PolarPoint::new(2.0 * r.atanh(), theta))
}

/// Hyperbolic distance between two points of `H² = D₋₁`.
pub fn hyperbolic_distance(a: &PolarPoint, b: &PolarPoint) -> f64 {
    let (ax, ay) = polar_to_cartesian(a);
    let (bx, by) = polar_to_cartesian(b);
    // |a − b| / |1 − a b̄| in complex notation
    let num = (ax - bx).hypot(ay - by);
    let re = 1.0 - (ax * bx + ay * by);
    let im = -(ay * bx - ax * by);
    let ratio = (num / re.hypot(im)).min(1.0 - f64::EPSILON);
    2.0 * ratio.atanh()
}

/// Worst residuals of the pointwise identities of the model over random
/// points and vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityAudit {
    pub points: usize,
    /// `max |⟨F_a, F_b⟩ − δ_ab|` over the frame `F₁, F₂, ξ`.
    pub frame: f64,
    /// `max |⟨ζ, V⟩ − dz(V)|`, relative to `|V|`.
    pub zeta_duality: f64,
    /// `max |‖ζ‖² − 1 − 4τ²(x² + y²)|`.
    pub zeta_norm: f64,
    /// `max |h_μ*(ds²)(u, v) − μ² ds²(u, v)|`, relative to `μ²|u||v|`, with
    /// the differential of `h_μ` by central differences, for `μ ∈ {½, 2, 3}`.
    pub scaling: f64,
}

impl IdentityAudit {
    pub fn max_residual(&self) -> f64 {
        self.frame.max(self.zeta_duality).max(self.zeta_norm).max(self.scaling)
    }
}

/// Random point of the model with `|(x, y)|` at most 0.95 of the disk radius
/// (or 3 when `κ = 0`) and `|z| ≤ 2`.
pub fn random_point<R: rand::Rng>(params: &ModelParams, rng: &mut R) -> ModelPoint {
    let radius = if params.kappa < 0.0 {
        0.95 / (-params.kappa).sqrt()
    } else {
        3.0
    };
    let r = radius * rng.gen::<f64>().sqrt();
    let a = std::f64::consts::TAU * rng.gen::<f64>();
    ModelPoint::new(r * a.cos(), r * a.sin(), rng.gen_range(-2.0..2.0))
}

fn random_vector<R: rand::Rng>(rng: &mut R) -> TangentVector {
    TangentVector::new(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    )
}

/// Checks the frame, the gradient of the height and the scaling map at
/// `points` random points.
pub fn identity_audit<R: rand::Rng>(params: &ModelParams, points: usize, rng: &mut R) -> Result<IdentityAudit> {
    let mut out = IdentityAudit {
        points,
        frame: 0.0,
        zeta_duality: 0.0,
        zeta_norm: 0.0,
        scaling: 0.0,
    };
    let fd = 1e-4;
    for _ in 0..points {
        let p = random_point(params, rng);
        let frame = orthonormal_frame(params, &p)?.vectors();
        for a in 0..3 {
            for b in 0..3 {
                let target = if a == b { 1.0 } else { 0.0 };
                out.frame = out
                    .frame
                    .max((metric_eval(params, &p, &frame[a], &frame[b])? - target).abs());
            }
        }
        let zeta = grad_z(params, &p)?;
        let v = random_vector(rng);
        let len = norm_sq(params, &p, &v)?.sqrt();
        out.zeta_duality = out
            .zeta_duality
            .max((metric_eval(params, &p, &zeta, &v)? - v.vz).abs() / len);
        let r2 = p.x * p.x + p.y * p.y;
        let expected = 1.0 + 4.0 * params.tau * params.tau * r2;
        out.zeta_norm = out.zeta_norm.max((norm_sq(params, &p, &zeta)? - expected).abs());

        let (u, w) = (random_vector(rng), random_vector(rng));
        for mu in [0.5, 2.0, 3.0] {
            let (q, target) = scaling_map(mu, &p, params)?;
            let push = |d: &TangentVector| -> Result<TangentVector> {
                let step = |s: f64| {
                    let moved = ModelPoint::new(p.x + s * d.vx, p.y + s * d.vy, p.z + s * d.vz);
                    scaling_map(mu, &moved, params).map(|(m, _)| m)
                };
                let (fwd, bwd) = (step(fd)?, step(-fd)?);
                Ok(TangentVector::new(
                    (fwd.x - bwd.x) / (2.0 * fd),
                    (fwd.y - bwd.y) / (2.0 * fd),
                    (fwd.z - bwd.z) / (2.0 * fd),
                ))
            };
            let pulled = metric_eval(&target, &q, &push(&u)?, &push(&w)?)?;
            let direct = mu * mu * metric_eval(params, &p, &u, &w)?;
            let scale = mu * mu * norm_sq(params, &p, &u)?.sqrt() * norm_sq(params, &p, &w)?.sqrt();
            out.scaling = out.scaling.max((pulled - direct).abs() / scale);
        }
    }
    Ok(out)
}

/// Debug dump of metric samples, one row per point.
pub fn write_metric_samples<W: Write>(params: &ModelParams, points: &[ModelPoint], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["x", "y", "z", "lambda", "g11", "g12", "g22", "g13", "g23", "g33"])?;
    for p in points {
        let g = metric_matrix(params, p)?;
        let lambda = conformal_factor(params, p.x, p.y)?;
        let row = [
            p.x,
            p.y,
            p.z,
            lambda,
            g[(0, 0)],
            g[(0, 1)],
            g[(1, 1)],
            g[(0, 2)],
            g[(1, 2)],
            g[(2, 2)],
        ];
        // `+ 0.0` turns negative zeros into zeros
        wtr.write_record(row.iter().map(|v| (v + 0.0).to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(kappa: f64, tau: f64) -> ModelParams {
        ModelParams::new(kappa, tau, 0.5).unwrap()
    }

    #[test]
    fn conformal_factor_examples() {
        assert_eq!(conformal_factor(&params(-1.0, 0.0), 0.0, 0.0).unwrap(), 2.0);
        assert_eq!(conformal_factor(&params(0.0, 0.3), 0.7, -0.3).unwrap(), 2.0);
        let x = 0.5f64.sqrt();
        assert_relative_eq!(
            conformal_factor(&params(-1.0, 0.0), x, 0.0).unwrap(),
            4.0,
            epsilon = 1e-12
        );
        assert!(matches!(
            conformal_factor(&params(-1.0, 0.0), 1.0, 0.0),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn metric_examples() {
        let p = params(-1.0, 0.7);
        let q = ModelPoint::new(0.2, -0.4, 3.0);
        assert_relative_eq!(
            metric_eval(&p, &q, &TangentVector::d_z(), &TangentVector::d_z()).unwrap(),
            1.0
        );
        let flat = params(-1.0, 0.0);
        assert_eq!(
            metric_eval(
                &flat,
                &ModelPoint::origin(),
                &TangentVector::d_x(),
                &TangentVector::d_x()
            )
            .unwrap(),
            4.0
        );
        let half = params(-1.0, 0.5);
        let cross = metric_eval(
            &half,
            &ModelPoint::new(0.3, 0.0, 0.0),
            &TangentVector::d_x(),
            &TangentVector::d_z(),
        )
        .unwrap();
        assert_eq!(cross, 0.0);
    }

    #[test]
    fn metric_matrix_agrees_with_bilinear_form() {
        let p = params(-1.0, 0.35);
        let q = ModelPoint::new(0.1, 0.45, -1.0);
        let g = metric_matrix(&p, &q).unwrap();
        let u = TangentVector::new(0.3, -1.2, 0.7);
        let v = TangentVector::new(-0.5, 0.25, 2.0);
        let via_matrix = u.to_vector().dot(&(g * v.to_vector()));
        assert_relative_eq!(via_matrix, metric_eval(&p, &q, &u, &v).unwrap(), epsilon = 1e-13);
    }

    #[test]
    fn frame_examples() {
        let f = orthonormal_frame(&params(-1.0, 0.0), &ModelPoint::origin()).unwrap();
        assert_eq!(f.f1, TangentVector::new(0.5, 0.0, 0.0));
        assert_eq!(f.f2, TangentVector::new(0.0, 0.5, 0.0));
        assert_eq!(f.xi, TangentVector::d_z());
        let f = orthonormal_frame(&params(-1.0, 1.0), &ModelPoint::new(0.0, 0.5, 0.0)).unwrap();
        assert_eq!(f.f1.vz, -1.0);
    }

    #[test]
    fn grad_z_examples() {
        let p = params(-1.0, 0.8);
        assert_eq!(
            grad_z(&p, &ModelPoint::new(0.0, 0.0, 5.0)).unwrap(),
            TangentVector::d_z()
        );
        let q = ModelPoint::new(0.3, -0.2, 0.0);
        let zeta = grad_z(&p, &q).unwrap();
        let expected = 1.0 + 4.0 * 0.64 * (0.09 + 0.04);
        assert_relative_eq!(norm_sq(&p, &q, &zeta).unwrap(), expected, epsilon = 1e-12);
        let flat = params(-1.0, 0.0);
        assert_eq!(grad_z(&flat, &q).unwrap(), TangentVector::d_z());
    }

    #[test]
    fn scaling_examples() {
        let p = params(-1.0, 0.4);
        let q = ModelPoint::new(0.1, 0.2, 0.3);
        let (img, target) = scaling_map(1.0, &q, &p).unwrap();
        assert_eq!(img, q);
        assert_eq!(target, p);
        let (_, target) = scaling_map(2.0, &q, &params(-4.0, 1.0)).unwrap();
        assert_eq!(target.kappa, -1.0);
        assert_eq!(target.tau, 0.5);
        assert!(scaling_map(0.0, &q, &p).is_err());
        assert!(matches!(
            scaling_map(3.0, &ModelPoint::new(1.2, 0.0, 0.0), &p),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn vertical_translation() {
        let p = ModelPoint::new(0.1, 0.2, 0.3);
        assert_eq!(vertical_translate(&p, 0.0), p);
        let q = vertical_translate(&p, 1.5);
        assert_eq!((q.x, q.y), (0.1, 0.2));
        assert_relative_eq!(q.z, 1.8, epsilon = 1e-15);
    }

    #[test]
    fn polar_examples() {
        assert_eq!(polar_to_cartesian(&PolarPoint::new(0.0, 1.3)), (0.0, 0.0));
        let (x, y) = polar_to_cartesian(&PolarPoint::new(2.0, 0.0));
        assert_relative_eq!(x, 0.761_594_155_955_764_9, epsilon = 1e-15);
        assert_eq!(y, 0.0);
        let back = cartesian_to_polar(0.0, 0.0).unwrap();
        assert_eq!(back, PolarPoint::new(0.0, 0.0));
        let d = hyperbolic_distance(&PolarPoint::new(0.0, 0.0), &PolarPoint::new(1.7, 0.0));
        assert_relative_eq!(d, 1.7, epsilon = 1e-13);
        assert!(cartesian_to_polar(1.0, 0.0).is_err());
    }

    #[test]
    fn polar_round_trip() {
        for &(rho, th) in &[(0.3, 0.1), (1.0, 3.0), (2.5, 6.2), (4.0, 1.0)] {
            let (x, y) = polar_to_cartesian(&PolarPoint::new(rho, th));
            let q = cartesian_to_polar(x, y).unwrap();
            assert_relative_eq!(q.rho, rho, max_relative = 1e-13);
            assert_relative_eq!(q.theta_ang, th, epsilon = 1e-14);
        }
    }

    #[test]
    fn step_underflow_is_reported() {
        let conn = Connection::new(params(-1.0, 0.2), 1e-300).unwrap();
        let err = conn.christoffel(&ModelPoint::new(0.1, 0.1, 1.0)).unwrap_err();
        assert!(matches!(err, Error::StepUnderflow { .. }));
        assert!(Connection::new(params(-1.0, 0.2), 0.0).is_err());
    }

    #[test]
    fn stencil_outside_domain_is_reported() {
        let conn = Connection::new(params(-1.0, 0.2), 1e-3).unwrap();
        let err = conn.christoffel(&ModelPoint::new(0.9995, 0.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::Domain { .. }));
    }

    #[test]
    fn metric_dump_has_expected_columns() {
        let mut buf = Vec::new();
        write_metric_samples(&params(-1.0, 0.5), &[ModelPoint::origin()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "x,y,z,lambda,g11,g12,g22,g13,g23,g33");
        assert_eq!(lines.next().unwrap(), "0,0,0,2,4,0,4,0,0,1");
    }

    #[test]
    fn identity_audit_is_clean() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for (k, t) in [(-1.0, 0.0), (-1.0, 0.5), (0.0, 0.5)] {
            let a = identity_audit(&params(k, t), 500, &mut rng).unwrap();
            assert!(a.max_residual() < 1e-8, "{a:?}");
            assert!(a.frame < 1e-12 && a.zeta_duality < 1e-12, "{a:?}");
        }
    }
}
