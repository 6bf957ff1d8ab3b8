//! Rotationally symmetric solutions from the first integral of the equation.
//!
//! For `σ = u(ρ)` the equation `Div(Gσ/W) = 2H₀` integrates once to
//!
//! ```text
//! sinh ρ · u′ / W = 2H₀ (cosh ρ − 1) + c,    W = √(1 + u′² + 4τ² tanh²(ρ/2)).
//! ```
//!
//! Writing `q = (2H₀(cosh ρ − 1) + c)/sinh ρ` and `b = 2τ tanh(ρ/2)` this is
//! solved for `u′ = q √(1 + b²) / √(1 − q²)`; the profile itself comes from
//! adaptive Gauss–Kronrod quadrature.

use crate::error::{Error, Result};
use crate::geometry::ModelParams;
use crate::graph::SmoothSection;
use crate::scheme::twist;
use crate::solver::SectionProvider;

/// Absolute accuracy of every profile evaluation.
pub const QUADRATURE_TOL: f64 = 1e-13;

/// Radial profile `u(ρ)` with `u(anchor_rho) = anchor_value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialProfile {
    pub params: ModelParams,
    pub c: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub anchor_rho: f64,
    pub anchor_value: f64,
}

/// Builds the profile on `rho_range`, checking that the first integral has a
/// graph solution throughout. With `regular_at_zero` the constant must vanish
/// and the range may start at the origin, where the profile is anchored to 0.
pub fn radial_ode_oracle(
    params: &ModelParams,
    rho_range: (f64, f64),
    regular_at_zero: bool,
    c: f64,
) -> Result<RadialProfile> {
    let (lo, hi) = rho_range;
    if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidInput(format!("bad radial range [{lo}, {hi}]")));
    }
    if regular_at_zero && c != 0.0 {
        return Err(Error::InvalidInput(
            "a profile regular at the origin needs c = 0".into(),
        ));
    }
    if !regular_at_zero && lo == 0.0 {
        return Err(Error::InvalidInput(
            "singular profiles need a range away from the origin".into(),
        ));
    }
    let profile = RadialProfile {
        params: *params,
        c,
        rho_min: lo,
        rho_max: hi,
        anchor_rho: if regular_at_zero { 0.0 } else { lo },
        anchor_value: 0.0,
    };
    // |q| is monotone between its critical points; a dense scan plus the
    // endpoints is enough to catch a violation of |q| < 1.
    let samples = 2048;
    for k in 0..=samples {
        let rho = lo + (hi - lo) * k as f64 / samples as f64;
        if rho > 0.0 {
            profile.slope(rho)?;
        }
    }
    Ok(profile)
}

impl RadialProfile {
    /// Same profile shifted so that `u(rho) = value`.
    pub fn anchored(mut self, rho: f64, value: f64) -> Result<Self> {
        let current = self.eval(rho)?;
        self.anchor_value += value - current;
        Ok(self)
    }

    fn ratio(&self, rho: f64) -> f64 {
        if rho == 0.0 {
            return 0.0;
        }
        (2.0 * self.params.h0 * (rho.cosh() - 1.0) + self.c) / rho.sinh()
    }

    /// `u′(ρ)`.
    pub fn slope(&self, rho: f64) -> Result<f64> {
        let q = self.ratio(rho);
        if !(q.abs() < 1.0) {
            return Err(Error::NoGraphSolution { rho, ratio: q.abs() });
        }
        let b = twist(self.params.tau, rho);
        Ok(q * (1.0 + b * b).sqrt() / (1.0 - q * q).sqrt())
    }

    /// `W = √(1 + u′² + b²)` along the profile.
    pub fn w(&self, rho: f64) -> Result<f64> {
        let d = self.slope(rho)?;
        let b = twist(self.params.tau, rho);
        Ok((1.0 + d * d + b * b).sqrt())
    }

    /// `u(ρ)`.
    pub fn eval(&self, rho: f64) -> Result<f64> {
        if rho == self.anchor_rho {
            return Ok(self.anchor_value);
        }
        let mut failure = None;
        let integral = integrate(
            |r| match self.slope(r) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            self.anchor_rho,
            rho,
            QUADRATURE_TOL,
        );
        match failure {
            Some(e) => Err(e),
            None => Ok(self.anchor_value + integral),
        }
    }

    /// Radial Jacobi fields of the profile: `v′ = C W³ / (sinh ρ (1 + b²))`.
    pub fn jacobi_slope(&self, rho: f64, c: f64) -> Result<f64> {
        let w = self.w(rho)?;
        let b = twist(self.params.tau, rho);
        Ok(c * w * w * w / (rho.sinh() * (1.0 + b * b)))
    }

    /// The radial Jacobi field with `v(rho0) = 0` and constant `C`.
    pub fn jacobi_field(&self, rho0: f64, c: f64, rho: f64) -> Result<f64> {
        let mut failure = None;
        let v = integrate(
            |r| match self.jacobi_slope(r, c) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            rho0,
            rho,
            QUADRATURE_TOL,
        );
        match failure {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }
}

impl SectionProvider for RadialProfile {
    fn value(&self, rho: f64, _theta: f64) -> Result<f64> {
        self.eval(rho)
    }

    fn is_radial(&self) -> bool {
        true
    }
}

impl SmoothSection for RadialProfile {
    fn value(&self, rho: f64, _theta: f64) -> f64 {
        self.eval(rho).unwrap_or(f64::NAN)
    }

    fn derivatives(&self, rho: f64, _theta: f64) -> (f64, f64) {
        (self.slope(rho).unwrap_or(f64::NAN), 0.0)
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod estimate and its difference from the embedded Gauss rule.
fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(mid);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (k, x) in XGK[..7].iter().enumerate() {
        let s = f(mid - half * x) + f(mid + half * x);
        kronrod += WGK[k] * s;
        if k % 2 == 1 {
            gauss += WG[k / 2] * s;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss–Kronrod integration of `f` over `[a, b]` (either order).
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if b < a {
        return -integrate(f, b, a, tol);
    }
    fn recurse(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = gk15(f, a, b);
        if err <= tol || depth >= 40 || b - a < 1e-12 {
            return v;
        }
        let m = 0.5 * (a + b);
        recurse(f, a, m, 0.5 * tol, depth + 1) + recurse(f, m, b, 0.5 * tol, depth + 1)
    }
    recurse(&mut f, a, b, tol, 0)
}
