//! Population counterparts of the objective under the linear model.
//!
//! With `Z = (X, 1)` and `F` the noise CDF,
//! `M_r(theta) = E[F(r|Z| - Z'(theta - theta0)) - F(-r|Z| - Z'(theta - theta0))]`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{DenseField, GridSpec};
use crate::model::{ModelSpec, Theta};
use crate::quadrature::{expect_over_design, expect_value, QuadValue, QuadratureSpec};

fn planar_offset(spec: &ModelSpec, theta: &Theta) -> Result<(f64, f64)> {
    spec.validate()?;
    if theta.dim() != 2 {
        return invalid("population quantities are planar");
    }
    theta.check_finite()?;
    Ok((theta.a() - spec.theta0.a(), theta.b() - spec.theta0.b()))
}

fn check_radius(r: f64) -> Result<()> {
    if r >= 0.0 && r.is_finite() {
        Ok(())
    } else {
        invalid(format!("radius must be finite and nonnegative, got {r}"))
    }
}

fn require_second_moment(spec: &ModelSpec) -> Result<()> {
    if spec.design.second_moment().is_none() {
        return invalid(format!("design {:?} has an infinite second moment", spec.design));
    }
    Ok(())
}

fn template_mass(spec: &ModelSpec, x: f64, da: f64, db: f64, r: f64) -> f64 {
    let rn = r * (x * x + 1.0).sqrt();
    let s = x * da + db;
    spec.noise.cdf(rn - s) - spec.noise.cdf(-rn - s)
}

/// `M_r(theta)`, the probability that a fresh observation falls in the
/// template of `theta`.
pub fn population_objective(spec: &ModelSpec, theta: &Theta, r: f64, quad: &QuadratureSpec) -> Result<QuadValue> {
    check_radius(r)?;
    let (da, db) = planar_offset(spec, theta)?;
    expect_over_design(&spec.design, quad, |x| template_mass(spec, x, da, db, r))
}

/// `p = P{noise^2 <= r^2 |Z|^2}`, the objective at the true parameter.
pub fn inlier_probability(spec: &ModelSpec, r: f64, quad: &QuadratureSpec) -> Result<QuadValue> {
    population_objective(spec, &spec.theta0.clone(), r, quad)
}

/// `M_r` on every node of a planar grid.
pub fn population_field(spec: &ModelSpec, grid: &GridSpec, r: f64, quad: &QuadratureSpec) -> Result<DenseField> {
    check_radius(r)?;
    spec.validate()?;
    grid.validate()?;
    if grid.dim() != 2 {
        return invalid("population field needs a planar grid");
    }
    let values = (0..grid.node_count())
        .into_par_iter()
        .map(|k| {
            let th = grid.node(k);
            let (da, db) = (th.a() - spec.theta0.a(), th.b() - spec.theta0.b());
            expect_value(&spec.design, quad, |x| template_mass(spec, x, da, db, r))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(DenseField { grid: grid.clone(), values })
}

/// A symmetric 2x2 matrix `[[xx, x1], [x1, one]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sym2 {
    pub xx: f64,
    pub x1: f64,
    pub one: f64,
}

impl Sym2 {
    pub fn determinant(&self) -> f64 {
        self.xx * self.one - self.x1 * self.x1
    }

    /// Eigenvalues in increasing order. The eigenvalue of larger magnitude
    /// comes from the closed form, the other from `det / lambda` to avoid
    /// cancellation.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let half_tr = 0.5 * (self.xx + self.one);
        let half_gap = 0.5 * (self.xx - self.one);
        let disc = half_gap.hypot(self.x1);
        let big = if half_tr >= 0.0 { half_tr + disc } else { half_tr - disc };
        if big == 0.0 {
            return [0.0, 0.0];
        }
        let small = self.determinant() / big;
        if big < small {
            [big, small]
        } else {
            [small, big]
        }
    }

    pub fn as_array(&self) -> [[f64; 2]; 2] {
        [[self.xx, self.x1], [self.x1, self.one]]
    }
}

/// `V0 = E{[f'(r|Z|) - f'(-r|Z|)] Z Z'}`, the Hessian of `M_r` at `theta0`.
pub fn v0_matrix(spec: &ModelSpec, r: f64, quad: &QuadratureSpec) -> Result<Sym2> {
    check_radius(r)?;
    spec.validate()?;
    require_second_moment(spec)?;
    let w = |x: f64| {
        let rn = r * (x * x + 1.0).sqrt();
        spec.noise.density_derivative(rn) - spec.noise.density_derivative(-rn)
    };
    Ok(Sym2 {
        xx: expect_value(&spec.design, quad, |x| w(x) * x * x)?,
        x1: expect_value(&spec.design, quad, |x| w(x) * x)?,
        one: expect_value(&spec.design, quad, w)?,
    })
}

/// `2 E{f(r|Z|) |Z'(xi - eta)|}`, the increment variance of the Gaussian
/// process in the cube-root limit.
pub fn increment_variance(spec: &ModelSpec, xi: &Theta, eta: &Theta, r: f64, quad: &QuadratureSpec) -> Result<QuadValue> {
    check_radius(r)?;
    spec.validate()?;
    require_second_moment(spec)?;
    if xi.dim() != 2 || eta.dim() != 2 {
        return invalid("increment variance is planar");
    }
    let (ua, ub) = (xi.a() - eta.a(), xi.b() - eta.b());
    let q = expect_over_design(&spec.design, quad, |x| {
        spec.noise.density(r * (x * x + 1.0).sqrt()) * (x * ua + ub).abs()
    })?;
    Ok(QuadValue { value: 2.0 * q.value, error: 2.0 * q.error })
}

/// Covariance of the template indicators of `xi` and `eta` under the model:
/// `P{both templates contain (X, Y)} - M_r(xi) M_r(eta)`.
///
/// Pass [`ModelSpec::centered`] to obtain the kernel with responses replaced
/// by pure noise.
pub fn covariance_kernel(spec: &ModelSpec, xi: &Theta, eta: &Theta, r: f64, quad: &QuadratureSpec) -> Result<QuadValue> {
    check_radius(r)?;
    let (xa, xb) = planar_offset(spec, xi)?;
    let (ea, eb) = planar_offset(spec, eta)?;
    let noise = spec.noise;
    let joint = expect_over_design(&spec.design, quad, |x| {
        let rn = r * (x * x + 1.0).sqrt();
        let s1 = x * xa + xb;
        let s2 = x * ea + eb;
        let lo = (s1 - rn).max(s2 - rn);
        let hi = (s1 + rn).min(s2 + rn);
        if hi >= lo {
            noise.cdf(hi) - noise.cdf(lo)
        } else {
            0.0
        }
    })?;
    let m1 = expect_over_design(&spec.design, quad, |x| {
        let rn = r * (x * x + 1.0).sqrt();
        let s = x * xa + xb;
        noise.cdf(s + rn) - noise.cdf(s - rn)
    })?;
    let m2 = expect_over_design(&spec.design, quad, |x| {
        let rn = r * (x * x + 1.0).sqrt();
        let s = x * ea + eb;
        noise.cdf(s + rn) - noise.cdf(s - rn)
    })?;
    Ok(QuadValue {
        value: joint.value - m1.value * m2.value,
        error: joint.error + m1.error + m2.error,
    })
}
