//! Expectations over the design distribution.
//!
//! Composite Gauss–Legendre on the design support by default (the Gaussian
//! design is truncated to ten standard deviations, the heavy-tailed design is
//! mapped onto `(0, 1)` through its quantile function). Monte Carlo with a
//! declared seed is available for every design kind.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::model::DesignSpec;
use crate::rng;

/// How population expectations are computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum QuadratureSpec {
    /// `panels` equal sub-intervals with an `order`-point rule on each.
    GaussLegendre { panels: usize, order: usize },
    MonteCarlo { samples: usize, seed: u64 },
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec::GaussLegendre { panels: 16, order: 16 }
    }
}

/// A numerical expectation together with its error estimate.
///
/// For Gauss–Legendre the estimate is the change against the rule with half
/// as many panels; for Monte Carlo it is one standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadValue {
    pub value: f64,
    pub error: f64,
}

/// Nodes and weights of the `order`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let n = order as f64;
    for i in 0..order.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=order {
                let j = j as f64;
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * x * p2 - (j - 1.0) * p3) / j;
            }
            dp = n * (x * p1 - p2) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() <= 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

fn composite<F: Fn(f64) -> f64 + Sync>(lo: f64, hi: f64, panels: usize, rule: &(Vec<f64>, Vec<f64>), f: &F) -> f64 {
    let width = (hi - lo) / panels as f64;
    let per_panel: Vec<f64> = (0..panels)
        .into_par_iter()
        .map(|p| {
            let left = lo + width * p as f64;
            let mid = left + 0.5 * width;
            rule.0
                .iter()
                .zip(&rule.1)
                .map(|(&t, &w)| w * f(mid + 0.5 * width * t))
                .sum::<f64>()
                * 0.5
                * width
        })
        .collect();
    per_panel.iter().sum()
}

/// `E[f(X)]` for `X` distributed as `design`.
pub fn expect_over_design<F>(design: &DesignSpec, quad: &QuadratureSpec, f: F) -> Result<QuadValue>
where
    F: Fn(f64) -> f64 + Sync,
{
    integrate(design, quad, f, true)
}

/// Like [`expect_over_design`] without the Gauss–Legendre error pass.
pub(crate) fn expect_value<F>(design: &DesignSpec, quad: &QuadratureSpec, f: F) -> Result<f64>
where
    F: Fn(f64) -> f64 + Sync,
{
    integrate(design, quad, f, false).map(|q| q.value)
}

fn integrate<F>(design: &DesignSpec, quad: &QuadratureSpec, f: F, with_error: bool) -> Result<QuadValue>
where
    F: Fn(f64) -> f64 + Sync,
{
    design.validate()?;
    match *quad {
        QuadratureSpec::GaussLegendre { panels, order } => {
            if panels == 0 || order == 0 {
                return invalid("quadrature needs at least one panel and one node");
            }
            match design {
                DesignSpec::PointMass { value } => Ok(QuadValue { value: f(*value), error: 0.0 }),
                DesignSpec::Empirical { values } => Ok(QuadValue {
                    value: values.iter().map(|&v| f(v)).sum::<f64>() / values.len() as f64,
                    error: 0.0,
                }),
                _ => {
                    let rule = gauss_legendre(order);
                    let (lo, hi, g): (f64, f64, Box<dyn Fn(f64) -> f64 + Sync>) = match *design {
                        DesignSpec::Uniform { lo, hi } => {
                            let dens = 1.0 / (hi - lo);
                            (lo, hi, Box::new(move |x| dens * f(x)))
                        }
                        DesignSpec::Gaussian { mean, sd } => {
                            let norm = 1.0 / (sd * (2.0 * PI).sqrt());
                            (
                                mean - 10.0 * sd,
                                mean + 10.0 * sd,
                                Box::new(move |x| {
                                    let z = (x - mean) / sd;
                                    norm * (-0.5 * z * z).exp() * f(x)
                                }),
                            )
                        }
                        DesignSpec::HeavyTailed { location, scale } => {
                            (0.0, 1.0, Box::new(move |u| f(location + scale * (PI * (u - 0.5)).tan())))
                        }
                        _ => unreachable!(),
                    };
                    let fine = composite(lo, hi, panels, &rule, &g);
                    let error = if !with_error || panels == 1 {
                        f64::NAN
                    } else {
                        (fine - composite(lo, hi, panels / 2, &rule, &g)).abs()
                    };
                    Ok(QuadValue { value: fine, error })
                }
            }
        }
        QuadratureSpec::MonteCarlo { samples, seed } => {
            if samples < 2 {
                return invalid("Monte Carlo needs at least two samples");
            }
            let mut rng = rng::stream(seed);
            let draws: Vec<f64> = (0..samples).map(|_| design.sample(&mut rng)).collect();
            let vals: Vec<f64> = draws.par_iter().map(|&x| f(x)).collect();
            let mean = vals.iter().sum::<f64>() / samples as f64;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (samples - 1) as f64;
            Ok(QuadValue { value: mean, error: (var / samples as f64).sqrt() })
        }
    }
}
