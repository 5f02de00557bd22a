//! Breakdown points of the HT estimator and the coverage-radius bridge to
//! S-estimation.

use num_rational::Ratio;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::estimators::{fit_ht, FitResult};
use crate::grid::GridSpec;
use crate::model::{Dataset, Observation, Theta};
use crate::objective::{count_field, Rows, Template};
use crate::rng;

/// An exact fraction with its decimal rendering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "FractionRepr", into = "FractionRepr")]
pub struct Fraction(pub Ratio<u64>);

#[derive(Serialize, Deserialize)]
struct FractionRepr {
    num: u64,
    den: u64,
    #[serde(default)]
    value: f64,
}

impl From<FractionRepr> for Fraction {
    fn from(r: FractionRepr) -> Self {
        Fraction(Ratio::new(r.num, r.den.max(1)))
    }
}

impl From<Fraction> for FractionRepr {
    fn from(f: Fraction) -> Self {
        FractionRepr { num: *f.0.numer(), den: *f.0.denom(), value: f.to_f64() }
    }
}

impl Fraction {
    pub fn new(num: u64, den: u64) -> Self {
        Fraction(Ratio::new(num, den))
    }

    pub fn to_f64(&self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }
}

impl std::fmt::Display for Fraction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

/// Finite-sample and limiting breakdown points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakdownReport {
    pub n: u64,
    /// `floor(n M_{r,n}(theta_hat))`: observations covered at the fit.
    pub inlier_count: u64,
    pub eps_add: Fraction,
    pub eps_rep: Fraction,
    pub p_hat: f64,
    pub eps_add_asymptotic: f64,
    pub eps_rep_asymptotic: f64,
    pub warnings: Vec<String>,
}

/// `eps_add = (m - 1) / (n + m - 1)` and `eps_rep = floor(m / 2) / n` for
/// `m` covered observations out of `n`.
pub fn breakdown_points(n: u64, inlier_count: u64) -> Result<BreakdownReport> {
    if inlier_count == 0 || inlier_count > n {
        return invalid(format!("inlier count must lie in 1..={n}, got {inlier_count}"));
    }
    let m = inlier_count;
    let p_hat = m as f64 / n as f64;
    let (add_inf, rep_inf) = asymptotic_breakdown(p_hat)?;
    Ok(BreakdownReport {
        n,
        inlier_count: m,
        eps_add: Fraction::new(m - 1, n + m - 1),
        eps_rep: Fraction::new(m / 2, n),
        p_hat,
        eps_add_asymptotic: add_inf,
        eps_rep_asymptotic: rep_inf,
        warnings: Vec::new(),
    })
}

/// Breakdown points of an HT fit on `data`. The closed forms assume no two
/// observations share an abscissa; when they do, the values are still
/// reported with a warning.
pub fn breakdown_report(data: &Dataset, fit: &FitResult) -> Result<BreakdownReport> {
    let m = match fit.max_count {
        Some(m) => m as u64,
        None => return invalid("breakdown points need an HT-type fit"),
    };
    let mut report = breakdown_points(data.len() as u64, m)?;
    if data.has_repeated_x() {
        report
            .warnings
            .push("repeated x-values: the closed-form breakdown points are not certified".into());
    }
    Ok(report)
}

/// Limits `(p / (1 + p), p / 2)` for inlier probability `p`.
pub fn asymptotic_breakdown(p: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&p) {
        return invalid(format!("inlier probability must lie in [0, 1], got {p}"));
    }
    Ok((p / (1.0 + p), p / 2.0))
}

/// One row of the addition-breakdown probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub k: usize,
    pub contamination: f64,
    pub theta_hat: Theta,
    pub drift: f64,
    pub boundary_hit: bool,
}

/// Adds `k = 0..=k_max` collinear points lying on the line whose parameter
/// is the upper corner of `grid` (the steepest slope in the search region),
/// placed near `x = displacement`, and records how far the HT estimate
/// moves. An unbounded supremum cannot be observed on a finite grid, so
/// breakdown is flagged when the estimate reaches the grid boundary.
pub fn empirical_breakdown_probe(
    data: &Dataset,
    grid: &GridSpec,
    r: f64,
    k_max: usize,
    displacement: f64,
    seed: u64,
) -> Result<Vec<ProbeRow>> {
    if !displacement.is_finite() {
        return invalid("displacement must be finite");
    }
    grid.validate()?;
    if grid.dim() != 2 {
        return invalid("probe needs a planar grid");
    }
    let base = fit_ht(data, grid, r)?;
    let (a_adv, b_adv) = (grid.hi[0], grid.hi[1]);
    let mut rng = rng::stream(seed);
    let adversary: Vec<Observation> = (0..k_max)
        .map(|j| {
            let x = displacement + j as f64 + 0.5 * rng.gen::<f64>();
            Observation { x, y: a_adv * x + b_adv }
        })
        .collect();
    let near_edge = |th: &Theta| {
        (0..2).any(|k| {
            let h = 0.5 * grid.spacing(k);
            th.0[k] <= grid.lo[k] + h || th.0[k] >= grid.hi[k] - h
        })
    };
    (0..=k_max)
        .into_par_iter()
        .map(|k| {
            let fit = if k == 0 {
                base.clone()
            } else {
                let mut pts = data.points().to_vec();
                pts.extend_from_slice(&adversary[..k]);
                fit_ht(&Dataset::new(pts)?, grid, r)?
            };
            Ok(ProbeRow {
                k,
                contamination: k as f64 / (data.len() + k) as f64,
                drift: fit.theta_hat.distance(&base.theta_hat),
                boundary_hit: near_edge(&fit.theta_hat),
                theta_hat: fit.theta_hat,
            })
        })
        .collect()
}

/// Smallest radius whose best lattice node covers a fraction `1 - delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRadius {
    pub r_hat: f64,
    pub theta: Theta,
    pub coverage: f64,
    pub warnings: Vec<String>,
}

/// Bisection on `r` for the smallest radius with
/// `max_theta M_{r,n}(theta) >= 1 - delta` over the lattice. At that radius
/// the HT fit solves the coverage-constrained radius minimization on the
/// grid; the returned node attains the coverage.
pub fn radius_from_coverage(data: &Dataset, grid: &GridSpec, delta: f64, tol: f64) -> Result<CoverageRadius> {
    if !(delta > 0.0 && delta < 1.0) {
        return invalid(format!("delta must lie in (0, 1), got {delta}"));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return invalid("tolerance must be positive");
    }
    grid.validate()?;
    if grid.dim() != 2 {
        return invalid("coverage radius needs a planar grid");
    }
    let n = data.len();
    let target = 1.0 - delta;
    let needed = (0..=n).find(|&k| k as f64 / n as f64 >= target).unwrap_or(n) as u32;
    let rows = Rows::planar(data);
    let best = |r: f64| {
        let counts = count_field(&rows, grid, Template::Hough, r);
        let m = counts.iter().copied().max().unwrap_or(0);
        let at = counts.iter().position(|&c| c == m).unwrap_or(0);
        (m, at)
    };
    let mut warnings = Vec::new();
    let (m0, at0) = best(0.0);
    if m0 >= needed {
        return Ok(CoverageRadius { r_hat: 0.0, theta: grid.node(at0), coverage: m0 as f64 / n as f64, warnings });
    }
    let c = grid.center();
    let mut hi = data
        .points()
        .iter()
        .map(|p| (c.a() * p.x + c.b() - p.y).abs() / (p.x * p.x + 1.0).sqrt())
        .fold(0.0, f64::max)
        * (1.0 + 1e-9)
        + f64::MIN_POSITIVE;
    let mut top = best(hi);
    if top.0 < needed {
        warnings.push(format!("coverage saturates at {}/{} on this grid", top.0, n));
    }
    let mut lo = 0.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let cand = best(mid);
        if cand.0 >= needed {
            hi = mid;
            top = cand;
        } else {
            lo = mid;
        }
    }
    Ok(CoverageRadius { r_hat: hi, theta: grid.node(top.1), coverage: top.0 as f64 / n as f64, warnings })
}
