//! Grid estimators: HT, multi-regressor HT, vertical-strip HT and LMS, plus
//! the least-squares comparison baseline.
//!
//! Every grid estimator returns the mean of all optimal lattice nodes and
//! reports how many 8-connected pieces the optimal set has.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::GridSpec;
use crate::model::{Dataset, Theta};
use crate::objective::{count_field, dot, Rows, Template};

/// Largest regressor dimension accepted by the lattice search.
pub const MAX_MULTI_DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ht,
    HtMulti,
    Strip,
    Lms,
    Ls,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Method::Ht => "ht",
            Method::HtMulti => "ht_multi",
            Method::Strip => "strip",
            Method::Lms => "lms",
            Method::Ls => "ls",
        };
        f.write_str(s)
    }
}

/// Outcome of a grid search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub method: Method,
    pub theta_hat: Theta,
    /// Achieved objective: the coverage fraction for HT-type estimators, the
    /// minimal median squared residual for LMS.
    pub max_value: f64,
    /// Number of observations covered at the optimum (HT-type estimators).
    pub max_count: Option<u32>,
    pub solution_nodes: Vec<Theta>,
    pub n_components: usize,
    pub r: Option<f64>,
    pub n: usize,
    pub grid: GridSpec,
    pub warnings: Vec<String>,
}

impl FitResult {
    fn from_optimal_nodes(
        method: Method,
        grid: &GridSpec,
        optimal: Vec<usize>,
        max_value: f64,
        max_count: Option<u32>,
        r: Option<f64>,
        n: usize,
    ) -> Self {
        let p = grid.dim();
        let nodes: Vec<Theta> = optimal.iter().map(|&k| grid.node(k)).collect();
        let mut mean = vec![0.0; p];
        for th in &nodes {
            for (m, v) in mean.iter_mut().zip(th.coords()) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= nodes.len() as f64;
        }
        let mut mask = vec![false; grid.node_count()];
        for &k in &optimal {
            mask[k] = true;
        }
        let n_components = grid.components(&mask).len();
        let mut warnings = Vec::new();
        if optimal.iter().any(|&k| grid.is_boundary(k)) {
            warnings.push("solution set touches the grid boundary".to_string());
        }
        Self {
            method,
            theta_hat: Theta(mean),
            max_value,
            max_count,
            solution_nodes: nodes,
            n_components,
            r,
            n,
            grid: grid.clone(),
            warnings,
        }
    }

    pub fn touches_boundary(&self) -> bool {
        self.warnings.iter().any(|w| w.contains("boundary"))
    }
}

fn check_positive_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        invalid(format!("radius must be positive and finite, got {r}"))
    }
}

fn fit_counts(rows: &Rows, grid: &GridSpec, r: f64, template: Template, method: Method) -> Result<FitResult> {
    check_positive_radius(r)?;
    grid.validate()?;
    if grid.dim() != rows.dim() {
        return invalid(format!("grid dimension {} does not match regressor dimension {}", grid.dim(), rows.dim()));
    }
    let counts = count_field(rows, grid, template, r);
    let best = counts.iter().copied().max().unwrap_or(0);
    let optimal: Vec<usize> = (0..counts.len()).filter(|&k| counts[k] == best).collect();
    let n = rows.len();
    let mut fit = FitResult::from_optimal_nodes(method, grid, optimal, best as f64 / n as f64, Some(best), Some(r), n);
    if best == 0 {
        fit.warnings.push("no grid node covers any observation; grid too coarse or misplaced".to_string());
    }
    Ok(fit)
}

fn planar_grid(grid: &GridSpec) -> Result<()> {
    if grid.dim() != 2 {
        return invalid(format!("planar estimator needs a 2-dimensional grid, got {}", grid.dim()));
    }
    Ok(())
}

/// The HT estimator: mean of the lattice nodes maximizing `M_{r,n}`.
pub fn fit_ht(data: &Dataset, grid: &GridSpec, r: f64) -> Result<FitResult> {
    planar_grid(grid)?;
    fit_counts(&Rows::planar(data), grid, r, Template::Hough, Method::Ht)
}

/// HT with a vertical-segment cell: maximizes the fraction of residuals
/// bounded by `r`.
pub fn fit_strip(data: &Dataset, grid: &GridSpec, r: f64) -> Result<FitResult> {
    planar_grid(grid)?;
    fit_counts(&Rows::planar(data), grid, r, Template::Strip, Method::Strip)
}

/// HT for `y = theta' z + noise` with `p = z.len() <= 4` regressors. Include
/// a constant regressor to fit an intercept.
pub fn fit_ht_multi(responses: &[f64], regressors: &[Vec<f64>], grid: &GridSpec, r: f64) -> Result<FitResult> {
    let rows = Rows::multi(responses, regressors)?;
    if rows.dim() > MAX_MULTI_DIM {
        return Err(Error::NotImplemented(format!(
            "lattice search over {} dimensions (limit {MAX_MULTI_DIM})",
            rows.dim()
        )));
    }
    fit_counts(&rows, grid, r, Template::Hough, Method::HtMulti)
}

/// Least median of squares on the lattice. The median is the order statistic
/// `floor(n/2) + 1` of the squared residuals.
pub fn fit_lms(data: &Dataset, grid: &GridSpec) -> Result<FitResult> {
    planar_grid(grid)?;
    grid.validate()?;
    let n = data.len();
    if n < 2 {
        return invalid("LMS needs at least two observations");
    }
    let rows = Rows::planar(data);
    let h = n / 2;
    let medians: Vec<f64> = (0..grid.node_count())
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |buf, k| {
                let th = grid.node(k);
                for (i, slot) in buf.iter_mut().enumerate() {
                    let (z, y) = rows.row(i);
                    let d = dot(th.coords(), z) - y;
                    *slot = d * d;
                }
                *buf.select_nth_unstable_by(h, f64::total_cmp).1
            },
        )
        .collect();
    let best = medians.iter().copied().fold(f64::INFINITY, f64::min);
    let optimal: Vec<usize> = (0..medians.len()).filter(|&k| medians[k] == best).collect();
    Ok(FitResult::from_optimal_nodes(Method::Lms, grid, optimal, best, None, None, n))
}

/// Ordinary least squares `(slope, intercept)`.
pub fn fit_ls(data: &Dataset) -> Result<Theta> {
    let n = data.len();
    if n < 2 {
        return invalid("least squares needs at least two observations");
    }
    let nf = n as f64;
    let mx = data.points().iter().map(|p| p.x).sum::<f64>() / nf;
    let my = data.points().iter().map(|p| p.y).sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for p in data.points() {
        sxx += (p.x - mx) * (p.x - mx);
        sxy += (p.x - mx) * (p.y - my);
    }
    if sxx == 0.0 {
        return Err(Error::SingularDesign("all x-values are equal".into()));
    }
    let a = sxy / sxx;
    Ok(Theta::planar(a, my - a * mx))
}

/// Search region around the least-squares line: three robust residual
/// scales, translated into slope and intercept half-widths. This is a
/// heuristic default, not part of the estimator.
pub fn heuristic_grid(data: &Dataset, res: usize) -> Result<GridSpec> {
    let ls = fit_ls(data)?;
    let n = data.len() as f64;
    let mut res_abs: Vec<f64> = data.points().iter().map(|p| p.y - ls.a() * p.x - ls.b()).collect();
    res_abs.sort_by(f64::total_cmp);
    let med = res_abs[res_abs.len() / 2];
    let mut dev: Vec<f64> = res_abs.iter().map(|r| (r - med).abs()).collect();
    dev.sort_by(f64::total_cmp);
    let scale = (1.4826 * dev[dev.len() / 2]).max(1e-6);
    let mx = data.points().iter().map(|p| p.x).sum::<f64>() / n;
    let sd_x = (data.points().iter().map(|p| (p.x - mx) * (p.x - mx)).sum::<f64>() / n).sqrt();
    let ha = 3.0 * scale / sd_x;
    let hb = 3.0 * scale * (1.0 + mx * mx / (sd_x * sd_x)).sqrt();
    GridSpec::planar((ls.a() - ha, ls.a() + ha), (ls.b() - hb, ls.b() + hb), (res, res))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> Dataset {
        Dataset::from_xy(&[-1.0, 0.5, 2.0], &[-1.0, 2.0, 5.0]).unwrap()
    }

    #[test]
    fn ht_recovers_collinear_points() {
        let grid = GridSpec::square(-3.0, 3.0, 601).unwrap();
        let fit = fit_ht(&line(), &grid, 0.05).unwrap();
        assert_eq!(fit.max_value, 1.0);
        let diag = grid.spacing(0).hypot(grid.spacing(1));
        assert!(fit.theta_hat.distance(&Theta::planar(2.0, 1.0)) <= diag);
        let strip = fit_strip(&line(), &grid, 0.05).unwrap();
        assert!(strip.theta_hat.distance(&Theta::planar(2.0, 1.0)) <= diag);
        assert_eq!(strip.max_value, 1.0);
    }

    #[test]
    fn theta_hat_is_mean_of_solution_nodes() {
        let d = Dataset::from_xy(&[0.0, 1.0, 2.0, 3.0], &[0.1, 0.9, 2.3, 2.8]).unwrap();
        let grid = GridSpec::square(-2.0, 2.0, 41).unwrap();
        let fit = fit_ht(&d, &grid, 0.3).unwrap();
        let k = fit.solution_nodes.len() as f64;
        let ma = fit.solution_nodes.iter().map(|t| t.a()).sum::<f64>() / k;
        assert!((ma - fit.theta_hat.a()).abs() < 1e-12);
        assert!(fit.n_components >= 1);
        assert_eq!(fit.max_value * 4.0, fit.max_count.unwrap() as f64);
    }

    #[test]
    fn coarse_grid_warns() {
        let d = Dataset::from_xy(&[0.0], &[100.0]).unwrap();
        let fit = fit_ht(&d, &GridSpec::square(-1.0, 1.0, 3).unwrap(), 0.1).unwrap();
        assert_eq!(fit.max_value, 0.0);
        assert!(fit.warnings.iter().any(|w| w.contains("no grid node")));
        assert_eq!(fit.theta_hat, Theta::planar(0.0, 0.0));
    }

    #[test]
    fn ht_rejects_nonpositive_radius() {
        let grid = GridSpec::square(-1.0, 1.0, 3).unwrap();
        assert!(fit_ht(&line(), &grid, 0.0).is_err());
    }

    #[test]
    fn multi_reduces_to_planar() {
        let d = Dataset::from_xy(&[0.3, -1.2, 2.2, 0.9, 1.7], &[1.0, -0.5, 3.1, 2.0, 2.2]).unwrap();
        let grid = GridSpec::square(-3.0, 3.0, 31).unwrap();
        let planar = fit_ht(&d, &grid, 0.2).unwrap();
        let regs: Vec<Vec<f64>> = d.xs().iter().map(|&x| vec![x, 1.0]).collect();
        let multi = fit_ht_multi(&d.ys(), &regs, &grid, 0.2).unwrap();
        assert_eq!(multi.theta_hat, planar.theta_hat);
        assert_eq!(multi.solution_nodes, planar.solution_nodes);
        assert_eq!(multi.n_components, planar.n_components);
        let too_big = vec![vec![1.0; 5]];
        let g5 = GridSpec::new(vec![0.0; 5], vec![1.0; 5], vec![2; 5]).unwrap();
        assert!(matches!(fit_ht_multi(&[1.0], &too_big, &g5, 0.1), Err(Error::NotImplemented(_))));
    }

    #[test]
    fn multi_recovers_hyperplane() {
        let truth = [0.5, -1.0, 1.5];
        let regs: Vec<Vec<f64>> = (0..12)
            .map(|i| vec![(i as f64 * 0.37).sin() * 2.0, (i as f64 * 0.91).cos() * 2.0, 1.0])
            .collect();
        let ys: Vec<f64> = regs.iter().map(|z| z.iter().zip(&truth).map(|(a, b)| a * b).sum()).collect();
        let grid = GridSpec::new(vec![-2.0; 3], vec![2.0; 3], vec![41; 3]).unwrap();
        let fit = fit_ht_multi(&ys, &regs, &grid, 0.02).unwrap();
        let diag = (3.0f64).sqrt() * grid.spacing(0);
        assert_eq!(fit.max_value, 1.0);
        assert!(fit.theta_hat.distance(&Theta(truth.to_vec())) <= diag, "{:?}", fit.theta_hat);
    }

    #[test]
    fn lms_on_line() {
        let grid = GridSpec::square(-3.0, 3.0, 7).unwrap();
        let fit = fit_lms(&line(), &grid).unwrap();
        assert_eq!(fit.max_value, 0.0);
        assert_eq!(fit.theta_hat, Theta::planar(2.0, 1.0));
        assert!(fit_lms(&Dataset::from_xy(&[1.0], &[1.0]).unwrap(), &grid).is_err());
    }

    #[test]
    fn least_squares() {
        let two = Dataset::from_xy(&[1.0, 3.0], &[2.0, 6.0]).unwrap();
        let t = fit_ls(&two).unwrap();
        assert!((t.a() - 2.0).abs() < 1e-15 && t.b().abs() < 1e-15);
        let sym = Dataset::from_xy(&[-1.0, 1.0, -2.0, 2.0], &[-1.0, 1.0, -2.0, 2.0]).unwrap();
        assert_eq!(fit_ls(&sym).unwrap(), Theta::planar(1.0, 0.0));
        let flat = Dataset::from_xy(&[1.0, 1.0], &[0.0, 2.0]).unwrap();
        assert!(matches!(fit_ls(&flat), Err(Error::SingularDesign(_))));
    }

    #[test]
    fn heuristic_region_contains_ls() {
        let d = Dataset::from_xy(&[0.0, 1.0, 2.0, 3.0, 4.0], &[1.0, 3.1, 4.9, 7.2, 9.0]).unwrap();
        let g = heuristic_grid(&d, 50).unwrap();
        let ls = fit_ls(&d).unwrap();
        assert!(g.lo[0] < ls.a() && ls.a() < g.hi[0]);
        assert!(g.lo[1] < ls.b() && ls.b() < g.hi[1]);
    }
}
