//! Monte Carlo drivers for the simulation studies.
//!
//! Each replicate draws its data from its own seed
//! (`rng::replicate_seed(seed, tag, index)`), so results do not depend on
//! the number of threads or on scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::estimators::{fit_ht, fit_lms, fit_ls};
use crate::excess_mass::{calibrate_null, statistic_fn, Calibration, DetectionMode};
use crate::grid::GridSpec;
use crate::model::{contaminate_cluster, gen_dataset, Dataset, DesignSpec, ModelSpec, NoiseSpec, Observation, Provenance, Theta};
use crate::quadrature::QuadratureSpec;
use crate::rng::{self, RNG_NAME};

const TAG_CONTAM_GOOD: u64 = 0x5253_0001;
const TAG_CONTAM_BAD: u64 = 0x5253_0002;
const TAG_DETECT_NULL: u64 = 0xde7e_0001;
const TAG_DETECT_ALT: u64 = 0xde7e_0002;

/// Radius study configuration. The default is the full-scale protocol:
/// `theta0 = (1, 2)`, Gaussian noise with sd 0.5, `X ~ U[-2, 2]`, grid
/// `[-3, 3]^2` at 600 x 600, 1000 replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Config {
    pub model: ModelSpec,
    pub grid: GridSpec,
    pub ns: Vec<usize>,
    pub rs: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
}

pub const TABLE1_NS: [usize; 3] = [25, 50, 100];
pub const TABLE1_RS: [f64; 10] = [0.025, 0.04, 0.05, 0.075, 0.1, 0.2, 0.4, 0.5, 0.75, 0.8];

pub fn table1_model() -> ModelSpec {
    ModelSpec::new(1.0, 2.0, NoiseSpec::Gaussian { sigma: 0.5 }, DesignSpec::Uniform { lo: -2.0, hi: 2.0 })
}

impl Default for Table1Config {
    fn default() -> Self {
        Self {
            model: table1_model(),
            grid: GridSpec::square(-3.0, 3.0, 600).expect("static grid"),
            ns: TABLE1_NS.to_vec(),
            rs: TABLE1_RS.to_vec(),
            replicates: 1000,
            seed: 20_080_101,
        }
    }
}

impl Table1Config {
    /// Reduced preset: 200 x 200 grid, 100 replicates.
    pub fn fast() -> Self {
        Self { grid: GridSpec::square(-3.0, 3.0, 200).expect("static grid"), replicates: 100, ..Self::default() }
    }

    /// Grid nodes evaluated over the whole run.
    pub fn projected_node_evaluations(&self) -> u128 {
        self.grid.node_count() as u128 * self.ns.len() as u128 * self.rs.len() as u128 * self.replicates as u128
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub n: usize,
    pub r: f64,
    pub mean_a: f64,
    pub mean_b: f64,
    pub rmse: f64,
    pub replicates: usize,
    /// Replicates whose solution set touched the grid boundary.
    pub boundary_hits: usize,
}

/// Per-replicate error `|theta_hat - theta0|` for every `(n, r)` cell. The
/// dataset of replicate `i` at sample size `n` is shared by all radii.
fn table1_cell(cfg: &Table1Config, n: usize, r: f64) -> Result<Table1Row> {
    let fits = (0..cfg.replicates)
        .into_par_iter()
        .map(|i| {
            let data = gen_dataset(&cfg.model, n, rng::replicate_seed(cfg.seed, n as u64, i as u64))?;
            fit_ht(&data, &cfg.grid, r)
        })
        .collect::<Result<Vec<_>>>()?;
    let reps = fits.len() as f64;
    let t0 = &cfg.model.theta0;
    Ok(Table1Row {
        n,
        r,
        mean_a: fits.iter().map(|f| f.theta_hat.a()).sum::<f64>() / reps,
        mean_b: fits.iter().map(|f| f.theta_hat.b()).sum::<f64>() / reps,
        rmse: (fits.iter().map(|f| f.theta_hat.distance(t0).powi(2)).sum::<f64>() / reps).sqrt(),
        replicates: fits.len(),
        boundary_hits: fits.iter().filter(|f| f.touches_boundary()).count(),
    })
}

/// Rows ordered by `(n, r)` as listed in the configuration.
pub fn run_table1(cfg: &Table1Config) -> Result<Vec<Table1Row>> {
    if cfg.replicates == 0 {
        return invalid("replicates must be at least 1");
    }
    if cfg.ns.is_empty() || cfg.rs.is_empty() {
        return invalid("need at least one n and one r");
    }
    let mut rows = Vec::with_capacity(cfg.ns.len() * cfg.rs.len());
    for &n in &cfg.ns {
        for &r in &cfg.rs {
            rows.push(table1_cell(cfg, n, r)?);
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateConfig {
    pub model: ModelSpec,
    pub grid: GridSpec,
    pub ns: Vec<usize>,
    pub r: f64,
    pub replicates: usize,
    pub seed: u64,
}

impl Default for RateConfig {
    fn default() -> Self {
        Self {
            model: table1_model(),
            grid: GridSpec::square(-3.0, 3.0, 600).expect("static grid"),
            ns: vec![50, 200, 800],
            r: 0.4,
            replicates: 200,
            seed: 20_080_102,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    pub median_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub rows: Vec<RateRow>,
    /// Least-squares slope of `ln(median error)` on `ln(n)`.
    pub slope: f64,
    /// Half the cell diagonal: the error a perfect fit can still show.
    pub quantization_floor: f64,
    pub warnings: Vec<String>,
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

/// Ordinary least-squares slope of `y` on `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

pub fn run_rate(cfg: &RateConfig) -> Result<RateResult> {
    let mut distinct = cfg.ns.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return invalid("the rate study needs at least 3 distinct sample sizes");
    }
    if cfg.replicates == 0 {
        return invalid("replicates must be at least 1");
    }
    let mut rows = Vec::new();
    for &n in &distinct {
        let mut errs = (0..cfg.replicates)
            .into_par_iter()
            .map(|i| {
                let data = gen_dataset(&cfg.model, n, rng::replicate_seed(cfg.seed, n as u64, i as u64))?;
                Ok(fit_ht(&data, &cfg.grid, cfg.r)?.theta_hat.distance(&cfg.model.theta0))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(RateRow { n, median_error: median(&mut errs) });
    }
    let floor = 0.5 * (0..cfg.grid.dim()).map(|k| cfg.grid.spacing(k).powi(2)).sum::<f64>().sqrt();
    let mut warnings = Vec::new();
    if rows.iter().any(|r| r.median_error <= 0.0) {
        warnings.push("median error is zero at some n; slope is undefined".into());
    }
    let lx: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|r| r.median_error.max(f64::MIN_POSITIVE).ln()).collect();
    let slope = ls_slope(&lx, &ly);
    if rows.iter().all(|r| r.median_error <= 2.0 * floor) {
        warnings.push(format!("median errors are at the grid quantization floor ({floor:.3e}); the slope reflects the grid, not the estimator"));
    }
    Ok(RateResult { rows, slope, quantization_floor: floor, warnings })
}

/// Contaminated regression example: 30 points on `y = x + 2` with Gaussian
/// noise (sd 0.2) and `X ~ U[1, 4]`, plus 20 points from a bivariate Gaussian
/// at `(7, 2)` with covariance `0.25 I`; `r = 0.15` on `[-3, 3]^2`, 500 x 500.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContaminationConfig {
    pub model: ModelSpec,
    pub good: usize,
    pub bad: usize,
    pub bad_mean: (f64, f64),
    pub bad_cov_scale: f64,
    pub r: f64,
    pub grid: GridSpec,
}

impl Default for ContaminationConfig {
    fn default() -> Self {
        Self {
            model: ModelSpec::new(1.0, 2.0, NoiseSpec::Gaussian { sigma: 0.2 }, DesignSpec::Uniform { lo: 1.0, hi: 4.0 }),
            good: 30,
            bad: 20,
            bad_mean: (7.0, 2.0),
            bad_cov_scale: 0.25,
            r: 0.15,
            grid: GridSpec::square(-3.0, 3.0, 500).expect("static grid"),
        }
    }
}

impl ContaminationConfig {
    pub fn dataset(&self, seed: u64, index: u64) -> Result<Dataset> {
        let good = gen_dataset(&self.model, self.good, rng::replicate_seed(seed, TAG_CONTAM_GOOD, index))?;
        contaminate_cluster(&good, self.bad, self.bad_mean, self.bad_cov_scale, rng::replicate_seed(seed, TAG_CONTAM_BAD, index))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContaminationReplicate {
    pub ht: Theta,
    pub lms: Theta,
    pub ls: Theta,
}

pub fn run_contamination(cfg: &ContaminationConfig, replicates: usize, seed: u64) -> Result<Vec<ContaminationReplicate>> {
    (0..replicates)
        .into_par_iter()
        .map(|i| {
            let data = cfg.dataset(seed, i as u64)?;
            Ok(ContaminationReplicate {
                ht: fit_ht(&data, &cfg.grid, cfg.r)?.theta_hat,
                lms: fit_lms(&data, &cfg.grid)?.theta_hat,
                ls: fit_ls(&data)?,
            })
        })
        .collect()
}

/// `n` points split evenly between the lines `theta0` and `theta0 - (0,
/// offset)`: even indices on the first, odd on the second.
pub fn gen_two_lines(spec: &ModelSpec, offset: f64, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return invalid("n must be at least 1");
    }
    spec.validate()?;
    let mut rng = rng::stream(seed);
    let (a0, b0) = (spec.theta0.a(), spec.theta0.b());
    let points = (0..n)
        .map(|i| {
            let x = spec.design.sample(&mut rng);
            let eps = spec.noise.sample(&mut rng);
            let b = if i % 2 == 0 { b0 } else { b0 - offset };
            Observation { x, y: a0 * x + b + eps }
        })
        .collect();
    Ok(Dataset::new(points)?.with_metadata(Provenance { generator: format!("gen_two_lines/{RNG_NAME}"), seed, n, theta0: None }))
}

/// Configuration of a detection power study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionConfig {
    pub model: ModelSpec,
    pub mode: DetectionMode,
    pub r: f64,
    pub lambdas: Vec<f64>,
    pub grid: GridSpec,
    pub n: usize,
    /// Intercept gap of the two-line alternative.
    pub offset: f64,
    pub alpha: f64,
    pub quad: QuadratureSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerStudy {
    pub critical_value: f64,
    pub calibration_replicates: usize,
    pub validation_replicates: usize,
    pub null_rejection_rate: f64,
    pub alternative_rejection_rate: f64,
}

/// Calibrates on `calibration_reps` null datasets, then reports rejection
/// rates on fresh null and two-line datasets.
pub fn run_power_study(cfg: &DetectionConfig, calibration_reps: usize, validation_reps: usize, seed: u64) -> Result<PowerStudy> {
    let cal: Calibration = calibrate_null(
        &cfg.model,
        cfg.mode,
        cfg.r,
        &cfg.lambdas,
        &cfg.grid,
        cfg.n,
        calibration_reps,
        cfg.alpha,
        seed,
        &cfg.quad,
    )?;
    let stat = statistic_fn(&cfg.model, cfg.mode, cfg.r, &cfg.lambdas, &cfg.grid, &cfg.quad)?;
    let rate = |alt: bool| -> Result<f64> {
        let rejections = (0..validation_reps)
            .into_par_iter()
            .map(|i| {
                let data = if alt {
                    gen_two_lines(&cfg.model, cfg.offset, cfg.n, rng::replicate_seed(seed, TAG_DETECT_ALT, i as u64))?
                } else {
                    gen_dataset(&cfg.model, cfg.n, rng::replicate_seed(seed, TAG_DETECT_NULL, i as u64))?
                };
                Ok(stat(&data)? > cal.critical_value)
            })
            .collect::<Result<Vec<bool>>>()?;
        Ok(rejections.iter().filter(|&&b| b).count() as f64 / validation_reps as f64)
    };
    Ok(PowerStudy {
        critical_value: cal.critical_value,
        calibration_replicates: calibration_reps,
        validation_replicates: validation_reps,
        null_rejection_rate: rate(false)?,
        alternative_rejection_rate: rate(true)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table1_small_run_is_reproducible() {
        let cfg = Table1Config {
            grid: GridSpec::square(-3.0, 3.0, 61).unwrap(),
            ns: vec![25],
            rs: vec![0.4],
            replicates: 8,
            ..Table1Config::default()
        };
        let a = run_table1(&cfg).unwrap();
        let b = run_table1(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a[0].rmse > 0.0 && a[0].rmse < 1.0);
        assert_eq!(Table1Config::default().projected_node_evaluations(), 360_000 * 30 * 1000);
    }

    #[test]
    fn rate_needs_three_sizes() {
        let cfg = RateConfig { ns: vec![50, 50, 200], ..RateConfig::default() };
        assert!(run_rate(&cfg).is_err());
    }

    #[test]
    fn noiseless_rate_hits_the_floor() {
        let mut model = table1_model();
        model.noise = NoiseSpec::Uniform { half_width: 0.0 };
        let cfg = RateConfig { model, grid: GridSpec::square(-3.0, 3.0, 61).unwrap(), replicates: 5, ..RateConfig::default() };
        let out = run_rate(&cfg).unwrap();
        assert!(out.rows.iter().all(|r| r.median_error <= out.quantization_floor));
        assert!(!out.warnings.is_empty());
    }

    #[test]
    fn slope_and_median() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
        let x = [0.0, 1.0, 2.0];
        assert!((ls_slope(&x, &[1.0, -1.0 / 3.0 + 1.0, -2.0 / 3.0 + 1.0]) + 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn two_lines_split_evenly() {
        let d = gen_two_lines(&table1_model(), 3.0, 10, 4).unwrap();
        let on_first = d.points().iter().filter(|p| (p.y - p.x - 2.0).abs() < (p.y - p.x + 1.0).abs()).count();
        assert_eq!(on_first, 5);
    }

    #[test]
    fn contamination_dataset_shape() {
        let cfg = ContaminationConfig::default();
        let d = cfg.dataset(1, 0).unwrap();
        assert_eq!(d.len(), 50);
        assert!(d.points()[30..].iter().all(|p| p.x > 4.0));
    }
}
