//! Excess-mass functionals of objective fields and the multi-line detection
//! statistics built on them.
//!
//! All integrals over the parameter region use the lattice midpoint rule: a
//! node stands for one cell of volume [`GridSpec::cell_volume`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{DenseField, GridSpec, LatticeField};
use crate::hull::LatticeHull;
use crate::model::{gen_dataset, Dataset, ModelSpec, Theta};
use crate::objective::objective_field;
use crate::population::population_field;
use crate::quadrature::QuadratureSpec;
use crate::rng;

const CALIBRATION_STREAM: u64 = 0xca11;

/// Default level range: 17 equally spaced values in `[0.1, 0.9]`.
pub fn default_lambdas() -> Vec<f64> {
    lambda_range(0.1, 0.9, 17)
}

pub fn lambda_range(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count).map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64).collect(),
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda < 1.0 {
        Ok(())
    } else {
        invalid(format!("level must lie in (0, 1), got {lambda}"))
    }
}

fn check_lambdas(lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() {
        return invalid("at least one level is required");
    }
    lambdas.iter().try_for_each(|&l| check_lambda(l))
}

/// Closed level set `{theta : M(theta) >= lambda}` on the lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSetMask {
    pub grid: GridSpec,
    pub lambda: f64,
    pub member: Vec<bool>,
}

impl LevelSetMask {
    pub fn count(&self) -> usize {
        self.member.iter().filter(|&&m| m).count()
    }

    pub fn area(&self) -> f64 {
        self.count() as f64 * self.grid.cell_volume()
    }
}

pub fn level_set<F: LatticeField + ?Sized>(field: &F, lambda: f64) -> Result<LevelSetMask> {
    check_lambda(lambda)?;
    let grid = field.grid().clone();
    let member = (0..grid.node_count()).map(|k| field.value(k) >= lambda).collect();
    Ok(LevelSetMask { grid, lambda, member })
}

/// `E_n(lambda) = integral of (M(theta) - lambda)^+` over the lattice region.
pub fn excess_mass_empirical<F: LatticeField + ?Sized>(field: &F, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let n = field.grid().node_count();
    let total: f64 = (0..n).map(|k| (field.value(k) - lambda).max(0.0)).sum();
    Ok(total * field.grid().cell_volume())
}

/// Excess mass restricted to convex sets, with the set that attains it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexExcess {
    pub value: f64,
    /// Vertices of the winning hull in parameter coordinates.
    pub hull: Vec<Theta>,
    /// Lattice nodes inside the winning hull.
    pub hull_nodes: usize,
    /// Connected components of the level set.
    pub components: usize,
    /// One-cell band allowance: `lambda * cell * #(nodes outside the level
    /// set that touch it)`.
    pub slack: f64,
}

struct RowSums {
    res_b: usize,
    prefix: Vec<f64>,
}

impl RowSums {
    fn new(weights: &[f64], res_a: usize, res_b: usize) -> Self {
        let mut prefix = vec![0.0; res_a * (res_b + 1)];
        for i in 0..res_a {
            let base = i * (res_b + 1);
            for j in 0..res_b {
                prefix[base + j + 1] = prefix[base + j] + weights[i * res_b + j];
            }
        }
        Self { res_b, prefix }
    }

    fn hull_sum(&self, hull: &LatticeHull) -> (f64, usize) {
        let Some((i0, i1)) = hull.row_span() else {
            return (0.0, 0);
        };
        let mut total = 0.0;
        let mut nodes = 0;
        for i in i0..=i1 {
            if let Some((lo, hi)) = hull.row_range(i) {
                let lo = lo.max(0) as usize;
                let hi = (hi as usize).min(self.res_b - 1);
                if lo > hi {
                    continue;
                }
                let base = i as usize * (self.res_b + 1);
                total += self.prefix[base + hi + 1] - self.prefix[base + lo];
                nodes += hi + 1 - lo;
            }
        }
        (total, nodes)
    }
}

/// Number of extra super-level sets whose hulls enter the candidate family.
pub const CONVEX_LADDER: usize = 32;

struct Candidate {
    sum: f64,
    nodes: usize,
    hull: LatticeHull,
}

/// Hulls of every 8-connected component of `{v >= level}` and of the union
/// of the `j` heaviest components for every `j`. Sums are of raw values.
fn candidates_at(grid: &GridSpec, values: &[f64], sums: &RowSums, level: f64) -> Vec<Candidate> {
    let res_b = grid.resolution[1];
    let mask: Vec<bool> = values.iter().map(|&v| v >= level).collect();
    let comps = grid.components(&mask);
    if comps.is_empty() {
        return Vec::new();
    }
    let coords = |k: usize| ((k / res_b) as i64, (k % res_b) as i64);
    let hulls: Vec<LatticeHull> = comps
        .iter()
        .map(|c| LatticeHull::new(&c.iter().map(|&k| coords(k)).collect::<Vec<_>>()))
        .collect();
    let own_mass: Vec<f64> = comps.iter().map(|c| c.iter().map(|&k| values[k] - level).sum()).collect();
    let mut order: Vec<usize> = (0..comps.len()).collect();
    order.sort_by(|&x, &y| own_mass[y].total_cmp(&own_mass[x]).then(x.cmp(&y)));

    let mut out = Vec::with_capacity(2 * comps.len());
    let mut push = |hull: LatticeHull| {
        let (sum, nodes) = sums.hull_sum(&hull);
        out.push(Candidate { sum, nodes, hull });
    };
    for h in &hulls {
        push(h.clone());
    }
    let mut union_pts: Vec<(i64, i64)> = hulls[order[0]].vertices.clone();
    for &c in order.iter().skip(1) {
        union_pts.extend_from_slice(&hulls[c].vertices);
        let h = LatticeHull::new(&union_pts);
        union_pts = h.vertices.clone();
        push(h);
    }
    out
}

/// Convex-restricted excess mass `E_C,n(lambda)`, approximated from below
/// over a finite family of lattice convex hulls: for the level `lambda` and
/// for [`CONVEX_LADDER`] equally spaced higher levels up to the field
/// maximum, the hull of each 8-connected component of the super-level set
/// and of the union of its `j` heaviest components for every `j`. A hull is
/// scored by `sum over its nodes of (M - lambda) * cell`, so the result
/// never exceeds [`excess_mass_empirical`].
pub fn excess_mass_convex<F: LatticeField + ?Sized>(field: &F, lambda: f64) -> Result<ConvexExcess> {
    check_lambda(lambda)?;
    let grid = field.grid();
    if grid.dim() != 2 {
        return invalid("convex excess mass needs a planar grid");
    }
    let (res_a, res_b) = (grid.resolution[0], grid.resolution[1]);
    let cell = grid.cell_volume();
    let values = field.values();
    let mask: Vec<bool> = values.iter().map(|&v| v >= lambda).collect();
    let components = grid.components(&mask).len();

    let mut band = 0usize;
    for k in 0..mask.len() {
        if !mask[k] && grid.neighbors(k).iter().any(|&j| mask[j]) {
            band += 1;
        }
    }
    let slack = lambda * cell * band as f64;

    if components == 0 {
        return Ok(ConvexExcess { value: 0.0, hull: Vec::new(), hull_nodes: 0, components: 0, slack });
    }
    let sums = RowSums::new(&values, res_a, res_b);
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut levels = vec![lambda];
    levels.extend((1..CONVEX_LADDER).map(|k| lambda + (top - lambda) * k as f64 / CONVEX_LADDER as f64));
    let score = |c: &Candidate| c.sum - lambda * c.nodes as f64;
    let best = levels
        .par_iter()
        .map(|&l| candidates_at(grid, &values, &sums, l).into_iter().reduce(|a, b| if score(&b) > score(&a) { b } else { a }))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .reduce(|a, b| if score(&b) > score(&a) { b } else { a })
        .expect("the level set is nonempty");
    // prefix sums round differently from the direct sum; the bound is exact
    let value = (score(&best) * cell).max(0.0).min(excess_mass_empirical(field, lambda)?);
    let hull_theta = best
        .hull
        .vertices
        .iter()
        .map(|&(i, j)| Theta::planar(grid.coord(0, i as usize), grid.coord(1, j as usize)))
        .collect();
    Ok(ConvexExcess { value, hull: hull_theta, hull_nodes: best.nodes, components, slack })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Empirical,
    ConvexRestricted,
    Null,
}

impl std::fmt::Display for CurveKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CurveKind::Empirical => "empirical",
            CurveKind::ConvexRestricted => "convex",
            CurveKind::Null => "null",
        })
    }
}

/// Samples of an excess-mass functional over levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcessMassCurve {
    pub lambdas: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: CurveKind,
}

pub fn empirical_curve<F: LatticeField + Sync + ?Sized>(field: &F, lambdas: &[f64]) -> Result<ExcessMassCurve> {
    check_lambdas(lambdas)?;
    let values = lambdas
        .par_iter()
        .map(|&l| excess_mass_empirical(field, l))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExcessMassCurve { lambdas: lambdas.to_vec(), values, kind: CurveKind::Empirical })
}

pub fn convex_curve<F: LatticeField + Sync + ?Sized>(field: &F, lambdas: &[f64]) -> Result<(ExcessMassCurve, Vec<ConvexExcess>)> {
    check_lambdas(lambdas)?;
    let details = lambdas
        .par_iter()
        .map(|&l| excess_mass_convex(field, l))
        .collect::<Result<Vec<_>>>()?;
    let curve = ExcessMassCurve {
        lambdas: lambdas.to_vec(),
        values: details.iter().map(|d| d.value).collect(),
        kind: CurveKind::ConvexRestricted,
    };
    Ok((curve, details))
}

/// Known-null excess mass with a truncation diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullExcess {
    pub curve: ExcessMassCurve,
    /// Levels at which the integrand is still positive on the region boundary.
    pub boundary_mass_at: Vec<f64>,
}

/// `E_*(lambda) = integral of (P{|noise + Z'theta| <= r|Z|} - lambda)^+`, the
/// excess mass of the single-line null, evaluated on `region` (which should
/// be centered on the origin and contain the support of the integrand).
pub fn excess_mass_null(
    spec: &ModelSpec,
    r: f64,
    lambdas: &[f64],
    region: &GridSpec,
    quad: &QuadratureSpec,
) -> Result<NullExcess> {
    check_lambdas(lambdas)?;
    spec.require_assumption_b()?;
    let field = population_field(&spec.centered(), region, r, quad)?;
    null_from_field(&field, lambdas)
}

fn null_from_field(field: &DenseField, lambdas: &[f64]) -> Result<NullExcess> {
    let mut curve = empirical_curve(field, lambdas)?;
    curve.kind = CurveKind::Null;
    let edge_max = (0..field.grid.node_count())
        .filter(|&k| field.grid.is_boundary(k))
        .map(|k| field.values[k])
        .fold(f64::NEG_INFINITY, f64::max);
    let boundary_mass_at = lambdas.iter().copied().filter(|&l| edge_max > l).collect();
    Ok(NullExcess { curve, boundary_mass_at })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectionMode {
    /// `T'_n`: compare with the known-null functional `E_*`.
    KnownNull,
    /// `T~'_n`: compare with the convex-restricted empirical functional.
    Convex,
}

/// Monte Carlo reference distribution of a detection statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub mode: DetectionMode,
    pub replicates: usize,
    pub n: usize,
    pub seed: u64,
    pub alpha: f64,
    pub critical_value: f64,
    /// Statistics of the null replicates, sorted.
    pub statistics: Vec<f64>,
}

/// Outcome of a detection statistic on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub mode: DetectionMode,
    pub n: usize,
    pub r: f64,
    pub statistic: f64,
    pub lambdas: Vec<f64>,
    pub empirical: Vec<f64>,
    /// `E_*` (known null) or `E_C,n` (convex) per level.
    pub reference: Vec<f64>,
    pub gaps: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slack: Option<Vec<f64>>,
    pub critical_value: Option<f64>,
    pub decision: Option<bool>,
    pub calibration: Option<CalibrationMeta>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationMeta {
    pub replicates: usize,
    pub seed: u64,
    pub alpha: f64,
    pub n: usize,
}

impl DetectionReport {
    /// Attaches a calibration: the null is rejected when the statistic
    /// exceeds the critical value.
    pub fn with_calibration(mut self, cal: &Calibration) -> Self {
        self.critical_value = Some(cal.critical_value);
        self.decision = Some(self.statistic > cal.critical_value);
        self.calibration = Some(CalibrationMeta {
            replicates: cal.replicates,
            seed: cal.seed,
            alpha: cal.alpha,
            n: cal.n,
        });
        if cal.n != self.n {
            self.warnings
                .push(format!("calibrated at n = {} but the data have n = {}", cal.n, self.n));
        }
        self
    }
}

fn sup_gap(n: usize, gaps: &[f64]) -> f64 {
    (n as f64).sqrt() * gaps.iter().fold(0.0f64, |m, g| m.max(g.abs()))
}

/// `T'_n = sqrt(n) max_lambda |E_n(lambda) - E_*(lambda)|`. The null
/// functional is evaluated on `grid` translated to the origin.
pub fn stat_known_null(
    data: &Dataset,
    spec: &ModelSpec,
    r: f64,
    lambdas: &[f64],
    grid: &GridSpec,
    quad: &QuadratureSpec,
) -> Result<DetectionReport> {
    let null = excess_mass_null(spec, r, lambdas, &grid.recentered(), quad)?;
    known_null_against(data, &null, r, lambdas, grid)
}

fn known_null_against(data: &Dataset, null: &NullExcess, r: f64, lambdas: &[f64], grid: &GridSpec) -> Result<DetectionReport> {
    check_lambdas(lambdas)?;
    let field = objective_field(data, grid, r)?;
    let emp = empirical_curve(&field, lambdas)?;
    let gaps: Vec<f64> = emp.values.iter().zip(&null.curve.values).map(|(e, s)| e - s).collect();
    let mut warnings = Vec::new();
    if !null.boundary_mass_at.is_empty() {
        warnings.push(format!(
            "null integrand is positive on the region boundary at {} level(s); E_* is truncated",
            null.boundary_mass_at.len()
        ));
    }
    let edge_max = (0..grid.node_count())
        .filter(|&k| grid.is_boundary(k))
        .map(|k| field.value(k))
        .fold(0.0, f64::max);
    if lambdas.iter().any(|&l| edge_max > l) {
        warnings.push("empirical field exceeds a level on the grid boundary; E_n is truncated".into());
    }
    Ok(DetectionReport {
        mode: DetectionMode::KnownNull,
        n: data.len(),
        r,
        statistic: sup_gap(data.len(), &gaps),
        lambdas: lambdas.to_vec(),
        empirical: emp.values,
        reference: null.curve.values.clone(),
        gaps,
        slack: None,
        critical_value: None,
        decision: None,
        calibration: None,
        warnings,
    })
}

/// `T~'_n = sqrt(n) max_lambda (E_n(lambda) - E_C,n(lambda))`.
///
/// `E_C,n` comes from the hull candidate family of [`excess_mass_convex`],
/// which approximates the convex supremum from below, so the statistic is
/// biased upward.
pub fn stat_convex(data: &Dataset, r: f64, lambdas: &[f64], grid: &GridSpec) -> Result<DetectionReport> {
    check_lambdas(lambdas)?;
    let field = objective_field(data, grid, r)?;
    let emp = empirical_curve(&field, lambdas)?;
    let (conv, details) = convex_curve(&field, lambdas)?;
    let gaps: Vec<f64> = emp.values.iter().zip(&conv.values).map(|(e, c)| e - c).collect();
    Ok(DetectionReport {
        mode: DetectionMode::Convex,
        n: data.len(),
        r,
        statistic: sup_gap(data.len(), &gaps),
        lambdas: lambdas.to_vec(),
        empirical: emp.values,
        reference: conv.values,
        gaps,
        slack: Some(details.iter().map(|d| d.slack).collect()),
        critical_value: None,
        decision: None,
        calibration: None,
        warnings: vec!["convex family approximated by component hulls; statistic biased upward".into()],
    })
}

/// Lower empirical quantile: the smallest sample value `v` with
/// `#{x <= v} >= q * len`.
pub fn lower_quantile(sorted: &[f64], q: f64) -> f64 {
    let idx = ((q * sorted.len() as f64).ceil() as usize).saturating_sub(1).min(sorted.len() - 1);
    sorted[idx]
}

/// Monte Carlo critical value: the lower empirical `(1 - alpha)`-quantile of
/// the statistic over `replicates` datasets drawn from `spec`.
#[allow(clippy::too_many_arguments)]
pub fn calibrate_null(
    spec: &ModelSpec,
    mode: DetectionMode,
    r: f64,
    lambdas: &[f64],
    grid: &GridSpec,
    n: usize,
    replicates: usize,
    alpha: f64,
    seed: u64,
    quad: &QuadratureSpec,
) -> Result<Calibration> {
    if replicates < 100 {
        return invalid(format!("calibration needs at least 100 replicates, got {replicates}"));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return invalid(format!("alpha must lie in (0, 1], got {alpha}"));
    }
    check_lambdas(lambdas)?;
    let stat = statistic_fn(spec, mode, r, lambdas, grid, quad)?;
    let mut statistics = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let data = gen_dataset(spec, n, rng::replicate_seed(seed, CALIBRATION_STREAM, i as u64))?;
            stat(&data)
        })
        .collect::<Result<Vec<f64>>>()?;
    statistics.sort_by(f64::total_cmp);
    Ok(Calibration {
        mode,
        replicates,
        n,
        seed,
        alpha,
        critical_value: lower_quantile(&statistics, 1.0 - alpha),
        statistics,
    })
}

pub type Statistic<'a> = Box<dyn Fn(&Dataset) -> Result<f64> + Send + Sync + 'a>;

/// The detection statistic as a reusable closure; the known-null functional
/// is computed once.
pub fn statistic_fn<'a>(
    spec: &ModelSpec,
    mode: DetectionMode,
    r: f64,
    lambdas: &'a [f64],
    grid: &'a GridSpec,
    quad: &QuadratureSpec,
) -> Result<Statistic<'a>> {
    match mode {
        DetectionMode::Convex => Ok(Box::new(move |d: &Dataset| Ok(stat_convex(d, r, lambdas, grid)?.statistic))),
        DetectionMode::KnownNull => {
            let null = excess_mass_null(spec, r, lambdas, &grid.recentered(), quad)?;
            Ok(Box::new(move |d: &Dataset| Ok(known_null_against(d, &null, r, lambdas, grid)?.statistic)))
        }
    }
}

/// Lebesgue measure of the symmetric difference of two level sets.
pub fn sym_diff_distance(a: &LevelSetMask, b: &LevelSetMask) -> Result<f64> {
    if a.grid != b.grid {
        return invalid("level sets live on different grids");
    }
    let count = a.member.iter().zip(&b.member).filter(|(x, y)| x != y).count();
    Ok(count as f64 * a.grid.cell_volume())
}

/// Area of the band `{theta : |M(theta) - lambda| < delta}` for each level.
pub fn flatness_diagnostic<F: LatticeField + ?Sized>(field: &F, lambdas: &[f64], delta: f64) -> Result<Vec<(f64, f64)>> {
    if !(delta > 0.0) {
        return invalid(format!("delta must be positive, got {delta}"));
    }
    let cell = field.grid().cell_volume();
    let values = field.values();
    Ok(lambdas
        .iter()
        .map(|&l| (l, values.iter().filter(|&&v| (v - l).abs() < delta).count() as f64 * cell))
        .collect())
}
