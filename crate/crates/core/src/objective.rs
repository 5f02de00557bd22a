//! The HT template and the empirical objective `M_{r,n}`.
//!
//! A point `(x, y)` lies in the template of `theta = (a, b)` iff
//! `|x a + b - y|^2 <= r^2 (x^2 + 1)`, i.e. iff its dual line meets the
//! closed disc of radius `r` around `theta`. The vertical-strip variant uses
//! the threshold `r^2` instead.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{GridSpec, LatticeField};
use crate::model::{Dataset, Observation, Theta};

/// Cell shape in the parameter domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Template {
    /// Disc of radius `r`: the classical HT.
    Hough,
    /// Vertical segment of length `2r`: residuals bounded by `r`.
    Strip,
}

/// Observations in regression form: response `y` against regressor row `z`.
#[derive(Debug, Clone)]
pub(crate) struct Rows {
    p: usize,
    z: Vec<f64>,
    y: Vec<f64>,
}

impl Rows {
    pub(crate) fn planar(data: &Dataset) -> Self {
        let mut z = Vec::with_capacity(2 * data.len());
        for pt in data.points() {
            z.push(pt.x);
            z.push(1.0);
        }
        Self { p: 2, z, y: data.ys() }
    }

    pub(crate) fn multi(responses: &[f64], regressors: &[Vec<f64>]) -> Result<Self> {
        if responses.is_empty() {
            return invalid("no observations");
        }
        if responses.len() != regressors.len() {
            return invalid(format!(
                "{} responses but {} regressor rows",
                responses.len(),
                regressors.len()
            ));
        }
        let p = regressors[0].len();
        if p == 0 || regressors.iter().any(|row| row.len() != p) {
            return invalid("regressor rows must share a nonzero dimension");
        }
        let z: Vec<f64> = regressors.iter().flatten().copied().collect();
        if z.iter().chain(responses).any(|v| !v.is_finite()) {
            return invalid("non-finite regression data");
        }
        Ok(Self { p, z, y: responses.to_vec() })
    }

    pub(crate) fn len(&self) -> usize {
        self.y.len()
    }

    pub(crate) fn dim(&self) -> usize {
        self.p
    }

    pub(crate) fn row(&self, i: usize) -> (&[f64], f64) {
        (&self.z[i * self.p..(i + 1) * self.p], self.y[i])
    }
}

#[inline]
pub(crate) fn dot(theta: &[f64], z: &[f64]) -> f64 {
    let mut s = theta[0] * z[0];
    for k in 1..z.len() {
        s += theta[k] * z[k];
    }
    s
}

#[inline]
pub(crate) fn threshold(template: Template, z: &[f64], r: f64) -> f64 {
    match template {
        Template::Hough => r * r * dot(z, z),
        Template::Strip => r * r,
    }
}

#[inline]
pub(crate) fn covers(template: Template, z: &[f64], y: f64, theta: &[f64], r: f64) -> bool {
    let d = dot(theta, z) - y;
    d * d <= threshold(template, z, r)
}

fn check_radius(r: f64) -> Result<()> {
    if r >= 0.0 && r.is_finite() {
        Ok(())
    } else {
        invalid(format!("radius must be finite and nonnegative, got {r}"))
    }
}

/// Closed-template membership `|x a + b - y|^2 <= r^2 (x^2 + 1)`.
pub fn template_contains(point: Observation, theta: &Theta, r: f64) -> Result<bool> {
    check_radius(r)?;
    if theta.dim() != 2 {
        return invalid("planar template needs a 2-dimensional theta");
    }
    Ok(covers(Template::Hough, &[point.x, 1.0], point.y, theta.coords(), r))
}

/// Fraction of observations inside the template of `theta`.
pub fn objective_value(data: &Dataset, theta: &Theta, r: f64) -> Result<f64> {
    objective_value_with(data, theta, r, Template::Hough)
}

pub fn objective_value_with(data: &Dataset, theta: &Theta, r: f64, template: Template) -> Result<f64> {
    check_radius(r)?;
    if data.is_empty() {
        return invalid("empty dataset");
    }
    if theta.dim() != 2 {
        return invalid("planar objective needs a 2-dimensional theta");
    }
    let count = data
        .points()
        .iter()
        .filter(|p| covers(template, &[p.x, 1.0], p.y, theta.coords(), r))
        .count();
    Ok(count as f64 / data.len() as f64)
}

/// `M_{r,n}` on every node of a lattice, stored as integer counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveField {
    pub grid: GridSpec,
    pub counts: Vec<u32>,
    pub r: f64,
    pub n: usize,
    pub template: Template,
}

impl ObjectiveField {
    pub fn max_count(&self) -> u32 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    pub fn max_value(&self) -> f64 {
        self.max_count() as f64 / self.n as f64
    }

    /// Indices of all nodes attaining the maximum count, increasing.
    pub fn argmax(&self) -> Vec<usize> {
        let m = self.max_count();
        (0..self.counts.len()).filter(|&k| self.counts[k] == m).collect()
    }
}

impl LatticeField for ObjectiveField {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn value(&self, index: usize) -> f64 {
        self.counts[index] as f64 / self.n as f64
    }
}

/// Evaluates `M_{r,n}` over a planar grid.
pub fn objective_field(data: &Dataset, grid: &GridSpec, r: f64) -> Result<ObjectiveField> {
    objective_field_with(data, grid, r, Template::Hough)
}

pub fn objective_field_with(data: &Dataset, grid: &GridSpec, r: f64, template: Template) -> Result<ObjectiveField> {
    check_radius(r)?;
    grid.validate()?;
    if grid.dim() != 2 {
        return invalid(format!("planar field needs a 2-dimensional grid, got {}", grid.dim()));
    }
    let rows = Rows::planar(data);
    Ok(ObjectiveField {
        grid: grid.clone(),
        counts: count_field(&rows, grid, template, r),
        r,
        n: data.len(),
        template,
    })
}

/// Coverage counts on every lattice node.
///
/// For a fixed prefix of coordinates the covered values of the last
/// coordinate form an interval, so each observation adds one run to a
/// difference array per lattice line. Run endpoints are located from the
/// closed form and then settled with the exact node predicate, so the result
/// equals node-by-node evaluation.
pub(crate) fn count_field(rows: &Rows, grid: &GridSpec, template: Template, r: f64) -> Vec<u32> {
    let p = rows.dim();
    debug_assert_eq!(p, grid.dim());
    let last = p - 1;
    let m = grid.resolution[last];
    let line_coords: Vec<f64> = (0..m).map(|i| grid.coord(last, i)).collect();
    let thresholds: Vec<f64> = (0..rows.len()).map(|i| threshold(template, rows.row(i).0, r)).collect();
    let lo = grid.lo[last];
    let h = grid.spacing(last);

    let mut counts = vec![0u32; grid.node_count()];
    counts.par_chunks_mut(m).enumerate().for_each(|(line, out)| {
        let prefix: Vec<f64> = grid
            .unravel(line * m)
            .iter()
            .take(last)
            .enumerate()
            .map(|(k, &i)| grid.coord(k, i))
            .collect();
        let mut diff = vec![0i32; m + 1];
        for i in 0..rows.len() {
            let (z, y) = rows.row(i);
            let thr = thresholds[i];
            let partial = if last == 0 { None } else { Some(dot(&prefix, &z[..last])) };
            let zl = z[last];
            let pred = |j: usize| {
                let t = line_coords[j] * zl;
                let d = match partial {
                    Some(c) => c + t,
                    None => t,
                } - y;
                d * d <= thr
            };
            if zl == 0.0 {
                if pred(0) {
                    diff[0] += 1;
                    diff[m] -= 1;
                }
                continue;
            }
            let center = (y - partial.unwrap_or(0.0)) / zl;
            let half = thr.sqrt() / zl.abs();
            let top = (m - 1) as f64;
            let lo_f = ((center - half - lo) / h).ceil().clamp(0.0, top);
            let hi_f = ((center + half - lo) / h).floor().clamp(0.0, top);
            if lo_f.is_nan() || hi_f.is_nan() {
                continue;
            }
            let (mut a, mut b) = (lo_f as usize, hi_f as usize);
            while a > 0 && pred(a - 1) {
                a -= 1;
            }
            while a <= b && !pred(a) {
                a += 1;
            }
            while b + 1 < m && pred(b + 1) {
                b += 1;
            }
            while b >= a && !pred(b) {
                if b == 0 {
                    break;
                }
                b -= 1;
            }
            if a <= b && pred(a) {
                diff[a] += 1;
                diff[b + 1] -= 1;
            }
        }
        let mut run = 0i32;
        for (slot, d) in out.iter_mut().zip(&diff) {
            run += d;
            *slot = run as u32;
        }
    });
    counts
}
