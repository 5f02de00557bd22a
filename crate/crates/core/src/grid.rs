//! Regular parameter lattices.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::Theta;

/// A regular lattice over the box `[lo, hi]`, corners included, with
/// `resolution[k]` nodes along axis `k`. Nodes are numbered row-major in axis
/// order (the last axis varies fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub resolution: Vec<usize>,
}

impl GridSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, resolution: Vec<usize>) -> Result<Self> {
        let g = Self { lo, hi, resolution };
        g.validate()?;
        Ok(g)
    }

    /// Planar grid `[a_lo, a_hi] x [b_lo, b_hi]`.
    pub fn planar(a: (f64, f64), b: (f64, f64), res: (usize, usize)) -> Result<Self> {
        Self::new(vec![a.0, b.0], vec![a.1, b.1], vec![res.0, res.1])
    }

    /// The square `[lo, hi]^2` with `res` nodes per axis.
    pub fn square(lo: f64, hi: f64, res: usize) -> Result<Self> {
        Self::planar((lo, hi), (lo, hi), (res, res))
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.lo.len();
        if p == 0 || self.hi.len() != p || self.resolution.len() != p {
            return invalid("grid corners and resolution must share a nonzero dimension");
        }
        for k in 0..p {
            if !(self.lo[k].is_finite() && self.hi[k].is_finite() && self.lo[k] < self.hi[k]) {
                return invalid(format!("grid axis {k}: need lo < hi, got [{}, {}]", self.lo[k], self.hi[k]));
            }
            if self.resolution[k] < 2 {
                return invalid(format!("grid axis {k}: resolution must be at least 2"));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn node_count(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / (self.resolution[axis] - 1) as f64
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        if i + 1 == self.resolution[axis] {
            self.hi[axis]
        } else {
            self.lo[axis] + (self.hi[axis] - self.lo[axis]) * i as f64 / (self.resolution[axis] - 1) as f64
        }
    }

    /// Volume of one lattice cell (area in the planar case).
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|k| self.spacing(k)).product()
    }

    /// Volume represented by all nodes under the midpoint rule.
    pub fn region_volume(&self) -> f64 {
        self.cell_volume() * self.node_count() as f64
    }

    pub fn unravel(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for k in (0..self.dim()).rev() {
            out[k] = index % self.resolution[k];
            index /= self.resolution[k];
        }
        out
    }

    pub fn ravel(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.resolution).fold(0, |acc, (&i, &r)| acc * r + i)
    }

    pub fn node(&self, index: usize) -> Theta {
        let m = self.unravel(index);
        Theta(m.iter().enumerate().map(|(k, &i)| self.coord(k, i)).collect())
    }

    pub fn center(&self) -> Theta {
        Theta(self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect())
    }

    pub fn is_boundary(&self, index: usize) -> bool {
        self.unravel(index)
            .iter()
            .zip(&self.resolution)
            .any(|(&i, &r)| i == 0 || i + 1 == r)
    }

    /// Same lattice translated by `offset`.
    pub fn translated(&self, offset: &[f64]) -> Self {
        Self {
            lo: self.lo.iter().zip(offset).map(|(l, o)| l + o).collect(),
            hi: self.hi.iter().zip(offset).map(|(h, o)| h + o).collect(),
            resolution: self.resolution.clone(),
        }
    }

    /// Same lattice with every coordinate multiplied by `c` (axes flipped
    /// back into increasing order when `c < 0`).
    pub fn scaled(&self, c: f64) -> Self {
        let (lo, hi) = if c > 0.0 {
            (self.lo.iter().map(|v| v * c).collect(), self.hi.iter().map(|v| v * c).collect())
        } else {
            (self.hi.iter().map(|v| v * c).collect(), self.lo.iter().map(|v| v * c).collect())
        };
        Self { lo, hi, resolution: self.resolution.clone() }
    }

    /// Same shape, centered on the origin.
    pub fn recentered(&self) -> Self {
        let c = self.center();
        self.translated(&c.0.iter().map(|v| -v).collect::<Vec<_>>())
    }

    /// Neighbours of `index` at Chebyshev distance one (8-neighbourhood in
    /// the plane).
    pub fn neighbors(&self, index: usize) -> Vec<usize> {
        let base = self.unravel(index);
        let p = self.dim();
        let mut out = Vec::with_capacity(3usize.pow(p as u32) - 1);
        let mut offset = vec![-1i64; p];
        loop {
            if offset.iter().any(|&o| o != 0) {
                let mut ok = true;
                let mut idx = 0usize;
                for k in 0..p {
                    let v = base[k] as i64 + offset[k];
                    if v < 0 || v >= self.resolution[k] as i64 {
                        ok = false;
                        break;
                    }
                    idx = idx * self.resolution[k] + v as usize;
                }
                if ok {
                    out.push(idx);
                }
            }
            let mut k = p;
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                if offset[k] < 1 {
                    offset[k] += 1;
                    break;
                }
                offset[k] = -1;
            }
        }
    }

    /// Connected components of the nodes flagged in `mask`, each listed in
    /// increasing index order; components are ordered by their first node.
    pub fn components(&self, mask: &[bool]) -> Vec<Vec<usize>> {
        let mut label = vec![usize::MAX; mask.len()];
        let mut comps = Vec::new();
        let mut stack = Vec::new();
        for start in 0..mask.len() {
            if !mask[start] || label[start] != usize::MAX {
                continue;
            }
            let id = comps.len();
            let mut members = Vec::new();
            label[start] = id;
            stack.push(start);
            while let Some(i) = stack.pop() {
                members.push(i);
                for j in self.neighbors(i) {
                    if mask[j] && label[j] == usize::MAX {
                        label[j] = id;
                        stack.push(j);
                    }
                }
            }
            members.sort_unstable();
            comps.push(members);
        }
        comps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table1_lattice() {
        let g = GridSpec::square(-3.0, 3.0, 600).unwrap();
        assert_eq!(g.node_count(), 360_000);
        assert_eq!(g.node(0), Theta::planar(-3.0, -3.0));
        assert_eq!(g.node(g.node_count() - 1), Theta::planar(3.0, 3.0));
        assert_eq!(g.node(1), Theta::planar(-3.0, -3.0 + 6.0 / 599.0));
    }

    #[test]
    fn ravel_roundtrip() {
        let g = GridSpec::new(vec![0.0; 3], vec![1.0; 3], vec![3, 4, 5]).unwrap();
        for i in 0..g.node_count() {
            assert_eq!(g.ravel(&g.unravel(i)), i);
        }
    }

    #[test]
    fn invalid_grids() {
        assert!(GridSpec::square(1.0, 1.0, 10).is_err());
        assert!(GridSpec::square(0.0, 1.0, 1).is_err());
        assert!(GridSpec::new(vec![0.0], vec![1.0, 2.0], vec![3]).is_err());
    }

    #[test]
    fn eight_neighbourhood() {
        let g = GridSpec::square(0.0, 1.0, 5).unwrap();
        assert_eq!(g.neighbors(0).len(), 3);
        assert_eq!(g.neighbors(12).len(), 8);
        // diagonal touch joins components
        let mut mask = vec![false; 25];
        mask[0] = true;
        mask[6] = true;
        mask[24] = true;
        let comps = g.components(&mask);
        assert_eq!(comps, vec![vec![0, 6], vec![24]]);
    }
}

/// Real-valued data attached to the nodes of a lattice.
pub trait LatticeField {
    fn grid(&self) -> &GridSpec;
    fn value(&self, index: usize) -> f64;

    fn values(&self) -> Vec<f64> {
        (0..self.grid().node_count()).map(|k| self.value(k)).collect()
    }
}

/// A lattice field with explicit values, e.g. a population objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl LatticeField for DenseField {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn value(&self, index: usize) -> f64 {
        self.values[index]
    }

    fn values(&self) -> Vec<f64> {
        self.values.clone()
    }
}
