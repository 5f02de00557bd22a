//! Convex hulls of lattice points in exact integer arithmetic.

/// Convex hull of a set of lattice points, vertices counter-clockwise with
/// collinear points removed. Degenerates to a segment or a single point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeHull {
    pub vertices: Vec<(i64, i64)>,
}

fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn div_floor(a: i64, b: i64) -> i64 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn div_ceil(a: i64, b: i64) -> i64 {
    -div_floor(-a, b)
}

impl LatticeHull {
    /// Andrew's monotone chain.
    pub fn new(points: &[(i64, i64)]) -> Self {
        let mut pts = points.to_vec();
        pts.sort_unstable();
        pts.dedup();
        if pts.len() <= 2 {
            return Self { vertices: pts };
        }
        let mut lower: Vec<(i64, i64)> = Vec::new();
        for &p in &pts {
            while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<(i64, i64)> = Vec::new();
        for &p in pts.iter().rev() {
            while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        Self { vertices: lower }
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Range of first coordinates spanned by the hull.
    pub fn row_span(&self) -> Option<(i64, i64)> {
        let lo = self.vertices.iter().map(|v| v.0).min()?;
        let hi = self.vertices.iter().map(|v| v.0).max()?;
        Some((lo, hi))
    }

    /// Lattice points `(i, j)` of row `i` inside or on the hull, as an
    /// inclusive range of `j`.
    pub fn row_range(&self, i: i64) -> Option<(i64, i64)> {
        match self.vertices.len() {
            0 => None,
            1 => {
                let v = self.vertices[0];
                (v.0 == i).then_some((v.1, v.1))
            }
            2 => {
                let (p, q) = (self.vertices[0], self.vertices[1]);
                if i < p.0.min(q.0) || i > p.0.max(q.0) {
                    return None;
                }
                if p.0 == q.0 {
                    return Some((p.1.min(q.1), p.1.max(q.1)));
                }
                let num = (q.1 - p.1) * (i - p.0);
                let den = q.0 - p.0;
                (num % den == 0).then(|| {
                    let j = p.1 + num / den;
                    (j, j)
                })
            }
            len => {
                let (mut lo, mut hi) = (i64::MIN, i64::MAX);
                for e in 0..len {
                    let p = self.vertices[e];
                    let q = self.vertices[(e + 1) % len];
                    let (di, dj) = (q.0 - p.0, q.1 - p.1);
                    // inside: di * (j - pj) - dj * (i - pi) >= 0
                    let rhs = di * p.1 + dj * (i - p.0);
                    if di > 0 {
                        lo = lo.max(div_ceil(rhs, di));
                    } else if di < 0 {
                        hi = hi.min(div_floor(rhs, di));
                    } else if -dj * (i - p.0) < 0 {
                        return None;
                    }
                }
                (lo <= hi).then_some((lo, hi))
            }
        }
    }

    /// Polygon area in lattice units.
    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        if n < 3 {
            return 0.0;
        }
        let twice: i64 = (0..n)
            .map(|k| {
                let (p, q) = (self.vertices[k], self.vertices[(k + 1) % n]);
                p.0 * q.1 - q.0 * p.1
            })
            .sum();
        0.5 * twice as f64
    }
}
