//! Exhaustive reference implementations used as oracles.

#![allow(dead_code)]

use houghfit::grid::GridSpec;

/// Node coordinates of `grid`, row-major, last axis fastest.
pub fn nodes(grid: &GridSpec) -> Vec<Vec<f64>> {
    let p = grid.dim();
    let mut out = Vec::with_capacity(grid.node_count());
    let mut idx = vec![0usize; p];
    loop {
        out.push((0..p).map(|k| grid.coord(k, idx[k])).collect());
        let mut k = p;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < grid.resolution[k] {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Number of points with `(theta'z - y)^2 <= r^2 |z|^2` (or `<= r^2` for the
/// strip), written out term by term.
pub fn count_cover(theta: &[f64], zs: &[Vec<f64>], ys: &[f64], r: f64, strip: bool) -> u32 {
    let mut c = 0;
    for (z, &y) in zs.iter().zip(ys) {
        let mut fit = 0.0;
        let mut norm = 0.0;
        for k in 0..z.len() {
            if k == 0 {
                fit = theta[0] * z[0];
                norm = z[0] * z[0];
            } else {
                fit += theta[k] * z[k];
                norm += z[k] * z[k];
            }
        }
        let res = fit - y;
        let bound = if strip { r * r } else { r * r * norm };
        if res * res <= bound {
            c += 1;
        }
    }
    c
}

pub fn planar_rows(xs: &[f64]) -> Vec<Vec<f64>> {
    xs.iter().map(|&x| vec![x, 1.0]).collect()
}

/// Exhaustive maximization: (best count, optimal node indices).
pub fn brute_argmax(grid: &GridSpec, zs: &[Vec<f64>], ys: &[f64], r: f64, strip: bool) -> (u32, Vec<usize>) {
    let counts: Vec<u32> = nodes(grid).iter().map(|t| count_cover(t, zs, ys, r, strip)).collect();
    let best = *counts.iter().max().unwrap();
    (best, (0..counts.len()).filter(|&k| counts[k] == best).collect())
}

/// Exhaustive LMS: (best squared median residual, optimal nodes). Uses the
/// order statistic of 1-based rank floor(n/2) + 1.
pub fn brute_lms(grid: &GridSpec, xs: &[f64], ys: &[f64]) -> (f64, Vec<usize>) {
    let h = xs.len() / 2;
    let meds: Vec<f64> = nodes(grid)
        .iter()
        .map(|t| {
            let mut sq: Vec<f64> = xs.iter().zip(ys).map(|(&x, &y)| (t[0] * x + t[1] * 1.0 - y).powi(2)).collect();
            sq.sort_by(|a, b| a.partial_cmp(b).unwrap());
            sq[h]
        })
        .collect();
    let best = meds.iter().copied().fold(f64::INFINITY, f64::min);
    (best, (0..meds.len()).filter(|&k| meds[k] == best).collect())
}

pub fn mean_of(grid: &GridSpec, idx: &[usize]) -> Vec<f64> {
    let all = nodes(grid);
    let p = grid.dim();
    let mut m = vec![0.0; p];
    for &k in idx {
        for d in 0..p {
            m[d] += all[k][d];
        }
    }
    m.iter().map(|v| v / idx.len() as f64).collect()
}

/// Connected components of a node set under Chebyshev adjacency, by
/// breadth-first search over explicit integer coordinates.
pub fn component_count(grid: &GridSpec, idx: &[usize]) -> usize {
    let p = grid.dim();
    let coords: Vec<Vec<usize>> = idx
        .iter()
        .map(|&k| {
            let mut rem = k;
            let mut c = vec![0; p];
            for d in (0..p).rev() {
                c[d] = rem % grid.resolution[d];
                rem /= grid.resolution[d];
            }
            c
        })
        .collect();
    let adjacent = |a: &Vec<usize>, b: &Vec<usize>| a.iter().zip(b).all(|(x, y)| x.abs_diff(*y) <= 1);
    let mut seen = vec![false; coords.len()];
    let mut comps = 0;
    for s in 0..coords.len() {
        if seen[s] {
            continue;
        }
        comps += 1;
        seen[s] = true;
        let mut queue = vec![s];
        while let Some(u) = queue.pop() {
            for v in 0..coords.len() {
                if !seen[v] && adjacent(&coords[u], &coords[v]) {
                    seen[v] = true;
                    queue.push(v);
                }
            }
        }
    }
    comps
}
