//! Independent oracles shared by integration test targets.
#![allow(dead_code)]

use std::collections::BTreeSet;

use colorlex::ColorChip;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn chip(t: [i64; 3]) -> ColorChip {
    ColorChip::from_tenths(t[0] as i32, t[1] as i32, t[2] as i32).unwrap()
}

pub fn cloud(rng: &mut ChaCha8Rng, n: usize, span: i64) -> Vec<[i64; 3]> {
    let mut v: Vec<[i64; 3]> = (0..n)
        .map(|_| [rng.random_range(0..=span), rng.random_range(-span..=span), rng.random_range(-span..=span)])
        .collect();
    v.sort();
    v.dedup();
    v
}

pub fn sub(a: [i64; 3], b: [i64; 3]) -> [i64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn cross(a: [i64; 3], b: [i64; 3]) -> [i64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn dot(a: [i64; 3], b: [i64; 3]) -> i64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Every supporting plane through three input points.
pub fn brute_force_facets(pts: &[[i64; 3]]) -> BTreeSet<([i64; 3], i64)> {
    let mut out = BTreeSet::new();
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            for k in (j + 1)..pts.len() {
                let n = cross(sub(pts[j], pts[i]), sub(pts[k], pts[i]));
                if n == [0, 0, 0] {
                    continue;
                }
                let side: Vec<i64> = pts.iter().map(|p| dot(n, sub(*p, pts[i]))).collect();
                let sign = if side.iter().all(|&s| s <= 0) {
                    1
                } else if side.iter().all(|&s| s >= 0) {
                    -1
                } else {
                    continue;
                };
                let g = gcd(gcd(n[0], n[1]), n[2]);
                let n = n.map(|x| sign * x / g);
                out.insert((n, dot(n, pts[i])));
            }
        }
    }
    out
}

/// Phase-one simplex: is `q` a convex combination of `pts`?
#[allow(clippy::needless_range_loop)]
pub fn lp_contains(pts: &[[i64; 3]], q: [i64; 3]) -> bool {
    let m = pts.len();
    let rows = 4;
    let cols = m + rows + 1;
    let mut t = vec![vec![0.0f64; cols]; rows + 1];
    for (j, p) in pts.iter().enumerate() {
        for r in 0..3 {
            t[r][j] = p[r] as f64;
        }
        t[3][j] = 1.0;
    }
    for r in 0..3 {
        t[r][cols - 1] = q[r] as f64;
    }
    t[3][cols - 1] = 1.0;
    for r in 0..rows {
        if t[r][cols - 1] < 0.0 {
            for v in t[r].iter_mut() {
                *v = -*v;
            }
        }
        t[r][m + r] = 1.0;
    }
    let mut basis: Vec<usize> = (m..m + rows).collect();
    // objective row: minimise the sum of artificials, priced out
    for j in 0..cols {
        if (m..m + rows).contains(&j) {
            continue;
        }
        t[rows][j] = -(0..rows).map(|r| t[r][j]).sum::<f64>();
    }
    let tol = 1e-9;
    for _ in 0..10_000 {
        let Some(enter) = (0..cols - 1).find(|&j| t[rows][j] < -tol) else {
            break;
        };
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..rows {
            if t[r][enter] > tol {
                let ratio = t[r][cols - 1] / t[r][enter];
                let better = match leave {
                    None => true,
                    Some((lr, best)) => ratio < best - 1e-12 || (ratio <= best + 1e-12 && basis[r] < basis[lr]),
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((pr, _)) = leave else { break };
        let pv = t[pr][enter];
        for v in t[pr].iter_mut() {
            *v /= pv;
        }
        for r in 0..=rows {
            if r != pr {
                let f = t[r][enter];
                if f != 0.0 {
                    for c in 0..cols {
                        t[r][c] -= f * t[pr][c];
                    }
                }
            }
        }
        basis[pr] = enter;
    }
    -t[rows][cols - 1] <= 1e-7
}
