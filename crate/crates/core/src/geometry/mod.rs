//! Convex hulls of chip sets in raw CIELAB, with exact integer predicates on
//! the 0.1-unit chip lattice and an exact fallback for flat inputs.

mod quickhull;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::colorspace::ColorChip;
use crate::error::Result;

/// Containment tolerance in CIELAB units.
pub const DEFAULT_EPSILON: f64 = 1e-6;

pub(crate) type P3 = [i64; 3];

pub(crate) fn sub(a: P3, b: P3) -> P3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn cross(a: P3, b: P3) -> P3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn dot(a: P3, b: P3) -> i64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn orient(a: P3, b: P3, c: P3, d: P3) -> i64 {
    dot(cross(sub(b, a), sub(c, a)), sub(d, a))
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn point(c: &ColorChip) -> P3 {
    c.tenths().map(i64::from)
}

fn norm(v: P3) -> f64 {
    (v.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>()).sqrt()
}

/// `normal · x ≤ offset`, in chip tenths, with a primitive integer normal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HalfSpace {
    pub normal: [i64; 3],
    pub offset: i64,
}

impl HalfSpace {
    pub(crate) fn through(normal: P3, on: P3) -> Self {
        let g = gcd(gcd(normal[0], normal[1]), normal[2]).max(1);
        let normal = normal.map(|x| x / g);
        Self {
            normal,
            offset: dot(normal, on),
        }
    }

    /// Signed distance in CIELAB units; positive outside.
    pub fn signed_distance(&self, c: &ColorChip) -> f64 {
        (dot(self.normal, point(c)) - self.offset) as f64 / norm(self.normal) / 10.0
    }

    fn admits(&self, p: P3, eps: f64) -> bool {
        let excess = dot(self.normal, p) - self.offset;
        excess <= 0 || (excess as f64) <= eps * 10.0 * norm(self.normal)
    }
}

/// Convex hull of a chip set.
///
/// `facets` are the outward half-spaces for a solid hull and the in-plane
/// edge constraints for a planar one; `plane` holds the supporting plane
/// of a planar hull.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hull {
    dimension: usize,
    vertices: Vec<ColorChip>,
    facets: Vec<HalfSpace>,
    plane: Option<HalfSpace>,
}

impl Hull {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn vertices(&self) -> &[ColorChip] {
        &self.vertices
    }

    pub fn facets(&self) -> &[HalfSpace] {
        &self.facets
    }

    pub fn plane(&self) -> Option<&HalfSpace> {
        self.plane.as_ref()
    }

    /// Axis-aligned bounds of the vertices in tenths, for cheap rejection.
    pub fn bounds(&self) -> ([i32; 3], [i32; 3]) {
        let mut lo = [i32::MAX; 3];
        let mut hi = [i32::MIN; 3];
        for v in &self.vertices {
            for (k, x) in v.tenths().into_iter().enumerate() {
                lo[k] = lo[k].min(x);
                hi[k] = hi[k].max(x);
            }
        }
        (lo, hi)
    }

    /// JSON debug export: dimension, vertices and half-spaces.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

impl fmt::Display for Hull {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "hull(dim {}, {} vertices, {} facets)",
            self.dimension,
            self.vertices.len(),
            self.facets.len()
        )
    }
}

/// Hull of a non-empty chip set. Input order does not matter.
///
/// # Panics
/// If `points` is empty.
pub fn convex_hull(points: &[ColorChip]) -> Hull {
    let mut chips = points.to_vec();
    chips.sort_unstable();
    chips.dedup();
    assert!(!chips.is_empty(), "convex_hull needs at least one point");
    let pts: Vec<P3> = chips.iter().map(point).collect();

    let a = pts[0];
    let Some(i1) = (1..pts.len()).max_by_key(|&i| dot(sub(pts[i], a), sub(pts[i], a))) else {
        return Hull {
            dimension: 0,
            vertices: chips,
            facets: Vec::new(),
            plane: None,
        };
    };
    let b = pts[i1];
    let ab = sub(b, a);
    let (i2, area) = farthest(&pts, |p| {
        let c = cross(ab, sub(p, a));
        dot(c, c)
    });
    if area == 0 {
        return segment(&chips, &pts, a);
    }
    let c = pts[i2];
    let (i3, vol) = farthest(&pts, |p| orient(a, b, c, p).abs());
    if vol == 0 {
        return planar(&chips, &pts, cross(ab, sub(c, a)), a);
    }
    let (verts, facets) = quickhull::solid(&pts, [0, i1, i2, i3]);
    Hull {
        dimension: 3,
        vertices: verts.into_iter().map(|i| chips[i]).collect(),
        facets,
        plane: None,
    }
}

fn farthest(pts: &[P3], key: impl Fn(P3) -> i64) -> (usize, i64) {
    let mut best = (0, 0);
    for (i, &p) in pts.iter().enumerate() {
        let k = key(p);
        if k > best.1 {
            best = (i, k);
        }
    }
    best
}

fn segment(chips: &[ColorChip], pts: &[P3], a: P3) -> Hull {
    // Extremes along the line direction; chips are sorted so pts[0] is one end.
    let d = sub(pts[pts.len() - 1], a);
    let lo = (0..pts.len()).min_by_key(|&i| dot(sub(pts[i], a), d)).unwrap();
    let hi = (0..pts.len()).max_by_key(|&i| dot(sub(pts[i], a), d)).unwrap();
    let mut vertices = vec![chips[lo], chips[hi]];
    vertices.sort_unstable();
    Hull {
        dimension: 1,
        vertices,
        facets: Vec::new(),
        plane: None,
    }
}

fn planar(chips: &[ColorChip], pts: &[P3], normal: P3, on: P3) -> Hull {
    let plane = HalfSpace::through(normal, on);
    let n = plane.normal;
    // Drop the axis with the largest normal component; the projection is
    // then injective on the plane.
    let drop = (0..3).max_by_key(|&k| (n[k].abs(), std::cmp::Reverse(k))).unwrap();
    let keep: [usize; 2] = match drop {
        0 => [1, 2],
        1 => [0, 2],
        _ => [0, 1],
    };
    let proj: Vec<[i64; 2]> = pts.iter().map(|p| [p[keep[0]], p[keep[1]]]).collect();
    let ring = monotone_chain(&proj);
    let mut facets = BTreeSet::new();
    let interior = ring[0];
    for k in 0..ring.len() {
        let (i, j) = (ring[k], ring[(k + 1) % ring.len()]);
        let e = sub(pts[j], pts[i]);
        let mut m = cross(e, n);
        let other = ring.iter().copied().find(|&o| o != i && o != j).unwrap_or(interior);
        if dot(m, sub(pts[other], pts[i])) > 0 {
            m = m.map(|x| -x);
        }
        facets.insert(HalfSpace::through(m, pts[i]));
    }
    let mut vertices: Vec<ColorChip> = ring.iter().map(|&i| chips[i]).collect();
    vertices.sort_unstable();
    Hull {
        dimension: 2,
        vertices,
        facets: facets.into_iter().collect(),
        plane: Some(plane),
    }
}

/// Strict convex polygon (collinear points dropped), counter-clockwise.
fn monotone_chain(p: &[[i64; 2]]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..p.len()).collect();
    idx.sort_by_key(|&i| p[i]);
    idx.dedup_by_key(|i| p[*i]);
    let turn = |o: usize, a: usize, b: usize| {
        (p[a][0] - p[o][0]) * (p[b][1] - p[o][1]) - (p[a][1] - p[o][1]) * (p[b][0] - p[o][0])
    };
    let mut hull: Vec<usize> = Vec::with_capacity(2 * idx.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &usize>> = if pass == 0 {
            Box::new(idx.iter())
        } else {
            Box::new(idx.iter().rev())
        };
        for &i in iter {
            while hull.len() >= start + 2 && turn(hull[hull.len() - 2], hull[hull.len() - 1], i) <= 0 {
                hull.pop();
            }
            hull.push(i);
        }
        hull.pop();
    }
    hull
}

/// Membership with boundary inclusion; `eps` is in CIELAB units.
pub fn contains(h: &Hull, p: &ColorChip, eps: f64) -> bool {
    let q = point(p);
    let tol = eps * 10.0;
    match h.dimension {
        0 => {
            let d = sub(q, point(&h.vertices[0]));
            norm(d) <= tol
        }
        1 => {
            let a = point(&h.vertices[0]);
            let d = sub(point(&h.vertices[1]), a);
            let r = sub(q, a);
            let len = norm(d);
            let off_line = norm(cross(r, d));
            let along = dot(r, d);
            (off_line == 0.0 || off_line <= tol * len)
                && (along >= 0 || (along as f64) >= -tol * len)
                && (along <= dot(d, d) || ((along - dot(d, d)) as f64) <= tol * len)
        }
        _ => {
            if let Some(plane) = &h.plane {
                let dev = dot(plane.normal, q) - plane.offset;
                if dev != 0 && (dev.abs() as f64) > tol * norm(plane.normal) {
                    return false;
                }
            }
            h.facets.iter().all(|f| f.admits(q, eps))
        }
    }
}
