//! Quickhull on integer points with exact orientation tests.

use std::collections::{BTreeSet, HashMap};

use super::{cross, dot, orient, sub, HalfSpace, P3};

struct Face {
    v: [usize; 3],
    outside: Vec<usize>,
    alive: bool,
}

impl Face {
    fn height(&self, pts: &[P3], p: usize) -> i64 {
        orient(pts[self.v[0]], pts[self.v[1]], pts[self.v[2]], pts[p])
    }
}

/// Hull of a full-rank point set, given four affinely independent seeds.
/// Returns sorted vertex indices and the distinct facet planes.
pub(super) fn solid(pts: &[P3], seed: [usize; 4]) -> (Vec<usize>, Vec<HalfSpace>) {
    let [a, b, c, d] = seed;
    let mut faces: Vec<Face> = Vec::new();
    let mut edges: HashMap<(usize, usize), usize> = HashMap::new();

    let mut tris = [[a, b, c], [a, c, d], [a, d, b], [b, d, c]];
    if orient(pts[a], pts[b], pts[c], pts[d]) > 0 {
        for t in &mut tris {
            t.swap(1, 2);
        }
    }
    for t in tris {
        add_face(&mut faces, &mut edges, t);
    }
    let seeds: BTreeSet<usize> = seed.into_iter().collect();
    let initial: Vec<usize> = (0..pts.len()).filter(|i| !seeds.contains(i)).collect();
    assign(pts, &mut faces, 0..4, &initial);

    while let Some(fi) = faces.iter().position(|f| f.alive && !f.outside.is_empty()) {
        let eye = *faces[fi]
            .outside
            .iter()
            .max_by_key(|&&p| (faces[fi].height(pts, p), std::cmp::Reverse(p)))
            .unwrap();

        // Visible region by flood fill; exact predicates keep it connected.
        let mut visible = vec![fi];
        let mut seen: BTreeSet<usize> = BTreeSet::from([fi]);
        let mut horizon: Vec<(usize, usize)> = Vec::new();
        let mut k = 0;
        while k < visible.len() {
            let f = visible[k];
            k += 1;
            let v = faces[f].v;
            for e in 0..3 {
                let (u, w) = (v[e], v[(e + 1) % 3]);
                let g = edges[&(w, u)];
                if seen.contains(&g) {
                    continue;
                }
                if faces[g].height(pts, eye) > 0 {
                    seen.insert(g);
                    visible.push(g);
                } else {
                    horizon.push((u, w));
                }
            }
        }

        let mut orphans = Vec::new();
        for &f in &visible {
            let v = faces[f].v;
            for e in 0..3 {
                edges.remove(&(v[e], v[(e + 1) % 3]));
            }
            faces[f].alive = false;
            orphans.extend(faces[f].outside.drain(..).filter(|&p| p != eye));
        }
        let first = faces.len();
        for (u, w) in horizon {
            add_face(&mut faces, &mut edges, [u, w, eye]);
        }
        let last = faces.len();
        assign(pts, &mut faces, first..last, &orphans);
    }

    let mut verts = BTreeSet::new();
    let mut planes = BTreeSet::new();
    for f in faces.iter().filter(|f| f.alive) {
        verts.extend(f.v);
        let [p, q, r] = f.v.map(|i| pts[i]);
        planes.insert(HalfSpace::through(cross(sub(q, p), sub(r, p)), p));
    }
    // Coplanar points can sit on a triangulated face's corner without being
    // extreme; keep only the points that are corners of some facet polygon.
    let verts: Vec<usize> = verts
        .into_iter()
        .filter(|&i| is_extreme(pts, i, &planes))
        .collect();
    (verts, planes.into_iter().collect())
}

fn add_face(faces: &mut Vec<Face>, edges: &mut HashMap<(usize, usize), usize>, v: [usize; 3]) {
    let id = faces.len();
    for e in 0..3 {
        edges.insert((v[e], v[(e + 1) % 3]), id);
    }
    faces.push(Face {
        v,
        outside: Vec::new(),
        alive: true,
    });
}

fn assign(pts: &[P3], faces: &mut [Face], range: std::ops::Range<usize>, points: &[usize]) {
    for &p in points {
        if let Some(f) = range.clone().find(|&f| faces[f].height(pts, p) > 0) {
            faces[f].outside.push(p);
        }
    }
}

/// A hull point is a vertex iff the facets through it have normals spanning
/// three dimensions.
fn is_extreme(pts: &[P3], i: usize, planes: &BTreeSet<HalfSpace>) -> bool {
    let on: Vec<P3> = planes
        .iter()
        .filter(|h| dot(h.normal, pts[i]) == h.offset)
        .map(|h| h.normal)
        .collect();
    for x in 0..on.len() {
        for y in (x + 1)..on.len() {
            let c = cross(on[x], on[y]);
            if on[y + 1..].iter().any(|&z| dot(c, z) != 0) {
                return true;
            }
        }
    }
    false
}
