//! Quickhull in three dimensions.
//!
//! Only the vertex set is exposed; hidden-point removal needs nothing else.
//! Faces keep counter-clockwise winding seen from outside, and adjacency is
//! tracked through a directed-edge map.

use std::collections::HashMap;

use crate::scalar::Real;
use crate::types::Point3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct DegenerateInput;

struct Face<T> {
    v: [usize; 3],
    normal: Point3<T>,
    offset: T,
    outside: Vec<usize>,
    alive: bool,
}

impl<T: Real> Face<T> {
    fn new(pts: &[Point3<T>], v: [usize; 3]) -> Self {
        let (a, b, c) = (pts[v[0]], pts[v[1]], pts[v[2]]);
        let normal = (b - a).cross(&(c - a)).normalized().unwrap_or_else(Point3::zero);
        Self {
            v,
            normal,
            offset: normal.dot(&a),
            outside: Vec::new(),
            alive: true,
        }
    }

    #[inline]
    fn distance(&self, p: &Point3<T>) -> T {
        self.normal.dot(p) - self.offset
    }

    fn edges(&self) -> [(usize, usize); 3] {
        let [a, b, c] = self.v;
        [(a, b), (b, c), (c, a)]
    }
}

/// Indices of the points that are vertices of the convex hull of `pts`.
///
/// Fails when the points do not span three dimensions.
pub(crate) fn hull_vertices<T: Real>(pts: &[Point3<T>]) -> Result<Vec<usize>, DegenerateInput> {
    if pts.len() < 4 {
        return Err(DegenerateInput);
    }
    let scale = pts
        .iter()
        .map(|p| p.x.abs().max(p.y.abs()).max(p.z.abs()))
        .fold(T::zero(), T::max)
        .max(T::min_positive_value());
    let eps = T::degeneracy_eps() * scale;

    let simplex = initial_simplex(pts, eps)?;
    let mut faces: Vec<Face<T>> = Vec::new();
    let centroid = simplex
        .iter()
        .fold(Point3::zero(), |acc, &i| acc + pts[i])
        .scale(T::one() / (T::one() + T::one() + T::one() + T::one()));
    let [a, b, c, d] = simplex;
    for tri in [[a, b, c], [a, b, d], [a, c, d], [b, c, d]] {
        let mut f = Face::new(pts, tri);
        if f.distance(&centroid) > T::zero() {
            f = Face::new(pts, [tri[0], tri[2], tri[1]]);
        }
        faces.push(f);
    }
    let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
    for (fi, f) in faces.iter().enumerate() {
        for e in f.edges() {
            edges.insert(e, fi);
        }
    }

    for (i, p) in pts.iter().enumerate() {
        if simplex.contains(&i) {
            continue;
        }
        assign(&mut faces, 0..4, i, p, eps);
    }

    let mut stack: Vec<usize> = (0..faces.len()).filter(|&f| !faces[f].outside.is_empty()).collect();
    // per-iteration visibility marks: 0 unknown, 1 visible, 2 hidden
    let mut mark: Vec<u8> = vec![0; faces.len()];
    let mut touched: Vec<usize> = Vec::new();

    while let Some(fid) = stack.pop() {
        if !faces[fid].alive || faces[fid].outside.is_empty() {
            continue;
        }
        let face = &faces[fid];
        let eye = *face
            .outside
            .iter()
            .max_by(|&&x, &&y| {
                face.distance(&pts[x])
                    .partial_cmp(&face.distance(&pts[y]))
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("non-empty outside set");
        let eye_p = pts[eye];

        let mut visible = vec![fid];
        mark[fid] = 1;
        touched.push(fid);
        let mut horizon: Vec<(usize, usize)> = Vec::new();
        let mut qi = 0;
        while qi < visible.len() {
            let f = visible[qi];
            qi += 1;
            for (ea, eb) in faces[f].edges() {
                let Some(&nb) = edges.get(&(eb, ea)) else {
                    horizon.push((ea, eb));
                    continue;
                };
                if mark[nb] == 0 {
                    touched.push(nb);
                    if faces[nb].distance(&eye_p) > eps {
                        mark[nb] = 1;
                        visible.push(nb);
                    } else {
                        mark[nb] = 2;
                    }
                }
                if mark[nb] == 2 {
                    horizon.push((ea, eb));
                }
            }
        }
        for &t in &touched {
            mark[t] = 0;
        }
        touched.clear();

        let mut orphans: Vec<usize> = Vec::new();
        for &f in &visible {
            let face = &mut faces[f];
            face.alive = false;
            orphans.extend(face.outside.drain(..).filter(|&o| o != eye));
            for e in face.edges() {
                if edges.get(&e) == Some(&f) {
                    edges.remove(&e);
                }
            }
        }

        let first_new = faces.len();
        for (ea, eb) in horizon {
            let f = Face::new(pts, [ea, eb, eye]);
            let id = faces.len();
            for e in f.edges() {
                edges.insert(e, id);
            }
            faces.push(f);
            mark.push(0);
        }
        for o in orphans {
            let end = faces.len();
            assign(&mut faces, first_new..end, o, &pts[o], eps);
        }
        for f in first_new..faces.len() {
            if !faces[f].outside.is_empty() {
                stack.push(f);
            }
        }
    }

    let mut is_vertex = vec![false; pts.len()];
    for f in faces.iter().filter(|f| f.alive) {
        for &v in &f.v {
            is_vertex[v] = true;
        }
    }
    Ok((0..pts.len()).filter(|&i| is_vertex[i]).collect())
}

fn assign<T: Real>(faces: &mut [Face<T>], range: std::ops::Range<usize>, idx: usize, p: &Point3<T>, eps: T) {
    let mut best = None;
    let mut best_d = eps;
    for f in range {
        let d = faces[f].distance(p);
        if d > best_d {
            best_d = d;
            best = Some(f);
        }
    }
    if let Some(f) = best {
        faces[f].outside.push(idx);
    }
}

fn initial_simplex<T: Real>(pts: &[Point3<T>], eps: T) -> Result<[usize; 4], DegenerateInput> {
    let mut extremes = [0usize; 6];
    for (i, p) in pts.iter().enumerate() {
        let c = p.to_array();
        for axis in 0..3 {
            if c[axis] < pts[extremes[2 * axis]].to_array()[axis] {
                extremes[2 * axis] = i;
            }
            if c[axis] > pts[extremes[2 * axis + 1]].to_array()[axis] {
                extremes[2 * axis + 1] = i;
            }
        }
    }
    let mut best = (0, 0, T::zero());
    for (k, &i) in extremes.iter().enumerate() {
        for &j in &extremes[k + 1..] {
            let d = pts[i].distance(&pts[j]);
            if d > best.2 {
                best = (i, j, d);
            }
        }
    }
    let (i0, i1, d01) = best;
    if d01 <= eps {
        return Err(DegenerateInput);
    }
    let dir = (pts[i1] - pts[i0]).scale(T::one() / d01);
    let mut i2 = 0;
    let mut d2 = T::zero();
    for (i, p) in pts.iter().enumerate() {
        let d = (*p - pts[i0]).cross(&dir).norm();
        if d > d2 {
            d2 = d;
            i2 = i;
        }
    }
    if d2 <= eps {
        return Err(DegenerateInput);
    }
    let n = (pts[i1] - pts[i0])
        .cross(&(pts[i2] - pts[i0]))
        .normalized()
        .ok_or(DegenerateInput)?;
    let mut i3 = 0;
    let mut d3 = T::zero();
    for (i, p) in pts.iter().enumerate() {
        let d = n.dot(&(*p - pts[i0])).abs();
        if d > d3 {
            d3 = d;
            i3 = i;
        }
    }
    if d3 <= eps {
        return Err(DegenerateInput);
    }
    Ok([i0, i1, i2, i3])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force_vertices(pts: &[Point3<f64>]) -> Vec<usize> {
        // Every triple spanning a supporting plane is a hull facet. Random
        // inputs have no four coplanar points, so facet corners are exactly
        // the vertices.
        let n = pts.len();
        let mut on_hull = vec![false; n];
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let nrm = (pts[j] - pts[i]).cross(&(pts[k] - pts[i]));
                    if nrm.norm() < 1e-12 {
                        continue;
                    }
                    let (mut pos, mut neg) = (false, false);
                    for p in pts {
                        let d = nrm.dot(&(*p - pts[i]));
                        if d > 1e-9 {
                            pos = true;
                        } else if d < -1e-9 {
                            neg = true;
                        }
                    }
                    if !(pos && neg) {
                        on_hull[i] = true;
                        on_hull[j] = true;
                        on_hull[k] = true;
                    }
                }
            }
        }
        (0..n).filter(|&i| on_hull[i]).collect()
    }

    #[test]
    fn cube_with_interior_points() {
        let mut pts = Vec::new();
        for x in [0.0, 1.0] {
            for y in [0.0, 1.0] {
                for z in [0.0, 1.0] {
                    pts.push(Point3::new(x, y, z));
                }
            }
        }
        pts.push(Point3::new(0.5, 0.5, 0.5));
        pts.push(Point3::new(0.2, 0.7, 0.4));
        let v = hull_vertices(&pts).unwrap();
        assert_eq!(v, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn coplanar_input_is_degenerate() {
        let pts: Vec<Point3<f64>> = (0..10).map(|i| Point3::new(i as f64, (i * i) as f64, 0.0)).collect();
        assert_eq!(hull_vertices(&pts), Err(DegenerateInput));
    }

    #[test]
    fn matches_brute_force_on_random_sets() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.random_range(5..40);
            let pts: Vec<Point3<f64>> = (0..n)
                .map(|_| {
                    Point3::new(
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    )
                })
                .collect();
            assert_eq!(hull_vertices(&pts).unwrap(), brute_force_vertices(&pts));
        }
    }

    #[test]
    fn sphere_points_are_all_vertices() {
        let mut pts = Vec::new();
        for i in 0..20 {
            for j in 1..19 {
                let th = i as f64 * std::f64::consts::PI / 10.0;
                let ph = j as f64 * std::f64::consts::PI / 19.0;
                pts.push(Point3::new(ph.sin() * th.cos(), ph.sin() * th.sin(), ph.cos()));
            }
        }
        let v = hull_vertices(&pts).unwrap();
        assert_eq!(v.len(), pts.len());
    }
}
