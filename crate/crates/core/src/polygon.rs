//! Planar polygon helpers shared by the layout model and the metrics.
//!
//! Polygons are vertex lists without a repeated closing vertex. Intersection
//! areas of general simple polygons are computed by ear-clipping both inputs
//! into triangles and summing pairwise convex clips, which is exact up to
//! floating point because the triangles of each input only overlap on
//! measure-zero boundaries.

use nalgebra::Point2;

use crate::error::{Error, Result};

pub type Pt = Point2<f64>;

fn cross(o: &Pt, a: &Pt, b: &Pt) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Shoelace area; positive for counterclockwise vertex order.
pub fn signed_area(poly: &[Pt]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let a = &poly[i];
        let b = &poly[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    0.5 * acc
}

pub fn area(poly: &[Pt]) -> f64 {
    signed_area(poly).abs()
}

fn on_segment(p: &Pt, a: &Pt, b: &Pt) -> bool {
    p.x >= a.x.min(b.x) - 1e-12
        && p.x <= a.x.max(b.x) + 1e-12
        && p.y >= a.y.min(b.y) - 1e-12
        && p.y <= a.y.max(b.y) + 1e-12
}

/// Closed-segment intersection test (touching counts).
pub fn segments_intersect(a: &Pt, b: &Pt, c: &Pt, d: &Pt) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let eps = 1e-12;
    (d1.abs() <= eps && on_segment(a, c, d))
        || (d2.abs() <= eps && on_segment(b, c, d))
        || (d3.abs() <= eps && on_segment(c, a, b))
        || (d4.abs() <= eps && on_segment(d, a, b))
}

/// True when no two edges meet except adjacent edges at their shared vertex.
pub fn is_simple(poly: &[Pt]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let a = &poly[i];
        let b = &poly[(i + 1) % n];
        if (b - a).norm() <= 1e-12 {
            return false;
        }
        for j in (i + 1)..n {
            let c = &poly[j];
            let d = &poly[(j + 1) % n];
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // Adjacent edges may only share the common vertex: reject folds.
                let (shared, other_i, other_j) = if j == i + 1 { (b, a, d) } else { (a, b, c) };
                let u = other_i - shared;
                let v = other_j - shared;
                let c = u.x * v.y - u.y * v.x;
                if c.abs() <= 1e-12 * u.norm() * v.norm() && u.dot(&v) > 0.0 {
                    return false;
                }
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    signed_area(poly).abs() > 1e-12
}

/// Even-odd point-in-polygon test. Points on the boundary are unspecified.
pub fn contains(poly: &[Pt], p: &Pt) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let a = &poly[i];
        let b = &poly[j];
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Euclidean distance from `p` to the polygon boundary.
pub fn boundary_distance(poly: &[Pt], p: &Pt) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let a = &poly[i];
            let b = &poly[(i + 1) % n];
            let ab = b - a;
            let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
            (a + ab * t - p).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Returns a counterclockwise copy of the polygon.
pub fn to_ccw(poly: &[Pt]) -> Vec<Pt> {
    let mut out = poly.to_vec();
    if signed_area(&out) < 0.0 {
        out.reverse();
    }
    out
}

fn point_in_triangle(p: &Pt, a: &Pt, b: &Pt, c: &Pt) -> bool {
    cross(a, b, p) >= 0.0 && cross(b, c, p) >= 0.0 && cross(c, a, p) >= 0.0
}

/// Ear-clipping triangulation as index triples into `poly`, each triangle
/// counterclockwise.
pub fn triangulate_indices(poly: &[Pt]) -> Vec<[usize; 3]> {
    let n = poly.len();
    let mut idx: Vec<usize> = (0..n).collect();
    if signed_area(poly) < 0.0 {
        idx.reverse();
    }
    let pts = poly;
    let mut tris = Vec::with_capacity(n.saturating_sub(2));
    let turn = |idx: &[usize], k: usize| {
        let m = idx.len();
        cross(&pts[idx[(k + m - 1) % m]], &pts[idx[k]], &pts[idx[(k + 1) % m]])
    };
    while idx.len() > 3 {
        let m = idx.len();
        let mut ear = None;
        for k in 0..m {
            let (ia, ib, ic) = (idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]);
            if turn(&idx, k) <= 1e-14 {
                continue;
            }
            let (a, b, c) = (&pts[ia], &pts[ib], &pts[ic]);
            let blocked = idx.iter().any(|&o| {
                o != ia && o != ib && o != ic && point_in_triangle(&pts[o], a, b, c)
            });
            if !blocked {
                ear = Some(k);
                break;
            }
        }
        // Numerically degenerate remainder: drop the flattest vertex.
        let k = ear.unwrap_or_else(|| {
            (0..m)
                .min_by(|&x, &y| turn(&idx, x).abs().total_cmp(&turn(&idx, y).abs()))
                .unwrap_or(0)
        });
        if turn(&idx, k) > 0.0 {
            tris.push([idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]]);
        }
        idx.remove(k);
    }
    if idx.len() == 3 && turn(&idx, 1) > 0.0 {
        tris.push([idx[0], idx[1], idx[2]]);
    }
    tris
}

/// Ear-clipping triangulation of a simple polygon. Triangles are CCW.
pub fn triangulate(poly: &[Pt]) -> Vec<[Pt; 3]> {
    triangulate_indices(poly)
        .into_iter()
        .map(|[a, b, c]| [poly[a], poly[b], poly[c]])
        .collect()
}

/// Sutherland–Hodgman clip of `subject` against a convex CCW `clip` polygon.
pub fn clip_convex(subject: &[Pt], clip: &[Pt]) -> Vec<Pt> {
    let mut output = subject.to_vec();
    let n = clip.len();
    for i in 0..n {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % n];
        let input = std::mem::take(&mut output);
        let m = input.len();
        for j in 0..m {
            let cur = input[j];
            let prev = input[(j + m - 1) % m];
            let cur_in = cross(&a, &b, &cur) >= 0.0;
            let prev_in = cross(&a, &b, &prev) >= 0.0;
            if cur_in {
                if !prev_in {
                    output.push(line_intersection(&prev, &cur, &a, &b));
                }
                output.push(cur);
            } else if prev_in {
                output.push(line_intersection(&prev, &cur, &a, &b));
            }
        }
    }
    output
}

fn line_intersection(p: &Pt, q: &Pt, a: &Pt, b: &Pt) -> Pt {
    let r = q - p;
    let s = b - a;
    let denom = r.x * s.y - r.y * s.x;
    if denom.abs() < 1e-300 {
        return *p;
    }
    let t = ((a.x - p.x) * s.y - (a.y - p.y) * s.x) / denom;
    p + r * t
}

/// Area of the intersection of two simple polygons.
pub fn intersection_area(a: &[Pt], b: &[Pt]) -> Result<f64> {
    if !is_simple(a) || !is_simple(b) {
        return Err(Error::SelfIntersecting);
    }
    let ta = triangulate(a);
    let tb = triangulate(b);
    let mut total = 0.0;
    for t in &ta {
        let (tmin, tmax) = bbox(t);
        for s in &tb {
            let (smin, smax) = bbox(s);
            if tmax.x < smin.x || smax.x < tmin.x || tmax.y < smin.y || smax.y < tmin.y {
                continue;
            }
            total += area(&clip_convex(t, s));
        }
    }
    // Clamp rounding noise so the result stays within [0, min(area)].
    Ok(total.clamp(0.0, area(a).min(area(b))))
}

fn bbox(t: &[Pt]) -> (Pt, Pt) {
    let mut lo = Pt::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Pt::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in t {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq(x0: f64, y0: f64, s: f64) -> Vec<Pt> {
        vec![
            Pt::new(x0, y0),
            Pt::new(x0 + s, y0),
            Pt::new(x0 + s, y0 + s),
            Pt::new(x0, y0 + s),
        ]
    }

    #[test]
    fn triangulation_preserves_area() {
        let l = vec![
            Pt::new(0.0, 0.0),
            Pt::new(3.0, 0.0),
            Pt::new(3.0, 1.0),
            Pt::new(1.0, 1.0),
            Pt::new(1.0, 3.0),
            Pt::new(0.0, 3.0),
        ];
        let tris = triangulate(&l);
        assert_eq!(tris.len(), 4);
        let sum: f64 = tris.iter().map(|t| area(t)).sum();
        assert!((sum - 5.0).abs() < 1e-12);
    }

    #[test]
    fn bowtie_is_not_simple() {
        let bow = vec![
            Pt::new(0.0, 0.0),
            Pt::new(1.0, 1.0),
            Pt::new(1.0, 0.0),
            Pt::new(0.0, 1.0),
        ];
        assert!(!is_simple(&bow));
        assert!(matches!(
            intersection_area(&bow, &sq(0.0, 0.0, 1.0)),
            Err(Error::SelfIntersecting)
        ));
    }

    #[test]
    fn clockwise_input_is_accepted() {
        let mut a = sq(0.0, 0.0, 2.0);
        a.reverse();
        let v = intersection_area(&a, &sq(1.0, 1.0, 2.0)).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn contains_and_distance() {
        let s = sq(-1.0, -1.0, 2.0);
        assert!(contains(&s, &Pt::origin()));
        assert!(!contains(&s, &Pt::new(2.0, 0.0)));
        assert!((boundary_distance(&s, &Pt::new(0.5, 0.0)) - 0.5).abs() < 1e-12);
    }
}
