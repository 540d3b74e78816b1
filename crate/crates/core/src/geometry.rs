//! Point-in-polygon tests used to count the equilibria enclosed by a cycle.

use crate::equilibria::Equilibrium;
use crate::error::{Error, Result};
use crate::model::PlanePoint;

/// Closure tolerance for sampled curves.
pub const CLOSURE_TOL: f64 = 1e-6;

fn cross(a: PlanePoint, b: PlanePoint, p: PlanePoint) -> f64 {
    (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y)
}

/// Winding number of the closed polygon `poly` around `p` (Sunday's crossing
/// rule). The polygon is implicitly closed from its last vertex to its first.
pub fn winding_number(poly: &[PlanePoint], p: PlanePoint) -> i32 {
    let n = poly.len();
    let mut wn = 0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if a.y <= p.y {
            if b.y > p.y && cross(a, b, p) > 0.0 {
                wn += 1;
            }
        } else if b.y <= p.y && cross(a, b, p) < 0.0 {
            wn -= 1;
        }
    }
    wn
}

/// Even-odd ray casting along +x. Used as an independent check on
/// [`winding_number`] for simple polygons.
pub fn ray_casting_inside(poly: &[PlanePoint], p: PlanePoint) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n.wrapping_sub(1);
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Counts the equilibria enclosed by the closed curve `samples` and sums their
/// indices.
pub fn enclosed_equilibria(samples: &[PlanePoint], eqs: &[Equilibrium]) -> Result<(usize, i32)> {
    let (first, last) = match (samples.first(), samples.last()) {
        (Some(f), Some(l)) if samples.len() >= 3 => (*f, *l),
        _ => return Err(Error::OpenCurve { gap: f64::INFINITY }),
    };
    let gap = first.distance(last);
    if gap > CLOSURE_TOL {
        return Err(Error::OpenCurve { gap });
    }
    let poly = &samples[..samples.len() - 1];
    let mut count = 0;
    let mut index_sum = 0;
    for eq in eqs {
        if winding_number(poly, eq.plane) != 0 {
            count += 1;
            index_sum += eq.index;
        }
    }
    Ok((count, index_sum))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::all_equilibria;
    use crate::model::Params;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::TAU;

    fn circle(n: usize, radius: f64) -> Vec<PlanePoint> {
        (0..=n)
            .map(|i| {
                let t = TAU * i as f64 / n as f64;
                PlanePoint::new(radius * t.cos(), radius * t.sin())
            })
            .collect()
    }

    fn origin_only() -> Vec<crate::equilibria::Equilibrium> {
        // Q < 0 here, so the origin is the only equilibrium.
        let params = Params::new(3.5, -1.0, -0.5, 1.2).unwrap();
        let eqs = all_equilibria(&params).unwrap();
        assert_eq!(eqs.len(), 1);
        eqs
    }

    #[test]
    fn unit_circle_encloses_origin() {
        let eqs = origin_only();
        assert_eq!(enclosed_equilibria(&circle(720, 1.0), &eqs).unwrap(), (1, 1));
    }

    #[test]
    fn unit_circle_misses_outside_point() {
        let mut eqs = origin_only();
        eqs[0].plane = PlanePoint::new(2.0, 0.0);
        assert_eq!(enclosed_equilibria(&circle(720, 1.0), &eqs).unwrap(), (0, 0));
    }

    #[test]
    fn open_curve_is_rejected() {
        let eqs = origin_only();
        let mut pts = circle(720, 1.0);
        pts.pop();
        pts.pop();
        assert!(matches!(
            enclosed_equilibria(&pts, &eqs),
            Err(Error::OpenCurve { .. })
        ));
    }

    #[test]
    fn clockwise_circle_has_negative_winding() {
        let mut pts = circle(360, 1.0);
        pts.pop();
        pts.reverse();
        assert_eq!(winding_number(&pts, PlanePoint::new(0.0, 0.0)), -1);
    }

    /// Star-shaped random polygons are simple, so both tests must agree.
    #[test]
    fn winding_agrees_with_ray_casting_on_random_polygons() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..100 {
            let n = rng.gen_range(3..40);
            let mut angles: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..TAU)).collect();
            angles.sort_by(f64::total_cmp);
            let cx = rng.gen_range(-2.0..2.0);
            let cy = rng.gen_range(-2.0..2.0);
            let poly: Vec<PlanePoint> = angles
                .iter()
                .map(|&t| {
                    let rad = rng.gen_range(0.2..3.0);
                    PlanePoint::new(cx + rad * t.cos(), cy + rad * t.sin())
                })
                .collect();
            for _ in 0..50 {
                let p = PlanePoint::new(rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0));
                assert_eq!(winding_number(&poly, p) != 0, ray_casting_inside(&poly, p));
            }
        }
    }
}
