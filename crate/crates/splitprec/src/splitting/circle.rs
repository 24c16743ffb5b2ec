//! Smallest enclosing circle of a point set in the complex plane.
//!
//! The circle's center is the bias absorbed into `L` (k̄², ā, D̄⁻¹ entries)
//! and its radius sets the rescaling factor. Welzl's expected-linear
//! randomized algorithm, with a seeded shuffle for determinism.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Circle {
    pub center: Complex64,
    pub radius: f64,
}

impl Circle {
    pub fn contains(&self, p: Complex64) -> bool {
        (p - self.center).norm() <= self.radius * (1.0 + 1e-12) + 1e-300
    }
}

/// Minimal enclosing circle of a non-empty point set.
pub fn smallest_enclosing_circle(points: &[Complex64]) -> Result<Circle> {
    if points.is_empty() {
        return Err(Error::EmptyInput("smallest_enclosing_circle"));
    }
    if points.iter().any(|p| !p.re.is_finite() || !p.im.is_finite()) {
        return Err(Error::NonFinite("smallest_enclosing_circle input"));
    }
    let mut shuffled: Vec<Complex64> = points.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0c1c1e);
    shuffled.shuffle(&mut rng);

    let mut c = Circle {
        center: shuffled[0],
        radius: 0.0,
    };
    for i in 1..shuffled.len() {
        let p = shuffled[i];
        if !c.contains(p) {
            c = circle_with_one_boundary(&shuffled[..=i], p);
        }
    }
    Ok(c)
}

// Smallest circle over pts with p on the boundary.
fn circle_with_one_boundary(pts: &[Complex64], p: Complex64) -> Circle {
    let mut c = Circle {
        center: p,
        radius: 0.0,
    };
    for (i, &q) in pts.iter().enumerate() {
        if !c.contains(q) {
            c = if c.radius == 0.0 {
                diameter_circle(p, q)
            } else {
                circle_with_two_boundary(&pts[..=i], p, q)
            };
        }
    }
    c
}

// Smallest circle over pts with p and q on the boundary.
fn circle_with_two_boundary(pts: &[Complex64], p: Complex64, q: Complex64) -> Circle {
    let circ = diameter_circle(p, q);
    let mut left: Option<Circle> = None;
    let mut right: Option<Circle> = None;
    let pq = q - p;
    for &r in pts {
        if circ.contains(r) {
            continue;
        }
        let side = cross(pq, r - p);
        if let Some(c) = circumcircle(p, q, r) {
            if side > 0.0
                && left.map_or(true, |l| cross(pq, c.center - p) > cross(pq, l.center - p))
            {
                left = Some(c);
            } else if side < 0.0
                && right.map_or(true, |ri| cross(pq, c.center - p) < cross(pq, ri.center - p))
            {
                right = Some(c);
            }
        }
    }
    match (left, right) {
        (None, None) => circ,
        (Some(l), None) => l,
        (None, Some(r)) => r,
        (Some(l), Some(r)) => {
            if l.radius <= r.radius {
                l
            } else {
                r
            }
        }
    }
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn diameter_circle(a: Complex64, b: Complex64) -> Circle {
    let center = (a + b) * 0.5;
    let radius = (a - center).norm().max((b - center).norm());
    Circle { center, radius }
}

fn circumcircle(a: Complex64, b: Complex64, c: Complex64) -> Option<Circle> {
    // Shift to the bounding-box midpoint for numerical stability.
    let ox = (a.re.min(b.re).min(c.re) + a.re.max(b.re).max(c.re)) / 2.0;
    let oy = (a.im.min(b.im).min(c.im) + a.im.max(b.im).max(c.im)) / 2.0;
    let (ax, ay) = (a.re - ox, a.im - oy);
    let (bx, by) = (b.re - ox, b.im - oy);
    let (cx, cy) = (c.re - ox, c.im - oy);
    let d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by));
    if d == 0.0 {
        return None;
    }
    let x = ((ax * ax + ay * ay) * (by - cy)
        + (bx * bx + by * by) * (cy - ay)
        + (cx * cx + cy * cy) * (ay - by))
        / d;
    let y = ((ax * ax + ay * ay) * (cx - bx)
        + (bx * bx + by * by) * (ax - cx)
        + (cx * cx + cy * cy) * (bx - ax))
        / d;
    let center = Complex64::new(ox + x, oy + y);
    let radius = (a - center)
        .norm()
        .max((b - center).norm())
        .max((c - center).norm());
    Some(Circle { center, radius })
}
