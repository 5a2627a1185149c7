//! Reference computations that do not go through the closed-form code paths.
#![allow(dead_code)]

use tjs_core::{Matrix3, Vector3};

/// Tip position by marching `segments` straight pieces along the arc, each
/// pointing along the tangent at its midpoint.
pub fn integrate_arc(theta: f64, phi: f64, arc_length: f64, segments: usize) -> Vector3<f64> {
    let h = arc_length / segments as f64;
    let curvature = theta / arc_length;
    let (sp, cp) = phi.sin_cos();
    let mut p = Vector3::zeros();
    for i in 0..segments {
        let bend = curvature * (i as f64 + 0.5) * h;
        let (sb, cb) = bend.sin_cos();
        p += h * Vector3::new(sb * cp, sb * sp, cb);
    }
    p
}

/// Central difference of a vector function of one variable.
pub fn central_diff(f: impl Fn(f64) -> Vector3<f64>, x: f64, h: f64) -> Vector3<f64> {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Angle between the local z-axes of two orientations.
pub fn axis_angle_between(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    let za: Vector3<f64> = a.column(2).into_owned();
    let zb: Vector3<f64> = b.column(2).into_owned();
    za.cross(&zb).norm().atan2(za.dot(&zb))
}

/// Algebraic (Kasa) circle fit in the plane. Returns `(cx, cy, radius)`.
pub fn fit_circle(points: &[(f64, f64)]) -> (f64, f64, f64) {
    // minimise sum (x^2 + y^2 + D x + E y + F)^2 via normal equations
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for &(x, y) in points {
        let row = [x, y, 1.0];
        let rhs = -(x * x + y * y);
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * rhs;
        }
    }
    let m = Matrix3::new(
        ata[0][0], ata[0][1], ata[0][2], ata[1][0], ata[1][1], ata[1][2], ata[2][0], ata[2][1],
        ata[2][2],
    );
    let sol = m
        .lu()
        .solve(&Vector3::new(atb[0], atb[1], atb[2]))
        .expect("non-degenerate point set");
    let (cx, cy) = (-sol[0] / 2.0, -sol[1] / 2.0);
    let radius = (cx * cx + cy * cy - sol[2]).sqrt();
    (cx, cy, radius)
}

/// Mean and population standard deviation of distances from a centre.
pub fn radial_stats(points: &[(f64, f64)], cx: f64, cy: f64) -> (f64, f64) {
    let d: Vec<f64> = points.iter().map(|(x, y)| (x - cx).hypot(y - cy)).collect();
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d.len() as f64;
    (mean, var.sqrt())
}
