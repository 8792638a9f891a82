//! Closed-form eigen-analysis for small symmetric matrices.

use std::f64::consts::PI;

/// Eigenvalues of a symmetric 3×3 matrix, descending. Uses the trigonometric
/// solution of the characteristic cubic.
pub(crate) fn sym3_eigenvalues(m: &[[f64; 3]; 3]) -> [f64; 3] {
    let p1 = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
    let q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    let d = [m[0][0] - q, m[1][1] - q, m[2][2] - q];
    let p2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2] + 2.0 * p1;
    if p2 == 0.0 {
        return [q; 3];
    }
    let p = (p2 / 6.0).sqrt();
    let b = [
        [d[0] / p, m[0][1] / p, m[0][2] / p],
        [m[1][0] / p, d[1] / p, m[1][2] / p],
        [m[2][0] / p, m[2][1] / p, d[2] / p],
    ];
    let det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
        - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let r = (det / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let largest = q + 2.0 * p * phi.cos();
    let smallest = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
    [largest, 3.0 * q - largest - smallest, smallest]
}

/// Unit eigenvector for eigenvalue `lambda`, taken as the largest cross
/// product of two rows of `m − λI`. `None` when the null space is not 1-D.
pub(crate) fn sym3_eigenvector(m: &[[f64; 3]; 3], lambda: f64) -> Option<[f64; 3]> {
    let rows = [
        [m[0][0] - lambda, m[0][1], m[0][2]],
        [m[1][0], m[1][1] - lambda, m[1][2]],
        [m[2][0], m[2][1], m[2][2] - lambda],
    ];
    let mut best = [0.0; 3];
    let mut best_norm = 0.0;
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let c = cross(rows[i], rows[j]);
        let n = c[0] * c[0] + c[1] * c[1] + c[2] * c[2];
        if n > best_norm {
            best_norm = n;
            best = c;
        }
    }
    if best_norm <= 0.0 || !best_norm.is_finite() {
        return None;
    }
    let inv = 1.0 / best_norm.sqrt();
    Some([best[0] * inv, best[1] * inv, best[2] * inv])
}

/// Major-axis angle (radians) of the symmetric 2×2 matrix `[[a, b], [b, c]]`.
pub(crate) fn sym2_major_angle(a: f64, b: f64, c: f64) -> f64 {
    0.5 * (2.0 * b).atan2(a - c)
}

#[inline]
pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}
