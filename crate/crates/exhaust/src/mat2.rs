//! Tiny closed-form helpers for symmetric 2x2 matrices.

/// Eigenvalues of `[[a, b], [b, c]]`, smaller first.
pub(crate) fn sym_eigenvalues(m: [[f64; 2]; 2]) -> (f64, f64) {
    let (a, b, c) = (m[0][0], m[0][1], m[1][1]);
    let mean = 0.5 * (a + c);
    let disc = (0.5 * (a - c)).hypot(b);
    (mean - disc, mean + disc)
}

/// Clamp the eigenvalues of a symmetric matrix to at least `floor`,
/// keeping the eigenvectors. Exact for diagonal input.
pub(crate) fn clamp_eigenvalues(m: [[f64; 2]; 2], floor: f64) -> [[f64; 2]; 2] {
    let (lo, hi) = sym_eigenvalues(m);
    if lo >= floor {
        return m;
    }
    let (a, b, c) = (m[0][0], m[0][1], m[1][1]);
    if b == 0.0 {
        // Already diagonal: clamp in place.
        return [[a.max(floor), 0.0], [0.0, c.max(floor)]];
    }
    // Eigenvector for `hi`; (b, hi - a) is nonzero because b != 0.
    let (vx, vy) = (b, hi - a);
    let n = vx.hypot(vy);
    let (ux, uy) = (vx / n, vy / n);
    let l1 = hi.max(floor);
    let l2 = lo.max(floor);
    // l1 * u u^T + l2 * (I - u u^T) with u the unit eigenvector of `hi`.
    [
        [l1 * ux * ux + l2 * uy * uy, (l1 - l2) * ux * uy],
        [(l1 - l2) * ux * uy, l1 * uy * uy + l2 * ux * ux],
    ]
}

/// Determinant and inverse; `None` if singular or not positive-definite.
pub(crate) fn invert_spd(m: [[f64; 2]; 2]) -> Option<(f64, [[f64; 2]; 2])> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det.is_nan() || det <= 0.0 || m[0][0] <= 0.0 {
        return None;
    }
    let inv = [
        [m[1][1] / det, -m[0][1] / det],
        [-m[1][0] / det, m[0][0] / det],
    ];
    Some((det, inv))
}

/// Congruence transform `R m R^T` for a 2x2 rotation `R`.
pub(crate) fn rotate_cov(r: [[f64; 2]; 2], m: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    // t = R m
    let t = [
        [
            r[0][0] * m[0][0] + r[0][1] * m[1][0],
            r[0][0] * m[0][1] + r[0][1] * m[1][1],
        ],
        [
            r[1][0] * m[0][0] + r[1][1] * m[1][0],
            r[1][0] * m[0][1] + r[1][1] * m[1][1],
        ],
    ];
    // t R^T
    [
        [
            t[0][0] * r[0][0] + t[0][1] * r[0][1],
            t[0][0] * r[1][0] + t[0][1] * r[1][1],
        ],
        [
            t[1][0] * r[0][0] + t[1][1] * r[0][1],
            t[1][0] * r[1][0] + t[1][1] * r[1][1],
        ],
    ]
}
