//! Complex QZ iteration for the generalized eigenvalues of a square pencil
//! `(A, B)`. Only the eigenvalues are produced, as `(alpha, beta)` pairs with
//! `lambda = alpha / beta`; `beta == 0` marks an infinite eigenvalue.
//!
//! The pencil is reduced to Hessenberg-triangular form with Givens rotations,
//! then single-shift bulge chasing drives the Hessenberg factor to upper
//! triangular form. Zero diagonals in the triangular factor are chased to the
//! bottom of the active window and deflated as infinite eigenvalues.

use num_complex::Complex64;

use crate::error::{Result, TensorError};
use crate::linalg::{norm_fro, CMat, ZERO};

/// Rotation `G = [[c, s], [-conj(s), c]]` with `G [f; g] = [r; 0]`.
fn givens(f: Complex64, g: Complex64) -> (f64, Complex64, Complex64) {
    if g == ZERO {
        return (1.0, ZERO, f);
    }
    if f == ZERO {
        let ag = g.norm();
        return (0.0, g.conj() / ag, Complex64::new(ag, 0.0));
    }
    let af = f.norm();
    let rho = af.hypot(g.norm());
    let phase = f / af;
    (af / rho, phase * g.conj() / rho, phase * rho)
}

/// Applies `G` from the left to rows `x`, `y` over the column range.
fn rotate_rows(m: &mut CMat, x: usize, y: usize, cols: std::ops::RangeInclusive<usize>, c: f64, s: Complex64) {
    for j in cols {
        let (u, v) = (m[(x, j)], m[(y, j)]);
        m[(x, j)] = u * c + s * v;
        m[(y, j)] = -s.conj() * u + v * c;
    }
}

/// Right rotation that zeroes the entry of column `p` at a given row, using
/// the partner column `q`: `[m_q m_p] <- [m_q m_p] G^H`.
fn rotate_cols(m: &mut CMat, q: usize, p: usize, rows: std::ops::RangeInclusive<usize>, c: f64, s: Complex64) {
    for i in rows {
        let (xq, xp) = (m[(i, q)], m[(i, p)]);
        m[(i, q)] = xq * c + xp * s.conj();
        m[(i, p)] = -xq * s + xp * c;
    }
}

/// Rotation parameters zeroing `m[(row, p)]` against `m[(row, q)]`.
fn col_givens(m: &CMat, row: usize, q: usize, p: usize) -> (f64, Complex64) {
    let (c, s, _) = givens(m[(row, q)].conj(), m[(row, p)].conj());
    (c, s)
}

/// Generalized eigenvalues of the pencil `a - lambda b` as `(alpha, beta)`
/// pairs, in the order they deflate from the triangular form (top to bottom).
pub fn generalized_eigenvalues(a: &CMat, b: &CMat) -> Result<Vec<(Complex64, Complex64)>> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || b.ncols() != n {
        return Err(TensorError::DimensionMismatch {
            context: "generalized eigenproblem",
            expected: format!("{n}x{n} pencil"),
            actual: format!("{}x{} and {}x{}", a.nrows(), a.ncols(), b.nrows(), b.ncols()),
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let sa = norm_fro(a);
    let sb = norm_fro(b);
    let sa = if sa > 0.0 { sa } else { 1.0 };
    let sb = if sb > 0.0 { sb } else { 1.0 };

    let qr = (b / Complex64::new(sb, 0.0)).qr();
    let mut h = qr.q().adjoint() * (a / Complex64::new(sa, 0.0));
    let mut t = qr.r();
    for j in 0..n {
        for i in (j + 1)..n {
            t[(i, j)] = ZERO;
        }
    }
    hessenberg_triangular(&mut h, &mut t);

    let eps = f64::EPSILON;
    let atol = eps * norm_fro(&h).max(f64::MIN_POSITIVE);
    let btol = eps * norm_fro(&t).max(f64::MIN_POSITIVE);

    let mut pairs = vec![(ZERO, ZERO); n];
    let mut end = n; // active window is [ilo, end - 1]
    let mut iters = 0usize;
    let mut total = 0usize;
    let max_total = 60 * n.max(4);

    'outer: while end > 0 {
        let ihi = end - 1;
        if ihi == 0 {
            pairs[0] = (h[(0, 0)], t[(0, 0)]);
            break;
        }

        let mut ilo = 0;
        for j in (1..=ihi).rev() {
            let sub = h[(j, j - 1)].norm();
            if sub <= atol || sub <= eps * (h[(j, j)].norm() + h[(j - 1, j - 1)].norm()) {
                h[(j, j - 1)] = ZERO;
                ilo = j;
                break;
            }
        }

        if ilo == ihi {
            pairs[ihi] = (h[(ihi, ihi)], t[(ihi, ihi)]);
            end -= 1;
            iters = 0;
            continue;
        }

        for j in ilo..=ihi {
            if t[(j, j)].norm() <= btol {
                t[(j, j)] = ZERO;
                chase_zero_to_bottom(&mut h, &mut t, ilo, ihi, j);
                pairs[ihi] = (h[(ihi, ihi)], ZERO);
                end -= 1;
                iters = 0;
                continue 'outer;
            }
        }

        iters += 1;
        total += 1;
        if total > max_total {
            return Err(TensorError::NoConvergence {
                solver: "complex QZ",
                iterations: total,
            });
        }

        let shift = if iters.is_multiple_of(10) {
            h[(ihi, ihi)] / t[(ihi, ihi)] + 0.75 * h[(ihi, ihi - 1)].norm() / t[(ihi - 1, ihi - 1)].norm()
        } else {
            wilkinson_shift(&h, &t, ihi)
        };
        qz_sweep(&mut h, &mut t, ilo, ihi, shift);
    }

    let sa = Complex64::new(sa, 0.0);
    let sb = Complex64::new(sb, 0.0);
    Ok(pairs.into_iter().map(|(al, be)| (al * sa, be * sb)).collect())
}

fn hessenberg_triangular(h: &mut CMat, t: &mut CMat) {
    let n = h.nrows();
    if n < 3 {
        return;
    }
    for j in 0..(n - 2) {
        for i in ((j + 2)..n).rev() {
            let (c, s, _) = givens(h[(i - 1, j)], h[(i, j)]);
            rotate_rows(h, i - 1, i, j..=(n - 1), c, s);
            h[(i, j)] = ZERO;
            rotate_rows(t, i - 1, i, (i - 1)..=(n - 1), c, s);
            let (c, s) = col_givens(t, i, i, i - 1);
            rotate_cols(t, i, i - 1, 0..=i, c, s);
            t[(i, i - 1)] = ZERO;
            rotate_cols(h, i, i - 1, 0..=(n - 1), c, s);
        }
    }
}

/// Eigenvalue of the trailing 2x2 pencil closest to `h[ihi,ihi] / t[ihi,ihi]`.
fn wilkinson_shift(h: &CMat, t: &CMat, ihi: usize) -> Complex64 {
    let k = ihi - 1;
    let (a11, a12, a21, a22) = (h[(k, k)], h[(k, ihi)], h[(ihi, k)], h[(ihi, ihi)]);
    let (b11, b12, b22) = (t[(k, k)], t[(k, ihi)], t[(ihi, ihi)]);
    // det(A - l B) = b11 b22 l^2 - (a11 b22 + a22 b11 - a21 b12) l + (a11 a22 - a12 a21)
    let qa = b11 * b22;
    let qb = -(a11 * b22 + a22 * b11 - a21 * b12);
    let qc = a11 * a22 - a12 * a21;
    let target = a22 / b22;
    let disc = (qb * qb - 4.0 * qa * qc).sqrt();
    let r1 = (-qb + disc) / (2.0 * qa);
    let r2 = (-qb - disc) / (2.0 * qa);
    let pick = if (r1 - target).norm() <= (r2 - target).norm() {
        r1
    } else {
        r2
    };
    if pick.is_finite() {
        pick
    } else {
        target
    }
}

fn qz_sweep(h: &mut CMat, t: &mut CMat, ilo: usize, ihi: usize, shift: Complex64) {
    let mut x = h[(ilo, ilo)] - shift * t[(ilo, ilo)];
    let mut y = h[(ilo + 1, ilo)];
    for k in ilo..ihi {
        if k > ilo {
            x = h[(k, k - 1)];
            y = h[(k + 1, k - 1)];
        }
        let (c, s, _) = givens(x, y);
        let first = if k > ilo { k - 1 } else { k };
        rotate_rows(h, k, k + 1, first..=ihi, c, s);
        if k > ilo {
            h[(k + 1, k - 1)] = ZERO;
        }
        rotate_rows(t, k, k + 1, k..=ihi, c, s);

        let (c, s) = col_givens(t, k + 1, k + 1, k);
        rotate_cols(t, k + 1, k, ilo..=(k + 1), c, s);
        t[(k + 1, k)] = ZERO;
        rotate_cols(h, k + 1, k, ilo..=(k + 2).min(ihi), c, s);
    }
}

/// Moves a zero at `t[j,j]` down to `t[ihi,ihi]`, then annihilates
/// `h[ihi,ihi-1]` so the bottom 1x1 block deflates with `beta = 0`.
fn chase_zero_to_bottom(h: &mut CMat, t: &mut CMat, ilo: usize, ihi: usize, j: usize) {
    for k in j..ihi {
        let (c, s, _) = givens(t[(k, k + 1)], t[(k + 1, k + 1)]);
        rotate_rows(t, k, k + 1, (k + 1)..=ihi, c, s);
        t[(k + 1, k + 1)] = ZERO;
        let first = if k > ilo { k - 1 } else { k };
        rotate_rows(h, k, k + 1, first..=ihi, c, s);
        if k > ilo {
            let (c, s) = col_givens(h, k + 1, k, k - 1);
            rotate_cols(h, k, k - 1, ilo..=(k + 1), c, s);
            h[(k + 1, k - 1)] = ZERO;
            rotate_cols(t, k, k - 1, ilo..=(k - 1), c, s);
        }
    }
    let (c, s) = col_givens(h, ihi, ihi, ihi - 1);
    rotate_cols(h, ihi, ihi - 1, ilo..=ihi, c, s);
    h[(ihi, ihi - 1)] = ZERO;
    rotate_cols(t, ihi, ihi - 1, ilo..=(ihi - 1), c, s);
}
