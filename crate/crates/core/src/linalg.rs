//! Dense complex matrix helpers shared by the face-wise solvers.

use nalgebra::{DMatrix, DVector, Schur, SVD};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Matrix/tensor norm selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Norm {
    One,
    Two,
    Inf,
    Fro,
}

impl Norm {
    pub fn name(self) -> &'static str {
        match self {
            Norm::One => "1",
            Norm::Two => "2",
            Norm::Inf => "inf",
            Norm::Fro => "fro",
        }
    }
}

impl std::str::FromStr for Norm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "1" | "one" => Ok(Norm::One),
            "2" | "two" => Ok(Norm::Two),
            "inf" | "infinity" => Ok(Norm::Inf),
            "f" | "fro" | "frobenius" => Ok(Norm::Fro),
            other => Err(format!("unknown norm {other:?} (expected 1, 2, inf or fro)")),
        }
    }
}

impl std::fmt::Display for Norm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub fn norm_1(a: &CMat) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn norm_inf(a: &CMat) -> f64 {
    (0..a.nrows())
        .map(|i| a.row(i).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn norm_fro(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    SVD::new(a.clone(), false, false)
        .singular_values
        .iter()
        .copied()
        .collect()
}

pub fn norm_2(a: &CMat) -> f64 {
    singular_values(a).into_iter().fold(0.0, f64::max)
}

pub fn sigma_min(a: &CMat) -> f64 {
    singular_values(a).into_iter().fold(f64::INFINITY, f64::min)
}

pub fn matrix_norm(a: &CMat, p: Norm) -> f64 {
    match p {
        Norm::One => norm_1(a),
        Norm::Two => norm_2(a),
        Norm::Inf => norm_inf(a),
        Norm::Fro => norm_fro(a),
    }
}

/// Smallest singular value with its left and right singular vectors:
/// `a v = sigma u`, both unit length.
pub fn min_singular_triplet(a: &CMat) -> (f64, CVec, CVec) {
    let svd = SVD::new(a.clone(), true, true);
    let (k, &s) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .expect("non-empty matrix");
    let u = svd.u.as_ref().expect("u requested").column(k).into_owned();
    let v = svd.v_t.as_ref().expect("v_t requested").row(k).adjoint();
    (s, u, v)
}

/// Complex Schur form `a = q t q^H`; the strictly lower part of `t` is set
/// to exact zeros.
///
/// The shifted QR iteration can stall on highly structured input (block
/// circulant matrices of Toeplitz slices, for instance). Each stalled
/// attempt is retried on `R^H a R` for a fixed pseudo-random unitary `R`.
pub fn schur(a: &CMat) -> (CMat, CMat) {
    let (q, mut t) = schur_unreduced(a);
    let n = t.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            t[(i, j)] = ZERO;
        }
    }
    (q, t)
}

const SCHUR_RETRIES: u64 = 4;

fn schur_unreduced(a: &CMat) -> (CMat, CMat) {
    let n = a.nrows();
    let max_iter = 100 * n.max(10);
    if let Some(s) = Schur::try_new(a.clone(), f64::EPSILON, max_iter) {
        return s.unpack();
    }
    for seed in 0..SCHUR_RETRIES {
        let r = crate::random::TensorRng::new(seed).unitary(n);
        if let Some(s) = Schur::try_new(r.adjoint() * a * &r, f64::EPSILON, max_iter) {
            let (q, t) = s.unpack();
            return (r * q, t);
        }
    }
    Schur::new(a.clone()).unpack()
}

pub fn eigenvalues(a: &CMat) -> Vec<Complex64> {
    let (_, t) = schur(a);
    t.diagonal().iter().copied().collect()
}

/// Eigenvectors of an upper triangular matrix, one per column, by back
/// substitution. Near-zero pivots are replaced by a small multiple of the
/// matrix scale so defective spectra still yield finite vectors.
pub fn triangular_eigenvectors(t: &CMat) -> CMat {
    let n = t.nrows();
    let scale = norm_fro(t).max(f64::MIN_POSITIVE);
    let small = f64::EPSILON * scale;
    let mut vecs = CMat::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        let mut y = CVec::zeros(n);
        y[k] = ONE;
        for j in (0..k).rev() {
            let mut acc = ZERO;
            for l in (j + 1)..=k {
                acc += t[(j, l)] * y[l];
            }
            let mut pivot = t[(j, j)] - lambda;
            if pivot.norm() < small {
                pivot = Complex64::new(small, 0.0);
            }
            y[j] = -acc / pivot;
        }
        let nrm = y.norm();
        vecs.set_column(k, &(y / Complex64::new(nrm, 0.0)));
    }
    vecs
}

pub fn block_diag(blocks: &[CMat]) -> CMat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s == ZERO {
                continue;
            }
            out.view_mut((i * br, j * bc), (br, bc)).copy_from(&(b * s));
        }
    }
    out
}

/// DFT matrix with entries `w^(jk)`, `w = exp(-2 pi i / n)`; scaled by
/// `1/sqrt(n)` (unitary) when `normalized`.
pub fn dft_matrix(n: usize, normalized: bool) -> CMat {
    let scale = if normalized { 1.0 / (n as f64).sqrt() } else { 1.0 };
    CMat::from_fn(n, n, |j, k| root_of_unity(n, (j * k) % n) * scale)
}

/// `exp(-2 pi i k / n)`.
pub fn root_of_unity(n: usize, k: usize) -> Complex64 {
    let theta = -2.0 * std::f64::consts::PI * (k % n) as f64 / n as f64;
    Complex64::from_polar(1.0, theta)
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Condition number `||a||_p ||a^-1||_p`; infinite when `a` is singular.
pub fn cond(a: &CMat, p: Norm) -> f64 {
    match a.clone().try_inverse() {
        Some(inv) => matrix_norm(a, p) * matrix_norm(&inv, p),
        None => f64::INFINITY,
    }
}
