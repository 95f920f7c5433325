//! Dense third-order complex tensors and the t-product algebra.
//!
//! Entries are stored slice-major with each frontal slice column-major:
//! entry `(i, j, k)` lives at `k*m*p + j*m + i`.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Result, TensorError};
use crate::linalg::{self, CMat, Norm, ZERO};
use crate::transform::{self, FaceSet};

/// Relative factor for the default structural-predicate tolerance.
pub const PREDICATE_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    m: usize,
    p: usize,
    n: usize,
    data: Vec<Complex64>,
}

/// `bcirc(t)`: the `(m n) x (p n)` block circulant matrix whose block
/// `(r, c)` is frontal slice `(r - c) mod n`.
#[derive(Debug, Clone)]
pub struct BlockCirculant {
    pub base: Tensor3,
    pub matrix: CMat,
}

impl Tensor3 {
    pub fn zeros(m: usize, p: usize, n: usize) -> Self {
        assert!(m >= 1 && p >= 1 && n >= 1, "tensor dimensions must be positive");
        Tensor3 {
            m,
            p,
            n,
            data: vec![ZERO; m * p * n],
        }
    }

    pub fn from_fn(m: usize, p: usize, n: usize, mut f: impl FnMut(usize, usize, usize) -> Complex64) -> Self {
        let mut t = Tensor3::zeros(m, p, n);
        for k in 0..n {
            for j in 0..p {
                for i in 0..m {
                    t.data[k * m * p + j * m + i] = f(i, j, k);
                }
            }
        }
        t
    }

    /// Builds a tensor from its flat storage (see module docs for the order).
    pub fn from_data(m: usize, p: usize, n: usize, data: Vec<Complex64>) -> Result<Self> {
        if m == 0 || p == 0 || n == 0 {
            return Err(TensorError::DimensionMismatch {
                context: "tensor construction",
                expected: "positive dimensions".into(),
                actual: format!("{m}x{p}x{n}"),
            });
        }
        if data.len() != m * p * n {
            return Err(TensorError::DimensionMismatch {
                context: "tensor construction",
                expected: format!("{} entries", m * p * n),
                actual: format!("{} entries", data.len()),
            });
        }
        Ok(Tensor3 { m, p, n, data })
    }

    pub fn from_slices(slices: &[CMat]) -> Result<Self> {
        let first = slices.first().ok_or_else(|| TensorError::DimensionMismatch {
            context: "tensor from slices",
            expected: "at least one slice".into(),
            actual: "0 slices".into(),
        })?;
        let (m, p) = first.shape();
        let mut data = Vec::with_capacity(m * p * slices.len());
        for (k, s) in slices.iter().enumerate() {
            if s.shape() != (m, p) {
                return Err(TensorError::DimensionMismatch {
                    context: "tensor from slices",
                    expected: format!("{m}x{p} slices"),
                    actual: format!("slice {k} is {}x{}", s.nrows(), s.ncols()),
                });
            }
            data.extend(s.iter().copied());
        }
        Tensor3::from_data(m, p, slices.len(), data)
    }

    /// `I_{m m n}`: first frontal slice the identity, the rest zero.
    pub fn identity(m: usize, n: usize) -> Self {
        Tensor3::from_fn(m, m, n, |i, j, k| if k == 0 && i == j { linalg::ONE } else { ZERO })
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.m, self.p, self.n)
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.p
    }

    pub fn slices(&self) -> usize {
        self.n
    }

    pub fn is_square(&self) -> bool {
        self.m == self.p
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> Complex64 {
        self.data[self.index(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, value: Complex64) {
        let idx = self.index(i, j, k);
        self.data[idx] = value;
    }

    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        assert!(i < self.m && j < self.p && k < self.n, "tensor index out of bounds");
        k * self.m * self.p + j * self.m + i
    }

    /// Frontal slice `k` (0-based) as an `m x p` matrix.
    pub fn slice(&self, k: usize) -> CMat {
        let len = self.m * self.p;
        CMat::from_column_slice(self.m, self.p, &self.data[k * len..(k + 1) * len])
    }

    pub fn frontal_slices(&self) -> Vec<CMat> {
        (0..self.n).map(|k| self.slice(k)).collect()
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Tensor3 {
        Tensor3 {
            m: self.m,
            p: self.p,
            n: self.n,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Tensor3 {
        self.map(|z| z * c)
    }

    pub fn conj(&self) -> Tensor3 {
        self.map(|z| z.conj())
    }

    pub fn real_part(&self) -> Tensor3 {
        self.map(|z| Complex64::new(z.re, 0.0))
    }

    pub fn imag_part(&self) -> Tensor3 {
        self.map(|z| Complex64::new(z.im, 0.0))
    }

    pub fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }

    pub fn max_imag(&self) -> f64 {
        self.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// Frobenius norm of the entries (not of `bcirc`).
    pub fn fro(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Tensor3) -> f64 {
        assert_eq!(self.shape(), other.shape(), "shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `unfold(t) = [A_1; A_2; ...; A_n]`, an `(m n) x p` matrix.
    pub fn unfold(&self) -> CMat {
        let (m, p, n) = self.shape();
        CMat::from_fn(m * n, p, |r, j| self.get(r % m, j, r / m))
    }

    /// Inverse of [`Tensor3::unfold`].
    pub fn fold(stacked: &CMat, n: usize) -> Result<Tensor3> {
        let rows = stacked.nrows();
        if n == 0 || !rows.is_multiple_of(n) || rows == 0 || stacked.ncols() == 0 {
            return Err(TensorError::DimensionMismatch {
                context: "fold",
                expected: format!("row count divisible by {n}"),
                actual: format!("{}x{}", rows, stacked.ncols()),
            });
        }
        let m = rows / n;
        Ok(Tensor3::from_fn(m, stacked.ncols(), n, |i, j, k| {
            stacked[(k * m + i, j)]
        }))
    }

    pub fn bcirc(&self) -> BlockCirculant {
        let (m, p, n) = self.shape();
        let mut matrix = CMat::zeros(m * n, p * n);
        for r in 0..n {
            for c in 0..n {
                let k = (r + n - c) % n;
                matrix.view_mut((r * m, c * p), (m, p)).copy_from(&self.slice(k));
            }
        }
        BlockCirculant {
            base: self.clone(),
            matrix,
        }
    }

    /// The t-product `self * other = fold(bcirc(self) unfold(other))`,
    /// evaluated as a circular convolution of frontal slices.
    pub fn tprod(&self, other: &Tensor3) -> Result<Tensor3> {
        let (m, p, n) = self.shape();
        let (p2, s, n2) = other.shape();
        if p != p2 || n != n2 {
            return Err(TensorError::DimensionMismatch {
                context: "t-product",
                expected: format!("{p}x?x{n} right operand"),
                actual: format!("{p2}x{s}x{n2}"),
            });
        }
        let a = self.frontal_slices();
        let b = other.frontal_slices();
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let mut acc = CMat::zeros(m, s);
            for (j, bj) in b.iter().enumerate() {
                acc += &a[(k + n - j) % n] * bj;
            }
            out.push(acc);
        }
        Tensor3::from_slices(&out)
    }

    /// `t^H`: conjugate-transpose every slice and reverse the order of
    /// slices 2 through n.
    pub fn conj_transpose(&self) -> Tensor3 {
        let (m, p, n) = self.shape();
        Tensor3::from_fn(p, m, n, |i, j, k| self.get(j, i, (n - k) % n).conj())
    }

    /// `t^T`: like [`Tensor3::conj_transpose`] without conjugation.
    pub fn transpose(&self) -> Tensor3 {
        let (m, p, n) = self.shape();
        Tensor3::from_fn(p, m, n, |i, j, k| self.get(j, i, (n - k) % n))
    }

    pub fn to_faces(&self) -> FaceSet {
        transform::to_faces(self)
    }

    pub(crate) fn require_square(&self, operation: &'static str) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(TensorError::NonSquare {
                operation,
                rows: self.m,
                cols: self.p,
            })
        }
    }

    /// Inverse under the t-product, computed face by face.
    ///
    /// A face counts as singular when its smallest singular value is at most
    /// `m * eps` times the largest singular value over all faces; the error
    /// names the face with the smallest `sigma_min`.
    pub fn t_inverse(&self) -> Result<Tensor3> {
        self.require_square("t_inverse")?;
        let faces = self.to_faces();
        let svals: Vec<Vec<f64>> = faces.faces().iter().map(linalg::singular_values).collect();
        let smax = svals.iter().flatten().copied().fold(0.0, f64::max);
        let (face, smin) = svals
            .iter()
            .map(|s| s.iter().copied().fold(f64::INFINITY, f64::min))
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("at least one face");
        if smin <= self.m as f64 * f64::EPSILON * smax || smax == 0.0 {
            return Err(TensorError::Singular { face, sigma_min: smin });
        }
        let inv = faces.face_map(|i, f| {
            f.clone().try_inverse().ok_or(TensorError::Singular {
                face: i,
                sigma_min: smin,
            })
        })?;
        let out = inv.to_tensor();
        Ok(if self.is_real() { out.real_part() } else { out })
    }

    /// `||t||_p = ||bcirc(t)||_p`.
    ///
    /// The 2-norm is the largest face 2-norm (the DFT block diagonalization
    /// is unitary). The 1-, inf- and Frobenius norms use the fact that each
    /// block row and block column of `bcirc(t)` holds every slice once.
    pub fn norm(&self, p: Norm) -> f64 {
        let (m, pc, n) = self.shape();
        match p {
            Norm::Two => self.to_faces().faces().iter().map(linalg::norm_2).fold(0.0, f64::max),
            Norm::Fro => (n as f64).sqrt() * self.fro(),
            Norm::One => (0..pc)
                .map(|j| {
                    (0..n)
                        .flat_map(|k| (0..m).map(move |i| (i, k)))
                        .map(|(i, k)| self.get(i, j, k).norm())
                        .sum::<f64>()
                })
                .fold(0.0, f64::max),
            Norm::Inf => (0..m)
                .map(|i| {
                    (0..n)
                        .flat_map(|k| (0..pc).map(move |j| (j, k)))
                        .map(|(j, k)| self.get(i, j, k).norm())
                        .sum::<f64>()
                })
                .fold(0.0, f64::max),
        }
    }

    /// `kappa_p(t) = ||bcirc(t)||_p ||bcirc(t^-1)||_p`.
    pub fn cond(&self, p: Norm) -> Result<f64> {
        Ok(self.norm(p) * self.t_inverse()?.norm(p))
    }

    /// Default absolute tolerance for the structural predicates:
    /// `1e-10 * max(1, ||t||_F)`.
    pub fn default_tolerance(&self) -> f64 {
        PREDICATE_RTOL * self.fro().max(1.0)
    }

    pub fn hermitian_residual(&self) -> Result<f64> {
        self.require_square("is_hermitian")?;
        Ok((self - &self.conj_transpose()).fro())
    }

    pub fn normality_residual(&self) -> Result<f64> {
        self.require_square("is_normal")?;
        let h = self.conj_transpose();
        let left = self.tprod(&h)?;
        let right = h.tprod(self)?;
        Ok((&left - &right).fro())
    }

    pub fn is_hermitian(&self) -> Result<bool> {
        self.is_hermitian_tol(self.default_tolerance())
    }

    pub fn is_hermitian_tol(&self, tol: f64) -> Result<bool> {
        Ok(self.hermitian_residual()? <= tol)
    }

    /// `A * A^H = A^H * A`; the residual is quadratic in the scale of the
    /// tensor, so the default tolerance is `1e-10 * max(1, ||t||_F)^2`.
    pub fn is_normal(&self) -> Result<bool> {
        let s = self.fro().max(1.0);
        self.is_normal_tol(PREDICATE_RTOL * s * s)
    }

    pub fn is_normal_tol(&self, tol: f64) -> Result<bool> {
        Ok(self.normality_residual()? <= tol)
    }

    /// Largest off-diagonal magnitude over all frontal slices.
    pub fn off_diagonal_max(&self) -> f64 {
        let (m, p, n) = self.shape();
        let mut worst: f64 = 0.0;
        for k in 0..n {
            for j in 0..p {
                for i in 0..m {
                    if i != j {
                        worst = worst.max(self.get(i, j, k).norm());
                    }
                }
            }
        }
        worst
    }

    pub fn is_f_diagonal(&self) -> bool {
        self.is_f_diagonal_tol(self.default_tolerance())
    }

    pub fn is_f_diagonal_tol(&self, tol: f64) -> bool {
        self.off_diagonal_max() <= tol
    }
}

impl BlockCirculant {
    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }
}

fn zip_with(a: &Tensor3, b: &Tensor3, f: impl Fn(Complex64, Complex64) -> Complex64) -> Tensor3 {
    assert_eq!(a.shape(), b.shape(), "tensor shapes differ");
    Tensor3 {
        m: a.m,
        p: a.p,
        n: a.n,
        data: a.data.iter().zip(&b.data).map(|(&x, &y)| f(x, y)).collect(),
    }
}

impl Add for &Tensor3 {
    type Output = Tensor3;

    fn add(self, rhs: &Tensor3) -> Tensor3 {
        zip_with(self, rhs, |x, y| x + y)
    }
}

impl Sub for &Tensor3 {
    type Output = Tensor3;

    fn sub(self, rhs: &Tensor3) -> Tensor3 {
        zip_with(self, rhs, |x, y| x - y)
    }
}

impl Neg for &Tensor3 {
    type Output = Tensor3;

    fn neg(self) -> Tensor3 {
        self.map(|z| -z)
    }
}

impl Mul<Complex64> for &Tensor3 {
    type Output = Tensor3;

    fn mul(self, rhs: Complex64) -> Tensor3 {
        self.scale(rhs)
    }
}

impl Mul<f64> for &Tensor3 {
    type Output = Tensor3;

    fn mul(self, rhs: f64) -> Tensor3 {
        self.map(|z| z * rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::TensorRng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn scalar_tube(values: &[Complex64]) -> Tensor3 {
        Tensor3::from_data(1, 1, values.len(), values.to_vec()).unwrap()
    }

    #[test]
    fn bcirc_of_identity_is_identity() {
        let b = Tensor3::identity(2, 2).bcirc();
        assert_eq!(b.matrix, CMat::identity(4, 4));
    }

    #[test]
    fn bcirc_two_slice_tube() {
        let (a, b) = (c(1.0, 2.0), c(-3.0, 0.5));
        let m = scalar_tube(&[a, b]).bcirc().into_matrix();
        assert_eq!(m, CMat::from_row_slice(2, 2, &[a, b, b, a]));
    }

    #[test]
    fn bcirc_block_placement() {
        let mut rng = TensorRng::new(5);
        let t = rng.complex_normal(2, 3, 4);
        let b = t.bcirc();
        for r in 0..4 {
            for col in 0..4 {
                let block = b.matrix.view((r * 2, col * 3), (2, 3)).into_owned();
                assert_eq!(block, t.slice((r + 4 - col) % 4));
            }
        }
    }

    #[test]
    fn bcirc_is_linear() {
        let mut rng = TensorRng::new(6);
        let a = rng.complex_normal(2, 2, 3);
        let b = rng.complex_normal(2, 2, 3);
        let (alpha, beta) = (c(0.3, -1.2), c(2.0, 0.7));
        let lhs = (&(&a * alpha) + &(&b * beta)).bcirc().into_matrix();
        let rhs = a.bcirc().into_matrix() * alpha + b.bcirc().into_matrix() * beta;
        assert!(linalg::max_abs_diff(&lhs, &rhs) < 1e-14);
    }

    #[test]
    fn unfold_of_scalar_tube_and_identity() {
        let (a, b) = (c(1.0, 0.0), c(2.0, -1.0));
        let u = scalar_tube(&[a, b]).unfold();
        assert_eq!(u, CMat::from_column_slice(2, 1, &[a, b]));
        let u = Tensor3::identity(2, 3).unfold();
        let mut expected = CMat::zeros(6, 2);
        expected[(0, 0)] = linalg::ONE;
        expected[(1, 1)] = linalg::ONE;
        assert_eq!(u, expected);
    }

    #[test]
    fn fold_inverts_unfold() {
        let mut rng = TensorRng::new(7);
        let t = rng.complex_normal(3, 2, 4);
        assert_eq!(Tensor3::fold(&t.unfold(), 4).unwrap(), t);
        let t = rng.complex_normal(4, 1, 5);
        assert_eq!(Tensor3::fold(&t.unfold(), 5).unwrap(), t);
        let col = CMat::from_column_slice(2, 1, &[c(1.0, 0.0), c(2.0, 0.0)]);
        assert_eq!(
            Tensor3::fold(&col, 2).unwrap(),
            scalar_tube(&[c(1.0, 0.0), c(2.0, 0.0)])
        );
    }

    #[test]
    fn fold_rejects_indivisible_rows() {
        let err = Tensor3::fold(&CMat::zeros(6, 2), 4).unwrap_err();
        assert!(matches!(err, TensorError::DimensionMismatch { .. }));
    }

    #[test]
    fn tprod_of_scalar_tubes_is_circular_convolution() {
        let (a1, a2, b1, b2) = (c(1.0, 1.0), c(2.0, 0.0), c(-1.0, 0.5), c(3.0, 0.0));
        let prod = scalar_tube(&[a1, a2]).tprod(&scalar_tube(&[b1, b2])).unwrap();
        assert_eq!(prod, scalar_tube(&[a1 * b1 + a2 * b2, a2 * b1 + a1 * b2]));
    }

    #[test]
    fn tprod_with_identity() {
        let mut rng = TensorRng::new(8);
        let a = rng.complex_normal(3, 3, 2);
        assert_eq!(a.tprod(&Tensor3::identity(3, 2)).unwrap(), a);
        assert_eq!(Tensor3::identity(3, 2).tprod(&a).unwrap(), a);
    }

    #[test]
    fn tprod_matches_bcirc_product() {
        let mut rng = TensorRng::new(9);
        let a = rng.complex_normal(2, 2, 2);
        let b = rng.complex_normal(2, 2, 2);
        let lhs = a.tprod(&b).unwrap().bcirc().into_matrix();
        let rhs = a.bcirc().into_matrix() * b.bcirc().into_matrix();
        assert!(linalg::max_abs_diff(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn tprod_rejects_mismatch() {
        let a = Tensor3::zeros(2, 3, 2);
        let b = Tensor3::zeros(2, 3, 2);
        assert!(a.tprod(&b).is_err());
        let b = Tensor3::zeros(3, 1, 3);
        assert!(a.tprod(&b).is_err());
    }

    #[test]
    fn conj_transpose_of_tube_reverses_tail() {
        let (a, b, d) = (c(1.0, 1.0), c(2.0, -2.0), c(0.0, 3.0));
        let t = scalar_tube(&[a, b, d]).conj_transpose();
        assert_eq!(t, scalar_tube(&[a.conj(), d.conj(), b.conj()]));
    }

    #[test]
    fn conj_transpose_matches_bcirc_adjoint() {
        let mut rng = TensorRng::new(10);
        let t = rng.complex_normal(2, 3, 4);
        assert_eq!(t.conj_transpose().bcirc().matrix, t.bcirc().matrix.adjoint());
        assert_eq!(t.transpose().bcirc().matrix, t.bcirc().matrix.transpose());
    }

    #[test]
    fn identity_tensor_basics() {
        assert_eq!(Tensor3::identity(1, 1).data(), &[linalg::ONE]);
        let i = Tensor3::identity(3, 4);
        assert!(i.is_hermitian().unwrap());
        assert!(i.is_normal().unwrap());
        assert!(i.is_f_diagonal());
        assert!((i.norm(Norm::Two) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn t_inverse_of_tube() {
        let inv = scalar_tube(&[c(2.0, 0.0), c(1.0, 0.0)]).t_inverse().unwrap();
        let expected = scalar_tube(&[c(2.0 / 3.0, 0.0), c(-1.0 / 3.0, 0.0)]);
        assert!(inv.max_abs_diff(&expected) < 1e-15);
        let id = Tensor3::identity(3, 3);
        assert!(id.t_inverse().unwrap().max_abs_diff(&id) < 1e-15);
    }

    #[test]
    fn t_inverse_matches_dense_inverse() {
        let mut rng = TensorRng::new(11);
        let mut t = rng.complex_normal(3, 3, 3);
        for i in 0..3 {
            let d = t.get(i, i, 0) + c(12.0, 0.0);
            t.set(i, i, 0, d);
        }
        let inv = t.t_inverse().unwrap();
        let dense = t.bcirc().into_matrix().try_inverse().unwrap();
        assert!(linalg::max_abs_diff(&inv.bcirc().matrix, &dense) < 1e-10);
        let id = Tensor3::identity(3, 3);
        assert!(t.tprod(&inv).unwrap().max_abs_diff(&id) < 1e-12);
        assert!(inv.tprod(&t).unwrap().max_abs_diff(&id) < 1e-12);
    }

    #[test]
    fn t_inverse_reports_singular_face() {
        // slices (1, 1): faces (2, 0), so face 1 is singular
        let err = scalar_tube(&[c(1.0, 0.0), c(1.0, 0.0)]).t_inverse().unwrap_err();
        assert!(matches!(err, TensorError::Singular { face: 1, .. }), "{err:?}");
        assert!(Tensor3::zeros(2, 3, 2).t_inverse().is_err());
    }

    #[test]
    fn norms_agree_with_dense_bcirc() {
        let mut rng = TensorRng::new(12);
        for _ in 0..10 {
            let t = rng.complex_normal(2, 3, 3);
            let b = t.bcirc().into_matrix();
            for p in [Norm::One, Norm::Two, Norm::Inf, Norm::Fro] {
                let dense = linalg::matrix_norm(&b, p);
                assert!((t.norm(p) - dense).abs() <= 1e-12 * dense, "{p}");
            }
        }
        let t = scalar_tube(&[c(3.0, 0.0), c(4.0, 0.0)]);
        assert!((t.norm(Norm::Fro) - 50f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn hermitian_construction_and_detection() {
        let mut rng = TensorRng::new(13);
        let s = rng.complex_normal(3, 3, 4);
        let h = &s + &s.conj_transpose();
        assert!(h.is_hermitian().unwrap());
        assert!(h.is_normal().unwrap());
        assert_eq!(h.conj_transpose(), h);
        assert!(!s.is_hermitian().unwrap());
        assert_ne!(s.bcirc().matrix, s.bcirc().matrix.adjoint());
    }

    #[test]
    fn predicates_require_square_slices() {
        let t = Tensor3::zeros(2, 3, 2);
        assert!(matches!(t.is_hermitian(), Err(TensorError::NonSquare { .. })));
        assert!(matches!(t.is_normal(), Err(TensorError::NonSquare { .. })));
        assert!(t.is_f_diagonal());
    }
}
