//! T-eigenvalues, generalized T-eigenvalues, T-Schur form and unitary
//! F-diagonalization, all computed face by face.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Result, TensorError};
use crate::exec::Execution;
use crate::linalg::{self, CMat, CVec, Norm, ZERO};
use crate::matching;
use crate::qz;
use crate::tensor::Tensor3;
use crate::transform::{self, FaceSet};

/// Relative size of `beta` below which a generalized eigenvalue is infinite.
pub const INFINITE_BETA_RTOL: f64 = 1e-12;

/// Eigenvalues of every face, concatenated in DFT order and sorted by
/// `(Re, Im)` within each face.
#[derive(Debug, Clone)]
pub struct TSpectrum {
    pub eigenvalues: Vec<Complex64>,
    pub face_index: Vec<usize>,
    /// `m x 1 x n` eigenvectors aligned with `eigenvalues`, unit 2-norm of
    /// the unfolding with the first nonzero entry real and positive.
    pub eigenvectors: Option<Vec<Tensor3>>,
}

impl TSpectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }
}

fn by_re_im(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

pub fn t_eigenvalues(a: &Tensor3, want_vectors: bool) -> Result<TSpectrum> {
    t_eigenvalues_with(a, want_vectors, Execution::default())
}

pub fn t_eigenvalues_with(a: &Tensor3, want_vectors: bool, exec: Execution) -> Result<TSpectrum> {
    a.require_square("t_eigenvalues")?;
    let (m, _, n) = a.shape();
    let faces = a.to_faces();
    let per_face = exec.map(n, |i| {
        let (q, t) = linalg::schur(faces.face(i));
        let vecs = want_vectors.then(|| q * linalg::triangular_eigenvectors(&t));
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&x, &y| by_re_im(&t[(x, x)], &t[(y, y)]));
        let values: Vec<Complex64> = order.iter().map(|&k| t[(k, k)]).collect();
        let vectors = vecs.map(|v| order.iter().map(|&k| v.column(k).into_owned()).collect::<Vec<_>>());
        (values, vectors)
    });

    let mut eigenvalues = Vec::with_capacity(m * n);
    let mut face_index = Vec::with_capacity(m * n);
    let mut eigenvectors = want_vectors.then(|| Vec::with_capacity(m * n));
    for (i, (values, vectors)) in per_face.into_iter().enumerate() {
        face_index.extend(std::iter::repeat_n(i, values.len()));
        eigenvalues.extend(values);
        if let (Some(out), Some(vs)) = (eigenvectors.as_mut(), vectors) {
            out.extend(vs.iter().map(|v| embed_face_vector(v, i, n)));
        }
    }
    Ok(TSpectrum {
        eigenvalues,
        face_index,
        eigenvectors,
    })
}

/// `m x 1 x n` tensor whose only nonzero face is `face`, holding `v`,
/// normalized as documented on [`TSpectrum::eigenvectors`].
fn embed_face_vector(v: &CVec, face: usize, n: usize) -> Tensor3 {
    let m = v.len();
    let mut faces = FaceSet::zeros(m, 1, n);
    faces.face_mut(face).set_column(0, v);
    let x = transform::from_faces(&faces);
    normalize_vector(&x)
}

fn normalize_vector(x: &Tensor3) -> Tensor3 {
    let nrm = x.fro();
    if nrm == 0.0 {
        return x.clone();
    }
    let cutoff = 1e-12 * nrm;
    let lead = x.unfold().iter().copied().find(|z| z.norm() > cutoff).unwrap_or(ZERO);
    let phase = if lead == ZERO {
        Complex64::new(1.0, 0.0)
    } else {
        lead.conj() / lead.norm()
    };
    x.scale(phase / nrm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenKind {
    Finite,
    Infinite,
    /// `alpha` and `beta` both vanish: the face pencil is singular.
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralizedEigenvalue {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub face: usize,
    pub kind: EigenKind,
}

impl GeneralizedEigenvalue {
    /// `alpha / beta` for finite eigenvalues.
    pub fn value(&self) -> Option<Complex64> {
        (self.kind == EigenKind::Finite).then(|| self.alpha / self.beta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Regularity {
    /// Numerical rank of `bcirc(B)`, the sum of the face ranks.
    pub rank: usize,
    pub full_rank: bool,
    pub face_ranks: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct GeneralizedSpectrum {
    pub pairs: Vec<GeneralizedEigenvalue>,
    pub regularity: Regularity,
}

impl GeneralizedSpectrum {
    /// Finite eigenvalues as a [`TSpectrum`].
    pub fn finite(&self) -> TSpectrum {
        let (eigenvalues, face_index) = self.pairs.iter().filter_map(|p| p.value().map(|v| (v, p.face))).unzip();
        TSpectrum {
            eigenvalues,
            face_index,
            eigenvectors: None,
        }
    }

    pub fn count(&self, kind: EigenKind) -> usize {
        self.pairs.iter().filter(|p| p.kind == kind).count()
    }
}

fn classify(alpha: Complex64, beta: Complex64, sa: f64, sb: f64) -> EigenKind {
    let (a, b) = (alpha.norm() / sa, beta.norm() / sb);
    if a <= 1e-10 && b <= 1e-10 {
        EigenKind::Indeterminate
    } else if beta.norm() <= INFINITE_BETA_RTOL * (alpha.norm() + beta.norm()) {
        EigenKind::Infinite
    } else {
        EigenKind::Finite
    }
}

/// Solutions of `bcirc(A) unfold(X) = lambda bcirc(B) unfold(X)` via the face
/// pencils `(A_i, B_i)`. Infinite and indeterminate pairs are reported rather
/// than dropped.
pub fn generalized_t_eigenvalues(a: &Tensor3, b: &Tensor3) -> Result<GeneralizedSpectrum> {
    generalized_t_eigenvalues_with(a, b, Execution::default())
}

pub fn generalized_t_eigenvalues_with(a: &Tensor3, b: &Tensor3, exec: Execution) -> Result<GeneralizedSpectrum> {
    a.require_square("generalized_t_eigenvalues")?;
    b.require_square("generalized_t_eigenvalues")?;
    if a.shape() != b.shape() {
        return Err(TensorError::DimensionMismatch {
            context: "generalized_t_eigenvalues",
            expected: format!("{:?}", a.shape()),
            actual: format!("{:?}", b.shape()),
        });
    }
    let (m, _, n) = a.shape();
    let fa = a.to_faces();
    let fb = b.to_faces();

    let svals: Vec<Vec<f64>> = exec.map(n, |i| linalg::singular_values(fb.face(i)));
    let smax = svals.iter().flatten().copied().fold(0.0, f64::max);
    let cutoff = m as f64 * f64::EPSILON * smax;
    let face_ranks: Vec<usize> = svals
        .iter()
        .map(|s| {
            if smax == 0.0 {
                0
            } else {
                s.iter().filter(|&&x| x > cutoff).count()
            }
        })
        .collect();
    let rank = face_ranks.iter().sum();

    let face_scale = |f: &FaceSet| {
        f.faces()
            .iter()
            .map(linalg::norm_fro)
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE)
    };
    let (sa, sb) = (face_scale(&fa), face_scale(&fb));
    let per_face = exec.try_map(n, |i| {
        let (ai, bi) = (fa.face(i), fb.face(i));
        let mut pairs: Vec<GeneralizedEigenvalue> = qz::generalized_eigenvalues(ai, bi)
            .map_err(|e| TensorError::Face {
                face: i,
                source: Box::new(e),
            })?
            .into_iter()
            .map(|(alpha, beta)| GeneralizedEigenvalue {
                alpha,
                beta,
                face: i,
                kind: classify(alpha, beta, sa, sb),
            })
            .collect();
        pairs.sort_by(|x, y| match (x.value(), y.value()) {
            (Some(u), Some(v)) => by_re_im(&u, &v),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => (x.kind as u8).cmp(&(y.kind as u8)),
        });
        Ok::<_, TensorError>(pairs)
    })?;

    Ok(GeneralizedSpectrum {
        pairs: per_face.into_iter().flatten().collect(),
        regularity: Regularity {
            rank,
            full_rank: rank == m * n,
            face_ranks,
        },
    })
}

/// `A = Q * (D + N) * Q^H` with `Q` unitary, `D` F-diagonal and the faces of
/// `N` strictly upper triangular. The exact face sets are kept alongside the
/// tensors.
#[derive(Debug, Clone)]
pub struct TSchur {
    pub q: Tensor3,
    pub d: Tensor3,
    pub n: Tensor3,
    pub q_faces: FaceSet,
    pub d_faces: FaceSet,
    pub n_faces: FaceSet,
}

impl TSchur {
    /// `D + N`.
    pub fn t(&self) -> Tensor3 {
        &self.d + &self.n
    }
}

pub fn t_schur(a: &Tensor3) -> Result<TSchur> {
    t_schur_with(a, Execution::default())
}

pub fn t_schur_with(a: &Tensor3, exec: Execution) -> Result<TSchur> {
    a.require_square("t_schur")?;
    let faces = a.to_faces();
    let (m, _, n) = faces.shape();
    let parts = exec.map(n, |i| {
        let (q, t) = linalg::schur(faces.face(i));
        let d = CMat::from_diagonal(&t.diagonal());
        let mut s = t;
        for k in 0..m {
            s[(k, k)] = ZERO;
        }
        (q, d, s)
    });
    let mut qs = Vec::with_capacity(n);
    let mut ds = Vec::with_capacity(n);
    let mut ns = Vec::with_capacity(n);
    for (q, d, s) in parts {
        qs.push(q);
        ds.push(d);
        ns.push(s);
    }
    let q_faces = FaceSet::new(qs)?;
    let d_faces = FaceSet::new(ds)?;
    let n_faces = FaceSet::new(ns)?;
    Ok(TSchur {
        q: q_faces.to_tensor(),
        d: d_faces.to_tensor(),
        n: n_faces.to_tensor(),
        q_faces,
        d_faces,
        n_faces,
    })
}

/// Unitary `U` and F-diagonal `D` with `U * A * U^H = D`, for normal `A`.
pub fn f_diagonalize_normal(a: &Tensor3) -> Result<(Tensor3, Tensor3)> {
    a.require_square("f_diagonalize_normal")?;
    let residual = a.normality_residual()?;
    if !a.is_normal()? {
        return Err(TensorError::NotNormal { residual });
    }
    let schur = t_schur(a)?;
    let u = schur.q_faces.face_map(|_, q| Ok(q.adjoint()))?.to_tensor();
    Ok((u, schur.d))
}

/// Off-diagonal Frobenius residual of the faces of `P^-1 * A * P`, or an
/// error when it exceeds `1e-8 * kappa_2(P) * max(1, ||A||_F)`.
pub fn f_diagonalizer_residual(a: &Tensor3, p: &Tensor3) -> Result<f64> {
    a.require_square("F-diagonalization")?;
    if a.shape() != p.shape() {
        return Err(TensorError::DimensionMismatch {
            context: "F-diagonalization",
            expected: format!("{:?}", a.shape()),
            actual: format!("{:?}", p.shape()),
        });
    }
    let d = p.t_inverse()?.tprod(a)?.tprod(p)?;
    let residual = d
        .to_faces()
        .faces()
        .iter()
        .map(|f| {
            let mut off = f.clone();
            off.fill_diagonal(ZERO);
            linalg::norm_fro(&off).powi(2)
        })
        .sum::<f64>()
        .sqrt();
    let tolerance = 1e-8 * p.cond(Norm::Two)? * a.norm(Norm::Fro).max(1.0);
    if residual > tolerance {
        return Err(TensorError::NotFDiagonalizable { residual, tolerance });
    }
    Ok(residual)
}

/// Diagonalizer built from the face eigenvector matrices, so that
/// `P^-1 * A * P` is F-diagonal whenever every face is diagonalizable.
pub fn eigenvector_tensor(a: &Tensor3) -> Result<Tensor3> {
    a.require_square("eigenvector_tensor")?;
    a.to_faces()
        .face_map(|_, f| {
            let (q, t) = linalg::schur(f);
            Ok(q * linalg::triangular_eigenvectors(&t))
        })
        .map(|f| f.to_tensor())
}

/// `s_A(B)`: the largest distance from a T-eigenvalue of `b` to the
/// spectrum of `a`.
pub fn spectral_variation(a: &Tensor3, b: &Tensor3) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(TensorError::DimensionMismatch {
            context: "spectral_variation",
            expected: format!("{:?}", a.shape()),
            actual: format!("{:?}", b.shape()),
        });
    }
    let la = t_eigenvalues(a, false)?;
    let lb = t_eigenvalues(b, false)?;
    Ok(matching::spectral_variation(&la.eigenvalues, &lb.eigenvalues))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::TensorRng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn tube(vals: &[f64]) -> Tensor3 {
        Tensor3::from_fn(1, 1, vals.len(), |_, _, k| c(vals[k], 0.0))
    }

    #[test]
    fn scalar_tube_eigenvalues() {
        let s = t_eigenvalues(&tube(&[3.0, 1.0]), false).unwrap();
        assert_eq!(s.face_index, vec![0, 1]);
        assert!((s.eigenvalues[0] - c(4.0, 0.0)).norm() < 1e-15);
        assert!((s.eigenvalues[1] - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn eigenpairs_satisfy_tprod_equation() {
        let mut rng = TensorRng::new(3);
        let a = rng.complex_normal(4, 4, 3);
        let s = t_eigenvalues(&a, true).unwrap();
        assert_eq!(s.len(), 12);
        let scale = a.norm(Norm::Fro);
        for (lambda, x) in s.eigenvalues.iter().zip(s.eigenvectors.as_ref().unwrap()) {
            assert!((x.fro() - 1.0).abs() < 1e-12);
            let r = &a.tprod(x).unwrap() - &x.scale(*lambda);
            assert!(r.fro() <= 1e-10 * scale);
            let lead = x.unfold().iter().copied().find(|z| z.norm() > 1e-12).unwrap();
            assert!(lead.im.abs() < 1e-14 && lead.re > 0.0);
        }
    }

    #[test]
    fn faces_are_sorted_within() {
        let mut rng = TensorRng::new(4);
        let s = t_eigenvalues(&rng.complex_normal(5, 5, 3), false).unwrap();
        for w in s.eigenvalues.windows(2).zip(s.face_index.windows(2)) {
            if w.1[0] == w.1[1] {
                assert_ne!(by_re_im(&w.0[0], &w.0[1]), std::cmp::Ordering::Greater);
            } else {
                assert!(w.1[0] < w.1[1]);
            }
        }
    }

    #[test]
    fn hermitian_spectrum_is_real() {
        let mut rng = TensorRng::new(5);
        let s = t_eigenvalues(&rng.hermitian(4, 5), false).unwrap();
        assert!(s.max_abs_imag() <= 1e-10);
    }

    #[test]
    fn matches_dense_bcirc_eigenvalues() {
        let mut rng = TensorRng::new(6);
        let a = rng.complex_normal(3, 3, 4);
        let s = t_eigenvalues(&a, false).unwrap();
        let dense = linalg::eigenvalues(a.bcirc().matrix());
        let m = matching::match_spectra(&s.eigenvalues, &dense, 1e-9);
        assert!(m.max_distance <= 1e-8 * a.norm(Norm::Two));
    }

    #[test]
    fn non_square_is_rejected() {
        let a = Tensor3::zeros(2, 3, 2);
        assert!(matches!(t_eigenvalues(&a, false), Err(TensorError::NonSquare { .. })));
        assert!(t_schur(&a).is_err());
    }

    #[test]
    fn generalized_with_identity_reduces_to_standard() {
        let mut rng = TensorRng::new(7);
        let a = rng.complex_normal(3, 3, 3);
        let g = generalized_t_eigenvalues(&a, &Tensor3::identity(3, 3)).unwrap();
        assert!(g.regularity.full_rank);
        assert_eq!(g.regularity.rank, 9);
        let s = t_eigenvalues(&a, false).unwrap();
        let fin = g.finite();
        assert_eq!(fin.face_index, s.face_index);
        let m = matching::match_spectra(&fin.eigenvalues, &s.eigenvalues, 1e-10);
        assert!(m.max_distance < 1e-10);
    }

    #[test]
    fn generalized_scalar_tubes() {
        let a = tube(&[3.0, 1.0, 0.5]);
        let b = tube(&[2.0, 0.0, 0.0]);
        let g = generalized_t_eigenvalues(&a, &b).unwrap();
        let fa = a.to_faces();
        for p in &g.pairs {
            let expected = fa.face(p.face)[(0, 0)] / c(2.0, 0.0);
            assert!((p.value().unwrap() - expected).norm() < 1e-14);
        }

        // b has a vanishing face: one infinite eigenvalue on that face
        let b = tube(&[1.0, 1.0]);
        let g = generalized_t_eigenvalues(&tube(&[2.0, 0.0]), &b).unwrap();
        assert_eq!(g.count(EigenKind::Infinite), 1);
        assert_eq!(g.pairs[1].face, 1);
        assert_eq!(g.regularity.rank, 1);
        assert!(!g.regularity.full_rank);

        // both vanish on face 1: singular pencil
        let g = generalized_t_eigenvalues(&tube(&[1.0, 1.0]), &b).unwrap();
        assert_eq!(g.count(EigenKind::Indeterminate), 1);
    }

    #[test]
    fn generalized_matches_dense_pencil() {
        let mut rng = TensorRng::new(8);
        let a = rng.complex_normal(2, 2, 2);
        let b = rng.complex_normal(2, 2, 2);
        let g = generalized_t_eigenvalues(&a, &b).unwrap();
        assert_eq!(g.count(EigenKind::Finite), 4);
        let ba = a.bcirc().into_matrix();
        let bb = b.bcirc().into_matrix();
        let dense = linalg::eigenvalues(&(bb.try_inverse().unwrap() * ba));
        let m = matching::match_spectra(&g.finite().eigenvalues, &dense, 1e-9);
        assert!(m.max_distance < 1e-8);
    }

    #[test]
    fn schur_reconstructs_and_carries_spectrum() {
        let mut rng = TensorRng::new(9);
        let a = rng.complex_normal(3, 3, 3);
        let s = t_schur(&a).unwrap();
        let qh = s.q.conj_transpose();
        assert!(qh.tprod(&s.q).unwrap().max_abs_diff(&Tensor3::identity(3, 3)) < 1e-10);
        let t = qh.tprod(&a).unwrap().tprod(&s.q).unwrap();
        assert!((&t - &s.t()).fro() <= 1e-9 * a.norm(Norm::Fro));
        let back = s.q.tprod(&s.t()).unwrap().tprod(&qh).unwrap();
        assert!((&back - &a).fro() <= 1e-9 * a.norm(Norm::Fro));
        for f in s.n_faces.faces() {
            for j in 0..3 {
                for i in j..3 {
                    assert_eq!(f[(i, j)], ZERO);
                }
            }
        }
        let diag: Vec<Complex64> = s
            .d_faces
            .faces()
            .iter()
            .flat_map(|f| f.diagonal().iter().copied().collect::<Vec<_>>())
            .collect();
        let spec = t_eigenvalues(&a, false).unwrap();
        assert!(matching::match_spectra(&diag, &spec.eigenvalues, 1e-9).max_distance < 1e-9);
    }

    #[test]
    fn schur_of_tubes_has_no_nilpotent_part() {
        let s = t_schur(&tube(&[1.0, -2.0, 0.5, 3.0])).unwrap();
        assert!(s.n.data().iter().all(|z| *z == ZERO));
    }

    #[test]
    fn f_diagonal_input_has_trivial_schur() {
        let mut rng = TensorRng::new(10);
        let d = rng.normal_diagonalizable(3, 3).d;
        let s = t_schur(&d).unwrap();
        assert!(s.n.fro() < 1e-12);
        assert!(s.d.max_abs_diff(&d) < 1e-12);
    }

    #[test]
    fn normal_tensors_diagonalize_unitarily() {
        let mut rng = TensorRng::new(11);
        let built = rng.normal_diagonalizable(3, 4);
        let (u, d) = f_diagonalize_normal(&built.tensor).unwrap();
        let uh = u.conj_transpose();
        assert!(u.tprod(&uh).unwrap().max_abs_diff(&Tensor3::identity(3, 4)) < 1e-10);
        let back = uh.tprod(&d).unwrap().tprod(&u).unwrap();
        assert!((&back - &built.tensor).fro() <= 1e-9 * built.tensor.norm(Norm::Fro).max(1.0));
        assert!(d.is_f_diagonal());
        for f in d.to_faces().faces() {
            for j in 0..3 {
                for i in 0..3 {
                    if i != j {
                        assert!(f[(i, j)].norm() < 1e-12);
                    }
                }
            }
        }
        let got = t_eigenvalues(&d, false).unwrap().eigenvalues;
        let want = t_eigenvalues(&built.d, false).unwrap().eigenvalues;
        assert!(matching::match_spectra(&got, &want, 1e-10).max_distance < 1e-10);
    }

    #[test]
    fn hermitian_diagonal_is_real() {
        let mut rng = TensorRng::new(12);
        let (_, d) = f_diagonalize_normal(&rng.hermitian(4, 3)).unwrap();
        for f in d.to_faces().faces() {
            assert!(f.diagonal().iter().all(|z| z.im.abs() < 1e-10));
        }
    }

    #[test]
    fn non_normal_reports_residual() {
        let mut a = Tensor3::zeros(2, 2, 1);
        a.set(0, 1, 0, c(1.0, 0.0));
        match f_diagonalize_normal(&a) {
            Err(TensorError::NotNormal { residual }) => assert!((residual - 2f64.sqrt()).abs() < 1e-14),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn diagonalizer_residual() {
        let mut rng = TensorRng::new(14);
        let d = rng.diagonalizable(3, 3, 0.3);
        assert!(f_diagonalizer_residual(&d.tensor, &d.p).unwrap() < 1e-10);
        let p = eigenvector_tensor(&d.tensor).unwrap();
        assert!(f_diagonalizer_residual(&d.tensor, &p).unwrap() < 1e-10);
        let a = rng.complex_normal(3, 3, 3);
        assert!(matches!(
            f_diagonalizer_residual(&a, &Tensor3::identity(3, 3)),
            Err(TensorError::NotFDiagonalizable { .. })
        ));
    }

    #[test]
    fn spectral_variation_examples() {
        let a = tube(&[1.0, 0.0]);
        assert_eq!(spectral_variation(&a, &a).unwrap(), 0.0);
        let eps = 1e-3;
        let b = tube(&[1.0, eps]);
        assert!((spectral_variation(&a, &b).unwrap() - eps).abs() < 1e-15);

        let mut rng = TensorRng::new(13);
        let a = rng.normal_tensor(3, 3);
        let e = rng.with_norm(3, 3, 3, Norm::Two, 0.05);
        let b = &a + &e;
        assert!(spectral_variation(&a, &b).unwrap() <= e.norm(Norm::Two) + 1e-12);
    }
}
