//! Property tests against the dense block-circulant oracle.

use num_complex::Complex64;
use proptest::prelude::*;
use tspectra::io::{tensor_from_str, tensor_to_string};
use tspectra::linalg::{self, CMat};
use tspectra::matching::hungarian_match;
use tspectra::ode::t_exp;
use tspectra::perturbation::{gershgorin_disks, gershgorin_violations, DiskMode};
use tspectra::pseudospectra::resolvent_quantity;
use tspectra::random::TensorRng;
use tspectra::spectral::{t_eigenvalues, t_schur};
use tspectra::transform::from_faces;
use tspectra::{Execution, Norm, Tensor3};

fn tensor(seed: u64, m: usize, p: usize, n: usize) -> Tensor3 {
    TensorRng::new(seed).complex_normal(m, p, n)
}

fn dims() -> impl Strategy<Value = (u64, usize, usize, usize)> {
    (any::<u64>(), 1usize..5, 1usize..5, 1usize..6)
}

fn square() -> impl Strategy<Value = (u64, usize, usize)> {
    (any::<u64>(), 1usize..5, 1usize..6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tprod_matches_block_circulant_product((seed, m, p, n) in dims(), q in 1usize..4) {
        let a = tensor(seed, m, p, n);
        let b = tensor(seed ^ 1, p, q, n);
        let c = a.tprod(&b).unwrap();
        let dense = a.bcirc().matrix() * b.unfold();
        prop_assert!(linalg::max_abs_diff(&c.unfold(), &dense) < 1e-12 * (1.0 + dense.norm()));
        prop_assert!(linalg::max_abs_diff(c.bcirc().matrix(), &(a.bcirc().matrix() * b.bcirc().matrix())) < 1e-12 * (1.0 + dense.norm()));
    }

    #[test]
    fn fold_inverts_unfold((seed, m, p, n) in dims()) {
        let a = tensor(seed, m, p, n);
        prop_assert_eq!(Tensor3::fold(&a.unfold(), n).unwrap(), a.clone());
        let back = from_faces(&a.to_faces());
        prop_assert!(back.max_abs_diff(&a) < 1e-13 * (1.0 + a.fro()));
    }

    #[test]
    fn conj_transpose_reverses_products((seed, m, p, n) in dims(), q in 1usize..4) {
        let a = tensor(seed, m, p, n);
        let b = tensor(seed ^ 2, p, q, n);
        let lhs = a.tprod(&b).unwrap().conj_transpose();
        let rhs = b.conj_transpose().tprod(&a.conj_transpose()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12 * (1.0 + lhs.fro()));
        prop_assert_eq!(a.conj_transpose().bcirc().into_matrix(), a.bcirc().matrix().adjoint());
    }

    #[test]
    fn norms_match_dense((seed, m, p, n) in dims()) {
        let a = tensor(seed, m, p, n);
        let dense = a.bcirc().into_matrix();
        for norm in [Norm::One, Norm::Two, Norm::Inf, Norm::Fro] {
            let want = linalg::matrix_norm(&dense, norm);
            prop_assert!((a.norm(norm) - want).abs() <= 1e-12 * want.max(1.0), "{norm}");
        }
    }

    #[test]
    fn spectrum_matches_dense_and_is_similarity_invariant((seed, m, n) in square()) {
        let a = tensor(seed, m, m, n);
        let spec = t_eigenvalues(&a, false).unwrap().eigenvalues;
        let scale = a.norm(Norm::Two).max(1.0);
        let dense = linalg::eigenvalues(a.bcirc().matrix());
        prop_assert!(hungarian_match(&spec, &dense).max_distance < 1e-9 * scale);

        let mut rng = TensorRng::new(seed ^ 3);
        let p = &Tensor3::identity(m, n) + &rng.complex_normal(m, m, n).scale(Complex64::new(0.2, 0.0));
        let Ok(pinv) = p.t_inverse() else { return Ok(()) };
        prop_assume!(p.cond(Norm::Two).unwrap() < 1e3);
        let similar = p.tprod(&a).unwrap().tprod(&pinv).unwrap();
        let moved = t_eigenvalues(&similar, false).unwrap().eigenvalues;
        prop_assert!(hungarian_match(&spec, &moved).max_distance < 1e-7 * scale);
    }

    #[test]
    fn eigenpairs_satisfy_the_eigen_equation((seed, m, n) in square()) {
        let a = tensor(seed, m, m, n);
        let spec = t_eigenvalues(&a, true).unwrap();
        let scale = a.norm(Norm::Two).max(1.0);
        for (lambda, x) in spec.eigenvalues.iter().zip(spec.eigenvectors.as_ref().unwrap()) {
            let r = &a.tprod(x).unwrap() - &x.scale(*lambda);
            prop_assert!(r.fro() < 1e-9 * scale, "residual {}", r.fro());
            prop_assert!((x.fro() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn t_schur_reconstructs((seed, m, n) in square()) {
        let a = tensor(seed, m, m, n);
        let s = t_schur(&a).unwrap();
        let back = s.q.tprod(&s.t()).unwrap().tprod(&s.q.conj_transpose()).unwrap();
        prop_assert!(back.max_abs_diff(&a) < 1e-12 * (1.0 + a.fro()));
        prop_assert!(s.d.is_f_diagonal());
    }

    #[test]
    fn resolvent_matches_dense_sigma_min((seed, m, n) in square(), re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let a = tensor(seed, m, m, n);
        let z = Complex64::new(re, im);
        let sigma = linalg::sigma_min(&(CMat::identity(m * n, m * n) * z - a.bcirc().matrix()));
        prop_assume!(sigma > 1e-8);
        let r = resolvent_quantity(&a, z, Norm::Two).unwrap();
        prop_assert!((1.0 / r - sigma).abs() <= 1e-10 * sigma);
    }

    #[test]
    fn gershgorin_covers_spectrum((seed, m, n) in square()) {
        let a = tensor(seed, m, m, n);
        for mode in [DiskMode::Raw, DiskMode::Schur] {
            let disks = gershgorin_disks(&a, mode).unwrap();
            prop_assert_eq!(gershgorin_violations(&a, &disks).unwrap(), 0);
        }
    }

    #[test]
    fn exponential_semigroup((seed, m, n) in square(), s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let a = tensor(seed, m, m, n).scale(Complex64::new(0.5, 0.0));
        let lhs = t_exp(&a, s).unwrap().tprod(&t_exp(&a, t).unwrap()).unwrap();
        let rhs = t_exp(&a, s + t).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-10 * rhs.fro().max(1.0));
    }

    #[test]
    fn tensor_text_round_trip((seed, m, p, n) in dims()) {
        let a = tensor(seed, m, p, n);
        prop_assert_eq!(tensor_from_str(&tensor_to_string(&a)).unwrap(), a);
    }

    #[test]
    fn execution_policy_does_not_change_results((seed, m, n) in square()) {
        let a = tensor(seed, m, m, n);
        let par = tspectra::spectral::t_eigenvalues_with(&a, true, Execution::Parallel).unwrap();
        let seq = tspectra::spectral::t_eigenvalues_with(&a, true, Execution::Sequential).unwrap();
        prop_assert_eq!(par.eigenvalues, seq.eigenvalues);
        prop_assert_eq!(par.eigenvectors, seq.eigenvectors);
    }
}
