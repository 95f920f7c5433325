//! Seeded generators for random tensors with prescribed structure.
//!
//! Everything is driven by a ChaCha8 stream, so identical seeds give
//! bit-identical tensors on every platform.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::exec::Execution;
use crate::linalg::{CMat, CVec, Norm};
use crate::tensor::Tensor3;
use crate::transform::FaceSet;

/// Seed for trial `index` of an ensemble rooted at `root` (SplitMix64 step).
pub fn trial_seed(root: u64, index: u64) -> u64 {
    let mut z = root.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `count` independent trials, trial `i` drawing from its own stream
/// seeded by `trial_seed(root, i)`. Results come back in trial order for
/// either execution policy.
pub fn trials<T, F>(count: usize, root: u64, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut TensorRng) -> T + Sync + Send,
{
    exec.map(count, |i| f(i, &mut TensorRng::for_trial(root, i as u64)))
}

/// An F-diagonalizable tensor together with its diagonalizer:
/// `P^-1 * A * P = D`.
#[derive(Debug, Clone)]
pub struct Diagonalizable {
    pub tensor: Tensor3,
    pub p: Tensor3,
    pub d: Tensor3,
}

pub struct TensorRng {
    rng: ChaCha8Rng,
}

impl TensorRng {
    pub fn new(seed: u64) -> Self {
        TensorRng {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn for_trial(root: u64, index: u64) -> Self {
        TensorRng::new(trial_seed(root, index))
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Standard complex normal: `E|z|^2 = 1`.
    pub fn normal_c(&mut self) -> Complex64 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Complex64::new(self.normal() * s, self.normal() * s)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        use rand::Rng;
        self.rng.random_range(lo..hi)
    }

    pub fn complex_normal(&mut self, m: usize, p: usize, n: usize) -> Tensor3 {
        Tensor3::from_fn(m, p, n, |_, _, _| self.normal_c())
    }

    pub fn real_normal(&mut self, m: usize, p: usize, n: usize) -> Tensor3 {
        Tensor3::from_fn(m, p, n, |_, _, _| Complex64::new(self.normal(), 0.0))
    }

    pub fn matrix(&mut self, rows: usize, cols: usize) -> CMat {
        CMat::from_fn(rows, cols, |_, _| self.normal_c())
    }

    /// Haar-distributed unitary matrix (QR of a Ginibre matrix with the
    /// phases of `R`'s diagonal absorbed into `Q`).
    pub fn unitary(&mut self, m: usize) -> CMat {
        let qr = self.matrix(m, m).qr();
        let (mut q, r) = qr.unpack();
        for j in 0..m {
            let d = r[(j, j)];
            let phase = if d.norm() > 0.0 {
                d / d.norm()
            } else {
                Complex64::new(1.0, 0.0)
            };
            let col = q.column(j) * phase;
            q.set_column(j, &col);
        }
        q
    }

    pub fn hermitian(&mut self, m: usize, n: usize) -> Tensor3 {
        let s = self.complex_normal(m, m, n);
        &(&s + &s.conj_transpose()) * 0.5
    }

    /// Random normal tensor: faces `U_i diag(lambda_i) U_i^H`.
    pub fn normal_tensor(&mut self, m: usize, n: usize) -> Tensor3 {
        let faces = (0..n)
            .map(|_| {
                let u = self.unitary(m);
                let d = CMat::from_diagonal(&CVec::from_fn(m, |_, _| self.normal_c() * 2.0));
                &u * d * u.adjoint()
            })
            .collect();
        FaceSet::new(faces).expect("consistent faces").to_tensor()
    }

    /// Normal tensor with its unitary diagonalizer: `P^-1 * A * P = D` with
    /// `P` unitary.
    pub fn normal_diagonalizable(&mut self, m: usize, n: usize) -> Diagonalizable {
        let mut ps = Vec::with_capacity(n);
        let mut ds = Vec::with_capacity(n);
        for _ in 0..n {
            ps.push(self.unitary(m));
            ds.push(CMat::from_diagonal(&CVec::from_fn(m, |_, _| self.normal_c() * 2.0)));
        }
        assemble(ps, ds)
    }

    /// F-diagonalizable tensor with a non-unitary diagonalizer
    /// `P_i = I + spread * G_i` per face.
    pub fn diagonalizable(&mut self, m: usize, n: usize, spread: f64) -> Diagonalizable {
        let mut ps = Vec::with_capacity(n);
        let mut ds = Vec::with_capacity(n);
        for _ in 0..n {
            loop {
                let p = CMat::identity(m, m) + self.matrix(m, m) * Complex64::new(spread, 0.0);
                if crate::linalg::cond(&p, Norm::Two) < 1e4 {
                    ps.push(p);
                    break;
                }
            }
            ds.push(CMat::from_diagonal(&CVec::from_fn(m, |_, _| self.normal_c() * 2.0)));
        }
        assemble(ps, ds)
    }

    /// Tensor whose faces are unitarily similar to Jordan matrices with the
    /// given block sizes (summing to `m`) and random eigenvalues.
    pub fn jordan(&mut self, blocks: &[usize], n: usize) -> Tensor3 {
        let m: usize = blocks.iter().sum();
        let faces = (0..n)
            .map(|_| {
                let mut j = CMat::zeros(m, m);
                let mut start = 0;
                for &b in blocks {
                    let lambda = self.normal_c();
                    for r in start..start + b {
                        j[(r, r)] = lambda;
                        if r + 1 < start + b {
                            j[(r, r + 1)] = Complex64::new(1.0, 0.0);
                        }
                    }
                    start += b;
                }
                let u = self.unitary(m);
                &u * j * u.adjoint()
            })
            .collect();
        FaceSet::new(faces).expect("consistent faces").to_tensor()
    }

    /// Random tensor rescaled to the requested `p`-norm.
    pub fn with_norm(&mut self, m: usize, p: usize, n: usize, norm: Norm, target: f64) -> Tensor3 {
        let t = self.complex_normal(m, p, n);
        let cur = t.norm(norm);
        if cur == 0.0 {
            t
        } else {
            &t * (target / cur)
        }
    }
}

fn assemble(ps: Vec<CMat>, ds: Vec<CMat>) -> Diagonalizable {
    let a_faces: Vec<CMat> = ps
        .iter()
        .zip(&ds)
        .map(|(p, d)| p * d * p.clone().try_inverse().expect("well-conditioned P"))
        .collect();
    let to_t = |f: Vec<CMat>| FaceSet::new(f).expect("consistent faces").to_tensor();
    Diagonalizable {
        tensor: to_t(a_faces),
        p: to_t(ps),
        d: to_t(ds),
    }
}
