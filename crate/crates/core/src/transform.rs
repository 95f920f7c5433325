//! DFT block diagonalization of `bcirc`.
//!
//! For `t` of size `m x p x n`,
//! `(F_n ⊗ I_m) bcirc(t) (F_n^H ⊗ I_p) = blockdiag(face_0, ..., face_{n-1})`
//! with the unitary DFT matrix `F_n[j,k] = w^(jk) / sqrt(n)`,
//! `w = exp(-2 pi i / n)`. Face `j` is the unnormalized sum
//! `sum_k A_k w^(jk)`, i.e. the DFT of the tubes along the third mode.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Result, TensorError};
use crate::exec::Execution;
use crate::linalg::{self, CMat, ZERO};
use crate::tensor::Tensor3;

/// How the tube DFTs are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DftMethod {
    /// FFT for composite lengths, direct summation otherwise.
    Auto,
    Fft,
    Direct,
}

/// The `n` transformed faces of a tensor, in DFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceSet {
    m: usize,
    p: usize,
    faces: Vec<CMat>,
}

impl FaceSet {
    pub fn new(faces: Vec<CMat>) -> Result<Self> {
        let first = faces.first().ok_or_else(|| TensorError::DimensionMismatch {
            context: "face set",
            expected: "at least one face".into(),
            actual: "0 faces".into(),
        })?;
        let (m, p) = first.shape();
        if m == 0 || p == 0 {
            return Err(TensorError::DimensionMismatch {
                context: "face set",
                expected: "non-empty faces".into(),
                actual: format!("{m}x{p}"),
            });
        }
        if let Some((i, f)) = faces.iter().enumerate().find(|(_, f)| f.shape() != (m, p)) {
            return Err(TensorError::DimensionMismatch {
                context: "face set",
                expected: format!("{m}x{p} faces"),
                actual: format!("face {i} is {}x{}", f.nrows(), f.ncols()),
            });
        }
        Ok(FaceSet { m, p, faces })
    }

    pub fn zeros(m: usize, p: usize, n: usize) -> Self {
        FaceSet {
            m,
            p,
            faces: vec![CMat::zeros(m, p); n],
        }
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.m, self.p, self.faces.len())
    }

    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn faces(&self) -> &[CMat] {
        &self.faces
    }

    pub fn face(&self, i: usize) -> &CMat {
        &self.faces[i]
    }

    pub fn face_mut(&mut self, i: usize) -> &mut CMat {
        &mut self.faces[i]
    }

    pub fn into_faces(self) -> Vec<CMat> {
        self.faces
    }

    pub fn block_diag(&self) -> CMat {
        linalg::block_diag(&self.faces)
    }

    pub fn to_tensor(&self) -> Tensor3 {
        from_faces_with(self, DftMethod::Auto)
    }

    /// Applies `op` to every face independently; errors are tagged with the
    /// index of the failing face.
    pub fn face_map<F>(&self, op: F) -> Result<FaceSet>
    where
        F: Fn(usize, &CMat) -> Result<CMat> + Sync + Send,
    {
        self.face_map_with(Execution::default(), op)
    }

    pub fn face_map_with<F>(&self, exec: Execution, op: F) -> Result<FaceSet>
    where
        F: Fn(usize, &CMat) -> Result<CMat> + Sync + Send,
    {
        let faces = exec.try_map(self.faces.len(), |i| {
            op(i, &self.faces[i]).map_err(|e| match e {
                tagged @ TensorError::Face { .. } => tagged,
                other => TensorError::Face {
                    face: i,
                    source: Box::new(other),
                },
            })
        })?;
        FaceSet::new(faces)
    }

    /// Pairs up faces of two sets (same `n`) under `op`.
    pub fn zip_map<F>(&self, other: &FaceSet, op: F) -> Result<FaceSet>
    where
        F: Fn(usize, &CMat, &CMat) -> Result<CMat> + Sync + Send,
    {
        if self.len() != other.len() {
            return Err(TensorError::DimensionMismatch {
                context: "face zip",
                expected: format!("{} faces", self.len()),
                actual: format!("{} faces", other.len()),
            });
        }
        self.face_map(|i, f| op(i, f, &other.faces[i]))
    }
}

pub fn to_faces(t: &Tensor3) -> FaceSet {
    to_faces_with(t, DftMethod::Auto)
}

pub fn to_faces_with(t: &Tensor3, method: DftMethod) -> FaceSet {
    let (m, p, n) = t.shape();
    let tubes = tube_dft(t.data(), m * p, n, false, method);
    let len = m * p;
    let faces = (0..n)
        .map(|j| CMat::from_column_slice(m, p, &tubes[j * len..(j + 1) * len]))
        .collect();
    FaceSet { m, p, faces }
}

pub fn from_faces(f: &FaceSet) -> Tensor3 {
    from_faces_with(f, DftMethod::Auto)
}

pub fn from_faces_with(f: &FaceSet, method: DftMethod) -> Tensor3 {
    let (m, p, n) = f.shape();
    let mut flat = Vec::with_capacity(m * p * n);
    for face in &f.faces {
        flat.extend(face.iter().copied());
    }
    let data = tube_dft(&flat, m * p, n, true, method);
    Tensor3::from_data(m, p, n, data).expect("face set dimensions are consistent")
}

/// The unitary Kronecker factor `F_n ⊗ I_m` that block diagonalizes `bcirc`.
pub fn dft_kron_factor(n: usize, m: usize) -> CMat {
    linalg::kron(&linalg::dft_matrix(n, true), &CMat::identity(m, m))
}

fn is_composite(n: usize) -> bool {
    n >= 4 && (2..).take_while(|d| d * d <= n).any(|d| n.is_multiple_of(d))
}

/// DFT (or inverse DFT, scaled by `1/n`) along the slice index of data laid
/// out as `n` consecutive blocks of `len` entries.
fn tube_dft(data: &[Complex64], len: usize, n: usize, inverse: bool, method: DftMethod) -> Vec<Complex64> {
    if n == 1 {
        return data.to_vec();
    }
    let use_fft = match method {
        DftMethod::Auto => is_composite(n),
        DftMethod::Fft => true,
        DftMethod::Direct => false,
    };
    let scale = if inverse { 1.0 / n as f64 } else { 1.0 };
    let mut out = vec![ZERO; data.len()];
    if use_fft {
        let mut planner = FftPlanner::new();
        let fft = if inverse {
            planner.plan_fft_inverse(n)
        } else {
            planner.plan_fft_forward(n)
        };
        // gather tubes contiguously: tube e occupies [e*n, (e+1)*n)
        let mut buf: Vec<Complex64> = (0..len)
            .flat_map(|e| (0..n).map(move |k| (e, k)))
            .map(|(e, k)| data[k * len + e])
            .collect();
        fft.process(&mut buf);
        for e in 0..len {
            for k in 0..n {
                out[k * len + e] = buf[e * n + k] * scale;
            }
        }
    } else {
        let roots: Vec<Complex64> = (0..n)
            .map(|r| {
                let w = linalg::root_of_unity(n, r);
                if inverse {
                    w.conj()
                } else {
                    w
                }
            })
            .collect();
        for j in 0..n {
            let dst = &mut out[j * len..(j + 1) * len];
            for k in 0..n {
                let w = roots[(j * k) % n];
                let src = &data[k * len..(k + 1) * len];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += s * w;
                }
            }
            for d in dst.iter_mut() {
                *d *= scale;
            }
        }
    }
    out
}
