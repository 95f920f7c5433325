//! Gershgorin disks, Bauer-Fike bounds (diagonalizable and Schur-based) and
//! Kahan regions, each paired with a check against eigensolves of the
//! perturbed tensor.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Result, TensorError};
use crate::linalg::{self, CMat, Norm, ZERO};
use crate::matching;
use crate::spectral;
use crate::tensor::Tensor3;
use crate::transform;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DiskMode {
    /// Transformation `X = I`: disks from the faces themselves.
    Raw,
    /// `X` from the per-face Schur vectors: centers are the eigenvalues and
    /// radii come from the strictly upper triangular part.
    Schur,
}

impl std::str::FromStr for DiskMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "raw" => Ok(DiskMode::Raw),
            "schur" => Ok(DiskMode::Schur),
            other => Err(format!("unknown disk mode {other:?} (expected raw or schur)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiskSet {
    pub centers: Vec<Complex64>,
    pub radii: Vec<f64>,
    pub face_index: Vec<usize>,
    pub mode: DiskMode,
}

impl DiskSet {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Whether `z` lies in some disk enlarged by `slack`.
    pub fn contains(&self, z: Complex64, slack: f64) -> bool {
        self.centers
            .iter()
            .zip(&self.radii)
            .any(|(c, r)| (z - c).norm() <= r + slack)
    }
}

fn row_sums_off_diagonal(f: &CMat) -> impl Iterator<Item = f64> + '_ {
    (0..f.nrows()).map(move |i| (0..f.ncols()).filter(|&j| j != i).map(|j| f[(i, j)].norm()).sum())
}

pub fn gershgorin_disks(a: &Tensor3, mode: DiskMode) -> Result<DiskSet> {
    a.require_square("gershgorin_disks")?;
    let faces = a.to_faces();
    let mut set = DiskSet {
        centers: Vec::new(),
        radii: Vec::new(),
        face_index: Vec::new(),
        mode,
    };
    for (i, f) in faces.faces().iter().enumerate() {
        let t = match mode {
            DiskMode::Raw => f.clone(),
            DiskMode::Schur => linalg::schur(f).1,
        };
        set.centers.extend(t.diagonal().iter().copied());
        set.radii.extend(row_sums_off_diagonal(&t));
        set.face_index.extend(std::iter::repeat_n(i, t.nrows()));
    }
    Ok(set)
}

/// Number of T-eigenvalues of `a` outside the union of its disks (with a
/// rounding allowance of `1e-10 * max(1, ||A||_2)`).
pub fn gershgorin_violations(a: &Tensor3, disks: &DiskSet) -> Result<usize> {
    let slack = 1e-10 * a.norm(Norm::Two).max(1.0);
    let spec = spectral::t_eigenvalues(a, false)?;
    Ok(spec.eigenvalues.iter().filter(|&&l| !disks.contains(l, slack)).count())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub norm: Norm,
    pub bound: f64,
    /// `max_mu min_lambda |lambda - mu|` over the perturbed spectrum.
    pub observed: f64,
    pub holds: bool,
    pub detail: BTreeMap<String, f64>,
}

/// Absolute allowance for rounding in the `holds` verdicts.
pub fn holds_slack(a: &Tensor3) -> f64 {
    1e-9 * a.norm(Norm::Two).max(1.0)
}

fn report(a: &Tensor3, norm: Norm, bound: f64, observed: f64, detail: BTreeMap<String, f64>) -> BoundReport {
    BoundReport {
        norm,
        bound,
        observed,
        holds: observed <= bound + holds_slack(a),
        detail,
    }
}

fn same_shape(a: &Tensor3, b: &Tensor3, context: &'static str) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(TensorError::DimensionMismatch {
            context,
            expected: format!("{:?}", a.shape()),
            actual: format!("{:?}", b.shape()),
        });
    }
    Ok(())
}

/// Spectral deviation of `a + delta` from `a`, plus the largest distance in
/// an optimal one-to-one matching (reported for reference only).
fn observed_deviation(a: &Tensor3, delta: &Tensor3) -> Result<(f64, f64)> {
    let la = spectral::t_eigenvalues(a, false)?.eigenvalues;
    let lb = spectral::t_eigenvalues(&(a + delta), false)?.eigenvalues;
    let tol = 1e-12 * a.norm(Norm::Two).max(1.0);
    Ok((
        matching::spectral_variation(&la, &lb),
        matching::match_spectra(&la, &lb, tol).max_distance,
    ))
}

fn dft_cache() -> &'static Mutex<HashMap<(usize, usize, Norm), f64>> {
    type Cache = Mutex<HashMap<(usize, usize, Norm), f64>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// `kappa_p(F_n (x) I_m)` for the unitary DFT; exactly 1 for `p = 2`,
/// otherwise computed on the materialized matrix and cached.
pub fn dft_factor_condition(n: usize, m: usize, p: Norm) -> f64 {
    if p == Norm::Two {
        return 1.0;
    }
    if let Some(&k) = dft_cache().lock().expect("cache lock").get(&(n, m, p)) {
        return k;
    }
    let f = transform::dft_kron_factor(n, m);
    let k = linalg::matrix_norm(&f, p) * linalg::matrix_norm(&f.adjoint(), p);
    dft_cache().lock().expect("cache lock").insert((n, m, p), k);
    k
}

/// `kappa_p(P) ||delta||_p` for `p` in {2, F}; for `p` in {1, inf} the
/// DFT factor's condition number multiplies in.
pub fn bauer_fike_bound(a: &Tensor3, p: &Tensor3, delta: &Tensor3, norm: Norm) -> Result<BoundReport> {
    same_shape(a, delta, "bauer_fike_bound")?;
    let residual = spectral::f_diagonalizer_residual(a, p)?;
    let (m, _, n) = a.shape();
    let kappa_p = p.cond(norm)?;
    let kappa_f = dft_factor_condition(n, m, norm);
    let delta_norm = delta.norm(norm);
    let bound = kappa_p * kappa_f * delta_norm;
    let (observed, matched) = observed_deviation(a, delta)?;
    let detail = BTreeMap::from([
        ("kappa_p".to_string(), kappa_p),
        ("kappa_dft".to_string(), kappa_f),
        ("delta_norm".to_string(), delta_norm),
        ("diagonalization_residual".to_string(), residual),
        ("matched_deviation".to_string(), matched),
    ]);
    Ok(report(a, norm, bound, observed, detail))
}

/// Entries of the strictly upper Schur parts at or below this fraction of
/// `max(1, ||A||_2)` are treated as zero when locating the nilpotent part.
pub const NILPOTENT_RTOL: f64 = 1e-12;

/// Smallest `q >= 1` with `|N|^q = 0`, from the sparsity pattern of `N`.
pub fn nilpotency_index(pattern: &[Vec<bool>]) -> usize {
    let m = pattern.len();
    let mut power: Vec<Vec<bool>> = pattern.to_vec();
    for q in 1..=m + 1 {
        if power.iter().all(|row| row.iter().all(|&x| !x)) {
            return q;
        }
        power = (0..m)
            .map(|i| (0..m).map(|j| (0..m).any(|k| power[i][k] && pattern[k][j])).collect())
            .collect();
    }
    m + 1
}

/// Schur-based bound `max(theta, theta^(1/q))` for any square tensor, with
/// `theta = ||delta||_p sum_{k<q} ||N||_p^k` for `p` in {2, F}. For `p` in
/// {1, inf} the sum uses `||N||_2` and is scaled by `kappa_p(Q)
/// kappa_p(F_n (x) I_m)`; the report flags that mix with `mixed_norm = 1`.
pub fn generalized_bf_bound(a: &Tensor3, delta: &Tensor3, norm: Norm) -> Result<BoundReport> {
    same_shape(a, delta, "generalized_bf_bound")?;
    let schur = spectral::t_schur(a)?;
    let (m, _, n) = a.shape();
    let cutoff = NILPOTENT_RTOL * a.norm(Norm::Two).max(1.0);
    let mut q = 1;
    let mut n_faces = Vec::with_capacity(n);
    for f in schur.n_faces.faces() {
        let cleaned = f.map(|z| if z.norm() <= cutoff { ZERO } else { z });
        let pattern: Vec<Vec<bool>> = (0..m)
            .map(|i| (0..m).map(|j| cleaned[(i, j)] != ZERO).collect())
            .collect();
        q = q.max(nilpotency_index(&pattern));
        n_faces.push(cleaned);
    }
    let mixed = matches!(norm, Norm::One | Norm::Inf);
    let n_norm_kind = if mixed { Norm::Two } else { norm };
    let n_norm = match n_norm_kind {
        Norm::Fro => n_faces.iter().map(|f| linalg::norm_fro(f).powi(2)).sum::<f64>().sqrt(),
        p => n_faces.iter().map(|f| linalg::matrix_norm(f, p)).fold(0.0, f64::max),
    };
    let series: f64 = (0..q).map(|k| n_norm.powi(k as i32)).sum();
    let delta_norm = delta.norm(norm);
    let (kappa_q, kappa_f) = if mixed {
        (schur.q.cond(norm)?, dft_factor_condition(n, m, norm))
    } else {
        (1.0, 1.0)
    };
    let theta = delta_norm * kappa_q * kappa_f * series;
    let bound = theta.max(theta.powf(1.0 / q as f64));
    let (observed, matched) = observed_deviation(a, delta)?;
    let detail = BTreeMap::from([
        ("q".to_string(), q as f64),
        ("theta".to_string(), theta),
        ("n_norm".to_string(), n_norm),
        ("delta_norm".to_string(), delta_norm),
        ("kappa_q".to_string(), kappa_q),
        ("kappa_dft".to_string(), kappa_f),
        ("mixed_norm".to_string(), if mixed { 1.0 } else { 0.0 }),
        ("matched_deviation".to_string(), matched),
    ]);
    Ok(report(a, norm, bound, observed, detail))
}

/// `sigma_k`: the part of the disk of radius `radius` about `center` with
/// `|Im z| <= imag_bound`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KahanRegion {
    pub center: f64,
    pub radius: f64,
    pub imag_bound: f64,
}

impl KahanRegion {
    pub fn contains(&self, z: Complex64, slack: f64) -> bool {
        (z - self.center).norm() <= self.radius + slack && z.im.abs() <= self.imag_bound + slack
    }
}

/// Regions around the (non-increasing) T-eigenvalues of Hermitian `a` that
/// contain the spectrum of `a + e`. The report's bound is `||e||_2`, the
/// observed value is the spectral deviation, and `holds` requires every
/// perturbed eigenvalue to fall inside some region.
pub fn kahan_regions(a: &Tensor3, e: &Tensor3) -> Result<(Vec<KahanRegion>, BoundReport)> {
    same_shape(a, e, "kahan_regions")?;
    let residual = a.hermitian_residual()?;
    if !a.is_hermitian()? {
        return Err(TensorError::NotHermitian { residual });
    }
    let mut lambdas: Vec<f64> = spectral::t_eigenvalues(a, false)?
        .eigenvalues
        .iter()
        .map(|z| z.re)
        .collect();
    lambdas.sort_by(|x, y| y.total_cmp(x));
    let e_norm = e.norm(Norm::Two);
    let skew = (e - &e.conj_transpose()).scale(Complex64::new(0.0, -0.5));
    let ey_norm = skew.norm(Norm::Two);
    let regions: Vec<KahanRegion> = lambdas
        .iter()
        .map(|&center| KahanRegion {
            center,
            radius: e_norm,
            imag_bound: ey_norm,
        })
        .collect();

    let perturbed = spectral::t_eigenvalues(&(a + e), false)?.eigenvalues;
    let slack = holds_slack(a);
    let outside = perturbed
        .iter()
        .filter(|&&mu| !regions.iter().any(|r| r.contains(mu, slack)))
        .count();
    let max_imag = perturbed.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let reference: Vec<Complex64> = lambdas.iter().map(|&l| Complex64::new(l, 0.0)).collect();
    let observed = matching::spectral_variation(&reference, &perturbed);
    let detail = BTreeMap::from([
        ("e_norm".to_string(), e_norm),
        ("ey_norm".to_string(), ey_norm),
        ("max_abs_imag".to_string(), max_imag),
        ("outside_regions".to_string(), outside as f64),
        ("hermitian_residual".to_string(), residual),
    ]);
    let mut rep = report(a, Norm::Two, e_norm, observed, detail);
    rep.holds = outside == 0;
    Ok((regions, rep))
}
