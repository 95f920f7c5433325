//! Epsilon-pseudospectra: the union over faces of the matrix pseudospectra
//! of the transformed faces.
//!
//! The scalar field stored on a grid is `g(z) = 1 / max_i ||(zI - A_i)^-1||_p`.
//! For `p = 2` this is `min_i sigma_min(zI - A_i)` and no inverse is formed.
//! A point is in `Lambda_eps(A)` exactly when `g(z) <= eps`.

use std::collections::VecDeque;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TensorError};
use crate::exec::Execution;
use crate::linalg::{self, CMat, CVec, Norm, ZERO};
use crate::spectral;
use crate::tensor::Tensor3;

/// Cap on the eigenvector condition estimate used to pad automatic regions.
const KAPPA_CAP: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Region {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Region> {
        let r = Region {
            re_min,
            re_max,
            im_min,
            im_max,
        };
        r.validate()?;
        Ok(r)
    }

    /// Square region of half-width `radius` about `center`.
    pub fn around(center: Complex64, radius: f64) -> Result<Region> {
        Region::new(
            center.re - radius,
            center.re + radius,
            center.im - radius,
            center.im + radius,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.re_min, self.re_max, self.im_min, self.im_max]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(TensorError::InvalidRegion("bounds must be finite".into()));
        }
        if self.re_min >= self.re_max || self.im_min >= self.im_max {
            return Err(TensorError::InvalidRegion(format!(
                "empty region [{}, {}] x [{}, {}]",
                self.re_min, self.re_max, self.im_min, self.im_max
            )));
        }
        Ok(())
    }

    pub fn contains(&self, z: Complex64) -> bool {
        (self.re_min..=self.re_max).contains(&z.re) && (self.im_min..=self.im_max).contains(&z.im)
    }

    /// Image of the region under `z -> a z + b` (its bounding box).
    pub fn affine(&self, a: Complex64, b: Complex64) -> Region {
        let corners = [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_min, self.im_max),
            Complex64::new(self.re_max, self.im_max),
        ]
        .map(|z| a * z + b);
        let fold =
            |f: fn(&Complex64) -> f64, init: f64, pick: fn(f64, f64) -> f64| corners.iter().map(f).fold(init, pick);
        Region {
            re_min: fold(|z| z.re, f64::INFINITY, f64::min),
            re_max: fold(|z| z.re, f64::NEG_INFINITY, f64::max),
            im_min: fold(|z| z.im, f64::INFINITY, f64::min),
            im_max: fold(|z| z.im, f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Face data prepared once for repeated evaluation of `g(z)`.
#[derive(Debug, Clone)]
pub struct PseudoEvaluator {
    faces: Vec<CMat>,
    m: usize,
    norm: Norm,
    scale: f64,
}

impl PseudoEvaluator {
    pub fn new(a: &Tensor3, p: Norm) -> Result<Self> {
        a.require_square("pseudospectra")?;
        if p == Norm::Fro {
            return Err(TensorError::UnsupportedNorm("Frobenius"));
        }
        let faces = a.to_faces().into_faces();
        let scale = faces.iter().map(linalg::norm_2).fold(0.0, f64::max);
        Ok(PseudoEvaluator {
            faces,
            m: a.rows(),
            norm: p,
            scale,
        })
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    fn shifted(&self, i: usize, z: Complex64) -> CMat {
        let mut s = -self.faces[i].clone();
        for k in 0..self.m {
            s[(k, k)] += z;
        }
        s
    }

    /// Values at or below this are rounding noise around a singular face.
    fn floor(&self, z: Complex64) -> f64 {
        self.m as f64 * f64::EPSILON * self.scale.max(z.norm()).max(1.0)
    }

    /// `1 / ||(zI - A_i)^-1||_p` for one face; zero when that face is
    /// singular at `z`.
    pub fn face_value(&self, i: usize, z: Complex64) -> f64 {
        let s = self.shifted(i, z);
        let floor = self.floor(z);
        let v = match self.norm {
            Norm::Two => linalg::sigma_min(&s),
            p => match s.clone().try_inverse() {
                Some(inv) => {
                    let inv_norm = linalg::matrix_norm(&inv, p);
                    let cond = inv_norm * linalg::matrix_norm(&s, p);
                    if !inv_norm.is_finite() || cond * self.m as f64 * f64::EPSILON >= 1.0 {
                        0.0
                    } else {
                        1.0 / inv_norm
                    }
                }
                None => 0.0,
            },
        };
        if v <= floor {
            0.0
        } else {
            v
        }
    }

    /// `g(z)`: the minimum of [`PseudoEvaluator::face_value`] over faces.
    pub fn value(&self, z: Complex64) -> f64 {
        (0..self.faces.len())
            .map(|i| self.face_value(i, z))
            .fold(f64::INFINITY, f64::min)
    }

    /// `max_i ||(zI - A_i)^-1||_p`, infinite when some face is singular.
    pub fn resolvent(&self, z: Complex64) -> f64 {
        let g = self.value(z);
        if g == 0.0 {
            f64::INFINITY
        } else {
            1.0 / g
        }
    }
}

pub fn resolvent_quantity(a: &Tensor3, z: Complex64, p: Norm) -> Result<f64> {
    Ok(PseudoEvaluator::new(a, p)?.resolvent(z))
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(TensorError::InvalidEpsilon(eps))
    }
}

/// `z in Lambda_eps(A)`, i.e. the resolvent norm is at least `1 / eps`.
pub fn membership(a: &Tensor3, z: Complex64, eps: f64, p: Norm) -> Result<bool> {
    check_eps(eps)?;
    Ok(PseudoEvaluator::new(a, p)?.value(z) <= eps)
}

/// Sampled `g(z)` on a uniform `nx x ny` grid; row-major with the imaginary
/// index outer: `values[j * nx + i]` belongs to `point(i, j)`. A singular
/// point is stored as 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoGrid {
    pub region: Region,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub norm: Norm,
}

impl PseudoGrid {
    pub fn re(&self, i: usize) -> f64 {
        grid_coord(self.region.re_min, self.region.re_max, self.nx, i)
    }

    pub fn im(&self, j: usize) -> f64 {
        grid_coord(self.region.im_min, self.region.im_max, self.ny, j)
    }

    pub fn point(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.re(i), self.im(j))
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    pub fn cell(&self) -> (f64, f64) {
        (
            (self.region.re_max - self.region.re_min) / (self.nx - 1) as f64,
            (self.region.im_max - self.region.im_min) / (self.ny - 1) as f64,
        )
    }

    pub fn is_member(&self, i: usize, j: usize, eps: f64) -> bool {
        self.value(i, j) <= eps
    }

    /// Membership mask at level `eps`, in the same order as `values`.
    pub fn mask(&self, eps: f64) -> Vec<bool> {
        self.values.iter().map(|&v| v <= eps).collect()
    }

    pub fn member_count(&self, eps: f64) -> usize {
        self.values.iter().filter(|&&v| v <= eps).count()
    }

    /// Grid index nearest to `z`, if `z` lies in the region.
    pub fn nearest(&self, z: Complex64) -> Option<(usize, usize)> {
        if !self.region.contains(z) {
            return None;
        }
        let (dx, dy) = self.cell();
        let i = ((z.re - self.region.re_min) / dx).round() as usize;
        let j = ((z.im - self.region.im_min) / dy).round() as usize;
        Some((i.min(self.nx - 1), j.min(self.ny - 1)))
    }

    /// True when some 8-neighbour of `(i, j)` has the opposite membership.
    pub fn on_boundary(&self, i: usize, j: usize, eps: f64) -> bool {
        let here = self.is_member(i, j, eps);
        neighbours8(i, j, self.nx, self.ny).any(|(a, b)| self.is_member(a, b, eps) != here)
    }
}

fn grid_coord(lo: f64, hi: f64, count: usize, k: usize) -> f64 {
    if k + 1 == count {
        hi
    } else {
        lo + (hi - lo) * k as f64 / (count - 1) as f64
    }
}

fn neighbours8(i: usize, j: usize, nx: usize, ny: usize) -> impl Iterator<Item = (usize, usize)> {
    (-1i64..=1)
        .flat_map(|dj| (-1i64..=1).map(move |di| (di, dj)))
        .filter(|&(di, dj)| di != 0 || dj != 0)
        .filter_map(move |(di, dj)| {
            let (a, b) = (i as i64 + di, j as i64 + dj);
            (a >= 0 && b >= 0 && (a as usize) < nx && (b as usize) < ny).then_some((a as usize, b as usize))
        })
}

fn check_resolution(nx: usize, ny: usize) -> Result<()> {
    if nx < 2 || ny < 2 {
        return Err(TensorError::InvalidRegion(format!(
            "grid must be at least 2x2, got {nx}x{ny}"
        )));
    }
    Ok(())
}

pub fn pseudo_grid(a: &Tensor3, region: Region, nx: usize, ny: usize, epsilons: &[f64], p: Norm) -> Result<PseudoGrid> {
    pseudo_grid_with(a, region, nx, ny, epsilons, p, Execution::default())
}

pub fn pseudo_grid_with(
    a: &Tensor3,
    region: Region,
    nx: usize,
    ny: usize,
    epsilons: &[f64],
    p: Norm,
    exec: Execution,
) -> Result<PseudoGrid> {
    region.validate()?;
    check_resolution(nx, ny)?;
    for &e in epsilons {
        check_eps(e)?;
    }
    let eval = PseudoEvaluator::new(a, p)?;
    let mut grid = PseudoGrid {
        region,
        nx,
        ny,
        values: Vec::new(),
        epsilons: epsilons.to_vec(),
        norm: p,
    };
    grid.values = exec.map(nx * ny, |k| eval.value(grid.point(k % nx, k / nx)));
    Ok(grid)
}

/// Bounding box of the spectrum padded by `1.5 * eps_max * kappa`, where
/// `kappa` is the largest face eigenvector condition number (capped), then
/// clipped to the disk `|z| <= ||A||_2 + eps_max` that contains every
/// pseudospectrum.
pub fn auto_region(a: &Tensor3, eps_max: f64) -> Result<Region> {
    check_eps(eps_max)?;
    a.require_square("auto_region")?;
    let faces = a.to_faces();
    let mut kappa: f64 = 1.0;
    let mut values = Vec::new();
    for f in faces.faces() {
        let (q, t) = linalg::schur(f);
        values.extend(t.diagonal().iter().copied());
        let v = q * linalg::triangular_eigenvectors(&t);
        kappa = kappa.max(linalg::cond(&v, Norm::Two).min(KAPPA_CAP));
    }
    if kappa.is_nan() {
        kappa = KAPPA_CAP;
    }
    let pad = 1.5 * eps_max * kappa;
    let lo_re = values.iter().map(|z| z.re).fold(f64::INFINITY, f64::min) - pad;
    let hi_re = values.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max) + pad;
    let lo_im = values.iter().map(|z| z.im).fold(f64::INFINITY, f64::min) - pad;
    let hi_im = values.iter().map(|z| z.im).fold(f64::NEG_INFINITY, f64::max) + pad;
    let r = a.norm(Norm::Two) + eps_max;
    Region::new(lo_re.max(-r), hi_re.min(r), lo_im.max(-r), hi_im.min(r))
}

/// Minimal-norm perturbation of `blockdiag(faces)` that makes `z` an
/// eigenvalue: `E = -sigma u v^H` on the face block with the smallest
/// `sigma_min(A_i - zI)`.
#[derive(Debug, Clone)]
pub struct Witness {
    pub e: CMat,
    pub norm: f64,
    pub face: usize,
    /// Unit vector with `(blockdiag(faces) + E - zI) v = 0`.
    pub vector: CVec,
}

pub fn perturbation_witness(a: &Tensor3, z: Complex64) -> Result<Witness> {
    let eval = PseudoEvaluator::new(a, Norm::Two)?;
    let (m, n) = (eval.m, eval.faces.len());
    let (face, sigma, u, v) = (0..n)
        .map(|i| {
            let (s, u, v) = linalg::min_singular_triplet(&(&eval.faces[i] - CMat::identity(m, m) * z));
            (i, s, u, v)
        })
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("at least one face");
    let mut e = CMat::zeros(m * n, m * n);
    let mut vector = CVec::zeros(m * n);
    vector.rows_mut(face * m, m).copy_from(&v);
    let norm = if sigma <= eval.floor(z) { 0.0 } else { sigma };
    if norm > 0.0 {
        let block = -(&u * v.adjoint()) * Complex64::new(sigma, 0.0);
        e.view_mut((face * m, face * m), (m, m)).copy_from(&block);
    }
    Ok(Witness { e, norm, face, vector })
}

/// `min ||(A - zI) * X||_F` over `m x 1 x n` tensors with unit unfolding,
/// with the minimizer. The minimizer lives on a single face, so the value is
/// the smallest face `sigma_min(A_i - zI)`.
pub fn residual_witness(a: &Tensor3, z: Complex64) -> Result<(f64, Tensor3)> {
    let w = perturbation_witness(a, z)?;
    let m = a.rows();
    let n = a.slices();
    let mut faces = crate::transform::FaceSet::zeros(m, 1, n);
    faces
        .face_mut(w.face)
        .set_column(0, &w.vector.rows(w.face * m, m).into_owned());
    let x = faces.to_tensor();
    let x = x.scale(Complex64::new(1.0 / x.fro(), 0.0));
    let ax = a.tprod(&x)?;
    let r = &ax - &x.scale(z);
    Ok((r.fro(), x))
}

/// Agreement of two membership predicates over a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawCheck {
    pub points: usize,
    /// Disagreements at points that are not next to the level-set boundary.
    pub interior_violations: usize,
    pub boundary_disagreements: usize,
    /// Largest distance, in grid cells, from a disagreeing point to a point
    /// of opposite membership.
    pub max_cell_discrepancy: usize,
}

impl LawCheck {
    pub fn holds(&self) -> bool {
        self.interior_violations == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub shift: LawCheck,
    /// `None` when the scaling constant is zero.
    pub scaling: Option<LawCheck>,
    pub conjugation: LawCheck,
}

impl PropertyReport {
    pub fn holds(&self) -> bool {
        self.shift.holds() && self.conjugation.holds() && self.scaling.as_ref().is_none_or(LawCheck::holds)
    }
}

fn compare_with(base: &PseudoGrid, eps: f64, exec: Execution, other: impl Fn(Complex64) -> bool + Sync) -> LawCheck {
    let (nx, ny) = (base.nx, base.ny);
    let flags = exec.map(nx * ny, |k| {
        let (i, j) = (k % nx, k / nx);
        other(base.point(i, j)) != base.is_member(i, j, eps)
    });
    let mut check = LawCheck {
        points: nx * ny,
        interior_violations: 0,
        boundary_disagreements: 0,
        max_cell_discrepancy: 0,
    };
    for (k, &bad) in flags.iter().enumerate() {
        if !bad {
            continue;
        }
        let (i, j) = (k % nx, k / nx);
        if base.on_boundary(i, j, eps) {
            check.boundary_disagreements += 1;
        } else {
            check.interior_violations += 1;
        }
        check.max_cell_discrepancy = check.max_cell_discrepancy.max(cells_to_opposite(base, i, j, eps));
    }
    check
}

fn cells_to_opposite(grid: &PseudoGrid, i: usize, j: usize, eps: f64) -> usize {
    let here = grid.is_member(i, j, eps);
    let reach = grid.nx.max(grid.ny);
    for r in 1..reach {
        let (i0, i1) = (i.saturating_sub(r), (i + r).min(grid.nx - 1));
        let (j0, j1) = (j.saturating_sub(r), (j + r).min(grid.ny - 1));
        for b in j0..=j1 {
            for a in i0..=i1 {
                if (a.abs_diff(i) == r || b.abs_diff(j) == r) && grid.is_member(a, b, eps) != here {
                    return r;
                }
            }
        }
    }
    reach
}

/// Compares `Lambda_eps(A)` on a grid against the shifted, scaled and
/// conjugated pseudospectra evaluated at the mapped points:
/// `z + c in Lambda_eps(A + cI)`, `c z in Lambda_{|c| eps}(cA)` and
/// `conj(z) in Lambda_eps(A^H)`.
pub fn check_pseudo_properties(
    a: &Tensor3,
    c: Complex64,
    eps: f64,
    region: Region,
    nx: usize,
    ny: usize,
) -> Result<PropertyReport> {
    check_pseudo_properties_with(a, c, eps, region, nx, ny, Execution::default())
}

pub fn check_pseudo_properties_with(
    a: &Tensor3,
    c: Complex64,
    eps: f64,
    region: Region,
    nx: usize,
    ny: usize,
    exec: Execution,
) -> Result<PropertyReport> {
    check_eps(eps)?;
    let base = pseudo_grid_with(a, region, nx, ny, &[eps], Norm::Two, exec)?;
    let m = a.rows();
    let n = a.slices();
    let shifted = PseudoEvaluator::new(&(a + &Tensor3::identity(m, n).scale(c)), Norm::Two)?;
    let shift = compare_with(&base, eps, exec, |z| shifted.value(z + c) <= eps);
    let scaling = if c == ZERO {
        None
    } else {
        let scaled = PseudoEvaluator::new(&a.scale(c), Norm::Two)?;
        let level = c.norm() * eps;
        Some(compare_with(&base, eps, exec, |z| scaled.value(c * z) <= level))
    };
    let adjoint = PseudoEvaluator::new(&a.conj_transpose(), Norm::Two)?;
    let conjugation = compare_with(&base, eps, exec, |z| adjoint.value(z.conj()) <= eps);
    Ok(PropertyReport {
        shift,
        scaling,
        conjugation,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InclusionReport {
    pub kappa2: f64,
    /// Off-diagonal Frobenius residual of the faces of `P^-1 * A * P`.
    pub residual: f64,
    pub points: usize,
    /// Points within `eps` of the spectrum that are not members.
    pub lower_violations: usize,
    /// Members farther than `eps * kappa2` from the spectrum.
    pub upper_violations: usize,
}

impl InclusionReport {
    pub fn holds(&self) -> bool {
        self.lower_violations == 0 && self.upper_violations == 0
    }
}

/// Pointwise check of `Lambda(A) + D_eps  within  Lambda_eps(A)  within
/// Lambda(A) + D_{eps kappa2(P)}` for `P^-1 * A * P` F-diagonal.
pub fn bauer_fike_inclusion_check(
    a: &Tensor3,
    p: &Tensor3,
    eps: f64,
    region: Region,
    nx: usize,
    ny: usize,
) -> Result<InclusionReport> {
    check_eps(eps)?;
    let residual = spectral::f_diagonalizer_residual(a, p)?;
    let kappa2 = p.cond(Norm::Two)?;
    let spectrum = spectral::t_eigenvalues(a, false)?.eigenvalues;
    let grid = pseudo_grid(a, region, nx, ny, &[eps], Norm::Two)?;
    let slack = 1e-9 * (1.0 + eps);
    let mut report = InclusionReport {
        kappa2,
        residual,
        points: nx * ny,
        lower_violations: 0,
        upper_violations: 0,
    };
    for j in 0..ny {
        for i in 0..nx {
            let z = grid.point(i, j);
            let dist = spectrum.iter().map(|l| (z - l).norm()).fold(f64::INFINITY, f64::min);
            let g = grid.value(i, j);
            if dist <= eps && g > eps + slack {
                report.lower_violations += 1;
            }
            if g <= eps && dist > eps * kappa2 * (1.0 + 1e-9) + slack {
                report.upper_violations += 1;
            }
        }
    }
    Ok(report)
}

/// A 4-connected component of the member set at one level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Component {
    pub cells: usize,
    pub eigenvalues: usize,
    pub touches_border: bool,
}

/// Flood fill of the member mask at `eps`. Each T-eigenvalue inside the
/// region is attributed to the component of its nearest grid point.
pub fn components(grid: &PseudoGrid, eps: f64, spectrum: &[Complex64]) -> Vec<Component> {
    let (nx, ny) = (grid.nx, grid.ny);
    let mask = grid.mask(eps);
    let mut label = vec![usize::MAX; nx * ny];
    let mut out: Vec<Component> = Vec::new();
    for start in 0..nx * ny {
        if !mask[start] || label[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut comp = Component {
            cells: 0,
            eigenvalues: 0,
            touches_border: false,
        };
        let mut queue = VecDeque::from([start]);
        label[start] = id;
        while let Some(k) = queue.pop_front() {
            let (i, j) = (k % nx, k / nx);
            comp.cells += 1;
            comp.touches_border |= i == 0 || j == 0 || i + 1 == nx || j + 1 == ny;
            let steps = [
                (i > 0, k.wrapping_sub(1)),
                (i + 1 < nx, k + 1),
                (j > 0, k.wrapping_sub(nx)),
                (j + 1 < ny, k + nx),
            ];
            for (ok, next) in steps {
                if ok && mask[next] && label[next] == usize::MAX {
                    label[next] = id;
                    queue.push_back(next);
                }
            }
        }
        out.push(comp);
    }
    for &lambda in spectrum {
        if let Some((i, j)) = grid.nearest(lambda) {
            let l = label[j * nx + i];
            if l != usize::MAX {
                out[l].eigenvalues += 1;
            }
        }
    }
    out
}
