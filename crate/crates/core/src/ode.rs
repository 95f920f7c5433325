//! The linear system `dX/dt = A(t) * X(t)` under the t-product.
//!
//! For constant `A` the solution is `X(t) = exp(tA) * X(0)`, where the
//! t-exponential is assembled from the matrix exponentials of the faces.
//! The remaining routines check candidate solutions (finite differences,
//! superposition, Wronskians) and accept time-varying coefficients.

use num_complex::Complex64;

use crate::error::{Result, TensorError};
use crate::exec::Execution;
use crate::linalg::{CMat, Norm};
use crate::tensor::Tensor3;
use crate::transform::FaceSet;

/// Step used by [`fd_residual`] callers that have no better choice.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// A tensor-valued function of time, usually a candidate solution.
pub trait Trajectory {
    fn at(&self, t: f64) -> Result<Tensor3>;
}

impl<F> Trajectory for F
where
    F: Fn(f64) -> Tensor3,
{
    fn at(&self, t: f64) -> Result<Tensor3> {
        Ok(self(t))
    }
}

/// Coefficient tensor `A(t)`; a plain tensor is constant in time.
pub trait Coefficient {
    fn at(&self, t: f64) -> Tensor3;
}

impl Coefficient for Tensor3 {
    fn at(&self, _t: f64) -> Tensor3 {
        self.clone()
    }
}

/// Wrapper turning a closure into a time-varying coefficient.
pub struct TimeVarying<F>(pub F);

impl<F: Fn(f64) -> Tensor3> Coefficient for TimeVarying<F> {
    fn at(&self, t: f64) -> Tensor3 {
        (self.0)(t)
    }
}

fn real_if(out: Tensor3, real: bool) -> Tensor3 {
    if real {
        out.real_part()
    } else {
        out
    }
}

/// `exp(t A)` under the t-product: `bcirc(t_exp(A, t)) = exp(t bcirc(A))`.
pub fn t_exp(a: &Tensor3, t: f64) -> Result<Tensor3> {
    t_exp_with(a, t, Execution::default())
}

pub fn t_exp_with(a: &Tensor3, t: f64, exec: Execution) -> Result<Tensor3> {
    a.require_square("t_exp")?;
    let faces = a.to_faces();
    let scale = Complex64::new(t, 0.0);
    let out = FaceSet::new(exec.map(faces.len(), |i| (faces.face(i) * scale).exp()))?.to_tensor();
    Ok(real_if(out, a.is_real()))
}

/// The exact solution `t -> exp(tA) * Y0` of a constant-coefficient system,
/// with the faces of `A` and `Y0` cached for repeated evaluation.
#[derive(Debug, Clone)]
pub struct ExpSolution {
    a_faces: FaceSet,
    y_faces: FaceSet,
    real: bool,
}

impl ExpSolution {
    pub fn new(a: &Tensor3, y0: &Tensor3) -> Result<Self> {
        a.require_square("solve_ivp")?;
        if a.rows() != y0.rows() || a.slices() != y0.slices() {
            return Err(TensorError::DimensionMismatch {
                context: "solve_ivp initial value",
                expected: format!("{}x_x{}", a.rows(), a.slices()),
                actual: format!("{}x{}x{}", y0.rows(), y0.cols(), y0.slices()),
            });
        }
        Ok(ExpSolution {
            a_faces: a.to_faces(),
            y_faces: y0.to_faces(),
            real: a.is_real() && y0.is_real(),
        })
    }
}

impl Trajectory for ExpSolution {
    fn at(&self, t: f64) -> Result<Tensor3> {
        let scale = Complex64::new(t, 0.0);
        let out = self
            .a_faces
            .zip_map(&self.y_faces, |_, a, y| Ok((a * scale).exp() * y))?
            .to_tensor();
        Ok(real_if(out, self.real))
    }
}

#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub times: Vec<f64>,
    pub states: Vec<Tensor3>,
    pub generator: Tensor3,
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(TensorError::InvalidTimes("no sample times".into()));
    }
    if let Some(t) = times.iter().find(|t| !t.is_finite()) {
        return Err(TensorError::InvalidTimes(format!("non-finite time {t}")));
    }
    if times[0] != 0.0 {
        return Err(TensorError::InvalidTimes(format!(
            "first time must be 0, got {}",
            times[0]
        )));
    }
    if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
        return Err(TensorError::InvalidTimes(format!(
            "times must increase ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// Samples `exp(tA) * Y0` at the given times (which start at 0 and
/// increase). The first state is `y0` itself.
pub fn solve_ivp(a: &Tensor3, y0: &Tensor3, times: &[f64]) -> Result<OdeSolution> {
    solve_ivp_with(a, y0, times, Execution::default())
}

pub fn solve_ivp_with(a: &Tensor3, y0: &Tensor3, times: &[f64], exec: Execution) -> Result<OdeSolution> {
    let sol = ExpSolution::new(a, y0)?;
    check_times(times)?;
    let mut states = exec.try_map(times.len(), |k| if k == 0 { Ok(y0.clone()) } else { sol.at(times[k]) })?;
    states[0] = y0.clone();
    Ok(OdeSolution {
        times: times.to_vec(),
        states,
        generator: a.clone(),
    })
}

/// Centered-difference residual `||(X(t+h) - X(t-h)) / 2h - A(t) * X(t)||_F`.
pub fn fd_residual(a: &impl Coefficient, x: &impl Trajectory, t: f64, h: f64) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(TensorError::InvalidTimes(format!("step must be positive, got {h}")));
    }
    let forward = x.at(t + h)?;
    let backward = x.at(t - h)?;
    let derivative = (&forward - &backward).scale(Complex64::new(0.5 / h, 0.0));
    let rhs = a.at(t).tprod(&x.at(t)?)?;
    Ok((&derivative - &rhs).fro())
}

pub fn max_fd_residual(a: &impl Coefficient, x: &impl Trajectory, times: &[f64], h: f64) -> Result<f64> {
    times
        .iter()
        .try_fold(0.0f64, |acc, &t| Ok(acc.max(fd_residual(a, x, t, h)?)))
}

/// `c1 X1 + c2 X2` as a trajectory.
pub struct Combination<'a, X1, X2> {
    pub x1: &'a X1,
    pub x2: &'a X2,
    pub c1: Complex64,
    pub c2: Complex64,
}

impl<X1: Trajectory, X2: Trajectory> Trajectory for Combination<'_, X1, X2> {
    fn at(&self, t: f64) -> Result<Tensor3> {
        Ok(&self.x1.at(t)?.scale(self.c1) + &self.x2.at(t)?.scale(self.c2))
    }
}

/// Largest finite-difference residual of `c1 X1 + c2 X2` over the samples.
pub fn superposition_check(
    a: &impl Coefficient,
    x1: &impl Trajectory,
    x2: &impl Trajectory,
    c1: Complex64,
    c2: Complex64,
    times: &[f64],
    h: f64,
) -> Result<f64> {
    max_fd_residual(a, &Combination { x1, x2, c1, c2 }, times, h)
}

/// `det [unfold(X_1), ..., unfold(X_mn)]` for `m x 1 x n` states.
pub fn wronskian(states: &[Tensor3]) -> Result<Complex64> {
    let first = states
        .first()
        .ok_or(TensorError::SolutionCount { expected: 1, actual: 0 })?;
    let (m, _, n) = first.shape();
    if states.len() != m * n {
        return Err(TensorError::SolutionCount {
            expected: m * n,
            actual: states.len(),
        });
    }
    if let Some(bad) = states.iter().find(|s| s.shape() != (m, 1, n)) {
        return Err(TensorError::DimensionMismatch {
            context: "wronskian",
            expected: format!("{m}x1x{n}"),
            actual: format!("{:?}", bad.shape()),
        });
    }
    let cols: Vec<_> = states.iter().map(|s| s.unfold().column(0).into_owned()).collect();
    // repeated columns: exactly singular, which LU rounding would obscure
    for (i, ci) in cols.iter().enumerate() {
        if cols[i + 1..].contains(ci) {
            return Ok(Complex64::new(0.0, 0.0));
        }
    }
    Ok(CMat::from_columns(&cols).determinant())
}

pub fn wronskian_at<X: Trajectory>(solutions: &[X], t: f64) -> Result<Complex64> {
    let states = solutions.iter().map(|x| x.at(t)).collect::<Result<Vec<_>>>()?;
    wronskian(&states)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dichotomy {
    NonzeroEverywhere,
    ZeroEverywhere,
    /// Zero at some samples and not at others: a violation.
    Mixed,
}

#[derive(Debug, Clone)]
pub struct WronskianTrace {
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Hadamard bound `prod ||unfold(X_i(t))||` at each sample.
    pub scales: Vec<f64>,
}

impl WronskianTrace {
    /// Classifies the samples; `|W(t)|` counts as zero when it is at most
    /// `rtol` times the Hadamard bound.
    pub fn dichotomy(&self, rtol: f64) -> Dichotomy {
        let zero: Vec<bool> = self
            .values
            .iter()
            .zip(&self.scales)
            .map(|(w, s)| w.norm() <= rtol * s)
            .collect();
        if zero.iter().all(|&z| z) {
            Dichotomy::ZeroEverywhere
        } else if zero.iter().all(|&z| !z) {
            Dichotomy::NonzeroEverywhere
        } else {
            Dichotomy::Mixed
        }
    }
}

pub fn wronskian_trace<X: Trajectory>(solutions: &[X], times: &[f64]) -> Result<WronskianTrace> {
    let mut trace = WronskianTrace {
        times: times.to_vec(),
        values: Vec::with_capacity(times.len()),
        scales: Vec::with_capacity(times.len()),
    };
    for &t in times {
        let states = solutions.iter().map(|x| x.at(t)).collect::<Result<Vec<_>>>()?;
        trace.scales.push(states.iter().map(Tensor3::fro).product());
        trace.values.push(wronskian(&states)?);
    }
    Ok(trace)
}

/// Solutions with `unfold(X_i(0)) = e_i`, `i = 0..mn`.
pub fn fundamental_set(a: &Tensor3) -> Result<Vec<ExpSolution>> {
    a.require_square("fundamental_set")?;
    let (m, _, n) = a.shape();
    (0..m * n)
        .map(|idx| {
            let mut e = Tensor3::zeros(m, 1, n);
            e.set(idx % m, 0, idx / m, Complex64::new(1.0, 0.0));
            ExpSolution::new(a, &e)
        })
        .collect()
}

/// `W(t) = W(0) exp(t trace(bcirc(A)))` for constant `A`; the trace of the
/// block circulant matrix is `n trace(A_1)`.
pub fn abel_liouville(a: &Tensor3, w0: Complex64, t: f64) -> Result<Complex64> {
    a.require_square("abel_liouville")?;
    let trace: Complex64 = a.slice(0).trace() * a.slices() as f64;
    Ok(w0 * (trace * t).exp())
}

/// Real or imaginary part of a complex trajectory.
pub struct SolutionPart<'a, X> {
    inner: &'a X,
    imaginary: bool,
}

impl<X: Trajectory> Trajectory for SolutionPart<'_, X> {
    fn at(&self, t: f64) -> Result<Tensor3> {
        let x = self.inner.at(t)?;
        Ok(if self.imaginary { x.imag_part() } else { x.real_part() })
    }
}

/// Splits a complex solution of a real system into its real and imaginary
/// parts, each a real solution of the same system.
pub fn real_solution_split<'a, X: Trajectory>(
    x: &'a X,
    a: &Tensor3,
) -> Result<(SolutionPart<'a, X>, SolutionPart<'a, X>)> {
    let tol = a.default_tolerance();
    let max_imag = a.max_imag();
    if max_imag > tol {
        return Err(TensorError::NonRealCoefficient { max_imag });
    }
    Ok((
        SolutionPart {
            inner: x,
            imaginary: false,
        },
        SolutionPart {
            inner: x,
            imaginary: true,
        },
    ))
}

/// `t -> e^(lambda t) X` for a T-eigenpair `(lambda, X)`.
pub struct EigenSolution {
    pub lambda: Complex64,
    pub vector: Tensor3,
}

impl Trajectory for EigenSolution {
    fn at(&self, t: f64) -> Result<Tensor3> {
        Ok(self.vector.scale((self.lambda * t).exp()))
    }
}

/// Ratio of centered-difference residuals at `h` and `h / 2`; close to 4
/// for a smooth exact solution.
pub fn convergence_ratio(a: &impl Coefficient, x: &impl Trajectory, t: f64, h: f64) -> Result<f64> {
    Ok(fd_residual(a, x, t, h)? / fd_residual(a, x, t, h / 2.0)?)
}

/// `||A||_2 ||Y||_F`-style scale for residual tolerances.
pub fn residual_scale(a: &Tensor3, y: &Tensor3) -> f64 {
    a.norm(Norm::Two).max(1.0) * y.fro().max(1.0)
}
