//! Command-line front end.
//!
//! Exit status: 0 on success, 1 when the computation itself fails (singular
//! input, non-Hermitian tensor for `kahan`, ...), 2 for usage errors and
//! unreadable or malformed files.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::error::{Result, TensorError};
use crate::exec::Execution;
use crate::io::{self, format_complex, GridMeta};
use crate::linalg::Norm;
use crate::ode::solve_ivp_with;
use crate::perturbation::{
    bauer_fike_bound, generalized_bf_bound, gershgorin_disks, gershgorin_violations, kahan_regions, BoundReport,
    DiskMode,
};
use crate::pseudospectra::{auto_region, pseudo_grid_with, Region};
use crate::random::{trials, TensorRng};
use crate::spectral::{eigenvector_tensor, generalized_t_eigenvalues_with, t_eigenvalues_with, EigenKind};
use crate::tensor::Tensor3;

pub const DEFAULT_EPSILONS: [f64; 10] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10];

#[derive(Debug, Parser)]
#[command(
    name = "tspectra",
    version,
    about = "Spectral analysis of third-order tensors under the t-product"
)]
struct Cli {
    /// Run every data-parallel loop on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the T-eigenvalues (one per line: face index, value).
    Eig {
        tensor: PathBuf,
        /// Append the unit-norm T-eigenvector entries to each line.
        #[arg(long)]
        vectors: bool,
    },
    /// Print the generalized T-eigenvalues of the pencil (A, B).
    Geig { a: PathBuf, b: PathBuf },
    /// Write an epsilon-pseudospectrum grid as CSV plus a JSON sidecar.
    Pseudo(PseudoArgs),
    /// Check a perturbation bound on a given tensor or on random trials.
    Bounds(BoundsArgs),
    /// Sample the solution of dX/dt = A * X, X(0) = Y0.
    Ode {
        a: PathBuf,
        y0: PathBuf,
        /// Comma-separated sample times, starting at 0 and increasing.
        #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
        times: FloatList,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write one of the example tensors A0..A3.
    Gen {
        name: String,
        /// Size of the tridiagonal Toeplitz slices.
        #[arg(long)]
        n: usize,
        /// Destination file (standard output when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone)]
struct FloatList(Vec<f64>);

#[derive(Debug, Args)]
struct PseudoArgs {
    tensor: PathBuf,
    /// Real range `min,max`; with --im absent too the region is derived from the spectrum.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    re: Option<(f64, f64)>,
    /// Imaginary range `min,max`.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    im: Option<(f64, f64)>,
    #[arg(long, default_value_t = 200)]
    nx: usize,
    #[arg(long, default_value_t = 200)]
    ny: usize,
    /// Comma-separated epsilon levels (default 1e-1,...,1e-10).
    #[arg(long, value_parser = parse_list)]
    eps: Option<FloatList>,
    /// 1, 2 or inf.
    #[arg(long, default_value = "2")]
    norm: Norm,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BoundKind {
    Gershgorin,
    BauerFike,
    GenBf,
    Kahan,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    kind: BoundKind,
    /// Tensor to analyse; random trials are generated when absent.
    tensor: Option<PathBuf>,
    /// Diagonalizer for bauer-fike (computed from the eigenvectors when absent).
    #[arg(long)]
    p: Option<PathBuf>,
    /// Perturbation tensor (random when absent).
    #[arg(long)]
    delta: Option<PathBuf>,
    /// Norm of the random perturbation.
    #[arg(long)]
    delta_norm: Option<f64>,
    /// Gershgorin disk construction.
    #[arg(long, default_value = "raw")]
    mode: DiskMode,
    /// Norm for the bound: 1, 2, inf or fro.
    #[arg(long, default_value = "2")]
    norm: Norm,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Slice size of random trial tensors.
    #[arg(long, default_value_t = 4)]
    m: usize,
    /// Number of frontal slices of random trial tensors.
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_list(s: &str) -> std::result::Result<FloatList, String> {
    let values = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("cannot parse {t:?} as a number"))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err("values must be finite".into());
    }
    Ok(FloatList(values))
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    match parse_list(s)?.0.as_slice() {
        &[a, b] => Ok((a, b)),
        _ => Err(format!("expected `min,max`, found {s:?}")),
    }
}

fn exit_code(e: &TensorError) -> i32 {
    match e {
        TensorError::Malformed { .. }
        | TensorError::Io(_)
        | TensorError::UnknownExample(_)
        | TensorError::InvalidArgument(_) => 2,
        _ => 1,
    }
}

/// Runs one invocation; `args` includes the program name.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                2
            } else {
                let _ = write!(out, "{}", e.render());
                0
            };
            return code;
        }
    };
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let result = dispatch(cli.command, exec).and_then(|text| out.write_all(text.as_bytes()).map_err(TensorError::from));
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(command: Command, exec: Execution) -> Result<String> {
    match command {
        Command::Eig { tensor, vectors } => eig(&tensor, vectors, exec),
        Command::Geig { a, b } => geig(&a, &b, exec),
        Command::Pseudo(args) => pseudo(&args, exec),
        Command::Bounds(args) => bounds(&args, exec),
        Command::Ode { a, y0, times, out } => ode(&a, &y0, &times.0, &out, exec),
        Command::Gen { name, n, out } => {
            let t = io::gen_example(&name, n)?;
            match out {
                Some(path) => {
                    io::save_tensor(&path, &t)?;
                    Ok(String::new())
                }
                None => Ok(io::tensor_to_string(&t)),
            }
        }
    }
}

fn eig(path: &Path, vectors: bool, exec: Execution) -> Result<String> {
    let a = io::load_tensor(path)?;
    let spec = t_eigenvalues_with(&a, vectors, exec)?;
    let mut text = String::new();
    for (k, (lambda, face)) in spec.eigenvalues.iter().zip(&spec.face_index).enumerate() {
        write!(text, "{face}\t{}", format_complex(*lambda)).expect("string write");
        if let Some(vs) = &spec.eigenvectors {
            text.push('\t');
            let entries: Vec<String> = vs[k].data().iter().map(|&z| format_complex(z)).collect();
            text.push_str(&entries.join(" "));
        }
        text.push('\n');
    }
    Ok(text)
}

fn geig(a: &Path, b: &Path, exec: Execution) -> Result<String> {
    let (a, b) = (io::load_tensor(a)?, io::load_tensor(b)?);
    let spec = generalized_t_eigenvalues_with(&a, &b, exec)?;
    let mut text = String::from("face\tkind\talpha\tbeta\tvalue\n");
    for g in &spec.pairs {
        let kind = match g.kind {
            EigenKind::Finite => "finite",
            EigenKind::Infinite => "infinite",
            EigenKind::Indeterminate => "indeterminate",
        };
        let value = g.value().map_or_else(|| "-".to_string(), format_complex);
        writeln!(
            text,
            "{}\t{kind}\t{}\t{}\t{value}",
            g.face,
            format_complex(g.alpha),
            format_complex(g.beta)
        )
        .expect("string write");
    }
    let r = &spec.regularity;
    let total = b.rows() * b.slices();
    writeln!(
        text,
        "# rank(bcirc(B)) = {} of {total}{}",
        r.rank,
        if r.full_rank { "" } else { " (rank deficient)" }
    )
    .expect("string write");
    Ok(text)
}

fn pseudo(args: &PseudoArgs, exec: Execution) -> Result<String> {
    let a = io::load_tensor(&args.tensor)?;
    let epsilons = args
        .eps
        .as_ref()
        .map_or_else(|| DEFAULT_EPSILONS.to_vec(), |l| l.0.clone());
    let eps_max = epsilons.iter().copied().fold(0.0, f64::max);
    let (region, origin) = match (args.re, args.im) {
        (Some((r0, r1)), Some((i0, i1))) => (Region::new(r0, r1, i0, i1)?, "user"),
        (None, None) => (auto_region(&a, eps_max)?, "auto"),
        (re, im) => {
            let auto = auto_region(&a, eps_max)?;
            let (r0, r1) = re.unwrap_or((auto.re_min, auto.re_max));
            let (i0, i1) = im.unwrap_or((auto.im_min, auto.im_max));
            (Region::new(r0, r1, i0, i1)?, "mixed")
        }
    };
    let grid = pseudo_grid_with(&a, region, args.nx, args.ny, &epsilons, args.norm, exec)?;
    let meta = GridMeta::new(&grid, origin, &args.tensor.display().to_string(), a.shape());
    io::write_grid(&args.out, &grid, &meta)?;
    let mut text = format!(
        "wrote {} points to {} (region re [{}, {}], im [{}, {}], {})\n",
        grid.values.len(),
        args.out.display(),
        region.re_min,
        region.re_max,
        region.im_min,
        region.im_max,
        origin
    );
    for (e, c) in epsilons.iter().zip(&meta.member_counts) {
        writeln!(text, "eps {e:e}: {c} member points").expect("string write");
    }
    Ok(text)
}

fn ode(a: &Path, y0: &Path, times: &[f64], out: &Path, exec: Execution) -> Result<String> {
    let (a, y0) = (io::load_tensor(a)?, io::load_tensor(y0)?);
    let sol = solve_ivp_with(&a, &y0, times, exec)?;
    std::fs::write(out, io::trajectory_to_csv(&sol))?;
    Ok(format!("wrote {} samples to {}\n", sol.times.len(), out.display()))
}

/// Random perturbation of the requested norm, drawn from `rng`.
fn random_delta(rng: &mut TensorRng, m: usize, n: usize, norm: Norm, target: f64) -> Tensor3 {
    rng.with_norm(m, m, n, norm, target)
}

/// Random partition of `m` into Jordan blocks of size 1 to 3, at least one
/// of which is nontrivial when `m >= 2`.
fn jordan_blocks(rng: &mut TensorRng, m: usize) -> Vec<usize> {
    let mut blocks = Vec::new();
    let mut left = m;
    while left > 0 {
        let b = (1 + (rng.uniform(0.0, 3.0) as usize)).min(left).min(3);
        blocks.push(b);
        left -= b;
    }
    if m >= 2 && blocks.iter().all(|&b| b == 1) {
        blocks = vec![2];
        blocks.extend(std::iter::repeat_n(1, m - 2));
    }
    blocks
}

fn report_json(r: &BoundReport) -> Value {
    serde_json::to_value(r).expect("report serializes")
}

fn gershgorin_json(a: &Tensor3, mode: DiskMode) -> Result<Value> {
    let disks = gershgorin_disks(a, mode)?;
    let violations = gershgorin_violations(a, &disks)?;
    Ok(json!({
        "mode": format!("{mode:?}").to_lowercase(),
        "violations": violations,
        "holds": violations == 0,
        "disks": disks.centers.iter().zip(&disks.radii).zip(&disks.face_index)
            .map(|((c, r), f)| json!({"face": f, "center": [c.re, c.im], "radius": r}))
            .collect::<Vec<_>>(),
    }))
}

fn kahan_json(a: &Tensor3, e: &Tensor3) -> Result<Value> {
    let (regions, report) = kahan_regions(a, e)?;
    let mut v = report_json(&report);
    v["regions"] = regions
        .iter()
        .map(|r| json!({"center": r.center, "radius": r.radius, "imag_bound": r.imag_bound}))
        .collect();
    Ok(v)
}

fn bounds(args: &BoundsArgs, exec: Execution) -> Result<String> {
    let value = match &args.tensor {
        Some(path) => bounds_single(args, path)?,
        None => bounds_trials(args, exec)?,
    };
    let text = serde_json::to_string_pretty(&value).map_err(|e| TensorError::Io(e.to_string()))? + "\n";
    match &args.out {
        Some(path) => {
            std::fs::write(path, text)?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn bounds_single(args: &BoundsArgs, path: &Path) -> Result<Value> {
    let a = io::load_tensor(path)?;
    if let BoundKind::Gershgorin = args.kind {
        return gershgorin_json(&a, args.mode);
    }
    let delta = match &args.delta {
        Some(d) => io::load_tensor(d)?,
        None => {
            let (m, p, n) = a.shape();
            if m != p {
                return Err(TensorError::NonSquare {
                    operation: "perturbation bound",
                    rows: m,
                    cols: p,
                });
            }
            let target = args.delta_norm.unwrap_or(1e-3);
            if !(target.is_finite() && target >= 0.0) {
                return Err(TensorError::InvalidArgument(format!(
                    "--delta-norm must be nonnegative, got {target}"
                )));
            }
            let norm = if let BoundKind::Kahan = args.kind {
                Norm::Two
            } else {
                args.norm
            };
            random_delta(&mut TensorRng::new(args.seed), m, n, norm, target)
        }
    };
    match args.kind {
        BoundKind::Gershgorin => unreachable!("handled above"),
        BoundKind::BauerFike => {
            let p = match &args.p {
                Some(p) => io::load_tensor(p)?,
                None => eigenvector_tensor(&a)?,
            };
            Ok(report_json(&bauer_fike_bound(&a, &p, &delta, args.norm)?))
        }
        BoundKind::GenBf => Ok(report_json(&generalized_bf_bound(&a, &delta, args.norm)?)),
        BoundKind::Kahan => kahan_json(&a, &delta),
    }
}

fn bounds_trials(args: &BoundsArgs, exec: Execution) -> Result<Value> {
    let (m, n) = (args.m, args.n);
    if m == 0 || n == 0 {
        return Err(TensorError::InvalidArgument("--m and --n must be positive".into()));
    }
    let delta_target = |rng: &mut TensorRng| match args.delta_norm {
        Some(x) => x,
        None => 10f64.powf(rng.uniform(-6.0, -2.0)),
    };
    let results: Vec<Result<Value>> = trials(args.trials, args.seed, exec, |i, rng| {
        let mut v = match args.kind {
            BoundKind::Gershgorin => {
                let a = rng.complex_normal(m, m, n);
                gershgorin_json(&a, args.mode)?
            }
            BoundKind::BauerFike => {
                let d = rng.diagonalizable(m, n, 0.3);
                let target = delta_target(rng);
                let delta = random_delta(rng, m, n, args.norm, target);
                report_json(&bauer_fike_bound(&d.tensor, &d.p, &delta, args.norm)?)
            }
            BoundKind::GenBf => {
                let blocks = jordan_blocks(rng, m);
                let a = rng.jordan(&blocks, n);
                let target = delta_target(rng);
                let delta = random_delta(rng, m, n, args.norm, target);
                let mut v = report_json(&generalized_bf_bound(&a, &delta, args.norm)?);
                v["blocks"] = json!(blocks);
                v
            }
            BoundKind::Kahan => {
                let a = rng.hermitian(m, n);
                let target = args.delta_norm.unwrap_or_else(|| rng.uniform(0.0, 1e-2));
                let e = random_delta(rng, m, n, Norm::Two, target);
                kahan_json(&a, &e)?
            }
        };
        v["trial"] = json!(i);
        Ok(v)
    });
    let reports = results.into_iter().collect::<Result<Vec<Value>>>()?;
    let failures = reports.iter().filter(|r| r["holds"] != json!(true)).count();
    Ok(json!({
        "kind": format!("{:?}", args.kind).to_lowercase(),
        "seed": args.seed,
        "trials": args.trials,
        "m": m,
        "n": n,
        "norm": args.norm.name(),
        "failures": failures,
        "all_hold": failures == 0,
        "reports": reports,
    }))
}

/// Parses `a+bi` text, the inverse of [`format_complex`].
pub fn parse_complex(s: &str) -> Option<Complex64> {
    let s = s.trim().strip_suffix('i')?;
    let bytes = s.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'))?;
    let re = s[..split].parse().ok()?;
    let im = s[split..].parse().ok()?;
    Some(Complex64::new(re, im))
}
