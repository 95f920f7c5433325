//! File formats and the example tensors.
//!
//! Tensor files are plain text:
//!
//! ```text
//! # any comment
//! m = 2
//! p = 2
//! n = 1
//! real = 1 0 0 1
//! imag = 0 0 0 0
//! ```
//!
//! The arrays are in storage order (slice-major, column-major within a
//! slice) and floats are written in shortest round-trip form, so a
//! save/load cycle is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Result, TensorError};
use crate::linalg::CMat;
use crate::ode::OdeSolution;
use crate::pseudospectra::{PseudoGrid, Region};
use crate::tensor::Tensor3;

/// `a+bi` with 17 significant digits in each part.
pub fn format_complex(z: Complex64) -> String {
    format!("{:.16e}{:+.16e}i", z.re, z.im)
}

pub fn tensor_to_string(t: &Tensor3) -> String {
    let (m, p, n) = t.shape();
    let mut out = format!("m = {m}\np = {p}\nn = {n}\nreal =");
    for z in t.data() {
        write!(out, " {:?}", z.re).expect("string write");
    }
    out.push_str("\nimag =");
    for z in t.data() {
        write!(out, " {:?}", z.im).expect("string write");
    }
    out.push('\n');
    out
}

fn malformed(line: usize, message: impl Into<String>) -> TensorError {
    TensorError::Malformed {
        line,
        message: message.into(),
    }
}

pub fn tensor_from_str(text: &str) -> Result<Tensor3> {
    let mut dims: [Option<(usize, usize)>; 3] = [None; 3];
    let mut arrays: [Option<(usize, Vec<f64>)>; 2] = [None, None];
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| malformed(line_no, format!("expected `key = value`, found {line:?}")))?;
        let key = key.trim();
        let value = value.trim();
        let slot = match key {
            "m" => Some(0),
            "p" => Some(1),
            "n" => Some(2),
            _ => None,
        };
        if let Some(d) = slot {
            if dims[d].is_some() {
                return Err(malformed(line_no, format!("duplicate key {key:?}")));
            }
            let v: usize = value
                .parse()
                .map_err(|_| malformed(line_no, format!("{key} must be a positive integer, found {value:?}")))?;
            if v == 0 {
                return Err(malformed(line_no, format!("{key} must be positive")));
            }
            dims[d] = Some((v, line_no));
            continue;
        }
        let a = match key {
            "real" => 0,
            "imag" => 1,
            other => return Err(malformed(line_no, format!("unknown key {other:?}"))),
        };
        if arrays[a].is_some() {
            return Err(malformed(line_no, format!("duplicate key {key:?}")));
        }
        let values = value
            .split_whitespace()
            .enumerate()
            .map(|(field, tok)| {
                tok.parse::<f64>().map_err(|_| {
                    malformed(
                        line_no,
                        format!("{key} field {}: cannot parse {tok:?} as a number", field + 1),
                    )
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        arrays[a] = Some((line_no, values));
    }
    let last = text.lines().count().max(1);
    let dim = |d: usize, name: &str| {
        dims[d]
            .map(|x| x.0)
            .ok_or_else(|| malformed(last, format!("missing key {name:?}")))
    };
    let (m, p, n) = (dim(0, "m")?, dim(1, "p")?, dim(2, "n")?);
    let len = m * p * n;
    let mut take = |a: usize, name: &str| -> Result<Vec<f64>> {
        let (line_no, values) = arrays[a]
            .take()
            .ok_or_else(|| malformed(last, format!("missing key {name:?}")))?;
        if values.len() != len {
            return Err(malformed(
                line_no,
                format!("{name} has {} values but m*p*n = {len}", values.len()),
            ));
        }
        Ok(values)
    };
    let re = take(0, "real")?;
    let im = take(1, "imag")?;
    let data = re.into_iter().zip(im).map(|(r, i)| Complex64::new(r, i)).collect();
    Tensor3::from_data(m, p, n, data)
}

pub fn save_tensor(path: impl AsRef<Path>, t: &Tensor3) -> Result<()> {
    fs::write(path, tensor_to_string(t))?;
    Ok(())
}

pub fn load_tensor(path: impl AsRef<Path>) -> Result<Tensor3> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| TensorError::Io(format!("{}: {e}", path.display())))?;
    tensor_from_str(&text)
}

/// Tridiagonal Toeplitz matrix with zero diagonal, 1 above and 1/4 below.
pub fn t_pz(size: usize) -> CMat {
    CMat::from_fn(size, size, |i, j| {
        if j == i + 1 {
            Complex64::new(1.0, 0.0)
        } else if i == j + 1 {
            Complex64::new(0.25, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

pub const EXAMPLES: [&str; 4] = ["A0", "A1", "A2", "A3"];

/// The three-slice example tensors built from `T = t_pz(size)`:
/// `A0 = (T, T, T)`, `A1 = (T, 2T, 2T)`, `A2 = (T/4, T/2, T)` and
/// `A3 = (T, 10T, I)`.
pub fn gen_example(name: &str, size: usize) -> Result<Tensor3> {
    if size < 2 {
        return Err(TensorError::InvalidArgument(format!(
            "example size must be at least 2, got {size}"
        )));
    }
    let t = t_pz(size);
    let s = |k: f64| &t * Complex64::new(k, 0.0);
    let slices = match name.to_ascii_uppercase().as_str() {
        "A0" => [s(1.0), s(1.0), s(1.0)],
        "A1" => [s(1.0), s(2.0), s(2.0)],
        "A2" => [s(0.25), s(0.5), s(1.0)],
        "A3" => [s(1.0), s(10.0), CMat::identity(size, size)],
        _ => return Err(TensorError::UnknownExample(name.to_string())),
    };
    Tensor3::from_slices(&slices)
}

/// Sidecar record written next to every grid file.
#[derive(Debug, Clone, Serialize)]
pub struct GridMeta {
    pub region: Region,
    /// `"auto"` when derived from the spectrum, `"user"` otherwise.
    pub region_source: String,
    pub nx: usize,
    pub ny: usize,
    pub norm: String,
    pub epsilons: Vec<f64>,
    pub source: String,
    pub shape: [usize; 3],
    pub member_counts: Vec<usize>,
}

impl GridMeta {
    pub fn new(grid: &PseudoGrid, region_source: &str, source: &str, shape: (usize, usize, usize)) -> Self {
        GridMeta {
            region: grid.region,
            region_source: region_source.to_string(),
            nx: grid.nx,
            ny: grid.ny,
            norm: grid.norm.name().to_string(),
            epsilons: grid.epsilons.clone(),
            source: source.to_string(),
            shape: [shape.0, shape.1, shape.2],
            member_counts: grid.epsilons.iter().map(|&e| grid.member_count(e)).collect(),
        }
    }
}

/// `re,im,value` rows, imaginary index outer.
pub fn grid_to_csv(grid: &PseudoGrid) -> String {
    let mut out = String::with_capacity(grid.values.len() * 48 + 16);
    out.push_str("re,im,value\n");
    for j in 0..grid.ny {
        let im = grid.im(j);
        for i in 0..grid.nx {
            let v = grid.value(i, j);
            let v = if v.is_finite() { v } else { 0.0 };
            writeln!(out, "{:?},{:?},{:?}", grid.re(i), im, v).expect("string write");
        }
    }
    out
}

/// Path of the metadata sidecar: `<out>.meta.json`.
pub fn meta_path(out: &Path) -> std::path::PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    s.into()
}

pub fn write_grid(out: impl AsRef<Path>, grid: &PseudoGrid, meta: &GridMeta) -> Result<()> {
    let out = out.as_ref();
    fs::write(out, grid_to_csv(grid))?;
    let json = serde_json::to_string_pretty(meta).map_err(|e| TensorError::Io(e.to_string()))?;
    fs::write(meta_path(out), json + "\n")?;
    Ok(())
}

/// `t,i,j,k,re,im` rows, one per entry per sample.
pub fn trajectory_to_csv(sol: &OdeSolution) -> String {
    let mut out = String::from("t,i,j,k,re,im\n");
    for (t, x) in sol.times.iter().zip(&sol.states) {
        let (m, p, n) = x.shape();
        for k in 0..n {
            for j in 0..p {
                for i in 0..m {
                    let z = x.get(i, j, k);
                    writeln!(out, "{t:?},{i},{j},{k},{:?},{:?}", z.re, z.im).expect("string write");
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Norm;
    use crate::pseudospectra::pseudo_grid;
    use crate::random::TensorRng;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = TensorRng::new(1);
        let t = rng.complex_normal(3, 2, 4);
        let back = tensor_from_str(&tensor_to_string(&t)).unwrap();
        assert_eq!(back, t);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.txt");
        save_tensor(&path, &t).unwrap();
        assert_eq!(load_tensor(&path).unwrap(), t);
    }

    #[test]
    fn identity_fixture() {
        let text = "# identity\nm = 2\np = 2\nn = 2\nreal = 1 0 0 1 0 0 0 0\nimag = 0 0 0 0 0 0 0 0\n";
        assert_eq!(tensor_from_str(text).unwrap(), Tensor3::identity(2, 2));
    }

    #[test]
    fn malformed_files_report_location() {
        let cases = [
            ("m = 1\np = 1\nn = 2\nreal = 1\nimag = 0 0\n", 4),
            ("m = 1\np = 1\nn = 1\nreal = x\nimag = 0\n", 4),
            ("m = 1\np = 1\nreal = 1\nimag = 0\n", 4),
            ("m = 1\nwhat\n", 2),
            ("m = 0\n", 1),
            ("m = 1\np = 1\nn = 1\ncolour = 1\n", 4),
        ];
        for (text, line) in cases {
            match tensor_from_str(text) {
                Err(TensorError::Malformed { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn examples_match_fixtures() {
        let t = t_pz(4);
        assert_eq!(t[(0, 1)], Complex64::new(1.0, 0.0));
        assert_eq!(t[(1, 0)], Complex64::new(0.25, 0.0));
        assert_eq!(t[(0, 0)], Complex64::new(0.0, 0.0));
        assert_eq!(t[(0, 2)], Complex64::new(0.0, 0.0));
        let scaled = |k: f64| &t * Complex64::new(k, 0.0);
        let a0 = gen_example("A0", 4).unwrap();
        let a1 = gen_example("A1", 4).unwrap();
        let a2 = gen_example("a2", 4).unwrap();
        let a3 = gen_example("A3", 4).unwrap();
        for k in 0..3 {
            assert_eq!(a0.slice(k), t);
        }
        assert_eq!(a1.frontal_slices(), vec![t.clone(), scaled(2.0), scaled(2.0)]);
        assert_eq!(a2.frontal_slices(), vec![scaled(0.25), scaled(0.5), t.clone()]);
        assert_eq!(a3.frontal_slices(), vec![t.clone(), scaled(10.0), CMat::identity(4, 4)]);
        assert!(matches!(gen_example("A9", 4), Err(TensorError::UnknownExample(_))));
        assert!(gen_example("A0", 1).is_err());
    }

    #[test]
    fn complex_format() {
        assert_eq!(
            format_complex(Complex64::new(1.5, -0.25)),
            "1.5000000000000000e0-2.5000000000000000e-1i"
        );
    }

    #[test]
    fn grid_csv_layout() {
        let a = Tensor3::zeros(1, 1, 1);
        let g = pseudo_grid(&a, Region::new(-1.0, 1.0, 0.0, 1.0).unwrap(), 3, 2, &[0.5], Norm::Two).unwrap();
        let csv = grid_to_csv(&g);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 7);
        assert_eq!(lines[0], "re,im,value");
        assert_eq!(lines[1], "-1.0,0.0,1.0");
        assert_eq!(lines[2], "0.0,0.0,0.0");
        assert_eq!(lines[4], "-1.0,1.0,1.4142135623730951");
        let meta = GridMeta::new(&g, "user", "zero", a.shape());
        assert_eq!(meta.member_counts, vec![1]);
        assert_eq!(meta_path(Path::new("out/g.csv")), Path::new("out/g.csv.meta.json"));
    }
}
