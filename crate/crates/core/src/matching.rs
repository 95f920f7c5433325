//! Pairing of eigenvalue multisets.
//!
//! Spectra are compared by a one-to-one matching: greedy closest-pair first,
//! falling back to a full minimum-cost assignment when the greedy result is
//! worse than the caller's tolerance.

use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    /// `(index into a, index into b)`
    pub pairs: Vec<(usize, usize)>,
    pub max_distance: f64,
}

fn finish(a: &[Complex64], b: &[Complex64], pairs: Vec<(usize, usize)>) -> Matching {
    let max_distance = pairs.iter().map(|&(i, j)| (a[i] - b[j]).norm()).fold(0.0, f64::max);
    Matching { pairs, max_distance }
}

/// Repeatedly pairs the closest remaining `(a, b)` elements.
pub fn greedy_match(a: &[Complex64], b: &[Complex64]) -> Matching {
    assert_eq!(a.len(), b.len(), "spectra must have equal size");
    let mut candidates: Vec<(f64, usize, usize)> = a
        .iter()
        .enumerate()
        .flat_map(|(i, x)| b.iter().enumerate().map(move |(j, y)| ((x - y).norm(), i, j)))
        .collect();
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut pairs = Vec::with_capacity(a.len());
    for (_, i, j) in candidates {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            pairs.push((i, j));
        }
    }
    pairs.sort_unstable();
    finish(a, b, pairs)
}

/// Minimum total-distance assignment (Hungarian algorithm with potentials).
pub fn hungarian_match(a: &[Complex64], b: &[Complex64]) -> Matching {
    assert_eq!(a.len(), b.len(), "spectra must have equal size");
    let n = a.len();
    if n == 0 {
        return Matching {
            pairs: Vec::new(),
            max_distance: 0.0,
        };
    }
    let cost = |i: usize, j: usize| (a[i - 1] - b[j - 1]).norm();
    // 1-based arrays; row 0 / column 0 are sentinels
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut pairs: Vec<(usize, usize)> = (1..=n).map(|j| (p[j] - 1, j - 1)).collect();
    pairs.sort_unstable();
    finish(a, b, pairs)
}

/// Greedy matching, upgraded to the optimal assignment when the greedy
/// maximum distance exceeds `tol`.
pub fn match_spectra(a: &[Complex64], b: &[Complex64], tol: f64) -> Matching {
    let greedy = greedy_match(a, b);
    if greedy.max_distance <= tol {
        return greedy;
    }
    let optimal = hungarian_match(a, b);
    if optimal.max_distance < greedy.max_distance {
        optimal
    } else {
        greedy
    }
}

/// `max_j min_i |reference_i - other_j|`: how far `other` strays from
/// `reference`. Zero when `other` is empty.
pub fn spectral_variation(reference: &[Complex64], other: &[Complex64]) -> f64 {
    other
        .iter()
        .map(|mu| reference.iter().map(|l| (l - mu).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn greedy_pairs_obvious_neighbours() {
        let a = [c(0.0, 0.0), c(10.0, 0.0), c(0.0, 5.0)];
        let b = [c(10.1, 0.0), c(0.0, 5.2), c(0.05, 0.0)];
        let m = greedy_match(&a, &b);
        assert_eq!(m.pairs, vec![(0, 2), (1, 0), (2, 1)]);
        assert!((m.max_distance - 0.2).abs() < 1e-12);
    }

    #[test]
    fn hungarian_beats_greedy_trap() {
        // greedy grabs (1.0, 1.1) first and strands 0.0 with 2.2
        let a = [c(0.0, 0.0), c(1.0, 0.0)];
        let b = [c(1.1, 0.0), c(2.2, 0.0)];
        let g = greedy_match(&a, &b);
        let h = hungarian_match(&a, &b);
        let total = |m: &Matching| m.pairs.iter().map(|&(i, j)| (a[i] - b[j]).norm()).sum::<f64>();
        assert!(total(&h) <= total(&g) + 1e-12);
        assert_eq!(h.pairs.len(), 2);
    }

    #[test]
    fn spectral_variation_examples() {
        let a = [c(1.0, 0.0), c(1.0, 0.0)];
        let b = [c(1.25, 0.0), c(0.75, 0.0)];
        assert!((spectral_variation(&a, &b) - 0.25).abs() < 1e-15);
        assert_eq!(spectral_variation(&a, &a), 0.0);
    }

    proptest! {
        #[test]
        fn matching_is_a_permutation_and_relabeling_invariant(
            xs in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..12),
            shift in 0usize..12,
        ) {
            let a: Vec<Complex64> = xs.iter().map(|&(r, i)| c(r, i)).collect();
            let mut b: Vec<Complex64> = a.iter().map(|z| z + c(0.01, -0.02)).collect();
            b.rotate_left(shift % a.len());
            let m = match_spectra(&a, &b, 0.0);
            let mut seen_a: Vec<usize> = m.pairs.iter().map(|p| p.0).collect();
            let mut seen_b: Vec<usize> = m.pairs.iter().map(|p| p.1).collect();
            seen_a.sort_unstable();
            seen_b.sort_unstable();
            prop_assert_eq!(seen_a, (0..a.len()).collect::<Vec<_>>());
            prop_assert_eq!(seen_b, (0..a.len()).collect::<Vec<_>>());
            let h = hungarian_match(&a, &b);
            let total: f64 = h.pairs.iter().map(|&(i, j)| (a[i] - b[j]).norm()).sum();
            prop_assert!(total <= a.len() as f64 * 0.0224 + 1e-9);

            let sv = spectral_variation(&a, &b);
            let mut rev = b.clone();
            rev.reverse();
            prop_assert_eq!(sv, spectral_variation(&a, &rev));
        }
    }
}
