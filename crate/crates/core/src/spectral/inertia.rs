//! Eigenvalue counting by Sylvester inertia.
//!
//! The number of eigenvalues of `H` below `σ` equals the number of negative
//! pivots in an `LDL^T` factorization of `H - σ I`. The factorization runs in
//! band storage; periodic lattices are renumbered with a folded ordering
//! (`0, K-1, 1, K-2, ...` per axis) so that wrap-around bonds stay within a
//! band of width `2 K^(d-1)`.

use crate::lattice::LatticeGeometry;
use crate::operators::HamiltonianOperator;

/// Position of 0-based coordinate `c` in the folded order of `0..k`.
fn folded(c: usize, k: usize) -> usize {
    if c < k.div_ceil(2) {
        2 * c
    } else {
        2 * (k - 1 - c) + 1
    }
}

/// Band-reducing renumbering: folded per axis on the torus, natural otherwise.
pub(crate) fn permutation(geom: &LatticeGeometry) -> Vec<usize> {
    let k = geom.side();
    (0..geom.len())
        .map(|n| {
            (0..geom.dim())
                .map(|i| {
                    let c = geom.coord0(n, i);
                    let p = if geom.is_periodic() { folded(c, k) } else { c };
                    p * geom.stride(i)
                })
                .sum()
        })
        .collect()
}

/// Banded symmetric matrix, lower band stored row-wise.
struct Band {
    n: usize,
    b: usize,
    // row i holds columns i-b ..= i at offsets 0..=b (offset = col - (i - b))
    data: Vec<f64>,
}

impl Band {
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.b + 1) + (j + self.b - i)
    }
}

/// Number of eigenvalues of `h` strictly below `sigma`.
///
/// An exactly vanishing pivot makes the unpivoted factorization
/// meaningless, so the shift is nudged down by a few ulps of the spectral
/// scale and the count repeated.
pub fn count_below(h: &HamiltonianOperator, sigma: f64) -> usize {
    let scale = h.spectral_top().abs() + sigma.abs() + 1.0;
    let mut shift = sigma;
    for k in 0..8 {
        if let Some(c) = try_count_below(h, shift) {
            return c;
        }
        shift = sigma - (4u32 << k) as f64 * f64::EPSILON * scale;
    }
    try_count_below(h, shift).unwrap_or(0)
}

fn try_count_below(h: &HamiltonianOperator, sigma: f64) -> Option<usize> {
    let geom = h.geom();
    let n = geom.len();
    let perm = permutation(geom);
    let mut b = 0;
    for (p, q) in geom.edges() {
        b = b.max(perm[p].abs_diff(perm[q]));
    }
    let mut band = Band { n, b, data: vec![0.0; n * (b + 1)] };
    let diag = h.effective_potential();
    let two_d = 2.0 * geom.dim() as f64;
    for s in 0..n {
        let i = perm[s];
        let at = band.idx(i, i);
        band.data[at] = two_d + diag[s] - sigma;
        geom.for_each_neighbor(s, |t| {
            let j = perm[t];
            if j < i {
                let at = band.idx(i, j);
                band.data[at] -= 1.0;
            }
        });
    }
    factor_negative_pivots(&mut band)
}

fn factor_negative_pivots(band: &mut Band) -> Option<usize> {
    let (n, b) = (band.n, band.b);
    let mut d = vec![0.0; n];
    let mut negatives = 0;
    // after processing row i, band holds L(i, j) for j < i
    for i in 0..n {
        let lo = i.saturating_sub(b);
        for j in lo..i {
            let lo_j = j.saturating_sub(b).max(lo);
            let mut s = band.data[band.idx(i, j)];
            for k in lo_j..j {
                s -= band.data[band.idx(i, k)] * d[k] * band.data[band.idx(j, k)];
            }
            let at = band.idx(i, j);
            band.data[at] = s / d[j];
        }
        let mut s = band.data[band.idx(i, i)];
        for k in lo..i {
            let l = band.data[band.idx(i, k)];
            s -= l * l * d[k];
        }
        if s == 0.0 || !s.is_finite() {
            return None;
        }
        d[i] = s;
        if s < 0.0 {
            negatives += 1;
        }
    }
    Some(negatives)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::PotentialField;
    use crate::random_media::{generate, PotentialSpec};
    use nalgebra::SymmetricEigen;

    #[test]
    fn folded_order_is_a_permutation() {
        for k in 3..9 {
            let mut seen: Vec<usize> = (0..k).map(|c| folded(c, k)).collect();
            seen.sort();
            assert_eq!(seen, (0..k).collect::<Vec<_>>());
            for c in 0..k {
                assert!(folded(c, k).abs_diff(folded((c + 1) % k, k)) <= 2);
            }
        }
    }

    #[test]
    fn counts_match_dense_spectrum() {
        for (d, k, per) in [(1, 30, true), (1, 31, false), (2, 7, true), (2, 6, false), (3, 4, true)] {
            let g = if per { LatticeGeometry::periodic(d, k) } else { LatticeGeometry::dirichlet(d, k) }.unwrap();
            let v = generate(&PotentialSpec::uniform(5.0, 17), &g).unwrap();
            let h = HamiltonianOperator::new(v);
            let mut ev: Vec<f64> = SymmetricEigen::new(h.to_dense()).eigenvalues.iter().cloned().collect();
            ev.sort_by(f64::total_cmp);
            for j in 0..ev.len() - 1 {
                if ev[j + 1] - ev[j] < 1e-6 {
                    continue;
                }
                let mid = 0.5 * (ev[j] + ev[j + 1]);
                assert_eq!(count_below(&h, mid), j + 1, "d={d} k={k} j={j}");
            }
            assert_eq!(count_below(&h, ev[0] - 1.0), 0);
            assert_eq!(count_below(&h, ev[ev.len() - 1] + 1.0), ev.len());
        }
    }

    #[test]
    fn constant_potential_counts() {
        let g = LatticeGeometry::periodic(1, 4).unwrap();
        let h = HamiltonianOperator::new(PotentialField::constant(g, 1.0).unwrap());
        // spectrum {1, 3, 3, 5}
        assert_eq!(count_below(&h, 2.0), 1);
        assert_eq!(count_below(&h, 4.0), 3);
    }
}
