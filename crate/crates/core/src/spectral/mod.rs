//! Eigenpairs of `H` and `H̃`, the parity transform linking them, and
//! spectrum-mirror checks.
//!
//! Small lattices (`N <= dense_limit`) use a dense symmetric
//! eigendecomposition, which yields every ordinal exactly. Larger lattices
//! use thick-restart Lanczos from either end of the spectrum; the top end is
//! reached through `(4d + V_max) I - H`, and every returned ordinal is
//! certified by inertia counting.

pub mod inertia;
pub mod lanczos;
pub mod weighted;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::lattice::LatticeGeometry;
use crate::operators::{HamiltonianOperator, SiteOperator};

pub use inertia::count_below;
pub use lanczos::{lowest_pairs, LanczosOptions, Reflected, RitzPair};
pub use weighted::{refine_weighted, weighted_inverse_iteration};

pub const DEFAULT_EIGEN_TOL: f64 = 1e-8;
pub const DEFAULT_DENSE_LIMIT: usize = 2000;
/// Largest number of extremal pairs the iterative path will compute.
pub const MAX_ITERATIVE_PAIRS: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenpair {
    pub mu: f64,
    /// Unit Euclidean norm; the entry of largest magnitude is positive.
    pub phi: Vec<f64>,
    /// `||H φ - μ φ||_2`.
    pub residual: f64,
    /// 1-based position in the ascending spectrum.
    pub ordinal: usize,
}

/// Which eigenpairs to compute. Ordinals are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "select", rename_all = "lowercase")]
pub enum Selection {
    Lowest { count: usize },
    Highest { count: usize },
    /// Inclusive ordinal range.
    Range { from: usize, to: usize },
    List { ordinals: Vec<usize> },
}

impl Selection {
    /// Sorted, deduplicated ordinals for a spectrum of size `n`.
    pub fn ordinals(&self, n: usize) -> Result<Vec<usize>> {
        let mut out: Vec<usize> = match self {
            Selection::Lowest { count } => (1..=*count).collect(),
            Selection::Highest { count } => {
                if *count > n {
                    return Err(Error::IndexOutOfRange { index: *count, len: n });
                }
                (n - count + 1..=n).collect()
            }
            Selection::Range { from, to } => (*from..=*to).collect(),
            Selection::List { ordinals } => ordinals.clone(),
        };
        out.sort_unstable();
        out.dedup();
        if let Some(&bad) = out.iter().find(|&&o| o == 0 || o > n) {
            return Err(Error::IndexOutOfRange { index: bad, len: n });
        }
        Ok(out)
    }
}

impl std::str::FromStr for Selection {
    type Err = Error;

    /// `lowest:K`, `highest:K`, `I..J`, `I-J` or a comma list `1,4,12`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let num = |t: &str| t.trim().parse::<usize>().map_err(|e| Error::Parse(format!("bad ordinal '{t}': {e}")));
        if let Some(rest) = s.strip_prefix("lowest:") {
            return Ok(Selection::Lowest { count: num(rest)? });
        }
        if let Some(rest) = s.strip_prefix("highest:") {
            return Ok(Selection::Highest { count: num(rest)? });
        }
        for sep in ["..=", "..", "-"] {
            if let Some((a, b)) = s.split_once(sep) {
                let (from, to) = (num(a)?, num(b)?);
                if from == 0 || to < from {
                    return Err(Error::Parse(format!("bad ordinal range '{s}'")));
                }
                return Ok(Selection::Range { from, to });
            }
        }
        let ordinals = s.split(',').map(num).collect::<Result<Vec<_>>>()?;
        if ordinals.is_empty() {
            return Err(Error::Parse("empty eigenpair selection".into()));
        }
        Ok(Selection::List { ordinals })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    pub tol: f64,
    /// Lattices up to this many sites use the dense path.
    pub dense_limit: usize,
    pub lanczos: LanczosOptions,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_EIGEN_TOL, dense_limit: DEFAULT_DENSE_LIMIT, lanczos: LanczosOptions::default() }
    }
}

impl EigenOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// Flips the vector so its largest-magnitude entry (first on ties) is positive.
pub fn orient(phi: &mut [f64]) {
    let mut best = 0;
    for (i, x) in phi.iter().enumerate() {
        if x.abs() > phi[best].abs() {
            best = i;
        }
    }
    if phi.get(best).is_some_and(|&x| x < 0.0) {
        phi.iter_mut().for_each(|x| *x = -*x);
    }
}

fn residual_norm<A: SiteOperator>(op: &A, mu: f64, phi: &[f64]) -> f64 {
    let mut hphi = vec![0.0; phi.len()];
    op.apply_into(phi, &mut hphi);
    hphi.iter().zip(phi).map(|(a, b)| (a - mu * b).powi(2)).sum::<f64>().sqrt()
}

fn finish<A: SiteOperator>(op: &A, mu: f64, mut phi: Vec<f64>, ordinal: usize) -> Eigenpair {
    let norm = phi.iter().map(|x| x * x).sum::<f64>().sqrt();
    phi.iter_mut().for_each(|x| *x /= norm);
    orient(&mut phi);
    let residual = residual_norm(op, mu, &phi);
    Eigenpair { mu, phi, residual, ordinal }
}

/// Full ascending spectrum with eigenvectors as columns (dense path).
pub fn dense_eigen(matrix: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = matrix.nrows();
    let eig = SymmetricEigen::new(matrix);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Ascending dense spectrum of `h`.
pub fn dense_spectrum(h: &HamiltonianOperator) -> Vec<f64> {
    let mut ev: Vec<f64> = h.to_dense().symmetric_eigenvalues().iter().cloned().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Computes the selected eigenpairs of `h`, ascending by eigenvalue.
pub fn eigenpairs(h: &HamiltonianOperator, selection: &Selection, tol: f64) -> Result<Vec<Eigenpair>> {
    eigenpairs_with(h, selection, &EigenOptions::with_tol(tol))
}

pub fn eigenpairs_with(h: &HamiltonianOperator, selection: &Selection, opts: &EigenOptions) -> Result<Vec<Eigenpair>> {
    let n = h.geom().len();
    let wanted = selection.ordinals(n)?;
    if wanted.is_empty() {
        return Ok(Vec::new());
    }
    let pairs = if n <= opts.dense_limit {
        let (values, vectors) = dense_eigen(h.to_dense());
        wanted
            .iter()
            .map(|&o| finish(h, values[o - 1], vectors.column(o - 1).iter().cloned().collect(), o))
            .collect::<Vec<_>>()
    } else {
        iterative_pairs(h, &wanted, opts)?
    };
    if let Some(bad) = pairs.iter().find(|p| !(p.residual <= opts.tol)) {
        return Err(Error::EigenSolverFailed(format!(
            "eigenpair {} has residual {:e} above tolerance {:e}",
            bad.ordinal, bad.residual, opts.tol
        )));
    }
    Ok(pairs)
}

fn iterative_pairs(h: &HamiltonianOperator, wanted: &[usize], opts: &EigenOptions) -> Result<Vec<Eigenpair>> {
    let n = h.geom().len();
    let first = wanted[0];
    let last = *wanted.last().unwrap();
    let lanczos = LanczosOptions { tol: opts.tol, ..opts.lanczos };
    let from_bottom = last;
    let from_top = n - first + 1;
    let pairs: Vec<Eigenpair> = if from_bottom <= from_top && from_bottom <= MAX_ITERATIVE_PAIRS {
        let ritz = lowest_pairs(h, from_bottom, &lanczos, h.exec())?;
        wanted
            .iter()
            .map(|&o| finish(h, ritz[o - 1].value, ritz[o - 1].vector.clone(), o))
            .collect()
    } else if from_top <= MAX_ITERATIVE_PAIRS {
        let shift = h.spectral_top();
        let reflected = Reflected { op: h, shift };
        let ritz = lowest_pairs(&reflected, from_top, &lanczos, h.exec())?;
        wanted
            .iter()
            .map(|&o| {
                let r = &ritz[n - o];
                finish(h, shift - r.value, r.vector.clone(), o)
            })
            .collect()
    } else {
        return Err(Error::EigenSolverFailed(format!(
            "ordinals {first}..{last} are deeper than {MAX_ITERATIVE_PAIRS} from both spectrum edges at N = {n}"
        )));
    };
    for p in &pairs {
        certify_ordinal(h, p, opts.tol)?;
    }
    Ok(pairs)
}

/// Checks that `p.ordinal` is consistent with the inertia of `H - σ I` on
/// both sides of `p.mu`.
pub fn certify_ordinal(h: &HamiltonianOperator, p: &Eigenpair, tol: f64) -> Result<()> {
    let eta = 10.0 * tol.max(p.residual);
    let below = count_below(h, p.mu - eta);
    let upto = count_below(h, p.mu + eta);
    if below < p.ordinal && upto >= p.ordinal {
        Ok(())
    } else {
        Err(Error::EigenSolverFailed(format!(
            "ordinal {} not certified: {below} eigenvalues below and {upto} up to mu = {} ± {eta:e}",
            p.ordinal, p.mu
        )))
    }
}

/// `φ̃_n = (-1)^{s(n)} φ_n` with `s(n)` the coordinate sum.
pub fn dual_transform(geom: &LatticeGeometry, phi: &[f64]) -> Result<Vec<f64>> {
    check_len(geom.len(), phi.len())?;
    if geom.is_periodic() && geom.side() % 2 == 1 {
        return Err(Error::OddPeriodicDual { side: geom.side() });
    }
    Ok(phi.iter().enumerate().map(|(n, &x)| geom.parity_sign(n) * x).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityEntry {
    pub ordinal: usize,
    pub mu: f64,
    /// `4d + V_max - μ`.
    pub mu_dual: f64,
    /// `||H̃ φ̃ - μ̃ φ̃||_2`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub entries: Vec<DualityEntry>,
    pub max_residual: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Verifies that each `(μ, φ)` maps to the eigenpair `(4d + V_max - μ, φ̃)`
/// of the dual operator.
pub fn check_duality(h: &HamiltonianOperator, pairs: &[Eigenpair], tol: f64) -> Result<DualityReport> {
    let dual = h.dual()?;
    let top = h.spectral_top();
    let mut entries = Vec::with_capacity(pairs.len());
    for p in pairs {
        let phi_dual = dual_transform(h.geom(), &p.phi)?;
        let mu_dual = top - p.mu;
        let residual = residual_norm(&dual, mu_dual, &phi_dual);
        entries.push(DualityEntry { ordinal: p.ordinal, mu: p.mu, mu_dual, residual });
    }
    let max_residual = entries.iter().map(|e| e.residual).fold(0.0, f64::max);
    Ok(DualityReport { entries, max_residual, tol, passed: max_residual <= tol })
}

/// Largest deviation between sorted `eig(H̃)` and `(4d + V_max) - reverse(sorted eig(H))`.
pub fn spectrum_mirror_deviation(h: &HamiltonianOperator) -> Result<f64> {
    let dual = h.dual()?;
    let top = h.spectral_top();
    let primal = dense_spectrum(h);
    let mirrored = dense_spectrum(&dual);
    Ok(mirrored
        .iter()
        .zip(primal.iter().rev())
        .map(|(d, p)| (d - (top - p)).abs())
        .fold(0.0, f64::max))
}
