//! Tight-binding Schrödinger operators `H = -Δ + V` on a lattice.
//!
//! Operators are applied matrix-free from the geometry and the on-site
//! potential:
//!
//! ```text
//! (H φ)_n = 2d φ_n - Σ_{m ~ n, m ∈ M} φ_m + v_n φ_n
//! ```
//!
//! Under Dirichlet conditions the neighbor sum runs over in-cube sites only
//! while the diagonal stays `2d`, which is the zero extension of `φ`. The dual
//! operator replaces `v_n` by `V_max - v_n`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::exec::Exec;
use crate::lattice::LatticeGeometry;

/// A linear operator acting on site vectors of a fixed length.
pub trait SiteOperator: Sync {
    fn len(&self) -> usize;

    /// `y = A x`. Callers guarantee both slices have length [`Self::len`].
    fn apply_into(&self, x: &[f64], y: &mut [f64]);

    /// Main diagonal, when cheaply available.
    fn diagonal(&self) -> Option<Vec<f64>> {
        None
    }

    /// `out = rhs - A x`. Implementations may evaluate this more accurately
    /// than a plain apply followed by a subtraction.
    fn residual_into(&self, x: &[f64], rhs: &[f64], out: &mut [f64]) {
        self.apply_into(x, out);
        for (o, b) in out.iter_mut().zip(rhs) {
            *o = b - *o;
        }
    }

    fn apply_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.len(), x.len())?;
        let mut y = vec![0.0; x.len()];
        self.apply_into(x, &mut y);
        Ok(y)
    }
}

/// On-site potential values with the recorded upper bound `V_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialField {
    geom: LatticeGeometry,
    values: Vec<f64>,
    v_max: f64,
}

impl PotentialField {
    /// Validates `0 <= v_n <= V_max` for every site.
    pub fn new(geom: LatticeGeometry, values: Vec<f64>, v_max: f64) -> Result<Self> {
        check_len(geom.len(), values.len())?;
        if !(v_max.is_finite() && v_max >= 0.0) {
            return Err(Error::InvalidPotential(format!("V_max must be finite and non-negative, got {v_max}")));
        }
        if let Some((n, v)) = values
            .iter()
            .enumerate()
            .find(|(_, &v)| !(v.is_finite() && (0.0..=v_max).contains(&v)))
        {
            return Err(Error::InvalidPotential(format!("v[{n}] = {v} outside [0, {v_max}]")));
        }
        Ok(Self { geom, values, v_max })
    }

    /// Like [`Self::new`] with `V_max` taken as the largest value.
    pub fn from_values(geom: LatticeGeometry, values: Vec<f64>) -> Result<Self> {
        let v_max = values.iter().cloned().fold(0.0, f64::max);
        Self::new(geom, values, v_max)
    }

    pub fn constant(geom: LatticeGeometry, c: f64) -> Result<Self> {
        Self::new(geom, vec![c; geom.len()], c)
    }

    pub fn geom(&self) -> &LatticeGeometry {
        &self.geom
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn is_identically_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// `V_max - v_n`, keeping the same recorded `V_max`.
    pub fn complement(&self) -> PotentialField {
        PotentialField {
            geom: self.geom,
            values: self.values.iter().map(|v| self.v_max - v).collect(),
            v_max: self.v_max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorForm {
    Standard,
    Dual,
}

/// `H = -Δ + V` (standard form) or `H̃ = -Δ + (V_max - V)` (dual form).
#[derive(Debug, Clone)]
pub struct HamiltonianOperator {
    geom: LatticeGeometry,
    potential: PotentialField,
    form: OperatorForm,
    onsite: Vec<f64>,
    exec: Exec,
}

impl HamiltonianOperator {
    pub fn new(potential: PotentialField) -> Self {
        Self::with_form(potential, OperatorForm::Standard)
    }

    fn with_form(potential: PotentialField, form: OperatorForm) -> Self {
        let geom = *potential.geom();
        let two_d = 2.0 * geom.dim() as f64;
        let v_max = potential.v_max();
        let onsite = potential
            .values()
            .iter()
            .map(|&v| match form {
                OperatorForm::Standard => two_d + v,
                OperatorForm::Dual => two_d + (v_max - v),
            })
            .collect();
        Self { geom, potential, form, onsite, exec: Exec::default() }
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn exec(&self) -> Exec {
        self.exec
    }

    pub fn geom(&self) -> &LatticeGeometry {
        &self.geom
    }

    /// The potential this operator was built from (untransformed for the dual form).
    pub fn potential(&self) -> &PotentialField {
        &self.potential
    }

    pub fn form(&self) -> OperatorForm {
        self.form
    }

    pub fn v_max(&self) -> f64 {
        self.potential.v_max()
    }

    /// `4d + V_max`, the top of the spectral window.
    pub fn spectral_top(&self) -> f64 {
        self.geom.spectral_top(self.v_max())
    }

    /// Potential value actually multiplying `φ_n` in this form.
    pub fn effective_potential(&self) -> Vec<f64> {
        let two_d = 2.0 * self.geom.dim() as f64;
        self.onsite.iter().map(|d| d - two_d).collect()
    }

    /// Dual operator `-Δ + (V_max - V)`.
    pub fn dual(&self) -> Result<HamiltonianOperator> {
        if self.form == OperatorForm::Dual {
            return Err(Error::AlreadyDual);
        }
        if self.geom.is_periodic() && self.geom.side() % 2 == 1 {
            return Err(Error::OddPeriodicDual { side: self.geom.side() });
        }
        Ok(Self::with_form(self.potential.clone(), OperatorForm::Dual).with_exec(self.exec))
    }

    /// Recovers the standard operator from a dual one.
    pub fn primal(&self) -> HamiltonianOperator {
        Self::with_form(self.potential.clone(), OperatorForm::Standard).with_exec(self.exec)
    }

    /// Applies the operator, checking the input length.
    pub fn apply(&self, phi: &[f64]) -> Result<Vec<f64>> {
        self.apply_vec(phi)
    }

    #[inline]
    fn row(&self, x: &[f64], n: usize) -> f64 {
        let mut s = self.onsite[n] * x[n];
        self.geom.for_each_neighbor(n, |m| s -= x[m]);
        s
    }

    /// `rhs_n - (H x)_n` accumulated in double-double arithmetic.
    #[inline]
    fn residual_row(&self, x: &[f64], rhs: f64, n: usize) -> f64 {
        let p = self.onsite[n] * x[n];
        let e = self.onsite[n].mul_add(x[n], -p);
        let (mut hi, mut lo) = two_sum(rhs, -p);
        lo -= e;
        self.geom.for_each_neighbor(n, |m| {
            let (s, t) = two_sum(hi, x[m]);
            hi = s;
            lo += t;
        });
        hi + lo
    }

    /// Explicit dense matrix, for small-instance oracles.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.geom.len();
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = self.onsite[i];
            self.geom.for_each_neighbor(i, |j| a[(i, j)] -= 1.0);
        }
        a
    }

    /// Euclidean quadratic form `<f, H f>`.
    pub fn quadratic_form(&self, f: &[f64]) -> Result<f64> {
        let hf = self.apply(f)?;
        Ok(self.exec.dot(f, &hf))
    }
}

impl SiteOperator for HamiltonianOperator {
    fn len(&self) -> usize {
        self.geom.len()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.exec.fill(y, |n| self.row(x, n));
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        Some(self.onsite.clone())
    }

    fn residual_into(&self, x: &[f64], rhs: &[f64], out: &mut [f64]) {
        self.exec.fill(out, |n| self.residual_row(x, rhs[n], n));
    }
}

/// Error-free transformation `a + b = s + t`.
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Returns the dual operator; see [`HamiltonianOperator::dual`].
pub fn dual_operator(h: &HamiltonianOperator) -> Result<HamiltonianOperator> {
    h.dual()
}

/// Discrete `-Δ` (no potential) for the given geometry.
pub fn neg_laplacian(geom: &LatticeGeometry, f: &[f64]) -> Result<Vec<f64>> {
    check_len(geom.len(), f.len())?;
    let two_d = 2.0 * geom.dim() as f64;
    Ok((0..geom.len())
        .map(|n| {
            let mut s = two_d * f[n];
            geom.for_each_neighbor(n, |m| s -= f[m]);
            s
        })
        .collect())
}

/// Forward differences `∇_i f_n = f_{n+e_i} - f_n`, stored site-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    dim: usize,
    values: Vec<f64>,
}

impl GradientField {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, n: usize, axis: usize) -> f64 {
        self.values[n * self.dim + axis]
    }

    pub fn at(&self, n: usize) -> &[f64] {
        &self.values[n * self.dim..(n + 1) * self.dim]
    }

    /// `(∇g · ∇f)(n)`.
    pub fn dot_at(&self, other: &GradientField, n: usize) -> f64 {
        self.at(n).iter().zip(other.at(n)).map(|(a, b)| a * b).sum()
    }
}

/// Componentwise forward differences. Periodic geometries wrap; Dirichlet
/// geometries use the zero extension, so `∇_i f_n = -f_n` when `n + e_i`
/// leaves the cube.
pub fn gradient(geom: &LatticeGeometry, f: &[f64]) -> Result<GradientField> {
    check_len(geom.len(), f.len())?;
    let d = geom.dim();
    let mut values = Vec::with_capacity(geom.len() * d);
    for n in 0..geom.len() {
        for axis in 0..d {
            let next = geom.step(n, axis, true).map_or(0.0, |m| f[m]);
            values.push(next - f[n]);
        }
    }
    Ok(GradientField { dim: d, values })
}

/// `-Δ^AP + Ṽ` on a 1-d ring: the wrap-around hoppings carry the opposite
/// sign. Kept only to exhibit the failure of the maximum principle.
#[derive(Debug, Clone)]
pub struct AntiPeriodicOperator {
    potential: Vec<f64>,
}

impl AntiPeriodicOperator {
    pub fn new(geom: &LatticeGeometry, potential: Vec<f64>) -> Result<Self> {
        if geom.dim() != 1 {
            return Err(Error::NotApplicable(format!(
                "anti-periodic operator is one-dimensional only, got d = {}",
                geom.dim()
            )));
        }
        check_len(geom.len(), potential.len())?;
        Ok(Self { potential })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let k = self.potential.len();
        let mut a = DMatrix::zeros(k, k);
        for i in 0..k {
            a[(i, i)] = 2.0 + self.potential[i];
            if i > 0 {
                a[(i, i - 1)] = -1.0;
            }
            if i + 1 < k {
                a[(i, i + 1)] = -1.0;
            }
        }
        a[(0, k - 1)] = 1.0;
        a[(k - 1, 0)] = 1.0;
        a
    }
}

impl SiteOperator for AntiPeriodicOperator {
    fn len(&self) -> usize {
        self.potential.len()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let k = x.len();
        for n in 0..k {
            let left = if n == 0 { -x[k - 1] } else { x[n - 1] };
            let right = if n + 1 == k { -x[0] } else { x[n + 1] };
            y[n] = (2.0 + self.potential[n]) * x[n] - left - right;
        }
    }
}

/// Applies `-Δ^AP + Ṽ` to `phi` on a ring of `phi.len()` sites.
pub fn antiperiodic_apply_1d(potential: &[f64], phi: &[f64]) -> Result<Vec<f64>> {
    check_len(potential.len(), phi.len())?;
    let geom = LatticeGeometry::periodic(1, phi.len())?;
    AntiPeriodicOperator::new(&geom, potential.to_vec())?.apply_vec(phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::BoundaryCondition;
    use proptest::prelude::*;

    fn op(geom: LatticeGeometry, v: Vec<f64>) -> HamiltonianOperator {
        HamiltonianOperator::new(PotentialField::from_values(geom, v).unwrap())
    }

    #[test]
    fn constant_vector_returns_potential_periodic() {
        let g = LatticeGeometry::periodic(2, 5).unwrap();
        let v: Vec<f64> = (0..25).map(|i| (i % 4) as f64).collect();
        let h = op(g, v.clone());
        let out = h.apply(&vec![1.0; 25]).unwrap();
        for (a, b) in out.iter().zip(&v) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn small_matrices_match_stencils() {
        let p = op(LatticeGeometry::periodic(1, 3).unwrap(), vec![0.0; 3]).to_dense();
        let expect_p = DMatrix::from_row_slice(3, 3, &[2., -1., -1., -1., 2., -1., -1., -1., 2.]);
        assert_eq!(p, expect_p);
        let d = op(LatticeGeometry::dirichlet(1, 3).unwrap(), vec![0.0; 3]).to_dense();
        let expect_d = DMatrix::from_row_slice(3, 3, &[2., -1., 0., -1., 2., -1., 0., -1., 2.]);
        assert_eq!(d, expect_d);
    }

    #[test]
    fn dual_potential_and_errors() {
        let g = LatticeGeometry::periodic(1, 4).unwrap();
        let h = HamiltonianOperator::new(PotentialField::new(g, vec![0., 5., 0., 5.], 5.0).unwrap());
        let hd = h.dual().unwrap();
        assert_eq!(hd.effective_potential(), vec![5., 0., 5., 0.]);
        assert_eq!(hd.dual().unwrap_err(), Error::AlreadyDual);
        assert_eq!(hd.primal().effective_potential(), vec![0., 5., 0., 5.]);

        let half = HamiltonianOperator::new(PotentialField::new(g, vec![2.5; 4], 5.0).unwrap());
        assert_eq!(half.dual().unwrap().effective_potential(), vec![2.5; 4]);

        let odd = op(LatticeGeometry::periodic(1, 5).unwrap(), vec![1.0; 5]);
        assert_eq!(odd.dual().unwrap_err(), Error::OddPeriodicDual { side: 5 });
        let odd_d = op(LatticeGeometry::dirichlet(1, 5).unwrap(), vec![1.0; 5]);
        assert!(odd_d.dual().is_ok());
    }

    #[test]
    fn gradient_examples() {
        let g = LatticeGeometry::periodic(1, 4).unwrap();
        let gr = gradient(&g, &[1., 2., 3., 4.]).unwrap();
        assert_eq!((0..4).map(|n| gr.get(n, 0)).collect::<Vec<_>>(), vec![1., 1., 1., -3.]);
        let gr = gradient(&g, &[0., 1., 0., 1.]).unwrap();
        assert_eq!((0..4).map(|n| gr.get(n, 0)).collect::<Vec<_>>(), vec![1., -1., 1., -1.]);
        let gr = gradient(&LatticeGeometry::periodic(2, 3).unwrap(), &[7.0; 9]).unwrap();
        assert!((0..9).all(|n| gr.at(n).iter().all(|&x| x == 0.0)));
        assert!(gradient(&g, &[1.0; 3]).is_err());
    }

    #[test]
    fn antiperiodic_examples() {
        assert_eq!(antiperiodic_apply_1d(&[0.; 3], &[-1., 1., 3.]).unwrap(), vec![0., 0., 4.]);
        assert_eq!(antiperiodic_apply_1d(&[0.; 3], &[1., 1., 1.]).unwrap(), vec![2., 0., 2.]);
        assert_eq!(antiperiodic_apply_1d(&[0.; 3], &[0., 0., 0.]).unwrap(), vec![0., 0., 0.]);
        let two_d = LatticeGeometry::periodic(2, 3).unwrap();
        assert!(matches!(AntiPeriodicOperator::new(&two_d, vec![0.; 9]), Err(Error::NotApplicable(_))));
        let ap = AntiPeriodicOperator::new(&LatticeGeometry::periodic(1, 3).unwrap(), vec![0.; 3]).unwrap();
        let m = ap.to_dense();
        assert_eq!(m, DMatrix::from_row_slice(3, 3, &[2., -1., 1., -1., 2., -1., 1., -1., 2.]));
    }

    #[test]
    fn potential_validation() {
        let g = LatticeGeometry::periodic(1, 3).unwrap();
        assert!(PotentialField::new(g, vec![0., 6., 1.], 5.0).is_err());
        assert!(PotentialField::new(g, vec![0., -1., 1.], 5.0).is_err());
        assert!(PotentialField::new(g, vec![0., 1.], 5.0).is_err());
        assert!(op(g, vec![0.; 3]).apply(&[1.0; 2]).is_err());
    }

    fn instance() -> impl Strategy<Value = (LatticeGeometry, Vec<f64>, Vec<f64>, Vec<f64>)> {
        (1usize..=2, 3usize..=6, any::<bool>()).prop_flat_map(|(d, k, per)| {
            let bc = if per { BoundaryCondition::Periodic } else { BoundaryCondition::Dirichlet };
            let g = LatticeGeometry::new(d, k, bc).unwrap();
            let n = g.len();
            (
                Just(g),
                prop::collection::vec(0.0..5.0f64, n),
                prop::collection::vec(-1.0..1.0f64, n),
                prop::collection::vec(-1.0..1.0f64, n),
            )
        })
    }

    proptest! {
        #[test]
        fn operator_is_symmetric((g, v, a, b) in instance()) {
            let h = op(g, v);
            let ha = h.apply(&a).unwrap();
            let hb = h.apply(&b).unwrap();
            let l: f64 = b.iter().zip(&ha).map(|(x, y)| x * y).sum();
            let r: f64 = a.iter().zip(&hb).map(|(x, y)| x * y).sum();
            prop_assert!((l - r).abs() <= 1e-12 * (1.0 + l.abs()));
        }

        #[test]
        fn laplacian_is_positive((g, _v, a, _b) in instance()) {
            let la = neg_laplacian(&g, &a).unwrap();
            let q: f64 = a.iter().zip(&la).map(|(x, y)| x * y).sum();
            prop_assert!(q >= -1e-12);
            if !g.is_periodic() {
                let norm: f64 = a.iter().map(|x| x * x).sum();
                if norm > 1e-6 {
                    prop_assert!(q > 0.0);
                }
            }
        }

        #[test]
        fn dense_matches_matrix_free((g, v, a, _b) in instance()) {
            let h = op(g, v);
            let dense = h.to_dense();
            let x = nalgebra::DVector::from_vec(a.clone());
            let y = &dense * &x;
            let z = h.apply(&a).unwrap();
            for i in 0..z.len() {
                prop_assert!((y[i] - z[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn periodic_laplacian_form_vanishes_only_on_constants() {
        let g = LatticeGeometry::periodic(2, 4).unwrap();
        let c = vec![3.0; 16];
        let q: f64 = c.iter().zip(neg_laplacian(&g, &c).unwrap()).map(|(x, y)| x * y).sum();
        assert_eq!(q, 0.0);
        let mut f = c.clone();
        f[5] += 1.0;
        let q: f64 = f.iter().zip(neg_laplacian(&g, &f).unwrap()).map(|(x, y)| x * y).sum();
        assert!(q > 0.0);
    }
}
