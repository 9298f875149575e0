//! Lattice geometry for periodic tori `Z^d / K Z^d` and Dirichlet cubes
//! `[1, K]^d`.
//!
//! Sites carry 1-based coordinates in `{1, ..., K}^d` and 0-based linear
//! indices in `[0, K^d)`. The linear index is row-major with dimension 1
//! varying fastest: `linear = sum_i (c_i - 1) * K^(i-1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Periodic,
    Dirichlet,
}

impl std::fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundaryCondition::Periodic => write!(f, "periodic"),
            BoundaryCondition::Dirichlet => write!(f, "dirichlet"),
        }
    }
}

impl std::str::FromStr for BoundaryCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "periodic" => Ok(BoundaryCondition::Periodic),
            "dirichlet" => Ok(BoundaryCondition::Dirichlet),
            other => Err(Error::Parse(format!("unknown boundary condition '{other}'"))),
        }
    }
}

/// A site as both its linear index and its 1-based coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SiteIndex {
    pub linear: usize,
    pub coords: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeGeometry {
    dim: usize,
    side: usize,
    bc: BoundaryCondition,
    len: usize,
}

impl LatticeGeometry {
    pub fn new(dim: usize, side: usize, bc: BoundaryCondition) -> Result<Self> {
        if dim < 1 {
            return Err(Error::InvalidGeometry("dimension must be at least 1".into()));
        }
        if side < 3 {
            return Err(Error::InvalidGeometry(format!("side length must be at least 3, got {side}")));
        }
        let len = u32::try_from(dim)
            .ok()
            .and_then(|d| side.checked_pow(d))
            .ok_or_else(|| Error::InvalidGeometry("site count overflows".into()))?;
        Ok(Self { dim, side, bc, len })
    }

    pub fn periodic(dim: usize, side: usize) -> Result<Self> {
        Self::new(dim, side, BoundaryCondition::Periodic)
    }

    pub fn dirichlet(dim: usize, side: usize) -> Result<Self> {
        Self::new(dim, side, BoundaryCondition::Dirichlet)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    /// Number of sites `N = K^d`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_periodic(&self) -> bool {
        self.bc == BoundaryCondition::Periodic
    }

    /// Upper end `4d + V_max` of the spectral window, given `V_max`.
    pub fn spectral_top(&self, v_max: f64) -> f64 {
        4.0 * self.dim as f64 + v_max
    }

    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        self.side.pow(axis as u32)
    }

    fn check(&self, n: usize) -> Result<()> {
        if n < self.len {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: n, len: self.len })
        }
    }

    /// 0-based coordinate of `n` along `axis` (0-based axis).
    #[inline]
    pub fn coord0(&self, n: usize, axis: usize) -> usize {
        (n / self.stride(axis)) % self.side
    }

    /// 1-based coordinates of a linear index.
    pub fn coords(&self, n: usize) -> Result<Vec<usize>> {
        self.check(n)?;
        Ok((0..self.dim).map(|i| self.coord0(n, i) + 1).collect())
    }

    /// Linear index of 1-based coordinates.
    pub fn index(&self, coords: &[usize]) -> Result<usize> {
        if coords.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: coords.len() });
        }
        let mut n = 0;
        for (i, &c) in coords.iter().enumerate() {
            if c < 1 || c > self.side {
                return Err(Error::IndexOutOfRange { index: c, len: self.side });
            }
            n += (c - 1) * self.stride(i);
        }
        Ok(n)
    }

    pub fn site(&self, n: usize) -> Result<SiteIndex> {
        Ok(SiteIndex { linear: n, coords: self.coords(n)? })
    }

    /// Neighbor of `n` one step along `axis` in direction `forward`, or
    /// `None` when the step leaves a Dirichlet cube.
    #[inline]
    pub fn step(&self, n: usize, axis: usize, forward: bool) -> Option<usize> {
        let s = self.stride(axis);
        let c = self.coord0(n, axis);
        let k = self.side;
        if forward {
            if c + 1 < k {
                Some(n + s)
            } else if self.is_periodic() {
                Some(n + s - k * s)
            } else {
                None
            }
        } else if c > 0 {
            Some(n - s)
        } else if self.is_periodic() {
            Some(n + (k - 1) * s)
        } else {
            None
        }
    }

    /// Calls `f(m)` for every neighbor `m` of `n` in the order
    /// `-e_1, +e_1, -e_2, +e_2, ...`, skipping out-of-cube sites.
    #[inline]
    pub fn for_each_neighbor<F: FnMut(usize)>(&self, n: usize, mut f: F) {
        for axis in 0..self.dim {
            if let Some(m) = self.step(n, axis, false) {
                f(m);
            }
            if let Some(m) = self.step(n, axis, true) {
                f(m);
            }
        }
    }

    /// Nearest neighbors of `n` in the fixed order `-e_1, +e_1, -e_2, ...`.
    pub fn neighbors(&self, n: usize) -> Result<Vec<usize>> {
        self.check(n)?;
        let mut out = Vec::with_capacity(2 * self.dim);
        self.for_each_neighbor(n, |m| out.push(m));
        Ok(out)
    }

    /// Number of out-of-cube neighbors `k_n = 2d - |neighbors(n)|`.
    pub fn boundary_deficiency(&self, n: usize) -> Result<usize> {
        if self.is_periodic() {
            return Err(Error::NotApplicable("boundary deficiency is defined only for Dirichlet cubes".into()));
        }
        self.check(n)?;
        Ok(self.deficiency_unchecked(n))
    }

    #[inline]
    pub(crate) fn deficiency_unchecked(&self, n: usize) -> usize {
        if self.is_periodic() {
            return 0;
        }
        (0..self.dim)
            .map(|i| {
                let c = self.coord0(n, i);
                usize::from(c == 0) + usize::from(c + 1 == self.side)
            })
            .sum()
    }

    /// Sites with some coordinate equal to 1 or K, ascending.
    pub fn inner_boundary(&self) -> Result<Vec<usize>> {
        if self.is_periodic() {
            return Err(Error::NotApplicable("inner boundary is defined only for Dirichlet cubes".into()));
        }
        Ok((0..self.len).filter(|&n| self.deficiency_unchecked(n) > 0).collect())
    }

    /// Undirected lattice edges `(n, n + e_i)` inside `M`, each listed once.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.len).flat_map(move |n| {
            (0..self.dim).filter_map(move |i| self.step(n, i, true).map(|m| (n, m)))
        })
    }

    /// Parity `(-1)^{s(n)}` with `s(n)` the sum of 1-based coordinates.
    #[inline]
    pub fn parity_sign(&self, n: usize) -> f64 {
        let s: usize = (0..self.dim).map(|i| self.coord0(n, i) + 1).sum();
        if s % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}
