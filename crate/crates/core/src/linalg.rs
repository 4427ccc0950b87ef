//! Small dense helpers for points in 2 or 3 dimensions.

use crate::{Error, Result};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 3;

/// Tolerance on `|x| = 1` for arguments that must be unit vectors.
pub const UNIT_TOL: f64 = 1e-9;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

pub(crate) fn check_unit(x: &[f64]) -> Result<()> {
    let n = norm(x);
    if (n - 1.0).abs() > UNIT_TOL || !n.is_finite() {
        return Err(Error::NotUnitVector { norm: n });
    }
    Ok(())
}

/// An orthogonal map of `R^n`, `n <= 3`, stored as a dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Rotation {
    dim: usize,
    m: [[f64; MAX_DIM]; MAX_DIM],
}

impl Rotation {
    pub fn identity(dim: usize) -> Self {
        let mut m = [[0.0; MAX_DIM]; MAX_DIM];
        for (i, row) in m.iter_mut().enumerate().take(dim) {
            row[i] = 1.0;
        }
        Rotation { dim, m }
    }

    /// Orthogonal map `T` with `T e1 = direction`.
    ///
    /// Uses the Householder reflection `I - 2 v v^T / |v|^2` with
    /// `v = e1 - direction`, and the identity when `direction` is `e1` itself.
    /// For `direction = -e1` this is the reflection flipping the first axis.
    pub fn householder_from_e1(direction: &[f64]) -> Result<Self> {
        let dim = direction.len();
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidParams("rotation dimension must be 2 or 3"));
        }
        check_unit(direction)?;
        let mut v = [0.0; MAX_DIM];
        v[..dim].copy_from_slice(direction);
        for x in &mut v[..dim] {
            *x = -*x;
        }
        v[0] += 1.0;
        let vv = dot(&v[..dim], &v[..dim]);
        if vv <= 1e-30 {
            return Ok(Self::identity(dim));
        }
        let mut rot = Self::identity(dim);
        for i in 0..dim {
            for j in 0..dim {
                rot.m[i][j] -= 2.0 * v[i] * v[j] / vv;
            }
        }
        Ok(rot)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    /// `out = T x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.dim) {
            *o = (0..self.dim).map(|j| self.m[i][j] * x[j]).sum();
        }
    }

    /// `out = T^T x`.
    pub fn apply_transpose(&self, x: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate().take(self.dim) {
            *o = (0..self.dim).map(|i| self.m[i][j] * x[i]).sum();
        }
    }

    /// Largest entry of `|T^T T - I|`.
    pub fn orthogonality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let p: f64 = (0..self.dim).map(|k| self.m[k][i] * self.m[k][j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((p - target).abs());
            }
        }
        worst
    }
}
