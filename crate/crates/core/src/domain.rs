//! Continuous domains: a membership oracle plus an optional projection onto
//! the boundary, used to place boundary data.

use alloc::vec::Vec;

use crate::linalg::{dist, norm};

/// A bounded open set given by its membership oracle.
pub trait Domain: Send + Sync {
    /// Membership of `x` in the open domain.
    fn contains(&self, x: &[f64]) -> bool;

    /// Writes the nearest point of the boundary to `x` into `out` and returns
    /// `true`, or returns `false` when the domain has no projection oracle.
    fn project_to_boundary(&self, _x: &[f64], _out: &mut [f64]) -> bool {
        false
    }
}

/// Wraps a bare predicate closure as a [`Domain`] without projection.
pub struct FnDomain<F>(pub F);

impl<F> core::fmt::Debug for FnDomain<F> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str("FnDomain")
    }
}

impl<F: Fn(&[f64]) -> bool + Send + Sync> Domain for FnDomain<F> {
    fn contains(&self, x: &[f64]) -> bool {
        (self.0)(x)
    }
}

/// Open ball `B(center, radius)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: &[f64], radius: f64) -> Self {
        Ball { center: center.to_vec(), radius }
    }

    pub fn unit(dim: usize) -> Self {
        Ball { center: alloc::vec![0.0; dim], radius: 1.0 }
    }
}

impl Domain for Ball {
    fn contains(&self, x: &[f64]) -> bool {
        dist(x, &self.center) < self.radius
    }

    fn project_to_boundary(&self, x: &[f64], out: &mut [f64]) -> bool {
        radial_projection(x, &self.center, self.radius, out);
        true
    }
}

/// Open cube `(-half_width, half_width)^n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cube {
    pub half_width: f64,
}

impl Domain for Cube {
    fn contains(&self, x: &[f64]) -> bool {
        x.iter().all(|v| v.abs() < self.half_width)
    }

    fn project_to_boundary(&self, x: &[f64], out: &mut [f64]) -> bool {
        let a = self.half_width;
        out[..x.len()].copy_from_slice(x);
        if self.contains(x) {
            // push the coordinate nearest to a face onto it
            let (axis, _) = x
                .iter()
                .enumerate()
                .map(|(i, v)| (i, a - v.abs()))
                .fold((0, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best });
            out[axis] = if x[axis] < 0.0 { -a } else { a };
        } else {
            for v in out[..x.len()].iter_mut() {
                *v = v.clamp(-a, a);
            }
        }
        true
    }
}

/// Nearest point of the sphere `|y - center| = radius` to `x`.
pub(crate) fn radial_projection(x: &[f64], center: &[f64], radius: f64, out: &mut [f64]) {
    let n = x.len();
    let mut d = [0.0; crate::linalg::MAX_DIM];
    for i in 0..n {
        d[i] = x[i] - center[i];
    }
    let len = norm(&d[..n]);
    if len == 0.0 {
        d[0] = 1.0;
    }
    let scale = if len == 0.0 { radius } else { radius / len };
    for i in 0..n {
        out[i] = center[i] + d[i] * scale;
    }
}
