//! Uniform grids, rasterized domains and functions living on them.
//!
//! Cells are identified with their centers `origin + i * h`. A cell is
//! INSIDE when its center belongs to the domain, BOUNDARY when it is not
//! inside but lies within the stencil reach (max-norm, in cells) of an
//! INSIDE cell, and OUTSIDE otherwise. Grid functions carry values on
//! INSIDE and BOUNDARY cells.

use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::domain::Domain;
use crate::linalg::{dist, MAX_DIM};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    dim: usize,
    h: f64,
    origin: [f64; MAX_DIM],
    extent: [usize; MAX_DIM],
}

impl GridSpec {
    pub fn new(dim: usize, h: f64, origin: &[f64], extent: &[usize]) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidGrid("dimension must be 2 or 3"));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidGrid("cell spacing must be positive"));
        }
        if origin.len() != dim || extent.len() != dim {
            return Err(Error::InvalidGrid("origin and extent must have one entry per axis"));
        }
        if extent.iter().any(|&e| e < 3) {
            return Err(Error::InvalidGrid("extent must be at least 3 cells per axis"));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite"));
        }
        let mut o = [0.0; MAX_DIM];
        let mut e = [1; MAX_DIM];
        o[..dim].copy_from_slice(origin);
        e[..dim].copy_from_slice(extent);
        Ok(GridSpec { dim, h, origin: o, extent: e })
    }

    /// Grid with a cell centered at `center`, covering the cube of half width
    /// `half_width` around it plus `margin` extra cells on every side.
    pub fn centered(dim: usize, h: f64, center: &[f64], half_width: f64, margin: usize) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidGrid("cell spacing must be positive"));
        }
        if center.len() != dim {
            return Err(Error::InvalidGrid("center must have one entry per axis"));
        }
        let m = libm::ceil(half_width / h - 1e-9).max(0.0) as usize + margin;
        let mut origin = [0.0; MAX_DIM];
        for a in 0..dim {
            origin[a] = center[a] - m as f64 * h;
        }
        Self::new(dim, h, &origin[..dim], &[2 * m + 1; MAX_DIM][..dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin[..self.dim]
    }

    pub fn extent(&self) -> &[usize] {
        &self.extent[..self.dim]
    }

    /// Total number of cells.
    pub fn len(&self) -> usize {
        self.extent[..self.dim].iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat-index stride of each axis; axis 0 is contiguous.
    pub fn strides(&self) -> [usize; MAX_DIM] {
        let mut s = [0; MAX_DIM];
        let mut acc = 1;
        for a in 0..self.dim {
            s[a] = acc;
            acc *= self.extent[a];
        }
        s
    }

    pub fn index(&self, cell: &[usize]) -> usize {
        let s = self.strides();
        (0..self.dim).map(|a| cell[a] * s[a]).sum()
    }

    pub fn cell(&self, index: usize) -> [usize; MAX_DIM] {
        let mut c = [0; MAX_DIM];
        let mut rest = index;
        for a in 0..self.dim {
            c[a] = rest % self.extent[a];
            rest /= self.extent[a];
        }
        c
    }

    pub fn center(&self, index: usize) -> [f64; MAX_DIM] {
        let c = self.cell(index);
        let mut x = [0.0; MAX_DIM];
        for a in 0..self.dim {
            x[a] = self.origin[a] + c[a] as f64 * self.h;
        }
        x
    }

    /// Cell whose center is nearest to `x`, if it lies on the grid.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        let mut c = [0; MAX_DIM];
        for a in 0..self.dim {
            let t = libm::round((x[a] - self.origin[a]) / self.h);
            if t < 0.0 || t >= self.extent[a] as f64 {
                return None;
            }
            c[a] = t as usize;
        }
        Some(self.index(&c[..self.dim]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum CellClass {
    Inside,
    Boundary,
    Outside,
}

/// Rasterization of a domain: per-cell classification plus the continuous
/// membership oracle it came from.
#[derive(Clone)]
pub struct DomainMask {
    spec: GridSpec,
    class: Vec<CellClass>,
    domain: Arc<dyn Domain>,
    reach: usize,
    inside: Vec<usize>,
    boundary: Vec<usize>,
}

impl fmt::Debug for DomainMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DomainMask")
            .field("spec", &self.spec)
            .field("reach", &self.reach)
            .field("inside", &self.inside.len())
            .field("boundary", &self.boundary.len())
            .finish()
    }
}

impl DomainMask {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn class(&self, index: usize) -> CellClass {
        self.class[index]
    }

    pub fn classes(&self) -> &[CellClass] {
        &self.class
    }

    pub fn domain(&self) -> &Arc<dyn Domain> {
        &self.domain
    }

    pub fn reach(&self) -> usize {
        self.reach
    }

    /// Flat indices of INSIDE cells, in increasing (lexicographic) order.
    pub fn inside(&self) -> &[usize] {
        &self.inside
    }

    /// Flat indices of BOUNDARY cells, in increasing order.
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    /// INSIDE and BOUNDARY cells, in that order.
    pub fn valued_cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.inside.iter().chain(self.boundary.iter()).copied()
    }

    /// Point at which boundary data for a BOUNDARY cell is evaluated: the
    /// projection of its center onto the domain boundary when the domain
    /// provides one, otherwise the center itself.
    pub fn boundary_point(&self, index: usize) -> [f64; MAX_DIM] {
        let x = self.spec.center(index);
        let dim = self.spec.dim;
        let mut p = [0.0; MAX_DIM];
        if self.domain.project_to_boundary(&x[..dim], &mut p[..dim]) {
            p
        } else {
            x
        }
    }
}

/// Classifies every cell of `spec` against `domain`.
pub fn rasterize_domain(domain: Arc<dyn Domain>, spec: GridSpec, stencil_reach: usize) -> Result<DomainMask> {
    if stencil_reach == 0 {
        return Err(Error::InvalidGrid("stencil reach must be positive"));
    }
    let dim = spec.dim;
    let len = spec.len();
    let mut is_inside = vec![false; len];
    let mut inside = Vec::new();
    for (idx, flag) in is_inside.iter_mut().enumerate() {
        let x = spec.center(idx);
        if domain.contains(&x[..dim]) {
            *flag = true;
            inside.push(idx);
        }
    }
    if inside.is_empty() {
        return Err(Error::EmptyDomain);
    }
    for &idx in &inside {
        let c = spec.cell(idx);
        for a in 0..dim {
            if c[a] < stencil_reach || c[a] + stencil_reach >= spec.extent[a] {
                return Err(Error::GridTooSmall);
            }
        }
    }

    // max-norm dilation by `stencil_reach`, one axis at a time
    let strides = spec.strides();
    let mut near = is_inside.clone();
    let mut next = vec![false; len];
    for a in 0..dim {
        let (stride, ext) = (strides[a], spec.extent[a]);
        for (idx, out) in next.iter_mut().enumerate() {
            let pos = (idx / stride) % ext;
            let lo = pos.saturating_sub(stencil_reach);
            let hi = (pos + stencil_reach).min(ext - 1);
            let base = idx - pos * stride;
            *out = (lo..=hi).any(|p| near[base + p * stride]);
        }
        core::mem::swap(&mut near, &mut next);
    }

    let mut class = vec![CellClass::Outside; len];
    let mut boundary = Vec::new();
    for idx in 0..len {
        if is_inside[idx] {
            class[idx] = CellClass::Inside;
        } else if near[idx] {
            class[idx] = CellClass::Boundary;
            boundary.push(idx);
        }
    }
    if boundary.is_empty() {
        return Err(Error::DegenerateDomain);
    }
    Ok(DomainMask { spec, class, domain, reach: stencil_reach, inside, boundary })
}

/// Real values on the INSIDE and BOUNDARY cells of a mask. OUTSIDE cells
/// hold NaN and are never read.
#[derive(Clone, Debug)]
pub struct GridFunction {
    mask: Arc<DomainMask>,
    values: Vec<f64>,
}

impl GridFunction {
    /// `f` evaluated at the center of every INSIDE and BOUNDARY cell.
    pub fn from_fn(mask: &Arc<DomainMask>, f: impl Fn(&[f64]) -> f64) -> Self {
        let dim = mask.spec.dim;
        let mut values = vec![f64::NAN; mask.spec.len()];
        for idx in mask.valued_cells() {
            let x = mask.spec.center(idx);
            values[idx] = f(&x[..dim]);
        }
        GridFunction { mask: mask.clone(), values }
    }

    /// Dirichlet data: `g` at [`DomainMask::boundary_point`] of each BOUNDARY
    /// cell, zero on INSIDE cells.
    pub fn boundary_data(mask: &Arc<DomainMask>, g: impl Fn(&[f64]) -> f64) -> Self {
        let dim = mask.spec.dim;
        let mut values = vec![f64::NAN; mask.spec.len()];
        for &idx in &mask.inside {
            values[idx] = 0.0;
        }
        for &idx in &mask.boundary {
            let p = mask.boundary_point(idx);
            values[idx] = g(&p[..dim]);
        }
        GridFunction { mask: mask.clone(), values }
    }

    pub fn constant(mask: &Arc<DomainMask>, c: f64) -> Self {
        Self::from_fn(mask, |_| c)
    }

    /// Wraps a full-grid value vector; values must be finite on every INSIDE
    /// and BOUNDARY cell.
    pub fn from_values(mask: &Arc<DomainMask>, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != mask.spec.len() {
            return Err(Error::InvalidGrid("value vector length does not match the grid"));
        }
        for idx in mask.valued_cells() {
            if !values[idx].is_finite() {
                return Err(Error::NonFiniteBoundary { cell: idx });
            }
        }
        for (idx, v) in values.iter_mut().enumerate() {
            if mask.class[idx] == CellClass::Outside {
                *v = f64::NAN;
            }
        }
        Ok(GridFunction { mask: mask.clone(), values })
    }

    pub fn mask(&self) -> &Arc<DomainMask> {
        &self.mask
    }

    pub fn value(&self, index: usize) -> f64 {
        self.values[index]
    }

    /// Full-grid values, NaN on OUTSIDE cells.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Applies `f` to every valued cell.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        for idx in self.mask.valued_cells() {
            out.values[idx] = f(self.values[idx]);
        }
        out
    }

    /// Overwrites the value of a valued cell.
    pub fn set(&mut self, index: usize, value: f64) {
        debug_assert!(self.mask.class[index] != CellClass::Outside);
        self.values[index] = value;
    }

    /// Minimum and maximum over BOUNDARY cells.
    pub fn boundary_range(&self) -> (f64, f64) {
        self.mask.boundary.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            (lo.min(self.values[i]), hi.max(self.values[i]))
        })
    }
}

/// A set of points used to restrict norm and oscillation queries, e.g.
/// `Omega_r = Omega ∩ B_r`. Balls are open.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    Whole,
    Ball { center: Vec<f64>, radius: f64 },
    Intersect(Box<Region>, Box<Region>),
}

impl Region {
    pub fn ball(center: &[f64], radius: f64) -> Result<Region> {
        if !(radius > 0.0) || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidRegion);
        }
        Ok(Region::Ball { center: center.to_vec(), radius })
    }

    pub fn intersect(self, other: Region) -> Region {
        Region::Intersect(Box::new(self), Box::new(other))
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Whole => true,
            Region::Ball { center, radius } => dist(x, center) < *radius,
            Region::Intersect(a, b) => a.contains(x) && b.contains(x),
        }
    }
}

/// Minimum and maximum of `f` over valued cells whose centers lie in `r`.
pub fn extremes_on(f: &GridFunction, r: &Region) -> Result<(f64, f64)> {
    let spec = &f.mask.spec;
    let dim = spec.dim;
    let mut found = false;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for idx in f.mask.valued_cells() {
        let x = spec.center(idx);
        if r.contains(&x[..dim]) {
            found = true;
            lo = lo.min(f.values[idx]);
            hi = hi.max(f.values[idx]);
        }
    }
    if !found {
        return Err(Error::EmptyRegion);
    }
    Ok((lo, hi))
}

/// Discrete `L^inf` norm of `f` over the region.
pub fn sup_abs_on(f: &GridFunction, r: &Region) -> Result<f64> {
    let (lo, hi) = extremes_on(f, r)?;
    Ok(lo.abs().max(hi.abs()))
}

/// `max - min` of `f` over the region.
pub fn osc_on(f: &GridFunction, r: &Region) -> Result<f64> {
    let (lo, hi) = extremes_on(f, r)?;
    Ok(hi - lo)
}
