//! Discrete infinity-harmonic functions via the wide-stencil midrange scheme
//!
//! ```text
//! u(x) = 1/2 * ( max_r u(x + l_r theta_r) + min_r u(x + l_r theta_r) )
//! ```
//!
//! over the unit directions `theta_r` of all lattice offsets with coprime
//! components and max-norm at most `W`. Rays have Euclidean length `W h` and
//! are sampled by multilinear interpolation between cell centers. A ray that
//! would enter a non-INSIDE cell is cut where it first touches one, and both
//! rays of an opposite pair are cut to the shorter of the two lengths, so
//! the scheme is monotone and reproduces affine functions exactly.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::grid::{CellClass, DomainMask, GridFunction};
use crate::linalg::MAX_DIM;
use crate::{Error, Result};

pub const DEFAULT_STENCIL_WIDTH: usize = 3;

/// Residual target used when the boundary data is constant.
pub const ABSOLUTE_TOL: f64 = 1e-14;

// Tie tolerance, in cell units, for rays crossing several cell faces at once.
const TIE_EPS: f64 = 1e-9;
const SNAP_EPS: f64 = 1e-12;
const TEMPLATE: u32 = u32::MAX;

/// Stencil directions: lattice offsets `d` with `|d|_inf <= width` and
/// coprime components, stored in opposite pairs `(d, -d)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StencilSpec {
    dim: usize,
    width: usize,
    directions: Vec<[i32; MAX_DIM]>,
}

fn gcd(a: i32, b: i32) -> i32 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl StencilSpec {
    pub fn new(dim: usize, width: usize) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidParams("stencil dimension must be 2 or 3"));
        }
        if width == 0 || width > 16 {
            return Err(Error::InvalidParams("stencil width must be in 1..=16"));
        }
        let w = width as i32;
        let z_range = if dim == 3 { -w..=w } else { 0..=0 };
        let mut directions = Vec::new();
        for z in z_range {
            for y in -w..=w {
                for x in -w..=w {
                    let d = [x, y, z];
                    if gcd(gcd(x, y), z) != 1 {
                        continue;
                    }
                    // keep one representative per line: first nonzero entry positive
                    let lead = d.iter().copied().find(|&c| c != 0).unwrap_or(0);
                    if lead > 0 {
                        directions.push(d);
                        directions.push([-x, -y, -z]);
                    }
                }
            }
        }
        Ok(StencilSpec { dim, width, directions })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// All directions; entries `2p` and `2p + 1` are opposite.
    pub fn directions(&self) -> &[[i32; MAX_DIM]] {
        &self.directions
    }

    fn unit(&self, r: usize) -> [f64; MAX_DIM] {
        let d = self.directions[r];
        let n = libm::sqrt(d.iter().map(|&c| (c * c) as f64).sum());
        let mut u = [0.0; MAX_DIM];
        for a in 0..self.dim {
            u[a] = d[a] as f64 / n;
        }
        u
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sweep {
    Jacobi,
    /// In-place updates, alternating lexicographic and reverse order.
    GaussSeidel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveParams {
    /// Residual target as a fraction of the boundary-data oscillation.
    pub tol: f64,
    pub max_iters: usize,
    pub sweep: Sweep,
    /// Over-relaxation factor for Gauss-Seidel sweeps; `None` picks one from
    /// the grid size. Ignored for Jacobi sweeps.
    pub relaxation: Option<f64>,
}

impl Default for SolveParams {
    fn default() -> Self {
        SolveParams { tol: 1e-8, max_iters: 1_000_000, sweep: Sweep::GaussSeidel, relaxation: None }
    }
}

impl SolveParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidParams("tol must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParams("max_iters must be at least 1"));
        }
        if let Some(w) = self.relaxation {
            if !(1.0..2.0).contains(&w) {
                return Err(Error::InvalidParams("relaxation must lie in [1, 2)"));
            }
        }
        Ok(())
    }
}

/// Output of [`solve_dirichlet`].
#[derive(Clone, Debug)]
pub struct Solution {
    pub field: GridFunction,
    pub sweeps: usize,
    /// Final fixed-point residual, in the units of the data.
    pub residual: f64,
}

/// The midrange map of one mask and stencil, with all ray interpolation
/// weights precomputed.
///
/// Cells whose rays all have full length share one relative template; cells
/// near the boundary store their own absolute taps.
#[derive(Clone, Debug)]
pub struct MidrangeOperator {
    mask: Arc<DomainMask>,
    stencil: StencilSpec,
    cells: Vec<u32>,
    near: Vec<u32>,
    rays: usize,
    tmpl_off: Vec<isize>,
    tmpl_w: Vec<f64>,
    taps_per_ray: usize,
    near_idx: Vec<u32>,
    near_w: Vec<f64>,
}

struct Taps {
    len: usize,
    off: [isize; 8],
    w: [f64; 8],
}

impl MidrangeOperator {
    pub fn new(mask: &Arc<DomainMask>, stencil: &StencilSpec) -> Result<Self> {
        let spec = mask.spec();
        let dim = spec.dim();
        if stencil.dim() != dim {
            return Err(Error::InvalidParams("stencil and grid dimensions differ"));
        }
        if spec.len() > u32::MAX as usize {
            return Err(Error::InvalidGrid("grid too large"));
        }
        let strides = spec.strides();
        let rays = stencil.directions.len();
        let width = stencil.width as f64;
        let units: Vec<[f64; MAX_DIM]> = (0..rays).map(|r| stencil.unit(r)).collect();

        // every ray gets 2^dim taps, padded with zero weights on the cell itself
        let taps_per_ray = 1 << dim;
        let mut tmpl_off = Vec::with_capacity(rays * taps_per_ray);
        let mut tmpl_w = Vec::with_capacity(rays * taps_per_ray);
        for unit in &units {
            let taps = ray_taps(dim, &strides, unit, width);
            for t in 0..taps_per_ray {
                tmpl_off.push(if t < taps.len { taps.off[t] } else { 0 });
                tmpl_w.push(if t < taps.len { taps.w[t] } else { 0.0 });
            }
        }
        let mut cells = Vec::with_capacity(mask.inside().len());
        let mut near = Vec::with_capacity(mask.inside().len());
        let mut near_idx = Vec::new();
        let mut near_w = Vec::new();
        let mut lengths = vec![0.0; rays / 2];
        for &idx in mask.inside() {
            cells.push(idx as u32);
            let cell = spec.cell(idx);
            let mut full = true;
            for (p, len) in lengths.iter_mut().enumerate() {
                let fwd = truncation(mask, &cell, &units[2 * p], width);
                let back = truncation(mask, &cell, &units[2 * p + 1], width);
                *len = fwd.min(back);
                full &= *len == width;
            }
            if full {
                near.push(TEMPLATE);
                continue;
            }
            near.push((near_idx.len() / (rays * taps_per_ray)) as u32);
            for (r, unit) in units.iter().enumerate() {
                let taps = ray_taps(dim, &strides, unit, lengths[r / 2]);
                for t in 0..taps_per_ray {
                    if t < taps.len {
                        let j = (idx as isize + taps.off[t]) as usize;
                        assert!(
                            mask.class(j) != CellClass::Outside,
                            "ray tap reaches an OUTSIDE cell"
                        );
                        near_idx.push(j as u32);
                        near_w.push(taps.w[t]);
                    } else {
                        near_idx.push(idx as u32);
                        near_w.push(0.0);
                    }
                }
            }
        }
        Ok(MidrangeOperator {
            mask: mask.clone(),
            stencil: stencil.clone(),
            cells,
            near,
            rays,
            tmpl_off,
            tmpl_w,
            taps_per_ray,
            near_idx,
            near_w,
        })
    }

    pub fn mask(&self) -> &Arc<DomainMask> {
        &self.mask
    }

    pub fn stencil(&self) -> &StencilSpec {
        &self.stencil
    }

    /// Number of INSIDE cells whose rays are shortened by the boundary.
    pub fn near_boundary_cells(&self) -> usize {
        self.near.iter().filter(|&&n| n != TEMPLATE).count()
    }

    /// Values of `u` sampled along every ray of INSIDE cell `index`, in
    /// stencil direction order.
    pub fn ray_values(&self, u: &[f64], index: usize) -> Option<Vec<f64>> {
        let pos = self.cells.binary_search(&(index as u32)).ok()?;
        Some((0..self.rays).map(|r| self.ray_value(pos, r, u)).collect())
    }

    #[inline]
    fn ray_value(&self, pos: usize, r: usize, u: &[f64]) -> f64 {
        let cell = self.cells[pos] as isize;
        match self.near[pos] {
            TEMPLATE => {
                let base = r * self.taps_per_ray;
                let mut v = 0.0;
                for k in base..base + self.taps_per_ray {
                    v += self.tmpl_w[k] * u[(cell + self.tmpl_off[k]) as usize];
                }
                v
            }
            block => {
                let base = (block as usize * self.rays + r) * self.taps_per_ray;
                let mut v = 0.0;
                for k in base..base + self.taps_per_ray {
                    v += self.near_w[k] * u[self.near_idx[k] as usize];
                }
                v
            }
        }
    }

    /// `(max + min) / 2` over the rays of the cell at position `pos`.
    #[inline]
    fn midrange(&self, pos: usize, u: &[f64]) -> f64 {
        if self.taps_per_ray == 4 {
            self.midrange_taps::<4>(pos, u)
        } else {
            self.midrange_taps::<8>(pos, u)
        }
    }

    #[inline]
    fn midrange_taps<const T: usize>(&self, pos: usize, u: &[f64]) -> f64 {
        let mut hi = f64::NEG_INFINITY;
        let mut lo = f64::INFINITY;
        let mut take = |v: f64| {
            if v > hi {
                hi = v;
            }
            if v < lo {
                lo = v;
            }
        };
        match self.near[pos] {
            TEMPLATE => {
                let cell = self.cells[pos] as isize;
                for (w, off) in self.tmpl_w.chunks_exact(T).zip(self.tmpl_off.chunks_exact(T)) {
                    let mut v = 0.0;
                    for t in 0..T {
                        v += w[t] * u[(cell + off[t]) as usize];
                    }
                    take(v);
                }
            }
            block => {
                let len = self.rays * T;
                let base = block as usize * len;
                let ws = &self.near_w[base..base + len];
                let idx = &self.near_idx[base..base + len];
                for (w, i) in ws.chunks_exact(T).zip(idx.chunks_exact(T)) {
                    let mut v = 0.0;
                    for t in 0..T {
                        v += w[t] * u[i[t] as usize];
                    }
                    take(v);
                }
            }
        }
        0.5 * (hi + lo)
    }

    /// One in-place sweep with relaxation `omega`, clamped to `[lo, hi]`.
    /// Returns the largest `|T u - u|` seen at update time.
    fn gauss_seidel(&self, u: &mut [f64], forward: bool, omega: f64, lo: f64, hi: f64) -> f64 {
        let n = self.cells.len();
        let mut res = 0.0f64;
        for k in 0..n {
            let pos = if forward { k } else { n - 1 - k };
            let target = self.midrange(pos, u);
            let c = self.cells[pos] as usize;
            let old = u[c];
            let d = target - old;
            res = res.max(d.abs());
            u[c] = (old + omega * d).clamp(lo, hi);
        }
        res
    }

    fn jacobi(&self, u: &mut [f64], scratch: &mut Vec<f64>) -> f64 {
        scratch.clear();
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            let frozen: &[f64] = u;
            (0..self.cells.len()).into_par_iter().map(|pos| self.midrange(pos, frozen)).collect_into_vec(scratch);
        }
        #[cfg(not(feature = "parallel"))]
        scratch.extend((0..self.cells.len()).map(|pos| self.midrange(pos, u)));
        let mut res = 0.0f64;
        for (pos, &t) in scratch.iter().enumerate() {
            let c = self.cells[pos] as usize;
            res = res.max((t - u[c]).abs());
            u[c] = t;
        }
        res
    }

    fn residual_of(&self, u: &[f64]) -> f64 {
        (0..self.cells.len())
            .map(|pos| (self.midrange(pos, u) - u[self.cells[pos] as usize]).abs())
            .fold(0.0, f64::max)
    }

    /// `max |(max_ray + min_ray)/2 - f|` over INSIDE cells.
    pub fn residual(&self, f: &GridFunction) -> f64 {
        self.residual_of(f.values())
    }

    /// One sweep of the fixed-point map without relaxation. BOUNDARY values
    /// are untouched; the residual is the largest change at an INSIDE cell.
    pub fn sweep(&self, f: &GridFunction, sweep: Sweep) -> (GridFunction, f64) {
        let mut u = f.values().to_vec();
        let res = match sweep {
            Sweep::Jacobi => self.jacobi(&mut u, &mut Vec::new()),
            Sweep::GaussSeidel => {
                self.gauss_seidel(&mut u, true, 1.0, f64::NEG_INFINITY, f64::INFINITY)
            }
        };
        let field = GridFunction::from_values(f.mask(), u).expect("sweep keeps values finite");
        (field, res)
    }

    /// Over-relaxation factor used when [`SolveParams::relaxation`] is unset.
    pub fn default_relaxation(&self) -> f64 {
        let spec = self.mask.spec();
        let extent = spec.extent().iter().copied().max().unwrap_or(3) as f64;
        let steps = extent / self.stencil.width as f64;
        2.0 / (1.0 + RELAXATION_SCALE / steps)
    }

    /// Solves `u = g` on BOUNDARY, `u = (max + min)/2` on INSIDE cells.
    ///
    /// The iteration runs on data rescaled to `[-1, 1]`, which makes the
    /// result exactly odd under `g -> -g` and exactly homogeneous under
    /// power-of-two scalings.
    pub fn solve(&self, g: &GridFunction, params: &SolveParams) -> Result<Solution> {
        params.validate()?;
        if !Arc::ptr_eq(g.mask(), &self.mask) {
            return Err(Error::InvalidParams("boundary data lives on a different mask"));
        }
        for &b in self.mask.boundary() {
            if !g.value(b).is_finite() {
                return Err(Error::NonFiniteBoundary { cell: b });
            }
        }
        let (lo, hi) = g.boundary_range();
        let center = 0.5 * lo + 0.5 * hi;
        let half = 0.5 * hi - 0.5 * lo;

        let mut u = vec![0.0; self.mask.spec().len()];
        if half > 0.0 {
            for &b in self.mask.boundary() {
                u[b] = ((g.value(b) - center) / half).clamp(-1.0, 1.0);
            }
        }
        let target = if half > 0.0 { 2.0 * params.tol } else { ABSOLUTE_TOL };

        let omega = match params.sweep {
            Sweep::Jacobi => 1.0,
            Sweep::GaussSeidel => params.relaxation.unwrap_or_else(|| self.default_relaxation()),
        };
        let mut omega = omega;
        let mut scratch = Vec::new();
        let mut best = f64::INFINITY;
        let mut stalled = 0usize;
        let mut sweeps = 0usize;
        let residual = loop {
            if sweeps == params.max_iters {
                let r = self.residual_of(&u);
                if r <= target {
                    break r;
                }
                return Err(Error::NoConvergence { sweeps, residual: r * half.max(1.0) });
            }
            let r = match params.sweep {
                Sweep::Jacobi => self.jacobi(&mut u, &mut scratch),
                Sweep::GaussSeidel => self.gauss_seidel(&mut u, sweeps % 2 == 0, omega, -1.0, 1.0),
            };
            sweeps += 1;
            if r <= target {
                let check = self.residual_of(&u);
                if check <= target {
                    break check;
                }
            }
            // back off the relaxation when the residual stops improving
            if r < best {
                best = r;
                stalled = 0;
            } else {
                stalled += 1;
                if stalled >= STALL_SWEEPS && omega > 1.0 {
                    omega = 1.0 + 0.5 * (omega - 1.0);
                    stalled = 0;
                    best = r;
                }
            }
        };

        let mut values = g.values().to_vec();
        for &c in &self.cells {
            let c = c as usize;
            values[c] = if half > 0.0 { (center + half * u[c]).clamp(lo, hi) } else { center };
        }
        let field = GridFunction::from_values(g.mask(), values)?;
        Ok(Solution { field, sweeps, residual: residual * half })
    }
}

const RELAXATION_SCALE: f64 = 7.5;
const STALL_SWEEPS: usize = 400;

/// Solves the discrete Dirichlet problem on `mask` with boundary values
/// taken from the BOUNDARY cells of `g`.
pub fn solve_dirichlet(
    mask: &Arc<DomainMask>,
    g: &GridFunction,
    stencil: &StencilSpec,
    params: &SolveParams,
) -> Result<Solution> {
    MidrangeOperator::new(mask, stencil)?.solve(g, params)
}

/// One sweep of the midrange map; see [`MidrangeOperator::sweep`].
pub fn midrange_update(f: &GridFunction, stencil: &StencilSpec, sweep: Sweep) -> Result<(GridFunction, f64)> {
    Ok(MidrangeOperator::new(f.mask(), stencil)?.sweep(f, sweep))
}

/// `max |(max_ray + min_ray)/2 - f|` over INSIDE cells.
pub fn discrete_residual(f: &GridFunction, stencil: &StencilSpec) -> Result<f64> {
    Ok(MidrangeOperator::new(f.mask(), stencil)?.residual(f))
}

/// Length, in cell units and at most `width`, that the ray from the center
/// of `cell` along `unit` travels before touching a non-INSIDE cell.
fn truncation(mask: &DomainMask, cell: &[usize; MAX_DIM], unit: &[f64; MAX_DIM], width: f64) -> f64 {
    let spec = mask.spec();
    let dim = spec.dim();
    let strides = spec.strides();
    let mut cur = [0isize; MAX_DIM];
    let mut step = [0isize; MAX_DIM];
    let mut next = [f64::INFINITY; MAX_DIM];
    let mut delta = [f64::INFINITY; MAX_DIM];
    for a in 0..dim {
        cur[a] = cell[a] as isize;
        if unit[a] != 0.0 {
            step[a] = if unit[a] > 0.0 { 1 } else { -1 };
            next[a] = 0.5 / unit[a].abs();
            delta[a] = 1.0 / unit[a].abs();
        }
    }
    let index = |c: &[isize; MAX_DIM]| -> usize { (0..dim).map(|a| c[a] as usize * strides[a]).sum() };
    loop {
        let t = next[..dim].iter().copied().fold(f64::INFINITY, f64::min);
        if t >= width - SNAP_EPS {
            return width;
        }
        let mut axes = [0usize; MAX_DIM];
        let mut k = 0;
        for a in 0..dim {
            if next[a] - t <= TIE_EPS {
                axes[k] = a;
                k += 1;
            }
        }
        // every cell touched at this crossing must be INSIDE
        for subset in 1..(1usize << k) {
            let mut c = cur;
            for (bit, &a) in axes[..k].iter().enumerate() {
                if subset & (1 << bit) != 0 {
                    c[a] += step[a];
                }
            }
            if mask.class(index(&c)) != CellClass::Inside {
                return t;
            }
        }
        for &a in &axes[..k] {
            cur[a] += step[a];
            next[a] += delta[a];
        }
    }
}

/// Multilinear interpolation taps for the point `len * unit` (cell units)
/// relative to a cell center.
fn ray_taps(dim: usize, strides: &[usize; MAX_DIM], unit: &[f64; MAX_DIM], len: f64) -> Taps {
    let mut base = [0isize; MAX_DIM];
    let mut frac = [0.0; MAX_DIM];
    for a in 0..dim {
        let q = len * unit[a];
        let mut b = libm::floor(q);
        let mut f = q - b;
        if f < SNAP_EPS {
            f = 0.0;
        } else if f > 1.0 - SNAP_EPS {
            b += 1.0;
            f = 0.0;
        }
        base[a] = b as isize;
        frac[a] = f;
    }
    let mut taps = Taps { len: 0, off: [0; 8], w: [0.0; 8] };
    for corner in 0..(1usize << dim) {
        let mut w = 1.0;
        let mut off = 0isize;
        for a in 0..dim {
            let up = corner & (1 << a) != 0;
            w *= if up { frac[a] } else { 1.0 - frac[a] };
            off += (base[a] + up as isize) * strides[a] as isize;
        }
        if w > 0.0 {
            taps.off[taps.len] = off;
            taps.w[taps.len] = w;
            taps.len += 1;
        }
    }
    taps
}
