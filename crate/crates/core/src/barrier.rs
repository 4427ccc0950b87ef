//! Barrier boundary data on spheres and the decay factor `mu`.
//!
//! `g_nu` is a function on the unit sphere that vanishes on the half-cap
//! `|x - e1| <= nu/2`, equals 1 off the cap `|x - e1| < nu` and follows the
//! quintic smoothstep of the chordal distance in between. `g_k` transports
//! it to the sphere `dB(x0, r_k)` with the cap centered at `y_k`.
//!
//! `mu` is read off the solution `w` on the unit ball with data `g_nu`:
//! `mu = 1 - sup_{B(0, tau2)} w`.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::domain::Ball;
use crate::geometry::UniformConditionWitness;
use crate::grid::{extremes_on, rasterize_domain, GridFunction, GridSpec, Region};
use crate::linalg::{check_unit, dist, Rotation, MAX_DIM};
use crate::solver::{MidrangeOperator, SolveParams, StencilSpec};
use crate::{Error, Result};

/// Cells required across the diameter of `B(0, tau2)`.
pub const MIN_CELLS_ACROSS: f64 = 10.0;

/// Orthogonality and `T e1 = y/r` tolerance of barrier instances.
pub const ROTATION_TOL: f64 = 1e-12;

/// `6t^5 - 15t^4 + 10t^3` on `[0, 1]`, clamped outside.
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (t * (6.0 * t - 15.0) + 10.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BarrierProfile {
    nu: f64,
}

impl BarrierProfile {
    pub fn new(nu: f64) -> Result<Self> {
        if !(nu > 0.0 && nu < 1.0) {
            return Err(Error::BadParam("need 0 < nu < 1"));
        }
        Ok(BarrierProfile { nu })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Profile value at chordal distance `d = |x - e1|`.
    pub fn at_distance(&self, d: f64) -> f64 {
        let half = 0.5 * self.nu;
        if d <= half {
            0.0
        } else if d >= self.nu {
            1.0
        } else {
            smoothstep((d - half) / half)
        }
    }
}

fn e1_distance(x: &[f64]) -> f64 {
    let mut s = (x[0] - 1.0) * (x[0] - 1.0);
    for v in &x[1..] {
        s += v * v;
    }
    libm::sqrt(s)
}

/// `g_nu(x)` for a unit vector `x`.
pub fn g_nu_eval(x: &[f64], profile: &BarrierProfile) -> Result<f64> {
    check_unit(x)?;
    Ok(profile.at_distance(e1_distance(x)))
}

/// Orthogonal map sending `e1` to `direction`.
pub fn build_rotation(direction: &[f64]) -> Result<Rotation> {
    Rotation::householder_from_e1(direction)
}

/// The datum `a g_k + b` on `dB(x0, r_k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BarrierInstance {
    k: usize,
    x0: Vec<f64>,
    r_k: f64,
    y_k: Vec<f64>,
    rotation: Rotation,
    a: f64,
    b: f64,
}

impl BarrierInstance {
    pub fn new(k: usize, x0: &[f64], r_k: f64, y_k: &[f64], a: f64, b: f64) -> Result<Self> {
        let dim = x0.len();
        if y_k.len() != dim {
            return Err(Error::BadParam("cap center dimension differs from x0"));
        }
        if !(r_k > 0.0 && r_k.is_finite()) {
            return Err(Error::BadParam("radius must be positive"));
        }
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::BadParam("affine coefficients must be finite"));
        }
        let dir: Vec<f64> = y_k.iter().zip(x0).map(|(y, x)| (y - x) / r_k).collect();
        let rotation = build_rotation(&dir)?;
        let inst = BarrierInstance { k, x0: x0.to_vec(), r_k, y_k: y_k.to_vec(), rotation, a, b };
        if inst.rotation.orthogonality_defect() > ROTATION_TOL || inst.direction_defect() > ROTATION_TOL {
            return Err(Error::BadParam("rotation misses its tolerance"));
        }
        Ok(inst)
    }

    /// Scale `k` of a witness.
    pub fn from_witness(w: &UniformConditionWitness, k: usize, a: f64, b: f64) -> Result<Self> {
        if k >= w.radii().len() {
            return Err(Error::BadParam("scale index beyond the witness"));
        }
        Self::new(k, w.x0(), w.radii()[k], &w.cap_centers()[k], a, b)
    }

    /// The unit-ball problem itself: `x0 = 0`, `r = 1`, `y = e1`, `a = 1`, `b = 0`.
    pub fn unit(dim: usize) -> Result<Self> {
        let mut e1 = vec![0.0; dim];
        e1[0] = 1.0;
        Self::new(0, &vec![0.0; dim], 1.0, &e1, 1.0, 0.0)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn radius(&self) -> f64 {
        self.r_k
    }

    pub fn cap_center(&self) -> &[f64] {
        &self.y_k
    }

    pub fn rotation(&self) -> &Rotation {
        &self.rotation
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn with_affine(&self, a: f64, b: f64) -> Self {
        BarrierInstance { a, b, ..self.clone() }
    }

    /// `|T e1 - (y - x0)/r|_inf`.
    pub fn direction_defect(&self) -> f64 {
        let dim = self.x0.len();
        (0..dim)
            .map(|i| (self.rotation.entry(i, 0) - (self.y_k[i] - self.x0[i]) / self.r_k).abs())
            .fold(0.0, f64::max)
    }

    /// `g_k` at a point already known to be off `x0`, pulled back radially.
    fn pulled_back(&self, x: &[f64], profile: &BarrierProfile) -> f64 {
        let dim = self.x0.len();
        let mut d = [0.0; MAX_DIM];
        for i in 0..dim {
            d[i] = x[i] - self.x0[i];
        }
        let len = libm::sqrt(d[..dim].iter().map(|v| v * v).sum());
        let mut z = [0.0; MAX_DIM];
        self.rotation.apply_transpose(&d[..dim], &mut z[..dim]);
        for v in &mut z[..dim] {
            *v /= len;
        }
        profile.at_distance(e1_distance(&z[..dim]))
    }

    /// `a g_k(x) + b`.
    pub fn datum(&self, x: &[f64], profile: &BarrierProfile) -> f64 {
        self.a * self.pulled_back(x, profile) + self.b
    }
}

/// `g_k(x) = g_nu(T^T (x - x0) / |x - x0|)` for `x` within `h` of
/// `dB(x0, r_k)`; on the sphere itself this is `T^T (x - x0) / r_k`.
pub fn g_k_eval(x: &[f64], inst: &BarrierInstance, profile: &BarrierProfile, h: f64) -> Result<f64> {
    let off = (dist(x, &inst.x0) - inst.r_k).abs();
    if !(off <= h) {
        return Err(Error::OffSphere { distance: off });
    }
    Ok(inst.pulled_back(x, profile))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MuEstimate {
    pub mu: f64,
    pub n: usize,
    pub tau2: f64,
    pub nu: f64,
    pub h: f64,
    pub width: usize,
}

/// Solution of a barrier problem on a rasterized ball.
#[derive(Clone, Debug)]
pub struct BarrierSolution {
    pub instance: BarrierInstance,
    pub field: GridFunction,
    pub sweeps: usize,
}

impl BarrierSolution {
    /// Solves on `B(x0, r_k)` with data `a g_k + b`, on a grid of spacing
    /// `h r_k` centered at `x0`.
    pub fn solve(
        inst: &BarrierInstance,
        profile: &BarrierProfile,
        h: f64,
        stencil: &StencilSpec,
        params: &SolveParams,
    ) -> Result<Self> {
        let dim = inst.x0.len();
        let spec = GridSpec::centered(dim, h * inst.r_k, &inst.x0, inst.r_k, 2)?;
        let ball = Arc::new(Ball::new(&inst.x0, inst.r_k));
        let mask = Arc::new(rasterize_domain(ball, spec, 1)?);
        let g = GridFunction::boundary_data(&mask, |x| inst.datum(x, profile));
        let sol = MidrangeOperator::new(&mask, stencil)?.solve(&g, params)?;
        Ok(BarrierSolution { instance: inst.clone(), field: sol.field, sweeps: sol.sweeps })
    }

    /// `sup` of the solution over the open ball `B(x0, radius)`.
    pub fn sup_on_ball(&self, radius: f64) -> Result<f64> {
        let region = Region::ball(&self.instance.x0, radius)?;
        Ok(extremes_on(&self.field, &region)?.1)
    }
}

/// The unit-ball solution `w` behind `mu`, reusable across `tau2`.
#[derive(Clone, Debug)]
pub struct UnitBarrier {
    pub solution: BarrierSolution,
    pub profile: BarrierProfile,
    pub h: f64,
    pub width: usize,
}

impl UnitBarrier {
    pub fn solve(n: usize, nu: f64, h: f64, stencil: &StencilSpec, params: &SolveParams) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&n) {
            return Err(Error::BadParam("dimension must be 2 or 3"));
        }
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::BadParam("need 0 < h < 1"));
        }
        let profile = BarrierProfile::new(nu)?;
        let inst = BarrierInstance::unit(n)?;
        let solution = BarrierSolution::solve(&inst, &profile, h, stencil, params)?;
        Ok(UnitBarrier { solution, profile, h, width: stencil.width() })
    }

    /// `1 - sup_{B(0, tau2)} w`.
    pub fn mu(&self, tau2: f64) -> Result<MuEstimate> {
        if !(tau2 > 0.0 && tau2 < 1.0) {
            return Err(Error::BadParam("need 0 < tau2 < 1"));
        }
        if 2.0 * tau2 / self.h < MIN_CELLS_ACROSS {
            return Err(Error::ResolutionTooCoarse);
        }
        let sup = self.solution.sup_on_ball(tau2)?;
        let mu = 1.0 - sup;
        if !(mu > 0.0 && mu < 1.0) {
            return Err(Error::MuOutOfRange { mu });
        }
        Ok(MuEstimate {
            mu,
            n: self.solution.instance.x0.len(),
            tau2,
            nu: self.profile.nu,
            h: self.h,
            width: self.width,
        })
    }
}

/// One unit-ball solve followed by [`UnitBarrier::mu`].
pub fn estimate_mu(
    n: usize,
    tau2: f64,
    nu: f64,
    h: f64,
    stencil: &StencilSpec,
    params: &SolveParams,
) -> Result<MuEstimate> {
    if !(tau2 > 0.0 && tau2 < 1.0) {
        return Err(Error::BadParam("need 0 < tau2 < 1"));
    }
    if 2.0 * tau2 / h < MIN_CELLS_ACROSS {
        return Err(Error::ResolutionTooCoarse);
    }
    UnitBarrier::solve(n, nu, h, stencil, params)?.mu(tau2)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lemma4Check {
    /// `sup` of the barrier solution over `B(x0, r_next)`.
    pub sup: f64,
    /// `(1 - mu) a + b`.
    pub bound: f64,
    /// `bound - sup`; negative values within `slack` still pass.
    pub margin: f64,
    pub slack: f64,
    pub pass: bool,
}

/// Solves the `B(x0, r_k)` problem with data `a g_k + b` and compares its
/// sup over `B(x0, r_next)` with `(1 - mu) a + b`.
///
/// The grid has spacing `h r_k` and is centered at `x0`, so the identity
/// instance with `a = 1`, `b = 0` repeats the `mu` computation exactly. The
/// slack is `2 tol a`, the solver's residual target in data units.
pub fn lemma4_bound_check(
    inst: &BarrierInstance,
    mu: &MuEstimate,
    r_next: f64,
    stencil: &StencilSpec,
    params: &SolveParams,
) -> Result<Lemma4Check> {
    if !(inst.a > 0.0 && inst.b >= 0.0) {
        return Err(Error::BadParam("need a > 0 and b >= 0"));
    }
    if !(r_next > 0.0 && r_next < inst.r_k) {
        return Err(Error::BadParam("need 0 < r_next < r_k"));
    }
    if stencil.width() != mu.width || inst.x0.len() != mu.n {
        return Err(Error::BadParam("mu was computed for another stencil or dimension"));
    }
    let profile = BarrierProfile::new(mu.nu)?;
    let sol = BarrierSolution::solve(inst, &profile, mu.h, stencil, params)?;
    let sup = sol.sup_on_ball(r_next)?;
    let bound = (1.0 - mu.mu) * inst.a + inst.b;
    let slack = 2.0 * params.tol * inst.a;
    let margin = bound - sup;
    Ok(Lemma4Check { sup, bound, margin, slack, pass: margin >= -slack })
}

/// Key of a cached `mu`, with reals compared by bit pattern.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MuKey {
    pub n: usize,
    tau2: u64,
    nu: u64,
    h: u64,
    pub width: usize,
}

impl MuKey {
    pub fn new(n: usize, tau2: f64, nu: f64, h: f64, width: usize) -> Self {
        MuKey { n, tau2: tau2.to_bits(), nu: nu.to_bits(), h: h.to_bits(), width }
    }

    pub fn of(est: &MuEstimate) -> Self {
        Self::new(est.n, est.tau2, est.nu, est.h, est.width)
    }

    pub fn tau2(&self) -> f64 {
        f64::from_bits(self.tau2)
    }

    pub fn nu(&self) -> f64 {
        f64::from_bits(self.nu)
    }

    pub fn h(&self) -> f64 {
        f64::from_bits(self.h)
    }
}

/// Memo of `mu` estimates keyed by `(n, tau2, nu, h, W)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MuCache {
    entries: BTreeMap<MuKey, f64>,
}

impl MuCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, key: &MuKey) -> Option<MuEstimate> {
        self.entries.get(key).map(|&mu| MuEstimate {
            mu,
            n: key.n,
            tau2: key.tau2(),
            nu: key.nu(),
            h: key.h(),
            width: key.width,
        })
    }

    pub fn insert(&mut self, est: MuEstimate) {
        self.entries.insert(MuKey::of(&est), est.mu);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = MuEstimate> + '_ {
        self.entries.keys().filter_map(move |k| self.get(k))
    }

    /// Cached value, or a fresh estimate that is then stored.
    pub fn get_or_estimate(
        &mut self,
        n: usize,
        tau2: f64,
        nu: f64,
        h: f64,
        stencil: &StencilSpec,
        params: &SolveParams,
    ) -> Result<MuEstimate> {
        let key = MuKey::new(n, tau2, nu, h, stencil.width());
        if let Some(est) = self.get(&key) {
            return Ok(est);
        }
        let est = estimate_mu(n, tau2, nu, h, stencil, params)?;
        self.insert(est);
        Ok(est)
    }
}
