//! The uniform exterior condition at a boundary point: witness checking,
//! a greedy witness search, and a catalog of sample domains with `0` on
//! their boundary.
//!
//! A witness lists radii `r_k` with `tau1 r_{k-1} <= r_k <= tau2 r_{k-1}`
//! and centers `y_k` on `dB(x0, r_k)` such that the cap
//! `dB(x0, r_k) ∩ B(y_k, nu r_k)` misses the domain. Caps are checked on a
//! deterministic point net.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::domain::{radial_projection, Domain};
use crate::linalg::{dist, dot, norm, Rotation, MAX_DIM};
use crate::{Error, Result};

/// Relative tolerance on `|y_k - x0| = r_k` and on the radii ratios.
pub const WITNESS_TOL: f64 = 1e-12;

const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformConditionParams {
    pub tau1: f64,
    pub tau2: f64,
    pub nu: f64,
}

impl UniformConditionParams {
    pub fn new(tau1: f64, tau2: f64, nu: f64) -> Result<Self> {
        let p = UniformConditionParams { tau1, tau2, nu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.tau1 && self.tau1 < self.tau2 && self.tau2 < 1.0) {
            return Err(Error::BadParam("need 0 < tau1 < tau2 < 1"));
        }
        if !(0.0 < self.nu && self.nu < 1.0) {
            return Err(Error::BadParam("need 0 < nu < 1"));
        }
        Ok(())
    }

    /// Default ratio between consecutive radii, `sqrt(tau1 tau2)`.
    pub fn ratio(&self) -> f64 {
        libm::sqrt(self.tau1 * self.tau2)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UniformConditionWitness {
    x0: Vec<f64>,
    params: UniformConditionParams,
    radii: Vec<f64>,
    cap_centers: Vec<Vec<f64>>,
}

impl UniformConditionWitness {
    pub fn new(
        x0: Vec<f64>,
        params: UniformConditionParams,
        radii: Vec<f64>,
        cap_centers: Vec<Vec<f64>>,
    ) -> Result<Self> {
        params.validate()?;
        let dim = x0.len();
        if !(2..=MAX_DIM).contains(&dim) || x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidWitness("x0 must be a finite point in 2 or 3 dimensions"));
        }
        if radii.is_empty() || radii.len() != cap_centers.len() {
            return Err(Error::InvalidWitness("need one cap center per radius"));
        }
        if radii.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidWitness("radii must be positive"));
        }
        for w in radii.windows(2) {
            let (prev, r) = (w[0], w[1]);
            let slack = WITNESS_TOL * prev;
            if r < params.tau1 * prev - slack || r > params.tau2 * prev + slack {
                return Err(Error::InvalidWitness("radii ratio outside [tau1, tau2]"));
            }
        }
        for (y, &r) in cap_centers.iter().zip(&radii) {
            if y.len() != dim {
                return Err(Error::InvalidWitness("cap center dimension differs from x0"));
            }
            if (dist(y, &x0) - r).abs() > WITNESS_TOL * r {
                return Err(Error::InvalidWitness("cap center not on the sphere"));
            }
        }
        Ok(UniformConditionWitness { x0, params, radii, cap_centers })
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn params(&self) -> &UniformConditionParams {
        &self.params
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn cap_centers(&self) -> &[Vec<f64>] {
        &self.cap_centers
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    /// Unit vector `(y_k - x0) / r_k`.
    pub fn cap_direction(&self, k: usize) -> Vec<f64> {
        let r = self.radii[k];
        self.cap_centers[k].iter().zip(&self.x0).map(|(y, x)| (y - x) / r).collect()
    }

    /// The same scales with a different cap size.
    pub fn with_nu(&self, nu: f64) -> Result<Self> {
        let params = UniformConditionParams { nu, ..self.params };
        Self::new(self.x0.clone(), params, self.radii.clone(), self.cap_centers.clone())
    }
}

/// Angular radius of the cap `dB(x0, r) ∩ B(y, nu r)` seen from `x0`.
pub fn cap_half_angle(nu: f64) -> f64 {
    2.0 * libm::asin(0.5 * nu)
}

/// `count` points of the open cap `dB(x0, r) ∩ B(x0 + r e, nu r)`, `e` a
/// unit vector. Circles use evenly spaced angles; spheres use a Fibonacci
/// lattice, area-uniform in the cap.
pub fn cap_net(x0: &[f64], r: f64, e: &[f64], nu: f64, count: usize) -> Vec<[f64; MAX_DIM]> {
    angular_cap_net(x0, r, e, cap_half_angle(nu), count)
}

fn angular_cap_net(x0: &[f64], r: f64, e: &[f64], phi: f64, count: usize) -> Vec<[f64; MAX_DIM]> {
    let dim = x0.len();
    let mut out = Vec::with_capacity(count);
    if dim == 2 {
        let base = libm::atan2(e[1], e[0]);
        for j in 0..count {
            let a = base - phi + 2.0 * phi * (j as f64 + 0.5) / count as f64;
            out.push([x0[0] + r * libm::cos(a), x0[1] + r * libm::sin(a), 0.0]);
        }
        return out;
    }
    let rot = Rotation::householder_from_e1(e).expect("cap direction is a unit vector");
    let c = libm::cos(phi);
    for j in 0..count {
        let cos_a = 1.0 - (1.0 - c) * (j as f64 + 0.5) / count as f64;
        let sin_a = libm::sqrt((1.0 - cos_a * cos_a).max(0.0));
        let az = GOLDEN_ANGLE * j as f64;
        let local = [cos_a, sin_a * libm::cos(az), sin_a * libm::sin(az)];
        let mut p = [0.0; MAX_DIM];
        rot.apply(&local, &mut p);
        for a in 0..3 {
            p[a] = x0[a] + r * p[a];
        }
        out.push(p);
    }
    out
}

/// Outcome of [`verify_uniform_witness`].
#[derive(Clone, Debug, PartialEq)]
pub enum CapCheck {
    Pass,
    /// First scale whose cap has a sampled point inside the domain.
    Fail { k: usize, point: Vec<f64> },
}

impl CapCheck {
    pub fn passed(&self) -> bool {
        matches!(self, CapCheck::Pass)
    }
}

fn check_scale(domain: &dyn Domain, x0: &[f64], r: f64, e: &[f64], phi: f64, samples: usize) -> Option<Vec<f64>> {
    let dim = x0.len();
    angular_cap_net(x0, r, e, phi, samples)
        .into_iter()
        .find(|p| domain.contains(&p[..dim]))
        .map(|p| p[..dim].to_vec())
}

/// Checks every cap of the witness on a net of `samples_per_cap` points.
pub fn verify_uniform_witness(
    domain: &dyn Domain,
    witness: &UniformConditionWitness,
    samples_per_cap: usize,
) -> CapCheck {
    let phi = cap_half_angle(witness.params.nu);
    for k in 0..witness.radii.len() {
        let e = witness.cap_direction(k);
        if let Some(point) = check_scale(domain, &witness.x0, witness.radii[k], &e, phi, samples_per_cap) {
            return CapCheck::Fail { k, point };
        }
    }
    CapCheck::Pass
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchOptions {
    /// Last scale index `K`; the witness has `K + 1` radii.
    pub depth: usize,
    pub candidates_per_sphere: usize,
    pub samples_per_cap: usize,
    pub r0: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { depth: 10, candidates_per_sphere: 256, samples_per_cap: 200, r0: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SearchResult {
    Found(UniformConditionWitness),
    /// No candidate cap fit at scale `k`.
    NotFound { k: usize },
}

impl SearchResult {
    pub fn witness(&self) -> Option<&UniformConditionWitness> {
        match self {
            SearchResult::Found(w) => Some(w),
            SearchResult::NotFound { .. } => None,
        }
    }
}

/// Unit directions tried as cap centers: evenly spaced angles starting at
/// angle 0 on circles, a Fibonacci lattice on spheres.
pub fn candidate_directions(dim: usize, count: usize) -> Vec<[f64; MAX_DIM]> {
    (0..count)
        .map(|j| {
            if dim == 2 {
                let a = 2.0 * PI * j as f64 / count as f64;
                [libm::cos(a), libm::sin(a), 0.0]
            } else {
                let z = 1.0 - 2.0 * (j as f64 + 0.5) / count as f64;
                let s = libm::sqrt((1.0 - z * z).max(0.0));
                let az = GOLDEN_ANGLE * j as f64;
                [z, s * libm::cos(az), s * libm::sin(az)]
            }
        })
        .collect()
}

/// Angular margin added to caps tried by the search, so that a found
/// witness still passes when verified on a much denser net.
pub const SEARCH_MARGIN: f64 = 0.1;

/// Greedy search with radii `r_k = sqrt(tau1 tau2)^k r0`, taking at each
/// scale the first candidate direction whose cap passes.
///
/// Candidates are tested on twice `samples_per_cap` points of a cap whose
/// angular radius is widened by [`SEARCH_MARGIN`]. The sphere of radius `r0`
/// counts as scale 0.
pub fn search_uniform_witness(
    domain: &dyn Domain,
    x0: &[f64],
    params: &UniformConditionParams,
    options: &SearchOptions,
) -> Result<SearchResult> {
    params.validate()?;
    let dim = x0.len();
    if !(2..=MAX_DIM).contains(&dim) {
        return Err(Error::BadParam("x0 must have 2 or 3 coordinates"));
    }
    if options.candidates_per_sphere == 0 || options.samples_per_cap == 0 {
        return Err(Error::BadParam("candidate and sample counts must be positive"));
    }
    if !(options.r0 > 0.0 && options.r0.is_finite()) {
        return Err(Error::BadParam("r0 must be positive"));
    }
    let dirs = candidate_directions(dim, options.candidates_per_sphere);
    let phi = (cap_half_angle(params.nu) * (1.0 + SEARCH_MARGIN)).min(PI);
    let samples = 2 * options.samples_per_cap;
    let mut radii = Vec::with_capacity(options.depth + 1);
    let mut centers = Vec::with_capacity(options.depth + 1);
    let mut r = options.r0;
    for k in 0..=options.depth {
        if k > 0 {
            r *= params.ratio();
        }
        let hit = dirs
            .iter()
            .find(|e| check_scale(domain, x0, r, &e[..dim], phi, samples).is_none());
        match hit {
            Some(e) => {
                radii.push(r);
                centers.push((0..dim).map(|a| x0[a] + r * e[a]).collect());
            }
            None => return Ok(SearchResult::NotFound { k }),
        }
    }
    Ok(SearchResult::Found(UniformConditionWitness::new(x0.to_vec(), *params, radii, centers)?))
}

/// Sample domains inside the unit ball with the origin on their boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DomainShape {
    /// `{x1 > 0}`.
    HalfSpace,
    /// The complement of the closed cone of half-angle `half_angle` around `-e1`.
    Cone { half_angle: f64 },
    /// The complement of the segment `{x1 >= 0, x2 = .. = 0}`.
    Slit,
    /// The complement of the origin and of the closed balls of radius
    /// `offset * 2^-k / 3` centered at `2^-k (cos(k pi/2), sin(k pi/2))`.
    Corkscrew { offset: f64 },
    /// The complement of the origin and of the logarithmic spiral strip where
    /// the polar angle of `(x1, x2)` is within `pi/6` of `pi + turn_rate ln|x|`.
    Spiral { turn_rate: f64 },
    /// `{x != 0}`.
    PuncturedBall,
}

impl DomainShape {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DomainShape::Cone { half_angle } if !(half_angle > 0.0 && half_angle <= PI / 2.0) => {
                Err(Error::BadShapeParam("cone half-angle must lie in (0, pi/2]"))
            }
            DomainShape::Corkscrew { offset } if !(offset > 0.0 && offset < 1.0) => {
                Err(Error::BadShapeParam("corkscrew offset must lie in (0, 1)"))
            }
            DomainShape::Spiral { turn_rate } if !turn_rate.is_finite() => {
                Err(Error::BadShapeParam("spiral turn rate must be finite"))
            }
            _ => Ok(()),
        }
    }
}

/// A [`DomainShape`] in a fixed dimension.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShapeDomain {
    shape: DomainShape,
    dim: usize,
}

pub fn make_domain(shape: DomainShape, dim: usize) -> Result<ShapeDomain> {
    shape.validate()?;
    if !(2..=MAX_DIM).contains(&dim) {
        return Err(Error::BadShapeParam("dimension must be 2 or 3"));
    }
    Ok(ShapeDomain { shape, dim })
}

const CORKSCREW_BALLS: i32 = 60;

/// Points within this distance of the unit sphere count as outside, so that
/// computed points of the sphere never round into the domain.
pub const SPHERE_SLACK: f64 = 1e-12;

fn corkscrew_center(k: i32) -> ([f64; 2], f64) {
    let s = libm::ldexp(1.0, -k);
    let (x, y) = match k.rem_euclid(4) {
        0 => (s, 0.0),
        1 => (0.0, s),
        2 => (-s, 0.0),
        _ => (0.0, -s),
    };
    ([x, y], s)
}

impl ShapeDomain {
    pub fn shape(&self) -> DomainShape {
        self.shape
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn in_complement_part(&self, x: &[f64], r: f64) -> bool {
        match self.shape {
            DomainShape::HalfSpace => x[0] <= 0.0,
            DomainShape::Cone { half_angle } => x[0] <= -r * libm::cos(half_angle),
            DomainShape::Slit => x[0] >= 0.0 && x[1..].iter().all(|&v| v == 0.0),
            DomainShape::Corkscrew { offset } => {
                if r == 0.0 {
                    return true;
                }
                // only balls at scales comparable to |x| can contain it
                let k0 = -libm::floor(libm::log2(r)) as i32;
                (k0 - 2..=k0 + 2).filter(|k| (0..=CORKSCREW_BALLS).contains(k)).any(|k| {
                    let (c, s) = corkscrew_center(k);
                    let (dx, dy) = (x[0] - c[0], x[1] - c[1]);
                    let mut d2 = dx * dx + dy * dy;
                    d2 += x[2..].iter().map(|v| v * v).sum::<f64>();
                    libm::sqrt(d2) <= offset * s / 3.0
                })
            }
            DomainShape::Spiral { turn_rate } => {
                if r == 0.0 {
                    return true;
                }
                let angle = libm::atan2(x[1], x[0]) - turn_rate * libm::log(r);
                let t = (angle - PI) / (2.0 * PI);
                let off = 2.0 * PI * (t - libm::floor(t));
                off.min(2.0 * PI - off) <= PI / 6.0
            }
            DomainShape::PuncturedBall => r == 0.0,
        }
    }

    fn consider(best: &mut (f64, [f64; MAX_DIM]), x: &[f64], p: &[f64]) {
        let d = dist(x, p);
        if d < best.0 {
            best.0 = d;
            best.1[..p.len()].copy_from_slice(p);
        }
    }
}

impl Domain for ShapeDomain {
    fn contains(&self, x: &[f64]) -> bool {
        let r = norm(&x[..self.dim]);
        r < 1.0 - SPHERE_SLACK && !self.in_complement_part(&x[..self.dim], r)
    }

    /// Nearest boundary point for the shapes with a flat or conical
    /// boundary; spirals and corkscrews have no projection.
    fn project_to_boundary(&self, x: &[f64], out: &mut [f64]) -> bool {
        let n = self.dim;
        let x = &x[..n];
        let zero = [0.0; MAX_DIM];
        let mut sphere = [0.0; MAX_DIM];
        radial_projection(x, &zero[..n], 1.0, &mut sphere[..n]);
        let mut best = (f64::INFINITY, [0.0; MAX_DIM]);
        match self.shape {
            DomainShape::HalfSpace => {
                if sphere[0] >= 0.0 {
                    Self::consider(&mut best, x, &sphere[..n]);
                }
                let mut p = [0.0; MAX_DIM];
                p[1..n].copy_from_slice(&x[1..n]);
                let len = norm(&p[..n]);
                if len > 1.0 {
                    for v in &mut p[1..n] {
                        *v /= len;
                    }
                }
                Self::consider(&mut best, x, &p[..n]);
            }
            DomainShape::Cone { half_angle } => {
                let (c, s) = (libm::cos(half_angle), libm::sin(half_angle));
                if sphere[0] >= -c {
                    Self::consider(&mut best, x, &sphere[..n]);
                }
                // generator of the cone in the plane of e1 and x
                let mut w = [0.0; MAX_DIM];
                w[1..n].copy_from_slice(&x[1..n]);
                let wl = norm(&w[..n]);
                if wl > 0.0 {
                    for v in &mut w[1..n] {
                        *v /= wl;
                    }
                } else {
                    w[1] = 1.0;
                }
                let mut g = [0.0; MAX_DIM];
                g[0] = -c;
                for a in 1..n {
                    g[a] = s * w[a];
                }
                let t = dot(x, &g[..n]).clamp(0.0, 1.0);
                let p: Vec<f64> = g[..n].iter().map(|v| t * v).collect();
                Self::consider(&mut best, x, &p);
            }
            DomainShape::Slit => {
                Self::consider(&mut best, x, &sphere[..n]);
                let mut p = [0.0; MAX_DIM];
                p[0] = x[0].clamp(0.0, 1.0);
                Self::consider(&mut best, x, &p[..n]);
            }
            DomainShape::PuncturedBall => {
                Self::consider(&mut best, x, &sphere[..n]);
                Self::consider(&mut best, x, &zero[..n]);
            }
            DomainShape::Corkscrew { .. } | DomainShape::Spiral { .. } => return false,
        }
        out[..n].copy_from_slice(&best.1[..n]);
        true
    }
}

/// Witness centers `y_k = -r_k e1` at radii `r0 ratio^k`; used for the
/// half-space and cone shapes whose complement contains the `-e1` axis.
pub fn axis_witness(
    dim: usize,
    params: UniformConditionParams,
    ratio: f64,
    depth: usize,
) -> Result<UniformConditionWitness> {
    let mut radii = vec![1.0];
    for k in 1..=depth {
        radii.push(radii[k - 1] * ratio);
    }
    let centers = radii
        .iter()
        .map(|&r| {
            let mut y = vec![0.0; dim];
            y[0] = -r;
            y
        })
        .collect();
    UniformConditionWitness::new(vec![0.0; dim], params, radii, centers)
}
