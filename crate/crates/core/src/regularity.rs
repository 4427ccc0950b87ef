//! Hölder decay at a boundary point: choice of the exponent `beta`, the
//! per-scale audit `|u - g0| <= 4 M r_k^beta`, the pointwise bound
//! `|u(x) - g0| <= 8 M |x - x0|^beta`, an empirical exponent fit and the
//! interior Harnack ratio.

use alloc::vec::Vec;

use crate::barrier::MuEstimate;
use crate::geometry::UniformConditionWitness;
use crate::grid::{extremes_on, osc_on, CellClass, GridFunction, Region};
use crate::linalg::dist;
use crate::{Error, Result};

/// Relative part of the decay tolerance, applied to each bound.
pub const DECAY_REL_TOL: f64 = 0.02;

/// Relative tolerance of the induction chain comparisons.
pub const CHAIN_TOL: f64 = 1e-12;

/// Safety factor keeping `(1 - mu) tau1^-beta < 1 - mu/2` strict.
pub const BETA_SAFETY: f64 = 0.99;

/// Hölder data of the boundary function at `x0`:
/// `|g(x) - g0| <= k |x - x0|^alpha`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolderData {
    pub alpha: f64,
    pub k: f64,
    pub g0: f64,
}

impl HolderData {
    pub fn new(alpha: f64, k: f64, g0: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::BadParam("need 0 < alpha <= 1"));
        }
        if !(k >= 0.0 && k.is_finite()) || !g0.is_finite() {
            return Err(Error::BadParam("need a finite K >= 0 and a finite g0"));
        }
        Ok(HolderData { alpha, k, g0 })
    }
}

/// `min(alpha, ln 2 / ln(1/tau1), 0.99 ln((1 - mu/2)/(1 - mu)) / ln(1/tau1))`.
///
/// The result is nudged down by a few ulps if rounding left `tau1^beta`
/// below one half.
pub fn select_beta(alpha: f64, tau1: f64, mu: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::BadParam("need 0 < alpha <= 1"));
    }
    if !(tau1 > 0.0 && tau1 < 1.0) {
        return Err(Error::BadParam("need 0 < tau1 < 1"));
    }
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::BadParam("need 0 < mu < 1"));
    }
    let l = -libm::log(tau1);
    let half = core::f64::consts::LN_2 / l;
    let strict = BETA_SAFETY * libm::log((1.0 - 0.5 * mu) / (1.0 - mu)) / l;
    let mut beta = alpha.min(half).min(strict);
    while libm::pow(tau1, beta) < 0.5 {
        beta = f64::from_bits(beta.to_bits() - 1);
    }
    if !(beta > 0.0) {
        return Err(Error::BadParam("exponent underflows"));
    }
    Ok(beta)
}

/// The four expressions of one induction step, each at most the next:
/// the barrier bound, its regrouped form, the form rescaled to `r_next`,
/// and the target `4 M r_next^beta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainTerms {
    pub barrier_sup: f64,
    pub regrouped: f64,
    pub scaled: f64,
    pub target: f64,
}

impl ChainTerms {
    pub fn holds(&self) -> bool {
        let le = |a: f64, b: f64| a <= b + CHAIN_TOL * b.abs().max(a.abs());
        le(self.barrier_sup, self.regrouped) && le(self.regrouped, self.scaled) && le(self.scaled, self.target)
    }
}

/// Evaluates the chain
/// `(1-mu)(4M r^b - M r^a) + M r^a <= (1-mu) 4M r^b + mu M r^b
///  <= 4M r'^b ((1-mu)/tau1^b + mu/(4 tau1^b)) <= 4M r'^b`.
pub fn induction_step(
    m: f64,
    r_k: f64,
    r_next: f64,
    alpha: f64,
    beta: f64,
    mu: f64,
    tau1: f64,
) -> Result<ChainTerms> {
    if !(m > 0.0 && r_k > 0.0 && r_k <= 1.0 && r_next > 0.0 && r_next < r_k) {
        return Err(Error::BadParam("need M > 0 and 0 < r_next < r_k <= 1"));
    }
    if !(beta > 0.0 && beta <= alpha && alpha <= 1.0 && mu > 0.0 && mu < 1.0 && tau1 > 0.0 && tau1 < 1.0) {
        return Err(Error::BadParam("need 0 < beta <= alpha <= 1, 0 < mu < 1, 0 < tau1 < 1"));
    }
    let rb = libm::pow(r_k, beta);
    let ra = libm::pow(r_k, alpha);
    let tb = libm::pow(tau1, beta);
    let nb = libm::pow(r_next, beta);
    Ok(ChainTerms {
        barrier_sup: (1.0 - mu) * (4.0 * m * rb - m * ra) + m * ra,
        regrouped: (1.0 - mu) * 4.0 * m * rb + mu * m * rb,
        scaled: 4.0 * m * nb * ((1.0 - mu) / tb + mu / (4.0 * tb)),
        target: 4.0 * m * nb,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayRow {
    pub k: usize,
    pub r_k: f64,
    /// `sup |u - g0|` over valued cells in `B(x0, r_k)`; NaN if unresolved.
    pub sup_k: f64,
    /// `4 M r_k^beta`.
    pub bound_k: f64,
    /// Scales with `r_k < 2h` are reported but never gate the result.
    pub resolved: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FinalRow {
    pub x: Vec<f64>,
    pub deviation: f64,
    /// `8 M |x - x0|^beta`.
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayReport {
    pub beta: f64,
    pub m: f64,
    pub mu: f64,
    pub solver_tol: f64,
    pub rows: Vec<DecayRow>,
    pub final_rows: Vec<FinalRow>,
    pub overall_pass: bool,
}

impl DecayReport {
    /// Largest `deviation / bound` over the final check.
    pub fn worst_final_ratio(&self) -> f64 {
        self.final_rows
            .iter()
            .filter(|r| r.bound > 0.0)
            .map(|r| r.deviation / r.bound)
            .fold(0.0, f64::max)
    }
}

fn decay_slack(bound: f64, solver_tol: f64) -> f64 {
    DECAY_REL_TOL * bound + 2.0 * solver_tol
}

/// `sup |u - g0|` over the valued cells of `B(x0, 1)`, the `L^inf` norm
/// entering `M`.
pub fn sup_deviation(u: &GridFunction, x0: &[f64], g0: f64) -> Result<f64> {
    let (lo, hi) = extremes_on(u, &Region::ball(x0, 1.0)?)?;
    Ok((lo - g0).abs().max((hi - g0).abs()))
}

/// Audits the decay of `u - g0` at the witness point.
///
/// `M = sup_u + K` and `beta = select_beta(alpha, tau1, mu)`. Each resolved
/// scale passes if `sup_k <= bound_k + 0.02 bound_k + 2 solver_tol`, and
/// every INSIDE cell of `B(x0, 1)` must satisfy the pointwise bound with the
/// same form of slack. `solver_tol` is in data units.
pub fn verify_decay(
    u: &GridFunction,
    witness: &UniformConditionWitness,
    hd: &HolderData,
    mu: &MuEstimate,
    sup_u: f64,
    solver_tol: f64,
) -> Result<DecayReport> {
    let mask = u.mask();
    let spec = mask.spec();
    let dim = spec.dim();
    if witness.dim() != dim {
        return Err(Error::BadParam("witness and grid dimensions differ"));
    }
    if !(sup_u >= 0.0 && solver_tol >= 0.0) {
        return Err(Error::BadParam("need sup_u >= 0 and solver_tol >= 0"));
    }
    let beta = select_beta(hd.alpha, witness.params().tau1, mu.mu)?;
    let m = sup_u + hd.k;
    let x0 = witness.x0();
    let h = spec.h();

    let mut rows = Vec::with_capacity(witness.radii().len());
    for (k, &r_k) in witness.radii().iter().enumerate() {
        let bound_k = 4.0 * m * libm::pow(r_k, beta);
        let mut row = DecayRow { k, r_k, sup_k: f64::NAN, bound_k, resolved: false, pass: false };
        if r_k >= 2.0 * h {
            match extremes_on(u, &Region::ball(x0, r_k)?) {
                Ok((lo, hi)) => {
                    row.sup_k = (lo - hd.g0).abs().max((hi - hd.g0).abs());
                    row.resolved = true;
                    row.pass = row.sup_k <= bound_k + decay_slack(bound_k, solver_tol);
                }
                Err(Error::EmptyRegion) => {}
                Err(e) => return Err(e),
            }
        }
        rows.push(row);
    }

    let mut final_rows = Vec::new();
    for &idx in mask.inside() {
        debug_assert_eq!(mask.class(idx), CellClass::Inside);
        let x = spec.center(idx);
        let r = dist(&x[..dim], x0);
        if r >= 1.0 {
            continue;
        }
        let bound = 8.0 * m * libm::pow(r, beta);
        let deviation = (u.value(idx) - hd.g0).abs();
        let pass = deviation <= bound + decay_slack(bound, solver_tol);
        final_rows.push(FinalRow { x: x[..dim].to_vec(), deviation, bound, pass });
    }

    let overall_pass = rows.iter().filter(|r| r.resolved).all(|r| r.pass)
        && rows.iter().any(|r| r.resolved)
        && final_rows.iter().all(|r| r.pass);
    Ok(DecayReport { beta, m, mu: mu.mu, solver_tol, rows, final_rows, overall_pass })
}

#[derive(Clone, Debug, PartialEq)]
pub struct HolderEstimate {
    pub beta_emp: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
    pub scales: usize,
}

/// Least-squares slope of `ln osc(u, B(x0, r))` against `ln r`, over the
/// radii with at least two cells of resolution.
pub fn estimate_holder_exponent(u: &GridFunction, x0: &[f64], radii: &[f64]) -> Result<HolderEstimate> {
    let h = u.mask().spec().h();
    let mut pts = Vec::new();
    for &r in radii {
        if !(r >= 2.0 * h) {
            continue;
        }
        match osc_on(u, &Region::ball(x0, r)?) {
            Ok(osc) if osc > 0.0 => pts.push((libm::log(r), libm::log(osc))),
            Ok(_) => return Err(Error::DegenerateOscillation),
            Err(Error::EmptyRegion) => {}
            Err(e) => return Err(e),
        }
    }
    if pts.len() < 4 {
        return Err(Error::TooFewScales { found: pts.len() });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::TooFewScales { found: 1 });
    }
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let sse: f64 = pts
        .iter()
        .map(|p| {
            let e = p.1 - icept - slope * p.0;
            e * e
        })
        .sum();
    Ok(HolderEstimate { beta_emp: slope, residual: libm::sqrt(sse / n), scales: pts.len() })
}

/// `sup / inf` of a nonnegative `u` over the valued cells of `B(0, 1/2)`;
/// infinite when the infimum vanishes.
pub fn harnack_ratio(u: &GridFunction, tol: f64) -> Result<f64> {
    let dim = u.mask().spec().dim();
    let min = u.mask().valued_cells().map(|i| u.value(i)).fold(f64::INFINITY, f64::min);
    if min < -tol {
        return Err(Error::NegativeInput { min });
    }
    let zero = [0.0; crate::linalg::MAX_DIM];
    let (lo, hi) = extremes_on(u, &Region::ball(&zero[..dim], 0.5)?)?;
    let lo = lo.max(0.0);
    if lo == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((hi / lo).max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Ball, Cube};
    use crate::geometry::{axis_witness, make_domain, DomainShape, UniformConditionParams};
    use crate::grid::{rasterize_domain, DomainMask, GridSpec};
    use crate::solver::{solve_dirichlet, SolveParams, StencilSpec};
    use alloc::sync::Arc;
    use proptest::prelude::*;

    #[test]
    fn beta_examples() {
        let b = select_beta(0.5, 0.4, 0.2).unwrap();
        let expect = 0.99 * libm::log(1.125) / libm::log(2.5);
        assert!((b - expect).abs() < 1e-15);
        assert!((b - 0.1273).abs() < 5e-5);
        assert!(libm::pow(0.4, b) >= 0.5);
        assert!((1.0 - 0.2) / libm::pow(0.4, b) < 1.0 - 0.1);
        let near_one = select_beta(1.0, 0.5, 1.0 - 1e-12).unwrap();
        assert!((near_one - 1.0).abs() < 1e-12);
        assert!(libm::pow(0.5, near_one) >= 0.5);
        assert!(select_beta(0.0, 0.5, 0.5).is_err());
        assert!(select_beta(0.5, 1.0, 0.5).is_err());
        assert!(select_beta(0.5, 0.5, 1.0).is_err());
    }

    #[test]
    fn chain_example() {
        let beta = select_beta(0.5, 0.4, 0.3).unwrap();
        let t = induction_step(2.0, 0.5, 0.25, 0.5, beta, 0.3, 0.4).unwrap();
        assert!(t.holds(), "{t:?}");
        // a beta violating the strict condition breaks the last link
        let t = induction_step(2.0, 0.5, 0.2, 0.9, 0.9, 0.3, 0.4).unwrap();
        assert!(!t.holds());
    }

    proptest! {
        #[test]
        fn beta_satisfies_constraints(alpha in 1e-3f64..=1.0, tau1 in 1e-3f64..0.999, mu in 1e-4f64..0.9999) {
            let b = select_beta(alpha, tau1, mu).unwrap();
            prop_assert!(b > 0.0 && b <= alpha);
            prop_assert!(libm::pow(tau1, b) >= 0.5);
            prop_assert!((1.0 - mu) / libm::pow(tau1, b) < 1.0 - mu / 2.0);
        }

        #[test]
        fn beta_monotone_in_mu(alpha in 1e-3f64..=1.0, tau1 in 1e-3f64..0.999, mu in 1e-4f64..0.99, d in 0.0f64..0.009) {
            let lo = select_beta(alpha, tau1, mu).unwrap();
            let hi = select_beta(alpha, tau1, mu + d).unwrap();
            prop_assert!(hi >= lo);
        }

        #[test]
        fn chain_holds_for_admissible_tuples(
            m in 1e-3f64..1e3,
            r_k in 1e-6f64..=1.0,
            alpha in 1e-2f64..=1.0,
            tau1 in 0.05f64..0.9,
            tau_gap in 0.0f64..1.0,
            mu in 1e-3f64..0.999,
            frac in 0.0f64..=1.0,
        ) {
            let tau2 = tau1 + tau_gap * (0.999 - tau1);
            let beta = select_beta(alpha, tau1, mu).unwrap();
            let r_next = r_k * (tau1 + frac * (tau2 - tau1));
            let t = induction_step(m, r_k, r_next, alpha, beta, mu, tau1).unwrap();
            prop_assert!(t.holds(), "{:?}", t);
        }
    }

    fn half_disk(h: f64) -> Arc<DomainMask> {
        let spec = GridSpec::centered(2, h, &[0.0, 0.0], 1.0, 2).unwrap();
        let d = make_domain(DomainShape::HalfSpace, 2).unwrap();
        Arc::new(rasterize_domain(Arc::new(d), spec, 1).unwrap())
    }

    fn witness() -> UniformConditionWitness {
        let p = UniformConditionParams::new(0.4, 0.6, 0.3).unwrap();
        axis_witness(2, p, p.ratio(), 8).unwrap()
    }

    fn mu_est(mu: f64) -> MuEstimate {
        MuEstimate { mu, n: 2, tau2: 0.6, nu: 0.3, h: 1.0 / 64.0, width: 3 }
    }

    #[test]
    fn constant_solution_passes() {
        let mask = half_disk(1.0 / 32.0);
        let u = GridFunction::constant(&mask, 0.7);
        let hd = HolderData::new(0.5, 1.0, 0.7).unwrap();
        let rep = verify_decay(&u, &witness(), &hd, &mu_est(0.3), 0.0, 0.0).unwrap();
        assert!(rep.overall_pass);
        for row in rep.rows.iter().filter(|r| r.resolved) {
            assert_eq!(row.sup_k, 0.0);
            assert!((row.bound_k / rep.m - 4.0 * libm::pow(row.r_k, rep.beta)).abs() < 1e-15);
        }
        // r_k = 0.49^k drops below 2h = 1/16 from k = 4 on
        assert!(rep.rows.iter().any(|r| !r.resolved));
    }

    #[test]
    fn half_space_decay_and_affine_invariance() {
        let h = 1.0 / 64.0;
        let mask = half_disk(h);
        let g = |x: &[f64]| libm::sqrt(libm::sqrt(x[0] * x[0] + x[1] * x[1]));
        let params = SolveParams::default();
        let stencil = StencilSpec::new(2, 3).unwrap();
        let bd = GridFunction::boundary_data(&mask, g);
        let u = solve_dirichlet(&mask, &bd, &stencil, &params).unwrap().field;
        let hd = HolderData::new(0.5, 1.0, 0.0).unwrap();
        let w = witness();
        let mu = mu_est(0.25);
        let sup_u = sup_deviation(&u, &[0.0, 0.0], 0.0).unwrap();
        let rep = verify_decay(&u, &w, &hd, &mu, sup_u, 2.0 * params.tol).unwrap();
        assert!(rep.overall_pass);
        // 2u + 1 with data 2g + 1: K doubles, g0 = 1
        let u2 = u.map(|v| 2.0 * v + 1.0);
        let hd2 = HolderData::new(0.5, 2.0, 1.0).unwrap();
        let sup2 = sup_deviation(&u2, &[0.0, 0.0], 1.0).unwrap();
        let rep2 = verify_decay(&u2, &w, &hd2, &mu, sup2, 4.0 * params.tol).unwrap();
        assert_eq!(rep2.overall_pass, rep.overall_pass);
        assert!((rep2.m - 2.0 * rep.m).abs() < 1e-12);
        for (a, b) in rep.rows.iter().zip(&rep2.rows) {
            assert_eq!(a.pass, b.pass);
        }
    }

    #[test]
    fn holder_fit_of_a_linear_function() {
        let mask = half_disk(1.0 / 256.0);
        let u = GridFunction::from_fn(&mask, |x| x[0]);
        let radii: Vec<f64> = (1..6).map(|k| libm::ldexp(1.0, -k)).collect();
        let est = estimate_holder_exponent(&u, &[0.0, 0.0], &radii).unwrap();
        assert!((est.beta_emp - 1.0).abs() < 0.1, "{est:?}");
        let c = GridFunction::constant(&mask, 1.0);
        assert_eq!(estimate_holder_exponent(&c, &[0.0, 0.0], &radii), Err(Error::DegenerateOscillation));
        assert!(matches!(
            estimate_holder_exponent(&u, &[0.0, 0.0], &radii[..3]),
            Err(Error::TooFewScales { found: 3 })
        ));
    }

    #[test]
    fn holder_fit_of_the_aronsson_saddle() {
        let h = 1.0 / 128.0;
        let spec = GridSpec::centered(2, h, &[0.0, 0.0], 1.0, 2).unwrap();
        let mask = Arc::new(rasterize_domain(Arc::new(Ball::unit(2)), spec, 1).unwrap());
        let a = |x: &[f64]| libm::pow(x[0].abs(), 4.0 / 3.0) - libm::pow(x[1].abs(), 4.0 / 3.0);
        let g = GridFunction::boundary_data(&mask, a);
        let u = solve_dirichlet(&mask, &g, &StencilSpec::new(2, 3).unwrap(), &SolveParams::default())
            .unwrap()
            .field;
        let radii: Vec<f64> = (1..=4).map(|k| libm::ldexp(1.0, -k)).collect();
        let est = estimate_holder_exponent(&u, &[0.0, 0.0], &radii).unwrap();
        assert!((est.beta_emp - 4.0 / 3.0).abs() < 0.15, "{est:?}");
    }

    #[test]
    fn harnack_examples() {
        let spec = GridSpec::centered(2, 1.0 / 64.0, &[0.0, 0.0], 1.0, 2).unwrap();
        let mask = Arc::new(rasterize_domain(Arc::new(Ball::unit(2)), spec, 1).unwrap());
        let c = GridFunction::constant(&mask, 3.0);
        assert_eq!(harnack_ratio(&c, 0.0).unwrap(), 1.0);
        let affine = GridFunction::from_fn(&mask, |x| x[0] + 2.0);
        // extremes over the cell centers of the open ball of radius 1/2
        let r = harnack_ratio(&affine, 0.0).unwrap();
        let (lo, hi) = (2.0 - 0.5 + 1.0 / 64.0, 2.0 + 0.5 - 1.0 / 64.0);
        assert!((r - hi / lo).abs() < 1e-12, "{r}");
        assert!(r <= 2.5 / 1.5);
        let neg = GridFunction::from_fn(&mask, |x| x[0]);
        assert!(matches!(harnack_ratio(&neg, 1e-8), Err(Error::NegativeInput { .. })));
        let touching = GridFunction::from_fn(&mask, |x| x[0] * x[0]);
        assert_eq!(harnack_ratio(&touching, 0.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn harnack_on_a_box_affine_solution() {
        let spec = GridSpec::centered(2, 1.0 / 32.0, &[0.0, 0.0], 1.0, 2).unwrap();
        let mask = Arc::new(rasterize_domain(Arc::new(Cube { half_width: 1.0 }), spec, 1).unwrap());
        let u = GridFunction::from_fn(&mask, |x| x[0] + 2.0);
        let r = harnack_ratio(&u, 0.0).unwrap();
        assert!(r >= 1.0 && r <= 2.5 / 1.5);
    }
}
