//! Experiment pipelines behind the command line subcommands.

use std::sync::Arc;

use inflab_core::barrier::MuEstimate;
use inflab_core::domain::{Ball, Domain};
use inflab_core::geometry::{
    make_domain, search_uniform_witness, verify_uniform_witness, SearchResult, UniformConditionWitness,
};
use inflab_core::grid::{extremes_on, rasterize_domain, DomainMask, GridFunction, GridSpec, Region};
use inflab_core::regularity::{harnack_ratio, select_beta, sup_deviation, verify_decay, DecayReport};
use inflab_core::solver::{MidrangeOperator, SolveParams, Solution, StencilSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cache::MuCacheFile;
use crate::config::ExperimentConfig;
use crate::error::LabResult;

/// Harnack constant of the continuum inequality.
pub const HARNACK_CONSTANT: f64 = 3.0;
/// Relative slack allowed on [`HARNACK_CONSTANT`] for discrete solutions.
pub const HARNACK_SLACK: f64 = 0.1;
/// Verification density relative to the search density.
pub const VERIFY_DENSITY: usize = 10;

/// Rasterizes `domain` on `[-half_width, half_width]^dim` with a margin of
/// one stencil width.
pub fn build_mask(domain: Arc<dyn Domain>, dim: usize, h: f64, half_width: f64, stencil: usize) -> LabResult<Arc<DomainMask>> {
    let spec = GridSpec::centered(dim, h, &vec![0.0; dim], half_width, stencil)?;
    Ok(Arc::new(rasterize_domain(domain, spec, stencil)?))
}

pub fn config_mask(cfg: &ExperimentConfig) -> LabResult<Arc<DomainMask>> {
    let domain = Arc::new(make_domain(cfg.domain.into(), cfg.grid.dim)?);
    build_mask(domain, cfg.grid.dim, cfg.grid.h, cfg.grid.half_width, cfg.grid.stencil)
}

/// Solves the configured domain with data `g0 + k |x|^alpha`.
pub fn solve(cfg: &ExperimentConfig) -> LabResult<Solution> {
    let mask = config_mask(cfg)?;
    let g = GridFunction::boundary_data(&mask, |x| cfg.datum.eval(x));
    Ok(MidrangeOperator::new(&mask, &cfg.stencil()?)?.solve(&g, &cfg.solve_params())?)
}

#[derive(Clone, Debug)]
pub struct DomainCheck {
    pub result: SearchResult,
    /// Re-verification of a found witness at [`VERIFY_DENSITY`] times the
    /// search density.
    pub verified: Option<bool>,
}

/// Witness search at the origin.
pub fn check_domain(cfg: &ExperimentConfig) -> LabResult<DomainCheck> {
    let domain = make_domain(cfg.domain.into(), cfg.grid.dim)?;
    let x0 = vec![0.0; cfg.grid.dim];
    let result = search_uniform_witness(&domain, &x0, &cfg.uniform_params()?, &cfg.search_options())?;
    let verified = match result.witness() {
        Some(w) => Some(verify_uniform_witness(&domain, w, VERIFY_DENSITY * cfg.search.samples).passed()),
        None => None,
    };
    Ok(DomainCheck { result, verified })
}

/// `mu` for the configured `(n, tau2, nu, h, W)`, through the cache.
pub fn estimate_mu(cfg: &ExperimentConfig, cache: &MuCacheFile) -> LabResult<MuEstimate> {
    let p = &cfg.params;
    cache.get_or_estimate(cfg.grid.dim, p.tau2, p.nu, cfg.grid.h, &cfg.stencil()?, &cfg.solve_params())
}

/// Values entering the exponent choice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaReport {
    pub beta: f64,
    pub alpha: f64,
    pub tau1: f64,
    pub mu: f64,
    /// `tau1^beta`, at least one half.
    pub tau1_pow: f64,
    /// `(1 - mu) tau1^-beta`, strictly below [`BetaReport::strict_rhs`].
    pub strict_lhs: f64,
    /// `1 - mu/2`.
    pub strict_rhs: f64,
}

pub fn beta_report(alpha: f64, tau1: f64, mu: f64) -> LabResult<BetaReport> {
    let beta = select_beta(alpha, tau1, mu)?;
    let tau1_pow = tau1.powf(beta);
    Ok(BetaReport { beta, alpha, tau1, mu, tau1_pow, strict_lhs: (1.0 - mu) / tau1_pow, strict_rhs: 1.0 - 0.5 * mu })
}

#[derive(Clone, Debug)]
pub enum DecayOutcome {
    NotFound { k: usize },
    Report { report: DecayReport, witness: UniformConditionWitness, solution: Solution, mu: MuEstimate },
}

/// Solve, witness search, `mu` at the same resolution, then the decay audit.
pub fn run_verify_decay(cfg: &ExperimentConfig, cache: &MuCacheFile) -> LabResult<DecayOutcome> {
    let check = check_domain(cfg)?;
    let witness = match check.result {
        SearchResult::Found(w) => w,
        SearchResult::NotFound { k } => return Ok(DecayOutcome::NotFound { k }),
    };
    let solution = solve(cfg)?;
    let mu = estimate_mu(cfg, cache)?;
    let report = decay_report(cfg, &solution, &witness, &mu)?;
    Ok(DecayOutcome::Report { report, witness, solution, mu })
}

/// The audit of an already solved configuration; the solver tolerance is
/// converted to data units.
pub fn decay_report(
    cfg: &ExperimentConfig,
    solution: &Solution,
    witness: &UniformConditionWitness,
    mu: &MuEstimate,
) -> LabResult<DecayReport> {
    let hd = cfg.holder_data()?;
    let u = &solution.field;
    let sup_u = sup_deviation(u, witness.x0(), hd.g0)?;
    let (lo, hi) = u.boundary_range();
    let solver_tol = cfg.solver.tol * 0.5 * (hi - lo);
    Ok(verify_decay(u, witness, &hd, mu, sup_u, solver_tol)?)
}

/// Nonnegative boundary datum `c + sum_i a_i max(0, 1 - |x - z_i| / rho_i)`
/// with `z_i` on the unit sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomDatum {
    pub offset: f64,
    pub bumps: Vec<(Vec<f64>, f64, f64)>,
}

impl RandomDatum {
    pub fn sample(dim: usize, rng: &mut impl Rng) -> Self {
        let offset = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..0.5) };
        let count = rng.gen_range(1..=4);
        let bumps = (0..count)
            .map(|_| {
                let z = loop {
                    let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                    if n > 0.1 && n <= 1.0 {
                        break v.into_iter().map(|a| a / n).collect::<Vec<_>>();
                    }
                };
                (z, rng.gen_range(0.1..1.0), rng.gen_range(0.2..2.0))
            })
            .collect();
        RandomDatum { offset, bumps }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.offset
            + self
                .bumps
                .iter()
                .map(|(z, a, rho)| {
                    let d = x.iter().zip(z).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
                    a * (1.0 - d / rho).max(0.0)
                })
                .sum::<f64>()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HarnackRow {
    pub sample: usize,
    pub sup: f64,
    pub inf: f64,
    pub ratio: f64,
    pub pass: bool,
}

/// Unit-ball mask shared by the Harnack battery.
pub fn unit_ball_mask(dim: usize, h: f64, stencil: usize) -> LabResult<Arc<DomainMask>> {
    build_mask(Arc::new(Ball::unit(dim)), dim, h, 1.0, stencil)
}

/// `sup/inf` over `B(0, 1/2)` for `samples` random nonnegative data on the
/// unit ball; solves run in parallel, rows come back in sample order.
pub fn harnack_battery(
    dim: usize,
    h: f64,
    stencil: &StencilSpec,
    params: &SolveParams,
    samples: usize,
    seed: u64,
) -> LabResult<Vec<HarnackRow>> {
    let mask = unit_ball_mask(dim, h, stencil.width())?;
    let op = MidrangeOperator::new(&mask, stencil)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<RandomDatum> = (0..samples).map(|_| RandomDatum::sample(dim, &mut rng)).collect();
    let zero = vec![0.0; dim];
    data.par_iter()
        .enumerate()
        .map(|(sample, datum)| {
            let g = GridFunction::boundary_data(&mask, |x| datum.eval(x));
            let sol = op.solve(&g, params)?;
            let (lo, hi) = g.boundary_range();
            let ratio = harnack_ratio(&sol.field, params.tol * 0.5 * (hi - lo))?;
            let (inf, sup) = extremes_on(&sol.field, &Region::ball(&zero, 0.5)?)?;
            Ok(HarnackRow { sample, sup, inf, ratio, pass: ratio <= HARNACK_CONSTANT * (1.0 + HARNACK_SLACK) })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ShapeConfig;

    fn small(shape: ShapeConfig) -> ExperimentConfig {
        let mut cfg = ExperimentConfig { domain: shape, ..Default::default() };
        cfg.grid.h = 1.0 / 32.0;
        cfg.search.depth = 4;
        cfg
    }

    #[test]
    fn datum_is_nonnegative_and_seeded() {
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let d = RandomDatum::sample(2, &mut a);
            assert_eq!(d, RandomDatum::sample(2, &mut b));
            for t in 0..64 {
                let th = t as f64 * 0.1;
                assert!(d.eval(&[th.cos(), th.sin()]) >= 0.0);
            }
        }
    }

    #[test]
    fn solve_matches_boundary_data_on_boundary() {
        let cfg = small(ShapeConfig::HalfSpace);
        let sol = solve(&cfg).unwrap();
        let mask = sol.field.mask();
        for &b in mask.boundary() {
            let p = mask.boundary_point(b);
            assert_eq!(sol.field.value(b), cfg.datum.eval(&p[..2]));
        }
    }

    #[test]
    fn domain_checks() {
        let found = check_domain(&small(ShapeConfig::HalfSpace)).unwrap();
        assert!(found.result.witness().is_some());
        assert_eq!(found.verified, Some(true));
        let missing = check_domain(&small(ShapeConfig::PuncturedBall)).unwrap();
        assert!(matches!(missing.result, SearchResult::NotFound { k: 1 }));
        assert_eq!(missing.verified, None);
    }

    #[test]
    fn beta_report_constraints() {
        let r = beta_report(0.5, 0.4, 0.2).unwrap();
        assert!((r.beta - 0.99 * (1.125f64).ln() / (2.5f64).ln()).abs() < 1e-12);
        assert!(r.tau1_pow >= 0.5);
        assert!(r.strict_lhs < r.strict_rhs);
    }

    #[test]
    fn harnack_battery_is_deterministic() {
        let stencil = StencilSpec::new(2, 3).unwrap();
        let params = SolveParams::default();
        let a = harnack_battery(2, 1.0 / 32.0, &stencil, &params, 4, 11).unwrap();
        let b = harnack_battery(2, 1.0 / 32.0, &stencil, &params, 4, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|r| r.ratio >= 1.0 && r.sup >= r.inf));
    }

    #[test]
    fn coarse_half_space_decay_passes() {
        let dir = tempfile::tempdir().unwrap();
        let cache = MuCacheFile::open(dir.path().join("mu.json")).unwrap();
        let mut cfg = small(ShapeConfig::HalfSpace);
        cfg.grid.h = 1.0 / 64.0;
        match run_verify_decay(&cfg, &cache).unwrap() {
            DecayOutcome::Report { report, mu, .. } => {
                assert!(report.overall_pass, "{:?}", report.rows);
                assert_eq!(mu.h, cfg.grid.h);
            }
            DecayOutcome::NotFound { k } => panic!("no witness at k = {k}"),
        }
    }
}
