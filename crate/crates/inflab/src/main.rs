use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use inflab::cache::MuCacheFile;
use inflab::config::{parse_resolution, ExperimentConfig};
use inflab::core::geometry::SearchResult;
use inflab::formats::{decay_summary_json, witness_to_json, write_decay_csv, write_grid_csv};
use inflab::pipeline::{self, DecayOutcome};
use inflab::svg::heatmap;

#[derive(Parser, Debug)]
#[command(name = "inflab", version, about = "Infinity Laplacian boundary regularity laboratory")]
struct Cli {
    /// Experiment configuration (TOML); built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory, overriding `output` in the config.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Grid spacing, as a decimal or a fraction such as `1/128`.
    #[arg(long, global = true, value_name = "H", value_parser = parse_resolution)]
    resolution: Option<f64>,
    /// Stencil width W.
    #[arg(long, global = true, value_name = "W")]
    stencil: Option<usize>,
    /// Only errors are printed.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the configured domain; writes u.csv and u.svg.
    Solve,
    /// Search a uniform-condition witness at the origin; writes witness.json.
    CheckDomain,
    /// Estimate mu for (n, tau2, nu, h, W) into the mu cache.
    EstimateMu {
        #[arg(long)]
        tau2: Option<f64>,
        #[arg(long)]
        nu: Option<f64>,
    },
    /// Print the selected exponent and the constraints it satisfies.
    SelectBeta {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        tau1: Option<f64>,
        /// Taken from the mu cache (estimating if needed) when omitted.
        #[arg(long)]
        mu: Option<f64>,
    },
    /// Full decay audit; writes decay.csv, decay.json and witness.json.
    VerifyDecay,
    /// Harnack ratios of random nonnegative data on the unit ball; writes harnack.csv.
    Harnack {
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

enum Status {
    Pass,
    Fail,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::Fail) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("INFLAB_THREADS") {
        let n: usize = v.trim().parse().with_context(|| format!("INFLAB_THREADS={v}"))?;
        if n == 0 {
            anyhow::bail!("INFLAB_THREADS must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output = out.clone();
    }
    if let Some(h) = cli.resolution {
        cfg.grid.h = h;
    }
    if let Some(w) = cli.stencil {
        cfg.grid.stencil = w;
    }
    Ok(cfg)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<fs::File>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let f = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<Status> {
    init_threads()?;
    let mut cfg = load_config(&cli)?;
    let say = |s: String| {
        if !cli.quiet {
            println!("{s}");
        }
    };
    match cli.command {
        Command::Solve => {
            cfg.validate()?;
            let sol = pipeline::solve(&cfg)?;
            write_grid_csv(&sol.field, create(&cfg.output, "u.csv")?)?;
            write_text(&cfg.output, "u.svg", &heatmap(&sol.field))?;
            say(format!("solved: {} sweeps, residual {:.3e}", sol.sweeps, sol.residual));
            say(format!("wrote {}", cfg.output.join("u.csv").display()));
            Ok(Status::Pass)
        }
        Command::CheckDomain => {
            cfg.validate()?;
            let check = pipeline::check_domain(&cfg)?;
            match (&check.result, check.verified) {
                (SearchResult::Found(w), verified) => {
                    write_text(&cfg.output, "witness.json", &witness_to_json(w))?;
                    let ok = verified == Some(true);
                    say(format!(
                        "FOUND: {} scales, dense re-check {}",
                        w.radii().len(),
                        if ok { "PASS" } else { "FAIL" }
                    ));
                    Ok(if ok { Status::Pass } else { Status::Fail })
                }
                (SearchResult::NotFound { k }, _) => {
                    say(format!("NOT_FOUND: no admissible cap at scale k = {k}"));
                    Ok(Status::Fail)
                }
            }
        }
        Command::EstimateMu { tau2, nu } => {
            if let Some(t) = tau2 {
                cfg.params.tau2 = t;
                cfg.params.tau1 = cfg.params.tau1.min(t);
            }
            if let Some(n) = nu {
                cfg.params.nu = n;
            }
            cfg.validate()?;
            let cache = MuCacheFile::open(cfg.mu_cache_path())?;
            let est = pipeline::estimate_mu(&cfg, &cache)?;
            say(format!(
                "mu = {:.16e}  (n={}, tau2={}, nu={}, h={}, W={})",
                est.mu, est.n, est.tau2, est.nu, est.h, est.width
            ));
            say(format!("cache {}", cache.path().display()));
            Ok(Status::Pass)
        }
        Command::SelectBeta { alpha, tau1, mu } => {
            if let Some(a) = alpha {
                cfg.datum.alpha = a;
            }
            if let Some(t) = tau1 {
                cfg.params.tau1 = t;
                cfg.params.tau2 = cfg.params.tau2.max(t);
            }
            cfg.validate()?;
            let mu = match mu {
                Some(m) => m,
                None => pipeline::estimate_mu(&cfg, &MuCacheFile::open(cfg.mu_cache_path())?)?.mu,
            };
            let r = pipeline::beta_report(cfg.datum.alpha, cfg.params.tau1, mu)?;
            say(format!("beta = {:.4}  ({:.16e})", r.beta, r.beta));
            say(format!("alpha = {}, tau1 = {}, mu = {}", r.alpha, r.tau1, r.mu));
            say(format!("tau1^beta = {:.6} >= 0.5", r.tau1_pow));
            say(format!("(1 - mu) tau1^-beta = {:.6} < 1 - mu/2 = {:.6}", r.strict_lhs, r.strict_rhs));
            Ok(Status::Pass)
        }
        Command::VerifyDecay => {
            cfg.validate()?;
            let cache = MuCacheFile::open(cfg.mu_cache_path())?;
            match pipeline::run_verify_decay(&cfg, &cache)? {
                DecayOutcome::NotFound { k } => {
                    say(format!("NOT_FOUND: no witness at scale k = {k}; no decay bound applies"));
                    Ok(Status::Fail)
                }
                DecayOutcome::Report { report, witness, .. } => {
                    write_decay_csv(&report, create(&cfg.output, "decay.csv")?)?;
                    write_text(&cfg.output, "decay.json", &decay_summary_json(&report))?;
                    write_text(&cfg.output, "witness.json", &witness_to_json(&witness))?;
                    say(format!("beta = {:.6}, M = {:.6}, mu = {:.6}", report.beta, report.m, report.mu));
                    say(format!("{:>3} {:>12} {:>12} {:>12}  status", "k", "r_k", "sup_k", "bound_k"));
                    for row in &report.rows {
                        let status = match (row.resolved, row.pass) {
                            (false, _) => "UNRESOLVED",
                            (true, true) => "PASS",
                            (true, false) => "FAIL",
                        };
                        say(format!(
                            "{:>3} {:>12.6e} {:>12.6e} {:>12.6e}  {status}",
                            row.k, row.r_k, row.sup_k, row.bound_k
                        ));
                    }
                    say(format!(
                        "final check: {} points, worst |u - g0| / 8M|x|^beta = {:.4}",
                        report.final_rows.len(),
                        report.worst_final_ratio()
                    ));
                    say(if report.overall_pass { "PASS".into() } else { "FAIL".into() });
                    Ok(if report.overall_pass { Status::Pass } else { Status::Fail })
                }
            }
        }
        Command::Harnack { samples, seed } => {
            if let Some(s) = samples {
                cfg.harnack.samples = s;
            }
            if let Some(s) = seed {
                cfg.harnack.seed = s;
            }
            cfg.validate()?;
            let rows = pipeline::harnack_battery(
                cfg.grid.dim,
                cfg.grid.h,
                &cfg.stencil()?,
                &cfg.solve_params(),
                cfg.harnack.samples,
                cfg.harnack.seed,
            )?;
            let mut w = csv::Writer::from_writer(create(&cfg.output, "harnack.csv")?);
            w.write_record(["sample", "sup", "inf", "ratio", "pass"])?;
            say(format!("{:>6} {:>12} {:>12} {:>8}", "sample", "sup", "inf", "ratio"));
            for r in &rows {
                w.write_record([
                    r.sample.to_string(),
                    format!("{:.16e}", r.sup),
                    format!("{:.16e}", r.inf),
                    format!("{:.16e}", r.ratio),
                    if r.pass { "PASS".into() } else { "FAIL".into() },
                ])?;
                say(format!("{:>6} {:>12.6e} {:>12.6e} {:>8.4}", r.sample, r.sup, r.inf, r.ratio));
            }
            w.flush()?;
            let all = rows.iter().all(|r| r.pass);
            say(if all { "PASS".into() } else { "FAIL".into() });
            Ok(if all { Status::Pass } else { Status::Fail })
        }
    }
}
