//! Batch verification CLI: runs the configured suites against a declarative
//! TOML config and writes `report.jsonl` plus `summary.csv`.
//!
//! Exit codes: 0 all suites passed (inconclusives flagged but not fatal),
//! 1 at least one suite failed (or an internal numeric error), 2 usage or
//! config error.

use cgb::config::{RunConfig, KNOWN_SUITES};
use cgb::gaussbonnet::VerdictStatus;
use cgb::report::{self, VerdictRecord};
use cgb::suites;
use cgb::CgbError;
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "cgb", about = "Curvature-identity verification suites on model manifolds")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run suites from a TOML config file.
    Run {
        /// Path to the config file.
        config: PathBuf,
        /// Suite names to run (repeatable); overrides the config list.
        #[arg(long = "suite")]
        suites: Vec<String>,
        /// Output directory for report.jsonl and summary.csv.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Seed override for the pointwise sampling generator.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List built-in charts, surface families, suites, and defaults.
    ListModels,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = std::panic::catch_unwind(|| match cli.cmd {
        Cmd::Run {
            config,
            suites,
            out,
            seed,
        } => run(&config, &suites, &out, seed),
        Cmd::ListModels => {
            print!("{}", catalog());
            ExitCode::SUCCESS
        }
    });
    match result {
        Ok(code) => code,
        Err(_) => {
            eprintln!("cgb: internal panic; treating as suite failure");
            ExitCode::from(1)
        }
    }
}

fn run(config_path: &PathBuf, suite_overrides: &[String], out: &PathBuf, seed: Option<u64>) -> ExitCode {
    let text = match std::fs::read_to_string(config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cgb: cannot read config {}: {e}", config_path.display());
            return ExitCode::from(2);
        }
    };
    let cfg = match RunConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("cgb: config error: {e}");
            return ExitCode::from(2);
        }
    };
    for s in suite_overrides {
        if !KNOWN_SUITES.contains(&s.as_str()) {
            eprintln!("cgb: unknown suite {s:?}; known: {}", KNOWN_SUITES.join(", "));
            return ExitCode::from(2);
        }
    }
    if let Err(e) = std::fs::create_dir_all(out) {
        eprintln!("cgb: cannot create output directory {}: {e}", out.display());
        return ExitCode::from(2);
    }

    let seed = seed.or(cfg.seed).unwrap_or(0);
    let hash = report::config_hash(&text);
    let timestamp = report::unix_now();
    let mut records: Vec<VerdictRecord> = Vec::new();
    let mut any_fail = false;
    let mut any_inconclusive = false;

    for suite in cfg.selected_suites(suite_overrides) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match suites::run_suite(&suite, &cfg, &mut rng) {
            Ok(result) => {
                for check in result.checks {
                    match check.verdict.status {
                        VerdictStatus::Fail => any_fail = true,
                        VerdictStatus::Inconclusive => any_inconclusive = true,
                        VerdictStatus::Pass => {}
                    }
                    records.push(VerdictRecord::from_verdict(
                        &suite,
                        &check.verdict,
                        check.quantities,
                        &hash,
                        seed,
                        timestamp,
                    ));
                }
            }
            Err(e) => {
                any_fail = true;
                let quantities = error_quantities(&e);
                let verdict = cgb::gaussbonnet::Verdict {
                    name: "suite_error".into(),
                    value: f64::NAN,
                    target: 0.0,
                    tolerance: 0.0,
                    error_estimate: 0.0,
                    status: VerdictStatus::Fail,
                };
                eprintln!("cgb: suite {suite} failed: {e}");
                records.push(VerdictRecord::from_verdict(
                    &suite, &verdict, quantities, &hash, seed, timestamp,
                ));
            }
        }
    }

    let jsonl = out.join("report.jsonl");
    let csv = out.join("summary.csv");
    if let Err(e) = report::write_jsonl(&jsonl, &records).and_then(|_| report::write_csv(&csv, &records)) {
        eprintln!("cgb: cannot write reports: {e}");
        return ExitCode::from(1);
    }
    print!("{}", report::render_table(&records));
    if any_inconclusive {
        println!("note: some verdicts are inconclusive (quadrature error above the requested tolerance)");
    }
    println!("reports: {} {}", jsonl.display(), csv.display());
    if any_fail {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn error_quantities(e: &CgbError) -> std::collections::BTreeMap<String, f64> {
    let mut q = std::collections::BTreeMap::new();
    if let CgbError::ConvexityViolation { point, min_kappa } = e {
        q.insert("min_kappa".into(), *min_kappa);
        for (i, x) in point.iter().enumerate() {
            q.insert(format!("point_{i}"), *x);
        }
    }
    q
}

fn catalog() -> String {
    let mut s = String::new();
    s.push_str("ambient models:\n");
    s.push_str("  euclidean          flat R^n (any n <= 7)\n");
    s.push_str("  sphere             unit round S^n in polar angles\n");
    s.push_str("  hyperbolic         curvature -1, conformal ball model\n");
    s.push_str("  hyperbolic_polar   curvature -1, geodesic polar chart\n");
    s.push_str("  half_plane         curvature -1, upper half-space chart\n");
    s.push_str("  product            metric product of the factors above\n");
    s.push_str("surface families:\n");
    s.push_str("  geodesic_sphere    radius r about a center point\n");
    s.push_str("  perturbed_sphere   radius r + eps*h(u), convexity checked on a grid\n");
    s.push_str("  ellipsoid          Euclidean radial graph with given semi-axes\n");
    s.push_str("suites:\n");
    for name in KNOWN_SUITES {
        s.push_str(&format!("  {name}\n"));
    }
    s.push_str("defaults: orders.base per dimension (48/12/8/6/4 for m=1..5+),\n");
    s.push_str("  orders.radial 16, tolerances.integral_rel 0.01, seed 0\n");
    s
}
