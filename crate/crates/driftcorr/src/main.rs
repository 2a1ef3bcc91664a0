use clap::{Parser, Subcommand};
use driftcorr::config;
use driftcorr::correction::QuadRule;
use driftcorr::experiment::{run_row, write_csv, RowResult, RunOptions};
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "driftcorr",
    about = "Monte Carlo option pricing with analytic-reference drift corrections"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the configured experiments and emit a CSV table.
    Run {
        /// Experiment file (TOML).
        #[arg(long, default_value = "tables.cfg")]
        config: PathBuf,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the seed of every experiment.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the method path count of every experiment.
        #[arg(long)]
        paths: Option<usize>,
        /// Override the benchmark path count of every experiment.
        #[arg(long)]
        benchmark_paths: Option<usize>,
        /// Gauss-Legendre node count per smooth segment of the time integral.
        #[arg(long, value_name = "L", conflicts_with = "riemann")]
        quad: Option<usize>,
        /// Left-Riemann step for the time integral instead of the Gauss rule.
        #[arg(long, value_name = "DT")]
        riemann: Option<f64>,
        /// Compute sensitivities on every row, not just flagged ones.
        #[arg(long)]
        greeks: bool,
        /// Leave the runtime column empty so reruns are byte-identical.
        #[arg(long)]
        no_timings: bool,
        /// Only run experiments whose label contains this substring.
        #[arg(long)]
        only: Option<String>,
    },
    /// Print the nodes and weights of a time-integral rule.
    Quad {
        #[arg(long, default_value = "legendre")]
        rule: String,
        #[arg(long, default_value_t = 24)]
        nodes: usize,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 1.0)]
        maturity: f64,
        /// Interior segment cuts, comma separated.
        #[arg(long, value_delimiter = ',')]
        cuts: Vec<f64>,
    },
    /// Exactness checks on the constant-volatility twin models.
    Selftest,
}

fn main() -> ExitCode {
    match Cli::parse().cmd {
        Cmd::Run {
            config,
            out,
            seed,
            paths,
            benchmark_paths,
            quad,
            riemann,
            greeks,
            no_timings,
            only,
        } => {
            let text = match fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", config.display());
                    return ExitCode::FAILURE;
                }
            };
            let (experiments, defaults) = match config::parse(&text) {
                Ok(x) => x,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            };
            let rule = match (quad, riemann) {
                (_, Some(dt)) => QuadRule::LeftRiemann { dt },
                (Some(nodes), None) => QuadRule::Legendre { nodes },
                (None, None) => QuadRule::Legendre {
                    nodes: defaults.legendre_nodes,
                },
            };
            let opts = RunOptions {
                quad: rule,
                greek_bump: defaults.greek_bump,
                benchmark_bump: defaults.benchmark_bump,
                timings: !no_timings,
                paths_override: paths,
                benchmark_paths_override: benchmark_paths,
                seed_override: seed,
                force_greeks: greeks,
            };

            let mut rows: Vec<RowResult> = Vec::new();
            for cfg in &experiments {
                let label = cfg.label();
                if let Some(pat) = &only {
                    if !label.contains(pat.as_str()) {
                        continue;
                    }
                }
                match run_row(cfg, &opts) {
                    Ok(row) => {
                        eprintln!(
                            "{label}: crude {:.4} ({:.4})  method {:.4} ({:.4})  z {:+.2}{}{}",
                            row.crude.price,
                            row.crude.se,
                            row.method.price,
                            row.method.price_se,
                            row.z,
                            if row.within_band() { "" } else { "  OUTSIDE BAND" },
                            row.runtime_ms
                                .map(|m| format!("  [{m} ms]"))
                                .unwrap_or_default(),
                        );
                        rows.push(row);
                    }
                    Err(e) => {
                        eprintln!("error: {label}: {e}");
                        return ExitCode::FAILURE;
                    }
                }
            }
            if rows.is_empty() {
                eprintln!("error: no experiments selected");
                return ExitCode::FAILURE;
            }
            let result = match out {
                Some(path) => fs::File::create(&path)
                    .map(std::io::BufWriter::new)
                    .and_then(|mut w| write_csv(&mut w, &rows).and_then(|_| w.flush())),
                None => {
                    let stdout = std::io::stdout();
                    let mut w = stdout.lock();
                    write_csv(&mut w, &rows)
                }
            };
            if let Err(e) = result {
                eprintln!("error: writing output: {e}");
                return ExitCode::FAILURE;
            }
            let n_pass = rows.iter().filter(|r| r.within_band()).count();
            eprintln!(
                "suite: {} ({n_pass}/{} rows within 4 se of the benchmark)",
                if n_pass == rows.len() { "PASS" } else { "FAIL" },
                rows.len(),
            );
            ExitCode::SUCCESS
        }
        Cmd::Quad {
            rule,
            nodes,
            dt,
            maturity,
            cuts,
        } => {
            let r = match rule.as_str() {
                "legendre" => QuadRule::Legendre { nodes },
                "riemann" => QuadRule::LeftRiemann { dt },
                other => {
                    eprintln!("error: unknown rule '{other}'");
                    return ExitCode::FAILURE;
                }
            };
            match driftcorr::correction::build_scheme(r, maturity, &cuts) {
                Ok(s) => {
                    println!("time,weight");
                    for (t, w) in s.times.iter().zip(&s.weights) {
                        println!("{t:.16e},{w:.16e}");
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
        Cmd::Selftest => selftest(),
    }
}

/// Prices the constant-vol twins, where the correction must vanish exactly
/// and the estimator must reproduce the closed form to machine precision.
fn selftest() -> ExitCode {
    let cases = [
        (
            "lognormal/black",
            r#"[[experiment]]
            dynamics = "lognormal"
            payoff = "vanilla"
            simplified = "black"
            maturity = 1.0
            strike = 105.0
            rate = 0.05
            dt = 0.001
            sigma = 0.1
            paths = 2000
            benchmark_paths = 2000"#,
        ),
        (
            "normal/bachelier",
            r#"[[experiment]]
            dynamics = "normal"
            payoff = "vanilla"
            simplified = "bachelier"
            maturity = 1.0
            strike = 105.0
            rate = 0.05
            dt = 0.001
            sigma_abs = 10.0
            paths = 2000
            benchmark_paths = 2000"#,
        ),
    ];
    for (name, text) in cases {
        let (exps, defaults) = match config::parse(text) {
            Ok(x) => x,
            Err(e) => {
                eprintln!("FAIL {name}: {e}");
                return ExitCode::FAILURE;
            }
        };
        let opts = RunOptions::from_defaults(&defaults);
        match run_row(&exps[0], &opts) {
            Ok(row) => {
                let exact = row.method.max_abs_xi == 0.0
                    && row.method.price_se == 0.0
                    && row.method.price == row.method.psi0;
                if exact {
                    println!(
                        "PASS {name}: expected payoff {:.10}, correction exactly zero on {} paths",
                        row.method.price, row.method.n_paths
                    );
                } else {
                    eprintln!(
                        "FAIL {name}: max |xi| = {:e}, se = {:e}",
                        row.method.max_abs_xi, row.method.price_se
                    );
                    return ExitCode::FAILURE;
                }
            }
            Err(e) => {
                eprintln!("FAIL {name}: {e}");
                return ExitCode::FAILURE;
            }
        }
    }
    ExitCode::SUCCESS
}
