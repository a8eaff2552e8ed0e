use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use scrforge::experiments::dilation_sweep::{dilation_chart, write_dilation_rows, write_dilation_summary};
use scrforge::experiments::matching_sweep::{matching_chart, write_matching_rows, write_matching_summary};
use scrforge::experiments::{
    load_series, run_dilation_experiment, run_matching_experiment, synthetic_series, Dataset,
    DilationConfig, MatchingConfig, ReferenceConfig,
};
use scrforge::io::{read_reservoir, write_report, write_scr};
use scrforge::pipeline::{approximate_scr_default, ValidationConfig};
use scrforge::{Error, Result};

#[derive(Parser)]
#[command(name = "scrforge", version, about = "Simple cycle reservoir approximation of linear reservoirs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetArg {
    Ett,
    Ecl,
    /// Built-in synthetic series; `--data` is not needed.
    Synthetic,
}

#[derive(Subcommand)]
enum Command {
    /// State error of dilation + cycle approximation across dilation orders.
    DilationExp {
        #[arg(long, value_enum)]
        dataset: DatasetArg,
        #[arg(long)]
        data: Option<PathBuf>,
        /// Defaults to OT (ett) or MT_320 (ecl).
        #[arg(long)]
        column: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 15)]
        seeds: u64,
        #[arg(long, default_value_t = 300)]
        horizon: usize,
        #[arg(long, default_value_t = 0.9)]
        rho: f64,
        #[arg(long, default_value_t = 1e-9)]
        ridge: f64,
        /// Cycle tolerance as a fraction of the dilation bound.
        #[arg(long, default_value_t = 0.1)]
        kappa: f64,
        /// Comma-separated dilation orders.
        #[arg(long, default_value = "2,6,10,15,19,24,28,33,37,42")]
        orders: String,
        /// Length of the synthetic series.
        #[arg(long, default_value_t = 57_600)]
        length: usize,
    },
    /// Minimal cycle dimension of random orthogonal matrices vs the bound.
    MatchingExp {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        /// `start..end:step` or a comma-separated list.
        #[arg(long, default_value = "20..160:20")]
        sizes: String,
        #[arg(long, default_value_t = 10)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Approximate a stored reservoir by a simple cycle reservoir.
    Approx {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        streams: usize,
        #[arg(long, default_value_t = 500)]
        length: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("`{p}` is not a non-negative integer")))
        })
        .collect()
}

fn parse_sizes(s: &str) -> Result<Vec<usize>> {
    let Some((range, step)) = s.split_once(':') else {
        return parse_list(s);
    };
    let bad = || Error::InvalidInput(format!("sizes `{s}` must look like 20..160:20"));
    let (lo, hi) = range.split_once("..").ok_or_else(bad)?;
    let lo: usize = lo.trim().parse().map_err(|_| bad())?;
    let hi: usize = hi.trim().parse().map_err(|_| bad())?;
    let step: usize = step.trim().parse().map_err(|_| bad())?;
    if step == 0 || lo > hi {
        return Err(bad());
    }
    Ok((lo..=hi).step_by(step).collect())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::DilationExp {
            dataset,
            data,
            column,
            out,
            seeds,
            horizon,
            rho,
            ridge,
            kappa,
            orders,
            length,
        } => {
            if !(rho > 0.0 && rho < 1.0) || !(kappa > 0.0) || seeds == 0 {
                return Err(Error::InvalidInput(
                    "need 0 < rho < 1, kappa > 0 and at least one seed".into(),
                ));
            }
            let series = match (dataset, data) {
                (DatasetArg::Synthetic, _) => synthetic_series(length, 0)?,
                (DatasetArg::Ett, Some(p)) => load_series(&p, Dataset::Ett, column.as_deref())?,
                (DatasetArg::Ecl, Some(p)) => load_series(&p, Dataset::Ecl, column.as_deref())?,
                (_, None) => return Err(Error::InvalidInput("--data is required for ett and ecl".into())),
            };
            let cfg = DilationConfig {
                reference: ReferenceConfig {
                    rho,
                    horizon,
                    ridge,
                    ..ReferenceConfig::default()
                },
                orders: parse_list(&orders)?,
                seeds: (0..seeds).collect(),
                kappa,
                washout: None,
            };
            std::fs::create_dir_all(&out)?;
            let (rows, summary) = run_dilation_experiment(&cfg, &series)?;
            write_dilation_rows(&rows, &out.join("dilation_rows.csv"))?;
            write_dilation_summary(&summary, &out.join("dilation_summary.csv"))?;
            let failed = rows.iter().filter(|r| !r.ok()).count();
            if failed > 0 {
                eprintln!("warning: {failed} cells failed; see dilation_rows.csv");
            }
            match dilation_chart(&summary)? {
                Some(svg) => write_text(&out.join("dilation.svg"), &svg)?,
                None => eprintln!("warning: no successful cells, chart skipped"),
            }
            for s in &summary {
                println!(
                    "N = {:>3}  mean state MSE {:.4e}  95% CI [{:.4e}, {:.4e}]  mean n_C {:.0}",
                    s.order, s.mean, s.ci_low, s.ci_high, s.mean_n_c
                );
            }
        }
        Command::MatchingExp {
            out,
            delta,
            sizes,
            samples,
            seed,
        } => {
            if !(delta > 0.0 && delta.is_finite()) {
                return Err(Error::InvalidInput(format!("delta must be positive, got {delta}")));
            }
            let cfg = MatchingConfig {
                sizes: parse_sizes(&sizes)?,
                samples,
                delta,
                seed,
            };
            std::fs::create_dir_all(&out)?;
            let (rows, summary) = run_matching_experiment(&cfg)?;
            write_matching_rows(&rows, &out.join("matching_rows.csv"))?;
            write_matching_summary(&summary, &out.join("matching_summary.csv"))?;
            match matching_chart(&summary)? {
                Some(svg) => write_text(&out.join("matching.svg"), &svg)?,
                None => eprintln!("warning: nothing to plot"),
            }
            for s in &summary {
                println!(
                    "n = {:>4}  geomean n_C {:>8.1}  geomean n1 {:>9.1}  median n_C {:.1}",
                    s.n, s.geomean_n_c, s.geomean_n1, s.median_n_c
                );
            }
        }
        Command::Approx {
            system,
            epsilon,
            out,
            streams,
            length,
            seed,
        } => {
            let r = read_reservoir(&system)?;
            let validation = ValidationConfig {
                streams,
                length,
                seed,
            };
            let (scr, report) = approximate_scr_default(&r, epsilon, &validation)?;
            write_scr(&scr, &out.join("scr"))?;
            let (txt, csv) = write_report(&report, &out)?;
            print!("{}", report.to_key_value());
            println!("wrote {}, {} and {}", out.join("scr").display(), txt.display(), csv.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
