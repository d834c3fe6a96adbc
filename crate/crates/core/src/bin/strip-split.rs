use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use strip_split::ems::{ems, VarianceComponent};
use strip_split::f_tests::{f_test_plan, verify_exactness, AnovaReport};
use strip_split::simulator::{simulate_replicates, type1_error, verify_ems, with_workers, SimSpec};
use strip_split::{anova_table, compare, BalancedLayout, DesignDims, ModelVariant, SourceId};

#[derive(Parser)]
#[command(name = "strip-split", version, about = "ANOVA and F tests for the balanced strip-split plot design")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// ANOVA table with F tests for one model variant.
    Anova {
        /// Three letters F/R giving the status of A, B and C, e.g. FFF or RFF.
        #[arg(long)]
        model: ModelVariant,
        /// CSV with columns block, A, B, C, y.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Expected mean squares of a model variant, symbolic or at given dims.
    Ems {
        #[arg(long)]
        model: ModelVariant,
        /// Level counts as r,a,b,c.
        #[arg(long)]
        dims: Option<DesignDims>,
    },
    /// F-test plan of a model variant with its exactness check.
    Plan {
        #[arg(long)]
        model: ModelVariant,
        #[arg(long, default_value = "2,2,2,2")]
        dims: DesignDims,
    },
    /// Monte Carlo audit of expected mean squares and test sizes.
    Simulate {
        #[arg(long)]
        model: ModelVariant,
        #[arg(long)]
        dims: DesignDims,
        /// Variance of a random term, e.g. --sigma eAB=0.5. Repeatable.
        /// Without any, every applicable variance is 1.
        #[arg(long = "sigma", value_name = "NAME=VALUE")]
        sigmas: Vec<String>,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Scale of the default centered pattern used for every fixed
        /// source; 0 makes all fixed effects zero.
        #[arg(long, default_value_t = 1.0)]
        effect_scale: f64,
        #[arg(long, default_value_t = 0.0)]
        grand_mean: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Write every replicate as CSV into this directory.
        #[arg(long)]
        emit_csv: Option<PathBuf>,
        /// Worker threads (default: all cores). Results do not depend on it.
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Strip-split, factorial and split-split analyses side by side.
    Compare {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

fn read_layout(path: &PathBuf) -> Result<BalancedLayout> {
    let file = fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    BalancedLayout::from_csv_reader(file).with_context(|| format!("cannot read layout from {}", path.display()))
}

fn parse_sigma(text: &str) -> Result<(VarianceComponent, f64)> {
    let Some((name, value)) = text.split_once('=') else {
        bail!("expected NAME=VALUE, got {text:?}");
    };
    let source: SourceId = name.trim().parse().with_context(|| format!("unknown term {name:?}"))?;
    let value: f64 = value.trim().parse().with_context(|| format!("bad variance {value:?}"))?;
    Ok((VarianceComponent(source), value))
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Anova { model, data, alpha, format } => {
            let started = Instant::now();
            let layout = read_layout(&data)?;
            let report = AnovaReport::new(model, anova_table(&layout), alpha)?;
            match format {
                Format::Text => {
                    print!("{}", report.to_text());
                    eprintln!("elapsed {:.3} s", started.elapsed().as_secs_f64());
                }
                Format::Csv => print!("{}", report.to_csv()),
                Format::Json => println!("{}", report.to_json()),
            }
        }
        Command::Ems { model, dims } => {
            println!("Expected mean squares, model {model}");
            for s in SourceId::ALL {
                let e = ems(model, s);
                match dims {
                    Some(d) => println!("E(MS_{:<3}) = {}", s.label(), e.display_at(d)),
                    None => println!("E(MS_{:<3}) = {e}", s.label()),
                }
            }
        }
        Command::Plan { model, dims } => {
            let report = verify_exactness(model, dims)?;
            println!("F tests, model {model}");
            for (spec, entry) in f_test_plan(model).iter().zip(&report.entries) {
                println!(
                    "{:<4} {:<34} tests {:<24} E(num) - E(den) = {}",
                    spec.source.label(),
                    spec.ratio_label(),
                    spec.hypothesis.to_string(),
                    entry.difference
                );
            }
        }
        Command::Simulate {
            model,
            dims,
            sigmas,
            reps,
            seed,
            effect_scale,
            grand_mean,
            alpha,
            emit_csv,
            threads,
            format,
        } => {
            let mut spec = SimSpec::new(dims, model).with_reps(reps, seed).with_default_effects(effect_scale);
            spec.grand_mean = grand_mean;
            if sigmas.is_empty() {
                spec = spec.with_all_sigmas(1.0);
            } else {
                for s in &sigmas {
                    let (c, v) = parse_sigma(s)?;
                    spec.sigmas.insert(c, v);
                }
            }
            spec.validate()?;
            let (checks, rates, layouts) = with_workers(threads, || -> Result<_> {
                let layouts = match &emit_csv {
                    Some(_) => Some(simulate_replicates(&spec)?),
                    None => None,
                };
                Ok((verify_ems(&spec)?, type1_error(&spec, alpha)?, layouts))
            })??;
            if let (Some(dir), Some(layouts)) = (&emit_csv, layouts) {
                fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
                let width = reps.to_string().len().max(4);
                for (i, layout) in layouts.iter().enumerate() {
                    let path = dir.join(format!("rep_{i:0width$}.csv"));
                    fs::write(&path, layout.to_csv_string())
                        .with_context(|| format!("cannot write {}", path.display()))?;
                }
            }
            match format {
                Format::Json => {
                    let out = serde_json::json!({ "model": model, "reps": reps, "seed": seed, "ems": checks, "rejection": rates });
                    println!("{}", serde_json::to_string_pretty(&out)?);
                }
                Format::Csv => {
                    println!("source,mean_ms,predicted_ems,std_error,z");
                    for c in &checks {
                        println!("{},{},{},{},{}", c.source.label(), c.mean_ms, c.predicted, c.std_error, c.z());
                    }
                }
                Format::Text => {
                    println!("Model {model}, dims {dims}, {reps} replicates, seed {seed}");
                    println!("{:<6}{:>12}{:>12}{:>10}{:>7}", "Source", "mean MS", "E(MS)", "SE", "z");
                    for c in &checks {
                        println!(
                            "{:<6}{:>12.4}{:>12.4}{:>10.4}{:>7.2}",
                            c.source.label(),
                            c.mean_ms,
                            c.predicted,
                            c.std_error,
                            c.z()
                        );
                    }
                    println!("\nRejection rates at alpha = {alpha}");
                    println!("{:<6}{:>8}{:>8}  {:<10}ratio", "Source", "rate", "SE", "null");
                    for r in &rates {
                        let kind = if r.simple_ratio { "simple" } else { "complex" };
                        let null = if r.null_holds { "true" } else { "false" };
                        println!("{:<6}{:>8.4}{:>8.4}  {:<10}{kind}", r.source.label(), r.rate, r.std_error, null);
                    }
                }
            }
        }
        Command::Compare { data, alpha, format } => {
            let layout = read_layout(&data)?;
            let comparison = compare::compare_designs(&layout, alpha)?;
            match format {
                Format::Text => print!("{}", comparison.to_text()),
                Format::Csv => print!("{}", comparison.to_csv()),
                Format::Json => println!("{}", comparison.to_json()),
            }
        }
    }
    Ok(())
}
