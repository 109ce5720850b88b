use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use korovkin::bounds::{convergence_sweep, GridPlan, SweepSpec};
use korovkin::function_space::CorpusFn;
use korovkin::harness::{list_registry, run, ExperimentConfig};
use korovkin::operators::{
    check_axiom, verify_krein_inequality, Axiom, Claims, Family, OperatorSpec, PhiSpec, Verdict,
};
use korovkin::{Error, Result};

#[derive(Parser)]
#[command(
    name = "korovkin",
    version,
    about = "Quantitative Korovkin bounds for weakly nonlinear operators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML config.
    Run { config: PathBuf },
    /// List operator families, warps, corpus functions and axiom flags.
    List,
    /// Randomized axiom checks for one operator family.
    CheckAxioms {
        family: Family,
        /// Operator order.
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 500)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Source grid size; defaults to the smallest grid holding every node.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Convergence table for one family against `f o phi`, printed as CSV.
    Sweep {
        family: Family,
        function: CorpusFn,
        #[arg(long, default_value_t = 4)]
        n_min: usize,
        /// Orders double from `n_min` up to `n_max`.
        #[arg(long, default_value_t = 64)]
        n_max: usize,
        /// Source grid size per order (at least); rounded up to hold every node.
        #[arg(long, default_value_t = 2001)]
        grid: usize,
        #[arg(long, value_parser = ["identity", "quadratic"], default_value = "identity")]
        phi: String,
        /// Multiplier of the limit operator.
        #[arg(long)]
        scale: Option<f64>,
    },
}

fn doubling(n_min: usize, n_max: usize) -> Vec<usize> {
    std::iter::successors(Some(n_min), |&n| n.checked_mul(2))
        .take_while(|&n| n <= n_max)
        .collect()
}

fn check_axioms(
    family: Family,
    n: usize,
    trials: usize,
    seed: u64,
    grid: Option<usize>,
) -> Result<()> {
    let mut spec = OperatorSpec::new(family);
    if family.needs_order() {
        spec = spec.with_n(n);
    }
    if let Some(m) = grid {
        spec = spec.with_grid(m);
    }
    let op = spec.build()?;
    println!(
        "{} on {} points, claims {}",
        spec.label(),
        op.source_domain().len(),
        op.claims()
    );
    let mut failed = None;
    let mut reports = Vec::new();
    for (i, axiom) in Axiom::ALL.into_iter().enumerate() {
        let claimed = op.claims().contains(axiom.flag());
        reports.push((
            claimed,
            check_axiom(&op, axiom, trials, seed.wrapping_add(i as u64))?,
        ));
    }
    if op.claims().contains(Claims::SL | Claims::M) {
        reports.push((
            true,
            verify_krein_inequality(&op, trials, seed.wrapping_add(100))?,
        ));
    }
    for (claimed, r) in &reports {
        let tag = if *claimed { "claimed" } else { "unclaimed" };
        print!(
            "  {:<8} {:<10} {:<12} trials={}",
            r.property.to_string(),
            tag,
            r.verdict.to_string(),
            r.trials
        );
        if let Some(w) = &r.witness {
            print!("  witness: {} violation={:e}", w.check.name(), w.violation);
            if let Some(p) = w.point {
                print!(" at point {p}");
            }
        }
        println!();
        if *claimed && r.verdict == Verdict::Fail && failed.is_none() {
            failed = Some(Error::AxiomViolation {
                operator: spec.label(),
                property: r.property.to_string(),
                violation: r.witness.as_ref().map_or(f64::NAN, |w| w.violation),
            });
        }
    }
    failed.map_or(Ok(()), Err)
}

fn sweep(
    family: Family,
    f: CorpusFn,
    n_min: usize,
    n_max: usize,
    grid: usize,
    phi: &str,
    scale: Option<f64>,
) -> Result<()> {
    if n_min < 1 || n_max < n_min {
        return Err(Error::Config {
            field: "--n-min/--n-max".into(),
            reason: "need 1 <= n_min <= n_max".into(),
        });
    }
    let phi = if phi == "quadratic" {
        PhiSpec::Quadratic
    } else {
        PhiSpec::Identity
    };
    let mut reference = OperatorSpec::new(Family::Composition).with_phi(phi.clone());
    if let Some(c) = scale {
        reference = reference.with_scale(c);
    }
    let spec = SweepSpec::new(
        OperatorSpec::new(family).with_phi(phi),
        reference,
        doubling(n_min, n_max),
        GridPlan::PerOrder {
            min_source_points: grid,
            target_points: grid,
        },
    );
    let table = convergence_sweep(&spec, f)?;
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    table.write_csv(&mut lock)?;
    lock.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    // usage errors exit with 1; 2 is reserved for violated inequalities
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Run { config } => ExperimentConfig::load(&config).and_then(|cfg| {
            let out = run(&cfg)?;
            for t in &out.tables {
                let fit = t.rate_fit();
                let slope = fit
                    .and_then(|f| f.rhs_slope)
                    .map_or("na".to_string(), |s| format!("{s:.3}"));
                let worst = t
                    .rows
                    .iter()
                    .map(|r| r.margin)
                    .fold(f64::INFINITY, f64::min);
                println!(
                    "{:<20} rows={:<3} min_margin={worst:.3e} rhs_slope={slope}",
                    t.function.name(),
                    t.rows.len()
                );
            }
            println!(
                "wrote {} files to {}",
                out.manifest.files.len() + 1,
                out.dir.display()
            );
            out.into_result().map(|_| ())
        }),
        Command::List => {
            print!("{}", list_registry());
            Ok(())
        }
        Command::CheckAxioms {
            family,
            n,
            trials,
            seed,
            grid,
        } => check_axioms(family, n, trials, seed, grid),
        Command::Sweep {
            family,
            function,
            n_min,
            n_max,
            grid,
            phi,
            scale,
        } => sweep(family, function, n_min, n_max, grid, &phi, scale),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
