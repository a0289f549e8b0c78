use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use irrigation_lq::filters::IirCoeffs;
use irrigation_lq::harness::{
    run_scenario_with, run_structured_logged, sweep_disturbance_location, sweep_network_size, sweep_tradeoff, write_sweep_csv,
    write_tradeoff_csv, ControllerKind, Scenario, SizeSweepKind, TradeoffGrid,
};
use irrigation_lq::ident::{identify, TestSignal};
use irrigation_lq::plant::{NetworkKind, ParamTable};
use irrigation_lq::structured::compute_params;

#[derive(Parser)]
#[command(name = "irrigation-lq", version, about = "Canal string control experiments")]
struct Cli {
    /// Pool parameter table replacing the built-in one.
    #[arg(long, global = true)]
    table: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Controller {
    Structured,
    Lq3,
    P,
}

impl From<Controller> for ControllerKind {
    fn from(c: Controller) -> Self {
        match c {
            Controller::Structured => ControllerKind::Structured,
            Controller::Lq3 => ControllerKind::Lq3,
            Controller::P => ControllerKind::P,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Homogeneous,
    Alternating,
}

#[derive(Subcommand)]
enum Command {
    /// Print the structured controller parameters.
    Params {
        /// Take network and weights from a scenario file.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        pools: usize,
        #[arg(long, value_enum, default_value = "homogeneous")]
        kind: Kind,
    },
    /// Fit the delays of the first-order design models.
    Ident {
        #[arg(long, default_value_t = 1)]
        min_delay: usize,
        #[arg(long, default_value_t = 30)]
        max_delay: usize,
        /// Write fit-error curves to `<prefix>_common.csv`, `<prefix>_pool1.csv`, ...
        #[arg(long)]
        csv_prefix: Option<PathBuf>,
    },
    /// Run one scenario in closed loop and write the trace.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum)]
        controller: Controller,
        #[arg(long)]
        out: PathBuf,
        /// Also write the structured sweep messages.
        #[arg(long)]
        messages: Option<PathBuf>,
    },
    /// Cost against network size.
    SweepSize {
        #[arg(long, value_delimiter = ',', default_value = "3,5,10,15")]
        sizes: Vec<usize>,
        /// Set-point change instead of an off-take in pool N-1.
        #[arg(long)]
        setpoint: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cost against the pool carrying the off-take.
    SweepLocation {
        #[arg(long, default_value_t = 10)]
        pools: usize,
        /// Defaults to every pool.
        #[arg(long, value_delimiter = ',')]
        locations: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Level deviation against input effort for varying weights.
    Tradeoff {
        #[arg(long, default_value_t = 10)]
        pools: usize,
        #[arg(long, default_value_t = 5)]
        pool: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn run(cli: Cli) -> Result<()> {
    let table = match &cli.table {
        Some(p) => ParamTable::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => ParamTable::default(),
    };
    match cli.command {
        Command::Params { scenario, pools, kind } => {
            let scenario = match scenario {
                Some(p) => Scenario::load(&p).with_context(|| format!("loading {}", p.display()))?,
                None => Scenario::new(
                    pools,
                    match kind {
                        Kind::Homogeneous => NetworkKind::Homogeneous,
                        Kind::Alternating => NetworkKind::Alternating,
                    },
                ),
            };
            let weights = scenario.weights()?;
            weights.structured_compatible()?;
            let design = scenario.design_pools(&table)?;
            let b: Vec<f64> = design.iter().map(|p| p.b).collect();
            let c: Vec<f64> = design.iter().map(|p| p.c).collect();
            let params = compute_params(&weights.q, weights.r[scenario.pools - 1], &b, &c)?;
            println!("{params}");
        }
        Command::Ident {
            min_delay,
            max_delay,
            csv_prefix,
        } => {
            if min_delay > max_delay {
                bail!("--min-delay exceeds --max-delay");
            }
            let result = identify(&table, &IirCoeffs::default_design(), &TestSignal::default(), min_delay..=max_delay)?;
            println!("tau_bar {} (error {:e})", result.common.best, result.common.objective(result.common.best).unwrap_or(f64::NAN));
            for (model, fit) in &result.pools {
                println!("tau pool{} {} (error {:e})", model.number(), fit.best, fit.objective(fit.best).unwrap_or(f64::NAN));
            }
            if let Some(prefix) = csv_prefix {
                let name = |suffix: &str| PathBuf::from(format!("{}_{suffix}.csv", prefix.display()));
                result.common.write_csv(output(Some(&name("common")))?)?;
                for (model, fit) in &result.pools {
                    fit.write_csv(output(Some(&name(&format!("pool{}", model.number()))))?)?;
                }
            }
        }
        Command::Simulate {
            scenario,
            controller,
            out,
            messages,
        } => {
            let s = Scenario::load(&scenario).with_context(|| format!("loading {}", scenario.display()))?;
            let (trace, log) = match (controller, &messages) {
                (Controller::Structured, Some(_)) => {
                    let (t, log) = run_structured_logged(&s, &table)?;
                    (t, Some(log))
                }
                (_, Some(_)) => bail!("--messages needs the structured controller"),
                _ => (run_scenario_with(&s, controller.into(), &table)?, None),
            };
            trace.write_csv(output(Some(&out))?)?;
            let cost = trace.cost();
            println!(
                "{}: total {:.6e} level {:.6e} input {:.6e} deltau {:.6e}",
                controller_name(controller),
                cost.total,
                cost.level,
                cost.input,
                cost.delta_u
            );
            if let Some(f) = trace.p_factor {
                println!("gain factor {f}");
            }
            println!("horizon {} final/peak {:.3e}", trace.len(), trace.final_to_peak());
            if let (Some(path), Some(log)) = (messages, log) {
                log.write_csv(output(Some(&path))?)?;
            }
        }
        Command::SweepSize { sizes, setpoint, out } => {
            let kind = if setpoint { SizeSweepKind::Setpoint } else { SizeSweepKind::Disturbance };
            let rows = sweep_network_size(&sizes, &ControllerKind::ALL, kind)?;
            write_sweep_csv(&rows, "pools", output(out.as_deref())?)?;
        }
        Command::SweepLocation { pools, locations, out } => {
            let locations = if locations.is_empty() { (1..=pools).collect() } else { locations };
            let rows = sweep_disturbance_location(pools, &locations, &ControllerKind::ALL)?;
            write_sweep_csv(&rows, "pool", output(out.as_deref())?)?;
        }
        Command::Tradeoff { pools, pool, out } => {
            let grid = TradeoffGrid {
                n: pools,
                pool,
                ..TradeoffGrid::default()
            };
            let points = sweep_tradeoff(&grid)?;
            write_tradeoff_csv(&points, output(out.as_deref())?)?;
        }
    }
    Ok(())
}

fn controller_name(c: Controller) -> &'static str {
    ControllerKind::from(c).name()
}
