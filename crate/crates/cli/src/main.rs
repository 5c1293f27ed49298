mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use dbl_core::fixtures::FIXTURE_SEED;

use commands::{BasisChoice, Outcome};
use report::{Failure, RunReport, Timing, SCHEMA};

#[derive(Parser, Debug)]
#[command(
    name = "dbl",
    version,
    about = "Finite-stage checks for C(X, R) over rings isolated at zero"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Coefficient ring, e.g. IntInf, IntTriv, FpTriv(2), ZmodTriv(6).
    #[arg(long, global = true)]
    ring: Option<String>,
    /// JSON file `{"points": n, "opens": [[..], ..]}` describing a finite space.
    #[arg(long, global = true)]
    space_file: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    max_points: Option<usize>,
    #[arg(long, global = true)]
    max_sets: Option<usize>,
    /// Search budget for the Archimedean upper bound.
    #[arg(long, global = true)]
    budget: Option<u32>,
    /// Pretty-print the JSON report.
    #[arg(long, global = true)]
    json: bool,
    /// Suppress the summary on stderr.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Quasi-components, clopens and the Banaschewski compactification.
    Space,
    /// Spectrum round trips for the given space and ring.
    Spectrum,
    /// Tate–Čech exactness versus the cover property.
    Cech {
        #[arg(long)]
        exhaustive: bool,
        /// JSON file `{"space": {..}, "sets": [[..], ..]}`.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Absorbing-law checks for completed tensor products.
    Tensor {
        #[arg(long, default_value_t = 4)]
        n: usize,
    },
    /// Unimodularity certificates for clopen bases.
    Basis {
        #[arg(long, value_enum, default_value_t = BasisKindArg::Vdp)]
        kind: BasisKindArg,
        #[arg(long, default_value_t = 2)]
        p: u64,
        #[arg(long, default_value_t = 2)]
        k: u32,
    },
    /// Mahler pairing and coefficients.
    Mahler {
        #[arg(long)]
        pairing: bool,
        #[arg(long, default_value_t = 12)]
        max: u64,
        /// Comma-separated values f(0), f(1), ...
        #[arg(long, allow_hyphen_values = true)]
        values: Option<String>,
    },
    /// Stone–Weierstrass indicator certificates.
    Sw {
        /// Generator values per point, comma-separated; repeatable.
        #[arg(long = "gen", required = true, allow_hyphen_values = true)]
        gens: Vec<String>,
        /// Points of the clopen, comma-separated (empty for ∅).
        #[arg(long, default_value = "")]
        clopen: String,
    },
    /// A fast pass over every module.
    Suite,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BasisKindArg {
    Partition,
    Vdp,
    Generalised,
    Mahler,
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Space => "space",
            Cmd::Spectrum => "spectrum",
            Cmd::Cech { .. } => "cech",
            Cmd::Tensor { .. } => "tensor",
            Cmd::Basis { .. } => "basis",
            Cmd::Mahler { .. } => "mahler",
            Cmd::Sw { .. } => "sw",
            Cmd::Suite => "suite",
        }
    }
}

fn inputs(cli: &Cli) -> Value {
    let cmd = match &cli.cmd {
        Cmd::Cech { exhaustive, input } => json!({"exhaustive": exhaustive, "input": input}),
        Cmd::Tensor { n } => json!({"n": n}),
        Cmd::Basis { kind, p, k } => {
            json!({"kind": format!("{kind:?}").to_lowercase(), "p": p, "k": k})
        }
        Cmd::Mahler {
            pairing,
            max,
            values,
        } => json!({"pairing": pairing, "max": max, "values": values}),
        Cmd::Sw { gens, clopen } => json!({"gen": gens, "clopen": clopen}),
        Cmd::Space | Cmd::Spectrum | Cmd::Suite => json!({}),
    };
    json!({
        "ring": cli.ring,
        "space_file": cli.space_file,
        "seed": cli.seed,
        "max_points": cli.max_points,
        "max_sets": cli.max_sets,
        "budget": cli.budget,
        "command": cmd,
    })
}

fn dispatch(cli: &Cli) -> Outcome {
    let ring = commands::parse_ring(cli.ring.as_deref())?;
    let space = || commands::load_space(cli.space_file.as_deref(), cli.max_points.unwrap_or(3));
    match &cli.cmd {
        Cmd::Space => commands::space(space()?),
        Cmd::Spectrum => commands::spectrum(space()?, ring),
        Cmd::Cech {
            exhaustive: true,
            input: None,
        } => {
            let rings = match &cli.ring {
                Some(_) => vec![ring],
                None => vec![
                    dbl_core::scalars::RingDescriptor::IntInf,
                    dbl_core::scalars::RingDescriptor::IntTriv,
                    dbl_core::scalars::RingDescriptor::FpTriv(2),
                ],
            };
            commands::cech_exhaustive(
                cli.max_points.unwrap_or(4),
                cli.max_sets.unwrap_or(3),
                &rings,
            )
        }
        Cmd::Cech {
            exhaustive: false,
            input: Some(path),
        } => commands::cech_input(path, ring),
        Cmd::Cech { .. } => Err(Failure::Input(
            "cech needs exactly one of --exhaustive or --input".into(),
        )),
        Cmd::Tensor { n } => commands::tensor(*n, cli.budget.unwrap_or(1)),
        Cmd::Basis { kind, p, k } => commands::basis(match kind {
            BasisKindArg::Partition => BasisChoice::Partition(space()?),
            BasisKindArg::Vdp => BasisChoice::Vdp(*p, *k),
            BasisKindArg::Mahler => BasisChoice::Mahler(*p, *k),
            BasisKindArg::Generalised => BasisChoice::Generalised {
                points: cli.max_points.unwrap_or(8),
                p: i64::try_from(*p).map_err(|_| Failure::Input(format!("bad prime {p}")))?,
                seed: cli.seed.unwrap_or(FIXTURE_SEED),
            },
        }),
        Cmd::Mahler {
            pairing,
            max,
            values,
        } => {
            let values = values.as_deref().map(commands::parse_ints).transpose()?;
            commands::mahler(pairing.then_some(*max), values)
        }
        Cmd::Sw { gens, clopen } => {
            let gens = gens
                .iter()
                .map(|g| commands::parse_ints(g))
                .collect::<Result<Vec<_>, _>>()?;
            let x = match &cli.space_file {
                Some(p) => Some(commands::load_space(Some(p), 0)?),
                None => None,
            };
            commands::sw(x, ring, &gens, &commands::parse_ints(clopen)?)
        }
        Cmd::Suite => commands::suite(cli.seed.unwrap_or(FIXTURE_SEED)),
    }
}

fn init_workers() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("DBL_WORKERS") {
        let n: usize = v
            .parse()
            .map_err(|_| Failure::Input(format!("DBL_WORKERS={v:?} is not a count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Input(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let result = init_workers().and_then(|_| dispatch(&cli));
    let (verdicts, error, status) = match result {
        Ok(v) => {
            let status = if v.iter().all(|v| v.pass) { 0 } else { 1 };
            (v, None, status)
        }
        Err(Failure::Input(msg)) => (vec![], Some(msg), 2),
        Err(Failure::Violation(msg, detail)) => {
            (vec![report::verdict("check", false, detail)], Some(msg), 1)
        }
    };
    let report = RunReport {
        schema: SCHEMA,
        subcommand: cli.cmd.name().to_string(),
        inputs: inputs(&cli),
        verdicts,
        error,
        timing: Timing {
            elapsed_ms: start.elapsed().as_millis(),
        },
        exit_status: status,
    };
    let text = if cli.json {
        serde_json::to_string_pretty(&report)
    } else {
        serde_json::to_string(&report)
    };
    println!("{}", text.expect("report serializes"));
    if !cli.quiet {
        for v in &report.verdicts {
            eprintln!("{} {}", if v.pass { "PASS" } else { "FAIL" }, v.name);
        }
        if let Some(e) = &report.error {
            eprintln!("error: {e}");
        }
        eprintln!(
            "{} finished in {} ms, exit {}",
            report.subcommand, report.timing.elapsed_ms, status
        );
    }
    ExitCode::from(status as u8)
}
