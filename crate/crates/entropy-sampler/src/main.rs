//! Command-line front end for fixed-size unequal-probability designs.
//!
//! One binary exposes the exact oracle, the closed-form approximations, the
//! Edgeworth density, the samplers, and the scaling studies. Inputs are JSON
//! (designs and design families); outputs are CSV tables written to `--out`
//! or standard output. Unit indices are 1-based on the command line and in
//! every output file.
//!
//! Exit codes: 0 on success, 2 for usage or validation errors, 3 for I/O
//! errors. Runs are deterministic: the same arguments and seed produce
//! byte-identical output at any `--workers` setting.

mod selftest;

use clap::{Parser, Subcommand};
use entropy_sampler::table;
use rejective::approx::{approx_inclusion, error_scaling_study};
use rejective::correlation::{arratia_example, check_conditions, proposition1_study};
use rejective::edgeworth::edgeworth_pmf_approx;
use rejective::pmf::pmf;
use rejective::sampler::{draw_replicated, SampleMethod};
use rejective::study::ScalingStudy;
use rejective::{Design, DesignFamily, DesignOracle, Formula};
use std::path::PathBuf;
use table::{fmt_float, fmt_units, parse_powers, parse_sizes, parse_units};

/// Default tuple budget for sampled order-3 and order-4 scans.
const DEFAULT_BUDGET: usize = 10_000;

#[derive(Parser)]
#[command(
    name = "entropy-sampler",
    version,
    about = "Exact probabilities, approximations, and samplers for fixed-size designs"
)]
struct Cli {
    /// Worker threads for parallel scans (default: ENTROPY_SAMPLER_WORKERS,
    /// then all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact joint inclusion probability of the listed units.
    ExactPi {
        /// Design JSON file with fields `p` and `n`.
        #[arg(long)]
        design: PathBuf,
        /// Comma-separated 1-based unit indices.
        #[arg(long)]
        units: String,
        /// Output CSV path (default: standard output).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form approximation of a joint inclusion probability.
    ApproxPi {
        #[arg(long)]
        design: PathBuf,
        #[arg(long)]
        units: String,
        /// Approximation: theorem1-p, theorem1-pi, or hajek2.
        #[arg(long)]
        formula: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact and Edgeworth-corrected sample-size probabilities.
    EdgeworthPmf {
        #[arg(long)]
        design: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw samples; one line of sorted 1-based units per draw.
    Sample {
        #[arg(long)]
        design: PathBuf,
        /// Number of draws.
        #[arg(long, default_value_t = 1)]
        reps: u64,
        /// Base seed; draw r uses stream r of this seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sampler: sequential, rejection, or poisson.
        #[arg(long, default_value = "sequential")]
        method: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Error-scaling study over a design family.
    Study {
        /// Family JSON file (kind equal, linear, or file).
        #[arg(long)]
        family: PathBuf,
        /// Tuple size for a formula-error study (used with --formula).
        #[arg(long)]
        order: Option<usize>,
        /// Approximation to study: theorem1-p, theorem1-pi, or hajek2.
        #[arg(long)]
        formula: Option<String>,
        /// Exponents for a central-moment study instead of a formula study.
        #[arg(long)]
        powers: Option<String>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scaled correlation maxima for one design or a family.
    CheckConditions {
        #[arg(long)]
        design: Option<PathBuf>,
        #[arg(long)]
        family: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two-block stress designs and their probability-window fractions.
    Arratia {
        /// Sampling fraction target.
        #[arg(long, default_value_t = 0.3)]
        gamma: f64,
        /// Window-condition tolerance.
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        /// Heavy-block fraction target.
        #[arg(long, default_value_t = 0.4)]
        alpha: f64,
        /// Comma-separated population sizes.
        #[arg(long, default_value = "100,1000,10000")]
        sizes: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in invariant checks on tiny designs.
    Selftest,
}

/// Failures carry the exit code the process should end with.
enum CliError {
    /// Bad arguments or values the library rejected (exit 2).
    Usage(String),
    /// Reading inputs or writing outputs failed (exit 3).
    Io(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Io(m) => m,
        }
    }
}

impl From<rejective::Error> for CliError {
    fn from(error: rejective::Error) -> Self {
        match error {
            rejective::Error::Io { .. } => CliError::Io(error.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

fn usage(message: impl Into<String>) -> CliError {
    CliError::Usage(message.into())
}

fn main() {
    let cli = Cli::parse();
    if let Err(error) = run(cli) {
        eprintln!("entropy-sampler: {}", error.message());
        std::process::exit(error.code());
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_workers(cli.workers)?;
    match cli.command {
        Command::ExactPi { design, units, out } => {
            let design = Design::from_json_path(&design)?;
            let units0 = units_zero_based(&units)?;
            let oracle = DesignOracle::new(design)?;
            let result = oracle.inclusion(&units0)?;
            let mut content = String::from("units,value,method\n");
            content.push_str(&format!(
                "{},{},{}\n",
                fmt_units(&one_based(&result.units)),
                fmt_float(result.value),
                result.method.as_str()
            ));
            write_output(out.as_ref(), &content)
        }
        Command::ApproxPi {
            design,
            units,
            formula,
            out,
        } => {
            let design = Design::from_json_path(&design)?;
            let units0 = units_zero_based(&units)?;
            let formula: Formula = formula.parse()?;
            let oracle = DesignOracle::new(design)?;
            let report = approx_inclusion(&oracle, &units0, formula)?;
            let mut content =
                String::from("units,approx_value,exact_value,abs_error,rel_error,d,formula\n");
            content.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                fmt_units(&one_based(&report.units)),
                fmt_float(report.approx_value),
                opt_float(report.exact_value),
                opt_float(report.abs_error),
                opt_float(report.rel_error),
                fmt_float(report.d),
                report.formula.as_str()
            ));
            write_output(out.as_ref(), &content)
        }
        Command::EdgeworthPmf { design, out } => {
            let design = Design::from_json_path(&design)?;
            let exact = pmf(&design);
            let mut content = String::from("l,exact,f0,f2,f4\n");
            for l in 0..=design.population() {
                let f0 = edgeworth_pmf_approx(&design, l, 0)?;
                let f2 = edgeworth_pmf_approx(&design, l, 2)?;
                let f4 = edgeworth_pmf_approx(&design, l, 4)?;
                content.push_str(&format!(
                    "{l},{},{},{},{}\n",
                    fmt_float(exact.at(l)),
                    fmt_float(f0),
                    fmt_float(f2),
                    fmt_float(f4)
                ));
            }
            write_output(out.as_ref(), &content)
        }
        Command::Sample {
            design,
            reps,
            seed,
            method,
            out,
        } => {
            let design = Design::from_json_path(&design)?;
            let method: SampleMethod = method.parse()?;
            let content = draw_samples(&design, method, reps, seed)?;
            write_output(out.as_ref(), &content)
        }
        Command::Study {
            family,
            order,
            formula,
            powers,
            budget,
            seed,
            out,
        } => {
            let family = DesignFamily::from_json_path(&family)?;
            let study = match (formula, powers) {
                (Some(formula), None) => {
                    let order = order
                        .ok_or_else(|| usage("--formula studies also need --order"))?;
                    let formula: Formula = formula.parse()?;
                    error_scaling_study(&family, order, formula, budget, seed)?
                }
                (None, Some(powers)) => {
                    let powers = parse_powers(&powers).map_err(usage)?;
                    proposition1_study(&family, &powers, budget, seed)?
                }
                (Some(_), Some(_)) => {
                    return Err(usage("--formula and --powers are mutually exclusive"))
                }
                (None, None) => {
                    return Err(usage("study needs either --formula with --order, or --powers"))
                }
            };
            write_output(out.as_ref(), &study_csv(&study))
        }
        Command::CheckConditions {
            design,
            family,
            budget,
            seed,
            out,
        } => {
            let designs = match (design, family) {
                (Some(path), None) => vec![Design::from_json_path(&path)?],
                (None, Some(path)) => DesignFamily::from_json_path(&path)?.designs()?,
                _ => {
                    return Err(usage(
                        "check-conditions needs exactly one of --design or --family",
                    ))
                }
            };
            let mut content =
                String::from("N,n,d,N_over_d,c2max,c3max,c4max,cpair,coverage\n");
            for design in &designs {
                let report = check_conditions(design, budget, seed)?;
                content.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    report.population,
                    report.sample_size,
                    fmt_float(report.d),
                    fmt_float(report.pop_over_d),
                    fmt_float(report.c2max),
                    fmt_float(report.c3max),
                    fmt_float(report.c4max),
                    fmt_float(report.cpair),
                    fmt_float(report.coverage)
                ));
            }
            write_output(out.as_ref(), &content)
        }
        Command::Arratia {
            gamma,
            delta,
            alpha,
            sizes,
            out,
        } => {
            let sizes = parse_sizes(&sizes).map_err(usage)?;
            let mut content = String::from("N,n,d,d_over_N,eps,window_fraction\n");
            for population in sizes {
                let example = arratia_example(gamma, delta, alpha, population)?;
                let d = example.d_over_population * population as f64;
                let n = example.design().sample_size();
                for (eps, fraction) in example.window_grid() {
                    content.push_str(&format!(
                        "{population},{n},{},{},{},{}\n",
                        fmt_float(d),
                        fmt_float(example.d_over_population),
                        fmt_float(eps),
                        fmt_float(fraction)
                    ));
                }
            }
            write_output(out.as_ref(), &content)
        }
        Command::Selftest => selftest::run().map_err(CliError::Usage),
    }
}

/// Resolves the worker count from the flag, then the environment variable.
fn configure_workers(flag: Option<usize>) -> Result<(), CliError> {
    let from_env = match std::env::var("ENTROPY_SAMPLER_WORKERS") {
        Ok(value) => Some(value.parse::<usize>().map_err(|_| {
            usage(format!("ENTROPY_SAMPLER_WORKERS is not a number: '{value}'"))
        })?),
        Err(_) => None,
    };
    let workers = match flag.or(from_env) {
        Some(0) => return Err(usage("worker count must be at least 1")),
        Some(w) => w,
        None => return Ok(()),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .map_err(|e| usage(format!("could not configure {workers} workers: {e}")))
}

fn units_zero_based(field: &str) -> Result<Vec<usize>, CliError> {
    Ok(parse_units(field)
        .map_err(usage)?
        .into_iter()
        .map(|u| u - 1)
        .collect())
}

fn one_based(units: &[usize]) -> Vec<usize> {
    units.iter().map(|&u| u + 1).collect()
}

fn opt_float(value: Option<f64>) -> String {
    value.map(fmt_float).unwrap_or_default()
}

fn study_csv(study: &ScalingStudy) -> String {
    let mut content = String::from("N,d,max_abs_error\n");
    for point in study.points() {
        content.push_str(&format!(
            "{},{},{}\n",
            point.population,
            fmt_float(point.d),
            fmt_float(point.max_abs_error)
        ));
    }
    content.push_str(&format!("slope,{}\n", fmt_float(study.fitted_slope())));
    content
}

fn draw_samples(
    design: &Design,
    method: SampleMethod,
    reps: u64,
    seed: u64,
) -> Result<String, CliError> {
    let mut content = String::new();
    for sample in draw_replicated(design, method, reps, seed)? {
        let line = one_based(&sample.units)
            .iter()
            .map(|u| u.to_string())
            .collect::<Vec<_>>()
            .join(",");
        content.push_str(&line);
        content.push('\n');
    }
    Ok(content)
}

fn write_output(out: Option<&PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}
