//! `walsh`: kernels, transforms and index statistics on the dyadic group,
//! and the verification experiments with JSON / CSV / TSV reports.
//!
//! Exit codes: 0 pass, 1 a verification came out false, 2 usage or
//! configuration error.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use walsh_core::experiments::config::{parse_p, PValue};
use walsh_core::experiments::{self, ExperimentConfig, ExperimentKind, ExperimentReport, PhiSpec, SchemeKind};
use walsh_core::function::DyadicFunction;
use walsh_core::group::Resolution;
use walsh_core::io::{read_binary, read_csv, write_binary, write_csv};
use walsh_core::spectral::{dirichlet_fast, fwht_forward, fwht_inverse, index_stats};
use walsh_core::{Error, NumericMode, SpectralVector};

#[derive(Parser)]
#[command(name = "walsh", version, about = "Walsh-Fourier kernels, maximal operators and their experiments")]
struct Cli {
    /// Worker threads for parallel experiments (default: all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: Option<u16>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Tsv,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Binary characteristics of a positive integer.
    Stats {
        n: u64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Values of the Dirichlet kernel D_n at resolution m.
    Kernel {
        n: usize,
        #[arg(long)]
        resolution: u32,
        /// Print exact rationals instead of floats.
        #[arg(long)]
        exact: bool,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Walsh-Paley coefficients of a function (or its synthesis with --inverse).
    Transform {
        /// `index,value` CSV, or the binary format for a `.bin` path.
        input: PathBuf,
        #[arg(long)]
        inverse: bool,
        /// Keep exact rationals; fails on inexact input.
        #[arg(long)]
        exact: bool,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Exhaustive kernel checks.
    Verify {
        #[arg(value_enum)]
        which: Suite,
        #[arg(long, value_delimiter = ',', required = true)]
        resolution: Vec<u32>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Weak-type constants of the weighted maximal operator on random atoms.
    Thm1 {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value = "rho")]
        scheme: SchemeArg,
        /// Atoms on I_M live at resolution M + depth.
        #[arg(long, default_value_t = 3)]
        depth: u32,
        /// Restrict the operator to these partial-sum indices.
        #[arg(long, value_delimiter = ',')]
        subsequence: Option<Vec<u64>>,
    },
    /// Growth of the maximal operator under weaker weights.
    Thm2 {
        #[arg(long, value_enum, default_value = "growth")]
        part: Part,
        #[command(flatten)]
        run: RunArgs,
        /// Weight of the divergence part.
        #[arg(long, value_enum, default_value = "one")]
        phi: PhiArg,
    },
    /// Weak-type trends of subsequence and weight variants.
    Corollaries {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run the experiment described by a JSON configuration.
    Report {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    All,
    Kernels,
    Lemma1,
    Sandwich,
}

#[derive(Clone, Copy, ValueEnum)]
enum Part {
    Growth,
    Divergence,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Rho,
    Poly,
    Unit,
}

#[derive(Clone, Copy, ValueEnum)]
enum PhiArg {
    One,
    RhoWeight,
}

#[derive(Args)]
struct OutputArgs {
    /// Write `<stem>.json`, `<stem>.csv` and `<stem>.tsv` instead of printing.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct RunArgs {
    /// Exponents, e.g. `0.5,1/3`.
    #[arg(long, value_delimiter = ',', required = true, value_parser = p_value)]
    p: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    resolution: Vec<u32>,
    #[arg(long, default_value_t = 1)]
    trials: u32,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    out: OutputArgs,
}

fn p_value(s: &str) -> Result<String, String> {
    parse_p(s).map(|_| s.to_string()).map_err(|e| e.to_string())
}

/// Exit code plus message of a failed command.
struct Failure(u8, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(2, e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure(2, e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j as usize).build_global() {
            eprintln!("walsh: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("walsh: {msg}");
            ExitCode::from(code)
        }
    }
}

fn dispatch(cmd: Command) -> Result<u8, Failure> {
    match cmd {
        Command::Stats { n, format } => stats(n, format),
        Command::Kernel {
            n,
            resolution,
            exact,
            format,
            output,
        } => {
            let m = Resolution::new(resolution)?;
            let d = dirichlet_fast(n, m)?;
            emit_function(&if exact { d } else { d.to_float() }, format, output.as_deref())
        }
        Command::Transform {
            input,
            inverse,
            exact,
            format,
            output,
        } => transform(&input, inverse, exact, format, output.as_deref()),
        Command::Verify { which, resolution, out } => {
            let kind = match which {
                Suite::All => ExperimentKind::VerifyAll,
                Suite::Kernels => ExperimentKind::Kernels,
                Suite::Lemma1 => ExperimentKind::Lemma1,
                Suite::Sandwich => ExperimentKind::Sandwich,
            };
            let mut cfg = ExperimentConfig::new(kind);
            cfg.resolutions = resolution;
            experiment(cfg, &out)
        }
        Command::Thm1 {
            run,
            scheme,
            depth,
            subsequence,
        } => {
            let mut cfg = config(ExperimentKind::Thm1, &run);
            cfg.scheme = match scheme {
                SchemeArg::Rho => SchemeKind::Rho,
                SchemeArg::Poly => SchemeKind::Poly,
                SchemeArg::Unit => SchemeKind::Unit,
            };
            cfg.atom_depth = depth;
            cfg.subsequence = subsequence.map(walsh_core::operators::Subsequence::new).transpose()?;
            experiment(cfg, &run.out)
        }
        Command::Thm2 { part, run, phi } => {
            let cfg = match part {
                Part::Growth => config(ExperimentKind::Thm2Growth, &run),
                Part::Divergence => {
                    let mut cfg = config(ExperimentKind::Thm2Divergence, &run);
                    cfg.phi = Some(match phi {
                        PhiArg::One => PhiSpec::One,
                        PhiArg::RhoWeight => PhiSpec::RhoWeight,
                    });
                    cfg
                }
            };
            experiment(cfg, &run.out)
        }
        Command::Corollaries { run } => experiment(config(ExperimentKind::Corollaries, &run), &run.out),
        Command::Report { config, out } => {
            let text = fs::read_to_string(&config).map_err(|e| Failure(2, format!("{}: {e}", config.display())))?;
            let cfg = ExperimentConfig::from_json(&text)?;
            experiment(cfg, &out)
        }
    }
}

fn config(kind: ExperimentKind, run: &RunArgs) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(kind);
    cfg.p = run.p.iter().cloned().map(PValue::Text).collect();
    cfg.resolutions = run.resolution.clone();
    cfg.trials = run.trials;
    cfg.seed = run.seed;
    cfg
}

fn stats(n: u64, format: Format) -> Result<u8, Failure> {
    let st = index_stats(n)?;
    let text = match format {
        Format::Json => serde_json::to_string(&st).map_err(Error::from)?,
        Format::Csv => format!("n,low,high,rho,V\n{},{},{},{},{}", st.n, st.low, st.high, st.rho, st.variation),
        Format::Tsv => format!("n\tlow\thigh\trho\tV\n{}\t{}\t{}\t{}\t{}", st.n, st.low, st.high, st.rho, st.variation),
        Format::Table => format!(
            "n       {}\nbinary  {:b}\n[n]     {}\n|n|     {}\nrho     {}\nV       {}",
            st.n, st.n, st.low, st.high, st.rho, st.variation
        ),
    };
    println!("{text}");
    Ok(0)
}

fn transform(input: &Path, inverse: bool, exact: bool, format: Format, output: Option<&Path>) -> Result<u8, Failure> {
    let file = fs::File::open(input).map_err(|e| Failure(2, format!("{}: {e}", input.display())))?;
    let reader = io::BufReader::new(file);
    let f = if input.extension().is_some_and(|e| e == "bin") {
        read_binary(reader)?
    } else {
        read_csv(reader)?
    };
    let f = match (exact, f.mode()) {
        (true, NumericMode::Float) => {
            return Err(Failure(2, "--exact needs dyadic rational input".into()));
        }
        (true, NumericMode::Exact) => f,
        (false, _) => f.to_float(),
    };
    let out = if inverse {
        // the input holds coefficients in Paley order
        let spec = SpectralVector::new(f.resolution(), f.into_values())?;
        fwht_inverse(&spec)?
    } else {
        let spec = fwht_forward(&f)?;
        DyadicFunction::new(spec.resolution(), spec.coeffs().clone())?
    };
    emit_function(&out, format, output)
}

fn emit_function(f: &DyadicFunction, format: Format, output: Option<&Path>) -> Result<u8, Failure> {
    let mut buf = Vec::new();
    match format {
        Format::Csv | Format::Table => write_csv(f, &mut buf)?,
        Format::Tsv => {
            let mut csv = Vec::new();
            write_csv(f, &mut csv)?;
            buf = String::from_utf8_lossy(&csv).replace(',', "\t").into_bytes();
        }
        Format::Json => {
            let values: Vec<_> = (0..f.len()).map(|i| f.get(i)).collect();
            let doc = serde_json::json!({ "resolution": f.resolution().get(), "values": values });
            buf = serde_json::to_vec(&doc).map_err(Error::from)?;
            buf.push(b'\n');
        }
    }
    match output {
        Some(path) if path.extension().is_some_and(|e| e == "bin") => write_binary(f, fs::File::create(path)?)?,
        Some(path) => fs::write(path, &buf)?,
        None => io::stdout().write_all(&buf)?,
    }
    Ok(0)
}

fn experiment(mut cfg: ExperimentConfig, out: &OutputArgs) -> Result<u8, Failure> {
    if out.output.is_some() {
        cfg.output = out.output.clone();
    }
    cfg.validate()?;
    let report = experiments::run(&cfg)?;
    match &cfg.output {
        Some(path) => {
            for p in report.write_files(path)? {
                eprintln!("wrote {}", p.display());
            }
            eprint!("{}", report.to_table());
        }
        None => print!("{}", render(&report, out.format)?),
    }
    Ok(if report.verdict.pass { 0 } else { 1 })
}

fn render(report: &ExperimentReport, format: Format) -> Result<String, Failure> {
    Ok(match format {
        Format::Json => report.to_json()?,
        Format::Csv => report.to_csv()?,
        Format::Tsv => report.to_tsv(),
        Format::Table => report.to_table(),
    })
}
