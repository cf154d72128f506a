use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use waveguide::config::{OutputFormat, Overrides, RunConfig};
use waveguide::pipeline::{self, Problem, SweepParameter};
use waveguide::Result;

#[derive(Parser)]
#[command(
    name = "waveguide",
    version,
    about = "Bound states of twisted, sheared waveguides"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file of `section.key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// Twist amplitude.
    #[arg(long, global = true)]
    c: Option<f64>,
    /// Half-length of the truncated guide.
    #[arg(long = "L", global = true)]
    half_length: Option<f64>,
    /// Interior nodes of the axial grid.
    #[arg(long, global = true)]
    nx: Option<usize>,
    #[arg(long, global = true)]
    modes: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_format)]
    format: Option<OutputFormat>,
}

fn parse_format(s: &str) -> std::result::Result<OutputFormat, String> {
    s.parse()
}

#[derive(Subcommand)]
enum Command {
    /// Ground transverse energy and moments.
    CrossSection,
    /// Samples of the effective potential and its integral.
    Potential {
        #[arg(long, default_value_t = 1001)]
        samples: usize,
    },
    /// Energies of the cutoff trial functions for n = 1..=N.
    Witness {
        #[arg(long = "max-n", default_value_t = 32)]
        max_n: u32,
    },
    /// Eigenvalues below the threshold for one parameter set.
    Spectrum,
    /// Spectrum over a list of twist amplitudes or shears.
    Sweep {
        #[arg(long, value_parser = ["c", "beta"], default_value = "c")]
        param: String,
        /// Comma-separated parameter values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Boundary surface as a Wavefront OBJ file.
    Mesh {
        #[arg(long, default_value_t = 200)]
        axial: usize,
        #[arg(long = "per-side", default_value_t = 16)]
        per_side: usize,
    },
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::parse(&std::fs::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides {
        beta: common.beta,
        c: common.c,
        half_length: common.half_length,
        nx: common.nx,
        modes: common.modes,
        output_path: common.out.clone(),
        format: common.format,
    })?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli.common)?;
    let problem = Problem::from_config(&cfg)?;
    let kv = cfg.format == OutputFormat::Kv;
    let mut sink: Box<dyn Write> = match &cfg.output_path {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match cli.command {
        Command::CrossSection => {
            let r = pipeline::cross_section_report(&problem)?;
            sink.write_all(if kv { r.to_kv() } else { r.to_csv() }.as_bytes())?;
        }
        Command::Potential { samples } => {
            let t = pipeline::potential_table(&problem, samples)?;
            sink.write_all(if kv { t.to_kv() } else { t.to_csv() }.as_bytes())?;
        }
        Command::Witness { max_n } => {
            let w = pipeline::witness_table(&problem, max_n)?;
            sink.write_all(if kv { w.to_kv() } else { w.to_csv() }.as_bytes())?;
        }
        Command::Spectrum => {
            let result = pipeline::spectrum(&problem)?;
            if kv {
                writeln!(sink, "beta = {}", problem.beta)?;
                writeln!(sink, "c = {}", problem.amplitude())?;
                sink.write_all(result.to_kv().as_bytes())?;
            } else {
                let point = pipeline::SweepPoint {
                    beta: problem.beta,
                    c: problem.amplitude(),
                    result,
                };
                pipeline::write_spectrum_csv(&mut sink, SweepParameter::C, &[point])?;
            }
        }
        Command::Sweep { param, values } => {
            let parameter = if param == "beta" {
                SweepParameter::Beta
            } else {
                SweepParameter::C
            };
            let points = pipeline::sweep(&problem, parameter, &values)?;
            pipeline::write_spectrum_csv(&mut sink, parameter, &points)?;
        }
        Command::Mesh { axial, per_side } => {
            pipeline::mesh(&problem, axial, per_side)?.write_obj(&mut sink)?;
        }
    }
    sink.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
