use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use ptv::continuous::{
    build_modulator, build_multiplexer, cosine_harmonics, nyquist_check, sine_harmonics,
    variation_band, ContinuousSpec, DiscretizeOptions, SeparableTerm, TauPart,
};
use ptv::equiv::{block_signal, serialize_signal};
use ptv::inverse::{InverseOptions, DEFAULT_COND_LIMIT};
use ptv::io::{read_circuit, read_kernel, read_signal, read_spec, spectrum_to_csv, write_kernel, write_signal, write_text};
use ptv::spectrum::{
    default_grid_size, linear_band_estimate, output_band, peak_frequency, signal_band, signal_spectrum,
    variation_band_estimate, DEFAULT_ENERGY_TOL,
};
use ptv::{BlockedMimo, PtvError, Signal};

#[derive(Parser)]
#[command(name = "ptv", version, about = "Periodically time-variant linear systems toolkit")]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for kernel application.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Command tolerance: tail energy for build, energy fraction for
    /// bandwidth, identity residual for invert.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Discretize a continuous spec into a kernel.
    Build(BuildArgs),
    /// Run a signal through a kernel.
    Apply {
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Combine kernels.
    Compose {
        #[arg(value_enum)]
        mode: ComposeMode,
        /// Kernels in signal-flow order, or one circuit JSON.
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Bandwidth report of a kernel as JSON.
    Bandwidth {
        #[arg(long)]
        kernel: PathBuf,
        /// Input bandwidth in Hz.
        #[arg(long, conflicts_with = "signal")]
        input_band: Option<f64>,
        /// Measure the input bandwidth from this signal.
        #[arg(long)]
        signal: Option<PathBuf>,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(short, long, default_value = "-")]
        output: PathBuf,
    },
    /// Hybrid spectrum of a kernel or DFT of a signal, as CSV.
    Spectrum {
        #[arg(long, required_unless_present = "signal", conflicts_with = "signal")]
        kernel: Option<PathBuf>,
        #[arg(long)]
        signal: Option<PathBuf>,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(short, long, default_value = "-")]
        output: PathBuf,
    },
    /// Invert a SISO or square kernel.
    Invert {
        #[arg(long)]
        kernel: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Report JSON destination.
        #[arg(long, default_value = "-")]
        report: PathBuf,
        #[arg(long)]
        fft_size: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_COND_LIMIT)]
        cond_limit: f64,
    },
    /// SISO kernel to its blocked MIMO (or to an N x N kernel with --square).
    ToMimo {
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long)]
        square: Option<usize>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Blocked MIMO or square kernel back to SISO.
    ToSiso {
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long, value_enum, default_value_t = SisoMode::Mimo)]
        mode: SisoMode,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Polyphase-split a SISO signal into `size` channels.
    Block {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        size: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Interleave channels into one stream.
    Serialize {
        #[arg(long)]
        input: PathBuf,
        /// Samples dropped from the start, e.g. block padding.
        #[arg(long, default_value_t = 0)]
        trim_front: usize,
        #[arg(long, default_value_t = 0)]
        trim_back: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Generate a test signal.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    spec: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Preset period in seconds.
    #[arg(long, default_value_t = 1.0)]
    period_s: f64,
    /// Mux inputs.
    #[arg(long, default_value_t = 2)]
    inputs: usize,
    #[arg(long)]
    sample_period: f64,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    lag_min: i64,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    lag_max: i64,
    /// Input bandwidth in Hz for the Nyquist report.
    #[arg(long, default_value_t = 0.0)]
    input_band: f64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Mux,
    Sin,
    Cos,
    Identity,
}

#[derive(Clone, Copy, ValueEnum)]
enum ComposeMode {
    Series,
    Parallel,
    Circuit,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum SisoMode {
    Mimo,
    Square,
}

#[derive(Subcommand)]
enum GenKind {
    Tone {
        #[arg(long)]
        len: usize,
        /// Cycles per sample.
        #[arg(long)]
        f0: f64,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        phase: f64,
        #[arg(long, default_value_t = 1.0)]
        sample_period: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
    Noise {
        #[arg(long)]
        len: usize,
        #[arg(long, default_value_t = 1)]
        channels: usize,
        /// Brick-wall band in cycles per sample.
        #[arg(long)]
        band: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        sample_period: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
    Chirp {
        #[arg(long)]
        len: usize,
        #[arg(long)]
        f0: f64,
        #[arg(long)]
        f1: f64,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        #[arg(long, default_value_t = 1.0)]
        sample_period: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
}

const USAGE_EXIT: u8 = 64;

fn exit_code(e: &PtvError) -> u8 {
    match e {
        PtvError::IncommensurateRate { .. } => 2,
        PtvError::WindowTooSmall { .. } => 3,
        PtvError::ChannelMismatch { .. } => 4,
        PtvError::RateMismatch { .. } => 5,
        PtvError::DimensionMismatch(_) => 6,
        PtvError::InvalidArgument(_) => 7,
        PtvError::InvalidKernel(_) => 8,
        PtvError::InvalidSignal(_) => 9,
        PtvError::NotSiso { .. } => 10,
        PtvError::NotSquare { .. } => 11,
        PtvError::IndivisiblePeriod { .. } => 12,
        PtvError::NotInvertible { .. } => 13,
        PtvError::GridTooSmall(_) => 14,
        PtvError::CyclicGraph => 15,
        PtvError::IncommensuratePeriods(_) => 16,
        PtvError::EmptySignal => 17,
        PtvError::Format(_) => 18,
        PtvError::Io(_) => 19,
        PtvError::Json(_) => 20,
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error: Usage: {}", one_line(first));
            return ExitCode::from(USAGE_EXIT);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {}", e.name(), one_line(&e.to_string()));
            ExitCode::from(exit_code(&e))
        }
    }
}

fn print_json(path: &Path, value: &serde_json::Value) -> ptv::Result<()> {
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn preset_spec(preset: Preset, period_s: f64, inputs: usize) -> ptv::Result<ContinuousSpec> {
    match preset {
        Preset::Mux => build_multiplexer(inputs, period_s),
        Preset::Sin => build_modulator(sine_harmonics(), period_s),
        Preset::Cos => build_modulator(cosine_harmonics(), period_s),
        Preset::Identity => ContinuousSpec::new(
            1,
            1,
            period_s,
            vec![vec![vec![SeparableTerm::constant(TauPart::Delta { delay_s: 0.0 })]]],
        ),
    }
}

fn run(cli: Cli) -> ptv::Result<()> {
    let threads = cli.threads.max(1);
    match cli.command {
        Command::Build(a) => {
            let spec = match (&a.spec, a.preset) {
                (Some(p), _) => read_spec(p)?,
                (None, Some(preset)) => preset_spec(preset, a.period_s, a.inputs)?,
                (None, None) => unreachable!("clap requires one of --spec/--preset"),
            };
            let opts = DiscretizeOptions {
                tail_tolerance: cli.tolerance.unwrap_or(DiscretizeOptions::default().tail_tolerance),
            };
            let k = ptv::discretize(&spec, a.sample_period, (a.lag_min, a.lag_max), opts)?;
            write_kernel(&a.output, &k)?;
            let vb = variation_band(&spec);
            let report = nyquist_check(&spec, a.input_band, a.sample_period)?;
            print_json(
                Path::new("-"),
                &json!({
                    "period": k.period(),
                    "variation_band": vb.value,
                    "truncated": vb.truncated,
                    "nyquist": report,
                }),
            )
        }
        Command::Apply { kernel, input, output } => {
            let k = read_kernel(&kernel)?;
            let x = read_signal(&input)?;
            write_signal(&output, &k.apply_threaded(&x, threads)?)
        }
        Command::Compose { mode, paths, output } => {
            let k = match mode {
                ComposeMode::Circuit => {
                    if paths.len() != 1 {
                        return Err(PtvError::InvalidArgument("circuit mode takes one JSON file".into()));
                    }
                    let (c, opts) = read_circuit(&paths[0])?;
                    ptv::reduce_circuit(&c, &opts)?
                }
                ComposeMode::Series | ComposeMode::Parallel => {
                    let kernels = paths.iter().map(|p| read_kernel(p)).collect::<ptv::Result<Vec<_>>>()?;
                    let f = if matches!(mode, ComposeMode::Series) { ptv::series } else { ptv::parallel };
                    let mut it = kernels.into_iter();
                    let first = it.next().expect("clap requires one path");
                    it.try_fold(first, |acc, k| f(&acc, &k))?
                }
            };
            write_kernel(&output, &k)
        }
        Command::Bandwidth {
            kernel,
            input_band,
            signal,
            grid,
            output,
        } => {
            let k = read_kernel(&kernel)?;
            let tol = cli.tolerance.unwrap_or(DEFAULT_ENERGY_TOL);
            let ts = k.sample_period_s().unwrap_or(1.0);
            let spec = ptv::hybrid_transform(&k, grid.unwrap_or_else(|| default_grid_size(&k)))?;
            let a = variation_band_estimate(&spec, tol)?;
            let b_lin = linear_band_estimate(&spec, tol)? / ts;
            let b_x = match (input_band, signal) {
                (Some(b), _) => b,
                (None, Some(p)) => signal_band(&read_signal(&p)?, tol)?,
                (None, None) => 0.0,
            };
            let b_y = output_band(b_x, a as f64, k.period() as f64 * ts)?;
            print_json(
                &output,
                &json!({
                    "A": a,
                    "B_linear": b_lin,
                    "B_x": b_x,
                    "B_y": b_y,
                    "nyquist_ok": b_y <= 0.5 / ts,
                    "min_rate": 2.0 * b_y,
                }),
            )
        }
        Command::Spectrum {
            kernel,
            signal,
            grid,
            output,
        } => {
            if let Some(p) = kernel {
                let k = read_kernel(&p)?;
                let spec = ptv::hybrid_transform(&k, grid.unwrap_or_else(|| default_grid_size(&k)))?;
                write_text(&output, &spectrum_to_csv(&spec))
            } else {
                let x = read_signal(signal.as_ref().expect("clap requires one source"))?;
                let mut csv = String::from("ch,f,re,im\n");
                for (c, f, v) in signal_spectrum(&x)? {
                    csv.push_str(&format!("{c},{f},{},{}\n", v.re, v.im));
                }
                write_text(&output, &csv)?;
                if output.as_os_str() != "-" {
                    print_json(Path::new("-"), &json!({ "peak_hz": peak_frequency(&x)? }))?;
                }
                Ok(())
            }
        }
        Command::Invert {
            kernel,
            output,
            report,
            fft_size,
            cond_limit,
        } => {
            let k = read_kernel(&kernel)?;
            let mut opts = InverseOptions {
                fft_size,
                cond_limit,
                ..InverseOptions::default()
            };
            if let Some(t) = cli.tolerance {
                opts.residual_tol = t;
            }
            let inv = ptv::invert(&k, &opts)?;
            write_kernel(&output, &inv.inverse)?;
            print_json(&report, &serde_json::to_value(inv.report)?)
        }
        Command::ToMimo { kernel, square, output } => {
            let k = read_kernel(&kernel)?;
            let out = match square {
                Some(n) => ptv::siso_to_square(&k, n)?,
                None => {
                    let ts = k.sample_period_s().map(|t| t * k.period() as f64);
                    ptv::siso_to_mimo(&k)?.to_kernel().with_sample_period(ts)
                }
            };
            write_kernel(&output, &out)
        }
        Command::ToSiso { kernel, mode, output } => {
            let k = read_kernel(&kernel)?;
            let out = match mode {
                SisoMode::Square => ptv::square_to_siso(&k)?,
                SisoMode::Mimo => {
                    let ts = k.sample_period_s().map(|t| t / k.n_in() as f64);
                    ptv::mimo_to_siso(&BlockedMimo::from_kernel(&k)?)?.with_sample_period(ts)
                }
            };
            write_kernel(&output, &out)
        }
        Command::Block { input, size, output } => {
            let b = block_signal(&read_signal(&input)?, size)?;
            write_signal(&output, &b.signal)?;
            print_json(
                Path::new("-"),
                &json!({ "pad_front": b.pad_front, "pad_back": b.pad_back }),
            )
        }
        Command::Serialize {
            input,
            trim_front,
            trim_back,
            output,
        } => {
            let s = serialize_signal(&read_signal(&input)?)?;
            if trim_front + trim_back > s.len() {
                return Err(PtvError::InvalidArgument(format!(
                    "cannot trim {} samples from a {}-sample stream",
                    trim_front + trim_back,
                    s.len()
                )));
            }
            let end = s.len() - trim_back;
            let trimmed = Signal::new(
                s.sample_period_s(),
                vec![s.channel(0)[trim_front..end].to_vec()],
                s.origin_index() + trim_front as i64,
            )?;
            write_signal(&output, &trimmed)
        }
        Command::Gen { kind } => match kind {
            GenKind::Tone {
                len,
                f0,
                amplitude,
                phase,
                sample_period,
                output,
            } => write_signal(&output, &ptv::gen::tone(len, f0, amplitude, phase, sample_period)?),
            GenKind::Noise {
                len,
                channels,
                band,
                sample_period,
                output,
            } => write_signal(&output, &ptv::gen::noise(len, channels, band, cli.seed, sample_period)?),
            GenKind::Chirp {
                len,
                f0,
                f1,
                amplitude,
                sample_period,
                output,
            } => write_signal(&output, &ptv::gen::chirp(len, f0, f1, amplitude, sample_period)?),
        },
    }
}
