use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use xlwifi::commands::{self, RunOptions};
use xlwifi::scenario::SEED_ENV;
use xlwifi::{presets, CliResult};

#[derive(Parser)]
#[command(name = "xlwifi", version, about = "Cross-layer 802.11n/ac/ah simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Scenario file, or the name of a bundled preset.
    scenario: String,
    /// Run directory for all outputs.
    #[arg(short, long, default_value = "xlwifi-out")]
    out: String,
    /// PER table CSV (`mcs_id,snr_db,per`); the built-in table otherwise.
    #[arg(long)]
    lut: Option<String>,
    /// Expected SHA-256 of the PER table file.
    #[arg(long)]
    lut_sha256: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario.
    Run {
        #[command(flatten)]
        common: Common,
        /// Also dump the downlink channel coefficients to this CSV.
        #[arg(long)]
        channel_trace: Option<String>,
        /// Sampling step of the channel trace.
        #[arg(long, default_value_t = 10)]
        trace_step_ms: u64,
    },
    /// Run a scenario once per value of one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Parameter path, e.g. `multichannel.sir_db`.
        #[arg(long)]
        param: String,
        /// `start:stop:step` (inclusive) or a comma list.
        #[arg(long)]
        values: String,
        /// Points run in parallel.
        #[arg(short, long, default_value_t = 4)]
        jobs: usize,
    },
    /// Closed-form tables.
    Analytics {
        #[command(subcommand)]
        which: Analytics,
        /// Write the CSV here instead of stdout.
        #[arg(short, long, global = true)]
        output: Option<String>,
    },
    /// MCS catalog as CSV.
    DumpMcs {
        #[arg(short, long)]
        output: Option<String>,
    },
    /// Leakage norms of the precoders for a seeded random channel.
    PrecodeCheck {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        tx: usize,
        #[arg(long, default_value_t = 2)]
        users: usize,
        #[arg(long, default_value_t = 1)]
        rx: usize,
    },
    /// Write the built-in PER table as CSV and print its checksum.
    ExportLut {
        #[arg(short, long)]
        output: Option<String>,
    },
    /// List bundled scenario presets.
    Presets,
}

#[derive(Subcommand)]
enum Analytics {
    /// Data+ACK exchange durations, throughputs and efficiencies.
    AppendixC,
    /// 802.11ah station capacity per MCS and ACK scheme.
    AhCapacity {
        #[arg(long, default_value_t = 64)]
        msdu: usize,
        /// Refresh cycle in seconds.
        #[arg(long, default_value_t = 5.0)]
        cycle: f64,
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        bandwidth: Vec<u16>,
    },
    /// Saturation throughput versus sounding interval.
    Saturation {
        #[arg(long, default_value = "ch6")]
        preset: String,
    },
}

fn options(c: Common) -> RunOptions {
    RunOptions {
        scenario: c.scenario,
        out_dir: c.out,
        lut: c.lut,
        lut_sha256: c.lut_sha256,
        seed_env: std::env::var(SEED_ENV).ok(),
        channel_trace: None,
        trace_step_ms: 10,
    }
}

fn emit(text: String, path: Option<&str>) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.cmd {
        Cmd::Run {
            common,
            channel_trace,
            trace_step_ms,
        } => {
            let mut o = options(common);
            o.channel_trace = channel_trace;
            o.trace_step_ms = trace_step_ms;
            emit(commands::cmd_run(&o)?, None)
        }
        Cmd::Sweep {
            common,
            param,
            values,
            jobs,
        } => emit(commands::cmd_sweep(&options(common), &param, &values, jobs)?, None),
        Cmd::Analytics { which, output } => {
            let text = match which {
                Analytics::AppendixC => commands::analytics_appendix_c()?,
                Analytics::AhCapacity { msdu, cycle, bandwidth } => {
                    commands::analytics_ah_capacity(msdu, cycle, &bandwidth)?
                }
                Analytics::Saturation { preset } => commands::analytics_saturation(&preset)?,
            };
            emit(text, output.as_deref())
        }
        Cmd::DumpMcs { output } => emit(commands::dump_mcs()?, output.as_deref()),
        Cmd::PrecodeCheck { seed, tx, users, rx } => emit(commands::precode_check(seed, tx, users, rx)?, None),
        Cmd::ExportLut { output } => emit(commands::export_lut(output.as_deref())?, None),
        Cmd::Presets => emit(presets::names().map(|n| format!("{n}\n")).collect(), None),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("xlwifi: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
