use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lorasg_cli::commands::{self, NodeRange, SweepKind};
use lorasg_cli::config::CodingRate;
use lorasg_cli::{
    default_config, exit, parse_scenario, threads_from_env, CliError, ResolvedConfig,
};
use lorasg_core::{RadioConfig, SimMode};

#[derive(Parser)]
#[command(
    name = "lorasg",
    version,
    about = "Reception probabilities of a single-gateway LoRa network"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Packet airtime and vulnerability window for one spreading factor.
    Airtime {
        #[arg(long)]
        sf: u8,
        #[command(flatten)]
        radio: RadioFlags,
    },
    /// Closed-form reception probability per class.
    Analyze {
        #[command(flatten)]
        config: ConfigArg,
        /// Density sweep as A:B:STEP node counts.
        #[arg(long)]
        nodes: Option<String>,
    },
    /// Class thresholds giving every class the same reception probability.
    Equalize {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        target_pi: f64,
        /// Add the published-table comparison in both interference domains.
        #[arg(long = "compare-paper")]
        compare_published: bool,
        /// Density at which the weakest-classes check is judged.
        #[arg(long, default_value_t = 2000.0)]
        stress_nodes: f64,
    },
    /// Monte Carlo estimate next to the closed form.
    Simulate {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        replications: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = ModeArg::Spatial)]
        mode: ModeArg,
        /// Confine interferers to a disk of this radius (m).
        #[arg(long)]
        disk_truncation: Option<f64>,
    },
    /// Density sweeps behind the reference figures.
    Sweep {
        #[arg(long)]
        kind: String,
        #[command(flatten)]
        config: ConfigArg,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "100:2000:100")]
        nodes: String,
    },
}

#[derive(Args)]
struct ConfigArg {
    /// Scenario file (TOML or JSON); the shipped rural default when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> Result<ResolvedConfig, CliError> {
        match &self.config {
            Some(path) => Ok(parse_scenario(path)?),
            None => Ok(default_config()),
        }
    }
}

#[derive(Args)]
struct RadioFlags {
    #[arg(long)]
    bw_hz: Option<f64>,
    #[arg(long)]
    n_preamble_extra: Option<u32>,
    #[arg(long)]
    payload_bytes: Option<u32>,
    #[arg(long)]
    header: Option<u8>,
    #[arg(long)]
    low_rate_opt: Option<u8>,
    /// Coding rate as 4/5..4/8 or 1..4.
    #[arg(long)]
    cr: Option<String>,
}

impl RadioFlags {
    fn resolve(&self) -> Result<RadioConfig, CliError> {
        let d = RadioConfig::default();
        let radio = RadioConfig {
            bandwidth_hz: self.bw_hz.unwrap_or(d.bandwidth_hz),
            n_preamble_extra: self.n_preamble_extra.unwrap_or(d.n_preamble_extra),
            payload_bytes: self.payload_bytes.unwrap_or(d.payload_bytes),
            header_flag: self.header.unwrap_or(d.header_flag),
            low_rate_opt: self.low_rate_opt.unwrap_or(d.low_rate_opt),
            cr_code: match &self.cr {
                Some(text) => CodingRate::Text(text.clone())
                    .code()
                    .map_err(|e| CliError::Usage(format!("--cr: {e}")))?,
                None => d.cr_code,
            },
        };
        radio.validate()?;
        Ok(radio)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Spatial,
    Power,
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let (text, out, disagreement) = match cli.command {
        Command::Airtime { sf, radio } => {
            let r = commands::airtime(sf, &radio.resolve()?)?;
            (r.text, None, r.disagreement)
        }
        Command::Analyze { config, nodes } => {
            let cfg = config.load()?;
            let range = nodes.as_deref().map(NodeRange::parse).transpose()?;
            let r = commands::analyze(&cfg, range.as_ref())?;
            (r.text, None, r.disagreement)
        }
        Command::Equalize {
            config,
            target_pi,
            compare_published,
            stress_nodes,
        } => {
            let r =
                commands::equalize(&config.load()?, target_pi, compare_published, stress_nodes)?;
            (r.text, None, r.disagreement)
        }
        Command::Simulate {
            config,
            replications,
            seed,
            mode,
            disk_truncation,
        } => {
            let mut cfg = config.load()?;
            if let Some(n) = replications {
                cfg.sim.replications = n;
            }
            if let Some(s) = seed {
                cfg.sim.seed = s;
            }
            if disk_truncation.is_some() {
                cfg.sim.disk_truncation_m = disk_truncation;
            }
            let mode = match mode {
                ModeArg::Spatial => SimMode::Spatial,
                ModeArg::Power => SimMode::PowerDomain,
            };
            let r = commands::simulate(&cfg, mode)?;
            (r.text, None, r.disagreement)
        }
        Command::Sweep {
            kind,
            config,
            out,
            nodes,
        } => {
            let kind = SweepKind::parse(&kind)?;
            let cfg = config.load()?;
            let r = commands::sweep(&cfg, kind, &NodeRange::parse(&nodes)?)?;
            (r.text, out, r.disagreement)
        }
    };
    match out {
        Some(path) => std::fs::write(&path, text).map_err(|source| CliError::Output {
            path: path.display().to_string(),
            source,
        })?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Output {
                    path: "stdout".into(),
                    source,
                })?;
        }
    }
    Ok(if disagreement {
        exit::DISAGREEMENT
    } else {
        exit::SUCCESS
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let status = threads_from_env()
        .and_then(|threads| {
            if let Some(n) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .map_err(|e| CliError::Usage(format!("LORASG_THREADS: {e}")))?;
            }
            run(cli)
        })
        .unwrap_or_else(|e| {
            eprintln!("lorasg: {e}");
            e.exit_code()
        });
    if status == exit::DISAGREEMENT {
        eprintln!(
            "lorasg: Monte Carlo disagrees with the closed form (|z| > {})",
            commands::Z_FAIL
        );
    }
    ExitCode::from(status as u8)
}
