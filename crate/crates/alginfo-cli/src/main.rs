//! Batch experiment runner: every library subsystem as a subcommand with
//! reproducible configs and tabular reports.
//!
//! Exit codes: 0 success, 1 input/config error, 2 assertion-suite
//! failure (a checked inequality or frozen baseline regressed).

mod report;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(
    name = "alginfo",
    version,
    about = "Resource-bounded algorithmic information experiments over fixed prefix-free machines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand; a sidecar config replays a run.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct Common {
    /// Machine document path or builtin name (m0, m1, m2, m2cat).
    #[arg(long, env = "ALGINFO_MACHINE", default_value = "m2cat")]
    pub machine: String,
    /// Program-length bound L.
    #[arg(long, default_value_t = 18)]
    pub max_len: u32,
    /// Step budget per run.
    #[arg(long, default_value_t = 1_000_000)]
    pub budget: u64,
    /// Cell depth for measures on sequences.
    #[arg(long, default_value_t = 8)]
    pub depth: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0 = library default); reductions are
    /// deterministic regardless.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Output directory for the CSV report and its JSON sidecar.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Replay a previous run from its sidecar; other flags are ignored.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl Common {
    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}

macro_rules! command_params {
    ($name:ident { $( $(#[$meta:meta])* $field:ident : $ty:ty ),* $(,)? }) => {
        #[derive(Debug, Clone, Args, Serialize, Deserialize)]
        pub struct $name {
            #[command(flatten)]
            #[serde(flatten)]
            pub common: Common,
            $( $(#[$meta])* pub $field: $ty, )*
        }
    };
}

command_params!(EnumerateCmd {
    /// Auxiliary tape contents as a 0/1 string.
    #[arg(long, default_value = "")]
    aux: String,
});

command_params!(ComplexityCmd {
    /// Query set: "all-up-to:N" or a comma-separated list of strings.
    #[arg(long, default_value = "all-up-to:6")]
    strings: String,
    #[arg(long, default_value = "")]
    aux: String,
});

command_params!(DiscreteInfoCmd {
    /// Path to a semi-measure JSON document.
    #[arg(long)]
    p: PathBuf,
    /// Second measure; defaults to p.
    #[arg(long)]
    q: Option<PathBuf>,
});

command_params!(ChannelGapCmd {
    /// identity | uniform-spread | bit-flip | random-suite
    #[arg(long, default_value = "random-suite")]
    fixture: String,
});

command_params!(CantorInfoCmd {
    /// point | cylinder | uniform | catalog:NAME[,NAME]
    #[arg(long, default_value = "cylinder")]
    pair: String,
});

command_params!(TransitionGapCmd {
    /// identity | constant | prepend | random-suite
    #[arg(long, default_value = "random-suite")]
    fixture: String,
});

command_params!(SpaceInfoCmd {
    /// Catalog measure name; omitted = the integer-mean Gaussian suite.
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    q: Option<String>,
});

command_params!(ConvolveCmd {
    /// catalog:NAME | gaussian:MEAN,VAR | uniform:A,B (rationals as n/d).
    #[arg(long, default_value = "gaussian:0,1")]
    p: String,
    #[arg(long, default_value = "gaussian:0,1")]
    kernel: String,
    #[arg(long, default_value_t = 0.01)]
    step: f64,
    #[arg(long, default_value_t = 8.0)]
    half_width: f64,
    /// Force the grid path even when a closed form exists.
    #[arg(long, default_value_t = false)]
    grid: bool,
});

command_params!(TransferCmd {
    /// halves | quarters | eighths | unit | dyadic:LEVEL
    #[arg(long, default_value = "eighths")]
    family: String,
    #[arg(long, default_value = "uniform01")]
    p: String,
    #[arg(long)]
    q: Option<String>,
});

command_params!(CoverCmd {
    /// Cover and measure catalog names; omitted = the Gaussian
    /// self-cover suite.
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    r: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    q: Option<String>,
});

command_params!(MixtureCmd {
    /// discrete | space | both
    #[arg(long, default_value = "both")]
    kind: String,
    #[arg(long, default_value_t = 20)]
    count: usize,
});

command_params!(AverageCmd {
    #[arg(long, default_value_t = 1000)]
    samples: usize,
});

command_params!(QuantumCmd {
    /// basisNq | trivialNq | a POVM document path.
    #[arg(long, default_value = "basis2q")]
    povm: String,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
});

command_params!(FreezeCmd {});

#[derive(Subcommand)]
enum Command {
    /// List the halting programs of a machine up to the length bound.
    MachineEnumerate(EnumerateCmd),
    /// Tabulate prefix complexity and algorithmic probability.
    Complexity(ComplexityCmd),
    /// Information between two discrete semi-measures.
    DiscreteInfo(DiscreteInfoCmd),
    /// Conservation gaps under channels, with frozen-baseline checks.
    ChannelGap(ChannelGapCmd),
    /// Depth-indexed information between measures on sequences.
    CantorInfo(CantorInfoCmd),
    /// Conservation gaps under random transitions.
    TransitionGap(TransitionGapCmd),
    /// Depth-indexed information between measures on the line.
    SpaceInfo(SpaceInfoCmd),
    /// Convolve a measure with a kernel on a grid.
    Convolve(ConvolveCmd),
    /// Transfer lower bounds through disjoint open families.
    Transfer(TransferCmd),
    /// Computable-cover upper bounds next to observed values.
    Cover(CoverCmd),
    /// Mixture bilinearity identity checks.
    Mixture(MixtureCmd),
    /// Monte-Carlo averaged-transition expectation vs quadrature.
    Average(AverageCmd),
    /// POVM measurement statistics over random pure states.
    Quantum(QuantumCmd),
    /// Recompute every frozen baseline (the certification run).
    Freeze(FreezeCmd),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run::dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("assertion suite failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
