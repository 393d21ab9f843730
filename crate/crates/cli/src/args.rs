use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "nvspin",
    version,
    about = "NV⁻–¹³C spin Hamiltonian: levels, anti-crossings, protected transitions and CW-ODMR spectra"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Eigenlevels at one field.
    #[command(allow_negative_numbers = true)]
    Eigen {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        field: FieldArgs,
    },
    /// Tracked level trajectories over a field range.
    #[command(allow_negative_numbers = true)]
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        field: FieldArgs,
    },
    /// Transition table with κ, slopes and curvatures.
    #[command(allow_negative_numbers = true)]
    Transitions {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        select: Selection,
    },
    /// Minima of |∂ν/∂B| over a field range.
    #[command(allow_negative_numbers = true)]
    Zefoz {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        select: Selection,
        #[command(flatten)]
        linewidth: LinewidthArgs,
    },
    /// Synthetic CW-ODMR trace, optionally with peak assignment.
    #[command(allow_negative_numbers = true)]
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        select: Selection,
        #[command(flatten)]
        linewidth: LinewidthArgs,
        /// Frequency step of the trace (MHz).
        #[arg(long, default_value_t = 0.01)]
        fstep: f64,
        /// Read lines from a `transitions` output (CSV, or JSON by extension) instead of solving.
        #[arg(long, value_name = "PATH")]
        transitions: Option<PathBuf>,
        /// Measured peaks (CSV: nu_mhz,fwhm_mhz,amplitude) to assign.
        #[arg(long, value_name = "PATH", requires = "assign_out")]
        peaks: Option<PathBuf>,
        /// Assignment search window (MHz).
        #[arg(long, default_value_t = nvspin_core::spectra::DEFAULT_ASSIGN_WINDOW_MHZ)]
        window: f64,
        /// Where to write the assignment table.
        #[arg(long, value_name = "PATH", requires = "peaks")]
        assign_out: Option<PathBuf>,
    },
    /// Level anti-crossings over a field range.
    #[command(allow_negative_numbers = true)]
    Lac {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        field: FieldArgs,
    },
    /// Shot-noise field uncertainty of an ensemble magnetometer.
    #[command(allow_negative_numbers = true)]
    Fieldcal {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Number of NV spins.
        #[arg(long)]
        n_spins: f64,
        /// Measurement time (s).
        #[arg(long)]
        t_meas: Option<f64>,
        /// T₂* (s).
        #[arg(long)]
        t2_star: Option<f64>,
        /// Ensemble linewidth (MHz), taking t_m = T₂* = 1/Δν.
        #[arg(long, conflicts_with_all = ["t_meas", "t2_star"])]
        linewidth: Option<f64>,
        /// Gyromagnetic ratio (MHz/G).
        #[arg(long, default_value_t = 2.8)]
        gamma: f64,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
pub struct Common {
    /// Spin-system JSON; the bundled NV⁻ + three first-shell ¹³C system if omitted.
    #[arg(long, value_name = "PATH")]
    pub system: Option<PathBuf>,
    /// Output file, written atomically; stdout if omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Include the nuclear Zeeman term.
    #[arg(long)]
    pub nuclear_zeeman: bool,
}

#[derive(Args, Debug)]
pub struct FieldArgs {
    /// Single field (G).
    #[arg(long)]
    pub field: Option<f64>,
    /// Range start (G).
    #[arg(long)]
    pub from: Option<f64>,
    /// Range end (G).
    #[arg(long)]
    pub to: Option<f64>,
    /// Range step (G).
    #[arg(long)]
    pub step: Option<f64>,
}

#[derive(Args, Debug)]
pub struct Selection {
    #[arg(long, default_value_t = nvspin_core::transitions::DEFAULT_KAPPA_MIN)]
    pub kappa_min: f64,
    /// Lower frequency bound (MHz).
    #[arg(long)]
    pub fmin: Option<f64>,
    /// Upper frequency bound (MHz).
    #[arg(long)]
    pub fmax: Option<f64>,
    /// Use |TME|² in κ instead of |TME|.
    #[arg(long)]
    pub tme_squared: bool,
    /// zefoz: drop minima whose κ is below --kappa-min.
    #[arg(long)]
    pub observable_only: bool,
}

#[derive(Args, Debug)]
pub struct LinewidthArgs {
    /// RMS bath field ΔB (G).
    #[arg(long)]
    pub bath_field: Option<f64>,
    /// Linewidth floor w₀ (MHz).
    #[arg(long)]
    pub floor: Option<f64>,
    /// Reference linewidth for ε (MHz).
    #[arg(long)]
    pub reference: Option<f64>,
}
