mod args;
mod output;

use std::fmt;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use nvspin_core::fieldcal::{field_uncertainty, field_uncertainty_from_linewidth};
use nvspin_core::model::group_sizes;
use nvspin_core::sweep::{sweep_system, TrajectoryRow};
use nvspin_core::transitions::{enumerate_transitions, filter_records};
use nvspin_core::*;
use serde::Serialize;

use args::{Cli, Command, Common, FieldArgs, Format, LinewidthArgs, Selection};
use output::{emit, read_peaks, read_transitions, Payload};

/// Exit status 2 for bad input, 3 for numerical failure.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn core(context: &str, e: Error) -> Self {
        let code = if e.is_validation() { 2 } else { 3 };
        let message = if context.is_empty() {
            e.to_string()
        } else {
            format!("{context}: {e}")
        };
        Self { code, message }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::core("", e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

const DEGENERACY_TOL_MHZ: f64 = 1e-6;
const DEFAULT_FMIN_MHZ: f64 = 0.0;
const DEFAULT_FMAX_MHZ: f64 = 150.0;

enum Fields {
    Single(f64),
    Range(FieldGrid),
}

impl FieldArgs {
    fn resolve(&self) -> CliResult<Fields> {
        let range = [self.from, self.to, self.step];
        let given = range.iter().filter(|x| x.is_some()).count();
        match (self.field, given) {
            (Some(_), n) if n > 0 => Err(Failure::invalid(
                "--field conflicts with --from/--to/--step",
            )),
            (Some(b), _) if !b.is_finite() => {
                Err(Failure::invalid(format!("--field must be finite, got {b}")))
            }
            (Some(b), _) => Ok(Fields::Single(b)),
            (None, 3) => FieldGrid::new(self.from.unwrap(), self.to.unwrap(), self.step.unwrap())
                .map(Fields::Range)
                .map_err(|e| Failure::core("--from/--to/--step", e)),
            (None, 0) => Err(Failure::invalid(
                "one of --field or --from/--to/--step is required",
            )),
            (None, _) => Err(Failure::invalid(
                "--from, --to and --step must be given together",
            )),
        }
    }

    fn single(&self, cmd: &str) -> CliResult<f64> {
        match self.resolve()? {
            Fields::Single(b) => Ok(b),
            Fields::Range(_) => Err(Failure::invalid(format!(
                "{cmd} takes --field, not a range"
            ))),
        }
    }

    fn range(&self, cmd: &str) -> CliResult<FieldGrid> {
        match self.resolve()? {
            Fields::Range(g) => Ok(g),
            Fields::Single(_) => Err(Failure::invalid(format!(
                "{cmd} takes --from/--to/--step, not --field"
            ))),
        }
    }

    fn is_empty(&self) -> bool {
        self.field.is_none() && self.from.is_none() && self.to.is_none() && self.step.is_none()
    }
}

impl Selection {
    fn validate(&self) -> CliResult<()> {
        if !(self.kappa_min.is_finite() && self.kappa_min > 0.0) {
            return Err(Failure::invalid(format!(
                "--kappa-min must be positive, got {}",
                self.kappa_min
            )));
        }
        for (flag, v) in [("--fmin", self.fmin), ("--fmax", self.fmax)] {
            if let Some(v) = v.filter(|v| !v.is_finite()) {
                return Err(Failure::invalid(format!("{flag} must be finite, got {v}")));
            }
        }
        if let (Some(lo), Some(hi)) = (self.fmin, self.fmax) {
            if lo >= hi {
                return Err(Failure::invalid(format!(
                    "--fmin ({lo}) must be below --fmax ({hi})"
                )));
            }
        }
        Ok(())
    }

    fn convention(&self) -> TmeConvention {
        if self.tme_squared {
            TmeConvention::Squared
        } else {
            TmeConvention::Magnitude
        }
    }

    fn keep(&self, records: &[TransitionRecord]) -> Vec<TransitionRecord> {
        filter_records(records, self.kappa_min, self.fmin, self.fmax)
    }
}

impl LinewidthArgs {
    fn model(&self) -> CliResult<LinewidthModel> {
        let d = LinewidthModel::default();
        LinewidthModel::new(
            self.bath_field.unwrap_or(d.bath_field_gauss),
            self.floor.unwrap_or(d.floor_mhz),
            self.reference.unwrap_or(d.reference_mhz),
        )
        .map_err(|e| Failure::core("--bath-field/--floor/--reference", e))
    }
}

fn load_system(common: &Common) -> CliResult<SpinSystem> {
    let mut spec = match &common.system {
        None => parse_system(nvspin_core::model::NV3C_JSON)?,
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::invalid(format!("--system {}: {e}", path.display())))?;
            parse_system(&text)
                .map_err(|e| Failure::core(&format!("--system {}", path.display()), e))?
        }
    };
    spec.include_nuclear_zeeman |= common.nuclear_zeeman;
    Ok(SpinSystem::new(&spec)?)
}

#[derive(Serialize)]
struct EigenRow {
    b_gauss: f64,
    level: usize,
    energy_mhz: f64,
    sz_expect: f64,
    sz2_expect: f64,
    kz_expect: f64,
    manifold: Manifold,
}

#[derive(Serialize)]
struct Degeneracy {
    tolerance_mhz: f64,
    m_s_zero: Vec<usize>,
    m_s_plus_minus: Vec<usize>,
}

#[derive(Serialize)]
struct EigenReport {
    b_gauss: f64,
    degeneracy: Degeneracy,
    levels: Vec<EigenRow>,
}

fn cmd_eigen(common: &Common, field: &FieldArgs) -> CliResult<Payload> {
    let b = field.single("eigen")?;
    let sys = load_system(common)?;
    let lv = sys.solve(b)?;
    let levels: Vec<EigenRow> = (0..lv.len())
        .map(|k| EigenRow {
            b_gauss: b,
            level: k,
            energy_mhz: lv.energies()[k],
            sz_expect: lv.sz[k],
            sz2_expect: lv.sz2[k],
            kz_expect: lv.kz[k],
            manifold: lv.manifolds[k],
        })
        .collect();
    // ⟨S_z²⟩ separates m_S = 0 from the ±1 states even where those are Kramers-mixed
    let split = |one: bool| {
        group_sizes(
            (0..lv.len())
                .filter(|&k| (lv.sz2[k] >= 0.5) == one)
                .map(|k| lv.energies()[k]),
            DEGENERACY_TOL_MHZ,
        )
    };
    let report = EigenReport {
        b_gauss: b,
        degeneracy: Degeneracy {
            tolerance_mhz: DEGENERACY_TOL_MHZ,
            m_s_zero: split(false),
            m_s_plus_minus: split(true),
        },
        levels,
    };
    match common.format {
        Format::Csv => Payload::csv(&report.levels),
        Format::Json => Payload::json(&report),
    }
}

fn cmd_sweep(common: &Common, field: &FieldArgs) -> CliResult<Payload> {
    let grid = field.range("sweep")?;
    let tracked = sweep_system(load_system(common)?, &grid)?;
    let rows: Vec<TrajectoryRow> = tracked.rows();
    Payload::rows(common.format, &rows)
}

fn cmd_transitions(common: &Common, field: &FieldArgs, select: &Selection) -> CliResult<Payload> {
    select.validate()?;
    let fields = match field.resolve()? {
        Fields::Single(b) => vec![b],
        Fields::Range(g) => g.points(),
    };
    let sys = load_system(common)?;
    let im = IntensityModel::new(&sys, select.convention())?;
    let mut out = Vec::new();
    for b in fields {
        out.extend(select.keep(&enumerate_transitions(&sys, &im, b)?));
    }
    Payload::rows(common.format, &out)
}

fn cmd_zefoz(
    common: &Common,
    field: &FieldArgs,
    select: &Selection,
    lw: &LinewidthArgs,
) -> CliResult<Payload> {
    select.validate()?;
    let grid = field.range("zefoz")?;
    let linewidth = lw.model()?;
    let tracked = sweep_system(load_system(common)?, &grid)?;
    let im = IntensityModel::new(tracked.system(), select.convention())?;
    let opts = DptOptions {
        kappa_min: select.kappa_min,
        b_range: (tracked.b_min(), tracked.b_max()),
        observable_only: select.observable_only,
        linewidth,
    };
    let in_band =
        |nu: f64| select.fmin.is_none_or(|f| nu >= f) && select.fmax.is_none_or(|f| nu <= f);
    let records: Vec<DptRecord> = scan_dpt(&tracked, &im, &opts)?
        .into_iter()
        .filter(|r| in_band(r.nu_mhz))
        .collect();
    Payload::rows(common.format, &records)
}

#[derive(Serialize)]
struct AssignRow {
    nu_mhz: f64,
    fwhm_mhz: f64,
    amplitude: f64,
    level_i: Option<usize>,
    level_f: Option<usize>,
    predicted_nu_mhz: Option<f64>,
    distance_mhz: Option<f64>,
    kappa: Option<f64>,
}

impl From<PeakAssignment> for AssignRow {
    fn from(a: PeakAssignment) -> Self {
        Self {
            nu_mhz: a.peak.nu_mhz,
            fwhm_mhz: a.peak.fwhm_mhz,
            amplitude: a.peak.amplitude,
            level_i: a.level_i,
            level_f: a.level_f,
            predicted_nu_mhz: a.predicted_nu_mhz,
            distance_mhz: a.distance_mhz,
            kappa: a.kappa,
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_spectrum(
    common: &Common,
    field: &FieldArgs,
    select: &Selection,
    lw: &LinewidthArgs,
    fstep: f64,
    transitions: Option<&Path>,
    peaks: Option<&Path>,
    window: f64,
    assign_out: Option<&Path>,
) -> CliResult<Payload> {
    select.validate()?;
    let linewidth = lw.model()?;
    let axis = FrequencyAxis::new(
        select.fmin.unwrap_or(DEFAULT_FMIN_MHZ),
        select.fmax.unwrap_or(DEFAULT_FMAX_MHZ),
        fstep,
    )
    .map_err(|e| Failure::core("--fmin/--fmax/--fstep", e))?;
    let records = match transitions {
        Some(path) => {
            if !field.is_empty() {
                return Err(Failure::invalid("--transitions replaces --field"));
            }
            read_transitions(path)?
        }
        None => {
            let b = field.single("spectrum")?;
            let sys = load_system(common)?;
            let im = IntensityModel::new(&sys, select.convention())?;
            enumerate_transitions(&sys, &im, b)?
        }
    };
    let kept = select.keep(&records);
    let trace = synthesize_spectrum(&kept, &axis, &linewidth, select.kappa_min)?;
    if let (Some(peaks), Some(out)) = (peaks, assign_out) {
        let measured = read_peaks(peaks)?;
        let rows: Vec<AssignRow> = assign_peaks(&measured, &kept, window)
            .map_err(|e| Failure::core("--window", e))?
            .into_iter()
            .map(AssignRow::from)
            .collect();
        emit(
            Some(out),
            &Payload::rows(common.format, &rows)?,
            "--assign-out",
        )?;
    }
    match common.format {
        Format::Csv => Payload::csv(&trace.rows()),
        Format::Json => Payload::json(&trace),
    }
}

fn cmd_lac(common: &Common, field: &FieldArgs) -> CliResult<Payload> {
    let grid = field.range("lac")?;
    let tracked = sweep_system(load_system(common)?, &grid)?;
    Payload::rows(common.format, &find_lacs(&tracked)?)
}

#[derive(Serialize)]
struct FieldcalRow {
    n_spins: f64,
    t_meas_s: f64,
    t2_star_s: f64,
    gamma_mhz_per_g: f64,
    delta_b_gauss: f64,
}

fn cmd_fieldcal(
    format: Format,
    n_spins: f64,
    t_meas: Option<f64>,
    t2_star: Option<f64>,
    linewidth: Option<f64>,
    gamma: f64,
) -> CliResult<Payload> {
    let (t_meas_s, t2_star_s, delta_b_gauss) = match (linewidth, t_meas, t2_star) {
        (Some(lw), _, _) => {
            let db = field_uncertainty_from_linewidth(n_spins, lw, gamma)?;
            (1.0 / (lw * 1e6), 1.0 / (lw * 1e6), db)
        }
        (None, Some(t), Some(t2)) => (t, t2, field_uncertainty(n_spins, t, t2, gamma)?),
        _ => {
            return Err(Failure::invalid(
                "--t-meas and --t2-star are required unless --linewidth is given",
            ))
        }
    };
    let row = FieldcalRow {
        n_spins,
        t_meas_s,
        t2_star_s,
        gamma_mhz_per_g: gamma,
        delta_b_gauss,
    };
    match format {
        Format::Csv => Payload::csv(&[row]),
        Format::Json => Payload::json(&row),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let (payload, out) = match &cli.command {
        Command::Eigen { common, field } => (cmd_eigen(common, field)?, &common.out),
        Command::Sweep { common, field } => (cmd_sweep(common, field)?, &common.out),
        Command::Transitions {
            common,
            field,
            select,
        } => (cmd_transitions(common, field, select)?, &common.out),
        Command::Zefoz {
            common,
            field,
            select,
            linewidth,
        } => (cmd_zefoz(common, field, select, linewidth)?, &common.out),
        Command::Spectrum {
            common,
            field,
            select,
            linewidth,
            fstep,
            transitions,
            peaks,
            window,
            assign_out,
        } => (
            cmd_spectrum(
                common,
                field,
                select,
                linewidth,
                *fstep,
                transitions.as_deref(),
                peaks.as_deref(),
                *window,
                assign_out.as_deref(),
            )?,
            &common.out,
        ),
        Command::Lac { common, field } => (cmd_lac(common, field)?, &common.out),
        Command::Fieldcal {
            out,
            format,
            n_spins,
            t_meas,
            t2_star,
            linewidth,
            gamma,
        } => (
            cmd_fieldcal(*format, *n_spins, *t_meas, *t2_star, *linewidth, *gamma)?,
            out,
        ),
    };
    emit(out.as_deref(), &payload, "--out")
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("nvspin: error: {f}");
            ExitCode::from(f.code)
        }
    }
}
