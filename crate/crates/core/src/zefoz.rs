//! Search for field points where a transition's slope |∂ν/∂B| is minimal,
//! and the inhomogeneous linewidth model used to rank them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::golden::golden_section;
use crate::sweep::{Manifold, TrackedSpectrum, LAC_TOLERANCE_GAUSS};
use crate::transitions::{IntensityModel, PointAnalysis};

pub const DEFAULT_BATH_FIELD_GAUSS: f64 = 23.3;
pub const DEFAULT_FLOOR_MHZ: f64 = 0.5;
/// Average linewidth of electron-type transitions.
pub const REFERENCE_LINEWIDTH_MHZ: f64 = 65.19;
pub const MAX_SCAN_STEP_GAUSS: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinewidthModel {
    pub bath_field_gauss: f64,
    pub floor_mhz: f64,
    pub reference_mhz: f64,
}

impl Default for LinewidthModel {
    fn default() -> Self {
        Self {
            bath_field_gauss: DEFAULT_BATH_FIELD_GAUSS,
            floor_mhz: DEFAULT_FLOOR_MHZ,
            reference_mhz: REFERENCE_LINEWIDTH_MHZ,
        }
    }
}

impl LinewidthModel {
    pub fn new(bath_field_gauss: f64, floor_mhz: f64, reference_mhz: f64) -> Result<Self> {
        let m = Self {
            bath_field_gauss,
            floor_mhz,
            reference_mhz,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("bath field", self.bath_field_gauss),
            ("linewidth floor", self.floor_mhz),
            ("reference linewidth", self.reference_mhz),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Linewidth {
    pub fwhm_mhz: f64,
    pub epsilon: f64,
}

/// `Δν = sqrt((|γ|ΔB)² + (½|C|ΔB²)² + w₀²)` with γ in kHz/G and C in kHz/G².
pub fn predict_linewidth(
    gamma_eff_khz_per_g: f64,
    curvature_khz_per_g2: f64,
    model: &LinewidthModel,
) -> Linewidth {
    let db = model.bath_field_gauss;
    let first = gamma_eff_khz_per_g.abs() * 1e-3 * db;
    let second = 0.5 * curvature_khz_per_g2.abs() * 1e-3 * db * db;
    let fwhm = (first * first + second * second + model.floor_mhz * model.floor_mhz).sqrt();
    Linewidth {
        fwhm_mhz: fwhm,
        epsilon: model.reference_mhz / fwhm,
    }
}

/// Narrowing factor `reference / Δν` for each `(ν, Δν)` pair.
pub fn epsilon_table(observed: &[(f64, f64)], model: &LinewidthModel) -> Result<Vec<f64>> {
    observed
        .iter()
        .map(|&(nu, width)| {
            if width.is_finite() && width > 0.0 {
                Ok(model.reference_mhz / width)
            } else {
                Err(Error::InvalidArgument(format!(
                    "linewidth at {nu} MHz must be positive, got {width}"
                )))
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DptRecord {
    pub level_a: usize,
    pub level_b: usize,
    pub b_opt_gauss: f64,
    pub nu_mhz: f64,
    pub gamma_eff_khz_per_g: f64,
    pub curvature_khz_per_g2: Option<f64>,
    pub kappa: f64,
    pub linewidth_mhz: f64,
    pub epsilon: f64,
    pub manifold_a: Manifold,
    pub manifold_b: Manifold,
}

impl DptRecord {
    pub fn is_intra(&self, m: Manifold) -> bool {
        self.manifold_a == m && self.manifold_b == m
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DptOptions {
    pub kappa_min: f64,
    pub b_range: (f64, f64),
    /// Drop minima whose κ at the optimum is below `kappa_min`.
    pub observable_only: bool,
    pub linewidth: LinewidthModel,
}

/// Slope of `E_b − E_a` at an arbitrary field, labels following the sweep.
fn slope_at(tracked: &TrackedSpectrum, a: usize, b: usize, field: f64) -> Result<f64> {
    let p = tracked.resolve_at(field)?;
    let v = tracked.system().field_derivative();
    Ok((v.expectation(&p.vector(b)) - v.expectation(&p.vector(a))) * 1e3)
}

/// Local minima of `|γ_eff(B)|` for every pair that reaches `κ ≥ kappa_min`
/// somewhere in the range, sorted by `|γ_eff|` then labels.
pub fn scan_dpt(
    tracked: &TrackedSpectrum,
    intensity: &IntensityModel,
    opts: &DptOptions,
) -> Result<Vec<DptRecord>> {
    opts.linewidth.validate()?;
    let (lo, hi) = opts.b_range;
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return Err(Error::InvalidArgument(format!(
            "empty field range {lo}..{hi} G"
        )));
    }
    let slack = 1e-9;
    if lo < tracked.b_min() - slack || hi > tracked.b_max() + slack {
        return Err(Error::InvalidArgument(format!(
            "range {lo}..{hi} G is not covered by the sweep {}..{} G",
            tracked.b_min(),
            tracked.b_max()
        )));
    }
    if tracked.grid().step > MAX_SCAN_STEP_GAUSS {
        return Err(Error::InvalidArgument(format!(
            "sweep step {} G exceeds {MAX_SCAN_STEP_GAUSS} G",
            tracked.grid().step
        )));
    }

    let system = tracked.system();
    let points: Vec<_> = tracked
        .points()
        .iter()
        .filter(|p| p.b_gauss >= lo - slack && p.b_gauss <= hi + slack)
        .collect();
    let analyses: Vec<PointAnalysis> = points
        .iter()
        .map(|p| PointAnalysis::from_tracked(system, intensity, p))
        .collect();
    let n = tracked.n_levels();

    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let passes = analyses
                .iter()
                .any(|pa| pa.intensity(a, b).kappa >= opts.kappa_min);
            if !passes {
                continue;
            }
            let g: Vec<f64> = analyses
                .iter()
                .map(|pa| pa.slope(a, b).map_or(f64::NAN, f64::abs))
                .collect();
            for k in 1..g.len().saturating_sub(1) {
                if !(g[k] < g[k - 1] && g[k] <= g[k + 1]) {
                    continue;
                }
                let min = golden_section(
                    |x| slope_at(tracked, a, b, x).map(f64::abs),
                    points[k - 1].b_gauss,
                    points[k + 1].b_gauss,
                    LAC_TOLERANCE_GAUSS,
                )?;
                let b_opt = if min.value <= g[k] {
                    min.x
                } else {
                    points[k].b_gauss
                };
                let p = tracked.resolve_at(b_opt)?;
                let pa = PointAnalysis::from_tracked(system, intensity, &p);
                let Some(gamma_signed) = pa.slope(a, b) else {
                    continue;
                };
                let sign = if p.energies[b] >= p.energies[a] {
                    1.0
                } else {
                    -1.0
                };
                let gamma = sign * gamma_signed;
                let curvature = pa.curvature(a, b).map(|c| sign * c);
                let kappa = pa.intensity(a, b).kappa;
                if opts.observable_only && kappa < opts.kappa_min {
                    continue;
                }
                let lw = predict_linewidth(gamma, curvature.unwrap_or(0.0), &opts.linewidth);
                out.push(DptRecord {
                    level_a: a,
                    level_b: b,
                    b_opt_gauss: b_opt,
                    nu_mhz: (p.energies[b] - p.energies[a]).abs(),
                    gamma_eff_khz_per_g: gamma,
                    curvature_khz_per_g2: curvature,
                    kappa,
                    linewidth_mhz: lw.fwhm_mhz,
                    epsilon: lw.epsilon,
                    manifold_a: p.manifolds[a],
                    manifold_b: p.manifolds[b],
                });
            }
        }
    }
    out.sort_by(|x, y| {
        x.gamma_eff_khz_per_g
            .abs()
            .total_cmp(&y.gamma_eff_khz_per_g.abs())
            .then((x.level_a, x.level_b).cmp(&(y.level_a, y.level_b)))
            .then(x.b_opt_gauss.total_cmp(&y.b_opt_gauss))
    });
    Ok(out)
}
