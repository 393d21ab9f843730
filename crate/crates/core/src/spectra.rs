//! Gaussian CW-ODMR spectrum synthesis and measured-peak assignment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transitions::TransitionRecord;
use crate::zefoz::{predict_linewidth, LinewidthModel};

pub const DEFAULT_ASSIGN_WINDOW_MHZ: f64 = 5.0;

/// `FWHM / σ` for a Gaussian.
pub fn fwhm_per_sigma() -> f64 {
    2.0 * (2.0 * std::f64::consts::LN_2).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyAxis {
    pub fmin_mhz: f64,
    pub fmax_mhz: f64,
    pub step_mhz: f64,
}

impl FrequencyAxis {
    pub fn new(fmin_mhz: f64, fmax_mhz: f64, step_mhz: f64) -> Result<Self> {
        if !(fmin_mhz.is_finite() && fmax_mhz.is_finite() && step_mhz.is_finite()) {
            return Err(Error::InvalidArgument(
                "frequency axis bounds must be finite".into(),
            ));
        }
        if step_mhz <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "frequency step must be positive, got {step_mhz}"
            )));
        }
        if fmin_mhz >= fmax_mhz {
            return Err(Error::InvalidArgument(format!(
                "fmin {fmin_mhz} MHz must be below fmax {fmax_mhz} MHz"
            )));
        }
        Ok(Self {
            fmin_mhz,
            fmax_mhz,
            step_mhz,
        })
    }

    pub fn len(&self) -> usize {
        ((self.fmax_mhz - self.fmin_mhz) / self.step_mhz + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| self.fmin_mhz + k as f64 * self.step_mhz)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectralLine {
    pub nu_mhz: f64,
    pub fwhm_mhz: f64,
    pub amplitude: f64,
}

impl SpectralLine {
    pub fn sigma(&self) -> f64 {
        self.fwhm_mhz / fwhm_per_sigma()
    }

    pub fn eval(&self, nu: f64) -> f64 {
        let s = self.sigma();
        let d = nu - self.nu_mhz;
        self.amplitude * (-(d * d) / (2.0 * s * s)).exp()
    }

    /// Line from a record, width from the linewidth model; a missing slope
    /// or curvature counts as zero.
    pub fn from_record(r: &TransitionRecord, model: &LinewidthModel) -> Self {
        let lw = predict_linewidth(
            r.gamma_eff_khz_per_g.unwrap_or(0.0),
            r.curvature_khz_per_g2.unwrap_or(0.0),
            model,
        );
        Self {
            nu_mhz: r.nu_mhz,
            fwhm_mhz: lw.fwhm_mhz,
            amplitude: r.kappa,
        }
    }
}

/// Sum of lines over the axis. Lines are accumulated in a fixed order so the
/// result does not depend on the order they are passed in.
pub fn synthesize_lines(lines: &[SpectralLine], axis: &FrequencyAxis) -> Vec<f64> {
    let mut sorted = lines.to_vec();
    sorted.sort_by(|a, b| {
        a.nu_mhz
            .total_cmp(&b.nu_mhz)
            .then(a.fwhm_mhz.total_cmp(&b.fwhm_mhz))
            .then(a.amplitude.total_cmp(&b.amplitude))
    });
    axis.points()
        .iter()
        .map(|&nu| sorted.iter().map(|l| l.eval(nu)).sum())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumTrace {
    pub freq_mhz: Vec<f64>,
    pub intensity: Vec<f64>,
    pub b_gauss: Option<f64>,
    pub kappa_min: f64,
    pub linewidth: LinewidthModel,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub freq_mhz: f64,
    pub intensity: f64,
}

impl SpectrumTrace {
    pub fn rows(&self) -> Vec<SpectrumRow> {
        self.freq_mhz
            .iter()
            .zip(&self.intensity)
            .map(|(&freq_mhz, &intensity)| SpectrumRow {
                freq_mhz,
                intensity,
            })
            .collect()
    }

    /// Interior samples strictly above both neighbours and above
    /// `rel_threshold` times the maximum.
    pub fn local_maxima(&self, rel_threshold: f64) -> Vec<usize> {
        let y = &self.intensity;
        let top = y.iter().cloned().fold(0.0_f64, f64::max);
        (1..y.len().saturating_sub(1))
            .filter(|&k| y[k] > y[k - 1] && y[k] >= y[k + 1] && y[k] > rel_threshold * top)
            .collect()
    }
}

/// Gaussian lines of amplitude κ for every record with `κ > kappa_min`.
pub fn synthesize_spectrum(
    records: &[TransitionRecord],
    axis: &FrequencyAxis,
    model: &LinewidthModel,
    kappa_min: f64,
) -> Result<SpectrumTrace> {
    model.validate()?;
    if let Some(r) = records.iter().find(|r| !r.nu_mhz.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "non-finite frequency for levels {}-{}",
            r.level_i, r.level_f
        )));
    }
    let lines: Vec<SpectralLine> = records
        .iter()
        .filter(|r| r.kappa > kappa_min)
        .map(|r| SpectralLine::from_record(r, model))
        .collect();
    Ok(SpectrumTrace {
        freq_mhz: axis.points(),
        intensity: synthesize_lines(&lines, axis),
        b_gauss: records.first().map(|r| r.b_gauss),
        kappa_min,
        linewidth: *model,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasuredPeak {
    pub nu_mhz: f64,
    pub fwhm_mhz: f64,
    pub amplitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeakAssignment {
    pub peak: MeasuredPeak,
    pub level_i: Option<usize>,
    pub level_f: Option<usize>,
    pub predicted_nu_mhz: Option<f64>,
    pub distance_mhz: Option<f64>,
    pub kappa: Option<f64>,
}

impl PeakAssignment {
    pub fn is_assigned(&self) -> bool {
        self.level_i.is_some()
    }
}

/// Greedy assignment, strongest measured peak first. Each peak takes the
/// unused prediction within `window` maximizing `κ / (1 + |Δν|)`. Results are
/// returned in the order of `measured`.
pub fn assign_peaks(
    measured: &[MeasuredPeak],
    predicted: &[TransitionRecord],
    window: f64,
) -> Result<Vec<PeakAssignment>> {
    if !(window.is_finite() && window > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "assignment window must be positive, got {window}"
        )));
    }
    // canonical candidate order makes the result independent of input order
    let mut cands: Vec<&TransitionRecord> = predicted.iter().collect();
    cands.sort_by(|a, b| {
        (a.level_i, a.level_f)
            .cmp(&(b.level_i, b.level_f))
            .then(a.b_gauss.total_cmp(&b.b_gauss))
            .then(a.nu_mhz.total_cmp(&b.nu_mhz))
            .then(a.kappa.total_cmp(&b.kappa))
    });
    let mut used = vec![false; cands.len()];

    let mut order: Vec<usize> = (0..measured.len()).collect();
    order.sort_by(|&x, &y| {
        measured[y]
            .amplitude
            .total_cmp(&measured[x].amplitude)
            .then(x.cmp(&y))
    });

    let mut out: Vec<Option<PeakAssignment>> = vec![None; measured.len()];
    for &pi in &order {
        let peak = measured[pi];
        let mut best: Option<(usize, f64, f64)> = None;
        for (ci, r) in cands.iter().enumerate() {
            if used[ci] {
                continue;
            }
            let d = (r.nu_mhz - peak.nu_mhz).abs();
            if d > window {
                continue;
            }
            let score = r.kappa / (1.0 + d);
            let better = match best {
                None => true,
                Some((_, bs, bd)) => score > bs || (score == bs && d < bd),
            };
            if better {
                best = Some((ci, score, d));
            }
        }
        out[pi] = Some(match best {
            Some((ci, _, d)) => {
                used[ci] = true;
                let r = cands[ci];
                PeakAssignment {
                    peak,
                    level_i: Some(r.level_i),
                    level_f: Some(r.level_f),
                    predicted_nu_mhz: Some(r.nu_mhz),
                    distance_mhz: Some(d),
                    kappa: Some(r.kappa),
                }
            }
            None => PeakAssignment {
                peak,
                level_i: None,
                level_f: None,
                predicted_nu_mhz: None,
                distance_mhz: None,
                kappa: None,
            },
        });
    }
    Ok(out
        .into_iter()
        .map(|a| a.expect("every peak visited"))
        .collect())
}
