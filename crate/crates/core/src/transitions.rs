//! Transition enumeration with the κ intensity factor, Hellmann–Feynman
//! slopes, perturbative curvatures and quadratic fits on tracked trajectories.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{embed, inner, spin_operators, ComplexMatrix, HalfInteger};
use crate::error::{Error, Result};
use crate::model::{LevelSet, SpinSystem, SpinSystemSpec};
use crate::sweep::{Manifold, TrackedPoint, TrackedSpectrum};

pub const DEFAULT_KAPPA_MIN: f64 = 1e-6;
/// Minimum gap to every other level for a first-order slope to be defined.
pub const SLOPE_DEGENERACY_MHZ: f64 = 1e-6;
pub const DEFAULT_FIT_WINDOW_GAUSS: f64 = 20.0;
pub const MIN_FIT_POINTS: usize = 5;

/// Optically pumped state: uniform mixture over the m_S = 0 sublevels.
#[derive(Clone, Debug)]
pub struct PumpedDensity {
    matrix: ComplexMatrix,
}

impl PumpedDensity {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn population(&self, state: &[Complex64]) -> f64 {
        self.matrix.expectation(state)
    }
}

pub fn pumped_density(spec: &SpinSystemSpec) -> Result<PumpedDensity> {
    if spec.electron.spin != HalfInteger::ONE {
        return Err(Error::InvalidArgument(format!(
            "pumped density needs an electron spin of 1, got {}",
            spec.electron.spin
        )));
    }
    let dims = spec.dims();
    let p0 = spin_operators(HalfInteger::ONE)
        .projector(0.0)
        .expect("m = 0 exists for s = 1");
    let nuclear_dim = (spec.dim() / 3) as f64;
    Ok(PumpedDensity {
        matrix: embed(&p0, 0, &dims)?.scale_real(1.0 / nuclear_dim),
    })
}

/// Whether the transition matrix element enters κ as |M| or |M|².
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TmeConvention {
    #[default]
    Magnitude,
    Squared,
}

/// `γ_e(S_x+S_y+S_z) + Σ_n γ_n(I_nx+I_ny+I_nz)` in MHz/G.
pub fn tme_operator(system: &SpinSystem) -> ComplexMatrix {
    let spec = system.spec();
    let mut op = ComplexMatrix::zeros(system.dim());
    let ge = Complex64::new(spec.electron.gamma_e_mhz_per_g, 0.0);
    for s in &system.s {
        op.add_scaled(s, ge);
    }
    for (nuc, ops) in spec.nuclei.iter().zip(&system.nuclear) {
        let gn = Complex64::new(nuc.gamma_n_mhz_per_g(), 0.0);
        for i in ops {
            op.add_scaled(i, gn);
        }
    }
    op
}

pub fn transition_matrix_element(system: &SpinSystem, f: &[Complex64], i: &[Complex64]) -> f64 {
    tme_operator(system).sandwich(f, i).norm()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Intensity {
    pub tme: f64,
    /// `⟨ρ⟩_f − ⟨ρ⟩_i`.
    pub d_pop: f64,
    /// `⟨S_z²⟩_f − ⟨S_z²⟩_i`.
    pub d_sz2: f64,
    pub kappa: f64,
}

fn kappa(tme: f64, d_pop: f64, d_sz2: f64, convention: TmeConvention) -> f64 {
    let t = match convention {
        TmeConvention::Magnitude => tme,
        TmeConvention::Squared => tme * tme,
    };
    t * d_pop.abs() * d_sz2.abs()
}

/// Operators needed to score transitions of one system.
#[derive(Clone, Debug)]
pub struct IntensityModel {
    pub tme_operator: ComplexMatrix,
    pub rho: PumpedDensity,
    pub convention: TmeConvention,
}

impl IntensityModel {
    pub fn new(system: &SpinSystem, convention: TmeConvention) -> Result<Self> {
        Ok(Self {
            tme_operator: tme_operator(system),
            rho: pumped_density(system.spec())?,
            convention,
        })
    }
}

pub fn transition_intensity(
    system: &SpinSystem,
    model: &IntensityModel,
    f: &[Complex64],
    i: &[Complex64],
) -> Intensity {
    let tme = model.tme_operator.sandwich(f, i).norm();
    let d_pop = model.rho.population(f) - model.rho.population(i);
    let d_sz2 = system.sz2.expectation(f) - system.sz2.expectation(i);
    Intensity {
        tme,
        d_pop,
        d_sz2,
        kappa: kappa(tme, d_pop, d_sz2, model.convention),
    }
}

/// First-order field slope of `E_f − E_i` in kHz/G from `⟨∂H/∂B⟩`.
pub fn gamma_eff_hellmann_feynman(
    levels: &LevelSet,
    system: &SpinSystem,
    i: usize,
    f: usize,
) -> Result<f64> {
    let energies = levels.energies();
    for k in [i, f] {
        let gap = nearest_gap(energies, k);
        if gap <= SLOPE_DEGENERACY_MHZ {
            return Err(Error::Degenerate { i, f, gap });
        }
    }
    let v = system.field_derivative();
    let slope = v.expectation(&levels.eigen.vector(f)) - v.expectation(&levels.eigen.vector(i));
    Ok(slope * 1e3)
}

fn nearest_gap(energies: &[f64], k: usize) -> f64 {
    energies
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != k)
        .map(|(_, e)| (e - energies[k]).abs())
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub b_gauss: f64,
    pub level_i: usize,
    pub level_f: usize,
    pub nu_mhz: f64,
    pub tme: f64,
    pub d_pop: f64,
    pub d_sz2: f64,
    pub kappa: f64,
    /// Empty when either level is degenerate.
    pub gamma_eff_khz_per_g: Option<f64>,
    pub curvature_khz_per_g2: Option<f64>,
    pub manifold_i: Manifold,
    pub manifold_f: Manifold,
}

/// Per-level quantities at one field, from which any pair is scored cheaply.
#[derive(Clone, Debug)]
pub struct PointAnalysis {
    pub b_gauss: f64,
    pub energies: Vec<f64>,
    pub manifolds: Vec<Manifold>,
    /// `|⟨m|O|n⟩|` for the TME operator.
    tme: Vec<f64>,
    pop: Vec<f64>,
    sz2: Vec<f64>,
    /// `⟨m|∂H/∂B|m⟩`, MHz/G; `None` for degenerate levels.
    slope: Vec<Option<f64>>,
    /// Second-order `∂²E_m/∂B²`, MHz/G².
    curvature: Vec<Option<f64>>,
    convention: TmeConvention,
}

impl PointAnalysis {
    pub fn new(
        system: &SpinSystem,
        model: &IntensityModel,
        b_gauss: f64,
        energies: &[f64],
        vectors: &ComplexMatrix,
        manifolds: &[Manifold],
    ) -> Self {
        let n = energies.len();
        let cols: Vec<Vec<Complex64>> = (0..n).map(|k| vectors.column(k)).collect();
        let o_cols: Vec<Vec<Complex64>> =
            cols.iter().map(|c| model.tme_operator.mul_vec(c)).collect();
        let v = system.field_derivative();
        let v_cols: Vec<Vec<Complex64>> = cols.iter().map(|c| v.mul_vec(c)).collect();

        let mut tme = vec![0.0; n * n];
        let mut vmn = vec![Complex64::new(0.0, 0.0); n * n];
        for m in 0..n {
            for k in 0..n {
                tme[m * n + k] = inner(&cols[m], &o_cols[k]).norm();
                vmn[m * n + k] = inner(&cols[m], &v_cols[k]);
            }
        }

        let mut slope = Vec::with_capacity(n);
        let mut curvature = Vec::with_capacity(n);
        for m in 0..n {
            let isolated = nearest_gap(energies, m) > SLOPE_DEGENERACY_MHZ;
            slope.push(isolated.then(|| vmn[m * n + m].re));
            let mut c = 0.0;
            let mut defined = true;
            for k in (0..n).filter(|&k| k != m) {
                let w = vmn[m * n + k].norm_sqr();
                if w < 1e-20 {
                    continue;
                }
                let gap = energies[m] - energies[k];
                if gap.abs() <= SLOPE_DEGENERACY_MHZ {
                    defined = false;
                    break;
                }
                c += 2.0 * w / gap;
            }
            curvature.push(defined.then_some(c));
        }

        Self {
            b_gauss,
            energies: energies.to_vec(),
            manifolds: manifolds.to_vec(),
            tme,
            pop: cols.iter().map(|c| model.rho.population(c)).collect(),
            sz2: cols.iter().map(|c| system.sz2.expectation(c)).collect(),
            slope,
            curvature,
            convention: model.convention,
        }
    }

    pub fn from_levels(system: &SpinSystem, model: &IntensityModel, levels: &LevelSet) -> Self {
        Self::new(
            system,
            model,
            levels.b_gauss,
            levels.energies(),
            &levels.eigen.vectors,
            &levels.manifolds,
        )
    }

    /// Levels indexed by trajectory label.
    pub fn from_tracked(system: &SpinSystem, model: &IntensityModel, point: &TrackedPoint) -> Self {
        Self::new(
            system,
            model,
            point.b_gauss,
            &point.energies,
            &point.vectors,
            &point.manifolds,
        )
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// `(lower, upper)` by energy, ties broken by index.
    pub fn canonical(&self, a: usize, b: usize) -> (usize, usize) {
        let (ea, eb) = (self.energies[a], self.energies[b]);
        if ea < eb || (ea == eb && a < b) {
            (a, b)
        } else {
            (b, a)
        }
    }

    pub fn intensity(&self, a: usize, b: usize) -> Intensity {
        let (i, f) = self.canonical(a, b);
        let n = self.len();
        let tme = self.tme[f * n + i];
        let d_pop = self.pop[f] - self.pop[i];
        let d_sz2 = self.sz2[f] - self.sz2[i];
        Intensity {
            tme,
            d_pop,
            d_sz2,
            kappa: kappa(tme, d_pop, d_sz2, self.convention),
        }
    }

    /// `∂E_k/∂B` in MHz/G.
    pub fn level_slope(&self, k: usize) -> Option<f64> {
        self.slope[k]
    }

    /// `∂²E_k/∂B²` in MHz/G².
    pub fn level_curvature(&self, k: usize) -> Option<f64> {
        self.curvature[k]
    }

    /// Slope of `E_b − E_a` in kHz/G.
    pub fn slope(&self, a: usize, b: usize) -> Option<f64> {
        Some((self.slope[b]? - self.slope[a]?) * 1e3)
    }

    /// Curvature of `E_b − E_a` in kHz/G².
    pub fn curvature(&self, a: usize, b: usize) -> Option<f64> {
        Some((self.curvature[b]? - self.curvature[a]?) * 1e3)
    }

    pub fn record(&self, a: usize, b: usize) -> TransitionRecord {
        let (i, f) = self.canonical(a, b);
        let it = self.intensity(i, f);
        TransitionRecord {
            b_gauss: self.b_gauss,
            level_i: i,
            level_f: f,
            nu_mhz: self.energies[f] - self.energies[i],
            tme: it.tme,
            d_pop: it.d_pop,
            d_sz2: it.d_sz2,
            kappa: it.kappa,
            gamma_eff_khz_per_g: self.slope(i, f),
            curvature_khz_per_g2: self.curvature(i, f),
            manifold_i: self.manifolds[i],
            manifold_f: self.manifolds[f],
        }
    }

    /// Every unordered pair, ordered by `(level_i, level_f)`.
    pub fn records(&self) -> Vec<TransitionRecord> {
        let n = self.len();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for a in 0..n {
            for b in a + 1..n {
                out.push(self.record(a, b));
            }
        }
        out.sort_by_key(|r| (r.level_i, r.level_f));
        out
    }
}

/// All pairs at one field, levels labeled by ascending energy.
pub fn enumerate_transitions(
    system: &SpinSystem,
    model: &IntensityModel,
    b_gauss: f64,
) -> Result<Vec<TransitionRecord>> {
    let levels = system.solve(b_gauss)?;
    Ok(PointAnalysis::from_levels(system, model, &levels).records())
}

/// Keeps records with `κ > kappa_min` and frequency inside `[fmin, fmax]`.
pub fn filter_records(
    records: &[TransitionRecord],
    kappa_min: f64,
    fmin: Option<f64>,
    fmax: Option<f64>,
) -> Vec<TransitionRecord> {
    records
        .iter()
        .filter(|r| r.kappa > kappa_min)
        .filter(|r| fmin.is_none_or(|f| r.nu_mhz >= f))
        .filter(|r| fmax.is_none_or(|f| r.nu_mhz <= f))
        .cloned()
        .collect()
}

/// Fraction of records with `κ > kappa_min`.
pub fn kappa_fraction(records: &[TransitionRecord], kappa_min: f64) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    records.iter().filter(|r| r.kappa > kappa_min).count() as f64 / records.len() as f64
}

/// Least-squares `y ≈ c0 + c1 x + c2 x²`.
pub fn fit_quadratic(xs: &[f64], ys: &[f64]) -> Result<[f64; 3]> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} abscissae, {} ordinates",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 3 {
        return Err(Error::FitWindow(format!(
            "quadratic fit needs 3 points, got {}",
            xs.len()
        )));
    }
    // scaled abscissa keeps the normal equations well conditioned
    let scale = xs.iter().fold(0.0_f64, |m, x| m.max(x.abs())).max(1.0);
    let mut ata = [[0.0; 3]; 3];
    let mut aty = [0.0; 3];
    for (&x, &y) in xs.iter().zip(ys) {
        let t = x / scale;
        let row = [1.0, t, t * t];
        for r in 0..3 {
            aty[r] += row[r] * y;
            for c in 0..3 {
                ata[r][c] += row[r] * row[c];
            }
        }
    }
    let c = solve3(ata, aty).ok_or_else(|| {
        Error::FitWindow("singular quadratic fit (need 3 distinct abscissae)".into())
    })?;
    Ok([c[0], c[1] / scale, c[2] / (scale * scale)])
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..3 {
            let f = a[r][col] / a[col][col];
            let pivot = a[col];
            for (x, p) in a[r][col..].iter_mut().zip(&pivot[col..]) {
                *x -= f * p;
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let s: f64 = (r + 1..3).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub nu_mhz: f64,
    pub gamma_eff_khz_per_g: f64,
    pub curvature_khz_per_g2: f64,
}

/// Quadratic fit of `ν(B) = E_b − E_a` over `[b − window/2, b + window/2]`,
/// with the sign chosen so that the fitted frequency at `b` is non-negative.
pub fn transition_curve(
    tracked: &TrackedSpectrum,
    pair: (usize, usize),
    b: f64,
    window: f64,
) -> Result<CurvePoint> {
    let (a, c) = pair;
    let n = tracked.n_levels();
    if a >= n || c >= n {
        return Err(Error::InvalidArgument(format!(
            "level labels must be below {n}"
        )));
    }
    if window.is_nan() || window <= 0.0 {
        return Err(Error::FitWindow(format!(
            "window must be positive, got {window}"
        )));
    }
    let half = window / 2.0;
    let slack = 1e-9 * window.max(1.0);
    if b - half < tracked.b_min() - slack || b + half > tracked.b_max() + slack {
        return Err(Error::FitWindow(format!(
            "window {}..{} G leaves the tracked range {}..{} G",
            b - half,
            b + half,
            tracked.b_min(),
            tracked.b_max()
        )));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = tracked
        .points()
        .iter()
        .filter(|p| (p.b_gauss - b).abs() <= half + slack)
        .map(|p| (p.b_gauss - b, p.energies[c] - p.energies[a]))
        .unzip();
    if xs.len() < MIN_FIT_POINTS {
        return Err(Error::FitWindow(format!(
            "{} grid points in the window, need at least {MIN_FIT_POINTS}",
            xs.len()
        )));
    }
    let [c0, c1, c2] = fit_quadratic(&xs, &ys)?;
    let sign = if c0 < 0.0 { -1.0 } else { 1.0 };
    Ok(CurvePoint {
        nu_mhz: sign * c0,
        gamma_eff_khz_per_g: sign * c1 * 1e3,
        curvature_khz_per_g2: sign * 2.0 * c2 * 1e3,
    })
}
