//! Field sweeps with level identity carried through (avoided) crossings.
//!
//! Labels are fixed by ascending energy at the first grid point. Between
//! consecutive points the labels follow the eigenvectors: the permutation
//! maximizing the summed squared overlaps is found exactly, and any assigned
//! overlap magnitude below [`AMBIGUITY_THRESHOLD`] aborts the sweep.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::algebra::{inner, ComplexMatrix};
use crate::assignment::max_weight_assignment;
use crate::error::{Error, Result};
use crate::golden::golden_section;
use crate::model::{LevelSet, SpinSystem, SpinSystemSpec};

pub const AMBIGUITY_THRESHOLD: f64 = 0.5;
/// Sweeps requested from exactly zero field start here instead.
pub const ZERO_FIELD_OFFSET_GAUSS: f64 = 0.1;
pub const DEFAULT_STEP_GAUSS: f64 = 0.5;
pub const LAC_TOLERANCE_GAUSS: f64 = 0.01;
/// Distance from an anti-crossing at which the manifold character of the
/// two levels is read off for the set tag.
const LAC_TAG_OFFSET_GAUSS: f64 = 5.0;
/// Maximum distance from an integer for a clean manifold label.
const MANIFOLD_SLACK: f64 = 0.4;

/// Electron-spin manifold of a level, from `round(⟨S_z⟩)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Manifold {
    Spin(i32),
    Mixed,
}

impl Manifold {
    pub const ZERO: Manifold = Manifold::Spin(0);
    pub const PLUS: Manifold = Manifold::Spin(1);
    pub const MINUS: Manifold = Manifold::Spin(-1);
}

pub fn classify_manifold(sz_expect: f64) -> Manifold {
    let r = sz_expect.round();
    if (sz_expect - r).abs() <= MANIFOLD_SLACK {
        Manifold::Spin(r as i32)
    } else {
        Manifold::Mixed
    }
}

/// Manifold of a normalized state of `system`.
pub fn classify_state(system: &SpinSystem, state: &[num_complex::Complex64]) -> Manifold {
    classify_manifold(system.s[2].expectation(state))
}

impl fmt::Display for Manifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Manifold::Spin(m) => write!(f, "{m}"),
            Manifold::Mixed => f.write_str("mixed"),
        }
    }
}

impl FromStr for Manifold {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "mixed" => Ok(Manifold::Mixed),
            other => other
                .trim_start_matches('+')
                .parse::<i32>()
                .map(Manifold::Spin)
                .map_err(|_| format!("invalid manifold label `{s}`")),
        }
    }
}

impl Serialize for Manifold {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Manifold {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldGrid {
    pub b_start: f64,
    pub b_end: f64,
    pub step: f64,
}

impl FieldGrid {
    pub fn new(b_start: f64, b_end: f64, step: f64) -> Result<Self> {
        if !(b_start.is_finite() && b_end.is_finite() && step.is_finite()) {
            return Err(Error::InvalidGrid("bounds and step must be finite".into()));
        }
        if step <= 0.0 {
            return Err(Error::InvalidGrid(format!(
                "step must be positive, got {step}"
            )));
        }
        if b_start >= b_end {
            return Err(Error::InvalidGrid(format!(
                "start {b_start} G must be below end {b_end} G"
            )));
        }
        if step > b_end - b_start {
            return Err(Error::InvalidGrid(format!(
                "step {step} G exceeds the range {b_start}..{b_end} G"
            )));
        }
        Ok(Self {
            b_start,
            b_end,
            step,
        })
    }

    pub fn len(&self) -> usize {
        ((self.b_end - self.b_start) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid fields; a start at exactly 0 G is moved to 0.1 G to stay clear of
    /// the zero-field degeneracies.
    pub fn points(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                if k == 0 && self.b_start == 0.0 {
                    ZERO_FIELD_OFFSET_GAUSS
                } else {
                    self.b_start + k as f64 * self.step
                }
            })
            .collect()
    }
}

/// All levels at one grid point, indexed by trajectory label.
#[derive(Clone, Debug)]
pub struct TrackedPoint {
    pub b_gauss: f64,
    pub energies: Vec<f64>,
    /// Column `label` holds the eigenvector of that trajectory.
    pub vectors: ComplexMatrix,
    pub sz: Vec<f64>,
    pub sz2: Vec<f64>,
    pub kz: Vec<f64>,
    pub manifolds: Vec<Manifold>,
    /// Ascending-energy index of each label at this point.
    pub eigen_index: Vec<usize>,
}

impl TrackedPoint {
    fn from_levels(levels: &LevelSet, perm: &[usize]) -> Self {
        let n = perm.len();
        let mut vectors = ComplexMatrix::zeros(n);
        for (label, &j) in perm.iter().enumerate() {
            vectors.set_column(label, &levels.eigen.vector(j));
        }
        Self {
            b_gauss: levels.b_gauss,
            energies: perm.iter().map(|&j| levels.eigen.values[j]).collect(),
            vectors,
            sz: perm.iter().map(|&j| levels.sz[j]).collect(),
            sz2: perm.iter().map(|&j| levels.sz2[j]).collect(),
            kz: perm.iter().map(|&j| levels.kz[j]).collect(),
            manifolds: perm.iter().map(|&j| levels.manifolds[j]).collect(),
            eigen_index: perm.to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn vector(&self, label: usize) -> Vec<num_complex::Complex64> {
        self.vectors.column(label)
    }

    /// Labels sorted by energy.
    pub fn energy_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            self.energies[a]
                .total_cmp(&self.energies[b])
                .then(a.cmp(&b))
        });
        order
    }
}

/// Label permutation `label -> column of next` from overlaps with the previous
/// point's vectors, and the smallest assigned overlap magnitude with its label.
fn match_labels(previous: &ComplexMatrix, next: &ComplexMatrix) -> (Vec<usize>, f64, usize) {
    let n = previous.dim();
    let prev_cols: Vec<_> = (0..n).map(|l| previous.column(l)).collect();
    let next_cols: Vec<_> = (0..n).map(|l| next.column(l)).collect();
    let weight: Vec<Vec<f64>> = prev_cols
        .iter()
        .map(|p| next_cols.iter().map(|v| inner(p, v).norm_sqr()).collect())
        .collect();
    let perm = max_weight_assignment(&weight);
    let (worst_label, worst) = perm
        .iter()
        .enumerate()
        .map(|(l, &j)| (l, weight[l][j].sqrt()))
        .fold(
            (0, f64::INFINITY),
            |acc, x| if x.1 < acc.1 { x } else { acc },
        );
    (perm, worst, worst_label)
}

/// One tracking step; fails when any assigned overlap is below the threshold.
pub fn track_step(
    previous: &ComplexMatrix,
    next: &ComplexMatrix,
    b_from: f64,
    b_to: f64,
) -> Result<Vec<usize>> {
    let (perm, worst, label) = match_labels(previous, next);
    if worst < AMBIGUITY_THRESHOLD {
        return Err(Error::AmbiguousTracking {
            b_from,
            b_to,
            label,
            overlap: worst,
        });
    }
    Ok(perm)
}

#[derive(Clone, Debug)]
pub struct TrackedSpectrum {
    system: SpinSystem,
    grid: FieldGrid,
    points: Vec<TrackedPoint>,
}

impl TrackedSpectrum {
    pub fn system(&self) -> &SpinSystem {
        &self.system
    }

    pub fn grid(&self) -> &FieldGrid {
        &self.grid
    }

    pub fn points(&self) -> &[TrackedPoint] {
        &self.points
    }

    pub fn n_levels(&self) -> usize {
        self.system.dim()
    }

    pub fn fields(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.b_gauss).collect()
    }

    pub fn b_min(&self) -> f64 {
        self.points[0].b_gauss
    }

    pub fn b_max(&self) -> f64 {
        self.points[self.points.len() - 1].b_gauss
    }

    pub fn nearest_index(&self, b: f64) -> usize {
        let k = self.points.partition_point(|p| p.b_gauss < b);
        if k == 0 {
            0
        } else if k == self.points.len() {
            k - 1
        } else if (self.points[k].b_gauss - b) < (b - self.points[k - 1].b_gauss) {
            k
        } else {
            k - 1
        }
    }

    /// Diagonalizes at an arbitrary field and labels the levels by overlap
    /// with the nearest grid point.
    pub fn resolve_at(&self, b: f64) -> Result<TrackedPoint> {
        let levels = self.system.solve(b)?;
        let anchor = &self.points[self.nearest_index(b)];
        let (perm, _, _) = match_labels(&anchor.vectors, &levels.eigen.vectors);
        Ok(TrackedPoint::from_levels(&levels, &perm))
    }

    pub fn trajectory(&self, label: usize) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .map(|p| (p.b_gauss, p.energies[label]))
            .collect()
    }

    /// Rows in the trajectory CSV layout, ordered by field then label.
    pub fn rows(&self) -> Vec<TrajectoryRow> {
        let mut rows = Vec::with_capacity(self.points.len() * self.n_levels());
        for p in &self.points {
            for label in 0..p.len() {
                rows.push(TrajectoryRow {
                    b_gauss: p.b_gauss,
                    level_label: label,
                    energy_mhz: p.energies[label],
                    sz_expect: p.sz[label],
                    kz_expect: p.kz[label],
                    manifold: p.manifolds[label],
                });
            }
        }
        rows
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub b_gauss: f64,
    pub level_label: usize,
    pub energy_mhz: f64,
    pub sz_expect: f64,
    pub kz_expect: f64,
    pub manifold: Manifold,
}

pub fn sweep_eigen(spec: &SpinSystemSpec, grid: &FieldGrid) -> Result<TrackedSpectrum> {
    sweep_system(SpinSystem::new(spec)?, grid)
}

pub fn sweep_system(system: SpinSystem, grid: &FieldGrid) -> Result<TrackedSpectrum> {
    let fields = grid.points();
    let levels: Vec<LevelSet> = fields
        .iter()
        .map(|&b| system.solve(b))
        .collect::<Result<_>>()?;

    let mut points: Vec<TrackedPoint> = Vec::with_capacity(levels.len());
    let identity: Vec<usize> = (0..system.dim()).collect();
    points.push(TrackedPoint::from_levels(&levels[0], &identity));
    for lv in &levels[1..] {
        let prev = points.last().expect("first point pushed");
        let perm = track_step(&prev.vectors, &lv.eigen.vectors, prev.b_gauss, lv.b_gauss)?;
        points.push(TrackedPoint::from_levels(lv, &perm));
    }
    Ok(TrackedSpectrum {
        system,
        grid: *grid,
        points,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LacSet {
    /// Between the m_S = -1 and +1 manifolds.
    Set1,
    /// Between the m_S = -1 and 0 manifolds.
    Set2,
    Other,
}

impl fmt::Display for LacSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LacSet::Set1 => "1",
            LacSet::Set2 => "2",
            LacSet::Other => "other",
        })
    }
}

impl Serialize for LacSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LacRecord {
    pub level_a: usize,
    pub level_b: usize,
    pub b_star_gauss: f64,
    pub min_gap_mhz: f64,
    pub set: LacSet,
}

/// Manifold used for set tagging. Near zero field the m_S = ±1 states are
/// Kramers-mixed with ⟨S_z⟩ ≈ 0; ⟨S_z²⟩ keeps them out of the 0 manifold.
fn tag_manifold(sz: f64, sz2: f64) -> Manifold {
    match classify_manifold(sz) {
        Manifold::Spin(0) if sz2 > 0.5 => Manifold::Mixed,
        m => m,
    }
}

fn lac_set(tracked: &TrackedSpectrum, a: usize, b: usize, b_star: f64) -> LacSet {
    let mut seen = BTreeSet::new();
    for probe in [b_star - LAC_TAG_OFFSET_GAUSS, b_star + LAC_TAG_OFFSET_GAUSS] {
        let p = &tracked.points[tracked.nearest_index(probe)];
        for l in [a, b] {
            if let m @ Manifold::Spin(_) = tag_manifold(p.sz[l], p.sz2[l]) {
                seen.insert(m);
            }
        }
    }
    let set: Vec<Manifold> = seen.into_iter().collect();
    match set.as_slice() {
        [Manifold::Spin(-1), Manifold::Spin(1)] => LacSet::Set1,
        [Manifold::Spin(-1), Manifold::Spin(0)] => LacSet::Set2,
        _ => LacSet::Other,
    }
}

/// Local minima of the gap between every pair of trajectories that are
/// energy neighbours somewhere in the sweep, refined to 0.01 G.
pub fn find_lacs(tracked: &TrackedSpectrum) -> Result<Vec<LacRecord>> {
    let pts = tracked.points();
    if pts.len() < 3 {
        return Ok(Vec::new());
    }
    let mut pairs = BTreeSet::new();
    for p in pts {
        let order = p.energy_order();
        for w in order.windows(2) {
            pairs.insert((w[0].min(w[1]), w[0].max(w[1])));
        }
    }

    let mut records = Vec::new();
    for &(a, b) in &pairs {
        let gap: Vec<f64> = pts
            .iter()
            .map(|p| (p.energies[a] - p.energies[b]).abs())
            .collect();
        for k in 1..pts.len() - 1 {
            if !(gap[k] < gap[k - 1] && gap[k] <= gap[k + 1]) {
                continue;
            }
            let refined = golden_section(
                |field| {
                    tracked
                        .resolve_at(field)
                        .map(|p| (p.energies[a] - p.energies[b]).abs())
                },
                pts[k - 1].b_gauss,
                pts[k + 1].b_gauss,
                LAC_TOLERANCE_GAUSS,
            )?;
            let (b_star, min_gap) = if refined.value <= gap[k] {
                (refined.x, refined.value)
            } else {
                (pts[k].b_gauss, gap[k])
            };
            records.push(LacRecord {
                level_a: a,
                level_b: b,
                b_star_gauss: b_star,
                min_gap_mhz: min_gap,
                set: lac_set(tracked, a, b, b_star),
            });
        }
    }
    records.sort_by(|x, y| {
        x.b_star_gauss
            .total_cmp(&y.b_star_gauss)
            .then((x.level_a, x.level_b).cmp(&(y.level_a, y.level_b)))
    });
    Ok(records)
}
