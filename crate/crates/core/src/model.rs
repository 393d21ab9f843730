//! Spin-system description and ground-state Hamiltonian assembly.
//!
//! Units throughout: MHz for energies and couplings, Gauss for fields,
//! MHz/G for the electron gyromagnetic ratio. Nuclear gyromagnetic ratios are
//! entered in kHz/G and converted once on construction.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    embed, hermitian_eig, rotate_tensor, spin_operators, ComplexMatrix, EigenSolution, HalfInteger,
    Tensor3, DEGENERACY_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::sweep::{classify_manifold, Manifold};

pub const DEFAULT_GAMMA_E_MHZ_PER_G: f64 = 2.8;
pub const DEFAULT_ZFS_D_MHZ: f64 = 2870.0;
/// ¹³C gyromagnetic ratio.
pub const DEFAULT_GAMMA_13C_KHZ_PER_G: f64 = 1.0705;

/// First-shell ¹³C hyperfine tensor in the NV frame with the nucleus in the xz plane.
pub const FIRST_SHELL_13C_HYPERFINE: Tensor3 =
    Tensor3([[166.9, 0.0, -90.0], [0.0, 122.9, 0.0], [-90.0, 0.0, 90.0]]);

/// The bundled NV⁻ + three first-shell ¹³C description.
pub const NV3C_JSON: &str = include_str!("../data/nv3c.json");

const SYMMETRY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct ElectronSpec {
    pub spin: HalfInteger,
    pub gamma_e_mhz_per_g: f64,
    pub zfs_d_mhz: f64,
}

impl Default for ElectronSpec {
    fn default() -> Self {
        Self {
            spin: HalfInteger::ONE,
            gamma_e_mhz_per_g: DEFAULT_GAMMA_E_MHZ_PER_G,
            zfs_d_mhz: DEFAULT_ZFS_D_MHZ,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NucleusSpec {
    pub spin: HalfInteger,
    pub gamma_n_khz_per_g: f64,
    /// Hyperfine tensor before the azimuthal rotation, MHz.
    pub hyperfine: Tensor3,
    pub azimuth_rad: f64,
}

impl NucleusSpec {
    pub fn carbon13(hyperfine: Tensor3, azimuth_rad: f64) -> Self {
        Self {
            spin: HalfInteger::HALF,
            gamma_n_khz_per_g: DEFAULT_GAMMA_13C_KHZ_PER_G,
            hyperfine,
            azimuth_rad,
        }
    }

    /// Tensor in the NV frame after rotating by the azimuth about the NV axis.
    pub fn rotated_hyperfine(&self) -> Tensor3 {
        rotate_tensor(&self.hyperfine, self.azimuth_rad)
    }

    pub fn gamma_n_mhz_per_g(&self) -> f64 {
        self.gamma_n_khz_per_g * 1e-3
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct SpinSystemSpec {
    pub electron: ElectronSpec,
    pub nuclei: Vec<NucleusSpec>,
    pub include_nuclear_zeeman: bool,
}

impl SpinSystemSpec {
    pub fn bare_nv() -> Self {
        Self::default()
    }

    /// NV⁻ with `n` first-shell ¹³C nuclei at azimuths `k·2π/3`.
    pub fn nv_with_first_shell(n: usize) -> Self {
        let nuclei = (0..n)
            .map(|k| NucleusSpec::carbon13(FIRST_SHELL_13C_HYPERFINE, k as f64 * 2.0 * PI / 3.0))
            .collect();
        Self {
            nuclei,
            ..Self::default()
        }
    }

    pub fn nv3c() -> Self {
        Self::nv_with_first_shell(3)
    }

    /// Subspace dimensions: electron first, then nuclei in order.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.electron.spin.dim())
            .chain(self.nuclei.iter().map(|n| n.spin.dim()))
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn to_json(&self) -> String {
        let raw = RawSystem {
            electron: Some(RawElectron {
                spin: Some(self.electron.spin.value()),
                gamma_e_mhz_per_g: Some(self.electron.gamma_e_mhz_per_g),
                zfs_d_mhz: Some(self.electron.zfs_d_mhz),
            }),
            nuclei: Some(
                self.nuclei
                    .iter()
                    .map(|n| RawNucleus {
                        spin: Some(n.spin.value()),
                        gamma_n_khz_per_g: Some(n.gamma_n_khz_per_g),
                        hyperfine_mhz: n.hyperfine.to_row_major().to_vec(),
                        azimuth_rad: Some(n.azimuth_rad),
                    })
                    .collect(),
            ),
            include_nuclear_zeeman: Some(self.include_nuclear_zeeman),
        };
        serde_json::to_string_pretty(&raw).expect("spec serializes")
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawElectron {
    spin: Option<f64>,
    gamma_e_mhz_per_g: Option<f64>,
    zfs_d_mhz: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNucleus {
    spin: Option<f64>,
    gamma_n_khz_per_g: Option<f64>,
    hyperfine_mhz: Vec<f64>,
    azimuth_rad: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    electron: Option<RawElectron>,
    nuclei: Option<Vec<RawNucleus>>,
    include_nuclear_zeeman: Option<bool>,
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.into(),
        message: message.into(),
    }
}

fn spin_at(path: &str, value: Option<f64>, default: HalfInteger) -> Result<HalfInteger> {
    match value {
        None => Ok(default),
        Some(s) => HalfInteger::new(s).map_err(|e| schema(path, e.to_string())),
    }
}

fn finite_at(path: &str, value: Option<f64>, default: f64) -> Result<f64> {
    let v = value.unwrap_or(default);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(schema(path, "must be a finite number"))
    }
}

/// Parses and validates a spin-system JSON document.
pub fn parse_system(text: &str) -> Result<SpinSystemSpec> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawSystem = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        schema(path, e.into_inner().to_string())
    })?;

    let electron = match raw.electron {
        None => ElectronSpec::default(),
        Some(e) => ElectronSpec {
            spin: spin_at("electron.spin", e.spin, HalfInteger::ONE)?,
            gamma_e_mhz_per_g: finite_at(
                "electron.gamma_e_mhz_per_g",
                e.gamma_e_mhz_per_g,
                DEFAULT_GAMMA_E_MHZ_PER_G,
            )?,
            zfs_d_mhz: finite_at("electron.zfs_d_mhz", e.zfs_d_mhz, DEFAULT_ZFS_D_MHZ)?,
        },
    };

    let mut nuclei = Vec::new();
    for (k, n) in raw.nuclei.unwrap_or_default().into_iter().enumerate() {
        let at = |field: &str| format!("nuclei[{k}].{field}");
        let spin = spin_at(&at("spin"), n.spin, HalfInteger::HALF)?;
        let gamma_n_khz_per_g = finite_at(
            &at("gamma_n_khz_per_g"),
            n.gamma_n_khz_per_g,
            DEFAULT_GAMMA_13C_KHZ_PER_G,
        )?;
        let entries: [f64; 9] = n.hyperfine_mhz.as_slice().try_into().map_err(|_| {
            schema(
                at("hyperfine_mhz"),
                format!("expected 9 entries, found {}", n.hyperfine_mhz.len()),
            )
        })?;
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(schema(at("hyperfine_mhz"), "entries must be finite"));
        }
        let hyperfine = Tensor3::from_row_major(entries);
        let asym = hyperfine.asymmetry();
        if asym > SYMMETRY_TOLERANCE * hyperfine.max_abs().max(1.0) {
            return Err(schema(
                at("hyperfine_mhz"),
                format!("tensor must be symmetric (max |A_ab - A_ba| = {asym})"),
            ));
        }
        let azimuth_rad = finite_at(&at("azimuth_rad"), n.azimuth_rad, 0.0)?;
        if !(0.0..2.0 * PI).contains(&azimuth_rad) {
            return Err(schema(at("azimuth_rad"), "must lie in [0, 2π)"));
        }
        nuclei.push(NucleusSpec {
            spin,
            gamma_n_khz_per_g,
            hyperfine,
            azimuth_rad,
        });
    }

    Ok(SpinSystemSpec {
        electron,
        nuclei,
        include_nuclear_zeeman: raw.include_nuclear_zeeman.unwrap_or(false),
    })
}

/// `Σ_ab A_ab S_a I_b` for embedded electron and nuclear Cartesian operators.
pub fn hyperfine_term(
    a: &Tensor3,
    s: [&ComplexMatrix; 3],
    i: [&ComplexMatrix; 3],
) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(s[0].dim());
    for (ra, sa) in s.iter().enumerate() {
        for (cb, ib) in i.iter().enumerate() {
            let coeff = a.get(ra, cb);
            if coeff != 0.0 {
                h.add_scaled(&sa.matmul(ib), Complex64::new(coeff, 0.0));
            }
        }
    }
    h
}

/// Operators of one spin system embedded in the full product space, plus the
/// field-independent part of the Hamiltonian. `H(B) = static + B·dH/dB`.
#[derive(Clone, Debug)]
pub struct SpinSystem {
    spec: SpinSystemSpec,
    dims: Vec<usize>,
    /// Embedded electron `[Sx, Sy, Sz]`.
    pub s: [ComplexMatrix; 3],
    pub sz2: ComplexMatrix,
    /// Embedded `[Ix, Iy, Iz]` per nucleus.
    pub nuclear: Vec<[ComplexMatrix; 3]>,
    /// Total nuclear spin `[Kx, Ky, Kz]`.
    pub k: [ComplexMatrix; 3],
    static_part: ComplexMatrix,
    field_derivative: ComplexMatrix,
}

impl SpinSystem {
    pub fn new(spec: &SpinSystemSpec) -> Result<Self> {
        let dims = spec.dims();
        let n = dims.iter().product::<usize>();
        let e = spin_operators(spec.electron.spin);
        let s = [
            embed(&e.sx, 0, &dims)?,
            embed(&e.sy, 0, &dims)?,
            embed(&e.sz, 0, &dims)?,
        ];
        let sz2 = s[2].matmul(&s[2]);

        let mut nuclear = Vec::with_capacity(spec.nuclei.len());
        for (idx, nuc) in spec.nuclei.iter().enumerate() {
            let ops = spin_operators(nuc.spin);
            nuclear.push([
                embed(&ops.sx, idx + 1, &dims)?,
                embed(&ops.sy, idx + 1, &dims)?,
                embed(&ops.sz, idx + 1, &dims)?,
            ]);
        }
        let mut k = [
            ComplexMatrix::zeros(n),
            ComplexMatrix::zeros(n),
            ComplexMatrix::zeros(n),
        ];
        for ops in &nuclear {
            for (total, op) in k.iter_mut().zip(ops) {
                *total += op;
            }
        }

        let sv = spec.electron.spin.value();
        // D (Sz² − S(S+1)/3)
        let mut static_part = (&sz2
            - &ComplexMatrix::identity(n).scale_real(sv * (sv + 1.0) / 3.0))
            .scale_real(spec.electron.zfs_d_mhz);
        for (nuc, ops) in spec.nuclei.iter().zip(&nuclear) {
            let a = nuc.rotated_hyperfine();
            static_part += &hyperfine_term(&a, [&s[0], &s[1], &s[2]], [&ops[0], &ops[1], &ops[2]]);
        }

        let mut field_derivative = s[2].scale_real(spec.electron.gamma_e_mhz_per_g);
        if spec.include_nuclear_zeeman {
            for (nuc, ops) in spec.nuclei.iter().zip(&nuclear) {
                field_derivative.add_scaled(&ops[2], Complex64::new(-nuc.gamma_n_mhz_per_g(), 0.0));
            }
        }

        Ok(Self {
            spec: spec.clone(),
            dims,
            s,
            sz2,
            nuclear,
            k,
            static_part,
            field_derivative,
        })
    }

    pub fn spec(&self) -> &SpinSystemSpec {
        &self.spec
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.static_part.dim()
    }

    /// `∂H/∂B_z` (MHz/G); the Hamiltonian is affine in the axial field.
    pub fn field_derivative(&self) -> &ComplexMatrix {
        &self.field_derivative
    }

    pub fn hamiltonian(&self, b_gauss: f64) -> ComplexMatrix {
        let mut h = self.static_part.clone();
        h.add_scaled(&self.field_derivative, Complex64::new(b_gauss, 0.0));
        h
    }

    /// Diagonalizes `H(B)` with degenerate blocks ordered by ⟨S_z⟩ then ⟨K_z⟩.
    pub fn solve(&self, b_gauss: f64) -> Result<LevelSet> {
        let mut eigen = hermitian_eig(&self.hamiltonian(b_gauss))?;
        eigen.canonicalize_degenerate(&[&self.s[2], &self.k[2]], DEGENERACY_TOLERANCE)?;
        Ok(LevelSet::from_eigen(self, b_gauss, eigen))
    }
}

/// Builds `H(B)` directly from a description.
pub fn build_hamiltonian(spec: &SpinSystemSpec, b_gauss: f64) -> Result<ComplexMatrix> {
    Ok(SpinSystem::new(spec)?.hamiltonian(b_gauss))
}

/// Eigenlevels at one field with the spin expectation values used for labeling.
#[derive(Clone, Debug)]
pub struct LevelSet {
    pub b_gauss: f64,
    pub eigen: EigenSolution,
    pub sz: Vec<f64>,
    pub sz2: Vec<f64>,
    pub kz: Vec<f64>,
    pub manifolds: Vec<Manifold>,
}

impl LevelSet {
    pub fn from_eigen(system: &SpinSystem, b_gauss: f64, eigen: EigenSolution) -> Self {
        let vecs: Vec<_> = eigen.vectors_iter().collect();
        let sz: Vec<f64> = vecs.iter().map(|v| system.s[2].expectation(v)).collect();
        let sz2 = vecs.iter().map(|v| system.sz2.expectation(v)).collect();
        let kz = vecs.iter().map(|v| system.k[2].expectation(v)).collect();
        let manifolds = sz.iter().map(|&x| classify_manifold(x)).collect();
        Self {
            b_gauss,
            eigen,
            sz,
            sz2,
            kz,
            manifolds,
        }
    }

    pub fn len(&self) -> usize {
        self.eigen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigen.is_empty()
    }

    pub fn energies(&self) -> &[f64] {
        &self.eigen.values
    }

    /// Indices of the levels in one manifold, ascending in energy.
    pub fn manifold_levels(&self, manifold: Manifold) -> Vec<usize> {
        (0..self.len())
            .filter(|&k| self.manifolds[k] == manifold)
            .collect()
    }

    /// Sizes of groups of levels (taken in the given order) whose consecutive
    /// energies differ by less than `tol`.
    pub fn degeneracy_pattern(&self, levels: &[usize], tol: f64) -> Vec<usize> {
        group_sizes(levels.iter().map(|&k| self.eigen.values[k]), tol)
    }
}

/// Chains sorted values into groups whose neighbours are closer than `tol`.
pub fn group_sizes(values: impl IntoIterator<Item = f64>, tol: f64) -> Vec<usize> {
    let mut sorted: Vec<f64> = values.into_iter().collect();
    sorted.sort_by(f64::total_cmp);
    let mut groups = Vec::new();
    let mut count = 0;
    for (k, &v) in sorted.iter().enumerate() {
        if k > 0 && v - sorted[k - 1] >= tol {
            groups.push(count);
            count = 0;
        }
        count += 1;
    }
    if count > 0 {
        groups.push(count);
    }
    groups
}
