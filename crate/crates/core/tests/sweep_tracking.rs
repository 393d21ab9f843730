use nvspin_core::model::SpinSystem;
use nvspin_core::transitions::{IntensityModel, PointAnalysis, TmeConvention};
use nvspin_core::*;

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn bare_crossing_is_at_d_over_gamma() {
    let grid = FieldGrid::new(0.0, 1200.0, 0.5).unwrap();
    let t = sweep_eigen(&SpinSystemSpec::bare_nv(), &grid).unwrap();
    let lacs = find_lacs(&t).unwrap();
    assert_eq!(lacs.len(), 1);
    assert!((lacs[0].b_star_gauss - 2870.0 / 2.8).abs() < 0.02);
    assert!(lacs[0].min_gap_mhz < 0.05);
}

#[test]
fn trajectories_permute_the_eigenvalues() {
    let grid = FieldGrid::new(0.0, 100.0, 0.5).unwrap();
    let spec = SpinSystemSpec::nv3c();
    let t = sweep_eigen(&spec, &grid).unwrap();
    let sys = SpinSystem::new(&spec).unwrap();
    assert_eq!(t.points()[0].b_gauss, 0.1);
    for p in t.points().iter().step_by(7) {
        let direct = sys.solve(p.b_gauss).unwrap();
        assert_eq!(sorted(p.energies.clone()), direct.energies().to_vec());
    }
}

#[test]
fn m_s_zero_trajectories_stay_unmixed_below_300_gauss() {
    let grid = FieldGrid::new(0.0, 300.0, 0.5).unwrap();
    let t = sweep_eigen(&SpinSystemSpec::nv3c(), &grid).unwrap();
    // the eight lowest-⟨S_z²⟩ labels at 300 G are the m_S = 0 trajectories
    let last = t.points().last().unwrap();
    let mut labels: Vec<usize> = (0..24).collect();
    labels.sort_by(|&a, &b| last.sz2[a].total_cmp(&last.sz2[b]));
    for &l in &labels[..8] {
        for p in t.points().iter().filter(|p| p.b_gauss > 20.0) {
            assert!(
                p.sz[l].abs() < 0.1,
                "label {l} at {} G: {}",
                p.b_gauss,
                p.sz[l]
            );
        }
    }
}

#[test]
fn halving_the_step_is_consistent() {
    let spec = SpinSystemSpec::nv3c();
    let coarse = sweep_eigen(&spec, &FieldGrid::new(900.0, 1100.0, 0.5).unwrap()).unwrap();
    let fine = sweep_eigen(&spec, &FieldGrid::new(900.0, 1100.0, 0.25).unwrap()).unwrap();
    for (k, p) in coarse.points().iter().enumerate() {
        let q = &fine.points()[2 * k];
        assert_eq!(p.b_gauss, q.b_gauss);
        assert_eq!(p.energies, q.energies);
    }
    let a = find_lacs(&coarse).unwrap();
    let b = find_lacs(&fine).unwrap();
    for l in &a {
        let m = b
            .iter()
            .filter(|m| (m.level_a, m.level_b) == (l.level_a, l.level_b))
            .min_by(|x, y| {
                (x.b_star_gauss - l.b_star_gauss)
                    .abs()
                    .total_cmp(&(y.b_star_gauss - l.b_star_gauss).abs())
            })
            .expect("same anti-crossing on the finer grid");
        assert!(
            (m.b_star_gauss - l.b_star_gauss).abs() < 0.1,
            "{l:?} vs {m:?}"
        );
    }
}

#[test]
fn trajectories_are_smooth_away_from_anticrossings() {
    let spec = SpinSystemSpec::nv3c();
    let t = sweep_eigen(&spec, &FieldGrid::new(150.0, 700.0, 0.5).unwrap()).unwrap();
    let sys = t.system();
    let im = IntensityModel::new(sys, TmeConvention::Magnitude).unwrap();
    let h = t.grid().step;
    let pts = t.points();
    let an: Vec<PointAnalysis> = pts
        .iter()
        .map(|p| PointAnalysis::from_tracked(sys, &im, p))
        .collect();
    for k in 1..pts.len() - 1 {
        for l in 0..24 {
            let d2 = (pts[k + 1].energies[l] - 2.0 * pts[k].energies[l] + pts[k - 1].energies[l])
                / (h * h);
            let bound = (k - 1..=k + 1)
                .filter_map(|j| an[j].level_curvature(l))
                .map(f64::abs)
                .fold(0.0, f64::max);
            assert!(
                d2.abs() <= 2.0 * bound + 1e-6,
                "label {l} at {} G: {d2} vs {bound}",
                pts[k].b_gauss
            );
        }
    }
}

#[test]
fn eight_levels_per_manifold_away_from_anticrossings() {
    let spec = SpinSystemSpec::nv3c();
    let t = sweep_eigen(&spec, &FieldGrid::new(100.0, 1200.0, 0.5).unwrap()).unwrap();
    let lacs = find_lacs(&t).unwrap();
    let near_set2 = |b: f64| {
        lacs.iter()
            .filter(|l| l.set != LacSet::Other)
            .any(|l| (l.b_star_gauss - b).abs() < 100.0)
    };
    for p in t.points().iter().filter(|p| !near_set2(p.b_gauss)) {
        for m in [Manifold::MINUS, Manifold::ZERO, Manifold::PLUS] {
            let count = p.manifolds.iter().filter(|&&x| x == m).count();
            assert_eq!(count, 8, "{m} at {} G", p.b_gauss);
        }
    }
}

#[test]
fn csv_rows_cover_every_label() {
    let t = sweep_eigen(
        &SpinSystemSpec::nv3c(),
        &FieldGrid::new(0.5, 10.0, 0.5).unwrap(),
    )
    .unwrap();
    let rows = t.rows();
    assert_eq!(rows.len(), 20 * 24);
    assert_eq!(rows[25].level_label, 1);
    assert_eq!(rows[25].b_gauss, 1.0);
}

#[test]
fn resolve_between_grid_points_keeps_labels() {
    let t = sweep_eigen(
        &SpinSystemSpec::nv3c(),
        &FieldGrid::new(600.0, 620.0, 0.5).unwrap(),
    )
    .unwrap();
    let p = t.resolve_at(608.2).unwrap();
    let q = &t.points()[t.nearest_index(608.2)];
    for l in 0..24 {
        assert!((p.energies[l] - q.energies[l]).abs() < 1.0);
    }
}

#[test]
fn coarse_step_across_the_high_field_anticrossings_is_rejected() {
    let err = sweep_eigen(
        &SpinSystemSpec::nv3c(),
        &FieldGrid::new(0.0, 3000.0, 500.0).unwrap(),
    )
    .unwrap_err();
    assert!(!err.is_validation());
    match err {
        Error::AmbiguousTracking {
            b_from,
            b_to,
            overlap,
            ..
        } => {
            assert_eq!((b_from, b_to), (1000.0, 1500.0));
            assert!(overlap < 0.5);
        }
        other => panic!("{other:?}"),
    }
}
