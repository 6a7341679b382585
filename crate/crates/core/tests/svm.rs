mod common;

use dctcrop::classifier::{
    fit_scaler, gram_matrix, grid_search, load_model, model_to_bytes, save_model, train_binary_detailed, train_model,
    SvmHyperParams,
};
use dctcrop::features::{BetaVector, FeatureRecord, FeatureTable, ResolutionClass, AC_COUNT};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn gram_matrix_is_positive_semidefinite() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let points: Vec<Vec<f64>> = (0..50).map(|_| (0..AC_COUNT).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    for gamma in [0.001, 0.01, 0.1, 1.0] {
        let k = gram_matrix(&points, gamma);
        let m = DMatrix::from_row_slice(50, 50, &k);
        assert_eq!(m, m.transpose());
        assert!(m.diagonal().iter().all(|&d| d == 1.0));
        let eig = SymmetricEigen::new(m).eigenvalues;
        let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(min >= -1e-9, "gamma {gamma}: eigenvalue {min}");
    }
}

#[test]
fn blob_binaries_match_reference_optimizer() {
    let table = common::blob_table(&[128, 2048], 20, 17);
    let scaler = fit_scaler(&table).unwrap();
    let groups = common::scaled_groups(&table, &scaler);
    for (c, gamma) in [(100.0, 0.1), (1.0, 0.01), (0.1, 1.0)] {
        let params = SvmHyperParams::with(c, gamma);
        let t = train_binary_detailed(&groups[0], &groups[1], &params).unwrap();
        let (kkt, boxed) = common::kkt_report(&t);
        assert!(kkt <= 0.0 && boxed);
        let (_, reference) = common::qp::solve_dual(&t.points, &t.labels, c, gamma, 20_000);
        assert!((t.objective() - reference).abs() <= 1e-4, "C={c} gamma={gamma}: {} vs {reference}", t.objective());
    }
}

#[test]
fn training_ignores_record_order_and_ids() {
    let table = common::blob_table(&[256, 512, 1024], 15, 2);
    let renamed: Vec<FeatureRecord> = table
        .records()
        .iter()
        .rev()
        .enumerate()
        .map(|(i, r)| FeatureRecord { image_id: format!("z{i:04}"), ..r.clone() })
        .collect();
    let shuffled = FeatureTable::from_records(renamed).unwrap();
    let a = train_model(&table, &SvmHyperParams::default()).unwrap();
    let b = train_model(&shuffled, &SvmHyperParams::default()).unwrap();
    assert_eq!(model_to_bytes(&a), model_to_bytes(&b));
}

#[test]
fn grid_search_picks_smallest_perfect_c() {
    let table = common::blob_table(&ResolutionClass::SIDES, 10, 3);
    let (params, report) = grid_search(&table, &[1000.0, 100.0, 10.0, 1.0], &[0.1], 5, 0, &SvmHyperParams::default()).unwrap();
    let perfect: Vec<f64> = report.cells.iter().filter(|c| c.accuracy() == Some(1.0)).map(|c| c.c).collect();
    assert!(!perfect.is_empty());
    assert_eq!(params.c, perfect[0]);
    assert_eq!(report.cells.iter().map(|c| c.c).collect::<Vec<_>>(), vec![1.0, 10.0, 100.0, 1000.0]);
}

#[test]
fn loaded_model_predicts_identically() {
    let table = common::blob_table(&ResolutionClass::SIDES, 12, 8);
    let model = train_model(&table, &SvmHyperParams::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csvm");
    save_model(&model, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    assert_eq!(loaded.binaries.len(), 10);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let v = BetaVector::new(std::array::from_fn(|_| rng.random_range(0.0..70.0))).unwrap();
        let (p, q) = (model.predict(&v), loaded.predict(&v));
        assert_eq!(p.class, q.class);
        assert_eq!(p.decision_values, q.decision_values);
    }
}
