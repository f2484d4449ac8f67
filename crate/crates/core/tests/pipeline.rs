use std::fs::File;
use std::path::PathBuf;

use unitmf::eval::{cross_validate, split_kfold, split_monte_carlo};
use unitmf::ingest::{
    apply_filters, build_ctr_matrix, build_efficiency_matrix, build_rate_matrix, read_claims, read_ctr_events,
    read_views, synth_emf, FilterConfig, MatrixSummary,
};
use unitmf::{fit, FactorModel, Hyperparams, ModelKind, ObservedMatrix};

fn fixture(name: &str) -> File {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", name].iter().collect();
    File::open(path).unwrap()
}

fn value_at(m: &ObservedMatrix, row: usize, col: usize) -> Option<f64> {
    m.entries().iter().find(|e| e.row == row && e.col == col).map(|e| e.value)
}

#[test]
fn claims_fixture_builds_the_expected_efficiency_matrix() {
    let claims = read_claims(fixture("claims_vfx.csv")).unwrap();
    assert_eq!(claims.len(), 1085);
    let (matrix, ids) = build_efficiency_matrix(&claims).unwrap();
    assert_eq!(matrix.len(), 71);
    for fixpoint in [true, false] {
        let cfg = FilterConfig { fixpoint, ..Default::default() };
        let filtered = apply_filters(&matrix, &cfg).unwrap();
        let m = &filtered.matrix;
        assert_eq!(MatrixSummary::of(m).to_string(), "D=13 N=4 entries=47 sparsity=9.62%");
        let ids = ids.restrict(&filtered.rows, &filtered.cols);
        assert_eq!(ids.rows, (101..=113).collect::<Vec<i64>>());
        assert_eq!(ids.cols, vec![10, 20, 40, 60]);
        assert_eq!(value_at(m, 0, 0), Some(14.0 / 19.0));
        assert_eq!(value_at(m, 12, 2), Some(11.0 / 15.0));
        for e in m.entries() {
            assert!(e.support >= 10);
        }
    }
}

#[test]
fn ctr_fixture_filters_to_the_expected_shape() {
    let events = read_ctr_events(fixture("ctr_sample.csv")).unwrap();
    assert_eq!(events.len(), 395);
    let (matrix, _) = build_ctr_matrix(&events).unwrap();
    let cfg = FilterConfig { min_support: 1, min_users_per_item: 10, min_entries_per_user: 5, fixpoint: true };
    let m = apply_filters(&matrix, &cfg).unwrap().matrix;
    assert_eq!((m.n_rows(), m.n_cols(), m.len()), (47, 20, 355));
    let mut per_col = vec![0; m.n_cols()];
    let mut per_row = vec![0; m.n_rows()];
    for e in m.entries() {
        per_col[e.col] += 1;
        per_row[e.row] += 1;
        assert!((0.0..=1.0).contains(&e.value));
    }
    assert_eq!(per_col.iter().min(), Some(&12));
    assert_eq!(per_row.iter().min(), Some(&5));
}

#[test]
fn views_become_normalized_rates() {
    let csv = "userId,itemId,views\n1,10,3\n1,11,1\n2,10,2\n2,10,2\n";
    let views = read_views(csv.as_bytes()).unwrap();
    let (m, ids) = build_rate_matrix(&views).unwrap();
    assert_eq!(ids.rows, vec![1, 2]);
    assert_eq!(value_at(&m, 0, 0), Some(1.0));
    assert_eq!(value_at(&m, 0, 1), Some(1.0 / 3.0));
    assert_eq!(m.entries().iter().find(|e| e.row == 1).unwrap().support, 4);
    assert_eq!(value_at(&m, 1, 0), Some(1.0));
}

#[test]
fn malformed_claims_report_the_line() {
    let csv = "jobId,disciplineId,taskId,userId,claimId,approved\n1,2,3,4,5,true\n1,2,x,4,6,false\n";
    let err = read_claims(csv.as_bytes()).unwrap_err();
    assert!(matches!(err, unitmf::Error::Parse { line: 3, .. }), "{err}");
}

#[test]
fn trained_models_survive_a_text_round_trip() {
    let (obs, _) = synth_emf(12, 8, 2, 0.6, 5).unwrap();
    for kind in ModelKind::ALL {
        let hp = Hyperparams {
            k: 2,
            max_epochs: 5,
            learning_rate: unitmf::default_learning_rate(kind),
            ..Default::default()
        };
        let (model, _) = fit(kind, &obs, &hp).unwrap();
        let mut buf = Vec::new();
        model.write_text(&mut buf).unwrap();
        let back = FactorModel::read_text(buf.as_slice()).unwrap();
        assert_eq!(back, model, "{kind}");
    }
}

#[test]
fn training_is_deterministic_for_a_seed() {
    let (obs, _) = synth_emf(15, 10, 2, 0.5, 9).unwrap();
    for kind in ModelKind::ALL {
        let hp = Hyperparams { k: 2, max_epochs: 10, seed: 3, learning_rate: unitmf::default_learning_rate(kind), ..Default::default() };
        let a = fit(kind, &obs, &hp).unwrap();
        let b = fit(kind, &obs, &hp).unwrap();
        assert_eq!(a.0, b.0, "{kind}");
        assert_eq!(a.1, b.1, "{kind}");
    }
}

#[test]
fn cross_validation_is_independent_of_thread_count() {
    let (obs, _) = synth_emf(20, 12, 2, 0.5, 1).unwrap();
    let grid: Vec<Hyperparams> = [0.0, 0.01, 0.1]
        .iter()
        .map(|&l| Hyperparams { k: 2, lambda_u: l, lambda_i: l, max_epochs: 20, ..Default::default() })
        .collect();
    let plans = split_monte_carlo(&obs, 3, 0.2, 4).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| cross_validate(ModelKind::Emf, &obs, &grid, &plans).unwrap())
    };
    let (one, many) = (run(1), run(4));
    assert_eq!(one.0, many.0);
    assert_eq!(one.1, many.1);

    let folds = split_kfold(&obs, 3, 4).unwrap();
    let (_, report) = cross_validate(ModelKind::Emf, &obs, &grid, &folds).unwrap();
    assert_eq!(report.rounds.len(), 3);
    for m in &report.rounds {
        assert!(m.rmse.is_finite() && m.rmse <= 1.0);
    }
}
