use xshap_core::{
    enumerate_coalitions, x_shap_explain, DataTable, Error, ExternalModel, LogGlm, Mode, Predictor, ReferenceSet,
};

const STUB: &str = env!("CARGO_BIN_EXE_xshap-stub");

fn table(rows: &[Vec<f64>]) -> DataTable {
    DataTable::from_rows(rows).unwrap()
}

#[test]
fn echo_returns_clamped_first_column() {
    let model = ExternalModel::spawn(&format!("{STUB} echo --features 2"), 2, Mode::Multiplicative).unwrap();
    let x = table(&[vec![3.5, 1.0], vec![-2.0, 0.0], vec![0.05, 9.0], vec![0.1, 0.0]]);
    assert_eq!(model.predict(&x).unwrap(), vec![3.5, 0.1, 0.1, 0.1]);
    // a second request on the same session
    assert_eq!(model.predict(&x).unwrap(), vec![3.5, 0.1, 0.1, 0.1]);
    assert!(!model.parallel_safe());
}

#[test]
fn short_reply_is_an_external_model_error() {
    let model = ExternalModel::spawn(&format!("{STUB} short --features 1"), 1, Mode::Multiplicative).unwrap();
    let err = model.predict(&table(&[vec![1.0], vec![2.0], vec![3.0]])).unwrap_err();
    assert!(matches!(err, Error::ExternalModel(ref m) if m.contains("expected 3")), "{err}");
    // the session stays broken afterwards
    assert!(model.predict(&table(&[vec![1.0]])).is_err());
}

#[test]
fn negative_reply_rejected_in_multiplicative_mode() {
    let model = ExternalModel::spawn(&format!("{STUB} negative --features 1"), 1, Mode::Multiplicative).unwrap();
    let err = model.predict(&table(&[vec![1.0]])).unwrap_err();
    assert!(matches!(err, Error::NonPositivePrediction { value, .. } if value == -1.0), "{err}");

    let additive = ExternalModel::spawn(&format!("{STUB} negative --features 1"), 1, Mode::Additive).unwrap();
    assert_eq!(additive.predict(&table(&[vec![1.0], vec![5.0]])).unwrap(), vec![-1.0, -1.0]);
}

#[test]
fn failing_command_reports_diagnostics() {
    let err = ExternalModel::spawn("echo oops >&2; exit 3", 1, Mode::Additive).unwrap_err();
    assert!(matches!(err, Error::ExternalModel(ref m) if m.contains("oops")), "{err}");
}

#[test]
fn column_count_mismatch() {
    let model = ExternalModel::spawn(&format!("{STUB} echo --features 2"), 2, Mode::Multiplicative).unwrap();
    assert!(matches!(model.predict(&table(&[vec![1.0]])), Err(Error::Shape { .. })));
}

#[test]
fn glm_stub_matches_in_process_model_bitwise() {
    let glm = LogGlm::new(0.25, vec![0.7, -1.1, 0.05]);
    let cmd = format!("{STUB} glm --features 3 --alpha 0.25 --betas 0.7,-1.1,0.05");
    let ext = ExternalModel::spawn(&cmd, 3, Mode::Multiplicative).unwrap();
    let rows: Vec<Vec<f64>> = (0..20)
        .map(|i| (0..3).map(|j| ((i * 5 + j * 7) % 13) as f64 / 3.0 - 2.0).collect())
        .collect();
    let x = table(&rows);
    assert_eq!(ext.predict(&x).unwrap(), glm.predict(&x).unwrap());

    let reference = ReferenceSet::new(&glm, table(&rows[..8])).unwrap();
    let plan = enumerate_coalitions(3, 100).unwrap();
    let a = x_shap_explain(&glm, &rows[10], &reference, &plan).unwrap();
    let b = x_shap_explain(&ext, &rows[10], &reference, &plan).unwrap();
    assert_eq!(a, b);
}
