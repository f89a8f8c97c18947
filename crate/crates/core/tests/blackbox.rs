//! Network gradients, training data and the external oracle protocol.

mod common;

use std::io::Cursor;
use std::time::Duration;

use proptest::prelude::*;
use rice_core::blackbox::{
    generate_dataset, rule_label, serve, train, ExternalOracle, FeatureVector, Mlp, Oracle,
    RuleOracle, TrainConfig,
};

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    /// Backpropagation agrees with central differences.
    #[test]
    fn gradient_matches_finite_differences(seed in any::<u64>()) {
        let check = common::gradient_check(seed);
        prop_assert!(check.worst <= 1e-4, "worst relative error {}", check.worst);
        prop_assert!(check.kinks * 10 <= check.checked, "{} kinks, {} checked", check.kinks, check.checked);
    }
}

#[test]
fn dataset_noise_and_reproducibility() {
    let a = generate_dataset(50_000, 0.02, 3).unwrap();
    assert_eq!(a.noisy_rows(), 1000);
    assert_eq!(
        a.to_csv(),
        generate_dataset(50_000, 0.02, 3).unwrap().to_csv()
    );
    assert_ne!(
        a.to_csv(),
        generate_dataset(50_000, 0.02, 4).unwrap().to_csv()
    );
    let disagree = a
        .rows
        .iter()
        .filter(|(f, l)| rule_label(f).unwrap() != *l)
        .count();
    assert_eq!(disagree, 1000);
}

#[test]
fn short_training_learns_the_rule() {
    let data = generate_dataset(20_000, 0.0, 5).unwrap();
    let report = train(
        &data,
        &TrainConfig {
            epochs: 5,
            seed: 5,
            ..TrainConfig::default()
        },
    )
    .unwrap();
    assert!(
        report.clean_test_accuracy > 0.95,
        "{}",
        report.clean_test_accuracy
    );
    assert_eq!(report.train_rows + report.test_rows, 20_000);
    let again = train(
        &data,
        &TrainConfig {
            epochs: 5,
            seed: 5,
            ..TrainConfig::default()
        },
    )
    .unwrap();
    assert_eq!(report.model, again.model);
}

#[test]
fn serve_speaks_the_oracle_protocol() {
    let model = Mlp::new_random(9);
    let f = FeatureVector::new(0.0, 1.0, 0.0, 0.42);
    let mut out = Vec::new();
    serve(&model, Cursor::new("0 1 0 0.42\nQUIT\n"), &mut out).unwrap();
    let answer: f64 = String::from_utf8(out).unwrap().trim().parse().unwrap();
    assert_eq!(answer, model.predict(&f).unwrap());
}

#[cfg(unix)]
#[test]
fn external_process_oracle() {
    // a tiny shell oracle: go iff the distance starts with 0.9
    let script = r#"while read rd am gr dist; do
        [ "$rd" = QUIT ] && exit 0
        case "$dist" in 0.9*) echo 1.0 ;; *) echo 0.0 ;; esac
    done"#;
    let oracle =
        ExternalOracle::spawn("sh", &["-c".into(), script.into()], Duration::from_secs(5)).unwrap();
    assert_eq!(
        oracle
            .predict(&FeatureVector::new(1.0, 0.0, 0.0, 0.95))
            .unwrap(),
        1.0
    );
    assert_eq!(
        oracle
            .predict(&FeatureVector::new(1.0, 0.0, 0.0, 0.5))
            .unwrap(),
        0.0
    );
    assert_eq!(
        RuleOracle
            .action(&FeatureVector::new(1.0, 0.0, 0.0, 0.95))
            .unwrap(),
        1.0
    );
}
