use needminer_core::learners::load_model;
use needminer_core::Error;

const GOLDEN: &str = concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/tests/data/golden_nb_model.json"
);

// Expected posteriors computed by hand from the stored counts.
#[test]
fn golden_model_loads_and_scores() {
    let m = load_model(GOLDEN).unwrap();
    let cases = [
        ("Brauche Ladestation!", 0.8163265306122448),
        ("@x Wetter wetter", 0.006010518407212616),
        ("RT @a Parkplatz #ladestation", 0.8888888888888888),
        ("nichts bekanntes", 0.4),
    ];
    for (text, want) in cases {
        let got = m.score_text(text);
        assert!((got - want).abs() < 1e-12, "{text}: {got} vs {want}");
    }
    assert!(m.predict_text("Brauche Ladestation!"));
    assert!(!m.predict_text("nichts bekanntes"));
}

#[test]
fn missing_file_is_an_io_error() {
    assert!(matches!(
        load_model("/nonexistent/model.json"),
        Err(Error::Io { .. })
    ));
}

#[test]
fn garbage_reports_offset() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        "{\"format\": \"needminer-model\",\n \"format_version\": 1, oops",
    )
    .unwrap();
    match load_model(&path) {
        Err(Error::CorruptModel { offset, .. }) => assert!(offset > 30, "offset {offset}"),
        other => panic!("unexpected {other:?}"),
    }
}
