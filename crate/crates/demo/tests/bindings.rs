use colombeau_demo::{example2_split, indicator_values, scaling_fit};

#[test]
fn indicator_plateau_and_exterior() {
    let v = indicator_values(&[0.0, 1.0], "linear", 0.1, -0.5, 0.5, 2).unwrap();
    assert_eq!(v, vec![0.0, 1.0]);
}

#[test]
fn indicator_rejects_odd_bounds_and_bad_width() {
    assert!(indicator_values(&[0.0], "linear", 0.1, 0.0, 1.0, 3).is_err());
    assert!(indicator_values(&[0.0, 1.0], "cubic", 0.1, 0.0, 1.0, 3).is_err());
}

#[test]
fn delta_order_one_slope() {
    let out = scaling_fit(r#"{"type":"distribution","atoms":[{"c":0}]}"#, 1, -0.5, 0.5, 12).unwrap();
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((v["slope"].as_f64().unwrap() + 2.0).abs() < 0.05, "{out}");
}

#[test]
fn split_is_additive() {
    let n = 201;
    let v = example2_split(0.1, 0.0625, -1.2, 1.2, n).unwrap();
    assert_eq!(v.len(), 4 * n);
    for row in v.chunks(4) {
        assert!((row[1] + row[2] - row[0]).abs() <= 1e-12 * row[0].abs().max(1.0));
        assert!((0.0..=1.0).contains(&row[3]));
    }
}
