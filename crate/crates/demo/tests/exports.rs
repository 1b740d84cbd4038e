use serde_json::Value;
use vlbias_demo::*;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn catalog_and_render() {
    let c = parse(catalog("traits"));
    assert_eq!(c["attributes"].as_array().unwrap().len(), 20);
    assert_eq!(c["templates"], 540);
    let r = parse(render("occupations", "developer", 0));
    assert!(r["text"].as_str().unwrap().contains("developer"));
    assert!(parse(render("traits", "developer", 0))["error"].is_string());
    assert!(parse(render("traits", "honest", 10_000))["error"].is_string());
    assert!(parse(catalog("colors"))["error"].is_string());
}

#[test]
fn simulated_test_detects_a_clear_gap() {
    let r = parse(simulate_bias_test(0.1, 0.1, 500, 0.001, 3));
    assert_eq!(r["significant"], true);
    assert!(r["gap"].as_f64().unwrap() > 0.05);
    let r = parse(simulate_bias_test(-0.1, 0.1, 500, 0.001, 3));
    assert!(r["gap"].as_f64().unwrap() < -0.05);
    assert!(parse(simulate_bias_test(0.1, 0.9, 500, 0.001, 3))["error"].is_string());
    assert!(parse(simulate_bias_test(0.1, 0.1, 1, 0.001, 3))["error"].is_string());
}

#[test]
fn kappa_counts() {
    let k = parse(kappa_from_counts(40, 10, 5, 45));
    assert!((k["kappa"].as_f64().unwrap() - 0.7).abs() < 1e-12);
    assert!(parse(kappa_from_counts(0, 0, 0, 0))["error"].is_string());
}
