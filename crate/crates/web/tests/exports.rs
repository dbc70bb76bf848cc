use monodsm_web::{continuation_path_json, flow_trace_json, gallery_json, operator_checks_json};
use serde_json::Value;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn flow_trace_columns() {
    let v = parse(&flow_trace_json("scalar_cubic", 1, 0.5, "explicit:[8]").unwrap());
    let t = v["t"].as_array().unwrap();
    assert_eq!(t.len(), v["g"].as_array().unwrap().len());
    assert_eq!(v["terminated_by"], "residual_tol_reached");
    assert_eq!(v["decay"]["passed"], true);
    assert!((v["g0"].as_f64().unwrap() - 8.0).abs() < 1e-12);
}

#[test]
fn continuation_path_shapes() {
    let v = parse(&continuation_path_json("convex_gradient", 3, "ones*2", 1.0, 0.1, 1e-6, 0).unwrap());
    assert_eq!(v["a"].as_array().unwrap().len(), 7);
    assert_eq!(v["first_failure"], Value::Null);
    let v = parse(&continuation_path_json("rank_one_projector", 2, "explicit:[1,-2]", 1.0, 0.1, 1e-4, 0).unwrap());
    assert_eq!(v["first_failure"], "bound_report");
}

#[test]
fn operator_checks_flags_negation() {
    let v = parse(&operator_checks_json("scalar_negation", 1, 3, 50).unwrap());
    assert_eq!(v["pairings"].as_array().unwrap().len(), 50);
    assert_eq!(v["monotone"]["passed"], false);
    assert!(v["monotone"]["witness"].is_array());
}

#[test]
fn errors_are_messages() {
    assert!(flow_trace_json("nope", 1, 1.0, "ones").unwrap_err().contains("nope"));
    assert!(flow_trace_json("identity", 2, 0.0, "ones").is_err());
    assert!(continuation_path_json("identity", 2, "ones", 1.0, 2.0, 1e-6, 0).is_err());
}

#[test]
fn gallery_lists_members() {
    assert!(parse(&gallery_json()).as_array().unwrap().len() >= 8);
}
