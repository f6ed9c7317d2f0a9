use hzforms::verify;
use hzforms::Params;

#[test]
fn verify_all_is_deterministic_and_passes() {
    let params = Params::strict(3, 3, 7, 6).unwrap();
    let a = verify::verify_all(&params, 512);
    let b = verify::verify_all(&params, 512);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert!(a.all_passed, "{:?}", a.failed().collect::<Vec<_>>());
    assert_eq!(a.schema, verify::SCHEMA);
}
