use chainmail::corpus::file;
use chainmail_demo::{check_json, eval_json, examples_json, run_json};
use serde_json::Value;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn run_lists_every_position() {
    let r = parse(&run_json(file("bank_v1.loo"), file("bank_clients.loo"), file("bank_transfer.drv"), 1000).unwrap());
    assert_eq!(r["end"], "terminated");
    assert_eq!(r["positions"].as_array().unwrap().len(), 6);
}

#[test]
fn check_reports_lockpick_violation() {
    let r = parse(
        &check_json(file("safe_v2.loo"), file("safe_clients.loo"), file("safe_lockpick.drv"), file("safe.cmail"), 1000)
            .unwrap(),
    );
    assert_eq!(r["status"], "violated");
    assert_eq!(r["witnesses"][0]["position"], 3);
}

#[test]
fn eval_judges_one_position() {
    let (i, x, d) = (file("bank_v1.loo"), file("bank_clients.loo"), file("bank_transfer.drv"));
    let at = |p, a| parse(&eval_json(i, x, d, p, a, 1000).unwrap());
    assert_eq!(at(3, "exists a. a : Account")["holds"], true);
    assert_eq!(at(0, "exists a. a : Account")["holds"], false);
    assert!(eval_json(i, x, d, 99, "true", 1000).unwrap_err().contains("past the end"));
}

#[test]
fn errors_name_the_faulty_input() {
    let e = check_json("class {", "", "", "", 10).unwrap_err();
    assert!(e.starts_with("internal module"), "{e}");
    let e = run_json("", "", "x := ", 10).unwrap_err();
    assert!(e.starts_with("driver"), "{e}");
}

#[test]
fn examples_carry_sources() {
    let v = parse(&examples_json());
    let list = v.as_array().unwrap();
    assert!(list.len() >= 10);
    assert!(list.iter().all(|e| e["driver"].as_str().is_some_and(|d| !d.is_empty())));
}
