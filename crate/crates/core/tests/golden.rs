use chainmail::corpus::file;
use chainmail::dump::config_from_str;
use chainmail::interpreter::{external_step, initial, Bounds, ExternalOutcome};
use chainmail::runtime::{Address, Config, Value};
use chainmail::sat::{evaluate, EvalContext, Modules};
use chainmail::syntax::{parse_assertion, parse_expr, parse_module, parse_stmts};

fn bank(v2: bool) -> Modules {
    let internal = parse_module(file(if v2 { "bank_v2.loo" } else { "bank_v1.loo" })).unwrap();
    Modules::new(internal, parse_module(file("bank_clients.loo")).unwrap()).unwrap()
}

fn sigma(n: u8) -> Config {
    config_from_str(file(&format!("bank_sigma{n}.json"))).unwrap()
}

fn holds(m: &Modules, cfg: &Config, src: &str) -> bool {
    let j = evaluate(&EvalContext::new(m, cfg.clone(), Bounds::default()), &parse_assertion(src).unwrap());
    assert!(!j.withheld, "{src} withheld");
    j.holds
}

#[test]
fn ledger_balances_match_field_balances() {
    let (ba1, ba2) = (bank(false), bank(true));
    let (s1, s2) = (sigma(1), sigma(2));
    for a in ["a2", "a3", "a4"] {
        let e = parse_expr(&format!("{a}.balance")).unwrap();
        let v1 = chainmail::ghost::eval_expr(&ba1.linked, &s1, &e, 100).unwrap();
        let v2 = chainmail::ghost::eval_expr(&ba2.linked, &s2, &e, 100).unwrap();
        assert_eq!(v1, v2, "{a}");
    }
}

#[test]
fn deposit_is_one_external_step() {
    let m = bank(true);
    let s4 = sigma(4);
    let r = external_step(&m.internal, &m.linked, &s4, 1000, true);
    let ExternalOutcome::Stepped(s5) = r.outcome else { panic!("{:?}", r.outcome) };
    assert!(r.steps > 1);
    assert!(s5.top().contn.stmts().is_empty());
    assert_eq!(s5.top().vars[&"r".into()], Value::Addr(Address(2)));
    assert!(holds(&m, &s5, "a2.balance = 420"));
    assert!(holds(&m, &s5, "a3.balance = 40"));
}

#[test]
fn call_judgments_at_sigma4() {
    let m = bank(true);
    let s4 = sigma(4);
    assert!(holds(&m, &s4, "a2.balance = 60"));
    assert!(holds(&m, &s4, "calls(u91, deposit, a2, [a3, 360])"));
    assert!(!holds(&m, &s4, "calls(u91, deposit, a3, [a2, 360])"));
    // `will` is strict, so a change made by the very next step is seen by
    // `changes` at the current position rather than by `will changes`.
    assert!(holds(&m, &s4, "calls(_, deposit, a2, [_, _]) -> changes(a2.balance) or will changes(a2.balance)"));
    assert!(!holds(&m, &s4, "will changes(a2.balance)"));
    assert!(!holds(&m, &s4, "next a2.balance = 60"));
}

#[test]
fn quantifier_examples() {
    let m = bank(false);
    let s1 = sigma(1);
    assert!(holds(&m, &s1, "exists x. x : Account"));
    assert!(!holds(&m, &s1, "forall x. false"));
    assert!(holds(&m, &s1, "exists S:SET. in S: exists o. access(o, a4)"));
    assert!(holds(&m, &s1, "forall a. a : Account -> a.myBank = b1"));
}

#[test]
fn space_with_empty_set() {
    let m = bank(false);
    let mut s1 = sigma(1);
    s1.bind("E".into(), Value::Set(Default::default()));
    assert!(holds(&m, &s1, "in E: true"));
    assert!(!holds(&m, &s1, "in E: exists o. o = o"));
}

#[test]
fn changes_examples() {
    let cell = parse_module("class Cell { field v  method set(n) { this.v := n; return n } }").unwrap();
    let m = Modules::new(cell, Default::default()).unwrap();
    let start = initial(parse_stmts("c := new Cell(0); r := c.set(3); s := c.set(3)").unwrap());
    let t = chainmail::interpreter::record_from(&m.internal, &m.linked, start, &Bounds::default());
    let at = |p: usize, src: &str| {
        let j = evaluate(&EvalContext::at(&m, &t, p, Bounds::default()), &parse_assertion(src).unwrap());
        assert!(!j.withheld);
        j.holds
    };
    assert!(at(1, "changes(c.v)"));
    assert!(!at(2, "changes(c.v)"));
    assert!(!at(1, "changes(true)"));
    assert!(!at(t.len() - 1, "changes(c.v)"));
    assert!(!at(0, "prev true"));
    assert!(at(2, "was c.v = 0"));
    assert!(!at(1, "was c.v = 3"));
}
