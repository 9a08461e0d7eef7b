use std::collections::BTreeSet;

use proptest::prelude::*;
use proptest::sample::subsequence;

use chainmail::assertion::{Assertion, NamedAssertion, Spec};
use chainmail::checker::{check_run, CheckOptions, Status};
use chainmail::corpus::{exemplars, FILES};
use chainmail::dump::{config_from_str, config_to_string};
use chainmail::props::{ConfigSampler, ModuleSampler, Scope};
use chainmail::runtime::{adapt, restrict, Address};
use chainmail::sat::{counterexample, evaluate, replay};
use chainmail::syntax::{parse_assertion, parse_module, print_assertion, print_module};

fn config() -> ProptestConfig {
    ProptestConfig { cases: 64, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn assertion_print_parse_round_trip(seed in any::<u64>()) {
        let mut s = ConfigSampler::new(seed % 8);
        for _ in 0..(seed % 5) {
            s.sample();
        }
        let a = s.assertion(&mut Scope::default(), 4);
        let text = print_assertion(&a);
        let back = parse_assertion(&text).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?;
        prop_assert_eq!(back, a, "{}", text);
    }

    #[test]
    fn module_print_parse_round_trip(seed in any::<u64>(), classes in subsequence((0..24usize).collect::<Vec<_>>(), 1..6)) {
        let mut s = ModuleSampler::new(seed);
        let m = s.module(&classes);
        let text = print_module(&m);
        prop_assert_eq!(parse_module(&text).unwrap(), m, "{}", text);
    }

    #[test]
    fn config_json_round_trip(seed in any::<u64>()) {
        let mut s = ConfigSampler::new(seed % 4);
        for _ in 0..8 {
            let c = s.sample().config;
            prop_assert_eq!(config_from_str(&config_to_string(&c)).unwrap(), c);
        }
    }

    #[test]
    fn restrict_keeps_exactly_the_chosen_records(seed in any::<u64>(), pick in any::<u64>()) {
        let mut s = ConfigSampler::new(seed % 4);
        let c = s.sample().config;
        let mut keep: BTreeSet<Address> =
            c.heap.keys().enumerate().filter(|(i, _)| pick >> (i % 64) & 1 == 1).map(|(_, a)| *a).collect();
        keep.insert(Address(9999));
        let r = restrict(&c, &keep);
        let dom: BTreeSet<Address> = r.heap.keys().copied().collect();
        let want: BTreeSet<Address> = c.heap.keys().copied().filter(|a| keep.contains(a)).collect();
        prop_assert_eq!(&dom, &want);
        for a in dom {
            prop_assert_eq!(r.object(a), c.object(a));
        }
        prop_assert_eq!(&r.stack, &c.stack);
    }

    #[test]
    fn adapt_keeps_current_bindings_and_future_heap(seed in any::<u64>()) {
        let mut s = ConfigSampler::new(seed % 4);
        let (now, later) = (s.sample().config, s.sample().config);
        let a = adapt(&now, &later);
        prop_assert!(std::sync::Arc::ptr_eq(&a.heap, &later.heap));
        prop_assert_eq!(a.stack.len(), later.stack.len());
        prop_assert_eq!(&a.stack[..a.stack.len() - 1], &later.stack[..later.stack.len() - 1]);
        for (x, v) in &now.top().vars {
            prop_assert_eq!(a.top().vars.get(x), Some(v));
        }
        prop_assert_eq!(a.top().contn.stmts().len(), later.top().contn.stmts().len());
        // Renamed locals keep later's values.
        for (x, v) in &later.top().vars {
            if !now.top().vars.contains_key(x) {
                prop_assert_eq!(a.top().vars.get(x), Some(v));
            }
        }
    }

    #[test]
    fn failing_universals_yield_replayable_witnesses(seed in any::<u64>()) {
        let mut s = ConfigSampler::new(seed % 8);
        let sample = s.sample();
        let mut scope = Scope::default();
        let body = s.assertion(&mut scope, 3);
        let a = Assertion::ForallObj("w".into(), Box::new(Assertion::ForallObj("x".into(), Box::new(body))));
        let ctx = s.context(&sample);
        let j = evaluate(&ctx, &a);
        if !j.withheld && !j.holds {
            let bindings = counterexample(&ctx, &a).expect("a false universal has a counterexample");
            prop_assert_eq!(bindings.len(), 2);
            prop_assert_eq!(replay(&ctx, &a, &bindings), Some(false));
        }
    }

    #[test]
    fn judgments_are_deterministic(seed in any::<u64>()) {
        let mut s1 = ConfigSampler::new(seed % 8);
        let mut s2 = ConfigSampler::new(seed % 8);
        let (x, y) = (s1.sample(), s2.sample());
        let a = s1.assertion(&mut Scope::default(), 3);
        let b = s2.assertion(&mut Scope::default(), 3);
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(evaluate(&s1.context(&x), &a), evaluate(&s2.context(&y), &b));
    }
}

#[test]
fn corpus_modules_round_trip() {
    for (name, src) in FILES.iter().filter(|(n, _)| n.ends_with(".loo")) {
        let m = parse_module(src).unwrap();
        assert_eq!(parse_module(&print_module(&m)).unwrap(), m, "{name}");
    }
}

#[test]
fn excluded_middle_never_violated_on_corpus_runs() {
    for ex in exemplars() {
        let p = ex.parse().unwrap();
        let spec = Spec {
            name: Some("tautologies".into()),
            assertions: p
                .spec
                .assertions
                .iter()
                .map(|na| NamedAssertion {
                    name: na.name.clone(),
                    assertion: Assertion::or(na.assertion.clone(), Assertion::not(na.assertion.clone())),
                })
                .collect(),
        };
        let (v, _) = check_run(&p.internal, &p.external, p.driver, &spec, &CheckOptions::default()).unwrap();
        assert_eq!(v.status, Status::NoViolationFound, "{}", ex.name);
    }
}

#[test]
fn verdicts_do_not_depend_on_thread_count() {
    for ex in exemplars() {
        let p = ex.parse().unwrap();
        let run = |threads| {
            let opts = CheckOptions { threads, check_internal: true, ..CheckOptions::default() };
            check_run(&p.internal, &p.external, p.driver.clone(), &p.spec, &opts).unwrap().0
        };
        assert_eq!(run(1), run(4), "{}", ex.name);
    }
}
