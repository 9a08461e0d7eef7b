//! Seeded property harness: random configurations and assertions for the
//! classical-logic laws, random modules for the linking laws, and a direct
//! two-state oracle for `changes`.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::assertion::{Assertion, Pattern};
use crate::ast::{ClassBuilder, Expr, Ident, ModuleDef, Operand, Stmt};
use crate::ghost::eval_expr;
use crate::interpreter::{external_step, initial, record_from, run, step, Bounds, ExternalOutcome, Step, Trace};
use crate::runtime::{adapt, Address, Config, Value};
use crate::sat::{evaluate, EvalContext, History, Modules};
use crate::syntax::{parse_module, parse_stmts, print_assertion};

pub const SAMPLER_INTERNAL: &str = "
class Node {
  field next, val
  method link(n) { this.next := n; return this }
  method get() { n := this.next; return n }
  ghost last { if this.next = null then this else this.next.last }
  ghost acyclic { if this.next = null then true else this.next.acyclic }
}
class Box {
  field item
  method put(x) { this.item := x; return x }
  method take() { x := this.item; this.item := null; return x }
}
";

pub const SAMPLER_EXTERNAL: &str = "
class Agent {
  field held
  method grab(b) { x := b.take(); this.held := x; return x }
  method give(b) { x := this.held; r := b.put(x); return r }
  method keep(o) { this.held := o; return o }
}
";

/// Builds the `cyc` (a one-node cycle) and `acyc` fixtures.
pub const FIXTURE_PREFIX: &str = "cyc := new Node(null, 1); u := cyc.link(cyc); acyc := new Node(null, 2)";
const FIXTURE_STEPS: usize = 3;

const FIELDS: &[&str] = &["next", "val", "item", "held"];
const GHOSTS: &[&str] = &["last", "acyclic"];
const CLASSES: &[&str] = &["Node", "Box", "Agent", "Object"];
const METHODS: &[(&str, usize)] =
    &[("link", 1), ("get", 0), ("put", 1), ("take", 0), ("grab", 1), ("give", 1), ("keep", 1)];

fn id(s: &str) -> Ident {
    Ident::new(s)
}

/// A sampled judgment context: a position of a recorded run with the
/// free variables `x`, `y`, `z`, `S`, `T` bound in the top frame.
#[derive(Clone)]
pub struct Sample {
    pub trace: usize,
    pub position: usize,
    pub config: Config,
    pub history: History,
}

impl fmt::Debug for Sample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vars = &self.config.top().vars;
        let shown: Vec<String> =
            ["x", "y", "z", "S", "T"].iter().filter_map(|k| vars.get(&id(k)).map(|v| format!("{k}={v}"))).collect();
        write!(f, "trace {} position {} [{}]", self.trace, self.position, shown.join(" "))
    }
}

/// Random configurations drawn from seeded runs of the sampler modules,
/// and random assertions over them.
pub struct ConfigSampler {
    rng: ChaCha8Rng,
    modules: Modules,
    traces: Vec<Trace>,
    pub bounds: Bounds,
}

impl ConfigSampler {
    pub fn new(seed: u64) -> Self {
        let internal = parse_module(SAMPLER_INTERNAL).expect("sampler internal module parses");
        let external = parse_module(SAMPLER_EXTERNAL).expect("sampler external module parses");
        let modules = Modules::new(internal, external).expect("sampler modules are disjoint");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bounds = Bounds { fuel: 100, max_steps: 2_000, max_micro: 500, ..Bounds::default() };
        let traces = (0..16)
            .map(|_| {
                let driver = random_driver(&mut rng);
                record_from(&modules.internal, &modules.linked, initial(driver), &bounds)
            })
            .collect();
        ConfigSampler { rng, modules, traces, bounds }
    }

    pub fn modules(&self) -> &Modules {
        &self.modules
    }

    pub fn traces(&self) -> &[Trace] {
        &self.traces
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn context(&self, s: &Sample) -> EvalContext<'_> {
        EvalContext {
            modules: &self.modules,
            config: s.config.clone(),
            history: s.history.clone(),
            bounds: self.bounds,
        }
    }

    pub fn sample(&mut self) -> Sample {
        let t = self.rng.gen_range(0..self.traces.len());
        let trace = &self.traces[t];
        let position = self.rng.gen_range(FIXTURE_STEPS..trace.len());
        let mut config = (*trace.externals[position]).clone();
        let history = History::of_trace(trace, position);
        let addrs: Vec<Address> = config.heap.keys().copied().collect();
        // The top frame may belong to an external method; the fixtures live
        // in the driver's frame.
        for f in ["cyc", "acyc"] {
            if let Some(v) = config.stack[0].vars.get(&id(f)).cloned() {
                config.bind(id(f), v);
            }
        }
        for x in ["x", "y", "z"] {
            let v = if self.rng.gen_bool(0.1) {
                Value::Null
            } else {
                Value::Addr(*addrs.choose(&mut self.rng).expect("heap non-empty"))
            };
            config.bind(id(x), v);
        }
        for s in ["S", "T"] {
            let set: BTreeSet<Address> = addrs.iter().copied().filter(|_| self.rng.gen_bool(0.5)).collect();
            config.bind(id(s), Value::Set(set));
        }
        Sample { trace: t, position, config, history }
    }

    pub fn expr(&mut self, scope: &Scope) -> Expr {
        let rng = &mut self.rng;
        let var = Expr::Var(scope.objs.choose(rng).expect("scope non-empty").clone());
        match rng.gen_range(0..100) {
            0..=24 => var,
            25..=54 => var.field(FIELDS.choose(rng).expect("non-empty")),
            55..=64 => var.field("next").field(FIELDS.choose(rng).expect("non-empty")),
            65..=79 => Expr::GhostCall(Box::new(var), id(GHOSTS.choose(rng).expect("non-empty")), vec![]),
            80..=89 => Expr::Null,
            90..=96 => Expr::Nat(rng.gen_range(0..4)),
            _ => {
                if rng.gen_bool(0.5) {
                    Expr::True
                } else {
                    Expr::False
                }
            }
        }
    }

    fn pattern(&mut self, scope: &Scope) -> Pattern {
        if self.rng.gen_bool(0.3) {
            Pattern::Wild
        } else {
            Pattern::Expr(Expr::Var(scope.objs.choose(&mut self.rng).expect("non-empty").clone()))
        }
    }

    pub fn atom(&mut self, scope: &Scope) -> Assertion {
        match self.rng.gen_range(0..11) {
            0 | 1 => Assertion::Eq(self.expr(scope), self.expr(scope)),
            2 => Assertion::Expr(self.expr(scope)),
            3 => Assertion::HasClass(self.expr(scope), id(CLASSES.choose(&mut self.rng).expect("non-empty"))),
            4 if !scope.sets.is_empty() => {
                let s = scope.sets.choose(&mut self.rng).expect("non-empty").clone();
                Assertion::In(self.expr(scope), s)
            }
            5 => Assertion::Access(self.expr(scope), self.expr(scope)),
            6 => {
                let (m, arity) = *METHODS.choose(&mut self.rng).expect("non-empty");
                let arity = if self.rng.gen_bool(0.9) { arity } else { 1 - arity.min(1) };
                Assertion::Calls {
                    caller: self.pattern(scope),
                    method: id(m),
                    receiver: self.pattern(scope),
                    args: (0..arity).map(|_| self.pattern(scope)).collect(),
                }
            }
            7 => Assertion::External(self.expr(scope)),
            8 => Assertion::Internal(self.expr(scope)),
            9 => Assertion::Changes(self.expr(scope)),
            _ => Assertion::Eq(self.expr(scope), self.expr(scope)),
        }
    }

    /// A random assertion of at most the given connective depth.
    pub fn assertion(&mut self, scope: &mut Scope, depth: u32) -> Assertion {
        if depth == 0 || self.rng.gen_bool(0.25) {
            return self.atom(scope);
        }
        let d = depth - 1;
        loop {
            match self.rng.gen_range(0..14) {
                0 => return Assertion::not(self.assertion(scope, d)),
                1 | 2 => return Assertion::and(self.assertion(scope, d), self.assertion(scope, d)),
                3 | 4 => return Assertion::or(self.assertion(scope, d), self.assertion(scope, d)),
                5 => return Assertion::implies(self.assertion(scope, d), self.assertion(scope, d)),
                6 | 7 => {
                    let q = scope.fresh_obj();
                    let body = self.assertion(scope, d);
                    scope.objs.pop();
                    return if self.rng.gen_bool(0.5) {
                        Assertion::ForallObj(q, Box::new(body))
                    } else {
                        Assertion::ExistsObj(q, Box::new(body))
                    };
                }
                8 if scope.set_quantifiers > 0 => {
                    scope.set_quantifiers -= 1;
                    let q = scope.fresh_set();
                    let body = self.assertion(scope, d);
                    scope.sets.pop();
                    return if self.rng.gen_bool(0.5) {
                        Assertion::ForallSet(q, Box::new(body))
                    } else {
                        Assertion::ExistsSet(q, Box::new(body))
                    };
                }
                9 if !scope.sets.is_empty() => {
                    let s = scope.sets.choose(&mut self.rng).expect("non-empty").clone();
                    return Assertion::Space(Box::new(self.assertion(scope, d)), s);
                }
                10..=13 if scope.temporal > 0 => {
                    scope.temporal -= 1;
                    let b = Box::new(self.assertion(scope, d));
                    scope.temporal += 1;
                    return match self.rng.gen_range(0..4) {
                        0 => Assertion::Next(b),
                        1 => Assertion::Will(b),
                        2 => Assertion::Prev(b),
                        _ => Assertion::Was(b),
                    };
                }
                _ => continue,
            }
        }
    }
}

/// Variables an assertion generator may mention.
#[derive(Clone, Debug)]
pub struct Scope {
    pub objs: Vec<Ident>,
    pub sets: Vec<Ident>,
    /// Remaining set quantifiers the generator may introduce.
    pub set_quantifiers: u32,
    /// Remaining nesting of temporal operators.
    pub temporal: u32,
    counter: u32,
}

impl Default for Scope {
    fn default() -> Self {
        Scope {
            objs: ["x", "y", "z", "cyc", "acyc", "this"].iter().map(|s| id(s)).collect(),
            sets: vec![id("S"), id("T")],
            set_quantifiers: 1,
            temporal: 1,
            counter: 0,
        }
    }
}

impl Scope {
    fn fresh_obj(&mut self) -> Ident {
        self.counter += 1;
        let q = id(&format!("q{}", self.counter));
        self.objs.push(q.clone());
        q
    }

    fn fresh_set(&mut self) -> Ident {
        self.counter += 1;
        let q = id(&format!("R{}", self.counter));
        self.sets.push(q.clone());
        q
    }
}

/// The fixture prefix followed by a short random mix of allocations and
/// calls. At most five objects are allocated after the fixtures, so the
/// heap stays within the default set-quantifier cap.
fn random_driver(rng: &mut ChaCha8Rng) -> Vec<Stmt> {
    let mut src = String::from(FIXTURE_PREFIX);
    let mut nodes = vec!["cyc".to_string(), "acyc".to_string()];
    // Nodes allocated by the driver; only these are relinked, so the
    // fixtures keep their shape.
    let mut fresh: Vec<String> = Vec::new();
    let mut boxes: Vec<String> = Vec::new();
    let mut agents: Vec<String> = Vec::new();
    let mut all = nodes.clone();
    let mut allocs = 0;
    let mut k = 0;
    for _ in 0..rng.gen_range(2..10) {
        k += 1;
        let any = all.choose(rng).cloned().unwrap_or_else(|| "null".into());
        let choice = rng.gen_range(0..10);
        let stmt = if allocs < 5 && (choice < 3 || boxes.is_empty() || agents.is_empty()) {
            allocs += 1;
            let v = format!("d{k}");
            let s = match rng.gen_range(0..3) {
                0 => {
                    let s =
                        format!("{v} := new Node({}, {})", nodes.choose(rng).expect("non-empty"), rng.gen_range(0..4));
                    nodes.push(v.clone());
                    fresh.push(v.clone());
                    s
                }
                1 => {
                    boxes.push(v.clone());
                    format!("{v} := new Box({any})")
                }
                _ => {
                    agents.push(v.clone());
                    format!("{v} := new Agent({any})")
                }
            };
            all.push(v);
            s
        } else {
            let r = format!("r{k}");
            let s = match rng.gen_range(0..6) {
                0 if !fresh.is_empty() => {
                    format!(
                        "{r} := {}.link({})",
                        fresh.choose(rng).expect("non-empty"),
                        nodes.choose(rng).expect("non-empty")
                    )
                }
                1 => format!("{r} := {}.get()", nodes.choose(rng).expect("non-empty")),
                2 if !boxes.is_empty() => format!("{r} := {}.put({any})", boxes.choose(rng).expect("non-empty")),
                3 if !boxes.is_empty() && !agents.is_empty() => {
                    format!(
                        "{r} := {}.grab({})",
                        agents.choose(rng).expect("non-empty"),
                        boxes.choose(rng).expect("non-empty")
                    )
                }
                4 if !boxes.is_empty() && !agents.is_empty() => {
                    format!(
                        "{r} := {}.give({})",
                        agents.choose(rng).expect("non-empty"),
                        boxes.choose(rng).expect("non-empty")
                    )
                }
                _ if !agents.is_empty() => format!("{r} := {}.keep({any})", agents.choose(rng).expect("non-empty")),
                _ => format!("{r} := {}.get()", nodes.choose(rng).expect("non-empty")),
            };
            s
        };
        src.push_str("; ");
        src.push_str(&stmt);
    }
    parse_stmts(&src).expect("generated driver parses")
}

#[derive(Clone, Debug, Serialize)]
pub struct Discrepancy {
    pub trial: usize,
    pub sample: String,
    pub lhs: String,
    pub rhs: String,
    pub lhs_holds: bool,
    pub rhs_holds: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct EquivalenceReport {
    pub trials: usize,
    /// Instances left out because a judgment was withheld.
    pub skipped: usize,
    pub discrepancies: Vec<Discrepancy>,
}

/// Judges both assertions at `trials` sampled contexts and lists the
/// contexts where they disagree.
pub fn check_equivalence(
    lhs: &Assertion,
    rhs: &Assertion,
    sampler: &mut ConfigSampler,
    trials: usize,
) -> EquivalenceReport {
    let mut report = EquivalenceReport::default();
    for trial in 0..trials {
        let s = sampler.sample();
        compare(sampler, &s, trial, lhs, rhs, &mut report);
    }
    report
}

fn compare(
    sampler: &ConfigSampler,
    s: &Sample,
    trial: usize,
    lhs: &Assertion,
    rhs: &Assertion,
    report: &mut EquivalenceReport,
) {
    report.trials += 1;
    let ctx = sampler.context(s);
    let (l, r) = (evaluate(&ctx, lhs), evaluate(&ctx, rhs));
    if l.withheld || r.withheld {
        report.skipped += 1;
    } else if l.holds != r.holds {
        report.discrepancies.push(Discrepancy {
            trial,
            sample: format!("{s:?}"),
            lhs: print_assertion(lhs),
            rhs: print_assertion(rhs),
            lhs_holds: l.holds,
            rhs_holds: r.holds,
        });
    }
}

/// The laws exercised by the classical-logic suites.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Law {
    AndNotIsFalse,
    OrNotIsTrue,
    AndCommutes,
    OrCommutes,
    OrAssociates,
    AndDistributesOverOr,
    OrDistributesOverAnd,
    DeMorganAnd,
    DeMorganOr,
    NotExistsObj,
    NotExistsSet,
    NotForallObj,
    NotForallSet,
}

impl Law {
    pub const ALL: [Law; 13] = [
        Law::AndNotIsFalse,
        Law::OrNotIsTrue,
        Law::AndCommutes,
        Law::OrCommutes,
        Law::OrAssociates,
        Law::AndDistributesOverOr,
        Law::OrDistributesOverAnd,
        Law::DeMorganAnd,
        Law::DeMorganOr,
        Law::NotExistsObj,
        Law::NotExistsSet,
        Law::NotForallObj,
        Law::NotForallSet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Law::AndNotIsFalse => "A and not A == false",
            Law::OrNotIsTrue => "A or not A == true",
            Law::AndCommutes => "A and B == B and A",
            Law::OrCommutes => "A or B == B or A",
            Law::OrAssociates => "(A or B) or C == A or (B or C)",
            Law::AndDistributesOverOr => "(A or B) and C == (A and C) or (B and C)",
            Law::OrDistributesOverAnd => "(A and B) or C == (A or C) and (B or C)",
            Law::DeMorganAnd => "not (A and B) == not A or not B",
            Law::DeMorganOr => "not (A or B) == not A and not B",
            Law::NotExistsObj => "not exists x. A == forall x. not A",
            Law::NotExistsSet => "not exists S:SET. A == forall S:SET. not A",
            Law::NotForallObj => "not forall x. A == exists x. not A",
            Law::NotForallSet => "not forall S:SET. A == exists S:SET. not A",
        }
    }

    /// Both sides of the law for the given components. Quantifier laws bind
    /// `x` or `S` around `a`.
    pub fn instance(self, a: Assertion, b: Assertion, c: Assertion) -> (Assertion, Assertion) {
        use Assertion as A;
        let not = A::not;
        let (and, or) = (A::and, A::or);
        let (x, s) = (id("x"), id("S"));
        match self {
            Law::AndNotIsFalse => (and(a.clone(), not(a)), A::Expr(Expr::False)),
            Law::OrNotIsTrue => (or(a.clone(), not(a)), A::Expr(Expr::True)),
            Law::AndCommutes => (and(a.clone(), b.clone()), and(b, a)),
            Law::OrCommutes => (or(a.clone(), b.clone()), or(b, a)),
            Law::OrAssociates => (or(or(a.clone(), b.clone()), c.clone()), or(a, or(b, c))),
            Law::AndDistributesOverOr => (and(or(a.clone(), b.clone()), c.clone()), or(and(a, c.clone()), and(b, c))),
            Law::OrDistributesOverAnd => (or(and(a.clone(), b.clone()), c.clone()), and(or(a, c.clone()), or(b, c))),
            Law::DeMorganAnd => (not(and(a.clone(), b.clone())), or(not(a), not(b))),
            Law::DeMorganOr => (not(or(a.clone(), b.clone())), and(not(a), not(b))),
            Law::NotExistsObj => (not(A::ExistsObj(x.clone(), Box::new(a.clone()))), A::ForallObj(x, Box::new(not(a)))),
            Law::NotExistsSet => (not(A::ExistsSet(s.clone(), Box::new(a.clone()))), A::ForallSet(s, Box::new(not(a)))),
            Law::NotForallObj => (not(A::ForallObj(x.clone(), Box::new(a.clone()))), A::ExistsObj(x, Box::new(not(a)))),
            Law::NotForallSet => (not(A::ForallSet(s.clone(), Box::new(a.clone()))), A::ExistsSet(s, Box::new(not(a)))),
        }
    }

    fn wraps_set_quantifier(self) -> bool {
        matches!(self, Law::NotExistsSet | Law::NotForallSet)
    }
}

/// Outcome of one property suite.
#[derive(Clone, Debug, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub trials: usize,
    pub passed: usize,
    /// Instances where the property did not apply or a judgment was withheld.
    pub skipped: usize,
    pub failures: Vec<String>,
}

impl SuiteResult {
    fn new(name: &str) -> Self {
        SuiteResult { name: name.into(), trials: 0, passed: 0, skipped: 0, failures: Vec::new() }
    }

    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }

    fn record(&mut self, outcome: Option<Result<(), String>>) {
        self.trials += 1;
        match outcome {
            None => self.skipped += 1,
            Some(Ok(())) => self.passed += 1,
            Some(Err(e)) => self.failures.push(e),
        }
    }
}

const DEPTH: u32 = 3;

fn components(sampler: &mut ConfigSampler, set_quantifiers: u32) -> [Assertion; 3] {
    let gen = |sampler: &mut ConfigSampler| {
        let mut scope = Scope { set_quantifiers, ..Scope::default() };
        sampler.assertion(&mut scope, DEPTH)
    };
    [gen(sampler), gen(sampler), gen(sampler)]
}

/// Checks one law on `trials` random (context, components) instances.
pub fn law_suite(law: Law, seed: u64, trials: usize) -> SuiteResult {
    let mut sampler = ConfigSampler::new(seed);
    let mut result = SuiteResult::new(law.name());
    let set_quantifiers = if law.wraps_set_quantifier() { 0 } else { 1 };
    for trial in 0..trials {
        let s = sampler.sample();
        let [a, b, c] = components(&mut sampler, set_quantifiers);
        let (lhs, rhs) = law.instance(a, b, c);
        let mut rep = EquivalenceReport::default();
        compare(&sampler, &s, trial, &lhs, &rhs, &mut rep);
        result.record(if rep.skipped > 0 {
            None
        } else {
            Some(match rep.discrepancies.pop() {
                None => Ok(()),
                Some(d) => Err(format!("{:?}: {} is {}, {} is {}", s, d.lhs, d.lhs_holds, d.rhs, d.rhs_holds)),
            })
        });
    }
    result
}

/// Exactly one of `A` and `not A` holds.
pub fn excluded_middle_suite(seed: u64, trials: usize) -> SuiteResult {
    let mut sampler = ConfigSampler::new(seed);
    let mut result = SuiteResult::new("exactly one of A, not A");
    for _ in 0..trials {
        let s = sampler.sample();
        let [a, ..] = components(&mut sampler, 1);
        let ctx = sampler.context(&s);
        let (p, n) = (evaluate(&ctx, &a), evaluate(&ctx, &Assertion::not(a.clone())));
        result.record(if p.withheld || n.withheld {
            None
        } else if p.holds != n.holds {
            Some(Ok(()))
        } else {
            Some(Err(format!("{s:?}: {} and its negation both {}", print_assertion(&a), p.holds)))
        });
    }
    result
}

/// Whenever `A` and `A -> B` hold, `B` holds. Draws until `trials`
/// instances satisfy both premises; the other draws count as skipped.
pub fn modus_ponens_suite(seed: u64, trials: usize) -> SuiteResult {
    let mut sampler = ConfigSampler::new(seed);
    let mut result = SuiteResult::new("modus ponens");
    let mut applicable = 0;
    for _ in 0..trials * 50 {
        if applicable == trials {
            break;
        }
        let s = sampler.sample();
        let [a, b, _] = components(&mut sampler, 1);
        // Bias towards instances where the premise holds.
        let a = if sampler.rng().gen_bool(0.5) { Assertion::or(a, Assertion::Expr(Expr::True)) } else { a };
        let imp = Assertion::implies(a.clone(), b.clone());
        let ctx = sampler.context(&s);
        let (ja, ji, jb) = (evaluate(&ctx, &a), evaluate(&ctx, &imp), evaluate(&ctx, &b));
        let outcome = if ja.withheld || ji.withheld || jb.withheld || !(ja.holds && ji.holds) {
            None
        } else if jb.holds {
            Some(Ok(()))
        } else {
            Some(Err(format!(
                "{s:?}: {} and {} hold but not the conclusion",
                print_assertion(&a),
                print_assertion(&imp)
            )))
        };
        applicable += usize::from(outcome.is_some());
        result.record(outcome);
    }
    if applicable < trials {
        result.failures.push(format!("only {applicable} of {trials} instances satisfied the premises"));
    }
    result
}

/// The thirteen equivalences, excluded middle and modus ponens.
pub fn classical_suites(seed: u64, trials: usize) -> Vec<SuiteResult> {
    let mut out: Vec<SuiteResult> =
        Law::ALL.iter().enumerate().map(|(i, law)| law_suite(*law, seed.wrapping_add(i as u64), trials)).collect();
    out.push(excluded_middle_suite(seed.wrapping_add(100), trials));
    out.push(modus_ponens_suite(seed.wrapping_add(101), trials));
    out
}

/// `e = false` and `not e` differ when `e` is undefined. Searches for a
/// sampled context that tells them apart, using ghost expressions over the
/// `cyc` fixture and random expressions.
pub fn eq_false_vs_not(seed: u64, trials: usize) -> EquivalenceReport {
    let mut sampler = ConfigSampler::new(seed);
    let mut report = EquivalenceReport::default();
    for trial in 0..trials {
        let s = sampler.sample();
        let e = if trial % 2 == 0 {
            Expr::GhostCall(Box::new(Expr::var("cyc")), id("acyclic"), vec![])
        } else {
            sampler.expr(&Scope::default())
        };
        let lhs = Assertion::Eq(e.clone(), Expr::False);
        let rhs = Assertion::not(Assertion::Expr(e));
        compare(&sampler, &s, trial, &lhs, &rhs, &mut report);
        if !report.discrepancies.is_empty() {
            break;
        }
    }
    report
}

/// Direct two-state reading of `changes(e)`: `e` has a value now, the
/// top frame can take a step, and after that step `e` (read with the
/// current bindings) has a different value or none.
pub fn changes_oracle(modules: &Modules, cfg: &Config, e: &Expr, bounds: &Bounds) -> bool {
    let Ok(before) = eval_expr(&modules.linked, cfg, e, bounds.fuel) else { return false };
    let st = external_step(&modules.internal, &modules.linked, &cfg.top_only(), bounds.max_micro, false);
    let ExternalOutcome::Stepped(next) = st.outcome else { return false };
    eval_expr(&modules.linked, &adapt(cfg, &next), e, bounds.fuel) != Ok(before)
}

/// Compares `changes(e)` with [`changes_oracle`] on random contexts.
pub fn changes_suite(seed: u64, trials: usize) -> SuiteResult {
    let mut sampler = ConfigSampler::new(seed);
    let mut result = SuiteResult::new("changes(e) against two-state oracle");
    for _ in 0..trials {
        let s = sampler.sample();
        let e = sampler.expr(&Scope::default());
        let ctx = sampler.context(&s);
        let j = evaluate(&ctx, &Assertion::Changes(e.clone()));
        let want = changes_oracle(sampler.modules(), &s.config, &e, &sampler.bounds);
        result.record(if j.withheld {
            None
        } else if j.holds == want {
            Some(Ok(()))
        } else {
            Some(Err(format!("{s:?}: changes({}) is {}, oracle says {want}", crate::syntax::print_expr(&e), j.holds)))
        });
    }
    result
}

/// Random modules over a fixed pool of class names.
pub struct ModuleSampler {
    rng: ChaCha8Rng,
}

const CLASS_POOL: usize = 24;

impl ModuleSampler {
    pub fn new(seed: u64) -> Self {
        ModuleSampler { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn class_name(i: usize) -> String {
        format!("K{i}")
    }

    /// A random module defining exactly the given classes.
    pub fn module(&mut self, classes: &[usize]) -> ModuleDef {
        let arities: Vec<(usize, usize)> = classes.iter().map(|&c| (c, self.rng.gen_range(0..3))).collect();
        let mut m = ModuleDef::new();
        for &(c, nfields) in &arities {
            let mut b = ClassBuilder::new(Ident::new(&Self::class_name(c)));
            for f in 0..nfields {
                b.add_field(id(&format!("f{f}"))).expect("distinct fields");
            }
            for k in 0..self.rng.gen_range(1..3) {
                let params: Vec<Ident> = (0..self.rng.gen_range(0..3)).map(|p| id(&format!("p{p}"))).collect();
                let body = self.body(nfields, &params, &arities);
                b.add_method(id(&format!("m{k}")), params, body).expect("distinct methods");
            }
            if nfields > 0 && self.rng.gen_bool(0.5) {
                b.add_ghost(id("g"), vec![], Expr::var("this").field("f0")).expect("ghost name free");
            }
            let (n, d) = b.build();
            m.insert(n, d).expect("distinct classes");
        }
        m
    }

    fn body(&mut self, nfields: usize, params: &[Ident], arities: &[(usize, usize)]) -> Vec<Stmt> {
        let mut vars: Vec<Ident> = vec![Ident::this()];
        vars.extend(params.iter().cloned());
        let mut out = Vec::new();
        for t in 0..self.rng.gen_range(0..4) {
            let dest = id(&format!("t{t}"));
            let pick = |rng: &mut ChaCha8Rng, vars: &[Ident]| {
                if rng.gen_bool(0.2) {
                    Operand::Nat(rng.gen_range(0..3))
                } else {
                    Operand::Var(vars.choose(rng).expect("non-empty").clone())
                }
            };
            let s = match self.rng.gen_range(0..4) {
                0 if nfields > 0 => Stmt::FieldRead {
                    dest: dest.clone(),
                    source: Ident::this(),
                    field: id(&format!("f{}", self.rng.gen_range(0..nfields))),
                },
                1 if nfields > 0 => Stmt::FieldWrite {
                    target: Ident::this(),
                    field: id(&format!("f{}", self.rng.gen_range(0..nfields))),
                    value: pick(&mut self.rng, &vars),
                },
                2 => {
                    let &(c, n) = arities.choose(&mut self.rng).expect("non-empty");
                    Stmt::New {
                        dest: dest.clone(),
                        class: id(&Self::class_name(c)),
                        args: (0..n).map(|_| pick(&mut self.rng, &vars)).collect(),
                    }
                }
                _ => Stmt::Call {
                    dest: dest.clone(),
                    receiver: vars.choose(&mut self.rng).expect("non-empty").clone(),
                    method: id(&format!("m{}", self.rng.gen_range(0..2))),
                    args: (0..self.rng.gen_range(0..3)).map(|_| pick(&mut self.rng, &vars)).collect(),
                },
            };
            if !matches!(s, Stmt::FieldWrite { .. }) {
                vars.push(dest);
            }
            out.push(s);
        }
        out.push(Stmt::Return(pick_return(&mut self.rng, &vars)));
        out
    }

    /// Three pairwise disjoint modules.
    pub fn disjoint_triple(&mut self) -> [ModuleDef; 3] {
        let mut pool: Vec<usize> = (0..CLASS_POOL).collect();
        pool.shuffle(&mut self.rng);
        let mut take = |rng: &mut ChaCha8Rng| {
            let n = rng.gen_range(0..5);
            pool.drain(..n).collect::<Vec<_>>()
        };
        let (a, b, c) = (take(&mut self.rng), take(&mut self.rng), take(&mut self.rng));
        [self.module(&a), self.module(&b), self.module(&c)]
    }

    /// Two modules sharing at least one class name, and the shared names.
    pub fn overlapping_pair(&mut self) -> (ModuleDef, ModuleDef, Vec<String>) {
        let mut pool: Vec<usize> = (0..CLASS_POOL).collect();
        pool.shuffle(&mut self.rng);
        let shared: Vec<usize> = pool.drain(..self.rng.gen_range(1..3)).collect();
        let mut a: Vec<usize> = pool.drain(..self.rng.gen_range(0..3)).collect();
        let mut b: Vec<usize> = pool.drain(..self.rng.gen_range(0..3)).collect();
        a.extend(&shared);
        b.extend(&shared);
        let mut names: Vec<String> = shared.iter().map(|c| Self::class_name(*c)).collect();
        names.sort();
        (self.module(&a), self.module(&b), names)
    }

    /// A module and a configuration reached by running a random driver
    /// under it, together with a module disjoint from the first.
    pub fn step_instance(&mut self) -> (ModuleDef, Config, ModuleDef) {
        let mut pool: Vec<usize> = (0..CLASS_POOL).collect();
        pool.shuffle(&mut self.rng);
        let mine: Vec<usize> = pool.drain(..self.rng.gen_range(1..5)).collect();
        let theirs: Vec<usize> = pool.drain(..self.rng.gen_range(1..5)).collect();
        let m = self.module(&mine);
        let other = self.module(&theirs);
        let mut driver = Vec::new();
        let mut vars: Vec<Ident> = vec![Ident::this()];
        for k in 0..self.rng.gen_range(1..6) {
            let dest = id(&format!("d{k}"));
            let s = if k == 0 || self.rng.gen_bool(0.4) {
                let c = *mine.choose(&mut self.rng).expect("non-empty");
                let n = m.class(&id(&Self::class_name(c))).map_or(0, |d| d.fields.len());
                Stmt::New {
                    dest: dest.clone(),
                    class: id(&Self::class_name(c)),
                    args: (0..n)
                        .map(|_| Operand::Var(vars.choose(&mut self.rng).expect("non-empty").clone()))
                        .collect(),
                }
            } else {
                Stmt::Call {
                    dest: dest.clone(),
                    receiver: vars[1..].choose(&mut self.rng).cloned().unwrap_or_else(Ident::this),
                    method: id(&format!("m{}", self.rng.gen_range(0..2))),
                    args: (0..self.rng.gen_range(0..3))
                        .map(|_| Operand::Var(vars.choose(&mut self.rng).expect("non-empty").clone()))
                        .collect(),
                }
            };
            vars.push(dest);
            driver.push(s);
        }
        let k = self.rng.gen_range(0..12);
        let cfg = run(&m, &initial(driver), k).config;
        (m, cfg, other)
    }
}

fn pick_return(rng: &mut ChaCha8Rng, vars: &[Ident]) -> Operand {
    match rng.gen_range(0..10) {
        0 => Operand::Null,
        1 => Operand::Nat(rng.gen_range(0..3)),
        _ => Operand::Var(vars.choose(rng).expect("non-empty").clone()),
    }
}

/// Associativity and commutativity of linking on disjoint triples,
/// symmetric overlap errors, and preservation of one-module steps under
/// linking with a disjoint module.
pub fn check_linking_laws(sampler: &mut ModuleSampler, trials: usize) -> Vec<SuiteResult> {
    let mut laws = SuiteResult::new("linking associative and commutative");
    let mut overlap = SuiteResult::new("overlapping modules fail to link in both orders");
    let mut steps = SuiteResult::new("one-module steps preserved by linking");
    for _ in 0..trials {
        let [a, b, c] = sampler.disjoint_triple();
        let outcome = (|| -> Result<(), String> {
            let left = a.link(&b).and_then(|ab| ab.link(&c)).map_err(|e| e.to_string())?;
            let right = b.link(&c).and_then(|bc| a.link(&bc)).map_err(|e| e.to_string())?;
            if left != right {
                return Err("association changes the linked module".into());
            }
            if a.link(&b).map_err(|e| e.to_string())? != b.link(&a).map_err(|e| e.to_string())? {
                return Err("linking does not commute".into());
            }
            Ok(())
        })();
        laws.record(Some(outcome));

        let (p, q, shared) = sampler.overlapping_pair();
        let names = |r: Result<ModuleDef, crate::ast::OverlapError>| {
            r.err().map(|e| e.0.iter().map(|c| c.to_string()).collect::<Vec<_>>())
        };
        let (pq, qp) = (names(p.link(&q)), names(q.link(&p)));
        overlap.record(Some(if pq.as_ref() == Some(&shared) && qp.as_ref() == Some(&shared) {
            Ok(())
        } else {
            Err(format!("expected overlap {shared:?}, got {pq:?} and {qp:?}"))
        }));
    }

    let mut defined = 0;
    let mut attempts = 0;
    while defined < trials && attempts < trials * 50 {
        attempts += 1;
        let (m, cfg, other) = sampler.step_instance();
        let Step::Next(alone) = step(&m, &cfg) else { continue };
        defined += 1;
        let linked = m.link(&other).expect("disjoint by construction");
        let via_link = step(&linked, &cfg);
        steps.record(Some(if via_link == Step::Next(alone) {
            Ok(())
        } else {
            Err(format!("step differs under linking: {via_link:?}"))
        }));
    }
    if defined < trials {
        steps.failures.push(format!("only {defined} instances with a defined step in {attempts} attempts"));
    }
    vec![laws, overlap, steps]
}

/// Every suite run by `chainmail props`.
pub fn all_suites(seed: u64, trials: usize) -> Vec<SuiteResult> {
    let mut out = classical_suites(seed, trials);
    out.extend(check_linking_laws(&mut ModuleSampler::new(seed), trials.min(200)));
    out.push(changes_suite(seed, trials.min(100)));
    let w = eq_false_vs_not(seed, trials);
    let mut r = SuiteResult::new("e = false and not e differ on an undefined e (witness expected)");
    r.trials = w.trials;
    if w.discrepancies.is_empty() {
        r.failures.push("no witness found".into());
    } else {
        r.passed = 1;
    }
    out.push(r);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampler_is_deterministic() {
        let (mut a, mut b) = (ConfigSampler::new(7), ConfigSampler::new(7));
        for _ in 0..20 {
            let (sa, sb) = (a.sample(), b.sample());
            assert_eq!(sa.config, sb.config);
            let (mut s1, mut s2) = (Scope::default(), Scope::default());
            assert_eq!(a.assertion(&mut s1, 3), b.assertion(&mut s2, 3));
        }
    }

    #[test]
    fn sampled_heaps_fit_the_set_cap() {
        let s = ConfigSampler::new(3);
        for t in s.traces() {
            assert!(t.len() > FIXTURE_STEPS);
            for c in &t.externals {
                assert!(c.heap.len() <= s.bounds.set_cap);
            }
        }
    }

    #[test]
    fn fixtures_present_at_sampled_positions() {
        let mut s = ConfigSampler::new(11);
        for _ in 0..50 {
            let sample = s.sample();
            let vars = &sample.config.top().vars;
            assert!(vars.contains_key(&id("cyc")) && vars.contains_key(&id("acyc")));
        }
    }

    #[test]
    fn reflexivity_has_no_discrepancy() {
        let mut s = ConfigSampler::new(5);
        let mut scope = Scope::default();
        let a = s.assertion(&mut scope, 3);
        let r = check_equivalence(&a, &a, &mut s, 50);
        assert!(r.discrepancies.is_empty());
    }

    /// The misprinted distributivity and De Morgan variants are not laws; the
    /// sampler must find counterexamples to each.
    #[test]
    fn misprinted_variants_are_refuted() {
        use Assertion as A;
        type Form = fn(Assertion, Assertion, Assertion) -> (Assertion, Assertion);
        let forms: [(&str, Form); 3] = [
            ("(A or B) and C == (A and B) or (A and C)", |a, b, c| {
                (A::and(A::or(a.clone(), b.clone()), c.clone()), A::or(A::and(a.clone(), b), A::and(a, c)))
            }),
            ("(A and B) or C == (A or B) and (A or C)", |a, b, c| {
                (A::or(A::and(a.clone(), b.clone()), c.clone()), A::and(A::or(a.clone(), b), A::or(a, c)))
            }),
            ("not (A and B) == not A or not C", |a, b, c| (A::not(A::and(a.clone(), b)), A::or(A::not(a), A::not(c)))),
        ];
        for (name, form) in forms {
            let mut sampler = ConfigSampler::new(21);
            let refuted = (0..500).any(|trial| {
                let s = sampler.sample();
                let [a, b, c] = components(&mut sampler, 1);
                let (lhs, rhs) = form(a, b, c);
                let mut rep = EquivalenceReport::default();
                compare(&sampler, &s, trial, &lhs, &rhs, &mut rep);
                !rep.discrepancies.is_empty()
            });
            assert!(refuted, "{name} survived 500 trials");
        }
    }
}
