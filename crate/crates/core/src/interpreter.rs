//! Small-step operational semantics, bounded runs, two-module (external)
//! steps and trace recording.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::ast::{Ident, ModuleDef, Operand, OverlapError, Stmt, OBJECT_CLASS};
use crate::runtime::{Address, Config, Continuation, Frame, Heap, Object, Value};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StuckReason {
    /// Field access on an object whose class differs from the receiver's.
    EncapsulationViolation,
    Unbound(String),
    NoSuchMethod(String),
    NoSuchClass(String),
    NoSuchField(String),
    ArityMismatch(String),
    /// Return into a frame that is not waiting on a call, or a waiting top frame.
    MarkerMismatch,
    /// Method body ran out of statements without a `return`.
    MissingReturn,
    /// Receiver is null, a set, a number without that primitive, or dangling.
    BadReceiver(String),
    /// Attempt to store a set or boolean in a field.
    BadFieldValue,
    BudgetExhausted,
}

impl fmt::Display for StuckReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StuckReason::EncapsulationViolation => f.write_str("encapsulation violation"),
            StuckReason::Unbound(x) => write!(f, "unbound variable `{x}`"),
            StuckReason::NoSuchMethod(m) => write!(f, "no such method `{m}`"),
            StuckReason::NoSuchClass(c) => write!(f, "no such class `{c}`"),
            StuckReason::NoSuchField(x) => write!(f, "no such field `{x}`"),
            StuckReason::ArityMismatch(m) => write!(f, "wrong number of arguments for `{m}`"),
            StuckReason::MarkerMismatch => f.write_str("return without a waiting caller"),
            StuckReason::MissingReturn => f.write_str("method body ended without return"),
            StuckReason::BadReceiver(x) => write!(f, "bad receiver `{x}`"),
            StuckReason::BadFieldValue => f.write_str("sets and booleans cannot be stored in fields"),
            StuckReason::BudgetExhausted => f.write_str("step budget exhausted"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    Next(Config),
    Terminated,
    Stuck(StuckReason),
}

/// Execution limits shared by the interpreter, ghost evaluation and the
/// assertion checker.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Bounds {
    pub max_steps: usize,
    pub max_micro: usize,
    pub fuel: u32,
    pub set_cap: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { max_steps: 100_000, max_micro: 10_000, fuel: 1000, set_cap: 12 }
    }
}

fn operand_value(frame: &Frame, op: &Operand) -> Result<Value, StuckReason> {
    match op {
        Operand::Null => Ok(Value::Null),
        Operand::Nat(n) => Ok(Value::Nat(*n)),
        Operand::Var(x) => frame.vars.get(x).cloned().ok_or_else(|| StuckReason::Unbound(x.to_string())),
    }
}

fn var_addr(cfg: &Config, x: &Ident) -> Result<Address, StuckReason> {
    match cfg.top().vars.get(x) {
        None => Err(StuckReason::Unbound(x.to_string())),
        Some(Value::Addr(a)) if cfg.heap.contains_key(a) => Ok(*a),
        Some(_) => Err(StuckReason::BadReceiver(x.to_string())),
    }
}

/// Side condition of the field rules: the accessed object and the current
/// receiver belong to the same class.
fn same_class_as_this(cfg: &Config, a: Address) -> Result<(), StuckReason> {
    let this_class = cfg.top().this().and_then(Value::addr).and_then(|t| cfg.object(t)).map(|o| &o.class);
    match (this_class, cfg.object(a)) {
        (Some(c), Some(o)) if *c == o.class => Ok(()),
        _ => Err(StuckReason::EncapsulationViolation),
    }
}

fn storable(v: &Value) -> bool {
    matches!(v, Value::Null | Value::Addr(_) | Value::Nat(_))
}

/// Built-ins on number receivers: `n.plus(m)`, `n.minus(m)` (truncated at
/// zero) and `n.select(a, b)`, which yields `a` when `n` is zero and `b`
/// otherwise.
fn primitive(n: u64, method: &Ident, args: &[Value]) -> Option<Value> {
    match (method.as_str(), args) {
        ("plus", [Value::Nat(m)]) => Some(Value::Nat(n.saturating_add(*m))),
        ("minus", [Value::Nat(m)]) => Some(Value::Nat(n.saturating_sub(*m))),
        ("select", [a, b]) => Some(if n == 0 { a.clone() } else { b.clone() }),
        _ => None,
    }
}

/// One reduction step of `cfg` under module `m`.
pub fn step(m: &ModuleDef, cfg: &Config) -> Step {
    step_owned(m, cfg.clone())
}

pub(crate) fn step_owned(m: &ModuleDef, mut cfg: Config) -> Step {
    match try_step(m, &mut cfg) {
        Ok(true) => Step::Next(cfg),
        Ok(false) => Step::Terminated,
        Err(r) => Step::Stuck(r),
    }
}

/// Applies one rule in place. `Ok(false)` means the configuration is final.
fn try_step(m: &ModuleDef, cfg: &mut Config) -> Result<bool, StuckReason> {
    let depth = cfg.stack.len();
    if depth == 0 {
        return Ok(false);
    }
    if cfg.top().contn.pending.is_some() {
        return Err(StuckReason::MarkerMismatch);
    }
    let stmt = match cfg.top().contn.head() {
        Some(s) => s.clone(),
        None if depth == 1 => return Ok(false),
        None => return Err(StuckReason::MissingReturn),
    };
    match stmt {
        Stmt::FieldRead { dest, source, field } => {
            let a = var_addr(cfg, &source)?;
            same_class_as_this(cfg, a)?;
            let v =
                cfg.heap[&a].fields.get(&field).cloned().ok_or_else(|| StuckReason::NoSuchField(field.to_string()))?;
            let top = cfg.top_mut();
            top.vars.insert(dest, v);
            top.contn.advance();
        }
        Stmt::FieldWrite { target, field, value } => {
            let a = var_addr(cfg, &target)?;
            same_class_as_this(cfg, a)?;
            let v = operand_value(cfg.top(), &value)?;
            if !storable(&v) {
                return Err(StuckReason::BadFieldValue);
            }
            let class = cfg.heap[&a].class.clone();
            let declared = m.class(&class).is_some_and(|d| d.fields.contains(&field));
            if !declared {
                return Err(StuckReason::NoSuchField(field.to_string()));
            }
            cfg.heap_mut().get_mut(&a).expect("checked above").fields.insert(field, v);
            cfg.top_mut().contn.advance();
        }
        Stmt::Call { dest, receiver, method, args } => {
            let top = cfg.top();
            let recv = top.vars.get(&receiver).cloned().ok_or_else(|| StuckReason::Unbound(receiver.to_string()))?;
            let argv = args.iter().map(|o| operand_value(top, o)).collect::<Result<Vec<_>, _>>()?;
            match recv {
                Value::Addr(a) => {
                    let class = cfg
                        .object(a)
                        .map(|o| o.class.clone())
                        .ok_or_else(|| StuckReason::BadReceiver(receiver.to_string()))?;
                    let decl = m
                        .lookup_method(&class, &method)
                        .ok_or_else(|| StuckReason::NoSuchMethod(format!("{class}.{method}")))?;
                    if decl.params.len() != argv.len() {
                        return Err(StuckReason::ArityMismatch(format!("{class}.{method}")));
                    }
                    let mut vars = BTreeMap::new();
                    vars.insert(Ident::this(), Value::Addr(a));
                    vars.extend(decl.params.iter().cloned().zip(argv));
                    let callee = Frame::new(Continuation::new(Arc::clone(&decl.body)), vars);
                    let caller = cfg.top_mut();
                    caller.contn.advance();
                    caller.contn.pending = Some(dest);
                    cfg.stack.push(callee);
                }
                Value::Nat(n) => {
                    let v =
                        primitive(n, &method, &argv).ok_or_else(|| StuckReason::BadReceiver(receiver.to_string()))?;
                    let top = cfg.top_mut();
                    top.vars.insert(dest, v);
                    top.contn.advance();
                }
                _ => return Err(StuckReason::BadReceiver(receiver.to_string())),
            }
        }
        Stmt::New { dest, class, args } => {
            let decl = m.class(&class).ok_or_else(|| StuckReason::NoSuchClass(class.to_string()))?;
            if args.len() > decl.fields.len() {
                return Err(StuckReason::ArityMismatch(format!("new {class}")));
            }
            let mut fields = BTreeMap::new();
            for (i, f) in decl.fields.iter().enumerate() {
                let v = match args.get(i) {
                    Some(op) => operand_value(cfg.top(), op)?,
                    None => Value::Null,
                };
                if !storable(&v) {
                    return Err(StuckReason::BadFieldValue);
                }
                fields.insert(f.clone(), v);
            }
            let a = cfg.alloc(Object { class, fields });
            let top = cfg.top_mut();
            top.vars.insert(dest, Value::Addr(a));
            top.contn.advance();
        }
        Stmt::Return(op) => {
            if depth == 1 {
                return Ok(false);
            }
            let v = operand_value(cfg.top(), &op)?;
            cfg.stack.pop();
            let caller = cfg.top_mut();
            let x = caller.contn.pending.take().ok_or(StuckReason::MarkerMismatch)?;
            caller.vars.insert(x, v);
        }
    }
    Ok(true)
}

/// How a bounded run ended.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RunOutcome {
    Terminated,
    Stuck(StuckReason),
    /// A zero budget: no step was attempted.
    NotAttempted,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub config: Config,
    pub outcome: RunOutcome,
    pub steps: usize,
}

/// Steps until final, stuck, or `max_steps` reductions have been taken.
pub fn run(m: &ModuleDef, cfg: &Config, max_steps: usize) -> RunResult {
    let mut cur = cfg.clone();
    if max_steps == 0 {
        return RunResult { config: cur, outcome: RunOutcome::NotAttempted, steps: 0 };
    }
    for steps in 0..max_steps {
        let mut next = cur.clone();
        match try_step(m, &mut next) {
            Ok(true) => cur = next,
            Ok(false) => return RunResult { config: cur, outcome: RunOutcome::Terminated, steps },
            Err(r) => return RunResult { config: cur, outcome: RunOutcome::Stuck(r), steps },
        }
    }
    RunResult { config: cur, outcome: RunOutcome::Stuck(StuckReason::BudgetExhausted), steps: max_steps }
}

/// A configuration is external when its receiver's class is not defined by
/// the internal module. A receiver that is missing from the heap (possible
/// after restriction) has no class, so it counts as external.
pub fn is_external(internal: &ModuleDef, cfg: &Config) -> bool {
    let class = cfg.top().this().and_then(Value::addr).and_then(|a| cfg.object(a)).map(|o| &o.class);
    !class.is_some_and(|c| internal.contains(c))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExternalOutcome {
    /// Reached the next external configuration.
    Stepped(Config),
    Terminated,
    Stuck(StuckReason),
    /// The starting configuration is internal, so no two-module step exists.
    NotExternal,
}

#[derive(Clone, Debug)]
pub struct ExternalStep {
    pub outcome: ExternalOutcome,
    /// Internal configurations passed through, in order.
    pub micro: Vec<Config>,
    pub steps: usize,
}

/// One step of two-module execution: from an external configuration, run
/// the linked module through any internal burst until the next external
/// configuration.
pub fn external_step(
    internal: &ModuleDef,
    linked: &ModuleDef,
    cfg: &Config,
    max_micro: usize,
    record_micro: bool,
) -> ExternalStep {
    let mut micro = Vec::new();
    if !is_external(internal, cfg) {
        return ExternalStep { outcome: ExternalOutcome::NotExternal, micro, steps: 0 };
    }
    let mut cur = cfg.clone();
    for steps in 1..=max_micro {
        match try_step(linked, &mut cur) {
            Ok(true) => {}
            Ok(false) => return ExternalStep { outcome: ExternalOutcome::Terminated, micro, steps },
            Err(r) => return ExternalStep { outcome: ExternalOutcome::Stuck(r), micro, steps },
        }
        if is_external(internal, &cur) {
            return ExternalStep { outcome: ExternalOutcome::Stepped(cur), micro, steps };
        }
        if record_micro {
            micro.push(cur.clone());
        }
    }
    ExternalStep { outcome: ExternalOutcome::Stuck(StuckReason::BudgetExhausted), micro, steps: max_micro }
}

/// The initial configuration for a driver: one `Object` and one frame whose
/// receiver is that object.
pub fn initial(driver: Vec<Stmt>) -> Config {
    let mut heap = Heap::new();
    let a = Address(0);
    heap.insert(a, Object { class: Ident::new(OBJECT_CLASS), fields: BTreeMap::new() });
    let mut vars = BTreeMap::new();
    vars.insert(Ident::this(), Value::Addr(a));
    Config::new(vec![Frame::new(Continuation::from_stmts(driver), vars)], heap)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceEnd {
    Terminated,
    /// The run was cut short; earlier positions are still valid.
    Truncated(StuckReason),
}

/// A recorded two-module run: the external configurations, and for each
/// consecutive pair, the internal configurations in between.
#[derive(Clone, Debug)]
pub struct Trace {
    pub externals: Vec<Arc<Config>>,
    pub bursts: Vec<Vec<Arc<Config>>>,
    pub end: TraceEnd,
    pub steps: usize,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.externals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.externals.is_empty()
    }
}

/// Runs `driver` against the internal and external modules, recording every
/// external configuration.
pub fn record_trace(
    internal: &ModuleDef,
    external: &ModuleDef,
    driver: Vec<Stmt>,
    bounds: &Bounds,
) -> Result<Trace, OverlapError> {
    let linked = internal.link(external)?;
    Ok(record_from(internal, &linked, initial(driver), bounds))
}

pub fn record_from(internal: &ModuleDef, linked: &ModuleDef, start: Config, bounds: &Bounds) -> Trace {
    let mut externals = vec![Arc::new(start)];
    let mut bursts = Vec::new();
    let mut steps = 0;
    let end = loop {
        let remaining = bounds.max_steps.saturating_sub(steps);
        if remaining == 0 {
            break TraceEnd::Truncated(StuckReason::BudgetExhausted);
        }
        let cur = externals.last().expect("non-empty");
        let st = external_step(internal, linked, cur, bounds.max_micro.min(remaining), true);
        steps += st.steps;
        let micro: Vec<Arc<Config>> = st.micro.into_iter().map(Arc::new).collect();
        match st.outcome {
            ExternalOutcome::Stepped(next) => {
                bursts.push(micro);
                externals.push(Arc::new(next));
            }
            ExternalOutcome::Terminated => break TraceEnd::Terminated,
            ExternalOutcome::Stuck(r) => break TraceEnd::Truncated(r),
            ExternalOutcome::NotExternal => {
                break TraceEnd::Truncated(StuckReason::MarkerMismatch);
            }
        }
    };
    Trace { externals, bursts, end, steps }
}
