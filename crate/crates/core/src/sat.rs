//! Satisfaction of assertions by a configuration within a recorded run.

use std::cell::Cell;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::Serialize;

use crate::assertion::{desugar_changes, Assertion, Pattern};
use crate::ast::{Expr, Ident, ModuleDef, Operand, OverlapError, Stmt};
use crate::ghost::{eval_expr, Undef};
use crate::interpreter::{external_step, Bounds, ExternalOutcome, Trace};
use crate::runtime::{adapt, class_of_value, fresh_name, restrict, Address, Config, Value};

/// The internal module under scrutiny, the external module it is linked
/// with, and their union.
#[derive(Clone, Debug)]
pub struct Modules {
    pub internal: ModuleDef,
    pub external: ModuleDef,
    pub linked: ModuleDef,
}

impl Modules {
    pub fn new(internal: ModuleDef, external: ModuleDef) -> Result<Self, OverlapError> {
        let linked = internal.link(&external)?;
        Ok(Modules { internal, external, linked })
    }
}

/// Configurations strictly before the current one, most recent first.
#[derive(Clone, Default)]
pub struct History(Option<Arc<HistNode>>);

struct HistNode {
    cfg: Arc<Config>,
    prev: History,
}

impl History {
    pub fn empty() -> Self {
        History(None)
    }

    pub fn push(&self, cfg: Arc<Config>) -> History {
        History(Some(Arc::new(HistNode { cfg, prev: self.clone() })))
    }

    /// History of position `pos` of a trace.
    pub fn of_trace(trace: &Trace, pos: usize) -> History {
        trace.externals[..pos.min(trace.externals.len())].iter().fold(History::empty(), |h, c| h.push(Arc::clone(c)))
    }

    pub fn latest(&self) -> Option<&Arc<Config>> {
        self.0.as_ref().map(|n| &n.cfg)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<Config>> {
        let mut cur = self.0.as_deref();
        std::iter::from_fn(move || {
            let n = cur?;
            cur = n.prev.0.as_deref();
            Some(&n.cfg)
        })
    }
}

/// Everything needed to judge an assertion: the modules, the current
/// configuration and the part of the run leading to it.
#[derive(Clone)]
pub struct EvalContext<'m> {
    pub modules: &'m Modules,
    pub config: Config,
    pub history: History,
    pub bounds: Bounds,
}

impl<'m> EvalContext<'m> {
    /// A configuration with no recorded past.
    pub fn new(modules: &'m Modules, config: Config, bounds: Bounds) -> Self {
        EvalContext { modules, config, history: History::empty(), bounds }
    }

    /// Position `pos` of a recorded run.
    pub fn at(modules: &'m Modules, trace: &Trace, pos: usize, bounds: Bounds) -> Self {
        EvalContext { modules, config: (*trace.externals[pos]).clone(), history: History::of_trace(trace, pos), bounds }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Caveat {
    /// Some ghost expression ran out of fuel and was taken as undefined.
    FuelExhausted,
    /// Exploring the future hit the step budget; the temporal atom was
    /// taken as false.
    TemporalBudget,
    /// A set quantifier ranged over more objects than the cap allows.
    SetCapExceeded,
}

/// Outcome of judging one assertion at one configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Judgment {
    pub holds: bool,
    /// The result is not trustworthy and should not be reported as a
    /// violation.
    pub withheld: bool,
    pub caveats: BTreeSet<Caveat>,
}

/// Whether the assertion holds. Caveats are discarded; see [`evaluate`].
pub fn sat(ctx: &EvalContext<'_>, a: &Assertion) -> bool {
    Judge::new(ctx).sat(&ctx.config, &ctx.history, a)
}

pub fn evaluate(ctx: &EvalContext<'_>, a: &Assertion) -> Judgment {
    let j = Judge::new(ctx);
    let holds = j.sat(&ctx.config, &ctx.history, a);
    j.finish(holds, a)
}

/// Peels the leading universal quantifiers of `a`, instantiating each with
/// the first object (or set) that falsifies the rest. Returns the bindings,
/// in quantifier order, when the assertion fails.
pub fn counterexample(ctx: &EvalContext<'_>, a: &Assertion) -> Option<Vec<(Ident, Value)>> {
    let j = Judge::new(ctx);
    let mut cfg = ctx.config.clone();
    let mut cur = a.clone();
    let mut found = Vec::new();
    if j.sat(&cfg, &ctx.history, &cur) {
        return None;
    }
    loop {
        let (x, body, domain) = match &cur {
            Assertion::ForallObj(x, body) => {
                (x.clone(), body.clone(), cfg.heap.keys().map(|a| Value::Addr(*a)).collect::<Vec<_>>())
            }
            Assertion::ForallSet(x, body) => match j.subsets(&cfg) {
                Some(sets) => (x.clone(), body.clone(), sets.into_iter().map(Value::Set).collect()),
                None => return Some(found),
            },
            _ => return Some(found),
        };
        let (z, body) = fresh_binding(&cfg, &x, &body);
        let hit = domain.into_iter().find(|v| {
            let mut c = cfg.clone();
            c.bind(z.clone(), v.clone());
            !j.sat(&c, &ctx.history, &body)
        });
        match hit {
            Some(v) => {
                cfg.bind(z, v.clone());
                found.push((x, v));
                cur = *body;
            }
            None => return Some(found),
        }
    }
}

/// Re-evaluates `a` with its leading universal quantifiers instantiated by
/// `bindings`. Used to replay witnesses.
pub fn replay(ctx: &EvalContext<'_>, a: &Assertion, bindings: &[(Ident, Value)]) -> Option<bool> {
    let mut cfg = ctx.config.clone();
    let mut cur = a.clone();
    for (name, v) in bindings {
        let (x, body) = match &cur {
            Assertion::ForallObj(x, b) | Assertion::ForallSet(x, b) => (x.clone(), b.clone()),
            _ => return None,
        };
        if &x != name {
            return None;
        }
        let (z, body) = fresh_binding(&cfg, &x, &body);
        cfg.bind(z, v.clone());
        cur = *body;
    }
    Some(Judge::new(ctx).sat(&cfg, &ctx.history, &cur))
}

/// Picks a name for a quantified variable that neither clashes with the
/// top frame nor appears in its continuation, renaming the body to match.
fn fresh_binding(cfg: &Config, x: &Ident, body: &Assertion) -> (Ident, Box<Assertion>) {
    let top = cfg.top();
    let mut taken = top.contn.vars();
    taken.extend(top.vars.keys().cloned());
    if !taken.contains(x) {
        return (x.clone(), Box::new(body.clone()));
    }
    taken.extend(body.all_vars());
    let z = fresh_name(x, &taken);
    let map: BTreeMap<Ident, Ident> = [(x.clone(), z.clone())].into_iter().collect();
    (z, Box::new(body.rename(&map)))
}

struct Judge<'c, 'm> {
    ctx: &'c EvalContext<'m>,
    fuel_out: Cell<bool>,
    budget_out: Cell<bool>,
    cap_out: Cell<bool>,
}

impl<'c, 'm> Judge<'c, 'm> {
    fn new(ctx: &'c EvalContext<'m>) -> Self {
        Judge { ctx, fuel_out: Cell::new(false), budget_out: Cell::new(false), cap_out: Cell::new(false) }
    }

    fn finish(&self, holds: bool, a: &Assertion) -> Judgment {
        let mut caveats = BTreeSet::new();
        if self.fuel_out.get() {
            caveats.insert(Caveat::FuelExhausted);
        }
        if self.budget_out.get() {
            caveats.insert(Caveat::TemporalBudget);
        }
        if self.cap_out.get() {
            caveats.insert(Caveat::SetCapExceeded);
        }
        let temporal_root = matches!(a, Assertion::Next(_) | Assertion::Will(_));
        let withheld = self.cap_out.get() || (!holds && temporal_root && self.budget_out.get());
        Judgment { holds, withheld, caveats }
    }

    fn eval(&self, cfg: &Config, e: &Expr) -> Option<Value> {
        match eval_expr(&self.ctx.modules.linked, cfg, e, self.ctx.bounds.fuel) {
            Ok(v) => Some(v),
            Err(Undef::FuelExhausted) => {
                self.fuel_out.set(true);
                None
            }
            Err(_) => None,
        }
    }

    fn matches(&self, cfg: &Config, p: &Pattern, v: &Value) -> bool {
        match p {
            Pattern::Wild => true,
            Pattern::Expr(e) => self.eval(cfg, e).as_ref() == Some(v),
        }
    }

    fn subsets(&self, cfg: &Config) -> Option<Vec<BTreeSet<Address>>> {
        let dom: Vec<Address> = cfg.heap.keys().copied().collect();
        if dom.len() > self.ctx.bounds.set_cap {
            self.cap_out.set(true);
            return None;
        }
        Some(
            (0u64..1 << dom.len())
                .map(|mask| dom.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, a)| *a).collect())
                .collect(),
        )
    }

    fn with_binding(&self, cfg: &Config, x: &Ident, v: Value, body: &Assertion, hist: &History) -> bool {
        let mut c = cfg.clone();
        c.bind(x.clone(), v);
        self.sat(&c, hist, body)
    }

    fn sat(&self, cfg: &Config, hist: &History, a: &Assertion) -> bool {
        use Assertion as A;
        match a {
            A::Expr(e) => self.eval(cfg, e) == Some(Value::Bool(true)),
            A::Eq(l, r) => match (self.eval(cfg, l), self.eval(cfg, r)) {
                (Some(x), Some(y)) => x == y,
                _ => false,
            },
            A::HasClass(e, c) => {
                self.eval(cfg, e).and_then(|v| class_of_value(cfg, &v).cloned()).is_some_and(|k| &k == c)
            }
            A::In(e, s) => match (self.eval(cfg, e), cfg.top().vars.get(s)) {
                (Some(Value::Addr(x)), Some(Value::Set(set))) => set.contains(&x),
                _ => false,
            },
            A::Implies(l, r) => !self.sat(cfg, hist, l) || self.sat(cfg, hist, r),
            A::And(l, r) => self.sat(cfg, hist, l) && self.sat(cfg, hist, r),
            A::Or(l, r) => self.sat(cfg, hist, l) || self.sat(cfg, hist, r),
            A::Not(b) => !self.sat(cfg, hist, b),
            A::ForallObj(x, b) | A::ExistsObj(x, b) => {
                let (z, body) = fresh_binding(cfg, x, b);
                let want_all = matches!(a, A::ForallObj(..));
                let mut objs = cfg.heap.keys().copied();
                if want_all {
                    objs.all(|o| self.with_binding(cfg, &z, Value::Addr(o), &body, hist))
                } else {
                    objs.any(|o| self.with_binding(cfg, &z, Value::Addr(o), &body, hist))
                }
            }
            A::ForallSet(x, b) | A::ExistsSet(x, b) => {
                let Some(sets) = self.subsets(cfg) else { return false };
                let (z, body) = fresh_binding(cfg, x, b);
                let mut it = sets.into_iter();
                if matches!(a, A::ForallSet(..)) {
                    it.all(|s| self.with_binding(cfg, &z, Value::Set(s), &body, hist))
                } else {
                    it.any(|s| self.with_binding(cfg, &z, Value::Set(s), &body, hist))
                }
            }
            A::Let(x, e, b) => match self.eval(cfg, e) {
                Some(v) => {
                    let (z, body) = fresh_binding(cfg, x, b);
                    self.with_binding(cfg, &z, v, &body, hist)
                }
                None => false,
            },
            A::Access(x, y) => self.access(cfg, x, y),
            A::Calls { caller, method, receiver, args } => self.calls(cfg, caller, method, receiver, args),
            A::External(e) | A::Internal(e) => {
                let class = self.eval(cfg, e).and_then(|v| class_of_value(cfg, &v).cloned());
                match class {
                    Some(c) => self.ctx.modules.internal.contains(&c) == matches!(a, A::Internal(_)),
                    None => false,
                }
            }
            A::Changes(e) => self.sat(cfg, hist, &desugar_changes(e)),
            A::Space(b, s) => match cfg.top().vars.get(s) {
                Some(Value::Set(set)) => {
                    let set = set.clone();
                    self.sat(&restrict(cfg, &set), hist, b)
                }
                _ => false,
            },
            A::Next(b) => self.future(cfg, hist, b, 1),
            A::Will(b) => self.future(cfg, hist, b, usize::MAX),
            A::Prev(b) => match hist.latest() {
                Some(p) => self.sat(&adapt(cfg, p), &hist_before(hist), b),
                None => false,
            },
            A::Was(b) => {
                let mut h = hist.clone();
                while let Some(p) = h.latest().cloned() {
                    let earlier = hist_before(&h);
                    if self.sat(&adapt(cfg, &p), &earlier, b) {
                        return true;
                    }
                    h = earlier;
                }
                false
            }
        }
    }

    fn access(&self, cfg: &Config, x: &Expr, y: &Expr) -> bool {
        let (Some(vx), Some(vy)) = (self.eval(cfg, x), self.eval(cfg, y)) else { return false };
        if vx == vy {
            return true;
        }
        if let Some(obj) = vx.addr().and_then(|a| cfg.object(a)) {
            if obj.fields.values().any(|f| *f == vy) {
                return true;
            }
        }
        let top = cfg.top();
        if top.this() == Some(&vx) {
            return top.contn.vars().iter().any(|z| top.vars.get(z) == Some(&vy));
        }
        false
    }

    fn calls(&self, cfg: &Config, caller: &Pattern, method: &Ident, receiver: &Pattern, args: &[Pattern]) -> bool {
        let top = cfg.top();
        let Some(this) = top.this() else { return false };
        if !self.matches(cfg, caller, this) || top.contn.pending.is_some() {
            return false;
        }
        let Some(Stmt::Call { receiver: u, method: m, args: vs, .. }) = top.contn.head() else { return false };
        if m != method || vs.len() != args.len() {
            return false;
        }
        let Some(recv) = top.vars.get(u) else { return false };
        if !self.matches(cfg, receiver, recv) {
            return false;
        }
        vs.iter().zip(args).all(|(v, p)| {
            let val = match v {
                Operand::Var(z) => top.vars.get(z).cloned(),
                Operand::Nat(n) => Some(Value::Nat(*n)),
                Operand::Null => Some(Value::Null),
            };
            val.is_some_and(|val| self.matches(cfg, p, &val))
        })
    }

    /// Explores the two-module future of the top frame of `cfg` and checks
    /// `b` at up to `horizon` successive external configurations.
    fn future(&self, cfg: &Config, hist: &History, b: &Assertion, horizon: usize) -> bool {
        let mods = self.ctx.modules;
        let bounds = &self.ctx.bounds;
        let mut cur = cfg.top_only();
        let mut past = hist.push(Arc::new(cfg.clone()));
        let mut spent = 0usize;
        for _ in 0..horizon {
            let budget = bounds.max_micro.min(bounds.max_steps.saturating_sub(spent));
            if budget == 0 {
                self.budget_out.set(true);
                return false;
            }
            let st = external_step(&mods.internal, &mods.linked, &cur, budget, false);
            spent += st.steps;
            match st.outcome {
                ExternalOutcome::Stepped(next) => {
                    if self.sat(&adapt(cfg, &next), &past, b) {
                        return true;
                    }
                    past = past.push(Arc::new(next.clone()));
                    cur = next;
                }
                ExternalOutcome::Stuck(crate::interpreter::StuckReason::BudgetExhausted) => {
                    self.budget_out.set(true);
                    return false;
                }
                _ => return false,
            }
        }
        false
    }
}

fn hist_before(h: &History) -> History {
    h.0.as_ref().map(|n| n.prev.clone()).unwrap_or_default()
}
