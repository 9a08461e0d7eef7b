//! Runtime configurations: values, frames, heaps, and the two structural
//! operations on configurations used by the assertion language, restriction
//! and adaptation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::ast::{ClassId, Ident, Stmt};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Address(pub u64);

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "@{}", self.0)
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "@{}", self.0)
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Null,
    Addr(Address),
    Set(BTreeSet<Address>),
    Nat(u64),
    Bool(bool),
}

impl Value {
    pub fn addr(&self) -> Option<Address> {
        match self {
            Value::Addr(a) => Some(*a),
            _ => None,
        }
    }

    pub fn set(&self) -> Option<&BTreeSet<Address>> {
        match self {
            Value::Set(s) => Some(s),
            _ => None,
        }
    }
}

impl From<Address> for Value {
    fn from(a: Address) -> Self {
        Value::Addr(a)
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("null"),
            Value::Addr(a) => write!(f, "{a}"),
            Value::Nat(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Set(s) => {
                f.write_str("{")?;
                for (i, a) in s.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str("}")
            }
        }
    }
}

/// The rest of a frame's code: optionally headed by a call marker `x := •`
/// (the frame is waiting for a callee to return into `x`), followed by the
/// statements `body[pc..]`.
#[derive(Clone)]
pub struct Continuation {
    pub pending: Option<Ident>,
    body: Arc<[Stmt]>,
    pc: usize,
}

impl Continuation {
    pub fn new(body: Arc<[Stmt]>) -> Self {
        Continuation { pending: None, body, pc: 0 }
    }

    pub fn from_stmts(stmts: Vec<Stmt>) -> Self {
        Continuation::new(stmts.into())
    }

    pub fn stmts(&self) -> &[Stmt] {
        &self.body[self.pc.min(self.body.len())..]
    }

    pub fn head(&self) -> Option<&Stmt> {
        self.body.get(self.pc)
    }

    pub fn advance(&mut self) {
        self.pc += 1;
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_none() && self.stmts().is_empty()
    }

    /// Variables occurring anywhere in the continuation, marker included.
    pub fn vars(&self) -> BTreeSet<Ident> {
        let mut out: BTreeSet<Ident> = self.pending.iter().cloned().collect();
        for s in self.stmts() {
            out.extend(s.vars().into_iter().cloned());
        }
        out
    }

    pub fn rename(&self, map: &BTreeMap<Ident, Ident>) -> Continuation {
        let stmts: Vec<Stmt> = self.stmts().iter().map(|s| s.rename(map)).collect();
        Continuation {
            pending: self.pending.as_ref().map(|x| map.get(x).cloned().unwrap_or_else(|| x.clone())),
            body: stmts.into(),
            pc: 0,
        }
    }
}

impl PartialEq for Continuation {
    fn eq(&self, other: &Self) -> bool {
        self.pending == other.pending && self.stmts() == other.stmts()
    }
}

impl Eq for Continuation {}

impl fmt::Debug for Continuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Continuation").field("pending", &self.pending).field("stmts", &self.stmts()).finish()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub contn: Continuation,
    pub vars: BTreeMap<Ident, Value>,
}

impl Frame {
    pub fn new(contn: Continuation, vars: BTreeMap<Ident, Value>) -> Self {
        Frame { contn, vars }
    }

    pub fn this(&self) -> Option<&Value> {
        self.vars.get(&Ident::this())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Object {
    pub class: ClassId,
    pub fields: BTreeMap<Ident, Value>,
}

pub type Heap = BTreeMap<Address, Object>;

/// A stack of frames (top is the last element) and a heap.
///
/// `next_addr` is the allocation high-water mark. Restriction keeps it, so
/// objects allocated after restricting never reuse an address that a
/// dangling reference may still mention.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Config {
    pub stack: Vec<Frame>,
    pub heap: Arc<Heap>,
    pub next_addr: u64,
}

impl Config {
    pub fn new(stack: Vec<Frame>, heap: Heap) -> Self {
        let next_addr = heap.keys().next_back().map_or(0, |a| a.0 + 1);
        Config { stack, heap: Arc::new(heap), next_addr }
    }

    pub fn top(&self) -> &Frame {
        self.stack.last().expect("configuration has an empty stack")
    }

    pub fn top_mut(&mut self) -> &mut Frame {
        self.stack.last_mut().expect("configuration has an empty stack")
    }

    pub fn heap_mut(&mut self) -> &mut Heap {
        Arc::make_mut(&mut self.heap)
    }

    pub fn alloc(&mut self, obj: Object) -> Address {
        let a = Address(self.next_addr);
        self.next_addr += 1;
        self.heap_mut().insert(a, obj);
        a
    }

    pub fn object(&self, a: Address) -> Option<&Object> {
        self.heap.get(&a)
    }

    /// The configuration made of the top frame alone, over the same heap.
    pub fn top_only(&self) -> Config {
        Config { stack: vec![self.top().clone()], heap: Arc::clone(&self.heap), next_addr: self.next_addr }
    }

    /// Binds `x` in the top frame.
    pub fn bind(&mut self, x: Ident, v: Value) {
        self.top_mut().vars.insert(x, v);
    }
}

/// Value of variable `x` in the top frame.
pub fn interp_var<'a>(cfg: &'a Config, x: &Ident) -> Option<&'a Value> {
    cfg.top().vars.get(x)
}

/// Value of `x.f`, defined when `x` points to an object with field `f`.
pub fn interp_path(cfg: &Config, x: &Ident, f: &Ident) -> Option<Value> {
    let a = interp_var(cfg, x)?.addr()?;
    cfg.object(a)?.fields.get(f).cloned()
}

/// Class of the object `x` points to.
pub fn class_of<'a>(cfg: &'a Config, x: &Ident) -> Option<&'a ClassId> {
    class_of_value(cfg, interp_var(cfg, x)?)
}

pub fn class_of_value<'a>(cfg: &'a Config, v: &Value) -> Option<&'a ClassId> {
    Some(&cfg.object(v.addr()?)?.class)
}

/// Same stack; heap cut down to the addresses in `keep`.
pub fn restrict(cfg: &Config, keep: &BTreeSet<Address>) -> Config {
    let heap: Heap = cfg.heap.iter().filter(|(a, _)| keep.contains(a)).map(|(a, o)| (*a, o.clone())).collect();
    Config { stack: cfg.stack.clone(), heap: Arc::new(heap), next_addr: cfg.next_addr }
}

/// Smallest `base$k` (k >= 1) not in `taken`.
pub fn fresh_name(base: &Ident, taken: &BTreeSet<Ident>) -> Ident {
    let stem = base.as_str().split('$').next().unwrap_or(base.as_str());
    (1..).map(|k| Ident::new(&format!("{stem}${k}"))).find(|n| !taken.contains(n)).expect("unbounded name supply")
}

/// Views `later` from the perspective of `now`.
///
/// The result keeps the stack tail and heap of `later`. Its top frame runs
/// `later`'s top continuation with every variable of that frame renamed
/// apart, binds the renamed variables to `later`'s values, and then lays
/// `now`'s top-frame bindings over the result.
pub fn adapt(now: &Config, later: &Config) -> Config {
    let beta1 = &now.top().vars;
    let top2 = later.top();
    let beta2 = &top2.vars;

    // Locals that the continuation assigns later are renamed as well, so a
    // future assignment cannot overwrite a binding from `now`.
    let mut to_rename: BTreeSet<Ident> = beta2.keys().cloned().collect();
    to_rename.extend(top2.contn.vars());

    let mut taken: BTreeSet<Ident> = beta1.keys().cloned().collect();
    taken.extend(to_rename.iter().cloned());
    let mut renaming = BTreeMap::new();
    for z in &to_rename {
        let z2 = fresh_name(z, &taken);
        taken.insert(z2.clone());
        renaming.insert(z.clone(), z2);
    }

    let mut vars = beta2.clone();
    for (z, z2) in &renaming {
        if let Some(v) = beta2.get(z) {
            vars.insert(z2.clone(), v.clone());
        }
    }
    for (z, v) in beta1 {
        vars.insert(z.clone(), v.clone());
    }

    let mut stack: Vec<Frame> = later.stack[..later.stack.len() - 1].to_vec();
    stack.push(Frame { contn: top2.contn.rename(&renaming), vars });
    Config { stack, heap: Arc::clone(&later.heap), next_addr: later.next_addr }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::Operand;

    fn obj(class: &str, fields: &[(&str, Value)]) -> Object {
        Object { class: Ident::new(class), fields: fields.iter().map(|(f, v)| (Ident::new(f), v.clone())).collect() }
    }

    fn frame(vars: &[(&str, Value)], stmts: Vec<Stmt>) -> Frame {
        Frame::new(Continuation::from_stmts(stmts), vars.iter().map(|(x, v)| (Ident::new(x), v.clone())).collect())
    }

    fn a(n: u64) -> Value {
        Value::Addr(Address(n))
    }

    #[test]
    fn restrict_keeps_stack_and_selected_records() {
        let mut heap = Heap::new();
        heap.insert(Address(1), obj("Bank", &[("ledger", a(11))]));
        heap.insert(Address(11), obj("Node", &[("next", a(12))]));
        heap.insert(Address(12), obj("Node", &[("next", Value::Null)]));
        let cfg = Config::new(vec![frame(&[("this", a(1))], vec![])], heap);
        let keep: BTreeSet<_> = [Address(1), Address(11), Address(99)].into_iter().collect();
        let r = restrict(&cfg, &keep);
        assert_eq!(r.heap.keys().copied().collect::<Vec<_>>(), vec![Address(1), Address(11)]);
        assert_eq!(r.stack, cfg.stack);
        assert_eq!(r.heap[&Address(11)].fields[&Ident::new("next")], a(12));
        assert_eq!(r.next_addr, 13);
    }

    #[test]
    fn adapt_renames_future_and_keeps_current_bindings() {
        let heap = Heap::new();
        let now = Config::new(vec![frame(&[("this", a(1)), ("x", a(5))], vec![])], heap.clone());
        let call = Stmt::Call {
            dest: "r".into(),
            receiver: "x".into(),
            method: "m".into(),
            args: vec![Operand::Var("y".into())],
        };
        let later = Config::new(vec![frame(&[("this", a(2)), ("x", a(7)), ("y", a(8))], vec![call])], heap);
        let ad = adapt(&now, &later);
        let top = ad.top();
        assert_eq!(top.vars[&Ident::new("x")], a(5));
        assert_eq!(top.vars[&Ident::new("this")], a(1));
        assert_eq!(top.vars[&Ident::new("x$1")], a(7));
        assert_eq!(top.vars[&Ident::new("y$1")], a(8));
        assert_eq!(top.vars[&Ident::new("y")], a(8));
        match &top.contn.stmts()[0] {
            Stmt::Call { dest, receiver, args, .. } => {
                assert_eq!(dest.as_str(), "r$1");
                assert_eq!(receiver.as_str(), "x$1");
                assert_eq!(args, &vec![Operand::Var("y$1".into())]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fresh_names_skip_taken_suffixes() {
        let taken: BTreeSet<Ident> = ["x", "x$1", "x$2"].iter().map(|s| Ident::new(s)).collect();
        assert_eq!(fresh_name(&"x".into(), &taken).as_str(), "x$3");
        assert_eq!(fresh_name(&"x$1".into(), &taken).as_str(), "x$3");
    }
}
