//! Partial evaluation of ghost expressions.
//!
//! Ghost calls may recurse without bound (a cyclic list has no `last`), so
//! evaluation carries a fuel budget that each nested ghost call decrements.
//! Running out of fuel makes the expression undefined.

use std::collections::BTreeMap;
use std::fmt;

use crate::ast::{Expr, Ident, ModuleDef};
use crate::runtime::{Address, Config, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Undef {
    FuelExhausted,
    Unbound,
    BadReceiver,
    NoSuchGhost,
    StuckArith,
    NotBoolean,
}

impl fmt::Display for Undef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Undef::FuelExhausted => "fuel-exhausted",
            Undef::Unbound => "unbound",
            Undef::BadReceiver => "bad-receiver",
            Undef::NoSuchGhost => "no-such-ghost",
            Undef::StuckArith => "stuck-arith",
            Undef::NotBoolean => "not-boolean",
        })
    }
}

pub type EvalResult = Result<Value, Undef>;

/// Evaluates `e` in the top frame of `cfg`.
pub fn eval_expr(m: &ModuleDef, cfg: &Config, e: &Expr, fuel: u32) -> EvalResult {
    let mut ev = Evaluator { m, cfg, active: Vec::new() };
    ev.eval(&cfg.top().vars, e, fuel)
}

type Vars = BTreeMap<Ident, Value>;

struct Evaluator<'a> {
    m: &'a ModuleDef,
    cfg: &'a Config,
    /// Ghost calls currently being evaluated. Evaluation is deterministic, so
    /// re-entering an identical call can only recurse forever: it is reported
    /// as fuel exhaustion straight away, which is what any finite fuel would
    /// eventually give.
    active: Vec<(Ident, Vars)>,
}

impl Evaluator<'_> {
    fn eval(&mut self, vars: &Vars, e: &Expr, fuel: u32) -> EvalResult {
        match e {
            Expr::True => Ok(Value::Bool(true)),
            Expr::False => Ok(Value::Bool(false)),
            Expr::Null => Ok(Value::Null),
            Expr::Nat(n) => Ok(Value::Nat(*n)),
            Expr::Var(x) => vars.get(x).cloned().ok_or(Undef::Unbound),
            Expr::Eq(l, r) => {
                let a = self.eval(vars, l, fuel)?;
                let b = self.eval(vars, r, fuel)?;
                Ok(Value::Bool(a == b))
            }
            Expr::If(c, t, f) => match self.eval(vars, c, fuel)? {
                Value::Bool(true) => self.eval(vars, t, fuel),
                Value::Bool(false) => self.eval(vars, f, fuel),
                _ => Err(Undef::NotBoolean),
            },
            Expr::Plus(l, r) => match (self.eval(vars, l, fuel)?, self.eval(vars, r, fuel)?) {
                (Value::Nat(a), Value::Nat(b)) => a.checked_add(b).map(Value::Nat).ok_or(Undef::StuckArith),
                _ => Err(Undef::StuckArith),
            },
            Expr::Geq(l, r) => match (self.eval(vars, l, fuel)?, self.eval(vars, r, fuel)?) {
                (Value::Nat(a), Value::Nat(b)) => Ok(Value::Bool(a >= b)),
                _ => Err(Undef::StuckArith),
            },
            Expr::Field(recv, f) => {
                let a = self.receiver(vars, recv, fuel)?;
                let obj = self.cfg.object(a).ok_or(Undef::BadReceiver)?;
                if let Some(v) = obj.fields.get(f) {
                    return Ok(v.clone());
                }
                self.call(vars, a, f, &[], fuel)
            }
            Expr::GhostCall(recv, g, args) => {
                let a = self.receiver(vars, recv, fuel)?;
                self.call(vars, a, g, args, fuel)
            }
        }
    }

    fn receiver(&mut self, vars: &Vars, e: &Expr, fuel: u32) -> Result<Address, Undef> {
        match self.eval(vars, e, fuel)? {
            Value::Addr(a) => Ok(a),
            _ => Err(Undef::BadReceiver),
        }
    }

    fn call(&mut self, vars: &Vars, a: Address, g: &Ident, args: &[Expr], fuel: u32) -> EvalResult {
        let (m, cfg) = (self.m, self.cfg);
        let class = &cfg.object(a).ok_or(Undef::BadReceiver)?.class;
        let decl = m.lookup_ghost(class, g).ok_or(Undef::NoSuchGhost)?;
        if decl.params.len() != args.len() {
            return Err(Undef::NoSuchGhost);
        }
        let mut inner = vars.clone();
        inner.insert(Ident::this(), Value::Addr(a));
        for (p, e) in decl.params.iter().zip(args) {
            let v = self.eval(vars, e, fuel)?;
            inner.insert(p.clone(), v);
        }
        if fuel == 0 {
            return Err(Undef::FuelExhausted);
        }
        let key = (g.clone(), inner);
        if self.active.contains(&key) {
            return Err(Undef::FuelExhausted);
        }
        let body = &decl.body;
        self.active.push(key.clone());
        let r = self.eval(&key.1, body, fuel - 1);
        self.active.pop();
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::ClassBuilder;
    use crate::runtime::{Continuation, Frame, Heap, Object};

    fn node_module() -> ModuleDef {
        let mut b = ClassBuilder::new("Node").field("next").unwrap();
        let next = Expr::var("this").field("next");
        b.add_ghost(
            "last".into(),
            vec![],
            Expr::If(
                Box::new(next.clone().eq(Expr::Null)),
                Box::new(Expr::var("this")),
                Box::new(next.clone().field("last")),
            ),
        )
        .unwrap();
        ModuleDef::new().with(b).unwrap()
    }

    fn cfg(edges: &[(u64, Option<u64>)]) -> Config {
        let mut heap = Heap::new();
        for (a, n) in edges {
            let next = n.map_or(Value::Null, |n| Value::Addr(Address(n)));
            heap.insert(
                Address(*a),
                Object { class: "Node".into(), fields: [(Ident::new("next"), next)].into_iter().collect() },
            );
        }
        let vars = [(Ident::new("n"), Value::Addr(Address(edges[0].0)))].into_iter().collect();
        Config::new(vec![Frame::new(Continuation::from_stmts(vec![]), vars)], heap)
    }

    #[test]
    fn last_of_a_chain() {
        let c = cfg(&[(1, Some(2)), (2, Some(3)), (3, None)]);
        let e = Expr::var("n").field("last");
        assert_eq!(eval_expr(&node_module(), &c, &e, 10), Ok(Value::Addr(Address(3))));
        assert_eq!(eval_expr(&node_module(), &c, &e, 2), Err(Undef::FuelExhausted));
    }

    #[test]
    fn last_of_a_cycle_is_undefined() {
        let c = cfg(&[(1, Some(1))]);
        let e = Expr::var("n").field("last");
        for fuel in [0, 1, 10, 1000] {
            assert_eq!(eval_expr(&node_module(), &c, &e, fuel), Err(Undef::FuelExhausted));
        }
    }

    #[test]
    fn undefined_operands_make_equality_undefined() {
        let c = cfg(&[(1, Some(1))]);
        let last = Expr::var("n").field("last");
        assert!(eval_expr(&node_module(), &c, &last.clone().eq(last), 100).is_err());
    }

    #[test]
    fn physical_field_takes_priority() {
        let c = cfg(&[(1, None)]);
        let e = Expr::var("n").field("next");
        assert_eq!(eval_expr(&node_module(), &c, &e, 0), Ok(Value::Null));
    }
}
