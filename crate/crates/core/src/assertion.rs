//! Abstract syntax of assertions, with variable bookkeeping.

use std::collections::{BTreeMap, BTreeSet};

use crate::ast::{ClassId, Expr, Ident};
use crate::runtime::fresh_name;

/// An argument position in `calls(..)`: either an expression or `_`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Pattern {
    Wild,
    Expr(Expr),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Assertion {
    /// The expression evaluates to `true`.
    Expr(Expr),
    Eq(Expr, Expr),
    HasClass(Expr, ClassId),
    /// The value of the expression belongs to the set bound to the variable.
    In(Expr, Ident),
    Implies(Box<Assertion>, Box<Assertion>),
    And(Box<Assertion>, Box<Assertion>),
    Or(Box<Assertion>, Box<Assertion>),
    Not(Box<Assertion>),
    ForallObj(Ident, Box<Assertion>),
    ExistsObj(Ident, Box<Assertion>),
    ForallSet(Ident, Box<Assertion>),
    ExistsSet(Ident, Box<Assertion>),
    Access(Expr, Expr),
    Calls {
        caller: Pattern,
        method: Ident,
        receiver: Pattern,
        args: Vec<Pattern>,
    },
    Next(Box<Assertion>),
    Will(Box<Assertion>),
    Prev(Box<Assertion>),
    Was(Box<Assertion>),
    /// The body holds in the configuration restricted to the set bound to
    /// the variable.
    Space(Box<Assertion>, Ident),
    External(Expr),
    Internal(Expr),
    Changes(Expr),
    /// Binds the variable to the current value of the expression; false when
    /// the expression is undefined. `let v = e in A` is `exists v. e = v and A`
    /// with the quantifier ranging over all values, not just objects.
    Let(Ident, Expr, Box<Assertion>),
}

use Assertion as A;

impl Assertion {
    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Assertion) -> Assertion {
        A::Not(Box::new(a))
    }

    pub fn and(a: Assertion, b: Assertion) -> Assertion {
        A::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Assertion, b: Assertion) -> Assertion {
        A::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Assertion, b: Assertion) -> Assertion {
        A::Implies(Box::new(a), Box::new(b))
    }

    pub fn forall(x: &str, a: Assertion) -> Assertion {
        A::ForallObj(Ident::new(x), Box::new(a))
    }

    pub fn exists(x: &str, a: Assertion) -> Assertion {
        A::ExistsObj(Ident::new(x), Box::new(a))
    }

    pub fn next(a: Assertion) -> Assertion {
        A::Next(Box::new(a))
    }

    pub fn will(a: Assertion) -> Assertion {
        A::Will(Box::new(a))
    }

    pub fn prev(a: Assertion) -> Assertion {
        A::Prev(Box::new(a))
    }

    pub fn was(a: Assertion) -> Assertion {
        A::Was(Box::new(a))
    }

    pub fn space(a: Assertion, s: &str) -> Assertion {
        A::Space(Box::new(a), Ident::new(s))
    }

    /// The variable bound here, if this node is a binder.
    pub fn binder(&self) -> Option<&Ident> {
        match self {
            A::ForallObj(x, _) | A::ExistsObj(x, _) | A::ForallSet(x, _) | A::ExistsSet(x, _) => Some(x),
            A::Let(x, _, _) => Some(x),
            _ => None,
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Ident> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<Ident>) {
        let pat = |p: &Pattern, out: &mut BTreeSet<Ident>| {
            if let Pattern::Expr(e) = p {
                e.free_vars(out);
            }
        };
        match self {
            A::Expr(e) | A::External(e) | A::Internal(e) | A::Changes(e) | A::HasClass(e, _) => e.free_vars(out),
            A::Eq(l, r) | A::Access(l, r) => {
                l.free_vars(out);
                r.free_vars(out);
            }
            A::In(e, s) => {
                e.free_vars(out);
                out.insert(s.clone());
            }
            A::Implies(l, r) | A::And(l, r) | A::Or(l, r) => {
                l.collect_free(out);
                r.collect_free(out);
            }
            A::Not(a) | A::Next(a) | A::Will(a) | A::Prev(a) | A::Was(a) => a.collect_free(out),
            A::Space(a, s) => {
                a.collect_free(out);
                out.insert(s.clone());
            }
            A::ForallObj(x, a) | A::ExistsObj(x, a) | A::ForallSet(x, a) | A::ExistsSet(x, a) => {
                let mut inner = a.free_vars();
                inner.remove(x);
                out.extend(inner);
            }
            A::Let(x, e, a) => {
                e.free_vars(out);
                let mut inner = a.free_vars();
                inner.remove(x);
                out.extend(inner);
            }
            A::Calls { caller, receiver, args, .. } => {
                pat(caller, out);
                pat(receiver, out);
                for p in args {
                    pat(p, out);
                }
            }
        }
    }

    /// Every variable name occurring anywhere, bound or free.
    pub fn all_vars(&self) -> BTreeSet<Ident> {
        let mut out = self.free_vars();
        self.visit(&mut |a| {
            if let Some(x) = a.binder() {
                out.insert(x.clone());
            }
        });
        out
    }

    /// Pre-order traversal of sub-assertions.
    pub fn visit(&self, f: &mut dyn FnMut(&Assertion)) {
        f(self);
        match self {
            A::Implies(l, r) | A::And(l, r) | A::Or(l, r) => {
                l.visit(f);
                r.visit(f);
            }
            A::Not(a) | A::Next(a) | A::Will(a) | A::Prev(a) | A::Was(a) | A::Space(a, _) => a.visit(f),
            A::ForallObj(_, a) | A::ExistsObj(_, a) | A::ForallSet(_, a) | A::ExistsSet(_, a) => a.visit(f),
            A::Let(_, _, a) => a.visit(f),
            _ => {}
        }
    }

    /// Renames free variables. Bound variables shadow entries of `map`.
    /// Callers pick target names that do not occur in the assertion, so no
    /// capture can happen.
    pub fn rename(&self, map: &BTreeMap<Ident, Ident>) -> Assertion {
        let re = |e: &Expr| e.rename(map);
        let rv = |x: &Ident| map.get(x).cloned().unwrap_or_else(|| x.clone());
        let rp = |p: &Pattern| match p {
            Pattern::Wild => Pattern::Wild,
            Pattern::Expr(e) => Pattern::Expr(e.rename(map)),
        };
        let rb = |a: &Assertion| Box::new(a.rename(map));
        let under = |x: &Ident, a: &Assertion| {
            if map.contains_key(x) {
                let mut m = map.clone();
                m.remove(x);
                Box::new(a.rename(&m))
            } else {
                Box::new(a.rename(map))
            }
        };
        match self {
            A::Expr(e) => A::Expr(re(e)),
            A::Eq(l, r) => A::Eq(re(l), re(r)),
            A::HasClass(e, c) => A::HasClass(re(e), c.clone()),
            A::In(e, s) => A::In(re(e), rv(s)),
            A::Implies(l, r) => A::Implies(rb(l), rb(r)),
            A::And(l, r) => A::And(rb(l), rb(r)),
            A::Or(l, r) => A::Or(rb(l), rb(r)),
            A::Not(a) => A::Not(rb(a)),
            A::ForallObj(x, a) => A::ForallObj(x.clone(), under(x, a)),
            A::ExistsObj(x, a) => A::ExistsObj(x.clone(), under(x, a)),
            A::ForallSet(x, a) => A::ForallSet(x.clone(), under(x, a)),
            A::ExistsSet(x, a) => A::ExistsSet(x.clone(), under(x, a)),
            A::Access(l, r) => A::Access(re(l), re(r)),
            A::Calls { caller, method, receiver, args } => A::Calls {
                caller: rp(caller),
                method: method.clone(),
                receiver: rp(receiver),
                args: args.iter().map(rp).collect(),
            },
            A::Next(a) => A::Next(rb(a)),
            A::Will(a) => A::Will(rb(a)),
            A::Prev(a) => A::Prev(rb(a)),
            A::Was(a) => A::Was(rb(a)),
            A::Space(a, s) => A::Space(rb(a), rv(s)),
            A::External(e) => A::External(re(e)),
            A::Internal(e) => A::Internal(re(e)),
            A::Changes(e) => A::Changes(re(e)),
            A::Let(x, e, a) => A::Let(x.clone(), re(e), under(x, a)),
        }
    }

    /// Renames binders so that no quantifier rebinds a name already bound
    /// by an enclosing quantifier or occurring free.
    pub fn alpha_normalize(&self) -> Assertion {
        let mut taken = self.free_vars();
        self.alpha(&mut taken)
    }

    fn alpha(&self, taken: &mut BTreeSet<Ident>) -> Assertion {
        let bind = |x: &Ident, body: &Assertion, taken: &mut BTreeSet<Ident>| {
            if taken.contains(x) {
                let mut avoid = taken.clone();
                avoid.extend(body.all_vars());
                let z = fresh_name(x, &avoid);
                taken.insert(z.clone());
                let map = [(x.clone(), z.clone())].into_iter().collect();
                (z, body.rename(&map).alpha(taken))
            } else {
                taken.insert(x.clone());
                (x.clone(), body.alpha(taken))
            }
        };
        match self {
            A::ForallObj(x, a) => {
                let (z, b) = bind(x, a, taken);
                A::ForallObj(z, Box::new(b))
            }
            A::ExistsObj(x, a) => {
                let (z, b) = bind(x, a, taken);
                A::ExistsObj(z, Box::new(b))
            }
            A::ForallSet(x, a) => {
                let (z, b) = bind(x, a, taken);
                A::ForallSet(z, Box::new(b))
            }
            A::ExistsSet(x, a) => {
                let (z, b) = bind(x, a, taken);
                A::ExistsSet(z, Box::new(b))
            }
            A::Let(x, e, a) => {
                let (z, b) = bind(x, a, taken);
                A::Let(z, e.clone(), Box::new(b))
            }
            A::Implies(l, r) => A::Implies(Box::new(l.alpha(taken)), Box::new(r.alpha(taken))),
            A::And(l, r) => A::And(Box::new(l.alpha(taken)), Box::new(r.alpha(taken))),
            A::Or(l, r) => A::Or(Box::new(l.alpha(taken)), Box::new(r.alpha(taken))),
            A::Not(a) => A::Not(Box::new(a.alpha(taken))),
            A::Next(a) => A::Next(Box::new(a.alpha(taken))),
            A::Will(a) => A::Will(Box::new(a.alpha(taken))),
            A::Prev(a) => A::Prev(Box::new(a.alpha(taken))),
            A::Was(a) => A::Was(Box::new(a.alpha(taken))),
            A::Space(a, s) => A::Space(Box::new(a.alpha(taken)), s.clone()),
            other => other.clone(),
        }
    }

    /// Number of nodes; used to keep random instances small.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NamedAssertion {
    pub name: String,
    pub assertion: Assertion,
}

/// A specification: assertions expected to hold at every external
/// configuration of a run.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Spec {
    pub name: Option<String>,
    pub assertions: Vec<NamedAssertion>,
}

/// `changes(e)` unfolded: bind the current value of `e` and require that
/// after one step `e` no longer has that value.
pub fn desugar_changes(e: &Expr) -> Assertion {
    let mut taken = BTreeSet::new();
    e.free_vars(&mut taken);
    let v = if taken.contains(&Ident::new("v")) { fresh_name(&Ident::new("v"), &taken) } else { Ident::new("v") };
    let var = Expr::Var(v.clone());
    A::Let(v, e.clone(), Box::new(A::and(A::Eq(e.clone(), var.clone()), A::next(A::not(A::Eq(e.clone(), var))))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_vars_skip_bound_names() {
        let a = A::forall("x", A::Access(Expr::var("x"), Expr::var("y")));
        assert_eq!(a.free_vars(), [Ident::new("y")].into_iter().collect());
    }

    #[test]
    fn rename_respects_shadowing() {
        let a = A::and(A::Expr(Expr::var("x")), A::exists("x", A::Expr(Expr::var("x"))));
        let map = [(Ident::new("x"), Ident::new("z"))].into_iter().collect();
        let r = a.rename(&map);
        assert_eq!(r, A::and(A::Expr(Expr::var("z")), A::exists("x", A::Expr(Expr::var("x")))));
    }

    #[test]
    fn alpha_renames_inner_rebinding() {
        let a = A::forall("x", A::exists("x", A::Access(Expr::var("x"), Expr::var("y"))));
        let n = a.alpha_normalize();
        assert_eq!(n, A::forall("x", A::exists("x$1", A::Access(Expr::var("x$1"), Expr::var("y")))));
    }

    #[test]
    fn changes_picks_a_fresh_variable() {
        let e = Expr::var("v").field("f");
        match desugar_changes(&e) {
            A::Let(x, _, _) => assert_eq!(x.as_str(), "v$1"),
            other => panic!("{other:?}"),
        }
    }
}
