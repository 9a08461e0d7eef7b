use std::fmt::Write;

use crate::assertion::{Assertion, Pattern};
use crate::ast::{Expr, ModuleDef, Operand, Stmt};

fn operand(o: &Operand) -> String {
    match o {
        Operand::Var(x) => x.to_string(),
        Operand::Nat(n) => n.to_string(),
        Operand::Null => "null".to_string(),
    }
}

fn operands(os: &[Operand]) -> String {
    os.iter().map(operand).collect::<Vec<_>>().join(", ")
}

pub fn print_stmt(s: &Stmt) -> String {
    match s {
        Stmt::FieldWrite { target, field, value } => format!("{target}.{field} := {}", operand(value)),
        Stmt::FieldRead { dest, source, field } => format!("{dest} := {source}.{field}"),
        Stmt::Call { dest, receiver, method, args } => format!("{dest} := {receiver}.{method}({})", operands(args)),
        Stmt::New { dest, class, args } => format!("{dest} := new {class}({})", operands(args)),
        Stmt::Return(v) => format!("return {}", operand(v)),
    }
}

pub fn print_stmts(stmts: &[Stmt]) -> String {
    stmts.iter().map(print_stmt).collect::<Vec<_>>().join("; ")
}

pub fn print_module(m: &ModuleDef) -> String {
    let mut out = String::new();
    for (i, (name, c)) in m.classes().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "class {name} {{");
        for f in &c.fields {
            let _ = writeln!(out, "  field {f}");
        }
        for (mname, decl) in &c.methods {
            let params = decl.params.iter().map(|p| p.as_str()).collect::<Vec<_>>().join(", ");
            let _ = writeln!(out, "  method {mname}({params}) {{");
            let n = decl.body.len();
            for (k, s) in decl.body.iter().enumerate() {
                let sep = if k + 1 < n { ";" } else { "" };
                let _ = writeln!(out, "    {}{sep}", print_stmt(s));
            }
            let _ = writeln!(out, "  }}");
        }
        for (g, decl) in &c.ghosts {
            let params = decl.params.iter().map(|p| p.as_str()).collect::<Vec<_>>().join(", ");
            let _ = writeln!(out, "  ghost {g}({params}) {{ {} }}", print_expr(&decl.body));
        }
        out.push_str("}\n");
    }
    out
}

fn expr_level(e: &Expr) -> u8 {
    match e {
        Expr::If(..) => 0,
        Expr::Eq(..) | Expr::Geq(..) => 1,
        Expr::Plus(..) => 2,
        Expr::Field(..) | Expr::GhostCall(..) => 3,
        _ => 4,
    }
}

fn expr_at(e: &Expr, min: u8) -> String {
    let s = print_expr(e);
    if expr_level(e) < min {
        format!("({s})")
    } else {
        s
    }
}

pub fn print_expr(e: &Expr) -> String {
    match e {
        Expr::True => "true".into(),
        Expr::False => "false".into(),
        Expr::Null => "null".into(),
        Expr::Nat(n) => n.to_string(),
        Expr::Var(x) => x.to_string(),
        Expr::Eq(l, r) => format!("{} = {}", expr_at(l, 2), expr_at(r, 2)),
        Expr::Geq(l, r) => format!("{} >= {}", expr_at(l, 2), expr_at(r, 2)),
        Expr::Plus(l, r) => format!("{} + {}", expr_at(l, 2), expr_at(r, 3)),
        Expr::If(c, t, f) => format!("if {} then {} else {}", print_expr(c), print_expr(t), print_expr(f)),
        Expr::Field(r, f) => format!("{}.{f}", expr_at(r, 3)),
        Expr::GhostCall(r, f, args) => {
            let args = args.iter().map(print_expr).collect::<Vec<_>>().join(", ");
            format!("{}.{f}({args})", expr_at(r, 3))
        }
    }
}

fn pattern(p: &Pattern) -> String {
    match p {
        Pattern::Wild => "_".into(),
        Pattern::Expr(e) => print_expr(e),
    }
}

/// 0: binders and implication, 1: `or`, 2: `and`, 3: prefix operators,
/// 4: atoms.
fn level(a: &Assertion) -> u8 {
    use Assertion as A;
    match a {
        A::ForallObj(..) | A::ExistsObj(..) | A::ForallSet(..) | A::ExistsSet(..) => 0,
        A::Space(..) | A::Let(..) | A::Implies(..) => 0,
        A::Or(..) => 1,
        A::And(..) => 2,
        A::Not(_) | A::Next(_) | A::Will(_) | A::Prev(_) | A::Was(_) => 3,
        _ => 4,
    }
}

fn at(a: &Assertion, min: u8) -> String {
    let s = print_assertion(a);
    if level(a) < min {
        format!("({s})")
    } else {
        s
    }
}

pub fn print_assertion(a: &Assertion) -> String {
    use Assertion as A;
    match a {
        // An expression that is itself an equality prints as `l = r`, which
        // reads back as the (equivalent) assertion-level equality.
        A::Expr(e) => expr_at(e, 1),
        A::Eq(l, r) => format!("{} = {}", expr_at(l, 2), expr_at(r, 2)),
        A::HasClass(e, c) => format!("{} : {c}", expr_at(e, 2)),
        A::In(e, s) => format!("{} in {s}", expr_at(e, 2)),
        A::Implies(l, r) => format!("{} -> {}", at(l, 1), at(r, 0)),
        A::Or(l, r) => format!("{} or {}", at(l, 1), at(r, 2)),
        A::And(l, r) => format!("{} and {}", at(l, 2), at(r, 3)),
        A::Not(b) => format!("not {}", at(b, 3)),
        A::Next(b) => format!("next {}", at(b, 3)),
        A::Will(b) => format!("will {}", at(b, 3)),
        A::Prev(b) => format!("prev {}", at(b, 3)),
        A::Was(b) => format!("was {}", at(b, 3)),
        A::ForallObj(x, b) => format!("forall {x}. {}", at(b, 0)),
        A::ExistsObj(x, b) => format!("exists {x}. {}", at(b, 0)),
        A::ForallSet(x, b) => format!("forall {x}:SET. {}", at(b, 0)),
        A::ExistsSet(x, b) => format!("exists {x}:SET. {}", at(b, 0)),
        A::Space(b, s) => format!("in {s}: {}", at(b, 0)),
        A::Let(x, e, b) => format!("let {x} = {} in {}", print_expr(e), at(b, 0)),
        A::Access(x, y) => format!("access({}, {})", print_expr(x), print_expr(y)),
        A::Calls { caller, method, receiver, args } => format!(
            "calls({}, {method}, {}, [{}])",
            pattern(caller),
            pattern(receiver),
            args.iter().map(pattern).collect::<Vec<_>>().join(", ")
        ),
        A::External(e) => format!("external({})", print_expr(e)),
        A::Internal(e) => format!("internal({})", print_expr(e)),
        A::Changes(e) => format!("changes({})", print_expr(e)),
    }
}
