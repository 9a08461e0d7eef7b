use std::collections::BTreeMap;

use super::lexer::{lex, Tok, Token};
use super::{ParseError, Span};
use crate::assertion::{Assertion, NamedAssertion, Pattern, Spec};
use crate::ast::{ClassBuilder, ClassId, Expr, Ident, ModuleDef, Operand, Stmt};

const KEYWORDS: &[&str] = &[
    "class", "field", "method", "ghost", "return", "new", "if", "then", "else", "true", "false", "null", "forall",
    "exists", "not", "and", "or", "next", "will", "prev", "was", "in", "let", "access", "calls", "external",
    "internal", "changes", "spec", "assert",
];

/// Names that would denote transitive access, which the assertion language
/// does not define.
type Unary = fn(Assertion) -> Assertion;

const TRANSITIVE: &[&str] = &["reaches", "canAccessTr", "access_tr", "accessTr"];

/// Source locations of module declarations, for diagnostics.
#[derive(Clone, Debug, Default)]
pub struct ModuleSpans {
    pub classes: BTreeMap<ClassId, Span>,
    /// Keyed by (class, member name).
    pub members: BTreeMap<(ClassId, Ident), Span>,
    /// Statement spans per method, in body order.
    pub stmts: BTreeMap<(ClassId, Ident), Vec<Span>>,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(src: &str) -> PResult<Self> {
        Ok(Parser { toks: lex(src)?, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(ParseError { span: self.span(), message: message.into() })
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Word(w) => format!("`{w}`"),
            Tok::Nat(n) => format!("`{n}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Word(w) if w == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        if self.is_kw(k) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", self.describe()))
        }
    }

    fn expect_kw(&mut self, k: &str) -> PResult<()> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            self.err(format!("expected `{k}`, found {}", self.describe()))
        }
    }

    /// Any word, keywords included (field, method and class names).
    fn name(&mut self) -> PResult<Ident> {
        match self.peek().clone() {
            Tok::Word(w) => {
                self.bump();
                Ok(Ident::new(&w))
            }
            _ => self.err(format!("expected a name, found {}", self.describe())),
        }
    }

    /// A word that is not a keyword (variables).
    fn var(&mut self) -> PResult<Ident> {
        match self.peek().clone() {
            Tok::Word(w) if !KEYWORDS.contains(&w.as_str()) => {
                self.bump();
                Ok(Ident::new(&w))
            }
            _ => self.err(format!("expected a variable, found {}", self.describe())),
        }
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    fn expect_eof(&self) -> PResult<()> {
        if self.at_eof() {
            Ok(())
        } else {
            self.err(format!("unexpected {}", self.describe()))
        }
    }

    fn comma_list<T>(&mut self, close: &str, mut item: impl FnMut(&mut Self) -> PResult<T>) -> PResult<Vec<T>> {
        let mut out = Vec::new();
        if self.eat_sym(close) {
            return Ok(out);
        }
        loop {
            out.push(item(self)?);
            if self.eat_sym(close) {
                return Ok(out);
            }
            self.expect_sym(",")?;
        }
    }

    // ---- modules ---------------------------------------------------------

    fn module(&mut self) -> PResult<(ModuleDef, ModuleSpans)> {
        let mut m = ModuleDef::new();
        let mut spans = ModuleSpans::default();
        let mut news: Vec<(ClassId, usize, Span)> = Vec::new();
        while !self.at_eof() {
            let start = self.span();
            self.expect_kw("class")?;
            let cname = self.name()?;
            let mut b = ClassBuilder::new(cname.clone());
            self.expect_sym("{")?;
            while !self.eat_sym("}") {
                let mstart = self.span();
                let wrap = |e: crate::ast::AstError| ParseError { span: mstart, message: e.to_string() };
                if self.eat_kw("field") {
                    loop {
                        let fs = self.span();
                        let f = self.name()?;
                        b.add_field(f.clone()).map_err(wrap)?;
                        spans.members.insert((cname.clone(), f), fs.to(self.prev_span()));
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                    self.eat_sym(";");
                } else if self.eat_kw("method") {
                    let mname = self.name()?;
                    self.expect_sym("(")?;
                    let params = self.comma_list(")", Self::var)?;
                    self.expect_sym("{")?;
                    let (body, stmt_spans) = self.stmts_until("}")?;
                    for s in body.iter().zip(&stmt_spans) {
                        if let (Stmt::New { class, args, .. }, sp) = s {
                            news.push((class.clone(), args.len(), *sp));
                        }
                    }
                    b.add_method(mname.clone(), params, body).map_err(wrap)?;
                    spans.stmts.insert((cname.clone(), mname.clone()), stmt_spans);
                    spans.members.insert((cname.clone(), mname), mstart.to(self.prev_span()));
                } else if self.eat_kw("ghost") {
                    let gname = self.name()?;
                    let params = if self.eat_sym("(") { self.comma_list(")", Self::var)? } else { Vec::new() };
                    self.expect_sym("{")?;
                    let body = self.expr()?;
                    self.expect_sym("}")?;
                    b.add_ghost(gname.clone(), params, body).map_err(wrap)?;
                    spans.members.insert((cname.clone(), gname), mstart.to(self.prev_span()));
                } else {
                    return self.err(format!("expected `field`, `method`, `ghost` or `}}`, found {}", self.describe()));
                }
            }
            let (n, d) = b.build();
            m.insert(n, d).map_err(|e| ParseError { span: start, message: e.to_string() })?;
            spans.classes.insert(cname, start.to(self.prev_span()));
        }
        for (class, n, sp) in news {
            if let Some(d) = m.class(&class) {
                if n > d.fields.len() {
                    return Err(ParseError {
                        span: sp,
                        message: format!("`new {class}` given {n} arguments but {class} has {} fields", d.fields.len()),
                    });
                }
            }
        }
        Ok((m, spans))
    }

    fn stmts_until(&mut self, close: &str) -> PResult<(Vec<Stmt>, Vec<Span>)> {
        let mut out = Vec::new();
        let mut spans = Vec::new();
        loop {
            if self.eat_sym(close) || (close.is_empty() && self.at_eof()) {
                return Ok((out, spans));
            }
            let start = self.span();
            out.push(self.stmt()?);
            spans.push(start.to(self.prev_span()));
            if !self.eat_sym(";") {
                if close.is_empty() {
                    self.expect_eof()?;
                } else {
                    self.expect_sym(close)?;
                }
                return Ok((out, spans));
            }
        }
    }

    fn operand(&mut self) -> PResult<Operand> {
        match self.peek().clone() {
            Tok::Nat(n) => {
                self.bump();
                Ok(Operand::Nat(n))
            }
            Tok::Word(w) if w == "null" => {
                self.bump();
                Ok(Operand::Null)
            }
            _ => Ok(Operand::Var(self.var()?)),
        }
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        if self.is_kw("if") {
            return self.err("`if` is not a statement; encode the choice by dispatching on an object");
        }
        if self.eat_kw("return") {
            return Ok(Stmt::Return(self.operand()?));
        }
        let x = self.var()?;
        if self.eat_sym(".") {
            let field = self.name()?;
            self.expect_sym(":=")?;
            let value = self.operand()?;
            return Ok(Stmt::FieldWrite { target: x, field, value });
        }
        self.expect_sym(":=")?;
        if self.eat_kw("new") {
            let class = self.name()?;
            self.expect_sym("(")?;
            let args = self.comma_list(")", Self::operand)?;
            return Ok(Stmt::New { dest: x, class, args });
        }
        let y = self.var()?;
        if !self.is_sym(".") {
            return self.err("expected `.`: the right-hand side must be a field read, call or `new`");
        }
        self.bump();
        let f = self.name()?;
        if self.eat_sym("(") {
            let args = self.comma_list(")", Self::operand)?;
            Ok(Stmt::Call { dest: x, receiver: y, method: f, args })
        } else {
            Ok(Stmt::FieldRead { dest: x, source: y, field: f })
        }
    }

    // ---- expressions -----------------------------------------------------

    fn expr(&mut self) -> PResult<Expr> {
        if self.eat_kw("if") {
            let c = self.expr()?;
            self.expect_kw("then")?;
            let t = self.expr()?;
            self.expect_kw("else")?;
            let e = self.expr()?;
            return Ok(Expr::If(Box::new(c), Box::new(t), Box::new(e)));
        }
        let l = self.sum()?;
        if self.eat_sym("=") {
            let r = self.operand_expr()?;
            return Ok(Expr::Eq(Box::new(l), Box::new(r)));
        }
        if self.eat_sym(">=") {
            let r = self.operand_expr()?;
            return Ok(Expr::Geq(Box::new(l), Box::new(r)));
        }
        Ok(l)
    }

    /// Right operand of `=` / `>=`: a sum, or an `if` that extends to the end.
    fn operand_expr(&mut self) -> PResult<Expr> {
        if self.is_kw("if") {
            self.expr()
        } else {
            self.sum()
        }
    }

    fn sum(&mut self) -> PResult<Expr> {
        let mut l = self.postfix()?;
        while self.eat_sym("+") {
            let r = self.postfix()?;
            l = Expr::Plus(Box::new(l), Box::new(r));
        }
        Ok(l)
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.atom()?;
        while self.eat_sym(".") {
            let f = self.name()?;
            if self.eat_sym("(") {
                let args = self.comma_list(")", Self::expr)?;
                e = Expr::GhostCall(Box::new(e), f, args);
            } else {
                e = Expr::Field(Box::new(e), f);
            }
        }
        Ok(e)
    }

    fn atom(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Nat(n) => {
                self.bump();
                Ok(Expr::Nat(n))
            }
            Tok::Word(w) if w == "true" => {
                self.bump();
                Ok(Expr::True)
            }
            Tok::Word(w) if w == "false" => {
                self.bump();
                Ok(Expr::False)
            }
            Tok::Word(w) if w == "null" => {
                self.bump();
                Ok(Expr::Null)
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            _ => Ok(Expr::Var(self.var()?)),
        }
    }

    // ---- assertions ------------------------------------------------------

    fn assertion(&mut self) -> PResult<Assertion> {
        if let Some(a) = self.binder_form()? {
            return Ok(a);
        }
        let l = self.disj()?;
        if self.eat_sym("->") {
            let r = self.assertion()?;
            return Ok(Assertion::implies(l, r));
        }
        Ok(l)
    }

    /// Quantifiers, `in S: A` and `let`; their bodies extend as far right as
    /// possible.
    fn binder_form(&mut self) -> PResult<Option<Assertion>> {
        let universal = if self.is_kw("forall") {
            true
        } else if self.is_kw("exists") {
            false
        } else if self.is_kw("in") {
            self.bump();
            let s = self.var()?;
            self.expect_sym(":")?;
            let body = self.assertion()?;
            return Ok(Some(Assertion::Space(Box::new(body), s)));
        } else if self.is_kw("let") {
            self.bump();
            let v = self.var()?;
            self.expect_sym("=")?;
            let e = self.expr()?;
            self.expect_kw("in")?;
            let body = self.assertion()?;
            return Ok(Some(Assertion::Let(v, e, Box::new(body))));
        } else {
            return Ok(None);
        };
        self.bump();
        let x = self.var()?;
        let sort = if self.eat_sym(":") { Some(self.name()?) } else { None };
        self.expect_sym(".")?;
        let body = Box::new(self.assertion()?);
        Ok(Some(match sort {
            Some(s) if s.as_str() == "SET" => {
                if universal {
                    Assertion::ForallSet(x, body)
                } else {
                    Assertion::ExistsSet(x, body)
                }
            }
            Some(c) => {
                let guard = Assertion::HasClass(Expr::Var(x.clone()), c);
                if universal {
                    Assertion::ForallObj(x, Box::new(Assertion::Implies(Box::new(guard), body)))
                } else {
                    Assertion::ExistsObj(x, Box::new(Assertion::And(Box::new(guard), body)))
                }
            }
            None if universal => Assertion::ForallObj(x, body),
            None => Assertion::ExistsObj(x, body),
        }))
    }

    fn disj(&mut self) -> PResult<Assertion> {
        let mut l = self.conj()?;
        while self.eat_kw("or") {
            let r = self.conj()?;
            l = Assertion::or(l, r);
        }
        Ok(l)
    }

    fn conj(&mut self) -> PResult<Assertion> {
        let mut l = self.unary()?;
        while self.eat_kw("and") {
            let r = self.unary()?;
            l = Assertion::and(l, r);
        }
        Ok(l)
    }

    fn unary(&mut self) -> PResult<Assertion> {
        let ops: [(&str, Unary); 5] = [
            ("not", Assertion::not),
            ("next", Assertion::next),
            ("will", Assertion::will),
            ("prev", Assertion::prev),
            ("was", Assertion::was),
        ];
        for (kw, build) in ops {
            if self.eat_kw(kw) {
                return Ok(build(self.unary()?));
            }
        }
        if let Some(a) = self.binder_form()? {
            return Ok(a);
        }
        self.atom_assertion()
    }

    fn pattern(&mut self) -> PResult<Pattern> {
        if self.eat_sym("_") {
            Ok(Pattern::Wild)
        } else {
            Ok(Pattern::Expr(self.expr()?))
        }
    }

    fn atom_assertion(&mut self) -> PResult<Assertion> {
        if let Tok::Word(w) = self.peek().clone() {
            if TRANSITIVE.contains(&w.as_str()) || (w == "access" && matches!(self.peek_at(1), Tok::Sym("*"))) {
                return self.err(
                    "transitive access is not part of the assertion language; state the chain of `access` facts explicitly",
                );
            }
            if matches!(self.peek_at(1), Tok::Sym("(")) {
                match w.as_str() {
                    "access" => {
                        self.bump();
                        self.bump();
                        let x = self.expr()?;
                        self.expect_sym(",")?;
                        let y = self.expr()?;
                        self.expect_sym(")")?;
                        return Ok(Assertion::Access(x, y));
                    }
                    "calls" => {
                        self.bump();
                        self.bump();
                        let caller = self.pattern()?;
                        self.expect_sym(",")?;
                        let method = self.name()?;
                        self.expect_sym(",")?;
                        let receiver = self.pattern()?;
                        self.expect_sym(",")?;
                        self.expect_sym("[")?;
                        let args = self.comma_list("]", Self::pattern)?;
                        self.expect_sym(")")?;
                        return Ok(Assertion::Calls { caller, method, receiver, args });
                    }
                    "external" | "internal" | "changes" => {
                        self.bump();
                        self.bump();
                        let e = self.expr()?;
                        self.expect_sym(")")?;
                        return Ok(match w.as_str() {
                            "external" => Assertion::External(e),
                            "internal" => Assertion::Internal(e),
                            _ => Assertion::Changes(e),
                        });
                    }
                    _ => {}
                }
            }
        }
        if self.eat_sym("[") {
            let a = self.assertion()?;
            self.expect_sym("]")?;
            return Ok(a);
        }
        if self.is_sym("(") {
            let save = self.pos;
            self.bump();
            if let Ok(a) = self.assertion() {
                if self.eat_sym(")") && !self.continues_expr() {
                    return Ok(a);
                }
            }
            self.pos = save;
        }
        self.expr_assertion()
    }

    fn continues_expr(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Sym(".") | Tok::Sym("=") | Tok::Sym("!=") | Tok::Sym(">=") | Tok::Sym("+") | Tok::Sym(":")
        ) || self.is_kw("in")
    }

    fn expr_assertion(&mut self) -> PResult<Assertion> {
        let l = if self.is_kw("if") { self.expr()? } else { self.sum()? };
        if self.eat_sym("=") {
            let r = self.operand_expr()?;
            return Ok(Assertion::Eq(l, r));
        }
        if self.eat_sym("!=") {
            let r = self.operand_expr()?;
            return Ok(Assertion::not(Assertion::Eq(l, r)));
        }
        if self.eat_sym(">=") {
            let r = self.operand_expr()?;
            return Ok(Assertion::Expr(Expr::Geq(Box::new(l), Box::new(r))));
        }
        if self.eat_sym(":") {
            return Ok(Assertion::HasClass(l, self.name()?));
        }
        if self.eat_kw("in") {
            return Ok(Assertion::In(l, self.var()?));
        }
        Ok(Assertion::Expr(l))
    }

    fn spec(&mut self) -> PResult<Spec> {
        let mut spec = Spec::default();
        if self.eat_kw("spec") {
            spec.name = Some(self.name()?.to_string());
            self.eat_sym(";");
        }
        while !self.at_eof() {
            let start = self.span();
            self.expect_kw("assert")?;
            let name = self.name()?.to_string();
            self.expect_sym(":")?;
            let a = self.assertion()?.alpha_normalize();
            self.expect_sym(";")?;
            if spec.assertions.iter().any(|n| n.name == name) {
                return Err(ParseError { span: start, message: format!("assertion `{name}` defined twice") });
            }
            spec.assertions.push(NamedAssertion { name, assertion: a });
        }
        Ok(spec)
    }
}

pub fn parse_module(src: &str) -> Result<ModuleDef, ParseError> {
    parse_module_spanned(src).map(|(m, _)| m)
}

pub fn parse_module_spanned(src: &str) -> Result<(ModuleDef, ModuleSpans), ParseError> {
    let mut p = Parser::new(src)?;
    p.module()
}

/// A `;`-separated statement list, as used for drivers.
pub fn parse_stmts(src: &str) -> Result<Vec<Stmt>, ParseError> {
    let mut p = Parser::new(src)?;
    Ok(p.stmts_until("")?.0)
}

pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

/// Parses one assertion; nested quantifiers are renamed apart.
pub fn parse_assertion(src: &str) -> Result<Assertion, ParseError> {
    let mut p = Parser::new(src)?;
    let a = p.assertion()?;
    p.expect_eof()?;
    Ok(a.alpha_normalize())
}

pub fn parse_spec(src: &str) -> Result<Spec, ParseError> {
    Parser::new(src)?.spec()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn module_with_all_member_kinds() {
        let m = parse_module(
            "class Node {
               field next, val
               method setNext(n) { this.next := n; return this }
               ghost last { if this.next = null then this else this.next.last }
               ghost plus(k) { this.val + k }
             }",
        )
        .unwrap();
        let d = m.class(&"Node".into()).unwrap();
        assert_eq!(d.fields, vec![Ident::new("next"), Ident::new("val")]);
        assert_eq!(d.methods[&Ident::new("setNext")].body.len(), 2);
        assert_eq!(d.ghosts[&Ident::new("plus")].params, vec![Ident::new("k")]);
    }

    #[test]
    fn statements_of_each_form() {
        let s = parse_stmts("x.f := y; x := y.f; x := y.m(a, 3, null); x := new C(a); return x").unwrap();
        assert!(matches!(s[0], Stmt::FieldWrite { .. }));
        assert!(matches!(s[1], Stmt::FieldRead { .. }));
        assert!(matches!(s[2], Stmt::Call { .. }));
        assert!(matches!(s[3], Stmt::New { .. }));
        assert!(matches!(s[4], Stmt::Return(_)));
    }

    #[test]
    fn if_statement_is_rejected_with_a_span() {
        let e = parse_module("class A {\n method m() { if x then y else z } }").unwrap_err();
        assert_eq!((e.span.start.line, e.span.start.col), (2, 15));
        assert!(e.message.contains("not a statement"));
    }

    #[test]
    fn too_many_constructor_arguments() {
        let e = parse_module("class P { field a method m() { p := new P(1, 2); return p } }").unwrap_err();
        assert!(e.message.contains("2 arguments"));
    }

    #[test]
    fn quantifier_bodies_extend_right() {
        let a = parse_assertion("forall x. x : C -> exists y. access(x, y)").unwrap();
        match a {
            Assertion::ForallObj(_, b) => assert!(matches!(*b, Assertion::Implies(..))),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn typed_quantifiers_desugar() {
        let a = parse_assertion("exists a:Account. a.balance >= 10").unwrap();
        let b = parse_assertion("exists a. a : Account and a.balance >= 10").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn parenthesised_expression_on_the_left() {
        let a = parse_assertion("(x).f = y").unwrap();
        assert_eq!(a, Assertion::Eq(Expr::var("x").field("f"), Expr::var("y")));
        let b = parse_assertion("(x = y)").unwrap();
        assert_eq!(b, Assertion::Eq(Expr::var("x"), Expr::var("y")));
    }

    #[test]
    fn calls_with_wildcards() {
        let a = parse_assertion("calls(o, deposit, _, [a, _])").unwrap();
        match a {
            Assertion::Calls { receiver, args, .. } => {
                assert_eq!(receiver, Pattern::Wild);
                assert_eq!(args.len(), 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn transitive_access_is_rejected() {
        assert!(parse_assertion("reaches(x, y)").unwrap_err().message.contains("transitive"));
        assert!(parse_assertion("access*(x, y)").unwrap_err().message.contains("transitive"));
    }

    #[test]
    fn spec_file() {
        let s = parse_spec("spec Demo;\nassert a1: true;\nassert a2: not false;").unwrap();
        assert_eq!(s.name.as_deref(), Some("Demo"));
        assert_eq!(s.assertions.len(), 2);
        assert!(parse_spec("assert a: true; assert a: true;").is_err());
    }
}
