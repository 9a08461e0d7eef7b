//! Abstract syntax of the object language: modules, classes, statements and
//! ghost expressions, plus method/ghost lookup and module linking.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// An identifier: variable, field, method, ghost or class name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ident(Arc<str>);

impl Ident {
    pub fn new(s: &str) -> Self {
        Ident(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn this() -> Self {
        Ident::new("this")
    }

    pub fn is_this(&self) -> bool {
        &*self.0 == "this"
    }
}

impl fmt::Debug for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Ident {
    fn from(s: &str) -> Self {
        Ident::new(s)
    }
}

pub type ClassId = Ident;

/// Class name given to the object created by the initial configuration.
pub const OBJECT_CLASS: &str = "Object";

/// Right-hand sides of assignments and call/constructor arguments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Operand {
    Var(Ident),
    Nat(u64),
    Null,
}

impl Operand {
    pub fn var(&self) -> Option<&Ident> {
        match self {
            Operand::Var(x) => Some(x),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    /// `x.f := y`
    FieldWrite { target: Ident, field: Ident, value: Operand },
    /// `x := y.f`
    FieldRead { dest: Ident, source: Ident, field: Ident },
    /// `x := y.m(args)`
    Call { dest: Ident, receiver: Ident, method: Ident, args: Vec<Operand> },
    /// `x := new C(args)`
    New { dest: Ident, class: ClassId, args: Vec<Operand> },
    /// `return x`
    Return(Operand),
}

impl Stmt {
    /// Every variable mentioned by the statement, in source order.
    pub fn vars(&self) -> Vec<&Ident> {
        let mut out = Vec::new();
        match self {
            Stmt::FieldWrite { target, value, .. } => {
                out.push(target);
                out.extend(value.var());
            }
            Stmt::FieldRead { dest, source, .. } => {
                out.push(dest);
                out.push(source);
            }
            Stmt::Call { dest, receiver, args, .. } => {
                out.push(dest);
                out.push(receiver);
                out.extend(args.iter().filter_map(Operand::var));
            }
            Stmt::New { dest, args, .. } => {
                out.push(dest);
                out.extend(args.iter().filter_map(Operand::var));
            }
            Stmt::Return(v) => out.extend(v.var()),
        }
        out
    }

    /// Consistently renames variables; names absent from `map` are kept.
    pub fn rename(&self, map: &BTreeMap<Ident, Ident>) -> Stmt {
        let r = |x: &Ident| map.get(x).cloned().unwrap_or_else(|| x.clone());
        let ro = |o: &Operand| match o {
            Operand::Var(x) => Operand::Var(r(x)),
            other => other.clone(),
        };
        match self {
            Stmt::FieldWrite { target, field, value } => {
                Stmt::FieldWrite { target: r(target), field: field.clone(), value: ro(value) }
            }
            Stmt::FieldRead { dest, source, field } => {
                Stmt::FieldRead { dest: r(dest), source: r(source), field: field.clone() }
            }
            Stmt::Call { dest, receiver, method, args } => Stmt::Call {
                dest: r(dest),
                receiver: r(receiver),
                method: method.clone(),
                args: args.iter().map(ro).collect(),
            },
            Stmt::New { dest, class, args } => {
                Stmt::New { dest: r(dest), class: class.clone(), args: args.iter().map(ro).collect() }
            }
            Stmt::Return(v) => Stmt::Return(ro(v)),
        }
    }
}

/// Ghost expressions. `Field` is `e.f` without parentheses: it reads a
/// physical field when the object has one, and otherwise calls the
/// zero-argument ghost `f`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    True,
    False,
    Null,
    Nat(u64),
    Var(Ident),
    Eq(Box<Expr>, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Field(Box<Expr>, Ident),
    GhostCall(Box<Expr>, Ident, Vec<Expr>),
    Plus(Box<Expr>, Box<Expr>),
    Geq(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(Ident::new(name))
    }

    pub fn field(self, f: &str) -> Expr {
        Expr::Field(Box::new(self), Ident::new(f))
    }

    pub fn eq(self, other: Expr) -> Expr {
        Expr::Eq(Box::new(self), Box::new(other))
    }

    pub fn free_vars(&self, out: &mut BTreeSet<Ident>) {
        match self {
            Expr::True | Expr::False | Expr::Null | Expr::Nat(_) => {}
            Expr::Var(x) => {
                out.insert(x.clone());
            }
            Expr::Eq(a, b) | Expr::Plus(a, b) | Expr::Geq(a, b) => {
                a.free_vars(out);
                b.free_vars(out);
            }
            Expr::If(c, t, e) => {
                c.free_vars(out);
                t.free_vars(out);
                e.free_vars(out);
            }
            Expr::Field(e, _) => e.free_vars(out),
            Expr::GhostCall(e, _, args) => {
                e.free_vars(out);
                for a in args {
                    a.free_vars(out);
                }
            }
        }
    }

    /// Substitutes variables by variables.
    pub fn rename(&self, map: &BTreeMap<Ident, Ident>) -> Expr {
        let b = |e: &Expr| Box::new(e.rename(map));
        match self {
            Expr::Var(x) => Expr::Var(map.get(x).cloned().unwrap_or_else(|| x.clone())),
            Expr::True | Expr::False | Expr::Null | Expr::Nat(_) => self.clone(),
            Expr::Eq(l, r) => Expr::Eq(b(l), b(r)),
            Expr::Plus(l, r) => Expr::Plus(b(l), b(r)),
            Expr::Geq(l, r) => Expr::Geq(b(l), b(r)),
            Expr::If(c, t, e) => Expr::If(b(c), b(t), b(e)),
            Expr::Field(e, f) => Expr::Field(b(e), f.clone()),
            Expr::GhostCall(e, f, args) => {
                Expr::GhostCall(b(e), f.clone(), args.iter().map(|a| a.rename(map)).collect())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MethodDecl {
    pub params: Vec<Ident>,
    pub body: Arc<[Stmt]>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GhostDecl {
    pub params: Vec<Ident>,
    pub body: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ClassDesc {
    /// Declaration order matters: `new C(args)` assigns positionally.
    pub fields: Vec<Ident>,
    pub methods: BTreeMap<Ident, MethodDecl>,
    pub ghosts: BTreeMap<Ident, GhostDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AstError {
    #[error("class {class}: field `{name}` declared twice")]
    DuplicateField { class: ClassId, name: Ident },
    #[error("class {class}: method `{name}` declared twice")]
    DuplicateMethod { class: ClassId, name: Ident },
    #[error("class {class}: ghost `{name}` declared twice")]
    DuplicateGhost { class: ClassId, name: Ident },
    #[error("class {class}: `{name}` is both a field and a ghost")]
    FieldGhostClash { class: ClassId, name: Ident },
    #[error("class {class}: `{member}` has parameter `{param}` repeated or named `this`")]
    BadParam { class: ClassId, member: Ident, param: Ident },
    #[error("class {0} declared twice")]
    DuplicateClass(ClassId),
    #[error("class name `{0}` is reserved")]
    ReservedClass(ClassId),
}

/// Incremental builder that enforces the class well-formedness rules.
#[derive(Debug)]
pub struct ClassBuilder {
    name: ClassId,
    desc: ClassDesc,
}

impl ClassBuilder {
    pub fn new(name: impl Into<ClassId>) -> Self {
        ClassBuilder { name: name.into(), desc: ClassDesc::default() }
    }

    pub fn field(mut self, f: &str) -> Result<Self, AstError> {
        self.add_field(Ident::new(f))?;
        Ok(self)
    }

    pub fn add_field(&mut self, f: Ident) -> Result<(), AstError> {
        if self.desc.fields.contains(&f) {
            return Err(AstError::DuplicateField { class: self.name.clone(), name: f });
        }
        if self.desc.ghosts.contains_key(&f) {
            return Err(AstError::FieldGhostClash { class: self.name.clone(), name: f });
        }
        self.desc.fields.push(f);
        Ok(())
    }

    pub fn add_method(&mut self, m: Ident, params: Vec<Ident>, body: Vec<Stmt>) -> Result<(), AstError> {
        self.check_params(&m, &params)?;
        if self.desc.methods.contains_key(&m) {
            return Err(AstError::DuplicateMethod { class: self.name.clone(), name: m });
        }
        self.desc.methods.insert(m, MethodDecl { params, body: body.into() });
        Ok(())
    }

    pub fn add_ghost(&mut self, g: Ident, params: Vec<Ident>, body: Expr) -> Result<(), AstError> {
        self.check_params(&g, &params)?;
        if self.desc.ghosts.contains_key(&g) {
            return Err(AstError::DuplicateGhost { class: self.name.clone(), name: g });
        }
        if self.desc.fields.contains(&g) {
            return Err(AstError::FieldGhostClash { class: self.name.clone(), name: g });
        }
        self.desc.ghosts.insert(g, GhostDecl { params, body });
        Ok(())
    }

    fn check_params(&self, member: &Ident, params: &[Ident]) -> Result<(), AstError> {
        let mut seen = BTreeSet::new();
        for p in params {
            if p.is_this() || !seen.insert(p) {
                return Err(AstError::BadParam { class: self.name.clone(), member: member.clone(), param: p.clone() });
            }
        }
        Ok(())
    }

    pub fn build(self) -> (ClassId, ClassDesc) {
        (self.name, self.desc)
    }
}

/// A module: a finite map from class identifiers to class descriptions.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ModuleDef {
    classes: BTreeMap<ClassId, Arc<ClassDesc>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot link: classes defined in both modules: {}", .0.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(", "))]
pub struct OverlapError(pub Vec<ClassId>);

impl ModuleDef {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: ClassId, desc: ClassDesc) -> Result<(), AstError> {
        if name.as_str() == OBJECT_CLASS {
            return Err(AstError::ReservedClass(name));
        }
        if self.classes.contains_key(&name) {
            return Err(AstError::DuplicateClass(name));
        }
        self.classes.insert(name, Arc::new(desc));
        Ok(())
    }

    pub fn with(mut self, class: ClassBuilder) -> Result<Self, AstError> {
        let (n, d) = class.build();
        self.insert(n, d)?;
        Ok(self)
    }

    pub fn class(&self, c: &ClassId) -> Option<&ClassDesc> {
        self.classes.get(c).map(|d| &**d)
    }

    pub fn contains(&self, c: &ClassId) -> bool {
        self.classes.contains_key(c)
    }

    pub fn classes(&self) -> impl Iterator<Item = (&ClassId, &ClassDesc)> {
        self.classes.iter().map(|(k, v)| (k, &**v))
    }

    pub fn class_ids(&self) -> impl Iterator<Item = &ClassId> {
        self.classes.keys()
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn lookup_method(&self, c: &ClassId, m: &Ident) -> Option<&MethodDecl> {
        self.classes.get(c)?.methods.get(m)
    }

    pub fn lookup_ghost(&self, c: &ClassId, g: &Ident) -> Option<&GhostDecl> {
        self.classes.get(c)?.ghosts.get(g)
    }

    /// Union of two modules with disjoint class sets.
    pub fn link(&self, other: &ModuleDef) -> Result<ModuleDef, OverlapError> {
        let overlap: Vec<ClassId> = self.classes.keys().filter(|c| other.classes.contains_key(*c)).cloned().collect();
        if !overlap.is_empty() {
            return Err(OverlapError(overlap));
        }
        let mut classes = self.classes.clone();
        classes.extend(other.classes.iter().map(|(k, v)| (k.clone(), Arc::clone(v))));
        Ok(ModuleDef { classes })
    }
}

/// Free function form of [`ModuleDef::link`].
pub fn link(m1: &ModuleDef, m2: &ModuleDef) -> Result<ModuleDef, OverlapError> {
    m1.link(m2)
}
