//! Program model and class-hierarchy queries.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use blackboard::entity::{MemberRef, Name};
use thiserror::Error;

pub const ROOT: &str = "Object";
pub const INIT: &str = "<init>";
pub const THIS: &str = "this";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IrError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("inheritance cycle through {0}")]
    HierarchyCycle(String),
    #[error("no root class named Object")]
    MissingRoot,
    #[error("invalid program: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldDecl {
    pub name: Name,
    pub ty: Name,
    pub is_final: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: Name,
    pub ty: Name,
}

/// Statements exactly as written in the source document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Statement {
    New { local: Name, class: Name },
    Const { local: Name },
    GetField { local: Name, receiver: Name, field: Name },
    PutField { receiver: Name, field: Name, source: Name },
    InvokeVirtual { local: Option<Name>, receiver: Name, method: Name },
    InvokeStatic { local: Option<Name>, class: Name, method: Name },
    Return { local: Option<Name> },
}

/// Where the value held by a local came from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Origin {
    This,
    Param(usize),
    New(Name),
    Const,
    /// Loaded from the given (resolved) field.
    Field(MemberRef),
    /// Result of a method call.
    Call,
}

/// A statement with names resolved against the program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Op {
    New { class: Name },
    Const,
    GetField { receiver: Origin, field: MemberRef },
    PutField { receiver: Origin, field: MemberRef, source: Origin },
    InvokeVirtual { receiver: Origin, declared: Name, method: Name },
    InvokeStatic { target: MemberRef },
    Return,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodDecl {
    pub name: Name,
    pub params: Vec<Param>,
    pub body: Vec<Statement>,
    /// One resolved operation per body statement.
    pub ops: Vec<Op>,
}

impl MethodDecl {
    pub fn is_init(&self) -> bool {
        &*self.name == INIT
    }

    pub fn has_invokes(&self) -> bool {
        self.ops
            .iter()
            .any(|op| matches!(op, Op::InvokeVirtual { .. } | Op::InvokeStatic { .. }))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDecl {
    pub name: Name,
    pub superclass: Option<Name>,
    pub fields: Vec<FieldDecl>,
    pub methods: Vec<MethodDecl>,
}

impl ClassDecl {
    pub fn field(&self, name: &str) -> Option<&FieldDecl> {
        self.fields.iter().find(|f| &*f.name == name)
    }

    pub fn method(&self, name: &str) -> Option<&MethodDecl> {
        self.methods.iter().find(|m| &*m.name == name)
    }
}

/// A parsed and fully resolved program. Immutable.
#[derive(Debug, Clone)]
pub struct Program {
    classes: Vec<ClassDecl>,
    entry_points: Vec<MemberRef>,
    index: HashMap<Name, usize>,
    children: BTreeMap<Name, BTreeSet<Name>>,
}

impl PartialEq for Program {
    fn eq(&self, other: &Self) -> bool {
        self.classes == other.classes && self.entry_points == other.entry_points
    }
}

impl Eq for Program {}

impl Program {
    /// Builds the hierarchy indexes. Expects names to be unique and every
    /// superclass to exist; [`crate::parse_program`] guarantees both.
    pub(crate) fn assemble(classes: Vec<ClassDecl>, entry_points: Vec<MemberRef>) -> Self {
        let index = classes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.name.clone(), i))
            .collect();
        let mut children: BTreeMap<Name, BTreeSet<Name>> = BTreeMap::new();
        for c in &classes {
            children.entry(c.name.clone()).or_default();
            if let Some(s) = &c.superclass {
                children.entry(s.clone()).or_default().insert(c.name.clone());
            }
        }
        Self {
            classes,
            entry_points,
            index,
            children,
        }
    }

    /// Classes in declaration order.
    pub fn classes(&self) -> &[ClassDecl] {
        &self.classes
    }

    pub fn entry_points(&self) -> &[MemberRef] {
        &self.entry_points
    }

    pub fn class(&self, name: &str) -> Option<&ClassDecl> {
        self.index.get(name).map(|&i| &self.classes[i])
    }

    pub fn has_class(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    /// All class names, sorted.
    pub fn class_names(&self) -> BTreeSet<Name> {
        self.index.keys().cloned().collect()
    }

    pub fn superclass(&self, name: &str) -> Option<&Name> {
        self.class(name)?.superclass.as_ref()
    }

    pub fn direct_subclasses(&self, name: &str) -> impl Iterator<Item = &Name> {
        self.children.get(name).into_iter().flatten()
    }

    /// `name` and its superclasses, most derived first.
    pub fn supertypes(&self, name: &str) -> Vec<Name> {
        let mut out = Vec::new();
        let mut cur = self.class(name).map(|c| c.name.clone());
        while let Some(c) = cur {
            cur = self.superclass(&c).cloned();
            out.push(c);
        }
        out
    }

    pub fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        self.supertypes(sub).iter().any(|s| &**s == sup)
    }

    /// `name` and all its transitive subclasses, ordered by name.
    pub fn subtypes_of(&self, name: &str) -> Result<BTreeSet<Name>, IrError> {
        let root = self
            .class(name)
            .ok_or_else(|| IrError::Resolution(format!("unknown class {name}")))?;
        let mut out = BTreeSet::new();
        let mut stack = vec![root.name.clone()];
        while let Some(c) = stack.pop() {
            stack.extend(self.direct_subclasses(&c).cloned());
            out.insert(c);
        }
        Ok(out)
    }

    /// Every method with its reference, classes in declaration order.
    pub fn methods(&self) -> impl Iterator<Item = (MemberRef, &MethodDecl)> {
        self.classes.iter().flat_map(|c| {
            c.methods
                .iter()
                .map(move |m| (MemberRef::new(c.name.clone(), m.name.clone()), m))
        })
    }

    pub fn fields(&self) -> impl Iterator<Item = (MemberRef, &FieldDecl)> {
        self.classes.iter().flat_map(|c| {
            c.fields
                .iter()
                .map(move |f| (MemberRef::new(c.name.clone(), f.name.clone()), f))
        })
    }

    pub fn method(&self, r: &MemberRef) -> Option<&MethodDecl> {
        self.class(&r.class)?.method(&r.name)
    }

    pub fn field(&self, r: &MemberRef) -> Option<&FieldDecl> {
        self.class(&r.class)?.field(&r.name)
    }

    /// The nearest declaration of field `name` at or above `class`.
    pub fn lookup_field(&self, class: &str, name: &str) -> Option<MemberRef> {
        self.supertypes(class).into_iter().find_map(|c| {
            let decl = self.class(&c)?.field(name)?;
            Some(MemberRef::new(c.clone(), decl.name.clone()))
        })
    }

    /// The nearest declaration of method `name` at or above `class`.
    pub fn lookup_method(&self, class: &str, name: &str) -> Option<MemberRef> {
        self.supertypes(class).into_iter().find_map(|c| {
            let decl = self.class(&c)?.method(name)?;
            Some(MemberRef::new(c.clone(), decl.name.clone()))
        })
    }

    /// Targets of a virtual call of `method` on a receiver declared as
    /// `declared`, given the instantiated types.
    pub fn resolve_virtual<'a>(
        &self,
        declared: &str,
        method: &str,
        instantiated: impl IntoIterator<Item = &'a str>,
    ) -> Result<BTreeSet<MemberRef>, IrError> {
        if self.lookup_method(declared, method).is_none() {
            return Err(IrError::Resolution(format!(
                "{declared} has no method {method}"
            )));
        }
        let mut out = BTreeSet::new();
        for t in instantiated {
            if self.is_subtype(t, declared) {
                if let Some(m) = self.lookup_method(t, method) {
                    out.insert(m);
                }
            }
        }
        Ok(out)
    }

    pub fn method_count(&self) -> usize {
        self.classes.iter().map(|c| c.methods.len()).sum()
    }
}
