//! Entities: the things properties are computed for.

use std::fmt;
use std::sync::Arc;

/// Shared, cheaply clonable identifier text.
pub type Name = Arc<str>;

/// A member (field or method) of a named class.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MemberRef {
    pub class: Name,
    pub name: Name,
}

impl MemberRef {
    pub fn new(class: impl Into<Name>, name: impl Into<Name>) -> Self {
        Self {
            class: class.into(),
            name: name.into(),
        }
    }
}

impl fmt::Display for MemberRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.class, self.name)
    }
}

/// Identifies the entity a property is attached to.
///
/// Equality is structural and the derived ordering is total, so maps keyed by
/// entities iterate reproducibly.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityId {
    Class(Name),
    Field(MemberRef),
    Method(MemberRef),
    /// A statement inside a method, identified by its index in the body.
    CallSite(MemberRef, u32),
    /// Synthetic entities, e.g. the whole-project entity or test keys.
    Opaque(Name),
}

impl EntityId {
    pub fn class(name: impl Into<Name>) -> Self {
        EntityId::Class(name.into())
    }

    pub fn field(class: impl Into<Name>, name: impl Into<Name>) -> Self {
        EntityId::Field(MemberRef::new(class, name))
    }

    pub fn method(class: impl Into<Name>, name: impl Into<Name>) -> Self {
        EntityId::Method(MemberRef::new(class, name))
    }

    pub fn call_site(method: MemberRef, index: u32) -> Self {
        EntityId::CallSite(method, index)
    }

    pub fn opaque(name: impl Into<Name>) -> Self {
        EntityId::Opaque(name.into())
    }

    pub fn as_method(&self) -> Option<&MemberRef> {
        match self {
            EntityId::Method(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_field(&self) -> Option<&MemberRef> {
        match self {
            EntityId::Field(f) => Some(f),
            _ => None,
        }
    }

    pub fn as_class(&self) -> Option<&str> {
        match self {
            EntityId::Class(c) => Some(c),
            _ => None,
        }
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntityId::Class(c) => f.write_str(c),
            EntityId::Field(m) | EntityId::Method(m) => write!(f, "{m}"),
            EntityId::CallSite(m, idx) => write!(f, "{m}@{idx}"),
            EntityId::Opaque(s) => f.write_str(s),
        }
    }
}
