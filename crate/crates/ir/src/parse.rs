//! JSON reader for programs.

use std::collections::{HashMap, HashSet};

use blackboard::entity::{MemberRef, Name};
use serde_json::{Map, Value};

use crate::program::{
    ClassDecl, FieldDecl, IrError, MethodDecl, Op, Origin, Param, Program, Statement, ROOT, THIS,
};

fn syntax(msg: impl Into<String>) -> IrError {
    IrError::Syntax(msg.into())
}

fn resolution(msg: impl Into<String>) -> IrError {
    IrError::Resolution(msg.into())
}

fn object<'a>(v: &'a Value, what: &str) -> Result<&'a Map<String, Value>, IrError> {
    v.as_object().ok_or_else(|| syntax(format!("{what} must be an object")))
}

fn array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>, IrError> {
    v.as_array().ok_or_else(|| syntax(format!("{what} must be an array")))
}

fn string(v: &Value, what: &str) -> Result<Name, IrError> {
    let s = v
        .as_str()
        .ok_or_else(|| syntax(format!("{what} must be a string")))?;
    if s.is_empty() || s.contains('.') || s.chars().any(char::is_whitespace) {
        return Err(syntax(format!("{what} {s:?} is not a valid name")));
    }
    Ok(Name::from(s))
}

fn member<'a>(obj: &'a Map<String, Value>, key: &str, what: &str) -> Result<&'a Value, IrError> {
    obj.get(key)
        .ok_or_else(|| syntax(format!("{what} is missing \"{key}\"")))
}

fn list<'a>(obj: &'a Map<String, Value>, key: &str, what: &str) -> Result<&'a [Value], IrError> {
    match obj.get(key) {
        None => Ok(&[]),
        Some(v) => Ok(array(v, &format!("{what}.{key}"))?),
    }
}

/// Reads and validates a program document.
pub fn parse_program(text: &str) -> Result<Program, IrError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| syntax(e.to_string()))?;
    let top = object(&doc, "document")?;
    let raw_classes = array(member(top, "classes", "document")?, "classes")?;

    let mut classes = Vec::with_capacity(raw_classes.len());
    for c in raw_classes {
        classes.push(read_class(c)?);
    }

    let mut seen = HashSet::new();
    for c in &classes {
        if !seen.insert(c.name.clone()) {
            return Err(IrError::Invalid(format!("class {} declared twice", c.name)));
        }
    }
    check_hierarchy(&classes)?;

    let mut entry_points = Vec::new();
    for e in list(top, "entryPoints", "document")? {
        let s = e
            .as_str()
            .ok_or_else(|| syntax("entry points must be strings"))?;
        let (class, method) = s
            .split_once('.')
            .ok_or_else(|| syntax(format!("entry point {s:?} is not Class.method")))?;
        entry_points.push(MemberRef::new(class, method));
    }

    // Resolution needs the hierarchy, so build a provisional program first.
    let mut program = Program::assemble(classes, Vec::new());
    for c in program.classes() {
        for f in &c.fields {
            if !program.has_class(&f.ty) {
                return Err(resolution(format!(
                    "field {}.{} has unknown type {}",
                    c.name, f.name, f.ty
                )));
            }
        }
    }
    let mut resolved = Vec::with_capacity(program.classes().len());
    for c in program.classes() {
        let mut c = c.clone();
        for m in &mut c.methods {
            m.ops = resolve_body(&program, &c.name, m)?;
        }
        resolved.push(c);
    }
    for e in &entry_points {
        if program.method(e).is_none() {
            return Err(resolution(format!("entry point {e} is not declared")));
        }
    }
    program = Program::assemble(resolved, entry_points);
    Ok(program)
}

fn read_class(v: &Value) -> Result<ClassDecl, IrError> {
    let obj = object(v, "class")?;
    let name = string(member(obj, "name", "class")?, "class name")?;
    let what = format!("class {name}");
    let superclass = match obj.get("super") {
        None | Some(Value::Null) => None,
        Some(s) => Some(string(s, "superclass")?),
    };

    let mut fields = Vec::new();
    for f in list(obj, "fields", &what)? {
        let fo = object(f, "field")?;
        let is_final = match fo.get("final") {
            None => false,
            Some(b) => b
                .as_bool()
                .ok_or_else(|| syntax(format!("{what}: field \"final\" must be a boolean")))?,
        };
        fields.push(FieldDecl {
            name: string(member(fo, "name", "field")?, "field name")?,
            ty: string(member(fo, "type", "field")?, "field type")?,
            is_final,
        });
    }

    let mut methods = Vec::new();
    for m in list(obj, "methods", &what)? {
        let mo = object(m, "method")?;
        let mname = string(member(mo, "name", "method")?, "method name")?;
        let mwhat = format!("method {name}.{mname}");
        let mut params = Vec::new();
        for p in list(mo, "params", &mwhat)? {
            let po = object(p, "parameter")?;
            params.push(Param {
                name: string(member(po, "name", "parameter")?, "parameter name")?,
                ty: string(member(po, "type", "parameter")?, "parameter type")?,
            });
        }
        let mut body = Vec::new();
        for s in list(mo, "body", &mwhat)? {
            body.push(read_statement(s, &mwhat)?);
        }
        methods.push(MethodDecl {
            name: mname,
            params,
            body,
            ops: Vec::new(),
        });
    }

    let mut names = HashSet::new();
    for f in &fields {
        if !names.insert(&f.name) {
            return Err(IrError::Invalid(format!("{what}: field {} declared twice", f.name)));
        }
    }
    names.clear();
    for m in &methods {
        if !names.insert(&m.name) {
            return Err(IrError::Invalid(format!("{what}: method {} declared twice", m.name)));
        }
    }

    Ok(ClassDecl {
        name,
        superclass,
        fields,
        methods,
    })
}

fn read_statement(v: &Value, what: &str) -> Result<Statement, IrError> {
    let parts = array(v, "statement")?;
    let op = parts
        .first()
        .and_then(Value::as_str)
        .ok_or_else(|| syntax(format!("{what}: statement needs an opcode")))?;
    let arg = |i: usize| -> Result<Name, IrError> {
        let v = parts
            .get(i)
            .ok_or_else(|| syntax(format!("{what}: {op} is missing operand {i}")))?;
        string(v, &format!("{what}: {op} operand"))
    };
    // Optional result locals may be omitted or written as null.
    let optional = |expected: usize| -> Result<(Option<Name>, usize), IrError> {
        match parts.len() {
            n if n == expected + 1 => match &parts[1] {
                Value::Null => Ok((None, 2)),
                _ => Ok((Some(arg(1)?), 2)),
            },
            n if n == expected => Ok((None, 1)),
            n => Err(syntax(format!("{what}: {op} has {} operands", n - 1))),
        }
    };
    let exact = |n: usize| -> Result<(), IrError> {
        if parts.len() == n {
            Ok(())
        } else {
            Err(syntax(format!("{what}: {op} has {} operands", parts.len() - 1)))
        }
    };

    Ok(match op {
        "new" => {
            exact(3)?;
            Statement::New {
                local: arg(1)?,
                class: arg(2)?,
            }
        }
        "const" => {
            exact(2)?;
            Statement::Const { local: arg(1)? }
        }
        "getfield" => {
            exact(4)?;
            Statement::GetField {
                local: arg(1)?,
                receiver: arg(2)?,
                field: arg(3)?,
            }
        }
        "putfield" => {
            exact(4)?;
            Statement::PutField {
                receiver: arg(1)?,
                field: arg(2)?,
                source: arg(3)?,
            }
        }
        "invokevirtual" => {
            let (local, at) = optional(3)?;
            Statement::InvokeVirtual {
                local,
                receiver: arg(at)?,
                method: arg(at + 1)?,
            }
        }
        "invokestatic" => {
            let (local, at) = optional(3)?;
            Statement::InvokeStatic {
                local,
                class: arg(at)?,
                method: arg(at + 1)?,
            }
        }
        "return" => match parts.len() {
            1 => Statement::Return { local: None },
            2 if parts[1].is_null() => Statement::Return { local: None },
            2 => Statement::Return {
                local: Some(arg(1)?),
            },
            n => return Err(syntax(format!("{what}: return has {} operands", n - 1))),
        },
        other => return Err(syntax(format!("{what}: unknown opcode {other:?}"))),
    })
}

fn check_hierarchy(classes: &[ClassDecl]) -> Result<(), IrError> {
    let by_name: HashMap<&str, &ClassDecl> = classes.iter().map(|c| (&*c.name, c)).collect();
    match by_name.get(ROOT) {
        Some(root) if root.superclass.is_none() => {}
        Some(_) => return Err(IrError::Invalid("Object cannot have a superclass".into())),
        None => return Err(IrError::MissingRoot),
    }
    for c in classes {
        match &c.superclass {
            None if &*c.name != ROOT => {
                return Err(IrError::Invalid(format!("class {} needs a superclass", c.name)))
            }
            Some(s) if !by_name.contains_key(&**s) => {
                return Err(resolution(format!(
                    "class {} extends unknown class {s}",
                    c.name
                )))
            }
            _ => {}
        }
    }
    for c in classes {
        let mut cur = c;
        let mut steps = 0;
        while let Some(s) = &cur.superclass {
            steps += 1;
            if steps > classes.len() {
                return Err(IrError::HierarchyCycle(c.name.to_string()));
            }
            cur = by_name[&**s];
        }
    }
    Ok(())
}

/// Local variable bindings while walking a body.
struct Scope {
    origin: HashMap<Name, Origin>,
    /// Declared type of each typed local.
    ty: HashMap<Name, Name>,
}

impl Scope {
    fn read(&self, local: &Name, what: &str) -> Result<Origin, IrError> {
        self.origin
            .get(local)
            .cloned()
            .ok_or_else(|| resolution(format!("{what}: undefined local {local}")))
    }

    fn typed(&self, local: &Name, what: &str) -> Result<(Origin, Name), IrError> {
        let origin = self.read(local, what)?;
        let ty = self
            .ty
            .get(local)
            .cloned()
            .ok_or_else(|| resolution(format!("{what}: receiver {local} has no class type")))?;
        Ok((origin, ty))
    }

    fn define(&mut self, local: &Name, origin: Origin, ty: Option<Name>, what: &str) -> Result<(), IrError> {
        if &**local == THIS {
            return Err(IrError::Invalid(format!("{what}: cannot assign to this")));
        }
        self.origin.insert(local.clone(), origin);
        match ty {
            Some(t) => self.ty.insert(local.clone(), t),
            None => self.ty.remove(local),
        };
        Ok(())
    }
}

fn resolve_body(program: &Program, class: &Name, m: &MethodDecl) -> Result<Vec<Op>, IrError> {
    let what = format!("{class}.{}", m.name);
    let mut scope = Scope {
        origin: HashMap::from([(Name::from(THIS), Origin::This)]),
        ty: HashMap::from([(Name::from(THIS), class.clone())]),
    };
    for (i, p) in m.params.iter().enumerate() {
        if !program.has_class(&p.ty) {
            return Err(resolution(format!("{what}: parameter {} has unknown type {}", p.name, p.ty)));
        }
        if scope.origin.contains_key(&p.name) {
            return Err(IrError::Invalid(format!("{what}: parameter {} declared twice", p.name)));
        }
        scope.origin.insert(p.name.clone(), Origin::Param(i));
        scope.ty.insert(p.name.clone(), p.ty.clone());
    }

    let mut ops = Vec::with_capacity(m.body.len());
    let mut returns = 0;
    for s in &m.body {
        let op = match s {
            Statement::New { local, class } => {
                if !program.has_class(class) {
                    return Err(resolution(format!("{what}: new of unknown class {class}")));
                }
                scope.define(local, Origin::New(class.clone()), Some(class.clone()), &what)?;
                Op::New {
                    class: class.clone(),
                }
            }
            Statement::Const { local } => {
                scope.define(local, Origin::Const, None, &what)?;
                Op::Const
            }
            Statement::GetField {
                local,
                receiver,
                field,
            } => {
                let (origin, ty) = scope.typed(receiver, &what)?;
                let target = program
                    .lookup_field(&ty, field)
                    .ok_or_else(|| resolution(format!("{what}: {ty} has no field {field}")))?;
                let fty = program.field(&target).map(|f| f.ty.clone());
                scope.define(local, Origin::Field(target.clone()), fty, &what)?;
                Op::GetField {
                    receiver: origin,
                    field: target,
                }
            }
            Statement::PutField {
                receiver,
                field,
                source,
            } => {
                let (origin, ty) = scope.typed(receiver, &what)?;
                let target = program
                    .lookup_field(&ty, field)
                    .ok_or_else(|| resolution(format!("{what}: {ty} has no field {field}")))?;
                Op::PutField {
                    receiver: origin,
                    field: target,
                    source: scope.read(source, &what)?,
                }
            }
            Statement::InvokeVirtual {
                local,
                receiver,
                method,
            } => {
                let (origin, ty) = scope.typed(receiver, &what)?;
                if program.lookup_method(&ty, method).is_none() {
                    return Err(resolution(format!("{what}: {ty} has no method {method}")));
                }
                if let Some(l) = local {
                    scope.define(l, Origin::Call, None, &what)?;
                }
                Op::InvokeVirtual {
                    receiver: origin,
                    declared: ty,
                    method: method.clone(),
                }
            }
            Statement::InvokeStatic {
                local,
                class,
                method,
            } => {
                let target = MemberRef::new(class.clone(), method.clone());
                if program.method(&target).is_none() {
                    return Err(resolution(format!("{what}: no static target {target}")));
                }
                if let Some(l) = local {
                    scope.define(l, Origin::Call, None, &what)?;
                }
                Op::InvokeStatic { target }
            }
            Statement::Return { local } => {
                returns += 1;
                if returns > 1 {
                    return Err(IrError::Invalid(format!("{what}: more than one return")));
                }
                if let Some(l) = local {
                    scope.read(l, &what)?;
                }
                Op::Return
            }
        };
        ops.push(op);
    }
    Ok(ops)
}
