//! Line-oriented activation trace and solver instrumentation hooks.

use std::fmt;
use std::io::{self, Write};

use crate::lattice::{PropertyKey, PropertyState};
use crate::result::Property;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskKind {
    Initial,
    Continuation,
    Finalize,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Initial => "initial",
            TaskKind::Continuation => "continuation",
            TaskKind::Finalize => "finalize",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One completed activation or phase finalization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub seq: u64,
    pub task: TaskKind,
    pub entity: String,
    pub kind: String,
    /// Result label for activations; `default`, `cycle` or `commit` for
    /// finalizations.
    pub result: String,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}",
            self.seq, self.task, self.entity, self.kind, self.result
        )
    }
}

impl TraceRecord {
    pub fn parse(line: &str) -> Option<Self> {
        let mut parts = line.split('\t');
        let seq = parts.next()?.parse().ok()?;
        let task = match parts.next()? {
            "initial" => TaskKind::Initial,
            "continuation" => TaskKind::Continuation,
            "finalize" => TaskKind::Finalize,
            _ => return None,
        };
        let record = TraceRecord {
            seq,
            task,
            entity: parts.next()?.to_owned(),
            kind: parts.next()?.to_owned(),
            result: parts.next()?.to_owned(),
        };
        parts.next().is_none().then_some(record)
    }
}

pub fn write_trace<W: Write>(records: &[TraceRecord], mut out: W) -> io::Result<()> {
    for r in records {
        writeln!(out, "{r}")?;
    }
    out.flush()
}

/// Identifies a running activation for observers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivationInfo {
    pub seq: u64,
    pub task: TaskKind,
    pub analysis: String,
    /// The property the activation is keyed by.
    pub key: PropertyKey,
}

/// Instrumentation callbacks. All methods default to doing nothing.
///
/// `state_changed` is invoked while the store is locked and must not call
/// back into it.
pub trait SolverObserver: Sync {
    fn activation_started(&self, _info: &ActivationInfo) {}
    fn activation_finished(&self, _info: &ActivationInfo) {}
    /// A state handed to an analysis, either as a query answer or as the
    /// argument of a continuation.
    fn state_delivered(&self, _analysis: &str, _property: &Property) {}
    fn state_changed(&self, _key: &PropertyKey, _old: &PropertyState, _new: &PropertyState) {}
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_round_trip() {
        let r = TraceRecord {
            seq: 12,
            task: TaskKind::Continuation,
            entity: "Main.main".into(),
            kind: "Purity".into(),
            result: "interim".into(),
        };
        let line = r.to_string();
        assert_eq!(line, "12\tcontinuation\tMain.main\tPurity\tinterim");
        assert_eq!(TraceRecord::parse(&line), Some(r));
        assert_eq!(TraceRecord::parse("1\tbogus\ta\tb\tc"), None);
        assert_eq!(TraceRecord::parse("1\tinitial\ta\tb"), None);
    }
}
