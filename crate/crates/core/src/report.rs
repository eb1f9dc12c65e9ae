//! Canonical results document shared by the driver and the reference
//! evaluator.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::lattice::{KindTable, PropertyKey, PropertyState, Value};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultEntry {
    pub entity: String,
    pub kind: String,
    pub value: serde_json::Value,
    #[serde(rename = "final")]
    pub is_final: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ResultsDocument {
    pub results: Vec<ResultEntry>,
}

impl ResultsDocument {
    /// Builds a document sorted by entity, then kind name.
    pub fn from_states<'a>(
        kinds: &KindTable,
        states: impl IntoIterator<Item = (&'a PropertyKey, &'a PropertyState)>,
    ) -> Self {
        let mut results: Vec<ResultEntry> = states
            .into_iter()
            .filter_map(|(key, state)| {
                let value = state.value()?;
                Some(entry(kinds, key, value, state.is_final()))
            })
            .collect();
        sort(&mut results);
        Self { results }
    }

    pub fn from_values<'a>(
        kinds: &KindTable,
        values: impl IntoIterator<Item = (&'a PropertyKey, &'a Value)>,
    ) -> Self {
        let mut results: Vec<ResultEntry> = values
            .into_iter()
            .map(|(key, value)| entry(kinds, key, value, true))
            .collect();
        sort(&mut results);
        Self { results }
    }

    /// Pretty-printed, newline-terminated JSON.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("results serialize");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// One line per differing key, in key order. Empty when equal.
    pub fn diff(&self, other: &ResultsDocument) -> Vec<String> {
        let index = |d: &ResultsDocument| {
            d.results
                .iter()
                .map(|e| ((e.entity.clone(), e.kind.clone()), (e.value.clone(), e.is_final)))
                .collect::<BTreeMap<_, _>>()
        };
        let (a, b) = (index(self), index(other));
        let mut keys: Vec<_> = a.keys().chain(b.keys()).cloned().collect();
        keys.sort();
        keys.dedup();
        keys.into_iter()
            .filter_map(|k| {
                let (l, r) = (a.get(&k), b.get(&k));
                (l != r).then(|| format!("{} {}: {} vs {}", k.0, k.1, show(l), show(r)))
            })
            .collect()
    }
}

fn show(v: Option<&(serde_json::Value, bool)>) -> String {
    match v {
        None => "<absent>".into(),
        Some((v, true)) => v.to_string(),
        Some((v, false)) => format!("{v} (interim)"),
    }
}

fn entry(kinds: &KindTable, key: &PropertyKey, value: &Value, is_final: bool) -> ResultEntry {
    let desc = kinds.get(key.kind);
    ResultEntry {
        entity: key.entity.to_string(),
        kind: kinds.name(key.kind).to_owned(),
        value: desc.map_or_else(|| crate::lattice::render_generic(value), |d| d.render(value)),
        is_final,
    }
}

fn sort(results: &mut [ResultEntry]) {
    results.sort_by(|a, b| (&a.entity, &a.kind).cmp(&(&b.entity, &b.kind)));
}
