//! Exhaustive checks of the lattice axioms over an enumerated value set.

use crate::lattice::{Lattice, Value};

/// Counts of what was checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LawReport {
    pub values: usize,
    pub pairs: usize,
    pub triples: usize,
    /// Length of the longest strictly ascending chain found.
    pub longest_chain: usize,
}

/// Verifies partial-order axioms, join as least upper bound, the bounds,
/// and the declared height over every pair and triple of `values`.
///
/// `values` should be closed under join for the lub check to be complete.
pub fn verify(l: &dyn Lattice, values: &[Value]) -> Result<LawReport, String> {
    let (bot, top) = (l.bottom(), l.top());
    for v in values {
        if !l.contains(v) {
            return Err(format!("{v} is not an element"));
        }
        if !l.leq(v, v) {
            return Err(format!("leq not reflexive at {v}"));
        }
        if !l.leq(&bot, v) || !l.leq(v, &top) {
            return Err(format!("{v} lies outside [{bot}, {top}]"));
        }
        if l.join(v, v) != *v {
            return Err(format!("join not idempotent at {v}"));
        }
    }
    let mut pairs = 0;
    for a in values {
        for b in values {
            pairs += 1;
            let j = l.join(a, b);
            if j != l.join(b, a) {
                return Err(format!("join({a}, {b}) not commutative"));
            }
            if l.leq(a, b) != (j == *b) {
                return Err(format!("leq({a}, {b}) disagrees with join = {j}"));
            }
            if l.leq(a, b) && l.leq(b, a) && a != b {
                return Err(format!("leq not antisymmetric on {a}, {b}"));
            }
            if !l.leq(a, &j) || !l.leq(b, &j) {
                return Err(format!("join({a}, {b}) = {j} is not an upper bound"));
            }
        }
    }
    let mut triples = 0;
    for a in values {
        for b in values {
            let ab = l.join(a, b);
            for c in values {
                triples += 1;
                if l.join(&ab, c) != l.join(a, &l.join(b, c)) {
                    return Err(format!("join not associative on {a}, {b}, {c}"));
                }
                if l.leq(a, b) && l.leq(b, c) && !l.leq(a, c) {
                    return Err(format!("leq not transitive on {a}, {b}, {c}"));
                }
                if l.leq(a, c) && l.leq(b, c) && !l.leq(&ab, c) {
                    return Err(format!("join({a}, {b}) = {ab} is not least below {c}"));
                }
            }
        }
    }
    let longest_chain = longest_chain(l, values);
    if longest_chain > l.height() {
        return Err(format!(
            "ascending chain of length {longest_chain} exceeds declared height {}",
            l.height()
        ));
    }
    Ok(LawReport {
        values: values.len(),
        pairs,
        triples,
        longest_chain,
    })
}

/// Number of elements in the longest strictly ascending chain.
fn longest_chain(l: &dyn Lattice, values: &[Value]) -> usize {
    let n = values.len();
    // Elements sorted so that every strict predecessor comes first: count of
    // strictly smaller elements is a valid topological key.
    let below = |i: usize| {
        (0..n)
            .filter(|&j| j != i && l.leq(&values[j], &values[i]) && values[j] != values[i])
            .count()
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| below(i));
    let mut best = vec![1usize; n];
    for (pos, &i) in order.iter().enumerate() {
        for &j in &order[..pos] {
            if values[j] != values[i] && l.leq(&values[j], &values[i]) {
                best[i] = best[i].max(best[j] + 1);
            }
        }
    }
    best.into_iter().max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Chain;

    /// A deliberately broken lattice: join always returns the left operand.
    #[derive(Debug)]
    struct LeftJoin(Chain);

    impl Lattice for LeftJoin {
        fn contains(&self, v: &Value) -> bool {
            self.0.contains(v)
        }
        fn leq(&self, a: &Value, b: &Value) -> bool {
            self.0.leq(a, b)
        }
        fn join(&self, a: &Value, _: &Value) -> Value {
            a.clone()
        }
        fn bottom(&self) -> Value {
            self.0.bottom()
        }
        fn top(&self) -> Value {
            self.0.top()
        }
        fn height(&self) -> usize {
            self.0.height()
        }
    }

    #[test]
    fn broken_join_is_caught() {
        let l = LeftJoin(Chain::new(&["a", "b"]));
        let vals = [Value::Atom("a"), Value::Atom("b")];
        assert!(verify(&l, &vals).is_err());
        assert!(verify(&l.0, &vals).is_ok());
    }
}
