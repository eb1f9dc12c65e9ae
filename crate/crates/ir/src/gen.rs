//! Seeded generator of random well-formed programs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::parse::parse_program;
use crate::program::{Program, INIT, ROOT};

/// Size bounds for generated programs. Class counts include `Object`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenConfig {
    pub min_classes: usize,
    pub max_classes: usize,
    pub min_methods: usize,
    pub max_methods: usize,
    pub max_fields: usize,
    pub max_statements: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            min_classes: 1,
            max_classes: 8,
            min_methods: 1,
            max_methods: 20,
            max_fields: 2,
            max_statements: 6,
        }
    }
}

impl GenConfig {
    /// Exactly `classes` classes and `methods` methods.
    pub fn sized(classes: usize, methods: usize) -> Self {
        Self {
            min_classes: classes,
            max_classes: classes,
            min_methods: methods,
            max_methods: methods,
            ..Self::default()
        }
    }
}

const FIELD_NAMES: [&str; 3] = ["f", "g", "h"];
const METHOD_NAMES: [&str; 4] = ["m", "n", "run", INIT];

struct Skeleton {
    names: Vec<String>,
    parent: Vec<Option<usize>>,
    /// (name, type index, final)
    fields: Vec<Vec<(String, usize, bool)>>,
    methods: Vec<Vec<String>>,
}

impl Skeleton {
    fn ancestors(&self, mut c: usize) -> Vec<usize> {
        let mut out = vec![c];
        while let Some(p) = self.parent[c] {
            out.push(p);
            c = p;
        }
        out
    }

    fn is_subtype(&self, sub: usize, sup: usize) -> bool {
        self.ancestors(sub).contains(&sup)
    }

    fn visible_fields(&self, c: usize) -> Vec<(String, usize)> {
        let mut out: Vec<(String, usize)> = Vec::new();
        for a in self.ancestors(c) {
            for (n, t, _) in &self.fields[a] {
                if !out.iter().any(|(m, _)| m == n) {
                    out.push((n.clone(), *t));
                }
            }
        }
        out
    }

    fn visible_methods(&self, c: usize) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for a in self.ancestors(c) {
            for n in &self.methods[a] {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
        }
        out
    }
}

fn class_name(i: usize) -> String {
    match i {
        0 => ROOT.to_owned(),
        1..=25 => ((b'A' + (i - 1) as u8) as char).to_string(),
        _ => format!("K{i}"),
    }
}

fn skeleton(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> Skeleton {
    let n = rng.gen_range(cfg.min_classes.max(1)..=cfg.max_classes.max(1));
    let names: Vec<String> = (0..n).map(class_name).collect();
    let parent: Vec<Option<usize>> = (0..n)
        .map(|i| if i == 0 { None } else { Some(rng.gen_range(0..i)) })
        .collect();
    let fields = (0..n)
        .map(|i| {
            if i == 0 {
                return Vec::new();
            }
            let k = rng.gen_range(0..=cfg.max_fields.min(FIELD_NAMES.len()));
            let mut pool = FIELD_NAMES.to_vec();
            pool.shuffle(rng);
            pool[..k]
                .iter()
                .map(|f| ((*f).to_owned(), rng.gen_range(0..n), rng.gen_bool(0.4)))
                .collect()
        })
        .collect();
    let total = rng.gen_range(cfg.min_methods..=cfg.max_methods.max(cfg.min_methods));
    let mut methods: Vec<Vec<String>> = vec![Vec::new(); n];
    let mut extra = 0;
    for _ in 0..total {
        let c = rng.gen_range(0..n);
        let free: Vec<&str> = METHOD_NAMES
            .iter()
            .copied()
            .filter(|m| !methods[c].iter().any(|x| x == m))
            .collect();
        let name = match free.choose(rng) {
            Some(m) => (*m).to_owned(),
            None => {
                extra += 1;
                format!("p{extra}")
            }
        };
        methods[c].push(name);
    }
    Skeleton {
        names,
        parent,
        fields,
        methods,
    }
}

struct Body<'a> {
    sk: &'a Skeleton,
    /// (local name, class index if typed)
    locals: Vec<(String, Option<usize>)>,
    stmts: Vec<Value>,
    next: usize,
}

impl Body<'_> {
    fn fresh(&mut self, ty: Option<usize>) -> String {
        let l = format!("l{}", self.next);
        self.next += 1;
        self.locals.push((l.clone(), ty));
        l
    }

    fn typed_with<F>(&self, rng: &mut ChaCha8Rng, pred: F) -> Option<(String, usize)>
    where
        F: Fn(usize) -> bool,
    {
        let c: Vec<(String, usize)> = self
            .locals
            .iter()
            .filter_map(|(l, t)| t.filter(|&t| pred(t)).map(|t| (l.clone(), t)))
            .collect();
        c.choose(rng).cloned()
    }

    fn emit_new(&mut self, rng: &mut ChaCha8Rng, of: usize) -> String {
        let subs: Vec<usize> = (0..self.sk.names.len())
            .filter(|&c| self.sk.is_subtype(c, of))
            .collect();
        let c = *subs.choose(rng).expect("reflexive");
        let l = self.fresh(Some(c));
        self.stmts.push(json!(["new", l, self.sk.names[c]]));
        l
    }

    fn step(&mut self, rng: &mut ChaCha8Rng, all_methods: &[(usize, String)]) {
        let sk = self.sk;
        match rng.gen_range(0..12) {
            0 | 1 => {
                self.emit_new(rng, 0);
            }
            2 => {
                let l = self.fresh(None);
                self.stmts.push(json!(["const", l]));
            }
            3 | 4 => {
                if let Some((r, t)) = self.typed_with(rng, |t| !sk.visible_fields(t).is_empty()) {
                    let fields = sk.visible_fields(t);
                    let (f, ft) = fields.choose(rng).cloned().expect("non-empty");
                    let l = self.fresh(Some(ft));
                    self.stmts.push(json!(["getfield", l, r, f]));
                }
            }
            5 | 6 => {
                if let Some((r, t)) = self.typed_with(rng, |t| !sk.visible_fields(t).is_empty()) {
                    let fields = sk.visible_fields(t);
                    let (f, ft) = fields.choose(rng).cloned().expect("non-empty");
                    let sources: Vec<String> = self
                        .locals
                        .iter()
                        .filter(|(_, st)| st.is_none_or(|st| sk.is_subtype(st, ft)))
                        .map(|(l, _)| l.clone())
                        .collect();
                    let src = match sources.choose(rng) {
                        Some(s) if rng.gen_bool(0.7) => s.clone(),
                        _ => self.emit_new(rng, ft),
                    };
                    self.stmts.push(json!(["putfield", r, f, src]));
                }
            }
            7..=9 => {
                if let Some((r, t)) = self.typed_with(rng, |t| !sk.visible_methods(t).is_empty()) {
                    let ms = sk.visible_methods(t);
                    let m = ms.choose(rng).cloned().expect("non-empty");
                    if rng.gen_bool(0.5) {
                        let l = self.fresh(None);
                        self.stmts.push(json!(["invokevirtual", l, r, m]));
                    } else {
                        self.stmts.push(json!(["invokevirtual", r, m]));
                    }
                }
            }
            _ => {
                if let Some((c, m)) = all_methods.choose(rng) {
                    let class = &sk.names[*c];
                    if rng.gen_bool(0.5) {
                        let l = self.fresh(None);
                        self.stmts.push(json!(["invokestatic", l, class, m]));
                    } else {
                        self.stmts.push(json!(["invokestatic", class, m]));
                    }
                }
            }
        }
    }
}

/// A random program as a JSON document.
pub fn generate_document(seed: u64, cfg: &GenConfig) -> Value {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sk = skeleton(&mut rng, cfg);
    let n = sk.names.len();
    let all_methods: Vec<(usize, String)> = (0..n)
        .flat_map(|c| sk.methods[c].iter().map(move |m| (c, m.clone())))
        .collect();

    let mut classes = Vec::with_capacity(n);
    for c in 0..n {
        let fields: Vec<Value> = sk.fields[c]
            .iter()
            .map(|(f, t, fin)| json!({"name": f, "type": sk.names[*t], "final": fin}))
            .collect();
        let mut methods = Vec::new();
        for m in &sk.methods[c] {
            let np = rng.gen_range(0..=2);
            let params: Vec<(String, usize)> =
                (0..np).map(|i| (format!("p{i}"), rng.gen_range(0..n))).collect();
            let mut body = Body {
                sk: &sk,
                locals: std::iter::once(("this".to_owned(), Some(c)))
                    .chain(params.iter().map(|(p, t)| (p.clone(), Some(*t))))
                    .collect(),
                stmts: Vec::new(),
                next: 0,
            };
            let len = rng.gen_range(0..=cfg.max_statements);
            for _ in 0..len {
                body.step(&mut rng, &all_methods);
            }
            if rng.gen_bool(0.8) {
                let ret = if rng.gen_bool(0.5) {
                    body.locals.choose(&mut rng).map(|(l, _)| l.clone())
                } else {
                    None
                };
                body.stmts.push(match ret {
                    Some(l) => json!(["return", l]),
                    None => json!(["return"]),
                });
            }
            let params: Vec<Value> = params
                .iter()
                .map(|(p, t)| json!({"name": p, "type": sk.names[*t]}))
                .collect();
            methods.push(json!({"name": m, "params": params, "body": body.stmts}));
        }
        let mut class = json!({"name": sk.names[c], "fields": fields, "methods": methods});
        if let Some(p) = sk.parent[c] {
            class["super"] = Value::from(sk.names[p].clone());
        }
        classes.push(class);
    }

    let mut entries: Vec<String> = Vec::new();
    let k = rng.gen_range(1..=2).min(all_methods.len());
    for (c, m) in all_methods.choose_multiple(&mut rng, k) {
        entries.push(format!("{}.{m}", sk.names[*c]));
    }
    json!({"classes": classes, "entryPoints": entries})
}

pub fn generate_text(seed: u64, cfg: &GenConfig) -> String {
    serde_json::to_string_pretty(&generate_document(seed, cfg)).expect("json values serialize")
}

/// A random program. Panics only if the generator itself is broken.
pub fn generate(seed: u64, cfg: &GenConfig) -> Program {
    let text = generate_text(seed, cfg);
    match parse_program(&text) {
        Ok(p) => p,
        Err(e) => panic!("generator produced an invalid program (seed {seed}): {e}\n{text}"),
    }
}
