//! Nested-loop reference evaluator for conjunctive queries, plus random
//! graph and query generators used to compare it against the index.

use std::collections::{BTreeMap, HashSet};

use fcrepo_core::index::{ConjunctiveQuery, PatternTerm, TriplePattern};
use fcrepo_core::rdf::{Term, Triple};
use rand::seq::SliceRandom;
use rand::Rng;

type Binding = BTreeMap<String, Term>;

fn unify(pattern: &PatternTerm, term: &Term, binding: &mut Binding) -> bool {
    match pattern {
        PatternTerm::Any => true,
        PatternTerm::Const(c) => c == term,
        PatternTerm::Var(v) => match binding.get(v) {
            Some(bound) => bound == term,
            None => {
                binding.insert(v.clone(), term.clone());
                true
            }
        },
    }
}

fn matches(pattern: &TriplePattern, triple: &Triple, binding: &Binding) -> Option<Binding> {
    let mut next = binding.clone();
    let ok = unify(&pattern.subject, &triple.subject, &mut next)
        && unify(&pattern.predicate, &triple.predicate, &mut next)
        && unify(&pattern.object, &triple.object, &mut next);
    ok.then_some(next)
}

/// Evaluates patterns strictly left to right by scanning every triple for
/// every partial binding, then projects, deduplicates and sorts rows by
/// their N-Triples rendering.
pub fn nested_loop(graph: &[Triple], query: &ConjunctiveQuery) -> Vec<Vec<Term>> {
    let mut bindings = vec![Binding::new()];
    for pattern in &query.patterns {
        let mut next = Vec::new();
        for binding in &bindings {
            for triple in graph {
                if let Some(b) = matches(pattern, triple, binding) {
                    next.push(b);
                }
            }
        }
        bindings = next;
    }
    let mut seen = HashSet::new();
    let mut rows: Vec<Vec<Term>> = bindings
        .into_iter()
        .map(|b| query.select.iter().map(|v| b[v].clone()).collect::<Vec<_>>())
        .filter(|row| seen.insert(row.clone()))
        .collect();
    rows.sort_by_key(|row| row.iter().map(Term::to_string).collect::<Vec<_>>());
    rows
}

const VARS: [&str; 3] = ["a", "b", "c"];

fn resources() -> Vec<Term> {
    (0..8).map(|i| Term::resource(format!("info:fedora/t:{i}"))).collect()
}

fn predicates() -> Vec<Term> {
    (0..4).map(|i| Term::resource(format!("http://example.org/p{i}"))).collect()
}

fn literals() -> Vec<Term> {
    vec![
        Term::literal("x"),
        Term::literal("y"),
        Term::typed("2004-12-10T00:21:57Z", "http://www.w3.org/2001/XMLSchema#dateTime"),
        Term::typed("x", "http://example.org/dt"),
    ]
}

pub fn random_graph(rng: &mut impl Rng, max_triples: usize) -> Vec<Triple> {
    let (res, preds, lits) = (resources(), predicates(), literals());
    let n = rng.gen_range(max_triples / 4..=max_triples);
    let mut graph: Vec<Triple> = (0..n)
        .map(|_| Triple {
            subject: res.choose(rng).unwrap().clone(),
            predicate: preds.choose(rng).unwrap().clone(),
            object: if rng.gen_bool(0.75) {
                res.choose(rng).unwrap().clone()
            } else {
                lits.choose(rng).unwrap().clone()
            },
        })
        .collect();
    graph.sort();
    graph.dedup();
    graph
}

fn position(rng: &mut impl Rng, pool: &[Term], vars: usize, var_odds: f64) -> PatternTerm {
    if rng.gen_bool(var_odds) {
        PatternTerm::Var(VARS[rng.gen_range(0..vars)].to_string())
    } else if rng.gen_bool(0.03) {
        PatternTerm::Const(Term::resource("info:fedora/absent:0"))
    } else {
        PatternTerm::Const(pool.choose(rng).unwrap().clone())
    }
}

/// A query with 1..=max_patterns patterns over at most `max_vars` variables.
pub fn random_query(rng: &mut impl Rng, max_patterns: usize, max_vars: usize) -> ConjunctiveQuery {
    let (res, preds, lits) = (resources(), predicates(), literals());
    let objects: Vec<Term> = res.iter().chain(lits.iter()).cloned().collect();
    let vars = rng.gen_range(1..=max_vars);
    loop {
        let n = rng.gen_range(1..=max_patterns);
        let patterns: Vec<TriplePattern> = (0..n)
            .map(|_| TriplePattern {
                subject: position(rng, &res, vars, 0.7),
                predicate: position(rng, &preds, vars, 0.2),
                object: position(rng, &objects, vars, 0.7),
            })
            .collect();
        let mut used: Vec<String> = Vec::new();
        for p in &patterns {
            for v in p.variables() {
                if !used.iter().any(|u| u == v) {
                    used.push(v.to_string());
                }
            }
        }
        if used.is_empty() {
            continue;
        }
        used.shuffle(rng);
        let keep = rng.gen_range(1..=used.len());
        used.truncate(keep);
        return ConjunctiveQuery::new(used, patterns).expect("generated query is well formed");
    }
}
