use std::collections::HashSet;

use super::query::{ConjunctiveQuery, PatternTerm, TriplePattern};
use super::store::{Key, Snapshot, TermId};
use crate::rdf::{Term, Triple};

pub const DEFAULT_ROW_LIMIT: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TupleResult {
    pub vars: Vec<String>,
    pub rows: Vec<Vec<Term>>,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleResult {
    pub triples: Vec<Triple>,
    pub truncated: bool,
}

const UNBOUND: TermId = TermId::MAX;

/// A pattern position after resolving constants to ids.
#[derive(Clone, Copy)]
enum Slot {
    Fixed(TermId),
    Var(usize),
    Any,
}

struct Plan {
    slots: [Slot; 3],
    constants: [Option<TermId>; 3],
}

impl Plan {
    fn vars(&self) -> impl Iterator<Item = usize> + '_ {
        self.slots.iter().filter_map(|s| match s {
            Slot::Var(v) => Some(*v),
            _ => None,
        })
    }
}

fn sort_key(terms: &[Term]) -> Vec<String> {
    terms.iter().map(Term::to_string).collect()
}

impl Snapshot {
    /// Natural join of the query's patterns, projected onto the selected
    /// variables, deduplicated and ordered by the rendered terms.
    pub fn query_tuples(&self, query: &ConjunctiveQuery, limit: usize) -> TupleResult {
        let mut var_names: Vec<&str> = Vec::new();
        let mut plans = Vec::with_capacity(query.patterns.len());
        let mut satisfiable = true;
        for pattern in &query.patterns {
            let mut slots = [Slot::Any; 3];
            let mut constants = [None; 3];
            for (i, term) in pattern.positions().into_iter().enumerate() {
                slots[i] = match term {
                    PatternTerm::Var(name) => {
                        let idx = var_names.iter().position(|v| v == name).unwrap_or_else(|| {
                            var_names.push(name);
                            var_names.len() - 1
                        });
                        Slot::Var(idx)
                    }
                    PatternTerm::Const(t) => match self.id(t) {
                        Some(id) => {
                            constants[i] = Some(id);
                            Slot::Fixed(id)
                        }
                        None => {
                            satisfiable = false;
                            Slot::Any
                        }
                    },
                    PatternTerm::Any => Slot::Any,
                };
            }
            plans.push(Plan { slots, constants });
        }

        let selected: Vec<usize> = query
            .select
            .iter()
            .map(|v| var_names.iter().position(|n| n == v).expect("selected variable occurs in a pattern"))
            .collect();
        let empty = TupleResult {
            vars: query.select.clone(),
            rows: Vec::new(),
            truncated: false,
        };
        if !satisfiable {
            return empty;
        }

        let estimates: Vec<usize> = plans
            .iter()
            .map(|p| self.scan(p.constants[0], p.constants[1], p.constants[2]).count())
            .collect();

        let mut rows: Vec<Vec<TermId>> = vec![vec![UNBOUND; var_names.len()]];
        let mut bound = vec![false; var_names.len()];
        let mut remaining: Vec<usize> = (0..plans.len()).collect();
        while !remaining.is_empty() {
            let any_bound = bound.iter().any(|b| *b);
            let (pick, _) = remaining
                .iter()
                .enumerate()
                .min_by_key(|(_, &i)| {
                    let plan = &plans[i];
                    let connected = plan.vars().any(|v| bound[v]) || plan.vars().next().is_none();
                    (any_bound && !connected, estimates[i], i)
                })
                .expect("remaining is not empty");
            let plan = &plans[remaining.remove(pick)];
            rows = self.extend(rows, plan);
            if rows.is_empty() {
                return empty;
            }
            for v in plan.vars() {
                bound[v] = true;
            }
        }

        let mut seen = HashSet::new();
        let mut projected: Vec<Vec<Term>> = rows
            .into_iter()
            .map(|row| selected.iter().map(|&i| row[i]).collect::<Vec<_>>())
            .filter(|ids| seen.insert(ids.clone()))
            .map(|ids| ids.into_iter().map(|id| self.term(id).clone()).collect())
            .collect();
        projected.sort_by_cached_key(|row| sort_key(row));
        let truncated = projected.len() > limit;
        projected.truncate(limit);
        TupleResult {
            vars: query.select.clone(),
            rows: projected,
            truncated,
        }
    }

    fn extend(&self, rows: Vec<Vec<TermId>>, plan: &Plan) -> Vec<Vec<TermId>> {
        let mut out = Vec::new();
        for row in rows {
            let resolve = |slot: Slot| match slot {
                Slot::Fixed(id) => Some(id),
                Slot::Var(v) if row[v] != UNBOUND => Some(row[v]),
                _ => None,
            };
            let [s, p, o] = plan.slots.map(resolve);
            'matches: for key in self.scan(s, p, o) {
                let mut next = row.clone();
                for (slot, id) in plan.slots.iter().zip(key) {
                    if let Slot::Var(v) = *slot {
                        if next[v] == UNBOUND {
                            next[v] = id;
                        } else if next[v] != id {
                            continue 'matches;
                        }
                    }
                }
                out.push(next);
            }
        }
        out
    }

    /// Stored triples matching a single pattern (variables act as wildcards).
    pub fn query_triples(&self, pattern: &TriplePattern, limit: usize) -> TripleResult {
        let mut bound = [None; 3];
        for (i, term) in pattern.positions().into_iter().enumerate() {
            if let PatternTerm::Const(t) = term {
                match self.id(t) {
                    Some(id) => bound[i] = Some(id),
                    None => {
                        return TripleResult {
                            triples: Vec::new(),
                            truncated: false,
                        }
                    }
                }
            }
        }
        let mut keys: Vec<Key> = self.scan(bound[0], bound[1], bound[2]).collect();
        let mut triples: Vec<Triple> = keys
            .drain(..)
            .map(|[s, p, o]| Triple {
                subject: self.term(s).clone(),
                predicate: self.term(p).clone(),
                object: self.term(o).clone(),
            })
            .collect();
        triples.sort_by_cached_key(|t| sort_key(&[t.subject.clone(), t.predicate.clone(), t.object.clone()]));
        let truncated = triples.len() > limit;
        triples.truncate(limit);
        TripleResult { triples, truncated }
    }
}
