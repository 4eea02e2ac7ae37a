use std::sync::Arc;

use im::{HashMap as PHashMap, OrdMap, OrdSet, Vector};
use parking_lot::{Mutex, RwLock};

use crate::model::Pid;
use crate::rdf::{Term, Triple};

pub(crate) type TermId = u32;
pub(crate) type Key = [TermId; 3];

/// Immutable view of the index. Cloning shares structure with the original.
#[derive(Clone, Default)]
pub struct Snapshot {
    terms: Vector<Term>,
    ids: PHashMap<Term, TermId>,
    spo: OrdSet<Key>,
    pos: OrdSet<Key>,
    osp: OrdSet<Key>,
    owned: OrdMap<Pid, Vec<Key>>,
    /// Number of owners asserting each key.
    refs: PHashMap<Key, u32>,
}

impl Snapshot {
    pub fn len(&self) -> usize {
        self.spo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spo.is_empty()
    }

    pub fn pids(&self) -> impl Iterator<Item = &Pid> {
        self.owned.keys()
    }

    pub(crate) fn term(&self, id: TermId) -> &Term {
        &self.terms[id as usize]
    }

    pub(crate) fn id(&self, term: &Term) -> Option<TermId> {
        self.ids.get(term).copied()
    }

    fn triple(&self, [s, p, o]: Key) -> Triple {
        Triple {
            subject: self.term(s).clone(),
            predicate: self.term(p).clone(),
            object: self.term(o).clone(),
        }
    }

    /// Every stored triple, in `Triple` order.
    pub fn triples(&self) -> Vec<Triple> {
        let mut all: Vec<Triple> = self.spo.iter().map(|k| self.triple(*k)).collect();
        all.sort();
        all
    }

    /// The triples indexed on behalf of one object, in `Triple` order.
    pub fn triples_of(&self, pid: &Pid) -> Vec<Triple> {
        let mut all: Vec<Triple> = self
            .owned
            .get(pid)
            .into_iter()
            .flatten()
            .map(|k| self.triple(*k))
            .collect();
        all.sort();
        all
    }

    /// Keys matching the bound positions, in SPO layout.
    pub(crate) fn scan(
        &self,
        s: Option<TermId>,
        p: Option<TermId>,
        o: Option<TermId>,
    ) -> Box<dyn Iterator<Item = Key> + '_> {
        const M: TermId = TermId::MAX;
        match (s, p, o) {
            (Some(s), Some(p), Some(o)) => Box::new(self.spo.contains(&[s, p, o]).then_some([s, p, o]).into_iter()),
            (Some(s), Some(p), None) => Box::new(self.spo.range([s, p, 0]..=[s, p, M]).copied()),
            (Some(s), None, Some(o)) => Box::new(self.osp.range([o, s, 0]..=[o, s, M]).map(|&[o, s, p]| [s, p, o])),
            (Some(s), None, None) => Box::new(self.spo.range([s, 0, 0]..=[s, M, M]).copied()),
            (None, Some(p), Some(o)) => Box::new(self.pos.range([p, o, 0]..=[p, o, M]).map(|&[p, o, s]| [s, p, o])),
            (None, Some(p), None) => Box::new(self.pos.range([p, 0, 0]..=[p, M, M]).map(|&[p, o, s]| [s, p, o])),
            (None, None, Some(o)) => Box::new(self.osp.range([o, 0, 0]..=[o, M, M]).map(|&[o, s, p]| [s, p, o])),
            (None, None, None) => Box::new(self.spo.iter().copied()),
        }
    }

    fn intern(&mut self, term: &Term) -> TermId {
        if let Some(id) = self.ids.get(term) {
            return *id;
        }
        let id = TermId::try_from(self.terms.len()).expect("term id space exhausted");
        self.terms.push_back(term.clone());
        self.ids.insert(term.clone(), id);
        id
    }

    fn remove_owned(&mut self, pid: &Pid) {
        for key in self.owned.remove(pid).into_iter().flatten() {
            let [s, p, o] = key;
            match self.refs.get(&key).copied() {
                Some(n) if n > 1 => {
                    self.refs.insert(key, n - 1);
                }
                _ => {
                    self.refs.remove(&key);
                    self.spo.remove(&[s, p, o]);
                    self.pos.remove(&[p, o, s]);
                    self.osp.remove(&[o, s, p]);
                }
            }
        }
    }

    fn insert_owned(&mut self, pid: Pid, triples: &[Triple]) {
        let mut keys: Vec<Key> = triples
            .iter()
            .map(|t| [self.intern(&t.subject), self.intern(&t.predicate), self.intern(&t.object)])
            .collect();
        keys.sort_unstable();
        keys.dedup();
        for &key in &keys {
            let [s, p, o] = key;
            *self.refs.entry(key).or_insert(0) += 1;
            if self.spo.insert(key).is_none() {
                self.pos.insert([p, o, s]);
                self.osp.insert([o, s, p]);
            }
        }
        if !keys.is_empty() {
            self.owned.insert(pid, keys);
        }
    }
}

/// The triple index: readers take cheap snapshots; each commit publishes a
/// new snapshot.
#[derive(Default)]
pub struct TripleIndex {
    current: RwLock<Arc<Snapshot>>,
    writer: Mutex<()>,
}

impl TripleIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.current.read().clone()
    }

    /// Replaces the triples owned by each listed object. An empty list
    /// removes the object from the index.
    pub fn commit<I>(&self, changes: I)
    where
        I: IntoIterator<Item = (Pid, Vec<Triple>)>,
    {
        let _guard = self.writer.lock();
        let mut next = (**self.current.read()).clone();
        for (pid, triples) in changes {
            next.remove_owned(&pid);
            next.insert_owned(pid, &triples);
        }
        *self.current.write() = Arc::new(next);
    }

    /// Drops everything and loads `all` as the new content.
    pub fn replace_all<I>(&self, all: I)
    where
        I: IntoIterator<Item = (Pid, Vec<Triple>)>,
    {
        let _guard = self.writer.lock();
        let mut next = Snapshot::default();
        for (pid, triples) in all {
            next.insert_owned(pid, &triples);
        }
        *self.current.write() = Arc::new(next);
    }
}
