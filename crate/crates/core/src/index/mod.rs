//! The relationship graph: triple extraction from objects, an in-memory
//! index with SPO/POS/OSP permutations, and conjunctive queries over it.

mod engine;
mod extract;
mod format;
mod query;
mod store;

pub use engine::{TripleResult, TupleResult, DEFAULT_ROW_LIMIT};
pub use extract::{extract_relation_triples, extract_system_triples, extract_triples, ContractLookup};
pub use format::{answer_query, format_tuples, format_triples, ResultFormat};
pub use query::{parse_query, ConjunctiveQuery, PatternTerm, Query, QueryLanguage, TriplePattern};
pub use store::{Snapshot, TripleIndex};
