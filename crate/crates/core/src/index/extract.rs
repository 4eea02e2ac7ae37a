use std::collections::{BTreeMap, HashMap};

use crate::error::Result;
use crate::foxml::extract_inline_xml;
use crate::model::{DigitalObject, ObjectUri, Pid, State, RELS_EXT};
use crate::rdf::{parse_relations, vocab, Term, Triple};

/// Method names declared by behavior-definition objects. `None` means the
/// BDef is not present in the repository.
pub trait ContractLookup {
    fn method_names(&self, bdef: &Pid) -> Option<Vec<String>>;
}

impl ContractLookup for HashMap<Pid, Vec<String>> {
    fn method_names(&self, bdef: &Pid) -> Option<Vec<String>> {
        self.get(bdef).cloned()
    }
}

impl ContractLookup for BTreeMap<Pid, Vec<String>> {
    fn method_names(&self, bdef: &Pid) -> Option<Vec<String>> {
        self.get(bdef).cloned()
    }
}

/// Triples asserted in the object's current RELS-EXT datastream.
pub fn extract_relation_triples(obj: &DigitalObject) -> Result<Vec<Triple>> {
    if !obj.datastreams.contains_key(RELS_EXT) {
        return Ok(Vec::new());
    }
    let content = extract_inline_xml(obj, RELS_EXT, None)?;
    parse_relations(&content, &obj.pid.uri())
}

/// Model-derived and datatype-property triples for the object.
pub fn extract_system_triples(obj: &DigitalObject, contracts: &dyn ContractLookup) -> Vec<Triple> {
    let subject = obj.pid.uri();
    let props = &obj.properties;
    let mut out = vec![
        Triple::new(&subject, vocab::RDF_TYPE, Term::resource(vocab::FEDORA_OBJECT)),
        Triple::new(&subject, vocab::STATE, Term::literal(props.state.code())),
        Triple::new(&subject, vocab::LABEL, Term::literal(&props.label)),
        Triple::new(&subject, vocab::CONTENT_MODEL, Term::literal(&props.content_model)),
        Triple::new(&subject, vocab::CREATED, Term::date_time(props.created)),
        Triple::new(&subject, vocab::LAST_MODIFIED, Term::date_time(props.last_modified)),
    ];

    for ds in obj.datastreams.values() {
        let rep = ObjectUri::datastream(obj.pid.clone(), &ds.id).to_string();
        out.push(Triple::new(&subject, vocab::DISSEMINATES, Term::resource(&rep)));
        out.push(Triple::new(&rep, vocab::LAST_MODIFIED, Term::date_time(ds.latest().created)));
        out.push(Triple::new(&rep, vocab::MIME_TYPE, Term::literal(&ds.mime_type)));
    }

    for diss in obj.disseminators.values() {
        if diss.state != State::Active {
            continue;
        }
        let Some(methods) = contracts.method_names(&diss.bdef) else {
            continue;
        };
        let modified = diss.latest().created;
        for method in methods {
            let rep = ObjectUri::method(obj.pid.clone(), diss.bdef.clone(), &method).to_string();
            let kind = format!("info:fedora/*/{}/{method}", diss.bdef);
            out.push(Triple::new(&subject, vocab::DISSEMINATES, Term::resource(&rep)));
            out.push(Triple::new(&rep, vocab::DISSEMINATION_TYPE, Term::resource(kind)));
            out.push(Triple::new(&rep, vocab::LAST_MODIFIED, Term::date_time(modified)));
        }
    }
    out
}

/// Everything the index holds for one object, sorted and deduplicated.
pub fn extract_triples(obj: &DigitalObject, contracts: &dyn ContractLookup) -> Result<Vec<Triple>> {
    let mut triples = extract_relation_triples(obj)?;
    triples.extend(extract_system_triples(obj, contracts));
    triples.sort();
    triples.dedup();
    Ok(triples)
}
