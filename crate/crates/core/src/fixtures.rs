//! The bundled demo graph: a collection (demo:10) with two image members,
//! the simple-image behaviors (BDEF:2/BMECH:3) and the OAI metadata
//! behaviors (bdef:OAI/bmech:OAI).

use crate::error::{Error, Result};
use crate::model::{internal_id, Pid};
use crate::storage::Repository;
use crate::xml::escape_attr;

pub const DEMO_11_FOXML: &str = include_str!("../fixtures/demo_11.xml");
pub const COLLECTION_QUERY: &str = include_str!("../fixtures/collection_members.itql");

const BDEF_2: &str = include_str!("../fixtures/bdef_2.xml");
const BMECH_3: &str = include_str!("../fixtures/bmech_3.xml");
const BDEF_OAI: &str = include_str!("../fixtures/bdef_oai.xml");
const BMECH_OAI: &str = include_str!("../fixtures/bmech_oai.xml");
const DEMO_10: &str = include_str!("../fixtures/demo_10.xml");
const DEMO_11_OAI: &str = include_str!("../fixtures/demo_11_oai_disseminator.xml");
const DEMO_12: &str = include_str!("../fixtures/demo_12.xml");

pub const DEFAULT_ZPAN_SERVICE: &str = "http://localhost:8081/zpan";
pub const FIXTURE_PRINCIPAL: &str = "fedoraAdmin";

/// Stand-in image bytes for a managed datastream version.
pub fn image_bytes(pid: &str, version_id: &str) -> Vec<u8> {
    format!("image {pid} {version_id}\n").into_bytes()
}

/// The demo:11 document extended with the OAI disseminator.
pub fn demo_11() -> String {
    let end = DEMO_11_FOXML.rfind("</foxml:digitalObject>").expect("closing tag");
    format!("{}{}{}", &DEMO_11_FOXML[..end], DEMO_11_OAI, &DEMO_11_FOXML[end..])
}

/// Every fixture object in ingest order (behavior definitions first).
pub fn fixture_documents(zpan_service: &str) -> Vec<(&'static str, String)> {
    vec![
        ("BDEF:2", BDEF_2.to_string()),
        ("BMECH:3", BMECH_3.replace("{ZPAN_SERVICE}", &escape_attr(zpan_service))),
        ("bdef:OAI", BDEF_OAI.to_string()),
        ("bmech:OAI", BMECH_OAI.to_string()),
        ("demo:10", DEMO_10.to_string()),
        ("demo:11", demo_11()),
        ("demo:12", DEMO_12.to_string()),
    ]
}

/// Managed content the fixture documents refer to by internal id.
pub fn fixture_content() -> Vec<(String, Vec<u8>)> {
    [("demo:11", "HIGH.0"), ("demo:11", "HIGH.1"), ("demo:11", "HIGH.2"), ("demo:12", "HIGH.0")]
        .into_iter()
        .map(|(pid, v)| {
            let id = internal_id(&Pid::parse(pid).expect("fixture pid"), "HIGH", v);
            (id, image_bytes(pid, v))
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FixtureReport {
    pub ingested: Vec<Pid>,
    pub already_present: Vec<Pid>,
}

/// Loads the demo graph, skipping objects that already exist.
pub fn load_fixtures(repo: &Repository, zpan_service: &str) -> Result<FixtureReport> {
    let content = fixture_content();
    let mut report = FixtureReport::default();
    for (pid, doc) in fixture_documents(zpan_service) {
        let pid = Pid::parse(pid)?;
        if repo.contains(&pid) {
            report.already_present.push(pid);
            continue;
        }
        let prefix = format!("{pid}:");
        for (id, bytes) in content.iter().filter(|(id, _)| id.starts_with(&prefix)) {
            repo.stage_content(id, bytes)?;
        }
        match repo.ingest(doc.as_bytes(), FIXTURE_PRINCIPAL) {
            Ok(p) => report.ingested.push(p),
            Err(Error::DuplicatePid(_)) => report.already_present.push(pid),
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}
