mod support;

use std::collections::BTreeSet;

use fcrepo_core::fixtures::COLLECTION_QUERY;
use fcrepo_core::index::{parse_query, Query, QueryLanguage};
use fcrepo_core::model::Pid;
use fcrepo_core::oai::{OaiConfig, OaiProvider, OaiSet, DC_NS, OAI_DC_NS, OAI_NS};
use fcrepo_core::xml::{Node, Pull};
use regex::Regex;
use support::repo::{fixture_repo, pid};

fn config() -> OaiConfig {
    OaiConfig {
        domain: "example.org".into(),
        sets: vec![OaiSet::parse("demo:10").unwrap()],
        ..OaiConfig::default()
    }
}

fn args(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

fn error_code(xml: &str) -> Option<String> {
    Regex::new(r#"<error code="(\w+)""#).unwrap().captures(xml).map(|c| c[1].to_string())
}

fn identifiers(xml: &str) -> Vec<String> {
    Regex::new(r"<identifier>([^<]+)</identifier>")
        .unwrap()
        .captures_iter(xml)
        .map(|c| c[1].to_string())
        .collect()
}

/// Root and metadata payload namespaces of a response.
fn check_structure(xml: &str) {
    let mut pull = Pull::new(xml.as_bytes());
    let mut saw_root = false;
    let mut in_metadata = false;
    loop {
        match pull.next().unwrap() {
            Node::Open(el) if !saw_root => {
                assert!(el.is(OAI_NS, "OAI-PMH"));
                saw_root = true;
            }
            Node::Open(el) if el.is(OAI_NS, "metadata") => in_metadata = true,
            Node::Open(el) if in_metadata => {
                assert!(el.is(OAI_DC_NS, "dc"), "payload root {}", el.local);
                loop {
                    match pull.next().unwrap() {
                        Node::Open(child) => {
                            assert_eq!(child.namespace.as_deref(), Some(DC_NS));
                            pull.skip(&child).unwrap();
                        }
                        Node::Close => break,
                        _ => {}
                    }
                }
                in_metadata = false;
            }
            Node::Eof => break,
            _ => {}
        }
    }
    assert!(saw_root);
}

#[test]
fn list_records_for_the_collection() {
    let t = fixture_repo();
    let cfg = config();
    let oai = OaiProvider::new(&t.repo, &cfg);
    let xml = oai.handle(&args(&[("verb", "ListRecords"), ("metadataPrefix", "oai_dc"), ("set", "demo:10")]));
    assert_eq!(error_code(&xml), None, "{xml}");
    assert_eq!(identifiers(&xml), ["oai:example.org:demo:11", "oai:example.org:demo:12"]);
    assert!(xml.contains("<dc:title>Image of UVA Pavilion - Drawing</dc:title>"));
    // demo:12 has no static DC title; this comes from its getDC dissemination
    assert!(xml.contains("<dc:title>Photograph of UVA Pavilion III</dc:title>"));
    assert!(xml.contains("<setSpec>demo:10</setSpec>"));
    assert!(xml.contains("<datestamp>2004-12-10T00:21:57Z</datestamp>"));
    assert!(!xml.contains("resumptionToken"));
    check_structure(&xml);
}

#[test]
fn record_set_equals_the_index_answer() {
    let t = fixture_repo();
    let cfg = config();
    let oai = OaiProvider::new(&t.repo, &cfg);
    let Query::Tuples(q) = parse_query(COLLECTION_QUERY, QueryLanguage::Itql).unwrap() else {
        panic!("tuple query expected")
    };
    let expected: BTreeSet<Pid> = t
        .repo
        .snapshot()
        .query_tuples(&q, usize::MAX)
        .rows
        .iter()
        .map(|r| Pid::from_uri(r[0].as_resource().unwrap()).unwrap())
        .collect();
    let listed: BTreeSet<Pid> = oai.items().unwrap().into_iter().filter(|i| i.sets.contains(&"demo:10".to_string())).map(|i| i.pid).collect();
    assert_eq!(listed, expected);
    assert_eq!(oai.set_members(&cfg.sets[0]).unwrap(), BTreeSet::from([pid("demo:11"), pid("demo:12")]));
}

#[test]
fn get_record_and_errors() {
    let t = fixture_repo();
    let cfg = config();
    let oai = OaiProvider::new(&t.repo, &cfg);
    let xml = oai.handle(&args(&[("verb", "GetRecord"), ("identifier", "oai:example.org:demo:11"), ("metadataPrefix", "oai_dc")]));
    assert!(xml.contains("<dc:title>Image of UVA Pavilion - Drawing</dc:title>"), "{xml}");
    check_structure(&xml);

    let code = |pairs: &[(&str, &str)]| error_code(&oai.handle(&args(pairs)));
    assert_eq!(code(&[("verb", "ListRecords"), ("metadataPrefix", "marcxml")]).as_deref(), Some("cannotDisseminateFormat"));
    assert_eq!(code(&[("verb", "Dance")]).as_deref(), Some("badVerb"));
    assert_eq!(code(&[]).as_deref(), Some("badVerb"));
    assert_eq!(code(&[("verb", "ListRecords")]).as_deref(), Some("badArgument"));
    assert_eq!(code(&[("verb", "ListRecords"), ("metadataPrefix", "oai_dc"), ("colour", "red")]).as_deref(), Some("badArgument"));
    assert_eq!(code(&[("verb", "Identify"), ("verb", "Identify")]).as_deref(), Some("badArgument"));
    assert_eq!(
        code(&[("verb", "GetRecord"), ("identifier", "oai:example.org:demo:99"), ("metadataPrefix", "oai_dc")]).as_deref(),
        Some("idDoesNotExist")
    );
    assert_eq!(
        code(&[("verb", "GetRecord"), ("identifier", "oai:example.org:demo:10"), ("metadataPrefix", "oai_dc")]).as_deref(),
        Some("idDoesNotExist")
    );
    assert_eq!(
        code(&[("verb", "ListRecords"), ("metadataPrefix", "oai_dc"), ("from", "2030-01-01")]).as_deref(),
        Some("noRecordsMatch")
    );
    assert_eq!(
        code(&[("verb", "ListRecords"), ("metadataPrefix", "oai_dc"), ("from", "2004-12-11"), ("until", "2004-12-10")]).as_deref(),
        Some("badArgument")
    );
    assert_eq!(code(&[("verb", "ListRecords"), ("resumptionToken", "junk")]).as_deref(), Some("badResumptionToken"));
    let bad = oai.handle(&args(&[("verb", "Dance")]));
    assert!(bad.contains("<request>"), "error responses do not echo arguments");
}

#[test]
fn identify_and_sets() {
    let t = fixture_repo();
    let cfg = config();
    let oai = OaiProvider::new(&t.repo, &cfg);
    let xml = oai.handle(&args(&[("verb", "Identify")]));
    assert!(xml.contains("<baseURL>http://localhost:8080/fedora/oai</baseURL>"));
    assert!(xml.contains("<earliestDatestamp>2004-12-10T00:21:57Z</earliestDatestamp>"));
    let sets = oai.handle(&args(&[("verb", "ListSets")]));
    assert!(sets.contains("<setName>UVA Pavilion Collection</setName>"), "{sets}");
    let formats = oai.handle(&args(&[("verb", "ListMetadataFormats")]));
    assert!(formats.contains("<metadataPrefix>oai_dc</metadataPrefix>"));

    let no_sets = OaiConfig::default();
    let plain = OaiProvider::new(&t.repo, &no_sets);
    assert_eq!(error_code(&plain.handle(&args(&[("verb", "ListSets")]))).as_deref(), Some("noSetHierarchy"));
}

#[test]
fn resumption_tokens_page_through_everything() {
    let t = fixture_repo();
    let cfg = OaiConfig {
        page_size: 1,
        ..config()
    };
    let oai = OaiProvider::new(&t.repo, &cfg);
    let token_re = Regex::new(r#"<resumptionToken completeListSize="(\d+)" cursor="(\d+)">([^<]*)</resumptionToken>"#).unwrap();
    let mut seen = Vec::new();
    let mut xml = oai.handle(&args(&[("verb", "ListIdentifiers"), ("metadataPrefix", "oai_dc"), ("set", "demo:10")]));
    loop {
        seen.extend(identifiers(&xml));
        let caps = token_re.captures(&xml).expect("paged responses carry a token");
        assert_eq!(&caps[1], "2");
        if caps[3].is_empty() {
            break;
        }
        xml = oai.handle(&args(&[("verb", "ListIdentifiers"), ("resumptionToken", &caps[3])]));
    }
    assert_eq!(seen, ["oai:example.org:demo:11", "oai:example.org:demo:12"]);
}

#[test]
fn inactive_members_drop_out() {
    let t = fixture_repo();
    t.repo.set_object_property(&pid("demo:12"), "state", "I", "admin").unwrap();
    let cfg = config();
    let oai = OaiProvider::new(&t.repo, &cfg);
    let xml = oai.handle(&args(&[("verb", "ListRecords"), ("metadataPrefix", "oai_dc"), ("set", "demo:10")]));
    assert_eq!(identifiers(&xml), ["oai:example.org:demo:11"]);
}
