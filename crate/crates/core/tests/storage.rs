mod support;

use std::collections::BTreeMap;

use fcrepo_core::fixtures::{demo_11, image_bytes, DEMO_11_FOXML};
use fcrepo_core::foxml::parse_foxml;
use fcrepo_core::model::{ControlGroup, Timestamp};
use fcrepo_core::rdf::{vocab, Term, Triple};
use fcrepo_core::storage::{
    DatastreamChange, DatastreamOutput, DisseminatorChange, FaultPoint, NewContent, NewDatastream, NewDisseminator,
    Repository, SearchFilter,
};
use fcrepo_core::Error;
use support::repo::{assert_coherent, empty_repo, fixture_repo, observe, pid};

fn ts(s: &str) -> Timestamp {
    Timestamp::parse(s).unwrap()
}

fn content(out: DatastreamOutput) -> Vec<u8> {
    match out {
        DatastreamOutput::Content { bytes, .. } => bytes,
        DatastreamOutput::Redirect { url } => panic!("unexpected redirect to {url}"),
    }
}

fn stage_demo_11(repo: &Repository) {
    for v in ["HIGH.0", "HIGH.1", "HIGH.2"] {
        repo.stage_content(&format!("demo:11:HIGH:{v}"), &image_bytes("demo:11", v)).unwrap();
    }
}

fn new_inline(id: &str, body: &str) -> NewDatastream {
    NewDatastream {
        id: id.to_string(),
        control_group: ControlGroup::InlineXml,
        mime_type: "text/xml".to_string(),
        label: format!("{id} record"),
        format_uri: None,
        versionable: true,
        content: NewContent::Bytes(body.as_bytes().to_vec()),
    }
}

#[test]
fn ingest_export_reingest_is_a_fixpoint() {
    let a = empty_repo();
    stage_demo_11(&a.repo);
    assert_eq!(a.repo.ingest(DEMO_11_FOXML.as_bytes(), "admin").unwrap(), pid("demo:11"));
    let first = a.repo.export(&pid("demo:11")).unwrap();

    let b = empty_repo();
    stage_demo_11(&b.repo);
    b.repo.ingest(&first, "admin").unwrap();
    let second = b.repo.export(&pid("demo:11")).unwrap();
    assert_eq!(first, second);
    assert_eq!(parse_foxml(&first).unwrap(), *a.repo.object(&pid("demo:11")).unwrap());
}

#[test]
fn ingest_rejects_duplicates_and_unstaged_content() {
    let t = empty_repo();
    let err = t.repo.ingest(DEMO_11_FOXML.as_bytes(), "admin").unwrap_err();
    assert!(matches!(err, Error::MissingContent(ref id) if id.starts_with("demo:11:HIGH")), "{err}");
    assert!(!t.repo.contains(&pid("demo:11")));

    stage_demo_11(&t.repo);
    t.repo.ingest(DEMO_11_FOXML.as_bytes(), "admin").unwrap();
    let err = t.repo.ingest(DEMO_11_FOXML.as_bytes(), "admin").unwrap_err();
    assert_eq!(err.code(), "DuplicatePid");
}

#[test]
fn ingest_synthesizes_missing_dc() {
    let t = fixture_repo();
    let dc = content(t.repo.get_datastream_content(&pid("demo:12"), "DC", None).unwrap());
    let dc = String::from_utf8(dc).unwrap();
    assert!(dc.contains("<dc:identifier>demo:12</dc:identifier>"), "{dc}");
}

#[test]
fn ingest_of_malformed_relations_is_an_invariant_violation() {
    let t = empty_repo();
    stage_demo_11(&t.repo);
    let doc = DEMO_11_FOXML.replace(
        "<rdf:Description rdf:about=\"info:fedora/demo:11\">",
        "<rdf:Description rdf:about=\"info:fedora/demo:99\">",
    );
    assert_eq!(t.repo.ingest(doc.as_bytes(), "admin").unwrap_err().code(), "InvariantViolation");
}

#[test]
fn managed_content_by_url_is_internalized() {
    let t = empty_repo();
    let doc = DEMO_11_FOXML.replace("TYPE=\"INTERNAL_ID\"\n            REF=\"demo:11:HIGH:HIGH.0\"", "TYPE=\"URL\" REF=\"http://images.example/h0.jpg\"");
    for v in ["HIGH.1", "HIGH.2"] {
        t.repo.stage_content(&format!("demo:11:HIGH:{v}"), b"x").unwrap();
    }
    t.repo.ingest(doc.as_bytes(), "admin").unwrap();
    assert!(t.fetcher.requests.lock().contains(&"http://images.example/h0.jpg".to_string()));
    let got = content(t.repo.get_datastream_content(&pid("demo:11"), "HIGH", Some(ts("2004-12-11"))).unwrap());
    assert_eq!(got, b"fetched http://images.example/h0.jpg");
}

#[test]
fn version_resolution_over_fixture_dates() {
    let t = fixture_repo();
    let high = |at: &str| t.repo.get_datastream_content(&pid("demo:11"), "HIGH", Some(ts(at)));
    assert_eq!(content(high("2004-12-10T00:21:57Z").unwrap()), image_bytes("demo:11", "HIGH.0"));
    assert_eq!(content(high("2004-12-15T00:00:00Z").unwrap()), image_bytes("demo:11", "HIGH.1"));
    assert_eq!(content(high("2005-01-01T00:00:00Z").unwrap()), image_bytes("demo:11", "HIGH.2"));
    assert_eq!(high("2004-01-01").unwrap_err().code(), "NoVersionAtTime");
    let latest = t.repo.get_datastream_content(&pid("demo:11"), "HIGH", None).unwrap();
    assert_eq!(content(latest), image_bytes("demo:11", "HIGH.2"));
}

#[test]
fn control_groups_serve_as_expected() {
    let t = fixture_repo();
    let redirect = t.repo.get_datastream_content(&pid("demo:12"), "WEBPAGE", None).unwrap();
    assert!(matches!(redirect, DatastreamOutput::Redirect { ref url } if url.starts_with("http://www.virginia.edu/")));
    match t.repo.get_datastream_content(&pid("demo:11"), "THUMB", None).unwrap() {
        DatastreamOutput::Content { mime_type, bytes } => {
            assert_eq!(mime_type, "image/jpg");
            assert!(String::from_utf8(bytes).unwrap().contains("archerd05small.jpg"));
        }
        other => panic!("{other:?}"),
    }
    let dc = content(t.repo.get_datastream_content(&pid("demo:11"), "DC", None).unwrap());
    assert!(dc.starts_with(b"<oai_dc:dc"));
    assert_eq!(
        t.repo.get_datastream_content(&pid("demo:11"), "NOPE", None).unwrap_err().code(),
        "NotFound"
    );
}

#[test]
fn modify_by_value_adds_version_and_one_audit_record() {
    let t = fixture_repo();
    let p = pid("demo:11");
    let history = t.repo.get_object_history(&p).unwrap();
    let audits = t.repo.object(&p).unwrap().audit_trail.len();
    let change = DatastreamChange {
        content: Some(NewContent::Bytes(b"new drawing".to_vec())),
        ..Default::default()
    };
    let result = t.repo.modify_datastream(&p, "HIGH", change, "curator", "rescan").unwrap();
    assert_eq!(result.new_version_id.as_deref(), Some("HIGH.3"));
    assert_eq!(result.component_id, "HIGH");

    let obj = t.repo.object(&p).unwrap();
    assert_eq!(obj.audit_trail.len(), audits + 1);
    let rec = obj.audit_trail.last().unwrap();
    assert_eq!(rec.action, "modifyDatastreamByRef");
    assert_eq!(rec.responsibility, "curator");
    assert_eq!(rec.justification, "rescan");
    assert_eq!(rec.id, result.audit_record_id);
    assert_eq!(rec.date, result.timestamp);
    assert_eq!(obj.properties.last_modified, result.timestamp);
    assert_eq!(t.repo.get_object_history(&p).unwrap().len(), history.len() + 1);

    assert_eq!(content(t.repo.get_datastream_content(&p, "HIGH", None).unwrap()), b"new drawing");
    let old = t.repo.get_datastream_content(&p, "HIGH", Some(ts("2005-01-01"))).unwrap();
    assert_eq!(content(old), image_bytes("demo:11", "HIGH.2"));
    assert_coherent(&t.repo);
}

#[test]
fn modify_metadata_only_carries_content_forward() {
    let t = fixture_repo();
    let p = pid("demo:11");
    let change = DatastreamChange {
        label: Some("Relabelled".into()),
        ..Default::default()
    };
    let r = t.repo.modify_datastream(&p, "HIGH", change, "curator", "").unwrap();
    assert_eq!(r.new_version_id.as_deref(), Some("HIGH.3"));
    assert_eq!(content(t.repo.get_datastream_content(&p, "HIGH", None).unwrap()), image_bytes("demo:11", "HIGH.2"));
    let dc = DatastreamChange {
        content: Some(NewContent::Bytes(b"<oai_dc:dc xmlns:oai_dc=\"http://www.openarchives.org/OAI/2.0/oai_dc/\"/>".to_vec())),
        ..Default::default()
    };
    let r = t.repo.modify_datastream(&p, "DC", dc, "curator", "").unwrap();
    assert_eq!(r.new_version_id.as_deref(), Some("DC.1"));
    assert_eq!(t.repo.object(&p).unwrap().audit_trail.last().unwrap().action, "modifyDatastreamByValue");
}

#[test]
fn modify_rejects_bad_inline_xml_and_reserved_audit() {
    let t = fixture_repo();
    let p = pid("demo:11");
    let before = observe(&t.repo);
    let bad = DatastreamChange {
        content: Some(NewContent::Bytes(b"<unclosed>".to_vec())),
        ..Default::default()
    };
    assert!(t.repo.modify_datastream(&p, "DC", bad, "curator", "").is_err());
    let audit = DatastreamChange::default();
    assert_eq!(t.repo.modify_datastream(&p, "AUDIT", audit, "curator", "").unwrap_err().code(), "ReservedId");
    assert_eq!(observe(&t.repo), before);
}

#[test]
fn add_and_purge_datastreams() {
    let t = fixture_repo();
    let p = pid("demo:10");
    let r = t.repo.add_datastream(&p, new_inline("NOTES", "<notes/>"), "curator").unwrap();
    assert_eq!(r.new_version_id.as_deref(), Some("NOTES.0"));
    let uri = Term::resource("info:fedora/demo:10/NOTES");
    let disseminates = Triple::new("info:fedora/demo:10", vocab::DISSEMINATES, uri);
    assert!(t.repo.snapshot().triples_of(&p).contains(&disseminates));

    let dup = t.repo.add_datastream(&p, new_inline("NOTES", "<notes/>"), "curator").unwrap_err();
    assert_eq!(dup.code(), "DuplicateComponent");
    assert_eq!(t.repo.add_datastream(&p, new_inline("AUDIT", "<a/>"), "c").unwrap_err().code(), "ReservedId");

    t.repo.purge_datastream(&p, "NOTES", "curator").unwrap();
    assert!(!t.repo.snapshot().triples_of(&p).contains(&disseminates));
    assert_eq!(t.repo.object(&p).unwrap().audit_trail.last().unwrap().action, "purgeDatastream");
    assert_eq!(t.repo.purge_datastream(&p, "DC", "c").unwrap_err().code(), "ReservedId");
    assert_eq!(
        t.repo.purge_datastream(&pid("demo:11"), "HIGH", "c").unwrap_err().code(),
        "BoundDatastream"
    );
    assert_coherent(&t.repo);
}

#[test]
fn managed_add_by_url_and_purge_discards_content() {
    let t = fixture_repo();
    let p = pid("demo:10");
    let spec = NewDatastream {
        id: "SCAN".into(),
        control_group: ControlGroup::Managed,
        mime_type: "image/tiff".into(),
        label: "Scan".into(),
        format_uri: None,
        versionable: true,
        content: NewContent::Url("http://scans.example/1.tif".into()),
    };
    t.repo.add_datastream(&p, spec, "curator").unwrap();
    assert!(t.repo.content_ids().unwrap().contains(&"demo:10:SCAN:SCAN.0".to_string()));
    t.repo.purge_datastream(&p, "SCAN", "curator").unwrap();
    assert!(!t.repo.content_ids().unwrap().contains(&"demo:10:SCAN:SCAN.0".to_string()));
}

#[test]
fn disseminator_lifecycle_drives_method_triples() {
    let t = fixture_repo();
    let p = pid("demo:10");
    let method = |m: &str| {
        Triple::new(
            "info:fedora/demo:10",
            vocab::DISSEMINATES,
            Term::resource(format!("info:fedora/demo:10/bdef:OAI/{m}")),
        )
    };
    let spec = NewDisseminator {
        id: "DISS1".into(),
        bdef: pid("bdef:OAI"),
        bmech: pid("bmech:OAI"),
        label: "OAI".into(),
        bindings: BTreeMap::from([("DCSOURCE".to_string(), "DC".to_string())]),
    };
    t.repo.add_disseminator(&p, spec.clone(), "curator").unwrap();
    assert!(t.repo.snapshot().triples_of(&p).contains(&method("getDC")));

    let unbound = NewDisseminator {
        id: "DISS2".into(),
        bindings: BTreeMap::new(),
        ..spec.clone()
    };
    assert!(t.repo.add_disseminator(&p, unbound, "curator").is_err());
    let absent = NewDisseminator {
        id: "DISS3".into(),
        bdef: pid("bdef:NONE"),
        ..spec
    };
    assert_eq!(t.repo.add_disseminator(&p, absent, "curator").unwrap_err().code(), "MissingDependency");

    let change = DisseminatorChange {
        label: Some("OAI metadata".into()),
        ..Default::default()
    };
    let r = t.repo.modify_disseminator(&p, "DISS1", change, "curator", "").unwrap();
    assert_eq!(r.new_version_id.as_deref(), Some("DISS1.1"));

    t.repo.purge_disseminator(&p, "DISS1", "curator").unwrap();
    assert!(!t.repo.snapshot().triples_of(&p).contains(&method("getDC")));
    let actions: Vec<_> = t.repo.object(&p).unwrap().audit_trail.iter().map(|a| a.action.clone()).collect();
    assert_eq!(actions, ["addDisseminator", "modifyDisseminator", "purgeDisseminator"]);
    assert_coherent(&t.repo);
}

#[test]
fn object_properties() {
    let t = fixture_repo();
    let p = pid("demo:10");
    t.repo.set_object_property(&p, "label", "Pavilions", "curator").unwrap();
    assert_eq!(t.repo.get_object_property(&p, "label").unwrap(), "Pavilions");
    let label = Triple::new("info:fedora/demo:10", vocab::LABEL, Term::literal("Pavilions"));
    assert!(t.repo.snapshot().triples_of(&p).contains(&label));
    t.repo.set_object_property(&p, vocab::STATE, "I", "curator").unwrap();
    assert_eq!(t.repo.get_object_property(&p, "state").unwrap(), "I");
    let err = t.repo.set_object_property(&p, "createdDate", "2001-01-01T00:00:00Z", "c").unwrap_err();
    assert_eq!(err.code(), "ImmutableProperty");
    assert_eq!(t.repo.get_object_property(&p, "colour").unwrap_err().code(), "UnknownProperty");
    assert_eq!(t.repo.get_object_property(&p, "createdDate").unwrap(), "2004-12-10T00:21:57Z");
    assert_coherent(&t.repo);
}

#[test]
fn purge_object_removes_triples_and_content() {
    let t = fixture_repo();
    let p = pid("demo:11");
    t.repo.purge_object(&p, "admin").unwrap();
    assert!(t.repo.snapshot().triples_of(&p).is_empty());
    assert!(t.repo.content_ids().unwrap().iter().all(|id| !id.starts_with("demo:11:")));
    assert_eq!(t.repo.purge_object(&p, "admin").unwrap_err().code(), "NotFound");
    assert_eq!(t.repo.export(&p).unwrap_err().code(), "NotFound");
    assert_coherent(&t.repo);
}

#[test]
fn purging_a_bdef_drops_dependent_method_triples() {
    let t = fixture_repo();
    let get_dc = Term::resource("info:fedora/demo:11/bdef:OAI/getDC");
    assert!(t.repo.snapshot().triples().iter().any(|x| x.object == get_dc));
    t.repo.purge_object(&pid("bdef:OAI"), "admin").unwrap();
    assert!(!t.repo.snapshot().triples().iter().any(|x| x.object == get_dc));
    assert_coherent(&t.repo);
}

#[test]
fn registry_search() {
    let t = fixture_repo();
    let pids = |q: &str| -> Vec<String> {
        let r = t.repo.registry_search(&SearchFilter::parse(q).unwrap(), 100, 0);
        r.hits.into_iter().map(|h| h.pid.to_string()).collect()
    };
    assert!(pids("label~pavilion").contains(&"demo:11".to_string()));
    assert_eq!(pids("state=A pid=demo:*"), ["demo:10", "demo:11", "demo:12"]);
    assert_eq!(pids("cModel=BDEF"), ["BDEF:2", "bdef:OAI"]);
    let page = t.repo.registry_search(&SearchFilter::default(), 2, 1);
    assert_eq!(page.total, 7);
    assert_eq!(page.hits.len(), 2);
    assert!(t.repo.registry_search(&SearchFilter::default(), 0, 0).hits.is_empty());
}

#[test]
fn rebuild_matches_incremental_and_skips_corrupt_files() {
    let t = fixture_repo();
    t.repo
        .modify_datastream(&pid("demo:11"), "HIGH", DatastreamChange::default(), "c", "")
        .unwrap();
    t.repo.set_object_property(&pid("demo:12"), "label", "Renamed", "c").unwrap();
    let incremental = t.repo.snapshot().triples();
    let stats = t.repo.rebuild_index().unwrap();
    assert!(stats.failures.is_empty());
    assert_eq!(stats.objects, 7);
    assert_eq!(t.repo.snapshot().triples(), incremental);

    std::fs::write(t.dir.path().join("objects").join("junk%3A1.xml"), b"<not foxml").unwrap();
    let stats = t.repo.rebuild_index().unwrap();
    assert_eq!(stats.failures.len(), 1);
    assert_eq!(t.repo.snapshot().triples(), incremental);
}

#[test]
fn reopening_restores_state() {
    let t = fixture_repo();
    t.repo.set_object_property(&pid("demo:10"), "label", "Kept", "c").unwrap();
    let before = observe(&t.repo);
    let reopened = Repository::open(t.dir.path(), support::repo::options(t.fetcher.clone())).unwrap();
    assert_eq!(observe(&reopened), before);
}

#[test]
fn fixture_graph_has_expected_shape() {
    let t = fixture_repo();
    let snap = t.repo.snapshot();
    // demo:11 carries 6 object, 5x3 datastream, 2x3 method triples and one relation
    assert_eq!(snap.triples_of(&pid("demo:11")).len(), 6 + 15 + 6 + 1);
    assert_eq!(snap.pids().count(), 7);
    let demo11 = parse_foxml(demo_11().as_bytes()).unwrap();
    assert_eq!(demo11.disseminators.len(), 2);
}

type Op = Box<dyn Fn(&Repository) -> fcrepo_core::Result<()>>;

fn mutating_ops() -> Vec<(&'static str, Op)> {
    let p = || pid("demo:11");
    vec![
        (
            "ingest",
            Box::new(|r: &Repository| {
                let doc = demo_11().replace("demo:11", "demo:77");
                for v in ["HIGH.0", "HIGH.1", "HIGH.2"] {
                    r.stage_content(&format!("demo:77:HIGH:{v}"), b"x")?;
                }
                r.ingest(doc.as_bytes(), "admin").map(|_| ())
            }),
        ),
        ("purge_object", Box::new(move |r: &Repository| r.purge_object(&p(), "admin"))),
        (
            "add_datastream",
            Box::new(move |r: &Repository| r.add_datastream(&p(), new_inline("NOTES", "<n/>"), "c").map(|_| ())),
        ),
        (
            "add_managed_datastream",
            Box::new(move |r: &Repository| {
                let spec = NewDatastream {
                    id: "SCAN".into(),
                    control_group: ControlGroup::Managed,
                    mime_type: "image/tiff".into(),
                    label: "Scan".into(),
                    format_uri: None,
                    versionable: true,
                    content: NewContent::Bytes(b"tiff".to_vec()),
                };
                r.add_datastream(&p(), spec, "c").map(|_| ())
            }),
        ),
        (
            "modify_datastream",
            Box::new(move |r: &Repository| {
                let change = DatastreamChange {
                    content: Some(NewContent::Bytes(b"v4".to_vec())),
                    ..Default::default()
                };
                r.modify_datastream(&p(), "HIGH", change, "c", "j").map(|_| ())
            }),
        ),
        ("purge_datastream", Box::new(move |r: &Repository| r.purge_datastream(&p(), "THUMB", "c").map(|_| ()))),
        (
            "add_disseminator",
            Box::new(move |r: &Repository| {
                let spec = NewDisseminator {
                    id: "DISS9".into(),
                    bdef: pid("BDEF:2"),
                    bmech: pid("BMECH:3"),
                    label: String::new(),
                    bindings: BTreeMap::from([("HIGHRES_IMG".to_string(), "HIGH".to_string())]),
                };
                r.add_disseminator(&p(), spec, "c").map(|_| ())
            }),
        ),
        (
            "modify_disseminator",
            Box::new(move |r: &Repository| {
                let change = DisseminatorChange {
                    label: Some("x".into()),
                    ..Default::default()
                };
                r.modify_disseminator(&p(), "DISS1", change, "c", "").map(|_| ())
            }),
        ),
        ("purge_disseminator", Box::new(move |r: &Repository| r.purge_disseminator(&p(), "DISS2", "c").map(|_| ()))),
        (
            "set_object_property",
            Box::new(move |r: &Repository| r.set_object_property(&p(), "label", "x", "c").map(|_| ())),
        ),
        ("purge_bdef", Box::new(|r: &Repository| r.purge_object(&pid("bdef:OAI"), "admin"))),
    ]
}

#[test]
fn every_fault_point_leaves_state_unchanged() {
    let mut injections = 0;
    for (name, op) in mutating_ops() {
        for point in FaultPoint::ALL {
            let t = fixture_repo();
            let before = observe(&t.repo);
            t.repo.inject_fault(Some(point));
            let err = op(&t.repo).expect_err(name);
            assert_eq!(err.code(), "FaultInjected", "{name} at {point}: {err}");
            t.repo.inject_fault(None);
            let mut after = observe(&t.repo);
            // content staged by the test itself before the operation is not part of the write
            after.content.retain(|id, _| !id.starts_with("demo:77:"));
            assert_eq!(after, before, "{name} at {point}");
            assert_coherent(&t.repo);
            injections += 1;
        }
        // the same operation succeeds and changes something once disarmed
        let t = fixture_repo();
        let before = observe(&t.repo);
        op(&t.repo).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_ne!(observe(&t.repo), before, "{name} had no effect");
        assert_coherent(&t.repo);
    }
    assert_eq!(injections, mutating_ops().len() * FaultPoint::ALL.len());
}
