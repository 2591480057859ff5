mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use ehr2fhir::catalog::FhirCatalog;
use ehr2fhir::config::Config;
use ehr2fhir::equivalence::get_equivalence_set;
use ehr2fhir::ingest::{extract_elements, leaf_occurrences, parse_ehr, Terminology};
use ehr2fhir::mapper::{FhirValue, OutputFormat};
use ehr2fhir::pipeline::Pipeline;
use ehr2fhir::similarity::{edit_distance, lev, Combination, Lexicon, MatchParameters};
use ehr2fhir::typing::reformat;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #[test]
    fn lev_is_symmetric_bounded_and_reflexive(a in "[a-e -]{0,12}", b in "\\PC{0,10}") {
        let ab = lev(&a, &b).value();
        prop_assert_eq!(ab, lev(&b, &a).value());
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(lev(&a, &a).value(), 1.0);
        prop_assert_eq!(edit_distance(&a, &b), oracle_distance(&a, &b));
    }

    #[test]
    fn edit_distance_obeys_the_triangle_inequality(a in "[abc]{0,8}", b in "[abc]{0,8}", c in "[abc]{0,8}") {
        prop_assert!(edit_distance(&a, &c) <= edit_distance(&a, &b) + edit_distance(&b, &c));
    }

    #[test]
    fn reformat_lands_in_strict_format_and_is_stable(value in "\\PC{0,16}|[0-9/ .-]{1,12}|[MmFf][a-z]{0,5}") {
        let catalog = FhirCatalog::bundled();
        for rule in catalog.type_rules() {
            if let Ok(v) = reformat(&value, rule) {
                prop_assert!(rule.is_strict(&v), "{}: {:?} -> {:?}", rule.id(), value, v);
                prop_assert_eq!(reformat(&v, rule).unwrap(), v);
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Record {
    demographics: Vec<(&'static str, &'static str)>,
    address: Vec<(&'static str, &'static str)>,
    events: Vec<Vec<(&'static str, &'static str)>>,
}

fn fields(pool: &'static [(&'static str, &'static [&'static str])]) -> impl Strategy<Value = Vec<(&'static str, &'static str)>> {
    proptest::sample::subsequence(pool.to_vec(), 0..=pool.len()).prop_flat_map(|chosen| {
        chosen
            .into_iter()
            .map(|(name, values)| proptest::sample::select(values.to_vec()).prop_map(move |v| (name, v)))
            .collect::<Vec<_>>()
    })
}

const DEMOGRAPHICS: &[(&str, &[&str])] = &[
    ("FirstName", &["Alice", "Ann & Bo"]),
    ("Surname", &["Abbot", "O'Neil"]),
    ("DateOfBirth", &["1951-01-01", "02/03/1960"]),
    ("Sex", &["F", "M", "female"]),
    ("ManagingOrganisation", &["NHS", "<Clinic>"]),
];
const ADDRESS: &[(&str, &[&str])] = &[
    ("Text", &["1 Abbot Street"]),
    ("Country", &["United Kingdom"]),
    ("PostCode", &["ZZ99 3VZ"]),
];
const EVENT: &[(&str, &[&str])] = &[("Text", &["first visit", "review"]), ("Code", &["X3003", "38341003"])];

fn record() -> impl Strategy<Value = Record> {
    (fields(DEMOGRAPHICS), fields(ADDRESS), proptest::collection::vec(fields(EVENT), 0..4)).prop_map(
        |(demographics, address, events)| Record {
            demographics,
            address,
            events,
        },
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn xml(r: &Record) -> String {
    let leaves = |items: &[(&str, &str)]| -> String {
        items.iter().map(|(n, v)| format!("<{n}>{}</{n}>", escape(v))).collect()
    };
    let mut out = String::from("<Record><Demographics>");
    out += &leaves(&r.demographics);
    if !r.address.is_empty() {
        out += &format!("<Address>{}</Address>", leaves(&r.address));
    }
    out += "</Demographics>";
    for e in &r.events {
        out += &format!("<Event>{}</Event>", leaves(e));
    }
    out += "</Record>";
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ingest_keeps_every_value_under_a_unique_name(r in record()) {
        let doc = parse_ehr(xml(&r).as_bytes()).unwrap();
        let elements = extract_elements(&doc);
        let names: BTreeSet<&str> = elements.iter().map(|e| e.match_name.as_str()).collect();
        prop_assert_eq!(names.len(), elements.len());

        let occurrences = leaf_occurrences(&doc);
        let mut expected: BTreeMap<(String, String), Vec<String>> = BTreeMap::new();
        for o in &occurrences {
            expected.entry((o.parent_name.clone(), o.leaf_name.clone())).or_default().push(o.value.clone());
        }
        let got: BTreeMap<(String, String), Vec<String>> = elements
            .iter()
            .map(|e| ((e.parent_name.clone(), e.leaf_name.clone()), e.values.clone()))
            .collect();
        prop_assert_eq!(got, expected);

        let mut written: Vec<&str> = r.demographics.iter().chain(&r.address).chain(r.events.iter().flatten()).map(|(_, v)| *v).collect();
        let mut read: Vec<&str> = occurrences.iter().map(|o| o.value.as_str()).collect();
        written.sort_unstable();
        read.sort_unstable();
        prop_assert_eq!(read, written);
    }

    #[test]
    fn mapped_bundles_are_valid_connected_and_complete(r in record()) {
        let input = xml(&r);
        let pipeline = Pipeline::from_config(&Config::builtin()).unwrap();
        let params = Config::builtin().source("systmone").unwrap().parameters.clone();
        let conversion = pipeline.convert(input.as_bytes(), &params, &Terminology::bundled()).unwrap();
        let bundle = &conversion.bundle;
        prop_assert!(bundle.check(pipeline.catalog()).is_ok(), "{:?}", bundle.check(pipeline.catalog()));

        // every matched value is written, reported as transformed, or reported as skipped
        let report = &conversion.report.mapping;
        let texts: Vec<&str> = bundle
            .instances
            .iter()
            .flat_map(|i| i.values.iter())
            .filter_map(|(_, v)| match v { FhirValue::Text(t) => Some(t.as_str()), _ => None })
            .collect();
        for pair in &conversion.equivalence.pairs {
            for value in &pair.ehr.values {
                let accounted = texts.iter().any(|t| t.contains(value.as_str()))
                    || report.reformatted.iter().any(|x| &x.original == value)
                    || report.translated_codes.iter().any(|x| &x.original == value)
                    || report.skipped_values.iter().any(|x| &x.value == value);
                prop_assert!(accounted, "{} value {:?} vanished", pair.ehr.match_name, value);
            }
        }

        // with repeated events, one Observation per event block that carries
        // Observation data plus one for record-level Observation data; a lone
        // event shares the record-level instance
        let events_with_data = r.events.iter().filter(|e| {
            e.iter().any(|(leaf, _)| {
                conversion.equivalence.pairs.iter().any(|p| {
                    p.ehr.parent_name == "Event" && p.ehr.leaf_name == *leaf && p.resources().any(|x| x == "Observation")
                })
            })
        }).count();
        let record_level = conversion.equivalence.pairs.iter().any(|p| {
            p.ehr.parent_name != "Event" && p.resources().any(|x| x == "Observation")
        });
        let observations = bundle.instances_of("Observation").count();
        if r.events.len() > 1 && events_with_data > 0 {
            prop_assert_eq!(observations, events_with_data + usize::from(record_level));
        } else if events_with_data > 0 || record_level {
            prop_assert_eq!(observations, 1);
        }

        // instances of different resources form one component through their references
        let ids: Vec<&str> = bundle.instances.iter().map(|i| i.instance_id.as_str()).collect();
        let kinds: BTreeSet<&str> = bundle.instances.iter().map(|i| i.resource_name.as_str()).collect();
        if kinds.len() > 1 {
            let mut reached = BTreeSet::from([ids[0]]);
            loop {
                let before = reached.len();
                for inst in &bundle.instances {
                    for (_, target) in inst.references() {
                        if reached.contains(inst.instance_id.as_str()) || reached.contains(target) {
                            reached.insert(inst.instance_id.as_str());
                            reached.insert(target);
                        }
                    }
                }
                if reached.len() == before {
                    break;
                }
            }
            prop_assert_eq!(reached.len(), ids.len(), "{}", String::from_utf8_lossy(&conversion.serialize(OutputFormat::Xml)));
        }

        let again = pipeline.convert(input.as_bytes(), &params, &Terminology::bundled()).unwrap();
        prop_assert_eq!(again.serialize(OutputFormat::Json), conversion.serialize(OutputFormat::Json));
    }

    #[test]
    fn equivalence_search_matches_exhaustive_enumeration(seed in any::<u64>(), which in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let catalog = random_catalog(&mut rng, seed as usize);
        let elements = random_elements(&mut rng);
        let combination = [Combination::FirstPassing, Combination::Max, Combination::Total, Combination::Average][which];
        let params = MatchParameters::uniform(0.95, [1.0, 1.0, 0.95], combination);
        let lexicon = Lexicon::bundled();
        let found = get_equivalence_set(&elements, &catalog, &params, &lexicon, 3);
        let oracle = brute_force(&elements, &catalog, &params, &lexicon, 3);
        prop_assert_eq!(found.pairs.len(), oracle.pairs.len());
        prop_assert_eq!(&found.anchor_resource, &oracle.anchor);
        prop_assert_eq!(&found.resources_used, &oracle.resources);
        let pairs: BTreeMap<String, (String, String, String)> = found
            .pairs
            .iter()
            .map(|p| (p.ehr.match_name.clone(), (p.fhir.owning_resource.clone(), p.fhir.path.clone(), p.fhir.name.clone())))
            .collect();
        prop_assert_eq!(pairs, oracle.pairs);
    }
}
