#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use ehr2fhir::catalog::{ElementKind, FhirCatalog, DEFAULT_GENERAL_DATA};
use ehr2fhir::ingest::EhrElement;
use ehr2fhir::similarity::{match_score, Lexicon, MatchParameters};
use ehr2fhir::typing::{compatibility, Compatibility};
use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::{json, Value};

pub const SAMPLE_RECORD: &[u8] = include_bytes!("../fixtures/sample_record.xml");
pub const SAMPLE_BUNDLE: &[u8] = include_bytes!("../fixtures/sample_bundle.xml");
pub const FULL_RECORD: &[u8] = include_bytes!("../fixtures/full_record.xml");
pub const MATCH_CORPUS: &str = include_str!("../fixtures/match_corpus.tsv");

const RESOURCES: &[&str] = &[
    "Patient", "Organization", "Observation", "Condition", "Encounter", "Practitioner", "Medication", "Task",
];

const ELEMENTS: &[(&str, &str)] = &[
    ("birthDate", "date"),
    ("gender", "gender"),
    ("status", "code"),
    ("name", "string"),
    ("name", "HumanName"),
    ("text", "string"),
    ("country", "string"),
    ("description", "string"),
    ("address", "Address"),
    ("code", "CodeableConcept"),
    ("note", "Annotation"),
    ("effectiveDateTime", "dateTime"),
    ("quantity", "Quantity"),
    ("identifier", "Identifier"),
    ("comment", "string"),
    ("severity", "code"),
    ("category", "code"),
    ("start", "dateTime"),
];

const REFERENCES: &[&str] = &["subject", "performer", "managingOrganization", "encounter", "basedOn", "author"];

const EHR_NAMES: &[(&str, &[&str])] = &[
    ("FirstName", &["Alice", "Bob"]),
    ("Surname", &["Abbot", "Smith"]),
    ("DateOfBirth", &["1951-01-01", "01-02-1951", "unknown"]),
    ("Sex", &["F", "M", "X"]),
    ("Country", &["United Kingdom"]),
    ("PostCode", &["ZZ99 3VZ"]),
    ("Code", &["X3003", "38341003"]),
    ("EventText", &["Patient first visit"]),
    ("AddressText", &["1 Abbot Street"]),
    ("Status", &["final", "Not Started"]),
    ("Comments", &["TESTFILE1"]),
    ("ManagingOrganisation", &["NHS"]),
    ("StartDate", &["2015-06-10", "10/06/2015"]),
    ("Severity", &["Major"]),
    ("Category", &["Miscellaneous"]),
    ("Description", &["Lorem ipsum"]),
    ("Gender", &["female", "Female"]),
    ("Notes", &["seen"]),
];

/// A catalog of at most five resources drawn from small pools, with
/// references mostly forming a tree plus occasional extra edges.
pub fn random_catalog<R: Rng>(rng: &mut R, tag: usize) -> FhirCatalog {
    let base: Value = serde_json::from_str(FhirCatalog::bundled_json()).unwrap();
    let n = rng.gen_range(1..=5);
    let mut names: Vec<&str> = RESOURCES.to_vec();
    names.shuffle(rng);
    names.truncate(n);

    let mut resources = Vec::new();
    for (i, name) in names.iter().enumerate() {
        let mut elements = Vec::new();
        let mut taken = BTreeSet::new();
        for _ in 0..rng.gen_range(1..=5) {
            let (el, ty) = ELEMENTS[rng.gen_range(0..ELEMENTS.len())];
            if taken.insert(el) {
                elements.push(json!({ "name": el, "type": ty }));
            }
        }
        let mut targets = Vec::new();
        if i > 0 && rng.gen_bool(0.8) {
            targets.push(names[rng.gen_range(0..i)]);
        }
        if n > 1 && rng.gen_bool(0.2) {
            let t = names[rng.gen_range(0..n)];
            if t != *name && !targets.contains(&t) {
                targets.push(t);
            }
        }
        for t in targets {
            let r = REFERENCES.iter().find(|r| !taken.contains(**r)).unwrap();
            taken.insert(r);
            elements.push(json!({ "name": r, "type": "Reference", "target": t }));
        }
        resources.push(json!({ "name": name, "category": "summary", "elements": elements }));
    }

    let doc = json!({
        "version": format!("random-{tag}"),
        "datatypes": base["datatypes"],
        "complexTypes": base["complexTypes"],
        "resources": resources,
    });
    let general: Vec<String> = DEFAULT_GENERAL_DATA.iter().map(|s| s.to_string()).collect();
    FhirCatalog::from_json(&doc.to_string()).unwrap().prepared(&general)
}

/// Up to six EHR elements with distinct names.
pub fn random_elements<R: Rng>(rng: &mut R) -> Vec<EhrElement> {
    let mut pool: Vec<&(&str, &[&str])> = EHR_NAMES.iter().collect();
    pool.shuffle(rng);
    pool.truncate(rng.gen_range(1..=6));
    pool.into_iter()
        .map(|(name, values)| {
            let k = rng.gen_range(1..=2);
            let values = (0..k).map(|_| values[rng.gen_range(0..values.len())].to_string()).collect();
            EhrElement {
                match_name: name.to_string(),
                leaf_name: name.to_string(),
                parent_name: "Record".into(),
                original_path: vec!["Record".into()],
                values,
            }
        })
        .collect()
}

/// Hop counts from the declared references alone, by Floyd–Warshall.
pub fn reference_distances(catalog: &FhirCatalog) -> Vec<Vec<u32>> {
    let res = catalog.resources();
    let n = res.len();
    let inf = u32::MAX / 4;
    let mut d = vec![vec![inf; n]; n];
    for i in 0..n {
        d[i][i] = 0;
        for (_, target) in &res[i].references {
            let j = res.iter().position(|r| &r.name == target).unwrap();
            if i != j {
                d[i][j] = 1;
                d[j][i] = 1;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSet {
    pub anchor: Option<String>,
    /// EHR name to (resource, element path, element name).
    pub pairs: BTreeMap<String, (String, String, String)>,
    pub resources: Vec<String>,
    pub distance_sum: u64,
}

/// Exhaustive search: every anchor, every reachable candidate element, the
/// documented orderings applied by sorting.
pub fn brute_force(
    elements: &[EhrElement],
    catalog: &FhirCatalog,
    params: &MatchParameters,
    lexicon: &Lexicon,
    depth_limit: u32,
) -> OracleSet {
    let res = catalog.resources();
    let dist = reference_distances(catalog);
    let mut best: Option<((i64, u64, usize, usize), OracleSet)> = None;

    for anchor in 0..res.len() {
        let mut pairs = BTreeMap::new();
        let mut used = BTreeSet::new();
        for ehr in elements {
            let mut options = Vec::new();
            for (r, def) in res.iter().enumerate() {
                if dist[anchor][r] > depth_limit {
                    continue;
                }
                for (i, e) in def.elements.iter().enumerate() {
                    if !e.candidate {
                        continue;
                    }
                    let score = match_score(&e.name, &ehr.match_name, params, lexicon).value();
                    if score <= 0.0 {
                        continue;
                    }
                    let rule = catalog.type_rule(&e.datatype_id).unwrap();
                    let c = ehr.values.iter().map(|v| compatibility(v, rule)).max().unwrap();
                    if c == Compatibility::Incompatible {
                        continue;
                    }
                    options.push((dist[anchor][r], -score, r, i));
                }
            }
            options.sort_by(|a, b| a.partial_cmp(b).unwrap());
            if let Some(&(_, _, r, i)) = options.first() {
                let e = &res[r].elements[i];
                used.insert(r);
                if let ElementKind::EffectiveLeaf { target, .. } = &e.kind {
                    used.insert(catalog.resource_index(target).unwrap());
                }
                pairs.insert(ehr.match_name.clone(), (res[r].name.clone(), e.path.clone(), e.name.clone()));
            }
        }
        if pairs.is_empty() {
            continue;
        }
        let used: Vec<usize> = used.into_iter().collect();
        let mut sum = 0u64;
        for (k, &a) in used.iter().enumerate() {
            for &b in &used[k + 1..] {
                sum += u64::from(dist[a][b]);
            }
        }
        let key = (-(pairs.len() as i64), sum, used.len(), anchor);
        let set = OracleSet {
            anchor: Some(res[anchor].name.clone()),
            pairs,
            resources: used.iter().map(|&r| res[r].name.clone()).collect(),
            distance_sum: sum,
        };
        if best.as_ref().map_or(true, |(k, _)| key < *k) {
            best = Some((key, set));
        }
    }
    best.map(|(_, s)| s).unwrap_or(OracleSet {
        anchor: None,
        pairs: BTreeMap::new(),
        resources: Vec::new(),
        distance_sum: 0,
    })
}

/// Independent full-matrix Levenshtein distance.
pub fn oracle_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    oracle_distance_with(&a, &b, &mut Vec::new())
}

/// [`oracle_distance`] over pre-split characters with a reusable matrix.
pub fn oracle_distance_with(a: &[char], b: &[char], m: &mut Vec<usize>) -> usize {
    let w = b.len() + 1;
    m.clear();
    m.resize((a.len() + 1) * w, 0);
    for i in 0..=a.len() {
        m[i * w] = i;
    }
    for j in 0..=b.len() {
        m[j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            m[i * w + j] = (m[(i - 1) * w + j] + 1)
                .min(m[i * w + j - 1] + 1)
                .min(m[(i - 1) * w + j - 1] + cost);
        }
    }
    m[a.len() * w + b.len()]
}
