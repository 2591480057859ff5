//! End-to-end conversion of one record: ingest, equivalence search through
//! the cache, mapping and serialization. Also runs parameter sweeps.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::catalog::FhirCatalog;
use crate::config::Config;
use crate::equivalence::{CacheKey, EquivalenceCache, EquivalenceSet, Matcher};
use crate::ingest::{extract_elements, parse_ehr, resolve_coded_names, EhrElement, EhrNode, Terminology, UnresolvedCode};
use crate::mapper::{map_record, serialize_bundle, FhirBundle, MappingReport, OutputFormat, Provenance};
use crate::similarity::{Lexicon, MatchParameters};
use crate::typing::Compatibility;

/// Read-only matching context shared by every conversion.
#[derive(Debug)]
pub struct Pipeline {
    catalog: FhirCatalog,
    lexicon: Lexicon,
    depth_limit: u32,
    cache: Option<EquivalenceCache>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MatchedElement {
    pub element: String,
    pub ehr_path: String,
    pub fhir_resource: String,
    pub fhir_element: String,
    pub score: f64,
    pub compatibility: Compatibility,
    pub depth: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct UnmatchedElement {
    pub element: String,
    pub ehr_path: String,
}

/// Machine-readable account of one conversion. Contains nothing that
/// depends on whether the equivalence set came from the cache.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConversionReport {
    pub provenance: Provenance,
    pub anchor_resource: Option<String>,
    pub elements: usize,
    pub matched_fraction: f64,
    pub resource_count: usize,
    pub mean_distance: f64,
    pub resources_used: Vec<String>,
    pub instances: usize,
    pub matched: Vec<MatchedElement>,
    pub unmatched: Vec<UnmatchedElement>,
    pub unresolved_names: Vec<UnresolvedCode>,
    #[serde(flatten)]
    pub mapping: MappingReport,
}

impl ConversionReport {
    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("report serializes");
        out.push(b'\n');
        out
    }
}

#[derive(Debug, Clone)]
pub struct Conversion {
    pub bundle: FhirBundle,
    pub report: ConversionReport,
    pub equivalence: EquivalenceSet,
    pub cache_hit: bool,
}

impl Conversion {
    pub fn serialize(&self, format: OutputFormat) -> Vec<u8> {
        serialize_bundle(&self.bundle, format)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SweepEntry {
    #[serde(default)]
    pub label: String,
    pub parameters: MatchParameters,
}

/// A list of parameter configurations to compare on one record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SweepFile {
    pub configurations: Vec<SweepEntry>,
}

impl SweepFile {
    pub fn load(path: &Path) -> crate::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
        SweepFile::parse(&text)
    }

    pub fn parse(text: &str) -> crate::Result<Self> {
        let file: SweepFile = serde_json::from_str(text).map_err(crate::config::ConfigError::from)?;
        for entry in &file.configurations {
            entry.parameters.validate()?;
        }
        Ok(file)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepRow {
    pub label: String,
    pub omega_t: f64,
    pub omega_m: f64,
    pub omega_s: f64,
    pub alpha: bool,
    pub beta: bool,
    pub gamma: bool,
    pub delta: bool,
    pub epsilon: bool,
    pub matched: usize,
    pub elements: usize,
    pub matched_fraction: f64,
    pub resource_count: usize,
    pub mean_distance: f64,
    pub anchor_resource: Option<String>,
}

/// Renders sweep rows as a fixed-width table, one line per configuration.
pub fn format_sweep_table(rows: &[SweepRow]) -> String {
    let flag = |b: bool| if b { "T" } else { "F" };
    let mut out = format!(
        "{:<12} {:>5} {:>5} {:>5}  {} {} {} {} {}  {:>9} {:>9} {:>8}\n",
        "label", "w_t", "w_m", "w_s", "a", "b", "g", "d", "e", "matched", "resources", "distance"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<12} {:>5.2} {:>5.2} {:>5.2}  {} {} {} {} {}  {:>9.2} {:>9} {:>8.2}",
            r.label,
            r.omega_t,
            r.omega_m,
            r.omega_s,
            flag(r.alpha),
            flag(r.beta),
            flag(r.gamma),
            flag(r.delta),
            flag(r.epsilon),
            r.matched_fraction,
            r.resource_count,
            r.mean_distance
        );
    }
    out
}

impl Pipeline {
    pub fn new(catalog: FhirCatalog, lexicon: Lexicon, depth_limit: u32) -> Self {
        Pipeline {
            catalog,
            lexicon,
            depth_limit,
            cache: None,
        }
    }

    /// Bundled catalog and lexicon, default depth limit, no cache.
    pub fn bundled() -> Self {
        Pipeline::new(
            FhirCatalog::bundled(),
            Lexicon::bundled(),
            crate::equivalence::DEFAULT_DEPTH_LIMIT,
        )
    }

    /// Catalog, lexicon and search settings from `config`; no cache.
    pub fn from_config(config: &Config) -> crate::Result<Self> {
        let catalog = match &config.catalog {
            Some(path) => FhirCatalog::load(path)?,
            None => FhirCatalog::from_json(FhirCatalog::bundled_json())?,
        }
        .prepared(&config.general_data_elements);
        let lexicon = match &config.lexicon {
            Some(path) => Lexicon::load(path)?,
            None => Lexicon::bundled(),
        };
        Ok(Pipeline::new(catalog, lexicon, config.depth_limit))
    }

    pub fn with_cache(mut self, cache: EquivalenceCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn catalog(&self) -> &FhirCatalog {
        &self.catalog
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn cache(&self) -> Option<&EquivalenceCache> {
        self.cache.as_ref()
    }

    /// The record's element set after coded-name resolution.
    pub fn elements(&self, doc: &EhrNode, terminology: &Terminology) -> (Vec<EhrElement>, Vec<UnresolvedCode>) {
        resolve_coded_names(extract_elements(doc), &terminology.resolver, &terminology.patterns)
    }

    pub fn cache_key(&self, elements: &[EhrElement], params: &MatchParameters) -> CacheKey {
        let general = self.catalog.general_data().unwrap_or_default().join(",");
        CacheKey::new(
            elements.iter().map(|e| e.match_name.as_str()),
            &params.digest(),
            self.catalog.version(),
            self.lexicon.digest(),
            &format!("depthLimit={};generalData={general}", self.depth_limit),
        )
    }

    /// The equivalence set for `elements`, from the cache when possible.
    /// The flag tells whether it was a cache hit.
    pub fn equivalence(&self, elements: &[EhrElement], params: &MatchParameters) -> (EquivalenceSet, bool) {
        let key = self.cache.as_ref().map(|_| self.cache_key(elements, params));
        if let (Some(cache), Some(key)) = (&self.cache, &key) {
            if let Some(mut set) = cache.get(key) {
                set.rebind(elements);
                return (set, true);
            }
        }
        let set = Matcher::new(&self.catalog, params, &self.lexicon, self.depth_limit).equivalence_set(elements);
        if let (Some(cache), Some(key)) = (&self.cache, &key) {
            cache.put(key, &set);
        }
        (set, false)
    }

    pub fn convert(
        &self,
        input: &[u8],
        params: &MatchParameters,
        terminology: &Terminology,
    ) -> crate::Result<Conversion> {
        params.validate()?;
        let doc = parse_ehr(input)?;
        let (elements, unresolved_names) = self.elements(&doc, terminology);
        let (set, cache_hit) = self.equivalence(&elements, params);
        let provenance = Provenance::new(input, self.catalog.version(), &params.digest());
        let mapping = map_record(&doc, &set, &self.catalog, terminology, provenance.clone())?;

        let ehr_path = |e: &EhrElement| {
            let mut parts = e.original_path.clone();
            parts.push(e.leaf_name.clone());
            parts.join("/")
        };
        let matched = set
            .pairs
            .iter()
            .map(|p| MatchedElement {
                element: p.ehr.match_name.clone(),
                ehr_path: ehr_path(&p.ehr),
                fhir_resource: p.fhir.owning_resource.clone(),
                fhir_element: p.fhir.name.clone(),
                score: p.score.value(),
                compatibility: p.compatibility,
                depth: p.depth,
            })
            .collect();
        let unmatched = elements
            .iter()
            .filter(|e| set.pair_for(&e.match_name).is_none())
            .map(|e| UnmatchedElement {
                element: e.match_name.clone(),
                ehr_path: ehr_path(e),
            })
            .collect();

        let report = ConversionReport {
            provenance,
            anchor_resource: set.anchor_resource.clone(),
            elements: elements.len(),
            matched_fraction: set.matched_fraction,
            resource_count: set.resource_count,
            mean_distance: set.mean_distance,
            resources_used: set.resources_used.clone(),
            instances: mapping.bundle.instances.len(),
            matched,
            unmatched,
            unresolved_names,
            mapping: mapping.report,
        };
        Ok(Conversion {
            bundle: mapping.bundle,
            report,
            equivalence: set,
            cache_hit,
        })
    }

    /// One row per configuration, in the given order. Never touches the
    /// cache.
    pub fn sweep(
        &self,
        input: &[u8],
        configurations: &[SweepEntry],
        terminology: &Terminology,
    ) -> crate::Result<Vec<SweepRow>> {
        let doc = parse_ehr(input)?;
        let (elements, _) = self.elements(&doc, terminology);
        configurations
            .iter()
            .map(|entry| {
                let p = &entry.parameters;
                p.validate()?;
                let set = Matcher::new(&self.catalog, p, &self.lexicon, self.depth_limit).equivalence_set(&elements);
                Ok(SweepRow {
                    label: entry.label.clone(),
                    omega_t: p.omega_t,
                    omega_m: p.omega_m,
                    omega_s: p.omega_s,
                    alpha: p.alpha,
                    beta: p.beta,
                    gamma: p.gamma,
                    delta: p.delta,
                    epsilon: p.epsilon,
                    matched: set.pairs.len(),
                    elements: elements.len(),
                    matched_fraction: set.matched_fraction,
                    resource_count: set.resource_count,
                    mean_distance: set.mean_distance,
                    anchor_resource: set.anchor_resource,
                })
            })
            .collect()
    }
}
