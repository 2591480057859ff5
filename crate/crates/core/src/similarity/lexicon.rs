use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::normalize_token;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("lexicon line {line}: expected `word<TAB>relation<TAB>target`")]
    Columns { line: usize },
    #[error("lexicon line {line}: unknown relation `{relation}`")]
    Relation { line: usize, relation: String },
    #[error("reading lexicon {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Source of word variants for the morphological and semantic metrics.
///
/// Lookups take normalized words; an unknown word yields an empty slice.
pub trait LexicalResource: Send + Sync {
    /// Canonical forms associated with `word`.
    fn lemmas(&self, word: &str) -> &[String];
    /// Word forms derived from `lemma`, including the lemma itself.
    fn lexemes(&self, lemma: &str) -> &[String];
    /// Words sharing a meaning with `word`.
    fn synonyms(&self, word: &str) -> &[String];
}

/// Offline lexicon read from a tab-separated `word, relation, target` file.
///
/// Relations:
/// - `lemma`: `target` is a canonical form of `word`;
/// - `lexeme`: `target` is a form derived from the lemma `word`;
/// - `synonym`: symmetric synonymy.
///
/// Every word that belongs to a lemma's lexeme set has that lemma among its
/// own lemmas, so `postal` reaches `post` and vice versa.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    lemmas: BTreeMap<String, Vec<String>>,
    lexemes: BTreeMap<String, Vec<String>>,
    synonyms: BTreeMap<String, Vec<String>>,
    digest: String,
}

const BUNDLED: &str = include_str!("../../data/lexicon.tsv");

type Relation = BTreeMap<String, BTreeSet<String>>;

impl Lexicon {
    /// The lexicon shipped with the crate.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED).expect("bundled lexicon is well-formed")
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let text = fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut lemmas = Relation::new();
        let mut lexemes = Relation::new();
        let mut synonyms = Relation::new();
        let mut rows = BTreeSet::new();

        for (index, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if cols.len() != 3 || cols.iter().any(|c| c.is_empty()) {
                return Err(LexiconError::Columns { line: index + 1 });
            }
            let word = normalize_token(cols[0]);
            let target = normalize_token(cols[2]);
            match cols[1] {
                "lemma" => {
                    link_lemma(&mut lemmas, &mut lexemes, &target, &word);
                }
                "lexeme" => {
                    link_lemma(&mut lemmas, &mut lexemes, &word, &word);
                    link_lemma(&mut lemmas, &mut lexemes, &word, &target);
                }
                "synonym" => {
                    insert(&mut synonyms, &word, &target);
                    insert(&mut synonyms, &target, &word);
                }
                other => {
                    return Err(LexiconError::Relation {
                        line: index + 1,
                        relation: other.to_string(),
                    })
                }
            }
            rows.insert(format!("{word}\t{}\t{target}", cols[1]));
        }

        let mut hasher = Sha256::new();
        for row in &rows {
            hasher.update(row.as_bytes());
            hasher.update(b"\n");
        }

        Ok(Lexicon {
            lemmas: flatten(lemmas),
            lexemes: flatten(lexemes),
            synonyms: flatten(synonyms),
            digest: hex::encode(hasher.finalize()),
        })
    }

    /// Digest of the normalized relation rows, independent of comments and
    /// row order.
    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn is_empty(&self) -> bool {
        self.lemmas.is_empty() && self.synonyms.is_empty()
    }
}

fn link_lemma(lemmas: &mut Relation, lexemes: &mut Relation, lemma: &str, form: &str) {
    insert(lemmas, form, lemma);
    insert(lemmas, lemma, lemma);
    insert(lexemes, lemma, lemma);
    insert(lexemes, lemma, form);
}

fn insert(relation: &mut Relation, key: &str, value: &str) {
    relation
        .entry(key.to_string())
        .or_default()
        .insert(value.to_string());
}

fn flatten(relation: Relation) -> BTreeMap<String, Vec<String>> {
    relation
        .into_iter()
        .map(|(k, v)| (k, v.into_iter().collect()))
        .collect()
}

fn lookup<'a>(map: &'a BTreeMap<String, Vec<String>>, key: &str) -> &'a [String] {
    map.get(key).map(Vec::as_slice).unwrap_or(&[])
}

impl LexicalResource for Lexicon {
    fn lemmas(&self, word: &str) -> &[String] {
        lookup(&self.lemmas, &normalize_token(word))
    }

    fn lexemes(&self, lemma: &str) -> &[String] {
        lookup(&self.lexemes, &normalize_token(lemma))
    }

    fn synonyms(&self, word: &str) -> &[String] {
        lookup(&self.synonyms, &normalize_token(word))
    }
}
