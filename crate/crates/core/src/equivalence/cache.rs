use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::EquivalenceSet;

const ENTRIES: &str = "entries";
const STATS: &str = "stats.json";

static STATS_LOCK: Mutex<()> = Mutex::new(());

/// Everything an equivalence set depends on, short of the record values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CacheKey {
    pub names_digest: String,
    pub params_digest: String,
    pub catalog_version: String,
    pub lexicon_digest: String,
    pub settings_digest: String,
}

impl CacheKey {
    pub fn new<'a>(
        names: impl IntoIterator<Item = &'a str>,
        params_digest: &str,
        catalog_version: &str,
        lexicon_digest: &str,
        settings: &str,
    ) -> Self {
        let mut names: Vec<&str> = names.into_iter().collect();
        names.sort_unstable();
        let mut h = Sha256::new();
        for n in names {
            h.update(n.as_bytes());
            h.update([0]);
        }
        CacheKey {
            names_digest: hex::encode(h.finalize()),
            params_digest: params_digest.to_string(),
            catalog_version: catalog_version.to_string(),
            lexicon_digest: lexicon_digest.to_string(),
            settings_digest: hex::encode(Sha256::digest(settings.as_bytes())),
        }
    }

    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for part in [
            &self.names_digest,
            &self.params_digest,
            &self.catalog_version,
            &self.lexicon_digest,
            &self.settings_digest,
        ] {
            h.update(part.as_bytes());
            h.update([0]);
        }
        hex::encode(h.finalize())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheStats {
    pub entries: usize,
    pub hits: u64,
    pub misses: u64,
}

#[derive(Serialize, Deserialize)]
struct Entry {
    key: CacheKey,
    set: EquivalenceSet,
}

#[derive(Default, Serialize, Deserialize)]
struct Counters {
    hits: u64,
    misses: u64,
}

/// Content-addressed directory of equivalence sets. Writes go through a
/// temporary file and a rename, so readers never see partial entries.
/// Storage failures are logged and the cache is bypassed.
#[derive(Debug, Clone)]
pub struct EquivalenceCache {
    dir: PathBuf,
}

fn write_atomic(dir: &Path, target: &Path, bytes: &[u8]) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(target).map_err(|e| e.error)?;
    Ok(())
}

impl EquivalenceCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        EquivalenceCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn entry_path(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(ENTRIES).join(format!("{}.json", key.digest()))
    }

    /// The stored set for exactly this key, counting a hit or a miss.
    pub fn get(&self, key: &CacheKey) -> Option<EquivalenceSet> {
        let found = match fs::read(self.entry_path(key)) {
            Ok(bytes) => match serde_json::from_slice::<Entry>(&bytes) {
                Ok(entry) if entry.key == *key => Some(entry.set),
                Ok(_) => None,
                Err(e) => {
                    log::warn!("ignoring unreadable cache entry: {e}");
                    None
                }
            },
            Err(e) if e.kind() == io::ErrorKind::NotFound => None,
            Err(e) => {
                log::warn!("cache read failed, bypassing: {e}");
                None
            }
        };
        self.count(found.is_some());
        found
    }

    pub fn put(&self, key: &CacheKey, set: &EquivalenceSet) {
        let entry = Entry {
            key: key.clone(),
            set: set.clone(),
        };
        let bytes = serde_json::to_vec(&entry).expect("equivalence set serializes");
        if let Err(e) = write_atomic(&self.dir.join(ENTRIES), &self.entry_path(key), &bytes) {
            log::warn!("cache write failed, continuing without caching: {e}");
        }
    }

    fn read_counters(&self) -> Counters {
        fs::read(self.dir.join(STATS))
            .ok()
            .and_then(|b| serde_json::from_slice(&b).ok())
            .unwrap_or_default()
    }

    fn count(&self, hit: bool) {
        let _guard = STATS_LOCK.lock().unwrap_or_else(|e| e.into_inner());
        let mut c = self.read_counters();
        if hit {
            c.hits += 1;
        } else {
            c.misses += 1;
        }
        let bytes = serde_json::to_vec(&c).expect("counters serialize");
        if let Err(e) = write_atomic(&self.dir, &self.dir.join(STATS), &bytes) {
            log::warn!("could not update cache counters: {e}");
        }
    }

    pub fn stats(&self) -> CacheStats {
        let entries = fs::read_dir(self.dir.join(ENTRIES))
            .map(|rd| {
                rd.filter_map(|e| e.ok())
                    .filter(|e| e.path().extension().is_some_and(|x| x == "json"))
                    .count()
            })
            .unwrap_or(0);
        let c = self.read_counters();
        CacheStats {
            entries,
            hits: c.hits,
            misses: c.misses,
        }
    }

    /// Removes every entry and resets the counters; returns the number of
    /// entries removed.
    pub fn clear(&self) -> io::Result<usize> {
        let _guard = STATS_LOCK.lock().unwrap_or_else(|e| e.into_inner());
        let removed = self.stats().entries;
        match fs::remove_dir_all(self.dir.join(ENTRIES)) {
            Err(e) if e.kind() != io::ErrorKind::NotFound => return Err(e),
            _ => {}
        }
        match fs::remove_file(self.dir.join(STATS)) {
            Err(e) if e.kind() != io::ErrorKind::NotFound => return Err(e),
            _ => {}
        }
        Ok(removed)
    }
}
