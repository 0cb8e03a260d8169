//! Word embedding tables in GloVe text format, with deterministic
//! out-of-vocabulary handling so checkpoints reload reproducibly.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::seeding::derive_seed;

use super::CorpusError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OovPolicy {
    /// Unknown tokens get a uniform(-0.1, 0.1) vector seeded by (seed, token).
    RandomInit { seed: u64 },
    Zero,
}

#[derive(Clone, Debug)]
pub struct EmbeddingTable {
    dim: usize,
    entries: BTreeMap<String, Vec<f64>>,
    oov_policy: OovPolicy,
}

impl EmbeddingTable {
    /// Parses a GloVe-style text file: one `token v1 ... vdim` per line.
    pub fn load(path: &Path, dim: usize, seed: u64) -> Result<Self, CorpusError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CorpusError::Io { path: path.display().to_string(), source: e })?;
        let mut entries = BTreeMap::new();
        for (line_no, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let token = fields.next().expect("non-empty line has a first field").to_string();
            let values: Result<Vec<f64>, _> = fields.map(str::parse::<f64>).collect();
            let values = values.map_err(|_| CorpusError::DimMismatch {
                file: path.display().to_string(),
                line: line_no + 1,
                expected: dim,
                got: 0,
            })?;
            if values.len() != dim {
                return Err(CorpusError::DimMismatch {
                    file: path.display().to_string(),
                    line: line_no + 1,
                    expected: dim,
                    got: values.len(),
                });
            }
            entries.insert(token, values);
        }
        Ok(EmbeddingTable { dim, entries, oov_policy: OovPolicy::RandomInit { seed } })
    }

    /// Empty table: every lookup goes through the OOV policy. Used when no
    /// pre-trained vectors are supplied.
    pub fn random(dim: usize, seed: u64) -> Self {
        EmbeddingTable { dim, entries: BTreeMap::new(), oov_policy: OovPolicy::RandomInit { seed } }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.entries.contains_key(token)
    }

    /// File vector if present, otherwise the policy's deterministic OOV
    /// vector — the same vector on every call.
    pub fn lookup(&self, token: &str) -> Vec<f64> {
        if let Some(v) = self.entries.get(token) {
            return v.clone();
        }
        match self.oov_policy {
            OovPolicy::Zero => vec![0.0; self.dim],
            OovPolicy::RandomInit { seed } => {
                let s = derive_seed(&[b"oov-embedding", &seed.to_le_bytes(), token.as_bytes()]);
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                (0..self.dim).map(|_| rng.gen_range(-0.1..0.1)).collect()
            }
        }
    }
}
