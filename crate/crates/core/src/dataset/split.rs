use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dialogue::DialogueRecord;

#[derive(Debug, Error, PartialEq)]
pub enum SplitError {
    #[error("split fractions must be in [0, 1] and sum to 1 (got {train} / {dev} / {test})")]
    BadFractions { train: f64, dev: f64, test: f64 },
    #[error("unseen fraction must be in [0, 1], got {0}")]
    BadUnseen(f64),
    #[error("too few documents for unseen fraction {requested}: achievable maximum is {achievable:.3}")]
    TooFewDocuments { requested: f64, achievable: f64 },
    #[error("dialogue {0}: no grounding document")]
    MissingDocument(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub dev_frac: f64,
    pub test_frac: f64,
    /// Share of dev and test dialogues grounded in documents absent from train.
    pub unseen_frac: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { train_frac: 0.70, dev_frac: 0.15, test_frac: 0.15, unseen_frac: 0.5, seed: 0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<DialogueRecord>,
    pub dev_seen: Vec<DialogueRecord>,
    pub dev_unseen: Vec<DialogueRecord>,
    pub test_seen: Vec<DialogueRecord>,
    pub test_unseen: Vec<DialogueRecord>,
    pub unseen_doc_ids: Vec<String>,
}

/// Dialogue ids per split, written next to the split files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub spec: SplitSpec,
    pub unseen_doc_ids: Vec<String>,
    pub train: Vec<String>,
    pub dev_seen: Vec<String>,
    pub dev_unseen: Vec<String>,
    pub test_seen: Vec<String>,
    pub test_unseen: Vec<String>,
}

impl DatasetSplit {
    pub fn parts(&self) -> [(&'static str, &[DialogueRecord]); 5] {
        [
            ("train", &self.train),
            ("dev_seen", &self.dev_seen),
            ("dev_unseen", &self.dev_unseen),
            ("test_seen", &self.test_seen),
            ("test_unseen", &self.test_unseen),
        ]
    }

    pub fn manifest(&self, spec: &SplitSpec) -> SplitManifest {
        let ids = |v: &[DialogueRecord]| v.iter().map(|d| d.dial_id.clone()).collect();
        SplitManifest {
            spec: spec.clone(),
            unseen_doc_ids: self.unseen_doc_ids.clone(),
            train: ids(&self.train),
            dev_seen: ids(&self.dev_seen),
            dev_unseen: ids(&self.dev_unseen),
            test_seen: ids(&self.test_seen),
            test_unseen: ids(&self.test_unseen),
        }
    }
}

/// Largest-remainder apportionment of `total` over `weights`.
fn apportion(total: usize, weights: &[usize]) -> Vec<usize> {
    let sum: usize = weights.iter().sum();
    if sum == 0 {
        return vec![0; weights.len()];
    }
    let mut out: Vec<usize> = weights.iter().map(|&w| total * w / sum).collect();
    let mut rest: Vec<(usize, usize)> = weights.iter().enumerate().map(|(i, &w)| ((total * w) % sum, i)).collect();
    rest.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let short = total - out.iter().sum::<usize>();
    for &(_, i) in rest.iter().take(short) {
        out[i] += 1;
    }
    out
}

/// Deal items (already shuffled within each domain) into buckets of the
/// given sizes, keeping every bucket's domain mix proportional.
fn deal(mut groups: Vec<Vec<usize>>, sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut buckets = Vec::with_capacity(sizes.len());
    for (j, &size) in sizes.iter().enumerate() {
        let take = if j + 1 == sizes.len() {
            groups.iter().map(Vec::len).collect()
        } else {
            apportion(size, &groups.iter().map(Vec::len).collect::<Vec<_>>())
        };
        let mut bucket = Vec::with_capacity(size);
        for (g, n) in groups.iter_mut().zip(take) {
            bucket.extend(g.drain(..n.min(g.len())));
        }
        buckets.push(bucket);
    }
    buckets
}

fn round(x: f64) -> usize {
    x.round().max(0.0) as usize
}

/// Split dialogues into train / dev / test, where a share of dev and test
/// is grounded in documents that never occur in train. Documents are chosen
/// per domain so each domain keeps at least one seen document.
pub fn split_dataset(dialogues: &[DialogueRecord], spec: &SplitSpec) -> Result<DatasetSplit, SplitError> {
    let fracs = [spec.train_frac, spec.dev_frac, spec.test_frac];
    if fracs.iter().any(|f| !(0.0..=1.0).contains(f)) || (fracs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(SplitError::BadFractions { train: spec.train_frac, dev: spec.dev_frac, test: spec.test_frac });
    }
    if !(0.0..=1.0).contains(&spec.unseen_frac) {
        return Err(SplitError::BadUnseen(spec.unseen_frac));
    }
    if let Some(d) = dialogues.iter().find(|d| d.doc_ids.is_empty()) {
        return Err(SplitError::MissingDocument(d.dial_id.clone()));
    }

    let n = dialogues.len();
    let n_dev = round(n as f64 * spec.dev_frac);
    let n_test = round(n as f64 * spec.test_frac).min(n - n_dev);
    let target_unseen = (round(n_dev as f64 * spec.unseen_frac) + round(n_test as f64 * spec.unseen_frac)).min(n_dev + n_test);

    // domain -> doc -> dialogue indices
    let mut by_domain: BTreeMap<&str, BTreeMap<&str, Vec<usize>>> = BTreeMap::new();
    for (i, d) in dialogues.iter().enumerate() {
        by_domain.entry(d.domain.as_str()).or_default().entry(d.primary_doc()).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut docs_by_domain: Vec<Vec<(&str, Vec<usize>)>> = by_domain
        .values()
        .map(|docs| {
            let mut v: Vec<(&str, Vec<usize>)> = docs.iter().map(|(k, ids)| (*k, ids.clone())).collect();
            v.shuffle(&mut rng);
            v
        })
        .collect();

    let domain_sizes: Vec<usize> = docs_by_domain.iter().map(|docs| docs.iter().map(|d| d.1.len()).sum()).collect();
    let quotas = apportion(target_unseen, &domain_sizes);
    let mut unseen_docs: BTreeSet<&str> = BTreeSet::new();
    let mut unseen_count = 0;
    for (docs, &quota) in docs_by_domain.iter().zip(&quotas) {
        let mut acc = 0;
        for (doc, ids) in docs.iter().skip(1) {
            if acc + ids.len() <= quota {
                acc += ids.len();
                unseen_docs.insert(doc);
            }
        }
        unseen_count += acc;
    }
    // top up across domains when per-domain quotas left a gap
    for docs in &docs_by_domain {
        for (doc, ids) in docs.iter().skip(1) {
            if !unseen_docs.contains(doc) && unseen_count + ids.len() <= target_unseen {
                unseen_count += ids.len();
                unseen_docs.insert(doc);
            }
        }
    }
    if target_unseen > 0 && unseen_count == 0 {
        let capacity = n_dev + n_test;
        let smallest = docs_by_domain
            .iter()
            .flat_map(|docs| docs.iter().skip(1).map(|d| d.1.len()))
            .filter(|&c| c <= capacity)
            .min();
        let achievable = match smallest {
            Some(_) if capacity > 0 => {
                let mut sizes: Vec<usize> = docs_by_domain
                    .iter()
                    .flat_map(|docs| docs.iter().skip(1).map(|d| d.1.len()))
                    .collect();
                sizes.sort_unstable();
                let mut acc = 0;
                for s in sizes {
                    if acc + s <= capacity {
                        acc += s;
                    }
                }
                acc as f64 / capacity as f64
            }
            _ => 0.0,
        };
        return Err(SplitError::TooFewDocuments { requested: spec.unseen_frac, achievable });
    }

    let mut unseen_groups = Vec::new();
    let mut seen_groups = Vec::new();
    for docs in &mut docs_by_domain {
        let mut unseen = Vec::new();
        let mut seen = Vec::new();
        for (doc, ids) in docs.iter() {
            if unseen_docs.contains(doc) {
                unseen.extend(ids);
            } else {
                seen.extend(ids);
            }
        }
        unseen.shuffle(&mut rng);
        seen.shuffle(&mut rng);
        unseen_groups.push(unseen);
        seen_groups.push(seen);
    }

    let dev_unseen_n = if n_dev + n_test == 0 { 0 } else { round(unseen_count as f64 * n_dev as f64 / (n_dev + n_test) as f64) };
    let unseen = deal(unseen_groups, &[dev_unseen_n, unseen_count - dev_unseen_n]);
    let dev_seen_n = n_dev - unseen[0].len().min(n_dev);
    let test_seen_n = n_test - unseen[1].len().min(n_test);
    let train_n = n - n_dev - n_test;
    let seen = deal(seen_groups, &[dev_seen_n, test_seen_n, train_n]);

    let pick = |idx: &[usize]| -> Vec<DialogueRecord> {
        let mut v: Vec<usize> = idx.to_vec();
        v.sort_unstable();
        v.into_iter().map(|i| dialogues[i].clone()).collect()
    };
    Ok(DatasetSplit {
        train: pick(&seen[2]),
        dev_seen: pick(&seen[0]),
        dev_unseen: pick(&unseen[0]),
        test_seen: pick(&seen[1]),
        test_unseen: pick(&unseen[1]),
        unseen_doc_ids: unseen_docs.into_iter().map(String::from).collect(),
    })
}
