#![allow(dead_code)]

use cof_rank::features::{FeatureMask, FeatureVector, Instance, FEATURE_COUNT};
use cof_rank::letor_io::{Dataset, DatasetHeader};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random binary-labelled queries; feature `signal` (1-based, or 0 for none)
/// is shifted upward for relevant documents.
pub fn random_dataset(queries: u32, docs: usize, signal: usize, seed: u64, mask: FeatureMask) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut instances = Vec::new();
    for q in 0..queries {
        for d in 0..docs {
            let label = u8::from(d == 0 || rng.gen_bool(0.35));
            let label = if d == 1 { 0 } else { label };
            let mut v = [0.0; FEATURE_COUNT];
            for x in v.iter_mut() {
                *x = rng.gen_range(-1.0..1.0);
            }
            if signal > 0 {
                v[signal - 1] += f64::from(label) * 0.8;
            }
            instances.push(Instance {
                query_id: q + 1,
                doc_id: format!("q{q}d{d:02}"),
                label,
                features: FeatureVector(v),
            });
        }
    }
    Dataset::from_instances(instances, DatasetHeader::with_mask(mask))
}

/// Average precision written directly from its definition.
pub fn ap_oracle(labels: &[u8]) -> Option<f64> {
    let rel = labels.iter().filter(|&&y| y > 0).count();
    if rel == 0 {
        return None;
    }
    let mut sum = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        if y > 0 {
            let hits = labels[..=i].iter().filter(|&&z| z > 0).count();
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Some(sum / rel as f64)
}
