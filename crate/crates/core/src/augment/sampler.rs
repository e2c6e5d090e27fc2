use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dataset::LabeledDataset;
use crate::error::{Error, Result};

pub const DEFAULT_BATCH_SIZE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub batch_size: usize,
    /// Target share of positive slots per batch.
    pub pos_fraction: f64,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            batch_size: DEFAULT_BATCH_SIZE,
            pos_fraction: 0.5,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(Error::Config(format!(
                "batch size must be at least 2 to hold both classes, got {}",
                self.batch_size
            )));
        }
        if !(self.pos_fraction > 0.0 && self.pos_fraction < 1.0) {
            return Err(Error::Config(format!(
                "pos_fraction must lie in (0, 1), got {}",
                self.pos_fraction
            )));
        }
        Ok(())
    }

    /// `round(batch_size · pos_fraction)`, kept within `[1, batch_size − 1]`
    /// so both classes always get a slot.
    pub fn positive_slots(&self) -> usize {
        let raw = (self.batch_size as f64 * self.pos_fraction).round() as usize;
        raw.clamp(1, self.batch_size - 1)
    }
}

fn draw<R: Rng + ?Sized>(pool: &[usize], k: usize, rng: &mut R, out: &mut Vec<usize>) {
    if pool.len() >= k {
        out.extend(
            index::sample(rng, pool.len(), k)
                .into_iter()
                .map(|i| pool[i]),
        );
    } else {
        out.extend((0..k).map(|_| pool[rng.random_range(0..pool.len())]));
    }
}

/// One shuffled batch of dataset indices with a fixed number of positive slots.
/// Each class is drawn without replacement when it has enough members and
/// with replacement otherwise.
pub fn dual_sample<R: Rng + ?Sized>(
    ds: &LabeledDataset,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<Vec<usize>> {
    cfg.validate()?;
    let pos = ds.positive_indices();
    let neg = ds.negative_indices();
    let mut batch = Vec::with_capacity(cfg.batch_size);
    sample_into(&pos, &neg, cfg, rng, &mut batch);
    Ok(batch)
}

fn sample_into<R: Rng + ?Sized>(
    pos: &[usize],
    neg: &[usize],
    cfg: &SamplerConfig,
    rng: &mut R,
    out: &mut Vec<usize>,
) {
    let k = cfg.positive_slots();
    draw(pos, k, rng, out);
    draw(neg, cfg.batch_size - k, rng, out);
    out.shuffle(rng);
}

/// Reusable sampler that caches the class index lists of one dataset.
#[derive(Debug, Clone)]
pub struct DualSampler {
    pos: Vec<usize>,
    neg: Vec<usize>,
    cfg: SamplerConfig,
}

impl DualSampler {
    pub fn new(ds: &LabeledDataset, cfg: SamplerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(DualSampler {
            pos: ds.positive_indices(),
            neg: ds.negative_indices(),
            cfg,
        })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.cfg
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let mut batch = Vec::with_capacity(self.cfg.batch_size);
        sample_into(&self.pos, &self.neg, &self.cfg, rng, &mut batch);
        batch
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffcore::Tensor;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ds(n_pos: usize, n_neg: usize) -> LabeledDataset {
        let n = n_pos + n_neg;
        let labels = (0..n).map(|i| u8::from(i < n_pos)).collect();
        LabeledDataset::new(Tensor::zeros(n, 1), labels, "t").unwrap()
    }

    #[test]
    fn half_and_half() {
        let d = ds(100, 300);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let b = dual_sample(&d, &SamplerConfig::default(), &mut rng).unwrap();
        assert_eq!(b.len(), 64);
        assert_eq!(b.iter().filter(|&&i| d.labels()[i] == 1).count(), 32);
        // without replacement when the pool is large enough
        let mut sorted = b.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 64);
    }

    #[test]
    fn scarce_positives_are_repeated() {
        let d = ds(3, 500);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = dual_sample(&d, &SamplerConfig::default(), &mut rng).unwrap();
        let pos: Vec<_> = b.iter().filter(|&&i| d.labels()[i] == 1).collect();
        assert_eq!(pos.len(), 32);
        assert!(pos.iter().all(|&&i| i < 3));
    }

    #[test]
    fn slots_never_starve_a_class() {
        let tiny = SamplerConfig {
            batch_size: 8,
            pos_fraction: 0.01,
            seed: 0,
        };
        assert_eq!(tiny.positive_slots(), 1);
        let big = SamplerConfig {
            pos_fraction: 0.999,
            ..tiny
        };
        assert_eq!(big.positive_slots(), 7);
        assert!(SamplerConfig {
            batch_size: 1,
            ..tiny
        }
        .validate()
        .is_err());
        assert!(SamplerConfig {
            pos_fraction: 1.0,
            ..tiny
        }
        .validate()
        .is_err());
    }

    #[test]
    fn sampler_matches_free_function() {
        let d = ds(10, 90);
        let cfg = SamplerConfig::default();
        let s = DualSampler::new(&d, cfg).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(s.sample(&mut a), dual_sample(&d, &cfg, &mut b).unwrap());
    }
}
