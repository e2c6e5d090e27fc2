use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::diffcore::Tensor;
use crate::error::{Error, Result};

/// Binary-labelled feature matrix with at least one example of each class.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Tensor,
    labels: Vec<u8>,
    n_pos: usize,
    n_neg: usize,
    pub name: String,
}

impl LabeledDataset {
    pub fn new(features: Tensor, labels: Vec<u8>, name: impl Into<String>) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::Shape(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        let mut n_pos = 0;
        for &y in &labels {
            match y {
                0 => {}
                1 => n_pos += 1,
                other => {
                    return Err(Error::Config(format!("label {other} is not 0 or 1")));
                }
            }
        }
        let n_neg = labels.len() - n_pos;
        if n_pos == 0 || n_neg == 0 {
            return Err(Error::Config(format!(
                "dataset needs both classes, got {n_pos} positives and {n_neg} negatives"
            )));
        }
        if !features.is_finite() {
            return Err(Error::Config("dataset contains non-finite features".into()));
        }
        Ok(LabeledDataset {
            features,
            labels,
            n_pos,
            n_neg,
            name: name.into(),
        })
    }

    pub fn features(&self) -> &Tensor {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn n_pos(&self) -> usize {
        self.n_pos
    }

    pub fn n_neg(&self) -> usize {
        self.n_neg
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn positive_fraction(&self) -> f64 {
        self.n_pos as f64 / self.len() as f64
    }

    pub fn positive_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i] == 1).collect()
    }

    pub fn negative_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i] == 0).collect()
    }

    pub fn subset(&self, indices: &[usize], name: impl Into<String>) -> Result<Self> {
        LabeledDataset::new(
            self.features.select_rows(indices),
            indices.iter().map(|&i| self.labels[i]).collect(),
            name,
        )
    }
}

/// Feature matrix with integer class ids, before binarisation.
#[derive(Debug, Clone, PartialEq)]
pub struct MulticlassDataset {
    pub features: Tensor,
    pub classes: Vec<u32>,
    pub name: String,
}

/// Classes `< threshold` become negatives, the rest positives; positives are
/// then subsampled so that they make up `imbalance_ratio` of the result.
/// Negatives are always kept whole.
pub fn binarize_imbalance<R: Rng + ?Sized>(
    multi: &MulticlassDataset,
    pos_class_threshold: u32,
    imbalance_ratio: f64,
    rng: &mut R,
) -> Result<LabeledDataset> {
    if !(imbalance_ratio > 0.0 && imbalance_ratio <= 1.0) {
        return Err(Error::Config(format!(
            "imbalance ratio must lie in (0, 1], got {imbalance_ratio}"
        )));
    }
    if multi.features.rows() != multi.classes.len() {
        return Err(Error::Shape(format!(
            "{} feature rows but {} class ids",
            multi.features.rows(),
            multi.classes.len()
        )));
    }
    let (pos, neg): (Vec<usize>, Vec<usize>) =
        (0..multi.classes.len()).partition(|&i| multi.classes[i] >= pos_class_threshold);
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Config(format!(
            "threshold {pos_class_threshold} leaves {} positive and {} negative examples",
            pos.len(),
            neg.len()
        )));
    }

    // n_pos / (n_pos + n_neg) = r  ⇒  n_pos = n_neg · r / (1 − r)
    let target = if imbalance_ratio >= 1.0 {
        pos.len()
    } else {
        let exact = neg.len() as f64 * imbalance_ratio / (1.0 - imbalance_ratio);
        // guard against 110.99999 style round-off before flooring
        let floored = (exact + 1e-9).floor();
        (floored as usize).min(pos.len())
    };
    if target == 0 {
        return Err(Error::Config(format!(
            "imbalance ratio {imbalance_ratio} keeps no positives out of {}",
            pos.len()
        )));
    }
    let mut keep_pos: Vec<usize> = index::sample(rng, pos.len(), target)
        .into_iter()
        .map(|k| pos[k])
        .collect();
    keep_pos.sort_unstable();

    let mut rows: Vec<usize> = neg
        .iter()
        .copied()
        .chain(keep_pos.iter().copied())
        .collect();
    rows.sort_unstable();
    let labels = rows
        .iter()
        .map(|&i| u8::from(multi.classes[i] >= pos_class_threshold))
        .collect();
    LabeledDataset::new(
        multi.features.select_rows(&rows),
        labels,
        format!("{}-binarized", multi.name),
    )
}

/// Two Gaussian clusters in `d` dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    /// Fraction of positives.
    pub imbalance_ratio: f64,
    /// Distance between the two cluster means.
    pub class_separation: f64,
    /// Standard deviation of the isotropic additive noise.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n: 1000,
            d: 20,
            imbalance_ratio: 0.1,
            class_separation: 2.0,
            noise: 1.0,
            seed: 0,
        }
    }
}

/// Positives are centred at `+sep/2 · u`, negatives at `−sep/2 · u` with
/// `u = (1, …, 1)/√d`; every coordinate gets `N(0, noise²)` noise.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<LabeledDataset> {
    if spec.n < 10 || spec.d < 1 {
        return Err(Error::Config(format!(
            "synthetic data needs n >= 10 and d >= 1, got n={} d={}",
            spec.n, spec.d
        )));
    }
    if !(spec.imbalance_ratio > 0.0 && spec.imbalance_ratio < 1.0) {
        return Err(Error::Config(format!(
            "imbalance ratio must lie in (0, 1), got {}",
            spec.imbalance_ratio
        )));
    }
    if !(spec.noise >= 0.0) || !spec.class_separation.is_finite() {
        return Err(Error::Config(
            "noise must be >= 0 and separation finite".into(),
        ));
    }
    let n_pos = (spec.n as f64 * spec.imbalance_ratio).round() as usize;
    if n_pos == 0 || n_pos == spec.n {
        return Err(Error::Config(format!(
            "imbalance ratio {} yields {n_pos} positives out of {}",
            spec.imbalance_ratio, spec.n
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut labels: Vec<u8> = (0..spec.n).map(|i| u8::from(i < n_pos)).collect();
    labels.shuffle(&mut rng);

    let offset = 0.5 * spec.class_separation / (spec.d as f64).sqrt();
    let mut features = Tensor::zeros(spec.n, spec.d);
    for (r, &y) in labels.iter().enumerate() {
        let center = if y == 1 { offset } else { -offset };
        for v in features.row_mut(r) {
            let z: f64 = rng.sample(StandardNormal);
            *v = center + spec.noise * z;
        }
    }
    LabeledDataset::new(
        features,
        labels,
        format!(
            "synthetic-n{}-d{}-r{}-s{}",
            spec.n, spec.d, spec.imbalance_ratio, spec.seed
        ),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSplits {
    pub train: LabeledDataset,
    pub valid: LabeledDataset,
    pub test: LabeledDataset,
}

/// Stratified train/valid/test split. Each class is shuffled and divided by
/// rounding `fractions.0 · count` and `fractions.1 · count`; the test split
/// takes the remainder. Every split must receive both classes.
pub fn split_stratified(
    ds: &LabeledDataset,
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<DataSplits> {
    let (ft, fv, fs) = fractions;
    if ft <= 0.0 || fv <= 0.0 || fs <= 0.0 || ((ft + fv + fs) - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "split fractions must be positive and sum to 1, got {fractions:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts: [Vec<usize>; 3] = Default::default();
    for mut class in [ds.negative_indices(), ds.positive_indices()] {
        class.shuffle(&mut rng);
        let n = class.len();
        let n_train = ((ft * n as f64).round() as usize).min(n);
        let n_valid = ((fv * n as f64).round() as usize).min(n - n_train);
        parts[0].extend_from_slice(&class[..n_train]);
        parts[1].extend_from_slice(&class[n_train..n_train + n_valid]);
        parts[2].extend_from_slice(&class[n_train + n_valid..]);
    }
    for p in &mut parts {
        p.sort_unstable();
    }
    let name = |s: &str| format!("{}/{s}", ds.name);
    let err = |s: &str, e: Error| {
        Error::Config(format!(
            "{s} split of {} is unusable ({e}); use more data or a larger positive fraction",
            ds.name
        ))
    };
    Ok(DataSplits {
        train: ds
            .subset(&parts[0], name("train"))
            .map_err(|e| err("train", e))?,
        valid: ds
            .subset(&parts[1], name("valid"))
            .map_err(|e| err("valid", e))?,
        test: ds
            .subset(&parts[2], name("test"))
            .map_err(|e| err("test", e))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn multi(classes: Vec<u32>) -> MulticlassDataset {
        let n = classes.len();
        MulticlassDataset {
            features: Tensor::from_vec(n, 1, (0..n).map(|i| i as f64).collect()).unwrap(),
            classes,
            name: "m".into(),
        }
    }

    #[test]
    fn full_ratio_keeps_every_positive() {
        let classes: Vec<u32> = (0..100).map(|i| i % 10).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ds = binarize_imbalance(&multi(classes), 5, 1.0, &mut rng).unwrap();
        assert_eq!(ds.n_pos(), 50);
        assert_eq!(ds.n_neg(), 50);
    }

    #[test]
    fn ratio_solves_for_positive_count() {
        let mut classes = vec![0u32; 1000];
        classes.extend(vec![1u32; 1000]);
        let m = multi(classes);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ds = binarize_imbalance(&m, 1, 0.1, &mut rng).unwrap();
        assert_eq!(ds.n_neg(), 1000);
        assert_eq!(ds.n_pos(), 111);
        let r = ds.positive_fraction();
        assert!((r - 0.1).abs() <= 1.0 / ds.len() as f64);

        let again = binarize_imbalance(&m, 1, 0.1, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(ds, again);
    }

    #[test]
    fn binarize_errors() {
        let m = multi(vec![0, 0, 1, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(binarize_imbalance(&m, 5, 0.5, &mut rng).is_err());
        assert!(binarize_imbalance(&m, 1, 0.0, &mut rng).is_err());
        assert!(binarize_imbalance(&m, 1, 1.5, &mut rng).is_err());
        // 2 negatives at ratio 0.1 keeps floor(0.22) = 0 positives
        assert!(binarize_imbalance(&m, 1, 0.1, &mut rng).is_err());
    }

    #[test]
    fn synthetic_is_seeded_and_validated() {
        let spec = SyntheticSpec {
            n: 200,
            d: 3,
            imbalance_ratio: 0.1,
            ..SyntheticSpec::default()
        };
        let a = generate_synthetic(&spec).unwrap();
        assert_eq!(a, generate_synthetic(&spec).unwrap());
        assert_eq!(a.n_pos(), 20);
        let other = generate_synthetic(&SyntheticSpec { seed: 1, ..spec }).unwrap();
        assert_ne!(a.features(), other.features());
        assert!(generate_synthetic(&SyntheticSpec { n: 5, ..spec }).is_err());
        assert!(generate_synthetic(&SyntheticSpec {
            imbalance_ratio: 0.001,
            ..spec
        })
        .is_err());
    }

    #[test]
    fn stratified_split_sizes() {
        let spec = SyntheticSpec {
            n: 857,
            d: 2,
            imbalance_ratio: 0.02,
            ..SyntheticSpec::default()
        };
        let ds = generate_synthetic(&spec).unwrap();
        assert_eq!(ds.n_pos(), 17);
        let s = split_stratified(&ds, (0.7, 0.15, 0.15), 0).unwrap();
        assert_eq!(s.train.len(), 600);
        assert_eq!(s.train.n_pos(), 12);
        assert_eq!(s.valid.n_pos() + s.test.n_pos(), 5);
        assert_eq!(s.train.len() + s.valid.len() + s.test.len(), 857);
        assert!(split_stratified(&ds, (0.7, 0.2, 0.2), 0).is_err());
    }
}
