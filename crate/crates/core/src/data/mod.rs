//! Datasets, split management, synthetic generators and CSV ingestion.

mod csv_loader;
mod schema;
mod synth;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::nn::Matrix;
use crate::{Error, Result};

pub use csv_loader::load_csv;
pub use schema::{ColumnRole, LabelMapping, TabularSchema};
pub use synth::{
    synth_biobjective_regression, synth_fairness, synth_multitask_classification,
    FairnessSynth, MultitaskSynth, RegressionSynth,
};

/// One supervised target column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TargetColumn {
    Classes { labels: Vec<usize>, num_classes: usize },
    Real(Vec<f64>),
}

impl TargetColumn {
    pub fn len(&self) -> usize {
        match self {
            TargetColumn::Classes { labels, .. } => labels.len(),
            TargetColumn::Real(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn select(&self, rows: &[usize]) -> TargetColumn {
        match self {
            TargetColumn::Classes {
                labels,
                num_classes,
            } => TargetColumn::Classes {
                labels: rows.iter().map(|&i| labels[i]).collect(),
                num_classes: *num_classes,
            },
            TargetColumn::Real(v) => TargetColumn::Real(rows.iter().map(|&i| v[i]).collect()),
        }
    }
}

/// Rows gathered from a dataset: the unit losses are evaluated on.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub features: Matrix,
    pub targets: Vec<TargetColumn>,
    pub sensitive: Option<Vec<u8>>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// Disjoint, exhaustive row partition.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Splits {
    pub fn get(&self, split: Split) -> &[usize] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    /// Seeded shuffle of `0..n`, cut at the cumulative fractions.
    pub fn random(n: usize, fractions: [f64; 3], seed: u64) -> Result<Splits> {
        check_fractions(fractions)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_train = ((fractions[0] * n as f64).round() as usize).min(n);
        let n_val = ((fractions[1] * n as f64).round() as usize).min(n - n_train);
        let test = order.split_off(n_train + n_val);
        let val = order.split_off(n_train);
        Ok(Splits {
            train: order,
            val,
            test,
        })
    }
}

fn check_fractions(fractions: [f64; 3]) -> Result<()> {
    if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
        return Err(Error::Argument(format!(
            "split fractions {fractions:?} must lie in [0, 1]"
        )));
    }
    let sum: f64 = fractions.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Argument(format!(
            "split fractions {fractions:?} sum to {sum}, not 1"
        )));
    }
    Ok(())
}

/// Features, per-objective targets, optional sensitive attribute and splits.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    targets: Vec<TargetColumn>,
    sensitive: Option<Vec<u8>>,
    splits: Splits,
}

impl Dataset {
    /// All rows start in the training split.
    pub fn new(
        features: Matrix,
        targets: Vec<TargetColumn>,
        sensitive: Option<Vec<u8>>,
    ) -> Result<Self> {
        let n = features.rows();
        if let Some(t) = targets.iter().find(|t| t.len() != n) {
            return Err(Error::Data(format!(
                "target column has {} rows, features have {n}",
                t.len()
            )));
        }
        for t in &targets {
            if let TargetColumn::Classes {
                labels,
                num_classes,
            } = t
            {
                if let Some(bad) = labels.iter().find(|&&l| l >= *num_classes) {
                    return Err(Error::Data(format!(
                        "label {bad} outside [0, {num_classes})"
                    )));
                }
            }
        }
        if let Some(s) = &sensitive {
            if s.len() != n {
                return Err(Error::Data(format!(
                    "sensitive column has {} rows, features have {n}",
                    s.len()
                )));
            }
            if s.iter().any(|&a| a > 1) {
                return Err(Error::Data("sensitive attribute must be 0 or 1".into()));
            }
        }
        Ok(Dataset {
            features,
            targets,
            sensitive,
            splits: Splits {
                train: (0..n).collect(),
                ..Splits::default()
            },
        })
    }

    pub fn with_splits(mut self, splits: Splits) -> Result<Self> {
        let n = self.len();
        let mut seen = vec![false; n];
        for &i in splits.train.iter().chain(&splits.val).chain(&splits.test) {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(Error::Data(format!(
                    "split index {i} is out of range or repeated"
                )));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Data("splits do not cover every row".into()));
        }
        self.splits = splits;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn targets(&self) -> &[TargetColumn] {
        &self.targets
    }

    pub fn sensitive(&self) -> Option<&[u8]> {
        self.sensitive.as_deref()
    }

    pub fn splits(&self) -> &Splits {
        &self.splits
    }

    pub fn batch(&self, rows: &[usize]) -> Batch {
        Batch {
            features: self.features.select_rows(rows),
            targets: self.targets.iter().map(|t| t.select(rows)).collect(),
            sensitive: self
                .sensitive
                .as_ref()
                .map(|s| rows.iter().map(|&i| s[i]).collect()),
        }
    }

    pub fn split_batch(&self, split: Split) -> Batch {
        self.batch(self.splits.get(split))
    }
}

/// Seeded shuffle-then-partition into train/val/test.
pub fn split(dataset: Dataset, fractions: [f64; 3], seed: u64) -> Result<Dataset> {
    let splits = Splits::random(dataset.len(), fractions, seed)?;
    dataset.with_splits(splits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize) -> Dataset {
        let features = Matrix::from_vec(n, 1, (0..n).map(|i| i as f64).collect()).unwrap();
        Dataset::new(
            features,
            vec![TargetColumn::Real(vec![0.0; n])],
            None,
        )
        .unwrap()
    }

    #[test]
    fn seventy_ten_twenty() {
        let d = split(toy(100), [0.7, 0.1, 0.2], 3).unwrap();
        assert_eq!(d.splits().train.len(), 70);
        assert_eq!(d.splits().val.len(), 10);
        assert_eq!(d.splits().test.len(), 20);
    }

    #[test]
    fn all_train() {
        let d = split(toy(17), [1.0, 0.0, 0.0], 3).unwrap();
        assert_eq!(d.splits().train.len(), 17);
        assert!(d.splits().val.is_empty() && d.splits().test.is_empty());
    }

    #[test]
    fn same_seed_same_partition() {
        let a = split(toy(50), [0.7, 0.1, 0.2], 11).unwrap();
        let b = split(toy(50), [0.7, 0.1, 0.2], 11).unwrap();
        let c = split(toy(50), [0.7, 0.1, 0.2], 12).unwrap();
        assert_eq!(a.splits(), b.splits());
        assert_ne!(a.splits(), c.splits());
    }

    #[test]
    fn bad_fractions() {
        assert!(split(toy(10), [0.5, 0.1, 0.1], 0).is_err());
        assert!(split(toy(10), [1.2, -0.1, -0.1], 0).is_err());
    }

    #[test]
    fn inconsistent_rows_rejected() {
        let f = Matrix::zeros(3, 1);
        assert!(Dataset::new(f.clone(), vec![TargetColumn::Real(vec![0.0; 2])], None).is_err());
        assert!(Dataset::new(f.clone(), vec![], Some(vec![0, 1])).is_err());
        assert!(Dataset::new(
            f,
            vec![TargetColumn::Classes {
                labels: vec![0, 1, 2],
                num_classes: 2
            }],
            None
        )
        .is_err());
    }

    #[test]
    fn batch_gathers_rows() {
        let f = Matrix::from_rows(&[[1.0], [2.0], [3.0]]).unwrap();
        let d = Dataset::new(
            f,
            vec![TargetColumn::Classes {
                labels: vec![0, 1, 1],
                num_classes: 2,
            }],
            Some(vec![1, 0, 1]),
        )
        .unwrap();
        let b = d.batch(&[2, 0]);
        assert_eq!(b.features.as_slice(), &[3.0, 1.0]);
        assert_eq!(
            b.targets[0],
            TargetColumn::Classes {
                labels: vec![1, 0],
                num_classes: 2
            }
        );
        assert_eq!(b.sensitive, Some(vec![1, 1]));
    }

    proptest::proptest! {
        #[test]
        fn splits_are_disjoint_and_exhaustive(
            n in 0usize..400,
            a in 0.0f64..1.0,
            b in 0.0f64..1.0,
            seed in 0u64..1000,
        ) {
            let train = a;
            let val = (1.0 - a) * b;
            let test = 1.0 - train - val;
            let d = split(toy(n), [train, val, test], seed).unwrap();
            let s = d.splits();
            let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
            all.sort_unstable();
            proptest::prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
    }
}
