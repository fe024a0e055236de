use serde::{Deserialize, Serialize};

use crate::data::{EmotionLabel, NUM_CLASSES};
use crate::error::{Error, Result};

/// Binary confusion counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryTally {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl BinaryTally {
    pub fn new(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        Self { tp, tn, fp, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// One-vs-rest tally for `class`, counted directly from the label sequences.
    pub fn one_vs_rest(preds: &[EmotionLabel], truth: &[EmotionLabel], class: EmotionLabel) -> Result<Self> {
        check_lengths(preds, truth)?;
        let mut t = Self::default();
        for (&p, &y) in preds.iter().zip(truth) {
            match (y == class, p == class) {
                (true, true) => t.tp += 1,
                (false, false) => t.tn += 1,
                (false, true) => t.fp += 1,
                (true, false) => t.fn_ += 1,
            }
        }
        Ok(t)
    }
}

/// `(TP + TN) / (TP + TN + FP + FN)`.
pub fn accuracy(tally: &BinaryTally) -> Result<f64> {
    let total = tally.total();
    if total == 0 {
        return Err(Error::UndefinedMetric("accuracy of an empty tally".into()));
    }
    Ok((tally.tp + tally.tn) as f64 / total as f64)
}

fn check_lengths(preds: &[EmotionLabel], truth: &[EmotionLabel]) -> Result<()> {
    if preds.len() != truth.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} labels",
            preds.len(),
            truth.len()
        )));
    }
    Ok(())
}

/// Fraction of positions where the prediction equals the label.
pub fn multiclass_accuracy(preds: &[EmotionLabel], truth: &[EmotionLabel]) -> Result<f64> {
    check_lengths(preds, truth)?;
    if truth.is_empty() {
        return Err(Error::UndefinedMetric("accuracy of an empty sequence".into()));
    }
    let correct = preds.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(correct as f64 / truth.len() as f64)
}

/// Rows are true classes, columns predicted classes.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; NUM_CLASSES]; NUM_CLASSES],
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..NUM_CLASSES).map(|i| self.counts[i][i]).sum()
    }

    /// `trace / total`; undefined for an empty matrix.
    pub fn accuracy(&self) -> Result<f64> {
        let total = self.total();
        if total == 0 {
            return Err(Error::UndefinedMetric("accuracy of an empty confusion matrix".into()));
        }
        Ok(self.trace() as f64 / total as f64)
    }

    /// One-vs-rest tally for `class` read off the matrix.
    pub fn tally(&self, class: EmotionLabel) -> BinaryTally {
        let c = class.code();
        let tp = self.counts[c][c];
        let row: u64 = self.counts[c].iter().sum();
        let col: u64 = self.counts.iter().map(|r| r[c]).sum();
        let fn_ = row - tp;
        let fp = col - tp;
        BinaryTally {
            tp,
            fp,
            fn_,
            tn: self.total() - tp - fp - fn_,
        }
    }

    /// One-vs-rest accuracy for every class, in label order.
    pub fn per_class_accuracy(&self) -> Result<[f64; NUM_CLASSES]> {
        let mut out = [0.0; NUM_CLASSES];
        for l in EmotionLabel::ALL {
            out[l.code()] = accuracy(&self.tally(l))?;
        }
        Ok(out)
    }
}

pub fn confusion(preds: &[EmotionLabel], truth: &[EmotionLabel]) -> Result<ConfusionMatrix> {
    check_lengths(preds, truth)?;
    let mut m = ConfusionMatrix::default();
    for (&p, &t) in preds.iter().zip(truth) {
        m.counts[t.code()][p.code()] += 1;
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededStream;
    use proptest::prelude::*;

    fn labels(codes: &[usize]) -> Vec<EmotionLabel> {
        codes.iter().map(|&c| EmotionLabel::from_code(c).unwrap()).collect()
    }

    #[test]
    fn binary_accuracy_cases() {
        assert_eq!(accuracy(&BinaryTally::new(3, 5, 1, 1)).unwrap(), 0.8);
        assert_eq!(accuracy(&BinaryTally::new(4, 2, 0, 0)).unwrap(), 1.0);
        assert_eq!(accuracy(&BinaryTally::new(0, 0, 2, 3)).unwrap(), 0.0);
        assert!(matches!(accuracy(&BinaryTally::default()), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn multiclass_cases() {
        let t = labels(&[0, 1, 2, 3]);
        assert_eq!(multiclass_accuracy(&t, &t).unwrap(), 1.0);
        assert_eq!(multiclass_accuracy(&labels(&[0, 1, 0, 0]), &t).unwrap(), 0.5);
        assert!(multiclass_accuracy(&t[..3], &t).is_err());
        assert!(multiclass_accuracy(&[], &[]).is_err());
    }

    #[test]
    fn uniform_random_guessing_is_one_seventh() {
        let mut s = SeededStream::new(5);
        let n = 100_000;
        let preds: Vec<_> = (0..n).map(|_| EmotionLabel::from_code(s.below(7) as usize).unwrap()).collect();
        let truth: Vec<_> = (0..n).map(|_| EmotionLabel::from_code(s.below(7) as usize).unwrap()).collect();
        let acc = multiclass_accuracy(&preds, &truth).unwrap();
        assert!((acc - 1.0 / 7.0).abs() < 0.01, "{acc}");
    }

    #[test]
    fn perfect_predictions_are_diagonal() {
        let t = labels(&[0, 6, 6, 3, 2]);
        let m = confusion(&t, &t).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                if i != j {
                    assert_eq!(m.counts[i][j], 0);
                }
            }
        }
        assert_eq!(m.counts[6][6], 2);
        assert_eq!(m.total(), 5);
    }

    proptest! {
        #[test]
        fn matrix_and_direct_tallies_agree(
            pairs in proptest::collection::vec((0usize..7, 0usize..7), 1..200)
        ) {
            let preds = labels(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
            let truth = labels(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
            let m = confusion(&preds, &truth).unwrap();
            prop_assert_eq!(m.total() as usize, pairs.len());
            prop_assert_eq!(multiclass_accuracy(&preds, &truth).unwrap(), m.trace() as f64 / m.total() as f64);
            for l in EmotionLabel::ALL {
                let direct = BinaryTally::one_vs_rest(&preds, &truth, l).unwrap();
                prop_assert_eq!(m.tally(l), direct);
                prop_assert_eq!(accuracy(&m.tally(l)).unwrap(), accuracy(&direct).unwrap());
                let row: u64 = m.counts[l.code()].iter().sum();
                prop_assert_eq!(row as usize, truth.iter().filter(|&&t| t == l).count());
            }
        }
    }
}
