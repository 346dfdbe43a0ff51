//! Confusion matrices, per-class and macro F1, accuracy.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// `K × K` counts; rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl ConfusionMatrix {
    pub fn new(k: usize) -> Self {
        ConfusionMatrix {
            k,
            counts: vec![0; k * k],
        }
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::Shape("confusion matrix must be square".into()));
        }
        Ok(ConfusionMatrix {
            k,
            counts: rows.concat(),
        })
    }

    pub fn classes(&self) -> usize {
        self.k
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.k + pred]
    }

    pub fn add(&mut self, truth: usize, pred: usize) {
        self.counts[truth * self.k + pred] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn row_sum(&self, c: usize) -> u64 {
        (0..self.k).map(|j| self.get(c, j)).sum()
    }

    fn col_sum(&self, c: usize) -> u64 {
        (0..self.k).map(|i| self.get(i, c)).sum()
    }

    /// Precision, recall and F1 of class `c`; any ratio with a zero
    /// denominator is 0.
    pub fn class_scores(&self, c: usize) -> ClassScores {
        let tp = self.get(c, c);
        let precision = ratio(tp, self.col_sum(c));
        let recall = ratio(tp, self.row_sum(c));
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        ClassScores {
            precision,
            recall,
            f1,
            support: self.row_sum(c),
        }
    }

    pub fn per_class_f1(&self) -> Vec<f64> {
        (0..self.k).map(|c| self.class_scores(c).f1).collect()
    }

    /// Unweighted mean of the per-class F1 scores.
    pub fn macro_f1(&self) -> f64 {
        if self.k == 0 {
            return 0.0;
        }
        self.per_class_f1().iter().sum::<f64>() / self.k as f64
    }

    pub fn accuracy(&self) -> f64 {
        ratio((0..self.k).map(|c| self.get(c, c)).sum(), self.total())
    }

    /// Aligned text table with class names on both axes.
    pub fn render_text(&self, names: &[&str]) -> String {
        let width = names
            .iter()
            .map(|n| n.len())
            .chain(self.counts.iter().map(|c| c.to_string().len()))
            .chain(["true\\pred".len()])
            .max()
            .unwrap_or(4);
        let mut out = format!("{:>width$}", "true\\pred");
        for n in names {
            write!(out, " {n:>width$}").unwrap();
        }
        out.push('\n');
        for (i, n) in names.iter().enumerate() {
            write!(out, "{n:>width$}").unwrap();
            for j in 0..self.k {
                write!(out, " {:>width$}", self.get(i, j)).unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// CSV with a `true` column followed by one column per predicted class.
    pub fn render_csv(&self, names: &[&str]) -> String {
        let mut out = format!("true,{}\n", names.join(","));
        for (i, n) in names.iter().enumerate() {
            let row: Vec<String> = (0..self.k).map(|j| self.get(i, j).to_string()).collect();
            writeln!(out, "{n},{}", row.join(",")).unwrap();
        }
        out
    }
}

pub fn confusion(y_true: &[usize], y_pred: &[usize], k: usize) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Data(format!(
            "{} labels but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    let mut cm = ConfusionMatrix::new(k);
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t >= k || p >= k {
            return Err(Error::Data(format!("class index outside 0..{k}")));
        }
        cm.add(t, p);
    }
    Ok(cm)
}

pub fn macro_f1(cm: &ConfusionMatrix) -> f64 {
    cm.macro_f1()
}

pub fn accuracy(cm: &ConfusionMatrix) -> f64 {
    cm.accuracy()
}

/// Per-class precision/recall/F1 lines plus macro F1 and accuracy.
pub fn report(cm: &ConfusionMatrix, names: &[&str]) -> String {
    let mut out = String::from("class,precision,recall,f1,support\n");
    for (c, n) in names.iter().enumerate() {
        let s = cm.class_scores(c);
        writeln!(out, "{n},{:.4},{:.4},{:.4},{}", s.precision, s.recall, s.f1, s.support).unwrap();
    }
    writeln!(out, "macro_f1,{:.4}", cm.macro_f1()).unwrap();
    writeln!(out, "accuracy,{:.4}", cm.accuracy()).unwrap();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_computed_case() {
        let cm = ConfusionMatrix::from_rows(&[vec![50, 10], vec![5, 35]]).unwrap();
        let f = cm.per_class_f1();
        // class 0: P = 50/55, R = 50/60 → F1 = 100/115
        assert!((f[0] - 100.0 / 115.0).abs() < 1e-12);
        // class 1: P = 35/45, R = 35/40 → F1 = 70/85
        assert!((f[1] - 70.0 / 85.0).abs() < 1e-12);
        assert!((f[0] - 0.870).abs() < 5e-4 && (f[1] - 0.824).abs() < 5e-4);
        assert!((cm.macro_f1() - 0.847).abs() < 5e-4);
        assert_eq!(cm.accuracy(), 0.85);
    }

    #[test]
    fn perfect_and_majority() {
        let cm = confusion(&[0, 1, 2, 1], &[0, 1, 2, 1], 3).unwrap();
        assert_eq!(cm.macro_f1(), 1.0);
        assert_eq!(cm.accuracy(), 1.0);
        let cm = ConfusionMatrix::from_rows(&[vec![0, 12], vec![0, 88]]).unwrap();
        let majority = 2.0 * 0.88 / 1.88;
        assert!((cm.per_class_f1()[1] - majority).abs() < 1e-12);
        assert!((cm.macro_f1() - majority / 2.0).abs() < 1e-12);
        assert!((cm.macro_f1() - 0.468).abs() < 1e-3);
    }

    #[test]
    fn empty_predicted_column() {
        let cm = confusion(&[0, 0, 1], &[0, 0, 0], 2).unwrap();
        assert_eq!(cm.class_scores(1).precision, 0.0);
        assert_eq!(cm.class_scores(1).f1, 0.0);
        assert!((cm.accuracy() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_lists_have_zero_diagonal() {
        let cm = confusion(&[0, 1, 0], &[1, 0, 1], 2).unwrap();
        assert_eq!(cm.get(0, 0) + cm.get(1, 1), 0);
        assert_eq!(cm.macro_f1(), 0.0);
    }

    #[test]
    fn single_class_degenerate() {
        let cm = confusion(&[0, 0, 0], &[0, 0, 0], 1).unwrap();
        assert_eq!(cm.macro_f1(), cm.accuracy());
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(confusion(&[0], &[0, 1], 2).is_err());
        assert!(confusion(&[3], &[0], 2).is_err());
    }

    #[test]
    fn renderings() {
        let cm = ConfusionMatrix::from_rows(&[vec![50, 10], vec![5, 35]]).unwrap();
        assert_eq!(cm.render_csv(&["NOT", "OFF"]), "true,NOT,OFF\nNOT,50,10\nOFF,5,35\n");
        let text = cm.render_text(&["NOT", "OFF"]);
        let widths: Vec<usize> = text.lines().map(str::len).collect();
        assert!(widths.windows(2).all(|w| w[0] == w[1]));
    }

    proptest! {
        #[test]
        fn matches_counting_oracle(pairs in prop::collection::vec((0usize..3, 0usize..3), 0..60)) {
            let (t, p): (Vec<usize>, Vec<usize>) = pairs.iter().copied().unzip();
            let cm = confusion(&t, &p, 3).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    let n = pairs.iter().filter(|&&(a, b)| a == i && b == j).count() as u64;
                    prop_assert_eq!(cm.get(i, j), n);
                }
            }
            prop_assert_eq!(cm.total(), pairs.len() as u64);
        }

        #[test]
        fn class_permutation_keeps_macro_f1(pairs in prop::collection::vec((0usize..3, 0usize..3), 1..60)) {
            let perm = [2, 0, 1];
            let (t, p): (Vec<usize>, Vec<usize>) = pairs.iter().copied().unzip();
            let a = confusion(&t, &p, 3).unwrap();
            let tp: Vec<usize> = t.iter().map(|&c| perm[c]).collect();
            let pp: Vec<usize> = p.iter().map(|&c| perm[c]).collect();
            let b = confusion(&tp, &pp, 3).unwrap();
            for c in 0..3 {
                prop_assert!((a.per_class_f1()[c] - b.per_class_f1()[perm[c]]).abs() < 1e-12);
            }
            prop_assert!((a.macro_f1() - b.macro_f1()).abs() < 1e-12);
        }
    }
}
