//! Classification metrics: accuracy, macro-F1, one-vs-rest macro AUC-ROC,
//! and the feature-correlation diagnostic.

use crate::error::{Error, Result};
use crate::mat::Mat;

/// Evaluation summary for one prediction set.
#[derive(Clone, Debug)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub auc_roc: f64,
    pub per_class_f1: Vec<f64>,
    pub n_eval: usize,
}

/// Fraction of exact matches.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.is_empty() || pred.len() != truth.len() {
        return Err(Error::Domain(format!(
            "accuracy over {} predictions and {} truths",
            pred.len(),
            truth.len()
        )));
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / pred.len() as f64)
}

/// Per-class F1 with the zero-denominator convention `F1 = 0`.
pub fn per_class_f1(pred: &[usize], truth: &[usize], m: usize) -> Vec<f64> {
    let mut tp = vec![0usize; m];
    let mut fp = vec![0usize; m];
    let mut fnn = vec![0usize; m];
    for (&p, &t) in pred.iter().zip(truth) {
        if p == t {
            tp[p] += 1;
        } else {
            if p < m {
                fp[p] += 1;
            }
            if t < m {
                fnn[t] += 1;
            }
        }
    }
    (0..m)
        .map(|c| {
            let denom = 2 * tp[c] + fp[c] + fnn[c];
            if denom == 0 {
                0.0
            } else {
                2.0 * tp[c] as f64 / denom as f64
            }
        })
        .collect()
}

/// Unweighted mean of per-class F1 over classes `0..m`.
pub fn macro_f1(pred: &[usize], truth: &[usize], m: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    per_class_f1(pred, truth, m).iter().sum::<f64>() / m as f64
}

/// One-vs-rest AUC for a single class: pairwise comparisons with ties
/// counted 0.5. `None` when the class has no positives or no negatives.
pub fn binary_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let pos: Vec<f64> = scores
        .iter()
        .zip(positive)
        .filter(|(_, &p)| p)
        .map(|(&s, _)| s)
        .collect();
    let neg: Vec<f64> = scores
        .iter()
        .zip(positive)
        .filter(|(_, &p)| !p)
        .map(|(&s, _)| s)
        .collect();
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let mut wins = 0.0;
    for &p in &pos {
        for &n in &neg {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    Some(wins / (pos.len() * neg.len()) as f64)
}

/// Per-class one-vs-rest AUC; `None` entries are classes absent from either
/// side (skipped by [`auc_roc_macro`]).
pub fn auc_roc_per_class(scores: &Mat, truth: &[usize]) -> Result<Vec<Option<f64>>> {
    if scores.rows() != truth.len() {
        return Err(Error::Dimension(format!(
            "{} score rows for {} truths",
            scores.rows(),
            truth.len()
        )));
    }
    let m = scores.cols();
    Ok((0..m)
        .map(|c| {
            let col: Vec<f64> = (0..scores.rows()).map(|i| scores.get(i, c)).collect();
            let pos: Vec<bool> = truth.iter().map(|&t| t == c).collect();
            binary_auc(&col, &pos)
        })
        .collect())
}

/// Macro AUC-ROC: unweighted mean over classes with a defined one-vs-rest
/// AUC. Errors when no class has both positives and negatives.
pub fn auc_roc_macro(scores: &Mat, truth: &[usize]) -> Result<f64> {
    let per_class = auc_roc_per_class(scores, truth)?;
    let defined: Vec<f64> = per_class.into_iter().flatten().collect();
    if defined.is_empty() {
        return Err(Error::Domain(
            "AUC-ROC undefined: truth contains a single class".into(),
        ));
    }
    Ok(defined.iter().sum::<f64>() / defined.len() as f64)
}

/// Full report from probability scores (rows sum to 1) and true labels.
/// Predictions are per-row argmax, ties to the smaller class id.
pub fn evaluate(scores: &Mat, truth: &[usize]) -> Result<MetricsReport> {
    let m = scores.cols();
    let pred: Vec<usize> = (0..scores.rows())
        .map(|i| {
            let row = scores.row(i);
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect();
    let per_class = per_class_f1(&pred, truth, m);
    Ok(MetricsReport {
        accuracy: accuracy(&pred, truth)?,
        macro_f1: per_class.iter().sum::<f64>() / m.max(1) as f64,
        auc_roc: auc_roc_macro(scores, truth)?,
        per_class_f1: per_class,
        n_eval: truth.len(),
    })
}

/// Absolute Pearson correlation between feature columns. Pairs involving a
/// (numerically) zero-variance column are 0 by convention.
pub fn feature_correlation(h: &Mat) -> Mat {
    let n = h.rows();
    let d = h.cols();
    if n == 0 {
        return Mat::zeros(d, d);
    }
    let mut means = vec![0.0; d];
    for i in 0..n {
        for (j, &v) in h.row(i).iter().enumerate() {
            means[j] += v;
        }
    }
    for m in means.iter_mut() {
        *m /= n as f64;
    }
    // column-centered copy
    let mut centered = h.clone();
    for i in 0..n {
        for (j, v) in centered.row_mut(i).iter_mut().enumerate() {
            *v -= means[j];
        }
    }
    let mut var = vec![0.0; d];
    for i in 0..n {
        for (j, &v) in centered.row(i).iter().enumerate() {
            var[j] += v * v;
        }
    }
    const VAR_FLOOR: f64 = 1e-24;
    let mut corr = Mat::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            if var[a] <= VAR_FLOOR || var[b] <= VAR_FLOOR {
                continue;
            }
            if a == b {
                corr.set(a, a, 1.0);
                continue;
            }
            let mut cov = 0.0;
            for i in 0..n {
                cov += centered.get(i, a) * centered.get(i, b);
            }
            let c = (cov / (var[a].sqrt() * var[b].sqrt())).abs();
            corr.set(a, b, c);
            corr.set(b, a, c);
        }
    }
    corr
}

/// Mean absolute correlation inside the K equal column blocks vs across
/// them, diagonal excluded. Used as the disentanglement diagnostic.
pub fn block_correlation_contrast(corr: &Mat, k: usize) -> (f64, f64) {
    let d = corr.rows();
    assert!(k > 0 && d % k == 0, "dimension {d} not divisible by {k}");
    let w = d / k;
    let (mut within, mut across) = ((0.0, 0usize), (0.0, 0usize));
    for a in 0..d {
        for b in 0..d {
            if a == b {
                continue;
            }
            if a / w == b / w {
                within.0 += corr.get(a, b);
                within.1 += 1;
            } else {
                across.0 += corr.get(a, b);
                across.1 += 1;
            }
        }
    }
    (
        within.0 / within.1.max(1) as f64,
        across.0 / across.1.max(1) as f64,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[1, 2, 0], &[1, 2, 0]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 1, 1, 0], &[0, 1, 0, 0]).unwrap(), 0.75);
        assert!(accuracy(&[], &[]).is_err());
    }

    #[test]
    fn accuracy_matches_counting_oracle() {
        let mut rng = crate::nn::seeded_rng(21);
        let truth: Vec<usize> = (0..100).map(|_| rng.random_range(0..5)).collect();
        let mut pred = truth.clone();
        for p in pred.iter_mut() {
            if rng.random::<f64>() < 0.4 {
                *p = rng.random_range(0..5);
            }
        }
        let mut hits = 0usize;
        for i in 0..100 {
            if pred[i] == truth[i] {
                hits += 1;
            }
        }
        assert_eq!(accuracy(&pred, &truth).unwrap(), hits as f64 / 100.0);
    }

    #[test]
    fn macro_f1_perfect() {
        assert_eq!(macro_f1(&[0, 1, 2], &[0, 1, 2], 3), 1.0);
    }

    #[test]
    fn macro_f1_hand_computed_confusion() {
        // class 0: TP=2 FP=1 FN=0 -> 0.8; class 1: TP=1 FP=0 FN=1 -> 2/3
        let truth = [0, 0, 1, 1];
        let pred = [0, 0, 0, 1];
        let f1 = macro_f1(&pred, &truth, 2);
        assert!((f1 - (0.8 + 2.0 / 3.0) / 2.0).abs() < 1e-9, "f1 {f1}");
    }

    #[test]
    fn macro_f1_absent_class_counts_zero() {
        // class 2 never appears in truth or pred -> F1 0 still divides by m
        let truth = [0, 1];
        let pred = [0, 1];
        assert!((macro_f1(&pred, &truth, 3) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn auc_perfect_separation() {
        let auc = binary_auc(&[0.9, 0.8, 0.4, 0.3], &[true, true, false, false]).unwrap();
        assert_eq!(auc, 1.0);
    }

    #[test]
    fn auc_hand_computed_interleaved() {
        let auc = binary_auc(&[0.9, 0.8, 0.7, 0.6], &[true, false, true, false]).unwrap();
        assert_eq!(auc, 0.75);
    }

    #[test]
    fn auc_all_ties_is_half() {
        let auc = binary_auc(&[0.5, 0.5, 0.5, 0.5], &[true, false, true, false]).unwrap();
        assert_eq!(auc, 0.5);
    }

    #[test]
    fn auc_macro_two_class_probabilities() {
        let scores = Mat::from_rows(&[
            vec![0.1, 0.9],
            vec![0.2, 0.8],
            vec![0.3, 0.7],
            vec![0.4, 0.6],
        ])
        .unwrap();
        let auc = auc_roc_macro(&scores, &[1, 0, 1, 0]).unwrap();
        assert_eq!(auc, 0.75);
    }

    #[test]
    fn auc_single_class_truth_errors() {
        let scores = Mat::from_rows(&[vec![0.6, 0.4], vec![0.7, 0.3]]).unwrap();
        assert!(auc_roc_macro(&scores, &[0, 0]).is_err());
    }

    #[test]
    fn auc_invariant_to_monotone_transform() {
        let mut rng = crate::nn::seeded_rng(8);
        let scores: Vec<f64> = (0..50).map(|_| rng.random::<f64>()).collect();
        let labels: Vec<bool> = (0..50).map(|_| rng.random::<f64>() < 0.4).collect();
        let a = binary_auc(&scores, &labels).unwrap();
        let transformed: Vec<f64> = scores.iter().map(|&s| (3.0 * s + 1.0).exp()).collect();
        let b = binary_auc(&transformed, &labels).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn correlation_duplicated_column_is_one() {
        let h = Mat::from_rows(&[
            vec![1.0, 1.0, 0.3],
            vec![2.0, 2.0, -0.4],
            vec![-1.0, -1.0, 0.9],
        ])
        .unwrap();
        let c = feature_correlation(&h);
        assert!((c.get(0, 1) - 1.0).abs() < 1e-12);
        assert_eq!(c.get(0, 0), 1.0);
        assert_eq!(c.get(1, 1), 1.0);
        // symmetry
        assert_eq!(c.get(0, 2), c.get(2, 0));
    }

    #[test]
    fn correlation_independent_columns_near_zero() {
        let mut rng = crate::nn::seeded_rng(17);
        let h = Mat::from_fn(10_000, 4, |_, _| rng.random::<f64>() - 0.5);
        let c = feature_correlation(&h);
        for a in 0..4 {
            for b in 0..4 {
                if a != b {
                    assert!(c.get(a, b) < 0.05, "corr({a},{b}) = {}", c.get(a, b));
                }
            }
        }
    }

    #[test]
    fn correlation_zero_variance_column_is_zero() {
        let h = Mat::from_rows(&[vec![1.0, 5.0], vec![2.0, 5.0], vec![3.0, 5.0]]).unwrap();
        let c = feature_correlation(&h);
        assert_eq!(c.get(0, 1), 0.0);
        assert_eq!(c.get(1, 1), 0.0);
        assert_eq!(c.get(0, 0), 1.0);
    }

    #[test]
    fn block_contrast_prefers_block_structure() {
        // two blocks of two columns; block pairs strongly correlated
        let mut rng = crate::nn::seeded_rng(2);
        let mut rows = Vec::new();
        for _ in 0..500 {
            let a: f64 = rng.random::<f64>() - 0.5;
            let b: f64 = rng.random::<f64>() - 0.5;
            rows.push(vec![
                a,
                a + 0.01 * (rng.random::<f64>() - 0.5),
                b,
                b + 0.01 * (rng.random::<f64>() - 0.5),
            ]);
        }
        let c = feature_correlation(&Mat::from_rows(&rows).unwrap());
        let (within, across) = block_correlation_contrast(&c, 2);
        assert!(within > across, "within {within} across {across}");
    }
}
