//! Accuracy, confusion matrices, and the observation-ratio prediction
//! curve: accuracy as a function of how much of each sequence the model is
//! allowed to see.

use crate::cells::{argmax, SequencePair};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::numkernel::DenseVector;

/// Which per-timestep scores feed the prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScoreMode {
    /// Softmax at the last observed timestep (the model's state so far).
    #[default]
    LastStep,
    /// Mean of the per-timestep softmax outputs over the observed prefix.
    MeanSteps,
}

impl ScoreMode {
    pub fn tag(self) -> &'static str {
        match self {
            ScoreMode::LastStep => "last",
            ScoreMode::MeanSteps => "mean",
        }
    }

    pub fn parse(s: &str) -> Option<ScoreMode> {
        match s {
            "last" => Some(ScoreMode::LastStep),
            "mean" => Some(ScoreMode::MeanSteps),
            _ => None,
        }
    }
}

/// Class distribution after observing the first `prefix_len` timesteps.
pub fn class_scores(
    model: &Model,
    pair: &SequencePair,
    prefix_len: usize,
    mode: ScoreMode,
) -> Result<DenseVector> {
    let fwd = model.forward_prefix(pair, prefix_len)?;
    Ok(match mode {
        ScoreMode::LastStep => fwd.last_step_probs(),
        ScoreMode::MeanSteps => fwd.mean_step_probs(),
    })
}

/// Predicted class from the first `prefix_len` timesteps; ties break to the
/// lowest class index.
pub fn predict(model: &Model, pair: &SequencePair, prefix_len: usize) -> Result<usize> {
    predict_with(model, pair, prefix_len, ScoreMode::LastStep)
}

pub fn predict_with(
    model: &Model,
    pair: &SequencePair,
    prefix_len: usize,
    mode: ScoreMode,
) -> Result<usize> {
    Ok(argmax(&class_scores(model, pair, prefix_len, mode)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    /// Per-class recall; zero for classes absent from the evaluation set.
    pub per_class: Vec<f64>,
    /// Counts indexed \[true class\]\[predicted class\].
    pub confusion: Vec<Vec<usize>>,
    pub total: usize,
}

impl Metrics {
    pub fn text_table(&self) -> String {
        let k = self.per_class.len();
        let mut out = format!("overall accuracy: {:.6} ({} pairs)\n", self.accuracy, self.total);
        out.push_str("class  accuracy  row: predicted counts\n");
        for (i, row) in self.confusion.iter().enumerate() {
            out.push_str(&format!("{:5}  {:8.6} ", i, self.per_class[i]));
            for j in 0..k {
                out.push_str(&format!(" {:6}", row[j]));
            }
            out.push('\n');
        }
        out
    }

    /// Long-form CSV of the confusion matrix; per-class and overall
    /// accuracies are recoverable from the counts.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("true_class,pred_class,count\n");
        for (i, row) in self.confusion.iter().enumerate() {
            for (j, count) in row.iter().enumerate() {
                out.push_str(&format!("{i},{j},{count}\n"));
            }
        }
        out
    }
}

/// Full-length prediction over the evaluation set.
pub fn evaluate(model: &Model, pairs: &[SequencePair]) -> Result<Metrics> {
    evaluate_with(model, pairs, ScoreMode::LastStep)
}

pub fn evaluate_with(model: &Model, pairs: &[SequencePair], mode: ScoreMode) -> Result<Metrics> {
    if pairs.is_empty() {
        return Err(Error::EmptyEvalSet);
    }
    let k = model.classes();
    let mut confusion = vec![vec![0usize; k]; k];
    for pair in pairs {
        let pred = predict_with(model, pair, pair.seq_len(), mode)?;
        confusion[pair.label][pred] += 1;
    }
    let total = pairs.len();
    let diag: usize = (0..k).map(|i| confusion[i][i]).sum();
    let mut per_class = Vec::with_capacity(k);
    for (i, row) in confusion.iter().enumerate() {
        let row_total: usize = row.iter().sum();
        per_class.push(if row_total == 0 {
            0.0
        } else {
            row[i] as f64 / row_total as f64
        });
    }
    Ok(Metrics {
        accuracy: diag as f64 / total as f64,
        per_class,
        confusion,
        total,
    })
}

/// Prefix length for observation ratio i/10 of a length-T sequence:
/// round-half-up of (i/10)*T, floored at one frame.
fn prefix_for_ratio(tenths: usize, seq_len: usize) -> usize {
    ((2 * tenths * seq_len + 10) / 20).max(1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub ratio: f64,
    pub accuracy: f64,
}

/// Accuracy at observation ratios 0.1, 0.2, ..., 1.0.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionCurve {
    pub points: Vec<CurvePoint>,
}

impl PredictionCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("ratio,accuracy\n");
        for p in &self.points {
            out.push_str(&format!("{:.1},{:.6}\n", p.ratio, p.accuracy));
        }
        out
    }
}

pub fn observation_curve(model: &Model, pairs: &[SequencePair]) -> Result<PredictionCurve> {
    observation_curve_with(model, pairs, ScoreMode::LastStep)
}

pub fn observation_curve_with(
    model: &Model,
    pairs: &[SequencePair],
    mode: ScoreMode,
) -> Result<PredictionCurve> {
    if pairs.is_empty() {
        return Err(Error::EmptyEvalSet);
    }
    let mut points = Vec::with_capacity(10);
    for tenths in 1..=10 {
        let mut correct = 0usize;
        for pair in pairs {
            let prefix = prefix_for_ratio(tenths, pair.seq_len());
            if predict_with(model, pair, prefix, mode)? == pair.label {
                correct += 1;
            }
        }
        points.push(CurvePoint {
            ratio: tenths as f64 / 10.0,
            accuracy: correct as f64 / pairs.len() as f64,
        });
    }
    Ok(PredictionCurve { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelFamily;
    use crate::numkernel::{DenseMatrix, Prng};

    fn random_pair(n: usize, t: usize, label: usize, prng: &mut Prng) -> SequencePair {
        let mk = |prng: &mut Prng| {
            (0..t)
                .map(|_| DenseVector::from_vec((0..n).map(|_| prng.gaussian()).collect()))
                .collect::<Vec<_>>()
        };
        SequencePair::new(mk(prng), mk(prng), label).unwrap()
    }

    /// Pairs whose constant concatenated mean is the one-hot of the label,
    /// plus an identity pooled classifier: a perfect oracle predictor.
    fn oracle_setup() -> (Model, Vec<SequencePair>) {
        let k = 4;
        let n = 2;
        let mut pairs = Vec::new();
        for label in 0..k {
            for _ in 0..3 {
                let mut xa = vec![0.0; n];
                let mut xb = vec![0.0; n];
                if label < n {
                    xa[label] = 1.0;
                } else {
                    xb[label - n] = 1.0;
                }
                pairs.push(SequencePair::new(
                    vec![DenseVector::from_vec(xa.clone()); 5],
                    vec![DenseVector::from_vec(xb.clone()); 5],
                    label,
                ).unwrap());
            }
        }
        let mut model = Model::zeros(ModelFamily::Pooled, n, 0, k);
        let Model::Pooled(p) = &mut model else { unreachable!() };
        p.w_p = DenseMatrix::identity(4);
        (model, pairs)
    }

    #[test]
    fn oracle_predictor_scores_perfectly() {
        let (model, pairs) = oracle_setup();
        let m = evaluate(&model, &pairs).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.total, 12);
        for (i, row) in m.confusion.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                assert_eq!(c, if i == j { 3 } else { 0 });
            }
        }
        assert!(m.per_class.iter().all(|&a| a == 1.0));
    }

    #[test]
    fn constant_predictor_on_balanced_data_hits_chance() {
        let mut prng = Prng::new(1);
        let mut pairs = Vec::new();
        for label in 0..4 {
            for _ in 0..5 {
                pairs.push(random_pair(2, 4, label, &mut prng));
            }
        }
        let model = Model::zeros(ModelFamily::Pooled, 2, 0, 4);
        let m = evaluate(&model, &pairs).unwrap();
        assert_eq!(m.accuracy, 0.25);
        // everything lands in class 0 by the tie rule
        assert!(m.confusion.iter().all(|row| row[0] == 5));
    }

    #[test]
    fn confusion_totals_match_pair_count() {
        let mut prng = Prng::new(2);
        let pairs: Vec<_> = (0..9).map(|i| random_pair(2, 5, i % 3, &mut prng)).collect();
        let model = Model::new(ModelFamily::CoLstsm, 2, 3, 3, &mut prng);
        let m = evaluate(&model, &pairs).unwrap();
        let total: usize = m.confusion.iter().flatten().sum();
        assert_eq!(total, pairs.len());
        // weighted per-class accuracies reproduce the overall accuracy
        let weighted: f64 = m
            .confusion
            .iter()
            .enumerate()
            .map(|(i, row)| m.per_class[i] * row.iter().sum::<usize>() as f64)
            .sum::<f64>()
            / m.total as f64;
        assert!((weighted - m.accuracy).abs() < 1e-12);
    }

    #[test]
    fn full_prefix_prediction_matches_evaluation() {
        let mut prng = Prng::new(3);
        let pair = random_pair(2, 6, 1, &mut prng);
        let model = Model::new(ModelFamily::CoLstsm, 2, 4, 3, &mut prng);
        let full = predict(&model, &pair, 6).unwrap();
        let fwd = model.forward_sequence(&pair).unwrap();
        assert_eq!(full, argmax(&fwd.last_step_probs()));
    }

    #[test]
    fn zero_model_predicts_class_zero_by_tie_rule() {
        let mut prng = Prng::new(4);
        let pair = random_pair(2, 4, 2, &mut prng);
        let model = Model::zeros(ModelFamily::CoLstsm, 2, 3, 4);
        assert_eq!(predict(&model, &pair, 4).unwrap(), 0);
    }

    #[test]
    fn prefix_zero_is_an_error() {
        let mut prng = Prng::new(5);
        let pair = random_pair(2, 4, 0, &mut prng);
        let model = Model::zeros(ModelFamily::CoLstsm, 2, 3, 2);
        assert!(matches!(
            predict(&model, &pair, 0),
            Err(Error::PrefixOutOfRange { .. })
        ));
    }

    #[test]
    fn prefix_rounding_is_half_up() {
        assert_eq!(prefix_for_ratio(1, 30), 3);
        assert_eq!(prefix_for_ratio(3, 30), 9);
        assert_eq!(prefix_for_ratio(10, 30), 30);
        assert_eq!(prefix_for_ratio(5, 7), 4); // 3.5 rounds up
        assert_eq!(prefix_for_ratio(1, 3), 1); // 0.3 floors to the 1-frame minimum
        assert_eq!(prefix_for_ratio(1, 4), 1); // 0.4 rounds to 0, floored to 1
    }

    #[test]
    fn curve_has_ten_points_and_agrees_with_evaluate_at_full_ratio() {
        let mut prng = Prng::new(6);
        let pairs: Vec<_> = (0..8).map(|i| random_pair(2, 10, i % 2, &mut prng)).collect();
        let model = Model::new(ModelFamily::CoLstsm, 2, 3, 2, &mut prng);
        let curve = observation_curve(&model, &pairs).unwrap();
        assert_eq!(curve.points.len(), 10);
        let m = evaluate(&model, &pairs).unwrap();
        assert_eq!(curve.points[9].accuracy, m.accuracy);
        assert_eq!(curve.points[9].ratio, 1.0);
        let csv = curve.to_csv();
        assert_eq!(csv.lines().count(), 11);
    }

    #[test]
    fn empty_evaluation_set_is_an_error() {
        let model = Model::zeros(ModelFamily::Pooled, 2, 0, 2);
        assert!(matches!(evaluate(&model, &[]), Err(Error::EmptyEvalSet)));
        assert!(matches!(
            observation_curve(&model, &[]),
            Err(Error::EmptyEvalSet)
        ));
    }

    #[test]
    fn prediction_is_pure() {
        let mut prng = Prng::new(7);
        let pair = random_pair(2, 5, 0, &mut prng);
        let model = Model::new(ModelFamily::TwoLstm, 2, 3, 2, &mut prng);
        let s1 = class_scores(&model, &pair, 3, ScoreMode::LastStep).unwrap();
        let s2 = class_scores(&model, &pair, 3, ScoreMode::LastStep).unwrap();
        for (a, b) in s1.iter().zip(s2.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
