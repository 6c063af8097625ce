//! Forward dynamics of the four model families (vanilla RNN, standard LSTM,
//! the concurrent sub-memory unit, and the pooled linear baseline) plus the
//! shared softmax classification head.

pub mod colstsm;
pub mod lstm;
pub mod pooled;
pub mod rnn;

pub use colstsm::{colstsm_step, CoLstsmParams, CoLstsmStepCache, SubMemoryParams};
pub use lstm::{lstm_step, LstmParams, LstmStepCache};
pub use pooled::{pooled_baseline, pooled_mean, PooledParams};
pub use rnn::{rnn_output, rnn_step, RnnParams};

use crate::error::{Error, Result};
use crate::numkernel::DenseVector;

/// Two aligned input streams (one per interacting person) and a class label.
#[derive(Debug, Clone, PartialEq)]
pub struct SequencePair {
    pub a: Vec<DenseVector>,
    pub b: Vec<DenseVector>,
    pub label: usize,
}

impl SequencePair {
    pub fn new(a: Vec<DenseVector>, b: Vec<DenseVector>, label: usize) -> Result<Self> {
        let pair = SequencePair { a, b, label };
        pair.validate()?;
        Ok(pair)
    }

    pub fn validate(&self) -> Result<()> {
        if self.a.is_empty() {
            return Err(Error::EmptySequence);
        }
        if self.a.len() != self.b.len() {
            return Err(Error::dims(format!(
                "sequence pair: stream a has {} timesteps but stream b has {}",
                self.a.len(),
                self.b.len()
            )));
        }
        let n = self.a[0].len();
        for (t, (xa, xb)) in self.a.iter().zip(&self.b).enumerate() {
            if xa.len() != n || xb.len() != n {
                return Err(Error::dims(format!(
                    "sequence pair: timestep {t} has lengths {} and {}, expected {n}",
                    xa.len(),
                    xb.len()
                )));
            }
        }
        Ok(())
    }

    /// Number of timesteps.
    pub fn seq_len(&self) -> usize {
        self.a.len()
    }

    /// Per-stream feature dimension.
    pub fn input_dim(&self) -> usize {
        self.a[0].len()
    }
}

/// Numerically stable softmax: shifts by the max logit before exponentiating.
pub fn softmax(z: &DenseVector) -> DenseVector {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    DenseVector::from_vec(exps.into_iter().map(|e| e / sum).collect())
}

/// Negative log-likelihood of the labelled class under distribution `y`.
pub fn nll_loss(y: &DenseVector, label: usize) -> Result<f64> {
    if label >= y.len() {
        return Err(Error::LabelOutOfRange {
            label,
            classes: y.len(),
        });
    }
    Ok(-y[label].ln())
}

/// Index of the largest component, lowest index winning ties.
pub fn argmax(v: &DenseVector) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] > v[best] {
            best = i;
        }
    }
    best
}
