//! Vanilla recurrent cell with a tanh hidden update and an affine
//! classification head.

use crate::error::Result;
use crate::numkernel::{affine, linear, tanh_act, DenseMatrix, DenseVector, Prng};

#[derive(Debug, Clone, PartialEq)]
pub struct RnnParams {
    pub w_hx: DenseMatrix, // m x d
    pub w_hh: DenseMatrix, // m x m
    pub b_h: DenseVector,  // m
    pub w_zh: DenseMatrix, // k x m
    pub b_z: DenseVector,  // k
}

impl RnnParams {
    pub fn zeros(input: usize, hidden: usize, classes: usize) -> Self {
        RnnParams {
            w_hx: DenseMatrix::zeros(hidden, input),
            w_hh: DenseMatrix::zeros(hidden, hidden),
            b_h: DenseVector::zeros(hidden),
            w_zh: DenseMatrix::zeros(classes, hidden),
            b_z: DenseVector::zeros(classes),
        }
    }

    /// Uniform init on [-1/sqrt(m), 1/sqrt(m)]; all biases zero.
    pub fn init(input: usize, hidden: usize, classes: usize, prng: &mut Prng) -> Self {
        let mut p = Self::zeros(input, hidden, classes);
        let bound = 1.0 / (hidden as f64).sqrt();
        for w in [&mut p.w_hx, &mut p.w_hh, &mut p.w_zh] {
            for v in w.as_mut_slice() {
                *v = prng.uniform(-bound, bound);
            }
        }
        p
    }

    pub fn input_dim(&self) -> usize {
        self.w_hx.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_hx.rows()
    }

    pub fn classes(&self) -> usize {
        self.w_zh.rows()
    }
}

/// h_t = tanh(W_hx·x_t + W_hh·h_prev + b_h)
pub fn rnn_step(p: &RnnParams, x_t: &DenseVector, h_prev: &DenseVector) -> Result<DenseVector> {
    let pre = affine(&p.w_hx, x_t, &p.w_hh, h_prev, &p.b_h)?;
    Ok(tanh_act(&pre))
}

/// Classifier head. The default is plain affine logits; `compat_tanh`
/// additionally squashes them through tanh, which bounds every logit to
/// (-1, 1) and floors the attainable loss, so it is off everywhere in the
/// training pipeline.
pub fn rnn_output(p: &RnnParams, h_t: &DenseVector, compat_tanh: bool) -> Result<DenseVector> {
    let z = linear(&p.w_zh, h_t, &p.b_z)?;
    Ok(if compat_tanh { tanh_act(&z) } else { z })
}
