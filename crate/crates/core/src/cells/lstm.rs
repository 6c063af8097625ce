//! Standard LSTM cell with input, forget, and output gates and a tanh
//! candidate, plus an affine classification head.

use crate::error::Result;
use crate::numkernel::{affine, sigmoid, tanh_act, DenseMatrix, DenseVector, Prng};

#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub w_ix: DenseMatrix,
    pub w_ih: DenseMatrix,
    pub b_i: DenseVector,
    pub w_fx: DenseMatrix,
    pub w_fh: DenseMatrix,
    pub b_f: DenseVector,
    pub w_gx: DenseMatrix,
    pub w_gh: DenseMatrix,
    pub b_g: DenseVector,
    pub w_ox: DenseMatrix,
    pub w_oh: DenseMatrix,
    pub b_o: DenseVector,
    pub w_zh: DenseMatrix,
    pub b_z: DenseVector,
}

impl LstmParams {
    pub fn zeros(input: usize, hidden: usize, classes: usize) -> Self {
        LstmParams {
            w_ix: DenseMatrix::zeros(hidden, input),
            w_ih: DenseMatrix::zeros(hidden, hidden),
            b_i: DenseVector::zeros(hidden),
            w_fx: DenseMatrix::zeros(hidden, input),
            w_fh: DenseMatrix::zeros(hidden, hidden),
            b_f: DenseVector::zeros(hidden),
            w_gx: DenseMatrix::zeros(hidden, input),
            w_gh: DenseMatrix::zeros(hidden, hidden),
            b_g: DenseVector::zeros(hidden),
            w_ox: DenseMatrix::zeros(hidden, input),
            w_oh: DenseMatrix::zeros(hidden, hidden),
            b_o: DenseVector::zeros(hidden),
            w_zh: DenseMatrix::zeros(classes, hidden),
            b_z: DenseVector::zeros(classes),
        }
    }

    /// Uniform init on [-1/sqrt(m), 1/sqrt(m)]; forget-gate bias starts at
    /// 1.0 so early training does not flush the cell, all other biases zero.
    pub fn init(input: usize, hidden: usize, classes: usize, prng: &mut Prng) -> Self {
        let mut p = Self::zeros(input, hidden, classes);
        let bound = 1.0 / (hidden as f64).sqrt();
        for w in [
            &mut p.w_ix, &mut p.w_ih, &mut p.w_fx, &mut p.w_fh, &mut p.w_gx, &mut p.w_gh,
            &mut p.w_ox, &mut p.w_oh, &mut p.w_zh,
        ] {
            for v in w.as_mut_slice() {
                *v = prng.uniform(-bound, bound);
            }
        }
        for v in p.b_f.as_mut_slice() {
            *v = 1.0;
        }
        p
    }

    pub fn input_dim(&self) -> usize {
        self.w_ix.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_ix.rows()
    }

    pub fn classes(&self) -> usize {
        self.w_zh.rows()
    }
}

/// Everything the backward pass needs from one timestep.
#[derive(Debug, Clone)]
pub struct LstmStepCache {
    pub x: DenseVector,
    pub h_prev: DenseVector,
    pub c_prev: DenseVector,
    pub i: DenseVector,
    pub f: DenseVector,
    pub g: DenseVector,
    pub o: DenseVector,
    pub c: DenseVector,
    pub tanh_c: DenseVector,
    pub h: DenseVector,
}

/// One LSTM step: gates, cell update c = f⊙c_prev + i⊙g, then h = o⊙tanh(c).
pub fn lstm_step(
    p: &LstmParams,
    x_t: &DenseVector,
    h_prev: &DenseVector,
    c_prev: &DenseVector,
) -> Result<(DenseVector, DenseVector, LstmStepCache)> {
    let i = sigmoid(&affine(&p.w_ix, x_t, &p.w_ih, h_prev, &p.b_i)?);
    let f = sigmoid(&affine(&p.w_fx, x_t, &p.w_fh, h_prev, &p.b_f)?);
    let g = tanh_act(&affine(&p.w_gx, x_t, &p.w_gh, h_prev, &p.b_g)?);
    let o = sigmoid(&affine(&p.w_ox, x_t, &p.w_oh, h_prev, &p.b_o)?);
    let c = f.hadamard(c_prev).add(&i.hadamard(&g));
    let tanh_c = tanh_act(&c);
    let h = o.hadamard(&tanh_c);
    let cache = LstmStepCache {
        x: x_t.clone(),
        h_prev: h_prev.clone(),
        c_prev: c_prev.clone(),
        i,
        f,
        g,
        o,
        c: c.clone(),
        tanh_c,
        h: h.clone(),
    };
    Ok((h, c, cache))
}
