//! Non-recurrent baseline: both streams are concatenated per frame, averaged
//! over time, and classified by a single affine map.

use crate::error::Result;
use crate::numkernel::{linear, DenseMatrix, DenseVector, Prng};

use super::SequencePair;

#[derive(Debug, Clone, PartialEq)]
pub struct PooledParams {
    pub w_p: DenseMatrix, // k x 2n
    pub b_p: DenseVector, // k
}

impl PooledParams {
    pub fn zeros(input: usize, classes: usize) -> Self {
        PooledParams {
            w_p: DenseMatrix::zeros(classes, 2 * input),
            b_p: DenseVector::zeros(classes),
        }
    }

    /// Uniform init scaled by the fan-in (2n); there is no hidden layer.
    pub fn init(input: usize, classes: usize, prng: &mut Prng) -> Self {
        let mut p = Self::zeros(input, classes);
        let bound = 1.0 / (2.0 * input as f64).sqrt();
        for v in p.w_p.as_mut_slice() {
            *v = prng.uniform(-bound, bound);
        }
        p
    }

    pub fn input_dim(&self) -> usize {
        self.w_p.cols() / 2
    }

    pub fn classes(&self) -> usize {
        self.w_p.rows()
    }
}

/// Mean of the concatenated per-frame features over the first `prefix_len`
/// timesteps.
pub fn pooled_mean(pair: &SequencePair, prefix_len: usize) -> DenseVector {
    let mut mean = DenseVector::zeros(2 * pair.input_dim());
    for t in 0..prefix_len {
        mean.add_assign(&pair.a[t].concat(&pair.b[t]));
    }
    mean.scale(1.0 / prefix_len as f64)
}

/// Logits of the pooled classifier over the full pair.
pub fn pooled_baseline(p: &PooledParams, pair: &SequencePair) -> Result<DenseVector> {
    linear(&p.w_p, &pooled_mean(pair, pair.seq_len()), &p.b_p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn const_pair(xa: Vec<f64>, xb: Vec<f64>, t: usize) -> SequencePair {
        SequencePair::new(
            vec![DenseVector::from_vec(xa); t],
            vec![DenseVector::from_vec(xb); t],
            0,
        )
        .unwrap()
    }

    #[test]
    fn constant_sequence_equals_single_frame() {
        let pair_long = const_pair(vec![1.0, -2.0], vec![0.5, 3.0], 7);
        let pair_single = const_pair(vec![1.0, -2.0], vec![0.5, 3.0], 1);
        let mut prng = Prng::new(1);
        let p = PooledParams::init(2, 3, &mut prng);
        let z7 = pooled_baseline(&p, &pair_long).unwrap();
        let z1 = pooled_baseline(&p, &pair_single).unwrap();
        for (a, b) in z7.iter().zip(z1.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_weights_yield_bias() {
        let mut p = PooledParams::zeros(2, 3);
        p.b_p = DenseVector::from_vec(vec![0.1, -0.2, 0.3]);
        let pair = const_pair(vec![5.0, 5.0], vec![-5.0, 5.0], 4);
        let z = pooled_baseline(&p, &pair).unwrap();
        assert_eq!(z.as_slice(), &[0.1, -0.2, 0.3]);
    }

    #[test]
    fn hand_computed_means() {
        // T=2, scalar streams a=(1,3), b=(0,2): means (2,1), identity W.
        let pair = SequencePair::new(
            vec![
                DenseVector::from_vec(vec![1.0]),
                DenseVector::from_vec(vec![3.0]),
            ],
            vec![
                DenseVector::from_vec(vec![0.0]),
                DenseVector::from_vec(vec![2.0]),
            ],
            0,
        )
        .unwrap();
        let mut p = PooledParams::zeros(1, 2);
        p.w_p = DenseMatrix::identity(2);
        let z = pooled_baseline(&p, &pair).unwrap();
        assert_eq!(z.as_slice(), &[2.0, 1.0]);
    }
}
