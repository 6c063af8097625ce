//! The concurrent LSTM unit: two per-person sub-memory units whose cells are
//! fused by gated summation into a co-memory cell, behind a common output
//! gate acting on both inputs.
//!
//! Unlike a standard LSTM cell the co-memory cell has no self-recurrence;
//! recurrence lives entirely in the two sub-cells and the shared hidden
//! state.

use crate::error::Result;
use crate::numkernel::{affine, sigmoid, tanh_act, DenseMatrix, DenseVector, Prng};

/// Gate and cell parameters of one sub-memory unit.
#[derive(Debug, Clone, PartialEq)]
pub struct SubMemoryParams {
    pub w_ix: DenseMatrix,
    pub w_ih: DenseMatrix,
    pub b_i: DenseVector,
    pub w_fx: DenseMatrix,
    pub w_fh: DenseMatrix,
    pub b_f: DenseVector,
    pub w_gx: DenseMatrix,
    pub w_gh: DenseMatrix,
    pub b_g: DenseVector,
    /// Input half of the cell gate; the hidden half and bias are shared
    /// between the two sub-memories and live on `CoLstsmParams`.
    pub w_pi_x: DenseMatrix,
}

impl SubMemoryParams {
    fn zeros(input: usize, hidden: usize) -> Self {
        SubMemoryParams {
            w_ix: DenseMatrix::zeros(hidden, input),
            w_ih: DenseMatrix::zeros(hidden, hidden),
            b_i: DenseVector::zeros(hidden),
            w_fx: DenseMatrix::zeros(hidden, input),
            w_fh: DenseMatrix::zeros(hidden, hidden),
            b_f: DenseVector::zeros(hidden),
            w_gx: DenseMatrix::zeros(hidden, input),
            w_gh: DenseMatrix::zeros(hidden, hidden),
            b_g: DenseVector::zeros(hidden),
            w_pi_x: DenseMatrix::zeros(hidden, input),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoLstsmParams {
    pub sub_a: SubMemoryParams,
    pub sub_b: SubMemoryParams,
    /// Shared hidden weights and bias of the two cell gates.
    pub w_pi_h: DenseMatrix,
    pub b_pi: DenseVector,
    /// Common output gate over the concatenated inputs [x_a; x_b].
    pub w_ox: DenseMatrix,
    pub w_oh: DenseMatrix,
    pub b_o: DenseVector,
    pub w_zh: DenseMatrix,
    pub b_z: DenseVector,
}

impl CoLstsmParams {
    pub fn zeros(input: usize, hidden: usize, classes: usize) -> Self {
        CoLstsmParams {
            sub_a: SubMemoryParams::zeros(input, hidden),
            sub_b: SubMemoryParams::zeros(input, hidden),
            w_pi_h: DenseMatrix::zeros(hidden, hidden),
            b_pi: DenseVector::zeros(hidden),
            w_ox: DenseMatrix::zeros(hidden, 2 * input),
            w_oh: DenseMatrix::zeros(hidden, hidden),
            b_o: DenseVector::zeros(hidden),
            w_zh: DenseMatrix::zeros(classes, hidden),
            b_z: DenseVector::zeros(classes),
        }
    }

    /// Uniform init on [-1/sqrt(m), 1/sqrt(m)] for all weight matrices;
    /// both forget-gate biases start at 1.0, every other bias at zero.
    pub fn init(input: usize, hidden: usize, classes: usize, prng: &mut Prng) -> Self {
        let mut p = Self::zeros(input, hidden, classes);
        let bound = 1.0 / (hidden as f64).sqrt();
        {
            let mats: Vec<&mut DenseMatrix> = vec![
                &mut p.sub_a.w_ix,
                &mut p.sub_a.w_ih,
                &mut p.sub_a.w_fx,
                &mut p.sub_a.w_fh,
                &mut p.sub_a.w_gx,
                &mut p.sub_a.w_gh,
                &mut p.sub_a.w_pi_x,
                &mut p.sub_b.w_ix,
                &mut p.sub_b.w_ih,
                &mut p.sub_b.w_fx,
                &mut p.sub_b.w_fh,
                &mut p.sub_b.w_gx,
                &mut p.sub_b.w_gh,
                &mut p.sub_b.w_pi_x,
                &mut p.w_pi_h,
                &mut p.w_ox,
                &mut p.w_oh,
                &mut p.w_zh,
            ];
            for w in mats {
                for v in w.as_mut_slice() {
                    *v = prng.uniform(-bound, bound);
                }
            }
        }
        for v in p.sub_a.b_f.as_mut_slice() {
            *v = 1.0;
        }
        for v in p.sub_b.b_f.as_mut_slice() {
            *v = 1.0;
        }
        p
    }

    pub fn input_dim(&self) -> usize {
        self.sub_a.w_ix.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.sub_a.w_ix.rows()
    }

    pub fn classes(&self) -> usize {
        self.w_zh.rows()
    }
}

/// Per-timestep activations retained for the backward pass.
#[derive(Debug, Clone)]
pub struct CoLstsmStepCache {
    pub x_a: DenseVector,
    pub x_b: DenseVector,
    pub h_prev: DenseVector,
    pub ca_prev: DenseVector,
    pub cb_prev: DenseVector,
    pub i_a: DenseVector,
    pub i_b: DenseVector,
    pub f_a: DenseVector,
    pub f_b: DenseVector,
    pub g_a: DenseVector,
    pub g_b: DenseVector,
    pub c_a: DenseVector,
    pub c_b: DenseVector,
    pub pi_a: DenseVector,
    pub pi_b: DenseVector,
    pub o: DenseVector,
    pub c: DenseVector,
    pub tanh_c: DenseVector,
    pub h: DenseVector,
}

/// Output-gate pre-activation. The product over [x_a; x_b] is evaluated
/// block by block and the two partial sums added afterwards, so exchanging
/// the two people (inputs, per-person parameters, and the column blocks of
/// `w_ox`) reproduces h_t bit for bit.
fn output_gate_pre(
    w_ox: &DenseMatrix,
    x_a: &DenseVector,
    x_b: &DenseVector,
    w_oh: &DenseMatrix,
    h_prev: &DenseVector,
    b_o: &DenseVector,
) -> Result<DenseVector> {
    let n = x_a.len();
    if w_ox.cols() != 2 * n {
        return Err(crate::error::Error::dims(format!(
            "output gate: W_ox is {}x{} but inputs concatenate to length {}",
            w_ox.rows(),
            w_ox.cols(),
            2 * n
        )));
    }
    let uh = w_oh.matvec(h_prev);
    let m = w_ox.rows();
    let mut out = Vec::with_capacity(m);
    for r in 0..m {
        let mut left = 0.0;
        let mut right = 0.0;
        for j in 0..n {
            left += w_ox.get(r, j) * x_a[j];
        }
        for j in 0..n {
            right += w_ox.get(r, n + j) * x_b[j];
        }
        out.push((left + right) + uh[r] + b_o[r]);
    }
    Ok(DenseVector::from_vec(out))
}

/// One concurrent step, in order: per-person input/forget gates, sub-cell
/// updates, cell gates, co-memory fusion, common output gate, hidden state.
pub fn colstsm_step(
    p: &CoLstsmParams,
    x_a: &DenseVector,
    x_b: &DenseVector,
    h_prev: &DenseVector,
    ca_prev: &DenseVector,
    cb_prev: &DenseVector,
) -> Result<(DenseVector, DenseVector, DenseVector, CoLstsmStepCache)> {
    // 1. input and forget gates of both sub-memories
    let i_a = sigmoid(&affine(&p.sub_a.w_ix, x_a, &p.sub_a.w_ih, h_prev, &p.sub_a.b_i)?);
    let i_b = sigmoid(&affine(&p.sub_b.w_ix, x_b, &p.sub_b.w_ih, h_prev, &p.sub_b.b_i)?);
    let f_a = sigmoid(&affine(&p.sub_a.w_fx, x_a, &p.sub_a.w_fh, h_prev, &p.sub_a.b_f)?);
    let f_b = sigmoid(&affine(&p.sub_b.w_fx, x_b, &p.sub_b.w_fh, h_prev, &p.sub_b.b_f)?);

    // 2. candidate activations and sub-cell updates
    let g_a = tanh_act(&affine(&p.sub_a.w_gx, x_a, &p.sub_a.w_gh, h_prev, &p.sub_a.b_g)?);
    let g_b = tanh_act(&affine(&p.sub_b.w_gx, x_b, &p.sub_b.w_gh, h_prev, &p.sub_b.b_g)?);
    let c_a = f_a.hadamard(ca_prev).add(&i_a.hadamard(&g_a));
    let c_b = f_b.hadamard(cb_prev).add(&i_b.hadamard(&g_b));

    // 3. cell gates (hidden weights and bias shared between the two)
    let pi_a = sigmoid(&affine(&p.sub_a.w_pi_x, x_a, &p.w_pi_h, h_prev, &p.b_pi)?);
    let pi_b = sigmoid(&affine(&p.sub_b.w_pi_x, x_b, &p.w_pi_h, h_prev, &p.b_pi)?);

    // 4. co-memory cell
    let c = pi_a.hadamard(&c_a).add(&pi_b.hadamard(&c_b));

    // 5. common output gate over both inputs
    let o = sigmoid(&output_gate_pre(&p.w_ox, x_a, x_b, &p.w_oh, h_prev, &p.b_o)?);

    // 6. hidden state
    let tanh_c = tanh_act(&c);
    let h = o.hadamard(&tanh_c);

    let cache = CoLstsmStepCache {
        x_a: x_a.clone(),
        x_b: x_b.clone(),
        h_prev: h_prev.clone(),
        ca_prev: ca_prev.clone(),
        cb_prev: cb_prev.clone(),
        i_a,
        i_b,
        f_a,
        f_b,
        g_a,
        g_b,
        c_a: c_a.clone(),
        c_b: c_b.clone(),
        pi_a,
        pi_b,
        o,
        c: c.clone(),
        tanh_c,
        h: h.clone(),
    };
    Ok((h, c_a, c_b, cache))
}

/// Builds the person-swapped parameter set: sub-memories exchanged and the
/// two column blocks of the output-gate input weights swapped.
pub fn swap_persons(p: &CoLstsmParams) -> CoLstsmParams {
    let n = p.input_dim();
    let m = p.hidden_dim();
    let mut w_ox = DenseMatrix::zeros(m, 2 * n);
    for r in 0..m {
        for j in 0..n {
            w_ox.set(r, j, p.w_ox.get(r, n + j));
            w_ox.set(r, n + j, p.w_ox.get(r, j));
        }
    }
    CoLstsmParams {
        sub_a: p.sub_b.clone(),
        sub_b: p.sub_a.clone(),
        w_pi_h: p.w_pi_h.clone(),
        b_pi: p.b_pi.clone(),
        w_ox,
        w_oh: p.w_oh.clone(),
        b_o: p.b_o.clone(),
        w_zh: p.w_zh.clone(),
        b_z: p.b_z.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_vec(len: usize, prng: &mut Prng, scale: f64) -> DenseVector {
        DenseVector::from_vec((0..len).map(|_| prng.gaussian() * scale).collect())
    }

    #[test]
    fn zero_params_are_a_fixed_point() {
        let p = CoLstsmParams::zeros(2, 3, 2);
        let z2 = DenseVector::zeros(2);
        let z3 = DenseVector::zeros(3);
        let (h, ca, cb, _) = colstsm_step(&p, &z2, &z2, &z3, &z3, &z3).unwrap();
        assert_eq!(h.as_slice(), &[0.0; 3]);
        assert_eq!(ca.as_slice(), &[0.0; 3]);
        assert_eq!(cb.as_slice(), &[0.0; 3]);
    }

    #[test]
    fn scalar_step_hand_computed() {
        // Zero params, ca_prev = 2, cb_prev = 0: every gate sits at 0.5,
        // both candidates at 0, so ca = 1, cb = 0, c = 0.5, h = 0.5*tanh(0.5).
        let p = CoLstsmParams::zeros(1, 1, 1);
        let z = DenseVector::zeros(1);
        let (h, ca, cb, cache) = colstsm_step(
            &p,
            &z,
            &z,
            &z,
            &DenseVector::from_vec(vec![2.0]),
            &z,
        )
        .unwrap();
        assert_eq!(ca[0], 1.0);
        assert_eq!(cb[0], 0.0);
        assert_eq!(cache.c[0], 0.5);
        assert!((h[0] - 0.23105857863000487).abs() < 1e-15);
    }

    #[test]
    fn relabeling_symmetry_is_bitwise() {
        let mut prng = Prng::new(99);
        let p = CoLstsmParams::init(3, 4, 2, &mut prng);
        let swapped = swap_persons(&p);

        let x_a = random_vec(3, &mut prng, 1.0);
        let x_b = random_vec(3, &mut prng, 1.0);
        let h_prev = random_vec(4, &mut prng, 0.5);
        let ca_prev = random_vec(4, &mut prng, 0.5);
        let cb_prev = random_vec(4, &mut prng, 0.5);

        let (h1, ca1, cb1, _) = colstsm_step(&p, &x_a, &x_b, &h_prev, &ca_prev, &cb_prev).unwrap();
        let (h2, ca2, cb2, _) =
            colstsm_step(&swapped, &x_b, &x_a, &h_prev, &cb_prev, &ca_prev).unwrap();

        for (u, v) in h1.iter().zip(h2.iter()) {
            assert_eq!(u.to_bits(), v.to_bits());
        }
        for (u, v) in ca1.iter().zip(cb2.iter()) {
            assert_eq!(u.to_bits(), v.to_bits());
        }
        for (u, v) in cb1.iter().zip(ca2.iter()) {
            assert_eq!(u.to_bits(), v.to_bits());
        }
    }

    #[test]
    fn tied_parameters_collapse_to_one_stream() {
        let mut prng = Prng::new(5);
        let mut p = CoLstsmParams::init(2, 3, 2, &mut prng);
        p.sub_b = p.sub_a.clone();
        let x = random_vec(2, &mut prng, 1.0);
        let h_prev = random_vec(3, &mut prng, 0.5);
        let c_prev = random_vec(3, &mut prng, 0.5);
        let (_, ca, cb, cache) = colstsm_step(&p, &x, &x, &h_prev, &c_prev, &c_prev).unwrap();
        assert_eq!(ca.as_slice(), cb.as_slice());
        assert_eq!(cache.pi_a.as_slice(), cache.pi_b.as_slice());
    }

    #[test]
    fn gate_ranges_and_co_memory_bound() {
        let mut prng = Prng::new(17);
        for _ in 0..50 {
            let p = CoLstsmParams::init(2, 3, 2, &mut prng);
            let x_a = random_vec(2, &mut prng, 2.0);
            let x_b = random_vec(2, &mut prng, 2.0);
            let h_prev = random_vec(3, &mut prng, 0.8);
            let ca_prev = random_vec(3, &mut prng, 1.0);
            let cb_prev = random_vec(3, &mut prng, 1.0);
            let (h, _, _, cache) =
                colstsm_step(&p, &x_a, &x_b, &h_prev, &ca_prev, &cb_prev).unwrap();
            for gate in [&cache.i_a, &cache.i_b, &cache.f_a, &cache.f_b, &cache.pi_a,
                         &cache.pi_b, &cache.o] {
                for v in gate.iter() {
                    assert!(*v > 0.0 && *v < 1.0);
                }
            }
            for v in h.iter() {
                assert!(*v > -1.0 && *v < 1.0);
            }
            // |c| <= |c_a| + |c_b| componentwise since both gates are < 1
            for idx in 0..3 {
                assert!(
                    cache.c[idx].abs() <= cache.c_a[idx].abs() + cache.c_b[idx].abs() + 1e-15
                );
            }
            // fusion identity holds exactly as stored
            for idx in 0..3 {
                let expect = cache.pi_a[idx] * cache.c_a[idx] + cache.pi_b[idx] * cache.c_b[idx];
                assert_eq!(cache.c[idx].to_bits(), expect.to_bits());
            }
        }
    }
}
