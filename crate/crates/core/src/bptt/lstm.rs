use crate::cells::LstmParams;
use crate::model::LstmForward;
use crate::numkernel::DenseVector;

use super::{head_deltas, BpttMode};

/// Gradient of the mean per-timestep NLL for a single LSTM over the inputs
/// recorded in its step caches. Truncated mode drops the error flowing
/// through h_{t-1} into the gate pre-activations but keeps the additive
/// cell chain c_t -> c_{t-1} alive (the constant-error carousel).
pub(super) fn backward(
    p: &LstmParams,
    label: usize,
    fwd: &LstmForward,
    mode: BpttMode,
    scale: f64,
) -> LstmParams {
    let steps = fwd.steps.len();
    let m = p.hidden_dim();
    let dz = head_deltas(&fwd.logits, label, scale);

    let mut g = LstmParams::zeros(p.input_dim(), m, p.classes());
    let mut dh_rec = DenseVector::zeros(m);
    let mut dc_carry = DenseVector::zeros(m);

    for t in (0..steps).rev() {
        let st = &fwd.steps[t];
        g.w_zh.add_outer(&dz[t], &st.h);
        g.b_z.add_assign(&dz[t]);

        let mut dh = p.w_zh.matvec_transpose(&dz[t]);
        dh.add_assign(&dh_rec);

        let mut dopre = DenseVector::zeros(m);
        let mut dc = DenseVector::zeros(m);
        for idx in 0..m {
            let do_raw = dh[idx] * st.tanh_c[idx];
            dopre.as_mut_slice()[idx] = do_raw * st.o[idx] * (1.0 - st.o[idx]);
            dc.as_mut_slice()[idx] =
                dh[idx] * st.o[idx] * (1.0 - st.tanh_c[idx] * st.tanh_c[idx]) + dc_carry[idx];
        }

        let mut dipre = DenseVector::zeros(m);
        let mut dfpre = DenseVector::zeros(m);
        let mut dgpre = DenseVector::zeros(m);
        for idx in 0..m {
            dipre.as_mut_slice()[idx] = dc[idx] * st.g[idx] * st.i[idx] * (1.0 - st.i[idx]);
            dfpre.as_mut_slice()[idx] = dc[idx] * st.c_prev[idx] * st.f[idx] * (1.0 - st.f[idx]);
            dgpre.as_mut_slice()[idx] = dc[idx] * st.i[idx] * (1.0 - st.g[idx] * st.g[idx]);
        }

        g.w_ix.add_outer(&dipre, &st.x);
        g.w_ih.add_outer(&dipre, &st.h_prev);
        g.b_i.add_assign(&dipre);
        g.w_fx.add_outer(&dfpre, &st.x);
        g.w_fh.add_outer(&dfpre, &st.h_prev);
        g.b_f.add_assign(&dfpre);
        g.w_gx.add_outer(&dgpre, &st.x);
        g.w_gh.add_outer(&dgpre, &st.h_prev);
        g.b_g.add_assign(&dgpre);
        g.w_ox.add_outer(&dopre, &st.x);
        g.w_oh.add_outer(&dopre, &st.h_prev);
        g.b_o.add_assign(&dopre);

        dh_rec = match mode {
            BpttMode::Full => {
                let mut acc = p.w_ih.matvec_transpose(&dipre);
                acc.add_assign(&p.w_fh.matvec_transpose(&dfpre));
                acc.add_assign(&p.w_gh.matvec_transpose(&dgpre));
                acc.add_assign(&p.w_oh.matvec_transpose(&dopre));
                acc
            }
            BpttMode::Truncated => DenseVector::zeros(m),
        };
        dc_carry = dc.hadamard(&st.f);
    }
    g
}
