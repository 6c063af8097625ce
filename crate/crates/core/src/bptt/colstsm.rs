use crate::cells::{CoLstsmParams, SubMemoryParams};
use crate::model::CoLstsmForward;
use crate::numkernel::{DenseMatrix, DenseVector};

use super::{head_deltas, BpttMode};

/// Per-person pieces of one backward step.
struct SubGradStep {
    dipre: DenseVector,
    dfpre: DenseVector,
    dgpre: DenseVector,
    dpipre: DenseVector,
}

fn sub_backward(
    dc_total: &DenseVector,
    dc_carry: &DenseVector,
    pi: &DenseVector,
    c_sub: &DenseVector,
    c_prev: &DenseVector,
    i: &DenseVector,
    f: &DenseVector,
    g: &DenseVector,
) -> (SubGradStep, DenseVector) {
    let m = dc_total.len();
    let mut dipre = DenseVector::zeros(m);
    let mut dfpre = DenseVector::zeros(m);
    let mut dgpre = DenseVector::zeros(m);
    let mut dpipre = DenseVector::zeros(m);
    let mut dc_sub = DenseVector::zeros(m);
    for idx in 0..m {
        // co-memory fusion: c = pi_a.c_a + pi_b.c_b
        let dpi = dc_total[idx] * c_sub[idx];
        dpipre.as_mut_slice()[idx] = dpi * pi[idx] * (1.0 - pi[idx]);
        let dc = dc_total[idx] * pi[idx] + dc_carry[idx];
        dc_sub.as_mut_slice()[idx] = dc;
        dipre.as_mut_slice()[idx] = dc * g[idx] * i[idx] * (1.0 - i[idx]);
        dfpre.as_mut_slice()[idx] = dc * c_prev[idx] * f[idx] * (1.0 - f[idx]);
        dgpre.as_mut_slice()[idx] = dc * i[idx] * (1.0 - g[idx] * g[idx]);
    }
    (
        SubGradStep {
            dipre,
            dfpre,
            dgpre,
            dpipre,
        },
        dc_sub,
    )
}

fn accumulate_sub(
    g: &mut SubMemoryParams,
    step: &SubGradStep,
    x: &DenseVector,
    h_prev: &DenseVector,
) {
    g.w_ix.add_outer(&step.dipre, x);
    g.w_ih.add_outer(&step.dipre, h_prev);
    g.b_i.add_assign(&step.dipre);
    g.w_fx.add_outer(&step.dfpre, x);
    g.w_fh.add_outer(&step.dfpre, h_prev);
    g.b_f.add_assign(&step.dfpre);
    g.w_gx.add_outer(&step.dgpre, x);
    g.w_gh.add_outer(&step.dgpre, h_prev);
    g.b_g.add_assign(&step.dgpre);
    g.w_pi_x.add_outer(&step.dpipre, x);
}

fn sub_hidden_feedback(p: &SubMemoryParams, step: &SubGradStep) -> DenseVector {
    let mut acc = p.w_ih.matvec_transpose(&step.dipre);
    acc.add_assign(&p.w_fh.matvec_transpose(&step.dfpre));
    acc.add_assign(&p.w_gh.matvec_transpose(&step.dgpre));
    acc
}

/// Gradient of the mean per-timestep NLL for the concurrent unit. Error
/// reaches a timestep through the head, through the hidden recurrence (full
/// mode only), and through the two sub-cell chains, which stay live in both
/// modes; the co-memory cell itself has no recurrence of its own.
pub(super) fn backward(
    p: &CoLstsmParams,
    label: usize,
    fwd: &CoLstsmForward,
    mode: BpttMode,
    scale: f64,
) -> CoLstsmParams {
    let steps = fwd.steps.len();
    let m = p.hidden_dim();
    let dz = head_deltas(&fwd.logits, label, scale);

    let mut g = CoLstsmParams::zeros(p.input_dim(), m, p.classes());
    let mut dh_rec = DenseVector::zeros(m);
    let mut dca_carry = DenseVector::zeros(m);
    let mut dcb_carry = DenseVector::zeros(m);

    for t in (0..steps).rev() {
        let st = &fwd.steps[t];
        g.w_zh.add_outer(&dz[t], &st.h);
        g.b_z.add_assign(&dz[t]);

        let mut dh = p.w_zh.matvec_transpose(&dz[t]);
        dh.add_assign(&dh_rec);

        // h = o . tanh(c)
        let mut dopre = DenseVector::zeros(m);
        let mut dc = DenseVector::zeros(m);
        for idx in 0..m {
            let do_raw = dh[idx] * st.tanh_c[idx];
            dopre.as_mut_slice()[idx] = do_raw * st.o[idx] * (1.0 - st.o[idx]);
            dc.as_mut_slice()[idx] = dh[idx] * st.o[idx] * (1.0 - st.tanh_c[idx] * st.tanh_c[idx]);
        }

        let (step_a, dca) = sub_backward(
            &dc, &dca_carry, &st.pi_a, &st.c_a, &st.ca_prev, &st.i_a, &st.f_a, &st.g_a,
        );
        let (step_b, dcb) = sub_backward(
            &dc, &dcb_carry, &st.pi_b, &st.c_b, &st.cb_prev, &st.i_b, &st.f_b, &st.g_b,
        );

        accumulate_sub(&mut g.sub_a, &step_a, &st.x_a, &st.h_prev);
        accumulate_sub(&mut g.sub_b, &step_b, &st.x_b, &st.h_prev);

        // shared cell-gate hidden weights and bias collect both persons
        g.w_pi_h.add_outer(&step_a.dpipre, &st.h_prev);
        g.w_pi_h.add_outer(&step_b.dpipre, &st.h_prev);
        g.b_pi.add_assign(&step_a.dpipre);
        g.b_pi.add_assign(&step_b.dpipre);

        // common output gate over [x_a; x_b]
        add_outer_concat(&mut g.w_ox, &dopre, &st.x_a, &st.x_b);
        g.w_oh.add_outer(&dopre, &st.h_prev);
        g.b_o.add_assign(&dopre);

        dh_rec = match mode {
            BpttMode::Full => {
                let mut acc = sub_hidden_feedback(&p.sub_a, &step_a);
                acc.add_assign(&sub_hidden_feedback(&p.sub_b, &step_b));
                acc.add_assign(&p.w_pi_h.matvec_transpose(&step_a.dpipre));
                acc.add_assign(&p.w_pi_h.matvec_transpose(&step_b.dpipre));
                acc.add_assign(&p.w_oh.matvec_transpose(&dopre));
                acc
            }
            BpttMode::Truncated => DenseVector::zeros(m),
        };
        dca_carry = dca.hadamard(&st.f_a);
        dcb_carry = dcb.hadamard(&st.f_b);
    }
    g
}

/// W += u ⊗ [left; right] without materializing the concatenation.
fn add_outer_concat(
    w: &mut DenseMatrix,
    u: &DenseVector,
    left: &DenseVector,
    right: &DenseVector,
) {
    let n = left.len();
    for r in 0..w.rows() {
        let ur = u[r];
        for j in 0..n {
            let cur = w.get(r, j);
            w.set(r, j, cur + ur * left[j]);
        }
        for j in 0..n {
            let cur = w.get(r, n + j);
            w.set(r, n + j, cur + ur * right[j]);
        }
    }
}
