use crate::cells::{RnnParams, SequencePair};
use crate::model::RnnForward;
use crate::numkernel::DenseVector;

use super::{head_deltas, BpttMode};

/// Gradient of the mean per-timestep NLL for the vanilla RNN. In truncated
/// mode no error crosses the hidden-state recurrence, so every timestep is
/// driven only by its own head term.
pub(super) fn backward(
    p: &RnnParams,
    pair: &SequencePair,
    fwd: &RnnForward,
    mode: BpttMode,
    scale: f64,
) -> RnnParams {
    let steps = fwd.hidden.len();
    let m = p.hidden_dim();
    let dz = head_deltas(&fwd.logits, pair.label, scale);

    let mut g = RnnParams::zeros(p.input_dim(), m, p.classes());
    let mut dh_rec = DenseVector::zeros(m);
    let zero_h = DenseVector::zeros(m);

    for t in (0..steps).rev() {
        let h_t = &fwd.hidden[t];
        g.w_zh.add_outer(&dz[t], h_t);
        g.b_z.add_assign(&dz[t]);

        let mut dh = p.w_zh.matvec_transpose(&dz[t]);
        dh.add_assign(&dh_rec);

        // through tanh
        let dpre = DenseVector::from_vec(
            dh.iter()
                .zip(h_t.iter())
                .map(|(d, h)| d * (1.0 - h * h))
                .collect(),
        );

        let x_t = pair.a[t].concat(&pair.b[t]);
        let h_prev = if t == 0 { &zero_h } else { &fwd.hidden[t - 1] };
        g.w_hx.add_outer(&dpre, &x_t);
        g.w_hh.add_outer(&dpre, h_prev);
        g.b_h.add_assign(&dpre);

        dh_rec = match mode {
            BpttMode::Full => p.w_hh.matvec_transpose(&dpre),
            BpttMode::Truncated => DenseVector::zeros(m),
        };
    }
    g
}
