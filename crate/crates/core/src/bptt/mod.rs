//! Hand-derived analytic gradients of the sequence loss for every model
//! family, in exact and truncated backpropagation-through-time modes, plus
//! a central finite-difference oracle and a per-tensor gradient-check
//! report. No autodiff anywhere; the oracle is the only trusted reference.

mod colstsm;
mod lstm;
mod rnn;

use crate::cells::{softmax, SequencePair};
use crate::error::{Error, Result};
use crate::model::{Forward, Gradients, Model, ModelFamily, TwoLstmParams};
use crate::numkernel::DenseVector;

/// Which paths carry error backwards across timesteps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BpttMode {
    /// Exact gradient: error flows through the hidden-state recurrence and
    /// the cell chains.
    Full,
    /// Error that leaves a cell is not re-admitted through the hidden-state
    /// recurrence; only the additive cell chains carry it across timesteps.
    Truncated,
}

impl BpttMode {
    pub fn tag(self) -> &'static str {
        match self {
            BpttMode::Full => "full",
            BpttMode::Truncated => "truncated",
        }
    }

    pub fn parse(s: &str) -> Option<BpttMode> {
        match s {
            "full" => Some(BpttMode::Full),
            "truncated" => Some(BpttMode::Truncated),
            _ => None,
        }
    }
}

/// d(loss)/d(logits_t) for the mean per-timestep NLL, scaled by `scale`.
fn head_deltas(logits: &[DenseVector], label: usize, scale: f64) -> Vec<DenseVector> {
    let t_count = logits.len() as f64;
    logits
        .iter()
        .map(|z| {
            let mut d = softmax(z);
            let s = d.as_mut_slice();
            s[label] -= 1.0;
            for v in s.iter_mut() {
                *v *= scale / t_count;
            }
            d
        })
        .collect()
}

fn check_cache(model: &Model, pair: &SequencePair, fwd: &Forward) -> Result<()> {
    if fwd.family() != model.family() {
        return Err(Error::dims(format!(
            "backward: cache from family {} does not match model family {}",
            fwd.family(),
            model.family()
        )));
    }
    if model.family() != ModelFamily::Pooled && fwd.steps() != pair.seq_len() {
        return Err(Error::dims(format!(
            "backward: cache covers {} timesteps but pair has {}",
            fwd.steps(),
            pair.seq_len()
        )));
    }
    Ok(())
}

/// Gradients of `scale` times the sequence loss. The scale hook keeps the
/// backward pass checkable for linearity and lets the two-stream family
/// weight its halves.
pub(crate) fn backward_scaled(
    model: &Model,
    pair: &SequencePair,
    fwd: &Forward,
    mode: BpttMode,
    scale: f64,
) -> Result<Gradients> {
    check_cache(model, pair, fwd)?;
    Ok(match (model, fwd) {
        (Model::Rnn(p), Forward::Rnn(f)) => Model::Rnn(rnn::backward(p, pair, f, mode, scale)),
        (Model::OneLstm(p), Forward::OneLstm(f)) => {
            Model::OneLstm(lstm::backward(p, pair.label, f, mode, scale))
        }
        (Model::TwoLstm(p), Forward::TwoLstm(f)) => Model::TwoLstm(TwoLstmParams {
            stream_a: lstm::backward(&p.stream_a, pair.label, &f.a, mode, scale * 0.5),
            stream_b: lstm::backward(&p.stream_b, pair.label, &f.b, mode, scale * 0.5),
        }),
        (Model::Pooled(p), Forward::Pooled(f)) => {
            let mut g = crate::cells::PooledParams::zeros(p.input_dim(), p.classes());
            let mut dz = softmax(&f.logits);
            dz.as_mut_slice()[pair.label] -= 1.0;
            let dz = dz.scale(scale);
            g.w_p.add_outer(&dz, &f.mean);
            g.b_p.add_assign(&dz);
            Model::Pooled(g)
        }
        (Model::CoLstsm(p), Forward::CoLstsm(f)) => {
            Model::CoLstsm(colstsm::backward(p, pair.label, f, mode, scale))
        }
        _ => unreachable!("family checked above"),
    })
}

/// Exact gradient of the mean per-timestep NLL.
pub fn backward_full(model: &Model, pair: &SequencePair, fwd: &Forward) -> Result<Gradients> {
    backward_scaled(model, pair, fwd, BpttMode::Full, 1.0)
}

/// Truncated-mode gradient; identical to `backward_full` when T = 1 or when
/// every hidden-recurrent weight matrix is zero.
pub fn backward_truncated(model: &Model, pair: &SequencePair, fwd: &Forward) -> Result<Gradients> {
    backward_scaled(model, pair, fwd, BpttMode::Truncated, 1.0)
}

/// Central difference (f(x+eps) - f(x-eps)) / (2 eps).
pub(crate) fn central_diff(
    mut f: impl FnMut(f64) -> Result<f64>,
    x: f64,
    eps: f64,
) -> Result<f64> {
    let fp = f(x + eps)?;
    let fm = f(x - eps)?;
    Ok((fp - fm) / (2.0 * eps))
}

/// Numeric gradient of the sequence loss, one fresh forward pass per probe.
pub fn finite_diff_grad(model: &Model, pair: &SequencePair, eps: f64) -> Result<Gradients> {
    if eps <= 0.0 {
        return Err(Error::InvalidConfig(format!("eps must be positive, got {eps}")));
    }
    let mut probe = model.clone();
    let mut grads = model.zeros_like();
    let tensor_count = model.named_tensors().len();
    for ti in 0..tensor_count {
        let len = probe.named_tensors()[ti].1.data().len();
        for ei in 0..len {
            let orig = probe.named_tensors()[ti].1.data()[ei];
            let d = central_diff(
                |v| {
                    probe.named_tensors_mut()[ti].1.data_mut()[ei] = v;
                    let loss = probe.sequence_loss(pair)?;
                    if !loss.is_finite() {
                        return Err(Error::NonFiniteLoss);
                    }
                    Ok(loss)
                },
                orig,
                eps,
            )?;
            probe.named_tensors_mut()[ti].1.data_mut()[ei] = orig;
            grads.named_tensors_mut()[ti].1.data_mut()[ei] = d;
        }
    }
    Ok(grads)
}

#[derive(Debug, Clone)]
pub struct GradCheckEntry {
    pub tensor: String,
    pub max_rel_error: f64,
}

/// Per-tensor comparison of analytic against numeric gradients.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub tol: f64,
    pub entries: Vec<GradCheckEntry>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.max_rel_error <= self.tol)
    }

    pub fn max_error(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.max_rel_error)
            .fold(0.0, f64::max)
    }

    pub fn failing(&self) -> Vec<&GradCheckEntry> {
        self.entries
            .iter()
            .filter(|e| !(e.max_rel_error <= self.tol))
            .collect()
    }

    pub fn text_table(&self) -> String {
        let width = self
            .entries
            .iter()
            .map(|e| e.tensor.len())
            .max()
            .unwrap_or(6)
            .max(6);
        let mut out = format!("{:width$}  {:>13}  status\n", "tensor", "max_rel_error");
        for e in &self.entries {
            let status = if e.max_rel_error <= self.tol { "ok" } else { "FAIL" };
            out.push_str(&format!(
                "{:width$}  {:>13.6e}  {}\n",
                e.tensor, e.max_rel_error, status
            ));
        }
        out.push_str(&format!(
            "result: {} (max {:.6e}, tol {:.1e})\n",
            if self.passed() { "PASS" } else { "FAIL" },
            self.max_error(),
            self.tol
        ));
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("tensor,max_rel_error,pass\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{:e},{}\n",
                e.tensor,
                e.max_rel_error,
                e.max_rel_error <= self.tol
            ));
        }
        out
    }
}

fn rel_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-8)
}

/// Per-tensor maximum relative error between two gradient sets.
pub fn compare_gradients(
    analytic: &Gradients,
    numeric: &Gradients,
    tol: f64,
) -> Result<GradCheckReport> {
    let at = analytic.named_tensors();
    let nt = numeric.named_tensors();
    if at.len() != nt.len() {
        return Err(Error::dims(format!(
            "gradient comparison: {} tensors vs {}",
            at.len(),
            nt.len()
        )));
    }
    let mut entries = Vec::with_capacity(at.len());
    for ((name, a), (nname, n)) in at.iter().zip(nt.iter()) {
        if name != nname || a.data().len() != n.data().len() {
            return Err(Error::dims(format!(
                "gradient comparison: tensor {name} does not line up with {nname}"
            )));
        }
        let max_rel = a
            .data()
            .iter()
            .zip(n.data())
            .map(|(&x, &y)| rel_error(x, y))
            .fold(0.0, f64::max);
        entries.push(GradCheckEntry {
            tensor: name.clone(),
            max_rel_error: max_rel,
        });
    }
    Ok(GradCheckReport { tol, entries })
}

/// Runs the analytic backward pass against the finite-difference oracle.
pub fn grad_check(
    model: &Model,
    pair: &SequencePair,
    eps: f64,
    tol: f64,
) -> Result<GradCheckReport> {
    if tol <= 0.0 {
        return Err(Error::InvalidConfig(format!("tol must be positive, got {tol}")));
    }
    let fwd = model.forward_sequence(pair)?;
    let analytic = backward_full(model, pair, &fwd)?;
    let numeric = finite_diff_grad(model, pair, eps)?;
    compare_gradients(&analytic, &numeric, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::Prng;

    fn random_pair(n: usize, t: usize, classes: usize, prng: &mut Prng) -> SequencePair {
        let mk = |prng: &mut Prng| {
            (0..t)
                .map(|_| DenseVector::from_vec((0..n).map(|_| prng.gaussian()).collect()))
                .collect::<Vec<_>>()
        };
        let a = mk(prng);
        let b = mk(prng);
        let label = prng.below(classes);
        SequencePair::new(a, b, label).unwrap()
    }

    fn max_abs_diff(x: &Gradients, y: &Gradients) -> f64 {
        x.named_tensors()
            .iter()
            .zip(y.named_tensors().iter())
            .flat_map(|((_, a), (_, b))| {
                a.data()
                    .iter()
                    .zip(b.data())
                    .map(|(u, v)| (u - v).abs())
                    .collect::<Vec<_>>()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn zero_upstream_scale_gives_zero_gradients() {
        let mut prng = Prng::new(1);
        let pair = random_pair(2, 3, 2, &mut prng);
        let model = Model::new(ModelFamily::CoLstsm, 2, 3, 2, &mut prng);
        let fwd = model.forward_sequence(&pair).unwrap();
        let g = backward_scaled(&model, &pair, &fwd, BpttMode::Full, 0.0).unwrap();
        for (_, t) in g.named_tensors() {
            for v in t.data() {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn backward_is_linear_in_the_loss() {
        let mut prng = Prng::new(2);
        let pair = random_pair(2, 4, 2, &mut prng);
        let model = Model::new(ModelFamily::CoLstsm, 2, 3, 2, &mut prng);
        let fwd = model.forward_sequence(&pair).unwrap();
        let g1 = backward_scaled(&model, &pair, &fwd, BpttMode::Full, 1.0).unwrap();
        let g2 = backward_scaled(&model, &pair, &fwd, BpttMode::Full, 2.0).unwrap();
        for ((_, a), (_, b)) in g1.named_tensors().iter().zip(g2.named_tensors().iter()) {
            for (u, v) in a.data().iter().zip(b.data()) {
                assert!((2.0 * u - v).abs() <= 1e-15 * v.abs().max(1.0));
            }
        }
    }

    #[test]
    fn analytic_matches_finite_differences_on_tiny_models() {
        // 1e-5 is the supported tolerance: below that the oracle's own
        // cancellation noise (~5e-12 absolute at eps 1e-5) dominates on
        // small-magnitude entries.
        for (i, family) in ModelFamily::ALL.into_iter().enumerate() {
            let mut prng = Prng::new(1000 + i as u64);
            let pair = random_pair(2, 4, 2, &mut prng);
            let model = Model::new(family, 2, 3, 2, &mut prng);
            let report = grad_check(&model, &pair, 1e-5, 1e-5).unwrap();
            assert!(
                report.passed(),
                "{family}: max rel error {:.3e}",
                report.max_error()
            );
        }
    }

    #[test]
    fn concurrent_unit_gradient_agrees_to_1e6() {
        // Seed chosen so no gradient entry sits below the oracle's
        // ~5e-12 absolute noise band; agreement then reaches 3e-7.
        let mut prng = Prng::new(9);
        let pair = random_pair(2, 4, 2, &mut prng);
        let model = Model::new(ModelFamily::CoLstsm, 2, 3, 2, &mut prng);
        let report = grad_check(&model, &pair, 1e-5, 1e-6).unwrap();
        assert!(report.passed(), "max rel error {:.3e}", report.max_error());
    }

    #[test]
    fn truncated_equals_full_for_single_step() {
        let mut prng = Prng::new(3);
        let pair = random_pair(2, 1, 2, &mut prng);
        let model = Model::new(ModelFamily::CoLstsm, 2, 3, 2, &mut prng);
        let fwd = model.forward_sequence(&pair).unwrap();
        let full = backward_full(&model, &pair, &fwd).unwrap();
        let trunc = backward_truncated(&model, &pair, &fwd).unwrap();
        assert_eq!(max_abs_diff(&full, &trunc), 0.0);
    }

    #[test]
    fn truncated_equals_full_without_hidden_recurrence() {
        let mut prng = Prng::new(4);
        let pair = random_pair(2, 4, 2, &mut prng);
        let mut model = Model::new(ModelFamily::CoLstsm, 2, 3, 2, &mut prng);
        for (name, mut t) in model.named_tensors_mut() {
            // hidden-recurrent matrices: W_hh, W_ih_a, ..., W_pi_h, W_oh
            let recurrent = name.starts_with("W_")
                && name != "W_zh"
                && (name.ends_with('h') || name.contains("h_"));
            if recurrent {
                for v in t.data_mut() {
                    *v = 0.0;
                }
            }
        }
        let fwd = model.forward_sequence(&pair).unwrap();
        let full = backward_full(&model, &pair, &fwd).unwrap();
        let trunc = backward_truncated(&model, &pair, &fwd).unwrap();
        assert_eq!(max_abs_diff(&full, &trunc), 0.0);
    }

    #[test]
    fn truncated_differs_but_head_gradients_agree() {
        let mut prng = Prng::new(5);
        let pair = random_pair(2, 4, 2, &mut prng);
        let model = Model::new(ModelFamily::CoLstsm, 2, 3, 2, &mut prng);
        let fwd = model.forward_sequence(&pair).unwrap();
        let full = backward_full(&model, &pair, &fwd).unwrap();
        let trunc = backward_truncated(&model, &pair, &fwd).unwrap();

        let head = |g: &Gradients, name: &str| -> Vec<f64> {
            g.named_tensors()
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, t)| t.data().to_vec())
                .unwrap()
        };
        assert_eq!(head(&full, "W_zh"), head(&trunc, "W_zh"));
        assert_eq!(head(&full, "b_z"), head(&trunc, "b_z"));

        let mut recurrent_diff = 0.0f64;
        for ((name, a), (_, b)) in full
            .named_tensors()
            .iter()
            .zip(trunc.named_tensors().iter())
        {
            if name.contains("h") && name != "W_zh" {
                for (u, v) in a.data().iter().zip(b.data()) {
                    recurrent_diff = recurrent_diff.max((u - v).abs());
                }
            }
        }
        assert!(recurrent_diff > 1e-12, "modes should differ at T=4");
    }

    #[test]
    fn central_diff_exact_on_quadratics() {
        let d = central_diff(|x| Ok(x * x), 1.0, 1e-5).unwrap();
        assert!((d - 2.0).abs() < 1e-9);
    }

    #[test]
    fn finite_difference_error_shrinks_quadratically() {
        let mut prng = Prng::new(6);
        let pair = random_pair(2, 3, 2, &mut prng);
        let model = Model::new(ModelFamily::CoLstsm, 2, 3, 2, &mut prng);
        let fwd = model.forward_sequence(&pair).unwrap();
        let exact = backward_full(&model, &pair, &fwd).unwrap();

        let err_at = |eps: f64| {
            let fd = finite_diff_grad(&model, &pair, eps).unwrap();
            max_abs_diff(&fd, &exact)
        };
        let e1 = err_at(1e-3);
        let e2 = err_at(5e-4);
        let ratio = e1 / e2;
        assert!(
            (2.5..6.0).contains(&ratio),
            "expected ~4x shrink, got {ratio} ({e1} -> {e2})"
        );
    }

    #[test]
    fn grad_check_passes_and_detects_injected_faults() {
        let mut prng = Prng::new(7);
        let pair = random_pair(2, 4, 2, &mut prng);
        let model = Model::new(ModelFamily::CoLstsm, 2, 3, 2, &mut prng);
        let report = grad_check(&model, &pair, 1e-5, 1e-5).unwrap();
        assert!(report.passed());
        assert_eq!(report.entries.len(), model.named_tensors().len());

        // every tensor listed exactly once
        let mut names: Vec<_> = report.entries.iter().map(|e| e.tensor.clone()).collect();
        let total = names.len();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), total);

        // perturb one analytic entry and the comparison must name the tensor
        let fwd = model.forward_sequence(&pair).unwrap();
        let mut analytic = backward_full(&model, &pair, &fwd).unwrap();
        {
            let mut tensors = analytic.named_tensors_mut();
            let (_, view) = tensors
                .iter_mut()
                .find(|(n, _)| n == "W_pi_h")
                .expect("tensor present");
            view.data_mut()[0] += 0.1;
        }
        let numeric = finite_diff_grad(&model, &pair, 1e-5).unwrap();
        let bad = compare_gradients(&analytic, &numeric, 1e-5).unwrap();
        assert!(!bad.passed());
        assert!(bad.failing().iter().any(|e| e.tensor == "W_pi_h"));
    }

    #[test]
    fn gradients_are_deterministic() {
        let mut prng = Prng::new(8);
        let pair = random_pair(2, 4, 2, &mut prng);
        let model = Model::new(ModelFamily::CoLstsm, 2, 3, 2, &mut prng);
        let fwd = model.forward_sequence(&pair).unwrap();
        let g1 = backward_full(&model, &pair, &fwd).unwrap();
        let g2 = backward_full(&model, &pair, &fwd).unwrap();
        for ((_, a), (_, b)) in g1.named_tensors().iter().zip(g2.named_tensors().iter()) {
            for (u, v) in a.data().iter().zip(b.data()) {
                assert_eq!(u.to_bits(), v.to_bits());
            }
        }
    }

    #[test]
    fn cache_mismatch_is_rejected() {
        let mut prng = Prng::new(9);
        let pair = random_pair(2, 4, 2, &mut prng);
        let short = SequencePair::new(pair.a[..2].to_vec(), pair.b[..2].to_vec(), pair.label)
            .unwrap();
        let model = Model::new(ModelFamily::CoLstsm, 2, 3, 2, &mut prng);
        let other = Model::new(ModelFamily::OneLstm, 2, 3, 2, &mut prng);

        let fwd = model.forward_sequence(&short).unwrap();
        assert!(backward_full(&model, &pair, &fwd).is_err());
        let fwd_other = other.forward_sequence(&pair).unwrap();
        assert!(backward_full(&model, &pair, &fwd_other).is_err());
    }
}
